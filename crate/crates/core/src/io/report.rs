//! Run records, the per-run CSV, and the summary JSON.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hems::{savings_pct, Counters, SimulationMode, SimulationRun, Timing};
use crate::tariff::CashFlow;

/// Everything `report` needs to reproduce the outputs of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub mode: SimulationMode,
    /// Timestamp of the first simulated slot.
    pub start_timestamp: String,
    pub node_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecaster: Option<String>,
    /// Auto-consumption objective over the same window, EUR.
    pub auto_objective: f64,
    pub pr3: f64,
    /// True when `pr3` is the placeholder default rather than a scenario value.
    pub pr3_placeholder: bool,
    pub run: SimulationRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pr3Flag {
    pub value: f64,
    pub placeholder: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: SimulationMode,
    pub start_slot: usize,
    pub start_timestamp: String,
    pub slots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecaster: Option<String>,
    /// Costs minus revenues over the run, EUR; negative is net profit.
    pub objective_eur: f64,
    pub auto_objective_eur: f64,
    /// `(objective - auto) / |auto| * 100`; negative values are savings.
    pub savings_vs_auto_pct: f64,
    pub cash: CashFlow,
    pub counters: Counters,
    pub final_soe: Vec<f64>,
    pub pr3: Pr3Flag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunRecord {
    pub fn summary(&self) -> Summary {
        let run = &self.run;
        Summary {
            mode: self.mode,
            start_slot: run.start_slot,
            start_timestamp: self.start_timestamp.clone(),
            slots: run.slots(),
            forecaster: self.forecaster.clone(),
            objective_eur: run.objective,
            auto_objective_eur: self.auto_objective,
            savings_vs_auto_pct: savings_pct(run.objective, self.auto_objective),
            cash: run.cash_total(),
            counters: run.counters,
            final_soe: run.final_soe.clone(),
            pr3: Pr3Flag {
                value: self.pr3,
                placeholder: self.pr3_placeholder,
            },
            timing: (!run.timing.is_zero()).then_some(run.timing),
        }
    }
}

pub const RUN_CSV_HEADER: [&str; 18] = [
    "slot",
    "row",
    "p_gen_kw",
    "p_load_kw",
    "p_gl_star_kw",
    "p_gl_s_kw",
    "p_gl_n_kw",
    "soe_before",
    "soe_after",
    "alpha",
    "wear_cost_eur",
    "i_sha_eur",
    "i_ret_eur",
    "i_sel_eur",
    "h_ess_eur",
    "h_pur_eur",
    "h_ins_eur",
    "objective_eur",
];

/// Label of the per-slot community row in the run CSV.
pub const COMMUNITY_ROW: &str = "community";

/// One row per node per slot (flows, SoE, alpha) followed by one community
/// row per slot (cash-flow components, objective). Numbers use the
/// shortest representation that parses back to the same value.
pub fn write_run_csv<W: Write>(mut w: W, record: &RunRecord) -> std::io::Result<()> {
    writeln!(w, "{}", RUN_CSV_HEADER.join(","))?;
    for r in &record.run.results {
        for (id, n) in record.node_ids.iter().zip(&r.nodes) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},,,,,,,",
                r.slot,
                id,
                n.p_gen,
                n.p_load,
                n.p_gl_star,
                n.p_gl_s,
                n.p_gl_n,
                n.soe_before,
                n.soe_after,
                n.alpha,
                n.wear_cost
            )?;
        }
        let c = &r.cash;
        writeln!(
            w,
            "{},{COMMUNITY_ROW},,,,,,,,,,{},{},{},{},{},{},{}",
            r.slot, c.i_sha, c.i_ret, c.i_sel, c.h_ess, c.h_pur, c.h_ins, r.objective
        )?;
    }
    Ok(())
}

/// Objective column of the community rows of a run CSV, in order.
pub fn community_objectives<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.get(1) == Some(COMMUNITY_ROW) {
            let v = rec.get(17).unwrap_or_default();
            out.push(v.parse().map_err(|_| Error::Csv {
                path: "run csv".into(),
                row: i + 2,
                message: format!("bad objective {v:?}"),
            })?);
        }
    }
    Ok(out)
}

pub fn write_summary_json<W: Write>(mut w: W, summary: &Summary) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w).map_err(|e| Error::io("summary", e))?;
    Ok(())
}
