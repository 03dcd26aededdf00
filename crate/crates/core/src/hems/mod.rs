//! Community simulation: per-slot local pass, hierarchical overwrite by the
//! fuzzy model, SoE advance, and settlement; plus the run modes, FIS
//! training, and the direct benchmark optimizer built on top of it.
//!
//! A slot is decided with the information available before it starts (the
//! forecasts) and then realized with what actually happens (the measured
//! powers). With perfect foresight both are the same.

mod benchmark;
mod train;

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use benchmark::{benchmark_optimize, BenchmarkResult, FIXED_ALPHA_GRID};
pub use train::{
    default_training_window, fitness_window, train_fis, window_covers_extremes, TrainingReport,
};

use crate::dispatch::{dispatch, local_pass};
use crate::domain::{net_power, NodeSlot, RecConfig, TimeslotResult, SLOT_HOURS};
use crate::error::{Error, Result};
use crate::ess::{EssParams, SoeUpdateMode, SOE_TOLERANCE};
use crate::forecast::{ForecastPair, Forecaster, History};
use crate::fuzzy::FisModel;
use crate::tariff::{CashFlow, NodeFlow, Settler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMode {
    /// Every node self-consumes (`alpha = 1`); no fuzzy model.
    AutoConsumption,
    /// The fuzzy model decides with perfect knowledge of the day.
    Offline,
    /// The fuzzy model decides slot by slot on forecasts.
    Online,
}

impl SimulationMode {
    pub fn name(self) -> &'static str {
        match self {
            SimulationMode::AutoConsumption => "auto",
            SimulationMode::Offline => "offline",
            SimulationMode::Online => "online",
        }
    }
}

impl std::str::FromStr for SimulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" | "auto-consumption" => Ok(SimulationMode::AutoConsumption),
            "offline" => Ok(SimulationMode::Offline),
            "online" => Ok(SimulationMode::Online),
            other => Err(Error::invalid(format!(
                "unknown mode {other:?} (expected auto, offline, or online)"
            ))),
        }
    }
}

/// Measured generation (`>= 0`) and load (`<= 0`) of a node in one slot, kW.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurement {
    pub p_gen: f64,
    pub p_load: f64,
}

impl Measurement {
    pub fn as_forecast(&self) -> ForecastPair {
        ForecastPair::new(self.p_gen, self.p_load)
    }
}

/// Measured powers of every node, indexed by absolute slot from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityData {
    pub node_ids: Vec<String>,
    gen: Vec<Vec<f64>>,
    load: Vec<Vec<f64>>,
}

impl CommunityData {
    /// `gen[i]` and `load[i]` are node `i`'s series, all of equal length.
    pub fn new(node_ids: Vec<String>, gen: Vec<Vec<f64>>, load: Vec<Vec<f64>>) -> Result<Self> {
        if node_ids.is_empty() || gen.len() != node_ids.len() || load.len() != node_ids.len() {
            return Err(Error::invalid(format!(
                "community data needs one generation and one load series per node: {} ids, {} generation, {} load",
                node_ids.len(),
                gen.len(),
                load.len()
            )));
        }
        let len = gen[0].len();
        for (i, id) in node_ids.iter().enumerate() {
            if gen[i].len() != len || load[i].len() != len {
                return Err(Error::invalid(format!(
                    "{id}: series length differs from the first node ({len} slots)"
                )));
            }
            if let Some(k) = gen[i].iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::invalid(format!("{id}: bad generation at slot {k}")));
            }
            if let Some(k) = load[i].iter().position(|v| !(*v <= 0.0 && v.is_finite())) {
                return Err(Error::invalid(format!("{id}: bad load at slot {k}")));
            }
        }
        Ok(Self { node_ids, gen, load })
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn slots(&self) -> usize {
        self.gen[0].len()
    }

    pub fn generation(&self, node: usize) -> &[f64] {
        &self.gen[node]
    }

    pub fn load(&self, node: usize) -> &[f64] {
        &self.load[node]
    }

    pub fn measurement(&self, slot: usize) -> Vec<Measurement> {
        (0..self.n())
            .map(|i| Measurement {
                p_gen: self.gen[i][slot],
                p_load: self.load[i][slot],
            })
            .collect()
    }

    /// Community generation in `slot`, kW.
    pub fn total_generation(&self, slot: usize) -> f64 {
        self.gen.iter().map(|g| g[slot]).sum()
    }

    /// Measurements of `node` strictly before `slot`.
    pub fn history(&self, node: usize, slot: usize) -> History<'_> {
        History::new(&self.gen[node][..slot], &self.load[node][..slot])
    }

    fn check_window(&self, window: &Range<usize>) -> Result<()> {
        if window.is_empty() || window.end > self.slots() {
            return Err(Error::invalid(format!(
                "window {}..{} not inside the data (0..{})",
                window.start,
                window.end,
                self.slots()
            )));
        }
        Ok(())
    }

    fn check_nodes(&self, cfg: &RecConfig) -> Result<()> {
        let cfg_ids: Vec<&str> = cfg.nodes.iter().map(|n| n.id.as_str()).collect();
        let ids: Vec<&str> = self.node_ids.iter().map(String::as_str).collect();
        if cfg_ids != ids {
            return Err(Error::invalid(format!(
                "data nodes {ids:?} do not match configured nodes {cfg_ids:?}"
            )));
        }
        Ok(())
    }
}

/// How `alpha` is chosen in one slot.
#[derive(Debug, Clone, Copy)]
pub enum SlotPolicy<'a> {
    SelfConsumption,
    /// The shared model overwrites each node's decision from its projected SoE.
    Fis(&'a FisModel),
    /// Explicit `alpha` per node.
    Alphas(&'a [f64]),
}

/// How `alpha` is chosen over a horizon.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    SelfConsumption,
    Fis(&'a FisModel),
    /// Slot-major schedule: `alphas[t * n + i]` for slot `window.start + t`
    /// and node `i`.
    Schedule(&'a [f64]),
}

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    /// Node-slots whose final `alpha` came from the fuzzy model.
    pub overwrites: usize,
    /// Fuzzy inferences where no rule fired.
    pub fis_fallbacks: usize,
    /// Forecasts with negative generation clamped to zero.
    pub forecast_clamps: usize,
    /// SoE updates clamped back into bounds (paper-literal update only).
    pub soe_clamps: usize,
}

/// Sequential community state: SoE per node and pending settlement.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    cfg: &'a RecConfig,
    soe: Vec<f64>,
    settler: Settler,
    counters: Counters,
    dt: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(cfg: &'a RecConfig) -> Result<Self> {
        Self::with_soe(cfg, cfg.initial_soe())
    }

    pub fn with_soe(cfg: &'a RecConfig, soe: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if soe.len() != cfg.n() {
            return Err(Error::invalid(format!(
                "{} initial SoE values for {} nodes",
                soe.len(),
                cfg.n()
            )));
        }
        for (node, &s) in cfg.nodes.iter().zip(&soe) {
            node.ess.check_bounds(s)?;
        }
        Ok(Self {
            cfg,
            soe,
            settler: Settler::new(),
            counters: Counters::default(),
            dt: SLOT_HOURS,
        })
    }

    pub fn soe(&self) -> &[f64] {
        &self.soe
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// Decides and realizes one slot.
    ///
    /// With [`SlotPolicy::Fis`] the self-consumption pass on `forecast`
    /// projects each node's next SoE, and the model's output for that SoE
    /// replaces the self-consumption decision. Flows are then computed from
    /// the pre-slot SoE on the `actual` powers.
    pub fn step(
        &mut self,
        slot: usize,
        actual: &[Measurement],
        forecast: &[ForecastPair],
        policy: SlotPolicy<'_>,
    ) -> Result<TimeslotResult> {
        let n = self.cfg.n();
        if actual.len() != n || forecast.len() != n {
            return Err(Error::invalid(format!(
                "slot {slot}: {} measurements and {} forecasts for {n} nodes",
                actual.len(),
                forecast.len()
            )));
        }

        let alphas: Vec<f64> = match policy {
            SlotPolicy::SelfConsumption => vec![1.0; n],
            SlotPolicy::Alphas(a) => {
                if a.len() != n {
                    return Err(Error::invalid(format!("slot {slot}: {} alphas for {n} nodes", a.len())));
                }
                a.to_vec()
            }
            SlotPolicy::Fis(model) => {
                let mut clean = Vec::with_capacity(n);
                for f in forecast {
                    let (pair, clamped) = f.sanitized()?;
                    if clamped {
                        self.counters.forecast_clamps += 1;
                    }
                    clean.push(pair);
                }
                let ess: Vec<&EssParams> = self.cfg.nodes.iter().map(|c| &c.ess).collect();
                let local = local_pass(&self.soe, &clean, &ess, self.dt)?;
                let mut out = Vec::with_capacity(n);
                for d in &local {
                    let inf = model.infer_detailed(d.projected_soe)?;
                    self.counters.overwrites += 1;
                    if inf.fallback {
                        self.counters.fis_fallbacks += 1;
                    }
                    out.push(inf.alpha);
                }
                out
            }
        };

        let mut nodes = Vec::with_capacity(n);
        let mut flows = Vec::with_capacity(n);
        for (i, node) in self.cfg.nodes.iter().enumerate() {
            let m = actual[i];
            let soe = self.soe[i];
            let p_star = net_power(m.p_gen, m.p_load);
            let d = dispatch(p_star, soe, alphas[i], self.dt, &node.ess)?;
            let raw = node.ess.soe_after(soe, d.p_gl_s, self.dt);
            let next = match node.ess.soe_update_mode {
                SoeUpdateMode::DeltaEfficiency => node.ess.check_bounds(raw)?,
                SoeUpdateMode::PaperLiteral => {
                    let c = raw.clamp(node.ess.soe_min, node.ess.soe_max);
                    if (c - raw).abs() > SOE_TOLERANCE {
                        self.counters.soe_clamps += 1;
                    }
                    c
                }
            };
            let wear = node.ess.wear_cost(soe, next, d.p_gl_s, self.dt)?;
            self.soe[i] = next;
            nodes.push(NodeSlot {
                p_gen: m.p_gen,
                p_load: m.p_load,
                p_gl_star: p_star,
                p_gl_s: d.p_gl_s,
                p_gl_n: d.p_gl_n,
                soe_before: soe,
                soe_after: next,
                alpha: alphas[i],
                wear_cost: wear,
            });
            flows.push(NodeFlow {
                p_gen: m.p_gen,
                p_load: m.p_load,
                p_gl_s: d.p_gl_s,
                p_gl_n: d.p_gl_n,
                wear_cost: wear,
                u_pv: node.u_pv,
            });
        }
        let cash = self.settler.settle(slot, &flows, &self.cfg.tariff, self.dt);
        Ok(TimeslotResult {
            slot,
            nodes,
            objective: cash.net_cost(),
            cash,
        })
    }

    /// Incentives of a partially accumulated sharing period, if any.
    pub fn flush(&mut self) -> Option<CashFlow> {
        self.settler.flush(&self.cfg.tariff)
    }
}

/// Where the decision-time powers come from.
#[derive(Clone, Copy)]
pub enum ForecastSource<'a> {
    /// The measured powers themselves (perfect foresight).
    Actual,
    Forecaster(&'a dyn Forecaster),
}

impl std::fmt::Debug for ForecastSource<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ForecastSource::Actual => f.write_str("Actual"),
            ForecastSource::Forecaster(fc) => write!(f, "Forecaster({})", fc.name()),
        }
    }
}

/// Wall-clock measurements. Serialized only when non-zero, so that outputs
/// stay reproducible unless timing is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    /// Median wall time of one step (forecast + inference + dispatch +
    /// settlement), microseconds.
    pub median_step_us: f64,
    pub max_step_us: f64,
}

impl Timing {
    pub fn is_zero(&self) -> bool {
        *self == Timing::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub mode: SimulationMode,
    pub start_slot: usize,
    pub results: Vec<TimeslotResult>,
    /// Sum of the slot objectives, EUR (costs minus revenues).
    pub objective: f64,
    pub counters: Counters,
    pub final_soe: Vec<f64>,
    #[serde(default, skip_serializing_if = "Timing::is_zero")]
    pub timing: Timing,
}

impl SimulationRun {
    pub fn slots(&self) -> usize {
        self.results.len()
    }

    /// Cash-flow components summed over the run.
    pub fn cash_total(&self) -> CashFlow {
        self.results.iter().fold(CashFlow::default(), |acc, r| CashFlow {
            i_sha: acc.i_sha + r.cash.i_sha,
            i_ret: acc.i_ret + r.cash.i_ret,
            i_sel: acc.i_sel + r.cash.i_sel,
            h_ess: acc.h_ess + r.cash.h_ess,
            h_pur: acc.h_pur + r.cash.h_pur,
            h_ins: acc.h_ins + r.cash.h_ins,
        })
    }
}

/// Sum of costs minus revenues over a horizon, EUR.
pub fn objective(results: &[TimeslotResult]) -> f64 {
    results.iter().map(|r| r.objective).sum()
}

/// Simulates `window` of `data` under `policy`, carrying SoE from
/// `initial_soe` (or the configured initial values).
pub fn simulate(
    data: &CommunityData,
    cfg: &RecConfig,
    window: Range<usize>,
    policy: Policy<'_>,
    source: ForecastSource<'_>,
    initial_soe: Option<Vec<f64>>,
) -> Result<SimulationRun> {
    let started = Instant::now();
    data.check_window(&window)?;
    data.check_nodes(cfg)?;
    let n = data.n();
    if let Policy::Schedule(a) = policy {
        if a.len() != n * window.len() {
            return Err(Error::invalid(format!(
                "schedule has {} alphas, expected {} nodes x {} slots",
                a.len(),
                n,
                window.len()
            )));
        }
    }
    let mut sim = match initial_soe {
        Some(soe) => Simulator::with_soe(cfg, soe)?,
        None => Simulator::new(cfg)?,
    };

    let mut results = Vec::with_capacity(window.len());
    let mut step_us = Vec::with_capacity(window.len());
    for (t, slot) in window.clone().enumerate() {
        let t0 = Instant::now();
        let actual = data.measurement(slot);
        let forecast: Vec<ForecastPair> = match source {
            ForecastSource::Actual => actual.iter().map(Measurement::as_forecast).collect(),
            ForecastSource::Forecaster(f) => (0..n)
                .map(|i| f.forecast(&data.node_ids[i], &data.history(i, slot)))
                .collect::<Result<_>>()?,
        };
        let slot_policy = match policy {
            Policy::SelfConsumption => SlotPolicy::SelfConsumption,
            Policy::Fis(m) => SlotPolicy::Fis(m),
            Policy::Schedule(a) => SlotPolicy::Alphas(&a[t * n..(t + 1) * n]),
        };
        results.push(sim.step(slot, &actual, &forecast, slot_policy)?);
        step_us.push(t0.elapsed().as_secs_f64() * 1e6);
    }
    if let Some(extra) = sim.flush() {
        let last = results.last_mut().expect("window is non-empty");
        last.cash.i_sha += extra.i_sha;
        last.cash.i_ret += extra.i_ret;
        last.objective = last.cash.net_cost();
    }

    step_us.sort_by(f64::total_cmp);
    let timing = Timing {
        total_ms: started.elapsed().as_secs_f64() * 1e3,
        median_step_us: step_us[step_us.len() / 2],
        max_step_us: *step_us.last().expect("window is non-empty"),
    };
    let mode = match (policy, source) {
        (Policy::SelfConsumption, _) => SimulationMode::AutoConsumption,
        (_, ForecastSource::Actual) => SimulationMode::Offline,
        (_, ForecastSource::Forecaster(_)) => SimulationMode::Online,
    };
    Ok(SimulationRun {
        mode,
        start_slot: window.start,
        objective: objective(&results),
        results,
        counters: sim.counters(),
        final_soe: sim.soe().to_vec(),
        timing,
    })
}

/// Runs one of the three evaluation modes over `window`.
///
/// Auto-consumption takes no model; offline needs a model and uses the
/// measured powers as forecasts; online needs a model and a forecaster.
pub fn run(
    mode: SimulationMode,
    data: &CommunityData,
    cfg: &RecConfig,
    window: Range<usize>,
    fis: Option<&FisModel>,
    forecaster: Option<&dyn Forecaster>,
) -> Result<SimulationRun> {
    let need_model = || {
        fis.ok_or_else(|| Error::invalid(format!("{} mode needs a trained fuzzy model", mode.name())))
    };
    match mode {
        SimulationMode::AutoConsumption => {
            if fis.is_some() {
                return Err(Error::invalid("auto mode does not use a fuzzy model"));
            }
            simulate(data, cfg, window, Policy::SelfConsumption, ForecastSource::Actual, None)
        }
        SimulationMode::Offline => {
            simulate(data, cfg, window, Policy::Fis(need_model()?), ForecastSource::Actual, None)
        }
        SimulationMode::Online => {
            let f = forecaster.ok_or_else(|| {
                Error::invalid("online mode needs a forecaster (persistence, seasonal-naive, or a forecast file)")
            })?;
            let model = need_model()?;
            simulate(data, cfg, window, Policy::Fis(model), ForecastSource::Forecaster(f), None)
        }
    }
}

/// Percentage change of `objective` relative to `baseline`; negative
/// values are savings.
pub fn savings_pct(objective: f64, baseline: f64) -> f64 {
    (objective - baseline) / baseline.abs() * 100.0
}

#[cfg(test)]
mod tests;
