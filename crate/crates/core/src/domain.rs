//! Shared vocabulary: timeslots, power profiles, node and community
//! configuration, and per-slot simulation results.
//!
//! Sign convention: power injected into a node bus is positive. Generation
//! is stored as `>= 0` kW, load as `<= 0` kW, so a node's net power is the
//! plain sum of the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ess::EssParams;
use crate::tariff::{CashFlow, TariffConfig};

/// Length of one timeslot in hours (15 minutes).
pub const SLOT_HOURS: f64 = 0.25;

/// Timeslots per simulated day.
pub const SLOTS_PER_DAY: usize = 96;

/// Tolerance for power-balance and bound checks.
pub const POWER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timeslot {
    pub index: usize,
}

impl Timeslot {
    pub fn new(index: usize) -> Self {
        Self { index }
    }

    pub fn duration_hours(&self) -> f64 {
        SLOT_HOURS
    }

    /// Slot position within its day, `0..96`.
    pub fn slot_of_day(&self) -> usize {
        self.index % SLOTS_PER_DAY
    }

    pub fn day(&self) -> usize {
        self.index / SLOTS_PER_DAY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Generation,
    Load,
}

/// A gap-free 15-minute power series for one PV plant or one load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub node_id: String,
    pub kind: ProfileKind,
    first_slot: usize,
    values: Vec<f64>,
}

impl PowerProfile {
    /// Builds a profile from contiguous samples starting at `first_slot`.
    ///
    /// Values must already follow the internal sign convention.
    pub fn new(
        node_id: impl Into<String>,
        kind: ProfileKind,
        first_slot: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let node_id = node_id.into();
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{node_id}: non-finite power at sample {i}"
                )));
            }
            let ok = match kind {
                ProfileKind::Generation => v >= 0.0,
                ProfileKind::Load => v <= 0.0,
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "{node_id}: {kind:?} sample {i} has wrong sign ({v} kW)"
                )));
            }
        }
        Ok(Self {
            node_id,
            kind,
            first_slot,
            values,
        })
    }

    pub fn first_slot(&self) -> usize {
        self.first_slot
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Power at absolute slot `slot`, if covered.
    pub fn at(&self, slot: usize) -> Option<f64> {
        slot.checked_sub(self.first_slot)
            .and_then(|i| self.values.get(i).copied())
    }

    /// Iterator of `(slot index, kW)` pairs.
    pub fn samples(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.first_slot + i, v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: String,
    pub ess: EssParams,
    pub pv_peak_kw: f64,
    pub pv_install_cost: f64,
    /// PV installation amortization coefficient in EUR/kWh.
    pub u_pv: f64,
    pub initial_soe: f64,
}

impl NodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.ess.validate()?;
        let field = |name: &str| format!("nodes.{}.{name}", self.id);
        if !(self.pv_install_cost > 0.0) {
            return Err(Error::config(field("pv_install_cost"), "must be > 0"));
        }
        if !(self.pv_peak_kw >= 0.0) {
            return Err(Error::config(field("pv_peak_kw"), "must be >= 0"));
        }
        if !(self.u_pv >= 0.0) || !self.u_pv.is_finite() {
            return Err(Error::config(field("u_pv"), "must be finite and >= 0"));
        }
        if !(self.initial_soe >= self.ess.soe_min && self.initial_soe <= self.ess.soe_max) {
            return Err(Error::config(
                field("initial_soe"),
                format!(
                    "{} outside [{}, {}]",
                    self.initial_soe, self.ess.soe_min, self.ess.soe_max
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecConfig {
    pub nodes: Vec<NodeConfig>,
    pub tariff: TariffConfig,
}

impl RecConfig {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::config("nodes", "at least one node is required"));
        }
        for node in &self.nodes {
            node.validate()?;
        }
        self.tariff.validate()
    }

    pub fn initial_soe(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.initial_soe).collect()
    }
}

/// Flows and battery state of one node in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSlot {
    pub p_gen: f64,
    pub p_load: f64,
    pub p_gl_star: f64,
    pub p_gl_s: f64,
    pub p_gl_n: f64,
    pub soe_before: f64,
    pub soe_after: f64,
    pub alpha: f64,
    pub wear_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeslotResult {
    pub slot: usize,
    pub nodes: Vec<NodeSlot>,
    pub cash: CashFlow,
    /// Costs minus revenues for the slot, EUR.
    pub objective: f64,
}

/// Energy exchanged at constant `power_kw` over `dt_hours`.
pub fn energy_of(power_kw: f64, dt_hours: f64) -> f64 {
    debug_assert!(dt_hours > 0.0);
    power_kw * dt_hours
}

/// Net node power: positive is surplus, negative is deficit.
pub fn net_power(p_gen: f64, p_load: f64) -> f64 {
    p_gen + p_load
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_is_power_times_duration() {
        assert_eq!(energy_of(4.0, 0.25), 1.0);
        assert_eq!(energy_of(0.0, 0.25), 0.0);
        assert_eq!(energy_of(-2.0, 0.25), -0.5);
    }

    #[test]
    fn net_power_sums() {
        assert_eq!(net_power(3.0, -1.0), 2.0);
        assert_eq!(net_power(0.0, -0.5), -0.5);
        assert_eq!(net_power(0.6, -0.6), 0.0);
    }

    #[test]
    fn timeslot_geometry() {
        let t = Timeslot::new(100);
        assert_eq!(t.duration_hours(), 0.25);
        assert_eq!(t.day(), 1);
        assert_eq!(t.slot_of_day(), 4);
    }

    #[test]
    fn profile_rejects_wrong_sign() {
        assert!(PowerProfile::new("a", ProfileKind::Generation, 0, vec![1.0, -0.1]).is_err());
        assert!(PowerProfile::new("a", ProfileKind::Load, 0, vec![-1.0, 0.2]).is_err());
        let p = PowerProfile::new("a", ProfileKind::Load, 10, vec![-1.0, -0.5]).unwrap();
        assert_eq!(p.at(11), Some(-0.5));
        assert_eq!(p.at(9), None);
        assert_eq!(p.at(12), None);
    }
}
