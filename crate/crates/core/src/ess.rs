//! Battery (ESS) state dynamics and the depth-of-discharge wear cost model.
//!
//! Wear is charged as a trapezoid over the SoE excursion of each slot, using
//! the average wear cost density
//!
//! ```text
//! W(soe) = u_ess / (2 Q eta) * b (1 - soe)^(b - 1) / a
//! ```
//!
//! where `a`, `b` fit the achievable cycle count curve `ACC(dod) = a / dod^b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on SoE bounds before an update is treated as a bug.
pub const SOE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoeUpdateMode {
    /// Efficiency applied to the energy increment only.
    #[default]
    DeltaEfficiency,
    /// Efficiency multiplies (charge) or divides (discharge) the whole
    /// updated SoE. Decays SoE even at zero flow.
    PaperLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssParams {
    /// Usable capacity `Q`, kWh.
    pub capacity_kwh: f64,
    /// Efficiency `eta` in `(0, 1]`.
    pub efficiency: f64,
    /// Symmetric charge/discharge power limit, kW.
    pub max_power_kw: f64,
    pub soe_min: f64,
    pub soe_max: f64,
    /// Cycle-count curve scale `a`.
    pub acc_scale: f64,
    /// Cycle-count curve exponent `b`.
    pub acc_exponent: f64,
    /// Installation price `u_ess`, EUR.
    pub install_price: f64,
    #[serde(default)]
    pub soe_update_mode: SoeUpdateMode,
}

impl Default for EssParams {
    /// 5 kWh / 7 kW residential lithium-ion unit at 5000 EUR.
    fn default() -> Self {
        Self {
            capacity_kwh: 5.0,
            efficiency: 0.98,
            max_power_kw: 7.0,
            soe_min: 0.15,
            soe_max: 0.95,
            acc_scale: 694.0,
            acc_exponent: 0.795,
            install_price: 5000.0,
            soe_update_mode: SoeUpdateMode::DeltaEfficiency,
        }
    }
}

impl EssParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.capacity_kwh,
            self.efficiency,
            self.max_power_kw,
            self.soe_min,
            self.soe_max,
            self.acc_scale,
            self.acc_exponent,
            self.install_price,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("ess", "all parameters must be finite"));
        }
        if !(self.capacity_kwh > 0.0) {
            return Err(Error::config("ess.capacity_kwh", "must be > 0"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config("ess.efficiency", "must lie in (0, 1]"));
        }
        if !(self.max_power_kw > 0.0) {
            return Err(Error::config("ess.max_power_kw", "must be > 0"));
        }
        if !(0.0 <= self.soe_min && self.soe_min < self.soe_max && self.soe_max <= 1.0) {
            return Err(Error::config(
                "ess.soe_min/soe_max",
                "need 0 <= soe_min < soe_max <= 1",
            ));
        }
        if self.soe_max >= 1.0 && self.acc_exponent < 1.0 {
            return Err(Error::config(
                "ess.soe_max",
                "must be < 1 when acc_exponent < 1 (wear density diverges at full charge)",
            ));
        }
        if !(self.acc_scale > 0.0) {
            return Err(Error::config("ess.acc_scale", "must be > 0"));
        }
        if !(self.acc_exponent > 0.0) {
            return Err(Error::config("ess.acc_exponent", "must be > 0"));
        }
        if !(self.install_price >= 0.0) {
            return Err(Error::config("ess.install_price", "must be >= 0"));
        }
        Ok(())
    }

    /// Energy the battery can still absorb before `soe_max`, kWh.
    pub fn remaining_capacity(&self, soe: f64) -> f64 {
        (self.capacity_kwh * (self.soe_max - soe)).max(0.0)
    }

    /// Energy the battery can still deliver before `soe_min`, kWh.
    pub fn remaining_energy(&self, soe: f64) -> f64 {
        (self.capacity_kwh * (soe - self.soe_min)).max(0.0)
    }

    /// Highest charging power that keeps the next SoE at or below `soe_max`.
    pub fn charge_headroom_kw(&self, soe: f64, dt: f64) -> f64 {
        self.remaining_capacity(soe) / (self.efficiency * dt)
    }

    /// Highest discharging power that keeps the next SoE at or above `soe_min`.
    pub fn discharge_headroom_kw(&self, soe: f64, dt: f64) -> f64 {
        self.remaining_energy(soe) * self.efficiency / dt
    }

    /// Unchecked SoE after exchanging `p_gl_s` kW (positive charges) for `dt` h.
    pub fn soe_after(&self, soe: f64, p_gl_s: f64, dt: f64) -> f64 {
        let q = self.capacity_kwh;
        let eta = self.efficiency;
        match self.soe_update_mode {
            SoeUpdateMode::DeltaEfficiency => {
                if p_gl_s > 0.0 {
                    soe + eta * p_gl_s * dt / q
                } else if p_gl_s < 0.0 {
                    soe - p_gl_s.abs() * dt / (q * eta)
                } else {
                    soe
                }
            }
            SoeUpdateMode::PaperLiteral => {
                if p_gl_s > 0.0 {
                    (soe + p_gl_s * dt / q) * eta
                } else {
                    (soe - (p_gl_s * dt / q).abs()) / eta
                }
            }
        }
    }

    /// SoE after one slot. Results within [`SOE_TOLERANCE`] of a bound are
    /// snapped onto it; anything further out is an error.
    pub fn soe_update(&self, soe: f64, p_gl_s: f64, dt: f64) -> Result<f64> {
        let next = self.soe_after(soe, p_gl_s, dt);
        self.check_bounds(next)
    }

    pub(crate) fn check_bounds(&self, soe: f64) -> Result<f64> {
        if !soe.is_finite()
            || soe < self.soe_min - SOE_TOLERANCE
            || soe > self.soe_max + SOE_TOLERANCE
        {
            return Err(Error::SoeOutOfBounds {
                soe,
                min: self.soe_min,
                max: self.soe_max,
            });
        }
        Ok(soe.clamp(self.soe_min, self.soe_max))
    }

    /// Average wear cost density at `soe`, EUR/kWh.
    pub fn wear_cost_density(&self, soe: f64) -> Result<f64> {
        if !(soe < self.soe_max + SOE_TOLERANCE) || soe >= 1.0 {
            return Err(Error::DensitySingularity {
                soe,
                max: self.soe_max,
            });
        }
        let b = self.acc_exponent;
        let scale = self.install_price / (2.0 * self.capacity_kwh * self.efficiency);
        Ok(scale * b * (1.0 - soe).powf(b - 1.0) / self.acc_scale)
    }

    /// Wear cost of moving from `soe_k` to `soe_k1` while exchanging
    /// `p_gl_s` kW for `dt` hours (trapezoid on the density), EUR.
    pub fn wear_cost(&self, soe_k: f64, soe_k1: f64, p_gl_s: f64, dt: f64) -> Result<f64> {
        if p_gl_s == 0.0 {
            return Ok(0.0);
        }
        let w0 = self.wear_cost_density(soe_k)?;
        let w1 = self.wear_cost_density(soe_k1)?;
        Ok(dt / 2.0 * (w0 + w1) * p_gl_s.abs())
    }

    /// Achievable cycle count at depth of discharge `dod`.
    pub fn acc_cycles(&self, dod: f64) -> Result<f64> {
        if !(dod > 0.0 && dod <= 1.0) {
            return Err(Error::invalid(format!("depth of discharge {dod} outside (0, 1]")));
        }
        Ok(self.acc_scale / dod.powf(self.acc_exponent))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn p() -> EssParams {
        EssParams::default()
    }

    #[test]
    fn capacity_and_energy() {
        let e = p();
        assert_relative_eq!(e.remaining_capacity(0.95), 0.0);
        assert_relative_eq!(e.remaining_capacity(0.5), 2.25, epsilon = 1e-12);
        assert_relative_eq!(e.remaining_capacity(0.15), 4.0, epsilon = 1e-12);
        assert_relative_eq!(e.remaining_energy(0.15), 0.0);
        assert_relative_eq!(e.remaining_energy(0.5), 1.75, epsilon = 1e-12);
        assert_relative_eq!(e.remaining_energy(0.95), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn soe_update_examples() {
        let e = p();
        assert_eq!(e.soe_update(0.5, 0.0, 0.25).unwrap(), 0.5);
        assert_relative_eq!(e.soe_update(0.5, 3.0, 0.25).unwrap(), 0.647, epsilon = 1e-12);
        assert_relative_eq!(
            e.soe_update(0.5, -2.0, 0.25).unwrap(),
            0.5 - 0.5 / (5.0 * 0.98),
            epsilon = 1e-12
        );
        assert_relative_eq!(e.soe_update(0.5, -2.0, 0.25).unwrap(), 0.3980, epsilon = 1e-4);
    }

    #[test]
    fn soe_update_rejects_overshoot() {
        let e = p();
        assert!(matches!(
            e.soe_update(0.94, 7.0, 0.25),
            Err(Error::SoeOutOfBounds { .. })
        ));
        assert!(e.soe_update(0.16, -7.0, 0.25).is_err());
    }

    #[test]
    fn paper_literal_mode_decays_at_zero_flow() {
        let e = EssParams {
            soe_update_mode: SoeUpdateMode::PaperLiteral,
            ..p()
        };
        assert_relative_eq!(e.soe_after(0.5, 0.0, 0.25), 0.5 / 0.98, epsilon = 1e-12);
        assert_relative_eq!(e.soe_after(0.5, 3.0, 0.25), (0.5 + 0.15) * 0.98, epsilon = 1e-12);
    }

    #[test]
    fn density_examples() {
        let e = p();
        // 5000 / (2 * 5 * 0.98) * 0.795 / 694 = 0.584455...
        assert_relative_eq!(e.wear_cost_density(0.0).unwrap(), 0.58446, epsilon = 1e-4);
        assert_relative_eq!(e.wear_cost_density(0.5).unwrap(), 0.6737, epsilon = 1e-4);
        let d = |s| e.wear_cost_density(s).unwrap();
        assert!(d(0.9) > d(0.5) && d(0.5) > d(0.1));
    }

    #[test]
    fn density_guard() {
        let e = p();
        assert!(e.wear_cost_density(0.95).is_ok());
        assert!(matches!(
            e.wear_cost_density(0.951),
            Err(Error::DensitySingularity { .. })
        ));
        assert!(e.wear_cost_density(1.0).is_err());
    }

    #[test]
    fn wear_cost_examples() {
        let e = p();
        assert_eq!(e.wear_cost(0.5, 0.5, 0.0, 0.25).unwrap(), 0.0);
        let c = e.wear_cost(0.5, 0.598, 2.0, 0.25).unwrap();
        assert_relative_eq!(c, 0.3446, epsilon = 1e-4);

        // midpoint rule on the density over the same excursion
        let mid = e.wear_cost_density(0.549).unwrap() * 2.0 * 0.25;
        assert!((c - mid).abs() / mid < 0.02);

        let charge = e.wear_cost(0.4, 0.5, 2.0, 0.25).unwrap();
        let discharge = e.wear_cost(0.5, 0.4, -2.0, 0.25).unwrap();
        assert_eq!(charge, discharge);
    }

    #[test]
    fn acc_curve() {
        let e = p();
        assert_relative_eq!(e.acc_cycles(1.0).unwrap(), 694.0);
        assert_relative_eq!(e.acc_cycles(0.5).unwrap(), 694.0 * 2f64.powf(0.795), epsilon = 1e-9);
        assert!((e.acc_cycles(0.5).unwrap() - 1204.5).abs() < 0.5);
        assert!(e.acc_cycles(0.25).unwrap() > e.acc_cycles(0.5).unwrap());
        assert!(e.acc_cycles(0.0).is_err());
        assert!(e.acc_cycles(-0.1).is_err());
        assert!(e.acc_cycles(1.1).is_err());
    }

    #[test]
    fn default_params_validate() {
        p().validate().unwrap();
        let bad = EssParams {
            soe_max: 1.0,
            ..p()
        };
        assert!(bad.validate().is_err());
        let bad = EssParams {
            efficiency: 0.0,
            ..p()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn charge_then_discharge_restores_soe_at_unit_efficiency(
            soe in 0.15f64..0.95, frac in 0.0f64..1.0
        ) {
            let e = EssParams { efficiency: 1.0, ..p() };
            let p_in = frac * e.charge_headroom_kw(soe, 0.25).min(e.max_power_kw);
            let up = e.soe_update(soe, p_in, 0.25).unwrap();
            let back = e.soe_update(up, -p_in, 0.25).unwrap();
            prop_assert!((back - soe).abs() < 1e-12);
        }

        #[test]
        fn wear_cost_scales_with_install_price(
            s0 in 0.15f64..0.95, s1 in 0.15f64..0.95, pw in -7.0f64..7.0
        ) {
            let e = p();
            let e2 = EssParams { install_price: 2.0 * e.install_price, ..e.clone() };
            let c = e.wear_cost(s0, s1, pw, 0.25).unwrap();
            prop_assert_eq!(e2.wear_cost(s0, s1, pw, 0.25).unwrap(), 2.0 * c);
        }

        #[test]
        fn density_increasing_inside_bounds(a in 0.15f64..0.95, b in 0.15f64..0.95) {
            prop_assume!(a < b);
            let e = p();
            prop_assert!(e.wear_cost_density(a).unwrap() < e.wear_cost_density(b).unwrap());
        }
    }
}
