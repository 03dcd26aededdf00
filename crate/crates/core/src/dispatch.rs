//! Per-node self-consumption dispatcher.
//!
//! A node with surplus may only charge its own battery or sell; a node in
//! deficit may only discharge its own battery or buy. There is no
//! grid-to-battery or battery-to-grid channel. The decision variable `alpha`
//! sets the fraction of the imbalance routed through the battery, subject
//! to the energy headroom and the power limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ess::EssParams;
use crate::forecast::ForecastPair;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dispatch {
    /// Battery flow, positive when charging.
    pub p_gl_s: f64,
    /// Grid flow, positive when selling.
    pub p_gl_n: f64,
}

pub fn dispatch(p_gl_star: f64, soe: f64, alpha: f64, dt: f64, ess: &EssParams) -> Result<Dispatch> {
    if !(p_gl_star.is_finite() && soe.is_finite() && alpha.is_finite() && dt.is_finite()) {
        return Err(Error::invalid("dispatch inputs must be finite"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("slot duration must be > 0"));
    }

    let p_gl_s = if p_gl_star > 0.0 {
        (alpha * p_gl_star)
            .min(ess.charge_headroom_kw(soe, dt))
            .min(ess.max_power_kw)
    } else if p_gl_star < 0.0 {
        -(alpha * -p_gl_star)
            .min(ess.discharge_headroom_kw(soe, dt))
            .min(ess.max_power_kw)
    } else {
        0.0
    };
    Ok(Dispatch {
        p_gl_s,
        p_gl_n: p_gl_star - p_gl_s,
    })
}

/// Outcome of the self-consumption pass for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDecision {
    pub dispatch: Dispatch,
    pub projected_soe: f64,
}

/// Runs every node as if isolated (`alpha = 1`) on its forecast and
/// projects the resulting SoE.
pub fn local_pass(
    soe: &[f64],
    forecasts: &[ForecastPair],
    ess: &[&EssParams],
    dt: f64,
) -> Result<Vec<LocalDecision>> {
    if soe.len() != forecasts.len() || soe.len() != ess.len() {
        return Err(Error::invalid(format!(
            "local pass needs one forecast per node: {} states, {} forecasts, {} batteries",
            soe.len(),
            forecasts.len(),
            ess.len()
        )));
    }
    soe.iter()
        .zip(forecasts)
        .zip(ess)
        .map(|((&s, f), e)| {
            let d = dispatch(f.net(), s, 1.0, dt, e)?;
            let projected_soe = project_soe(e, s, d.p_gl_s, dt)?;
            Ok(LocalDecision {
                dispatch: d,
                projected_soe,
            })
        })
        .collect()
}

/// Next SoE for a dispatched flow. In paper-literal mode the update can
/// leave the bounds without any dispatch error, so it is clamped there.
pub(crate) fn project_soe(ess: &EssParams, soe: f64, p_gl_s: f64, dt: f64) -> Result<f64> {
    match ess.soe_update_mode {
        crate::ess::SoeUpdateMode::DeltaEfficiency => ess.soe_update(soe, p_gl_s, dt),
        crate::ess::SoeUpdateMode::PaperLiteral => Ok(ess
            .soe_after(soe, p_gl_s, dt)
            .clamp(ess.soe_min, ess.soe_max)),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const DT: f64 = 0.25;

    fn ess() -> EssParams {
        EssParams::default()
    }

    #[test]
    fn balanced_node_is_idle() {
        let d = dispatch(0.0, 0.5, 1.0, DT, &ess()).unwrap();
        assert_eq!(d, Dispatch::default());
    }

    #[test]
    fn surplus_within_limits_is_stored() {
        let e = ess();
        // brute-force the three candidate magnitudes
        let candidates = [3.0, e.charge_headroom_kw(0.5, DT), e.max_power_kw];
        let expected = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(expected, 3.0);
        let d = dispatch(3.0, 0.5, 1.0, DT, &e).unwrap();
        assert_eq!(d.p_gl_s, 3.0);
        assert_eq!(d.p_gl_n, 0.0);
    }

    #[test]
    fn alpha_zero_sells_everything() {
        let d = dispatch(3.0, 0.5, 0.0, DT, &ess()).unwrap();
        assert_eq!(d.p_gl_s, 0.0);
        assert_eq!(d.p_gl_n, 3.0);
    }

    #[test]
    fn empty_reserve_buys_everything() {
        let d = dispatch(-2.0, 0.15, 1.0, DT, &ess()).unwrap();
        assert_eq!(d.p_gl_s, 0.0);
        assert_eq!(d.p_gl_n, -2.0);
    }

    #[test]
    fn power_limit_binds() {
        let d = dispatch(10.0, 0.5, 1.0, DT, &ess()).unwrap();
        assert_eq!(d.p_gl_s, 7.0);
        assert_eq!(d.p_gl_n, 3.0);
    }

    #[test]
    fn full_battery_sells_surplus() {
        let d = dispatch(2.0, 0.95, 1.0, DT, &ess()).unwrap();
        assert_eq!(d.p_gl_s, 0.0);
        assert_eq!(d.p_gl_n, 2.0);
    }

    #[test]
    fn rejects_bad_alpha_and_non_finite() {
        assert!(dispatch(1.0, 0.5, 1.5, DT, &ess()).is_err());
        assert!(dispatch(1.0, 0.5, -0.1, DT, &ess()).is_err());
        assert!(dispatch(f64::NAN, 0.5, 0.5, DT, &ess()).is_err());
    }

    #[test]
    fn local_pass_examples() {
        let e = ess();
        let es = vec![&e; 3];
        let f = vec![ForecastPair::new(1.0, -1.0); 3];
        let out = local_pass(&[0.5, 0.3, 0.9], &f, &es, DT).unwrap();
        for (o, s) in out.iter().zip([0.5, 0.3, 0.9]) {
            assert_eq!(o.dispatch, Dispatch::default());
            assert_eq!(o.projected_soe, s);
        }

        let out = local_pass(&[0.5], &[ForecastPair::new(2.0, 0.0)], &[&e], DT).unwrap();
        assert_eq!(out[0].dispatch.p_gl_s, 2.0);
        assert_eq!(out[0].dispatch.p_gl_n, 0.0);
        assert!(out[0].projected_soe > 0.5);

        // deficit of 8 kW at SoE 0.2: reserve allows 5*0.05*0.98/0.25 = 0.98 kW
        let out = local_pass(&[0.2], &[ForecastPair::new(0.0, -8.0)], &[&e], DT).unwrap();
        let reserve = e.discharge_headroom_kw(0.2, DT);
        assert!(reserve < 8.0 && reserve < e.max_power_kw);
        assert_eq!(out[0].dispatch.p_gl_s, -reserve);
        assert!((out[0].dispatch.p_gl_n - (-8.0 + reserve)).abs() < 1e-12);
        assert!((out[0].projected_soe - 0.15).abs() < 1e-12);

        assert!(local_pass(&[0.5, 0.5], &[ForecastPair::new(0.0, 0.0)], &[&e, &e], DT).is_err());
    }

    proptest! {
        #[test]
        fn balance_and_bounds(p in -12.0f64..12.0, soe in 0.15f64..=0.95, alpha in 0.0f64..=1.0) {
            let e = ess();
            let d = dispatch(p, soe, alpha, DT, &e).unwrap();
            prop_assert!((p - d.p_gl_s - d.p_gl_n).abs() <= 1e-9);
            prop_assert!(d.p_gl_s.abs() <= e.max_power_kw);
            if d.p_gl_s > 0.0 { prop_assert!(p > 0.0); }
            let next = e.soe_update(soe, d.p_gl_s, DT).unwrap();
            prop_assert!((0.15..=0.95).contains(&next));
        }

        #[test]
        fn monotone_in_alpha(p in -12.0f64..12.0, soe in 0.15f64..=0.95,
                             a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let e = ess();
            let dl = dispatch(p, soe, lo, DT, &e).unwrap();
            let dh = dispatch(p, soe, hi, DT, &e).unwrap();
            prop_assert!(dl.p_gl_s.abs() <= dh.p_gl_s.abs());
            prop_assert!(dl.p_gl_n.abs() >= dh.p_gl_n.abs() - 1e-12);
        }

        #[test]
        fn self_consumption_exports_only_at_limits(p in 0.0f64..12.0, soe in 0.15f64..=0.95) {
            let e = ess();
            let d = dispatch(p, soe, 1.0, DT, &e).unwrap();
            if d.p_gl_n > 1e-12 {
                let limit = e.charge_headroom_kw(soe, DT).min(e.max_power_kw);
                prop_assert!((d.p_gl_s - limit).abs() < 1e-12);
            }
        }
    }
}
