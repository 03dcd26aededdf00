//! Monetization of one timeslot: shared-energy incentives, returned tariff
//! components, energy sales, purchases, and PV installation amortization.
//!
//! Legislated per-MWh values are stored per kWh: the premium tariff of
//! 110 EUR/MWh becomes `tp_rec = 0.110`, the transmission component
//! 7.61 EUR/MWh becomes `tras_e = 0.00761`, and the distribution component
//! 0.61 EUR/MWh becomes `btau_max = 0.00061`. Override them to model other
//! jurisdictions.

use serde::{Deserialize, Serialize};

use crate::domain::{energy_of, SLOT_HOURS};
use crate::error::{Error, Result};

/// Time base over which community shared energy is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingPeriod {
    /// Each 15-minute slot on its own.
    #[default]
    Slot,
    /// Energy summed over each clock hour (four slots) before the minimum.
    Hourly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffConfig {
    /// Premium tariff on shared energy, EUR/kWh.
    pub tp_rec: f64,
    /// Transmission tariff component, EUR/kWh.
    pub tras_e: f64,
    /// Maximum distribution tariff component, EUR/kWh.
    pub btau_max: f64,
    /// Sale price of energy fed to the grid, EUR/kWh. Not a legislated
    /// value; the default is a placeholder.
    pub pr3: f64,
    /// Purchase unit price, EUR/kWh.
    pub u_pur: f64,
    /// Fixed purchase charge per node per slot, EUR.
    pub u_pur_fixed: f64,
    pub vat: f64,
    #[serde(default)]
    pub sharing_period: SharingPeriod,
}

pub const DEFAULT_PR3: f64 = 0.10;

impl Default for TariffConfig {
    fn default() -> Self {
        Self {
            tp_rec: 0.110,
            tras_e: 0.00761,
            btau_max: 0.00061,
            pr3: DEFAULT_PR3,
            u_pur: 0.212,
            u_pur_fixed: 0.003,
            vat: 0.10,
            sharing_period: SharingPeriod::Slot,
        }
    }
}

impl TariffConfig {
    pub fn validate(&self) -> Result<()> {
        let prices = [
            ("tariff.tp_rec", self.tp_rec),
            ("tariff.tras_e", self.tras_e),
            ("tariff.btau_max", self.btau_max),
            ("tariff.pr3", self.pr3),
            ("tariff.u_pur", self.u_pur),
            ("tariff.u_pur_fixed", self.u_pur_fixed),
        ];
        for (field, v) in prices {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("{v} must be a finite price >= 0")));
            }
        }
        if !(0.0..1.0).contains(&self.vat) {
            return Err(Error::config("tariff.vat", format!("{} outside [0, 1)", self.vat)));
        }
        Ok(())
    }

    /// Unit return of tariff components, `tras_e + btau_max`.
    pub fn cu_af_m(&self) -> f64 {
        self.tras_e + self.btau_max
    }
}

/// Revenue and cost components of one slot, all `>= 0` EUR.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CashFlow {
    pub i_sha: f64,
    pub i_ret: f64,
    pub i_sel: f64,
    pub h_ess: f64,
    pub h_pur: f64,
    pub h_ins: f64,
}

impl CashFlow {
    pub fn revenue(&self) -> f64 {
        self.i_sha + self.i_ret + self.i_sel
    }

    pub fn cost(&self) -> f64 {
        self.h_ess + self.h_pur + self.h_ins
    }

    /// Costs minus revenues; negative means net profit.
    pub fn net_cost(&self) -> f64 {
        self.cost() - self.revenue()
    }
}

pub fn shared_energy(e_gen: f64, e_dra: f64) -> f64 {
    e_gen.min(e_dra)
}

/// Energy drawn by a node: consumption plus whatever is being stored.
pub fn drawn_energy(p_load: f64, p_gl_s: f64, dt: f64) -> f64 {
    energy_of(p_load.abs() + p_gl_s.max(0.0), dt)
}

pub fn incentive_shared(e_sha: f64, cfg: &TariffConfig) -> f64 {
    cfg.tp_rec * e_sha
}

pub fn incentive_return(e_sha: f64, cfg: &TariffConfig) -> f64 {
    cfg.cu_af_m() * e_sha
}

pub fn revenue_sale(p_gl_n: f64, dt: f64, cfg: &TariffConfig) -> f64 {
    if p_gl_n > 0.0 {
        cfg.pr3 * dt * p_gl_n
    } else {
        0.0
    }
}

pub fn cost_purchase(p_gl_n: f64, dt: f64, cfg: &TariffConfig) -> f64 {
    let variable = if p_gl_n < 0.0 {
        cfg.u_pur * p_gl_n.abs() * dt
    } else {
        0.0
    };
    (variable + cfg.u_pur_fixed) * (1.0 + cfg.vat)
}

pub fn cost_installation(p_gen: f64, dt: f64, u_pv: f64) -> f64 {
    u_pv * p_gen.abs() * dt
}

/// Mean over nodes of installation cost per kWh generated in a year.
pub fn compute_u_pv(install_costs: &[f64], annual_generation_kwh: &[f64]) -> Result<f64> {
    if install_costs.is_empty() || install_costs.len() != annual_generation_kwh.len() {
        return Err(Error::invalid(format!(
            "need one annual generation per node: {} costs, {} generations",
            install_costs.len(),
            annual_generation_kwh.len()
        )));
    }
    let mut sum = 0.0;
    for (i, (&cost, &gen)) in install_costs.iter().zip(annual_generation_kwh).enumerate() {
        if !(gen > 0.0) {
            return Err(Error::invalid(format!(
                "node {i} has no annual generation ({gen} kWh)"
            )));
        }
        sum += cost / gen;
    }
    Ok(sum / install_costs.len() as f64)
}

/// What settlement needs to know about one node in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeFlow {
    pub p_gen: f64,
    pub p_load: f64,
    pub p_gl_s: f64,
    pub p_gl_n: f64,
    pub wear_cost: f64,
    pub u_pv: f64,
}

/// Community energy totals that enter the shared-energy minimum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SharingTotals {
    pub e_gen: f64,
    pub e_dra: f64,
}

impl SharingTotals {
    pub fn of(flows: &[NodeFlow], dt: f64) -> Self {
        flows.iter().fold(Self::default(), |acc, f| Self {
            e_gen: acc.e_gen + energy_of(f.p_gen, dt),
            e_dra: acc.e_dra + drawn_energy(f.p_load, f.p_gl_s, dt),
        })
    }

    pub fn shared(&self) -> f64 {
        shared_energy(self.e_gen, self.e_dra)
    }
}

/// Per-node terms of a slot, without the shared-energy incentives.
fn settle_node_terms(flows: &[NodeFlow], cfg: &TariffConfig, dt: f64) -> CashFlow {
    let mut cash = CashFlow::default();
    for f in flows {
        cash.i_sel += revenue_sale(f.p_gl_n, dt, cfg);
        cash.h_ess += f.wear_cost;
        cash.h_pur += cost_purchase(f.p_gl_n, dt, cfg);
        cash.h_ins += cost_installation(f.p_gen, dt, f.u_pv);
    }
    cash
}

fn book_sharing(cash: &mut CashFlow, e_sha: f64, cfg: &TariffConfig) {
    cash.i_sha += incentive_shared(e_sha, cfg);
    cash.i_ret += incentive_return(e_sha, cfg);
}

/// Community settlement of one slot with shared energy taken per slot.
pub fn settle_slot(flows: &[NodeFlow], cfg: &TariffConfig, dt: f64) -> CashFlow {
    let mut cash = settle_node_terms(flows, cfg, dt);
    book_sharing(&mut cash, SharingTotals::of(flows, dt).shared(), cfg);
    cash
}

/// Stateful settlement over a horizon, honoring [`SharingPeriod`].
///
/// In hourly mode the shared-energy incentives of an hour are booked on the
/// slot closing that hour; a horizon ending mid-hour books the partial hour
/// through [`Settler::flush`].
#[derive(Debug, Clone, Default)]
pub struct Settler {
    pending: SharingTotals,
    pending_slots: usize,
}

pub const SLOTS_PER_HOUR: usize = (1.0 / SLOT_HOURS) as usize;

impl Settler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn settle(&mut self, slot: usize, flows: &[NodeFlow], cfg: &TariffConfig, dt: f64) -> CashFlow {
        match cfg.sharing_period {
            SharingPeriod::Slot => settle_slot(flows, cfg, dt),
            SharingPeriod::Hourly => {
                let mut cash = settle_node_terms(flows, cfg, dt);
                let totals = SharingTotals::of(flows, dt);
                self.pending.e_gen += totals.e_gen;
                self.pending.e_dra += totals.e_dra;
                self.pending_slots += 1;
                if (slot + 1) % SLOTS_PER_HOUR == 0 {
                    book_sharing(&mut cash, self.pending.shared(), cfg);
                    self.pending = SharingTotals::default();
                    self.pending_slots = 0;
                }
                cash
            }
        }
    }

    /// Incentives for a partially accumulated hour, if any.
    pub fn flush(&mut self, cfg: &TariffConfig) -> Option<CashFlow> {
        if self.pending_slots == 0 {
            return None;
        }
        let mut cash = CashFlow::default();
        book_sharing(&mut cash, self.pending.shared(), cfg);
        self.pending = SharingTotals::default();
        self.pending_slots = 0;
        Some(cash)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    const DT: f64 = 0.25;

    fn cfg() -> TariffConfig {
        TariffConfig::default()
    }

    #[test]
    fn shared_energy_is_min() {
        assert_eq!(shared_energy(1.0, 0.7), 0.7);
        assert_eq!(shared_energy(0.0, 5.0), 0.0);
        assert_eq!(shared_energy(0.4, 0.4), 0.4);
    }

    #[test]
    fn drawn_energy_counts_charging() {
        assert_eq!(drawn_energy(-2.0, 0.0, DT), 0.5);
        assert_eq!(drawn_energy(-2.0, 1.0, DT), 0.75);
        assert_eq!(drawn_energy(-2.0, -1.0, DT), 0.5);
    }

    #[test]
    fn incentives() {
        let c = cfg();
        assert_relative_eq!(incentive_shared(0.7, &c), 0.077, epsilon = 1e-12);
        assert_eq!(incentive_shared(0.0, &c), 0.0);
        assert_eq!(incentive_shared(1.4, &c), 2.0 * incentive_shared(0.7, &c));
        assert_relative_eq!(incentive_return(1.0, &c), 0.00822, epsilon = 1e-12);
        assert_eq!(incentive_return(0.0, &c), 0.0);
        assert!(incentive_return(1.0, &c) < incentive_shared(1.0, &c));
    }

    #[test]
    fn sale_revenue() {
        let c = cfg();
        assert_relative_eq!(revenue_sale(2.0, DT, &c), 0.05, epsilon = 1e-12);
        assert_eq!(revenue_sale(-2.0, DT, &c), 0.0);
        assert_eq!(revenue_sale(0.0, DT, &c), 0.0);
    }

    #[test]
    fn purchase_cost() {
        let c = cfg();
        assert_relative_eq!(cost_purchase(-2.0, DT, &c), 0.1199, epsilon = 1e-12);
        assert_relative_eq!(cost_purchase(3.0, DT, &c), 0.0033, epsilon = 1e-12);
        let no_vat = TariffConfig { vat: 0.0, ..c.clone() };
        assert_relative_eq!(
            cost_purchase(-2.0, DT, &c) / cost_purchase(-2.0, DT, &no_vat),
            1.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn installation_cost() {
        assert_eq!(cost_installation(0.0, DT, 0.12), 0.0);
        assert_relative_eq!(cost_installation(3.0, DT, 0.12), 0.09, epsilon = 1e-12);
        assert_relative_eq!(
            cost_installation(6.0, DT, 0.12),
            2.0 * cost_installation(3.0, DT, 0.12),
            epsilon = 1e-15
        );
    }

    #[test]
    fn u_pv_is_mean_ratio() {
        assert_eq!(compute_u_pv(&[6000.0], &[6000.0]).unwrap(), 1.0);
        assert_relative_eq!(
            compute_u_pv(&[800.0, 1200.0], &[1000.0, 1000.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(compute_u_pv(&[6000.0, 7400.0], &[5000.0, 0.0]).is_err());
        assert!(compute_u_pv(&[], &[]).is_err());
    }

    #[test]
    fn zero_flow_slot_pays_fixed_charges_only() {
        let flows = vec![
            NodeFlow {
                p_gen: 0.0,
                p_load: 0.0,
                p_gl_s: 0.0,
                p_gl_n: 0.0,
                wear_cost: 0.0,
                u_pv: 1.3,
            };
            7
        ];
        let cash = settle_slot(&flows, &cfg(), DT);
        assert_relative_eq!(cash.h_pur, 7.0 * 0.003 * 1.1, epsilon = 1e-15);
        assert_eq!(cash.revenue(), 0.0);
        assert_eq!(cash.h_ess + cash.h_ins, 0.0);
    }

    #[test]
    fn hourly_sharing_books_on_hour_close() {
        let c = TariffConfig {
            sharing_period: SharingPeriod::Hourly,
            ..cfg()
        };
        // generation in two slots, load in two other slots of the same hour
        let mk = |g: f64, l: f64| NodeFlow {
            p_gen: g,
            p_load: l,
            p_gl_s: 0.0,
            p_gl_n: g + l,
            wear_cost: 0.0,
            u_pv: 0.0,
        };
        let slots = [mk(2.0, 0.0), mk(2.0, 0.0), mk(0.0, -1.0), mk(0.0, -1.0)];
        let mut s = Settler::new();
        let mut total_sha = 0.0;
        for (k, f) in slots.iter().enumerate() {
            let cash = s.settle(k, std::slice::from_ref(f), &c, DT);
            if k < 3 {
                assert_eq!(cash.i_sha, 0.0);
            }
            total_sha += cash.i_sha;
        }
        // hour totals: gen 1.0 kWh, drawn 0.5 kWh
        assert_relative_eq!(total_sha, 0.5 * c.tp_rec, epsilon = 1e-15);
        assert!(s.flush(&c).is_none());

        // per-slot sharing sees no overlap at all
        let per_slot: f64 = slots
            .iter()
            .map(|f| settle_slot(std::slice::from_ref(f), &cfg(), DT).i_sha)
            .sum();
        assert_eq!(per_slot, 0.0);

        s.settle(4, &[mk(1.0, -1.0)], &c, DT);
        let partial = s.flush(&c).unwrap();
        assert_relative_eq!(partial.i_sha, 0.25 * c.tp_rec, epsilon = 1e-15);
    }

    #[test]
    fn validation() {
        cfg().validate().unwrap();
        assert!(TariffConfig { tp_rec: -1.0, ..cfg() }.validate().is_err());
        assert!(TariffConfig { vat: 1.0, ..cfg() }.validate().is_err());
    }

    fn arb_flow() -> impl Strategy<Value = NodeFlow> {
        (0.0f64..5.0, -6.0f64..0.0, -1.0f64..1.0, 0.0f64..0.5).prop_map(|(g, l, frac, w)| {
            let net = g + l;
            let p_gl_s = frac.abs() * net;
            NodeFlow {
                p_gen: g,
                p_load: l,
                p_gl_s,
                p_gl_n: net - p_gl_s,
                wear_cost: w,
                u_pv: 1.2,
            }
        })
    }

    proptest! {
        #[test]
        fn settlement_components_non_negative(flows in prop::collection::vec(arb_flow(), 1..8)) {
            let c = settle_slot(&flows, &cfg(), DT);
            for v in [c.i_sha, c.i_ret, c.i_sel, c.h_ess, c.h_pur, c.h_ins] {
                prop_assert!(v >= 0.0);
            }
            let t = SharingTotals::of(&flows, DT);
            prop_assert!(t.shared() <= t.e_gen && t.shared() <= t.e_dra);
        }

        #[test]
        fn net_cost_monotone_in_prices(flows in prop::collection::vec(arb_flow(), 1..8), bump in 0.001f64..0.1) {
            let base = settle_slot(&flows, &cfg(), DT).net_cost();
            let tp = settle_slot(&flows, &TariffConfig { tp_rec: cfg().tp_rec + bump, ..cfg() }, DT).net_cost();
            let pr = settle_slot(&flows, &TariffConfig { pr3: cfg().pr3 + bump, ..cfg() }, DT).net_cost();
            let up = settle_slot(&flows, &TariffConfig { u_pur: cfg().u_pur + bump, ..cfg() }, DT).net_cost();
            prop_assert!(tp <= base + 1e-12);
            prop_assert!(pr <= base + 1e-12);
            prop_assert!(up >= base - 1e-12);
        }

        #[test]
        fn zero_tariffs_leave_wear_only(flows in prop::collection::vec(arb_flow(), 1..8)) {
            let zero = TariffConfig {
                tp_rec: 0.0, tras_e: 0.0, btau_max: 0.0, pr3: 0.0,
                u_pur: 0.0, u_pur_fixed: 0.0, vat: 0.0, sharing_period: SharingPeriod::Slot,
            };
            let flows: Vec<_> = flows.into_iter().map(|f| NodeFlow { u_pv: 0.0, ..f }).collect();
            let wear: f64 = flows.iter().map(|f| f.wear_cost).sum();
            let c = settle_slot(&flows, &zero, DT);
            prop_assert!((c.net_cost() - wear).abs() < 1e-12);
        }
    }
}
