//! Seeded synthetic community data: PV bell curves with seasonal day length
//! and day-to-day cloudiness, and household loads built from a daily usage
//! pattern plus random appliance events.
//!
//! Per-profile minimum, maximum, and yearly mean are tuned to a small
//! residential community: three PV plants (4, 3, and 4 kWp) and seven
//! homes with mean demand between 0.26 and 0.66 kW and peaks of 3.8 to
//! 7 kW.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Duration, FixedOffset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::profiles::write_profile;
use crate::domain::{NodeConfig, ProfileKind, RecConfig, SLOTS_PER_DAY, SLOT_HOURS};
use crate::error::{Error, Result};
use crate::ess::EssParams;
use crate::hems::CommunityData;
use crate::tariff::{compute_u_pv, TariffConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSpec {
    pub peak_kwp: f64,
    /// Highest output on a clear summer day, kW.
    pub max_kw: f64,
}

pub const PLANTS: [PlantSpec; 3] = [
    PlantSpec {
        peak_kwp: 4.0,
        max_kw: 3.472,
    },
    PlantSpec {
        peak_kwp: 3.0,
        max_kw: 2.797,
    },
    PlantSpec {
        peak_kwp: 4.0,
        max_kw: 3.439,
    },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomeSpec {
    pub min_kw: f64,
    pub max_kw: f64,
    pub mean_kw: f64,
}

pub const HOMES: [HomeSpec; 7] = [
    HomeSpec { min_kw: 0.020, max_kw: 3.784, mean_kw: 0.362 },
    HomeSpec { min_kw: 0.008, max_kw: 4.980, mean_kw: 0.256 },
    HomeSpec { min_kw: 0.016, max_kw: 6.324, mean_kw: 0.362 },
    HomeSpec { min_kw: 0.004, max_kw: 7.044, mean_kw: 0.663 },
    HomeSpec { min_kw: 0.028, max_kw: 5.852, mean_kw: 0.426 },
    HomeSpec { min_kw: 0.024, max_kw: 6.324, mean_kw: 0.556 },
    HomeSpec { min_kw: 0.016, max_kw: 5.864, mean_kw: 0.441 },
];

/// Installed cost of a residential PV plant: 6000 EUR at 3 kWp plus
/// 1400 EUR per additional kWp.
pub fn pv_install_cost(peak_kwp: f64) -> f64 {
    6000.0 + 1400.0 * (peak_kwp - 3.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub days: usize,
    pub nodes: usize,
    pub seed: u64,
    /// Local midnight of the first day.
    pub start: DateTime<FixedOffset>,
}

impl SynthOptions {
    pub fn new(days: usize, nodes: usize, seed: u64) -> Self {
        Self {
            days,
            nodes,
            seed,
            start: default_start(),
        }
    }
}

/// 1 April 2019, local midnight (UTC+1): sunrise is after 06:00 and the
/// midday peak is well developed.
pub fn default_start() -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339("2019-04-01T00:00:00+01:00").expect("valid literal")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthNode {
    pub id: String,
    /// Index into [`SynthData::plants`].
    pub plant: usize,
    /// Consumption, kW `>= 0` (file convention).
    pub consumption: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPlant {
    pub id: String,
    pub peak_kwp: f64,
    pub install_cost: f64,
    pub generation: Vec<f64>,
    /// Generation over a full synthetic year from the same seed, kWh.
    pub annual_kwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub start: DateTime<FixedOffset>,
    pub plants: Vec<SynthPlant>,
    pub nodes: Vec<SynthNode>,
    /// Mean over nodes of plant cost per annual kWh, EUR/kWh.
    pub u_pv: f64,
}

/// Fraction of the clear-summer peak reached on `day_of_year`, and day
/// length in hours.
fn season(day_of_year: u32) -> (f64, f64) {
    let phase = 2.0 * PI * (day_of_year as f64 - 80.0) / 365.0;
    (0.65 + 0.35 * phase.sin(), 12.0 + 3.5 * phase.sin())
}

const SOLAR_NOON_H: f64 = 12.5;

/// Cloudiness of one day: (mean clearness, slot-to-slot variability).
fn draw_weather(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u: f64 = rng.gen();
    if u < 0.6 {
        (rng.gen_range(0.88..1.0), 0.02)
    } else if u < 0.88 {
        (rng.gen_range(0.5..0.88), 0.15)
    } else {
        (rng.gen_range(0.12..0.4), 0.08)
    }
}

fn plant_day(spec: &PlantSpec, day_of_year: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (amp, length) = season(day_of_year);
    let (clear, var) = draw_weather(rng);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let sunrise = SOLAR_NOON_H - length / 2.0;
    let mut cloud = 0.0;
    (0..SLOTS_PER_DAY)
        .map(|s| {
            cloud = 0.7 * cloud + var * noise.sample(rng);
            let mid = (s as f64 + 0.5) * SLOT_HOURS;
            let x = (mid - sunrise) / length;
            if !(0.0..1.0).contains(&x) {
                return 0.0;
            }
            let shape = (PI * x).sin().powf(1.5);
            let factor = (clear + cloud).clamp(0.05, 1.0);
            (spec.max_kw * amp * shape * factor).clamp(0.0, spec.max_kw)
        })
        .collect()
}

/// Relative usage by time of day: low at night, a morning bump, a flat
/// afternoon, and an evening peak.
fn usage_pattern(hour: f64) -> f64 {
    let bump = |centre: f64, width: f64| (-((hour - centre) / width).powi(2)).exp();
    0.25 + 0.9 * bump(7.5, 1.2) + 0.45 * bump(13.0, 2.0) + 1.4 * bump(20.0, 1.8)
}

/// Expected number of appliance events per day and their mean duration.
const EVENTS_PER_DAY: f64 = 3.0;
const EVENT_MEAN_SLOTS: f64 = 2.5;

fn home_day(spec: &HomeSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pattern_mean: f64 = (0..SLOTS_PER_DAY)
        .map(|s| usage_pattern((s as f64 + 0.5) * SLOT_HOURS))
        .sum::<f64>()
        / SLOTS_PER_DAY as f64;
    // appliance power ~ U(0.3, 0.6) * max, so mean 0.45 * max
    let event_energy = EVENTS_PER_DAY * EVENT_MEAN_SLOTS * 0.45 * spec.max_kw / SLOTS_PER_DAY as f64;
    let events_share = (event_energy / (spec.mean_kw - spec.min_kw)).min(0.6);
    let event_scale = events_share * (spec.mean_kw - spec.min_kw) / event_energy;
    let base_scale = (1.0 - events_share) * (spec.mean_kw - spec.min_kw) / pattern_mean;

    let noise = Normal::new(1.0, 0.25).expect("valid normal");
    let mut day: Vec<f64> = (0..SLOTS_PER_DAY)
        .map(|s| {
            let p = usage_pattern((s as f64 + 0.5) * SLOT_HOURS);
            let jitter: f64 = noise.sample(rng);
            spec.min_kw + base_scale * p * jitter.max(0.0)
        })
        .collect();

    let count = Poisson::new(EVENTS_PER_DAY).expect("valid rate").sample(rng) as usize;
    for _ in 0..count {
        // events follow the usage pattern: rejection-sample the start slot
        let start = loop {
            let s = rng.gen_range(0..SLOTS_PER_DAY);
            if rng.gen::<f64>() * 1.7 < usage_pattern((s as f64 + 0.5) * SLOT_HOURS) {
                break s;
            }
        };
        let len = rng.gen_range(1..=4);
        let power = event_scale * rng.gen_range(0.3..0.6) * spec.max_kw;
        for v in day.iter_mut().skip(start).take(len) {
            *v += power;
        }
    }
    for v in &mut day {
        *v = v.clamp(spec.min_kw, spec.max_kw);
    }
    day
}

/// Generation of `spec` over a full synthetic year (days 1 to 365), kWh,
/// from a dedicated random stream.
fn annual_generation(spec: &PlantSpec, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=365)
        .map(|doy| plant_day(spec, doy, &mut rng).iter().sum::<f64>() * SLOT_HOURS)
        .sum()
}

pub fn generate(opts: &SynthOptions) -> Result<SynthData> {
    if opts.days == 0 || opts.nodes == 0 {
        return Err(Error::invalid("synthetic data needs at least one day and one node"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut streams = |n: usize| -> Vec<u64> { (0..n).map(|_| master.gen()).collect() };
    let plant_seeds = streams(PLANTS.len());
    let annual_seeds = streams(PLANTS.len());
    let home_seeds = streams(opts.nodes);
    let assign_seed = streams(1)[0];

    let plants: Vec<SynthPlant> = PLANTS
        .iter()
        .enumerate()
        .map(|(p, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(plant_seeds[p]);
            let generation = (0..opts.days)
                .flat_map(|d| {
                    let doy = (opts.start + Duration::days(d as i64)).ordinal();
                    plant_day(spec, doy, &mut rng)
                })
                .collect();
            SynthPlant {
                id: format!("pv{}", p + 1),
                peak_kwp: spec.peak_kwp,
                install_cost: pv_install_cost(spec.peak_kwp),
                generation,
                annual_kwh: annual_generation(spec, annual_seeds[p]),
            }
        })
        .collect();

    // every plant serves at least one node when there are enough nodes
    let mut assignment: Vec<usize> = (0..opts.nodes).map(|i| i % PLANTS.len()).collect();
    assignment.shuffle(&mut ChaCha8Rng::seed_from_u64(assign_seed));

    let nodes: Vec<SynthNode> = (0..opts.nodes)
        .map(|i| {
            let spec = &HOMES[i % HOMES.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(home_seeds[i]);
            SynthNode {
                id: format!("home{}", i + 1),
                plant: assignment[i],
                consumption: (0..opts.days).flat_map(|_| home_day(spec, &mut rng)).collect(),
            }
        })
        .collect();

    let costs: Vec<f64> = nodes.iter().map(|n| plants[n.plant].install_cost).collect();
    let annual: Vec<f64> = nodes.iter().map(|n| plants[n.plant].annual_kwh).collect();
    let u_pv = compute_u_pv(&costs, &annual)?;
    Ok(SynthData {
        start: opts.start,
        plants,
        nodes,
        u_pv,
    })
}

impl SynthData {
    pub fn slots(&self) -> usize {
        self.plants[0].generation.len()
    }

    /// Community configuration (default batteries, mid-range initial SoE)
    /// and measured data, without touching the file system.
    pub fn community(&self, tariff: &TariffConfig) -> Result<(RecConfig, CommunityData)> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let plant = &self.plants[n.plant];
                NodeConfig {
                    id: n.id.clone(),
                    ess: EssParams::default(),
                    pv_peak_kw: plant.peak_kwp,
                    pv_install_cost: plant.install_cost,
                    u_pv: self.u_pv,
                    initial_soe: 0.5,
                }
            })
            .collect();
        let rec = RecConfig {
            nodes,
            tariff: tariff.clone(),
        };
        rec.validate()?;
        let data = CommunityData::new(
            self.nodes.iter().map(|n| n.id.clone()).collect(),
            self.nodes
                .iter()
                .map(|n| self.plants[n.plant].generation.clone())
                .collect(),
            self.nodes
                .iter()
                .map(|n| n.consumption.iter().map(|c| -c).collect())
                .collect(),
        )?;
        Ok((rec, data))
    }

    /// Writes one CSV per plant and per home plus `scenario.json` into
    /// `dir`; returns the scenario path.
    pub fn write_dir(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, kind: ProfileKind, values: &[f64]| -> Result<()> {
            let path = dir.join(name);
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = std::io::BufWriter::new(file);
            write_profile(&mut w, self.start, kind, values)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&path, e))
        };
        for p in &self.plants {
            write(&format!("{}.csv", p.id), ProfileKind::Generation, &p.generation)?;
        }
        let mut nodes = Vec::new();
        for n in &self.nodes {
            let negated: Vec<f64> = n.consumption.iter().map(|c| -c).collect();
            write(&format!("{}.csv", n.id), ProfileKind::Load, &negated)?;
            let plant = &self.plants[n.plant];
            nodes.push(serde_json::json!({
                "id": n.id,
                "load": format!("{}.csv", n.id),
                "generation": format!("{}.csv", plant.id),
                "pv_peak_kw": plant.peak_kwp,
            }));
        }
        let doc = serde_json::json!({ "nodes": nodes, "u_pv": self.u_pv });
        let path = dir.join("scenario.json");
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
