//! Scenario documents: JSON overrides merged onto documented defaults.
//!
//! ```json
//! {
//!   "nodes": [
//!     {"id": "home1", "load": "home1.csv", "generation": "pv1.csv", "pv_peak_kw": 4.0}
//!   ],
//!   "tariff": {"vat": 0.22},
//!   "seed": 7
//! }
//! ```
//!
//! Every key of the document must exist in the defaults (strict mode), and
//! each resolved value carries its source for `--print-config`.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, FixedOffset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::profiles::load_profile;
use super::synth::pv_install_cost;
use crate::domain::{NodeConfig, ProfileKind, RecConfig, SLOTS_PER_DAY, SLOT_HOURS};
use crate::error::{Error, Result};
use crate::ess::EssParams;
use crate::forecast::{FileForecaster, Forecaster, Persistence, SeasonalNaive};
use crate::fuzzy::EncodingParams;
use crate::ga::GaConfig;
use crate::hems::{default_training_window, CommunityData};
use crate::tariff::{compute_u_pv, TariffConfig};

/// Forecast source for online runs: `persistence`, `seasonal-naive`, or
/// `file:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForecasterChoice {
    Persistence,
    SeasonalNaive,
    File(PathBuf),
}

impl FromStr for ForecasterChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "persistence" => Ok(ForecasterChoice::Persistence),
            "seasonal-naive" => Ok(ForecasterChoice::SeasonalNaive),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(ForecasterChoice::File(PathBuf::from(p))),
                _ => Err(Error::config(
                    "forecaster",
                    format!("{s:?} is not persistence, seasonal-naive, or file:<path>"),
                )),
            },
        }
    }
}

impl std::fmt::Display for ForecasterChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ForecasterChoice::Persistence => f.write_str("persistence"),
            ForecasterChoice::SeasonalNaive => f.write_str("seasonal-naive"),
            ForecasterChoice::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for ForecasterChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ForecasterChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ForecasterChoice {
    /// Builds the forecaster; relative file paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Box<dyn Forecaster>> {
        Ok(match self {
            ForecasterChoice::Persistence => Box::new(Persistence),
            ForecasterChoice::SeasonalNaive => Box::new(SeasonalNaive::default()),
            ForecasterChoice::File(p) => Box::new(FileForecaster::from_path(base.join(p))?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Consumption profile (positive kW in the file).
    pub load: PathBuf,
    /// Generation profile of the PV plant serving this node.
    pub generation: PathBuf,
    pub pv_peak_kw: f64,
    /// Defaults to the residential price curve of `pv_peak_kw`.
    #[serde(default)]
    pub pv_install_cost: Option<f64>,
    #[serde(default)]
    pub initial_soe: Option<f64>,
    /// Per-node battery overrides on top of the scenario's `ess`.
    #[serde(default)]
    pub ess: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    /// Day whose window trains the fuzzy model.
    pub train_day: usize,
    /// First slot and end slot of the training window, relative to the
    /// training day. Unset: 48 slots from the last dark slot before sunrise.
    pub train_window: Option<[usize; 2]>,
    /// GA repeats per training.
    pub repeats: usize,
    /// Day simulated by `simulate` and `benchmark`.
    pub test_day: usize,
    /// Slots simulated from the start of the test day.
    pub horizon_slots: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            train_day: 0,
            train_window: None,
            repeats: 10,
            test_day: 1,
            horizon_slots: SLOTS_PER_DAY,
        }
    }
}

/// Fully resolved scenario settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub nodes: Vec<NodeSpec>,
    /// Battery used by every node unless overridden per node.
    pub ess: EssParams,
    pub tariff: TariffConfig,
    /// PV amortization coefficient, EUR/kWh. Unset: computed from the
    /// generation profiles.
    pub u_pv: Option<f64>,
    pub initial_soe: f64,
    pub ga: GaConfig,
    pub fis: EncodingParams,
    pub simulation: SimulationSettings,
    pub forecaster: Option<ForecasterChoice>,
    /// Master seed: GA runs and the optional PV shuffle.
    pub seed: u64,
    /// Randomly reassign the generation profiles among nodes (seeded).
    pub shuffle_pv: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            ess: EssParams::default(),
            tariff: TariffConfig::default(),
            u_pv: None,
            initial_soe: 0.5,
            ga: GaConfig::default(),
            fis: EncodingParams::default(),
            simulation: SimulationSettings::default(),
            forecaster: None,
            seed: 0,
            shuffle_pv: false,
        }
    }
}

/// Where each default comes from.
fn default_sources() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("nodes", "scenario (no default)"),
        ("ess.capacity_kwh", "default: residential battery datasheet, 5 kWh"),
        ("ess.efficiency", "default: residential battery datasheet, 98 %"),
        ("ess.max_power_kw", "default: residential battery datasheet, 7 kW"),
        ("ess.soe_min", "default: operating window lower limit"),
        ("ess.soe_max", "default: operating window upper limit"),
        ("ess.acc_scale", "default: lithium-ion cycle-life fit ACC = a / DoD^b, a"),
        ("ess.acc_exponent", "default: lithium-ion cycle-life fit ACC = a / DoD^b, b"),
        ("ess.install_price", "default: installed battery price incl. VAT"),
        ("ess.soe_update_mode", "default: efficiency applied to the energy increment"),
        ("tariff.tp_rec", "default: Italian REC premium tariff, 110 EUR/MWh"),
        ("tariff.tras_e", "default: Italian transmission tariff component, 7.61 EUR/MWh"),
        ("tariff.btau_max", "default: Italian maximum distribution component, 0.61 EUR/MWh"),
        ("tariff.pr3", "default: PLACEHOLDER sale price (no legislated value)"),
        ("tariff.u_pur", "default: Italian retail energy price, 0.212 EUR/kWh"),
        ("tariff.u_pur_fixed", "default: Italian retail fixed charge per node and slot"),
        ("tariff.vat", "default: Italian VAT on household energy, 10 %"),
        ("tariff.sharing_period", "default: shared energy evaluated per slot"),
        ("u_pv", "computed: mean plant cost over generation extrapolated to a year"),
        ("initial_soe", "default: mid-range start"),
        ("ga.population", "default: GA meta-parameters of the reference study"),
        ("ga.crossover_fraction", "default: GA meta-parameters of the reference study"),
        ("ga.mutation_probability", "default: GA meta-parameters of the reference study"),
        ("ga.max_generations", "default: GA meta-parameters of the reference study"),
        ("ga.elite_count", "default: implementation choice"),
        ("ga.selection", "default: implementation choice (rank scaling, stochastic uniform)"),
        ("ga.crossover_mode", "default: implementation choice (one coefficient per pair)"),
        ("ga.seed", "derived: master seed"),
        ("fis.l_tr", "default: inner triangle base length"),
        ("fis.gamma0", "default: left shoulder foot"),
        ("fis.theta0", "default: right shoulder foot"),
        ("fis.resolution", "default: centroid grid points"),
        ("simulation.train_day", "default: first day"),
        ("simulation.train_window", "default: 48 slots from the last dark slot before sunrise"),
        ("simulation.repeats", "default: 10 GA repeats"),
        ("simulation.test_day", "default: day after the training day"),
        ("simulation.horizon_slots", "default: one day"),
        ("forecaster", "default: none (online mode requires one)"),
        ("seed", "default"),
        ("shuffle_pv", "default: keep the listed assignment"),
    ])
}

/// Recursively applies `over` onto `base`, rejecting keys `base` lacks.
/// Records every leaf path taken from `over`.
fn merge(base: &mut Value, over: &Value, path: &str, touched: &mut Vec<String>) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match b.get_mut(k) {
                    None => return Err(Error::config(p, "unknown key")),
                    // tagged variants (`{"kind": ...}`) are replaced whole
                    Some(slot) if slot.is_object() && v.is_object() && v.get("kind").is_none() => {
                        merge(slot, v, &p, touched)?
                    }
                    Some(slot) => {
                        *slot = v.clone();
                        touched.push(p);
                    }
                }
            }
            Ok(())
        }
        _ => Err(Error::config(path, "expected an object")),
    }
}

fn typed<T: for<'de> Deserialize<'de>>(v: Value, field: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::config(field, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub settings: Settings,
    /// Dotted key path to the source of its value.
    pub provenance: BTreeMap<String, String>,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

/// Resolves a scenario document (JSON) with relative paths anchored at
/// `base_dir`.
pub fn parse_scenario(text: &str, base_dir: impl Into<PathBuf>) -> Result<Scenario> {
    let over: Value = serde_json::from_str(text)?;
    if !over.is_object() {
        return Err(Error::config("", "scenario must be a JSON object"));
    }
    if over.pointer("/ga/seed").is_some() {
        return Err(Error::config("ga.seed", "set the top-level seed instead"));
    }
    let mut merged = serde_json::to_value(Settings::default())?;
    let mut touched = Vec::new();
    merge(&mut merged, &over, "", &mut touched)?;

    let mut settings = Settings::default();
    let obj: Map<String, Value> = match merged {
        Value::Object(m) => m,
        _ => unreachable!("defaults serialize to an object"),
    };
    for (k, v) in obj {
        match k.as_str() {
            "nodes" => settings.nodes = typed(v, "nodes")?,
            "ess" => settings.ess = typed(v, "ess")?,
            "tariff" => settings.tariff = typed(v, "tariff")?,
            "u_pv" => settings.u_pv = typed(v, "u_pv")?,
            "initial_soe" => settings.initial_soe = typed(v, "initial_soe")?,
            "ga" => settings.ga = typed(v, "ga")?,
            "fis" => settings.fis = typed(v, "fis")?,
            "simulation" => settings.simulation = typed(v, "simulation")?,
            "forecaster" => settings.forecaster = typed(v, "forecaster")?,
            "seed" => settings.seed = typed(v, "seed")?,
            "shuffle_pv" => settings.shuffle_pv = typed(v, "shuffle_pv")?,
            other => return Err(Error::config(other, "unknown key")),
        }
    }
    settings.ga.seed = settings.seed;
    validate_settings(&settings)?;

    let mut provenance: BTreeMap<String, String> = default_sources()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    for p in touched {
        // a whole sub-object replaced counts for all its leaves
        let keys: Vec<String> = provenance
            .keys()
            .filter(|k| **k == p || k.starts_with(&format!("{p}.")))
            .cloned()
            .collect();
        if keys.is_empty() {
            provenance.insert(p, "scenario".into());
        }
        for k in keys {
            provenance.insert(k, "scenario".into());
        }
    }
    Ok(Scenario {
        settings,
        provenance,
        base_dir: base_dir.into(),
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, base)
}

fn node_ess(base: &EssParams, spec: &NodeSpec) -> Result<EssParams> {
    let Some(over) = &spec.ess else {
        return Ok(base.clone());
    };
    let mut v = serde_json::to_value(base)?;
    let field = format!("nodes.{}.ess", spec.id);
    merge(&mut v, over, &field, &mut Vec::new())?;
    typed(v, &field)
}

fn prefix_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { field, message } => Error::Config {
            field: format!("{prefix}.{field}"),
            message,
        },
        other => other,
    }
}

fn validate_settings(s: &Settings) -> Result<()> {
    s.ess.validate()?;
    s.tariff.validate()?;
    s.ga.validate()?;
    s.fis.validate()?;
    if let Some(u) = s.u_pv {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::config("u_pv", format!("{u} must be finite and >= 0")));
        }
    }
    if !(s.ess.soe_min..=s.ess.soe_max).contains(&s.initial_soe) {
        return Err(Error::config(
            "initial_soe",
            format!("{} outside [{}, {}]", s.initial_soe, s.ess.soe_min, s.ess.soe_max),
        ));
    }
    let sim = &s.simulation;
    if sim.repeats == 0 {
        return Err(Error::config("simulation.repeats", "must be >= 1"));
    }
    if sim.horizon_slots == 0 {
        return Err(Error::config("simulation.horizon_slots", "must be >= 1"));
    }
    if let Some([a, b]) = sim.train_window {
        if a >= b || b > SLOTS_PER_DAY {
            return Err(Error::config(
                "simulation.train_window",
                format!("[{a}, {b}] must satisfy start < end <= {SLOTS_PER_DAY}"),
            ));
        }
    }
    let mut ids = std::collections::HashSet::new();
    for (i, n) in s.nodes.iter().enumerate() {
        if n.id.is_empty() || !ids.insert(n.id.as_str()) {
            return Err(Error::config(format!("nodes[{i}].id"), "must be non-empty and unique"));
        }
        if !(n.pv_peak_kw >= 0.0 && n.pv_peak_kw.is_finite()) {
            return Err(Error::config(format!("nodes.{}.pv_peak_kw", n.id), "must be >= 0"));
        }
        node_ess(&s.ess, n)?
            .validate()
            .map_err(|e| prefix_field(e, &format!("nodes.{}", n.id)))?;
    }
    Ok(())
}

/// A scenario with its profiles loaded.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub rec: RecConfig,
    pub data: CommunityData,
    /// Timestamp of slot 0.
    pub start: DateTime<FixedOffset>,
    /// Generation file actually used by each node (after any shuffle).
    pub generation_files: Vec<PathBuf>,
}

impl LoadedScenario {
    /// Timestamp of `slot`, RFC 3339 with the profiles' offset.
    pub fn timestamp(&self, slot: usize) -> String {
        (self.start + chrono::Duration::minutes(15 * slot as i64)).to_rfc3339()
    }
}

impl Scenario {
    pub fn load(&self) -> Result<LoadedScenario> {
        let s = &self.settings;
        if s.nodes.is_empty() {
            return Err(Error::config("nodes", "at least one node is required"));
        }
        let mut gen_files: Vec<PathBuf> = s.nodes.iter().map(|n| n.generation.clone()).collect();
        let mut peaks: Vec<f64> = s.nodes.iter().map(|n| n.pv_peak_kw).collect();
        if s.shuffle_pv {
            let mut order: Vec<usize> = (0..gen_files.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(s.seed));
            gen_files = order.iter().map(|&i| gen_files[i].clone()).collect();
            peaks = order.iter().map(|&i| peaks[i]).collect();
        }

        let mut start: Option<DateTime<FixedOffset>> = None;
        let mut len: Option<usize> = None;
        let mut gen = Vec::new();
        let mut load = Vec::new();
        for (node, gfile) in s.nodes.iter().zip(&gen_files) {
            for (file, kind) in [(gfile, ProfileKind::Generation), (&node.load, ProfileKind::Load)] {
                let path = self.base_dir.join(file);
                let p = load_profile(&path, &node.id, kind)?;
                if *start.get_or_insert(p.start) != p.start || *len.get_or_insert(p.profile.len()) != p.profile.len() {
                    return Err(Error::invalid(format!(
                        "{}: profile covers {} from {}, other profiles differ",
                        path.display(),
                        p.profile.len(),
                        p.start.to_rfc3339()
                    )));
                }
                match kind {
                    ProfileKind::Generation => gen.push(p.profile.values().to_vec()),
                    ProfileKind::Load => load.push(p.profile.values().to_vec()),
                }
            }
        }
        let data = CommunityData::new(s.nodes.iter().map(|n| n.id.clone()).collect(), gen, load)?;

        let costs: Vec<f64> = s
            .nodes
            .iter()
            .zip(&peaks)
            .map(|(n, &kwp)| n.pv_install_cost.unwrap_or_else(|| pv_install_cost(kwp)))
            .collect();
        let u_pv = match s.u_pv {
            Some(u) => u,
            None => {
                let days = data.slots() as f64 / SLOTS_PER_DAY as f64;
                let annual: Vec<f64> = (0..data.n())
                    .map(|i| data.generation(i).iter().sum::<f64>() * SLOT_HOURS / days * 365.0)
                    .collect();
                compute_u_pv(&costs, &annual)?
            }
        };
        let nodes = s
            .nodes
            .iter()
            .zip(&peaks)
            .zip(&costs)
            .map(|((n, &kwp), &cost)| {
                Ok(NodeConfig {
                    id: n.id.clone(),
                    ess: node_ess(&s.ess, n)?,
                    pv_peak_kw: kwp,
                    pv_install_cost: cost,
                    u_pv,
                    initial_soe: n.initial_soe.unwrap_or(s.initial_soe),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rec = RecConfig {
            nodes,
            tariff: s.tariff.clone(),
        };
        rec.validate()?;
        Ok(LoadedScenario {
            rec,
            data,
            start: start.expect("at least one profile"),
            generation_files: gen_files,
        })
    }

    pub fn forecaster(&self, choice: Option<&ForecasterChoice>) -> Result<Option<Box<dyn Forecaster>>> {
        choice
            .or(self.settings.forecaster.as_ref())
            .map(|c| c.build(&self.base_dir))
            .transpose()
    }

    /// Absolute training window within `data`.
    pub fn training_window(&self, data: &CommunityData) -> Result<Range<usize>> {
        let sim = &self.settings.simulation;
        match sim.train_window {
            Some([a, b]) => {
                let base = sim.train_day * SLOTS_PER_DAY;
                let w = base + a..base + b;
                if w.end > data.slots() {
                    return Err(Error::config(
                        "simulation.train_window",
                        format!("slots {}..{} are past the data ({} slots)", w.start, w.end, data.slots()),
                    ));
                }
                Ok(w)
            }
            None => default_training_window(data, sim.train_day),
        }
    }

    /// Absolute window simulated by `simulate` and `benchmark`.
    pub fn test_window(&self, data: &CommunityData) -> Result<Range<usize>> {
        let sim = &self.settings.simulation;
        let start = sim.test_day * SLOTS_PER_DAY;
        let w = start..start + sim.horizon_slots;
        if w.end > data.slots() {
            return Err(Error::config(
                "simulation.horizon_slots",
                format!(
                    "test day {} with {} slots ends past the data ({} slots)",
                    sim.test_day,
                    sim.horizon_slots,
                    data.slots()
                ),
            ));
        }
        Ok(w)
    }

    /// True unless the scenario set the sale price explicitly.
    pub fn pr3_is_placeholder(&self) -> bool {
        self.provenance.get("tariff.pr3").map_or(true, |s| s != "scenario")
    }

    /// Resolved settings, the per-node configuration actually used (if
    /// the profiles load), and the source of every value.
    pub fn echo(&self) -> Value {
        let mut out = Map::new();
        out.insert(
            "settings".into(),
            serde_json::to_value(&self.settings).expect("settings serialize"),
        );
        match self.load() {
            Ok(l) => {
                out.insert("rec".into(), serde_json::to_value(&l.rec).expect("config serializes"));
                out.insert("data_start".into(), Value::String(l.start.to_rfc3339()));
                out.insert("data_slots".into(), Value::from(l.data.slots()));
            }
            Err(e) if !self.settings.nodes.is_empty() => {
                out.insert("rec_error".into(), Value::String(e.to_string()));
            }
            Err(_) => {}
        }
        out.insert(
            "provenance".into(),
            serde_json::to_value(&self.provenance).expect("map serializes"),
        );
        Value::Object(out)
    }
}
