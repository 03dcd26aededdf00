//! File formats: power profiles, scenario documents, synthetic data, and
//! run reports.

pub mod profiles;
pub mod report;
pub mod scenario;
pub mod synth;

pub use profiles::{load_profile, read_profile, write_profile, TimedProfile, PROFILE_HEADER};
pub use report::{community_objectives, write_run_csv, write_summary_json, RunRecord, Summary};
pub use scenario::{load_scenario, parse_scenario, ForecasterChoice, LoadedScenario, Scenario, Settings};
pub use synth::{generate, SynthData, SynthOptions};
