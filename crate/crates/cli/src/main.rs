//! Command-line front end: GA benchmark suite, fuzzy-model training,
//! community simulation, the perfect-foresight benchmark, reports, and the
//! synthetic data generator.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rec_hems::fuzzy::{FisFile, FisModel};
use rec_hems::ga::benchmarks::{Benchmark, SUITE_DIM};
use rec_hems::ga::GaConfig;
use rec_hems::hems::{
    benchmark_optimize, run, savings_pct, train_fis, window_covers_extremes, SimulationMode,
    SimulationRun, Timing,
};
use rec_hems::io::{
    load_scenario, parse_scenario, write_run_csv, write_summary_json, ForecasterChoice,
    RunRecord, Scenario, SynthOptions,
};
use rec_hems::refine::RefineOptions;

#[derive(Debug, Parser)]
#[command(name = "rec-hems", version, about = "Renewable energy community HEMS simulator")]
struct Cli {
    /// Print the resolved configuration, with the source of every value,
    /// instead of running the command.
    #[arg(long, global = true)]
    print_config: bool,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the GA on the standard test functions and write per-seed results.
    BenchmarkGa {
        /// Seeds per test function, starting at --first-seed.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        /// Per-seed CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for one best/mean history CSV per run.
        #[arg(long)]
        history_dir: Option<PathBuf>,
        /// Add wall-clock milliseconds per run (makes the output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Train the fuzzy model on the scenario's training window.
    Train {
        #[arg(long)]
        scenario: PathBuf,
        /// GA repeats; the scenario value when absent.
        #[arg(long)]
        repeats: Option<usize>,
        /// Where to write the trained model.
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Simulate the scenario's test window in one mode and print a summary.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Trained model (offline and online modes).
        #[arg(long)]
        fis: Option<PathBuf>,
        /// persistence, seasonal-naive, or file:<path>; overrides the scenario.
        #[arg(long)]
        forecaster: Option<String>,
        /// Full run record for `report`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock step latencies (makes the output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Optimize the alpha schedule of the test window with perfect foresight.
    Benchmark {
        #[arg(long)]
        scenario: PathBuf,
        /// Trained model whose offline schedule seeds the search and is
        /// compared against.
        #[arg(long)]
        fis: Option<PathBuf>,
        /// Result with the full schedule; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a run record as the per-slot CSV or the summary JSON.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic PV and household profiles plus a scenario document.
    SynthData {
        #[arg(long, default_value_t = 2)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Offline,
    Online,
}

impl From<ModeArg> for SimulationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => SimulationMode::AutoConsumption,
            ModeArg::Offline => SimulationMode::Offline,
            ModeArg::Online => SimulationMode::Online,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let Some(command) = cli.command else {
        if cli.print_config {
            return print_json(&parse_scenario("{}", ".")?.echo());
        }
        bail!("no command given; see --help");
    };
    if cli.print_config {
        return print_json(&config_of(&command)?);
    }
    match command {
        Command::BenchmarkGa {
            seeds,
            first_seed,
            out,
            history_dir,
            timing,
        } => benchmark_ga(first_seed..first_seed + seeds, out, history_dir, timing),
        Command::Train {
            scenario,
            repeats,
            out,
        } => train(&scenario, repeats, &out),
        Command::Simulate {
            scenario,
            mode,
            fis,
            forecaster,
            out,
            timing,
        } => simulate(&scenario, mode.into(), fis.as_deref(), forecaster.as_deref(), out, timing),
        Command::Benchmark { scenario, fis, out } => benchmark(&scenario, fis.as_deref(), out),
        Command::Report { run, format, out } => report(&run, format, out),
        Command::SynthData {
            days,
            nodes,
            seed,
            out,
        } => synth_data(days, nodes, seed, &out),
    }
}

/// What `--print-config` shows for each command.
fn config_of(command: &Command) -> Result<Value> {
    Ok(match command {
        Command::BenchmarkGa { seeds, first_seed, .. } => json!({
            "ga": GaConfig::default(),
            "dimension": SUITE_DIM,
            "functions": Benchmark::ALL.map(Benchmark::name),
            "seeds": [first_seed, first_seed + seeds],
        }),
        Command::Train { scenario, repeats, .. } => {
            let s = scenario_at(scenario)?;
            let mut echo = s.echo();
            echo["effective_repeats"] = json!(repeats.unwrap_or(s.settings.simulation.repeats));
            echo
        }
        Command::Simulate { scenario, forecaster, .. } => {
            let s = scenario_at(scenario)?;
            let mut echo = s.echo();
            if let Some(f) = forecaster {
                echo["effective_forecaster"] = json!(f.parse::<ForecasterChoice>()?.to_string());
            }
            echo
        }
        Command::Benchmark { scenario, .. } => {
            let mut echo = scenario_at(scenario)?.echo();
            echo["refine"] = serde_json::to_value(RefineOptions::default())?;
            echo
        }
        Command::Report { run, format, .. } => json!({
            "run": run,
            "format": format!("{format:?}").to_lowercase(),
        }),
        Command::SynthData { days, nodes, seed, .. } => {
            let opts = SynthOptions::new(*days, *nodes, *seed);
            json!({
                "days": days,
                "nodes": nodes,
                "seed": seed,
                "start": opts.start.to_rfc3339(),
            })
        }
    })
}

fn scenario_at(path: &Path) -> Result<Scenario> {
    load_scenario(path).with_context(|| format!("scenario {}", path.display()))
}

fn print_json(v: &Value) -> Result<()> {
    let stdout = io::stdout();
    let mut w = stdout.lock();
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    Ok(())
}

/// Buffered writer on `path`, or on standard output.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json_file(path: &Path, v: &Value) -> Result<()> {
    let mut w = output(Some(path))?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_fis(path: &Path) -> Result<FisModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: FisFile =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
    Ok(file.model()?)
}

fn benchmark_ga(
    seeds: Range<u64>,
    out: Option<PathBuf>,
    history_dir: Option<PathBuf>,
    timing: bool,
) -> Result<()> {
    if seeds.is_empty() {
        bail!("--seeds must be at least 1");
    }
    let cfg = GaConfig::default();
    if let Some(dir) = &history_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = output(out.as_deref())?;
    write!(w, "function,seed,final_fitness,generations,evaluations")?;
    writeln!(w, "{}", if timing { ",elapsed_ms" } else { "" })?;
    for b in Benchmark::ALL {
        let mut total = 0.0;
        for seed in seeds.clone() {
            let t0 = Instant::now();
            let evo = b.run(&cfg, seed)?;
            let elapsed = t0.elapsed().as_secs_f64() * 1e3;
            total += evo.best.fitness;
            write!(
                w,
                "{b},{seed},{},{},{}",
                evo.best.fitness,
                evo.history.len() - 1,
                evo.evaluations
            )?;
            if timing {
                write!(w, ",{elapsed:.3}")?;
            }
            writeln!(w)?;
            if let Some(dir) = &history_dir {
                let mut h = output(Some(&dir.join(format!("{b}_seed{seed}.csv"))))?;
                writeln!(h, "generation,best,mean")?;
                for s in &evo.history {
                    writeln!(h, "{},{},{}", s.generation, s.best, s.mean)?;
                }
                h.flush()?;
            }
        }
        log::info!("{b}: mean final fitness {:.3e}", total / (seeds.end - seeds.start) as f64);
    }
    w.flush()?;
    Ok(())
}

fn train(path: &Path, repeats: Option<usize>, out: &Path) -> Result<()> {
    let scenario = scenario_at(path)?;
    let loaded = scenario.load()?;
    let window = scenario.training_window(&loaded.data)?;
    let s = &scenario.settings;
    let repeats = repeats.unwrap_or(s.simulation.repeats);
    let report = train_fis(&loaded.data, &loaded.rec, window, &s.ga, repeats, &s.fis)?;
    write_json_file(out, &serde_json::to_value(&report.best)?)?;
    eprintln!(
        "trained on slots {}..{}: best {:.6} EUR, mean {:.6} +- {:.6} over {} repeats; model written to {}",
        report.window_start,
        report.window_end,
        report.best_fitness,
        report.mean,
        report.std_dev,
        report.repeats,
        out.display()
    );
    print_json(&serde_json::to_value(&report)?)
}

fn simulate(
    path: &Path,
    mode: SimulationMode,
    fis: Option<&Path>,
    forecaster: Option<&str>,
    out: Option<PathBuf>,
    timing: bool,
) -> Result<()> {
    let scenario = scenario_at(path)?;
    let loaded = scenario.load()?;
    let window = scenario.test_window(&loaded.data)?;
    let model = fis.map(load_fis).transpose()?;
    let choice = forecaster.map(str::parse::<ForecasterChoice>).transpose()?;
    let choice = choice.or_else(|| scenario.settings.forecaster.clone());
    let fc = match mode {
        SimulationMode::Online => scenario.forecaster(choice.as_ref())?,
        _ => None,
    };

    let (data, rec) = (&loaded.data, &loaded.rec);
    let mut result = run(mode, data, rec, window.clone(), model.as_ref(), fc.as_deref())?;
    let auto = match mode {
        SimulationMode::AutoConsumption => result.objective,
        _ => run(SimulationMode::AutoConsumption, data, rec, window.clone(), None, None)?.objective,
    };
    if !timing {
        result.timing = Timing::default();
    }
    let record = RunRecord {
        mode,
        start_timestamp: loaded.timestamp(window.start),
        node_ids: data.node_ids.clone(),
        forecaster: fc.map(|_| choice.expect("forecaster was built from a choice").to_string()),
        auto_objective: auto,
        pr3: rec.tariff.pr3,
        pr3_placeholder: scenario.pr3_is_placeholder(),
        run: result,
    };
    if let Some(p) = &out {
        write_json_file(p, &serde_json::to_value(&record)?)?;
    }
    let mut w = output(None)?;
    write_summary_json(&mut w, &record.summary())?;
    w.flush()?;
    Ok(())
}

fn benchmark(path: &Path, fis: Option<&Path>, out: Option<PathBuf>) -> Result<()> {
    let scenario = scenario_at(path)?;
    let loaded = scenario.load()?;
    let window = scenario.test_window(&loaded.data)?;
    let (data, rec) = (&loaded.data, &loaded.rec);
    if !window_covers_extremes(data, &window) {
        log::warn!("benchmark window {}..{} misses the PV extremes", window.start, window.end);
    }
    let auto = run(SimulationMode::AutoConsumption, data, rec, window.clone(), None, None)?;
    let offline: Option<SimulationRun> = fis
        .map(|p| -> Result<_> {
            let model = load_fis(p)?;
            Ok(run(SimulationMode::Offline, data, rec, window.clone(), Some(&model), None)?)
        })
        .transpose()?;
    let warm: Vec<Vec<f64>> = offline.iter().map(SimulationRun::alpha_schedule).collect();
    let result = benchmark_optimize(
        data,
        rec,
        window.clone(),
        &scenario.settings.ga,
        &warm,
        &RefineOptions::default(),
    )?;
    let mut doc = json!({
        "start_slot": window.start,
        "start_timestamp": loaded.timestamp(window.start),
        "slots": window.len(),
        "node_ids": data.node_ids,
        "objective_eur": result.objective,
        "stage1_objective_eur": result.stage1_objective,
        "auto_objective_eur": auto.objective,
        "savings_vs_auto_pct": savings_pct(result.objective, auto.objective),
        "sweeps": result.sweeps,
        "evaluations": result.evaluations,
    });
    if let Some(off) = &offline {
        doc["fis_objective_eur"] = json!(off.objective);
        doc["fis_gap_pct"] = json!(savings_pct(off.objective, result.objective));
    }
    eprintln!(
        "benchmark {:.6} EUR (auto {:.6}){}",
        result.objective,
        auto.objective,
        offline
            .as_ref()
            .map(|o| format!(", fuzzy model {:.6}", o.objective))
            .unwrap_or_default()
    );
    doc["alphas"] = json!(result.alphas);
    match out {
        Some(p) => write_json_file(&p, &doc),
        None => print_json(&doc),
    }
}

fn report(path: &Path, format: Format, out: Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record: RunRecord =
        serde_json::from_str(&text).with_context(|| format!("parsing run record {}", path.display()))?;
    let mut w = output(out.as_deref())?;
    match format {
        Format::Csv => write_run_csv(&mut w, &record)?,
        Format::Json => write_summary_json(&mut w, &record.summary())?,
    }
    w.flush()?;
    Ok(())
}

fn synth_data(days: usize, nodes: usize, seed: u64, out: &Path) -> Result<()> {
    let data = rec_hems::io::generate(&SynthOptions::new(days, nodes, seed))?;
    let scenario = data.write_dir(out)?;
    eprintln!(
        "{} days, {} homes, {} plants (u_pv {:.4} EUR/kWh); scenario at {}",
        days,
        data.nodes.len(),
        data.plants.len(),
        data.u_pv,
        scenario.display()
    );
    Ok(())
}
