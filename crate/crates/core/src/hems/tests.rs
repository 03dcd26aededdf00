use super::*;
use crate::domain::{RecConfig, SLOTS_PER_DAY};
use crate::forecast::{write_forecast_csv, FileForecaster, ForecastRow};
use crate::fuzzy::{EncodingParams, Membership, Rule, Term, TermSet, TERM_COUNT};
use crate::ga::GaConfig;
use crate::io::{generate, SynthOptions};
use crate::refine::RefineOptions;
use crate::tariff::TariffConfig;

fn fixture(nodes: usize, seed: u64) -> (RecConfig, CommunityData) {
    generate(&SynthOptions::new(2, nodes, seed))
        .unwrap()
        .community(&TariffConfig::default())
        .unwrap()
}

/// A model whose every rule fires fully and whose output terms are all the
/// same narrow triangle centred on `alpha`, so it infers `alpha` everywhere.
fn constant_model(alpha: f64) -> FisModel {
    let input = TermSet {
        terms: [Membership::LeftShoulder {
            core_end: 1.0,
            foot: 1.0,
        }; TERM_COUNT],
    };
    let output = TermSet {
        terms: [Membership::Triangle {
            left: (alpha - 0.05).max(0.0),
            peak: alpha,
            right: (alpha + 0.05).min(1.0),
        }; TERM_COUNT],
    };
    let rules = Term::ALL.map(|t| Rule {
        antecedent: t,
        consequent: t,
        weight: 1.0,
    });
    FisModel::new(input, output, rules, 101).unwrap()
}

fn small_ga(seed: u64) -> GaConfig {
    GaConfig {
        population: 20,
        max_generations: 10,
        seed,
        ..GaConfig::default()
    }
}

#[test]
fn split_horizon_is_additive() {
    let (cfg, data) = fixture(3, 1);
    let model = constant_model(0.3);
    let whole = simulate(&data, &cfg, 0..96, Policy::Fis(&model), ForecastSource::Actual, None).unwrap();
    let first = simulate(&data, &cfg, 0..40, Policy::Fis(&model), ForecastSource::Actual, None).unwrap();
    let second = simulate(
        &data,
        &cfg,
        40..96,
        Policy::Fis(&model),
        ForecastSource::Actual,
        Some(first.final_soe.clone()),
    )
    .unwrap();
    let joined: Vec<_> = first.results.iter().chain(&second.results).collect();
    assert_eq!(joined.len(), whole.results.len());
    for (a, b) in joined.iter().zip(&whole.results) {
        assert_eq!(**a, *b);
    }
    assert!((first.objective + second.objective - whole.objective).abs() < 1e-9);
    assert_eq!(second.final_soe, whole.final_soe);
}

#[test]
fn auto_mode_rejects_model_and_matches_self_consumption() {
    let (cfg, data) = fixture(3, 2);
    let model = constant_model(1.0);
    assert!(run(SimulationMode::AutoConsumption, &data, &cfg, 0..96, Some(&model), None).is_err());
    let auto = run(SimulationMode::AutoConsumption, &data, &cfg, 0..96, None, None).unwrap();
    let ones = vec![1.0; 3 * 96];
    let sched = simulate(&data, &cfg, 0..96, Policy::Schedule(&ones), ForecastSource::Actual, None).unwrap();
    assert_eq!(auto.results, sched.results);
    assert_eq!(auto.mode, SimulationMode::AutoConsumption);
}

#[test]
fn constant_model_matches_the_equivalent_schedule() {
    let (cfg, data) = fixture(4, 3);
    let model = constant_model(0.7);
    let alpha = model.infer(0.2).unwrap();
    assert!((alpha - 0.7).abs() < 1e-12, "{alpha}");
    let off = run(SimulationMode::Offline, &data, &cfg, 0..192, Some(&model), None).unwrap();
    let alphas = vec![alpha; 4 * 192];
    let sched = simulate(&data, &cfg, 0..192, Policy::Schedule(&alphas), ForecastSource::Actual, None).unwrap();
    assert_eq!(off.results, sched.results);
    assert_eq!(off.counters.overwrites, 4 * 192);
    assert_eq!(off.counters.fis_fallbacks, 0);
}

#[test]
fn zero_alpha_routes_everything_to_the_grid() {
    let (cfg, data) = fixture(3, 4);
    let zeros = vec![0.0; 3 * 96];
    let sched = simulate(&data, &cfg, 0..96, Policy::Schedule(&zeros), ForecastSource::Actual, None).unwrap();
    for r in &sched.results {
        for n in &r.nodes {
            assert_eq!(n.p_gl_s, 0.0);
            assert_eq!(n.wear_cost, 0.0);
            assert_eq!(n.soe_after, n.soe_before);
            assert_eq!(n.p_gl_n, n.p_gl_star);
        }
    }
    assert_eq!(sched.final_soe, cfg.initial_soe());
}

#[test]
fn perfect_forecast_file_reproduces_offline() {
    let (cfg, data) = fixture(3, 5);
    let mut rows = Vec::new();
    for (i, id) in data.node_ids.iter().enumerate() {
        for slot in 0..data.slots() {
            rows.push(ForecastRow {
                node_id: id.clone(),
                slot,
                pair: ForecastPair::new(data.generation(i)[slot], data.load(i)[slot]),
            });
        }
    }
    let mut csv = Vec::new();
    write_forecast_csv(&mut csv, &rows).unwrap();
    let file = FileForecaster::from_reader(csv.as_slice(), "perfect.csv").unwrap();

    let model = crate::fuzzy::decode(&crate::fuzzy::default_genome(), &EncodingParams::default()).unwrap();
    let window = 96..192;
    let off = run(SimulationMode::Offline, &data, &cfg, window.clone(), Some(&model), None).unwrap();
    let on = run(SimulationMode::Online, &data, &cfg, window, Some(&model), Some(&file)).unwrap();
    assert_eq!(on.results, off.results);
    assert_eq!(on.mode, SimulationMode::Online);
}

#[test]
fn online_without_forecaster_is_an_error() {
    let (cfg, data) = fixture(2, 6);
    let model = constant_model(0.5);
    let err = run(SimulationMode::Online, &data, &cfg, 0..96, Some(&model), None).unwrap_err();
    assert!(err.to_string().contains("forecaster"), "{err}");
    let err = run(SimulationMode::Offline, &data, &cfg, 0..96, None, None).unwrap_err();
    assert!(err.to_string().contains("model"), "{err}");
}

#[test]
fn forecaster_sees_only_the_past() {
    struct Spy;
    impl crate::forecast::Forecaster for Spy {
        fn name(&self) -> &str {
            "spy"
        }
        fn forecast(&self, _: &str, h: &crate::forecast::History<'_>) -> Result<ForecastPair> {
            assert_eq!(h.gen.len(), h.next_slot());
            Ok(ForecastPair::default())
        }
    }
    let (cfg, data) = fixture(2, 7);
    let model = constant_model(0.5);
    run(SimulationMode::Online, &data, &cfg, 10..50, Some(&model), Some(&Spy)).unwrap();
}

#[test]
fn zero_tariffs_leave_only_wear_and_installation() {
    let (mut cfg, data) = fixture(3, 8);
    cfg.tariff = TariffConfig {
        tp_rec: 0.0,
        tras_e: 0.0,
        btau_max: 0.0,
        pr3: 0.0,
        u_pur: 0.0,
        u_pur_fixed: 0.0,
        vat: 0.0,
        ..TariffConfig::default()
    };
    for n in &mut cfg.nodes {
        n.u_pv = 0.0;
    }
    let auto = run(SimulationMode::AutoConsumption, &data, &cfg, 0..96, None, None).unwrap();
    let wear: f64 = auto.results.iter().flat_map(|r| &r.nodes).map(|n| n.wear_cost).sum();
    assert!(wear > 0.0);
    assert!((auto.objective - wear).abs() < 1e-9 * wear.max(1.0));
}

#[test]
fn hourly_sharing_settles_a_partial_hour_at_the_end() {
    let (mut cfg, data) = fixture(3, 9);
    cfg.tariff.sharing_period = crate::tariff::SharingPeriod::Hourly;
    let run6 = simulate(&data, &cfg, 40..46, Policy::SelfConsumption, ForecastSource::Actual, None).unwrap();
    let total: f64 = run6.results.iter().map(|r| r.cash.i_sha).sum();
    assert!(total > 0.0, "midday slots share energy");
    assert!((run6.objective - objective(&run6.results)).abs() < 1e-12);
}

#[test]
fn training_beats_self_consumption_on_its_window() {
    let (cfg, data) = fixture(4, 10);
    let window = default_training_window(&data, 0).unwrap();
    assert_eq!(window.len(), SLOTS_PER_DAY / 2);
    assert!(window_covers_extremes(&data, &window));
    let report = train_fis(&data, &cfg, window.clone(), &small_ga(3), 2, &EncodingParams::default()).unwrap();
    let auto = run(SimulationMode::AutoConsumption, &data, &cfg, window.clone(), None, None).unwrap();
    assert!(report.best_fitness < auto.objective, "{} vs {}", report.best_fitness, auto.objective);
    assert_eq!(report.seeds, vec![3, 4]);
    assert_eq!(report.finals.len(), 2);

    // the stored model reproduces its recorded fitness
    let model = report.best.model().unwrap();
    let off = run(SimulationMode::Offline, &data, &cfg, window, Some(&model), None).unwrap();
    assert!((off.objective - report.best_fitness).abs() < 1e-9);
}

#[test]
fn window_without_activity_has_zero_spread() {
    let ids = vec!["home1".to_string(), "home2".to_string()];
    let data = CommunityData::new(ids, vec![vec![0.0; 96]; 2], vec![vec![0.0; 96]; 2]).unwrap();
    let (cfg, _) = fixture(2, 11);
    let report = train_fis(&data, &cfg, 0..48, &small_ga(0), 3, &EncodingParams::default()).unwrap();
    assert_eq!(report.std_dev, 0.0);
    assert!(!report.covers_extremes);
    assert_eq!(default_training_window(&data, 0).unwrap(), 24..72);
}

#[test]
fn single_node_benchmark_matches_grid_search() {
    let (cfg1, data1) = fixture(1, 12);
    // one daylight slot with surplus
    let slot = (0..96)
        .find(|&k| data1.generation(0)[k] + data1.load(0)[k] > 0.5)
        .expect("a surplus slot");
    let window = slot..slot + 1;
    let eval = |a: f64| {
        simulate(&data1, &cfg1, window.clone(), Policy::Schedule(&[a]), ForecastSource::Actual, None)
            .unwrap()
            .objective
    };
    let grid = (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .map(|a| (a, eval(a)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let bench = benchmark_optimize(&data1, &cfg1, window, &small_ga(1), &[], &RefineOptions::default()).unwrap();
    assert!(bench.objective <= grid.1 + 1e-9, "{} vs grid {}", bench.objective, grid.1);
    assert!((bench.alphas[0] - grid.0).abs() < 2e-3, "{:?} vs {}", bench.alphas, grid.0);
}

#[test]
fn benchmark_dominates_fixed_grid_and_warm_start() {
    let (cfg, data) = fixture(2, 13);
    let window = 40..52;
    let model = constant_model(0.6);
    let off = run(SimulationMode::Offline, &data, &cfg, window.clone(), Some(&model), None).unwrap();
    let bench = benchmark_optimize(
        &data,
        &cfg,
        window.clone(),
        &small_ga(2),
        &[off.alpha_schedule()],
        &RefineOptions::default(),
    )
    .unwrap();
    assert!(bench.objective <= off.objective);
    assert!(bench.objective <= bench.stage1_objective);
    for a in FIXED_ALPHA_GRID {
        let flat = vec![a; 2 * window.len()];
        let o = simulate(&data, &cfg, window.clone(), Policy::Schedule(&flat), ForecastSource::Actual, None)
            .unwrap()
            .objective;
        assert!(bench.objective <= o, "alpha {a}: {} > {o}", bench.objective);
    }
    // the schedule reproduces the reported objective
    let replay = simulate(&data, &cfg, window, Policy::Schedule(&bench.alphas), ForecastSource::Actual, None)
        .unwrap();
    assert_eq!(replay.objective, bench.objective);
}

#[test]
fn simulation_is_deterministic_apart_from_timing() {
    let (cfg, data) = fixture(3, 14);
    let model = constant_model(0.4);
    let a = run(SimulationMode::Offline, &data, &cfg, 0..96, Some(&model), None).unwrap();
    let b = run(SimulationMode::Offline, &data, &cfg, 0..96, Some(&model), None).unwrap();
    assert_eq!(a.results, b.results);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
}

#[test]
fn schedule_length_is_checked() {
    let (cfg, data) = fixture(2, 15);
    let short = vec![0.5; 3];
    assert!(simulate(&data, &cfg, 0..4, Policy::Schedule(&short), ForecastSource::Actual, None).is_err());
    assert!(simulate(&data, &cfg, 0..0, Policy::SelfConsumption, ForecastSource::Actual, None).is_err());
    assert!(simulate(&data, &cfg, 150..200, Policy::SelfConsumption, ForecastSource::Actual, None).is_err());
}
