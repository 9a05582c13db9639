use ris_core::array::{aligned_phases, angle_gains};
use ris_core::closed_form::{self as cf, split_budget};
use ris_core::config::dbm_to_watts;
use ris_core::experiment::{
    parse_sweep_csv, rows_to_csv, run_optimize, run_sweep, PhasePolicy, SweepSpec, CSV_COLUMNS,
};
use ris_core::monte_carlo::ergodic_rate;
use ris_core::optimizer::GaParams;
use ris_core::plot::{emit_plot, PlotColumns};
use ris_core::validation::{validate_all, ValidationReport, REPORT_SCHEMA};
use ris_core::{Link, Mode, PhaseConfig, SystemConfig};

fn small() -> SystemConfig {
    SystemConfig::from_json_str(r#"{"m": 4, "n": 16, "sigma2_vu_dbm": -72}"#).unwrap()
}

#[test]
fn sweep_csv_survives_a_round_trip() {
    let spec = SweepSpec { trials: 300, seed: 4, ..SweepSpec::new(Link::Down, vec![Mode::Active, Mode::Passive]) };
    let out = run_sweep(&spec, &small()).unwrap();
    assert_eq!(out.rows.len(), 2 * spec.power_points().len());

    let csv = out.to_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let parsed = parse_sweep_csv(&csv).unwrap();
    assert_eq!(parsed, out.rows);
    assert_eq!(rows_to_csv(&parsed).unwrap(), csv);
}

#[test]
fn sweep_rows_match_direct_evaluation() {
    let cfg = small();
    let spec = SweepSpec {
        phase_policy: PhasePolicy::Zero,
        power_start_dbm: 20.0,
        power_end_dbm: 30.0,
        ..SweepSpec::new(Link::Up, vec![Mode::Active])
    };
    let out = run_sweep(&spec, &cfg).unwrap();
    let zeros = PhaseConfig::zeros(16, cfg.bits);
    for row in &out.rows {
        let budget = split_budget(dbm_to_watts(row.total_power_dbm), &cfg, Mode::Active).unwrap();
        let at = budget.apply(&cfg, Link::Up);
        let direct = cf::rate_for_phases(&at, Link::Up, Mode::Active, &zeros).unwrap();
        assert_eq!(row.closed_form_rate, Some(direct));
    }
}

#[test]
fn plotting_a_sweep_draws_every_series() {
    let spec = SweepSpec {
        trials: 200,
        phase_policy: PhasePolicy::Aligned,
        ..SweepSpec::new(Link::Up, vec![Mode::Active, Mode::Passive])
    };
    let csv = run_sweep(&spec, &small()).unwrap().to_csv().unwrap();
    let svg = emit_plot(&csv, &PlotColumns::sweep_default(), "uplink").unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert!(svg.contains("passive mc_rate"));
}

#[test]
fn closed_form_rate_tracks_simulation_in_active_mode() {
    let cfg = SystemConfig { n: 16, ..SystemConfig::default() };
    let (k, q) = angle_gains(&cfg.angles, Link::Up);
    let phases = aligned_phases(k, q, 16, cfg.bits).unwrap();
    let f2 = cf::f_abs2(&cfg, Link::Up, &phases).unwrap();
    let closed = cf::rate(&cfg, Link::Up, Mode::Active, f2).unwrap();
    let mc = ergodic_rate(&cfg, &phases, Link::Up, Mode::Active, 20_000, 9).unwrap();
    assert!(mc.relative_error(closed) < 0.05, "closed {closed} mc {}", mc.mean);
}

#[test]
fn validation_report_json_is_stable() {
    let cfg = small().with_rician(0.0);
    let phases = PhaseConfig::zeros(16, cfg.bits);
    let report = validate_all(&cfg, &phases, 5_000, 3).unwrap();
    assert_eq!(report.schema, REPORT_SCHEMA);
    let json = report.to_json_pretty().unwrap();
    let back: ValidationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_json_pretty().unwrap(), json);
    assert_eq!(validate_all(&cfg, &phases, 5_000, 3).unwrap().to_json_pretty().unwrap(), json);
}

#[test]
fn optimizer_beats_its_baselines() {
    let ga = GaParams { population: 40, generations: 40, ..GaParams::default() };
    let out = run_optimize(&small(), Link::Down, Mode::Active, &ga).unwrap();
    let s = &out.summary;
    assert!(s.best_objective >= s.baselines.aligned);
    assert!(s.best_objective >= s.baselines.random_best);
    assert_eq!(out.history_csv().lines().count(), 42);
}
