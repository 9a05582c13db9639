//! Power sweeps, active/passive comparison and optimization runs.
//!
//! Every artifact produced here is a pure function of its inputs: rows are
//! assembled in sweep order and floats are printed in Rust's shortest
//! round-trip form, so identical inputs give byte-identical files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::{aligned_phases, angle_gains, Link, PhaseConfig};
use crate::closed_form::{self, split_budget, Mode};
use crate::config::{dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};
use crate::monte_carlo::ergodic_rate;
use crate::optimizer::{ga_optimize, random_phases, rate_objective, GaParams, OptimizationResult};

pub const SWEEP_SCHEMA: &str = "ris-sweep/1";
pub const OPTIMIZE_SCHEMA: &str = "ris-optimize/1";

pub const CSV_COLUMNS: [&str; 9] =
    ["total_power_dbm", "mode", "closed_form_rate", "mc_rate", "mc_stderr", "f_abs2", "pt", "pr", "eta"];

/// Cell value for quantities that do not exist at an infeasible point.
pub const INFEASIBLE: &str = "infeasible";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhasePolicy {
    /// GA on the closed-form rate at the sweep midpoint.
    Optimized,
    /// Quantized LoS alignment.
    Aligned,
    Random,
    Zero,
}

impl PhasePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            PhasePolicy::Optimized => "optimized",
            PhasePolicy::Aligned => "aligned",
            PhasePolicy::Random => "random",
            PhasePolicy::Zero => "zero",
        }
    }
}

impl FromStr for PhasePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimized" => Ok(PhasePolicy::Optimized),
            "aligned" => Ok(PhasePolicy::Aligned),
            "random" => Ok(PhasePolicy::Random),
            "zero" => Ok(PhasePolicy::Zero),
            other => Err(Error::Parse(format!("unknown phase policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub link: Link,
    pub power_start_dbm: f64,
    pub power_end_dbm: f64,
    pub power_step_db: f64,
    pub modes: Vec<Mode>,
    pub phase_policy: PhasePolicy,
    /// Monte-Carlo trials per point; zero leaves the Monte-Carlo columns empty.
    pub trials: u64,
    pub seed: u64,
    pub ga: GaParams,
}

impl SweepSpec {
    pub fn new(link: Link, modes: Vec<Mode>) -> Self {
        Self {
            link,
            power_start_dbm: 10.0,
            power_end_dbm: 50.0,
            power_step_db: 5.0,
            modes,
            phase_policy: PhasePolicy::Optimized,
            trials: 0,
            seed: 0,
            ga: GaParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.power_start_dbm, self.power_end_dbm, self.power_step_db].iter().all(|v| v.is_finite());
        if !finite || self.power_start_dbm > self.power_end_dbm || !(self.power_step_db > 0.0) {
            return Err(Error::InvalidParams(format!(
                "power range {} → {} step {} dB is malformed",
                self.power_start_dbm, self.power_end_dbm, self.power_step_db
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidParams("at least one mode is required".into()));
        }
        if self.trials != 0 && self.trials < 100 {
            return Err(Error::InvalidParams(format!(
                "Monte-Carlo columns need at least 100 trials, got {}",
                self.trials
            )));
        }
        if self.power_points().len() > 100_000 {
            return Err(Error::InvalidParams("sweep has more than 100000 points".into()));
        }
        Ok(())
    }

    /// `start, start + step, …` up to `end` inclusive, tolerant to rounding.
    pub fn power_points(&self) -> Vec<f64> {
        let span = (self.power_end_dbm - self.power_start_dbm) / self.power_step_db;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.power_start_dbm + i as f64 * self.power_step_db).collect()
    }

    pub fn midpoint_dbm(&self) -> f64 {
        0.5 * (self.power_start_dbm + self.power_end_dbm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub total_power_dbm: f64,
    pub mode: Mode,
    pub feasible: bool,
    pub closed_form_rate: Option<f64>,
    pub mc_rate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub f_abs2: f64,
    pub pt: Option<f64>,
    pub pr: Option<f64>,
    pub eta: Option<f64>,
}

impl SweepRow {
    /// Rate used for comparisons; an infeasible point delivers nothing.
    pub fn effective_rate(&self) -> f64 {
        self.closed_form_rate.unwrap_or(0.0)
    }
}

/// Where the GA-optimized phases were tuned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub power_dbm: f64,
    pub mode: Mode,
    pub best_objective: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Active minus passive closed-form rate per power, infeasible counted as 0.
    pub differences: Vec<f64>,
    pub sign_changes: usize,
    /// Consecutive powers between which the first sign change happens.
    pub bracket_dbm: Option<[f64; 2]>,
    pub low_end_sign: i8,
    pub high_end_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub link: Link,
    pub modes: Vec<Mode>,
    pub phase_policy: PhasePolicy,
    pub bits: u32,
    pub seed: u64,
    pub trials: u64,
    pub powers_dbm: Vec<f64>,
    pub phase_levels: Vec<u32>,
    pub f_abs2: f64,
    pub optimizer: Option<OptimizerRun>,
    pub infeasible_points: Vec<(Mode, usize)>,
    pub all_infeasible: bool,
    pub crossover: Option<Crossover>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    pub phases: PhaseConfig,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign structure of active minus passive rates over a sweep.
pub fn detect_crossover(powers: &[f64], active: &[f64], passive: &[f64]) -> Crossover {
    let differences: Vec<f64> = active.iter().zip(passive).map(|(a, p)| a - p).collect();
    let signed: Vec<(usize, i8)> = differences.iter().map(|&d| sign(d)).enumerate().filter(|&(_, s)| s != 0).collect();
    let flips: Vec<usize> = signed.windows(2).filter(|w| w[0].1 != w[1].1).map(|w| w[1].0).collect();
    Crossover {
        bracket_dbm: flips.first().map(|&i| [powers[i - 1], powers[i]]),
        sign_changes: flips.len(),
        low_end_sign: differences.first().map_or(0, |&d| sign(d)),
        high_end_sign: differences.last().map_or(0, |&d| sign(d)),
        differences,
    }
}

/// Phase configuration for a sweep, plus the GA record when one was run.
pub fn sweep_phases(spec: &SweepSpec, cfg: &SystemConfig) -> Result<(PhaseConfig, Option<OptimizerRun>)> {
    let (k, q) = angle_gains(&cfg.angles, spec.link);
    let aligned = aligned_phases(k, q, cfg.n, cfg.bits)?;
    match spec.phase_policy {
        PhasePolicy::Aligned => Ok((aligned, None)),
        PhasePolicy::Zero => Ok((PhaseConfig::zeros(cfg.n, cfg.bits), None)),
        PhasePolicy::Random => Ok((random_phases(cfg.n, cfg.bits, spec.seed)?, None)),
        PhasePolicy::Optimized => {
            let total = dbm_to_watts(spec.midpoint_dbm());
            for mode in [Mode::Active, Mode::Passive] {
                let Ok(budget) = split_budget(total, cfg, mode) else { continue };
                let tuned = budget.apply(cfg, spec.link);
                let objective = rate_objective(&tuned, spec.link, mode)?;
                let r = ga_optimize(objective, cfg.n, cfg.bits, &spec.ga, std::slice::from_ref(&aligned))?;
                let run = OptimizerRun {
                    power_dbm: spec.midpoint_dbm(),
                    mode,
                    best_objective: r.best_objective,
                    evaluations: r.evaluations,
                };
                return Ok((r.best, Some(run)));
            }
            Ok((aligned, None))
        }
    }
}

fn sweep_point(
    spec: &SweepSpec,
    cfg: &SystemConfig,
    phases: &PhaseConfig,
    f2: f64,
    dbm: f64,
    mode: Mode,
) -> Result<SweepRow> {
    let mut row = SweepRow {
        total_power_dbm: dbm,
        mode,
        feasible: false,
        closed_form_rate: None,
        mc_rate: None,
        mc_stderr: None,
        f_abs2: f2,
        pt: None,
        pr: None,
        eta: None,
    };
    let budget = match split_budget(dbm_to_watts(dbm), cfg, mode) {
        Ok(b) => b,
        Err(Error::InfeasibleBudget { .. }) => return Ok(row),
        Err(e) => return Err(e),
    };
    let point = budget.apply(cfg, spec.link);
    row.feasible = true;
    row.pt = Some(budget.pt);
    row.pr = Some(budget.pr);
    row.eta = Some(closed_form::amplification(&point, spec.link, mode, f2)?);
    row.closed_form_rate = Some(closed_form::rate(&point, spec.link, mode, f2)?);
    if spec.trials > 0 {
        let est = ergodic_rate(&point, phases, spec.link, mode, spec.trials, spec.seed)?;
        row.mc_rate = Some(est.mean);
        row.mc_stderr = Some(est.std_error);
    }
    Ok(row)
}

/// One row per `(power, mode)`, in power-major order.
pub fn run_sweep(spec: &SweepSpec, cfg: &SystemConfig) -> Result<SweepOutput> {
    spec.validate()?;
    let cfg = cfg.clone().validated()?;
    let (phases, optimizer) = sweep_phases(spec, &cfg)?;
    let f2 = closed_form::f_abs2(&cfg, spec.link, &phases)?;
    let powers = spec.power_points();

    let mut rows = Vec::with_capacity(powers.len() * spec.modes.len());
    for &dbm in &powers {
        for &mode in &spec.modes {
            rows.push(sweep_point(spec, &cfg, &phases, f2, dbm, mode)?);
        }
    }

    let per_mode =
        |mode: Mode| -> Vec<f64> { rows.iter().filter(|r| r.mode == mode).map(SweepRow::effective_rate).collect() };
    let crossover = (spec.modes.contains(&Mode::Active) && spec.modes.contains(&Mode::Passive))
        .then(|| detect_crossover(&powers, &per_mode(Mode::Active), &per_mode(Mode::Passive)));
    let infeasible_points =
        spec.modes.iter().map(|&m| (m, rows.iter().filter(|r| r.mode == m && !r.feasible).count())).collect();

    let summary = SweepSummary {
        schema: SWEEP_SCHEMA.to_owned(),
        link: spec.link,
        modes: spec.modes.clone(),
        phase_policy: spec.phase_policy,
        bits: cfg.bits,
        seed: spec.seed,
        trials: spec.trials,
        powers_dbm: powers,
        phase_levels: phases.levels().unwrap_or_default(),
        f_abs2: f2,
        optimizer,
        infeasible_points,
        all_infeasible: rows.iter().all(|r| !r.feasible),
        crossover,
    };
    Ok(SweepOutput { rows, summary, phases })
}

struct Cell(Option<f64>, bool);

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell(_, false) => f.write_str(INFEASIBLE),
            Cell(Some(v), true) => write!(f, "{v:?}"),
            Cell(None, true) => Ok(()),
        }
    }
}

/// Renders rows with the fixed column set [`CSV_COLUMNS`].
pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        let ok = r.feasible;
        w.write_record([
            format!("{:?}", r.total_power_dbm),
            r.mode.as_str().to_owned(),
            Cell(r.closed_form_rate, ok).to_string(),
            Cell(r.mc_rate, ok).to_string(),
            Cell(r.mc_stderr, ok).to_string(),
            format!("{:?}", r.f_abs2),
            Cell(r.pt, ok).to_string(),
            Cell(r.pr, ok).to_string(),
            Cell(r.eta, ok).to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Inverse of [`rows_to_csv`].
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected sweep header {header:?}")));
    }
    let number = |s: &str, col: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::Parse(format!("column {col}: `{s}` is not a number")))
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let feasible = cell(2) != INFEASIBLE;
        let optional = |i: usize| -> Result<Option<f64>> {
            match cell(i) {
                "" if feasible && (i == 3 || i == 4) => Ok(None),
                INFEASIBLE if !feasible => Ok(None),
                s if feasible => number(s, CSV_COLUMNS[i]).map(Some),
                s => Err(Error::Parse(format!("column {}: expected `{INFEASIBLE}`, got `{s}`", CSV_COLUMNS[i]))),
            }
        };
        rows.push(SweepRow {
            total_power_dbm: number(cell(0), CSV_COLUMNS[0])?,
            mode: cell(1).parse()?,
            feasible,
            closed_form_rate: optional(2)?,
            mc_rate: optional(3)?,
            mc_stderr: optional(4)?,
            f_abs2: number(cell(5), CSV_COLUMNS[5])?,
            pt: optional(6)?,
            pr: optional(7)?,
            eta: optional(8)?,
        });
    }
    Ok(rows)
}

impl SweepOutput {
    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub aligned: f64,
    pub zero: f64,
    pub random_mean: f64,
    pub random_best: f64,
    pub random_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub schema: String,
    pub link: Link,
    pub mode: Mode,
    pub bits: u32,
    pub ga: GaParams,
    pub best_levels: Vec<u32>,
    pub best_objective: f64,
    pub f_abs2: f64,
    pub evaluations: u64,
    pub baselines: Baselines,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutput {
    pub result: OptimizationResult,
    pub summary: OptimizeSummary,
}

/// GA on the closed-form rate at the configuration's own transmit powers.
pub fn run_optimize(cfg: &SystemConfig, link: Link, mode: Mode, ga: &GaParams) -> Result<OptimizeOutput> {
    let cfg = cfg.clone().validated()?;
    let objective = rate_objective(&cfg, link, mode)?;
    let (k, q) = angle_gains(&cfg.angles, link);
    let aligned = aligned_phases(k, q, cfg.n, cfg.bits)?;
    let result = ga_optimize(&objective, cfg.n, cfg.bits, ga, std::slice::from_ref(&aligned))?;

    let random_count = 100;
    let random: Vec<f64> = (0..random_count as u64)
        .map(|i| random_phases(cfg.n, cfg.bits, ga.seed.wrapping_add(i)).map(|p| objective(&p)))
        .collect::<Result<_>>()?;
    let baselines = Baselines {
        aligned: objective(&aligned),
        zero: objective(&PhaseConfig::zeros(cfg.n, cfg.bits)),
        random_mean: random.iter().sum::<f64>() / random_count as f64,
        random_best: random.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        random_count,
    };
    let summary = OptimizeSummary {
        schema: OPTIMIZE_SCHEMA.to_owned(),
        link,
        mode,
        bits: cfg.bits,
        ga: *ga,
        best_levels: result.best.levels().unwrap_or_default(),
        best_objective: result.best_objective,
        f_abs2: closed_form::f_abs2(&cfg, link, &result.best)?,
        evaluations: result.evaluations,
        baselines,
    };
    Ok(OptimizeOutput { result, summary })
}

impl OptimizeOutput {
    pub fn history_csv(&self) -> String {
        let mut out = String::from("generation,best_objective\n");
        for (g, v) in self.result.history.iter().enumerate() {
            out.push_str(&format!("{g},{v:?}\n"));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_ga() -> GaParams {
        GaParams { population: 20, generations: 10, ..GaParams::default() }
    }

    fn small() -> SystemConfig {
        SystemConfig { m: 4, n: 16, ..SystemConfig::default() }
    }

    #[test]
    fn nine_points_two_modes_eighteen_rows() {
        let spec = SweepSpec { ga: quick_ga(), ..SweepSpec::new(Link::Up, vec![Mode::Active, Mode::Passive]) };
        let out = run_sweep(&spec, &small()).unwrap();
        assert_eq!(out.rows.len(), 18);
        assert_eq!(out.summary.powers_dbm, vec![10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]);
        assert_eq!(out.to_csv().unwrap().lines().count(), 19);
    }

    #[test]
    fn power_points_tolerate_rounding() {
        let spec = SweepSpec {
            power_start_dbm: 0.0,
            power_end_dbm: 0.3,
            power_step_db: 0.1,
            ..SweepSpec::new(Link::Up, vec![Mode::Active])
        };
        assert_eq!(spec.power_points().len(), 4);
        let single = SweepSpec { power_end_dbm: 10.0, ..SweepSpec::new(Link::Up, vec![Mode::Active]) };
        assert_eq!(single.power_points(), vec![10.0]);
    }

    #[test]
    fn malformed_specs_rejected() {
        let base = SweepSpec::new(Link::Down, vec![Mode::Active]);
        for bad in [
            SweepSpec { power_start_dbm: 30.0, power_end_dbm: 10.0, ..base.clone() },
            SweepSpec { power_step_db: 0.0, ..base.clone() },
            SweepSpec { power_step_db: f64::NAN, ..base.clone() },
            SweepSpec { modes: vec![], ..base.clone() },
            SweepSpec { trials: 50, ..base.clone() },
        ] {
            assert!(run_sweep(&bad, &small()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn infeasible_points_are_marked_not_dropped() {
        // 16 elements: active overhead ≈ 6.66 mW (8.2 dBm), passive 1.6 mW (2 dBm)
        let spec = SweepSpec {
            power_start_dbm: 0.0,
            power_end_dbm: 10.0,
            phase_policy: PhasePolicy::Aligned,
            ..SweepSpec::new(Link::Up, vec![Mode::Active, Mode::Passive])
        };
        let out = run_sweep(&spec, &small()).unwrap();
        let csv = out.to_csv().unwrap();
        assert_eq!(out.rows.len(), 6);
        assert_eq!(out.summary.infeasible_points, vec![(Mode::Active, 2), (Mode::Passive, 1)]);
        assert!(csv.lines().nth(1).unwrap().starts_with("0.0,active,infeasible,infeasible,infeasible,"));
        assert!(!out.summary.all_infeasible);
    }

    #[test]
    fn csv_round_trip() {
        let spec = SweepSpec {
            power_start_dbm: 5.0,
            power_end_dbm: 20.0,
            trials: 200,
            phase_policy: PhasePolicy::Random,
            ..SweepSpec::new(Link::Down, vec![Mode::Active, Mode::Passive])
        };
        let out = run_sweep(&spec, &small()).unwrap();
        let back = parse_sweep_csv(&out.to_csv().unwrap()).unwrap();
        assert_eq!(back, out.rows);
        assert!(parse_sweep_csv("a,b\n1,2\n").is_err());
        assert!(parse_sweep_csv(&format!("{}\n1,active,x,,,1,1,1,1\n", CSV_COLUMNS.join(","))).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = SweepSpec {
            trials: 200,
            seed: 3,
            ga: quick_ga(),
            ..SweepSpec::new(Link::Up, vec![Mode::Active, Mode::Passive])
        };
        let a = run_sweep(&spec, &small()).unwrap();
        let b = run_sweep(&spec, &small()).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
    }

    #[test]
    fn crossover_detection() {
        let p = [10.0, 15.0, 20.0, 25.0];
        let c = detect_crossover(&p, &[0.0, 1.0, 3.0, 5.0], &[0.5, 1.5, 2.0, 2.5]);
        assert_eq!(c.sign_changes, 1);
        assert_eq!(c.bracket_dbm, Some([15.0, 20.0]));
        assert_eq!((c.low_end_sign, c.high_end_sign), (-1, 1));
        let none = detect_crossover(&p, &[2.0; 4], &[1.0; 4]);
        assert_eq!(none.sign_changes, 0);
        assert_eq!(none.bracket_dbm, None);
        let twice = detect_crossover(&p, &[0.0, 2.0, 0.0, 2.0], &[1.0; 4]);
        assert_eq!(twice.sign_changes, 3);
    }

    #[test]
    fn optimized_policy_records_ga_run() {
        let spec = SweepSpec { ga: quick_ga(), ..SweepSpec::new(Link::Up, vec![Mode::Active]) };
        let out = run_sweep(&spec, &small()).unwrap();
        let run = out.summary.optimizer.clone().unwrap();
        assert_eq!(run.power_dbm, 30.0);
        assert_eq!(run.mode, Mode::Active);
        assert_eq!(run.evaluations, 20 * 11);
    }

    #[test]
    fn optimize_beats_baselines() {
        let out = run_optimize(&small(), Link::Down, Mode::Active, &quick_ga().with_seed(2)).unwrap();
        let s = &out.summary;
        assert!(s.best_objective >= s.baselines.aligned);
        assert!(s.best_objective >= s.baselines.zero);
        assert!(s.best_objective > s.baselines.random_mean);
        assert_eq!(out.history_csv().lines().count(), 12);
    }
}
