//! `ris-sim`: power sweeps, moment validation and phase optimization.
//!
//! Exit status: 0 success, 1 usage or input error, 2 validation failure,
//! 3 power budget infeasible at every requested point.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ris_core::array::{aligned_phases, angle_gains};
use ris_core::closed_form::split_budget;
use ris_core::config::dbm_to_watts;
use ris_core::experiment::{run_optimize, run_sweep, PhasePolicy, SweepSpec};
use ris_core::optimizer::{random_phases, GaParams};
use ris_core::plot::{emit_plot, PlotColumns};
use ris_core::validation::validate_all;
use ris_core::{Error, Link, Mode, PhaseConfig, SystemConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "ris-sim", version, about = "Active and passive RIS rate analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate versus total power budget.
    Sweep(SweepArgs),
    /// Sweep both modes and report where active overtakes passive.
    Compare(SweepArgs),
    /// Check closed-form moments and rates against Monte-Carlo.
    Validate(ValidateArgs),
    /// Run the genetic phase-shift optimizer.
    Optimize(OptimizeArgs),
    /// Render columns of a sweep CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    /// System configuration JSON; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's phase resolution.
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn load(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                SystemConfig::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SystemConfig::default(),
        };
        if let Some(bits) = self.bits {
            cfg.bits = bits;
        }
        Ok(cfg.validated()?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Up,
    Down,
}

impl From<LinkArg> for Link {
    fn from(l: LinkArg) -> Self {
        match l {
            LinkArg::Up => Link::Up,
            LinkArg::Down => Link::Down,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Active,
    Passive,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Active => vec![Mode::Active],
            ModeArg::Passive => vec![Mode::Passive],
            ModeArg::Both => vec![Mode::Active, Mode::Passive],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Optimized,
    Aligned,
    Random,
    Zero,
}

impl From<PolicyArg> for PhasePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Optimized => PhasePolicy::Optimized,
            PolicyArg::Aligned => PhasePolicy::Aligned,
            PolicyArg::Random => PhasePolicy::Random,
            PolicyArg::Zero => PhasePolicy::Zero,
        }
    }
}

#[derive(Args)]
struct GaArgs {
    #[arg(long, default_value_t = 100)]
    population: usize,
    #[arg(long, default_value_t = 200)]
    generations: usize,
}

impl GaArgs {
    fn params(&self, seed: u64) -> GaParams {
        GaParams { population: self.population, generations: self.generations, seed, ..GaParams::default() }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "up")]
    link: LinkArg,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// First total power budget, dBm.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    power_start: f64,
    /// Last total power budget, dBm.
    #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
    power_end: f64,
    #[arg(long, default_value_t = 5.0)]
    power_step: f64,
    /// Monte-Carlo trials per point; 0 skips the Monte-Carlo columns.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, value_enum, default_value = "optimized")]
    phase_policy: PolicyArg,
    #[command(flatten)]
    ga: GaArgs,
    /// CSV destination; the JSON summary goes next to it with a `.json`
    /// extension. Without it the CSV is written to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Second-moment trials; fourth moments use ten times as many, rates a tenth.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Link whose LoS alignment sets the phases under test.
    #[arg(long, value_enum, default_value = "up")]
    link: LinkArg,
    #[arg(long, value_enum, default_value = "aligned")]
    phase_policy: PolicyArg,
    /// Report JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "up")]
    link: LinkArg,
    #[arg(long, value_enum, default_value = "active")]
    mode: ModeArg,
    /// Total power budget in dBm, split as in a sweep. Without it the
    /// configuration's transmit powers are used as given.
    #[arg(long, allow_negative_numbers = true)]
    power: Option<f64>,
    #[command(flatten)]
    ga: GaArgs,
    /// Summary JSON destination; the history CSV goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV to read.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "total_power_dbm")]
    x: String,
    /// Column to plot; repeatable.
    #[arg(long, default_values_t = ["closed_form_rate".to_owned()])]
    y: Vec<String>,
    /// Column that splits rows into series; pass an empty string for none.
    #[arg(long, default_value = "mode")]
    group: String,
    #[arg(long, default_value = "")]
    title: String,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn sweep(args: SweepArgs, force_both: bool) -> Result<u8> {
    let cfg = args.common.load()?;
    let mode = if force_both { ModeArg::Both } else { args.mode };
    let spec = SweepSpec {
        link: args.link.into(),
        power_start_dbm: args.power_start,
        power_end_dbm: args.power_end,
        power_step_db: args.power_step,
        modes: mode.modes(),
        phase_policy: args.phase_policy.into(),
        trials: args.trials,
        seed: args.common.seed,
        ga: args.ga.params(args.common.seed),
    };
    let out = run_sweep(&spec, &cfg)?;
    let csv = out.to_csv()?;
    match &args.out {
        Some(path) => {
            write(path, &csv)?;
            write(&path.with_extension("json"), &out.summary_json()?)?;
        }
        None => print!("{csv}"),
    }
    if let Some(svg) = &args.plot {
        let title = format!("{}link rate vs total power", spec.link.as_str());
        write(svg, &emit_plot(&csv, &PlotColumns::sweep_default(), &title)?)?;
    }
    if let Some(c) = &out.summary.crossover {
        match c.bracket_dbm {
            Some([lo, hi]) => {
                eprintln!("active overtakes passive between {lo} and {hi} dBm ({} sign change(s))", c.sign_changes)
            }
            None => eprintln!("no active/passive crossover in the sweep"),
        }
    }
    if out.summary.all_infeasible {
        eprintln!("power budget infeasible at every sweep point");
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(0)
}

fn policy_phases(policy: PolicyArg, cfg: &SystemConfig, link: Link, seed: u64) -> Result<PhaseConfig> {
    let (k, q) = angle_gains(&cfg.angles, link);
    Ok(match policy {
        PolicyArg::Aligned => aligned_phases(k, q, cfg.n, cfg.bits)?,
        PolicyArg::Random => random_phases(cfg.n, cfg.bits, seed)?,
        PolicyArg::Zero => PhaseConfig::zeros(cfg.n, cfg.bits),
        PolicyArg::Optimized => bail!("validate supports the aligned, random and zero phase policies"),
    })
}

fn validate(args: ValidateArgs) -> Result<u8> {
    let cfg = args.common.load()?;
    let phases = policy_phases(args.phase_policy, &cfg, args.link.into(), args.common.seed)?;
    let report = validate_all(&cfg, &phases, args.trials, args.common.seed)?;
    print!("{}", report.render_table());
    if let Some(path) = &args.out {
        write(path, &report.to_json_pretty()?)?;
    }
    Ok(if report.exact_rows_pass { 0 } else { EXIT_VALIDATION })
}

fn optimize(args: OptimizeArgs) -> Result<u8> {
    let mut cfg = args.common.load()?;
    let link: Link = args.link.into();
    let mode = match args.mode {
        ModeArg::Active => Mode::Active,
        ModeArg::Passive => Mode::Passive,
        ModeArg::Both => bail!("optimize needs a single mode"),
    };
    if let Some(dbm) = args.power {
        match split_budget(dbm_to_watts(dbm), &cfg, mode) {
            Ok(budget) => cfg = budget.apply(&cfg, link),
            Err(e @ Error::InfeasibleBudget { .. }) => {
                eprintln!("{e}");
                return Ok(EXIT_INFEASIBLE);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let out = match run_optimize(&cfg, link, mode, &args.ga.params(args.common.seed)) {
        Err(e @ Error::InfeasibleBudget { .. }) => {
            eprintln!("{e}");
            return Ok(EXIT_INFEASIBLE);
        }
        other => other?,
    };
    let json = out.summary_json()?;
    match &args.out {
        Some(path) => {
            write(path, &json)?;
            write(&sibling(path, ".history.csv"), &out.history_csv())?;
        }
        None => println!("{json}"),
    }
    Ok(0)
}

fn plot(args: PlotArgs) -> Result<u8> {
    let csv = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let y: Vec<&str> = args.y.iter().map(String::as_str).collect();
    let group = Some(args.group.as_str()).filter(|g| !g.is_empty());
    let svg = emit_plot(&csv, &PlotColumns::new(&args.x, &y, group), &args.title)?;
    write(&args.out, &svg)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a, false),
        Command::Compare(a) => sweep(a, true),
        Command::Validate(a) => validate(a),
        Command::Optimize(a) => optimize(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
