//! Brute-force Monte-Carlo oracle.
//!
//! Everything here works on raw channel draws. Moment estimators never touch
//! the closed-form moments; the instantaneous SNRs only borrow the
//! statistically fixed amplification factor and MRT coefficient, which are
//! part of the transmission scheme rather than of the rate approximation.
//!
//! Trials are grouped into fixed-size chunks. Each chunk is evaluated
//! sequentially from its own substreams and the chunk statistics are merged in
//! chunk order, so estimates are bit-identical for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{Link, PhaseConfig};
use crate::channel::{ChannelRealization, ChannelSampler, TrialStreams};
use crate::closed_form::{self, log2_1p, Mode};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

const CHUNK: u64 = 1024;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// `(target − mean) / std_error`; zero when both coincide exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = target - self.mean;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    pub fn relative_error(&self, target: f64) -> f64 {
        (self.mean - target).abs() / target.abs()
    }
}

/// Expectation estimated by [`estimate_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MomentKind {
    /// `E‖H_U Φ_U g_U‖²`
    Delta,
    /// `E‖H_U Φ_U g_U‖⁴`
    Xi,
    /// `E‖H_U^H H_U Φ_U g_U‖²`
    Nu,
    /// `E‖g_D Φ_D H_D‖²`
    RhoDen,
    /// `E‖Φ_D H_D H_D^H Φ_D^H g_D^H‖²`
    Tau,
    /// `E‖g_D Φ_D H_D‖⁴`
    Zeta,
}

impl MomentKind {
    pub const ALL: [MomentKind; 6] =
        [MomentKind::Delta, MomentKind::Xi, MomentKind::Nu, MomentKind::RhoDen, MomentKind::Tau, MomentKind::Zeta];

    pub fn link(self) -> Link {
        match self {
            MomentKind::Delta | MomentKind::Xi | MomentKind::Nu => Link::Up,
            MomentKind::RhoDen | MomentKind::Tau | MomentKind::Zeta => Link::Down,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MomentKind::Delta => "DELTA",
            MomentKind::Xi => "XI",
            MomentKind::Nu => "NU",
            MomentKind::RhoDen => "RHO_DEN",
            MomentKind::Tau => "TAU",
            MomentKind::Zeta => "ZETA",
        }
    }

    pub fn is_fourth_order(self) -> bool {
        matches!(self, MomentKind::Xi | MomentKind::Zeta)
    }
}

/// Norms of the cascaded channel for one draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cascade {
    /// `‖HΦg‖²` (uplink) or `‖gΦH‖²` (downlink).
    pub gain: f64,
    /// `‖H^H HΦg‖²` (uplink) or `‖H (gΦH)^H‖²` (downlink).
    pub quadratic: f64,
    /// `‖g‖²`.
    pub g_norm2: f64,
}

/// Evaluates [`Cascade`] from a realization and unit phasors `e^{jθ}`.
pub fn cascade(real: &ChannelRealization, phasors: &[Complex64]) -> Cascade {
    let h = &real.h;
    let (rows, cols) = h.dim();
    let g_norm2 = real.g.iter().map(|z| z.norm_sqr()).sum();
    let h = h.as_slice().expect("channel matrix is contiguous");
    match real.link {
        Link::Up => {
            // u = Φg, y = H u, z = H^H y
            let u: Vec<Complex64> = real.g.iter().zip(phasors).map(|(g, p)| g * p).collect();
            let mut y = vec![Complex64::new(0.0, 0.0); rows];
            for (row, yi) in h.chunks_exact(cols).zip(y.iter_mut()) {
                *yi = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            }
            let mut z = vec![Complex64::new(0.0, 0.0); cols];
            for (row, yi) in h.chunks_exact(cols).zip(&y) {
                for (zj, a) in z.iter_mut().zip(row) {
                    *zj += a.conj() * yi;
                }
            }
            Cascade {
                gain: y.iter().map(|c| c.norm_sqr()).sum(),
                quadratic: z.iter().map(|c| c.norm_sqr()).sum(),
                g_norm2,
            }
        }
        Link::Down => {
            // v = gΦ (row), w = v H, t = H w^H
            let mut w = vec![Complex64::new(0.0, 0.0); cols];
            for ((row, g), p) in h.chunks_exact(cols).zip(real.g.iter()).zip(phasors) {
                let v = g * p;
                for (wj, a) in w.iter_mut().zip(row) {
                    *wj += v * a;
                }
            }
            let quadratic = h
                .chunks_exact(cols)
                .map(|row| row.iter().zip(&w).map(|(a, b)| a * b.conj()).sum::<Complex64>().norm_sqr())
                .sum();
            Cascade { gain: w.iter().map(|c| c.norm_sqr()).sum(), quadratic, g_norm2 }
        }
    }
}

// Welford state, merged with Chan's formula.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Running) -> Running {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        Running { n, mean, m2 }
    }
}

/// Sample mean of `f` over `trials` channel draws; trial `i` uses substream `i`.
pub fn estimate_with<F>(
    sampler: &ChannelSampler,
    cfg: &SystemConfig,
    trials: u64,
    seed: u64,
    f: F,
) -> MonteCarloEstimate
where
    F: Fn(&ChannelRealization) -> f64 + Sync,
{
    let streams = TrialStreams::new(seed);
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Running> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = ChannelRealization::zeros(cfg, sampler.link());
            let mut acc = Running::default();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                sampler.sample_into(&mut buf, &mut streams.stream(t));
                acc.push(f(&buf));
            }
            acc
        })
        .collect();
    let total = parts.into_iter().fold(Running::default(), Running::merge);
    let std_error = if total.n > 1 { (total.m2 / (total.n - 1) as f64 / total.n as f64).sqrt() } else { 0.0 };
    MonteCarloEstimate { mean: total.mean, std_error, trials, seed }
}

fn check_phases(cfg: &SystemConfig, phases: &PhaseConfig) -> Result<()> {
    if phases.len() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, actual: phases.len() });
    }
    Ok(())
}

/// Statistical scaling applied by the transmission scheme for one draw.
#[derive(Debug, Clone, Copy)]
struct Scheme {
    link: Link,
    pt: f64,
    /// η (uplink) or η with MRT coefficient μ (downlink).
    eta: f64,
    mu: f64,
    sigma2_v: f64,
    sigma2_n: f64,
}

impl Scheme {
    fn new(cfg: &SystemConfig, link: Link, mode: Mode, phases: &PhaseConfig) -> Result<Self> {
        let p = cfg.link(link);
        let (eta, mu, sigma2_v) = match (link, mode) {
            (Link::Up, Mode::Active) => (closed_form::eta_uplink(cfg)?, 0.0, p.sigma2_v),
            (Link::Up, Mode::Passive) => (1.0, 0.0, 0.0),
            (Link::Down, Mode::Active) => {
                let f2 = closed_form::f_abs2(cfg, link, phases)?;
                let (mu, eta) = closed_form::mu_eta_downlink(cfg, f2)?;
                (eta, mu, p.sigma2_v)
            }
            (Link::Down, Mode::Passive) => {
                let f2 = closed_form::f_abs2(cfg, link, phases)?;
                (1.0, closed_form::mu_downlink_passive(cfg, f2)?, 0.0)
            }
        };
        Ok(Self { link, pt: p.pt, eta, mu, sigma2_v, sigma2_n: p.sigma2_n })
    }

    fn snr(&self, c: &Cascade) -> f64 {
        let e2 = self.eta * self.eta;
        match self.link {
            Link::Up => {
                if c.gain == 0.0 {
                    return 0.0;
                }
                self.pt * e2 * c.gain * c.gain / (e2 * c.quadratic * self.sigma2_v + self.sigma2_n * c.gain)
            }
            Link::Down => self.mu * e2 * e2 * c.gain * c.gain / (e2 * c.g_norm2 * self.sigma2_v + self.sigma2_n),
        }
    }
}

/// Instantaneous uplink MRC SNR
/// `p_t η² ‖HΦg‖⁴ / (η² ‖g^HΦ^H H^H HΦ‖² σ²_V + σ²_N ‖HΦg‖²)`;
/// the passive RIS uses `η = 1`, `σ²_V = 0` and `p'_t = pt_u`.
pub fn snr_uplink_instant(
    real: &ChannelRealization,
    phases: &PhaseConfig,
    cfg: &SystemConfig,
    mode: Mode,
) -> Result<f64> {
    check_phases(cfg, phases)?;
    let scheme = Scheme::new(cfg, Link::Up, mode, phases)?;
    Ok(scheme.snr(&cascade(real, &phases.phasors())))
}

/// Instantaneous downlink MRT SNR
/// `μ η⁴ ‖gΦH‖⁴ / (η² ‖gΦ‖² σ²_V + σ²_N)`.
pub fn snr_downlink_instant(
    real: &ChannelRealization,
    phases: &PhaseConfig,
    cfg: &SystemConfig,
    mode: Mode,
) -> Result<f64> {
    check_phases(cfg, phases)?;
    let scheme = Scheme::new(cfg, Link::Down, mode, phases)?;
    Ok(scheme.snr(&cascade(real, &phases.phasors())))
}

/// Ergodic rate `E{log₂(1+γ)}` over i.i.d. channel draws.
pub fn ergodic_rate(
    cfg: &SystemConfig,
    phases: &PhaseConfig,
    link: Link,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials < 100 {
        return Err(Error::InvalidParams(format!("ergodic rate needs at least 100 trials, got {trials}")));
    }
    check_phases(cfg, phases)?;
    let scheme = Scheme::new(cfg, link, mode, phases)?;
    let sampler = ChannelSampler::new(cfg, link)?;
    let phasors = phases.phasors();
    Ok(estimate_with(&sampler, cfg, trials, seed, |real| log2_1p(scheme.snr(&cascade(real, &phasors)))))
}

/// Direct sample mean of the expectation named by `kind`.
pub fn estimate_moment(
    kind: MomentKind,
    cfg: &SystemConfig,
    phases: &PhaseConfig,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials < 1000 {
        return Err(Error::InvalidParams(format!("moment estimates need at least 1000 trials, got {trials}")));
    }
    check_phases(cfg, phases)?;
    let sampler = ChannelSampler::new(cfg, kind.link())?;
    let phasors = phases.phasors();
    let fourth = kind.is_fourth_order();
    let quadratic = matches!(kind, MomentKind::Nu | MomentKind::Tau);
    Ok(estimate_with(&sampler, cfg, trials, seed, |real| {
        let c = cascade(real, &phasors);
        if quadratic {
            c.quadratic
        } else if fourth {
            c.gain * c.gain
        } else {
            c.gain
        }
    }))
}
