//! Rician channel synthesis.
//!
//! Uplink: `H_U` is `M×N` (RIS → BS) and `g_U` the user → RIS column.
//! Downlink: `H_D` is `N×M` (BS → RIS) and `g_D` the RIS → user row, stored
//! as a length-`N` vector.
//!
//! Random draws consume the stream in a fixed order: the entries of `H` in
//! row-major order (real part, then imaginary part), then the entries of `g`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array::{steering_vector, Link};
use crate::config::SystemConfig;
use crate::error::Result;

/// Counter-based substreams: trial `i` of seed `s` always sees the same
/// random numbers, however trials are scheduled.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    base: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64) -> Self {
        Self { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }
}

/// Circularly-symmetric `CN(0, 1)` sample.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One random draw of `(H, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Array2<Complex64>,
    pub g: Array1<Complex64>,
    pub link: Link,
}

impl ChannelRealization {
    pub fn zeros(cfg: &SystemConfig, link: Link) -> Self {
        let shape = match link {
            Link::Up => (cfg.m, cfg.n),
            Link::Down => (cfg.n, cfg.m),
        };
        Self { h: Array2::zeros(shape), g: Array1::zeros(cfg.n), link }
    }
}

/// LoS components `(H̄, ḡ)` of one link.
///
/// Uplink: `H̄ = a_M(BS arrival) a_N^H(RIS departure)`, `ḡ = a_N(RIS arrival)`.
/// Downlink: `H̄ = a_N(RIS arrival) a_M^H(BS departure)`, `ḡ = a_N^H(RIS departure)`.
pub fn los_components(cfg: &SystemConfig, link: Link) -> Result<(Array2<Complex64>, Array1<Complex64>)> {
    let a = &cfg.angles;
    let (rows, cols, gbar) = match link {
        Link::Up => {
            let rows = steering_vector(cfg.m, a.bs_arrival.azimuth, a.bs_arrival.elevation)?;
            let cols = steering_vector(cfg.n, a.ris_departure_bs.azimuth, a.ris_departure_bs.elevation)?;
            let g = steering_vector(cfg.n, a.ris_arrival_user.azimuth, a.ris_arrival_user.elevation)?;
            (rows, cols, g.into_inner())
        }
        Link::Down => {
            let rows = steering_vector(cfg.n, a.ris_arrival_bs.azimuth, a.ris_arrival_bs.elevation)?;
            let cols = steering_vector(cfg.m, a.bs_departure.azimuth, a.bs_departure.elevation)?;
            let g = steering_vector(cfg.n, a.ris_departure_user.azimuth, a.ris_departure_user.elevation)?;
            (rows, cols, g.into_inner().into_iter().map(|c| c.conj()).collect())
        }
    };
    let (r, c) = (rows.entries(), cols.entries());
    let hbar = Array2::from_shape_fn((r.len(), c.len()), |(i, j)| r[i] * c[j].conj());
    Ok((hbar, Array1::from(gbar)))
}

/// Precomputed LoS parts and Rician weights for repeated sampling.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    link: Link,
    hbar: Array2<Complex64>,
    gbar: Array1<Complex64>,
    h_los: f64,
    h_nlos: f64,
    g_los: f64,
    g_nlos: f64,
}

impl ChannelSampler {
    pub fn new(cfg: &SystemConfig, link: Link) -> Result<Self> {
        let (hbar, gbar) = los_components(cfg, link)?;
        let p = cfg.link(link);
        let split = |scale: f64, k: f64| ((scale * k / (k + 1.0)).sqrt(), (scale / (k + 1.0)).sqrt());
        let (h_los, h_nlos) = split(p.alpha, p.k_bs);
        let (g_los, g_nlos) = split(p.beta, p.k_user);
        Ok(Self { link, hbar, gbar, h_los, h_nlos, g_los, g_nlos })
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let mut out = ChannelRealization {
            h: Array2::zeros(self.hbar.raw_dim()),
            g: Array1::zeros(self.gbar.raw_dim()),
            link: self.link,
        };
        self.sample_into(&mut out, rng);
        out
    }

    /// Overwrites `out` with a fresh draw; `out` must have this link's shape.
    pub fn sample_into<R: Rng + ?Sized>(&self, out: &mut ChannelRealization, rng: &mut R) {
        debug_assert_eq!(out.h.raw_dim(), self.hbar.raw_dim());
        out.link = self.link;
        for (h, &los) in out.h.iter_mut().zip(self.hbar.iter()) {
            *h = los * self.h_los + complex_normal(rng) * self.h_nlos;
        }
        for (g, &los) in out.g.iter_mut().zip(self.gbar.iter()) {
            *g = los * self.g_los + complex_normal(rng) * self.g_nlos;
        }
    }
}

/// `H = √α(√(K/(K+1))·H̄ + √(1/(K+1))·H̃)` and likewise for `g`.
pub fn sample_channel<R: Rng + ?Sized>(cfg: &SystemConfig, link: Link, rng: &mut R) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(cfg, link)?.sample(rng))
}
