//! Uniform planar array geometry.
//!
//! Every array in the model is a `√X × √X` UPA with half-wavelength spacing.
//! Elements are enumerated with `n = x·√X + y` (x outer, y inner); the LoS
//! channel builders and the array-gain scalar share this map.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Up,
    Down,
}

impl Link {
    pub fn as_str(self) -> &'static str {
        match self {
            Link::Up => "up",
            Link::Down => "down",
        }
    }
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" | "uplink" => Ok(Link::Up),
            "down" | "downlink" => Ok(Link::Down),
            other => Err(Error::Parse(format!("unknown link `{other}`"))),
        }
    }
}

/// Side length of a square array, or an error when `x` is not a perfect square.
pub fn side_length(x: usize) -> Result<usize> {
    if x == 0 {
        return Err(Error::NotPerfectSquare(x));
    }
    let mut side = (x as f64).sqrt().round() as usize;
    // Guard against float rounding for large inputs.
    while side * side > x {
        side -= 1;
    }
    while (side + 1) * (side + 1) <= x {
        side += 1;
    }
    if side * side == x {
        Ok(side)
    } else {
        Err(Error::NotPerfectSquare(x))
    }
}

/// Grid coordinates `(x, y)` of element `n` in a UPA with the given side.
#[inline]
pub fn element_coords(n: usize, side: usize) -> (usize, usize) {
    (n / side, n % side)
}

/// Azimuth/elevation pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglePair {
    pub azimuth: f64,
    pub elevation: f64,
}

impl AnglePair {
    pub const ZERO: AnglePair = AnglePair { azimuth: 0.0, elevation: 0.0 };

    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    /// `sin(az)·sin(el)`, the coefficient of the x coordinate.
    fn x_direction(&self) -> f64 {
        self.azimuth.sin() * self.elevation.sin()
    }

    /// `cos(el)`, the coefficient of the y coordinate.
    fn y_direction(&self) -> f64 {
        self.elevation.cos()
    }

    fn normalized(self) -> Self {
        Self { azimuth: self.azimuth.rem_euclid(TAU), elevation: self.elevation.rem_euclid(TAU) }
    }
}

/// All LoS angles of the model.
///
/// Uplink: `ris_arrival_user` is the RIS angle of arrival from the user,
/// `ris_departure_bs` the RIS angle of departure towards the BS and
/// `bs_arrival` the BS-side angle of the RIS-BS channel.
/// Downlink: `ris_arrival_bs` is the RIS-side angle of the BS-RIS channel,
/// `bs_departure` the BS angle of departure and `ris_departure_user` the RIS
/// angle of departure towards the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSet {
    pub ris_arrival_user: AnglePair,
    pub ris_departure_bs: AnglePair,
    pub bs_arrival: AnglePair,
    pub ris_arrival_bs: AnglePair,
    pub bs_departure: AnglePair,
    pub ris_departure_user: AnglePair,
}

impl Default for AngleSet {
    fn default() -> Self {
        Self {
            ris_arrival_user: AnglePair::new(0.6, 1.1),
            ris_departure_bs: AnglePair::new(1.3, 0.7),
            bs_arrival: AnglePair::new(0.4, 1.9),
            ris_arrival_bs: AnglePair::new(1.0, 0.8),
            bs_departure: AnglePair::new(0.5, 1.4),
            ris_departure_user: AnglePair::new(2.1, 1.2),
        }
    }
}

impl AngleSet {
    pub fn all_zero() -> Self {
        Self {
            ris_arrival_user: AnglePair::ZERO,
            ris_departure_bs: AnglePair::ZERO,
            bs_arrival: AnglePair::ZERO,
            ris_arrival_bs: AnglePair::ZERO,
            bs_departure: AnglePair::ZERO,
            ris_departure_user: AnglePair::ZERO,
        }
    }

    /// Checks finiteness and wraps every angle into `[0, 2π)`.
    pub fn validated(self) -> Result<Self> {
        let pairs = self.pairs();
        if pairs.iter().any(|p| !p.azimuth.is_finite() || !p.elevation.is_finite()) {
            return Err(Error::Config("angles must be finite".into()));
        }
        Ok(Self {
            ris_arrival_user: self.ris_arrival_user.normalized(),
            ris_departure_bs: self.ris_departure_bs.normalized(),
            bs_arrival: self.bs_arrival.normalized(),
            ris_arrival_bs: self.ris_arrival_bs.normalized(),
            bs_departure: self.bs_departure.normalized(),
            ris_departure_user: self.ris_departure_user.normalized(),
        })
    }

    fn pairs(&self) -> [AnglePair; 6] {
        [
            self.ris_arrival_user,
            self.ris_departure_bs,
            self.bs_arrival,
            self.ris_arrival_bs,
            self.bs_departure,
            self.ris_departure_user,
        ]
    }

    /// Draws every angle uniformly from `[0, 2π)`.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let mut pair = || AnglePair::new(rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU);
        Self {
            ris_arrival_user: pair(),
            ris_departure_bs: pair(),
            bs_arrival: pair(),
            ris_arrival_bs: pair(),
            bs_departure: pair(),
            ris_departure_user: pair(),
        }
    }
}

/// Array response of a UPA, ordered by the `n = x·√X + y` index map.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: Vec<Complex64>,
}

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.entries
    }
}

/// UPA steering vector with `d/λ = 1/2`:
/// entry `(x, y)` is `exp(jπ(x·sinθa·sinθe + y·cosθe))`.
pub fn steering_vector(elements: usize, azimuth: f64, elevation: f64) -> Result<SteeringVector> {
    let side = side_length(elements)?;
    let dir = AnglePair::new(azimuth, elevation);
    let (u, v) = (dir.x_direction(), dir.y_direction());
    let entries = (0..elements)
        .map(|n| {
            let (x, y) = element_coords(n, side);
            if x == 0 && y == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, PI * (x as f64 * u + y as f64 * v))
            }
        })
        .collect();
    Ok(SteeringVector { entries })
}

/// Discrete (or continuous, `bits == 0`) RIS phase configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    thetas: Vec<f64>,
    bits: u32,
}

/// Largest supported quantizer resolution.
pub const MAX_BITS: u32 = 16;

/// Grid step `2π / 2^b`.
pub fn phase_step(bits: u32) -> f64 {
    TAU / (1u64 << bits) as f64
}

/// Nearest level of the `bits`-bit grid for `theta` (any real angle).
/// Exact midpoints resolve to the lower level.
pub fn quantize_level(theta: f64, bits: u32) -> u32 {
    debug_assert!((1..=MAX_BITS).contains(&bits));
    let levels = 1u64 << bits;
    let r = theta.rem_euclid(TAU) / phase_step(bits);
    let idx = (r - 0.5).ceil() as i64;
    idx.rem_euclid(levels as i64) as u32
}

impl PhaseConfig {
    /// Builds a configuration, checking that every phase sits on the grid.
    pub fn new(thetas: Vec<f64>, bits: u32) -> Result<Self> {
        if bits > MAX_BITS {
            return Err(Error::Config(format!("bits must be at most {MAX_BITS}")));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("phases must be finite".into()));
        }
        if bits > 0 {
            let step = phase_step(bits);
            for &t in &thetas {
                let r = t / step;
                if !(0.0..TAU).contains(&t) || (r - r.round()).abs() > 1e-9 {
                    return Err(Error::Config(format!("phase {t} is not on the {bits}-bit grid")));
                }
            }
        }
        Ok(Self { thetas, bits })
    }

    /// All-zero phases.
    pub fn zeros(n: usize, bits: u32) -> Self {
        Self { thetas: vec![0.0; n], bits }
    }

    /// Builds a quantized configuration from level indices in `0..2^bits`.
    pub fn from_levels(levels: &[u32], bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::Config(format!("bits must be in 1..={MAX_BITS}")));
        }
        let step = phase_step(bits);
        let count = 1u64 << bits;
        let thetas = levels
            .iter()
            .map(|&l| {
                if u64::from(l) < count {
                    Ok(f64::from(l) * step)
                } else {
                    Err(Error::Config(format!("level {l} outside 0..{count}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { thetas, bits })
    }

    /// Continuous phases, wrapped into `[0, 2π)`.
    pub fn continuous(thetas: Vec<f64>) -> Result<Self> {
        Self::new(thetas.into_iter().map(|t| t.rem_euclid(TAU)).collect(), 0)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Level indices, or `None` for continuous phases.
    pub fn levels(&self) -> Option<Vec<u32>> {
        if self.bits == 0 {
            return None;
        }
        let step = phase_step(self.bits);
        Some(self.thetas.iter().map(|t| (t / step).round() as u32).collect())
    }

    /// Unit phasors `e^{jθ_n}`.
    pub fn phasors(&self) -> Vec<Complex64> {
        self.thetas.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }
}

/// Array-gain scalar `Σ_n exp(jπ(x_n·k + y_n·q) + jθ_n)` coupling the RIS
/// phases to the LoS geometry (`f_U` uplink, `f_D` downlink).
pub fn f_scalar(phases: &PhaseConfig, k: f64, q: f64) -> Result<Complex64> {
    let side = side_length(phases.len())?;
    Ok(phases
        .thetas()
        .iter()
        .enumerate()
        .map(|(n, &theta)| {
            let (x, y) = element_coords(n, side);
            Complex64::from_polar(1.0, PI * (x as f64 * k + y as f64 * q) + theta)
        })
        .sum())
}

/// Geometry coefficients `(k, q)` (uplink) or `(ℓ, z)` (downlink) entering
/// the array-gain scalar.
///
/// The downlink departure angle in `ℓ, z` is the RIS departure towards the
/// user, which makes `f_D` equal `ḡ_D Φ_D a_N(ψ_r)` term by term.
pub fn angle_gains(angles: &AngleSet, link: Link) -> (f64, f64) {
    let (arrival, departure) = match link {
        Link::Up => (angles.ris_arrival_user, angles.ris_departure_bs),
        Link::Down => (angles.ris_arrival_bs, angles.ris_departure_user),
    };
    (arrival.x_direction() - departure.x_direction(), arrival.y_direction() - departure.y_direction())
}

/// Phases that cancel the LoS phase progression, `θ_n = −π(x_n·k + y_n·q)`,
/// rounded to the nearest `bits`-bit level (`bits == 0` keeps them exact).
pub fn aligned_phases(k: f64, q: f64, n: usize, bits: u32) -> Result<PhaseConfig> {
    let side = side_length(n)?;
    if bits > MAX_BITS {
        return Err(Error::Config(format!("bits must be at most {MAX_BITS}")));
    }
    let raw = (0..n).map(|i| {
        let (x, y) = element_coords(i, side);
        (-PI * (x as f64 * k + y as f64 * q)).rem_euclid(TAU)
    });
    if bits == 0 {
        PhaseConfig::continuous(raw.collect())
    } else {
        let levels: Vec<u32> = raw.map(|t| quantize_level(t, bits)).collect();
        PhaseConfig::from_levels(&levels, bits)
    }
}
