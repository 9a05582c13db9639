//! Closed-form achievable rates, the channel moments they are built from,
//! and power-budget accounting.
//!
//! The lowest layer takes `|f|²` instead of a phase configuration: every
//! closed-form quantity depends on the RIS phases only through it. The
//! `*_for_phases` adapters compute `|f|²` from a [`PhaseConfig`].
//!
//! Uplink and downlink moments share one algebraic form in
//! ([`LinkParams::k_bs`], [`LinkParams::k_user`], α, β):
//!
//! * `E‖HΦg‖²` (δ, ϱ) — exact,
//! * `E‖HΦg‖⁴` (ξ, ζ) — exact,
//! * the Wishart quadratic form (ν, τ) — exact when the BS-side hop has no
//!   LoS, a central-Wishart approximation otherwise.
//!
//! The downlink power normalization `E‖g_D Φ_D H_D‖²` equals ϱ.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::array::{angle_gains, f_scalar, Link, PhaseConfig};
use crate::config::{LinkParams, SystemConfig};
use crate::error::{Error, Result};

/// RIS operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Active,
    Passive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Active => "active",
            Mode::Passive => "passive",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(Mode::Active),
            "passive" => Ok(Mode::Passive),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// `log₂(1 + snr)`, accurate for tiny `snr`.
#[inline]
pub fn log2_1p(snr: f64) -> f64 {
    snr.ln_1p() / LN_2
}

/// `|f|²` of the given link for `phases`.
pub fn f_abs2(cfg: &SystemConfig, link: Link, phases: &PhaseConfig) -> Result<f64> {
    if phases.len() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, actual: phases.len() });
    }
    let (k, q) = angle_gains(&cfg.angles, link);
    Ok(f_scalar(phases, k, q)?.norm_sqr())
}

// ---- shared moment forms -------------------------------------------------

fn second_moment(p: &LinkParams, f2: f64) -> f64 {
    let (m, n) = (p.m as f64, p.n as f64);
    let (kb, ku) = (p.k_bs, p.k_user);
    m * p.composite_gain() * (kb * ku * f2 + (kb + ku + 1.0) * n)
}

/// Fourth moment with the constant of the `|f|²` cross term as a parameter.
/// The exact moment has `constant = 2`.
pub fn fourth_moment_with_constant(p: &LinkParams, f2: f64, constant: f64) -> f64 {
    let (m, n) = (p.m as f64, p.n as f64);
    let (kb, ku) = (p.k_bs, p.k_user);
    let g2 = p.composite_gain().powi(2);
    g2 * (m * m * kb * kb * ku * ku * f2 * f2
        + 2.0 * m * kb * ku * f2 * (2.0 * m * n * kb + m * n * ku + m * n + 2.0 * m + n * ku + n + constant)
        + m * n * n * (ku * ku + 2.0 * kb * ku + 2.0 * kb + 2.0 * ku + 1.0)
        + m * (m + 1.0) * n * (2.0 * kb + 2.0 * ku + 1.0)
        + m * m * n * n * (2.0 * kb * kb + ku * ku + 2.0 * kb * ku + 2.0 * kb + 2.0 * ku + 1.0))
}

/// Coefficient of the cross-term constant in [`fourth_moment_with_constant`].
pub fn fourth_moment_constant_weight(p: &LinkParams, f2: f64) -> f64 {
    2.0 * p.composite_gain().powi(2) * p.m as f64 * p.k_bs * p.k_user * f2
}

fn wishart_quadratic(p: &LinkParams, f2: f64) -> f64 {
    let (m, n) = (p.m as f64, p.n as f64);
    let (kb, ku) = (p.k_bs, p.k_user);
    let ag = p.alpha * p.composite_gain();
    m * m * ag / (kb + 1.0) * (ku * (n + 2.0 * kb * f2 + kb * kb * n * f2) + n + 2.0 * kb * n + kb * kb * n * n)
        + ag * m * n * (ku * n + kb * ku * f2 + n + kb * n)
}

// ---- uplink --------------------------------------------------------------

/// `δ = E‖H_U Φ_U g_U‖²`.
pub fn delta(cfg: &SystemConfig, f2: f64) -> f64 {
    second_moment(&cfg.link(Link::Up), f2)
}

/// `ξ = E‖H_U Φ_U g_U‖⁴`.
pub fn xi(cfg: &SystemConfig, f2: f64) -> f64 {
    fourth_moment_with_constant(&cfg.link(Link::Up), f2, 2.0)
}

/// `ν = E{g^H Φ^H W W Φ g}` with `W = H_U^H H_U`.
pub fn nu(cfg: &SystemConfig, f2: f64) -> f64 {
    wishart_quadratic(&cfg.link(Link::Up), f2)
}

/// Amplification factor fixed by the RIS power budget:
/// `η_U = √(p_r / (N(p_t β_U + σ²_V)))`.
pub fn eta_uplink(cfg: &SystemConfig) -> Result<f64> {
    let p = cfg.link(Link::Up);
    let denom = p.n as f64 * (p.pt * p.beta + p.sigma2_v);
    if !(denom > 0.0) {
        return Err(Error::Config("uplink amplification factor has a zero denominator".into()));
    }
    Ok((p.pr / denom).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UplinkMoments {
    pub delta: f64,
    pub xi: f64,
    pub nu: f64,
    pub f_abs2: f64,
    pub composite_gain: f64,
}

impl UplinkMoments {
    pub fn evaluate(cfg: &SystemConfig, f2: f64) -> Self {
        Self {
            delta: delta(cfg, f2),
            xi: xi(cfg, f2),
            nu: nu(cfg, f2),
            f_abs2: f2,
            composite_gain: cfg.link(Link::Up).composite_gain(),
        }
    }
}

/// Uplink SNR for an arbitrary amplification factor:
/// `p_t η² ξ / (η² ν σ²_V + σ²_N δ)`.
pub fn uplink_snr_with_eta(cfg: &SystemConfig, f2: f64, eta: f64) -> Result<f64> {
    let p = cfg.link(Link::Up);
    let mo = UplinkMoments::evaluate(cfg, f2);
    let e2 = eta * eta;
    let denom = e2 * mo.nu * p.sigma2_v + p.sigma2_n * mo.delta;
    if !(denom > 0.0) {
        return Err(Error::Config("uplink SNR has a zero denominator".into()));
    }
    Ok(p.pt * e2 * mo.xi / denom)
}

/// Active-RIS uplink rate approximation
/// `log₂(1 + p_t p_r ξ / (N(p_t β + σ²_V) δ σ²_N + p_r ν σ²_V))`.
pub fn rate_uplink_active(cfg: &SystemConfig, f2: f64) -> Result<f64> {
    let p = cfg.link(Link::Up);
    let mo = UplinkMoments::evaluate(cfg, f2);
    let denom = p.n as f64 * (p.pt * p.beta + p.sigma2_v) * mo.delta * p.sigma2_n + p.pr * mo.nu * p.sigma2_v;
    if !(denom > 0.0) {
        return Err(Error::Config("uplink rate has a zero denominator".into()));
    }
    Ok(log2_1p(p.pt * p.pr * mo.xi / denom))
}

/// Passive-RIS uplink rate `log₂(1 + p'_t ξ / (σ²_N δ))`, with `p'_t = pt_u`.
pub fn rate_uplink_passive(cfg: &SystemConfig, f2: f64) -> Result<f64> {
    let p = cfg.link(Link::Up);
    if !(p.pt > 0.0) {
        return Err(Error::InfeasibleBudget { total: p.pt, overhead: 0.0 });
    }
    let mo = UplinkMoments::evaluate(cfg, f2);
    Ok(log2_1p(p.pt * mo.xi / (p.sigma2_n * mo.delta)))
}

/// Limit of the active uplink rate as the BS noise vanishes:
/// `log₂(1 + (ξ/ν)·p_t/σ²_V)`.
pub fn rate_uplink_limit_bs_noiseless(cfg: &SystemConfig, f2: f64) -> f64 {
    let p = cfg.link(Link::Up);
    log2_1p(xi(cfg, f2) / nu(cfg, f2) * p.pt / p.sigma2_v)
}

/// Limit of the active uplink rate as the RIS noise vanishes:
/// `log₂(1 + ξ/(N β δ)·p_r/σ²_N)`.
pub fn rate_uplink_limit_ris_noiseless(cfg: &SystemConfig, f2: f64) -> f64 {
    let p = cfg.link(Link::Up);
    log2_1p(xi(cfg, f2) / (p.n as f64 * p.beta * delta(cfg, f2)) * p.pr / p.sigma2_n)
}

// ---- downlink ------------------------------------------------------------

/// `ϱ = E‖g_D Φ_D H_D‖²`, also the MRT power normalization.
pub fn varrho(cfg: &SystemConfig, f2: f64) -> f64 {
    second_moment(&cfg.link(Link::Down), f2)
}

/// `τ = E‖Φ_D H_D H_D^H Φ_D^H g_D^H‖²`.
pub fn tau(cfg: &SystemConfig, f2: f64) -> f64 {
    wishart_quadratic(&cfg.link(Link::Down), f2)
}

/// `ζ = E‖g_D Φ_D H_D‖⁴`.
pub fn zeta(cfg: &SystemConfig, f2: f64) -> f64 {
    fourth_moment_with_constant(&cfg.link(Link::Down), f2, 2.0)
}

/// The downlink fourth moment with `−2` in the cross term, as it is
/// sometimes printed. Kept for adjudication against the Monte-Carlo oracle.
pub fn zeta_as_printed(cfg: &SystemConfig, f2: f64) -> f64 {
    fourth_moment_with_constant(&cfg.link(Link::Down), f2, -2.0)
}

/// `(α_D/(K₃+1))·(K₃ϱ + M β_D N)`, a printed alternative to ϱ for the MRT
/// normalization. Kept for adjudication only; it is not used by any rate.
pub fn downlink_normalization_as_printed(cfg: &SystemConfig, f2: f64) -> f64 {
    let p = cfg.link(Link::Down);
    p.alpha / (p.k_bs + 1.0) * (p.k_bs * varrho(cfg, f2) + p.m as f64 * p.beta * p.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DownlinkMoments {
    pub varrho: f64,
    pub tau: f64,
    pub zeta: f64,
    pub f_abs2: f64,
    pub composite_gain: f64,
    pub mu: f64,
    pub eta: f64,
}

impl DownlinkMoments {
    pub fn evaluate(cfg: &SystemConfig, f2: f64) -> Result<Self> {
        let (mu, eta) = mu_eta_downlink(cfg, f2)?;
        Ok(Self {
            varrho: varrho(cfg, f2),
            tau: tau(cfg, f2),
            zeta: zeta(cfg, f2),
            f_abs2: f2,
            composite_gain: cfg.link(Link::Down).composite_gain(),
            mu,
            eta,
        })
    }
}

/// MRT coefficient `μ_D = p_t/(η_D² ϱ)` and amplification factor
/// `η_D = √(p_r ϱ / (p_t τ + σ²_V N ϱ))`; together they meet the RIS budget
/// `p_r = η⁴ μ τ + η² σ²_V N`.
pub fn mu_eta_downlink(cfg: &SystemConfig, f2: f64) -> Result<(f64, f64)> {
    let p = cfg.link(Link::Down);
    let norm = varrho(cfg, f2);
    let denom = p.pt * tau(cfg, f2) + p.sigma2_v * p.n as f64 * norm;
    if !(denom > 0.0 && norm > 0.0) {
        return Err(Error::Config("downlink amplification factor has a zero denominator".into()));
    }
    let eta2 = p.pr * norm / denom;
    if !(eta2 > 0.0) {
        return Err(Error::Config("downlink amplification power must be positive".into()));
    }
    Ok((p.pt / (eta2 * norm), eta2.sqrt()))
}

/// MRT coefficient of the passive RIS (`η = 1`), `p'_t/ϱ`.
pub fn mu_downlink_passive(cfg: &SystemConfig, f2: f64) -> Result<f64> {
    let norm = varrho(cfg, f2);
    if !(norm > 0.0) {
        return Err(Error::Config("downlink normalization is zero".into()));
    }
    Ok(cfg.pt_d / norm)
}

/// Downlink SNR for arbitrary `(μ, η)`:
/// `μ η⁴ ζ / (η² β N σ²_V + σ²_N)`.
pub fn downlink_snr_with(cfg: &SystemConfig, f2: f64, mu: f64, eta: f64) -> Result<f64> {
    let p = cfg.link(Link::Down);
    let e2 = eta * eta;
    let denom = e2 * p.beta * p.n as f64 * p.sigma2_v + p.sigma2_n;
    if !(denom > 0.0) {
        return Err(Error::Config("downlink SNR has a zero denominator".into()));
    }
    Ok(mu * e2 * e2 * zeta(cfg, f2) / denom)
}

/// Active-RIS downlink rate approximation
/// `log₂(1 + (p_r p_t ζ/ϱ) / (p_r β N σ²_V + (p_t τ/ϱ + σ²_V N) σ²_N))`.
pub fn rate_downlink_active(cfg: &SystemConfig, f2: f64) -> Result<f64> {
    let p = cfg.link(Link::Down);
    let norm = varrho(cfg, f2);
    if !(norm > 0.0) {
        return Err(Error::Config("downlink normalization is zero".into()));
    }
    let n = p.n as f64;
    let num = p.pr * p.pt * zeta(cfg, f2) / norm;
    let denom = p.pr * p.beta * n * p.sigma2_v + (p.pt * tau(cfg, f2) / norm + p.sigma2_v * n) * p.sigma2_n;
    if !(denom > 0.0) {
        return Err(Error::Config("downlink rate has a zero denominator".into()));
    }
    Ok(log2_1p(num / denom))
}

/// Passive-RIS downlink rate `log₂(1 + μ'_D ζ / σ²_N)`.
pub fn rate_downlink_passive(cfg: &SystemConfig, f2: f64) -> Result<f64> {
    if !(cfg.pt_d > 0.0) {
        return Err(Error::InfeasibleBudget { total: cfg.pt_d, overhead: 0.0 });
    }
    let mu = mu_downlink_passive(cfg, f2)?;
    Ok(log2_1p(mu * zeta(cfg, f2) / cfg.sigma2_nd))
}

/// Limit of the active downlink rate as the RIS noise vanishes:
/// `log₂(1 + (ζ/τ)·p_r/σ²_N)`.
pub fn rate_downlink_limit_ris_noiseless(cfg: &SystemConfig, f2: f64) -> f64 {
    let p = cfg.link(Link::Down);
    log2_1p(zeta(cfg, f2) / tau(cfg, f2) * p.pr / p.sigma2_n)
}

/// Limit of the active downlink rate as the user noise vanishes:
/// `log₂(1 + ζ/(β N ϱ)·p_t/σ²_V)`.
pub fn rate_downlink_limit_user_noiseless(cfg: &SystemConfig, f2: f64) -> f64 {
    let p = cfg.link(Link::Down);
    log2_1p(zeta(cfg, f2) / (p.beta * p.n as f64 * varrho(cfg, f2)) * p.pt / p.sigma2_v)
}

// ---- dispatch ------------------------------------------------------------

/// Closed-form rate of `link` in `mode` at `|f|² = f2`.
pub fn rate(cfg: &SystemConfig, link: Link, mode: Mode, f2: f64) -> Result<f64> {
    match (link, mode) {
        (Link::Up, Mode::Active) => rate_uplink_active(cfg, f2),
        (Link::Up, Mode::Passive) => rate_uplink_passive(cfg, f2),
        (Link::Down, Mode::Active) => rate_downlink_active(cfg, f2),
        (Link::Down, Mode::Passive) => rate_downlink_passive(cfg, f2),
    }
}

pub fn rate_for_phases(cfg: &SystemConfig, link: Link, mode: Mode, phases: &PhaseConfig) -> Result<f64> {
    rate(cfg, link, mode, f_abs2(cfg, link, phases)?)
}

/// Amplification factor used by `mode` on `link` (1 for the passive RIS).
pub fn amplification(cfg: &SystemConfig, link: Link, mode: Mode, f2: f64) -> Result<f64> {
    match (link, mode) {
        (_, Mode::Passive) => Ok(1.0),
        (Link::Up, Mode::Active) => eta_uplink(cfg),
        (Link::Down, Mode::Active) => Ok(mu_eta_downlink(cfg, f2)?.1),
    }
}

// ---- power accounting ----------------------------------------------------

/// Split of a total power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBudget {
    pub total: f64,
    pub pt: f64,
    pub pr: f64,
    pub overhead: f64,
}

/// Fixed per-element overhead: `N(p_SW + p_DC)` active, `N p_SW` passive.
pub fn overhead(cfg: &SystemConfig, mode: Mode) -> f64 {
    let n = cfg.n as f64;
    match mode {
        Mode::Active => n * (cfg.p_sw + cfg.p_dc),
        Mode::Passive => n * cfg.p_sw,
    }
}

/// Equal split: active `p_t = p_r = (total − N(p_SW+p_DC))/2`;
/// passive `p'_t = total − N p_SW`, `p_r = 0`.
pub fn split_budget(total: f64, cfg: &SystemConfig, mode: Mode) -> Result<PowerBudget> {
    let overhead = overhead(cfg, mode);
    if !(total > overhead) {
        return Err(Error::InfeasibleBudget { total, overhead });
    }
    let spare = total - overhead;
    let (pt, pr) = match mode {
        Mode::Active => (spare / 2.0, spare / 2.0),
        Mode::Passive => (spare, 0.0),
    };
    Ok(PowerBudget { total, pt, pr, overhead })
}

impl PowerBudget {
    pub fn apply(&self, cfg: &SystemConfig, link: Link) -> SystemConfig {
        cfg.clone().with_powers(link, self.pt, self.pr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{aligned_phases, AngleSet};
    use proptest::prelude::*;

    fn unit(m: usize, n: usize, k: f64) -> SystemConfig {
        let scale = k + 1.0;
        SystemConfig { m, n, alpha_u: scale, beta_u: scale, alpha_d: scale, beta_d: scale, ..SystemConfig::default() }
            .with_rician(k)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    // Independent route: E‖y‖⁴ for y = H u, conditioned on u, with
    // y | u ~ CN(c₁ a_M (bᴴu), s₁² ‖u‖² I), then moments of u ~ CN(μ, s₂² I).
    fn fourth_moment_oracle(p: &LinkParams, f2: f64) -> f64 {
        let (m, n) = (p.m as f64, p.n as f64);
        let c1 = p.alpha * p.k_bs / (p.k_bs + 1.0);
        let s1 = p.alpha / (p.k_bs + 1.0);
        let c2 = p.beta * p.k_user / (p.k_user + 1.0);
        let s2 = p.beta / (p.k_user + 1.0);
        let et2 = c2 * f2 + s2 * n;
        let et4 = et2 * et2 + s2 * s2 * n * n + 2.0 * s2 * n * c2 * f2;
        let eu2 = (c2 + s2) * n;
        let eu4 = eu2 * eu2 + n * s2 * s2 + 2.0 * s2 * c2 * n;
        let etu =
            s2 * s2 * n * n + s2 * s2 * n + c2 * f2 * s2 * n + c2 * n * s2 * n + 2.0 * s2 * c2 * f2 + c2 * c2 * f2 * n;
        c1 * c1 * m * m * et4 + 2.0 * c1 * s1 * m * (m + 1.0) * etu + s1 * s1 * m * (m + 1.0) * eu4
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&unit(2, 3, 0.0), 0.0), 6.0);
        // K1 = K2 = 1, α = β = 2 gives γ = 1
        assert_eq!(delta(&unit(1, 1, 1.0), 1.0), 4.0);
        let cfg = SystemConfig::default();
        assert!(delta(&cfg, 0.0) <= delta(&cfg, (cfg.n * cfg.n) as f64));
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(&unit(1, 1, 0.0), 0.0), 4.0);
        for (m, n) in [(4usize, 9usize), (16, 4)] {
            let (mf, nf) = (m as f64, n as f64);
            let cfg = SystemConfig { m, n, alpha_u: 3.0, beta_u: 0.5, ..SystemConfig::default() }.with_rician(0.0);
            let g = 1.5f64;
            let want = g * g * (mf * nf * nf + mf * (mf + 1.0) * nf + mf * mf * nf * nf);
            assert!(rel(xi(&cfg, 7.0), want) < 1e-14);
        }
    }

    #[test]
    fn fourth_moment_matches_conditional_gaussian_route() {
        for (m, n, k1, k2, f2) in [(4, 4, 10.0, 1.0, 13.0), (16, 9, 1.0, 10.0, 80.0), (1, 1, 0.5, 2.5, 1.0)] {
            let cfg = SystemConfig {
                m,
                n,
                k1,
                k2,
                k3: k1,
                k4: k2,
                alpha_u: 0.3,
                beta_u: 2.0,
                alpha_d: 0.3,
                beta_d: 2.0,
                ..SystemConfig::default()
            };
            let oracle = fourth_moment_oracle(&cfg.link(Link::Up), f2);
            assert!(rel(xi(&cfg, f2), oracle) < 1e-12, "{m} {n}");
            assert!(rel(zeta(&cfg, f2), oracle) < 1e-12);
            let gap = zeta(&cfg, f2) - zeta_as_printed(&cfg, f2);
            assert!(rel(gap, 2.0 * fourth_moment_constant_weight(&cfg.link(Link::Down), f2) * 2.0) < 1e-9);
        }
    }

    #[test]
    fn nu_central_wishart_identity() {
        let cfg = SystemConfig { m: 4, n: 9, alpha_u: 2.0, beta_u: 3.0, k1: 0.0, k2: 0.0, ..SystemConfig::default() };
        assert!(rel(nu(&cfg, 5.0), 4.0 * 3.0 * 4.0 * 9.0 * 13.0) < 1e-14);
        // K1 = 0 is exact for any K2: α²β M N (M+N)
        let cfg = SystemConfig { k2: 4.0, ..cfg };
        assert!(rel(nu(&cfg, 5.0), 4.0 * 3.0 * 4.0 * 9.0 * 13.0) < 1e-14);
    }

    #[test]
    fn nu_with_k2_zero_drops_k2_terms() {
        let cfg = SystemConfig { m: 4, n: 9, k1: 3.0, k2: 0.0, alpha_u: 2.0, beta_u: 0.5, ..SystemConfig::default() };
        let (m, n, k1, a) = (4.0, 9.0, 3.0, 2.0);
        let ag = a * cfg.link(Link::Up).composite_gain();
        let want = m * m * ag / (k1 + 1.0) * (n + 2.0 * k1 * n + k1 * k1 * n * n) + ag * m * n * (n + k1 * n);
        assert!(rel(nu(&cfg, 50.0), want) < 1e-14);
    }

    #[test]
    fn tau_reductions() {
        let (m, n) = (4.0, 9.0);
        let cfg = SystemConfig { m: 4, n: 9, alpha_d: 2.0, beta_d: 3.0, ..SystemConfig::default() }.with_rician(0.0);
        let ag = 2.0 * cfg.link(Link::Down).composite_gain();
        assert!(rel(tau(&cfg, 11.0), ag * n * (m * m + m * n)) < 1e-14);
        let cfg = SystemConfig { k4: 2.5, ..cfg };
        let ag = 2.0 * cfg.link(Link::Down).composite_gain();
        assert!(rel(tau(&cfg, 11.0), ag * n * 3.5 * (m * m + m * n)) < 1e-14);
    }

    #[test]
    fn downlink_mirrors_uplink() {
        let cfg = unit(2, 3, 0.0);
        assert_eq!(varrho(&cfg, 0.0), 6.0);
        assert_eq!(zeta(&unit(1, 1, 0.0), 0.0), 4.0);
        let up = SystemConfig { k1: 2.0, k2: 7.0, alpha_u: 0.4, beta_u: 1.1, ..SystemConfig::default() };
        let down = SystemConfig { k3: 2.0, k4: 7.0, alpha_d: 0.4, beta_d: 1.1, ..up.clone() };
        assert_eq!(delta(&up, 33.0), varrho(&down, 33.0));
        assert_eq!(nu(&up, 33.0), tau(&down, 33.0));
        assert_eq!(xi(&up, 33.0), zeta(&down, 33.0));
    }

    #[test]
    fn eta_uplink_examples() {
        let base = SystemConfig::default();
        let p = base.link(Link::Up);
        let unit_pr = p.n as f64 * (p.pt * p.beta + p.sigma2_v);
        let cfg = base.clone().with_powers(Link::Up, p.pt, unit_pr);
        assert!((eta_uplink(&cfg).unwrap() - 1.0).abs() < 1e-12);
        let cfg = base.clone().with_powers(Link::Up, p.pt, 4.0 * unit_pr);
        assert!((eta_uplink(&cfg).unwrap() - 2.0).abs() < 1e-12);
        let cfg = base.clone().with_noise(Link::Up, 1e-300, p.sigma2_n).with_powers(
            Link::Up,
            p.pt,
            p.n as f64 * p.pt * p.beta,
        );
        assert!((eta_uplink(&cfg).unwrap() - 1.0).abs() < 1e-12);
        let cfg = base.with_noise(Link::Up, 0.0, 1.0).with_powers(Link::Up, 0.0, 1.0);
        assert!(eta_uplink(&cfg).is_err());
    }

    #[test]
    fn theorem_form_equals_eta_form() {
        let cfg = SystemConfig::default();
        let f2 = 1234.0;
        let eta = eta_uplink(&cfg).unwrap();
        let a = rate_uplink_active(&cfg, f2).unwrap();
        let b = log2_1p(uplink_snr_with_eta(&cfg, f2, eta).unwrap());
        assert!(rel(a, b) < 1e-12);

        let (mu, eta) = mu_eta_downlink(&cfg, f2).unwrap();
        let a = rate_downlink_active(&cfg, f2).unwrap();
        let b = log2_1p(downlink_snr_with(&cfg, f2, mu, eta).unwrap());
        assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn mu_eta_meets_ris_budget() {
        let cfg = SystemConfig::default();
        for f2 in [0.0, 10.0, 4096.0] {
            let (mu, eta) = mu_eta_downlink(&cfg, f2).unwrap();
            let p = cfg.link(Link::Down);
            let back = eta.powi(4) * mu * tau(&cfg, f2) + eta * eta * p.sigma2_v * p.n as f64;
            assert!(rel(back, p.pr) < 1e-9);
            // transmit power constraint: μ η² ϱ = p_t
            assert!(rel(mu * eta * eta * varrho(&cfg, f2), p.pt) < 1e-12);
        }
    }

    #[test]
    fn mu_eta_noiseless_ris_limit() {
        let cfg = SystemConfig::default().with_noise(Link::Down, 1e-40, 1e-11);
        let f2 = 100.0;
        let (_, eta) = mu_eta_downlink(&cfg, f2).unwrap();
        let want = cfg.pr_d * varrho(&cfg, f2) / (cfg.pt_d * tau(&cfg, f2));
        assert!(rel(eta * eta, want) < 1e-9);
        assert!(mu_eta_downlink(&cfg.clone().with_powers(Link::Down, 1e-3, 0.0), f2).is_err());
    }

    #[test]
    fn passive_is_the_eta_one_noiseless_reduction() {
        let cfg = SystemConfig::default();
        for f2 in [0.0, 17.0, 4096.0] {
            let reduced = cfg.clone().with_noise(Link::Up, 0.0, cfg.sigma2_nu);
            let via_active = log2_1p(uplink_snr_with_eta(&reduced, f2, 1.0).unwrap());
            assert!(rel(rate_uplink_passive(&cfg, f2).unwrap(), via_active) < 1e-12);

            let reduced = cfg.clone().with_noise(Link::Down, 0.0, cfg.sigma2_nd);
            let mu = cfg.pt_d / varrho(&cfg, f2);
            let via_active = log2_1p(downlink_snr_with(&reduced, f2, mu, 1.0).unwrap());
            assert!(rel(rate_downlink_passive(&cfg, f2).unwrap(), via_active) < 1e-12);
        }
        let broke = cfg.clone().with_powers(Link::Up, 0.0, 0.0);
        assert!(matches!(rate_uplink_passive(&broke, 1.0), Err(Error::InfeasibleBudget { .. })));
    }

    #[test]
    fn budget_examples() {
        let free = SystemConfig { p_sw: 0.0, p_dc: 0.0, ..SystemConfig::default() };
        let b = split_budget(1.0, &free, Mode::Active).unwrap();
        assert_eq!((b.pt, b.pr), (0.5, 0.5));

        let cfg = SystemConfig { n: 16, p_sw: 0.01, p_dc: 0.02125, ..SystemConfig::default() };
        let b = split_budget(1.0, &cfg, Mode::Active).unwrap();
        assert!((b.pt - 0.25).abs() < 1e-12 && (b.pr - 0.25).abs() < 1e-12);
        assert!((b.pt + b.pr + b.overhead - b.total).abs() < 1e-15);

        let cfg = SystemConfig { n: 16, p_sw: 0.0125, ..SystemConfig::default() };
        let b = split_budget(1.0, &cfg, Mode::Passive).unwrap();
        assert!((b.pt - 0.8).abs() < 1e-12 && b.pr == 0.0);

        let cfg = SystemConfig { n: 16, p_sw: 1.1 / 16.0, ..SystemConfig::default() };
        assert!(matches!(split_budget(1.0, &cfg, Mode::Passive), Err(Error::InfeasibleBudget { .. })));
    }

    #[test]
    fn rates_increase_with_budget() {
        let cfg = SystemConfig::default();
        let f2 = f_abs2(&cfg, Link::Up, &aligned_phases(0.3, 0.2, cfg.n, 2).unwrap()).unwrap();
        for link in [Link::Up, Link::Down] {
            for mode in [Mode::Active, Mode::Passive] {
                let rates: Vec<f64> = (0..10)
                    .map(|i| {
                        let total = crate::config::dbm_to_watts(15.0 + 3.5 * i as f64);
                        let b = split_budget(total, &cfg, mode).unwrap();
                        rate(&b.apply(&cfg, link), link, mode, f2).unwrap()
                    })
                    .collect();
                assert!(rates.windows(2).all(|w| w[1] > w[0]), "{link:?} {mode:?}: {rates:?}");
            }
        }
    }

    #[test]
    fn asymptotes_are_approached() {
        let cfg = SystemConfig::default();
        let f2 = 500.0;
        let scale = 1e-6;
        let up_bs = cfg.clone().with_noise(Link::Up, cfg.sigma2_vu, cfg.sigma2_nu * scale);
        assert!(rel(rate_uplink_active(&up_bs, f2).unwrap(), rate_uplink_limit_bs_noiseless(&up_bs, f2)) < 1e-3);
        let up_ris = cfg.clone().with_noise(Link::Up, cfg.sigma2_vu * scale, cfg.sigma2_nu);
        assert!(rel(rate_uplink_active(&up_ris, f2).unwrap(), rate_uplink_limit_ris_noiseless(&up_ris, f2)) < 1e-3);
        let dn_user = cfg.clone().with_noise(Link::Down, cfg.sigma2_vd, cfg.sigma2_nd * scale);
        assert!(
            rel(rate_downlink_active(&dn_user, f2).unwrap(), rate_downlink_limit_user_noiseless(&dn_user, f2)) < 1e-3
        );
        let dn_ris = cfg.clone().with_noise(Link::Down, cfg.sigma2_vd * scale, cfg.sigma2_nd);
        assert!(rel(rate_downlink_active(&dn_ris, f2).unwrap(), rate_downlink_limit_ris_noiseless(&dn_ris, f2)) < 1e-3);
    }

    #[test]
    fn printed_normalization_differs_from_varrho() {
        let cfg = SystemConfig::default();
        let f2 = 900.0;
        assert!(rel(downlink_normalization_as_printed(&cfg, f2), varrho(&cfg, f2)) > 0.5);
        // K3 = 0 with α = 1 is the one case where they coincide
        let cfg = SystemConfig { k3: 0.0, alpha_d: 1.0, ..cfg };
        assert!(rel(downlink_normalization_as_printed(&cfg, f2), varrho(&cfg, f2)) < 1e-12);
    }

    #[test]
    fn f_abs2_rejects_wrong_length() {
        let cfg = SystemConfig::default();
        assert!(f_abs2(&cfg, Link::Up, &PhaseConfig::zeros(9, 1)).is_err());
        let cfg = SystemConfig { angles: AngleSet::all_zero(), n: 16, ..cfg };
        assert_eq!(f_abs2(&cfg, Link::Up, &PhaseConfig::zeros(16, 1)).unwrap(), 256.0);
    }

    proptest! {
        #[test]
        fn moments_nonnegative_and_consistent(
            k1 in 0.0..20.0f64, k2 in 0.0..20.0f64, frac in 0.0..1.0f64, side in 1usize..6, mside in 1usize..5,
        ) {
            let (m, n) = (mside * mside, side * side);
            let cfg = SystemConfig { m, n, k1, k2, alpha_u: 1e-3, beta_u: 2e-3, ..SystemConfig::default() };
            let f2 = frac * (n * n) as f64;
            let mo = UplinkMoments::evaluate(&cfg, f2);
            prop_assert!(mo.delta >= 0.0 && mo.xi >= 0.0 && mo.nu >= 0.0);
            // Jensen: (E‖y‖²)² ≤ E‖y‖⁴
            prop_assert!(mo.delta * mo.delta <= mo.xi * (1.0 + 1e-12));
            prop_assert!(mo.delta * mo.delta <= m as f64 * mo.xi);
        }
    }
}
