//! System configuration and JSON ingestion.
//!
//! All internal quantities are linear Watts. A JSON document may give any
//! power-valued key in dBm instead by appending `_dbm` to its name, e.g.
//! `"sigma2_vu_dbm": -70`. Keys that are absent keep their default value.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::array::{side_length, AngleSet, Link, MAX_BITS};
use crate::error::{Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

/// Keys that hold a power in Watts and may be given in dBm instead.
pub const POWER_KEYS: [&str; 10] =
    ["sigma2_vu", "sigma2_nu", "sigma2_vd", "sigma2_nd", "pt_u", "pr_u", "pt_d", "pr_d", "p_sw", "p_dc"];

/// Every scalar of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas.
    pub m: usize,
    /// RIS elements.
    pub n: usize,
    /// Rician factor of the RIS–BS hop (uplink).
    pub k1: f64,
    /// Rician factor of the user–RIS hop (uplink).
    pub k2: f64,
    /// Rician factor of the BS–RIS hop (downlink).
    pub k3: f64,
    /// Rician factor of the RIS–user hop (downlink).
    pub k4: f64,
    pub alpha_u: f64,
    pub beta_u: f64,
    pub alpha_d: f64,
    pub beta_d: f64,
    /// RIS thermal noise power, uplink.
    pub sigma2_vu: f64,
    /// BS receiver noise power.
    pub sigma2_nu: f64,
    /// RIS thermal noise power, downlink.
    pub sigma2_vd: f64,
    /// User receiver noise power.
    pub sigma2_nd: f64,
    pub pt_u: f64,
    pub pr_u: f64,
    pub pt_d: f64,
    pub pr_d: f64,
    /// Per-element phase switching / control power.
    pub p_sw: f64,
    /// Per-element DC biasing power of the active RIS.
    pub p_dc: f64,
    /// Phase quantization bits, 0 for continuous phases.
    pub bits: u32,
    pub angles: AngleSet,
}

impl Default for SystemConfig {
    /// Desk-scale defaults: noise -70/-80 dBm, K1 = K3 = 10, K2 = K4 = 1,
    /// -60 dB per hop, 10 dBm transmit and amplification power.
    fn default() -> Self {
        Self {
            m: 16,
            n: 64,
            k1: 10.0,
            k2: 1.0,
            k3: 10.0,
            k4: 1.0,
            alpha_u: 1e-6,
            beta_u: 1e-6,
            alpha_d: 1e-6,
            beta_d: 1e-6,
            sigma2_vu: dbm_to_watts(-70.0),
            sigma2_nu: dbm_to_watts(-80.0),
            sigma2_vd: dbm_to_watts(-70.0),
            sigma2_nd: dbm_to_watts(-80.0),
            pt_u: 1e-2,
            pr_u: 1e-2,
            pt_d: 1e-2,
            pr_d: 1e-2,
            p_sw: 1e-4,
            p_dc: 3.162e-4,
            bits: 2,
            angles: AngleSet::default(),
        }
    }
}

/// The per-link view of a [`SystemConfig`]; uplink and downlink moments share
/// one algebraic form over these fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub m: usize,
    pub n: usize,
    /// Rician factor of the BS-side hop (K1 or K3).
    pub k_bs: f64,
    /// Rician factor of the user-side hop (K2 or K4).
    pub k_user: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma2_v: f64,
    pub sigma2_n: f64,
    pub pt: f64,
    pub pr: f64,
}

impl LinkParams {
    /// `αβ / ((K_bs+1)(K_user+1))`.
    pub fn composite_gain(&self) -> f64 {
        self.alpha * self.beta / ((self.k_bs + 1.0) * (self.k_user + 1.0))
    }
}

impl SystemConfig {
    pub fn link(&self, link: Link) -> LinkParams {
        match link {
            Link::Up => LinkParams {
                m: self.m,
                n: self.n,
                k_bs: self.k1,
                k_user: self.k2,
                alpha: self.alpha_u,
                beta: self.beta_u,
                sigma2_v: self.sigma2_vu,
                sigma2_n: self.sigma2_nu,
                pt: self.pt_u,
                pr: self.pr_u,
            },
            Link::Down => LinkParams {
                m: self.m,
                n: self.n,
                k_bs: self.k3,
                k_user: self.k4,
                alpha: self.alpha_d,
                beta: self.beta_d,
                sigma2_v: self.sigma2_vd,
                sigma2_n: self.sigma2_nd,
                pt: self.pt_d,
                pr: self.pr_d,
            },
        }
    }

    /// Sets transmit and amplification power of one link.
    pub fn with_powers(mut self, link: Link, pt: f64, pr: f64) -> Self {
        match link {
            Link::Up => {
                self.pt_u = pt;
                self.pr_u = pr;
            }
            Link::Down => {
                self.pt_d = pt;
                self.pr_d = pr;
            }
        }
        self
    }

    /// Sets RIS and receiver noise powers of one link.
    pub fn with_noise(mut self, link: Link, sigma2_v: f64, sigma2_n: f64) -> Self {
        match link {
            Link::Up => {
                self.sigma2_vu = sigma2_v;
                self.sigma2_nu = sigma2_n;
            }
            Link::Down => {
                self.sigma2_vd = sigma2_v;
                self.sigma2_nd = sigma2_n;
            }
        }
        self
    }

    /// Sets all four Rician factors to `k`.
    pub fn with_rician(mut self, k: f64) -> Self {
        self.k1 = k;
        self.k2 = k;
        self.k3 = k;
        self.k4 = k;
        self
    }

    /// Checks every invariant and wraps the angles into `[0, 2π)`.
    pub fn validated(mut self) -> Result<Self> {
        side_length(self.m)?;
        side_length(self.n)?;
        let nonneg = [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("alpha_u", self.alpha_u),
            ("beta_u", self.beta_u),
            ("alpha_d", self.alpha_d),
            ("beta_d", self.beta_d),
            ("pt_u", self.pt_u),
            ("pr_u", self.pr_u),
            ("pt_d", self.pt_d),
            ("pr_d", self.pr_d),
            ("p_sw", self.p_sw),
            ("p_dc", self.p_dc),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        for (name, v) in [
            ("sigma2_vu", self.sigma2_vu),
            ("sigma2_nu", self.sigma2_nu),
            ("sigma2_vd", self.sigma2_vd),
            ("sigma2_nd", self.sigma2_nd),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if self.bits > MAX_BITS {
            return Err(Error::Config(format!("bits must be at most {MAX_BITS}")));
        }
        self.angles = self.angles.validated()?;
        Ok(self)
    }

    /// Parses a JSON document over the defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_json_value(value)
    }

    pub fn from_json_value(value: Value) -> Result<Self> {
        let Value::Object(user) = value else {
            return Err(Error::Parse("configuration must be a JSON object".into()));
        };
        let user = convert_dbm_keys(user)?;
        let Value::Object(mut base) = serde_json::to_value(Self::default())? else {
            unreachable!("SystemConfig serializes to an object");
        };
        merge(&mut base, user);
        let cfg: Self = serde_json::from_value(Value::Object(base))?;
        cfg.validated()
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn convert_dbm_keys(map: Map<String, Value>) -> Result<Map<String, Value>> {
    let mut out = Map::with_capacity(map.len());
    for (key, value) in map {
        let Some(stem) = key.strip_suffix("_dbm") else {
            if out.contains_key(&key) {
                return Err(Error::Parse(format!("`{key}` given both in Watts and dBm")));
            }
            out.insert(key, value);
            continue;
        };
        if !POWER_KEYS.contains(&stem) {
            return Err(Error::Parse(format!("`{key}` is not a power-valued key")));
        }
        let dbm = value.as_f64().ok_or_else(|| Error::Parse(format!("`{key}` must be a number")))?;
        let watts = dbm_to_watts(dbm);
        if !watts.is_finite() {
            return Err(Error::Parse(format!("`{key}` = {dbm} dBm overflows")));
        }
        let number = serde_json::Number::from_f64(watts)
            .ok_or_else(|| Error::Parse(format!("`{key}` = {dbm} dBm is not representable")))?;
        if out.insert(stem.to_string(), Value::Number(number)).is_some() {
            return Err(Error::Parse(format!("`{stem}` given both in Watts and dBm")));
        }
    }
    Ok(out)
}

// Objects merge key by key so partial angle sets work; everything else replaces.
fn merge(base: &mut Map<String, Value>, overlay: Map<String, Value>) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Object(b)), Value::Object(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SystemConfig::default().validated().unwrap();
        assert_eq!(cfg.m, 16);
        assert_eq!(cfg.n, 64);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(-70.0) - 1e-10).abs() < 1e-22);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn json_overlay_with_dbm_keys() {
        let cfg = SystemConfig::from_json_str(
            r#"{"m": 4, "n": 9, "sigma2_nu_dbm": -90, "pt_u": 0.5,
                "angles": {"bs_arrival": {"azimuth": 7.0, "elevation": 1.0}}}"#,
        )
        .unwrap();
        assert_eq!((cfg.m, cfg.n), (4, 9));
        assert!((cfg.sigma2_nu - 1e-12).abs() < 1e-24);
        assert_eq!(cfg.pt_u, 0.5);
        assert!((cfg.angles.bs_arrival.azimuth - (7.0 - std::f64::consts::TAU)).abs() < 1e-12);
        assert_eq!(cfg.angles.ris_arrival_user, AngleSet::default().ris_arrival_user);
    }

    #[test]
    fn json_rejections() {
        for bad in [
            r#"{"m": 8}"#,
            r#"{"n": 0}"#,
            r#"{"bogus": 1}"#,
            r#"{"k1_dbm": 3}"#,
            r#"{"pt_u": 1, "pt_u_dbm": 30}"#,
            r#"{"sigma2_vu": 0}"#,
            r#"{"alpha_u": -1}"#,
            r#"{"angles": {"bs_arrival": {"tilt": 1}}}"#,
            r#"[1, 2]"#,
            r#"{"bits": 40}"#,
        ] {
            assert!(SystemConfig::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg = SystemConfig::default().validated().unwrap();
        let back = SystemConfig::from_json_str(&cfg.to_json_pretty().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
