//! Textual metric and diffeomorphism specifications.
//!
//! Metrics are written inline as `kind:conformal,c=0.1,profile=parabolic` or as
//! JSON (`{"kind":"conformal","c":0.1,"profile":"parabolic"}`, either literally or
//! in a file). Diffeomorphisms use `radial,amp=0.05` style strings.

use crate::diffeo::{pullback, DiskDiffeo};
use crate::error::{GeoError, Result};
use crate::metric::MetricField;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Constant,
    Parabolic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricSpec {
    Euclidean,
    Conformal {
        c: f64,
        #[serde(default)]
        profile: Profile,
    },
    Sheared {
        s: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Pullback of `base` under a boundary-fixing diffeomorphism.
    Pullback { base: Box<MetricSpec>, psi: DiffeoSpec },
}

fn default_sigma() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "lowercase")]
pub enum DiffeoSpec {
    Identity,
    Radial {
        amp: f64,
        #[serde(default = "default_r1")]
        r1: f64,
        #[serde(default = "default_r2")]
        r2: f64,
    },
    Twist {
        amp: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
}

fn default_r1() -> f64 {
    0.2
}
fn default_r2() -> f64 {
    0.8
}
fn default_width() -> f64 {
    0.3
}

/// `head:rest` or `head,k=v,...` split into the head and a key/value map.
fn split_params(s: &str, sep: char) -> Result<(String, BTreeMap<String, String>)> {
    let (head, rest) = match s.split_once(sep) {
        Some((h, r)) => (h, r),
        None => (s, ""),
    };
    let mut params = BTreeMap::new();
    let mut parts = rest.split(',').map(str::trim).filter(|p| !p.is_empty());
    let mut head = head.trim().to_string();
    if sep == ':' {
        // kind:name,k=v
        head = parts.next().ok_or_else(|| GeoError::InvalidSpec(format!("missing kind in '{s}'")))?.to_string();
    }
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| GeoError::InvalidSpec(format!("expected key=value, got '{p}'")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((head, params))
}

fn num(params: &BTreeMap<String, String>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v.parse().map_err(|_| GeoError::InvalidSpec(format!("{key}={v} is not a number"))),
        None => default.ok_or_else(|| GeoError::InvalidSpec(format!("missing parameter {key}"))),
    }
}

fn reject_unknown(params: &BTreeMap<String, String>, known: &[&str]) -> Result<()> {
    match params.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(GeoError::InvalidSpec(format!("unknown parameter {k}"))),
        None => Ok(()),
    }
}

impl MetricSpec {
    /// Inline `kind:...`, a JSON object, or a path to a JSON file.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| GeoError::InvalidSpec(e.to_string()));
        }
        if !s.starts_with("kind:") {
            let text = std::fs::read_to_string(s).map_err(|e| GeoError::InvalidSpec(format!("{s}: {e}")))?;
            return serde_json::from_str(&text).map_err(|e| GeoError::InvalidSpec(format!("{s}: {e}")));
        }
        let (kind, p) = split_params(s, ':')?;
        match kind.as_str() {
            "euclidean" => {
                reject_unknown(&p, &[])?;
                Ok(MetricSpec::Euclidean)
            }
            "conformal" => {
                reject_unknown(&p, &["c", "profile"])?;
                let profile = match p.get("profile").map(String::as_str) {
                    None | Some("constant") => Profile::Constant,
                    Some("parabolic") => Profile::Parabolic,
                    Some(o) => return Err(GeoError::InvalidSpec(format!("unknown profile {o}"))),
                };
                Ok(MetricSpec::Conformal { c: num(&p, "c", None)?, profile })
            }
            "sheared" => {
                reject_unknown(&p, &["s", "sigma"])?;
                Ok(MetricSpec::Sheared { s: num(&p, "s", None)?, sigma: num(&p, "sigma", Some(default_sigma()))? })
            }
            other => Err(GeoError::InvalidSpec(format!("unknown metric kind {other}"))),
        }
    }

    pub fn build(&self) -> Result<MetricField> {
        Ok(match self {
            MetricSpec::Euclidean => MetricField::euclidean(),
            MetricSpec::Conformal { c, profile: Profile::Constant } => MetricField::conformal_constant(*c),
            MetricSpec::Conformal { c, profile: Profile::Parabolic } => MetricField::conformal_parabolic(*c),
            MetricSpec::Sheared { s, sigma } => MetricField::sheared(*s, *sigma),
            MetricSpec::Pullback { base, psi } => pullback(&psi.build()?, &base.build()?),
        })
    }
}

impl DiffeoSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| GeoError::InvalidSpec(e.to_string()));
        }
        let (map, p) = split_params(s, ',')?;
        match map.as_str() {
            "identity" => {
                reject_unknown(&p, &[])?;
                Ok(DiffeoSpec::Identity)
            }
            "radial" => {
                reject_unknown(&p, &["amp", "r1", "r2"])?;
                Ok(DiffeoSpec::Radial { amp: num(&p, "amp", None)?, r1: num(&p, "r1", Some(default_r1()))?, r2: num(&p, "r2", Some(default_r2()))? })
            }
            "twist" => {
                reject_unknown(&p, &["amp", "width"])?;
                Ok(DiffeoSpec::Twist { amp: num(&p, "amp", None)?, width: num(&p, "width", Some(default_width()))? })
            }
            other => Err(GeoError::InvalidSpec(format!("unknown diffeomorphism {other}"))),
        }
    }

    pub fn build(&self) -> Result<DiskDiffeo> {
        let psi = match *self {
            DiffeoSpec::Identity => DiskDiffeo::identity(),
            DiffeoSpec::Radial { amp, r1, r2 } => {
                if !(0.0 < r1 && r1 < r2 && r2 < 1.0) {
                    return Err(GeoError::InvalidSpec(format!("radial support ({r1}, {r2}) must lie in (0, 1)")));
                }
                DiskDiffeo::radial_bump(amp, r1, r2)
            }
            DiffeoSpec::Twist { amp, width } => DiskDiffeo::twist(amp, width),
        };
        psi.verify()?;
        Ok(psi)
    }
}
