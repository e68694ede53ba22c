//! Norms on the measurement space `R^p` and the scale parameter β.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Norm `‖·‖` used for measurement residuals. Its dual `‖·‖_d` bounds the
/// multipliers `y` in the G-number definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MeasurementNorm {
    #[serde(rename = "l1")]
    L1,
    #[default]
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "linf")]
    Linf,
}

impl MeasurementNorm {
    pub fn dual(self) -> MeasurementNorm {
        match self {
            MeasurementNorm::L1 => MeasurementNorm::Linf,
            MeasurementNorm::L2 => MeasurementNorm::L2,
            MeasurementNorm::Linf => MeasurementNorm::L1,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            MeasurementNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            MeasurementNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            MeasurementNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// Euclidean projection of `v` onto `{z : ‖z‖ ≤ radius}`.
    pub fn project_ball(self, v: &[f64], radius: f64) -> Vec<f64> {
        if self.norm(v) <= radius {
            return v.to_vec();
        }
        match self {
            MeasurementNorm::L2 => {
                let scale = radius / self.norm(v);
                v.iter().map(|x| x * scale).collect()
            }
            MeasurementNorm::Linf => v.iter().map(|x| x.clamp(-radius, radius)).collect(),
            MeasurementNorm::L1 => project_l1_ball(v, radius),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementNorm::L1 => "l1",
            MeasurementNorm::L2 => "l2",
            MeasurementNorm::Linf => "linf",
        }
    }
}

impl fmt::Display for MeasurementNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasurementNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(MeasurementNorm::L1),
            "l2" => Ok(MeasurementNorm::L2),
            "linf" => Ok(MeasurementNorm::Linf),
            other => Err(Error::Argument(format!("unknown norm '{other}'"))),
        }
    }
}

/// Sort-based projection onto the ℓ1 ball.
fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (k as f64 + 1.0);
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter()
        .map(|x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Bound on the dual norm of the multipliers; `Infinite` drops the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Argument(format!("beta must be >= 0, got {value}")));
        }
        if value.is_infinite() {
            Ok(Beta::Infinite)
        } else {
            Ok(Beta::Finite(value))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }

    /// `β · factor`, keeping `Infinite` infinite.
    pub fn scaled(self, factor: f64) -> Beta {
        match self {
            Beta::Finite(b) => Beta::Finite(b * factor),
            Beta::Infinite => Beta::Infinite,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "+inf" => Ok(Beta::Infinite),
            t => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::Argument(format!("cannot parse beta '{t}'")))?;
                Beta::finite(v)
            }
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Beta::finite(v).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Serde helper for reals that may be `+∞` (written as the string `"inf"`).
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad real '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duals_pair_up() {
        for n in [
            MeasurementNorm::L1,
            MeasurementNorm::L2,
            MeasurementNorm::Linf,
        ] {
            assert_eq!(n.dual().dual(), n);
            assert_eq!(n.as_str().parse::<MeasurementNorm>().unwrap(), n);
        }
        assert_eq!(MeasurementNorm::default(), MeasurementNorm::L2);
    }

    #[test]
    fn ball_projections_land_on_ball() {
        let v = [3.0, -1.0, 0.5];
        for n in [
            MeasurementNorm::L1,
            MeasurementNorm::L2,
            MeasurementNorm::Linf,
        ] {
            let p = n.project_ball(&v, 1.0);
            assert!((n.norm(&p) - 1.0).abs() < 1e-12, "{n}");
        }
        assert_eq!(
            MeasurementNorm::L1.project_ball(&v, 2.0),
            vec![2.0, 0.0, 0.0]
        );
        assert_eq!(MeasurementNorm::L2.project_ball(&[0.1], 1.0), vec![0.1]);
    }

    #[test]
    fn l1_projection_is_nearest_point() {
        // Compare against a brute-force search along the simplex boundary.
        let v = [0.9, -0.7, 0.2];
        let p = MeasurementNorm::L1.project_ball(&v, 1.0);
        let d = |q: &[f64]| q.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let dp = d(&p);
        let steps = 200;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let a = i as f64 / steps as f64;
                let b = j as f64 / steps as f64;
                let c = 1.0 - a - b;
                let q = [a, -b, c];
                assert!(d(&q) >= dp - 1e-12);
            }
        }
    }

    #[test]
    fn beta_parsing_and_serde() {
        assert_eq!("inf".parse::<Beta>().unwrap(), Beta::Infinite);
        assert_eq!("2.5".parse::<Beta>().unwrap(), Beta::Finite(2.5));
        assert!("-1".parse::<Beta>().is_err());
        assert!("abc".parse::<Beta>().is_err());
        // serde round trip relies on the string form for infinity
        assert_eq!(Beta::Infinite.to_string(), "inf");
        assert_eq!(Beta::Finite(2.0).scaled(1.5), Beta::Finite(3.0));
    }
}
