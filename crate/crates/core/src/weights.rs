//! Nonnegative edge-weight laws with closed-form moments and quantiles.
//!
//! Sampling is inverse-transform only: a weight is always `quantile(u)` of
//! a supplied uniform, so presence and weight of an edge can share one uniform.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightModel {
    Constant {
        c: f64,
    },
    /// Uniform on `(0, b)`.
    Uniform {
        b: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `a` with probability `1 - q`, `b` with probability `q`.
    TwoPoint {
        a: f64,
        b: f64,
        q: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// Fourth central moment.
    pub central4: f64,
    /// Second raw moment.
    pub raw2: f64,
    /// Fourth raw moment.
    pub raw4: f64,
    /// `central4 / variance^2`; infinite for a degenerate law.
    #[serde(with = "infinite_as_null")]
    pub kurtosis: f64,
}

impl WeightModel {
    pub fn constant(c: f64) -> Result<Self> {
        Self::Constant { c }.validated()
    }

    pub fn uniform(b: f64) -> Result<Self> {
        Self::Uniform { b }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn two_point(a: f64, b: f64, q: f64) -> Result<Self> {
        Self::TwoPoint { a, b, q }.validated()
    }

    fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::Constant { c } => c.is_finite() && c > 0.0,
            Self::Uniform { b } => b.is_finite() && b > 0.0,
            Self::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Self::TwoPoint { a, b, q } => {
                a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0 && a + b > 0.0 && q > 0.0 && q < 1.0
            }
        };
        if ok {
            Ok(self)
        } else {
            domain(format!(
                "invalid weight model {self}: weights must be nonnegative with positive mean"
            ))
        }
    }

    pub fn moments(&self) -> Moments {
        let (mean, variance, central4, raw2, raw4) = match *self {
            Self::Constant { c } => (c, 0.0, 0.0, c * c, c.powi(4)),
            Self::Uniform { b } => (b / 2.0, b * b / 12.0, b.powi(4) / 80.0, b * b / 3.0, b.powi(4) / 5.0),
            Self::Exponential { rate } => {
                let s = 1.0 / rate;
                (s, s * s, 9.0 * s.powi(4), 2.0 * s * s, 24.0 * s.powi(4))
            }
            Self::TwoPoint { a, b, q } => {
                let d = b - a;
                (
                    a + q * d,
                    q * (1.0 - q) * d * d,
                    q * (1.0 - q) * (1.0 - 3.0 * q + 3.0 * q * q) * d.powi(4),
                    (1.0 - q) * a * a + q * b * b,
                    (1.0 - q) * a.powi(4) + q * b.powi(4),
                )
            }
        };
        let kurtosis = if variance > 0.0 {
            central4 / (variance * variance)
        } else {
            f64::INFINITY
        };
        Moments {
            mean,
            variance,
            central4,
            raw2,
            raw4,
            kurtosis,
        }
    }

    /// Generalised inverse `inf { x : F(x) >= u }`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return domain(format!("quantile level {u} outside [0, 1)"));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::Uniform { b } => b * u,
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::TwoPoint { a, b, q } => {
                if u <= 1.0 - q {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// Inverse-transform sample from a uniform variate.
    pub fn sample(&self, u: f64) -> Result<f64> {
        self.quantile(u)
    }

    /// Average of the quantile function over `[v0, v1] ⊂ [0, 1]`.
    pub fn quantile_average(&self, v0: f64, v1: f64) -> Result<f64> {
        if !(0.0 <= v0 && v0 < v1 && v1 <= 1.0) {
            return domain(format!("invalid quantile interval [{v0}, {v1}]"));
        }
        let width = v1 - v0;
        Ok(match *self {
            Self::Constant { c } => c,
            Self::Uniform { b } => b * (v0 + v1) / 2.0,
            Self::Exponential { rate } => {
                // d/dv [(1 - v) ln(1 - v) - (1 - v)] = -ln(1 - v)
                let anti = |v: f64| {
                    let s = 1.0 - v;
                    if s <= 0.0 {
                        0.0
                    } else {
                        s * s.ln() - s
                    }
                };
                (anti(v1) - anti(v0)) / (width * rate)
            }
            Self::TwoPoint { a, b, q } => {
                let split = 1.0 - q;
                let low = (split.min(v1) - v0).max(0.0);
                let high = (v1 - split.max(v0)).max(0.0);
                (a * low + b * high) / width
            }
        })
    }

    /// `(sqrt(c4) + (1-p) m1^2) / (Var + (1-p) m1^2)`.
    pub fn moment_ratio(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return domain(format!("p = {p} outside (0, 1]"));
        }
        let m = self.moments();
        let tail = (1.0 - p) * m.mean * m.mean;
        let denominator = m.variance + tail;
        if denominator <= 0.0 {
            return Err(Error::Degenerate(format!(
                "moment ratio of {self} at p = {p} has zero denominator"
            )));
        }
        Ok((m.central4.sqrt() + tail) / denominator)
    }

    pub fn is_degenerate(&self) -> bool {
        self.moments().variance == 0.0
    }
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Constant { c } => write!(f, "const:{c}"),
            Self::Uniform { b } => write!(f, "unif:{b}"),
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::TwoPoint { a, b, q } => write!(f, "twopoint:{a},{b},{q}"),
        }
    }
}

impl FromStr for WeightModel {
    type Err = Error;

    /// `const:c`, `unif:b`, `exp:lambda` or `twopoint:a,b,q`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse { line: 0, message: msg };
        let (family, args) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad(format!("weight model '{s}' must look like 'family:params'")))?;
        let values: Vec<f64> = args
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("invalid parameters in weight model '{s}'")))?;
        match (family, values.as_slice()) {
            ("const", &[c]) => Self::constant(c),
            ("unif", &[b]) => Self::uniform(b),
            ("exp", &[rate]) => Self::exponential(rate),
            ("twopoint", &[a, b, q]) => Self::two_point(a, b, q),
            _ => Err(bad(format!("unknown weight model '{s}'"))),
        }
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    /// Midpoint-rule moments of the quantile function: an independent route
    /// through `E[g(X)] = ∫_0^1 g(F^{-1}(u)) du`.
    fn quadrature_moments(m: &WeightModel) -> (f64, f64, f64) {
        let steps = 2_000_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for i in 0..steps {
            let x = m.quantile_unchecked((i as f64 + 0.5) / steps as f64);
            s1 += x;
            s2 += x * x;
            s4 += x.powi(4);
        }
        let k = steps as f64;
        (s1 / k, s2 / k, s4 / k)
    }

    #[test]
    fn constant_moments() {
        let m = WeightModel::constant(2.0).unwrap().moments();
        assert_eq!((m.mean, m.variance, m.central4, m.raw2), (2.0, 0.0, 0.0, 4.0));
        assert!(m.kurtosis.is_infinite());
        assert!(WeightModel::constant(0.0).is_err());
    }

    #[test]
    fn uniform_moments() {
        let m = WeightModel::uniform(1.0).unwrap().moments();
        assert!(close(m.mean, 0.5, 1e-15));
        assert!(close(m.variance, 1.0 / 12.0, 1e-15));
        assert!(close(m.central4, 1.0 / 80.0, 1e-15));
        assert!(close(m.raw2, 1.0 / 3.0, 1e-15));
        assert!(close(m.kurtosis, 9.0 / 5.0, 1e-14));
    }

    #[test]
    fn two_point_moments_bernoulli() {
        let q = 0.3;
        let m = WeightModel::two_point(0.0, 1.0, q).unwrap().moments();
        assert!(close(m.mean, q, 1e-15));
        assert!(close(m.variance, q * (1.0 - q), 1e-15));
        assert!(close(m.central4, q * (1.0 - q) * (1.0 - 3.0 * q + 3.0 * q * q), 1e-15));
        assert!(close(m.raw2, q, 1e-15));
    }

    #[test]
    fn moments_agree_with_quadrature() {
        for model in [
            WeightModel::uniform(2.0).unwrap(),
            WeightModel::two_point(1.0, 3.0, 0.3).unwrap(),
            WeightModel::exponential(1.5).unwrap(),
        ] {
            let (q1, q2, q4) = quadrature_moments(&model);
            let m = model.moments();
            // The exponential tail is truncated at the last midpoint.
            let tol = if matches!(model, WeightModel::Exponential { .. }) {
                1e-3
            } else {
                1e-6
            };
            assert!(close(q1, m.mean, tol), "{model}");
            assert!(close(q2, m.raw2, tol), "{model}");
            assert!(close(q4, m.raw4, tol), "{model}");
        }
    }

    #[test]
    fn quantile_examples() {
        let c = WeightModel::constant(1.7).unwrap();
        assert_eq!(c.quantile(0.0).unwrap(), 1.7);
        assert_eq!(c.quantile(0.99).unwrap(), 1.7);
        assert_eq!(WeightModel::uniform(2.0).unwrap().quantile(0.25).unwrap(), 0.5);
        let tp = WeightModel::two_point(1.0, 3.0, 0.3).unwrap();
        assert_eq!(tp.quantile(0.7).unwrap(), 1.0);
        assert_eq!(tp.quantile(0.71).unwrap(), 3.0);
        assert!(tp.quantile(1.0).is_err());
        assert!(tp.quantile(-0.1).is_err());
        assert_eq!(tp.sample(0.71).unwrap(), 3.0);
    }

    #[test]
    fn moment_ratio_examples() {
        for p in [0.01, 0.5, 0.99] {
            assert_eq!(WeightModel::constant(3.0).unwrap().moment_ratio(p).unwrap(), 1.0);
        }
        let expected = ((1.0f64 / 80.0).sqrt() + 0.125) / (1.0 / 12.0 + 0.125);
        let r = WeightModel::uniform(1.0).unwrap().moment_ratio(0.5).unwrap();
        assert!(close(r, expected, 1e-14));
        assert!((r - 1.1367).abs() < 1e-4);
        let r = WeightModel::exponential(1.0).unwrap().moment_ratio(0.9).unwrap();
        assert!(close(r, (3.0 + 0.1) / 1.1, 1e-12));
        assert!(matches!(
            WeightModel::constant(1.0).unwrap().moment_ratio(1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn quantile_average_matches_fine_midpoints() {
        for model in [
            WeightModel::uniform(2.0).unwrap(),
            WeightModel::two_point(1.0, 3.0, 0.3).unwrap(),
            WeightModel::exponential(0.7).unwrap(),
        ] {
            for (v0, v1) in [(0.0, 0.25), (0.5, 0.75), (0.6, 0.8), (0.75, 1.0)] {
                let steps = 200_000;
                let brute = (0..steps)
                    .map(|i| model.quantile_unchecked(v0 + (v1 - v0) * (i as f64 + 0.5) / steps as f64))
                    .sum::<f64>()
                    / steps as f64;
                let exact = model.quantile_average(v0, v1).unwrap();
                assert!(close(exact, brute, 2e-4), "{model} [{v0},{v1}] {exact} vs {brute}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["const:0.5", "unif:1", "exp:2", "twopoint:1,3,0.5"] {
            let m: WeightModel = s.parse().unwrap();
            assert_eq!(m.to_string().parse::<WeightModel>().unwrap(), m);
        }
        assert!("gamma:1".parse::<WeightModel>().is_err());
        assert!("unif:-1".parse::<WeightModel>().is_err());
        assert!("twopoint:1,2".parse::<WeightModel>().is_err());
    }

    fn any_model() -> impl Strategy<Value = WeightModel> {
        prop_oneof![
            (0.1f64..5.0).prop_map(|c| WeightModel::constant(c).unwrap()),
            (0.1f64..5.0).prop_map(|b| WeightModel::uniform(b).unwrap()),
            (0.1f64..5.0).prop_map(|r| WeightModel::exponential(r).unwrap()),
            (0.0f64..3.0, 0.1f64..3.0, 0.05f64..0.95).prop_map(|(a, b, q)| WeightModel::two_point(a, b, q).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn quantile_is_nondecreasing(model in any_model(), u in 0.0f64..0.999, du in 0.0f64..0.001) {
            prop_assert!(model.quantile(u).unwrap() <= model.quantile(u + du).unwrap());
        }

        #[test]
        fn constant_ratio_is_one(c in 0.01f64..10.0, p in 0.001f64..0.999) {
            prop_assert_eq!(WeightModel::constant(c).unwrap().moment_ratio(p).unwrap(), 1.0);
        }
    }
}
