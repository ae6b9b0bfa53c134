//! Catalog of admissible absorption nonlinearities `psi`.
//!
//! Every member is nondecreasing and continuous on `[0, inf)` with `psi(0) = 0`
//! and `psi(t) > 0` for `t > 0`. Arguments `t <= 0` evaluate to zero so that
//! intermediate iterates of the solver never need special casing.
//!
//! Each spec carries the constant `c` of the submultiplicativity hypothesis
//! `psi(r t) <= c psi(r) psi(t)` for `r` in `[0, 1]`, `t >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shape of a nonlinearity, without its constant.
#[derive(Clone, Debug, PartialEq)]
pub enum PsiFamily<T> {
    /// `t^gamma`
    PowerLaw { gamma: T },
    /// `a t + b t^gamma`
    AffinePower { a: T, b: T, gamma: T },
    /// `sinh t`
    Sinh,
    /// `a (1 + b t) log(1 + b t)`
    LogGrowth { a: T, b: T },
    /// Monotone piecewise-linear interpolation through `(0, 0)` and the knots.
    CustomSampled { knots: Vec<T>, values: Vec<T> },
}

/// Family tag, as used in JSON documents and closed-form dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Power,
    AffinePower,
    Sinh,
    LogGrowth,
    Custom,
}

impl FamilyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::Power => "power",
            FamilyTag::AffinePower => "affine_power",
            FamilyTag::Sinh => "sinh",
            FamilyTag::LogGrowth => "log_growth",
            FamilyTag::Custom => "custom",
        }
    }
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A nonlinearity together with its submultiplicativity constant.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiSpec<T> {
    family: PsiFamily<T>,
    c: T,
}

/// Outcome of a sampled check of `psi(r t) <= c psi(r) psi(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubmultiplicativityReport<T> {
    pub max_ratio: T,
    pub witness: (T, T),
    pub holds: bool,
}

fn positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPsi(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl<T: Scalar> PsiSpec<T> {
    /// Validates the family parameters and the constant.
    pub fn new(family: PsiFamily<T>, c: T) -> Result<Self> {
        positive("c", c)?;
        match &family {
            PsiFamily::PowerLaw { gamma } => positive("gamma", *gamma)?,
            PsiFamily::AffinePower { a, b, gamma } => {
                positive("a", *a)?;
                positive("b", *b)?;
                positive("gamma", *gamma)?;
            }
            PsiFamily::Sinh => {}
            PsiFamily::LogGrowth { a, b } => {
                positive("a", *a)?;
                positive("b", *b)?;
            }
            PsiFamily::CustomSampled { knots, values } => {
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(Error::InvalidPsi(format!(
                        "custom nonlinearity needs matching non-empty knots/values (got {} and {})",
                        knots.len(),
                        values.len()
                    )));
                }
                positive("first knot", knots[0])?;
                positive("first value", values[0])?;
                for w in knots.windows(2) {
                    if !(w[1] > w[0]) || !w[1].is_finite() {
                        return Err(Error::InvalidPsi(
                            "custom knots must be strictly increasing and finite".into(),
                        ));
                    }
                }
                for w in values.windows(2) {
                    if w[1] < w[0] || !w[1].is_finite() {
                        return Err(Error::InvalidPsi(
                            "custom values must be nondecreasing and finite".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { family, c })
    }

    /// `t^gamma` with `c = 1` (exact equality `(r t)^gamma = r^gamma t^gamma`).
    pub fn power_law(gamma: T) -> Result<Self> {
        Self::new(PsiFamily::PowerLaw { gamma }, T::one())
    }

    /// `a t + b t^gamma` with the catalog constant: `1/a` for `gamma > 1`,
    /// `1/(a+b)` for `gamma = 1` and `1/b` for `gamma < 1`.
    pub fn affine_power(a: T, b: T, gamma: T) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        let c = if gamma > T::one() {
            a.recip()
        } else if gamma == T::one() {
            (a + b).recip()
        } else {
            b.recip()
        };
        Self::new(PsiFamily::AffinePower { a, b, gamma }, c)
    }

    /// `sinh t` with `c = 1`.
    pub fn sinh() -> Self {
        Self {
            family: PsiFamily::Sinh,
            c: T::one(),
        }
    }

    /// `a (1 + b t) log(1 + b t)` with `c = 1/(a b)`.
    pub fn log_growth(a: T, b: T) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Self::new(PsiFamily::LogGrowth { a, b }, (a * b).recip())
    }

    /// Sampled nonlinearity. The constant must be supplied by the caller.
    pub fn custom(knots: Vec<T>, values: Vec<T>, c: T) -> Result<Self> {
        Self::new(PsiFamily::CustomSampled { knots, values }, c)
    }

    /// Same family, different constant.
    pub fn with_c(self, c: T) -> Result<Self> {
        Self::new(self.family, c)
    }

    pub fn family(&self) -> &PsiFamily<T> {
        &self.family
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn tag(&self) -> FamilyTag {
        match self.family {
            PsiFamily::PowerLaw { .. } => FamilyTag::Power,
            PsiFamily::AffinePower { .. } => FamilyTag::AffinePower,
            PsiFamily::Sinh => FamilyTag::Sinh,
            PsiFamily::LogGrowth { .. } => FamilyTag::LogGrowth,
            PsiFamily::CustomSampled { .. } => FamilyTag::Custom,
        }
    }

    /// Largest argument at which the nonlinearity can be evaluated.
    pub fn max_argument(&self) -> T {
        match &self.family {
            PsiFamily::CustomSampled { knots, .. } => *knots.last().unwrap(),
            _ => T::infinity(),
        }
    }

    /// `psi(t)`; zero for `t <= 0`.
    pub fn eval(&self, t: T) -> Result<T> {
        if t <= T::zero() {
            return Ok(T::zero());
        }
        let v = match &self.family {
            PsiFamily::PowerLaw { gamma } => t.powf(*gamma),
            PsiFamily::AffinePower { a, b, gamma } => *a * t + *b * t.powf(*gamma),
            PsiFamily::Sinh => t.sinh(),
            PsiFamily::LogGrowth { a, b } => {
                let bt = *b * t;
                *a * (T::one() + bt) * bt.ln_1p()
            }
            PsiFamily::CustomSampled { knots, values } => interpolate(knots, values, t)?,
        };
        Ok(v)
    }

    /// `psi'(t)` for `t > 0`: analytic for catalog families, central
    /// difference with step `max(1e-6, 1e-6 t)` for sampled ones.
    pub fn derivative(&self, t: T) -> Result<T> {
        if !(t > T::zero()) {
            return Err(Error::Domain {
                what: "psi derivative",
                value: t.to_f64_lossy(),
            });
        }
        let d = match &self.family {
            PsiFamily::PowerLaw { gamma } => *gamma * t.powf(*gamma - T::one()),
            PsiFamily::AffinePower { a, b, gamma } => *a + *b * *gamma * t.powf(*gamma - T::one()),
            PsiFamily::Sinh => t.cosh(),
            PsiFamily::LogGrowth { a, b } => *a * *b * ((*b * t).ln_1p() + T::one()),
            PsiFamily::CustomSampled { .. } => {
                let h = T::lit(1e-6).max(T::lit(1e-6) * t);
                (self.eval(t + h)? - self.eval(t - h)?) / (h + h)
            }
        };
        Ok(d)
    }

    /// Sup of `psi(r t) / (psi(r) psi(t))` over `r` uniform in `(0, 1]` and
    /// `t` log-spaced in `[1e-8 t_max, t_max]`, both with `samples` points.
    pub fn verify_submultiplicative(
        &self,
        samples: usize,
        t_max: T,
    ) -> Result<SubmultiplicativityReport<T>> {
        if samples < 2 {
            return Err(Error::Precondition(format!(
                "need at least 2 samples, got {samples}"
            )));
        }
        positive("t_max", t_max)?;
        let t_max = t_max.min(self.max_argument());
        let n = T::from_usize_lossy(samples);
        let t_min = t_max * T::lit(1e-8);
        let log_span = (t_max / t_min).ln();
        let mut best = SubmultiplicativityReport {
            max_ratio: T::zero(),
            witness: (T::one(), t_max),
            holds: true,
        };
        for i in 1..=samples {
            let r = T::from_usize_lossy(i) / n;
            let Ok(psi_r) = self.eval(r) else { continue };
            for j in 0..samples {
                let frac = T::from_usize_lossy(j) / (n - T::one());
                let t = t_min * (frac * log_span).exp();
                let (Ok(psi_t), Ok(psi_rt)) = (self.eval(t), self.eval(r * t)) else {
                    continue;
                };
                let ratio = psi_rt / (psi_r * psi_t);
                if ratio > best.max_ratio {
                    best.max_ratio = ratio;
                    best.witness = (r, t);
                }
            }
        }
        best.holds = best.max_ratio <= self.c * (T::one() + T::lit(1e-12));
        Ok(best)
    }

    /// Sampled lower bound on any admissible constant.
    pub fn minimal_c_estimate(&self, samples: usize, t_max: T) -> Result<T> {
        Ok(self.verify_submultiplicative(samples, t_max)?.max_ratio)
    }
}

fn interpolate<T: Scalar>(knots: &[T], values: &[T], t: T) -> Result<T> {
    let last = *knots.last().unwrap();
    if t > last {
        return Err(Error::OutOfRange {
            t: t.to_f64_lossy(),
            last: last.to_f64_lossy(),
        });
    }
    let i = knots.partition_point(|k| *k < t);
    let (x0, y0) = if i == 0 {
        (T::zero(), T::zero())
    } else {
        (knots[i - 1], values[i - 1])
    };
    let (x1, y1) = (knots[i], values[i]);
    Ok(y0 + (y1 - y0) * (t - x0) / (x1 - x0))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PsiRepr {
    family: FamilyTag,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

fn param(params: &serde_json::Map<String, serde_json::Value>, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::InvalidPsi(format!("missing numeric parameter `{key}`")))
}

fn param_list(params: &serde_json::Map<String, serde_json::Value>, key: &str) -> Result<Vec<f64>> {
    params
        .get(key)
        .and_then(|v| v.as_array())
        .and_then(|a| a.iter().map(|x| x.as_f64()).collect::<Option<Vec<_>>>())
        .ok_or_else(|| Error::InvalidPsi(format!("missing numeric array `{key}`")))
}

impl<T: Scalar> TryFrom<PsiRepr> for PsiSpec<T> {
    type Error = Error;

    fn try_from(r: PsiRepr) -> Result<Self> {
        let p = &r.params;
        let spec = match r.family {
            FamilyTag::Power => PsiSpec::power_law(T::lit(param(p, "gamma")?))?,
            FamilyTag::AffinePower => PsiSpec::affine_power(
                T::lit(param(p, "a")?),
                T::lit(param(p, "b")?),
                T::lit(param(p, "gamma")?),
            )?,
            FamilyTag::Sinh => PsiSpec::sinh(),
            FamilyTag::LogGrowth => {
                PsiSpec::log_growth(T::lit(param(p, "a")?), T::lit(param(p, "b")?))?
            }
            FamilyTag::Custom => {
                let c = r.c.ok_or_else(|| {
                    Error::InvalidPsi("custom nonlinearity requires an explicit `c`".into())
                })?;
                let knots = param_list(p, "knots")?.into_iter().map(T::lit).collect();
                let values = param_list(p, "values")?.into_iter().map(T::lit).collect();
                return PsiSpec::custom(knots, values, T::lit(c));
            }
        };
        match r.c {
            Some(c) => spec.with_c(T::lit(c)),
            None => Ok(spec),
        }
    }
}

impl<T: Scalar> From<&PsiSpec<T>> for PsiRepr {
    fn from(s: &PsiSpec<T>) -> Self {
        use serde_json::json;
        let f = |x: T| json!(x.to_f64_lossy());
        let params = match &s.family {
            PsiFamily::PowerLaw { gamma } => json!({ "gamma": f(*gamma) }),
            PsiFamily::AffinePower { a, b, gamma } => {
                json!({ "a": f(*a), "b": f(*b), "gamma": f(*gamma) })
            }
            PsiFamily::Sinh => json!({}),
            PsiFamily::LogGrowth { a, b } => json!({ "a": f(*a), "b": f(*b) }),
            PsiFamily::CustomSampled { knots, values } => json!({
                "knots": knots.iter().map(|k| k.to_f64_lossy()).collect::<Vec<_>>(),
                "values": values.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>(),
            }),
        };
        PsiRepr {
            family: s.tag(),
            params: match params {
                serde_json::Value::Object(m) => m,
                _ => unreachable!(),
            },
            c: Some(s.c.to_f64_lossy()),
        }
    }
}

impl<T: Scalar> Serialize for PsiSpec<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PsiRepr::from(self).serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PsiSpec<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PsiRepr::deserialize(deserializer)?;
        PsiSpec::try_from(repr).map_err(serde::de::Error::custom)
    }
}
