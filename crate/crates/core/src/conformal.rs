//! Split conformal calibration and set construction.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::answer::AnswerScoreTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A nonconformity value in `[0, 1]`, or `+inf` when a pool has no
/// admissible unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedScore<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> ExtendedScore<S> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedScore::Infinite)
    }

    pub fn finite(&self) -> Option<S> {
        match *self {
            ExtendedScore::Finite(v) => Some(v),
            ExtendedScore::Infinite => None,
        }
    }

    /// `true` when `value <= self`.
    pub fn admits(&self, value: S) -> bool {
        match *self {
            ExtendedScore::Finite(t) => value <= t,
            ExtendedScore::Infinite => true,
        }
    }
}

impl<S: Scalar> Eq for ExtendedScore<S> {}

impl<S: Scalar> PartialOrd for ExtendedScore<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for ExtendedScore<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedScore::Finite(a), ExtendedScore::Finite(b)) => {
                a.partial_cmp(b).expect("finite nonconformity scores are never NaN")
            }
            (ExtendedScore::Finite(_), ExtendedScore::Infinite) => Ordering::Less,
            (ExtendedScore::Infinite, ExtendedScore::Finite(_)) => Ordering::Greater,
            (ExtendedScore::Infinite, ExtendedScore::Infinite) => Ordering::Equal,
        }
    }
}

impl<S: Scalar> fmt::Display for ExtendedScore<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedScore::Finite(v) => write!(f, "{v}"),
            ExtendedScore::Infinite => f.write_str("inf"),
        }
    }
}

impl<S: Scalar> Serialize for ExtendedScore<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            ExtendedScore::Finite(v) => v.serialize(serializer),
            ExtendedScore::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, S: Scalar> Deserialize<'de> for ExtendedScore<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V<S>(std::marker::PhantomData<S>);

        impl<S: Scalar> Visitor<'_> for V<S> {
            type Value = ExtendedScore<S>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                if v.is_infinite() && v > 0.0 {
                    return Ok(ExtendedScore::Infinite);
                }
                if !v.is_finite() {
                    return Err(E::custom("score must be finite or +inf"));
                }
                S::from_f64(v).map(ExtendedScore::Finite).ok_or_else(|| E::custom("score out of range"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v {
                    "inf" | "+inf" | "Infinity" => Ok(ExtendedScore::Infinite),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(V(std::marker::PhantomData))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CalibrationResult<S> {
    pub q_hat: ExtendedScore<S>,
    pub alpha: S,
    pub n_cal: usize,
    pub risk_floor: S,
    pub n_empty: usize,
}

impl<S: Scalar> CalibrationResult<S> {
    pub fn alpha_below_floor(&self) -> bool {
        self.alpha < self.risk_floor
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub question_id: String,
    pub members: BTreeSet<String>,
    /// Whether the set meets an admissible unit; `None` without labels.
    pub covered: Option<bool>,
    pub size: usize,
}

impl PredictionSet {
    /// Sets the `covered` flag from the admissible units of the pool.
    pub fn label(&mut self, admissible: &BTreeSet<String>) {
        self.covered = Some(self.members.iter().any(|m| admissible.contains(m)));
    }
}

/// `1 - max F` over admissible units, or `+inf` when there are none.
pub fn nonconformity<S: Scalar>(table: &AnswerScoreTable<S>, admissible: &BTreeSet<String>) -> Result<ExtendedScore<S>> {
    let mut best: Option<S> = None;
    for unit_id in admissible {
        let entry = table.get(unit_id).ok_or_else(|| Error::UnknownUnit(unit_id.clone()))?;
        best = Some(match best {
            Some(b) if b >= entry.f_combined => b,
            _ => entry.f_combined,
        });
    }
    Ok(match best {
        Some(b) => ExtendedScore::Finite(S::one() - b),
        None => ExtendedScore::Infinite,
    })
}

pub(crate) fn check_alpha<S: Scalar>(alpha: S) -> Result<()> {
    if alpha > S::zero() && alpha < S::one() {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha.as_f64()))
    }
}

/// Rank `ceil((n + 1)(1 - alpha))` among `n` scores plus one `+inf`.
pub fn quantile_rank<S: Scalar>(n: usize, alpha: S) -> Result<usize> {
    check_alpha(alpha)?;
    let target = (n as f64 + 1.0) * (1.0 - alpha.as_f64());
    // Products such as 10 * 0.9 land a hair above the integer.
    let k = (target - 1e-9).ceil().max(1.0) as usize;
    Ok(k.min(n + 1))
}

/// The conformal threshold: `k`-th smallest of `scores ∪ {+inf}`.
pub fn conformal_quantile<S: Scalar>(scores: &[ExtendedScore<S>], alpha: S) -> Result<ExtendedScore<S>> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let k = quantile_rank(scores.len(), alpha)?;
    if k > scores.len() {
        return Ok(ExtendedScore::Infinite);
    }
    let mut sorted = scores.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable(k - 1);
    Ok(*kth)
}

/// All units with `1 - F <= q_hat`.
pub fn prediction_set<S: Scalar>(question_id: &str, table: &AnswerScoreTable<S>, q_hat: ExtendedScore<S>) -> PredictionSet {
    let members: BTreeSet<String> = table
        .entries
        .iter()
        .filter(|e| q_hat.admits(S::one() - e.f_combined))
        .map(|e| e.unit_id.clone())
        .collect();
    PredictionSet {
        question_id: question_id.to_string(),
        size: members.len(),
        members,
        covered: None,
    }
}

/// `(n / (n + 1)) * (empty / n)`, i.e. `empty / (n + 1)`.
pub fn risk_floor<S: Scalar>(empty_flags: &[bool]) -> Result<S> {
    if empty_flags.is_empty() {
        return Err(Error::EmptyScores);
    }
    let n = empty_flags.len();
    let empty = empty_flags.iter().filter(|&&e| e).count();
    Ok((S::count(n) / S::count(n + 1)) * (S::count(empty) / S::count(n)))
}

/// Calibrates from nonconformity scores; `+inf` marks an empty pool.
pub fn calibrate<S: Scalar>(scores: &[ExtendedScore<S>], alpha: S) -> Result<CalibrationResult<S>> {
    let q_hat = conformal_quantile(scores, alpha)?;
    let flags: Vec<bool> = scores.iter().map(ExtendedScore::is_infinite).collect();
    let floor = risk_floor::<S>(&flags)?;
    let result = CalibrationResult {
        q_hat,
        alpha,
        n_cal: scores.len(),
        risk_floor: floor,
        n_empty: flags.iter().filter(|&&e| e).count(),
    };
    if result.alpha_below_floor() {
        log::warn!(
            "alpha {} is below the finite-sample risk floor {:.6} ({} of {} calibration pools have no admissible unit)",
            alpha,
            floor.as_f64(),
            result.n_empty,
            result.n_cal
        );
    }
    Ok(result)
}
