//! Answer-unit reliability scores.
//!
//! Response-level evidence is lifted to answer units by averaging over the
//! responses that parse to the unit. The layerwise score mixes the averaged
//! normalized LI with the unit's sampling frequency; two output-level
//! baselines (frequency alone, and a final-layer predictive entropy score)
//! share the same table shape so they can be swapped into the conformal
//! wrapper unchanged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::li::{layerwise_information, normalize_pool, response_entropy, Context, LayerSelection};
use crate::scalar::Scalar;
use crate::trace::{CandidatePool, QuestionTrace};

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Convex weights of the LI support and frequency components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", try_from = "[S; 2]", into = "[S; 2]")]
pub struct ScoreWeights<S> {
    w_li: S,
    w_f: S,
}

impl<S: Scalar> ScoreWeights<S> {
    pub fn new(w_li: S, w_f: S) -> Result<Self> {
        let ok = w_li >= S::zero()
            && w_f >= S::zero()
            && ((w_li + w_f) - S::one()).abs() <= S::lit(WEIGHT_TOLERANCE);
        if !ok {
            return Err(Error::InvalidWeights {
                w_li: w_li.as_f64(),
                w_f: w_f.as_f64(),
            });
        }
        Ok(Self { w_li, w_f })
    }

    /// `(w_li, 1 - w_li)`.
    pub fn from_li_weight(w_li: S) -> Result<Self> {
        Self::new(w_li, S::one() - w_li)
    }

    pub fn w_li(&self) -> S {
        self.w_li
    }

    pub fn w_f(&self) -> S {
        self.w_f
    }
}

impl<S: Scalar> Default for ScoreWeights<S> {
    fn default() -> Self {
        let half = S::lit(0.5);
        Self { w_li: half, w_f: half }
    }
}

impl<S: Scalar> TryFrom<[S; 2]> for ScoreWeights<S> {
    type Error = Error;

    fn try_from(w: [S; 2]) -> Result<Self> {
        Self::new(w[0], w[1])
    }
}

impl<S: Scalar> From<ScoreWeights<S>> for [S; 2] {
    fn from(w: ScoreWeights<S>) -> Self {
        [w.w_li, w.w_f]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    #[default]
    Layerwise,
    FrequencyOnly,
    /// Final-layer predictive entropy; a stand-in comparator.
    EntropyBaseline,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 3] = [ScoreKind::Layerwise, ScoreKind::FrequencyOnly, ScoreKind::EntropyBaseline];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Layerwise => "layerwise",
            ScoreKind::FrequencyOnly => "frequency_only",
            ScoreKind::EntropyBaseline => "entropy_baseline",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layerwise" | "lw" => Ok(ScoreKind::Layerwise),
            "freq" | "frequency" | "frequency_only" => Ok(ScoreKind::FrequencyOnly),
            "entropy" | "entropy_baseline" => Ok(ScoreKind::EntropyBaseline),
            other => Err(Error::InvalidConfig(format!("unknown score kind `{other}`"))),
        }
    }
}

/// Scores of one answer unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct UnitScore<S> {
    pub unit_id: String,
    /// Internal support: mean normalized LI for `layerwise`, mean normalized
    /// negative final-layer entropy for `entropy_baseline`, zero for
    /// `frequency_only`.
    pub f_li: S,
    pub f_freq: S,
    pub f_combined: S,
}

/// Per-unit scores of one candidate pool, ordered by `unit_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AnswerScoreTable<S> {
    pub kind: ScoreKind,
    pub entries: Vec<UnitScore<S>>,
}

impl<S: Scalar> AnswerScoreTable<S> {
    pub fn get(&self, unit_id: &str) -> Option<&UnitScore<S>> {
        self.entries
            .binary_search_by(|e| e.unit_id.as_str().cmp(unit_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn unit<'a>(pool: &'a CandidatePool, unit_id: &str) -> Result<&'a crate::trace::AnswerUnit> {
    pool.unit(unit_id).ok_or_else(|| Error::UnknownUnit(unit_id.to_string()))
}

/// Share of the pool's responses that parse to `unit_id`.
pub fn frequency_score<S: Scalar>(pool: &CandidatePool, unit_id: &str) -> Result<S> {
    let u = unit(pool, unit_id)?;
    Ok(S::count(u.member_indices.len()) / S::count(pool.m()))
}

/// Mean of `normalized_li` over the unit's member responses.
pub fn li_support_score<S: Scalar>(pool: &CandidatePool, unit_id: &str, normalized_li: &[S]) -> Result<S> {
    if normalized_li.len() != pool.m() {
        return Err(Error::LengthMismatch {
            expected: pool.m(),
            found: normalized_li.len(),
        });
    }
    let u = unit(pool, unit_id)?;
    let total: S = u.member_indices.iter().map(|&j| normalized_li[j]).sum();
    Ok(total / S::count(u.member_indices.len()))
}

pub fn combined_score<S: Scalar>(f_li: S, f_freq: S, w: &ScoreWeights<S>) -> S {
    w.w_li * f_li + w.w_f * f_freq
}

/// Scores every unit of `pool` under the chosen score kind.
pub fn score_pool<S: Scalar>(
    q: &QuestionTrace<S>,
    pool: &CandidatePool,
    sel: &LayerSelection,
    w: &ScoreWeights<S>,
    kind: ScoreKind,
    eps: S,
) -> Result<AnswerScoreTable<S>> {
    if pool.m() != q.responses.len() {
        return Err(Error::LengthMismatch {
            expected: q.responses.len(),
            found: pool.m(),
        });
    }
    let support: Option<Vec<S>> = match kind {
        ScoreKind::FrequencyOnly => None,
        ScoreKind::Layerwise => {
            let raw = q
                .responses
                .iter()
                .map(|r| layerwise_information(r, sel))
                .collect::<Result<Vec<S>>>()?;
            Some(normalize_pool(&raw, eps))
        }
        ScoreKind::EntropyBaseline => {
            let last = sel.final_layer(q.num_layers)?;
            let neg_entropy = q
                .responses
                .iter()
                .map(|r| response_entropy(r, last, Context::WithQuestion).map(|h| -h))
                .collect::<Result<Vec<S>>>()?;
            Some(normalize_pool(&neg_entropy, eps))
        }
    };

    let entries = pool
        .units()
        .iter()
        .map(|u| {
            let f_freq = frequency_score(pool, &u.unit_id)?;
            let f_li = match &support {
                Some(values) => li_support_score(pool, &u.unit_id, values)?,
                None => S::zero(),
            };
            let f_combined = match kind {
                ScoreKind::Layerwise => combined_score(f_li, f_freq, w),
                ScoreKind::FrequencyOnly => f_freq,
                ScoreKind::EntropyBaseline => f_li,
            };
            Ok(UnitScore {
                unit_id: u.unit_id.clone(),
                f_li,
                f_freq,
                f_combined,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnswerScoreTable { kind, entries })
}
