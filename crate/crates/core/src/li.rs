//! Layer-wise usable information of a sampled response.
//!
//! For every scored layer the response's empirical entropy is computed twice,
//! with the question in context and under the null context. The per-layer
//! information is the entropy drop caused by the question; summing it over a
//! layer selection gives the raw LI value, which is then min-max normalized
//! within the question's candidate pool.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trace::{QuestionTrace, ResponseTrace};

/// Default denominator guard for within-pool normalization.
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    WithQuestion,
    Null,
}

/// Which layers contribute to the LI sum.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum LayerSelection {
    #[default]
    All,
    Explicit(BTreeSet<usize>),
}

impl LayerSelection {
    /// Resolves the selection against a trace with `num_layers` layers.
    pub fn layers(&self, num_layers: usize) -> Result<Vec<usize>> {
        match self {
            LayerSelection::All if num_layers == 0 => Err(Error::EmptySelection),
            LayerSelection::All => Ok((0..num_layers).collect()),
            LayerSelection::Explicit(set) => {
                if set.is_empty() {
                    return Err(Error::EmptySelection);
                }
                if let Some(&layer) = set.iter().find(|&&l| l >= num_layers) {
                    return Err(Error::LayerOutOfRange { layer, num_layers });
                }
                Ok(set.iter().copied().collect())
            }
        }
    }

    /// Deepest selected layer.
    pub fn final_layer(&self, num_layers: usize) -> Result<usize> {
        Ok(*self.layers(num_layers)?.last().expect("non-empty selection"))
    }
}

impl fmt::Display for LayerSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSelection::All => f.write_str("all"),
            LayerSelection::Explicit(set) => {
                let parts: Vec<String> = set.iter().map(usize::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Accepts `all` or a comma list of indices and inclusive ranges, e.g. `0,2,5-7`.
impl FromStr for LayerSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(LayerSelection::All);
        }
        let bad = || Error::InvalidLayerSpec(s.to_string());
        let mut set = BTreeSet::new();
        for part in s.split(',').map(str::trim) {
            match part.split_once('-') {
                Some((lo, hi)) => {
                    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                    if lo > hi {
                        return Err(bad());
                    }
                    set.extend(lo..=hi);
                }
                None => {
                    set.insert(part.parse().map_err(|_| bad())?);
                }
            }
        }
        if set.is_empty() {
            return Err(Error::EmptySelection);
        }
        Ok(LayerSelection::Explicit(set))
    }
}

impl Serialize for LayerSelection {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LayerSelection {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Raw LI of a response and, once the pool is known, its normalized value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LiValue<S> {
    pub raw: S,
    pub normalized: Option<S>,
}

fn check_layer<S: Scalar>(r: &ResponseTrace<S>, layer: usize) -> Result<()> {
    let num_layers = r.num_layers();
    if layer >= num_layers {
        return Err(Error::LayerOutOfRange { layer, num_layers });
    }
    Ok(())
}

/// Mean negative log-probability of the realized tokens at one layer (nats).
pub fn response_entropy<S: Scalar>(r: &ResponseTrace<S>, layer: usize, context: Context) -> Result<S> {
    check_layer(r, layer)?;
    let total: S = r
        .tokens
        .iter()
        .map(|t| match context {
            Context::WithQuestion => -t.logp_ctx[layer],
            Context::Null => -t.logp_null[layer],
        })
        .sum();
    Ok(total / S::count(r.tokens.len()))
}

/// Entropy drop from conditioning on the question at one layer. Negative
/// values mean the question made the response less predictable.
pub fn per_layer_information<S: Scalar>(r: &ResponseTrace<S>, layer: usize) -> Result<S> {
    Ok(response_entropy(r, layer, Context::Null)? - response_entropy(r, layer, Context::WithQuestion)?)
}

/// Sum of per-layer information over the selected layers.
pub fn layerwise_information<S: Scalar>(r: &ResponseTrace<S>, sel: &LayerSelection) -> Result<S> {
    sel.layers(r.num_layers())?
        .into_iter()
        .map(|l| per_layer_information(r, l))
        .sum()
}

/// Min-max rescaling within one candidate pool: `(v - min) / (max - min + eps)`.
///
/// Order-preserving; results lie in `[0, 1)` up to rounding. An all-equal pool
/// maps to zeros.
pub fn normalize_pool<S: Scalar>(values: &[S], eps: S) -> Vec<S> {
    assert!(eps > S::zero(), "eps must be positive");
    let (min, max) = values
        .iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let denom = max - min + eps;
    values.iter().map(|&v| (v - min) / denom).collect()
}

/// Raw and pool-normalized LI for every response of a question.
pub fn pool_li<S: Scalar>(q: &QuestionTrace<S>, sel: &LayerSelection, eps: S) -> Result<Vec<LiValue<S>>> {
    let raw = q
        .responses
        .iter()
        .map(|r| layerwise_information(r, sel))
        .collect::<Result<Vec<S>>>()?;
    let normalized = normalize_pool(&raw, eps);
    Ok(raw
        .into_iter()
        .zip(normalized)
        .map(|(raw, n)| LiValue { raw, normalized: Some(n) })
        .collect())
}
