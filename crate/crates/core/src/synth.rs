//! Synthetic trace generator with known ground truth.
//!
//! Per question a true answer distribution `p = softmax(sharpness * z)` is
//! drawn and the ground truth `y* ~ p`. Responses are sampled from the
//! mixture `f * p + (1 - f) * r` where `r` is an unrelated distractor
//! distribution, so `f` controls how much sampling frequency says about the
//! answer. Per-token, per-layer log-probabilities are built so that the
//! entropy drop between null and question context grows with
//! `li_informativeness * p(unit)`; the layer-wise information of a response
//! therefore tracks how likely its unit is to be correct without revealing
//! the realized label.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::li::{layerwise_information, LayerSelection};
use crate::metrics::auroc;
use crate::seed::{combine, hash_label, CounterRng};
use crate::trace::{TaskType, TokenLayerLogp};
use crate::{QuestionTrace, ResponseTrace};

// Stream tags keep question-level and token-level draws apart.
const STREAM_QUESTION: u64 = 0x51;
const STREAM_TOKEN: u64 = 0x7a;

const BASE_GAIN: f64 = 0.2;
const SIGNAL_SCALE: f64 = 2.0;
const H_NULL_RANGE: (f64, f64) = (0.5, 3.0);

fn default_one() -> f64 {
    1.0
}

/// Per-domain multipliers on the two informativeness knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftMultipliers {
    #[serde(default = "default_one")]
    pub li: f64,
    #[serde(default = "default_one")]
    pub freq: f64,
}

impl Default for ShiftMultipliers {
    fn default() -> Self {
        Self { li: 1.0, freq: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Questions per domain.
    pub n_questions: usize,
    pub domains: Vec<String>,
    pub m: usize,
    pub num_layers: usize,
    pub label_space_size: usize,
    pub answer_distribution_sharpness: f64,
    pub li_informativeness: f64,
    pub freq_informativeness: f64,
    #[serde(default)]
    pub shift: BTreeMap<String, ShiftMultipliers>,
    #[serde(default)]
    pub empty_pool_rate: f64,
    #[serde(default = "SynthSpec::default_tokens")]
    pub tokens_per_response: usize,
    /// Standard deviation of the per-token, per-layer gain noise.
    #[serde(default = "SynthSpec::default_li_noise")]
    pub li_noise: f64,
    /// Sharpness of the distractor distribution mixed into sampling.
    #[serde(default = "SynthSpec::default_distractor_sharpness")]
    pub distractor_sharpness: f64,
}

impl SynthSpec {
    fn default_tokens() -> usize {
        1
    }

    fn default_li_noise() -> f64 {
        0.3
    }

    fn default_distractor_sharpness() -> f64 {
        0.7
    }

    /// A single-domain spec with default extras.
    pub fn single(domain: &str, n_questions: usize, m: usize, num_layers: usize, label_space_size: usize) -> Self {
        Self {
            n_questions,
            domains: vec![domain.to_string()],
            m,
            num_layers,
            label_space_size,
            answer_distribution_sharpness: 1.0,
            li_informativeness: 0.5,
            freq_informativeness: 1.0,
            shift: BTreeMap::new(),
            empty_pool_rate: 0.0,
            tokens_per_response: Self::default_tokens(),
            li_noise: Self::default_li_noise(),
            distractor_sharpness: Self::default_distractor_sharpness(),
        }
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: Self = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    fn knobs(&self, domain: &str) -> (f64, f64) {
        let s = self.shift.get(domain).copied().unwrap_or_default();
        (self.li_informativeness * s.li, self.freq_informativeness * s.freq)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.n_questions == 0 {
            return bad("n_questions must be at least 1".into());
        }
        if self.domains.is_empty() {
            return bad("domains is empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.domains {
            if d.is_empty() || !seen.insert(d) {
                return bad(format!("domain labels must be non-empty and unique, got `{d}`"));
            }
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.num_layers == 0 {
            return bad("num_layers must be at least 1".into());
        }
        if self.label_space_size == 0 {
            return bad("label_space_size must be at least 1".into());
        }
        if self.tokens_per_response == 0 {
            return bad("tokens_per_response must be at least 1".into());
        }
        if self.answer_distribution_sharpness.is_nan() || self.answer_distribution_sharpness <= 0.0 {
            return bad("answer_distribution_sharpness must be positive".into());
        }
        if !(self.li_noise >= 0.0 && self.li_noise.is_finite()) {
            return bad("li_noise must be finite and non-negative".into());
        }
        if !(self.distractor_sharpness >= 0.0 && self.distractor_sharpness.is_finite()) {
            return bad("distractor_sharpness must be finite and non-negative".into());
        }
        if !unit(self.li_informativeness) || !unit(self.freq_informativeness) {
            return bad("informativeness knobs must lie in [0, 1]".into());
        }
        if !(self.empty_pool_rate >= 0.0 && self.empty_pool_rate < 1.0) {
            return bad("empty_pool_rate must lie in [0, 1)".into());
        }
        if self.empty_pool_rate > 0.0 && self.label_space_size < 2 {
            return bad("empty pools need at least 2 labels".into());
        }
        for d in self.shift.keys() {
            if !self.domains.contains(d) {
                return bad(format!("shift names unknown domain `{d}`"));
            }
        }
        for d in &self.domains {
            let (li, f) = self.knobs(d);
            if !unit(li) || !unit(f) {
                return bad(format!("shifted knobs for domain `{d}` leave [0, 1]: li {li}, freq {f}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTruth {
    pub question_id: String,
    pub domain: String,
    pub distribution: Vec<f64>,
    pub entropy: f64,
    pub ground_truth_unit: String,
    /// Admissible responses were suppressed on purpose.
    pub suppressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub h_y_given_x: f64,
    pub h_by_domain: BTreeMap<String, f64>,
    pub labels: Vec<String>,
    pub questions: Vec<QuestionTruth>,
}

impl SynthTruth {
    pub fn write_json_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Unit labels: letters up to 26 units, `U00`, `U01`, ... beyond.
pub fn unit_labels(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|k| char::from(b'A' + k as u8).to_string()).collect()
    } else {
        let width = (n - 1).to_string().len().max(2);
        (0..n).map(|k| format!("U{k:0width$}")).collect()
    }
}

/// Entropy in nats of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// Mean per-question entropy of the true answer distributions.
pub fn truth_entropy(truth: &SynthTruth) -> f64 {
    if truth.questions.is_empty() {
        return 0.0;
    }
    truth.questions.iter().map(|q| entropy(&q.distribution)).sum::<f64>() / truth.questions.len() as f64
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    if logits.iter().any(|v| !v.is_finite()) {
        // Infinite sharpness: point mass on the arg max.
        let best = logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        return (0..logits.len()).map(|i| f64::from(u8::from(i == best))).collect();
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn normal_vector(rng: &mut CounterRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn layer_profile(layer: usize, num_layers: usize) -> f64 {
    0.5 + (std::f64::consts::PI * (layer + 1) as f64 / (num_layers + 1) as f64).sin()
}

struct Generated {
    trace: QuestionTrace,
    truth: QuestionTruth,
}

fn generate_question(spec: &SynthSpec, seed: u64, domain: &str, index: usize, labels: &[String]) -> Result<Generated> {
    let y = spec.label_space_size;
    let (li, f) = spec.knobs(domain);
    let dom = hash_label(domain);
    let mut rng = CounterRng::keyed(&[seed, dom, index as u64, STREAM_QUESTION]);

    let p = softmax(&normal_vector(&mut rng, y, spec.answer_distribution_sharpness));
    let truth_idx = WeightedIndex::new(&p).expect("softmax weights are valid").sample(&mut rng);
    let r = softmax(&normal_vector(&mut rng, y, spec.distractor_sharpness));
    let suppressed = spec.empty_pool_rate > 0.0 && rng.random::<f64>() < spec.empty_pool_rate;

    let mut q: Vec<f64> = p.iter().zip(&r).map(|(pi, ri)| f * pi + (1.0 - f) * ri).collect();
    if suppressed {
        q[truth_idx] = 0.0;
        if q.iter().all(|&v| v <= 0.0) {
            q = (0..y).map(|k| f64::from(u8::from(k != truth_idx))).collect();
        }
    }
    let sampler = WeightedIndex::new(&q).map_err(|e| Error::InvalidSpec(format!("response distribution: {e}")))?;
    let units: Vec<usize> = (0..spec.m).map(|_| sampler.sample(&mut rng)).collect();

    let responses = units
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let signal = li * SIGNAL_SCALE * p[u];
            let response_key = combine(&[seed, dom, index as u64, j as u64, STREAM_TOKEN]);
            let tokens = (0..spec.tokens_per_response)
                .map(|t| {
                    let (logp_ctx, logp_null) = (0..spec.num_layers)
                        .map(|l| {
                            let mut cell = CounterRng::keyed(&[response_key, t as u64, l as u64]);
                            let h_null = cell.random_range(H_NULL_RANGE.0..H_NULL_RANGE.1);
                            let noise: f64 = cell.sample(StandardNormal);
                            let gain = BASE_GAIN + signal * layer_profile(l, spec.num_layers) + spec.li_noise * noise;
                            (-h_null * (-gain).exp(), -h_null)
                        })
                        .unzip();
                    TokenLayerLogp { logp_ctx, logp_null }
                })
                .collect();
            ResponseTrace {
                response_id: j as i64,
                text: labels[u].clone(),
                parsed_unit: labels[u].clone(),
                admissible: u == truth_idx,
                tokens,
            }
        })
        .collect();

    let question_id = format!("{domain}-{index:05}");
    Ok(Generated {
        trace: QuestionTrace {
            question_id: question_id.clone(),
            domain: domain.to_string(),
            task_type: TaskType::Mcqa,
            num_layers: spec.num_layers,
            ground_truth_unit: Some(labels[truth_idx].clone()),
            responses,
        },
        truth: QuestionTruth {
            question_id,
            domain: domain.to_string(),
            entropy: entropy(&p),
            distribution: p,
            ground_truth_unit: labels[truth_idx].clone(),
            suppressed,
        },
    })
}

/// Generates `n_questions` per domain, domains in spec order.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<(Vec<QuestionTrace>, SynthTruth)> {
    spec.validate()?;
    let labels = unit_labels(spec.label_space_size);
    let jobs: Vec<(&str, usize)> = spec
        .domains
        .iter()
        .flat_map(|d| (0..spec.n_questions).map(move |i| (d.as_str(), i)))
        .collect();
    let generated = jobs
        .par_iter()
        .map(|&(d, i)| generate_question(spec, seed, d, i, &labels))
        .collect::<Result<Vec<_>>>()?;

    let (traces, questions): (Vec<_>, Vec<_>) = generated.into_iter().map(|g| (g.trace, g.truth)).unzip();
    let mut h_by_domain = BTreeMap::new();
    for d in &spec.domains {
        let hs: Vec<f64> = questions.iter().filter(|q| &q.domain == d).map(|q| q.entropy).collect();
        h_by_domain.insert(d.clone(), hs.iter().sum::<f64>() / hs.len() as f64);
    }
    let mut truth = SynthTruth {
        h_y_given_x: 0.0,
        h_by_domain,
        labels,
        questions,
    };
    truth.h_y_given_x = truth_entropy(&truth);
    Ok((traces, truth))
}

/// AUROC of raw layer-wise information for response admissibility.
pub fn li_auroc(traces: &[QuestionTrace], sel: &LayerSelection) -> Result<Option<f64>> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for q in traces {
        for r in &q.responses {
            scores.push(layerwise_information(r, sel)?);
            labels.push(r.admissible);
        }
    }
    Ok(auroc(&scores, &labels))
}

/// Derived seed for replicate `k` of a spec; handy for repeated draws.
pub fn replicate_seed(seed: u64, k: usize) -> u64 {
    combine(&[seed, k as u64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{admissible_units, build_pool, validate_traces};
    use approx::assert_abs_diff_eq;

    fn spec(n: usize) -> SynthSpec {
        SynthSpec::single("d", n, 10, 4, 4)
    }

    #[test]
    fn generated_traces_validate() {
        let mut s = spec(50);
        s.domains = vec!["a".into(), "b".into()];
        s.tokens_per_response = 3;
        s.empty_pool_rate = 0.3;
        let (traces, truth) = generate(&s, 11).unwrap();
        assert_eq!(traces.len(), 100);
        validate_traces(&traces).unwrap();
        assert_eq!(traces[0].question_id, "a-00000");
        assert_eq!(traces[50].question_id, "b-00000");
        assert_eq!(truth.questions.len(), 100);
        for (q, t) in traces.iter().zip(&truth.questions) {
            assert_eq!(q.ground_truth_unit.as_deref(), Some(t.ground_truth_unit.as_str()));
            if t.suppressed {
                assert!(admissible_units(&build_pool(q)).is_empty());
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&spec(20), 5).unwrap();
        let b = generate(&spec(20), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, generate(&spec(20), 6).unwrap().0);
    }

    #[test]
    fn point_mass_has_zero_entropy() {
        let mut s = spec(30);
        s.answer_distribution_sharpness = 1e12;
        let (_, truth) = generate(&s, 1).unwrap();
        assert_eq!(truth.h_y_given_x, 0.0);
        s.answer_distribution_sharpness = f64::INFINITY;
        let (_, truth) = generate(&s, 1).unwrap();
        assert_eq!(truth.h_y_given_x, 0.0);
    }

    #[test]
    fn truth_entropy_examples() {
        let q = |d: Vec<f64>| QuestionTruth {
            question_id: "q".into(),
            domain: "d".into(),
            entropy: 0.0,
            distribution: d,
            ground_truth_unit: "A".into(),
            suppressed: false,
        };
        let mut t = SynthTruth {
            h_y_given_x: 0.0,
            h_by_domain: BTreeMap::new(),
            labels: unit_labels(4),
            questions: vec![q(vec![0.25; 4]); 3],
        };
        assert_abs_diff_eq!(truth_entropy(&t), 4f64.ln(), epsilon = 1e-15);
        t.questions = vec![q(vec![0.0, 1.0, 0.0, 0.0])];
        assert_eq!(truth_entropy(&t), 0.0);
    }

    #[test]
    fn labels() {
        assert_eq!(unit_labels(3), vec!["A", "B", "C"]);
        assert_eq!(unit_labels(30)[29], "U29");
        assert_eq!(unit_labels(30)[0], "U00");
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(5);
        s.li_informativeness = 1.5;
        assert!(s.validate().is_err());
        let mut s = spec(5);
        s.shift.insert("d".into(), ShiftMultipliers { li: 3.0, freq: 1.0 });
        assert!(s.validate().is_err());
        let mut s = spec(5);
        s.shift.insert("zzz".into(), ShiftMultipliers::default());
        assert!(s.validate().is_err());
        let mut s = spec(5);
        s.m = 0;
        assert!(matches!(generate(&s, 0), Err(Error::InvalidSpec(_))));
        let json = r#"{"n_questions": 3, "domains": ["x"], "m": 5, "num_layers": 2, "label_space_size": 4,
            "answer_distribution_sharpness": 1.0, "li_informativeness": 0.5, "freq_informativeness": 1.0,
            "shift": {"x": {"freq": 0.5}}}"#;
        let s: SynthSpec = serde_json::from_str(json).unwrap();
        s.validate().unwrap();
        assert_eq!(s.shift["x"].li, 1.0);
        assert_eq!(s.tokens_per_response, 1);
    }

    #[test]
    fn informative_li_separates_admissibility() {
        let mut s = spec(300);
        s.li_informativeness = 1.0;
        let (traces, _) = generate(&s, 2).unwrap();
        let auc = li_auroc(&traces, &LayerSelection::All).unwrap().unwrap();
        assert!(auc > 0.65, "auroc {auc}");
    }
}
