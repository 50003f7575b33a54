//! Layer-wise usable information scores wrapped in split conformal
//! prediction, with evaluation harness and synthetic trace generator.

pub mod answer;
pub mod conformal;
pub mod error;
pub mod experiment;
pub mod li;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod trace;

pub use answer::{ScoreKind, UnitScore};
pub use conformal::PredictionSet;
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, TrialResult};
pub use li::{Context, LayerSelection, DEFAULT_EPS};
pub use report::ReportFormat;
pub use scalar::Scalar;
pub use synth::{SynthSpec, SynthTruth};
pub use trace::{AnswerUnit, CandidatePool, TaskType};

pub type TokenLayerLogp = trace::TokenLayerLogp<f64>;
pub type ResponseTrace = trace::ResponseTrace<f64>;
pub type QuestionTrace = trace::QuestionTrace<f64>;
pub type LiValue = li::LiValue<f64>;
pub type ScoreWeights = answer::ScoreWeights<f64>;
pub type AnswerScoreTable = answer::AnswerScoreTable<f64>;
pub type ExtendedScore = conformal::ExtendedScore<f64>;
pub type CalibrationResult = conformal::CalibrationResult<f64>;
pub type MetricReport = metrics::MetricReport<f64>;
