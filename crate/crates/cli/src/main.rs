use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use liconf_core::answer::score_pool;
use liconf_core::conformal::{calibrate, prediction_set};
use liconf_core::experiment::{cross_domain_matrix, group_by_domain, score_questions, sweep_kinds};
use liconf_core::metrics::{self, ssm_definition, DEFAULT_MIN_BIN};
use liconf_core::report::{emit_report, load_results, write_json, Results, CROSSDOMAIN_FILE, SWEEP_FILE};
use liconf_core::trace::{admissible_units, build_pool, read_trace_path, write_trace_file};
use liconf_core::{
    synth, CalibrationResult, ExperimentConfig, ExtendedScore, LayerSelection, MetricReport, PredictionSet,
    QuestionTrace, ReportFormat, ScoreKind, ScoreWeights, SynthSpec, DEFAULT_EPS,
};

#[derive(Parser)]
#[command(name = "liconf", version)]
#[command(about = "Layer-wise information scores with split conformal prediction sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a trace file.
    Validate { trace: PathBuf },
    /// Calibrate a conformal threshold on a labeled trace file.
    Calibrate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build prediction sets from a calibration artifact.
    Predict {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        cal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute EMR, APSS, SSM and optionally the Fano bound for a sets file.
    Evaluate {
        #[arg(long)]
        sets: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_BIN)]
        min_bin: usize,
        /// Label space size; enables the Fano bound.
        #[arg(long)]
        label_space: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated random splits over a list of risk levels.
    Sweep {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
        alphas: Vec<f64>,
        /// Score kinds to run.
        #[arg(long = "scores", value_delimiter = ',', default_value = "layerwise,freq,entropy")]
        kinds: Vec<ScoreKind>,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        scoring: WeightArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibration-domain x test-domain matrices against a comparator score.
    Crossdomain {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "layerwise")]
        score: ScoreKind,
        #[arg(long, default_value = "freq")]
        compare: ScoreKind,
        #[command(flatten)]
        trials: TrialArgs,
        #[command(flatten)]
        scoring: WeightArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic trace file and its truth sidecar.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render csv, json or svg reports from a sweep/crossdomain directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "svg")]
        format: ReportFormat,
        /// Output directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct WeightArgs {
    /// Weight of the LI support term; the frequency weight is 1 - w.
    #[arg(long, default_value_t = 0.5)]
    w_li: f64,
    /// `all` or a list such as `0,2,5-7`.
    #[arg(long, default_value = "all")]
    layers: LayerSelection,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Args, Clone)]
struct ScoringArgs {
    #[arg(long, default_value = "layerwise")]
    score: ScoreKind,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Args, Clone)]
struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0.5)]
    cal_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_BIN)]
    min_bin: usize,
    /// Label space size; enables the Fano bound.
    #[arg(long)]
    label_space: Option<usize>,
}

/// Calibration artifact written by `calibrate` and read by `predict`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CalibrationArtifact {
    q_hat: ExtendedScore,
    alpha: f64,
    n_cal: usize,
    risk_floor: f64,
    score_kind: ScoreKind,
    weights: ScoreWeights,
    ssm_def: String,
    n_empty: usize,
    layers: LayerSelection,
    eps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SetsFile {
    calibration: CalibrationArtifact,
    sets: Vec<PredictionSet>,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    alpha: f64,
    n_cal: usize,
    score_kind: ScoreKind,
    ssm_def: String,
    metrics: MetricReport,
}

fn read_traces(path: &Path) -> Result<Vec<QuestionTrace>> {
    read_trace_path(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_out<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_json(path, value).with_context(|| format!("writing {}", path.display()))
}

fn experiment_config(alphas: Vec<f64>, kind: ScoreKind, comparator: ScoreKind, t: &TrialArgs, w: &WeightArgs) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig {
        alpha_list: alphas,
        cal_ratio: t.cal_ratio,
        n_trials: t.trials,
        score_kind: kind,
        comparator,
        weights: ScoreWeights::from_li_weight(w.w_li)?,
        layer_selection: w.layers.clone(),
        eps: w.eps,
        ssm_min_bin: t.min_bin,
        master_seed: t.seed,
        label_space_size: t.label_space,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn validate(trace: &Path) -> Result<()> {
    let traces = read_traces(trace)?;
    let responses: usize = traces.iter().map(|q| q.responses.len()).sum();
    let empty = traces.iter().filter(|q| admissible_units(&build_pool(q)).is_empty()).count();
    println!(
        "ok: {} questions, {} responses, {} without an admissible unit",
        traces.len(),
        responses,
        empty
    );
    Ok(())
}

fn run_calibrate(trace: &Path, alpha: f64, scoring: &ScoringArgs, out: &Path) -> Result<()> {
    let traces = read_traces(trace)?;
    let weights = ScoreWeights::from_li_weight(scoring.weights.w_li)?;
    let cfg = ExperimentConfig {
        weights,
        layer_selection: scoring.weights.layers.clone(),
        eps: scoring.weights.eps,
        ..Default::default()
    };
    let scored = score_questions(&traces, &cfg, scoring.score)?;
    let scores = scored.iter().map(|q| q.nonconformity()).collect::<liconf_core::Result<Vec<_>>>()?;
    let cal: CalibrationResult = calibrate(&scores, alpha)?;
    if cal.alpha_below_floor() {
        eprintln!(
            "warning: alpha {} is below the risk floor {:.6}; coverage at this level is unattainable",
            alpha, cal.risk_floor
        );
    }
    let artifact = CalibrationArtifact {
        q_hat: cal.q_hat,
        alpha: cal.alpha,
        n_cal: cal.n_cal,
        risk_floor: cal.risk_floor,
        score_kind: scoring.score,
        weights,
        ssm_def: ssm_definition(DEFAULT_MIN_BIN),
        n_empty: cal.n_empty,
        layers: scoring.weights.layers.clone(),
        eps: scoring.weights.eps,
    };
    write_out(out, &artifact)?;
    println!("q_hat = {}, n_cal = {}, risk_floor = {:.6}", cal.q_hat, cal.n_cal, cal.risk_floor);
    Ok(())
}

fn run_predict(trace: &Path, cal: &Path, out: &Path) -> Result<()> {
    let traces = read_traces(trace)?;
    let artifact: CalibrationArtifact = read_json(cal)?;
    let mut sets = Vec::with_capacity(traces.len());
    for q in &traces {
        let pool = build_pool(q);
        let table = score_pool(q, &pool, &artifact.layers, &artifact.weights, artifact.score_kind, artifact.eps)
            .with_context(|| format!("scoring {}", q.question_id))?;
        let mut set = prediction_set(&q.question_id, &table, artifact.q_hat);
        set.label(&admissible_units(&pool));
        sets.push(set);
    }
    let n = sets.len();
    write_out(out, &SetsFile { calibration: artifact, sets })?;
    println!("wrote {n} prediction sets");
    Ok(())
}

fn run_evaluate(sets: &Path, min_bin: usize, label_space: Option<usize>, out: &Path) -> Result<()> {
    let file: SetsFile = read_json(sets)?;
    let cal = &file.calibration;
    let fano = label_space.map(|y| (cal.alpha, cal.n_cal, y));
    let report = metrics::evaluate(&file.sets, min_bin, fano)?;
    println!("EMR = {:.4}, APSS = {:.4}, SSM = {:.4}", report.emr, report.apss, report.ssm);
    write_out(
        out,
        &EvaluationReport {
            alpha: cal.alpha,
            n_cal: cal.n_cal,
            score_kind: cal.score_kind,
            ssm_def: ssm_definition(min_bin),
            metrics: report,
        },
    )
}

fn run_synth(spec: &Path, seed: u64, out: &Path) -> Result<()> {
    let spec = SynthSpec::from_json_path(spec).with_context(|| format!("reading {}", spec.display()))?;
    let (traces, truth) = synth::generate(&spec, seed)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    write_trace_file(&mut w, &traces)?;
    w.flush()?;
    let mut truth_path = out.as_os_str().to_owned();
    truth_path.push(".truth.json");
    truth.write_json_path(PathBuf::from(truth_path))?;
    println!("wrote {} questions, H(Y|X) = {:.6} nats", traces.len(), truth.h_y_given_x);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { trace } => validate(&trace),
        Command::Calibrate { trace, alpha, scoring, out } => run_calibrate(&trace, alpha, &scoring, &out),
        Command::Predict { trace, cal, out } => run_predict(&trace, &cal, &out),
        Command::Evaluate { sets, min_bin, label_space, out } => run_evaluate(&sets, min_bin, label_space, &out),
        Command::Sweep { trace, alphas, kinds, trials, scoring, out } => {
            if kinds.is_empty() {
                bail!("--scores is empty");
            }
            let traces = read_traces(&trace)?;
            let cfg = experiment_config(alphas, kinds[0], ScoreKind::FrequencyOnly, &trials, &scoring)?;
            let result = sweep_kinds(&traces, &cfg, &kinds)?;
            fs::create_dir_all(&out)?;
            for row in &result.rows {
                println!(
                    "{:<16} alpha={:<5} EMR={:.4}±{:.4} APSS={:.3}±{:.3} SSM={:.4}",
                    row.score_kind, row.alpha, row.emr.mean, row.emr.std, row.apss.mean, row.apss.std, row.ssm.mean
                );
            }
            write_out(&out.join(SWEEP_FILE), &result)
        }
        Command::Crossdomain { trace, alpha, score, compare, trials, scoring, out } => {
            let traces = read_traces(&trace)?;
            let cfg = experiment_config(vec![alpha], score, compare, &trials, &scoring)?;
            let result = cross_domain_matrix(&group_by_domain(&traces), &cfg, alpha)?;
            fs::create_dir_all(&out)?;
            println!(
                "off-diagonal means: {} EMR={:.4} APSS={:.3}; {} EMR={:.4} APSS={:.3}",
                result.primary.score_kind,
                result.primary.off_diagonal_emr,
                result.primary.off_diagonal_apss,
                result.comparator.score_kind,
                result.comparator.off_diagonal_emr,
                result.comparator.off_diagonal_apss
            );
            write_out(&out.join(CROSSDOMAIN_FILE), &result)
        }
        Command::Synth { spec, seed, out } => run_synth(&spec, seed, &out),
        Command::Report { input, format, out } => {
            let results: Vec<Results> = load_results(&input)?;
            let out = out.unwrap_or(input);
            for path in emit_report(&results, format, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}
