//! Library results against independent brute-force re-implementations.

use std::path::PathBuf;

use liconf_core::answer::{frequency_score, li_support_score, score_pool};
use liconf_core::li::{layerwise_information, normalize_pool};
use liconf_core::seed::CounterRng;
use liconf_core::trace::{build_pool, read_trace_path, TokenLayerLogp};
use liconf_core::{LayerSelection, QuestionTrace, ResponseTrace, ScoreKind, ScoreWeights, TaskType};
use rand::Rng;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pool_m20.jsonl")
}

fn random_question(rng: &mut CounterRng, id: usize, num_layers: usize, labels: &[&str]) -> QuestionTrace {
    let m = rng.random_range(3..=20);
    let t = rng.random_range(1..=4);
    let admissible: Vec<bool> = labels.iter().map(|_| rng.random_bool(0.4)).collect();
    let responses = (0..m)
        .map(|j| {
            let u = rng.random_range(0..labels.len());
            let tokens = (0..t)
                .map(|_| TokenLayerLogp {
                    logp_ctx: (0..num_layers).map(|_| -rng.random_range(0.0..4.0)).collect(),
                    logp_null: (0..num_layers).map(|_| -rng.random_range(0.0..4.0)).collect(),
                })
                .collect();
            ResponseTrace {
                response_id: j as i64,
                text: labels[u].to_string(),
                parsed_unit: labels[u].to_string(),
                admissible: admissible[u],
                tokens,
            }
        })
        .collect();
    QuestionTrace {
        question_id: format!("r{id}"),
        domain: "oracle".into(),
        task_type: TaskType::Mcqa,
        num_layers,
        ground_truth_unit: None,
        responses,
    }
}

/// Sum over layers of (mean null surprisal - mean context surprisal).
fn loop_li(r: &ResponseTrace, layers: &[usize]) -> f64 {
    let mut total = 0.0;
    for &l in layers {
        let mut h_ctx = 0.0;
        let mut h_null = 0.0;
        for tok in &r.tokens {
            h_ctx -= tok.logp_ctx[l];
            h_null -= tok.logp_null[l];
        }
        let t = r.tokens.len() as f64;
        total += h_null / t - h_ctx / t;
    }
    total
}

#[test]
fn fixture_frequency_matches_string_scan() {
    let text = std::fs::read_to_string(fixture_path()).unwrap();
    let first = text.lines().next().unwrap();
    let c_count = first.matches(r#""parsed_unit":"C""#).count();
    let m = first.matches(r#""response_id":"#).count();
    assert_eq!((c_count, m), (5, 20));

    let traces: Vec<QuestionTrace> = read_trace_path(fixture_path()).unwrap();
    let pool = build_pool(&traces[0]);
    assert_eq!(pool.unit("C").unwrap().member_indices.len(), c_count);
    assert_eq!(frequency_score::<f64>(&pool, "C").unwrap(), c_count as f64 / m as f64);
    assert_eq!(frequency_score::<f64>(&pool, "C").unwrap(), 0.25);

    let p2 = build_pool(&traces[1]);
    let a = p2.unit("A").unwrap();
    assert_eq!(a.member_indices, vec![0, 2, 3]);
    assert_eq!(p2.unit("B").unwrap().member_indices, vec![1]);
}

#[test]
fn layerwise_information_matches_token_loop() {
    let mut rng = CounterRng::new(41);
    for case in 0..200 {
        let q = random_question(&mut rng, case, 4, &["A", "B", "C"]);
        for r in &q.responses {
            let lib = layerwise_information(r, &LayerSelection::All).unwrap();
            assert!((lib - loop_li(r, &[0, 1, 2, 3])).abs() < 1e-12);
            let sel: LayerSelection = "1,3".parse().unwrap();
            assert!((layerwise_information(r, &sel).unwrap() - loop_li(r, &[1, 3])).abs() < 1e-12);
        }
    }
}

#[test]
fn li_support_matches_masked_mean() {
    let mut rng = CounterRng::new(42);
    for case in 0..200 {
        let q = random_question(&mut rng, case, 2, &["A", "B", "C", "D"]);
        let pool = build_pool(&q);
        let values: Vec<f64> = (0..q.responses.len()).map(|_| rng.random::<f64>()).collect();
        for u in pool.units() {
            let (mut sum, mut n) = (0.0, 0usize);
            for (j, r) in q.responses.iter().enumerate() {
                if r.parsed_unit == u.unit_id {
                    sum += values[j];
                    n += 1;
                }
            }
            let lib = li_support_score(&pool, &u.unit_id, &values).unwrap();
            assert!((lib - sum / n as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn layerwise_table_matches_straight_line() {
    let eps = 1e-8;
    let mut rng = CounterRng::new(43);
    for case in 0..300 {
        let q = random_question(&mut rng, case, 4, &["A", "B", "C"]);
        let w_li = rng.random_range(0.0..=1.0);
        let weights = ScoreWeights::from_li_weight(w_li).unwrap();
        let table = score_pool(&q, &build_pool(&q), &LayerSelection::All, &weights, ScoreKind::Layerwise, eps).unwrap();

        let li: Vec<f64> = q.responses.iter().map(|r| loop_li(r, &[0, 1, 2, 3])).collect();
        let lo = li.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = li.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm: Vec<f64> = li.iter().map(|v| (v - lo) / (hi - lo + eps)).collect();
        assert_eq!(normalize_pool(&li, eps).len(), norm.len());

        let mut seen: Vec<&str> = Vec::new();
        for r in &q.responses {
            if !seen.contains(&r.parsed_unit.as_str()) {
                seen.push(&r.parsed_unit);
            }
        }
        assert_eq!(seen.len(), table.len());
        for unit in seen {
            let members: Vec<usize> = (0..q.responses.len()).filter(|&j| q.responses[j].parsed_unit == unit).collect();
            let f_li = members.iter().map(|&j| norm[j]).sum::<f64>() / members.len() as f64;
            let f_f = members.len() as f64 / q.responses.len() as f64;
            let f = w_li * f_li + (1.0 - w_li) * f_f;
            let e = table.get(unit).unwrap();
            assert!((e.f_li - f_li).abs() < 1e-10, "case {case} unit {unit}");
            assert!((e.f_freq - f_f).abs() < 1e-12);
            assert!((e.f_combined - f).abs() < 1e-10);
        }
    }
}
