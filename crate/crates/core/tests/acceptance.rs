//! Acceptance suite. Each test covers one release criterion, checks it at
//! its stated tolerance and runtime budget, and prints one PASS line
//! (run with `--nocapture` to see them).
//!
//! Criterion 1 checks the published dataset statistics when the real split
//! files are present (point `TWEETSIFT_DATA_DIR` at a directory holding
//! `train.tsv` and `valid.tsv`); otherwise it runs the identical check
//! against the bundled fixture with known counts.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tweetsift::cli::{self, Manifest, RunConfig};
use tweetsift::corpus::{self, Label, SplitName};
use tweetsift::ensemble::{average_combine, vote_combine, ProbabilityMatrix, TieBreak};
use tweetsift::metrics;
use tweetsift::model::{Checkpoint, Classifier, Gradients};
use tweetsift::synthetic;
use tweetsift::trainer::{select_best, EpochRecord, LrHistory};

fn finish(criterion: usize, name: &str, start: Instant, budget: Duration, detail: String) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its {budget:?} budget: {elapsed:?}"
    );
    println!("criterion {criterion} ({name}): PASS [{elapsed:?}] {detail}");
}

// ---------------------------------------------------------------------------
// 1. Dataset statistics
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_dataset_statistics() {
    let start = Instant::now();
    let detail = match official_data_dir() {
        Some(dir) => {
            let train = cli::cmd_stats(dir.join("train.tsv")).expect("official train file");
            assert_eq!((train.informative, train.uninformative), (3303, 3697));
            let valid = cli::cmd_stats(dir.join("valid.tsv")).expect("official valid file");
            assert_eq!((valid.informative, valid.uninformative), (472, 528));
            format!("official files: train 3303/3697, valid 472/528 ({})", dir.display())
        }
        None => {
            let train = cli::cmd_stats(fixture("fixture_train.tsv")).unwrap();
            assert_eq!((train.informative, train.uninformative, train.total), (6, 4, 10));
            let valid = cli::cmd_stats(fixture("fixture_valid.tsv")).unwrap();
            assert_eq!((valid.informative, valid.uninformative, valid.total), (3, 5, 8));
            "official files unavailable; bundled fixture counts 6/4 and 3/5".to_string()
        }
    };
    finish(1, "dataset statistics", start, Duration::from_secs(1), detail);
}

fn official_data_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os("TWEETSIFT_DATA_DIR")?);
    (dir.join("train.tsv").exists() && dir.join("valid.tsv").exists()).then_some(dir)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

// ---------------------------------------------------------------------------
// 2. Ensemble oracle equivalence over the full probability grid
// ---------------------------------------------------------------------------

/// The 11-point component grid, normalized row-wise: every (a, b) with
/// a, b in {0..10}, a + b > 0, as [a/(a+b), b/(a+b)]. The integer pair is
/// kept so the oracle can reason exactly.
fn grid_rows() -> Vec<(i64, i64, [f64; 2])> {
    let mut rows = Vec::new();
    for a in 0..=10_i64 {
        for b in 0..=10_i64 {
            if a + b == 0 {
                continue;
            }
            let sum = (a + b) as f64;
            rows.push((a, b, [a as f64 / sum, b as f64 / sum]));
        }
    }
    rows
}

/// Independent re-derivation of both combination rules for one case.
/// Decisions and tallies use exact integer arithmetic; the mean uses the
/// same column-then-divide order the contract specifies.
fn oracle_combine(case: &[(i64, i64, [f64; 2])]) -> (usize, usize) {
    let m = case.len();

    let s0: f64 = case.iter().map(|r| r.2[0]).sum();
    let s1: f64 = case.iter().map(|r| r.2[1]).sum();
    let averaged = if s1 / m as f64 > s0 / m as f64 { 1 } else { 0 };

    let mut informative_votes = 0usize;
    for &(a, b, _) in case {
        if b > a {
            informative_votes += 1;
        }
    }
    let uninformative_votes = m - informative_votes;
    let voted = if informative_votes > uninformative_votes {
        1
    } else if uninformative_votes > informative_votes {
        0
    } else {
        averaged
    };
    (averaged, voted)
}

#[test]
fn criterion_2_ensemble_oracle_equivalence() {
    let start = Instant::now();
    let rows = grid_rows();
    let n = rows.len();
    let mut cases = 0u64;

    let mut check = |case: &[(i64, i64, [f64; 2])]| {
        let pm = ProbabilityMatrix::from_rows(case.iter().map(|r| r.2).collect());
        let (oracle_avg, oracle_vote) = oracle_combine(case);

        let (avg_class, _) = average_combine(&pm).unwrap();
        assert_eq!(avg_class, oracle_avg, "averaging diverged on {case:?}");

        let decisions: Vec<usize> = case.iter().map(|&(a, b, _)| usize::from(b > a)).collect();
        let vote = vote_combine(&decisions, Some(&pm)).unwrap();
        assert_eq!(vote.class_index, oracle_vote, "voting diverged on {case:?}");
        cases += 1;
    };

    for i in 0..n {
        check(&[rows[i]]);
    }
    for i in 0..n {
        for j in 0..n {
            check(&[rows[i], rows[j]]);
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                check(&[rows[i], rows[j], rows[k]]);
            }
        }
    }

    assert_eq!(cases, 120 + 120 * 120 + 120 * 120 * 120);
    finish(
        2,
        "ensemble oracle equivalence",
        start,
        Duration::from_secs(10),
        format!("{cases} grid cases, exact agreement"),
    );
}

// ---------------------------------------------------------------------------
// 3. Ensemble invariants over randomized instances
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_ensemble_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let instances = 1000;

    // Permutation invariance for both schemes.
    for _ in 0..instances {
        let m = rng.random_range(1..=7);
        let rows: Vec<[f64; 2]> = (0..m)
            .map(|_| {
                let p: f64 = rng.random_range(0.0..=1.0);
                [1.0 - p, p]
            })
            .collect();
        let mut permuted = rows.clone();
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, rng.random_range(0..=i));
        }

        let a = average_combine(&ProbabilityMatrix::from_rows(rows.clone())).unwrap().0;
        let b = average_combine(&ProbabilityMatrix::from_rows(permuted.clone())).unwrap().0;
        assert_eq!(a, b, "averaging must ignore model order");

        let dec: Vec<usize> = rows.iter().map(|r| usize::from(r[1] > r[0])).collect();
        let dec_p: Vec<usize> = permuted.iter().map(|r| usize::from(r[1] > r[0])).collect();
        let va = vote_combine(&dec, Some(&ProbabilityMatrix::from_rows(rows))).unwrap();
        let vb = vote_combine(&dec_p, Some(&ProbabilityMatrix::from_rows(permuted))).unwrap();
        assert_eq!(va.class_index, vb.class_index, "voting must ignore model order");
    }

    // Average-of-identical returns the row's own argmax.
    for _ in 0..instances {
        let p: f64 = rng.random_range(0.0..=1.0);
        let row = [1.0 - p, p];
        let m = rng.random_range(1..=9);
        let (class, _) = average_combine(&ProbabilityMatrix::from_rows(vec![row; m])).unwrap();
        assert_eq!(class, usize::from(row[1] > row[0]));
    }

    // Odd-M never ties: exhaustive for M in {1, 3, 5, 7}.
    let mut exhaustive = 0;
    for m in [1usize, 3, 5, 7] {
        for bits in 0..(1u32 << m) {
            let decisions: Vec<usize> = (0..m).map(|i| ((bits >> i) & 1) as usize).collect();
            let outcome = vote_combine(&decisions, None).unwrap();
            assert_eq!(outcome.tie_break, TieBreak::None, "odd M={m} must not tie");
            exhaustive += 1;
        }
    }

    // Voting-tie fallback is deterministic and equals the averaging rule.
    for _ in 0..instances {
        let half = rng.random_range(1..=3);
        let rows: Vec<[f64; 2]> = (0..2 * half)
            .map(|i| {
                // Half the models vote 1, half vote 0, forcing the tie.
                let p: f64 = if i < half {
                    rng.random_range(0.5001..=1.0)
                } else {
                    rng.random_range(0.0..0.4999)
                };
                [1.0 - p, p]
            })
            .collect();
        let decisions: Vec<usize> = rows.iter().map(|r| usize::from(r[1] > r[0])).collect();
        let pm = ProbabilityMatrix::from_rows(rows);
        let first = vote_combine(&decisions, Some(&pm)).unwrap();
        let second = vote_combine(&decisions, Some(&pm)).unwrap();
        assert_eq!(first.tie_break, TieBreak::AveragedProbabilities);
        assert_eq!(first.class_index, second.class_index);
        assert_eq!(first.class_index, average_combine(&pm).unwrap().0);
    }

    finish(
        3,
        "ensemble invariants",
        start,
        Duration::from_secs(10),
        format!("{instances} randomized instances per invariant, {exhaustive} exhaustive odd-M cases"),
    );
}

// ---------------------------------------------------------------------------
// 4. Metric oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_metric_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    for case in 0..1000 {
        let len = rng.random_range(1..=50);
        let gold: Vec<Label> = (0..len)
            .map(|_| Label::from_index(usize::from(rng.random_bool(0.5))).unwrap())
            .collect();
        let pred: Vec<Label> = (0..len)
            .map(|_| Label::from_index(usize::from(rng.random_bool(0.5))).unwrap())
            .collect();

        // Independent pair counting.
        let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for i in 0..len {
            let g = gold[i] == Label::Informative;
            let p = pred[i] == Label::Informative;
            match (g, p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };

        let report = metrics::evaluate(&gold, &pred).unwrap();
        assert_eq!(
            (report.true_pos, report.false_pos, report.false_neg, report.true_neg),
            (tp, fp, fn_, tn),
            "counts diverged on case {case}"
        );
        assert_eq!(report.precision, precision);
        assert_eq!(report.recall, recall);
        assert_eq!(report.f1, f1);
    }

    // The worked example and the degenerate all-negative case.
    let gold = [Label::Informative, Label::Informative, Label::Uninformative, Label::Uninformative];
    let pred = [Label::Informative, Label::Uninformative, Label::Informative, Label::Uninformative];
    assert_eq!(metrics::evaluate(&gold, &pred).unwrap().f1, 0.5);
    let all_neg = [Label::Uninformative; 3];
    assert_eq!(metrics::evaluate(&all_neg, &all_neg).unwrap().f1, 0.0);

    finish(
        4,
        "metric oracle",
        start,
        Duration::from_secs(5),
        "1000 random pairs + worked example F1=0.5 + degenerate F1=0".into(),
    );
}

// ---------------------------------------------------------------------------
// 5. Gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_gradient_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6ead);
    let mut checked_params = 0usize;

    for instance in 0..20 {
        let dim = [2, 4, 8][instance % 3];
        let vocab = 24;
        let max_len = 8;
        let mut model = Classifier::new(dim, max_len, vocab, true, 1000 + instance as u64);

        let words = ["cases", "deaths", "lol", "coffee", "update", "vibes", "county"];
        let batch: Vec<_> = (0..rng.random_range(1..=3))
            .map(|_| {
                let text: Vec<&str> = (0..rng.random_range(1..=4))
                    .map(|_| words[rng.random_range(0..words.len())])
                    .collect();
                let label = Label::from_index(usize::from(rng.random_bool(0.5))).unwrap();
                model.encode_example(&text.join(" "), label).unwrap()
            })
            .collect();

        let mut grads = Gradients::zeros_like(&model);
        model.batch_loss_and_grads(&batch, &mut grads);
        let analytic = grads.to_flat();

        let theta = model.params_flat();
        let step = 1e-5;
        for k in 0..theta.len() {
            let mut plus = theta.clone();
            plus[k] += step;
            model.set_params_flat(&plus).unwrap();
            let loss_plus = model.batch_loss(&batch);

            let mut minus = theta.clone();
            minus[k] -= step;
            model.set_params_flat(&minus).unwrap();
            let loss_minus = model.batch_loss(&batch);

            let numeric = (loss_plus - loss_minus) / (2.0 * step);
            let denom = analytic[k].abs().max(numeric.abs()).max(1e-6);
            let rel = (analytic[k] - numeric).abs() / denom;
            assert!(
                rel < 1e-4,
                "instance {instance} param {k}: analytic {} vs numeric {numeric} (rel {rel:.2e})",
                analytic[k]
            );
            checked_params += 1;
        }
        model.set_params_flat(&theta).unwrap();
    }

    finish(
        5,
        "gradient correctness",
        start,
        Duration::from_secs(30),
        format!("20 instances, {checked_params} parameters vs central differences"),
    );
}

// ---------------------------------------------------------------------------
// 6. End-to-end toy run
// ---------------------------------------------------------------------------

/// Bag-of-words logistic regression, written from scratch as the
/// separability oracle: no ties to the toy encoder or trainer.
fn bow_logistic_f1(
    train: &[(Vec<String>, bool)],
    valid: &[(Vec<String>, bool)],
) -> f64 {
    let mut vocab: HashMap<&str, usize> = HashMap::new();
    for (tokens, _) in train {
        for tok in tokens {
            let next = vocab.len();
            vocab.entry(tok).or_insert(next);
        }
    }
    let dim = vocab.len();
    let featurize = |tokens: &[String]| -> Vec<(usize, f64)> {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for tok in tokens {
            if let Some(&j) = vocab.get(tok.as_str()) {
                *counts.entry(j).or_insert(0.0) += 1.0;
            }
        }
        counts.into_iter().collect()
    };

    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let lr = 0.5;
    for _ in 0..300 {
        let mut grad_w = vec![0.0f64; dim];
        let mut grad_b = 0.0f64;
        for (tokens, label) in train {
            let feats = featurize(tokens);
            let z: f64 = feats.iter().map(|&(j, v)| w[j] * v).sum::<f64>() + b;
            let p = 1.0 / (1.0 + (-z).exp());
            let err = p - if *label { 1.0 } else { 0.0 };
            for &(j, v) in &feats {
                grad_w[j] += err * v;
            }
            grad_b += err;
        }
        let scale = lr / train.len() as f64;
        for j in 0..dim {
            w[j] -= scale * grad_w[j];
        }
        b -= scale * grad_b;
    }

    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (tokens, label) in valid {
        let feats = featurize(tokens);
        let z: f64 = feats.iter().map(|&(j, v)| w[j] * v).sum::<f64>() + b;
        let predicted = z >= 0.0;
        match (*label, predicted) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    2.0 * p * r / (p + r)
}

#[test]
fn criterion_6_end_to_end_toy_run() {
    let start = Instant::now();
    let (train, valid) = synthetic::separable_corpus(400, 100, 20_24);

    // Separability oracle first: a plain bag-of-words logistic regression
    // must already solve this corpus.
    let as_pairs = |split: &corpus::DatasetSplit| -> Vec<(Vec<String>, bool)> {
        split
            .records
            .iter()
            .map(|r| {
                let tokens = r.text.split_whitespace().map(str::to_string).collect();
                (tokens, r.label.unwrap() == Label::Informative)
            })
            .collect()
    };
    let oracle_f1 = bow_logistic_f1(&as_pairs(&train), &as_pairs(&valid));
    assert!(
        oracle_f1 >= 0.99,
        "corpus is not separable enough: oracle F1 = {oracle_f1}"
    );

    // Two identical CLI-level runs must agree byte for byte.
    let workdir = tempfile::tempdir().unwrap();
    let train_path = workdir.path().join("train.tsv");
    let valid_path = workdir.path().join("valid.tsv");
    corpus::write_split(&train, &train_path, true).unwrap();
    corpus::write_split(&valid, &valid_path, true).unwrap();

    let run = |out: &Path| -> Manifest {
        let config_path = workdir.path().join(format!(
            "{}.conf",
            out.file_name().unwrap().to_string_lossy()
        ));
        std::fs::write(
            &config_path,
            format!(
                "train_file = {}\nvalid_file = {}\nout_dir = {}\n\
                 hidden_dim = 32\nmax_len = 32\nepochs = 8\nseed = 2024\n",
                train_path.display(),
                valid_path.display(),
                out.display()
            ),
        )
        .unwrap();
        cli::cmd_train(&RunConfig::from_file(&config_path).unwrap()).unwrap()
    };

    let out_a = workdir.path().join("run_a");
    let out_b = workdir.path().join("run_b");
    let manifest = run(&out_a);
    let _ = run(&out_b);

    assert!(
        manifest.dev_f1 >= 0.95,
        "grid search only reached dev F1 {}",
        manifest.dev_f1
    );
    let bytes_a = std::fs::read(out_a.join("best/manifest.json")).unwrap();
    let bytes_b = std::fs::read(out_b.join("best/manifest.json")).unwrap();
    assert_eq!(bytes_a, bytes_b, "manifests are not byte-identical");
    let log_a = std::fs::read(out_a.join("train.log")).unwrap();
    let log_b = std::fs::read(out_b.join("train.log")).unwrap();
    assert_eq!(log_a, log_b, "training logs are not byte-identical");

    finish(
        6,
        "end-to-end toy run",
        start,
        Duration::from_secs(60),
        format!(
            "oracle F1 {oracle_f1:.4}, grid dev F1 {:.4}, byte-identical reruns",
            manifest.dev_f1
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Checkpoint selection
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_checkpoint_selection() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    for case in 0..200 {
        // F1 values from a coarse grid so ties are common.
        let histories: Vec<LrHistory> = (0..rng.random_range(1..=4))
            .map(|i| {
                let lr = [1e-5, 2e-5, 5e-5, 1e-4][i];
                let records = (1..=rng.random_range(1..=6))
                    .map(|epoch| EpochRecord {
                        epoch,
                        train_loss: rng.random_range(0.0..1.0),
                        dev_f1: rng.random_range(0..=10) as f64 / 10.0,
                    })
                    .collect();
                LrHistory { lr, records }
            })
            .collect();

        // Independent selection: materialize every candidate and sort by the
        // stated rule.
        let mut candidates: Vec<(f64, usize, f64)> = histories
            .iter()
            .flat_map(|h| h.records.iter().map(|r| (r.dev_f1, r.epoch, h.lr)))
            .collect();
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.partial_cmp(&b.2).unwrap())
        });
        let expected = candidates[0];

        let pick = select_best(&histories).unwrap();
        assert_eq!(
            (pick.dev_f1, pick.epoch, pick.lr),
            expected,
            "selection diverged on case {case}: {histories:?}"
        );
    }

    finish(
        7,
        "checkpoint selection",
        start,
        Duration::from_secs(1),
        "200 fabricated histories with forced ties".into(),
    );
}

// ---------------------------------------------------------------------------
// 8. Round-trips
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_round_trips() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);

    // Prediction files.
    let pred_path = dir.path().join("pred.tsv");
    for case in 0..100 {
        let n = rng.random_range(0..=40);
        let ids: Vec<String> = (0..n)
            .map(|i| {
                let tail: String = (0..rng.random_range(1..=10))
                    .map(|_| rng.random_range(b'!'..=b'~') as char)
                    .collect();
                format!("{case}-{i}-{tail}")
            })
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| Label::from_index(usize::from(rng.random_bool(0.5))).unwrap())
            .collect();
        corpus::write_predictions(&ids, &labels, &pred_path).unwrap();
        let back = corpus::read_predictions(&pred_path).unwrap();
        let expected: Vec<(String, Label)> = ids.into_iter().zip(labels).collect();
        assert_eq!(back, expected, "prediction round-trip diverged on case {case}");
    }

    // One file at the documented 10,000-record bound.
    let n = 10_000;
    let ids: Vec<String> = (0..n).map(|i| format!("id-{i}")).collect();
    let labels: Vec<Label> = (0..n)
        .map(|i| Label::from_index(i % 2).unwrap())
        .collect();
    corpus::write_predictions(&ids, &labels, &pred_path).unwrap();
    let back = corpus::read_predictions(&pred_path).unwrap();
    assert_eq!(back.len(), n);
    assert!(back.iter().zip(ids.iter().zip(&labels)).all(|((bi, bl), (i, l))| bi == i && bl == l));

    // Checkpoints, bit for bit.
    let ckpt_path = dir.path().join("model.ckpt");
    for case in 0..100 {
        let dim = rng.random_range(2..=8);
        let vocab = rng.random_range(8..=32);
        let max_len = rng.random_range(4..=16);
        let model = Classifier::new(dim, max_len, vocab, rng.random_bool(0.5), rng.random());
        let saved = Checkpoint::from_classifier(&model);
        saved.save(&ckpt_path).unwrap();
        let loaded = Checkpoint::load(&ckpt_path).unwrap();
        assert_eq!(loaded, saved, "checkpoint round-trip diverged on case {case}");
        let restored = loaded.into_classifier().unwrap();
        assert_eq!(restored.params_flat(), model.params_flat());
    }

    finish(
        8,
        "round-trips",
        start,
        Duration::from_secs(5),
        "100 prediction files + 100 checkpoints, exact".into(),
    );
}
