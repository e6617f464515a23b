//! Evaluation harnesses: IR metrics over ranked recommendations, corpus →
//! query extraction with newcomer flags, embedding feature tables, and
//! stratified k-fold classification with a built-in multinomial logistic
//! regression.

use std::collections::HashSet;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::extract_citations;
use crate::corpus::HyperDocument;
use crate::model::ModelState;
use crate::par;
use crate::rank::{recommend, InferParams, Query, RankError, Strategy};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no queries to evaluate")]
    NoQueries,
    #[error("classification needs at least two classes with members")]
    TooFewClasses,
    #[error("class {class} has only {count} members, fewer than {folds} folds; use fewer folds")]
    ClassTooSmall {
        class: usize,
        count: usize,
        folds: usize,
    },
    #[error("need at least 2 folds, got {0}")]
    BadFoldCount(usize),
    #[error("feature rows have differing dimensions")]
    RaggedFeatures,
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Fraction of the ground truth present in the top k: |top-k ∩ truth| / |truth|.
pub fn recall_at_k<T: Eq + Hash>(ranked: &[T], truth: &HashSet<T>, k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|item| truth.contains(item))
        .count();
    hits as f64 / truth.len() as f64
}

/// Mean of precision-at-i over relevant retrieved positions, divided by
/// |truth|; the passed list is already cut at the evaluation depth.
pub fn average_precision<T: Eq + Hash>(ranked: &[T], truth: &HashSet<T>) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, item) in ranked.iter().enumerate() {
        if truth.contains(item) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / truth.len() as f64
}

/// Reciprocal rank of the first relevant item; 0 when none is retrieved.
pub fn mrr<T: Eq + Hash>(ranked: &[T], truth: &HashSet<T>) -> f64 {
    ranked
        .iter()
        .position(|item| truth.contains(item))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Binary-gain nDCG over the first k positions: DCG = Σ 1/log2(i+1) at
/// relevant positions i, normalized by the front-loaded ideal.
pub fn ndcg_at_k<T: Eq + Hash>(ranked: &[T], truth: &HashSet<T>, k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, item)| truth.contains(item))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..truth.len().min(k))
        .map(|i| 1.0 / ((i + 2) as f64).log2())
        .sum();
    if ideal == 0.0 {
        0.0
    } else {
        dcg / ideal
    }
}

/// One recommendation test case: the citation context, its source document,
/// and the ground-truth targets with their newcomer status in the model's
/// training corpus.
#[derive(Debug, Clone)]
pub struct RecQuery {
    pub source: String,
    pub context: Vec<String>,
    pub truth: Vec<String>,
    pub newcomer_truth: Vec<bool>,
}

impl RecQuery {
    pub fn has_newcomer_truth(&self) -> bool {
        self.newcomer_truth.iter().any(|&n| n)
    }
}

/// Extracts test queries from a corpus: one per citation instance, keeping
/// only targets registered in the model, with newcomer flags taken from the
/// model's training-time citation counts.
pub fn queries_from_corpus(
    docs: &[HyperDocument],
    window: usize,
    model: &ModelState,
) -> Vec<RecQuery> {
    let mut queries = Vec::new();
    for doc in docs {
        for inst in extract_citations(doc, window) {
            let mut truth = Vec::new();
            let mut newcomer = Vec::new();
            for t in &inst.targets {
                if let Some(i) = model.registry.index(t) {
                    truth.push(t.clone());
                    newcomer.push(model.registry.is_newcomer(i));
                }
            }
            if !truth.is_empty() {
                queries.push(RecQuery {
                    source: inst.source.clone(),
                    context: inst.context.clone(),
                    truth,
                    newcomer_truth: newcomer,
                });
            }
        }
    }
    queries
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryOutcome {
    pub source: String,
    pub truth: Vec<String>,
    pub recall: f64,
    pub average_precision: f64,
    pub reciprocal_rank: f64,
    pub ndcg: f64,
    /// At least one truth retrieved in the top k.
    pub binary_hit: bool,
    /// At least one truth is a newcomer.
    pub newcomer: bool,
    pub all_oov: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub strategy: String,
    pub k: usize,
    pub query_count: usize,
    pub recall: f64,
    pub map: f64,
    pub mrr: f64,
    pub ndcg: f64,
    pub per_query: Vec<QueryOutcome>,
}

/// Evaluates recommendation over a query set. The source document is always
/// excluded from the candidates; `newcomer_only` keeps only queries with at
/// least one newcomer ground truth.
pub fn eval_recommendation(
    model: &ModelState,
    queries: &[RecQuery],
    strategy: Strategy,
    k: usize,
    newcomer_only: bool,
    infer: &InferParams,
) -> Result<EvalReport, EvalError> {
    let selected: Vec<&RecQuery> = queries
        .iter()
        .filter(|q| !newcomer_only || q.has_newcomer_truth())
        .collect();
    if selected.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let outcomes: Vec<Result<QueryOutcome, RankError>> = par::map_slice(&selected, |q| {
        let request = Query {
            context: q.context.clone(),
            source: Some(q.source.clone()),
            exclude: vec![q.source.clone()],
        };
        let rec = recommend(model, &request, strategy, k, infer)?;
        let ranked: Vec<&str> = rec.entries.iter().map(|(id, _)| id.as_str()).collect();
        let truth: HashSet<&str> = q.truth.iter().map(String::as_str).collect();
        Ok(QueryOutcome {
            source: q.source.clone(),
            truth: q.truth.clone(),
            recall: recall_at_k(&ranked, &truth, k),
            average_precision: average_precision(&ranked, &truth),
            reciprocal_rank: mrr(&ranked, &truth),
            ndcg: ndcg_at_k(&ranked, &truth, k),
            binary_hit: ranked.iter().any(|id| truth.contains(id)),
            newcomer: q.has_newcomer_truth(),
            all_oov: rec.all_oov,
        })
    });
    let per_query: Vec<QueryOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;
    let n = per_query.len() as f64;
    let mean = |f: fn(&QueryOutcome) -> f64| per_query.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        strategy: strategy.to_string(),
        k,
        query_count: per_query.len(),
        recall: mean(|q| q.recall),
        map: mean(|q| q.average_precision),
        mrr: mean(|q| q.reciprocal_rank),
        ndcg: mean(|q| q.ndcg),
        per_query,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// IN document vector, dimension k.
    In,
    /// IN ⊕ OUT concatenation, dimension 2k.
    InOutConcat,
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "in" => FeatureMode::In,
            "concat" => FeatureMode::InOutConcat,
            other => return Err(format!("unknown feature mode `{other}`")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f32>>,
    /// True where a document had no vector (zeros were substituted).
    pub missing: Vec<bool>,
    pub dim: usize,
}

/// Per-document feature rows. Documents without a resolvable vector (for
/// example never-cited docs under a citation-as-word model) get zeros and a
/// missing flag.
pub fn make_features(model: &ModelState, doc_ids: &[String], mode: FeatureMode) -> FeatureTable {
    let k = model.dim;
    let dim = match mode {
        FeatureMode::In => k,
        FeatureMode::InOutConcat => 2 * k,
    };
    let mut rows = Vec::with_capacity(doc_ids.len());
    let mut missing = Vec::with_capacity(doc_ids.len());
    for id in doc_ids {
        let idx = model.registry.index(id);
        let d_in = idx.and_then(|i| model.doc_in_vector(i));
        let mut row = vec![0.0f32; dim];
        let mut miss = d_in.is_none();
        if let Some(v) = d_in {
            row[..k].copy_from_slice(v);
        }
        if mode == FeatureMode::InOutConcat {
            let d_out = idx.and_then(|i| model.doc_out_vector(i));
            miss = miss || d_out.is_none();
            if let Some(v) = d_out {
                row[k..].copy_from_slice(v);
            }
        }
        rows.push(row);
        missing.push(miss);
    }
    FeatureTable {
        ids: doc_ids.to_vec(),
        rows,
        missing,
        dim,
    }
}

/// Deterministic stratified fold assignment: within each class, members are
/// shuffled then dealt round-robin, keeping per-fold class counts within
/// one of each other.
pub fn stratified_folds(
    labels: &[usize],
    folds: usize,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    if folds < 2 {
        return Err(EvalError::BadFoldCount(folds));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let present = members.iter().filter(|m| !m.is_empty()).count();
    if present < 2 {
        return Err(EvalError::TooFewClasses);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < folds {
            return Err(EvalError::ClassTooSmall {
                class,
                count: m.len(),
                folds,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for m in &mut members {
        m.shuffle(&mut rng);
        for (j, &idx) in m.iter().enumerate() {
            assignment[idx] = j % folds;
        }
    }
    Ok(assignment)
}

/// Multinomial logistic regression trained by SGD: L2 weight decay, a
/// fixed 200 epochs.
struct Logreg {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

const LOGREG_EPOCHS: usize = 200;
const LOGREG_LR: f64 = 0.1;
const LOGREG_L2: f64 = 1e-4;

fn train_logreg(
    rows: &[&[f32]],
    labels: &[usize],
    classes: usize,
    rng: &mut ChaCha8Rng,
) -> Logreg {
    let dim = rows.first().map_or(0, |r| r.len());
    let mut model = Logreg {
        weights: vec![vec![0.0; dim]; classes],
        bias: vec![0.0; classes],
    };
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut scores = vec![0.0f64; classes];
    for _ in 0..LOGREG_EPOCHS {
        order.shuffle(rng);
        for &i in &order {
            let x = rows[i];
            for (c, s) in scores.iter_mut().enumerate() {
                *s = model.bias[c]
                    + model.weights[c]
                        .iter()
                        .zip(x)
                        .map(|(w, &v)| w * v as f64)
                        .sum::<f64>();
            }
            let probs = crate::train::sgd::softmax(&scores);
            for c in 0..classes {
                let g = probs[c] - if c == labels[i] { 1.0 } else { 0.0 };
                for (w, &v) in model.weights[c].iter_mut().zip(x) {
                    *w -= LOGREG_LR * (g * v as f64 + LOGREG_L2 * *w);
                }
                model.bias[c] -= LOGREG_LR * g;
            }
        }
    }
    model
}

fn predict(model: &Logreg, x: &[f32]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (c, (w, b)) in model.weights.iter().zip(&model.bias).enumerate() {
        let s = b + w.iter().zip(x).map(|(wj, &v)| wj * v as f64).sum::<f64>();
        if s > best_score {
            best_score = s;
            best = c;
        }
    }
    best
}

/// Stratified k-fold cross validation with the built-in classifier;
/// returns (macro F1, micro F1) pooled over all folds.
pub fn kfold_classify(
    features: &[Vec<f32>],
    labels: &[usize],
    folds: usize,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    assert_eq!(features.len(), labels.len(), "one label per feature row");
    let dim = features.first().map_or(0, |r| r.len());
    if features.iter().any(|r| r.len() != dim) {
        return Err(EvalError::RaggedFeatures);
    }
    let assignment = stratified_folds(labels, folds, seed)?;
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut tp = vec![0u64; classes];
    let mut fp = vec![0u64; classes];
    let mut fneg = vec![0u64; classes];
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for fold in 0..folds {
        let mut train_rows: Vec<&[f32]> = Vec::new();
        let mut train_labels: Vec<usize> = Vec::new();
        let mut test_idx: Vec<usize> = Vec::new();
        for (i, &a) in assignment.iter().enumerate() {
            if a == fold {
                test_idx.push(i);
            } else {
                train_rows.push(&features[i]);
                train_labels.push(labels[i]);
            }
        }
        let model = train_logreg(&train_rows, &train_labels, classes, &mut rng);
        for i in test_idx {
            let got = predict(&model, &features[i]);
            let want = labels[i];
            if got == want {
                tp[want] += 1;
            } else {
                fp[got] += 1;
                fneg[want] += 1;
            }
        }
    }
    let f1 = |tp: u64, fp: u64, fneg: u64| -> f64 {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let present: Vec<usize> = (0..classes)
        .filter(|&c| labels.iter().any(|&l| l == c))
        .collect();
    let macro_f1 = present
        .iter()
        .map(|&c| f1(tp[c], fp[c], fneg[c]))
        .sum::<f64>()
        / present.len() as f64;
    let micro_f1 = f1(tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    Ok((macro_f1, micro_f1))
}
