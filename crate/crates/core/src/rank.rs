//! Citation recommendation: scoring strategies over a trained model for a
//! context-word query.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{cosine, dot, ModelKind, ModelState};
use crate::par;
use crate::train::sgd::sigmoid;
use crate::vocab::word_noise_sampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Mean context IN word vectors, ranked against OUT doc vectors by dot.
    I4O,
    /// Mean context IN word vectors, ranked against IN doc vectors by dot.
    I4I,
    /// Frozen-parameter doc-vector inference, cosine-ranked against IN doc
    /// vectors.
    D2v,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::I4O => "i4o",
            Strategy::I4I => "i4i",
            Strategy::D2v => "d2v",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "i4o" => Strategy::I4O,
            "i4i" => Strategy::I4I,
            "d2v" => Strategy::D2v,
            other => return Err(format!("unknown strategy `{other}`")),
        })
    }
}

#[derive(Debug, Error)]
pub enum RankError {
    #[error("strategy {strategy} needs {what}, which a {kind} model does not provide")]
    Unsupported {
        strategy: Strategy,
        what: &'static str,
        kind: ModelKind,
    },
}

/// A recommendation request: context words, optionally the (known) citing
/// document, and ids that must not be returned.
#[derive(Debug, Clone, Default)]
pub struct Query {
    pub context: Vec<String>,
    pub source: Option<String>,
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Recommendation {
    pub strategy: Strategy,
    /// (doc id, score) by descending score.
    pub entries: Vec<(String, f64)>,
    /// Context words dropped for being out of vocabulary.
    pub oov_dropped: usize,
    /// Every context word was out of vocabulary; entries is empty.
    pub all_oov: bool,
}

/// Frozen-inference knobs for the d2v strategy: the training decay schedule
/// compressed into `steps` passes over the context.
#[derive(Debug, Clone, Copy)]
pub struct InferParams {
    pub steps: usize,
    pub negatives: usize,
    pub alpha0: f64,
    pub alpha_min: f64,
    pub seed: u64,
}

impl Default for InferParams {
    fn default() -> Self {
        InferParams {
            steps: 20,
            negatives: 5,
            alpha0: 0.025,
            alpha_min: 1e-4,
            seed: 1,
        }
    }
}

pub fn recommend(
    model: &ModelState,
    query: &Query,
    strategy: Strategy,
    top_k: usize,
    infer: &InferParams,
) -> Result<Recommendation, RankError> {
    match strategy {
        Strategy::I4O => score_i4o(model, query, top_k),
        Strategy::I4I => score_i4i(model, query, top_k),
        Strategy::D2v => score_d2v(model, query, top_k, infer),
    }
}

/// Mean of the in-vocabulary context words' IN vectors. OOV words are
/// dropped from the mean, never zero-imputed.
fn context_mean(
    model: &ModelState,
    strategy: Strategy,
    words: &[String],
) -> Result<(Vec<f32>, usize, usize), RankError> {
    if model.w_in.is_none() {
        return Err(RankError::Unsupported {
            strategy,
            what: "IN word vectors",
            kind: model.kind,
        });
    }
    let mut acc = vec![0.0f64; model.dim];
    let mut used = 0usize;
    let mut dropped = 0usize;
    for word in words {
        match model.vocab.get(word) {
            Some(w) => {
                for (a, &v) in acc.iter_mut().zip(model.word_in_vector(w).unwrap()) {
                    *a += v as f64;
                }
                used += 1;
            }
            None => dropped += 1,
        }
    }
    let mean = if used == 0 {
        vec![0.0; model.dim]
    } else {
        acc.iter().map(|a| (a / used as f64) as f32).collect()
    };
    Ok((mean, dropped, used))
}

/// Mean IN word vectors of a context, exposed as classifier features for
/// downstream use. Returns the zero vector (flagged) when every word is OOV.
pub fn context_intent_features(
    model: &ModelState,
    words: &[String],
) -> Result<(Vec<f32>, usize, bool), RankError> {
    let (mean, dropped, used) = context_mean(model, Strategy::I4O, words)?;
    Ok((mean, dropped, used == 0))
}

fn excluded_indices(model: &ModelState, query: &Query) -> HashSet<usize> {
    query
        .exclude
        .iter()
        .filter_map(|id| model.registry.index(id))
        .collect()
}

/// Ranks candidate (doc index, vector) pairs: descending score, ties by
/// ascending index.
fn rank_candidates(
    model: &ModelState,
    candidates: &[(usize, &[f32])],
    score: impl Fn(&[f32]) -> f64 + Sync,
    top_k: usize,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(usize, f64)> =
        par::map_slice(candidates, |&(i, v)| (i, score(v)));
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(top_k);
    scored
        .into_iter()
        .map(|(i, s)| (model.registry.id(i).to_string(), s))
        .collect()
}

fn gather_candidates<'m>(
    model: &'m ModelState,
    exclude: &HashSet<usize>,
    out_side: bool,
) -> Vec<(usize, &'m [f32])> {
    (0..model.registry.len())
        .filter(|i| !exclude.contains(i))
        .filter_map(|i| {
            let v = if out_side {
                model.doc_out_vector(i)
            } else {
                model.doc_in_vector(i)
            };
            v.map(|v| (i, v))
        })
        .collect()
}

/// IN-for-OUT: rank documents by the dot product of the mean context IN
/// vector with their OUT vectors. The candidate set is every registered doc
/// with a resolvable OUT vector; for the citation model no source vector is
/// added (the source is unknown at recommendation time).
pub fn score_i4o(
    model: &ModelState,
    query: &Query,
    top_k: usize,
) -> Result<Recommendation, RankError> {
    if !matches!(model.kind, ModelKind::Hd2v | ModelKind::Cbow | ModelKind::SkipGram) {
        return Err(RankError::Unsupported {
            strategy: Strategy::I4O,
            what: "OUT document vectors",
            kind: model.kind,
        });
    }
    let (q, dropped, used) = context_mean(model, Strategy::I4O, &query.context)?;
    if used == 0 {
        return Ok(Recommendation {
            strategy: Strategy::I4O,
            entries: Vec::new(),
            oov_dropped: dropped,
            all_oov: true,
        });
    }
    let exclude = excluded_indices(model, query);
    let candidates = gather_candidates(model, &exclude, true);
    let entries = rank_candidates(model, &candidates, |v| dot(&q, v), top_k);
    Ok(Recommendation {
        strategy: Strategy::I4O,
        entries,
        oov_dropped: dropped,
        all_oov: false,
    })
}

/// IN-for-IN: the same query vector ranked against IN document vectors by
/// dot product, mirroring i4o for a controlled comparison.
pub fn score_i4i(
    model: &ModelState,
    query: &Query,
    top_k: usize,
) -> Result<Recommendation, RankError> {
    let (q, dropped, used) = context_mean(model, Strategy::I4I, &query.context)?;
    if used == 0 {
        return Ok(Recommendation {
            strategy: Strategy::I4I,
            entries: Vec::new(),
            oov_dropped: dropped,
            all_oov: true,
        });
    }
    let exclude = excluded_indices(model, query);
    let candidates = gather_candidates(model, &exclude, false);
    let entries = rank_candidates(model, &candidates, |v| dot(&q, v), top_k);
    Ok(Recommendation {
        strategy: Strategy::I4I,
        entries,
        oov_dropped: dropped,
        all_oov: false,
    })
}

/// Infers a fresh document vector for the context with the model's own
/// objective — word matrices frozen, only the new vector trained — then
/// ranks IN document vectors by cosine.
pub fn score_d2v(
    model: &ModelState,
    query: &Query,
    top_k: usize,
    infer: &InferParams,
) -> Result<Recommendation, RankError> {
    if !matches!(model.kind, ModelKind::PvDm | ModelKind::PvDbow) {
        return Err(RankError::Unsupported {
            strategy: Strategy::D2v,
            what: "frozen doc-vector inference",
            kind: model.kind,
        });
    }
    let words: Vec<usize> = query
        .context
        .iter()
        .filter_map(|w| model.vocab.get(w))
        .collect();
    let dropped = query.context.len() - words.len();
    if words.is_empty() {
        return Ok(Recommendation {
            strategy: Strategy::D2v,
            entries: Vec::new(),
            oov_dropped: dropped,
            all_oov: true,
        });
    }
    let d = infer_doc_vector(model, &words, infer);
    let exclude = excluded_indices(model, query);
    let candidates = gather_candidates(model, &exclude, false);
    let entries = rank_candidates(model, &candidates, |v| cosine(&d, v), top_k);
    Ok(Recommendation {
        strategy: Strategy::D2v,
        entries,
        oov_dropped: dropped,
        all_oov: false,
    })
}

fn infer_doc_vector(model: &ModelState, words: &[usize], infer: &InferParams) -> Vec<f32> {
    let dim = model.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(infer.seed);
    let bound = 0.5 / dim as f32;
    let mut d: Vec<f32> = (0..dim)
        .map(|_| rng.random::<f32>() * 2.0 * bound - bound)
        .collect();
    if infer.steps == 0 {
        return d;
    }
    let w_out = model.w_out.as_ref().expect("doc models carry W_O");
    let noise = word_noise_sampler(&model.vocab, 0.75);
    let total = (infer.steps * words.len()) as u64;
    let mut done = 0u64;
    let mut x = vec![0.0f32; dim];
    let mut grad_x = vec![0.0f64; dim];
    for _ in 0..infer.steps {
        for (i, &target) in words.iter().enumerate() {
            let frac = (done as f64 / total as f64).min(1.0);
            let alpha =
                (infer.alpha0 - (infer.alpha0 - infer.alpha_min) * frac).max(infer.alpha_min);
            done += 1;
            // compose the predictor with frozen word vectors
            let m = match model.kind {
                ModelKind::PvDm => {
                    let w_in = model.w_in.as_ref().expect("pv-dm carries W_I");
                    let mut acc: Vec<f64> = d.iter().map(|&v| v as f64).collect();
                    let mut count = 1.0f64;
                    for (j, &w) in words.iter().enumerate() {
                        if j != i {
                            for (a, &v) in acc.iter_mut().zip(w_in.row(w)) {
                                *a += v as f64;
                            }
                            count += 1.0;
                        }
                    }
                    for (xv, a) in x.iter_mut().zip(&acc) {
                        *xv = (a / count) as f32;
                    }
                    count
                }
                _ => {
                    x.copy_from_slice(&d);
                    1.0
                }
            };
            grad_x.iter_mut().for_each(|g| *g = 0.0);
            let mut apply = |row: &[f32], is_target: bool| {
                let s = dot(&x, row);
                let g = if is_target {
                    sigmoid(s) - 1.0
                } else {
                    sigmoid(s)
                };
                for (gx, &rv) in grad_x.iter_mut().zip(row) {
                    *gx += g * rv as f64;
                }
            };
            apply(w_out.row(target), true);
            for _ in 0..infer.negatives {
                let n = noise.sample(&mut rng);
                if n != target {
                    apply(w_out.row(n), false);
                }
            }
            let factor = -(alpha / m);
            for (dv, &g) in d.iter_mut().zip(&grad_x) {
                *dv = (*dv as f64 + factor * g) as f32;
            }
        }
    }
    d
}
