//! Deterministic synthetic data: a signature-based citation corpus with
//! held-out contexts, a random hyper-corpus for conversion checks, and
//! Gaussian feature blobs for the classification harness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{HyperDocument, Token};

const FILLER: [&str; 10] = [
    "the", "of", "model", "data", "method", "we", "results", "analysis", "with", "study",
];

/// Shape of a signature corpus: `docs` citable documents each carrying a
/// unique three-word signature, cited from `sites_per_doc` in-text sites
/// whose contexts spell the target's signature; optional never-cited
/// newcomer documents with signatures of their own.
#[derive(Debug, Clone)]
pub struct SignatureSpec {
    pub docs: usize,
    pub sites_per_doc: usize,
    pub newcomers: usize,
    pub heldout_per_doc: usize,
    pub newcomer_heldout: usize,
    pub seed: u64,
}

impl Default for SignatureSpec {
    fn default() -> Self {
        SignatureSpec {
            docs: 20,
            sites_per_doc: 10,
            newcomers: 0,
            heldout_per_doc: 2,
            newcomer_heldout: 20,
            seed: 17,
        }
    }
}

/// A held-out citation context with its ground-truth target(s).
#[derive(Debug, Clone)]
pub struct SyntheticQuery {
    pub source: String,
    pub context: Vec<String>,
    pub targets: Vec<String>,
}

#[derive(Debug)]
pub struct SignatureCorpus {
    pub docs: Vec<HyperDocument>,
    /// Queries whose targets are cited documents.
    pub heldout: Vec<SyntheticQuery>,
    /// Queries whose targets are the never-cited newcomers.
    pub newcomer_heldout: Vec<SyntheticQuery>,
    pub newcomer_ids: Vec<String>,
}

fn signature(idx: usize) -> [String; 3] {
    [
        format!("sig{idx}a"),
        format!("sig{idx}b"),
        format!("sig{idx}c"),
    ]
}

fn filler(rng: &mut ChaCha8Rng) -> String {
    FILLER[rng.random_range(0..FILLER.len())].to_string()
}

/// Signature content stating who a document is: six signature repetitions
/// interleaved with filler, so signature words clear modest min_count
/// thresholds.
fn prologue(sig: &[String; 3], rng: &mut ChaCha8Rng) -> Vec<Token> {
    let mut tokens = Vec::new();
    for _ in 0..6 {
        for s in sig {
            tokens.push(Token::Word(s.clone()));
        }
        tokens.push(Token::Word(filler(rng)));
    }
    tokens
}

/// One citation site: the target's signature spelled on both sides of the
/// mark, padded with filler so neighboring sites stay out of small windows.
fn citation_site(target_id: &str, sig: &[String; 3], rng: &mut ChaCha8Rng) -> Vec<Token> {
    let mut tokens = vec![Token::Word(filler(rng))];
    for s in sig {
        tokens.push(Token::Word(s.clone()));
    }
    tokens.push(Token::Cite(target_id.to_string()));
    for s in sig {
        tokens.push(Token::Word(s.clone()));
    }
    tokens.push(Token::Word(filler(rng)));
    tokens
}

fn query_context(sig: &[String; 3], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut words = vec![filler(rng)];
    words.extend(sig.iter().cloned());
    words.push(filler(rng));
    words.extend(sig.iter().cloned());
    words.push(filler(rng));
    words
}

/// Newcomer queries carry only the signature: filler words sit in every
/// citation context, and at this corpus size their shared component would
/// drown the content signal that makes never-cited documents findable.
fn pure_query_context(sig: &[String; 3]) -> Vec<String> {
    let mut words = Vec::with_capacity(9);
    for _ in 0..3 {
        words.extend(sig.iter().cloned());
    }
    words
}

/// Builds the signature corpus. Document i is cited exactly
/// `sites_per_doc` times (by its successors, round-robin); newcomers carry
/// content but are never cited.
pub fn signature_corpus(spec: &SignatureSpec) -> SignatureCorpus {
    assert!(spec.docs >= 2, "need at least two citable documents");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let doc_id = |i: usize| format!("d{i:02}");
    let newcomer_id = |j: usize| format!("n{j}");

    let mut docs = Vec::new();
    for i in 0..spec.docs {
        let mut tokens = prologue(&signature(i), &mut rng);
        for site in 0..spec.sites_per_doc {
            let t = (i + 1 + site) % spec.docs;
            let t = if t == i { (t + 1) % spec.docs } else { t };
            tokens.extend(citation_site(&doc_id(t), &signature(t), &mut rng));
        }
        docs.push(HyperDocument {
            id: doc_id(i),
            tokens,
        });
    }
    let mut newcomer_ids = Vec::new();
    for j in 0..spec.newcomers {
        let tokens = prologue(&signature(spec.docs + j), &mut rng);
        docs.push(HyperDocument {
            id: newcomer_id(j),
            tokens,
        });
        newcomer_ids.push(newcomer_id(j));
    }

    let mut heldout = Vec::new();
    for t in 0..spec.docs {
        for _ in 0..spec.heldout_per_doc {
            heldout.push(SyntheticQuery {
                source: doc_id((t + 1) % spec.docs),
                context: query_context(&signature(t), &mut rng),
                targets: vec![doc_id(t)],
            });
        }
    }
    let mut newcomer_heldout = Vec::new();
    if spec.newcomers > 0 {
        for q in 0..spec.newcomer_heldout {
            let j = q % spec.newcomers;
            newcomer_heldout.push(SyntheticQuery {
                source: doc_id(0),
                context: pure_query_context(&signature(spec.docs + j)),
                targets: vec![newcomer_id(j)],
            });
        }
    }

    SignatureCorpus {
        docs,
        heldout,
        newcomer_heldout,
        newcomer_ids,
    }
}

/// Random hyper-corpus over a small word pool, with citations to random
/// in-corpus documents and occasional external ids.
pub fn random_hyper_corpus(
    n_docs: usize,
    max_tokens: usize,
    cite_prob: f64,
    external_prob: f64,
    seed: u64,
) -> Vec<HyperDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..=max_tokens.max(1));
            let tokens = (0..len)
                .map(|_| {
                    if rng.random::<f64>() < cite_prob {
                        if rng.random::<f64>() < external_prob {
                            Token::Cite(format!("x{}", rng.random_range(0..50)))
                        } else {
                            Token::Cite(format!("r{:04}", rng.random_range(0..n_docs)))
                        }
                    } else {
                        Token::Word(format!("w{}", rng.random_range(0..300)))
                    }
                })
                .collect();
            HyperDocument {
                id: format!("r{i:04}"),
                tokens,
            }
        })
        .collect()
}

/// Two (or more) Gaussian blobs: class c is centered at
/// (2c − (classes−1)) · separation/2 on every coordinate, unit variance.
pub fn gaussian_blobs(
    n_per_class: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f32>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f64, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(n_per_class * classes);
    let mut labels = Vec::with_capacity(n_per_class * classes);
    for c in 0..classes {
        let mean = (2.0 * c as f64 - (classes as f64 - 1.0)) * separation / 2.0;
        for _ in 0..n_per_class {
            features.push(
                (0..dim)
                    .map(|_| (mean + noise.sample(&mut rng)) as f32)
                    .collect(),
            );
            labels.push(c);
        }
    }
    (features, labels)
}
