//! SGD trainers for the five model kinds: cbow / skip-gram word models,
//! pv-dm / pv-dbow document models, and the citation-objective model
//! trained on ⟨source, context, target⟩ triples with a pv-dm retrofit
//! initialization.

pub mod sgd;

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{
    convert_nc, extract_corpus_citations, CitationInstance, HyperDocument, PlainDocument,
    CITE_PREFIX,
};
use crate::model::{EmbeddingMatrix, ModelKind, ModelState};
use crate::par;
use crate::vocab::{
    doc_noise_sampler, word_noise_sampler, DocRegistry, NoiseSampler, VocabError, Vocabulary,
};
use sgd::{ns_step, SharedMatrix};

/// Stream id offset separating citation-phase RNG streams from the content
/// phase's.
const CITATION_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("corpus contains no citation instances; train cbow/skipgram/pvdm/pvdbow on a converted corpus instead")]
    NoCitations,
    #[error("corpus too small to train: {0}")]
    CorpusTooSmall(String),
}

/// How the citation model's matrices start out: retrofit from a pv-dm
/// content run, or purely random.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    PvDm,
    Random,
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitMode::PvDm => "pvdm",
            InitMode::Random => "random",
        })
    }
}

impl std::str::FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "pvdm" => InitMode::PvDm,
            "random" => InitMode::Random,
            other => return Err(format!("unknown init mode `{other}`")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Embedding dimension k.
    pub dim: usize,
    /// Half context window, in words.
    pub window: usize,
    pub epochs: usize,
    /// Negative samples per update.
    pub negatives: usize,
    pub alpha0: f64,
    pub alpha_min: f64,
    pub min_count: u64,
    /// Frequency subsampling threshold t; 0 disables subsampling. Applies
    /// to word-objective passes only, never to citation contexts.
    pub subsample: f64,
    pub seed: u64,
    pub workers: usize,
    pub init: InitMode,
    /// Content (pv-dm) epochs run before the citation phase.
    pub init_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 50,
            epochs: 5,
            negatives: 5,
            alpha0: 0.025,
            alpha_min: 1e-4,
            min_count: 5,
            subsample: 1e-3,
            seed: 1,
            workers: 1,
            init: InitMode::PvDm,
            init_epochs: 5,
        }
    }
}

impl TrainConfig {
    /// Citation-model defaults: 100 epochs with 1000 negatives per triple.
    pub fn hd2v_defaults() -> Self {
        TrainConfig {
            epochs: 100,
            negatives: 1000,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.dim < 1 {
            return fail("dim must be >= 1");
        }
        if self.window < 1 {
            return fail("window must be >= 1");
        }
        if self.epochs < 1 || self.init_epochs < 1 {
            return fail("epochs and init_epochs must be >= 1");
        }
        if self.negatives < 1 {
            return fail("negatives must be >= 1");
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha0) {
            return fail("need 0 < alpha_min <= alpha0");
        }
        if self.subsample < 0.0 {
            return fail("subsample must be >= 0");
        }
        if self.min_count < 1 {
            return fail("min_count must be >= 1");
        }
        if self.workers < 1 {
            return fail("workers must be >= 1");
        }
        Ok(())
    }
}

/// One integer citation triple; a multi-target instance contributes one
/// triple per target with the context shared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub source: usize,
    pub context: Vec<usize>,
    pub target: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CitationBatch {
    pub triples: Vec<Triple>,
}

impl CitationBatch {
    pub fn build(
        instances: &[CitationInstance],
        vocab: &Vocabulary,
        registry: &DocRegistry,
    ) -> Self {
        let mut triples = Vec::new();
        for inst in instances {
            let Some(source) = registry.index(&inst.source) else {
                continue;
            };
            let context: Vec<usize> = inst.context.iter().filter_map(|w| vocab.get(w)).collect();
            for t in &inst.targets {
                if let Some(target) = registry.index(t) {
                    triples.push(Triple {
                        source,
                        context: context.clone(),
                        target,
                    });
                }
            }
        }
        CitationBatch { triples }
    }
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub phase: &'static str,
    pub epoch: usize,
    pub mean_loss: f64,
    pub examples: u64,
    pub alpha: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent, reproducible RNG stream `stream` of a run seed.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

fn alpha_at(cfg: &TrainConfig, done: u64, total: u64) -> f64 {
    let frac = (done as f64 / total.max(1) as f64).min(1.0);
    (cfg.alpha0 - (cfg.alpha0 - cfg.alpha_min) * frac).max(cfg.alpha_min)
}

/// Runs `f` over `0..n_items` split into `cfg.workers` contiguous shards.
/// With one worker this is a plain sequential call (fully deterministic);
/// with more, shards update the shared matrices concurrently and races are
/// accepted.
fn run_sharded<F>(cfg: &TrainConfig, epoch: usize, stream_base: u64, n_items: usize, f: F) -> (f64, u64)
where
    F: Fn(Range<usize>, &mut ChaCha8Rng) -> (f64, u64) + Sync,
{
    let workers = cfg.workers.min(n_items.max(1));
    let stream_of = |w: usize| {
        stream_base + 1 + epoch as u64 * cfg.workers as u64 + w as u64
    };
    if workers <= 1 {
        let mut rng = stream_rng(cfg.seed, stream_of(0));
        return f(0..n_items, &mut rng);
    }
    std::thread::scope(|scope| {
        let chunk = n_items.div_ceil(workers);
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                let start = w * chunk;
                let end = ((w + 1) * chunk).min(n_items);
                scope.spawn(move || {
                    let mut rng = stream_rng(cfg.seed, stream_of(w));
                    f(start..end, &mut rng)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .fold((0.0, 0), |acc, (l, e)| (acc.0 + l, acc.1 + e))
    })
}

/// Reusable per-shard scratch space.
struct Buffers {
    x: Vec<f32>,
    acc: Vec<f64>,
    grad_x: Vec<f64>,
    row: Vec<f32>,
    negatives: Vec<usize>,
    kept: Vec<usize>,
}

impl Buffers {
    fn new(dim: usize) -> Self {
        Buffers {
            x: vec![0.0; dim],
            acc: vec![0.0; dim],
            grad_x: vec![0.0; dim],
            row: vec![0.0; dim],
            negatives: Vec::new(),
            kept: Vec::new(),
        }
    }

    fn compose(&mut self, scale: f64) {
        for (x, a) in self.x.iter_mut().zip(&self.acc) {
            *x = (a * scale) as f32;
        }
    }
}

struct PlainJob<'a> {
    kind: ModelKind,
    cfg: &'a TrainConfig,
    docs: &'a [Vec<usize>],
    keep: Option<Vec<f64>>,
    noise: NoiseSampler,
    w_in: Option<SharedMatrix<'a>>,
    w_out: SharedMatrix<'a>,
    d_in: Option<SharedMatrix<'a>>,
    progress: AtomicU64,
    total_units: u64,
}

impl PlainJob<'_> {
    fn draw_negatives(&self, target: usize, rng: &mut ChaCha8Rng, buf: &mut Vec<usize>) {
        buf.clear();
        for _ in 0..self.cfg.negatives {
            let n = self.noise.sample(rng);
            if n != target {
                buf.push(n);
            }
        }
    }

    fn run_shard(&self, range: Range<usize>, rng: &mut ChaCha8Rng) -> (f64, u64) {
        let window = self.cfg.window;
        let mut b = Buffers::new(self.cfg.dim);
        let mut loss_sum = 0.0;
        let mut examples = 0u64;
        for di in range {
            let seq = &self.docs[di];
            let done = self
                .progress
                .fetch_add(seq.len() as u64, Ordering::Relaxed);
            let alpha = alpha_at(self.cfg, done, self.total_units);
            if seq.is_empty() {
                continue;
            }
            b.kept.clear();
            match &self.keep {
                Some(table) => {
                    for &w in seq {
                        if rng.random::<f64>() < table[w] {
                            b.kept.push(w);
                        }
                    }
                }
                None => b.kept.extend_from_slice(seq),
            }
            let n = b.kept.len();
            for i in 0..n {
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(n.saturating_sub(1));
                match self.kind {
                    ModelKind::Cbow => {
                        if hi <= lo {
                            continue;
                        }
                        let w_in = self.w_in.as_ref().unwrap();
                        b.acc.iter_mut().for_each(|a| *a = 0.0);
                        let m = (hi - lo) as f64;
                        for j in lo..=hi {
                            if j != i {
                                w_in.accumulate_row(b.kept[j], 1.0, &mut b.acc);
                            }
                        }
                        b.compose(1.0 / m);
                        self.draw_negatives(b.kept[i], rng, &mut b.negatives);
                        loss_sum += ns_step(
                            &self.w_out,
                            b.kept[i],
                            &b.negatives,
                            &b.x,
                            alpha,
                            &mut b.grad_x,
                            &mut b.row,
                        );
                        let factor = -(alpha / m);
                        for j in lo..=hi {
                            if j != i {
                                w_in.add_scaled(b.kept[j], &b.grad_x, factor);
                            }
                        }
                        examples += 1;
                    }
                    ModelKind::SkipGram => {
                        let w_in = self.w_in.as_ref().unwrap();
                        for j in lo..=hi {
                            if j == i {
                                continue;
                            }
                            w_in.load_row(b.kept[i], &mut b.x);
                            self.draw_negatives(b.kept[j], rng, &mut b.negatives);
                            loss_sum += ns_step(
                                &self.w_out,
                                b.kept[j],
                                &b.negatives,
                                &b.x,
                                alpha,
                                &mut b.grad_x,
                                &mut b.row,
                            );
                            w_in.add_scaled(b.kept[i], &b.grad_x, -alpha);
                            examples += 1;
                        }
                    }
                    ModelKind::PvDm => {
                        let w_in = self.w_in.as_ref().unwrap();
                        let d_in = self.d_in.as_ref().unwrap();
                        b.acc.iter_mut().for_each(|a| *a = 0.0);
                        d_in.accumulate_row(di, 1.0, &mut b.acc);
                        let m = (1 + hi - lo) as f64; // doc vector plus context words
                        for j in lo..=hi {
                            if j != i {
                                w_in.accumulate_row(b.kept[j], 1.0, &mut b.acc);
                            }
                        }
                        b.compose(1.0 / m);
                        self.draw_negatives(b.kept[i], rng, &mut b.negatives);
                        loss_sum += ns_step(
                            &self.w_out,
                            b.kept[i],
                            &b.negatives,
                            &b.x,
                            alpha,
                            &mut b.grad_x,
                            &mut b.row,
                        );
                        let factor = -(alpha / m);
                        d_in.add_scaled(di, &b.grad_x, factor);
                        for j in lo..=hi {
                            if j != i {
                                w_in.add_scaled(b.kept[j], &b.grad_x, factor);
                            }
                        }
                        examples += 1;
                    }
                    ModelKind::PvDbow => {
                        let d_in = self.d_in.as_ref().unwrap();
                        d_in.load_row(di, &mut b.x);
                        self.draw_negatives(b.kept[i], rng, &mut b.negatives);
                        loss_sum += ns_step(
                            &self.w_out,
                            b.kept[i],
                            &b.negatives,
                            &b.x,
                            alpha,
                            &mut b.grad_x,
                            &mut b.row,
                        );
                        d_in.add_scaled(di, &b.grad_x, -alpha);
                        examples += 1;
                    }
                    ModelKind::Hd2v => unreachable!("citation training has its own job"),
                }
            }
        }
        (loss_sum, examples)
    }
}

struct CitationJob<'a> {
    cfg: &'a TrainConfig,
    triples: &'a [Triple],
    noise: NoiseSampler,
    w_in: SharedMatrix<'a>,
    d_in: SharedMatrix<'a>,
    d_out: SharedMatrix<'a>,
    progress: AtomicU64,
    total_units: u64,
}

impl CitationJob<'_> {
    fn run_shard(&self, order: &[usize], range: Range<usize>, rng: &mut ChaCha8Rng) -> (f64, u64) {
        let mut b = Buffers::new(self.cfg.dim);
        let mut loss_sum = 0.0;
        let mut examples = 0u64;
        for &ti in &order[range] {
            let t = &self.triples[ti];
            let done = self.progress.fetch_add(1, Ordering::Relaxed);
            let alpha = alpha_at(self.cfg, done, self.total_units);
            b.acc.iter_mut().for_each(|a| *a = 0.0);
            self.d_in.accumulate_row(t.source, 1.0, &mut b.acc);
            for &w in &t.context {
                self.w_in.accumulate_row(w, 1.0, &mut b.acc);
            }
            let m = (1 + t.context.len()) as f64;
            b.compose(1.0 / m);
            b.negatives.clear();
            while b.negatives.len() < self.cfg.negatives {
                let n = self.noise.sample(rng);
                if n != t.target {
                    b.negatives.push(n);
                }
            }
            loss_sum += ns_step(
                &self.d_out,
                t.target,
                &b.negatives,
                &b.x,
                alpha,
                &mut b.grad_x,
                &mut b.row,
            );
            let factor = -(alpha / m);
            self.d_in.add_scaled(t.source, &b.grad_x, factor);
            for &w in &t.context {
                self.w_in.add_scaled(w, &b.grad_x, factor);
            }
            examples += 1;
        }
        (loss_sum, examples)
    }
}

fn phase_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Cbow => "cbow",
        ModelKind::SkipGram => "skipgram",
        ModelKind::PvDm => "pvdm",
        ModelKind::PvDbow => "pvdbow",
        ModelKind::Hd2v => "citation",
    }
}

fn log_epoch(stats: &EpochStats) {
    let rate = if stats.elapsed_secs > 0.0 {
        stats.examples as f64 / stats.elapsed_secs
    } else {
        0.0
    };
    log::info!(
        "phase={} epoch={} mean_loss={:.6} examples={} alpha={:.6} examples_per_sec={:.0}",
        stats.phase,
        stats.epoch,
        stats.mean_loss,
        stats.examples,
        stats.alpha,
        rate
    );
}

fn train_plain(
    corpus: &[PlainDocument],
    cfg: &TrainConfig,
    kind: ModelKind,
) -> Result<(ModelState, TrainReport), TrainError> {
    cfg.validate()?;
    let vocab = Vocabulary::build(corpus, cfg.min_count)?;
    let mut registry = DocRegistry::from_ids(corpus.iter().map(|d| d.id.as_str()))?;
    // in a citation-as-word corpus, pseudo-word occurrences are in-citations
    for doc in corpus {
        for word in &doc.words {
            if let Some(target) = word.strip_prefix(CITE_PREFIX) {
                registry.record_cited_id(target);
            }
        }
    }
    let docs_idx: Vec<Vec<usize>> = par::map_slice(corpus, |d| {
        d.words.iter().filter_map(|w| vocab.get(w)).collect()
    });
    let trainable = match kind {
        ModelKind::Cbow | ModelKind::SkipGram => docs_idx.iter().any(|d| d.len() >= 2),
        _ => docs_idx.iter().any(|d| !d.is_empty()),
    };
    if !trainable {
        return Err(TrainError::CorpusTooSmall(format!(
            "no document yields a training pair for {kind} at min_count {}",
            cfg.min_count
        )));
    }
    let total_tokens: u64 = docs_idx.iter().map(|d| d.len() as u64).sum();

    let mut master = stream_rng(cfg.seed, 0);
    let bound = 0.5 / cfg.dim as f32;
    let (wi_p, _, di_p, _) = kind.presence();
    let mut w_in =
        wi_p.then(|| EmbeddingMatrix::uniform_init(vocab.len(), cfg.dim, bound, &mut master));
    let mut d_in =
        di_p.then(|| EmbeddingMatrix::uniform_init(registry.len(), cfg.dim, bound, &mut master));
    let mut w_out = EmbeddingMatrix::zeros(vocab.len(), cfg.dim);

    let keep = (cfg.subsample > 0.0).then(|| {
        (0..vocab.len())
            .map(|i| vocab.keep_probability(i, cfg.subsample))
            .collect::<Vec<f64>>()
    });
    let noise = word_noise_sampler(&vocab, 0.75);
    let mut report = TrainReport::default();
    {
        let job = PlainJob {
            kind,
            cfg,
            docs: &docs_idx,
            keep,
            noise,
            w_in: w_in.as_mut().map(SharedMatrix::new),
            w_out: SharedMatrix::new(&mut w_out),
            d_in: d_in.as_mut().map(SharedMatrix::new),
            progress: AtomicU64::new(0),
            total_units: cfg.epochs as u64 * total_tokens,
        };
        for epoch in 0..cfg.epochs {
            let t0 = Instant::now();
            let (loss_sum, examples) =
                run_sharded(cfg, epoch, 0, docs_idx.len(), |range, rng| {
                    job.run_shard(range, rng)
                });
            let finite = job.w_out.all_finite()
                && job.w_in.as_ref().is_none_or(SharedMatrix::all_finite)
                && job.d_in.as_ref().is_none_or(SharedMatrix::all_finite);
            assert!(finite, "non-finite value after epoch {epoch}");
            let stats = EpochStats {
                phase: phase_name(kind),
                epoch,
                mean_loss: if examples > 0 {
                    loss_sum / examples as f64
                } else {
                    0.0
                },
                examples,
                alpha: alpha_at(cfg, job.progress.load(Ordering::Relaxed), job.total_units),
                elapsed_secs: t0.elapsed().as_secs_f64(),
            };
            log_epoch(&stats);
            report.epochs.push(stats);
        }
    }
    let state = ModelState {
        kind,
        dim: cfg.dim,
        vocab,
        registry,
        w_in,
        w_out: Some(w_out),
        d_in,
        d_out: None,
    };
    state.validate().expect("trained model state is consistent");
    Ok((state, report))
}

/// Trains a cbow or skip-gram word model over a plain corpus. On
/// citation-as-word corpora the doc pseudo-words land in the vocabulary and
/// get IN/OUT rows like any word (never-cited docs get none).
pub fn train_word_model(
    corpus: &[PlainDocument],
    cfg: &TrainConfig,
    kind: ModelKind,
) -> Result<(ModelState, TrainReport), TrainError> {
    match kind {
        ModelKind::Cbow | ModelKind::SkipGram => train_plain(corpus, cfg, kind),
        other => Err(TrainError::InvalidConfig(format!(
            "train_word_model expects cbow or skipgram, got {other}"
        ))),
    }
}

/// Trains a pv-dm or pv-dbow document model over a plain corpus.
pub fn train_doc_model(
    corpus: &[PlainDocument],
    cfg: &TrainConfig,
    kind: ModelKind,
) -> Result<(ModelState, TrainReport), TrainError> {
    match kind {
        ModelKind::PvDm | ModelKind::PvDbow => train_plain(corpus, cfg, kind),
        other => Err(TrainError::InvalidConfig(format!(
            "train_doc_model expects pvdm or pvdbow, got {other}"
        ))),
    }
}

/// The retrofit initialization of citation training: a pure pv-dm run over
/// the citation-free conversion of the corpus, for `init_epochs` epochs.
/// Equal in every bit to `train_doc_model` on that conversion with the same
/// seed and config.
pub fn hd2v_phase1(
    corpus: &[HyperDocument],
    cfg: &TrainConfig,
) -> Result<(ModelState, TrainReport), TrainError> {
    let nc = convert_nc(corpus);
    let cfg1 = TrainConfig {
        epochs: cfg.init_epochs,
        ..cfg.clone()
    };
    train_plain(&nc, &cfg1, ModelKind::PvDm)
}

/// Trains the citation model. Content phase per `cfg.init`, then
/// `cfg.epochs` passes over all citation triples in shuffled order, with
/// OUT document rows starting at zero and negatives drawn uniformly over
/// the registry (redrawn on hitting the target).
pub fn train_hd2v(
    corpus: &[HyperDocument],
    cfg: &TrainConfig,
) -> Result<(ModelState, TrainReport), TrainError> {
    cfg.validate()?;
    let extraction = extract_corpus_citations(corpus, cfg.window);
    if extraction.instances.is_empty() {
        return Err(TrainError::NoCitations);
    }
    if corpus.len() < 2 {
        return Err(TrainError::CorpusTooSmall(
            "citation negative sampling needs at least two documents".into(),
        ));
    }
    let (mut state, mut report) = match cfg.init {
        InitMode::PvDm => hd2v_phase1(corpus, cfg)?,
        InitMode::Random => {
            let nc = convert_nc(corpus);
            let vocab = Vocabulary::build(&nc, cfg.min_count)?;
            let registry = DocRegistry::from_ids(corpus.iter().map(|d| d.id.as_str()))?;
            let mut master = stream_rng(cfg.seed, 0);
            let bound = 0.5 / cfg.dim as f32;
            let w_in = EmbeddingMatrix::uniform_init(vocab.len(), cfg.dim, bound, &mut master);
            let d_in = EmbeddingMatrix::uniform_init(registry.len(), cfg.dim, bound, &mut master);
            let state = ModelState {
                kind: ModelKind::PvDm,
                dim: cfg.dim,
                w_out: Some(EmbeddingMatrix::zeros(vocab.len(), cfg.dim)),
                w_in: Some(w_in),
                d_in: Some(d_in),
                d_out: None,
                vocab,
                registry,
            };
            (state, TrainReport::default())
        }
    };
    state.registry.record_citations(&extraction.instances);
    let batch = CitationBatch::build(&extraction.instances, &state.vocab, &state.registry);
    let noise = doc_noise_sampler(&state.registry);
    let mut d_out = EmbeddingMatrix::zeros(state.registry.len(), cfg.dim);
    let mut master = stream_rng(cfg.seed, CITATION_STREAM_BASE);
    {
        let job = CitationJob {
            cfg,
            triples: &batch.triples,
            noise,
            w_in: SharedMatrix::new(state.w_in.as_mut().expect("phase 1 provides W_I")),
            d_in: SharedMatrix::new(state.d_in.as_mut().expect("phase 1 provides D_I")),
            d_out: SharedMatrix::new(&mut d_out),
            progress: AtomicU64::new(0),
            total_units: (cfg.epochs * batch.triples.len()) as u64,
        };
        let mut order: Vec<usize> = (0..batch.triples.len()).collect();
        for epoch in 0..cfg.epochs {
            let t0 = Instant::now();
            order.shuffle(&mut master);
            let (loss_sum, examples) =
                run_sharded(cfg, epoch, CITATION_STREAM_BASE, order.len(), |range, rng| {
                    job.run_shard(&order, range, rng)
                });
            let finite =
                job.w_in.all_finite() && job.d_in.all_finite() && job.d_out.all_finite();
            assert!(finite, "non-finite value after citation epoch {epoch}");
            let stats = EpochStats {
                phase: "citation",
                epoch,
                mean_loss: if examples > 0 {
                    loss_sum / examples as f64
                } else {
                    0.0
                },
                examples,
                alpha: alpha_at(cfg, job.progress.load(Ordering::Relaxed), job.total_units),
                elapsed_secs: t0.elapsed().as_secs_f64(),
            };
            log_epoch(&stats);
            report.epochs.push(stats);
        }
    }
    state.kind = ModelKind::Hd2v;
    state.d_out = Some(d_out);
    state.validate().expect("trained model state is consistent");
    Ok((state, report))
}
