//! Embedding matrices and trained-model state: vector algebra, ranking
//! primitives, and the binary model format.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use thiserror::Error;

use crate::corpus::CITE_PREFIX;
use crate::par;
use crate::vocab::{DocRegistry, Vocabulary};

const MAGIC: &[u8; 4] = b"HDEV";
const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    VersionMismatch(u16),
    #[error("model file truncated")]
    Truncated,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("matrix presence does not match model kind {kind}")]
    PresenceMismatch { kind: ModelKind },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

fn io_to_model(e: std::io::Error) -> ModelError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        ModelError::Truncated
    } else {
        ModelError::Io(e)
    }
}

/// Dense row-major matrix of 4-byte floats; one row per vocabulary word or
/// registered document.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        EmbeddingMatrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Rows filled uniformly from [-bound, bound), in row-major order so a
    /// fixed RNG stream reproduces the matrix exactly.
    pub fn uniform_init<R: Rng + ?Sized>(rows: usize, dim: usize, bound: f32, rng: &mut R) -> Self {
        let mut m = EmbeddingMatrix::zeros(rows, dim);
        for v in &mut m.data {
            *v = rng.random::<f32>() * 2.0 * bound - bound;
        }
        m
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), rows * dim, "data length must equal rows*dim");
        EmbeddingMatrix { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Inner product, accumulated in f64 for oracle-grade accuracy.
pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    assert_eq!(u.len(), v.len(), "dot requires equal dimensions");
    u.iter()
        .zip(v)
        .map(|(&a, &b)| a as f64 * b as f64)
        .sum()
}

/// Cosine similarity in [-1, 1]; zero-norm inputs score 0 by definition.
pub fn cosine(u: &[f32], v: &[f32]) -> f64 {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Dot,
    Cosine,
}

/// Scores every non-excluded row against the query and returns the top_k
/// by descending score, ties broken by ascending row index.
pub fn rank(
    query: &[f32],
    matrix: &EmbeddingMatrix,
    top_k: usize,
    measure: Measure,
    exclude: &HashSet<usize>,
) -> Vec<(usize, f64)> {
    let scores = par::map_range(matrix.rows(), |i| match measure {
        Measure::Dot => dot(query, matrix.row(i)),
        Measure::Cosine => cosine(query, matrix.row(i)),
    });
    let mut ranked: Vec<(usize, f64)> = scores
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(top_k);
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cbow,
    SkipGram,
    PvDm,
    PvDbow,
    Hd2v,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Cbow,
        ModelKind::SkipGram,
        ModelKind::PvDm,
        ModelKind::PvDbow,
        ModelKind::Hd2v,
    ];

    fn code(self) -> u8 {
        match self {
            ModelKind::Cbow => 0,
            ModelKind::SkipGram => 1,
            ModelKind::PvDm => 2,
            ModelKind::PvDbow => 3,
            ModelKind::Hd2v => 4,
        }
    }

    fn from_code(code: u8) -> Result<Self, ModelError> {
        Ok(match code {
            0 => ModelKind::Cbow,
            1 => ModelKind::SkipGram,
            2 => ModelKind::PvDm,
            3 => ModelKind::PvDbow,
            4 => ModelKind::Hd2v,
            other => return Err(ModelError::Corrupt(format!("unknown model kind {other}"))),
        })
    }

    /// Which of (W_I, W_O, D_I, D_O) this kind trains. Word models address
    /// doc vectors through `@cite:` pseudo-words instead of doc matrices.
    pub fn presence(self) -> (bool, bool, bool, bool) {
        match self {
            ModelKind::Cbow | ModelKind::SkipGram => (true, true, false, false),
            ModelKind::PvDm => (true, true, true, false),
            ModelKind::PvDbow => (false, true, true, false),
            ModelKind::Hd2v => (true, true, true, true),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Cbow => "cbow",
            ModelKind::SkipGram => "skipgram",
            ModelKind::PvDm => "pvdm",
            ModelKind::PvDbow => "pvdbow",
            ModelKind::Hd2v => "hd2v",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "cbow" => ModelKind::Cbow,
            "skipgram" => ModelKind::SkipGram,
            "pvdm" => ModelKind::PvDm,
            "pvdbow" => ModelKind::PvDbow,
            "hd2v" => ModelKind::Hd2v,
            other => return Err(format!("unknown model kind `{other}`")),
        })
    }
}

/// A trained model: the matrices its kind provides, plus the vocabulary and
/// document registry needed to resolve ids to rows.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub kind: ModelKind,
    pub dim: usize,
    pub vocab: Vocabulary,
    pub registry: DocRegistry,
    pub w_in: Option<EmbeddingMatrix>,
    pub w_out: Option<EmbeddingMatrix>,
    pub d_in: Option<EmbeddingMatrix>,
    pub d_out: Option<EmbeddingMatrix>,
}

impl ModelState {
    /// Checks matrix presence against the kind, row counts against the
    /// vocab/registry, a shared dimension, and finiteness.
    pub fn validate(&self) -> Result<(), ModelError> {
        let (wi, wo, di, dout) = self.kind.presence();
        let slots = [
            (wi, &self.w_in, self.vocab.len(), "W_I"),
            (wo, &self.w_out, self.vocab.len(), "W_O"),
            (di, &self.d_in, self.registry.len(), "D_I"),
            (dout, &self.d_out, self.registry.len(), "D_O"),
        ];
        for (expected, matrix, rows, name) in slots {
            match (expected, matrix) {
                (true, Some(m)) => {
                    if m.dim() != self.dim {
                        return Err(ModelError::DimensionMismatch(format!(
                            "{name} has dim {} but model dim is {}",
                            m.dim(),
                            self.dim
                        )));
                    }
                    if m.rows() != rows {
                        return Err(ModelError::DimensionMismatch(format!(
                            "{name} has {} rows but expected {rows}",
                            m.rows()
                        )));
                    }
                    if !m.all_finite() {
                        return Err(ModelError::NonFinite(name));
                    }
                }
                (false, None) => {}
                _ => return Err(ModelError::PresenceMismatch { kind: self.kind }),
            }
        }
        Ok(())
    }

    fn pseudo_word_row(&self, doc_idx: usize) -> Option<usize> {
        let pseudo = format!("{CITE_PREFIX}{}", self.registry.id(doc_idx));
        self.vocab.get(&pseudo)
    }

    /// IN vector of a document. Word models resolve through the `@cite:`
    /// pseudo-word and return None for docs never cited in training.
    pub fn doc_in_vector(&self, doc_idx: usize) -> Option<&[f32]> {
        match self.kind {
            ModelKind::PvDm | ModelKind::PvDbow | ModelKind::Hd2v => {
                self.d_in.as_ref().map(|m| m.row(doc_idx))
            }
            ModelKind::Cbow | ModelKind::SkipGram => {
                let row = self.pseudo_word_row(doc_idx)?;
                self.w_in.as_ref().map(|m| m.row(row))
            }
        }
    }

    /// OUT vector of a document; None for kinds without one (pv-dm/pv-dbow)
    /// and for unresolvable pseudo-words.
    pub fn doc_out_vector(&self, doc_idx: usize) -> Option<&[f32]> {
        match self.kind {
            ModelKind::Hd2v => self.d_out.as_ref().map(|m| m.row(doc_idx)),
            ModelKind::Cbow | ModelKind::SkipGram => {
                let row = self.pseudo_word_row(doc_idx)?;
                self.w_out.as_ref().map(|m| m.row(row))
            }
            ModelKind::PvDm | ModelKind::PvDbow => None,
        }
    }

    pub fn word_in_vector(&self, word_idx: usize) -> Option<&[f32]> {
        self.w_in.as_ref().map(|m| m.row(word_idx))
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        self.validate()?;
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let mut reader = BufReader::new(File::open(path)?);
        let state = Self::read_from(&mut reader)?;
        state.validate()?;
        Ok(state)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<(), ModelError> {
        out.write_all(MAGIC)?;
        out.write_u16::<LittleEndian>(FORMAT_VERSION)?;
        out.write_u8(self.kind.code())?;
        let mut presence = 0u8;
        for (bit, m) in [&self.w_in, &self.w_out, &self.d_in, &self.d_out]
            .iter()
            .enumerate()
        {
            if m.is_some() {
                presence |= 1 << bit;
            }
        }
        out.write_u8(presence)?;
        out.write_u32::<LittleEndian>(self.dim as u32)?;
        out.write_u64::<LittleEndian>(self.vocab.len() as u64)?;
        out.write_u64::<LittleEndian>(self.registry.len() as u64)?;
        for (word, count) in self.vocab.iter() {
            write_str(out, word)?;
            out.write_u64::<LittleEndian>(count)?;
        }
        for (id, cited) in self.registry.iter() {
            write_str(out, id)?;
            out.write_u64::<LittleEndian>(cited)?;
        }
        for m in [&self.w_in, &self.w_out, &self.d_in, &self.d_out]
            .into_iter()
            .flatten()
        {
            out.write_u64::<LittleEndian>(m.rows() as u64)?;
            out.write_u32::<LittleEndian>(m.dim() as u32)?;
            for &v in m.data() {
                out.write_u32::<LittleEndian>(v.to_bits())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(reader: &mut R) -> Result<Self, ModelError> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic).map_err(io_to_model)?;
        if &magic != MAGIC {
            return Err(ModelError::BadMagic);
        }
        let version = reader.read_u16::<LittleEndian>().map_err(io_to_model)?;
        if version != FORMAT_VERSION {
            return Err(ModelError::VersionMismatch(version));
        }
        let kind = ModelKind::from_code(reader.read_u8().map_err(io_to_model)?)?;
        let presence = reader.read_u8().map_err(io_to_model)?;
        let dim = reader.read_u32::<LittleEndian>().map_err(io_to_model)? as usize;
        let vocab_len = reader.read_u64::<LittleEndian>().map_err(io_to_model)? as usize;
        let reg_len = reader.read_u64::<LittleEndian>().map_err(io_to_model)? as usize;
        let mut vocab_rows = Vec::with_capacity(vocab_len.min(1 << 20));
        for _ in 0..vocab_len {
            let word = read_str(reader)?;
            let count = reader.read_u64::<LittleEndian>().map_err(io_to_model)?;
            vocab_rows.push((word, count));
        }
        let mut reg_rows = Vec::with_capacity(reg_len.min(1 << 20));
        for _ in 0..reg_len {
            let id = read_str(reader)?;
            let cited = reader.read_u64::<LittleEndian>().map_err(io_to_model)?;
            reg_rows.push((id, cited));
        }
        let mut matrices: [Option<EmbeddingMatrix>; 4] = [None, None, None, None];
        for (bit, slot) in matrices.iter_mut().enumerate() {
            if presence & (1 << bit) == 0 {
                continue;
            }
            let rows = reader.read_u64::<LittleEndian>().map_err(io_to_model)? as usize;
            let mdim = reader.read_u32::<LittleEndian>().map_err(io_to_model)? as usize;
            if mdim != dim {
                return Err(ModelError::DimensionMismatch(format!(
                    "matrix dim {mdim} disagrees with header dim {dim}"
                )));
            }
            let mut data = Vec::with_capacity(rows.saturating_mul(mdim).min(1 << 28));
            for _ in 0..rows * mdim {
                let bits = reader.read_u32::<LittleEndian>().map_err(io_to_model)?;
                data.push(f32::from_bits(bits));
            }
            *slot = Some(EmbeddingMatrix::from_vec(rows, mdim, data));
        }
        let [w_in, w_out, d_in, d_out] = matrices;
        Ok(ModelState {
            kind,
            dim,
            vocab: Vocabulary::from_rows(vocab_rows),
            registry: DocRegistry::from_rows(reg_rows),
            w_in,
            w_out,
            d_in,
            d_out,
        })
    }

    /// Text export: per present matrix a `#section name rows dim` header,
    /// then one `id v1 … vk` line per row.
    pub fn write_text<W: Write>(&self, out: &mut W) -> Result<(), ModelError> {
        let sections: [(&str, &Option<EmbeddingMatrix>, bool); 4] = [
            ("W_I", &self.w_in, true),
            ("W_O", &self.w_out, true),
            ("D_I", &self.d_in, false),
            ("D_O", &self.d_out, false),
        ];
        for (name, matrix, is_word) in sections {
            let Some(m) = matrix else { continue };
            writeln!(out, "#section {name} {} {}", m.rows(), m.dim())?;
            for i in 0..m.rows() {
                let id = if is_word {
                    self.vocab.word(i)
                } else {
                    self.registry.id(i)
                };
                write!(out, "{id}")?;
                for v in m.row(i) {
                    write!(out, " {v}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<(), ModelError> {
    out.write_u32::<LittleEndian>(s.len() as u32)?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(reader: &mut R) -> Result<String, ModelError> {
    let len = reader.read_u32::<LittleEndian>().map_err(io_to_model)? as usize;
    if len > (1 << 24) {
        return Err(ModelError::Corrupt(format!("string length {len}")));
    }
    let mut buf = vec![0u8; len];
    reader.read_exact(&mut buf).map_err(io_to_model)?;
    String::from_utf8(buf).map_err(|_| ModelError::Corrupt("invalid utf-8 string".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        let u = [0.3f32, -1.7, 2.2];
        assert!(dot(&u, &u) >= 0.0);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[2.0, 0.0], &[5.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((cosine(&[1.0, 1.0], &[-2.0, -2.0]) + 1.0).abs() < 1e-12);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]) - 0.7071).abs() < 1e-4);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }

    fn random_matrix(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EmbeddingMatrix::uniform_init(rows, dim, 1.0, &mut rng)
    }

    #[test]
    fn rank_self_row_first_under_cosine() {
        let m = random_matrix(3, 4, 1);
        let q: Vec<f32> = m.row(1).to_vec();
        let got = rank(&q, &m, 3, Measure::Cosine, &HashSet::new());
        assert_eq!(got[0].0, 1);
        assert!((got[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_excluding_everything_is_empty() {
        let m = random_matrix(3, 4, 2);
        let all: HashSet<usize> = (0..3).collect();
        assert!(rank(&[1.0; 4], &m, 3, Measure::Dot, &all).is_empty());
    }

    #[test]
    fn rank_matches_full_sort_oracle() {
        let m = random_matrix(50, 8, 3);
        let q: Vec<f32> = random_matrix(1, 8, 4).row(0).to_vec();
        let got = rank(&q, &m, 10, Measure::Dot, &HashSet::new());
        // independent oracle: score every row, full sort, take the prefix
        let mut oracle: Vec<(usize, f64)> = (0..50)
            .map(|i| {
                let mut s = 0.0f64;
                for (a, b) in q.iter().zip(m.row(i)) {
                    s += *a as f64 * *b as f64;
                }
                (i, s)
            })
            .collect();
        oracle.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| a.0.cmp(&b.0))
        });
        oracle.truncate(10);
        assert_eq!(got.len(), 10);
        for (g, o) in got.iter().zip(&oracle) {
            assert_eq!(g.0, o.0);
            assert!((g.1 - o.1).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_dot_ordering_invariant_to_positive_scaling() {
        let m = random_matrix(20, 6, 5);
        let q: Vec<f32> = random_matrix(1, 6, 6).row(0).to_vec();
        let scaled: Vec<f32> = q.iter().map(|v| v * 3.5).collect();
        let a = rank(&q, &m, 20, Measure::Dot, &HashSet::new());
        let b = rank(&scaled, &m, 20, Measure::Dot, &HashSet::new());
        let order_a: Vec<usize> = a.iter().map(|x| x.0).collect();
        let order_b: Vec<usize> = b.iter().map(|x| x.0).collect();
        assert_eq!(order_a, order_b);
    }

    #[test]
    fn rank_full_k_is_a_permutation() {
        let m = random_matrix(15, 4, 7);
        let got = rank(&[0.5; 4], &m, 15, Measure::Cosine, &HashSet::new());
        let mut idx: Vec<usize> = got.iter().map(|x| x.0).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..15).collect::<Vec<_>>());
    }

    #[test]
    fn rank_breaks_ties_by_ascending_index() {
        let m = EmbeddingMatrix::from_vec(3, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let got = rank(&[1.0, 0.0], &m, 3, Measure::Dot, &HashSet::new());
        assert_eq!(
            got.iter().map(|x| x.0).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    fn tiny_model(kind: ModelKind, seed: u64) -> ModelState {
        let vocab = Vocabulary::from_rows(vec![
            ("alpha".into(), 9),
            ("@cite:p1".into(), 4),
            ("beta".into(), 2),
        ]);
        let registry =
            DocRegistry::from_rows(vec![("p0".into(), 0), ("p1".into(), 4), ("p2".into(), 1)]);
        let dim = 4;
        let (wi, wo, di, dn) = kind.presence();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mk = |present: bool, rows: usize| {
            present.then(|| EmbeddingMatrix::uniform_init(rows, dim, 0.5, &mut rng))
        };
        ModelState {
            kind,
            dim,
            w_in: mk(wi, vocab.len()),
            w_out: mk(wo, vocab.len()),
            d_in: mk(di, registry.len()),
            d_out: mk(dn, registry.len()),
            vocab,
            registry,
        }
    }

    #[test]
    fn presence_follows_kind() {
        for kind in ModelKind::ALL {
            let m = tiny_model(kind, 11);
            m.validate().unwrap();
            let (wi, wo, di, dn) = kind.presence();
            assert_eq!(m.w_in.is_some(), wi);
            assert_eq!(m.w_out.is_some(), wo);
            assert_eq!(m.d_in.is_some(), di);
            assert_eq!(m.d_out.is_some(), dn);
        }
    }

    #[test]
    fn validate_rejects_missing_matrix() {
        let mut m = tiny_model(ModelKind::Hd2v, 12);
        m.d_out = None;
        assert!(matches!(
            m.validate(),
            Err(ModelError::PresenceMismatch { .. })
        ));
    }

    #[test]
    fn validate_rejects_wrong_dim() {
        let mut m = tiny_model(ModelKind::PvDm, 13);
        m.d_in = Some(EmbeddingMatrix::zeros(3, 7));
        assert!(matches!(
            m.validate(),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn doc_vectors_resolve_via_pseudo_words_for_word_models() {
        let m = tiny_model(ModelKind::Cbow, 14);
        let p1 = m.registry.index("p1").unwrap();
        let p0 = m.registry.index("p0").unwrap();
        let pseudo = m.vocab.get("@cite:p1").unwrap();
        assert_eq!(m.doc_in_vector(p1).unwrap(), m.w_in.as_ref().unwrap().row(pseudo));
        assert_eq!(m.doc_out_vector(p1).unwrap(), m.w_out.as_ref().unwrap().row(pseudo));
        // p0 was never cited: no pseudo-word, no vector
        assert!(m.doc_in_vector(p0).is_none());
        assert!(m.doc_out_vector(p0).is_none());
    }

    #[test]
    fn doc_vectors_resolve_directly_for_doc_models() {
        let m = tiny_model(ModelKind::Hd2v, 15);
        let p0 = m.registry.index("p0").unwrap();
        assert_eq!(m.doc_in_vector(p0).unwrap(), m.d_in.as_ref().unwrap().row(p0));
        assert_eq!(m.doc_out_vector(p0).unwrap(), m.d_out.as_ref().unwrap().row(p0));
        let pv = tiny_model(ModelKind::PvDm, 16);
        assert!(pv.doc_out_vector(p0).is_none());
    }

    #[test]
    fn save_load_roundtrip_is_bit_exact() {
        for kind in ModelKind::ALL {
            let m = tiny_model(kind, 20 + kind.code() as u64);
            let mut bytes = Vec::new();
            m.write_to(&mut bytes).unwrap();
            let loaded = ModelState::read_from(&mut &bytes[..]).unwrap();
            loaded.validate().unwrap();
            let mut bytes2 = Vec::new();
            loaded.write_to(&mut bytes2).unwrap();
            assert_eq!(bytes, bytes2, "round-trip differs for {kind}");
            assert_eq!(m.vocab, loaded.vocab);
            assert_eq!(m.registry, loaded.registry);
            assert_eq!(m.w_in, loaded.w_in);
            assert_eq!(m.d_out, loaded.d_out);
        }
    }

    #[test]
    fn load_rejects_bad_magic() {
        let m = tiny_model(ModelKind::Cbow, 30);
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            ModelState::read_from(&mut &bytes[..]),
            Err(ModelError::BadMagic)
        ));
    }

    #[test]
    fn load_rejects_version_mismatch() {
        let m = tiny_model(ModelKind::Cbow, 31);
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        bytes[4] = 99;
        assert!(matches!(
            ModelState::read_from(&mut &bytes[..]),
            Err(ModelError::VersionMismatch(99))
        ));
    }

    #[test]
    fn load_rejects_truncation() {
        let m = tiny_model(ModelKind::Hd2v, 32);
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            ModelState::read_from(&mut &bytes[..]),
            Err(ModelError::Truncated)
        ));
        bytes.truncate(10);
        assert!(matches!(
            ModelState::read_from(&mut &bytes[..]),
            Err(ModelError::Truncated)
        ));
    }

    #[test]
    fn text_export_lists_sections() {
        let m = tiny_model(ModelKind::PvDbow, 33);
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("#section W_I"));
        assert!(text.contains("#section W_O 3 4"));
        assert!(text.contains("#section D_I 3 4"));
        assert!(text.lines().any(|l| l.starts_with("p0 ")));
    }
}
