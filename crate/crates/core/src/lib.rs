//! Distributed representations of hypertext documents: dual-vector citation
//! embedding plus word/paragraph-vector baselines, with recommendation and
//! classification evaluation.
//!
//! A hyper-document is a token stream mixing words and citation marks. The
//! citation model keeps two vectors per document — IN (the document as
//! citing content) and OUT (the document as a citation target) — trained on
//! ⟨source, context, target⟩ triples with negative sampling. Baseline models
//! first downcast the corpus to plain text (`corpus::convert_caw`,
//! `convert_nc`, `convert_cac`) and train classic word2vec/paragraph-vector
//! objectives.
//!
//! Typical flow: parse a JSON-lines corpus (`corpus`), train (`train`),
//! persist (`model`), then rank candidates (`rank`) or evaluate (`eval`).

pub mod corpus;
pub mod eval;
pub mod model;
pub mod par;
pub mod rank;
pub mod synth;
pub mod train;
pub mod vocab;

pub use corpus::{HyperDocument, PlainDocument, Token};
pub use model::{ModelKind, ModelState};
pub use rank::Strategy;
pub use train::TrainConfig;
