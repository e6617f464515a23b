//! Whole-pipeline checks on the synthetic signature corpus: train each model
//! family, rank held-out contexts, evaluate, and round-trip a trained model
//! through the on-disk format.

use std::collections::HashSet;

use hyperdoc::corpus::{convert_caw, convert_nc};
use hyperdoc::eval::{eval_recommendation, RecQuery};
use hyperdoc::model::ModelState;
use hyperdoc::rank::{recommend, InferParams, Query, Strategy};
use hyperdoc::synth::{signature_corpus, SignatureSpec, SyntheticQuery};
use hyperdoc::train::{train_doc_model, train_hd2v, train_word_model, TrainConfig};
use hyperdoc::ModelKind;

fn rec_queries(queries: &[SyntheticQuery], model: &ModelState) -> Vec<RecQuery> {
    queries
        .iter()
        .map(|q| RecQuery {
            source: q.source.clone(),
            context: q.context.clone(),
            truth: q.targets.clone(),
            newcomer_truth: q
                .targets
                .iter()
                .map(|t| {
                    model
                        .registry
                        .index(t)
                        .is_none_or(|i| model.registry.is_newcomer(i))
                })
                .collect(),
        })
        .collect()
}

fn smoke_cfg() -> TrainConfig {
    TrainConfig {
        dim: 32,
        window: 4,
        epochs: 40,
        negatives: 20,
        min_count: 1,
        subsample: 0.0,
        seed: 3,
        init_epochs: 5,
        ..TrainConfig::hd2v_defaults()
    }
}

/// Full-strength citation training; the held-out contexts become
/// unambiguous at this scale.
fn citation_cfg() -> TrainConfig {
    TrainConfig {
        dim: 100,
        epochs: 100,
        negatives: 100,
        ..smoke_cfg()
    }
}

#[test]
fn hd2v_resolves_heldout_signature_queries() {
    let corpus = signature_corpus(&SignatureSpec::default());
    let (model, report) = train_hd2v(&corpus.docs, &citation_cfg()).unwrap();
    assert_eq!(model.kind, ModelKind::Hd2v);
    assert!(report.epochs.iter().any(|e| e.phase == "citation"));

    let queries = rec_queries(&corpus.heldout, &model);
    let report =
        eval_recommendation(&model, &queries, Strategy::I4O, 10, false, &InferParams::default())
            .unwrap();
    eprintln!(
        "hd2v i4o: recall@10 {:.3} map {:.3} mrr {:.3} ndcg {:.3}",
        report.recall, report.map, report.mrr, report.ndcg
    );
    let rec1: f64 = report
        .per_query
        .iter()
        .map(|q| if q.reciprocal_rank == 1.0 { 1.0 } else { 0.0 })
        .sum::<f64>()
        / report.per_query.len() as f64;
    eprintln!("hd2v i4o: rec@1 {rec1:.3}");
    assert!(rec1 >= 0.9, "recall@1 {rec1}");
    assert_eq!(report.recall, 1.0, "every truth inside the top 10");
}

#[test]
fn word_baseline_ranks_with_both_strategies() {
    let corpus = signature_corpus(&SignatureSpec::default());
    let caw = convert_caw(&corpus.docs);
    let cfg = TrainConfig {
        epochs: 40,
        ..smoke_cfg()
    };
    let (model, _) = train_word_model(&caw, &cfg, ModelKind::Cbow).unwrap();

    let queries = rec_queries(&corpus.heldout, &model);
    for strategy in [Strategy::I4O, Strategy::I4I] {
        let report =
            eval_recommendation(&model, &queries, strategy, 10, false, &InferParams::default())
                .unwrap();
        eprintln!(
            "cbow-caw {strategy}: recall@10 {:.3} mrr {:.3}",
            report.recall, report.mrr
        );
        assert!(report.recall > 0.5, "{strategy} recall {}", report.recall);
    }
}

#[test]
fn pvdm_d2v_recovers_documents_from_their_own_signatures() {
    let corpus = signature_corpus(&SignatureSpec::default());
    let nc = convert_nc(&corpus.docs);
    let cfg = TrainConfig {
        epochs: 40,
        ..smoke_cfg()
    };
    let (model, _) = train_doc_model(&nc, &cfg, ModelKind::PvDm).unwrap();

    let queries = rec_queries(&corpus.heldout, &model);
    let report =
        eval_recommendation(&model, &queries, Strategy::D2v, 10, false, &InferParams::default())
            .unwrap();
    eprintln!(
        "pvdm d2v: recall@10 {:.3} mrr {:.3}",
        report.recall, report.mrr
    );
    assert!(report.recall >= 0.5, "recall@10 {}", report.recall);
}

#[test]
fn trained_model_survives_disk_round_trip() {
    let corpus = signature_corpus(&SignatureSpec::default());
    let cfg = TrainConfig {
        epochs: 5,
        ..smoke_cfg()
    };
    let (model, _) = train_hd2v(&corpus.docs, &cfg).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.hdev");
    model.save(&path).unwrap();
    let loaded = ModelState::load(&path).unwrap();

    let query = Query {
        context: corpus.heldout[0].context.clone(),
        source: Some(corpus.heldout[0].source.clone()),
        exclude: vec![corpus.heldout[0].source.clone()],
    };
    let a = recommend(&model, &query, Strategy::I4O, 5, &InferParams::default()).unwrap();
    let b = recommend(&loaded, &query, Strategy::I4O, 5, &InferParams::default()).unwrap();
    assert_eq!(a.entries.len(), 5);
    for ((id_a, s_a), (id_b, s_b)) in a.entries.iter().zip(&b.entries) {
        assert_eq!(id_a, id_b);
        assert_eq!(s_a.to_bits(), s_b.to_bits(), "scores survive bit-exactly");
    }
}

#[test]
fn newcomer_queries_are_reachable_by_content_strategies() {
    let spec = SignatureSpec {
        newcomers: 5,
        ..SignatureSpec::default()
    };
    let corpus = signature_corpus(&spec);
    // the content phase must run long enough for a never-cited document's
    // IN vector to meet its own words' IN vectors
    let cfg = TrainConfig {
        init_epochs: 150,
        ..citation_cfg()
    };
    let (model, _) = train_hd2v(&corpus.docs, &cfg).unwrap();

    let queries = rec_queries(&corpus.newcomer_heldout, &model);
    assert!(queries.iter().all(RecQuery::has_newcomer_truth));
    let report =
        eval_recommendation(&model, &queries, Strategy::I4I, 10, true, &InferParams::default())
            .unwrap();
    eprintln!(
        "hd2v i4i newcomers: recall@10 {:.3} mrr {:.3}",
        report.recall, report.mrr
    );
    assert!(report.recall > 0.0, "newcomers reachable through IN vectors");

    // citation-as-word models structurally cannot rank a never-cited doc
    let caw = convert_caw(&corpus.docs);
    let (word_model, _) = train_word_model(&caw, &smoke_cfg(), ModelKind::Cbow).unwrap();
    let word_queries = rec_queries(&corpus.newcomer_heldout, &word_model);
    let word_report = eval_recommendation(
        &word_model,
        &word_queries,
        Strategy::I4O,
        10,
        true,
        &InferParams::default(),
    )
    .unwrap();
    assert_eq!(word_report.recall, 0.0);

    let excluded: HashSet<&str> = corpus.newcomer_ids.iter().map(String::as_str).collect();
    for outcome in &word_report.per_query {
        assert!(outcome.truth.iter().all(|t| excluded.contains(t.as_str())));
    }
}
