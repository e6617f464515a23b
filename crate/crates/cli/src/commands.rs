//! Subcommand implementations. Human-readable lines go to stdout, config
//! echoes and progress to stderr, machine-readable records as single JSON
//! lines marked with a leading `json` key.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use hyperdoc::corpus::{
    convert_cac, convert_caw, convert_nc, corpus_stats, parse_corpus, write_plain_corpus,
    HyperDocument, PlainDocument,
};
use hyperdoc::eval::{
    eval_recommendation, kfold_classify, make_features, queries_from_corpus, FeatureMode,
};
use hyperdoc::model::{cosine, ModelState};
use hyperdoc::rank::{recommend, Query};
use hyperdoc::train::{train_doc_model, train_hd2v, train_word_model};
use hyperdoc::ModelKind;

use crate::args::{
    Cli, Command, ConvertArgs, ConvertMode, EvalClfArgs, EvalRecArgs, ExportArgs, NnArgs,
    RecommendArgs, Section, TrainArgs,
};
use crate::config::{echo_rank, echo_train, resolve_rank, resolve_seed, resolve_train, FileConfig};
use crate::error::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Convert(a) => cmd_convert(a),
        Command::Train(a) => cmd_train(a),
        Command::EvalRec(a) => cmd_eval_rec(a),
        Command::EvalClf(a) => cmd_eval_clf(a),
        Command::Recommend(a) => cmd_recommend(a),
        Command::Nn(a) => cmd_nn(a),
        Command::Export(a) => cmd_export(a),
    }
}

fn read_corpus(path: &Path) -> Result<Vec<HyperDocument>, CliError> {
    let file = File::open(path)?;
    Ok(parse_corpus(BufReader::new(file))?)
}

fn cmd_convert(a: ConvertArgs) -> Result<(), CliError> {
    let docs = read_corpus(&a.input)?;
    let stats = corpus_stats(&docs, a.window);
    let (plain, skipped_targets): (Vec<PlainDocument>, usize) = match a.mode {
        ConvertMode::Caw => (convert_caw(&docs), 0),
        ConvertMode::Nc => (convert_nc(&docs), 0),
        ConvertMode::Cac => {
            let cac = convert_cac(&docs, a.window);
            (cac.docs, cac.skipped_targets)
        }
    };
    let mut out = BufWriter::new(File::create(&a.output)?);
    write_plain_corpus(&mut out, &plain)?;
    out.flush()?;
    println!("docs {}", stats.docs);
    println!("tokens {}", stats.tokens);
    println!("words {}", stats.words);
    println!("citations {}", stats.cite_tokens);
    println!("citation-instances {}", stats.citation_instances);
    println!("skipped-external-targets {}", stats.skipped_external_targets);
    if a.mode == ConvertMode::Cac {
        println!("skipped-cac-targets {skipped_targets}");
    }
    println!("wrote {}", a.output.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let cfg = resolve_train(a.kind, &file, &a.overrides)?;
    echo_train(a.kind, &cfg);
    let docs = read_corpus(&a.input)?;
    let started = Instant::now();
    let (model, report) = match a.kind {
        ModelKind::Hd2v => train_hd2v(&docs, &cfg)?,
        ModelKind::Cbow | ModelKind::SkipGram => {
            train_word_model(&convert_caw(&docs), &cfg, a.kind)?
        }
        ModelKind::PvDm | ModelKind::PvDbow => train_doc_model(&convert_caw(&docs), &cfg, a.kind)?,
    };
    model.save(&a.output)?;
    println!("kind {}", model.kind);
    println!("dim {}", model.dim);
    println!("vocab {}", model.vocab.len());
    println!("docs {}", model.registry.len());
    println!("epochs {}", report.epochs.len());
    println!("elapsed-secs {:.2}", started.elapsed().as_secs_f64());
    println!("wrote {}", a.output.display());
    Ok(())
}

fn cmd_eval_rec(a: EvalRecArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let params = resolve_rank(a.strategy, a.top_k, a.infer_steps, a.seed, &file)?;
    echo_rank(&params);
    let model = ModelState::load(&a.model)?;
    let docs = read_corpus(&a.test)?;
    let queries = queries_from_corpus(&docs, a.window, &model);
    let report = eval_recommendation(
        &model,
        &queries,
        params.strategy,
        params.top_k,
        a.newcomer_only,
        &params.infer,
    )?;
    println!("strategy {}", report.strategy);
    println!("k {}", report.k);
    println!("queries {}", report.query_count);
    println!("recall@{} {:.4}", report.k, report.recall);
    println!("map {:.4}", report.map);
    println!("mrr {:.4}", report.mrr);
    println!("ndcg@{} {:.4}", report.k, report.ndcg);
    let record = json!({
        "json": "eval-rec",
        "strategy": report.strategy,
        "k": report.k,
        "queries": report.query_count,
        "recall": report.recall,
        "map": report.map,
        "mrr": report.mrr,
        "ndcg": report.ndcg,
    });
    println!("{record}");
    if let Some(path) = &a.per_query {
        let mut out = BufWriter::new(File::create(path)?);
        for outcome in &report.per_query {
            let line = serde_json::to_string(outcome)
                .expect("per-query outcome serialization cannot fail");
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        eprintln!("per-query dump: {}", path.display());
    }
    Ok(())
}

/// Labels file: `doc-id<TAB>label`, one per line; blank lines skipped.
fn read_labels(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, label)) = line.split_once('\t') else {
            return Err(CliError::Format(format!(
                "labels file line {}: expected doc-id<TAB>label",
                idx + 1
            )));
        };
        if id.is_empty() || label.is_empty() {
            return Err(CliError::Format(format!(
                "labels file line {}: empty id or label",
                idx + 1
            )));
        }
        labels.push((id.to_string(), label.to_string()));
    }
    Ok(labels)
}

fn cmd_eval_clf(a: EvalClfArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = resolve_seed(a.seed, &file, 1)?;
    let mode = a.features.unwrap_or(FeatureMode::In);
    let model = ModelState::load(&a.model)?;
    let raw = read_labels(&a.labels)?;

    let mut ids: Vec<String> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut skipped_unknown = 0usize;
    let mut skipped_uncited = 0usize;
    for (id, label) in raw {
        let Some(idx) = model.registry.index(&id) else {
            log::warn!("labels: document `{id}` not in the model; skipped");
            skipped_unknown += 1;
            continue;
        };
        if a.cited_only && model.registry.cited_count(idx) == 0 {
            skipped_uncited += 1;
            continue;
        }
        ids.push(id);
        names.push(label);
    }

    let mut classes: Vec<String> = names.clone();
    classes.sort();
    classes.dedup();
    let labels: Vec<usize> = names
        .iter()
        .map(|n| classes.binary_search(n).expect("label present"))
        .collect();

    let table = make_features(&model, &ids, mode);
    let missing = table.missing.iter().filter(|&&m| m).count();
    let (macro_f1, micro_f1) = kfold_classify(&table.rows, &labels, a.folds, seed)?;

    println!("documents {}", ids.len());
    println!("classes {}", classes.len());
    println!("feature-dim {}", table.dim);
    println!("missing-vectors {missing}");
    println!("skipped-unknown {skipped_unknown}");
    if a.cited_only {
        println!("skipped-uncited {skipped_uncited}");
    }
    println!("folds {}", a.folds);
    println!("macro-f1 {macro_f1:.4}");
    println!("micro-f1 {micro_f1:.4}");
    let record = json!({
        "json": "eval-clf",
        "documents": ids.len(),
        "classes": classes.len(),
        "feature_dim": table.dim,
        "missing_vectors": missing,
        "folds": a.folds,
        "seed": seed,
        "macro_f1": macro_f1,
        "micro_f1": micro_f1,
    });
    println!("{record}");
    Ok(())
}

fn cmd_recommend(a: RecommendArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let params = resolve_rank(a.strategy, a.top_k, a.infer_steps, a.seed, &file)?;
    echo_rank(&params);
    let text = match (&a.context, &a.context_file) {
        (Some(words), None) => words.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)?,
        _ => unreachable!("clap enforces exactly one context source"),
    };
    let context: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    let model = ModelState::load(&a.model)?;
    let query = Query {
        context,
        source: None,
        exclude: a.exclude,
    };
    let rec = recommend(&model, &query, params.strategy, params.top_k, &params.infer)?;
    if rec.all_oov {
        log::warn!("every context word is out of vocabulary; no recommendation");
    } else if rec.oov_dropped > 0 {
        log::warn!("{} context word(s) out of vocabulary, dropped", rec.oov_dropped);
    }
    for (i, (id, score)) in rec.entries.iter().enumerate() {
        println!("{}\t{}\t{:.6}", i + 1, id, score);
    }
    Ok(())
}

fn cmd_nn(a: NnArgs) -> Result<(), CliError> {
    let model = ModelState::load(&a.model)?;
    let lacking = |what: &str| CliError::Config(format!("model kind {} has no {what}", model.kind));

    // (id, vector) candidate pool of the query's own type and section
    let (query, pool): (Vec<f32>, Vec<(String, Vec<f32>)>) = match (&a.word, &a.doc) {
        (Some(word), None) => {
            let idx = model
                .vocab
                .get(word)
                .ok_or_else(|| CliError::Config(format!("word `{word}` not in vocabulary")))?;
            let matrix = match a.section {
                Section::In => model.w_in.as_ref().ok_or_else(|| lacking("word IN matrix"))?,
                Section::Out => model.w_out.as_ref().ok_or_else(|| lacking("word OUT matrix"))?,
            };
            let pool = (0..model.vocab.len())
                .map(|i| (model.vocab.word(i).to_string(), matrix.row(i).to_vec()))
                .collect();
            (matrix.row(idx).to_vec(), pool)
        }
        (None, Some(doc)) => {
            let idx = model
                .registry
                .index(doc)
                .ok_or_else(|| CliError::Config(format!("document `{doc}` not in the model")))?;
            let vector_of = |i: usize| match a.section {
                Section::In => model.doc_in_vector(i),
                Section::Out => model.doc_out_vector(i),
            };
            let query = vector_of(idx)
                .ok_or_else(|| lacking("vector for this document and section"))?
                .to_vec();
            let pool = (0..model.registry.len())
                .filter_map(|i| vector_of(i).map(|v| (model.registry.id(i).to_string(), v.to_vec())))
                .collect();
            (query, pool)
        }
        _ => unreachable!("clap enforces exactly one of --word/--doc"),
    };

    let mut scored: Vec<(String, f64)> = pool
        .into_iter()
        .map(|(id, v)| {
            let s = cosine(&query, &v);
            (id, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores").then(a.0.cmp(&b.0)));
    scored.truncate(a.top_k);
    for (i, (id, score)) in scored.iter().enumerate() {
        println!("{}\t{}\t{:.6}", i + 1, id, score);
    }
    Ok(())
}

fn cmd_export(a: ExportArgs) -> Result<(), CliError> {
    let model = ModelState::load(&a.model)?;
    let mut out = BufWriter::new(File::create(&a.output)?);
    model.write_text(&mut out)?;
    out.flush()?;
    println!("wrote {}", a.output.display());
    Ok(())
}
