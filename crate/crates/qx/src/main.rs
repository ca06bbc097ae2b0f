//! Command-line interface over the judgement-expansion pipeline. Each
//! subcommand wraps one library stage so that the steps compose through
//! files: ingest -> vectorize -> pool -> expand -> eval -> tau, with
//! synth/genruns producing inputs and sweep driving everything end to end.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use qx::error::{Error, Result};
use qx::evaluation::{
    kendall_tau, mean_average_precision, write_per_query_ap_csv, write_system_scores_csv,
    SystemScore,
};
use qx::expansion::{
    decile_table, merge_qrels, pool_candidates, score_candidates, select_pseudo_qrels,
    write_decile_csv, write_scored_csv, CandidatePool,
};
use qx::formats::{
    parse_ohsumed, parse_qrels, parse_run, parse_trec_sgml, write_qrels, write_run,
    QrelRecord, Run,
};
use qx::harness::dataset::{
    load_runs_dir, load_stopwords, read_corpus_jsonl, read_pool_csv, read_queries_tsv,
    write_corpus_jsonl, write_pool_csv,
};
use qx::harness::{emit_report, generate_synthetic, run_experiment, ExperimentConfig, SyntheticSpec};
use qx::retrieval::{build_index, generate_runs, jitter_variants, WeightingModel};
use qx::vectorspace::{
    build_vocabulary, fit_pca, read_vector_set, tfidf_vectors, tokenize, write_pca_model,
    write_vector_set, DenseVector,
};

#[derive(Parser)]
#[command(name = "qx", version, about = "Expand sparse relevance judgements by document distance and measure how reliably the expanded judgements rank retrieval systems", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusFormat {
    /// Field-tagged collection (.I/.U/.W records).
    Ohsumed,
    /// SGML-style collection (<DOC>/<DOCNO> markup).
    Trecsgml,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a source collection into the JSON-lines corpus format.
    Ingest {
        #[arg(long, value_enum)]
        format: CorpusFormat,
        /// Source collection file.
        #[arg(long)]
        input: PathBuf,
        /// Corpus to write, one {"doc_id", "text"} object per line.
        #[arg(long)]
        output: PathBuf,
    },
    /// Embed a corpus: tf.idf vectors reduced to a low-dimensional space.
    Vectorize {
        #[arg(long)]
        corpus: PathBuf,
        /// Target dimensionality (capped by vocabulary and corpus size).
        #[arg(long, default_value_t = 200)]
        dims: usize,
        /// Stopword list, one word per line; a bundled list by default.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Binary vector set to write.
        #[arg(long)]
        output: PathBuf,
        /// Also write the fitted reduction model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Pool candidate documents: the union of each run's top-depth results.
    Pool {
        /// Directory of run files in the 6-column format.
        #[arg(long)]
        runs_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        depth: usize,
        /// Candidate pairs CSV to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Score pooled candidates by distance and select pseudo-qrels.
    Expand {
        /// Candidate pairs CSV from `pool`.
        #[arg(long)]
        pool: PathBuf,
        /// Available judgements (positives drive the distances).
        #[arg(long)]
        qrels: PathBuf,
        /// Vector set from `vectorize`.
        #[arg(long)]
        vectors: PathBuf,
        /// Keep the nearest K percent of candidates, globally.
        #[arg(long)]
        top_percent: f64,
        /// Pseudo-qrels to write, in the 4-column judgement format.
        #[arg(long)]
        output: PathBuf,
        /// Also write every scored candidate with its distance.
        #[arg(long)]
        scored: Option<PathBuf>,
        /// Also write the input and pseudo judgements merged into one
        /// expanded set; the input wins conflicts.
        #[arg(long)]
        merged: Option<PathBuf>,
    },
    /// Bin scored candidates into distance deciles and measure the
    /// fraction judged relevant in each.
    Deciles {
        /// Candidate pairs CSV from `pool`.
        #[arg(long)]
        pool: PathBuf,
        /// Available judgements (positives drive the distances).
        #[arg(long)]
        qrels: PathBuf,
        /// Judgements treated as truth for the decile fractions; defaults
        /// to the --qrels file.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Vector set from `vectorize`.
        #[arg(long)]
        vectors: PathBuf,
        /// Decile table CSV to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Score the runs in a file with mean average precision.
    Eval {
        /// Run file; may hold several run tags.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Evaluate each ranking to this depth.
        #[arg(long, default_value_t = 1000)]
        depth: usize,
        /// Scores CSV to write; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write per-query average precision.
        #[arg(long)]
        per_query: Option<PathBuf>,
    },
    /// Kendall tau-b between two system score files from `eval`.
    Tau {
        /// First scores CSV (run_tag,map).
        #[arg(long)]
        a: PathBuf,
        /// Second scores CSV over the same run tags.
        #[arg(long)]
        b: PathBuf,
    },
    /// Generate a synthetic corpus, queries, and full judgements.
    Synth {
        /// Generation spec as strict JSON.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build retrieval runs for a corpus with the four classic weighting
    /// models, optionally cloned into jittered variants.
    Genruns {
        #[arg(long)]
        corpus: PathBuf,
        /// Query texts as 2-column TSV (query_id TAB text).
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        depth: usize,
        /// Systems per model; 4 models x variants runs in total.
        #[arg(long, default_value_t = 1)]
        variants: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the full experiment sweep described by a config file and write
    /// its reports.
    Sweep {
        /// Experiment config as strict JSON.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads; 0 picks automatically.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).with_path(path))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::from(e).with_path(path))
}

fn read_qrels_file(path: &Path) -> Result<Vec<QrelRecord>> {
    parse_qrels(&read_lossy(path)?).map_err(|e| e.with_path(path))
}

fn read_vectors_file(path: &Path) -> Result<BTreeMap<String, DenseVector>> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).with_path(path))?;
    let pairs = read_vector_set(&mut bytes.as_slice()).map_err(|e| e.with_path(path))?;
    Ok(pairs.into_iter().collect())
}

fn cmd_ingest(format: CorpusFormat, input: &Path, output: &Path) -> Result<()> {
    let text = read_lossy(input)?;
    let docs = match format {
        CorpusFormat::Ohsumed => parse_ohsumed(&text),
        CorpusFormat::Trecsgml => parse_trec_sgml(&text),
    }
    .map_err(|e| e.with_path(input))?;
    let mut buf = Vec::new();
    write_corpus_jsonl(&mut buf, &docs)?;
    write_file(output, &buf)?;
    println!("{} documents -> {}", docs.len(), output.display());
    Ok(())
}

fn cmd_vectorize(
    corpus: &Path,
    dims: usize,
    stopwords: Option<&Path>,
    output: &Path,
    model_out: Option<&Path>,
) -> Result<()> {
    let docs = read_corpus_jsonl(corpus)?;
    let stop = load_stopwords(stopwords)?;
    let token_docs: Vec<Vec<String>> =
        docs.iter().map(|d| tokenize(&d.text, &stop)).collect();
    let vocab = build_vocabulary(&token_docs);
    let sparse = tfidf_vectors(&token_docs, &vocab);
    let model = fit_pca(&sparse, vocab.len(), dims)?;
    let vectors: Vec<(String, DenseVector)> = docs
        .iter()
        .zip(&sparse)
        .map(|(d, v)| Ok((d.doc_id.clone(), model.project(v)?)))
        .collect::<Result<_>>()?;
    let mut buf = Vec::new();
    write_vector_set(&mut buf, &vectors)?;
    write_file(output, &buf)?;
    if let Some(path) = model_out {
        let mut buf = Vec::new();
        write_pca_model(&mut buf, &model)?;
        write_file(path, &buf)?;
    }
    println!(
        "{} documents, {} terms -> {} dims -> {}",
        docs.len(),
        vocab.len(),
        model.k(),
        output.display()
    );
    Ok(())
}

fn cmd_pool(runs_dir: &Path, depth: usize, output: &Path) -> Result<()> {
    let runs = load_runs_dir(runs_dir)?;
    let pool = pool_candidates(&runs, depth)?;
    let pairs: Vec<(String, String)> = pool
        .iter()
        .flat_map(|(q, docs)| docs.iter().map(move |d| (q.to_string(), d.clone())))
        .collect();
    let mut buf = Vec::new();
    write_pool_csv(&mut buf, &pairs)?;
    write_file(output, &buf)?;
    let mean = pool.n_pairs() as f64 / pool.n_queries().max(1) as f64;
    println!(
        "{} runs pooled at depth {}: {} candidate pairs over {} queries (mean {:.2} per query) -> {}",
        runs.len(),
        depth,
        pool.n_pairs(),
        pool.n_queries(),
        mean,
        output.display()
    );
    Ok(())
}

fn cmd_expand(
    pool_path: &Path,
    qrels_path: &Path,
    vectors_path: &Path,
    top_percent: f64,
    output: &Path,
    scored_out: Option<&Path>,
    merged_out: Option<&Path>,
) -> Result<()> {
    let pool = CandidatePool::from_pairs(read_pool_csv(pool_path)?);
    let qrels = read_qrels_file(qrels_path)?;
    let vectors = read_vectors_file(vectors_path)?;
    let scored = score_candidates(&pool, &qrels, &vectors)?;
    let pseudo = select_pseudo_qrels(&scored, top_percent)?;
    write_file(output, write_qrels(&pseudo)?.as_bytes())?;
    if let Some(path) = scored_out {
        let mut buf = Vec::new();
        write_scored_csv(&mut buf, &scored)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = merged_out {
        let merged = merge_qrels(&qrels, &pseudo);
        write_file(path, write_qrels(&merged)?.as_bytes())?;
    }
    println!(
        "{} pseudo-qrels (nearest {top_percent}% of {} candidates) -> {}",
        pseudo.len(),
        scored.len(),
        output.display()
    );
    Ok(())
}

fn cmd_deciles(
    pool_path: &Path,
    qrels_path: &Path,
    truth_path: Option<&Path>,
    vectors_path: &Path,
    output: &Path,
) -> Result<()> {
    let pool = CandidatePool::from_pairs(read_pool_csv(pool_path)?);
    let qrels = read_qrels_file(qrels_path)?;
    let truth = match truth_path {
        Some(path) => read_qrels_file(path)?,
        None => qrels.clone(),
    };
    let vectors = read_vectors_file(vectors_path)?;
    let scored = score_candidates(&pool, &qrels, &vectors)?;
    let report = decile_table(&scored, &truth)?;
    let mut buf = Vec::new();
    write_decile_csv(&mut buf, &report)?;
    write_file(output, &buf)?;
    for row in report.rows() {
        println!(
            "decile {:>2}: {:>8} pairs, positive fraction {:.9}",
            row.decile, row.count, row.positive_fraction
        );
    }
    println!("-> {}", output.display());
    Ok(())
}

fn cmd_eval(
    run_path: &Path,
    qrels_path: &Path,
    depth: usize,
    output: Option<&Path>,
    per_query: Option<&Path>,
) -> Result<()> {
    let entries = parse_run(&read_lossy(run_path)?).map_err(|e| e.with_path(run_path))?;
    let runs = Run::group_entries(&entries)?;
    let qrels = read_qrels_file(qrels_path)?;
    let mut scores: Vec<SystemScore> = runs
        .iter()
        .map(|run| mean_average_precision(run, &qrels, depth))
        .collect::<Result<_>>()?;
    scores.sort_by(|a, b| b.map.total_cmp(&a.map).then_with(|| a.run_tag.cmp(&b.run_tag)));
    let mut buf = Vec::new();
    write_system_scores_csv(&mut buf, &scores)?;
    match output {
        Some(path) => write_file(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    if let Some(path) = per_query {
        let mut buf = Vec::new();
        write_per_query_ap_csv(&mut buf, &scores)?;
        write_file(path, &buf)?;
    }
    Ok(())
}

fn read_scores_csv(path: &Path) -> Result<Vec<SystemScore>> {
    let bad = |msg: String| Error::InvalidRecord(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    if reader.headers().map_err(|e| bad(e.to_string()))? != vec!["run_tag", "map"] {
        return Err(bad("expected header run_tag,map".to_string()));
    }
    let mut scores = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("expected 2 columns, got {}", record.len())));
        }
        let map: f64 = record[1]
            .parse()
            .map_err(|e| bad(format!("bad map value {:?}: {e}", &record[1])))?;
        if !map.is_finite() {
            return Err(Error::Numeric(format!(
                "{}: non-finite map for {:?}",
                path.display(),
                &record[0]
            )));
        }
        scores.push(SystemScore {
            run_tag: record[0].to_string(),
            map,
            per_query_ap: BTreeMap::new(),
        });
    }
    if scores.is_empty() {
        return Err(bad("no systems".to_string()));
    }
    Ok(scores)
}

fn cmd_tau(a: &Path, b: &Path) -> Result<()> {
    let scores_a = read_scores_csv(a)?;
    let scores_b = read_scores_csv(b)?;
    let cmp = kendall_tau(&scores_a, &scores_b)?;
    println!("tau {:.9}", cmp.tau);
    println!(
        "systems {} concordant {} discordant {} tied {}",
        cmp.n_systems, cmp.concordant, cmp.discordant, cmp.tied
    );
    Ok(())
}

fn cmd_synth(spec_path: &Path, out_dir: &Path) -> Result<()> {
    let text = read_lossy(spec_path)?;
    let spec: SyntheticSpec = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: spec_path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let (corpus, queries, qrels) = generate_synthetic(&spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).with_path(out_dir))?;
    let corpus_path = out_dir.join("corpus.jsonl");
    let mut buf = Vec::new();
    write_corpus_jsonl(&mut buf, &corpus)?;
    write_file(&corpus_path, &buf)?;
    let queries_path = out_dir.join("queries.tsv");
    let mut text = String::new();
    for (id, body) in &queries {
        text.push_str(id);
        text.push('\t');
        text.push_str(body);
        text.push('\n');
    }
    write_file(&queries_path, text.as_bytes())?;
    let qrels_path = out_dir.join("qrels.txt");
    write_file(&qrels_path, write_qrels(&qrels)?.as_bytes())?;
    println!(
        "{} documents, {} queries, {} qrels -> {}",
        corpus.len(),
        queries.len(),
        qrels.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_genruns(
    corpus: &Path,
    queries: &Path,
    stopwords: Option<&Path>,
    depth: usize,
    variants: usize,
    out_dir: &Path,
) -> Result<()> {
    let docs = read_corpus_jsonl(corpus)?;
    let query_texts = read_queries_tsv(queries)?;
    let stop = load_stopwords(stopwords)?;
    let index = build_index(&docs, &stop)?;
    let base = generate_runs(&index, &WeightingModel::standard_four(), &query_texts, depth)?;
    let runs = jitter_variants(&base, variants)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).with_path(out_dir))?;
    for run in &runs {
        let path = out_dir.join(format!("{}.run", run.tag()));
        write_file(&path, write_run(&run.to_entries())?.as_bytes())?;
    }
    println!(
        "{} runs ({} models x {} variants, depth {}) -> {}",
        runs.len(),
        base.len(),
        variants,
        depth,
        out_dir.display()
    );
    Ok(())
}

fn cmd_sweep(config_path: &Path, out_dir: &Path, threads: usize) -> Result<()> {
    let config = ExperimentConfig::from_file(config_path)?;
    let result = run_experiment(&config, threads)?;
    for line in &result.diagnostics {
        eprintln!("warning: {line}");
    }
    if result.rows.is_empty() {
        let detail = result
            .diagnostics
            .first()
            .map(String::as_str)
            .unwrap_or("no diagnostics");
        return Err(Error::InvalidRecord(format!(
            "every sweep cell failed ({detail})"
        )));
    }
    let files = emit_report(&result, out_dir)?;
    println!(
        "{} rows ({} seeds x {} K values attempted)",
        result.rows.len(),
        config.seeds.len(),
        config.k_values.len()
    );
    for file in files {
        println!("-> {}", file.display());
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest { format, input, output } => cmd_ingest(format, &input, &output),
        Command::Vectorize { corpus, dims, stopwords, output, model } => {
            cmd_vectorize(&corpus, dims, stopwords.as_deref(), &output, model.as_deref())
        }
        Command::Pool { runs_dir, depth, output } => cmd_pool(&runs_dir, depth, &output),
        Command::Expand { pool, qrels, vectors, top_percent, output, scored, merged } => {
            cmd_expand(
                &pool,
                &qrels,
                &vectors,
                top_percent,
                &output,
                scored.as_deref(),
                merged.as_deref(),
            )
        }
        Command::Deciles { pool, qrels, truth, vectors, output } => {
            cmd_deciles(&pool, &qrels, truth.as_deref(), &vectors, &output)
        }
        Command::Eval { run, qrels, depth, output, per_query } => {
            cmd_eval(&run, &qrels, depth, output.as_deref(), per_query.as_deref())
        }
        Command::Tau { a, b } => cmd_tau(&a, &b),
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir),
        Command::Genruns { corpus, queries, stopwords, depth, variants, out_dir } => {
            cmd_genruns(
                &corpus,
                &queries,
                stopwords.as_deref(),
                depth,
                variants,
                &out_dir,
            )
        }
        Command::Sweep { config, out_dir, threads } => cmd_sweep(&config, &out_dir, threads),
    }
}

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
