//! On-disk dataset pieces the harness assembles: a JSON-lines corpus, a
//! 2-column TSV of query texts, a directory of run files, optional stopword
//! lists, and the candidate-pool CSV exchanged between pipeline stages.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::formats::{parse_run, RawDocument, Run};
use crate::stopwords::{default_stopword_set, parse_stopword_file};

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).with_path(path))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Reads a corpus stored as one JSON object per line. Blank lines are
/// allowed; duplicate doc ids are not.
pub fn read_corpus_jsonl(path: &Path) -> Result<Vec<RawDocument>> {
    let text = read_lossy(path)?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(line).map_err(|e| {
            Error::InvalidRecord(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        crate::formats::check_id("doc_id", &doc.doc_id).map_err(|e| {
            Error::InvalidRecord(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::InvalidRecord(format!(
                "{}:{}: duplicate doc_id {:?}",
                path.display(),
                i + 1,
                doc.doc_id
            )));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus_jsonl(w: &mut impl Write, docs: &[RawDocument]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut *w, doc)
            .map_err(|e| Error::InvalidRecord(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads query texts as `query_id<TAB>text` lines. Text may contain further
/// tabs; only the first one splits.
pub fn read_queries_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_lossy(path)?;
    let mut queries = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| {
            Error::InvalidRecord(format!("{}:{}: {msg}", path.display(), i + 1))
        };
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected query_id<TAB>text".to_string()))?;
        crate::formats::check_id("query_id", id)
            .map_err(|e| bad(e.to_string()))?;
        if body.trim().is_empty() {
            return Err(bad(format!("query {id:?} has empty text")));
        }
        if !seen.insert(id.to_string()) {
            return Err(bad(format!("duplicate query_id {id:?}")));
        }
        queries.push((id.to_string(), body.to_string()));
    }
    if queries.is_empty() {
        return Err(Error::InvalidRecord(format!(
            "{}: no queries",
            path.display()
        )));
    }
    Ok(queries)
}

/// Loads every regular file in a directory as a run file, in lexicographic
/// filename order, and groups all entries by run tag afterwards so a run may
/// span files.
pub fn load_runs_dir(dir: &Path) -> Result<Vec<Run>> {
    let mut paths = Vec::new();
    let entries =
        std::fs::read_dir(dir).map_err(|e| Error::from(e).with_path(dir))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::from(e).with_path(dir))?;
        if entry
            .file_type()
            .map_err(|e| Error::from(e).with_path(&entry.path()))?
            .is_file()
        {
            paths.push(entry.path());
        }
    }
    paths.sort();
    let mut all = Vec::new();
    for path in &paths {
        let text = read_lossy(path)?;
        let entries = parse_run(&text).map_err(|e| e.with_path(path))?;
        all.extend(entries);
    }
    if all.is_empty() {
        return Err(Error::InvalidRecord(format!(
            "{}: no run entries",
            dir.display()
        )));
    }
    Run::group_entries(&all)
}

/// The stopword set for an experiment: a one-word-per-line file when given,
/// the bundled list otherwise.
pub fn load_stopwords(path: Option<&Path>) -> Result<HashSet<String>> {
    match path {
        Some(p) => Ok(parse_stopword_file(&read_lossy(p)?)),
        None => Ok(default_stopword_set()),
    }
}

/// Writes (query_id, doc_id) candidate pairs as a 2-column CSV.
pub fn write_pool_csv(w: &mut impl Write, pairs: &[(String, String)]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["query_id", "doc_id"])?;
    for (q, d) in pairs {
        out.write_record([q.as_str(), d.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pool_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::InvalidRecord(format!("{}: {e}", path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::InvalidRecord(format!("{}: {e}", path.display())))?;
        if headers != vec!["query_id", "doc_id"] {
            return Err(Error::InvalidRecord(format!(
                "{}: expected header query_id,doc_id",
                path.display()
            )));
        }
    }
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| Error::InvalidRecord(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(Error::InvalidRecord(format!(
                "{}: expected 2 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        crate::formats::check_id("query_id", &record[0])?;
        crate::formats::check_id("doc_id", &record[1])?;
        pairs.push((record[0].to_string(), record[1].to_string()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidRecord(format!(
            "{}: no candidate pairs",
            path.display()
        )));
    }
    Ok(pairs)
}
