//! End-to-end CLI tests: the staged pipeline over real files, plus the
//! exit-code contract (0 ok, 1 usage, 2 data, 3 numeric).

use std::path::Path;
use std::process::{Command, Output};

fn qx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qx"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn qx")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qx(dir, args);
    assert!(
        out.status.success(),
        "qx {args:?} failed ({}):\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    qx(dir, args).status.code().expect("exit code")
}

const SPEC: &str = r#"{"n_queries": 6, "docs_per_topic": 8, "n_noise_docs": 150,
    "vocabulary_size": 400, "concentration": 0.6, "seed": 5}"#;

#[test]
fn staged_pipeline_composes_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("spec.json"), SPEC).unwrap();

    let out = ok(dir, &["synth", "--spec", "spec.json", "--out-dir", "data"]);
    assert!(out.contains("198 documents, 6 queries, 48 qrels"), "{out}");

    ok(
        dir,
        &[
            "genruns",
            "--corpus",
            "data/corpus.jsonl",
            "--queries",
            "data/queries.tsv",
            "--depth",
            "60",
            "--variants",
            "2",
            "--out-dir",
            "runs",
        ],
    );
    assert_eq!(std::fs::read_dir(dir.join("runs")).unwrap().count(), 8);

    let out = ok(
        dir,
        &["pool", "--runs-dir", "runs", "--depth", "30", "--output", "pool.csv"],
    );
    assert!(out.contains("8 runs pooled at depth 30"), "{out}");

    ok(
        dir,
        &[
            "vectorize",
            "--corpus",
            "data/corpus.jsonl",
            "--dims",
            "25",
            "--output",
            "vectors.qxv",
            "--model",
            "model.qxv",
        ],
    );
    assert!(dir.join("model.qxv").exists());

    let out = ok(
        dir,
        &[
            "expand",
            "--pool",
            "pool.csv",
            "--qrels",
            "data/qrels.txt",
            "--vectors",
            "vectors.qxv",
            "--top-percent",
            "10",
            "--output",
            "pseudo.txt",
            "--scored",
            "scored.csv",
            "--merged",
            "merged.txt",
        ],
    );
    assert!(out.contains("pseudo-qrels"), "{out}");
    let pseudo = std::fs::read_to_string(dir.join("pseudo.txt")).unwrap();
    assert!(pseudo.lines().count() > 0);
    for line in pseudo.lines() {
        assert_eq!(line.split_whitespace().count(), 4);
    }
    let scored = std::fs::read_to_string(dir.join("scored.csv")).unwrap();
    assert!(scored.starts_with("query_id,doc_id,min_distance\n"));
    // Positives never become candidates, so here merged = qrels + pseudo.
    let qrel_lines = std::fs::read_to_string(dir.join("data/qrels.txt"))
        .unwrap()
        .lines()
        .count();
    let merged = std::fs::read_to_string(dir.join("merged.txt")).unwrap();
    assert_eq!(merged.lines().count(), qrel_lines + pseudo.lines().count());

    let out = ok(
        dir,
        &[
            "deciles",
            "--pool",
            "pool.csv",
            "--qrels",
            "pseudo.txt",
            "--truth",
            "data/qrels.txt",
            "--vectors",
            "vectors.qxv",
            "--output",
            "deciles.csv",
        ],
    );
    assert!(out.contains("decile  1:"), "{out}");
    let deciles = std::fs::read_to_string(dir.join("deciles.csv")).unwrap();
    assert_eq!(deciles.lines().count(), 11);

    // Concatenated run files evaluate per tag; tau compares two score sets.
    let mut all = String::new();
    for entry in std::fs::read_dir(dir.join("runs")).unwrap() {
        all.push_str(&std::fs::read_to_string(entry.unwrap().path()).unwrap());
    }
    std::fs::write(dir.join("all.run"), all).unwrap();
    let stdout_csv = ok(
        dir,
        &["eval", "--run", "all.run", "--qrels", "data/qrels.txt", "--depth", "60"],
    );
    assert!(stdout_csv.starts_with("run_tag,map\n"), "{stdout_csv}");
    assert_eq!(stdout_csv.lines().count(), 9);
    ok(
        dir,
        &[
            "eval",
            "--run",
            "all.run",
            "--qrels",
            "data/qrels.txt",
            "--depth",
            "60",
            "--output",
            "full.csv",
            "--per-query",
            "per_query.csv",
        ],
    );
    assert!(std::fs::read_to_string(dir.join("per_query.csv"))
        .unwrap()
        .starts_with("run_tag,query_id,ap\n"));
    ok(
        dir,
        &[
            "eval",
            "--run",
            "all.run",
            "--qrels",
            "pseudo.txt",
            "--depth",
            "60",
            "--output",
            "pseudo_scores.csv",
        ],
    );
    let out = ok(dir, &["tau", "--a", "full.csv", "--b", "pseudo_scores.csv"]);
    assert!(out.starts_with("tau "), "{out}");
    assert!(out.contains("systems 8"), "{out}");
}

#[test]
fn sweep_writes_reports_and_diagnoses() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("config.json"),
        format!(
            r#"{{"synthetic": {SPEC}, "qrel_fraction": 0.4,
                "k_values": [0.0, 5.0], "seeds": [1, 2],
                "pool_depth": 30, "pca_dims": 25, "eval_depth": 60,
                "run_variants": 2}}"#
        ),
    )
    .unwrap();
    let out = ok(
        dir,
        &["sweep", "--config", "config.json", "--out-dir", "report", "--threads", "2"],
    );
    assert!(out.contains("4 rows (2 seeds x 2 K values attempted)"), "{out}");
    let sweep = std::fs::read_to_string(dir.join("report/sweep.csv")).unwrap();
    assert!(sweep
        .starts_with("seed,fraction,K,tau_baseline,tau_expanded,n_pseudo,n_zero_queries\n"));
    assert_eq!(sweep.lines().count(), 5);
    assert!(dir.join("report/deciles.csv").exists());
    assert!(dir.join("report/tau_vs_k_f0.4.svg").exists());
}

#[test]
fn ingest_converts_both_collection_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("col.ohsu"),
        ".I 1\n.U\n87049087\n.W\nRenal function and oxalate handling.\n.I 2\n.U\n87049088\n.W\nAspirin therapy after infarction.\n",
    )
    .unwrap();
    let out = ok(
        dir,
        &["ingest", "--format", "ohsumed", "--input", "col.ohsu", "--output", "a.jsonl"],
    );
    assert!(out.contains("2 documents"), "{out}");

    std::fs::write(
        dir.join("col.sgml"),
        "<DOC>\n<DOCNO> FT911-1 </DOCNO>\n<TEXT>\nProfits rose sharply.\n</TEXT>\n</DOC>\n",
    )
    .unwrap();
    let out = ok(
        dir,
        &["ingest", "--format", "trecsgml", "--input", "col.sgml", "--output", "b.jsonl"],
    );
    assert!(out.contains("1 documents"), "{out}");
    let line = std::fs::read_to_string(dir.join("b.jsonl")).unwrap();
    assert!(line.contains("FT911-1"), "{line}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    assert_eq!(code(dir, &["--help"]), 0);
    assert_eq!(code(dir, &["--version"]), 0);
    assert_eq!(code(dir, &["nonsense"]), 1);
    assert_eq!(code(dir, &["pool", "--runs-dir", "x"]), 1);
    assert_eq!(
        code(dir, &["eval", "--run", "missing.run", "--qrels", "missing.txt"]),
        2
    );

    std::fs::write(dir.join("bad.qrels"), "q1 0 d1 not_a_grade\n").unwrap();
    std::fs::write(dir.join("one.run"), "q1 Q0 d1 1 2.0 sys\nq1 Q0 d2 2 1.0 sys\n").unwrap();
    assert_eq!(code(dir, &["eval", "--run", "one.run", "--qrels", "bad.qrels"]), 2);

    // Ties on every pair leave the correlation undefined.
    std::fs::write(dir.join("a.csv"), "run_tag,map\ns1,0.500000000\ns2,0.500000000\n")
        .unwrap();
    std::fs::write(dir.join("b.csv"), "run_tag,map\ns1,0.300000000\ns2,0.400000000\n")
        .unwrap();
    assert_eq!(code(dir, &["tau", "--a", "a.csv", "--b", "b.csv"]), 3);

    // Usage-range failure from inside the library maps to 1.
    std::fs::write(dir.join("spec.json"), SPEC).unwrap();
    assert_eq!(code(dir, &["synth", "--spec", "spec.json", "--out-dir", "d"]), 0);
    std::fs::write(dir.join("pool.csv"), "query_id,doc_id\nq000,noise.00001\n").unwrap();
    assert_eq!(
        code(
            dir,
            &[
                "vectorize", "--corpus", "d/corpus.jsonl", "--dims", "10", "--output",
                "v.qxv"
            ]
        ),
        0
    );
    assert_eq!(
        code(
            dir,
            &[
                "expand",
                "--pool",
                "pool.csv",
                "--qrels",
                "d/qrels.txt",
                "--vectors",
                "v.qxv",
                "--top-percent",
                "150",
                "--output",
                "p.txt"
            ]
        ),
        1
    );

    // A config whose strictness is violated reports a data error.
    std::fs::write(dir.join("bad_config.json"), r#"{"oops": true}"#).unwrap();
    assert_eq!(
        code(dir, &["sweep", "--config", "bad_config.json", "--out-dir", "r"]),
        2
    );
}
