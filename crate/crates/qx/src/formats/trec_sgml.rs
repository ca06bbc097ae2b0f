use std::sync::OnceLock;

use regex::Regex;

use super::RawDocument;
use crate::error::{Error, Result};

/// A line "contains markup" iff it matches this pattern anywhere: '<'
/// followed by a letter or '/', then any non-'>' characters, then '>'.
/// Bare comparisons like "cost < 5 and > 3" do not match.
fn markup_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[A-Za-z/][^>]*>").unwrap())
}

fn docno_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<DOCNO>([^<]*)</DOCNO>").unwrap())
}

/// Parse a TREC SGML collection: documents delimited by <DOC>...</DOC> with
/// the identifier in <DOCNO>...</DOCNO>. The text is the newline-joined
/// sequence of every line between the delimiters that carries no markup
/// (per [`markup_pattern`]); markup lines, the DOCNO line included, are
/// dropped after the id is recovered.
pub fn parse_trec_sgml(input: &str) -> Result<Vec<RawDocument>> {
    struct Doc {
        start_line: usize,
        doc_id: Option<String>,
        lines: Vec<String>,
    }

    let mut docs = Vec::new();
    let mut current: Option<Doc> = None;

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        match (&mut current, trimmed) {
            (None, "<DOC>") => {
                current = Some(Doc {
                    start_line: line_no,
                    doc_id: None,
                    lines: Vec::new(),
                });
            }
            (None, _) => {}
            (Some(_), "<DOC>") => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "nested <DOC> before </DOC>".to_string(),
                });
            }
            (Some(doc), "</DOC>") => {
                let doc_id = doc.doc_id.take().ok_or(Error::Parse {
                    line: doc.start_line,
                    msg: "document has no <DOCNO>".to_string(),
                })?;
                docs.push(RawDocument {
                    doc_id,
                    text: doc.lines.join("\n"),
                });
                current = None;
            }
            (Some(doc), _) => {
                if doc.doc_id.is_none() {
                    if let Some(cap) = docno_pattern().captures(line) {
                        let id = cap[1].trim().to_string();
                        if id.is_empty() || id.chars().any(char::is_whitespace) {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("invalid DOCNO {id:?}"),
                            });
                        }
                        doc.doc_id = Some(id);
                        continue;
                    }
                }
                if !markup_pattern().is_match(line) {
                    doc.lines.push(line.to_string());
                }
            }
        }
    }
    if let Some(doc) = current {
        return Err(Error::Parse {
            line: doc.start_line,
            msg: "unterminated <DOC> at end of input".to_string(),
        });
    }
    Ok(docs)
}
