use super::RawDocument;
use crate::error::{Error, Result};

/// Parse the OHSUMED field-tagged collection format. Records are introduced
/// by ".I <seq>" lines; each field tag line (".U", ".T", ".W", ".A", ".S",
/// ".M") is followed by exactly one content line. The document id is the
/// ".U" content and the text is the ".W" (abstract) content; every other
/// field is discarded. Records without an abstract survive with empty text.
///
/// Wrapped (multi-line) field values are not supported: a second consecutive
/// content line is a parse error, so collections with wrapped lines must be
/// pre-joined.
pub fn parse_ohsumed(input: &str) -> Result<Vec<RawDocument>> {
    struct Record {
        start_line: usize,
        doc_id: Option<String>,
        text: Option<String>,
    }

    enum Pending {
        None,
        DocId,
        Text,
        Discard,
    }

    let mut docs = Vec::new();
    let mut current: Option<Record> = None;
    let mut pending = Pending::None;

    let flush = |record: Option<Record>, docs: &mut Vec<RawDocument>| -> Result<()> {
        if let Some(rec) = record {
            let doc_id = rec.doc_id.ok_or(Error::Parse {
                line: rec.start_line,
                msg: "record has no .U field".to_string(),
            })?;
            docs.push(RawDocument {
                doc_id,
                text: rec.text.unwrap_or_default(),
            });
        }
        Ok(())
    };

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end();
        if let Some(rest) = trimmed.strip_prefix(".I") {
            if !matches!(pending, Pending::None) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "field tag has no content line".to_string(),
                });
            }
            if rest.trim().is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: ".I line has no sequence number".to_string(),
                });
            }
            flush(current.take(), &mut docs)?;
            current = Some(Record {
                start_line: line_no,
                doc_id: None,
                text: None,
            });
            continue;
        }
        if trimmed.starts_with('.') && trimmed.len() == 2 {
            if current.is_none() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("field tag {trimmed} outside any .I record"),
                });
            }
            if !matches!(pending, Pending::None) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "field tag has no content line".to_string(),
                });
            }
            pending = match trimmed {
                ".U" => Pending::DocId,
                ".W" => Pending::Text,
                ".M" | ".T" | ".A" | ".S" => Pending::Discard,
                other => {
                    log::warn!("line {line_no}: unknown field tag {other}, skipped");
                    Pending::Discard
                }
            };
            continue;
        }
        if trimmed.is_empty() && matches!(pending, Pending::None) {
            continue;
        }
        let Some(rec) = current.as_mut() else {
            return Err(Error::Parse {
                line: line_no,
                msg: "content outside any .I record".to_string(),
            });
        };
        match pending {
            Pending::DocId => {
                let id = trimmed.trim().to_string();
                if id.is_empty() || id.chars().any(char::is_whitespace) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("invalid document id {id:?}"),
                    });
                }
                rec.doc_id = Some(id);
            }
            Pending::Text => rec.text = Some(trimmed.to_string()),
            Pending::Discard => {}
            Pending::None => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "content line without a preceding field tag".to_string(),
                });
            }
        }
        pending = Pending::None;
    }
    if !matches!(pending, Pending::None) {
        return Err(Error::Parse {
            line: input.lines().count(),
            msg: "field tag at end of input has no content line".to_string(),
        });
    }
    flush(current.take(), &mut docs)?;
    Ok(docs)
}
