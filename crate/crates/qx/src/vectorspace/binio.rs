//! Binary and CSV serialization for dense vector sets and PCA models.
//!
//! Layout (all integers and reals little-endian):
//!   magic "QXV1" (4 bytes), kind (1 byte),
//!   kind 1, vector set: n u64, k u64, n*k f64 row-major,
//!     then n doc ids (u32 byte length + UTF-8 bytes, row order),
//!   kind 2, PCA model: v u64, k u64, mean v f64,
//!     components k*v f64 row-major, explained_variance k f64.

use std::collections::HashSet;
use std::io::{Read, Write};

use super::{DenseVector, PcaModel};
use crate::error::{Error, Result};
use crate::formats::check_id;

const MAGIC: &[u8; 4] = b"QXV1";
const KIND_VECTOR_SET: u8 = 1;
const KIND_PCA_MODEL: u8 = 2;

/// Upper bound on any declared dimension; catches corrupt headers before
/// they turn into enormous allocations.
const MAX_DIM: u64 = 1 << 32;

pub fn write_vector_set(
    w: &mut impl Write,
    rows: &[(String, DenseVector)],
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("vector set has no rows".to_string()));
    }
    let k = rows[0].1.len();
    let mut seen = HashSet::new();
    for (id, vec) in rows {
        check_id("doc", id)?;
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidRecord(format!(
                "duplicate doc id '{id}' in vector set"
            )));
        }
        if vec.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: vec.len(),
            });
        }
    }
    w.write_all(MAGIC)?;
    w.write_all(&[KIND_VECTOR_SET])?;
    w.write_all(&(rows.len() as u64).to_le_bytes())?;
    w.write_all(&(k as u64).to_le_bytes())?;
    for (_, vec) in rows {
        for x in vec.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for (id, _) in rows {
        write_string(w, id)?;
    }
    Ok(())
}

pub fn read_vector_set(r: &mut impl Read) -> Result<Vec<(String, DenseVector)>> {
    read_header(r, KIND_VECTOR_SET)?;
    let n = read_dim(r, "row count")?;
    let k = read_dim(r, "vector width")?;
    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        vectors.push(DenseVector::new(read_reals(r, k)?)?);
    }
    let mut rows = Vec::with_capacity(n);
    let mut seen = HashSet::new();
    for vec in vectors {
        let id = read_string(r)?;
        check_id("doc", &id)?;
        if !seen.insert(id.clone()) {
            return Err(Error::InvalidRecord(format!(
                "duplicate doc id '{id}' in vector set"
            )));
        }
        rows.push((id, vec));
    }
    Ok(rows)
}

pub fn write_pca_model(w: &mut impl Write, model: &PcaModel) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[KIND_PCA_MODEL])?;
    w.write_all(&(model.n_features() as u64).to_le_bytes())?;
    w.write_all(&(model.k() as u64).to_le_bytes())?;
    for x in model.mean() {
        w.write_all(&x.to_le_bytes())?;
    }
    for comp in model.components() {
        for x in comp {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for x in model.explained_variance() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pca_model(r: &mut impl Read) -> Result<PcaModel> {
    read_header(r, KIND_PCA_MODEL)?;
    let v = read_dim(r, "feature count")?;
    let k = read_dim(r, "component count")?;
    let mean = read_reals(r, v)?;
    let mut components = Vec::with_capacity(k);
    for _ in 0..k {
        components.push(read_reals(r, v)?);
    }
    let explained_variance = read_reals(r, k)?;
    PcaModel::from_parts(mean, components, explained_variance)
}

/// Debug CSV export: header doc_id,c0..c{k-1}, reals with 9 decimals.
pub fn write_vector_set_csv(
    w: &mut impl Write,
    rows: &[(String, DenseVector)],
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("vector set has no rows".to_string()));
    }
    let k = rows[0].1.len();
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["doc_id".to_string()];
    header.extend((0..k).map(|j| format!("c{j}")));
    out.write_record(&header)?;
    for (id, vec) in rows {
        if vec.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: vec.len(),
            });
        }
        let mut record = vec![id.clone()];
        record.extend(vec.as_slice().iter().map(|x| format!("{x:.9}")));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

fn read_header(r: &mut impl Read, expected_kind: u8) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidRecord(format!(
            "bad magic bytes {magic:?}, expected \"QXV1\""
        )));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    if kind[0] != expected_kind {
        return Err(Error::InvalidRecord(format!(
            "QXV1 kind {} where kind {expected_kind} was expected",
            kind[0]
        )));
    }
    Ok(())
}

fn read_dim(r: &mut impl Read, what: &str) -> Result<usize> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let dim = u64::from_le_bytes(buf);
    if dim > MAX_DIM {
        return Err(Error::InvalidRecord(format!(
            "implausible {what} {dim} in QXV1 header"
        )));
    }
    Ok(dim as usize)
}

fn read_reals(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    if bytes.len() > u32::MAX as usize {
        return Err(Error::InvalidRecord("doc id too long".to_string()));
    }
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_string(r: &mut impl Read) -> Result<String> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len as u64 > MAX_DIM {
        return Err(Error::InvalidRecord("implausible string length".to_string()));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf)
        .map_err(|_| Error::InvalidRecord("doc id is not valid UTF-8".to_string()))
}
