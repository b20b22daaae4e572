//! File outputs: flat binary fields with a JSON header, rank-map CSV, JSON
//! reports, and artifact names keyed by a body hash.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convex_bodies::ConvexBody;
use crate::convexity_audit::RankMap;
use crate::error::{Error, Result};
use crate::solver::{Grid4, GridField};

pub const SCHEMA_VERSION: u32 = 1;
pub const RANK_CSV_HEADER: &str = "node,x1,x2,y1,y2,lambda1,lambda2,lambda3,lambda4,rank,strip";

/// Sidecar header of a `.bin` field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub schema_version: u32,
    pub dims: [usize; 4],
    pub origin: [f64; 4],
    pub spacing: f64,
    pub dtype: String,
    pub order: String,
    /// 0 exterior, 1 interior, 2 cut, 3 snapped
    pub classification_rle: Vec<(u8, usize)>,
    pub body_hash: String,
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// First 16 hex digits of SHA-256 over the body's JSON form.
pub fn body_hash(body: &ConvexBody) -> String {
    let json = serde_json::to_string(body).expect("bodies serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// `<prefix>_<hash>_h<h>_psi<ψ>[_t<t>]`
pub fn artifact_stem(prefix: &str, body: &ConvexBody, h: f64, psi: f64, t: Option<f64>) -> String {
    let mut s = format!("{prefix}_{}_h{h:.6}_psi{psi:.6}", body_hash(body));
    if let Some(t) = t {
        s.push_str(&format!("_t{t:.4}"));
    }
    s
}

/// Writes `<stem>.bin` (little-endian f64, every node, zero off the
/// unknowns) and `<stem>.json`.
pub fn write_field(dir: &Path, stem: &str, grid: &Grid4, u: &GridField) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let mut w = BufWriter::new(fs::File::create(&bin)?);
    for x in u.to_full(grid) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    let header = FieldHeader {
        schema_version: SCHEMA_VERSION,
        dims: grid.dims,
        origin: grid.origin(),
        spacing: grid.h,
        dtype: "f64le".into(),
        order: "row-major, last axis fastest".into(),
        classification_rle: grid.class_rle(),
        body_hash: body_hash(&grid.body),
    };
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, &header)?;
    Ok((bin, json))
}

pub fn read_field(dir: &Path, stem: &str) -> Result<(FieldHeader, Vec<f64>)> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let bytes = fs::read(dir.join(format!("{stem}.bin")))?;
    let n: usize = header.dims.iter().product();
    if bytes.len() != 8 * n {
        return Err(Error::Argument(format!("field file holds {} bytes, header wants {}", bytes.len(), 8 * n)));
    }
    let vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, vals))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p)?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_rank_csv(path: &Path, map: &RankMap) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{RANK_CSV_HEADER}")?;
    for n in &map.nodes {
        let p = n.position.map(fmt_f64);
        let e = n.eigenvalues.map(fmt_f64);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            n.node, p[0], p[1], p[2], p[3], e[0], e[1], e[2], e[3], n.rank, n.in_strip as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Generic CSV with a header row; floats in round-trip form.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}
