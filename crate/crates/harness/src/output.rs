//! CSV artifacts with a one-line provenance comment.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentKind;
use crate::error::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The comment line opening every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub kind: ExperimentKind,
    pub scenario: String,
    pub seed: u64,
}

impl Header {
    pub fn line(&self) -> String {
        format!(
            "# kind={} scenario={} seed={} version={}",
            self.kind, self.scenario, self.seed, ARTIFACT_VERSION
        )
    }
}

pub fn write_rows<W: Write, S: Serialize>(mut w: W, header: &Header, rows: &[S]) -> Result<()> {
    writeln!(w, "{}", header.line())?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn rows_to_string<S: Serialize>(header: &Header, rows: &[S]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Writes `<dir>/<name>.csv`, creating `dir` if needed.
pub fn write_artifact<S: Serialize>(
    dir: &Path,
    name: &str,
    header: &Header,
    rows: &[S],
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.csv"));
    let file = fs::File::create(&path)?;
    write_rows(std::io::BufWriter::new(file), header, rows)?;
    Ok(path)
}

/// Reads an artifact back, skipping the comment line.
pub fn read_rows<S: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<S>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
