//! CSV tables and SVG figures written by the command line.

mod svg;
mod tables;

use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

pub use svg::{coefficient_svg, curves_svg, SvgPanel};
pub use tables::{
    read_curves_csv, write_coefficients_csv, write_curves_csv, write_sensitivity_csv,
    COEFFICIENTS_HEADER, CURVES_HEADER, SENSITIVITY_HEADER,
};

/// Comment block placed above every emitted CSV. Everything needed to rerun
/// the command: tool version, the complete flag set and input digests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHeader {
    pub command: String,
    pub flags: Vec<(String, String)>,
    /// `(file name, sha256 hex)`.
    pub inputs: Vec<(String, String)>,
    pub notes: Vec<(String, String)>,
}

impl RunHeader {
    pub fn new(command: &str) -> Self {
        RunHeader {
            command: command.to_string(),
            ..RunHeader::default()
        }
    }

    pub fn flag(mut self, name: &str, value: impl ToString) -> Self {
        self.flags.push((name.to_string(), value.to_string()));
        self
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    /// Records the digest of an input file under its base name, so the header
    /// does not depend on where the file lives.
    pub fn input(mut self, path: &Path) -> io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.inputs.push((name, sha256_hex(&bytes)));
        Ok(self)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# auctionfda {}", crate::VERSION)?;
        writeln!(out, "# command: {}", self.command)?;
        let flags: Vec<String> = self
            .flags
            .iter()
            .map(|(k, v)| format!("--{k} {v}"))
            .collect();
        writeln!(out, "# flags: {}", flags.join(" "))?;
        for (name, digest) in &self.inputs {
            writeln!(out, "# input: {name} sha256={digest}")?;
        }
        for (k, v) in &self.notes {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
