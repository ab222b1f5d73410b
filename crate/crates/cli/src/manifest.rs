//! The run manifest: every invocation records its resolved parameters and
//! input digests next to its reports, so a run can be reproduced exactly
//! from the manifest alone (same inputs + same manifest ⇒ byte-identical
//! outputs).

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use chipcarbon::Result;

/// What produced a set of report files.
///
/// Deliberately excludes the output directory: where the reports land has
/// no bearing on their contents.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub format: &'static str,
    pub seed: u64,
    pub samples: usize,
    /// Command-specific parameters, fully resolved (axes expanded).
    pub parameters: serde_json::Value,
    /// Digests of every input file the command read.
    pub inputs: Vec<InputDigest>,
}

/// One input file's path (as passed on the command line) and content hash.
#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    /// Hashes raw file bytes; the path is recorded as written, not
    /// canonicalized, so manifests stay machine-independent.
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let mut sha256 = String::with_capacity(digest.len() * 2);
        for byte in digest {
            write!(sha256, "{byte:02x}").expect("writing hex to a String cannot fail");
        }
        InputDigest {
            path: path.display().to_string(),
            sha256,
        }
    }
}

impl RunManifest {
    /// Serializes to pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}
