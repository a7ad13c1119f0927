//! Corpus helpers: file digests, shared-library collection, and the sample
//! manifest file format (`<id>\t<path>\t<label>\t<sha256>` per line).

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use graphmal_core::prep::{DatasetManifest, ManifestRecord};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::CliError;

/// SHA-256 of a file's contents as lowercase hex.
pub fn compute_sha256(path: &Path) -> Result<String, CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::open(path).map_err(io_err)?;
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buffer).map_err(io_err)?;
        if n == 0 {
            break;
        }
        hasher.update(&buffer[..n]);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Every file under `root` whose name contains ".so", recursively, in
/// lexicographic path order.
pub fn collect_shared_libraries(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.file_name().to_string_lossy().contains(".so") {
            found.push(entry.into_path());
        }
    }
    found.sort();
    Ok(found)
}

fn is_hex_digest(s: &str) -> bool {
    s.len() == 64
        && s.bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Parses a manifest file. IDs must be unique, labels 0 or 1, digests 64
/// lowercase hex characters.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen_ids = std::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let fail = |message: String| CliError::FileFormat {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        if fields.len() != 4 {
            return Err(fail(format!(
                "expected 4 tab-separated fields, got {}",
                fields.len()
            )));
        }
        let id = fields[0].to_string();
        if !seen_ids.insert(id.clone()) {
            return Err(fail(format!("duplicate sample id {id:?}")));
        }
        let label: u32 = fields[2]
            .parse()
            .ok()
            .filter(|l| *l <= 1)
            .ok_or_else(|| fail(format!("label {:?} is not 0 or 1", fields[2])))?;
        if !is_hex_digest(fields[3]) {
            return Err(fail(format!(
                "digest {:?} is not 64 lowercase hex characters",
                fields[3]
            )));
        }
        records.push(ManifestRecord {
            id,
            path: fields[1].to_string(),
            label,
            sha256: fields[3].to_string(),
        });
    }
    Ok(DatasetManifest { records })
}

/// Writes a manifest in record order.
pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for r in &manifest.records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.id, r.path, r.label, r.sha256
        ));
    }
    fs::write(path, out).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Resolves a manifest record's path relative to the manifest's directory.
pub fn record_path(manifest_path: &Path, record: &ManifestRecord) -> PathBuf {
    let p = PathBuf::from(&record.path);
    if p.is_absolute() {
        p
    } else {
        manifest_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}
