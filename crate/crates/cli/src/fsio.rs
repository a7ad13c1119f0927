//! Loading binaries from disk and resolving their shared-library
//! dependencies across a list of search directories.

use std::fs;
use std::path::{Path, PathBuf};

use graphmal_core::elf::{parse_executable, resolve_dependencies_with, BinaryImage};

use crate::error::CliError;

/// Reads and parses one ELF file, recording its path on the image.
pub fn load_binary(path: &Path) -> Result<BinaryImage, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut image = parse_executable(&bytes).map_err(|source| CliError::BinaryParse {
        path: path.to_path_buf(),
        source,
    })?;
    image.path = path.display().to_string();
    Ok(image)
}

/// Resolves the transitive dependency closure of `image`, looking each
/// `DT_NEEDED` name up as a direct child of every search path in order and
/// taking the first file that exists. With `strict` set, a name found in no
/// search path is an error.
pub fn resolve_dependencies(
    image: &BinaryImage,
    search_paths: &[PathBuf],
    strict: bool,
) -> Result<Vec<BinaryImage>, CliError> {
    resolve_dependencies_with(
        image,
        |name| {
            for dir in search_paths {
                let candidate = dir.join(name);
                if candidate.is_file() {
                    if let Ok(bytes) = fs::read(&candidate) {
                        return Some((candidate.display().to_string(), bytes));
                    }
                }
            }
            None
        },
        strict,
    )
    .map_err(|source| CliError::Resolve {
        path: PathBuf::from(&image.path),
        source,
    })
}
