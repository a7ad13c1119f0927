//! Tag dictionary persistence: one `<tag>\t<hex byte sequence>` line per
//! entry, ascending tag.

use std::fs;
use std::path::Path;

use graphmal_core::prep::TagDictionary;

use crate::error::CliError;

pub fn write_dictionary(dict: &TagDictionary, path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for (tag, bytes) in dict.iter() {
        out.push_str(&format!("{tag}\t"));
        for b in bytes {
            out.push_str(&format!("{b:02x}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_dictionary(path: &Path) -> Result<TagDictionary, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fail = |message: String| CliError::FileFormat {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (tag, hex) = line
            .split_once('\t')
            .ok_or_else(|| fail("expected <tag>\\t<hex>".into()))?;
        let tag: u32 = tag.parse().map_err(|_| fail(format!("bad tag {tag:?}")))?;
        if hex.len() % 2 != 0 {
            return Err(fail("odd-length hex byte sequence".into()));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|j| u8::from_str_radix(&hex[j..j + 2], 16))
            .collect::<Result<Vec<u8>, _>>()
            .map_err(|_| fail(format!("bad hex {hex:?}")))?;
        entries.push((tag, bytes));
    }
    TagDictionary::from_entries(entries).map_err(CliError::Prep)
}
