//! Small shared helpers: stable hashing, seeded RNG streams, file access.

use std::fs;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a sequence of byte strings, with a separator byte between
/// parts so `["ab","c"]` and `["a","bc"]` differ. Stable across platforms
/// and releases, unlike `std::hash`.
pub fn stable_hash<I, B>(parts: I) -> u64
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in part.as_ref() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Independent RNG stream keyed by a global seed and a record key.
pub fn keyed_rng(seed: u64, key: &[&str]) -> ChaCha8Rng {
    let seed_bytes = seed.to_le_bytes();
    let mut parts: Vec<&[u8]> = vec![&seed_bytes];
    parts.extend(key.iter().map(|k| k.as_bytes()));
    ChaCha8Rng::seed_from_u64(stable_hash(parts))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Display name used in parse errors.
pub fn file_label(path: &Path) -> String {
    path.display().to_string()
}

/// Tab-separated fields may not contain tabs or line breaks.
pub fn check_field(field: &str) -> Result<()> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidInput(format!(
            "field {field:?} contains a tab or line break"
        )));
    }
    Ok(())
}

/// Non-empty, non-comment lines of a text file, with 1-based line numbers.
pub fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}
