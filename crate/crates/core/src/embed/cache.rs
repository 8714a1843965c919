//! Persistent embedding cache.
//!
//! The file starts with an 8-byte magic, then holds one record per entry:
//!
//! ```text
//! u16 LE   model-name length
//! bytes    model name (UTF-8)
//! u32 LE   dimension F
//! [u8; 32] SHA-256 of the text
//! F × f32 LE vector
//! ```
//!
//! Records are only ever appended.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::EmbedError;

const MAGIC: &[u8; 8] = b"TAGAEMB1";

type Key = (String, u32, [u8; 32]);

pub fn content_hash(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

#[derive(Debug)]
struct Inner {
    entries: HashMap<Key, Vec<f32>>,
    file: Option<BufWriter<File>>,
}

/// Thread-safe map from (model, dimension, text hash) to a raw response
/// vector, optionally backed by a file.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self { path: None, inner: Mutex::new(Inner { entries: HashMap::new(), file: None }) }
    }

    /// Opens (or creates) a cache file and loads every record in it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref().to_path_buf();
        let corrupt =
            |reason: &str| EmbedError::CorruptCache { path: path.display().to_string(), reason: reason.into() };
        let mut entries = HashMap::new();
        if path.exists() {
            let mut bytes = Vec::new();
            File::open(&path)?.read_to_end(&mut bytes)?;
            if !bytes.is_empty() {
                if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
                    return Err(corrupt("bad magic"));
                }
                let mut at = MAGIC.len();
                while at < bytes.len() {
                    let (key, vector, next) = read_record(&bytes, at).ok_or_else(|| corrupt("truncated record"))?;
                    entries.insert(key, vector);
                    at = next;
                }
            }
        }
        let fresh = !path.exists() || std::fs::metadata(&path)?.len() == 0;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = BufWriter::new(OpenOptions::new().create(true).append(true).open(&path)?);
        if fresh {
            file.write_all(MAGIC)?;
            file.flush()?;
        }
        Ok(Self { path: Some(path), inner: Mutex::new(Inner { entries, file: Some(file) }) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model: &str, dim: usize, text: &str) -> Option<Vec<f32>> {
        let key = (model.to_string(), dim as u32, content_hash(text));
        self.inner.lock().expect("cache lock").entries.get(&key).cloned()
    }

    /// Stores entries in the given order, appending them to the file.
    pub fn insert_many(&self, model: &str, dim: usize, items: &[(&str, Vec<f32>)]) -> Result<(), EmbedError> {
        let mut inner = self.inner.lock().expect("cache lock");
        for (text, vector) in items {
            if vector.len() != dim {
                return Err(EmbedError::DimensionMismatch { expected: dim, got: vector.len() });
            }
            let key = (model.to_string(), dim as u32, content_hash(text));
            if inner.entries.contains_key(&key) {
                continue;
            }
            if let Some(f) = inner.file.as_mut() {
                write_record(f, &key, vector)?;
            }
            inner.entries.insert(key, vector.clone());
        }
        if let Some(f) = inner.file.as_mut() {
            f.flush()?;
        }
        Ok(())
    }

    pub fn insert(&self, model: &str, dim: usize, text: &str, vector: Vec<f32>) -> Result<(), EmbedError> {
        self.insert_many(model, dim, &[(text, vector)])
    }
}

fn write_record(w: &mut impl Write, key: &Key, vector: &[f32]) -> std::io::Result<()> {
    let name = key.0.as_bytes();
    let len = u16::try_from(name.len()).map_err(|_| std::io::Error::other("model name too long"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(name)?;
    w.write_all(&key.1.to_le_bytes())?;
    w.write_all(&key.2)?;
    for x in vector {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_record(bytes: &[u8], mut at: usize) -> Option<(Key, Vec<f32>, usize)> {
    let mut take = |n: usize| -> Option<&[u8]> {
        let s = bytes.get(at..at + n)?;
        at += n;
        Some(s)
    };
    let name_len = u16::from_le_bytes(take(2)?.try_into().ok()?) as usize;
    let name = String::from_utf8(take(name_len)?.to_vec()).ok()?;
    let dim = u32::from_le_bytes(take(4)?.try_into().ok()?);
    let hash: [u8; 32] = take(32)?.try_into().ok()?;
    let raw = take(dim as usize * 4)?;
    let vector = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Some(((name, dim, hash), vector, at))
}
