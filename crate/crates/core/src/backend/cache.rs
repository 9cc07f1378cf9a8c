//! Append-only translation memory.
//!
//! The on-disk format is one JSON object per line:
//!
//! ```text
//! {"backend_id":"dict","source_lang":"en","target_lang":"fa","source_text":"x","target_text":"y"}
//! ```
//!
//! Records are only ever appended. When a key appears more than once the
//! last record wins on load.

use std::collections::HashMap;
use std::fs::{File, OpenOptions, TryLockError};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::CacheError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub backend_id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub source_text: String,
    pub target_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub backend_id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub source_text: String,
}

impl CacheKey {
    pub fn new(backend_id: &str, source_lang: &str, target_lang: &str, source_text: &str) -> Self {
        CacheKey {
            backend_id: backend_id.to_string(),
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            source_text: source_text.to_string(),
        }
    }
}

impl CacheRecord {
    pub fn key(&self) -> CacheKey {
        CacheKey::new(
            &self.backend_id,
            &self.source_lang,
            &self.target_lang,
            &self.source_text,
        )
    }
}

#[derive(Debug)]
pub struct TranslationCache {
    path: Option<PathBuf>,
    index: RwLock<HashMap<CacheKey, String>>,
    // The file handle also holds the exclusive advisory lock for the run.
    writer: Option<Mutex<BufWriter<File>>>,
}

impl TranslationCache {
    /// A cache that lives only for the current process.
    pub fn in_memory() -> Self {
        TranslationCache {
            path: None,
            index: RwLock::new(HashMap::new()),
            writer: None,
        }
    }

    /// Opens (creating if needed) and locks a cache file, loading every valid record.
    ///
    /// Unparseable lines are skipped and returned as [`CacheError::Corrupt`].
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<CacheError>), CacheError> {
        let path = path.as_ref();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => {
                return Err(CacheError::Locked {
                    path: path.display().to_string(),
                })
            }
            Err(TryLockError::Error(e)) => return Err(e.into()),
        }

        let mut bytes = Vec::new();
        file.seek(SeekFrom::Start(0))?;
        file.read_to_end(&mut bytes)?;

        let mut index = HashMap::new();
        let mut problems = Vec::new();
        for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let parsed = std::str::from_utf8(line)
                .map_err(|e| e.to_string())
                .and_then(|l| serde_json::from_str::<CacheRecord>(l).map_err(|e| e.to_string()));
            match parsed {
                Ok(record) => {
                    index.insert(record.key(), record.target_text);
                }
                Err(message) => problems.push(CacheError::Corrupt { line: i + 1, message }),
            }
        }

        // a torn final record must not swallow the next append
        if bytes.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n")?;
        }

        Ok((
            TranslationCache {
                path: Some(path.to_path_buf()),
                index: RwLock::new(index),
                writer: Some(Mutex::new(BufWriter::new(file))),
            },
            problems,
        ))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn lookup(&self, key: &CacheKey) -> Option<String> {
        self.index.read().expect("cache index poisoned").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends one record and makes it visible to lookups.
    pub fn store(&self, record: CacheRecord) -> Result<(), CacheError> {
        self.store_all(std::iter::once(record))
    }

    /// Appends several records under a single writer lock, then flushes.
    pub fn store_all(&self, records: impl IntoIterator<Item = CacheRecord>) -> Result<(), CacheError> {
        let records: Vec<CacheRecord> = records.into_iter().collect();
        if let Some(writer) = &self.writer {
            let mut writer = writer.lock().expect("cache writer poisoned");
            for record in &records {
                let line = serde_json::to_string(record).expect("cache records always serialize");
                writer.write_all(line.as_bytes())?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
        }
        let mut index = self.index.write().expect("cache index poisoned");
        for record in records {
            let key = record.key();
            index.insert(key, record.target_text);
        }
        Ok(())
    }
}
