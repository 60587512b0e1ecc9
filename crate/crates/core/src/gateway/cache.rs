//! Response cache: an in-memory map, optionally backed by one file per key
//! on disk. Disk writes go through a temp file and a rename.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub struct ResponseCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Vec<u8>>>,
}

fn file_name(key: &str) -> String {
    let digest = Sha256::digest(key.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl ResponseCache {
    pub fn new(dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir, memory: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, op: &str, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(op).join(file_name(key)))
    }

    fn memo_key(op: &str, key: &str) -> String {
        format!("{op}\u{0}{key}")
    }

    pub fn get_bytes(&self, op: &str, key: &str) -> Option<Vec<u8>> {
        let memo_key = Self::memo_key(op, key);
        if let Some(v) = self.memory.lock().expect("cache poisoned").get(&memo_key) {
            return Some(v.clone());
        }
        let bytes = fs::read(self.path(op, key)?).ok()?;
        self.memory.lock().expect("cache poisoned").insert(memo_key, bytes.clone());
        Some(bytes)
    }

    pub fn put_bytes(&self, op: &str, key: &str, bytes: &[u8]) -> std::io::Result<()> {
        if let Some(path) = self.path(op, key) {
            let parent = path.parent().expect("cache path has a parent");
            fs::create_dir_all(parent)?;
            let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
            tmp.write_all(bytes)?;
            tmp.persist(&path).map_err(|e| e.error)?;
        }
        self.memory
            .lock()
            .expect("cache poisoned")
            .insert(Self::memo_key(op, key), bytes.to_vec());
        Ok(())
    }

    pub fn get<T: DeserializeOwned>(&self, op: &str, key: &str) -> Option<T> {
        serde_json::from_slice(&self.get_bytes(op, key)?).ok()
    }

    pub fn put<T: Serialize>(&self, op: &str, key: &str, value: &T) -> std::io::Result<()> {
        let bytes = serde_json::to_vec(value).map_err(std::io::Error::other)?;
        self.put_bytes(op, key, &bytes)
    }
}
