//! Flat binary corpus file. Little-endian throughout:
//!
//! ```text
//! magic    8 bytes  "CFEMB\0\0\x01"
//! dim      u32
//! count    u64
//! count records of:
//!   paper_id  64 bytes, UTF-8, zero padded
//!   kind      u8 (0 title only, 1 title and abstract)
//!   values    dim x f32
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{norm, BaselineError};

pub const STORE_MAGIC: [u8; 8] = *b"CFEMB\0\0\x01";
pub const ID_WIDTH: usize = 64;
const HEADER_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    TitleOnly,
    TitleAndAbstract,
}

impl RepresentationKind {
    fn byte(self) -> u8 {
        match self {
            RepresentationKind::TitleOnly => 0,
            RepresentationKind::TitleAndAbstract => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(RepresentationKind::TitleOnly),
            1 => Some(RepresentationKind::TitleAndAbstract),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub paper_id: String,
    pub kind: RepresentationKind,
    pub values: Vec<f32>,
    pub(crate) norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStore {
    dim: usize,
    entries: Vec<StoreEntry>,
    index: HashMap<String, usize>,
}

impl CorpusStore {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new(), index: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn get(&self, paper_id: &str) -> Option<&StoreEntry> {
        self.index.get(paper_id).map(|&i| &self.entries[i])
    }

    pub fn insert(&mut self, paper_id: &str, kind: RepresentationKind, values: Vec<f32>) -> Result<(), BaselineError> {
        if paper_id.is_empty() || paper_id.len() > ID_WIDTH || paper_id.contains('\0') {
            return Err(BaselineError::BadId(paper_id.to_string()));
        }
        if values.len() != self.dim {
            return Err(BaselineError::DimensionMismatch { left: values.len(), right: self.dim });
        }
        if self.index.contains_key(paper_id) {
            return Err(BaselineError::DuplicateId(paper_id.to_string()));
        }
        let norm = norm(&values);
        if norm == 0.0 || !norm.is_finite() {
            return Err(BaselineError::ZeroVector(paper_id.to_string()));
        }
        self.index.insert(paper_id.to_string(), self.entries.len());
        self.entries.push(StoreEntry { paper_id: paper_id.to_string(), kind, values, norm });
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let record = ID_WIDTH + 1 + 4 * self.dim;
        let mut out = Vec::with_capacity(HEADER_LEN + record * self.entries.len());
        out.extend_from_slice(&STORE_MAGIC);
        out.write_u32::<LittleEndian>(self.dim as u32).expect("vec write");
        out.write_u64::<LittleEndian>(self.entries.len() as u64).expect("vec write");
        for e in &self.entries {
            let mut id = [0u8; ID_WIDTH];
            id[..e.paper_id.len()].copy_from_slice(e.paper_id.as_bytes());
            out.extend_from_slice(&id);
            out.push(e.kind.byte());
            for v in &e.values {
                out.write_f32::<LittleEndian>(*v).expect("vec write");
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BaselineError> {
        let corrupt = |m: &str| BaselineError::CorruptStore(m.to_string());
        if bytes.len() < HEADER_LEN || bytes[..8] != STORE_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut cur = Cursor::new(&bytes[8..]);
        let dim = cur.read_u32::<LittleEndian>().map_err(|_| corrupt("short header"))? as usize;
        let count = cur.read_u64::<LittleEndian>().map_err(|_| corrupt("short header"))?;
        let record = ID_WIDTH + 1 + 4 * dim;
        let expected = (count as u128) * (record as u128) + HEADER_LEN as u128;
        if dim == 0 || expected != bytes.len() as u128 {
            return Err(corrupt("length does not match header"));
        }
        let mut store = CorpusStore::new(dim);
        for _ in 0..count {
            let mut id = [0u8; ID_WIDTH];
            cur.read_exact(&mut id).map_err(|_| corrupt("truncated record"))?;
            let end = id.iter().position(|b| *b == 0).unwrap_or(ID_WIDTH);
            let paper_id = std::str::from_utf8(&id[..end]).map_err(|_| corrupt("id is not UTF-8"))?;
            let kind = RepresentationKind::from_byte(cur.read_u8().map_err(|_| corrupt("truncated record"))?)
                .ok_or_else(|| corrupt("unknown representation kind"))?;
            let mut values = vec![0f32; dim];
            cur.read_f32_into::<LittleEndian>(&mut values).map_err(|_| corrupt("truncated record"))?;
            store.insert(paper_id, kind, values)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        let io = |source| BaselineError::Io { path: path.display().to_string(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::File::create(path).and_then(|mut f| f.write_all(&self.to_bytes())).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let bytes = fs::read(path).map_err(|source| BaselineError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }
}
