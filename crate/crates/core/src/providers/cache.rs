use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use super::EmbeddingProvider;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 7] = b"RAGEMB1";
pub const CACHE_VERSION: u8 = 1;

pub type CacheKey = [u8; 32];

/// SHA-256 over `model_id`, a NUL separator, and the text.
pub fn cache_key(model_id: &str, text: &str) -> CacheKey {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    h.finalize().into()
}

/// Raw (unnormalized) provider vectors keyed by model and content.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    entries: RwLock<HashMap<CacheKey, Vec<f32>>>,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model_id: &str, text: &str) -> Option<Vec<f32>> {
        self.get_key(&cache_key(model_id, text))
    }

    pub fn get_key(&self, key: &CacheKey) -> Option<Vec<f32>> {
        self.entries.read().expect("cache poisoned").get(key).cloned()
    }

    pub fn insert(&self, model_id: &str, text: &str, vector: Vec<f32>) {
        self.entries.write().expect("cache poisoned").insert(cache_key(model_id, text), vector);
    }

    /// Writes all entries sorted by key, so equal caches produce equal files.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let entries = self.entries.read().expect("cache poisoned");
        let mut keys: Vec<&CacheKey> = entries.keys().collect();
        keys.sort();
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&[CACHE_VERSION])?;
        for key in keys {
            let v = &entries[key];
            out.write_all(key)?;
            out.write_all(&(v.len() as u32).to_le_bytes())?;
            for x in v {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 8];
        input.read_exact(&mut header).map_err(|_| Error::CacheFormat("truncated header".into()))?;
        if &header[..7] != CACHE_MAGIC {
            return Err(Error::CacheFormat("bad magic".into()));
        }
        if header[7] != CACHE_VERSION {
            return Err(Error::CacheFormat(format!("unsupported version {}", header[7])));
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        let mut entries = HashMap::new();
        let mut pos = 0usize;
        while pos < rest.len() {
            if rest.len() - pos < 36 {
                return Err(Error::CacheFormat(format!("truncated record at byte {}", pos + 8)));
            }
            let key: CacheKey = rest[pos..pos + 32].try_into().expect("32 bytes");
            let dim = u32::from_le_bytes(rest[pos + 32..pos + 36].try_into().expect("4 bytes")) as usize;
            pos += 36;
            let need = dim * 4;
            if rest.len() - pos < need {
                return Err(Error::CacheFormat(format!("truncated vector at byte {}", pos + 8)));
            }
            let v = rest[pos..pos + need]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            pos += need;
            entries.insert(key, v);
        }
        Ok(Self { entries: RwLock::new(entries) })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    /// Loads `path`, or returns an empty cache if it does not exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        match File::open(path) {
            Ok(f) => Self::read_from(BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e.into()),
        }
    }
}

/// Embeds `texts` through `cache`, calling the provider once for all misses.
pub fn cached_embed(
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    texts: &[String],
) -> Result<Vec<Vec<f32>>> {
    let model = provider.model_id();
    let dim = provider.dimension();
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(Error::InvalidParam(format!("text {i} is empty")));
    }
    let keys: Vec<CacheKey> = texts.iter().map(|t| cache_key(model, t)).collect();
    let mut out: Vec<Option<Vec<f32>>> = keys.iter().map(|k| cache.get_key(k)).collect();

    let mut miss_texts = Vec::new();
    let mut miss_keys: Vec<CacheKey> = Vec::new();
    for (i, slot) in out.iter().enumerate() {
        if slot.is_none() && !miss_keys.contains(&keys[i]) {
            miss_keys.push(keys[i]);
            miss_texts.push(texts[i].clone());
        }
    }
    if !miss_texts.is_empty() {
        let fresh = provider.embed(&miss_texts)?;
        if fresh.len() != miss_texts.len() {
            return Err(Error::Provider(format!(
                "provider returned {} vectors for {} texts",
                fresh.len(),
                miss_texts.len()
            )));
        }
        for v in &fresh {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
            }
        }
        let mut guard = cache.entries.write().expect("cache poisoned");
        for (k, v) in miss_keys.iter().zip(fresh) {
            guard.insert(*k, v);
        }
        drop(guard);
        for (i, slot) in out.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = cache.get_key(&keys[i]);
            }
        }
    }
    Ok(out.into_iter().map(|v| v.expect("filled above")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{hash_embedder, CallKind, CallLedger, Metered};

    struct WrongDim;
    impl EmbeddingProvider for WrongDim {
        fn model_id(&self) -> &str {
            "bad"
        }
        fn dimension(&self) -> usize {
            4
        }
        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
            Ok(texts.iter().map(|_| vec![1.0; 3]).collect())
        }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn second_pass_is_all_hits() {
        let ledger = CallLedger::new();
        let p = Metered::new(hash_embedder("m", 16), ledger.clone());
        let cache = EmbeddingCache::new();
        let texts = strings(&["a", "b", "c"]);
        let first = cached_embed(&p, &cache, &texts).unwrap();
        assert_eq!(first.len(), 3);
        assert!(first.iter().all(|v| v.len() == 16));
        assert_eq!(ledger.count(CallKind::Embed), 1);
        let second = cached_embed(&p, &cache, &texts).unwrap();
        assert_eq!(ledger.count(CallKind::Embed), 1);
        assert_eq!(first, second);
    }

    #[test]
    fn duplicate_misses_embedded_once() {
        let ledger = CallLedger::new();
        let p = Metered::new(hash_embedder("m", 8), ledger.clone());
        let cache = EmbeddingCache::new();
        let out = cached_embed(&p, &cache, &strings(&["x", "y", "x"])).unwrap();
        assert_eq!(out[0], out[2]);
        assert_eq!(ledger.summary()["embed:m"].items, 2);
    }

    #[test]
    fn wrong_dimension_is_an_error() {
        let cache = EmbeddingCache::new();
        let err = cached_embed(&WrongDim, &cache, &strings(&["a"])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 4, actual: 3 }));
        assert!(cache.is_empty());
    }

    #[test]
    fn keys_depend_on_model() {
        assert_ne!(cache_key("a", "text"), cache_key("b", "text"));
        assert_ne!(cache_key("ab", "c"), cache_key("a", "bc"));
    }

    #[test]
    fn file_layout() {
        let cache = EmbeddingCache::new();
        cache.insert("m", "t", vec![1.0, -2.5]);
        let mut buf = Vec::new();
        cache.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..7], b"RAGEMB1");
        assert_eq!(buf[7], CACHE_VERSION);
        assert_eq!(&buf[8..40], &cache_key("m", "t"));
        assert_eq!(&buf[40..44], &2u32.to_le_bytes());
        assert_eq!(&buf[44..48], &1.0f32.to_le_bytes());
        assert_eq!(&buf[48..52], &(-2.5f32).to_le_bytes());
        assert_eq!(buf.len(), 52);

        assert!(EmbeddingCache::read_from(&buf[..50]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(EmbeddingCache::read_from(bad.as_slice()).is_err());
    }
}
