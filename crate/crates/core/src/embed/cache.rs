use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_batch, EmbedError, EmbeddingProvider};

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model: String,
    pub dim: usize,
    pub vec: Vec<f64>,
}

impl CacheRecord {
    fn is_valid(&self) -> bool {
        self.key.len() == 64
            && self.key.bytes().all(|b| b.is_ascii_hexdigit())
            && self.vec.len() == self.dim
            && self.vec.iter().all(|x| x.is_finite())
            && self.vec.iter().any(|&x| x != 0.0)
    }
}

/// Hex SHA-256 of the text bytes.
pub fn cache_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

struct Inner {
    records: HashMap<(String, String), Vec<f64>>,
    writer: BufWriter<File>,
}

/// Append-only JSON-lines store of embeddings keyed by content hash and model.
///
/// Lines that fail to parse or validate on open are moved to a sibling
/// `.quarantine` file and dropped, so the texts are fetched again.
pub struct EmbeddingCache {
    path: PathBuf,
    inner: Mutex<Inner>,
    quarantined: usize,
}

impl EmbeddingCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut records = HashMap::new();
        let mut good = Vec::new();
        let mut bad = Vec::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) if rec.is_valid() => {
                        good.push(line);
                        records.insert((rec.key, rec.model), rec.vec);
                    }
                    _ => bad.push(line),
                }
            }
        }
        if !bad.is_empty() {
            log::warn!("quarantining {} corrupt cache record(s) from {}", bad.len(), path.display());
            let mut q = OpenOptions::new()
                .create(true)
                .append(true)
                .open(quarantine_path(&path))?;
            for line in &bad {
                writeln!(q, "{line}")?;
            }
            let tmp = path.with_extension("tmp");
            {
                let mut w = BufWriter::new(File::create(&tmp)?);
                for line in &good {
                    writeln!(w, "{line}")?;
                }
                w.flush()?;
            }
            fs::rename(&tmp, &path)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            inner: Mutex::new(Inner {
                records,
                writer: BufWriter::new(file),
            }),
            quarantined: bad.len(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records moved aside when the cache was opened.
    pub fn quarantined(&self) -> usize {
        self.quarantined
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str, model: &str) -> Option<Vec<f64>> {
        let inner = self.inner.lock().expect("cache lock");
        inner.records.get(&(key.to_string(), model.to_string())).cloned()
    }

    pub fn put(&self, key: &str, model: &str, vec: &[f64]) -> Result<(), EmbedError> {
        let rec = CacheRecord {
            key: key.to_string(),
            model: model.to_string(),
            dim: vec.len(),
            vec: vec.to_vec(),
        };
        let line = serde_json::to_string(&rec).expect("record serializes");
        let mut inner = self.inner.lock().expect("cache lock");
        writeln!(inner.writer, "{line}")?;
        inner.writer.flush()?;
        inner.records.insert((rec.key, rec.model), rec.vec);
        Ok(())
    }
}

fn quarantine_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".quarantine");
    path.with_file_name(name)
}

/// Embeds `texts` through `cache`, fetching only unseen texts, each once,
/// in a single provider call. Output order matches input order.
pub fn embed_cached<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    cache: &EmbeddingCache,
    texts: &[String],
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let model = provider.model_id().to_string();
    let keys: Vec<String> = texts.iter().map(|t| cache_key(t)).collect();
    let mut found: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut misses: Vec<String> = Vec::new();
    let mut miss_keys: Vec<&str> = Vec::new();
    for (text, key) in texts.iter().zip(&keys) {
        if found.contains_key(key.as_str()) || miss_keys.contains(&key.as_str()) {
            continue;
        }
        match cache.get(key, &model) {
            Some(v) => {
                found.insert(key, v);
            }
            None => {
                misses.push(text.clone());
                miss_keys.push(key);
            }
        }
    }
    if !misses.is_empty() {
        let fetched = provider.embed(&misses).map_err(|e| match e {
            EmbedError::Provider { .. } => e,
            other => EmbedError::Provider {
                failed: misses.clone(),
                message: other.to_string(),
            },
        })?;
        check_batch(&misses, &fetched, provider.dim())?;
        for (key, v) in miss_keys.iter().zip(fetched) {
            cache.put(key, &model, &v)?;
            found.insert(key, v);
        }
    }
    Ok(keys.iter().map(|k| found[k.as_str()].clone()).collect())
}

/// A provider that consults an [`EmbeddingCache`] first.
pub struct CachedProvider<P> {
    provider: P,
    cache: EmbeddingCache,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(provider: P, cache: EmbeddingCache) -> Self {
        Self { provider, cache }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn model_id(&self) -> &str {
        self.provider.model_id()
    }

    fn dim(&self) -> usize {
        self.provider.dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        embed_cached(&self.provider, &self.cache, texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashEmbedder;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting {
        inner: HashEmbedder,
        calls: AtomicUsize,
        texts: AtomicUsize,
        fail: bool,
    }

    impl Counting {
        fn new(fail: bool) -> Self {
            Self {
                inner: HashEmbedder::new(16),
                calls: AtomicUsize::new(0),
                texts: AtomicUsize::new(0),
                fail,
            }
        }
    }

    impl EmbeddingProvider for Counting {
        fn model_id(&self) -> &str {
            self.inner.model_id()
        }
        fn dim(&self) -> usize {
            16
        }
        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.texts.fetch_add(texts.len(), Ordering::SeqCst);
            if self.fail {
                return Err(EmbedError::Count { expected: 0, got: 0 });
            }
            self.inner.embed(texts)
        }
    }

    fn s(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn duplicates_fetched_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::open(dir.path().join("c.jsonl")).unwrap();
        let p = Counting::new(false);
        let out = embed_cached(&p, &cache, &s(&["same", "same"])).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
        assert_eq!(p.texts.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn warm_cache_makes_no_calls_and_round_trips_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let texts = s(&["alpha beta", "gamma", "delta epsilon zeta"]);
        let first = {
            let cache = EmbeddingCache::open(&path).unwrap();
            embed_cached(&Counting::new(false), &cache, &texts).unwrap()
        };
        let lines = fs::read_to_string(&path).unwrap();
        assert_eq!(lines.lines().count(), 3);

        let cache = EmbeddingCache::open(&path).unwrap();
        let p = Counting::new(false);
        let mut rev = texts.clone();
        rev.reverse();
        let second = embed_cached(&p, &cache, &rev).unwrap();
        assert_eq!(p.calls.load(Ordering::SeqCst), 0);
        for (a, b) in first.iter().zip(second.iter().rev()) {
            let (a, b): (Vec<u64>, Vec<u64>) =
                (a.iter().map(|x| x.to_bits()).collect(), b.iter().map(|x| x.to_bits()).collect());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn record_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let cache = EmbeddingCache::open(&path).unwrap();
        embed_cached(&Counting::new(false), &cache, &s(&["x"])).unwrap();
        let line = fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(v["key"], cache_key("x"));
        assert_eq!(v["model"], "offline-hash-v1-d16");
        assert_eq!(v["dim"], 16);
        assert_eq!(v["vec"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn corrupt_lines_are_quarantined_and_refetched() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        {
            let cache = EmbeddingCache::open(&path).unwrap();
            embed_cached(&Counting::new(false), &cache, &s(&["keep", "break"])).unwrap();
        }
        let text = fs::read_to_string(&path).unwrap();
        let broken_key = cache_key("break");
        let mangled: String = text
            .lines()
            .map(|l| {
                if l.contains(&broken_key) {
                    l[..l.len() / 2].to_string()
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\nnot json at all\n";
        fs::write(&path, mangled).unwrap();

        let cache = EmbeddingCache::open(&path).unwrap();
        assert_eq!(cache.quarantined(), 2);
        assert_eq!(cache.len(), 1);
        let q = fs::read_to_string(dir.path().join("c.jsonl.quarantine")).unwrap();
        assert_eq!(q.lines().count(), 2);
        let p = Counting::new(false);
        embed_cached(&p, &cache, &s(&["keep", "break"])).unwrap();
        assert_eq!(p.texts.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn provider_failure_names_texts() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::open(dir.path().join("c.jsonl")).unwrap();
        let err = embed_cached(&Counting::new(true), &cache, &s(&["a", "b", "a"])).unwrap_err();
        match err {
            EmbedError::Provider { failed, .. } => assert_eq!(failed, s(&["a", "b"])),
            other => panic!("unexpected {other:?}"),
        }
        assert!(cache.is_empty());
    }
}
