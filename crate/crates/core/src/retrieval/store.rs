use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::embed::{cosine_values, norm, Embedder, EmbeddingVector};
use super::RetrievalError;
use crate::exercise::{ExerciseSample, SampleId};
use crate::io::{self, IoError};

pub const STORE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub k: usize,
    /// Minimum cosine similarity. Values above 1 make every query empty.
    pub threshold: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { k: 3, threshold: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: SampleId,
    pub score: f64,
}

/// Exact cosine index: every query scans every vector.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorStore {
    dimension: usize,
    embedder: String,
    ids: Vec<SampleId>,
    vectors: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    schema_version: u32,
    dimension: usize,
    embedder: String,
    ids: Vec<SampleId>,
}

impl VectorStore {
    pub fn new(dimension: usize, embedder: impl Into<String>) -> Self {
        VectorStore {
            dimension,
            embedder: embedder.into(),
            ids: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Embeds each sample's problem statement.
    pub fn build(embedder: &dyn Embedder, samples: &[&ExerciseSample]) -> Result<Self, RetrievalError> {
        let texts: Vec<&str> = samples.iter().map(|s| s.problem_statement.as_str()).collect();
        let vectors = embedder.embed(&texts)?;
        let mut store = VectorStore::new(embedder.dimension(), embedder.name());
        for (s, v) in samples.iter().zip(vectors) {
            store.insert(v.with_source(s.id.clone()))?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, vector: EmbeddingVector) -> Result<(), RetrievalError> {
        let id = vector.source_id.clone().ok_or(RetrievalError::MissingSourceId)?;
        if vector.dimension() != self.dimension {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dimension,
                found: vector.dimension(),
            });
        }
        if vector.norm() == 0.0 {
            return Err(RetrievalError::ZeroNorm);
        }
        self.ids.push(id);
        self.vectors.push(vector.values);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn embedder(&self) -> &str {
        &self.embedder
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    /// At most `cfg.k` hits with score >= threshold, best first; equal scores
    /// are ordered by id.
    pub fn query_top_k(&self, query: &EmbeddingVector, cfg: &RetrievalConfig) -> Result<Vec<Hit>, RetrievalError> {
        if query.dimension() != self.dimension {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dimension,
                found: query.dimension(),
            });
        }
        if norm(&query.values) == 0.0 {
            return Err(RetrievalError::ZeroNorm);
        }
        if cfg.k == 0 {
            return Ok(Vec::new());
        }
        let mut hits = Vec::new();
        for (id, v) in self.ids.iter().zip(&self.vectors) {
            let score = cosine_values(&query.values, v)?;
            if score >= cfg.threshold {
                hits.push(Hit { id: id.clone(), score });
            }
        }
        hits.sort_by(rank);
        hits.truncate(cfg.k);
        Ok(hits)
    }

    /// Writes `<path>.bin` (little-endian f32, row-major) and `<path>.json`
    /// (ids, dimension, embedder name).
    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let (bin, json) = store_paths(path);
        let mut bytes = Vec::with_capacity(self.len() * self.dimension * 4);
        for v in &self.vectors {
            for x in v {
                bytes.extend_from_slice(&(*x as f32).to_le_bytes());
            }
        }
        io::write_atomic(&bin, &bytes)?;
        io::write_json(
            &json,
            &Sidecar {
                schema_version: STORE_SCHEMA_VERSION,
                dimension: self.dimension,
                embedder: self.embedder.clone(),
                ids: self.ids.clone(),
            },
        )?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let (bin, json) = store_paths(path);
        let sidecar: Sidecar = io::read_json(&json)?;
        if sidecar.schema_version != STORE_SCHEMA_VERSION {
            return Err(RetrievalError::Store(format!(
                "unsupported store schema_version {}",
                sidecar.schema_version
            )));
        }
        let bytes = fs::read(&bin).map_err(|source| IoError::Io { path: bin.clone(), source })?;
        let expected = sidecar.ids.len() * sidecar.dimension * 4;
        if bytes.len() != expected {
            return Err(RetrievalError::Store(format!(
                "{}: expected {expected} bytes for {} vectors of dimension {}, found {}",
                bin.display(),
                sidecar.ids.len(),
                sidecar.dimension,
                bytes.len()
            )));
        }
        let floats: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let vectors = if sidecar.dimension == 0 {
            vec![Vec::new(); sidecar.ids.len()]
        } else {
            floats.chunks(sidecar.dimension).map(<[f64]>::to_vec).collect()
        };
        Ok(VectorStore {
            dimension: sidecar.dimension,
            embedder: sidecar.embedder,
            ids: sidecar.ids,
            vectors,
        })
    }
}

fn rank(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

pub fn store_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("bin"), path.with_extension("json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str, x: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(x.to_vec()).unwrap().with_source(SampleId::new(id))
    }

    fn store() -> VectorStore {
        let mut s = VectorStore::new(2, "test");
        s.insert(ev("a", &[1.0, 0.0])).unwrap();
        s.insert(ev("b", &[0.0, 1.0])).unwrap();
        s.insert(ev("c", &[1.0, 1.0])).unwrap();
        s.insert(ev("d", &[2.0, 0.0])).unwrap();
        s
    }

    #[test]
    fn self_query() {
        let mut s = VectorStore::new(3, "t");
        s.insert(ev("v", &[0.3, -1.0, 2.0])).unwrap();
        let hits = s
            .query_top_k(&ev("q", &[0.3, -1.0, 2.0]), &RetrievalConfig { k: 1, threshold: 0.5 })
            .unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].id.as_str(), "v");
        assert!((hits[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_id_and_threshold_filters() {
        let hits = store()
            .query_top_k(&ev("q", &[1.0, 0.0]), &RetrievalConfig { k: 10, threshold: 0.5 })
            .unwrap();
        let ids: Vec<&str> = hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, ["a", "d", "c"]);
        assert!(store()
            .query_top_k(&ev("q", &[1.0, 0.0]), &RetrievalConfig { k: 10, threshold: 1.1 })
            .unwrap()
            .is_empty());
        assert!(store()
            .query_top_k(&ev("q", &[1.0, 0.0]), &RetrievalConfig { k: 0, threshold: -1.0 })
            .unwrap()
            .is_empty());
    }

    #[test]
    fn rejects_bad_vectors() {
        let mut s = store();
        assert!(matches!(s.insert(ev("z", &[0.0, 0.0])), Err(RetrievalError::ZeroNorm)));
        assert!(matches!(
            s.insert(ev("z", &[1.0])),
            Err(RetrievalError::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(
            s.insert(EmbeddingVector::new(vec![1.0, 1.0]).unwrap()),
            Err(RetrievalError::MissingSourceId)
        ));
        assert!(s.query_top_k(&ev("q", &[1.0, 0.0, 0.0]), &RetrievalConfig::default()).is_err());
    }

    #[test]
    fn save_load_round_trip_in_f32() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("store");
        let mut s = VectorStore::new(3, "t");
        s.insert(ev("x", &[0.1, 0.2, 0.3])).unwrap();
        s.insert(ev("y", &[1.0, -2.0, 4.5])).unwrap();
        s.save(&p).unwrap();
        assert_eq!(fs::read(dir.path().join("store.bin")).unwrap().len(), 2 * 3 * 4);
        let back = VectorStore::load(&p).unwrap();
        assert_eq!(back.ids(), s.ids());
        assert_eq!(back.dimension(), 3);
        for (a, b) in back.vectors.iter().zip(&s.vectors) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
        fs::write(dir.path().join("store.bin"), [0u8; 5]).unwrap();
        assert!(matches!(VectorStore::load(&p), Err(RetrievalError::Store(_))));
    }
}
