use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::RetrievalError;
use crate::endpoint::{HttpClient, HttpSettings, MOCK_SCHEME};
use crate::exercise::SampleId;

pub const DEFAULT_DIMENSION: usize = 384;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    /// Sample the vector was computed from; `None` for ad-hoc queries.
    pub source_id: Option<SampleId>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, RetrievalError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFinite);
        }
        Ok(EmbeddingVector {
            values,
            source_id: None,
        })
    }

    pub fn with_source(mut self, id: SampleId) -> Self {
        self.source_id = Some(id);
        self
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `dot(a, b) / (|a| |b|)`, clamped to [-1, 1] against rounding.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    cosine_values(&a.values, &b.values)
}

pub(crate) fn cosine_values(a: &[f64], b: &[f64]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroNorm);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Text to vectors. Identical text must give identical vectors.
pub trait Embedder: Send + Sync {
    /// Recorded in store sidecars so mismatched stores are detectable.
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError>;
}

/// Offline, non-semantic fallback: signed feature hashing of character
/// trigrams into `dimension` buckets, L2-normalized. Texts that share
/// substrings land close together, which is enough for self-retrieval and
/// deterministic tests but says nothing about meaning.
#[derive(Clone, Debug)]
pub struct HashingEmbedder {
    dimension: usize,
    seed: u64,
    name: String,
}

impl HashingEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashingEmbedder {
            dimension,
            seed,
            name: format!("hashing-trigram-{dimension}-{seed} (non-semantic)"),
        }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let chars: Vec<char> = format!("\u{2}{collapsed}\u{3}").chars().collect();
        let mut v = vec![0.0; self.dimension];
        let mut buf = String::new();
        for gram in chars.windows(3.min(chars.len())) {
            buf.clear();
            buf.extend(gram);
            let h = xxh3_64_with_seed(buf.as_bytes(), self.seed);
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dimension as u64) as usize] += sign;
        }
        let n = norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        v
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_DIMENSION, 0)
    }
}

impl Embedder for HashingEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        texts.iter().map(|t| EmbeddingVector::new(self.embed_one(t))).collect()
    }
}

/// OpenAI-style embeddings endpoint: `POST {base}/embeddings` with
/// `{"model", "input": [texts]}`, answered by `{"data": [{"index",
/// "embedding"}]}`.
pub struct HttpEmbedder {
    client: HttpClient,
    model: String,
    dimension: usize,
    batch_size: usize,
}

impl HttpEmbedder {
    pub fn new(settings: HttpSettings, model: impl Into<String>, dimension: usize, batch_size: usize) -> Self {
        HttpEmbedder {
            client: HttpClient::new(settings),
            model: model.into(),
            dimension,
            batch_size: batch_size.max(1),
        }
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        let resp = self
            .client
            .post_json("embeddings", &json!({ "model": self.model, "input": texts }))?;
        let data = resp
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| RetrievalError::Response("missing `data` array".into()))?;
        if data.len() != texts.len() {
            return Err(RetrievalError::Response(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        let mut out: Vec<Option<EmbeddingVector>> = vec![None; texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let idx = item
                .get("index")
                .and_then(Value::as_u64)
                .map_or(pos, |i| i as usize);
            let values: Vec<f64> = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| RetrievalError::Response("missing `embedding`".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or(RetrievalError::NonFinite))
                .collect::<Result<_, _>>()?;
            if values.len() != self.dimension {
                return Err(RetrievalError::DimensionMismatch {
                    expected: self.dimension,
                    found: values.len(),
                });
            }
            let slot = out
                .get_mut(idx)
                .ok_or_else(|| RetrievalError::Response(format!("index {idx} out of range")))?;
            *slot = Some(EmbeddingVector::new(values)?);
        }
        out.into_iter()
            .map(|v| v.ok_or_else(|| RetrievalError::Response("duplicate embedding index".into())))
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn name(&self) -> &str {
        &self.model
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    /// HTTP base URL; `hashing` (or any `mock:` URL) selects the offline
    /// [`HashingEmbedder`].
    pub base_url: String,
    pub model: String,
    pub dimension: usize,
    pub batch_size: usize,
    pub request_timeout_secs: f64,
    /// Seed of the hashing embedder.
    pub seed: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            base_url: "hashing".into(),
            model: "sentence-transformers/all-MiniLM-L6-v2".into(),
            dimension: DEFAULT_DIMENSION,
            batch_size: 64,
            request_timeout_secs: 60.0,
            seed: 0,
            api_key: None,
        }
    }
}

impl EmbeddingConfig {
    pub fn is_offline(&self) -> bool {
        self.base_url == "hashing" || self.base_url.starts_with(MOCK_SCHEME)
    }

    pub fn connect(&self) -> Box<dyn Embedder> {
        if self.is_offline() {
            return Box::new(HashingEmbedder::new(self.dimension, self.seed));
        }
        let mut settings = HttpSettings::new(&self.base_url);
        settings.api_key = self.api_key.clone();
        settings.request_timeout = std::time::Duration::from_secs_f64(self.request_timeout_secs);
        Box::new(HttpEmbedder::new(settings, &self.model, self.dimension, self.batch_size))
    }
}
