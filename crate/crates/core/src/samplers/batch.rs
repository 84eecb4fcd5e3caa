use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};

/// Generator behind every derived stream.
pub type StreamRng = ChaCha8Rng;

/// Draws per derived stream in batch generation.
pub const CHUNK: usize = 8192;

/// Stream `index` of the ChaCha8 generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` draws of `f`, produced in chunks of [`CHUNK`] on streams
/// `1, 2, ...` of `seed` and returned in draw order. The result does not
/// depend on the number of worker threads.
pub fn par_generate<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = stream(seed, c as u64 + 1);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// `N` pairs of `d`-vectors stored row-major, with the seed and a text
/// description of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    x: Vec<f64>,
    y: Vec<f64>,
    dim: usize,
    seed: u64,
    meta: String,
}

impl PairBatch {
    pub fn from_parts(x: Vec<f64>, y: Vec<f64>, dim: usize, seed: u64, meta: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return domain("batch dimension must be positive");
        }
        if x.len() != y.len() || !x.len().is_multiple_of(dim) {
            return domain(format!("batch buffers of lengths ({}, {}) do not fit dimension {dim}", x.len(), y.len()));
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !(**v >= 0.0)) {
            return domain(format!("batch entries must be nonnegative, got {v}"));
        }
        Ok(Self { x, y, dim, seed, meta: meta.into() })
    }

    /// `n` pairs from `f`, in parallel over derived streams of `seed`.
    pub fn generate<F>(n: usize, dim: usize, seed: u64, meta: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>)> + Sync,
    {
        let pairs = par_generate(n, seed, f)?;
        let mut x = Vec::with_capacity(n * dim);
        let mut y = Vec::with_capacity(n * dim);
        for (a, b) in pairs {
            if a.len() != dim || b.len() != dim {
                return domain(format!(
                    "generator returned vectors of lengths ({}, {}), expected {dim}",
                    a.len(),
                    b.len()
                ));
            }
            x.extend(a);
            y.extend(b);
        }
        Self::from_parts(x, y, dim, seed, meta)
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn x(&self, row: usize) -> &[f64] {
        &self.x[row * self.dim..(row + 1) * self.dim]
    }

    pub fn y(&self, row: usize) -> &[f64] {
        &self.y[row * self.dim..(row + 1) * self.dim]
    }

    /// The batch with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        Self { x: self.y.clone(), y: self.x.clone(), dim: self.dim, seed: self.seed, meta: self.meta.clone() }
    }

    /// Pairs `x` of this batch with `y` of `other`.
    pub fn cross(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.len() != other.len() {
            return domain("cross-paired batches must share shape");
        }
        Ok(Self {
            x: self.x.clone(),
            y: other.y.clone(),
            dim: self.dim,
            seed: self.seed,
            meta: format!("{} x {}", self.meta, other.meta),
        })
    }

    /// Projection onto the cells `(i, j, ...)` listed in `cells`.
    pub fn select(&self, cells: &[usize]) -> Result<Self> {
        if cells.is_empty() || cells.iter().any(|&c| c >= self.dim) {
            return domain("selected cells out of range");
        }
        let pick = |buf: &[f64]| -> Vec<f64> {
            buf.chunks(self.dim).flat_map(|row| cells.iter().map(move |&c| row[c])).collect()
        };
        Ok(Self { x: pick(&self.x), y: pick(&self.y), dim: cells.len(), seed: self.seed, meta: self.meta.clone() })
    }
}
