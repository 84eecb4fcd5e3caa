//! Monte Carlo estimators of canonical correlations, with standard errors
//! and z-score reports against exact values.
//!
//! Folds over a batch run in fixed-size chunks that are merged in order, so
//! results are reproducible to the last bit.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::kernels::{CorrelationIndex, PartitionSpec};
use crate::samplers::PairBatch;
use crate::specfun::{laguerre_norm, laguerre_tilde_all, PolyIndex};

/// `|z|` bound for reports with at most [`WIDE_GATE_ENTRIES`] comparisons.
pub const Z_GATE: f64 = 5.0;
/// `|z|` bound for larger reports.
pub const Z_GATE_WIDE: f64 = 6.0;
pub const WIDE_GATE_ENTRIES: usize = 50;

const FOLD_CHUNK: usize = 16384;

/// Streaming mean and variance (Welford), mergeable across partial folds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance with divisor `n - 1`; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// `(estimate - exact) / std_error`; a zero standard error gives 0 on exact
/// agreement and an infinite score otherwise.
pub fn z_score(estimate: f64, exact: f64, std_error: f64) -> f64 {
    if std_error > 0.0 {
        (estimate - exact) / std_error
    } else if estimate == exact {
        0.0
    } else {
        (estimate - exact).signum() * f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub label: String,
    pub estimate: f64,
    pub exact: f64,
    pub std_error: f64,
    pub z_score: f64,
}

impl ReportEntry {
    pub fn new(label: impl Into<String>, estimate: f64, exact: f64, std_error: f64) -> Self {
        Self { label: label.into(), estimate, exact, std_error, z_score: z_score(estimate, exact, std_error) }
    }
}

/// Estimates set against exact values, gated on `|z|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub entries: Vec<ReportEntry>,
    pub sample_count: usize,
    pub seed: u64,
}

impl CorrelationReport {
    pub fn new(entries: Vec<ReportEntry>, sample_count: usize, seed: u64) -> Self {
        Self { entries, sample_count, seed }
    }

    /// The `|z|` bound that applies to this report.
    pub fn gate(&self) -> f64 {
        if self.entries.len() > WIDE_GATE_ENTRIES {
            Z_GATE_WIDE
        } else {
            Z_GATE
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        let gate = self.gate();
        self.entries.iter().filter(move |e| !(e.z_score.abs() <= gate))
    }

    pub fn passes(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z_score.abs()).fold(0.0, f64::max)
    }
}

fn check_batch(batch: &PairBatch, part: &PartitionSpec) -> Result<()> {
    if batch.is_empty() {
        return domain("cannot estimate from an empty batch");
    }
    if batch.dim() != part.dim() {
        return domain(format!("batch dimension {} differs from partition dimension {}", batch.dim(), part.dim()));
    }
    Ok(())
}

/// Folds `k` summands per row into `k` accumulators. `summands` receives a
/// row and writes into its output slice.
fn fold_rows<F>(batch: &PairBatch, k: usize, summands: F) -> Vec<MeanAccumulator>
where
    F: Fn(&[f64], &[f64], &mut Vec<f64>, &mut [f64]) + Sync,
{
    let rows = batch.len();
    let chunks = rows.div_ceil(FOLD_CHUNK);
    let partial: Vec<Vec<MeanAccumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![MeanAccumulator::default(); k];
            let mut scratch = Vec::new();
            let mut out = vec![0.0; k];
            for row in c * FOLD_CHUNK..rows.min((c + 1) * FOLD_CHUNK) {
                summands(batch.x(row), batch.y(row), &mut scratch, &mut out);
                for (a, &v) in acc.iter_mut().zip(&out) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![MeanAccumulator::default(); k];
    for p in &partial {
        for (t, a) in total.iter_mut().zip(p) {
            t.merge(a);
        }
    }
    total
}

/// Per-row normalized Laguerre values `~L_k(v_i) / sqrt(c_k)` for every cell
/// `i` and `k <= max_degree`, laid out as `[cell][k]`.
struct NormalizedLaguerre {
    max_degree: usize,
    alphas: Vec<f64>,
    inv_sqrt_norm: Vec<Vec<f64>>,
}

impl NormalizedLaguerre {
    fn new(part: &PartitionSpec, max_degree: usize) -> Result<Self> {
        let inv_sqrt_norm = part
            .alphas()
            .iter()
            .map(|&a| {
                (0..=max_degree)
                    .map(|k| Ok(1.0 / laguerre_norm(PolyIndex::new(k, a)?)?.sqrt()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { max_degree, alphas: part.alphas().to_vec(), inv_sqrt_norm })
    }

    fn eval(&self, v: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        out.clear();
        let width = self.max_degree + 1;
        out.reserve(v.len() * width);
        for (cell, &vi) in v.iter().enumerate() {
            laguerre_tilde_all(self.alphas[cell], self.max_degree, vi, scratch);
            out.extend(scratch.iter().zip(&self.inv_sqrt_norm[cell]).map(|(p, s)| p * s));
        }
    }
}

/// Estimates `rho_n` for several indices from one pass over the batch.
///
/// The summand for index `n` is `prod_i ~L_{n_i}(X_i) ~L_{n_i}(Y_i) / c_{n_i}`.
pub fn estimate_many(batch: &PairBatch, part: &PartitionSpec, indices: &[CorrelationIndex]) -> Result<Vec<(f64, f64)>> {
    check_batch(batch, part)?;
    if let Some(n) = indices.iter().find(|n| n.dim() != part.dim()) {
        return domain(format!("index {n} does not match partition dimension {}", part.dim()));
    }
    let max_degree = indices.iter().flat_map(|n| n.as_slice().iter().copied()).max().unwrap_or(0);
    let lag = NormalizedLaguerre::new(part, max_degree)?;
    let width = max_degree + 1;
    let acc = fold_rows(batch, indices.len(), |x, y, scratch, out| {
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        lag.eval(x, scratch, &mut lx);
        lag.eval(y, scratch, &mut ly);
        for (o, n) in out.iter_mut().zip(indices) {
            *o =
                n.as_slice().iter().enumerate().map(|(cell, &k)| lx[cell * width + k] * ly[cell * width + k]).product();
        }
    });
    Ok(acc.iter().map(|a| (a.mean(), a.std_error())).collect())
}

/// Sample-mean estimate of `rho_n` and its standard error.
pub fn estimate_canonical_corr(batch: &PairBatch, part: &PartitionSpec, n: &CorrelationIndex) -> Result<(f64, f64)> {
    Ok(estimate_many(batch, part, std::slice::from_ref(n))?[0])
}

/// Reports `E[~L_n(X_i) ~L_m(Y_i)] / sqrt(c_n c_m)` for every cell `i` and
/// every `n != m` up to `max_degree`, against the exact value 0.
///
/// If `diagonal` is given, entries `n = m >= 1` are added with exact value
/// `diagonal(i, n)`.
pub fn orthogonality_scan(
    batch: &PairBatch,
    part: &PartitionSpec,
    max_degree: usize,
    diagonal: Option<&(dyn Fn(usize, usize) -> f64 + Sync)>,
) -> Result<CorrelationReport> {
    check_batch(batch, part)?;
    if max_degree == 0 || max_degree > 6 {
        return domain(format!("orthogonality scan degree must lie in 1..=6, got {max_degree}"));
    }
    let lag = NormalizedLaguerre::new(part, max_degree)?;
    let width = max_degree + 1;
    let mut cells = Vec::new();
    for cell in 0..part.dim() {
        for n in 0..=max_degree {
            for m in 0..=max_degree {
                if n != m || (n >= 1 && diagonal.is_some()) {
                    cells.push((cell, n, m));
                }
            }
        }
    }
    let acc = fold_rows(batch, cells.len(), |x, y, scratch, out| {
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        lag.eval(x, scratch, &mut lx);
        lag.eval(y, scratch, &mut ly);
        for (o, &(cell, n, m)) in out.iter_mut().zip(&cells) {
            *o = lx[cell * width + n] * ly[cell * width + m];
        }
    });
    let entries = cells
        .iter()
        .zip(&acc)
        .map(|(&(cell, n, m), a)| {
            let exact = match diagonal {
                Some(f) if n == m => f(cell, n),
                _ => 0.0,
            };
            ReportEntry::new(format!("cell{cell}:L{n}xL{m}"), a.mean(), exact, a.std_error())
        })
        .collect();
    Ok(CorrelationReport::new(entries, batch.len(), batch.seed()))
}

/// Sample moments `mean(s^k)` for `k = 1..=n_max` against
/// `exact_moments[k - 1]`.
pub fn moment_match_report(samples: &[f64], exact_moments: &[f64], n_max: usize) -> Result<CorrelationReport> {
    if samples.is_empty() {
        return domain("cannot match moments of an empty sample");
    }
    if n_max == 0 || n_max > exact_moments.len() {
        return domain(format!("moment order {n_max} outside 1..={}", exact_moments.len()));
    }
    let mut acc = vec![MeanAccumulator::default(); n_max];
    for &s in samples {
        let mut p = 1.0;
        for a in acc.iter_mut() {
            p *= s;
            a.push(p);
        }
    }
    let entries = acc
        .iter()
        .zip(exact_moments)
        .enumerate()
        .map(|(k, (a, &exact))| ReportEntry::new(format!("m{}", k + 1), a.mean(), exact, a.std_error()))
        .collect();
    Ok(CorrelationReport::new(entries, samples.len(), 0))
}

/// The gap `rho_{e_i + e_j} - rho_{e_i} rho_{e_j}` between the joint first
/// correlation of two cells and the product of the marginal ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationGap {
    pub joint: f64,
    pub product: f64,
    pub gap: f64,
    /// Delta-method standard error of `gap`.
    pub std_error: f64,
}

impl FactorizationGap {
    pub fn z_score(&self) -> f64 {
        z_score(self.gap, 0.0, self.std_error)
    }
}

/// Estimates the factorization gap of cells `i` and `j`. It vanishes for
/// pairs with independent joint increments.
pub fn factorization_gap(batch: &PairBatch, part: &PartitionSpec, i: usize, j: usize) -> Result<FactorizationGap> {
    check_batch(batch, part)?;
    if i == j || i >= part.dim() || j >= part.dim() {
        return domain(format!("factorization gap needs two distinct cells, got ({i}, {j})"));
    }
    let lag = NormalizedLaguerre::new(part, 1)?;
    let terms = |x: &[f64], y: &[f64]| {
        let fi = (x[i] - lag.alphas[i]) * (y[i] - lag.alphas[i]) * lag.inv_sqrt_norm[i][1].powi(2);
        let fj = (x[j] - lag.alphas[j]) * (y[j] - lag.alphas[j]) * lag.inv_sqrt_norm[j][1].powi(2);
        (fi * fj, fi, fj)
    };
    let means = fold_rows(batch, 3, |x, y, _, out| {
        let (a, b, c) = terms(x, y);
        out.copy_from_slice(&[a, b, c]);
    });
    let (ma, mb, mc) = (means[0].mean(), means[1].mean(), means[2].mean());
    // Influence function of mean(a) - mean(b) mean(c).
    let influence = fold_rows(batch, 1, |x, y, _, out| {
        let (a, b, c) = terms(x, y);
        out[0] = a - mc * b - mb * c;
    });
    let product = mb * mc;
    Ok(FactorizationGap { joint: ma, product, gap: ma - product, std_error: influence[0].std_error() })
}
