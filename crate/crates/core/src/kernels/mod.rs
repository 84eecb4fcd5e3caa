//! Directing kernels of canonically correlated gamma CRM pairs observed on a
//! finite partition, and the exact quantities they determine.
//!
//! A pair observed on cells `A_1, ..., A_d` with `alpha_i = c P_0(A_i)` has
//! canonical correlations `rho_n = E[prod_i Z_i^{n_i}]`, where `Z_i` is the
//! mean of cell `i` under the (possibly random) kernel.

mod bell;
mod extreme;

pub use bell::{bell_form_comparison, BellComparison};
pub use extreme::{
    conditional_laplace_extreme, extreme_density_quadrature, extreme_pair_density, extreme_pair_ln_density,
    DensityQuadrature,
};

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::dirichlet::{moment_table, BaseDistribution};
use crate::error::{domain, Result};
use crate::specfun::{binomial, ln_pochhammer_unchecked};

/// Largest truncation degree accepted by [`joint_laplace_ratio`].
pub const MAX_LAPLACE_TRUNCATION: usize = 200;

/// Gamma parameters `alpha_i = c P_0(A_i)` of the observed cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    alphas: Vec<f64>,
    total_mass: f64,
}

impl PartitionSpec {
    pub fn new(alphas: Vec<f64>, total_mass: f64) -> Result<Self> {
        if alphas.is_empty() {
            return domain("a partition needs at least one cell");
        }
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return domain(format!("total mass must be positive, got {total_mass}"));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return domain(format!("cell parameters must be positive, got {a}"));
        }
        let sum: f64 = alphas.iter().sum();
        if sum > total_mass * (1.0 + 1e-12) {
            return domain(format!("cell parameters sum to {sum}, exceeding total mass {total_mass}"));
        }
        Ok(Self { alphas, total_mass })
    }

    /// A partition whose cells exhaust the space, so `c = sum alpha_i`.
    pub fn exhaustive(alphas: Vec<f64>) -> Result<Self> {
        let c = alphas.iter().sum();
        Self::new(alphas, c)
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Partition with cells `i` and `j` joined; the union takes the smaller
    /// position and the remaining cells keep their order.
    pub fn merge(&self, i: usize, j: usize) -> Result<Self> {
        let (lo, hi) = check_pair(self.dim(), i, j)?;
        let mut alphas = self.alphas.clone();
        alphas[lo] += alphas[hi];
        alphas.remove(hi);
        Ok(Self { alphas, total_mass: self.total_mass })
    }
}

fn check_pair(dim: usize, i: usize, j: usize) -> Result<(usize, usize)> {
    if i == j {
        return domain("merged cells must differ");
    }
    if i >= dim || j >= dim {
        return domain(format!("cells ({i}, {j}) out of range for dimension {dim}"));
    }
    Ok((i.min(j), i.max(j)))
}

/// Law of the random constant `Z` in the random-constant kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstantLaw {
    Finite(BaseDistribution),
    Beta { a: f64, b: f64 },
}

impl ConstantLaw {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return domain(format!("beta parameters must be positive, got ({a}, {b})"));
        }
        Ok(Self::Beta { a, b })
    }

    /// `E[Z^n]`.
    pub fn moment(&self, n: usize) -> f64 {
        match self {
            Self::Finite(law) => law.moment(n),
            Self::Beta { a, b } => (ln_pochhammer_unchecked(*a, n) - ln_pochhammer_unchecked(a + b, n)).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        self.moment(2) - m1 * m1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Finite(law) => law.sample(rng),
            Self::Beta { a, b } => Beta::new(*a, *b).expect("validated beta law").sample(rng),
        }
    }
}

/// The directing kernel `Q_x` restricted to a partition.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectingKernel {
    /// `Q_x = delta_z` for every `x`.
    DegenerateConstant(f64),
    /// `Q_x = delta_{z(x)}`; cell `i` carries the pushforward of `P_0`
    /// restricted to `A_i` under `z`.
    PerCellDistribution(Vec<BaseDistribution>),
    /// `Q_x = delta_Z` for one random `Z` shared by all cells.
    RandomConstant(ConstantLaw),
    /// Three gamma CRMs: a shared component of mass `eta c` and two private
    /// ones of mass `(1 - eta) c`.
    CommonComponent(f64),
}

impl DirectingKernel {
    pub fn validate(&self, part: &PartitionSpec) -> Result<()> {
        match self {
            Self::DegenerateConstant(z) => {
                if !(0.0..=1.0).contains(z) {
                    return domain(format!("constant kernel needs z in [0, 1], got {z}"));
                }
            }
            Self::PerCellDistribution(bases) => {
                if bases.len() != part.dim() {
                    return domain(format!(
                        "{} cell distributions for a partition of dimension {}",
                        bases.len(),
                        part.dim()
                    ));
                }
            }
            Self::RandomConstant(ConstantLaw::Beta { a, b }) => {
                ConstantLaw::beta(*a, *b)?;
            }
            Self::RandomConstant(ConstantLaw::Finite(_)) => {}
            Self::CommonComponent(eta) => {
                if !(*eta > 0.0 && *eta < 1.0) {
                    return domain(format!("common-component share must lie in (0, 1), got {eta}"));
                }
            }
        }
        Ok(())
    }

    /// Kernel seen on the partition with cells `i` and `j` joined.
    pub fn merge(&self, part: &PartitionSpec, i: usize, j: usize) -> Result<Self> {
        self.validate(part)?;
        let (lo, hi) = check_pair(part.dim(), i, j)?;
        Ok(match self {
            Self::PerCellDistribution(bases) => {
                let a = part.alphas();
                let mut merged = bases.clone();
                merged[lo] = bases[lo].mixture(a[lo], &bases[hi], a[hi])?;
                merged.remove(hi);
                Self::PerCellDistribution(merged)
            }
            other => other.clone(),
        })
    }

    /// Whether `rho_n` factorizes over cells.
    pub fn has_product_form(&self) -> bool {
        !matches!(self, Self::RandomConstant(_))
    }
}

/// Multi-index `n = (n_1, ..., n_d)` of a joint canonical correlation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CorrelationIndex(pub Vec<usize>);

impl CorrelationIndex {
    pub fn new(n: Vec<usize>) -> Self {
        Self(n)
    }

    /// `n_cell e_cell` in dimension `dim`.
    pub fn unit(dim: usize, cell: usize, n: usize) -> Self {
        let mut v = vec![0; dim];
        v[cell] = n;
        Self(v)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Every index of dimension `dim` with `1 <= |n| <= max_total`, in
    /// order of total degree and then lexicographically.
    pub fn all_up_to(dim: usize, max_total: usize) -> Vec<Self> {
        fn fill(prefix: &mut Vec<usize>, dim: usize, left: usize, out: &mut Vec<CorrelationIndex>) {
            if prefix.len() + 1 == dim {
                prefix.push(left);
                out.push(CorrelationIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in (0..=left).rev() {
                prefix.push(k);
                fill(prefix, dim, left - k, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if dim == 0 {
            return out;
        }
        for total in 1..=max_total {
            fill(&mut Vec::with_capacity(dim), dim, total, &mut out);
        }
        out
    }
}

impl std::fmt::Display for CorrelationIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `(a)_n / (b)_n`.
fn pochhammer_ratio(a: f64, b: f64, n: usize) -> f64 {
    (ln_pochhammer_unchecked(a, n) - ln_pochhammer_unchecked(b, n)).exp()
}

/// `rho_{k e_i}` for `k = 0..=n_max` on a product-form kernel.
fn cell_correlations(part: &PartitionSpec, kernel: &DirectingKernel, cell: usize, n_max: usize) -> Vec<f64> {
    let alpha = part.alphas[cell];
    match kernel {
        DirectingKernel::DegenerateConstant(z) => (0..=n_max).map(|k| z.powi(k as i32)).collect(),
        DirectingKernel::PerCellDistribution(bases) => moment_table(alpha, &bases[cell], n_max),
        DirectingKernel::CommonComponent(eta) => (0..=n_max).map(|k| pochhammer_ratio(eta * alpha, alpha, k)).collect(),
        DirectingKernel::RandomConstant(law) => (0..=n_max).map(|k| law.moment(k)).collect(),
    }
}

fn check_index(part: &PartitionSpec, n: &CorrelationIndex) -> Result<()> {
    if n.dim() != part.dim() {
        return domain(format!("index {n} has dimension {}, partition has {}", n.dim(), part.dim()));
    }
    Ok(())
}

/// Exact canonical correlation `rho_n` of the pair directed by `kernel`.
pub fn canonical_corr_exact(part: &PartitionSpec, kernel: &DirectingKernel, n: &CorrelationIndex) -> Result<f64> {
    kernel.validate(part)?;
    check_index(part, n)?;
    if let DirectingKernel::RandomConstant(law) = kernel {
        return Ok(law.moment(n.total()));
    }
    Ok(n.as_slice()
        .iter()
        .enumerate()
        .map(|(cell, &k)| if k == 0 { 1.0 } else { cell_correlations(part, kernel, cell, k)[k] })
        .product())
}

/// Beta-binomial mixture `sum_k C(n,k) (alpha_i)_k (alpha_j)_{n-k} / (alpha_i + alpha_j)_n rho_{k e_i + (n-k) e_j}`,
/// which equals `rho_n` of the union `A_i ∪ A_j`.
pub fn merge_corr(part: &PartitionSpec, kernel: &DirectingKernel, n: usize, i: usize, j: usize) -> Result<f64> {
    kernel.validate(part)?;
    check_pair(part.dim(), i, j)?;
    let (ai, aj) = (part.alphas[i], part.alphas[j]);
    let ln_denominator = ln_pochhammer_unchecked(ai + aj, n);
    let mut acc = 0.0;
    for k in 0..=n {
        let mut idx = vec![0; part.dim()];
        idx[i] = k;
        idx[j] = n - k;
        let rho = canonical_corr_exact(part, kernel, &CorrelationIndex(idx))?;
        let ln_weight = ln_pochhammer_unchecked(ai, k) + ln_pochhammer_unchecked(aj, n - k) - ln_denominator;
        acc += binomial(n, k) * ln_weight.exp() * rho;
    }
    Ok(acc)
}

/// Truncated series value with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceSeries {
    pub value: f64,
    pub tail_bound: f64,
}

fn laplace_thetas(part: &PartitionSpec, s: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    if s.len() != part.dim() || t.len() != part.dim() {
        return domain(format!("laplace arguments of lengths ({}, {}) for dimension {}", s.len(), t.len(), part.dim()));
    }
    // s / (1 + s), with the limit 1 at infinity.
    let frac = |u: f64| if u.is_infinite() { 1.0 } else { u / (1.0 + u) };
    s.iter()
        .zip(t)
        .map(|(&si, &ti)| {
            if !(si >= 0.0 && ti >= 0.0) {
                return domain(format!("laplace arguments must be nonnegative, got ({si}, {ti})"));
            }
            let theta = frac(si) * frac(ti);
            if theta >= 1.0 {
                return domain("series diverges: theta reaches 1");
            }
            Ok(theta)
        })
        .collect()
}

/// Product of truncated power series, keeping degrees `0..=trunc`.
fn convolve(a: &[f64], b: &[f64], trunc: usize) -> Vec<f64> {
    let mut out = vec![0.0; trunc + 1];
    for (i, &ai) in a.iter().enumerate().take(trunc + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(trunc + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `phi(f, g) / (phi(f) phi(g))` for `f = sum s_i 1_{A_i}`, `g = sum t_i 1_{A_i}`,
/// as the series `sum_n rho_n prod_i (alpha_i)_{n_i} theta_i^{n_i} / n_i!` with
/// `theta_i = s_i t_i / ((1 + s_i)(1 + t_i))`, truncated at `|n| <= trunc`.
///
/// The tail bound is the tail of the same series with `rho = 1`, which has the
/// closed form `prod_i (1 - theta_i)^(-alpha_i)`.
pub fn joint_laplace_ratio(
    part: &PartitionSpec,
    kernel: &DirectingKernel,
    s: &[f64],
    t: &[f64],
    trunc: usize,
) -> Result<LaplaceSeries> {
    kernel.validate(part)?;
    if trunc > MAX_LAPLACE_TRUNCATION {
        return domain(format!("truncation {trunc} exceeds {MAX_LAPLACE_TRUNCATION}"));
    }
    let thetas = laplace_thetas(part, s, t)?;

    let mut dominating = vec![1.0];
    let mut weighted = vec![1.0];
    for (cell, (&alpha, &theta)) in part.alphas.iter().zip(&thetas).enumerate() {
        let mut coefs = Vec::with_capacity(trunc + 1);
        let mut c = 1.0;
        coefs.push(c);
        for k in 1..=trunc {
            c *= (alpha + k as f64 - 1.0) * theta / k as f64;
            coefs.push(c);
        }
        if kernel.has_product_form() {
            let rho = cell_correlations(part, kernel, cell, trunc);
            let cell_poly: Vec<f64> = coefs.iter().zip(&rho).map(|(a, r)| a * r).collect();
            weighted = convolve(&weighted, &cell_poly, trunc);
        }
        dominating = convolve(&dominating, &coefs, trunc);
    }
    let value = match kernel {
        DirectingKernel::RandomConstant(law) => dominating.iter().enumerate().map(|(k, q)| law.moment(k) * q).sum(),
        _ => weighted.iter().sum(),
    };
    let partial: f64 = dominating.iter().sum();
    let closed: f64 = part.alphas.iter().zip(&thetas).map(|(&a, &th)| (-a * (-th).ln_1p()).exp()).product();
    Ok(LaplaceSeries { value, tail_bound: (closed - partial).max(0.0) })
}

/// Closed form `prod_i (1 - z theta_i)^(-alpha_i)` of the Laplace ratio under
/// the constant kernel `delta_z`.
pub fn extreme_laplace_ratio(part: &PartitionSpec, z: f64, s: &[f64], t: &[f64]) -> Result<f64> {
    DirectingKernel::DegenerateConstant(z).validate(part)?;
    let thetas = laplace_thetas(part, s, t)?;
    Ok(part.alphas.iter().zip(&thetas).map(|(&a, &th)| (-a * (-z * th).ln_1p()).exp()).product())
}

/// Closed form `prod_i (1 - theta_i)^(-eta alpha_i)` under the
/// common-component kernel.
pub fn common_component_laplace_ratio(part: &PartitionSpec, eta: f64, s: &[f64], t: &[f64]) -> Result<f64> {
    DirectingKernel::CommonComponent(eta).validate(part)?;
    let thetas = laplace_thetas(part, s, t)?;
    Ok(part.alphas.iter().zip(&thetas).map(|(&a, &th)| (-eta * a * (-th).ln_1p()).exp()).product())
}
