//! Generators for canonically correlated gamma pairs on a partition.
//!
//! Every sampler takes an explicit random stream. [`batch`] fans draws out
//! over derived streams so batches are reproducible from a single seed.

mod batch;

pub use batch::{par_generate, stream, PairBatch, StreamRng, CHUNK};

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson};

use crate::dirichlet::stick_breaking_mean;
use crate::dirichlet::DEFAULT_EPS;
use crate::error::{domain, range, Result};
use crate::kernels::{ConstantLaw, DirectingKernel, PartitionSpec};

/// Largest Poisson mean accepted when the dependence rate is supplied by
/// the caller.
pub const MAX_POISSON_MEAN: f64 = 1e7;

/// Poisson means beyond this are not drawn even when the rate comes from an
/// internally sampled `Z`; the cell is copied instead. At this size the
/// conditional law has relative spread of about `1e-9`.
const RANDOM_RATE_COPY: f64 = 1e18;

fn gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, scale).expect("validated gamma parameters").sample(rng)
}

fn poisson<R: Rng + ?Sized>(mean: f64, cap: f64, rng: &mut R) -> Result<u64> {
    if mean > cap {
        return range(format!("poisson mean {mean} exceeds {cap}"));
    }
    if mean <= 0.0 {
        return Ok(0);
    }
    Ok(Poisson::new(mean).expect("positive finite mean").sample(rng) as u64)
}

fn check_shape(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("gamma shape must be positive, got {alpha}"));
    }
    Ok(())
}

fn check_rate(b: f64) -> Result<()> {
    if !(b >= 0.0) {
        return domain(format!("dependence rate b must be nonnegative, got {b}"));
    }
    Ok(())
}

fn check_masses(part: &PartitionSpec, x: &[f64]) -> Result<()> {
    if x.len() != part.dim() {
        return domain(format!("state of length {} for dimension {}", x.len(), part.dim()));
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return domain(format!("masses must be nonnegative and finite, got {v}"));
    }
    Ok(())
}

/// Independent `Gamma(alpha_i, 1)` masses, one per cell.
pub fn sample_gamma_vector<R: Rng + ?Sized>(part: &PartitionSpec, rng: &mut R) -> Vec<f64> {
    part.alphas().iter().map(|&a| gamma(a, 1.0, rng)).collect()
}

/// `Y | X = x` in Algorithm A.1: `N ~ Poisson(b x)`, `Y ~ Gamma(alpha + N, 1/(1+b))`.
/// `b = inf` returns `x`.
pub fn a1_conditional<R: Rng + ?Sized>(alpha: f64, b: f64, x: f64, rng: &mut R) -> Result<f64> {
    a1_conditional_capped(alpha, b, x, MAX_POISSON_MEAN, rng)
}

fn a1_conditional_capped<R: Rng + ?Sized>(alpha: f64, b: f64, x: f64, cap: f64, rng: &mut R) -> Result<f64> {
    check_shape(alpha)?;
    check_rate(b)?;
    if b.is_infinite() || (cap >= RANDOM_RATE_COPY && b * x > RANDOM_RATE_COPY) {
        return Ok(x);
    }
    let n = poisson(b * x, cap, rng)?;
    Ok(gamma(alpha + n as f64, 1.0 / (1.0 + b), rng))
}

/// Algorithm A.1: an exchangeable pair with `Gamma(alpha, 1)` margins and
/// canonical correlations `z^n`, `z = b / (1 + b)`.
pub fn algorithm_a1<R: Rng + ?Sized>(alpha: f64, b: f64, rng: &mut R) -> Result<(f64, f64)> {
    check_shape(alpha)?;
    check_rate(b)?;
    let x = gamma(alpha, 1.0, rng);
    let y = a1_conditional(alpha, b, x, rng)?;
    Ok((x, y))
}

/// Algorithm A.2: draws `B ~ P*` and runs one A.1 instance per cell with
/// rate `B_i`. The pair has `rho_n = E[prod Z_i^{n_i}]`, `Z_i = B_i / (1 + B_i)`.
pub fn algorithm_a2<R, F>(part: &PartitionSpec, mut pstar: F, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Vec<f64>,
{
    let rates = pstar(rng);
    if rates.len() != part.dim() {
        return domain(format!("P* produced {} rates for dimension {}", rates.len(), part.dim()));
    }
    for &b in &rates {
        check_rate(b)?;
    }
    let x = sample_gamma_vector(part, rng);
    let y = x
        .iter()
        .zip(part.alphas())
        .zip(&rates)
        .map(|((&xi, &a), &b)| a1_conditional(a, b, xi, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((x, y))
}

/// Algorithm A.3: `N ~ Poisson(b |x|)` split multinomially with
/// probabilities `x_i / |x|`, then `Y_i ~ Gamma(alpha_i + N_i, 1/(1+b))`.
pub fn algorithm_a3<R: Rng + ?Sized>(b: f64, x: &[f64], part: &PartitionSpec, rng: &mut R) -> Result<Vec<f64>> {
    a3_capped(b, x, part, MAX_POISSON_MEAN, rng)
}

fn a3_capped<R: Rng + ?Sized>(b: f64, x: &[f64], part: &PartitionSpec, cap: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_rate(b)?;
    check_masses(part, x)?;
    let total: f64 = x.iter().sum();
    if b.is_infinite() || (cap >= RANDOM_RATE_COPY && b * total > RANDOM_RATE_COPY) {
        return Ok(x.to_vec());
    }
    let mut left = poisson(b * total, cap, rng)?;
    let mut mass_left = total;
    let scale = 1.0 / (1.0 + b);
    let d = x.len();
    let mut y = Vec::with_capacity(d);
    for (i, (&xi, &a)) in x.iter().zip(part.alphas()).enumerate() {
        let ni = if i + 1 == d || left == 0 {
            std::mem::take(&mut left)
        } else if mass_left > 0.0 {
            let p = (xi / mass_left).clamp(0.0, 1.0);
            let k = Binomial::new(left, p).expect("probability in [0, 1]").sample(rng);
            left -= k;
            k
        } else {
            0
        };
        mass_left -= xi;
        y.push(gamma(a + ni as f64, scale, rng));
    }
    Ok(y)
}

/// Algorithm A.4: `Z ~ pz`, then Algorithm A.3 with `b = Z / (1 - Z)`;
/// `Z = 1` copies the input.
///
/// Since `Z` is drawn here, the Poisson mean is not held to
/// [`MAX_POISSON_MEAN`]; see [`dw_step_random_z`].
pub fn algorithm_a4<R: Rng + ?Sized>(
    pz: &ConstantLaw,
    x: &[f64],
    part: &PartitionSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let z = pz.sample(rng);
    dw_step_random_z(x, z, part, rng)
}

/// [`dw_transition_step`] for a `z` that was itself sampled. A `z` close to
/// one has positive probability under continuous laws, so the Poisson draw
/// is taken exactly for any mean and only means above `1e18` fall back to a
/// copy of the input.
pub fn dw_step_random_z<R: Rng + ?Sized>(m: &[f64], z: f64, part: &PartitionSpec, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("autocorrelation parameter must lie in [0, 1], got {z}"));
    }
    a3_capped(rate_of(z), m, part, RANDOM_RATE_COPY, rng)
}

/// One transition of the gamma Dawson-Watanabe process on the partition with
/// autocorrelation parameter `z`: Algorithm A.3 with `b = z / (1 - z)`.
pub fn dw_transition_step<R: Rng + ?Sized>(m: &[f64], z: f64, part: &PartitionSpec, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("autocorrelation parameter must lie in [0, 1], got {z}"));
    }
    if z == 1.0 {
        check_masses(part, m)?;
        return Ok(m.to_vec());
    }
    algorithm_a3(z / (1.0 - z), m, part, rng)
}

fn rate_of(z: f64) -> f64 {
    if z >= 1.0 {
        f64::INFINITY
    } else {
        z / (1.0 - z)
    }
}

fn conditional_from_means<R: Rng + ?Sized>(
    part: &PartitionSpec,
    zs: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = sample_gamma_vector(part, rng);
    let y = x
        .iter()
        .zip(part.alphas())
        .zip(zs)
        .map(|((&xi, &a), &z)| a1_conditional_capped(a, rate_of(z), xi, RANDOM_RATE_COPY, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((x, y))
}

/// Draws the cell means `(Z_{A_1}, ..., Z_{A_d})` of the kernel.
///
/// The common-component kernel has `Z_i ~ Beta(eta alpha_i, (1 - eta) alpha_i)`
/// independently, the Dirichlet mean over `eta delta_1 + (1 - eta) delta_0`.
pub fn sample_cell_means<R: Rng + ?Sized>(
    part: &PartitionSpec,
    kernel: &DirectingKernel,
    rng: &mut R,
) -> Result<Vec<f64>> {
    kernel.validate(part)?;
    Ok(match kernel {
        DirectingKernel::DegenerateConstant(z) => vec![*z; part.dim()],
        DirectingKernel::PerCellDistribution(bases) => part
            .alphas()
            .iter()
            .zip(bases)
            .map(|(&a, base)| {
                if base.atoms().len() == 1 {
                    base.atoms()[0].0
                } else {
                    stick_breaking_mean(a, base, DEFAULT_EPS, rng)
                }
            })
            .collect(),
        DirectingKernel::RandomConstant(law) => vec![law.sample(rng); part.dim()],
        DirectingKernel::CommonComponent(eta) => part
            .alphas()
            .iter()
            .map(|&a| Beta::new(eta * a, (1.0 - eta) * a).expect("positive parameters").sample(rng))
            .collect(),
    })
}

/// Kernel-driven pair: stationary `X`, then per-cell A.1 conditionals with
/// `b_i = Z_i / (1 - Z_i)` for cell means drawn by [`sample_cell_means`].
/// The common-component kernel instead uses three independent gamma vectors
/// `mu_0 ~ Gamma(eta alpha)`, `mu_1, mu_2 ~ Gamma((1 - eta) alpha)` and returns
/// `(mu_0 + mu_1, mu_0 + mu_2)`.
pub fn sample_pair_general<R: Rng + ?Sized>(
    part: &PartitionSpec,
    kernel: &DirectingKernel,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let DirectingKernel::CommonComponent(eta) = kernel {
        kernel.validate(part)?;
        let mut x = Vec::with_capacity(part.dim());
        let mut y = Vec::with_capacity(part.dim());
        for &a in part.alphas() {
            let shared = gamma(eta * a, 1.0, rng);
            x.push(shared + gamma((1.0 - eta) * a, 1.0, rng));
            y.push(shared + gamma((1.0 - eta) * a, 1.0, rng));
        }
        return Ok((x, y));
    }
    sample_pair_directed(part, kernel, rng)
}

/// Kernel-driven pair through the cell means for every kernel, including
/// the common-component one.
pub fn sample_pair_directed<R: Rng + ?Sized>(
    part: &PartitionSpec,
    kernel: &DirectingKernel,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let zs = sample_cell_means(part, kernel, rng)?;
    conditional_from_means(part, &zs, rng)
}
