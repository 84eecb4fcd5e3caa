//! Random means `M = ∫ s p(ds)` of Dirichlet processes on `[0, 1]` with
//! finitely supported base distributions.
//!
//! Exact moments come from the stick-breaking self-similarity
//! `M = V U + (1 - V) M'` with `V ~ Beta(1, theta)`, `U ~ G`, which yields
//!
//! ```text
//! E[M^n] n / (theta + n) = sum_{j=1..n} C(n,j) j! (theta)_{n-j} / (1+theta)_n  m_j E[M^{n-j}]
//! ```
//!
//! where `m_j` is the `j`-th moment of the base.

use rand::Rng;

use crate::error::{domain, Result};
use crate::specfun::{ln_factorial, ln_pochhammer_unchecked};

/// Tolerance on the total probability of a finite law.
pub(crate) const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Default residual stick mass at which stick-breaking stops.
pub const DEFAULT_EPS: f64 = 1e-10;

pub(crate) fn validate_weights(atoms: &[(f64, f64)]) -> Result<()> {
    if atoms.is_empty() {
        return domain("a finite law needs at least one atom");
    }
    let mut total = 0.0;
    for &(loc, w) in atoms {
        if !loc.is_finite() {
            return domain(format!("atom location {loc} is not finite"));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return domain(format!("atom weight {w} must be a nonnegative number"));
        }
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return domain(format!("atom weights sum to {total}, not 1"));
    }
    Ok(())
}

/// Draws an atom location by one uniform and a cumulative scan. A single
/// atom is returned without touching the stream.
pub(crate) fn sample_atom<R: Rng + ?Sized>(atoms: &[(f64, f64)], rng: &mut R) -> f64 {
    if atoms.len() == 1 {
        return atoms[0].0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(loc, w) in atoms {
        acc += w;
        if u < acc {
            return loc;
        }
    }
    // Rounding left the cumulative sum a hair below one.
    atoms.iter().rev().find(|a| a.1 > 0.0).map_or(atoms[0].0, |a| a.0)
}

/// A probability distribution on `[0, 1]` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDistribution {
    atoms: Vec<(f64, f64)>,
}

impl BaseDistribution {
    /// Builds a law from `(location, probability)` pairs.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        validate_weights(&atoms)?;
        if let Some(&(loc, _)) = atoms.iter().find(|a| !(0.0..=1.0).contains(&a.0)) {
            return domain(format!("base location {loc} lies outside [0, 1]"));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(z: f64) -> Result<Self> {
        Self::new(vec![(z, 1.0)])
    }

    /// Two-point law matching the first three moments `m1, m2, m3` of a
    /// non-degenerate law on `[0, 1]` (the two-node Gauss rule of that law).
    pub fn moment_matched_two_point(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        let var = m2 - m1 * m1;
        if !(var > 0.0) {
            return domain("two-point moment matching needs positive variance");
        }
        // Monic quadratic x^2 - a x - b orthogonal to 1 and x.
        let a = (m3 - m1 * m2) / var;
        let b = m2 - a * m1;
        let disc = (a * a + 4.0 * b).sqrt();
        let lo = 0.5 * (a - disc);
        let hi = 0.5 * (a + disc);
        let w_lo = (hi - m1) / (hi - lo);
        Self::new(vec![(lo, w_lo), (hi, 1.0 - w_lo)])
    }

    /// Two-point law sharing the first three moments of `Beta(a, b)`.
    pub fn beta_two_point(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return domain(format!("beta parameters must be positive, got ({a}, {b})"));
        }
        let s = a + b;
        let m1 = a / s;
        let m2 = m1 * (a + 1.0) / (s + 1.0);
        let m3 = m2 * (a + 2.0) / (s + 2.0);
        Self::moment_matched_two_point(m1, m2, m3)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `∫ s^j G(ds)`.
    pub fn moment(&self, j: usize) -> f64 {
        self.atoms.iter().map(|&(s, w)| w * s.powi(j as i32)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        self.moment(2) - m1 * m1
    }

    pub fn is_degenerate(&self) -> bool {
        self.atoms.iter().filter(|a| a.1 > 0.0).count() <= 1
    }

    /// `(w_a A + w_b B) / (w_a + w_b)`.
    pub fn mixture(&self, w_a: f64, other: &Self, w_b: f64) -> Result<Self> {
        let total = w_a + w_b;
        if !(w_a >= 0.0 && w_b >= 0.0 && total > 0.0) {
            return domain("mixture weights must be nonnegative with a positive sum");
        }
        let mut atoms: Vec<(f64, f64)> = self.atoms.iter().map(|&(s, w)| (s, w * w_a / total)).collect();
        atoms.extend(other.atoms.iter().map(|&(s, w)| (s, w * w_b / total)));
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        for a in atoms.iter_mut() {
            a.1 /= sum;
        }
        Self::new(atoms)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_atom(&self.atoms, rng)
    }
}

/// A Dirichlet process on `[0, 1]` with total mass `theta` and base `G`,
/// seen through its mean functional.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletMeanSpec {
    theta: f64,
    base: BaseDistribution,
}

impl DirichletMeanSpec {
    pub fn new(theta: f64, base: BaseDistribution) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return domain(format!("dirichlet mass must be positive, got {theta}"));
        }
        Ok(Self { theta, base })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }
}

/// Largest order accepted by [`mean_moments`].
pub const MAX_MOMENT_ORDER: usize = 64;

/// `E[M], E[M^2], ..., E[M^n_max]` for the Dirichlet mean `M`.
///
/// Entry `k` of the returned vector holds `E[M^(k+1)]`.
pub fn mean_moments(spec: &DirichletMeanSpec, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 || n_max > MAX_MOMENT_ORDER {
        return domain(format!("moment order must lie in 1..={MAX_MOMENT_ORDER}, got {n_max}"));
    }
    let mut table = moment_table(spec.theta, &spec.base, n_max);
    table.remove(0);
    Ok(table)
}

/// `[1, E[M], ..., E[M^n_max]]` without the order cap.
pub(crate) fn moment_table(theta: f64, base: &BaseDistribution, n_max: usize) -> Vec<f64> {
    let base_moments: Vec<f64> = (0..=n_max).map(|j| base.moment(j)).collect();
    let ln_fact: Vec<f64> = (0..=n_max).map(ln_factorial).collect();
    let ln_poch_theta: Vec<f64> = (0..=n_max).map(|k| ln_pochhammer_unchecked(theta, k)).collect();

    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    for n in 1..=n_max {
        let ln_denominator = ln_pochhammer_unchecked(1.0 + theta, n);
        let mut acc = 0.0;
        for j in 1..=n {
            let ln_weight = ln_fact[n] - ln_fact[n - j] + ln_poch_theta[n - j] - ln_denominator;
            acc += ln_weight.exp() * base_moments[j] * out[n - j];
        }
        out.push(acc * (theta + n as f64) / n as f64);
    }
    out
}

/// One stick-breaking draw of `M = sum_j P_j U_j` with `GEM(theta)` weights.
///
/// Sticks are broken until the unbroken remainder drops below `eps`; the
/// remainder is then given to one last base draw, so the output is a convex
/// combination of support points and differs from the untruncated series by
/// at most `eps`.
pub fn sample_dirichlet_mean<R: Rng + ?Sized>(spec: &DirichletMeanSpec, eps: f64, rng: &mut R) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("stick-breaking tolerance must lie in (0, 1), got {eps}"));
    }
    if spec.base.atoms.len() == 1 {
        return Ok(spec.base.atoms[0].0);
    }
    Ok(stick_breaking_mean(spec.theta, &spec.base, eps, rng))
}

pub(crate) fn stick_breaking_mean<R: Rng + ?Sized>(theta: f64, base: &BaseDistribution, eps: f64, rng: &mut R) -> f64 {
    let inv_theta = 1.0 / theta;
    let mut remainder = 1.0;
    let mut acc = 0.0;
    while remainder >= eps {
        // 1 - V with V ~ Beta(1, theta), by inversion.
        let keep = rng.random::<f64>().powf(inv_theta);
        acc += remainder * (1.0 - keep) * base.sample(rng);
        remainder *= keep;
    }
    acc + remainder * base.sample(rng)
}

/// Both sides of `E[(1 - lambda M)^(-theta)] = exp(-theta ∫ log(1 - lambda s) G(ds))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesGap {
    /// Monte Carlo estimate of the left side.
    pub lhs: f64,
    /// Standard error of `lhs`.
    pub std_error: f64,
    /// Exact right side.
    pub rhs: f64,
}

impl StieltjesGap {
    pub fn z_score(&self) -> f64 {
        crate::estimators::z_score(self.lhs, self.rhs, self.std_error)
    }
}

/// Compares the generalized Cauchy-Stieltjes transform of the Dirichlet mean,
/// estimated from `draws` stick-breaking samples, with its exact value.
pub fn stieltjes_identity_gap<R: Rng + ?Sized>(
    spec: &DirichletMeanSpec,
    lam: f64,
    draws: usize,
    rng: &mut R,
) -> Result<StieltjesGap> {
    if !lam.is_finite() {
        return domain(format!("lambda must be finite, got {lam}"));
    }
    if let Some(&(s, _)) = spec.base.atoms.iter().find(|a| !(1.0 - lam * a.0 > 0.0)) {
        return domain(format!("1 - lambda * s must be positive on the support, fails at s = {s}"));
    }
    if draws == 0 {
        return domain("at least one draw is required");
    }
    let theta = spec.theta;
    let rhs = (-theta * spec.base.atoms.iter().map(|&(s, w)| w * (-lam * s).ln_1p()).sum::<f64>()).exp();
    let mut acc = crate::estimators::MeanAccumulator::default();
    for _ in 0..draws {
        let m = sample_dirichlet_mean(spec, DEFAULT_EPS, rng)?;
        acc.push((1.0 - lam * m).powf(-theta));
    }
    Ok(StieltjesGap { lhs: acc.mean(), std_error: acc.std_error(), rhs })
}
