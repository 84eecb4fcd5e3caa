//! Gamma Dawson-Watanabe transitions run on a subordinated clock.
//!
//! Subordinators are drift plus compound Poisson with finitely many jump
//! sizes, `psi(u) = drift u + rate sum_j w_j (1 - exp(-u h_j))`. A transition
//! over time `t` draws the clock increment `S_t` and takes one DW step with
//! `z = exp(-S_t / 2)`, so stationary pairs have canonical correlations
//! `rho_n(t) = exp(-t psi(|n| / 2))`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::dirichlet::{sample_atom, validate_weights};
use crate::error::{domain, range, Result};
use crate::kernels::{CorrelationIndex, PartitionSpec};
use crate::samplers::{dw_step_random_z, dw_transition_step, MAX_POISSON_MEAN};

/// Finite law of jump sizes on `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpLaw {
    atoms: Vec<(f64, f64)>,
}

impl JumpLaw {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        validate_weights(&atoms)?;
        if let Some(&(h, _)) = atoms.iter().find(|a| !(a.0 > 0.0)) {
            return domain(format!("jump sizes must be positive, got {h}"));
        }
        Ok(Self { atoms })
    }

    pub fn single(h: f64) -> Result<Self> {
        Self::new(vec![(h, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(h, w)| h * w).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorSpec {
    drift: f64,
    jump_rate: f64,
    jump_law: JumpLaw,
}

impl SubordinatorSpec {
    pub fn new(drift: f64, jump_rate: f64, jump_law: JumpLaw) -> Result<Self> {
        if !(drift >= 0.0 && drift.is_finite()) {
            return domain(format!("drift must be nonnegative, got {drift}"));
        }
        if !(jump_rate >= 0.0 && jump_rate.is_finite()) {
            return domain(format!("jump rate must be nonnegative, got {jump_rate}"));
        }
        Ok(Self { drift, jump_rate, jump_law })
    }

    pub fn pure_drift(drift: f64) -> Result<Self> {
        Self::new(drift, 0.0, JumpLaw::single(1.0)?)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    pub fn jump_law(&self) -> &JumpLaw {
        &self.jump_law
    }
}

/// Laplace exponent `psi(u)` with `E[exp(-u S_t)] = exp(-t psi(u))`.
pub fn laplace_exponent(spec: &SubordinatorSpec, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return domain(format!("laplace exponent needs u >= 0, got {u}"));
    }
    let jumps: f64 = spec.jump_law.atoms.iter().map(|&(h, w)| -w * (-u * h).exp_m1()).sum();
    Ok(spec.drift * u + spec.jump_rate * jumps)
}

/// One draw of `S_t`: `drift t` plus a Poisson(`rate t`) number of jumps.
pub fn sample_increment<R: Rng + ?Sized>(spec: &SubordinatorSpec, t: f64, rng: &mut R) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time increment must be nonnegative, got {t}"));
    }
    let mean = spec.jump_rate * t;
    if mean > MAX_POISSON_MEAN {
        return range(format!("expected jump count {mean} exceeds {MAX_POISSON_MEAN}"));
    }
    let mut s = spec.drift * t;
    if mean > 0.0 {
        let count = Poisson::new(mean).expect("positive finite mean").sample(rng) as u64;
        for _ in 0..count {
            s += sample_atom(&spec.jump_law.atoms, rng);
        }
    }
    Ok(s)
}

/// `rho_n(t) = exp(-t psi(|n| / 2))`.
pub fn markov_corr(spec: &SubordinatorSpec, n: &CorrelationIndex, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be nonnegative, got {t}"));
    }
    Ok((-t * laplace_exponent(spec, 0.5 * n.total() as f64)?).exp())
}

/// Transition over time `t` of the subordinated gamma DW process on the
/// partition: `S ~ S_t`, then a DW step with `z = exp(-S/2)`.
pub fn subordinated_dw_step<R: Rng + ?Sized>(
    m: &[f64],
    part: &PartitionSpec,
    spec: &SubordinatorSpec,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let s = sample_increment(spec, t, rng)?;
    dw_step_random_z(m, (-0.5 * s).exp(), part, rng)
}

/// `exp(-t gamma (1 - rho_step))`: the correlation after time `t` of a chain
/// whose steps, each with correlation `rho_step`, fire at Poisson rate
/// `gamma_rate`.
pub fn poissonized_corr(gamma_rate: f64, rho_step: f64, t: f64) -> Result<f64> {
    if !(gamma_rate > 0.0 && gamma_rate.is_finite()) {
        return domain(format!("clock rate must be positive, got {gamma_rate}"));
    }
    if !(0.0..=1.0).contains(&rho_step) {
        return domain(format!("step correlation must lie in [0, 1], got {rho_step}"));
    }
    if !(t >= 0.0) {
        return domain(format!("time must be nonnegative, got {t}"));
    }
    Ok((-t * gamma_rate * (1.0 - rho_step)).exp())
}

/// Runs the Poisson-clock chain for time `t`: a Poisson(`gamma_rate t`)
/// number of DW steps, each with parameter `z_step`.
pub fn poisson_clock_chain<R: Rng + ?Sized>(
    m: &[f64],
    part: &PartitionSpec,
    gamma_rate: f64,
    z_step: f64,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    poissonized_corr(gamma_rate, z_step, t)?;
    let mean = gamma_rate * t;
    if mean > MAX_POISSON_MEAN {
        return range(format!("expected step count {mean} exceeds {MAX_POISSON_MEAN}"));
    }
    let steps = if mean > 0.0 { Poisson::new(mean).expect("positive finite mean").sample(rng) as u64 } else { 0 };
    let mut state = m.to_vec();
    for _ in 0..steps {
        state = dw_transition_step(&state, z_step, part, rng)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jumpy() -> SubordinatorSpec {
        SubordinatorSpec::new(0.3, 1.2, JumpLaw::new(vec![(0.5, 0.25), (2.0, 0.75)]).unwrap()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(JumpLaw::new(vec![(0.0, 1.0)]).is_err());
        assert!(JumpLaw::new(vec![(1.0, 0.6)]).is_err());
        assert!(SubordinatorSpec::new(-1.0, 0.0, JumpLaw::single(1.0).unwrap()).is_err());
        assert!(SubordinatorSpec::new(0.0, -1.0, JumpLaw::single(1.0).unwrap()).is_err());
        assert!(poissonized_corr(0.0, 0.5, 1.0).is_err());
        assert!(poissonized_corr(1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn exponent_examples() {
        let spec = jumpy();
        assert_eq!(laplace_exponent(&spec, 0.0).unwrap(), 0.0);
        let drift = SubordinatorSpec::pure_drift(1.0).unwrap();
        assert_eq!(laplace_exponent(&drift, 2.5).unwrap(), 2.5);
        let single = SubordinatorSpec::new(0.0, 1.0, JumpLaw::single(std::f64::consts::LN_2).unwrap()).unwrap();
        assert!((laplace_exponent(&single, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let log4 = SubordinatorSpec::new(0.0, 1.0, JumpLaw::single(4f64.ln()).unwrap()).unwrap();
        assert!((laplace_exponent(&log4, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn markov_corr_examples() {
        let spec = jumpy();
        let n = CorrelationIndex::new(vec![1, 2]);
        assert_eq!(markov_corr(&spec, &n, 0.0).unwrap(), 1.0);
        let drift = SubordinatorSpec::pure_drift(1.0).unwrap();
        let v = markov_corr(&drift, &CorrelationIndex::new(vec![2]), 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-16);
        let one = markov_corr(&spec, &n, 1.0).unwrap();
        let two = markov_corr(&spec, &n, 2.0).unwrap();
        assert!((two - one * one).abs() <= 4.0 * f64::EPSILON * two);
    }

    #[test]
    fn drift_only_increment_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = SubordinatorSpec::pure_drift(0.7).unwrap();
        assert_eq!(sample_increment(&spec, 2.0, &mut rng).unwrap(), 0.7 * 2.0);
    }

    #[test]
    fn pure_drift_step_replays_dw_step() {
        let part = PartitionSpec::exhaustive(vec![1.0, 0.5]).unwrap();
        let spec = SubordinatorSpec::pure_drift(1.0).unwrap();
        let m = [0.8, 2.0];
        let mut r1 = ChaCha8Rng::seed_from_u64(2);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = subordinated_dw_step(&m, &part, &spec, 1.0, &mut r1).unwrap();
            let b = dw_transition_step(&m, (-0.5f64).exp(), &part, &mut r2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn poissonized_examples() {
        assert_eq!(poissonized_corr(2.0, 0.5, 0.0).unwrap(), 1.0);
        assert_eq!(poissonized_corr(2.0, 1.0, 7.0).unwrap(), 1.0);
        assert!((poissonized_corr(2.0, 0.5, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
    }
}
