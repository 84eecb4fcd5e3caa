mod common;

use common::{assert_rho, assert_z, idx};
use gcrm::dirichlet::*;
use gcrm::estimators::{estimate_canonical_corr, factorization_gap, moment_match_report, MeanAccumulator};
use gcrm::kernels::{CorrelationIndex, PartitionSpec};
use gcrm::samplers::{dw_transition_step, par_generate, sample_gamma_vector, PairBatch};
use gcrm::subordination::*;

const N: usize = 1_000_000;

fn mean_samples(spec: &DirichletMeanSpec, n: usize, seed: u64) -> Vec<f64> {
    par_generate(n, seed, |rng| sample_dirichlet_mean(spec, DEFAULT_EPS, rng)).unwrap()
}

#[test]
fn stick_breaking_matches_moment_recursion() {
    let configs = [
        (0.5, vec![(0.0, 0.5), (1.0, 0.5)]),
        (2.0, vec![(0.1, 0.2), (0.6, 0.5), (0.95, 0.3)]),
        (7.5, vec![(0.2, 0.5), (0.9, 0.5)]),
    ];
    for (seed, (theta, atoms)) in configs.into_iter().enumerate() {
        let spec = DirichletMeanSpec::new(theta, BaseDistribution::new(atoms).unwrap()).unwrap();
        let samples = mean_samples(&spec, 100_000, seed as u64);
        let exact = mean_moments(&spec, 5).unwrap();
        let report = moment_match_report(&samples, &exact, 5).unwrap();
        assert!(report.passes(), "theta={theta}: {:?}", report.failures().collect::<Vec<_>>());
    }
}

#[test]
fn shifted_exact_moments_are_flagged() {
    let spec = DirichletMeanSpec::new(1.0, BaseDistribution::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap()).unwrap();
    let samples = mean_samples(&spec, 100_000, 9);
    let mut exact = mean_moments(&spec, 3).unwrap();
    exact[0] += 0.1;
    let report = moment_match_report(&samples, &exact, 3).unwrap();
    assert!(report.entries[0].z_score.abs() > 5.0);
    assert!(!report.passes());
}

#[test]
fn markov_krein_identity() {
    let spec =
        DirichletMeanSpec::new(1.5, BaseDistribution::new(vec![(0.1, 0.3), (0.5, 0.3), (0.8, 0.4)]).unwrap()).unwrap();
    for (seed, lam) in [-2.0, -0.5, 0.5, 1.1].into_iter().enumerate() {
        let mut rng = gcrm::samplers::stream(seed as u64, 0);
        let gap = stieltjes_identity_gap(&spec, lam, 100_000, &mut rng).unwrap();
        assert_z(gap.lhs, gap.rhs, gap.std_error, &format!("lambda={lam}"));
    }
}

#[test]
fn increments_mean_and_laplace() {
    let spec = SubordinatorSpec::new(0.4, 1.5, JumpLaw::new(vec![(0.3, 0.5), (1.2, 0.5)]).unwrap()).unwrap();
    let t = 1.3;
    let draws = par_generate(N, 3, |rng| sample_increment(&spec, t, rng)).unwrap();
    let mut mean = MeanAccumulator::default();
    draws.iter().for_each(|&s| mean.push(s));
    assert_z(mean.mean(), t * (0.4 + 1.5 * 0.75), mean.std_error(), "increment mean");
    for u in [1.0, 2.0] {
        let mut acc = MeanAccumulator::default();
        draws.iter().for_each(|&s| acc.push((-u * s).exp()));
        let exact = (-t * laplace_exponent(&spec, u).unwrap()).exp();
        assert_z(acc.mean(), exact, acc.std_error(), "increment laplace");
    }
}

fn subordinated_batch(part: &PartitionSpec, spec: &SubordinatorSpec, times: &[f64], n: usize, seed: u64) -> PairBatch {
    PairBatch::generate(n, part.dim(), seed, "subordinated", |rng| {
        let x = sample_gamma_vector(part, rng);
        let mut y = x.clone();
        for &t in times {
            y = subordinated_dw_step(&y, part, spec, t, rng)?;
        }
        Ok((x, y))
    })
    .unwrap()
}

fn log4_spec() -> SubordinatorSpec {
    SubordinatorSpec::new(0.0, 1.0, JumpLaw::single(4f64.ln()).unwrap()).unwrap()
}

#[test]
fn subordinated_correlations_follow_markov_corr() {
    let part = PartitionSpec::exhaustive(vec![1.0, 1.0]).unwrap();
    let spec = log4_spec();
    let batch = subordinated_batch(&part, &spec, &[1.0], N, 7);
    assert_rho(&batch, &part, &[1, 0], (-0.5f64).exp());
    for n in [[0, 1], [1, 1], [2, 0]] {
        assert_rho(&batch, &part, &n, markov_corr(&spec, &idx(&n), 1.0).unwrap());
    }
}

#[test]
fn pure_drift_matches_dw_in_law() {
    let part = PartitionSpec::exhaustive(vec![0.5, 1.5]).unwrap();
    let spec = SubordinatorSpec::pure_drift(1.0).unwrap();
    let sub = subordinated_batch(&part, &spec, &[1.0], N, 8);
    let dw = PairBatch::generate(N, 2, 9, "dw", |rng| {
        let x = sample_gamma_vector(&part, rng);
        let y = dw_transition_step(&x, (-0.5f64).exp(), &part, rng)?;
        Ok((x, y))
    })
    .unwrap();
    for n in [[1, 0], [1, 1]] {
        let (a, sa) = estimate_canonical_corr(&sub, &part, &idx(&n)).unwrap();
        let (b, sb) = estimate_canonical_corr(&dw, &part, &idx(&n)).unwrap();
        assert_z(a - b, 0.0, (sa * sa + sb * sb).sqrt(), "drift vs dw");
    }
}

#[test]
fn chained_steps_match_single_step() {
    let part = PartitionSpec::exhaustive(vec![1.0, 1.0]).unwrap();
    let spec = SubordinatorSpec::new(0.5, 1.0, JumpLaw::single(0.8).unwrap()).unwrap();
    let chained = subordinated_batch(&part, &spec, &[0.4, 0.6], N, 10);
    let single = subordinated_batch(&part, &spec, &[1.0], N, 11);
    let exact = markov_corr(&spec, &idx(&[1, 0]), 1.0).unwrap();
    let (a, sa) = estimate_canonical_corr(&chained, &part, &idx(&[1, 0])).unwrap();
    let (b, sb) = estimate_canonical_corr(&single, &part, &idx(&[1, 0])).unwrap();
    assert_z(a, exact, sa, "chained");
    assert_z(b, exact, sb, "single");
    assert_z(a - b, 0.0, (sa * sa + sb * sb).sqrt(), "chained vs single");
}

#[test]
fn merge_degeneracy_of_subordinated_pairs() {
    // rho_(j, n-j) depends only on n.
    let part = PartitionSpec::exhaustive(vec![1.0, 2.0]).unwrap();
    let spec = SubordinatorSpec::new(0.2, 1.0, JumpLaw::single(1.0).unwrap()).unwrap();
    let batch = subordinated_batch(&part, &spec, &[1.0], N, 12);
    for n in 1..=2 {
        let exact = markov_corr(&spec, &CorrelationIndex::unit(2, 0, n), 1.0).unwrap();
        for j in 0..=n {
            assert_rho(&batch, &part, &[j, n - j], exact);
        }
    }
}

#[test]
fn factorization_discriminates_crm_pairs() {
    let part = PartitionSpec::exhaustive(vec![1.0, 1.0]).unwrap();
    let drift = subordinated_batch(&part, &SubordinatorSpec::pure_drift(1.0).unwrap(), &[1.0], N, 13);
    let g = factorization_gap(&drift, &part, 0, 1).unwrap();
    assert!(g.z_score().abs() <= 5.0, "{g:?}");
    let jumpy = subordinated_batch(&part, &log4_spec(), &[1.0], N, 14);
    let g = factorization_gap(&jumpy, &part, 0, 1).unwrap();
    assert!(g.z_score() > 5.0, "{g:?}");
    let exact_gap = (-0.75f64).exp() - (-1.0f64).exp();
    assert_z(g.gap, exact_gap, g.std_error, "gap value");
}

#[test]
fn poisson_clock_chain_matches_embedding() {
    let part = PartitionSpec::exhaustive(vec![1.0]).unwrap();
    let (gamma_rate, z_step, t) = (2.0, 0.5, 1.0);
    let batch = PairBatch::generate(N, 1, 15, "clock", |rng| {
        let x = sample_gamma_vector(&part, rng);
        let y = poisson_clock_chain(&x, &part, gamma_rate, z_step, t, rng)?;
        Ok((x, y))
    })
    .unwrap();
    for n in 1..=2 {
        let rho_step = z_step.powi(n as i32);
        assert_rho(&batch, &part, &[n], poissonized_corr(gamma_rate, rho_step, t).unwrap());
    }
}
