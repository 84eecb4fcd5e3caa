use gcrm::dirichlet::{mean_moments, sample_dirichlet_mean, stieltjes_identity_gap, DirichletMeanSpec};
use gcrm::estimators::{estimate_canonical_corr, estimate_many, factorization_gap, moment_match_report};
use gcrm::kernels::*;
use gcrm::samplers::*;
use gcrm::specfun::quadrature::gauss_laguerre;
use gcrm::specfun::{laguerre_genfun, laguerre_genfun_partial, laguerre_norm, laguerre_tilde, PolyIndex};
use gcrm::subordination::*;
use rand::Rng;

use crate::params::Params;
use crate::report::Row;
use crate::CliError;

pub const MC_SAMPLES: usize = 1_000_000;
pub const MOMENT_SAMPLES: usize = 100_000;
const MAX_ORTHOGONALITY_DEGREE: usize = 50;

/// Samples and seed of a Monte Carlo experiment, recorded on first use.
pub struct Run {
    pub seed: u64,
    pub samples: Option<usize>,
}

impl Run {
    fn samples(&self, p: &Params, default: usize) -> usize {
        let n = self.samples.unwrap_or(default);
        p.record("samples", n);
        p.record("seed", self.seed);
        n
    }
}

/// Second and later batches of one run get their own seeds.
fn derived_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stationary<F>(part: &PartitionSpec, n: usize, seed: u64, step: F) -> gcrm::Result<PairBatch>
where
    F: Fn(&[f64], &mut StreamRng) -> gcrm::Result<Vec<f64>> + Sync,
{
    PairBatch::generate(n, part.dim(), seed, "chain", |rng| {
        let x = sample_gamma_vector(part, rng);
        let y = step(&x, rng)?;
        Ok((x, y))
    })
}

fn corr_rows(
    batch: &PairBatch,
    part: &PartitionSpec,
    indices: &[CorrelationIndex],
    exact: impl Fn(&CorrelationIndex) -> gcrm::Result<f64>,
) -> Result<Vec<Row>, CliError> {
    let est = estimate_many(batch, part, indices)?;
    indices.iter().zip(est).map(|(n, (e, se))| Ok(Row::monte_carlo(n.to_string(), e, exact(n)?, se))).collect()
}

pub fn orthogonality(p: &Params) -> Result<Vec<Row>, CliError> {
    let alpha = p.real("alpha", Some("1"))?;
    let max_degree = p.count("max-degree", Some("10"))?;
    if max_degree > MAX_ORTHOGONALITY_DEGREE {
        return Err(CliError::Config(format!("max-degree must be at most {MAX_ORTHOGONALITY_DEGREE}")));
    }
    let points = p.count("points", Some(&(max_degree + 1).to_string()))?;
    if points <= max_degree {
        return Err(CliError::Config(format!("points must exceed max-degree to integrate degree {}", 2 * max_degree)));
    }
    let rule = gauss_laguerre(alpha, points)?;
    let mut rows = Vec::new();
    for n in 0..=max_degree {
        let pn = PolyIndex::new(n, alpha)?;
        for m in 0..=max_degree {
            let pm = PolyIndex::new(m, alpha)?;
            let scale = (laguerre_norm(pn)? * laguerre_norm(pm)?).sqrt();
            let integral = rule.integrate(|x| laguerre_tilde(pn, x) * laguerre_tilde(pm, x)) / scale;
            rows.push(Row::tolerance(format!("({n},{m})"), integral, if n == m { 1.0 } else { 0.0 }, 1e-8));
        }
    }
    Ok(rows)
}

pub fn genfun_check(p: &Params) -> Result<Vec<Row>, CliError> {
    let alpha = p.real("alpha", Some("1"))?;
    let xs = p.reals("x", Some("0,2.5,5,7.5,10"))?;
    let rs = p.reals("r", Some("-0.5,-0.25,0.25,0.5"))?;
    let terms = p.count("terms", Some("60"))?;
    let mut rows = Vec::new();
    for &r in &rs {
        for &x in &xs {
            let partial = laguerre_genfun_partial(alpha, x, r, terms)?;
            rows.push(Row::tolerance(format!("r={r} x={x}"), partial, laguerre_genfun(alpha, x, r)?, 1e-8));
        }
    }
    Ok(rows)
}

pub fn pair_corr(p: &Params, run: &Run) -> Result<Vec<Row>, CliError> {
    let sampler = p.choice("sampler", None, &["a1", "a2", "a3", "a4", "dw", "general"])?;
    if sampler == "a1" {
        let alpha = p.real("alpha", Some("1.5"))?;
        let b = p.real("b", Some("1"))?;
        let part = PartitionSpec::exhaustive(vec![alpha])?;
        let indices = p.indices(1, 4)?;
        let n = run.samples(p, MC_SAMPLES);
        let batch = PairBatch::generate(n, 1, run.seed, "a1", |rng| {
            let (x, y) = algorithm_a1(alpha, b, rng)?;
            Ok((vec![x], vec![y]))
        })?;
        let z = b / (1.0 + b);
        return corr_rows(&batch, &part, &indices, |n| Ok(z.powi(n.total() as i32)));
    }

    let part = p.partition("1,1", matches!(sampler.as_str(), "a4" | "general"))?;
    let d = part.dim();
    if sampler == "a2" || sampler == "a3" {
        let b = p.real("b", Some("1"))?;
        let prob = if sampler == "a2" { p.real("pstar-prob", Some("1"))? } else { 1.0 };
        if !(0.0..=1.0).contains(&prob) {
            return Err(CliError::Config(format!("pstar-prob must lie in [0, 1], got {prob}")));
        }
        let indices = p.indices(d, 2)?;
        let n = run.samples(p, MC_SAMPLES);
        let batch = if sampler == "a2" {
            // P* puts mass prob on (b, ..., b) and the rest on 0.
            let pstar = |rng: &mut StreamRng| if rng.random::<f64>() < prob { vec![b; d] } else { vec![0.0; d] };
            PairBatch::generate(n, d, run.seed, "a2", |rng| algorithm_a2(&part, pstar, rng))?
        } else {
            stationary(&part, n, run.seed, |x, rng| algorithm_a3(b, x, &part, rng))?
        };
        let z = b / (1.0 + b);
        let exact = |n: &CorrelationIndex| {
            let t = n.total() as i32;
            Ok(prob * z.powi(t) + if t == 0 { 1.0 - prob } else { 0.0 })
        };
        return corr_rows(&batch, &part, &indices, exact);
    }

    let kernel = match sampler.as_str() {
        "a4" => DirectingKernel::RandomConstant(p.law("law", None)?),
        "dw" => DirectingKernel::DegenerateConstant(p.real("z", None)?),
        _ => p.kernel(d)?,
    };
    kernel.validate(&part)?;
    let directed =
        sampler == "general" && p.choice("construction", Some("general"), &["general", "directed"])? == "directed";
    let indices = p.indices(d, 2)?;
    let n = run.samples(p, MC_SAMPLES);
    let batch = match (&kernel, sampler.as_str()) {
        (DirectingKernel::RandomConstant(law), "a4") => {
            stationary(&part, n, run.seed, |x, rng| algorithm_a4(law, x, &part, rng))?
        }
        (DirectingKernel::DegenerateConstant(z), "dw") => {
            stationary(&part, n, run.seed, |x, rng| dw_transition_step(x, *z, &part, rng))?
        }
        _ => PairBatch::generate(n, d, run.seed, "kernel", |rng| {
            if directed {
                sample_pair_directed(&part, &kernel, rng)
            } else {
                sample_pair_general(&part, &kernel, rng)
            }
        })?,
    };
    corr_rows(&batch, &part, &indices, |n| canonical_corr_exact(&part, &kernel, n))
}

pub fn merge_check(p: &Params) -> Result<Vec<Row>, CliError> {
    let part = p.partition("1,1", true)?;
    let kernel = p.kernel(part.dim())?;
    let i = p.count("i", Some("0"))?;
    let j = p.count("j", Some("1"))?;
    let max_n = p.count("max-n", Some("6"))?;
    let merged_part = part.merge(i, j)?;
    let merged = kernel.merge(&part, i, j)?;
    (0..=max_n)
        .map(|n| {
            let direct =
                canonical_corr_exact(&merged_part, &merged, &CorrelationIndex::unit(merged_part.dim(), i.min(j), n))?;
            let mixed = merge_corr(&part, &kernel, n, i, j)?;
            Ok(Row::tolerance(format!("n={n}"), mixed, direct, 1e-10 * direct.abs()))
        })
        .collect()
}

fn dirichlet_spec(p: &Params) -> Result<DirichletMeanSpec, CliError> {
    let theta = p.real("theta", Some("1"))?;
    let base = p.base("base", Some("0:0.5,1:0.5"))?;
    Ok(DirichletMeanSpec::new(theta, base)?)
}

pub fn dirichlet_moments(p: &Params, run: &Run) -> Result<Vec<Row>, CliError> {
    let spec = dirichlet_spec(p)?;
    let max_order = p.count("max-order", Some("5"))?;
    let eps = p.real("eps", Some("1e-10"))?;
    let exact = mean_moments(&spec, max_order)?;
    let n = run.samples(p, MOMENT_SAMPLES);
    let samples = par_generate(n, run.seed, |rng| sample_dirichlet_mean(&spec, eps, rng))?;
    let report = moment_match_report(&samples, &exact, max_order)?;
    Ok(report.entries.into_iter().map(|e| Row::monte_carlo(e.label, e.estimate, e.exact, e.std_error)).collect())
}

pub fn stieltjes_check(p: &Params, run: &Run) -> Result<Vec<Row>, CliError> {
    let spec = dirichlet_spec(p)?;
    let lambdas = p.reals("lambda", Some("-1,0.5"))?;
    let n = run.samples(p, MOMENT_SAMPLES);
    lambdas
        .iter()
        .enumerate()
        .map(|(k, &lam)| {
            let mut rng = stream(run.seed, k as u64);
            let gap = stieltjes_identity_gap(&spec, lam, n, &mut rng)?;
            Ok(Row::monte_carlo(format!("lambda={lam}"), gap.lhs, gap.rhs, gap.std_error))
        })
        .collect()
}

pub fn density_check(p: &Params) -> Result<Vec<Row>, CliError> {
    let alpha = p.real("alpha", Some("1"))?;
    let zs = p.reals("z", Some("0.2,0.5,0.8"))?;
    let upper = p.real("upper", Some("40"))?;
    let panels = p.count("panels", Some("40"))?;
    let points = p.count("points", Some("20"))?;
    let mut rows = Vec::new();
    for &z in &zs {
        let q = extreme_density_quadrature(z, alpha, upper, panels, points)?;
        rows.push(Row::tolerance(format!("mass z={z}"), q.mass, 1.0, 1e-6));
        rows.push(Row::tolerance(format!("rho1 z={z}"), q.rho1, z, 1e-6));
    }
    Ok(rows)
}

pub fn laplace_ratio(p: &Params) -> Result<Vec<Row>, CliError> {
    let part = p.partition("1", true)?;
    let kernel = p.kernel(part.dim())?;
    let s = p.per_cell("s", Some("1"), part.dim())?;
    let t = p.per_cell("t", Some("1"), part.dim())?;
    let trunc = p.count("trunc", Some("120"))?;
    let series = joint_laplace_ratio(&part, &kernel, &s, &t, trunc)?;
    let closed = match &kernel {
        DirectingKernel::DegenerateConstant(z) => extreme_laplace_ratio(&part, *z, &s, &t)?,
        DirectingKernel::CommonComponent(eta) => common_component_laplace_ratio(&part, *eta, &s, &t)?,
        DirectingKernel::RandomConstant(ConstantLaw::Finite(base)) => {
            let mut acc = 0.0;
            for &(z, w) in base.atoms() {
                acc += w * extreme_laplace_ratio(&part, z, &s, &t)?;
            }
            acc
        }
        _ => {
            return Err(CliError::Config(
                "no closed form for this kernel; use constant, common or a finite random law".into(),
            ))
        }
    };
    Ok(vec![
        Row::tolerance("series", series.value, closed, 1e-8 * closed),
        // The tail bound plus a rounding allowance for the summation.
        Row::tolerance("truncation", closed - series.value, 0.0, series.tail_bound + 64.0 * f64::EPSILON * closed),
    ])
}

fn subordinator(p: &Params) -> Result<SubordinatorSpec, CliError> {
    let drift = p.real("drift", Some("0"))?;
    let rate = p.real("rate", Some("0"))?;
    let law = if rate > 0.0 || p.is_set("jump") { p.jumps("jump", None)? } else { JumpLaw::single(1.0)? };
    Ok(SubordinatorSpec::new(drift, rate, law)?)
}

pub fn subordinate(p: &Params, run: &Run) -> Result<Vec<Row>, CliError> {
    let mode = p.choice("mode", Some("marginal"), &["marginal", "semigroup", "factorization"])?;
    let spec = subordinator(p)?;
    let t = p.real("t", Some("1"))?;
    let step = |part: &PartitionSpec, n, seed, times: &[f64]| {
        stationary(part, n, seed, |x, rng| {
            let mut y = x.to_vec();
            for &dt in times {
                y = subordinated_dw_step(&y, part, &spec, dt, rng)?;
            }
            Ok(y)
        })
    };
    match mode.as_str() {
        "marginal" => {
            let part = p.partition("1", false)?;
            let indices = p.indices(part.dim(), 1)?;
            let n = run.samples(p, MC_SAMPLES);
            let batch = step(&part, n, run.seed, &[t])?;
            corr_rows(&batch, &part, &indices, |n| markov_corr(&spec, n, t))
        }
        "semigroup" => {
            let part = p.partition("1", false)?;
            let split = p.real("split", Some("0.4"))?;
            if !(split > 0.0 && split < 1.0) {
                return Err(CliError::Config(format!("split must lie in (0, 1), got {split}")));
            }
            let indices = p.indices(part.dim(), 1)?;
            let (t1, t2) = (split * t, (1.0 - split) * t);
            let mut rows = Vec::new();
            for n in &indices {
                let whole = markov_corr(&spec, n, t)?;
                let product = markov_corr(&spec, n, t1)? * markov_corr(&spec, n, t2)?;
                rows.push(Row::tolerance(format!("exact {n}"), product, whole, 4.0 * f64::EPSILON * whole));
            }
            let samples = run.samples(p, MC_SAMPLES);
            let chained = step(&part, samples, run.seed, &[t1, t2])?;
            let single = step(&part, samples, derived_seed(run.seed, 1), &[t])?;
            for n in &indices {
                let exact = markov_corr(&spec, n, t)?;
                let (a, sa) = estimate_canonical_corr(&chained, &part, n)?;
                let (b, sb) = estimate_canonical_corr(&single, &part, n)?;
                rows.push(Row::monte_carlo(format!("chained {n}"), a, exact, sa));
                rows.push(Row::monte_carlo(format!("single {n}"), b, exact, sb));
                rows.push(Row::monte_carlo(format!("chained-single {n}"), a - b, 0.0, (sa * sa + sb * sb).sqrt()));
            }
            Ok(rows)
        }
        _ => {
            let part = p.partition("1,1", false)?;
            if part.dim() != 2 {
                return Err(CliError::Config("factorization needs exactly two cells".into()));
            }
            let n = run.samples(p, MC_SAMPLES);
            let batch = step(&part, n, run.seed, &[t])?;
            let idx = |v: &[usize]| CorrelationIndex::new(v.to_vec());
            let indices = [idx(&[1, 0]), idx(&[0, 1]), idx(&[1, 1])];
            let mut rows = corr_rows(&batch, &part, &indices, |n| markov_corr(&spec, n, t))?;
            let exact_gap = markov_corr(&spec, &indices[2], t)?
                - markov_corr(&spec, &indices[0], t)? * markov_corr(&spec, &indices[1], t)?;
            let gap = factorization_gap(&batch, &part, 0, 1)?;
            rows.push(Row::monte_carlo("gap (1,1)", gap.gap, exact_gap, gap.std_error));
            Ok(rows)
        }
    }
}

pub fn poisson_embed(p: &Params, run: &Run) -> Result<Vec<Row>, CliError> {
    let part = p.partition("1", false)?;
    let gamma_rate = p.real("gamma-rate", Some("2"))?;
    let z_step = p.real("z-step", Some("0.5"))?;
    let t = p.real("t", Some("1"))?;
    let indices = p.indices(part.dim(), 2)?;
    let n = run.samples(p, MC_SAMPLES);
    let batch = stationary(&part, n, run.seed, |x, rng| poisson_clock_chain(x, &part, gamma_rate, z_step, t, rng))?;
    corr_rows(&batch, &part, &indices, |n| poissonized_corr(gamma_rate, z_step.powi(n.total() as i32), t))
}
