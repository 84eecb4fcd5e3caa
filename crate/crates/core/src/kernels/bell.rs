//! Partial Bell polynomial forms of `rho_n` for deterministic and
//! random-constant kernels, kept for side-by-side comparison with the
//! moment recursion.
//!
//! Two argument conventions are evaluated per cell, both of the form
//! `rho_{n e_i} = sum_k B_{n,k}(x_1, ..., x_{n-k+1}) / (alpha_i)_n`:
//!
//! * `literal`: `x_j = j! c m_j`, with the total mass `c`;
//! * `yamato`: `x_j = (j-1)! alpha_i m_j`, the Ewens-type expansion of
//!   Dirichlet mean moments.
//!
//! Only the second agrees with the recursion; the first already fails for
//! the constant kernel at `n = 2`.

use super::{canonical_corr_exact, check_index, CorrelationIndex, DirectingKernel, PartitionSpec};
use crate::dirichlet::BaseDistribution;
use crate::error::{domain, Result};
use crate::specfun::{bell_partial, ln_factorial, pochhammer};

#[derive(Debug, Clone, PartialEq)]
pub struct BellComparison {
    pub index: CorrelationIndex,
    pub literal: f64,
    pub yamato: f64,
    pub exact: f64,
}

fn bell_sum(n: usize, weight: f64, factorial_shift: usize, moment: impl Fn(usize) -> f64) -> Result<f64> {
    let args: Vec<f64> = (1..=n).map(|j| ln_factorial(j - factorial_shift).exp() * weight * moment(j)).collect();
    let mut acc = 0.0;
    for k in 1..=n {
        acc += bell_partial(n, k, &args[..n - k + 1])?;
    }
    Ok(acc)
}

/// Both Bell forms for one cell with moments `moment(j) = E[Q^j]`.
fn cell_forms(n: usize, alpha: f64, c: f64, moment: impl Fn(usize) -> f64 + Copy) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((1.0, 1.0));
    }
    let norm = pochhammer(alpha, n)?;
    let literal = bell_sum(n, c, 0, moment)? / norm;
    let yamato = bell_sum(n, alpha, 1, moment)? / norm;
    Ok((literal, yamato))
}

fn product_forms(
    part: &PartitionSpec,
    n: &CorrelationIndex,
    cell_base: impl Fn(usize) -> BaseDistribution,
) -> Result<(f64, f64)> {
    let mut literal = 1.0;
    let mut yamato = 1.0;
    for (cell, &k) in n.as_slice().iter().enumerate() {
        let base = cell_base(cell);
        let (l, y) = cell_forms(k, part.alphas()[cell], part.total_mass(), |j| base.moment(j))?;
        literal *= l;
        yamato *= y;
    }
    Ok((literal, yamato))
}

/// Evaluates both Bell forms of `rho_n` next to the exact value.
///
/// For a random constant with finite law the forms are averaged over the
/// atoms of `Z`. The common-component kernel has no deterministic per-cell
/// base and is rejected.
pub fn bell_form_comparison(
    part: &PartitionSpec,
    kernel: &DirectingKernel,
    n: &CorrelationIndex,
) -> Result<BellComparison> {
    kernel.validate(part)?;
    check_index(part, n)?;
    if n.total() > 60 {
        return domain("bell comparison is limited to |n| <= 60");
    }
    let (literal, yamato) = match kernel {
        DirectingKernel::DegenerateConstant(z) => {
            let base = BaseDistribution::point_mass(*z)?;
            product_forms(part, n, |_| base.clone())?
        }
        DirectingKernel::PerCellDistribution(bases) => product_forms(part, n, |i| bases[i].clone())?,
        DirectingKernel::RandomConstant(super::ConstantLaw::Finite(law)) => {
            let mut acc = (0.0, 0.0);
            for &(z, w) in law.atoms() {
                let base = BaseDistribution::point_mass(z)?;
                let (l, y) = product_forms(part, n, |_| base.clone())?;
                acc.0 += w * l;
                acc.1 += w * y;
            }
            acc
        }
        _ => return domain("bell forms need a kernel with finitely many deterministic cell laws"),
    };
    let exact = canonical_corr_exact(part, kernel, n)?;
    Ok(BellComparison { index: n.clone(), literal, yamato, exact })
}
