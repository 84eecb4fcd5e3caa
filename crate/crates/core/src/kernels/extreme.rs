//! The extreme one-dimensional pair: `(X, Y)` with `Gamma(alpha, 1)` margins
//! and canonical correlations `z^n` (Kibble's bivariate gamma law).

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::specfun::quadrature::composite_legendre;
use crate::specfun::{laguerre_norm, ln_bessel_i, PolyIndex};

/// `ln` of the joint density at `(x, y)`:
///
/// `(alpha-1)/2 ln(xy/z) - (x+y)/(1-z) - ln Gamma(alpha) - ln(1-z) + ln I_{alpha-1}(2 sqrt(xyz)/(1-z))`.
pub fn extreme_pair_ln_density(x: f64, y: f64, z: f64, alpha: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return domain(format!("correlation parameter must lie in (0, 1), got {z}"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("gamma shape must be positive, got {alpha}"));
    }
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return domain(format!("density is evaluated on (0, inf)^2, got ({x}, {y})"));
    }
    let one_minus = 1.0 - z;
    let arg = 2.0 * (x * y * z).sqrt() / one_minus;
    let nu = alpha - 1.0;
    Ok(0.5 * nu * (x.ln() + y.ln() - z.ln()) - (x + y) / one_minus - ln_gamma(alpha) - one_minus.ln()
        + ln_bessel_i(nu, arg)?)
}

/// Joint density of the extreme pair, normalized to a probability density.
pub fn extreme_pair_density(x: f64, y: f64, z: f64, alpha: f64) -> Result<f64> {
    Ok(extreme_pair_ln_density(x, y, z, alpha)?.exp())
}

/// `E[exp(-s Y) | X = x] = (1 + s(1-z))^(-alpha) exp(-x s z / (1 + s(1-z)))`.
pub fn conditional_laplace_extreme(s: f64, x: f64, z: f64, alpha: f64) -> Result<f64> {
    if !(s >= 0.0 && x >= 0.0) {
        return domain(format!("need s, x >= 0, got ({s}, {x})"));
    }
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("correlation parameter must lie in [0, 1], got {z}"));
    }
    if !(alpha > 0.0) {
        return domain(format!("gamma shape must be positive, got {alpha}"));
    }
    let d = 1.0 + s * (1.0 - z);
    Ok((-alpha * d.ln() - x * s * z / d).exp())
}

/// Quadrature of the extreme density over `[0, upper]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityQuadrature {
    /// Total mass.
    pub mass: f64,
    /// `∫∫ ~L_1(x) ~L_1(y) p(x, y) / c_1`, which should equal `z`.
    pub rho1: f64,
}

/// Tensor composite Gauss-Legendre quadrature of the density with `panels`
/// panels of `points` nodes per axis. Accurate for `alpha >= 1`; smaller
/// shapes have an integrable singularity at the axes.
pub fn extreme_density_quadrature(
    z: f64,
    alpha: f64,
    upper: f64,
    panels: usize,
    points: usize,
) -> Result<DensityQuadrature> {
    let rule = composite_legendre(0.0, upper, panels, points)?;
    let c1 = laguerre_norm(PolyIndex::new(1, alpha)?)?;
    let mut mass = 0.0;
    let mut mixed = 0.0;
    for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
        let mut row_mass = 0.0;
        let mut row_mixed = 0.0;
        for (&y, &wy) in rule.nodes.iter().zip(&rule.weights) {
            let p = wy * extreme_pair_density(x, y, z, alpha)?;
            row_mass += p;
            row_mixed += p * (y - alpha);
        }
        mass += wx * row_mass;
        mixed += wx * (x - alpha) * row_mixed;
    }
    Ok(DensityQuadrature { mass, rho1: mixed / c1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_density(x: f64, alpha: f64) -> f64 {
        ((alpha - 1.0) * x.ln() - x - ln_gamma(alpha)).exp()
    }

    #[test]
    fn independence_limit() {
        for &alpha in &[0.5, 1.0, 3.0] {
            for &(x, y) in &[(0.3, 2.0), (1.0, 1.0), (5.0, 0.1)] {
                let got = extreme_pair_density(x, y, 1e-8, alpha).unwrap();
                let want = gamma_density(x, alpha) * gamma_density(y, alpha);
                assert!((got - want).abs() < 1e-6, "alpha={alpha} ({x},{y})");
            }
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = extreme_pair_density(0.7, 3.1, 0.4, 2.2).unwrap();
        let b = extreme_pair_density(3.1, 0.7, 0.4, 2.2).unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn exponential_margins_closed_form() {
        // alpha = 1: p = exp(-(x+y)/(1-z)) I_0(2 sqrt(xyz)/(1-z)) / (1-z).
        let (x, y, z): (f64, f64, f64) = (1.3, 0.4, 0.6);
        let arg = 2.0 * (x * y * z).sqrt() / (1.0 - z);
        let want = (-(x + y) / (1.0 - z)).exp() * crate::specfun::bessel_i(0.0, arg).unwrap() / (1.0 - z);
        let got = extreme_pair_density(x, y, z, 1.0).unwrap();
        assert!((got - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn quadrature_mass_and_correlation() {
        for &z in &[0.2, 0.5, 0.8] {
            let q = extreme_density_quadrature(z, 1.0, 40.0, 40, 20).unwrap();
            assert!((q.mass - 1.0).abs() < 1e-6, "z={z} mass={}", q.mass);
            assert!((q.rho1 - z).abs() < 1e-6, "z={z} rho1={}", q.rho1);
        }
    }

    #[test]
    fn integrating_laplace_kernel_against_conditional_density() {
        // ∫ exp(-s y) p(x, y) dy / gamma(x) equals the conditional transform.
        let (x, z, alpha, s) = (2.0, 0.5, 1.0, 1.0);
        let rule = composite_legendre(0.0, 60.0, 60, 20).unwrap();
        let num = rule.integrate(|y| (-s * y).exp() * extreme_pair_density(x, y, z, alpha).unwrap());
        let got = num / gamma_density(x, alpha);
        let want = conditional_laplace_extreme(s, x, z, alpha).unwrap();
        assert!((got - want).abs() < 1e-10);
        assert!((want - (2.0 / 3.0) * (-2.0f64 / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn conditional_transform_limits() {
        assert_eq!(conditional_laplace_extreme(0.0, 3.0, 0.4, 2.0).unwrap(), 1.0);
        let v = conditional_laplace_extreme(1.5, 3.0, 0.0, 2.0).unwrap();
        assert!((v - 2.5f64.powf(-2.0)).abs() < 1e-15);
        assert!(conditional_laplace_extreme(1.0, 1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_density_arguments() {
        assert!(extreme_pair_density(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(extreme_pair_density(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(extreme_pair_density(0.0, 1.0, 0.5, 1.0).is_err());
    }
}
