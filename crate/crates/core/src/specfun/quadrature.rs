//! Gauss rules used by the analytic checks.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{laguerre_tilde_with_derivative, ln_laguerre_norm, PolyIndex};
use crate::error::{domain, Result};

/// Nodes and weights of a Gauss rule; `weights` sum to the mass of the
/// underlying measure.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `points`-node Gauss rule for the probability measure `Gamma(alpha, 1)`,
/// exact for polynomials of degree `2 * points - 1`.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished
/// by Newton steps on the monic Laguerre polynomial. Weights come from the
/// Christoffel sum over normalized polynomials, so they keep full relative
/// accuracy even when they are tiny.
pub fn gauss_laguerre(alpha: f64, points: usize) -> Result<GaussRule> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("gamma shape must be positive, got {alpha}"));
    }
    if points == 0 || points > 150 {
        return domain(format!("gauss-laguerre supports 1..=150 points, got {points}"));
    }
    let mut jacobi = DMatrix::<f64>::zeros(points, points);
    for k in 0..points {
        jacobi[(k, k)] = 2.0 * k as f64 + alpha;
        if k + 1 < points {
            let kf = (k + 1) as f64;
            let off = (kf * (kf + alpha - 1.0)).sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let top = PolyIndex { n: points, alpha };
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = laguerre_tilde_with_derivative(top, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
    }

    let inv_norms: Vec<f64> = (0..points).map(|k| (-ln_laguerre_norm(PolyIndex { n: k, alpha })).exp()).collect();
    let mut values = Vec::with_capacity(points);
    let weights = nodes
        .iter()
        .map(|&x| {
            super::laguerre_tilde_all(alpha, points - 1, x, &mut values);
            let christoffel: f64 = values.iter().zip(&inv_norms).map(|(p, c)| p * p * c).sum();
            1.0 / christoffel
        })
        .collect();
    Ok(GaussRule { nodes, weights })
}

/// `points`-node Gauss-Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(lo: f64, hi: f64, points: usize) -> Result<GaussRule> {
    if points == 0 {
        return domain("gauss-legendre needs at least one point");
    }
    if !(hi > lo) {
        return domain(format!("empty interval [{lo}, {hi}]"));
    }
    let n = points;
    let mid = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let prev = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - prev) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    Ok(GaussRule { nodes, weights })
}

/// Composite Gauss-Legendre rule: `panels` equal panels on `[lo, hi]`.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, points: usize) -> Result<GaussRule> {
    if panels == 0 {
        return domain("composite rule needs at least one panel");
    }
    let width = (hi - lo) / panels as f64;
    let mut rule = GaussRule { nodes: Vec::new(), weights: Vec::new() };
    for p in 0..panels {
        let a = lo + width * p as f64;
        let panel = gauss_legendre(a, a + width, points)?;
        rule.nodes.extend(panel.nodes);
        rule.weights.extend(panel.weights);
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_rule_reproduces_gamma_moments() {
        for &alpha in &[0.5, 1.0, 2.5] {
            let rule = gauss_laguerre(alpha, 12).unwrap();
            assert_eq!(rule.len(), 12);
            let mut want = 1.0;
            for k in 0..=23 {
                let got = rule.integrate(|x| x.powi(k));
                assert!((got - want).abs() <= 1e-12 * want, "alpha={alpha} k={k}");
                want *= alpha + k as f64;
            }
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(-1.0, 3.0, 7).unwrap();
        for k in 0..=13 {
            let got = rule.integrate(|x| x.powi(k));
            let want = (3f64.powi(k + 1) - (-1f64).powi(k + 1)) / (k + 1) as f64;
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "k={k}");
        }
        let single = gauss_legendre(0.0, 2.0, 1).unwrap();
        assert!((single.nodes[0] - 1.0).abs() < 1e-15);
        assert!((single.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn composite_rule_integrates_exponential() {
        let rule = composite_legendre(0.0, 10.0, 10, 10).unwrap();
        let got = rule.integrate(|x| (-x).exp());
        assert!((got - (1.0 - (-10f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gauss_laguerre(0.0, 4).is_err());
        assert!(gauss_laguerre(1.0, 0).is_err());
        assert!(gauss_legendre(1.0, 1.0, 3).is_err());
    }
}
