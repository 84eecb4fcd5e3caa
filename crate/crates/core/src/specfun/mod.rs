//! Special functions behind the exact computations: Pochhammer symbols,
//! monic Laguerre polynomials orthogonal for `Gamma(alpha, 1)`, their norms
//! and Laplace transforms, modified Bessel `I`, and partial exponential Bell
//! polynomials.
//!
//! Factorial-type products are accumulated as sums of logarithms and only
//! exponentiated at the end.

pub mod quadrature;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, range, Result};

/// Largest `ln` value whose exponential is still a finite `f64`.
pub(crate) const LN_MAX: f64 = 709.782_712_893_384;

/// Degree and gamma shape of a monic Laguerre polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyIndex {
    n: usize,
    alpha: f64,
}

impl PolyIndex {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return domain(format!("gamma shape must be positive and finite, got {alpha}"));
        }
        Ok(Self { n, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `ln (alpha)_n` for `alpha > 0`.
pub fn ln_pochhammer(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("pochhammer needs alpha > 0, got {alpha}"));
    }
    Ok(ln_pochhammer_unchecked(alpha, n))
}

pub(crate) fn ln_pochhammer_unchecked(alpha: f64, n: usize) -> f64 {
    if n <= 1024 {
        (0..n).map(|k| (alpha + k as f64).ln()).sum()
    } else {
        ln_gamma(alpha + n as f64) - ln_gamma(alpha)
    }
}

/// Ascending factorial `(alpha)_n = Gamma(alpha + n) / Gamma(alpha)`.
pub fn pochhammer(alpha: f64, n: usize) -> Result<f64> {
    let ln = ln_pochhammer(alpha, n)?;
    if ln > LN_MAX {
        return range(format!("({alpha})_{n} overflows f64"));
    }
    Ok(ln.exp())
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    ln_pochhammer_unchecked(1.0, n)
}

/// `C(n, k)` as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Monic Laguerre polynomial `~L_{n,alpha}(x)`, orthogonal for
/// `Gamma(alpha, 1)`, by the monic three-term recurrence
/// `P_{k+1} = (x - 2k - alpha) P_k - k (k + alpha - 1) P_{k-1}`.
pub fn laguerre_tilde(idx: PolyIndex, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..idx.n {
        let kf = k as f64;
        let next = (x - 2.0 * kf - idx.alpha) * cur - kf * (kf + idx.alpha - 1.0) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// All of `~L_{0,alpha}(x), ..., ~L_{n_max,alpha}(x)` in one recurrence pass.
pub fn laguerre_tilde_all(alpha: f64, n_max: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(n_max + 1);
    out.push(1.0);
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n_max {
        let kf = k as f64;
        let next = (x - 2.0 * kf - alpha) * cur - kf * (kf + alpha - 1.0) * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
}

/// Derivative companion of [`laguerre_tilde`]; returns `(P_n(x), P_n'(x))`.
pub(crate) fn laguerre_tilde_with_derivative(idx: PolyIndex, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..idx.n {
        let kf = k as f64;
        let a = x - 2.0 * kf - idx.alpha;
        let b = kf * (kf + idx.alpha - 1.0);
        let p_next = a * p - b * p_prev;
        let d_next = p + a * d - b * d_prev;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

pub(crate) fn ln_laguerre_norm(idx: PolyIndex) -> f64 {
    ln_factorial(idx.n) + ln_pochhammer_unchecked(idx.alpha, idx.n)
}

/// Squared norm `c_{n,alpha} = n! (alpha)_n = E[~L_{n,alpha}(X)^2]` under
/// `X ~ Gamma(alpha, 1)`.
pub fn laguerre_norm(idx: PolyIndex) -> Result<f64> {
    let ln = ln_laguerre_norm(idx);
    if ln > LN_MAX {
        return range(format!("laguerre norm of degree {} overflows f64", idx.n));
    }
    Ok(ln.exp())
}

/// `E[exp(-t X) ~L_{n,alpha}(X)]` under `X ~ Gamma(alpha, 1)`, which is
/// `(alpha)_n (-t / (1 + t))^n (1 + t)^(-alpha)`.
pub fn laguerre_laplace(idx: PolyIndex, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("laplace argument must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(if idx.n == 0 { 1.0 } else { 0.0 });
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let n = idx.n as f64;
    let ln_mag = ln_pochhammer_unchecked(idx.alpha, idx.n) + n * (t.ln() - t.ln_1p()) - idx.alpha * t.ln_1p();
    let sign = if idx.n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * ln_mag.exp())
}

/// Partial sum `sum_{n <= n_max} ~L_{n,alpha}(x) r^n / n!` of the
/// generating function.
pub fn laguerre_genfun_partial(alpha: f64, x: f64, r: f64, n_max: usize) -> Result<f64> {
    PolyIndex::new(0, alpha)?;
    if !(r.abs() < 1.0) {
        return domain(format!("generating function needs |r| < 1, got {r}"));
    }
    let mut polys = Vec::new();
    laguerre_tilde_all(alpha, n_max, x, &mut polys);
    let mut weight = 1.0;
    let mut sum = 0.0;
    for (n, p) in polys.iter().enumerate() {
        if n > 0 {
            weight *= r / n as f64;
        }
        sum += p * weight;
    }
    Ok(sum)
}

/// Closed form `(1 + r)^(-alpha) exp(x r / (1 + r))` of the generating
/// function.
pub fn laguerre_genfun(alpha: f64, x: f64, r: f64) -> Result<f64> {
    PolyIndex::new(0, alpha)?;
    if !(r.abs() < 1.0) {
        return domain(format!("generating function needs |r| < 1, got {r}"));
    }
    Ok((-alpha * r.ln_1p() + x * r / (1.0 + r)).exp())
}

/// Modified Bessel function of the first kind `I_nu(x)` by its power
/// series, for `nu > -1` and `0 <= x <= 700`.
pub fn bessel_i(nu: f64, x: f64) -> Result<f64> {
    if !(nu > -1.0) || !nu.is_finite() {
        return domain(format!("bessel order must exceed -1, got {nu}"));
    }
    if !(x >= 0.0) {
        return domain(format!("bessel argument must be nonnegative, got {x}"));
    }
    if x > 700.0 {
        return range(format!("bessel series not evaluated for x = {x} > 700"));
    }
    if x == 0.0 {
        return if nu == 0.0 {
            Ok(1.0)
        } else if nu > 0.0 {
            Ok(0.0)
        } else {
            range(format!("I_{nu}(0) is infinite"))
        };
    }
    let half = 0.5 * x;
    let quarter_sq = half * half;
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= quarter_sq / (k * (k + nu));
        sum += term;
        if term < 1e-16 * sum {
            break;
        }
    }
    Ok(sum)
}

/// `ln I_nu(x)` for `nu > -1`, `x > 0`. Uses the power series scaled by its
/// leading term up to `x = 600` and the large-argument expansion beyond.
pub fn ln_bessel_i(nu: f64, x: f64) -> Result<f64> {
    if !(nu > -1.0) || !nu.is_finite() {
        return domain(format!("bessel order must exceed -1, got {nu}"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log-bessel argument must be positive and finite, got {x}"));
    }
    if x <= 600.0 {
        let quarter_sq = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= quarter_sq / (k * (k + nu));
            sum += term;
            if term < 1e-16 * sum {
                break;
            }
        }
        return Ok(nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln());
    }
    let mu = 4.0 * nu * nu;
    if x < 10.0 * (mu + 1.0) {
        return range(format!("I_{nu}({x}) lies outside the asymptotic regime"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok(x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln())
}

/// Partial exponential Bell polynomial `B_{n,k}(x_1, ..., x_{n-k+1})` via
/// `B_{m,j} = sum_i C(m-1, i-1) x_i B_{m-i, j-1}`.
pub fn bell_partial(n: usize, k: usize, args: &[f64]) -> Result<f64> {
    if n == 0 {
        return domain("bell polynomial degree must be positive");
    }
    if k == 0 || k > n {
        return domain(format!("bell block count {k} outside [1, {n}]"));
    }
    if args.len() != n - k + 1 {
        return domain(format!("B_{{{n},{k}}} takes {} arguments, got {}", n - k + 1, args.len()));
    }
    // table[m][j] = B_{m,j}
    let mut table = vec![vec![0.0; k + 1]; n + 1];
    table[0][0] = 1.0;
    for j in 1..=k {
        for m in j..=n {
            let top = (m - j + 1).min(args.len());
            let mut acc = 0.0;
            for i in 1..=top {
                let below = table[m - i][j - 1];
                if below != 0.0 {
                    acc += binomial(m - 1, i - 1) * args[i - 1] * below;
                }
            }
            table[m][j] = acc;
        }
    }
    Ok(table[n][k])
}
