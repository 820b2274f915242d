//! Monic polynomials held as root multisets, and generalized derivatives
//!
//! ```text
//! Q(z) = P(z) * sum_j lambda_j / (z - z_j)
//! ```
//!
//! with `lambda_j = 1` (ordinary derivative), `lambda_j = xi - z_j` (polar
//! derivative with respect to `xi`) or positive `lambda_j` summing to `n`
//! (Sz.-Nagy generalized derivative).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::parse::{fmt_complex, fmt_real, parse_complex, parse_real};

/// `sum(lambda)` counts as zero below this fraction of `sum(|lambda|)`.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Tolerance on `sum(lambda) = n` for Sz.-Nagy weights.
pub const SZ_NAGY_SUM_TOL: f64 = 1e-9;
/// Closest approach to a root allowed when evaluating `R(z)`.
pub const POLE_TOL: f64 = 1e-14;
/// Largest degree expanded into coefficients.
pub const COEFF_DEGREE_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct RootPoly {
    roots: Vec<Complex64>,
}

impl RootPoly {
    pub fn new(roots: Vec<Complex64>) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::InvalidPolynomial("degree must be at least 1".into()));
        }
        if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPolynomial("non-finite root".into()));
        }
        Ok(Self { roots })
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    /// `P(z)` as a product of linear factors.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.roots.iter().map(|r| z - r).product()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightScheme {
    Ordinary,
    Polar(Complex64),
    SzNagy(Vec<f64>),
}

impl WeightScheme {
    /// Sz.-Nagy weights checked for positivity and `sum = len`.
    pub fn sz_nagy(lambdas: Vec<f64>) -> Result<Self> {
        check_sz_nagy(&lambdas)?;
        Ok(Self::SzNagy(lambdas))
    }
}

fn check_sz_nagy(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidScheme("Sz.-Nagy weights are empty".into()));
    }
    if let Some((i, l)) = lambdas
        .iter()
        .enumerate()
        .find(|(_, l)| !(l.is_finite() && **l > 0.0))
    {
        return Err(Error::InvalidScheme(format!("weight {i} = {l} is not positive")));
    }
    let n = lambdas.len() as f64;
    let total: f64 = lambdas.iter().sum();
    if (total - n).abs() > SZ_NAGY_SUM_TOL * n.max(1.0) {
        return Err(Error::InvalidScheme(format!(
            "Sz.-Nagy weights sum to {total}, expected {n}"
        )));
    }
    Ok(())
}

/// The `lambda_j` of `scheme` for the roots of `poly`.
pub fn resolve_weights(poly: &RootPoly, scheme: &WeightScheme) -> Result<Vec<Complex64>> {
    let n = poly.degree();
    let lambdas: Vec<Complex64> = match scheme {
        WeightScheme::Ordinary => vec![Complex64::new(1.0, 0.0); n],
        WeightScheme::Polar(xi) => poly.roots.iter().map(|z| xi - z).collect(),
        WeightScheme::SzNagy(l) => {
            if l.len() != n {
                return Err(Error::InvalidScheme(format!(
                    "{} Sz.-Nagy weights for degree {n}",
                    l.len()
                )));
            }
            check_sz_nagy(l)?;
            l.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        }
    };
    check_nondegenerate(&lambdas)?;
    Ok(lambdas)
}

fn check_nondegenerate(lambdas: &[Complex64]) -> Result<Complex64> {
    let total: Complex64 = lambdas.iter().sum();
    let abs_sum: f64 = lambdas.iter().map(|l| l.norm()).sum();
    if !(total.norm() > DEGENERATE_TOL * abs_sum) {
        return Err(Error::DegenerateWeights {
            sum_abs: total.norm(),
            abs_sum,
        });
    }
    Ok(total)
}

/// Normalized weights `alpha_j = lambda_j / sum(lambda)`.
pub fn alpha(lambdas: &[Complex64]) -> Result<Vec<Complex64>> {
    let total = check_nondegenerate(lambdas)?;
    Ok(lambdas.iter().map(|l| l / total).collect())
}

/// `R(z) = sum_j lambda_j / (z - z_j)`, so that `Q(z) = P(z) R(z)`.
pub fn log_derivative_value(
    poly: &RootPoly,
    lambdas: &[Complex64],
    z: Complex64,
) -> Result<Complex64> {
    if lambdas.len() != poly.degree() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for degree {}",
            lambdas.len(),
            poly.degree()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (index, (r, l)) in poly.roots.iter().zip(lambdas).enumerate() {
        let d = z - r;
        let distance = d.norm();
        if distance <= POLE_TOL {
            return Err(Error::PoleProximity { index, distance });
        }
        acc += l / d;
    }
    Ok(acc)
}

/// Ascending monic coefficients `[c_0, ..., c_{n-1}, 1]`.
///
/// Linear factors are multiplied pairwise in a balanced tree.
pub fn coefficients(poly: &RootPoly) -> Result<Vec<Complex64>> {
    let n = poly.degree();
    if n > COEFF_DEGREE_CAP {
        return Err(Error::DegreeTooLarge {
            degree: n,
            cap: COEFF_DEGREE_CAP,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let mut level: Vec<Vec<Complex64>> = poly.roots.iter().map(|r| vec![-r, one]).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => poly_mul(a, b),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    Ok(level.pop().expect("degree >= 1"))
}

pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Horner evaluation of ascending coefficients.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Ascending coefficients of the derivative.
pub fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Ordinary => write!(f, "ordinary"),
            WeightScheme::Polar(xi) => write!(f, "polar:{}", fmt_complex(*xi)),
            WeightScheme::SzNagy(l) => {
                let parts: Vec<String> = l.iter().map(|x| fmt_real(*x)).collect();
                write!(f, "sznagy:{}", parts.join(","))
            }
        }
    }
}

/// `ordinary`, `polar:re+imi` or `sznagy:l1,l2,...`.
impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("ordinary") {
            return Ok(Self::Ordinary);
        }
        if let Some(body) = s.strip_prefix("polar:") {
            return Ok(Self::Polar(parse_complex(body)?));
        }
        if let Some(body) = s.strip_prefix("sznagy:") {
            let l = body.split(',').map(parse_real).collect::<Result<Vec<_>>>()?;
            return Self::sz_nagy(l);
        }
        Err(Error::Parse(format!(
            "unknown scheme {s:?}; expected ordinary, polar:... or sznagy:..."
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pm1() -> RootPoly {
        RootPoly::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    #[test]
    fn weight_resolution() {
        assert_eq!(
            resolve_weights(&pm1(), &WeightScheme::Polar(c(2.0, 0.0))).unwrap(),
            vec![c(1.0, 0.0), c(3.0, 0.0)]
        );
        assert_eq!(
            resolve_weights(&pm1(), &WeightScheme::Ordinary).unwrap(),
            vec![c(1.0, 0.0); 2]
        );
        assert!(matches!(
            resolve_weights(&pm1(), &WeightScheme::Polar(c(0.0, 0.0))),
            Err(Error::DegenerateWeights { .. })
        ));
        assert!(resolve_weights(&pm1(), &WeightScheme::SzNagy(vec![1.0, 1.0, 1.0])).is_err());
        assert!(WeightScheme::sz_nagy(vec![1.5, 0.4]).is_err());
        assert!(WeightScheme::sz_nagy(vec![2.5, -0.5]).is_err());
    }

    #[test]
    fn rational_evaluation() {
        let p = pm1();
        let v = log_derivative_value(&p, &[c(1.0, 0.0); 2], c(0.0, 0.0)).unwrap();
        assert_eq!(v, c(0.0, 0.0));
        let v = log_derivative_value(&p, &[c(1.0, 0.0), c(3.0, 0.0)], c(0.5, 0.0)).unwrap();
        assert!(v.norm() < 1e-15);
        let one = RootPoly::new(vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            log_derivative_value(&one, &[c(1.0, 0.0)], c(1.0, 0.0)),
            Err(Error::PoleProximity { index: 0, .. })
        ));
    }

    #[test]
    fn coefficient_expansion() {
        assert_eq!(coefficients(&pm1()).unwrap(), vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let pi = RootPoly::new(vec![c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        assert_eq!(coefficients(&pi).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let cube = RootPoly::new(vec![c(1.0, 0.0); 3]).unwrap();
        assert_eq!(
            coefficients(&cube).unwrap(),
            vec![c(-1.0, 0.0), c(3.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)]
        );
        let big = RootPoly::new(vec![c(1.0, 0.0); 65]).unwrap();
        assert!(matches!(coefficients(&big), Err(Error::DegreeTooLarge { .. })));
    }

    #[test]
    fn alpha_normalization() {
        assert_eq!(alpha(&[c(1.0, 0.0); 2]).unwrap(), vec![c(0.5, 0.0); 2]);
        assert_eq!(
            alpha(&[c(1.0, 0.0), c(3.0, 0.0)]).unwrap(),
            vec![c(0.25, 0.0), c(0.75, 0.0)]
        );
        assert!(alpha(&[c(1.0, 0.0), c(-1.0, 0.0)]).is_err());
    }

    #[test]
    fn leading_coefficient_of_q_is_weight_sum() {
        // Q = sum_j lambda_j prod_{i != j} (z - z_i), expanded directly.
        let roots = vec![c(0.3, 0.1), c(-0.7, 0.2), c(0.1, -0.9), c(0.5, 0.5)];
        let p = RootPoly::new(roots.clone()).unwrap();
        let lam = resolve_weights(&p, &WeightScheme::Polar(c(2.0, 1.0))).unwrap();
        let mut q = vec![c(0.0, 0.0); roots.len()];
        for (j, l) in lam.iter().enumerate() {
            let others: Vec<Complex64> =
                roots.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, r)| *r).collect();
            let cj = coefficients(&RootPoly::new(others).unwrap()).unwrap();
            for (k, v) in cj.iter().enumerate() {
                q[k] += v * l;
            }
        }
        let total: Complex64 = lam.iter().sum();
        assert!((q[roots.len() - 1] - total).norm() < 1e-14);
    }

    #[test]
    fn grammar() {
        assert_eq!("ordinary".parse::<WeightScheme>().unwrap(), WeightScheme::Ordinary);
        assert_eq!(
            "polar:2+1i".parse::<WeightScheme>().unwrap(),
            WeightScheme::Polar(c(2.0, 1.0))
        );
        assert_eq!(
            "sznagy:1.5,0.5".parse::<WeightScheme>().unwrap(),
            WeightScheme::SzNagy(vec![1.5, 0.5])
        );
        assert!("sznagy:1,2".parse::<WeightScheme>().is_err());
        assert!("derivative".parse::<WeightScheme>().is_err());
        let s = WeightScheme::Polar(c(-0.25, -3.0));
        assert_eq!(s.to_string().parse::<WeightScheme>().unwrap(), s);
    }

    fn roots_strategy() -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((0.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..=20).prop_map(|v| {
            v.into_iter()
                .map(|(r, a, b)| {
                    let z = c(a, b);
                    if z.norm() > 0.0 { z / z.norm() * r } else { z }
                })
                .collect()
        })
    }

    /// Error amplification of Horner evaluation at `z`.
    fn horner_condition(p: &RootPoly, z: Complex64) -> f64 {
        let bound: f64 = p.roots().iter().map(|r| z.norm() + r.norm()).product();
        bound / p.eval(z).norm()
    }

    fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
    }

    proptest! {
        #[test]
        fn ordinary_weights_give_the_derivative(
            roots in roots_strategy(), zr in 0.0f64..2.0, za in 0.0f64..6.3
        ) {
            let z = Complex64::from_polar(zr, za);
            let p = RootPoly::new(roots).unwrap();
            prop_assume!(horner_condition(&p, z) < 1e5);
            let lam = resolve_weights(&p, &WeightScheme::Ordinary).unwrap();
            let lhs = p.eval(z) * log_derivative_value(&p, &lam, z).unwrap();
            let rhs = horner(&derivative_coeffs(&coefficients(&p).unwrap()), z);
            prop_assert!(rel_close(lhs, rhs, 1e-9), "{} vs {}", lhs, rhs);
        }

        #[test]
        fn polar_identity(
            roots in roots_strategy(), zr in 0.0f64..2.0, za in 0.0f64..6.3,
            xr in -3.0f64..3.0, xim in -3.0f64..3.0
        ) {
            let z = Complex64::from_polar(zr, za);
            let xi = c(xr, xim);
            let p = RootPoly::new(roots).unwrap();
            prop_assume!(horner_condition(&p, z) < 1e5);
            let Ok(lam) = resolve_weights(&p, &WeightScheme::Polar(xi)) else {
                return Ok(());
            };
            let n = p.degree() as f64;
            let coeffs = coefficients(&p).unwrap();
            let lhs = horner(&coeffs, z) * n - (z - xi) * horner(&derivative_coeffs(&coeffs), z);
            let rhs = p.eval(z) * log_derivative_value(&p, &lam, z).unwrap();
            // Both sides carry cancellation of size n |P| (|z| + |xi| + 1) / dist.
            let dist = p.roots().iter().map(|r| (z - r).norm()).fold(f64::INFINITY, f64::min);
            let scale = p.eval(z).norm() * n * (z.norm() + xi.norm() + 1.0) / dist;
            prop_assert!((lhs - rhs).norm() <= 1e-9 * scale.max(lhs.norm()), "{} vs {}", lhs, rhs);
        }

        #[test]
        fn alpha_sums_to_one(
            l in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..30)
        ) {
            let lam: Vec<Complex64> = l.into_iter().map(|(a, b)| c(a, b)).collect();
            let total: Complex64 = lam.iter().sum();
            let abs_sum: f64 = lam.iter().map(|x| x.norm()).sum();
            prop_assume!(total.norm() >= 1e-3 * abs_sum);
            if let Ok(a) = alpha(&lam) {
                let s: Complex64 = a.iter().sum();
                prop_assert!((s - c(1.0, 0.0)).norm() <= 1e-12);
            }
        }
    }
}
