//! Power sums of derived zeros by three independent routes.
//!
//! * directly, from computed zeros;
//! * in closed form from the roots and the normalized weights, where
//!
//!   ```text
//!   (w_1^p + ... + w_{n-1}^p) / (n-1)
//!       = n/(n-1) * mean(z^p) - p/(n-1) * m_p
//!         + 1/(n-1) * sum' (-1)^s m_{h_1} ... m_{h_{s-1}} m_{q+r}
//!   ```
//!
//!   with `m_h = sum_j alpha_j z_j^h` and `sum'` over `q = 1..p-1`,
//!   `r = 0..p-q-1`, `s = 2..p-q-r+1` and compositions `h_1 + ... + h_{s-1}`
//!   of `p-q-r` into positive parts;
//! * as `tr((D - D L J)^p)` from the explicit matrix.

use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::CMatrix;
use crate::error::{Error, Result};
use crate::polynomial::{alpha, resolve_weights, RootPoly, WeightScheme};
use crate::rootfind::{derived_zeros, spectral_matrix};

pub const CLOSED_FORM_P_CAP: usize = 12;
pub const TRACE_SIZE_CAP: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSumReport {
    pub p: usize,
    pub direct: Complex64,
    pub lemma7: Complex64,
    pub trace_oracle: Complex64,
    pub max_pairwise_diff: f64,
}

/// `(1/m) sum points^p`.
pub fn direct_power_mean(points: &[Complex64], p: usize) -> Result<Complex64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("power mean of an empty list".into()));
    }
    let p = u32::try_from(p).map_err(|_| Error::PTooLarge { p, cap: u32::MAX as usize })?;
    let s: Complex64 = points.iter().map(|w| w.powu(p)).sum();
    Ok(s / points.len() as f64)
}

/// One `sum'` index tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaPrimeTerm {
    pub q: usize,
    pub r: usize,
    /// `h_1..h_{s-1}`; `s = parts.len() + 1`.
    pub parts: Vec<usize>,
}

impl SigmaPrimeTerm {
    pub fn s(&self) -> usize {
        self.parts.len() + 1
    }
}

/// Index tuples of `sum'` in lexicographic `(q, r, s, h)` order.
pub fn sigma_prime_terms(p: usize) -> Vec<SigmaPrimeTerm> {
    let mut out = Vec::new();
    for q in 1..p {
        for r in 0..p - q {
            let total = p - q - r;
            for s in 2..=total + 1 {
                let mut parts = Vec::with_capacity(s - 1);
                compositions(total, s - 1, &mut parts, &mut |h| {
                    out.push(SigmaPrimeTerm {
                        q,
                        r,
                        parts: h.to_vec(),
                    })
                });
            }
        }
    }
    out
}

/// Compositions of `total` into exactly `k` positive parts, lexicographic.
fn compositions(total: usize, k: usize, prefix: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if k == 0 {
        if total == 0 {
            emit(prefix);
        }
        return;
    }
    if total < k {
        return;
    }
    for first in 1..=total - (k - 1) {
        prefix.push(first);
        compositions(total - first, k - 1, prefix, emit);
        prefix.pop();
    }
}

/// Pairwise (tree) summation.
fn tree_sum(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        len => {
            let (a, b) = v.split_at(len / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Closed-form mean of the `p`-th powers of the zeros of `Q`.
pub fn lemma7_power_mean(poly: &RootPoly, lambdas: &[Complex64], p: usize) -> Result<Complex64> {
    if p == 0 || p > CLOSED_FORM_P_CAP {
        return Err(Error::PTooLarge {
            p,
            cap: CLOSED_FORM_P_CAP,
        });
    }
    let n = poly.degree();
    if n < 2 {
        return Err(Error::InvalidPolynomial("degree must be at least 2".into()));
    }
    if lambdas.len() != n {
        return Err(Error::InvalidArgument(format!("{} weights for degree {n}", lambdas.len())));
    }
    let alphas = alpha(lambdas)?;
    let roots = poly.roots();

    // m[h] = sum_j alpha_j z_j^h, h = 0..=p
    let mut moments = vec![Complex64::new(0.0, 0.0); p + 1];
    let mut power_sum = Complex64::new(0.0, 0.0);
    for (z, a) in roots.iter().zip(&alphas) {
        let mut zh = Complex64::new(1.0, 0.0);
        for m in moments.iter_mut() {
            *m += a * zh;
            zh *= z;
        }
        power_sum += z.powu(p as u32);
    }

    let terms: Vec<Complex64> = sigma_prime_terms(p)
        .into_iter()
        .map(|t| {
            let sign = if t.s() % 2 == 0 { 1.0 } else { -1.0 };
            let prod: Complex64 = t.parts.iter().map(|&h| moments[h]).product();
            prod * moments[t.q + t.r] * sign
        })
        .collect();

    let denom = (n - 1) as f64;
    Ok(power_sum / denom - moments[p] * (p as f64 / denom) + tree_sum(&terms) / denom)
}

/// `tr((D - D L J)^p)`, the sum of `p`-th powers of the zeros of `Q`.
pub fn trace_power_sum(poly: &RootPoly, lambdas: &[Complex64], p: usize) -> Result<Complex64> {
    let n = poly.degree();
    if n > TRACE_SIZE_CAP {
        return Err(Error::SizeTooLarge {
            n,
            cap: TRACE_SIZE_CAP,
        });
    }
    if p == 0 {
        return Err(Error::PTooLarge { p, cap: usize::MAX });
    }
    if lambdas.len() != n {
        return Err(Error::InvalidArgument(format!("{} weights for degree {n}", lambdas.len())));
    }
    let alphas = alpha(lambdas)?;
    let m = spectral_matrix(poly.roots(), &alphas);
    let mut acc: CMatrix = m.clone();
    for _ in 1..p {
        acc = acc.matmul(&m);
    }
    Ok(acc.trace())
}

/// All three routes side by side, as means over the `n - 1` zeros.
pub fn power_sum_report(poly: &RootPoly, scheme: &WeightScheme, p: usize) -> Result<PowerSumReport> {
    let lambdas = resolve_weights(poly, scheme)?;
    let zeros = derived_zeros(poly, scheme)?.zeros;
    let direct = direct_power_mean(&zeros, p)?;
    let lemma7 = lemma7_power_mean(poly, &lambdas, p)?;
    let trace_oracle = trace_power_sum(poly, &lambdas, p)? / (poly.degree() - 1) as f64;
    let max_pairwise_diff = (direct - lemma7)
        .norm()
        .max((direct - trace_oracle).norm())
        .max((lemma7 - trace_oracle).norm());
    Ok(PowerSumReport {
        p,
        direct,
        lemma7,
        trace_oracle,
        max_pairwise_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_dist::{CircleLaw, SeedSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pm1() -> RootPoly {
        RootPoly::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    #[test]
    fn direct_means() {
        assert_eq!(direct_power_mean(&[c(1.0, 0.0); 3], 5).unwrap(), c(1.0, 0.0));
        assert_eq!(direct_power_mean(&[c(1.0, 0.0), c(-1.0, 0.0)], 2).unwrap(), c(1.0, 0.0));
        assert!(direct_power_mean(&[c(0.0, 1.0), c(0.0, -1.0)], 3).unwrap().norm() < 1e-15);
        assert!(direct_power_mean(&[], 1).is_err());
    }

    #[test]
    fn closed_form_small_cases() {
        let ones = vec![c(1.0, 0.0); 2];
        assert!(lemma7_power_mean(&pm1(), &ones, 1).unwrap().norm() < 1e-15);
        let polar = vec![c(1.0, 0.0), c(3.0, 0.0)];
        assert!((lemma7_power_mean(&pm1(), &polar, 1).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(lemma7_power_mean(&pm1(), &ones, 13), Err(Error::PTooLarge { .. })));
        assert!(matches!(lemma7_power_mean(&pm1(), &ones, 0), Err(Error::PTooLarge { .. })));
    }

    #[test]
    fn trace_small_cases() {
        let ones = vec![c(1.0, 0.0); 2];
        assert!(trace_power_sum(&pm1(), &ones, 1).unwrap().norm() < 1e-15);
        let triple = RootPoly::new(vec![c(1.0, 0.0); 3]).unwrap();
        let t = trace_power_sum(&triple, &[c(1.0, 0.0); 3], 2).unwrap();
        assert!((t - c(2.0, 0.0)).norm() < 1e-14);
        let big = RootPoly::new(vec![c(1.0, 0.0); 257]).unwrap();
        assert!(matches!(
            trace_power_sum(&big, &vec![c(1.0, 0.0); 257], 1),
            Err(Error::SizeTooLarge { .. })
        ));
    }

    #[test]
    fn p_one_has_no_sigma_prime() {
        assert!(sigma_prime_terms(1).is_empty());
        let roots = CircleLaw::uniform().sample(7, SeedSpec::new(2, 0));
        let p = RootPoly::new(roots.clone()).unwrap();
        let lam: Vec<Complex64> = roots.iter().map(|z| c(2.0, 0.5) - z).collect();
        let alphas = alpha(&lam).unwrap();
        let n = roots.len() as f64;
        let mean: Complex64 = roots.iter().sum::<Complex64>() / n;
        let m1: Complex64 = roots.iter().zip(&alphas).map(|(z, a)| z * a).sum();
        let want = (mean * n - m1) / (n - 1.0);
        assert!((lemma7_power_mean(&p, &lam, 1).unwrap() - want).norm() < 1e-15);
    }

    /// Independent count: compositions of `t` into any number of positive
    /// parts, by recursion on the first part.
    fn count_all_compositions(t: usize) -> usize {
        if t == 0 {
            return 1;
        }
        (1..=t).map(|first| count_all_compositions(t - first)).sum()
    }

    #[test]
    fn sigma_prime_term_counts() {
        for p in 1..=12 {
            let mut want = 0;
            for q in 1..p {
                for r in 0..p - q {
                    want += count_all_compositions(p - q - r);
                    assert_eq!(count_all_compositions(p - q - r), 1 << (p - q - r - 1));
                }
            }
            assert_eq!(sigma_prime_terms(p).len(), want, "p={p}");
        }
    }

    #[test]
    fn sigma_prime_order_is_lexicographic() {
        let terms = sigma_prime_terms(5);
        let keys: Vec<(usize, usize, usize, Vec<usize>)> =
            terms.iter().map(|t| (t.q, t.r, t.s(), t.parts.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(terms.iter().all(|t| t.parts.iter().sum::<usize>() == 5 - t.q - t.r));
    }

    #[test]
    fn report_examples() {
        let r = power_sum_report(&pm1(), &WeightScheme::Ordinary, 1).unwrap();
        assert!(r.direct.norm() < 1e-15 && r.lemma7.norm() < 1e-15 && r.trace_oracle.norm() < 1e-15);
        let r = power_sum_report(&pm1(), &WeightScheme::Polar(c(2.0, 0.0)), 1).unwrap();
        for v in [r.direct, r.lemma7, r.trace_oracle] {
            assert!((v - c(0.5, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn routes_agree_on_random_instances() {
        let law = CircleLaw::uniform();
        let roots = law.sample(8, SeedSpec::new(21, 0));
        let p = RootPoly::new(roots).unwrap();
        let r = power_sum_report(&p, &WeightScheme::Ordinary, 4).unwrap();
        assert!(r.max_pairwise_diff <= 1e-9, "{r:?}");

        let roots = law.sample(6, SeedSpec::new(22, 0));
        let p = RootPoly::new(roots).unwrap();
        let lam = resolve_weights(&p, &WeightScheme::Polar(c(2.0, 1.0))).unwrap();
        let t = trace_power_sum(&p, &lam, 3).unwrap();
        let l7 = lemma7_power_mean(&p, &lam, 3).unwrap() * 5.0;
        assert!((t - l7).norm() <= 1e-10);

        let mut rng = SeedSpec::new(23, 0).rng();
        let roots = law.sample_with(10, &mut rng);
        let raw: Vec<f64> = (0..10).map(|_| 1.0 + 3.0 * rand::Rng::gen::<f64>(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let lam: Vec<f64> = raw.iter().map(|x| x * 10.0 / total).collect();
        let p = RootPoly::new(roots).unwrap();
        let r = power_sum_report(&p, &WeightScheme::SzNagy(lam), 5).unwrap();
        assert!(r.max_pairwise_diff <= 1e-8, "{r:?}");
    }
}
