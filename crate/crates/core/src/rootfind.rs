//! Zeros of generalized derivatives.
//!
//! With `alpha_j = lambda_j / sum(lambda)` and `D = diag(z)`, the matrix
//! `D - D diag(alpha) J` (`J` all ones) has characteristic polynomial
//! `z * Q(z) / sum(lambda)`. The spectral backend takes its eigenvalues and
//! drops the one of smallest modulus. Above a size cutoff the same rational
//! function `R(z) = sum_j alpha_j / (z - z_j)` is solved by Aberth-Ehrlich
//! iteration, which costs `O(n^2)` per sweep instead of `O(n^3)` overall.
//! Either way every zero is polished by Newton steps on `R`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{eigenvalues, CMatrix};
use crate::error::{Error, Result};
use crate::polynomial::{alpha, resolve_weights, RootPoly, WeightScheme};

/// Zeros closer than this to an input root skip refinement and the defect
/// check; `R` has a pole there.
pub const ROOT_COINCIDENCE_TOL: f64 = 1e-12;
pub const DEFAULT_DEFECT_TOL: f64 = 1e-8;
pub const DEFAULT_SPECTRAL_CUTOFF: usize = 400;
/// Practical size limit of the dense eigenvalue route.
pub const SPECTRAL_SIZE_CAP: usize = 4000;

const ABERTH_MAX_SWEEPS: usize = 400;
const ROUNDING_ULPS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Backend {
    /// Eigenvalues of the rank-one-modified diagonal matrix, unpolished.
    Spectral,
    /// Eigenvalues polished by Newton steps on `R`.
    Refined,
    /// Aberth-Ehrlich iteration on `R`, polished by Newton steps.
    Aberth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    /// Spectral up to `spectral_cutoff` distinct roots, Aberth above.
    Auto,
    Spectral,
    Aberth,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootFindOptions {
    pub backend: BackendChoice,
    pub refine: bool,
    pub newton_steps: usize,
    pub defect_tol: f64,
    pub spectral_cutoff: usize,
}

impl Default for RootFindOptions {
    fn default() -> Self {
        Self {
            backend: BackendChoice::Auto,
            refine: true,
            newton_steps: 4,
            defect_tol: DEFAULT_DEFECT_TOL,
            spectral_cutoff: DEFAULT_SPECTRAL_CUTOFF,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedZeros {
    pub zeros: Vec<Complex64>,
    pub residual_max: f64,
    pub backend: Backend,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Containment {
    pub max_modulus: f64,
    pub pass: bool,
}

pub fn derived_zeros(poly: &RootPoly, scheme: &WeightScheme) -> Result<DerivedZeros> {
    derived_zeros_with(poly, scheme, &RootFindOptions::default())
}

pub fn derived_zeros_with(
    poly: &RootPoly,
    scheme: &WeightScheme,
    opts: &RootFindOptions,
) -> Result<DerivedZeros> {
    if poly.degree() < 2 {
        return Err(Error::InvalidPolynomial(
            "a derivative needs degree at least 2".into(),
        ));
    }
    let lambdas = resolve_weights(poly, scheme)?;
    let alphas = alpha(&lambdas)?;
    zeros_from_alpha(poly.roots(), &alphas, opts)
}

/// Zeros of `P^(k)`, by `k` successive ordinary derivatives.
pub fn kth_derivative_zeros(poly: &RootPoly, k: usize) -> Result<DerivedZeros> {
    kth_derivative_zeros_with(poly, k, &RootFindOptions::default())
}

pub fn kth_derivative_zeros_with(
    poly: &RootPoly,
    k: usize,
    opts: &RootFindOptions,
) -> Result<DerivedZeros> {
    let n = poly.degree();
    if k == 0 || k >= n {
        return Err(Error::OrderTooLarge { k, degree: n });
    }
    let mut current = poly.clone();
    let mut last = None;
    for _ in 0..k {
        let out = derived_zeros_with(&current, &WeightScheme::Ordinary, opts)?;
        current = RootPoly::new(out.zeros.clone())?;
        last = Some(out);
    }
    Ok(last.expect("k >= 1"))
}

/// Largest modulus and whether it stays within `bound + 1e-9`.
pub fn containment_check(zeros: &[Complex64], bound: f64) -> Containment {
    let max_modulus = zeros.iter().map(|w| w.norm()).fold(0.0, f64::max);
    Containment {
        max_modulus,
        pass: max_modulus <= bound + 1e-9,
    }
}

/// Scale-free defect `|sum a_j/(w-z_j)| / sum |a_j|/|w-z_j|`.
pub fn defect(roots: &[Complex64], alphas: &[Complex64], w: Complex64) -> f64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (z, a) in roots.iter().zip(alphas) {
        let d = w - z;
        num += a / d;
        den += a.norm() / d.norm();
    }
    if den == 0.0 {
        0.0
    } else {
        num.norm() / den
    }
}

/// Defect attainable in double precision at `w`: the change caused by moving
/// `w` (or the roots) by `ROUNDING_ULPS` units in the last place. Between two
/// roots a few `1e-9` apart this exceeds `DEFAULT_DEFECT_TOL` even for the
/// correctly rounded zero.
pub fn defect_floor(roots: &[Complex64], alphas: &[Complex64], w: Complex64) -> f64 {
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut size = w.norm();
    for (z, a) in roots.iter().zip(alphas) {
        let r = (w - z).norm();
        d1 += a.norm() / r;
        d2 += a.norm() / (r * r);
        size = size.max(z.norm());
    }
    if d1 == 0.0 {
        return 0.0;
    }
    ROUNDING_ULPS * f64::EPSILON * size * d2 / d1
}

/// `D - D diag(alpha) J`.
pub fn spectral_matrix(roots: &[Complex64], alphas: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(roots.len(), |i, j| {
        let corr = roots[i] * alphas[i];
        if i == j {
            roots[i] - corr
        } else {
            -corr
        }
    })
}

/// Distinct roots with merged weights; zeros of `Q` at repeated roots are
/// recovered exactly from the multiplicities.
struct Grouped {
    roots: Vec<Complex64>,
    weights: Vec<Complex64>,
    carried: Vec<Complex64>,
}

fn group_roots(roots: &[Complex64], alphas: &[Complex64]) -> Grouped {
    let key = |z: Complex64| ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits());
    let mut index: HashMap<(u64, u64), usize> = HashMap::with_capacity(roots.len());
    let mut out = Grouped {
        roots: Vec::with_capacity(roots.len()),
        weights: Vec::with_capacity(roots.len()),
        carried: Vec::new(),
    };
    for (z, a) in roots.iter().zip(alphas) {
        match index.get(&key(*z)) {
            Some(&i) => {
                out.weights[i] += a;
                out.carried.push(*z);
            }
            None => {
                index.insert(key(*z), out.roots.len());
                out.roots.push(*z);
                out.weights.push(*a);
            }
        }
    }
    out
}

fn zeros_from_alpha(
    roots: &[Complex64],
    alphas: &[Complex64],
    opts: &RootFindOptions,
) -> Result<DerivedZeros> {
    let g = group_roots(roots, alphas);
    let d = g.roots.len();

    let (mut fresh, mut backend) = if d == 1 {
        (Vec::new(), Backend::Spectral)
    } else {
        let use_aberth = match opts.backend {
            BackendChoice::Spectral => false,
            BackendChoice::Aberth => true,
            BackendChoice::Auto => d > opts.spectral_cutoff,
        };
        let aberth = if use_aberth {
            aberth(&g.roots, &g.weights).filter(|w| power_sums_consistent(&g.roots, &g.weights, w))
        } else {
            None
        };
        match aberth {
            Some(w) => (w, Backend::Aberth),
            None => {
                if d > SPECTRAL_SIZE_CAP {
                    return Err(Error::SizeTooLarge {
                        n: d,
                        cap: SPECTRAL_SIZE_CAP,
                    });
                }
                (spectral(&g.roots, &g.weights)?, Backend::Spectral)
            }
        }
    };

    if opts.refine && !fresh.is_empty() {
        newton_polish(&g.roots, &g.weights, &mut fresh, opts.newton_steps);
        if backend == Backend::Spectral {
            backend = Backend::Refined;
        }
    }

    let mut zeros = g.carried;
    zeros.append(&mut fresh);

    let mut residual_max = 0.0f64;
    let mut worst_excess = 0.0f64;
    for w in zeros.iter().filter(|w| nearest_distance(roots, **w) > ROOT_COINCIDENCE_TOL) {
        let dw = defect(roots, alphas, *w);
        residual_max = residual_max.max(dw);
        if !(dw <= opts.defect_tol.max(defect_floor(roots, alphas, *w))) {
            worst_excess = worst_excess.max(if dw.is_nan() { f64::INFINITY } else { dw });
        }
    }
    if worst_excess > 0.0 || residual_max.is_nan() {
        return Err(Error::RefinementFailure {
            defect: worst_excess.max(residual_max),
            tol: opts.defect_tol,
        });
    }
    Ok(DerivedZeros {
        zeros,
        residual_max,
        backend,
    })
}

fn nearest_distance(points: &[Complex64], w: Complex64) -> f64 {
    points
        .iter()
        .map(|z| (w - z).norm())
        .fold(f64::INFINITY, f64::min)
}

fn spectral(roots: &[Complex64], weights: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut ev = eigenvalues(spectral_matrix(roots, weights))?;
    let smallest = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    ev.remove(smallest);
    Ok(ev)
}

/// Newton on `R`, keeping a step only when it lowers the defect and stays
/// within half the gap to the nearest other zero.
fn newton_polish(roots: &[Complex64], weights: &[Complex64], zeros: &mut [Complex64], steps: usize) {
    let snapshot = zeros.to_vec();
    for (i, w) in zeros.iter_mut().enumerate() {
        if nearest_distance(roots, *w) <= ROOT_COINCIDENCE_TOL {
            continue;
        }
        let gap = snapshot
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, v)| (*v - *w).norm())
            .fold(f64::INFINITY, f64::min);
        let mut cur = *w;
        let mut cur_defect = defect(roots, weights, cur);
        for _ in 0..steps {
            if cur_defect == 0.0 {
                break;
            }
            let (r, dr) = rational_and_derivative(roots, weights, cur);
            if dr == Complex64::new(0.0, 0.0) {
                break;
            }
            let step = r / dr;
            if !(step.norm() < 0.5 * gap) {
                break;
            }
            let next = cur - step;
            if nearest_distance(roots, next) <= ROOT_COINCIDENCE_TOL {
                break;
            }
            let next_defect = defect(roots, weights, next);
            if !(next_defect < cur_defect) {
                break;
            }
            cur = next;
            cur_defect = next_defect;
        }
        *w = cur;
    }
}

fn rational_and_derivative(
    roots: &[Complex64],
    weights: &[Complex64],
    w: Complex64,
) -> (Complex64, Complex64) {
    let mut r = Complex64::new(0.0, 0.0);
    let mut dr = Complex64::new(0.0, 0.0);
    for (z, a) in roots.iter().zip(weights) {
        let inv = (w - z).inv();
        let t = a * inv;
        r += t;
        dr -= t * inv;
    }
    (r, dr)
}

/// Cheap screen against a lost zero: the first two power sums must match
/// their closed forms in the roots and weights.
fn power_sums_consistent(roots: &[Complex64], weights: &[Complex64], zeros: &[Complex64]) -> bool {
    let s1: Complex64 = roots.iter().sum();
    let s2: Complex64 = roots.iter().map(|z| z * z).sum();
    let m1: Complex64 = roots.iter().zip(weights).map(|(z, a)| z * a).sum();
    let m2: Complex64 = roots.iter().zip(weights).map(|(z, a)| z * z * a).sum();
    let want1 = s1 - m1;
    let want2 = s2 - m2 * 2.0 + m1 * m1;
    let got1: Complex64 = zeros.iter().sum();
    let got2: Complex64 = zeros.iter().map(|w| w * w).sum();
    let scale1: f64 = 1.0 + zeros.iter().map(|w| w.norm()).sum::<f64>();
    let scale2: f64 = 1.0 + zeros.iter().map(|w| w.norm_sqr()).sum::<f64>();
    zeros.iter().all(|w| w.re.is_finite() && w.im.is_finite())
        && (got1 - want1).norm() <= 1e-9 * scale1
        && (got2 - want2).norm() <= 1e-9 * scale2
}

/// Aberth-Ehrlich iteration for the `d - 1` zeros of `P(z) R(z)`, started
/// from midpoints of angularly consecutive roots. `None` if it stalls.
fn aberth(roots: &[Complex64], weights: &[Complex64]) -> Option<Vec<Complex64>> {
    let d = roots.len();
    let m = d - 1;
    let scale = roots.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);

    let mut w = aberth_start(roots, scale);
    let mut done = vec![false; m];
    let mut remaining = m;
    let zre: Vec<f64> = roots.iter().map(|z| z.re).collect();
    let zim: Vec<f64> = roots.iter().map(|z| z.im).collect();
    let are: Vec<f64> = weights.iter().map(|a| a.re).collect();
    let aim: Vec<f64> = weights.iter().map(|a| a.im).collect();

    for _ in 0..ABERTH_MAX_SWEEPS {
        if remaining == 0 {
            return Some(w);
        }
        for i in 0..m {
            if done[i] {
                continue;
            }
            let wi = w[i];
            // sum 1/(w-z), sum a/(w-z), sum a/(w-z)^2, sum |a|/|w-z|
            let (mut sp_re, mut sp_im) = (0.0, 0.0);
            let (mut r_re, mut r_im) = (0.0, 0.0);
            let (mut q_re, mut q_im) = (0.0, 0.0);
            let mut den = 0.0;
            let mut hit_pole = false;
            for j in 0..d {
                let dre = wi.re - zre[j];
                let dim = wi.im - zim[j];
                let n2 = dre * dre + dim * dim;
                if n2 == 0.0 {
                    hit_pole = true;
                    break;
                }
                let ire = dre / n2;
                let iim = -dim / n2;
                sp_re += ire;
                sp_im += iim;
                let tre = are[j] * ire - aim[j] * iim;
                let tim = are[j] * iim + aim[j] * ire;
                r_re += tre;
                r_im += tim;
                q_re += tre * ire - tim * iim;
                q_im += tre * iim + tim * ire;
                den += (are[j] * are[j] + aim[j] * aim[j]).sqrt() * (ire * ire + iim * iim).sqrt();
            }
            if hit_pole {
                w[i] = wi + Complex64::new(1e-7, 0.6e-7) * scale;
                continue;
            }
            let r = Complex64::new(r_re, r_im);
            if r.norm() <= 1e-15 * den {
                done[i] = true;
                remaining -= 1;
                continue;
            }
            // Q'/Q = P'/P + R'/R with R' = -sum a/(w-z)^2.
            let logder = Complex64::new(sp_re, sp_im) - Complex64::new(q_re, q_im) / r;
            let newton = logder.inv();
            let mut rep = Complex64::new(0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                if k != i {
                    rep += (wi - wk).inv();
                }
            }
            let corr = newton / (Complex64::new(1.0, 0.0) - newton * rep);
            if !(corr.re.is_finite() && corr.im.is_finite()) {
                w[i] = wi + Complex64::new(1e-7, 0.6e-7) * scale;
                continue;
            }
            w[i] = wi - corr;
            if corr.norm() <= 1e-14 * scale {
                done[i] = true;
                remaining -= 1;
            }
        }
    }
    (remaining == 0).then_some(w)
}

fn aberth_start(roots: &[Complex64], scale: f64) -> Vec<Complex64> {
    let d = roots.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| roots[a].arg().total_cmp(&roots[b].arg()));
    // Midpoints of cyclic neighbours, dropping the widest angular gap.
    let gaps: Vec<f64> = (0..d)
        .map(|k| {
            let a = roots[order[k]].arg();
            let b = roots[order[(k + 1) % d]].arg();
            let g = b - a;
            if k + 1 == d {
                g + std::f64::consts::TAU
            } else {
                g
            }
        })
        .collect();
    let widest = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let golden = 2.399_963_229_728_653;
    (0..d)
        .filter(|&k| k != widest)
        .enumerate()
        .map(|(idx, k)| {
            let a = roots[order[k]];
            let b = roots[order[(k + 1) % d]];
            // The jitter keeps starts apart from each other and from poles.
            let jitter = Complex64::from_polar(1e-6 * scale, golden * idx as f64);
            (a + b) * 0.5 * (1.0 - 1e-3) + jitter
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(roots: &[Complex64]) -> RootPoly {
        RootPoly::new(roots.to_vec()).unwrap()
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn hand_expanded_cases() {
        let p = poly(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let ord = derived_zeros(&p, &WeightScheme::Ordinary).unwrap();
        assert_eq!(ord.zeros.len(), 1);
        assert!(ord.zeros[0].norm() < 1e-15);
        let pol = derived_zeros(&p, &WeightScheme::Polar(c(2.0, 0.0))).unwrap();
        assert!((pol.zeros[0] - c(0.5, 0.0)).norm() < 1e-14);
        let sz = derived_zeros(&p, &WeightScheme::SzNagy(vec![1.5, 0.5])).unwrap();
        assert!((sz.zeros[0] - c(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn repeated_root_derivatives() {
        let p = poly(&[c(1.0, 0.0); 4]);
        let out = kth_derivative_zeros(&p, 3).unwrap();
        assert_eq!(out.zeros, vec![c(1.0, 0.0)]);
        // Mixed multiplicities: P = (z-1)^3 (z+1)^2, P' = (z-1)^2 (z+1) (5z + 1).
        let p = poly(&[c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        let out = sorted(derived_zeros(&p, &WeightScheme::Ordinary).unwrap().zeros);
        let want = [c(-1.0, 0.0), c(-0.2, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn near_coincident_roots_use_rounding_floor() {
        let mut roots: Vec<Complex64> = (0..12)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 12.0))
            .collect();
        roots.push(Complex64::from_polar(1.0, 4e-9));
        let out = derived_zeros(&poly(&roots), &WeightScheme::Ordinary).unwrap();
        let between = out
            .zeros
            .iter()
            .find(|w| (*w - c(1.0, 2e-9)).norm() < 1e-8)
            .copied()
            .unwrap();
        let a = vec![c(1.0 / 13.0, 0.0); 13];
        assert!(defect_floor(&roots, &a, between) > DEFAULT_DEFECT_TOL);
        assert!(defect(&roots, &a, between) <= defect_floor(&roots, &a, between));
    }

    #[test]
    fn roots_of_unity_collapse_to_origin() {
        let p = poly(&(0..6).map(|k| Complex64::from_polar(1.0, k as f64 * std::f64::consts::PI / 3.0)).collect::<Vec<_>>());
        let out = kth_derivative_zeros(&p, 1).unwrap();
        assert_eq!(out.zeros.len(), 5);
        assert!(containment_check(&out.zeros, 1.0).pass);
        assert!(out.zeros.iter().all(|w| w.norm() < 1e-2));
    }

    #[test]
    fn order_must_be_below_degree() {
        let p = poly(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert!(matches!(kth_derivative_zeros(&p, 2), Err(Error::OrderTooLarge { .. })));
        assert!(matches!(kth_derivative_zeros(&p, 0), Err(Error::OrderTooLarge { .. })));
        assert!(derived_zeros(&poly(&[c(1.0, 0.0)]), &WeightScheme::Ordinary).is_err());
    }

    #[test]
    fn degenerate_weights_propagate() {
        let p = poly(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(
            derived_zeros(&p, &WeightScheme::Polar(c(0.0, 0.0))),
            Err(Error::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn containment_flags_escapes() {
        let r = containment_check(&[c(0.0, 2.0)], 1.0);
        assert!(!r.pass);
        assert_eq!(r.max_modulus, 2.0);
    }

    #[test]
    fn aberth_and_spectral_agree() {
        let law = crate::circle_dist::upper_half_arc();
        let roots = law.sample(60, crate::circle_dist::SeedSpec::new(3, 0));
        let p = poly(&roots);
        for scheme in [WeightScheme::Ordinary, WeightScheme::Polar(c(2.0, 1.0))] {
            let spec = derived_zeros_with(
                &p,
                &scheme,
                &RootFindOptions { backend: BackendChoice::Spectral, ..Default::default() },
            )
            .unwrap();
            let ab = derived_zeros_with(
                &p,
                &scheme,
                &RootFindOptions { backend: BackendChoice::Aberth, ..Default::default() },
            )
            .unwrap();
            assert_eq!(ab.backend, Backend::Aberth);
            for w in &ab.zeros {
                let near = spec.zeros.iter().map(|v| (v - w).norm()).fold(f64::INFINITY, f64::min);
                assert!(near < 1e-9, "{w} off by {near}");
            }
        }
    }
}
