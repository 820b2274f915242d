//! Probability laws on the unit circle.
//!
//! Each law is sampled through its angle and mapped with `(cos θ, sin θ)`,
//! so continuous draws have unit modulus up to rounding. Atom laws return
//! the stored atoms verbatim.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parse::{fmt_complex, parse_complex, parse_real};

/// Tolerance on atom modulus and on the weight total.
pub const LAW_TOL: f64 = 1e-12;

/// Absolute tolerance of the adaptive quadrature in [`law_char_fn`].
pub const QUAD_TOL: f64 = 1e-10;

/// Reproducible random-stream selector.
///
/// Streams are ChaCha8 keyed by `seed` (expanded to 256 bits with the PCG32
/// routine of `rand_core::SeedableRng::seed_from_u64`) with the 64-bit
/// stream word set to `stream`. Uniform `f64` draws take the top 53 bits of
/// a `u64`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawKind {
    Uniform,
    Atoms {
        points: Vec<Complex64>,
        weights: Vec<f64>,
    },
    ArcUniform {
        lo: f64,
        hi: f64,
    },
}

/// A validated law supported on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleLaw {
    kind: LawKind,
    // Running weight totals for inverse-CDF sampling of atom laws.
    cdf: Vec<f64>,
}

impl CircleLaw {
    pub fn uniform() -> Self {
        Self {
            kind: LawKind::Uniform,
            cdf: Vec::new(),
        }
    }

    pub fn atoms(points: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidLaw("atom law needs at least one atom".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidLaw(format!(
                "{} atoms but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for (i, z) in points.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() || (z.norm() - 1.0).abs() > LAW_TOL {
                return Err(Error::InvalidLaw(format!(
                    "atom {i} = {} is not on the unit circle",
                    fmt_complex(*z)
                )));
            }
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidLaw(format!("weight {i} = {w} is not a probability")));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > LAW_TOL {
            return Err(Error::InvalidLaw(format!("weights sum to {total}, not 1")));
        }
        let cdf = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            kind: LawKind::Atoms { points, weights },
            cdf,
        })
    }

    /// Uniform law on the arc of angles `[lo, hi]`.
    pub fn arc(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidLaw("arc endpoints must be finite".into()));
        }
        let len = hi - lo;
        if !(len > 0.0 && len <= TAU) {
            return Err(Error::InvalidLaw(format!(
                "arc length {len} outside (0, 2π]"
            )));
        }
        Ok(Self {
            kind: LawKind::ArcUniform { lo, hi },
            cdf: Vec::new(),
        })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    /// `n` i.i.d. draws.
    pub fn sample(&self, n: usize, seed: SeedSpec) -> Vec<Complex64> {
        let mut rng = seed.rng();
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Complex64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let u: f64 = rng.gen();
        match &self.kind {
            LawKind::Uniform => unit(TAU * u),
            LawKind::ArcUniform { lo, hi } => unit(lo + (hi - lo) * u),
            LawKind::Atoms { points, .. } => {
                let idx = self.cdf.partition_point(|&c| c <= u);
                points[idx.min(points.len() - 1)]
            }
        }
    }

    /// `E[Z^p]`.
    pub fn moment(&self, p: u32) -> Complex64 {
        if p == 0 {
            return Complex64::new(1.0, 0.0);
        }
        match &self.kind {
            LawKind::Uniform => Complex64::new(0.0, 0.0),
            LawKind::Atoms { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(z, w)| z.powu(p) * *w)
                .sum(),
            LawKind::ArcUniform { lo, hi } => {
                let pf = p as f64;
                let num = unit(pf * hi) - unit(pf * lo);
                num / Complex64::new(0.0, pf * (hi - lo))
            }
        }
    }

    /// Grammar form accepted by [`FromStr`].
    pub fn spec_string(&self) -> String {
        self.to_string()
    }
}

#[inline]
fn unit(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Characteristic function `E[exp(i<t, Z>)]` with `t` a plane vector.
pub fn law_char_fn(law: &CircleLaw, t: [f64; 2]) -> Complex64 {
    let phase = |z: Complex64| {
        let x = t[0] * z.re + t[1] * z.im;
        Complex64::new(x.cos(), x.sin())
    };
    if t == [0.0, 0.0] {
        return Complex64::new(1.0, 0.0);
    }
    match &law.kind {
        LawKind::Atoms { points, weights } => {
            points.iter().zip(weights).map(|(z, w)| phase(*z) * *w).sum()
        }
        LawKind::Uniform => {
            let re = adaptive_simpson(&|th: f64| phase(unit(th)).re, 0.0, TAU, QUAD_TOL);
            let im = adaptive_simpson(&|th: f64| phase(unit(th)).im, 0.0, TAU, QUAD_TOL);
            Complex64::new(re, im) / TAU
        }
        LawKind::ArcUniform { lo, hi } => {
            let re = adaptive_simpson(&|th: f64| phase(unit(th)).re, *lo, *hi, QUAD_TOL);
            let im = adaptive_simpson(&|th: f64| phase(unit(th)).im, *lo, *hi, QUAD_TOL);
            Complex64::new(re, im) / (hi - lo)
        }
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // Seed with a handful of panels so oscillatory integrands cannot fool
    // the first error estimate.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == PANELS { b } else { lo + h };
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / PANELS as f64, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

impl fmt::Display for CircleLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::Uniform => write!(f, "uniform"),
            LawKind::ArcUniform { lo, hi } => write!(f, "arc:{lo},{hi}"),
            LawKind::Atoms { points, weights } => {
                write!(f, "atoms:")?;
                for (i, (z, w)) in points.iter().zip(weights).enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{},{w}", fmt_complex(*z))?;
                }
                Ok(())
            }
        }
    }
}

/// `uniform`, `atoms:z1,w1;z2,w2;...` or `arc:lo,hi`.
impl FromStr for CircleLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(Self::uniform());
        }
        if let Some(body) = s.strip_prefix("arc:") {
            let parts: Vec<&str> = body.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("arc law needs `arc:lo,hi`, got {s:?}")));
            }
            return Self::arc(parse_real(parts[0])?, parse_real(parts[1])?);
        }
        if let Some(body) = s.strip_prefix("atoms:") {
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for atom in body.split(';') {
                let (z, w) = atom
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("atom {atom:?} needs `z,w`")))?;
                points.push(parse_complex(z)?);
                weights.push(parse_real(w)?);
            }
            return Self::atoms(points, weights);
        }
        Err(Error::Parse(format!(
            "unknown law {s:?}; expected uniform, atoms:... or arc:..."
        )))
    }
}

/// Half-circle arc `[0, π]`, the non-uniform law used throughout the tests.
pub fn upper_half_arc() -> CircleLaw {
    CircleLaw::arc(0.0, PI).expect("valid arc")
}
