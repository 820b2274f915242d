//! Finite atomic measures on the plane and convergence diagnostics.
//!
//! The Prohorov distance between two finite measures is computed through
//! Strassen's coupling characterization: `pi(m1, m2) <= eps` iff some
//! coupling moves at least `1 - eps` of the mass along atom pairs at
//! distance `<= eps`. The largest such coupling mass is a max-flow on the
//! bipartite atom graph; it only changes at pairwise distances, so the
//! distance is the minimum over those breakpoints `d` of
//! `max(d, 1 - maxflow(d))`.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::circle_dist::{CircleLaw, LawKind};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::parse::{fmt_real, parse_real};

pub const WEIGHT_TOL: f64 = 1e-12;
/// Weights are rationalized to integer multiples of `1 / CAPACITY_SCALE`.
pub const CAPACITY_SCALE: f64 = 1e12;
pub const BRUTE_FORCE_SUPPORT_CAP: usize = 16;
pub const DEFAULT_TARGET_ATOMS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<Complex64>,
    weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProhorovResult {
    pub distance: f64,
    pub certificate_eps: f64,
    pub certificate_flow: f64,
}

impl EmpiricalMeasure {
    /// Equal weight `1/m` on each point (repeats allowed).
    pub fn uniform(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        check_finite(&points)?;
        let w = 1.0 / points.len() as f64;
        Ok(Self {
            weights: vec![w; points.len()],
            atoms: points,
        })
    }

    /// Positive weights summing to one within `WEIGHT_TOL`.
    pub fn weighted(atoms: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        check_finite(&atoms)?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { atoms, weights })
    }

    /// Positive weights rescaled to total mass one.
    pub fn normalized(atoms: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidMeasure(format!("total weight {total}")));
        }
        let mut scaled: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // Push the rounding residue onto the heaviest atom.
        let resid = 1.0 - scaled.iter().sum::<f64>();
        if let Some(k) = (0..scaled.len()).max_by(|&a, &b| scaled[a].total_cmp(&scaled[b])) {
            scaled[k] += resid;
        }
        Self::weighted(atoms, scaled)
    }

    pub fn dirac(x: Complex64) -> Self {
        Self {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Complex64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Rigid motion `z -> rot * z + shift` applied to every atom.
    pub fn transformed(&self, rot: Complex64, shift: Complex64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|z| rot * z + shift).collect(),
            weights: self.weights.clone(),
        }
    }

    /// `re,im` rows, or `re,im,weight` when `with_weights`; header first.
    pub fn to_csv(&self, with_weights: bool) -> String {
        let mut out = String::from(if with_weights { "re,im,weight\n" } else { "re,im\n" });
        for (z, w) in self.atoms.iter().zip(&self.weights) {
            out.push_str(&fmt_real(z.re));
            out.push(',');
            out.push_str(&fmt_real(z.im));
            if with_weights {
                out.push(',');
                out.push_str(&fmt_real(*w));
            }
            out.push('\n');
        }
        out
    }

    /// Reads `re,im` (uniform weights) or `re,im,weight` (rescaled to mass
    /// one). An optional non-numeric header line and blank lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        let mut columns = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if lineno == 0 && atoms.is_empty() && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            let row = lineno + 1;
            match (columns, fields.len()) {
                (_, k) if k != 2 && k != 3 => {
                    return Err(Error::Parse(format!("line {row}: expected 2 or 3 fields, got {k}")))
                }
                (Some(c), k) if c != k => {
                    return Err(Error::Parse(format!("line {row}: expected {c} fields, got {k}")))
                }
                _ => columns = Some(fields.len()),
            }
            let re = parse_real(fields[0]).map_err(|e| at_line(row, e))?;
            let im = parse_real(fields[1]).map_err(|e| at_line(row, e))?;
            atoms.push(Complex64::new(re, im));
            if fields.len() == 3 {
                weights.push(parse_real(fields[2]).map_err(|e| at_line(row, e))?);
            }
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if weights.is_empty() {
            Self::uniform(atoms)
        } else {
            if let Some(w) = weights.iter().find(|w| **w <= 0.0) {
                return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
            }
            Self::normalized(atoms, weights)
        }
    }
}

fn at_line(row: usize, e: Error) -> Error {
    Error::Parse(format!("line {row}: {e}"))
}

fn check_finite(points: &[Complex64]) -> Result<()> {
    if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidMeasure("non-finite atom".into()));
    }
    Ok(())
}

/// Pairwise distances and rationalized capacities shared by every flow
/// evaluation of one distance computation.
struct Coupling<'a> {
    m1: &'a EmpiricalMeasure,
    m2: &'a EmpiricalMeasure,
    dist: Vec<f64>,
    cap1: Vec<i64>,
    cap2: Vec<i64>,
    total: f64,
    cache: HashMap<u64, f64>,
}

impl<'a> Coupling<'a> {
    fn new(m1: &'a EmpiricalMeasure, m2: &'a EmpiricalMeasure) -> Self {
        let n2 = m2.len();
        let mut dist = Vec::with_capacity(m1.len() * n2);
        for a in &m1.atoms {
            dist.extend(m2.atoms.iter().map(|b| (a - b).norm()));
        }
        let rational = |w: &f64| ((w * CAPACITY_SCALE).round() as i64).max(1);
        let cap1: Vec<i64> = m1.weights.iter().map(rational).collect();
        let cap2: Vec<i64> = m2.weights.iter().map(rational).collect();
        // Flow is reported relative to the smaller rounded marginal so that a
        // full coupling reads as exactly one.
        let total = cap1.iter().sum::<i64>().min(cap2.iter().sum()) as f64;
        Self {
            m1,
            m2,
            dist,
            cap1,
            cap2,
            total,
            cache: HashMap::new(),
        }
    }

    /// Largest coupling mass carried by pairs at distance `<= eps`.
    fn max_flow(&mut self, eps: f64) -> f64 {
        if let Some(v) = self.cache.get(&eps.to_bits()) {
            return *v;
        }
        let (n1, n2) = (self.m1.len(), self.m2.len());
        let (source, sink) = (n1 + n2, n1 + n2 + 1);
        let mut g = FlowNetwork::new(n1 + n2 + 2);
        for (i, c) in self.cap1.iter().enumerate() {
            g.add_edge(source, i, *c);
        }
        for (j, c) in self.cap2.iter().enumerate() {
            g.add_edge(n1 + j, sink, *c);
        }
        for i in 0..n1 {
            let row = &self.dist[i * n2..(i + 1) * n2];
            for (j, d) in row.iter().enumerate() {
                if *d <= eps {
                    g.add_edge(i, n1 + j, self.cap1[i].min(self.cap2[j]));
                }
            }
        }
        let flow = g.max_flow(source, sink) as f64 / self.total;
        self.cache.insert(eps.to_bits(), flow);
        flow
    }
}

/// Prohorov distance via coupling max-flow over distance breakpoints.
///
/// The search is exact over breakpoints; `tol` (at least `1e-9`) bounds the
/// admissible error and only the capacity rationalization contributes to it.
pub fn prohorov(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure, tol: f64) -> Result<ProhorovResult> {
    if !(tol >= 1e-9) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below 1e-9")));
    }
    let mut coupling = Coupling::new(m1, m2);
    let mut breaks: Vec<f64> = coupling.dist.iter().copied().filter(|d| *d <= 1.0).collect();
    breaks.sort_unstable_by(f64::total_cmp);
    breaks.dedup();

    if breaks.is_empty() {
        return Ok(ProhorovResult {
            distance: 1.0,
            certificate_eps: 1.0,
            certificate_flow: coupling.max_flow(1.0),
        });
    }

    // `feasible(i)`: d_i >= 1 - maxflow(d_i). Monotone false -> true.
    let feasible = |c: &mut Coupling, i: usize| breaks[i] >= 1.0 - c.max_flow(breaks[i]);
    let last = breaks.len() - 1;
    let mut below: Option<usize> = None;
    let mut first_true: Option<usize> = None;
    let mut probe = 0usize;
    loop {
        if feasible(&mut coupling, probe) {
            first_true = Some(probe);
            break;
        }
        below = Some(probe);
        if probe == last {
            break;
        }
        probe = (probe * 2 + 1).min(last);
    }
    if let Some(mut hi) = first_true {
        let mut lo = below.map_or(0, |b| b + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if feasible(&mut coupling, mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        first_true = Some(hi);
    }

    let result = match first_true {
        Some(t) => {
            let at_t = ProhorovResult {
                distance: breaks[t],
                certificate_eps: breaks[t],
                certificate_flow: coupling.max_flow(breaks[t]),
            };
            if t == 0 {
                at_t
            } else {
                let f_prev = coupling.max_flow(breaks[t - 1]);
                if 1.0 - f_prev < breaks[t] {
                    ProhorovResult {
                        distance: 1.0 - f_prev,
                        certificate_eps: 1.0 - f_prev,
                        certificate_flow: f_prev,
                    }
                } else {
                    at_t
                }
            }
        }
        None => {
            let f_last = coupling.max_flow(breaks[last]);
            ProhorovResult {
                distance: (1.0 - f_last).min(1.0),
                certificate_eps: (1.0 - f_last).min(1.0),
                certificate_flow: f_last,
            }
        }
    };
    Ok(ProhorovResult {
        distance: result.distance.clamp(0.0, 1.0),
        ..result
    })
}

/// Prohorov distance by enumerating every subset of each support.
///
/// For each breakpoint `d` the worst violation
/// `max_A m1(A) - m2(A^d)` (and symmetrically) is evaluated with closed
/// `d`-neighbourhoods; the distance is the minimum of `max(d, violation)`.
pub fn prohorov_bruteforce(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure) -> Result<f64> {
    let atoms = m1.len() + m2.len();
    if atoms > BRUTE_FORCE_SUPPORT_CAP {
        return Err(Error::SupportTooLarge {
            atoms,
            cap: BRUTE_FORCE_SUPPORT_CAP,
        });
    }
    let mut breaks = vec![0.0];
    for a in &m1.atoms {
        for b in &m2.atoms {
            breaks.push((a - b).norm());
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let worst = |from: &EmpiricalMeasure, to: &EmpiricalMeasure, d: f64| -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for mask in 0u32..(1 << from.len()) {
            let mut mass = 0.0;
            let mut reach = vec![false; to.len()];
            for (i, a) in from.atoms.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    mass += from.weights[i];
                    for (j, b) in to.atoms.iter().enumerate() {
                        if (a - b).norm() <= d {
                            reach[j] = true;
                        }
                    }
                }
            }
            let covered: f64 = reach
                .iter()
                .zip(&to.weights)
                .filter(|(r, _)| **r)
                .map(|(_, w)| w)
                .sum();
            worst = worst.max(mass - covered);
        }
        worst
    };

    let best = breaks
        .iter()
        .map(|&d| d.max(worst(m1, m2, d)).max(worst(m2, m1, d)))
        .fold(f64::INFINITY, f64::min);
    Ok(best.clamp(0.0, 1.0))
}

/// Atomic stand-in for a circle law: equispaced atoms for continuous laws,
/// the law itself for atom laws.
pub fn discretized_target(law: &CircleLaw, m: usize) -> Result<EmpiricalMeasure> {
    if m == 0 {
        return Err(Error::InvalidArgument("target needs at least one atom".into()));
    }
    let unit = |t: f64| Complex64::new(t.cos(), t.sin());
    match law.kind() {
        LawKind::Uniform => {
            EmpiricalMeasure::uniform((0..m).map(|k| unit(TAU * k as f64 / m as f64)).collect())
        }
        LawKind::ArcUniform { lo, hi } => {
            let h = (hi - lo) / m as f64;
            EmpiricalMeasure::uniform((0..m).map(|k| unit(lo + (k as f64 + 0.5) * h)).collect())
        }
        LawKind::Atoms { points, weights } => {
            let keep: Vec<usize> = (0..points.len()).filter(|&i| weights[i] > 0.0).collect();
            EmpiricalMeasure::normalized(
                keep.iter().map(|&i| points[i]).collect(),
                keep.iter().map(|&i| weights[i]).collect(),
            )
        }
    }
}

/// Mass of the closed disk `|z| <= r`.
pub fn mass_in_disk(m: &EmpiricalMeasure, r: f64) -> f64 {
    m.atoms
        .iter()
        .zip(&m.weights)
        .filter(|(z, _)| z.norm() <= r)
        .map(|(_, w)| w)
        .sum::<f64>()
        .min(1.0)
}

/// `sum_j w_j exp(i <t, x_j>)` with the real inner product on the plane.
pub fn empirical_char(m: &EmpiricalMeasure, t: [f64; 2]) -> Complex64 {
    if t == [0.0, 0.0] {
        return Complex64::new(1.0, 0.0);
    }
    m.atoms
        .iter()
        .zip(&m.weights)
        .map(|(z, w)| {
            let x = t[0] * z.re + t[1] * z.im;
            Complex64::new(x.cos(), x.sin()) * *w
        })
        .sum()
}

/// `sum_j w_j x_j^r conj(x_j)^(total - r)`.
pub fn mixed_power_mean(m: &EmpiricalMeasure, total: u32, r: u32) -> Result<Complex64> {
    if r > total {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds m = {total}")));
    }
    Ok(m.atoms
        .iter()
        .zip(&m.weights)
        .map(|(z, w)| z.powu(r) * z.conj().powu(total - r) * *w)
        .sum())
}

/// Fraction of `probes` within (strictly) `eps0` of some target.
pub fn pairing_fraction(targets: &[Complex64], probes: &[Complex64], eps0: f64) -> Result<f64> {
    if targets.is_empty() || probes.is_empty() {
        return Err(Error::InvalidArgument("pairing needs nonempty point sets".into()));
    }
    let hits = probes
        .iter()
        .filter(|p| targets.iter().any(|t| (*p - t).norm() < eps0))
        .count();
    Ok(hits as f64 / probes.len() as f64)
}
