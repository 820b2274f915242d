//! Seeded convergence sweeps over `(n, seed)` cells.
//!
//! Every cell draws its zeros from its own ChaCha stream, so a cell's row
//! does not depend on which other cells run or in what order. Cells run on
//! a rayon pool whose width comes from `CIRCLE_DERIVS_THREADS` (0 or unset
//! means all cores); rows are sorted by `(n, seed, stream)` before output.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle_dist::{law_char_fn, CircleLaw, SeedSpec};
use crate::error::{Error, Result};
use crate::measure::{
    discretized_target, empirical_char, mass_in_disk, pairing_fraction, prohorov, EmpiricalMeasure,
    DEFAULT_TARGET_ATOMS,
};
use crate::parse::{fmt_complex, fmt_real, parse_complex, parse_real};
use crate::polynomial::{resolve_weights, RootPoly, WeightScheme};
use crate::powersum::{direct_power_mean, power_sum_report};
use crate::rootfind::{containment_check, derived_zeros, kth_derivative_zeros};

pub const THREADS_ENV: &str = "CIRCLE_DERIVS_THREADS";
pub const P_MAX_CAP: usize = 8;
pub const B_ORDERS: usize = 4;
pub const DEFAULT_N_LIST: [usize; 6] = [50, 100, 200, 400, 800, 1600];
pub const DEFAULT_SEED_COUNT: u64 = 20;
pub const DEFAULT_SZ_CAP: f64 = 4.0;
pub const PROHOROV_TOL: f64 = 1e-9;
pub const LEMMA7_TOL: f64 = 1e-8;
pub const SEED_COUNT_CAP: u64 = 1 << 20;
pub const TARGET_ATOMS_CAP: usize = 1 << 20;

/// Weight scheme of a sweep. `RandomSzNagy` draws fresh weights per cell.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSpec {
    Fixed(WeightScheme),
    RandomSzNagy,
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(s) => write!(f, "{s}"),
            Self::RandomSzNagy => f.write_str("sznagy"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("sznagy") || t.eq_ignore_ascii_case("sznagy:random") {
            return Ok(Self::RandomSzNagy);
        }
        match t.parse::<WeightScheme>() {
            Ok(w) => Ok(Self::Fixed(w)),
            Err(Error::Parse(msg)) => Err(Error::InvalidScheme(format!("{msg}; or sznagy for random weights"))),
            Err(e) => Err(e),
        }
    }
}

/// Sz.-Nagy weights: i.i.d. `U(1, cap)` rescaled to sum `n`, hence in `(0, cap]`.
pub fn random_sz_nagy<R: Rng + ?Sized>(n: usize, cap: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(cap > 1.0 && cap.is_finite()) {
        return Err(Error::InvalidArgument(format!("Sz.-Nagy cap {cap} must exceed 1")));
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..cap)).collect();
    let scale = n as f64 / raw.iter().sum::<f64>();
    Ok(raw.into_iter().map(|x| x * scale).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub law: CircleLaw,
    pub scheme: SchemeSpec,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub seeds: Vec<SeedSpec>,
    pub p_max: usize,
    pub disk_r: f64,
    pub eps0: f64,
    pub q: f64,
    pub target_atoms: usize,
    pub char_grid: Vec<[f64; 2]>,
    pub sz_cap: f64,
}

/// 8 directions times radii {0.5, 1, 2}.
pub fn default_char_grid() -> Vec<[f64; 2]> {
    let mut grid = Vec::with_capacity(24);
    for r in [0.5, 1.0, 2.0] {
        for d in 0..8 {
            let a = TAU * d as f64 / 8.0;
            grid.push([r * a.cos(), r * a.sin()]);
        }
    }
    grid
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            law: CircleLaw::uniform(),
            scheme: SchemeSpec::Fixed(WeightScheme::Ordinary),
            k: 1,
            n_list: DEFAULT_N_LIST.to_vec(),
            seeds: (0..DEFAULT_SEED_COUNT).map(|s| SeedSpec::new(s, 0)).collect(),
            p_max: 3,
            disk_r: 0.9,
            eps0: 0.1,
            q: 0.5,
            target_atoms: DEFAULT_TARGET_ATOMS,
            char_grid: default_char_grid(),
            sz_cap: DEFAULT_SZ_CAP,
        }
    }
}

/// Keys understood by [`ExperimentConfig::from_pairs`].
pub const CONFIG_KEYS: [&str; 15] = [
    "law",
    "scheme",
    "k",
    "n",
    "seeds",
    "seed",
    "seed_list",
    "stream",
    "p_max",
    "disk_r",
    "eps0",
    "q",
    "target_atoms",
    "char_grid",
    "sz_cap",
];

/// `key = value` lines; `#` starts a comment, blank lines are ignored.
/// Later duplicates win.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| s.trim().parse::<T>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse list {value:?}")))
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_grid(value: &str) -> Result<Vec<[f64; 2]>> {
    value
        .split(';')
        .map(|pair| {
            let v: Vec<&str> = pair.split(',').collect();
            match v.as_slice() {
                [x, y] => Ok([parse_real(x)?, parse_real(y)?]),
                _ => Err(Error::Config(format!("char_grid: expected x,y got {pair:?}"))),
            }
        })
        .collect()
}

impl ExperimentConfig {
    /// Defaults overridden by `pairs` in order (config file first, then flags).
    ///
    /// `seeds = N` selects seeds `seed .. seed + N` on stream `stream`;
    /// `seed_list` names seeds explicitly.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            map.insert(k.as_str(), v.as_str());
        }
        let mut cfg = Self::default();
        let mut seed_base = 0u64;
        let mut seed_count = DEFAULT_SEED_COUNT;
        let mut stream = 0u64;
        let mut seed_list: Option<Vec<u64>> = None;
        for (&key, &value) in &map {
            match key {
                "law" => cfg.law = value.parse()?,
                "scheme" => cfg.scheme = value.parse()?,
                "k" => cfg.k = parse_one(key, value)?,
                "n" => cfg.n_list = parse_list(key, value)?,
                "seeds" => seed_count = parse_one(key, value)?,
                "seed" => seed_base = parse_one(key, value)?,
                "seed_list" => seed_list = Some(parse_list(key, value)?),
                "stream" => stream = parse_one(key, value)?,
                "p_max" => cfg.p_max = parse_one(key, value)?,
                "disk_r" => cfg.disk_r = parse_real(value)?,
                "eps0" => cfg.eps0 = parse_real(value)?,
                "q" => cfg.q = parse_real(value)?,
                "target_atoms" => cfg.target_atoms = parse_one(key, value)?,
                "char_grid" => cfg.char_grid = parse_grid(value)?,
                "sz_cap" => cfg.sz_cap = parse_real(value)?,
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        if seed_count > SEED_COUNT_CAP {
            return Err(Error::Config(format!("seeds = {seed_count} exceeds {SEED_COUNT_CAP}")));
        }
        let seeds = seed_list.unwrap_or_else(|| (0..seed_count).map(|i| seed_base.wrapping_add(i)).collect());
        cfg.seeds = seeds.into_iter().map(|s| SeedSpec::new(s, stream)).collect();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_list.is_empty() {
            return bad("n list is empty".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n list {:?} is not strictly increasing", self.n_list));
        }
        if self.k == 0 || self.k >= self.n_list[0] {
            return bad(format!("k = {} must satisfy 1 <= k < {}", self.k, self.n_list[0]));
        }
        if self.k > 1 && self.scheme != SchemeSpec::Fixed(WeightScheme::Ordinary) {
            return bad("k > 1 requires the ordinary scheme".into());
        }
        if let SchemeSpec::Fixed(WeightScheme::SzNagy(l)) = &self.scheme {
            if self.n_list.iter().any(|&n| n != l.len()) {
                return bad(format!("{} explicit Sz.-Nagy weights but n = {:?}", l.len(), self.n_list));
            }
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        if self.p_max == 0 || self.p_max > P_MAX_CAP {
            return bad(format!("p_max = {} outside 1..={P_MAX_CAP}", self.p_max));
        }
        if !(self.disk_r > 0.0 && self.disk_r < 1.0) {
            return bad(format!("disk_r = {} outside (0, 1)", self.disk_r));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q = {} outside (0, 1)", self.q));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0 - self.q) {
            return bad(format!("eps0 = {} must lie in (0, 1 - q)", self.eps0));
        }
        if self.target_atoms == 0 || self.target_atoms > TARGET_ATOMS_CAP {
            return bad(format!("target_atoms = {} outside 1..={TARGET_ATOMS_CAP}", self.target_atoms));
        }
        if self.char_grid.iter().flatten().any(|x| !x.is_finite()) {
            return bad("char_grid has non-finite entries".into());
        }
        if !(self.sz_cap > 1.0 && self.sz_cap.is_finite()) {
            return bad(format!("sz_cap = {} must exceed 1", self.sz_cap));
        }
        Ok(())
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            law: self.law.spec_string(),
            scheme: self.scheme.to_string(),
            k: self.k,
            n_list: self.n_list.clone(),
            seeds: self.seeds.clone(),
            p_max: self.p_max,
            disk_r: self.disk_r,
            eps0: self.eps0,
            q: self.q,
            target_atoms: self.target_atoms,
            char_grid: self.char_grid.clone(),
            sz_cap: self.sz_cap,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub law: String,
    pub scheme: String,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub seeds: Vec<SeedSpec>,
    pub p_max: usize,
    pub disk_r: f64,
    pub eps0: f64,
    pub q: f64,
    pub target_atoms: usize,
    pub char_grid: Vec<[f64; 2]>,
    pub sz_cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowMetrics {
    pub prohorov: f64,
    pub mass_disk: f64,
    pub psum_err: Vec<f64>,
    pub char_err: f64,
    pub pair_zeros: f64,
    pub pair_crit: f64,
    /// Both pairing fractions reach their `floor(q * count)` thresholds.
    pub pair_event: bool,
    pub contain_max: f64,
    pub cor5_abs_sum: f64,
    pub cor5_sum_abs: f64,
    /// Polar scheme only.
    pub b_err: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    #[serde(flatten)]
    pub metrics: Option<RowMetrics>,
    pub error: Option<String>,
}

/// Per-run data shared by every cell.
struct Shared {
    target: EmpiricalMeasure,
    law_char: Vec<Complex64>,
    moments: Vec<Complex64>,
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let shared = Shared {
        target: discretized_target(&cfg.law, cfg.target_atoms)?,
        law_char: cfg.char_grid.iter().map(|t| law_char_fn(&cfg.law, *t)).collect(),
        moments: (0..=cfg.p_max.max(B_ORDERS) as u32).map(|p| cfg.law.moment(p)).collect(),
    };
    let mut cells: Vec<(usize, SeedSpec)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    cells.sort_by_key(|&(n, s)| (n, s.seed, s.stream));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, seed)| {
                let (metrics, error) = match run_cell(cfg, &shared, n, seed) {
                    Ok(m) => (Some(m), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                ConvergenceRow {
                    n,
                    seed: seed.seed,
                    stream: seed.stream,
                    metrics,
                    error,
                }
            })
            .collect()
    }))
}

/// Worker count from `CIRCLE_DERIVS_THREADS`; 0 lets rayon use every core.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn run_cell(cfg: &ExperimentConfig, shared: &Shared, n: usize, seed: SeedSpec) -> Result<RowMetrics> {
    let mut rng = seed.rng();
    let zeros = cfg.law.sample_with(n, &mut rng);
    let scheme = match &cfg.scheme {
        SchemeSpec::Fixed(s) => s.clone(),
        SchemeSpec::RandomSzNagy => WeightScheme::sz_nagy(random_sz_nagy(n, cfg.sz_cap, &mut rng)?)?,
    };
    let poly = RootPoly::new(zeros)?;
    let lambdas = resolve_weights(&poly, &scheme)?;
    let derived = if cfg.k == 1 {
        derived_zeros(&poly, &scheme)?
    } else {
        kth_derivative_zeros(&poly, cfg.k)?
    };
    let w = derived.zeros;
    let measure = EmpiricalMeasure::uniform(w.clone())?;

    let mut psum_err = Vec::with_capacity(cfg.p_max);
    for p in 1..=cfg.p_max {
        psum_err.push((direct_power_mean(&w, p)? - shared.moments[p]).norm());
    }
    let char_err = cfg
        .char_grid
        .iter()
        .zip(&shared.law_char)
        .map(|(t, phi)| (empirical_char(&measure, *t) - phi).norm())
        .fold(0.0, f64::max);
    let pair_zeros = pairing_fraction(&w, poly.roots(), cfg.eps0)?;
    let pair_crit = pairing_fraction(poly.roots(), &w, cfg.eps0)?;
    let need = |count: usize| (cfg.q * count as f64).floor() / count as f64;
    let nf = n as f64;
    let b_err = match scheme {
        WeightScheme::Polar(xi) => Some(b_m_errors(poly.roots(), xi, &shared.moments)),
        _ => None,
    };
    Ok(RowMetrics {
        prohorov: prohorov(&measure, &shared.target, PROHOROV_TOL)?.distance,
        mass_disk: mass_in_disk(&measure, cfg.disk_r),
        psum_err,
        char_err,
        pair_zeros,
        pair_crit,
        pair_event: pair_zeros >= need(n) && pair_crit >= need(w.len()),
        contain_max: containment_check(&w, 1.0).max_modulus,
        cor5_abs_sum: lambdas.iter().map(|l| l.norm()).sum::<f64>() / nf,
        cor5_sum_abs: lambdas.iter().sum::<Complex64>().norm() / nf,
        b_err,
    })
}

/// `(1/n) sum conj(xi - z_j) z_j^(m+1)` for `m = 0..B_ORDERS`.
pub fn b_m_estimates(zeros: &[Complex64], xi: Complex64) -> Vec<Complex64> {
    let nf = zeros.len() as f64;
    (0..B_ORDERS as i32)
        .map(|m| zeros.iter().map(|z| (xi - z).conj() * z.powi(m + 1)).sum::<Complex64>() / nf)
        .collect()
}

/// `conj(xi) E[Z^(m+1)] - E[Z^m]` for `m = 0..B_ORDERS`.
pub fn b_m_limits(law: &CircleLaw, xi: Complex64) -> Vec<Complex64> {
    (0..B_ORDERS as u32)
        .map(|m| xi.conj() * law.moment(m + 1) - law.moment(m))
        .collect()
}

fn b_m_errors(zeros: &[Complex64], xi: Complex64, moments: &[Complex64]) -> Vec<f64> {
    b_m_estimates(zeros, xi)
        .into_iter()
        .enumerate()
        .map(|(m, b)| (b - (xi.conj() * moments[m + 1] - moments[m])).norm())
        .collect()
}

pub fn csv_header(cfg: &ExperimentConfig) -> String {
    let mut cols: Vec<String> = ["n", "seed", "prohorov", "mass_disk"].map(String::from).to_vec();
    cols.extend((1..=cfg.p_max).map(|p| format!("psum_err_{p}")));
    cols.extend(
        [
            "char_err",
            "pair_zeros",
            "pair_crit",
            "pair_event",
            "contain_max",
            "cor5_abs_sum",
            "cor5_sum_abs",
        ]
        .map(String::from),
    );
    if is_polar(cfg) {
        cols.extend((0..B_ORDERS).map(|m| format!("b_err_{m}")));
    }
    cols.push("stream".into());
    cols.push("status".into());
    cols.join(",")
}

fn is_polar(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.scheme, SchemeSpec::Fixed(WeightScheme::Polar(_)))
}

/// Header plus one line per row; error rows leave numeric fields empty and
/// put the message (commas replaced) in `status`.
pub fn to_csv(cfg: &ExperimentConfig, rows: &[ConvergenceRow]) -> String {
    let mut out = csv_header(cfg);
    out.push('\n');
    let width = 9 + cfg.p_max + if is_polar(cfg) { B_ORDERS } else { 0 };
    for row in rows {
        let mut f: Vec<String> = vec![row.n.to_string(), row.seed.to_string()];
        match &row.metrics {
            Some(m) => {
                f.push(fmt_real(m.prohorov));
                f.push(fmt_real(m.mass_disk));
                f.extend(m.psum_err.iter().map(|x| fmt_real(*x)));
                f.extend([m.char_err, m.pair_zeros, m.pair_crit].map(fmt_real));
                f.push(u8::from(m.pair_event).to_string());
                f.extend([m.contain_max, m.cor5_abs_sum, m.cor5_sum_abs].map(fmt_real));
                if let Some(b) = &m.b_err {
                    f.extend(b.iter().map(|x| fmt_real(*x)));
                }
            }
            None => f.extend(std::iter::repeat_n(String::new(), width)),
        }
        f.push(row.stream.to_string());
        f.push(match &row.error {
            None => "ok".into(),
            Some(e) => e.replace([',', '\n'], ";"),
        });
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: ConfigEcho,
    rows: &'a [ConvergenceRow],
}

pub fn to_json(cfg: &ExperimentConfig, rows: &[ConvergenceRow]) -> String {
    let report = JsonReport {
        config: cfg.echo(),
        rows,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("rows serialize");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma7Report {
    pub trials: usize,
    pub seed: u64,
    pub max_discrepancy: f64,
    /// Instance attaining `max_discrepancy` as `(n, p, scheme)`.
    pub worst: Option<(usize, usize, String)>,
    /// Instances that errored instead of producing a report.
    pub errors: Vec<String>,
    pub pass: bool,
}

/// Random three-way power-sum checks: `n` in 3..=12, `p` in 1..=6 and the
/// scheme cycling through ordinary, polar 2, polar 2+i and random Sz.-Nagy.
pub fn lemma7_selftest(trials: usize, seed: u64) -> Result<Lemma7Report> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = SeedSpec::new(seed, 0).rng();
    let law = CircleLaw::uniform();
    let mut max_discrepancy = 0.0f64;
    let mut worst = None;
    let mut errors = Vec::new();
    for t in 0..trials {
        let n = rng.gen_range(3..=12usize);
        let p = rng.gen_range(1..=6usize);
        let zeros = law.sample_with(n, &mut rng);
        let scheme = match t % 4 {
            0 => WeightScheme::Ordinary,
            1 => WeightScheme::Polar(Complex64::new(2.0, 0.0)),
            2 => WeightScheme::Polar(Complex64::new(2.0, 1.0)),
            _ => WeightScheme::sz_nagy(random_sz_nagy(n, DEFAULT_SZ_CAP, &mut rng)?)?,
        };
        match RootPoly::new(zeros).and_then(|poly| power_sum_report(&poly, &scheme, p)) {
            Ok(r) => {
                if !(r.max_pairwise_diff <= max_discrepancy) {
                    max_discrepancy = r.max_pairwise_diff;
                    worst = Some((n, p, scheme.to_string()));
                }
            }
            Err(e) => errors.push(format!("trial {t} (n={n}, p={p}, {scheme}): {e}")),
        }
    }
    Ok(Lemma7Report {
        trials,
        seed,
        max_discrepancy,
        worst,
        pass: errors.is_empty() && max_discrepancy <= LEMMA7_TOL,
        errors,
    })
}

/// Both pairing fractions for explicit point sets.
pub fn pairing_report(zeros: &[Complex64], crit: &[Complex64], eps0: f64) -> Result<(f64, f64)> {
    if !(eps0 > 0.0) {
        return Err(Error::InvalidArgument(format!("eps0 = {eps0} must be positive")));
    }
    Ok((pairing_fraction(crit, zeros, eps0)?, pairing_fraction(zeros, crit, eps0)?))
}

/// `re,im` CSV of a point list.
pub fn points_csv(points: &[Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for z in points {
        out.push_str(&format!("{},{}\n", fmt_real(z.re), fmt_real(z.im)));
    }
    out
}

/// Parses a comma list of complex numbers such as `1+0i,0.5-2i`.
pub fn parse_points(s: &str) -> Result<Vec<Complex64>> {
    s.split(',').map(parse_complex).collect()
}

/// Inverse of [`parse_points`].
pub fn format_points(points: &[Complex64]) -> String {
    points.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_dist::upper_half_arc;

    fn pairs(kv: &[(&str, &str)]) -> Vec<(String, String)> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn small(law: &str, scheme: &str) -> ExperimentConfig {
        ExperimentConfig::from_pairs(&pairs(&[
            ("law", law),
            ("scheme", scheme),
            ("n", "8,16"),
            ("seeds", "3"),
            ("target_atoms", "64"),
        ]))
        .unwrap()
    }

    #[test]
    fn single_atom_law_is_exact() {
        let cfg = small("atoms:1+0i,1", "ordinary");
        let rows = run_convergence(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        for r in rows {
            let m = r.metrics.unwrap();
            assert_eq!(m.prohorov, 0.0);
            assert!(m.psum_err.iter().all(|e| *e == 0.0));
            assert_eq!((m.pair_zeros, m.pair_crit), (1.0, 1.0));
        }
    }

    #[test]
    fn rows_sorted_and_deterministic() {
        let cfg = small("uniform", "ordinary");
        let a = run_convergence(&cfg).unwrap();
        let keys: Vec<_> = a.iter().map(|r| (r.n, r.seed)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(to_csv(&cfg, &a), to_csv(&cfg, &run_convergence(&cfg).unwrap()));
    }

    #[test]
    fn polar_rows_carry_b_errors_and_cor5_bounds() {
        let cfg = small("arc:0,3.141592653589793", "polar:3+0i");
        for r in run_convergence(&cfg).unwrap() {
            let m = r.metrics.unwrap();
            assert_eq!(m.b_err.as_ref().unwrap().len(), B_ORDERS);
            assert!(m.cor5_abs_sum <= 4.0 + 1e-9);
            assert!(m.cor5_sum_abs >= 2.0 - 1e-9);
            assert!(m.contain_max <= 1.0 + 1e-9);
        }
        assert!(csv_header(&cfg).contains("b_err_3"));
    }

    #[test]
    fn random_sz_nagy_rows() {
        let cfg = small("uniform", "sznagy");
        for r in run_convergence(&cfg).unwrap() {
            let m = r.metrics.unwrap();
            assert!((m.cor5_abs_sum - 1.0).abs() < 1e-12);
            assert!(m.contain_max <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn sz_nagy_generator_respects_cap() {
        let mut rng = SeedSpec::new(5, 0).rng();
        let l = random_sz_nagy(50, 4.0, &mut rng).unwrap();
        assert!((l.iter().sum::<f64>() - 50.0).abs() < 1e-9);
        assert!(l.iter().all(|x| *x > 0.0 && *x <= 4.0));
        assert!(random_sz_nagy(5, 1.0, &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = |kv: &[(&str, &str)]| ExperimentConfig::from_pairs(&pairs(kv)).is_err();
        assert!(bad(&[("n", "100,50")]));
        assert!(bad(&[("n", "5,10"), ("k", "5")]));
        assert!(bad(&[("eps0", "0.6"), ("q", "0.5")]));
        assert!(bad(&[("p_max", "9")]));
        assert!(bad(&[("k", "2"), ("scheme", "polar:2+0i")]));
        assert!(bad(&[("disk_r", "1")]));
        assert!(bad(&[("seeds", "18446744073709551615")]));
        assert!(bad(&[("target_atoms", "0")]));
        assert!(!bad(&[]));
    }

    #[test]
    fn config_file_and_overrides() {
        let text = "# sweep\nlaw = arc:0,3.141592653589793\nn = 10, 20\nseeds = 2\nseed = 7 # base\nstream = 3\n\n";
        let mut kv = parse_config(text).unwrap();
        kv.push(("seeds".into(), "4".into()));
        let cfg = ExperimentConfig::from_pairs(&kv).unwrap();
        assert_eq!(cfg.law, upper_half_arc());
        assert_eq!(cfg.n_list, vec![10, 20]);
        assert_eq!(cfg.seeds, (7..11).map(|s| SeedSpec::new(s, 3)).collect::<Vec<_>>());
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("law uniform").is_err());
        let grid = ExperimentConfig::from_pairs(&pairs(&[("char_grid", "1,0;0,2")])).unwrap();
        assert_eq!(grid.char_grid, vec![[1.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn b_limits_on_a_point_mass() {
        let xi = Complex64::new(3.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let law = CircleLaw::atoms(vec![one], vec![1.0]).unwrap();
        let est = b_m_estimates(&[one; 5], xi);
        for (e, l) in est.iter().zip(b_m_limits(&law, xi)) {
            assert!((e - l).norm() < 1e-15);
            assert!((l - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn lemma7_selftest_small() {
        let r = lemma7_selftest(40, 11).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r, lemma7_selftest(40, 11).unwrap());
        assert!(lemma7_selftest(0, 1).is_err());
    }

    #[test]
    fn csv_error_rows_keep_width() {
        let cfg = small("uniform", "ordinary");
        let rows = vec![ConvergenceRow {
            n: 8,
            seed: 0,
            stream: 0,
            metrics: None,
            error: Some("eigen failure, bad".into()),
        }];
        let csv = to_csv(&cfg, &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[1].ends_with("eigen failure; bad"));
    }

    #[test]
    fn points_roundtrip() {
        let p = vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -2.0)];
        assert_eq!(parse_points(&format_points(&p)).unwrap(), p);
    }
}
