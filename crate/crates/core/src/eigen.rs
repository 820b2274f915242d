//! Eigenvalues of dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the implicitly
//! shifted single-shift QR iteration (Wilkinson shifts, exceptional shifts
//! every tenth sweep on a stalled block). Only eigenvalues are computed, so
//! every transformation is restricted to the active diagonal block.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative subdiagonal size at which a block is split.
pub const DEFLATION_TOL: f64 = 1e-14;

/// QR sweeps allowed per unit of dimension.
pub const SWEEPS_PER_DIM: usize = 30;

const EXCEPTIONAL_SHIFT: f64 = 0.75;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Plain triple-loop product (i-k-j order).
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// All `n` eigenvalues of `a`, in the order the QR iteration deflates them.
pub fn eigenvalues(mut a: CMatrix) -> Result<Vec<Complex64>> {
    let n = a.n;
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a.data[0]]),
        _ => {}
    }
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure("non-finite matrix entry".into()));
    }
    reduce_to_hessenberg(&mut a);
    hessenberg_qr(&mut a)
}

/// In-place unitary similarity to upper Hessenberg form.
pub fn reduce_to_hessenberg(a: &mut CMatrix) {
    let n = a.n;
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        // Reflector annihilating a[k+2.., k].
        let m = n - k - 1;
        let mut tail = 0.0;
        for i in k + 2..n {
            tail += a.get(i, k).norm_sqr();
        }
        if tail == 0.0 {
            continue;
        }
        let x0 = a.get(k + 1, k);
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let v = &mut v[..m];
        v[0] = x0 - alpha;
        for i in 1..m {
            v[i] = a.get(k + 1 + i, k);
        }
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;

        // Left: rows k+1.., columns k+1.. (column k is set explicitly).
        let w = &mut w[..n - k - 1];
        w.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (ii, vi) in v.iter().enumerate() {
            let cv = vi.conj();
            let row = &a.data[(k + 1 + ii) * n + k + 1..(k + 2 + ii) * n];
            for (wj, &r) in w.iter_mut().zip(row) {
                *wj += cv * r;
            }
        }
        for (ii, vi) in v.iter().enumerate() {
            let s = *vi * tau;
            let row = &mut a.data[(k + 1 + ii) * n + k + 1..(k + 2 + ii) * n];
            for (r, &wj) in row.iter_mut().zip(w.iter()) {
                *r -= s * wj;
            }
        }
        a.set(k + 1, k, alpha);
        for i in k + 2..n {
            a.set(i, k, Complex64::new(0.0, 0.0));
        }

        // Right: all rows, columns k+1..
        for i in 0..n {
            let row = &mut a.data[i * n + k + 1..(i + 1) * n];
            let mut s = Complex64::new(0.0, 0.0);
            for (r, vj) in row.iter().zip(v.iter()) {
                s += *r * *vj;
            }
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            let s = s * tau;
            for (r, vj) in row.iter_mut().zip(v.iter()) {
                *r -= s * vj.conj();
            }
        }
    }
}

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Eigenvalues of a 2x2 block `[[a, b], [c, d]]`; the smaller one is
/// recovered from the determinant to avoid cancellation.
pub fn eig2x2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let (mut big, mut small) = (half_tr + disc, half_tr - disc);
    if big.norm() < small.norm() {
        std::mem::swap(&mut big, &mut small);
    }
    if big.norm() > 0.0 {
        small = (a * d - b * c) / big;
    }
    (big, small)
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h.get(hi - 1, hi - 1);
    let b = h.get(hi - 1, hi);
    let c = h.get(hi, hi - 1);
    let d = h.get(hi, hi);
    let (e1, e2) = eig2x2(a, b, c, d);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Shifted QR on an upper Hessenberg matrix; destroys `h`.
pub fn hessenberg_qr(h: &mut CMatrix) -> Result<Vec<Complex64>> {
    let n = h.n;
    let zero = Complex64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    let budget = SWEEPS_PER_DIM * n;
    let mut sweeps = 0usize;
    let mut its = 0usize;
    let mut hi = n as isize - 1;

    while hi >= 0 {
        let hu = hi as usize;
        // Locate the start of the unreduced block ending at `hu`.
        let mut l = hu;
        while l > 0 {
            let sub = h.get(l, l - 1);
            let local = abs1(h.get(l - 1, l - 1)) + abs1(h.get(l, l));
            if abs1(sub) <= DEFLATION_TOL * local || abs1(sub) <= f64::MIN_POSITIVE {
                h.set(l, l - 1, zero);
                break;
            }
            l -= 1;
        }

        if l == hu {
            eig[hu] = h.get(hu, hu);
            hi -= 1;
            its = 0;
            continue;
        }
        if l + 1 == hu {
            let (e1, e2) = eig2x2(
                h.get(l, l),
                h.get(l, hu),
                h.get(hu, l),
                h.get(hu, hu),
            );
            eig[l] = e1;
            eig[hu] = e2;
            hi -= 2;
            its = 0;
            continue;
        }

        sweeps += 1;
        its += 1;
        if sweeps > budget {
            return Err(Error::EigenFailure(format!(
                "QR iteration exceeded {budget} sweeps with {} eigenvalues outstanding",
                hu + 1
            )));
        }

        let shift = if its % 20 == 10 {
            h.get(l, l) + EXCEPTIONAL_SHIFT * h.get(l + 1, l).re.abs()
        } else if its % 20 == 0 {
            h.get(hu, hu) + EXCEPTIONAL_SHIFT * h.get(hu, hu - 1).re.abs()
        } else {
            wilkinson_shift(h, hu)
        };

        qr_sweep(h, l, hu, shift);
    }
    Ok(eig)
}

/// One implicit single-shift QR sweep on the block `[l..=hi]`.
fn qr_sweep(h: &mut CMatrix, l: usize, hi: usize, shift: Complex64) {
    let n = h.n;
    let zero = Complex64::new(0.0, 0.0);
    let mut x = h.get(l, l) - shift;
    let mut y = h.get(l + 1, l);
    for k in l..hi {
        if k > l {
            x = h.get(k, k - 1);
            y = h.get(k + 1, k - 1);
        }
        let (c, s) = givens(x, y);
        let sc = s.conj();

        // Rows k, k+1.
        let col0 = if k > l { k - 1 } else { l };
        let (top, bottom) = h.data.split_at_mut((k + 1) * n);
        let row_k = &mut top[k * n + col0..k * n + hi + 1];
        let row_k1 = &mut bottom[col0..hi + 1];
        for (a, b) in row_k.iter_mut().zip(row_k1.iter_mut()) {
            let (av, bv) = (*a, *b);
            *a = av * c + s * bv;
            *b = bv * c - sc * av;
        }
        if k > l {
            h.set(k + 1, k - 1, zero);
        }

        // Columns k, k+1.
        let row_end = (k + 2).min(hi);
        for i in l..=row_end {
            let base = i * n;
            let av = h.data[base + k];
            let bv = h.data[base + k + 1];
            h.data[base + k] = av * c + sc * bv;
            h.data[base + k + 1] = bv * c - s * av;
        }
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}
