//! Dense numeric kernel shared by every solver: Hermitian eigensolves,
//! periodic quadrature, bracketed scalar minimization and log-log order fits.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance enforced at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex matrix with row-major storage, checked to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {dim}x{dim} entries, got {}",
                entries.len()
            )));
        }
        let m = HermitianMatrix { dim, entries };
        let scale = m.max_abs();
        let asym = m.asymmetry();
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                scale,
            });
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self::new(dim, entries)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |H_ij - conj(H_ji)|
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Returns `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..self.dim {
            entries[i * self.dim + i] += shift;
        }
        HermitianMatrix {
            dim: self.dim,
            entries,
        }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.entries[i * n..(i + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }
}

/// Ascending eigenvalues with optional orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    dim: usize,
    vectors: Option<Vec<Complex64>>,
}

impl EigenResult {
    /// i-th eigenvector, paired with `values[i]`.
    pub fn vector(&self, i: usize) -> Option<&[Complex64]> {
        self.vectors
            .as_ref()
            .map(|v| &v[i * self.dim..(i + 1) * self.dim])
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }
}

/// Full spectrum of a Hermitian matrix, ascending.
///
/// Real-valued input takes the real symmetric path; everything else goes
/// through the complex self-adjoint solver. Equal eigenvalues keep the order
/// reported by the backend.
pub fn eigh(h: &HermitianMatrix, want_vectors: bool) -> Result<EigenResult> {
    let n = h.dim();
    let (mut values, vectors) = if h.is_real() {
        let m = Mat::<f64>::from_fn(n, n, |i, j| h.get(i, j).re);
        if want_vectors {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::ConvergenceFailure)?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
            let mut vecs = Vec::with_capacity(n * n);
            for k in 0..n {
                for i in 0..n {
                    vecs.push(Complex64::new(u[(i, k)], 0.0));
                }
            }
            (values, Some(vecs))
        } else {
            let values = m
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::ConvergenceFailure)?;
            (values, None)
        }
    } else {
        let m = Mat::<Complex64>::from_fn(n, n, |i, j| h.get(i, j));
        if want_vectors {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::ConvergenceFailure)?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
            let mut vecs = Vec::with_capacity(n * n);
            for k in 0..n {
                for i in 0..n {
                    vecs.push(u[(i, k)]);
                }
            }
            (values, Some(vecs))
        } else {
            let values = m
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::ConvergenceFailure)?;
            (values, None)
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    // The backend already sorts; a stable pass keeps that guarantee explicit.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        let sorted: Vec<f64> = order.iter().map(|&o| values[o]).collect();
        let vectors = vectors.map(|v| {
            let mut out = Vec::with_capacity(n * n);
            for &o in &order {
                out.extend_from_slice(&v[o * n..(o + 1) * n]);
            }
            out
        });
        return Ok(EigenResult {
            values: sorted,
            dim: n,
            vectors,
        });
    }
    values.shrink_to_fit();
    Ok(EigenResult {
        values,
        dim: n,
        vectors,
    })
}

/// Axis-aligned rectangle [x0, x0 + lx] x [y0, y0 + ly].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub lx: f64,
    pub ly: f64,
}

impl Rect {
    pub fn cell(a1: f64, a2: f64) -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            lx: a1,
            ly: a2,
        }
    }
}

/// Tensor-product periodic trapezoid rule on `cell` with `nodes = (n1, n2)`.
pub fn quad_periodic<T, F>(f: F, cell: Rect, nodes: (usize, usize)) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(f64, f64) -> T,
{
    let (n1, n2) = nodes;
    assert!(n1 >= 2 && n2 >= 2, "quad_periodic needs at least 2 nodes per axis");
    let h1 = cell.lx / n1 as f64;
    let h2 = cell.ly / n2 as f64;
    let mut acc = T::default();
    for i in 0..n1 {
        let x = cell.x0 + i as f64 * h1;
        let mut row = T::default();
        for j in 0..n2 {
            row = row + f(x, cell.y0 + j as f64 * h2);
        }
        acc = acc + row;
    }
    acc * (h1 * h2)
}

/// One-dimensional periodic trapezoid rule on [a, a + length).
pub fn quad_periodic_1d<T, F>(f: F, a: f64, length: f64, n: usize) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(f64) -> T,
{
    assert!(n >= 2, "quad_periodic_1d needs at least 2 nodes");
    let h = length / n as f64;
    let mut acc = T::default();
    for i in 0..n {
        acc = acc + f(a + i as f64 * h);
    }
    acc * h
}

const SCAN_POINTS: usize = 64;
const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Minimizes `f` on `[lo, hi]`.
///
/// A 64-point scan picks the best cell, then Brent's golden/parabolic
/// iteration refines inside the two neighbouring cells.
pub fn minimize_scalar<F>(f: F, bracket: (f64, f64), tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Bracket { lo, hi });
    }
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for i in 0..SCAN_POINTS {
        let v = f(lo + i as f64 * step);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let a = lo + best.saturating_sub(1) as f64 * step;
    let b = lo + (best + 1).min(SCAN_POINTS - 1) as f64 * step;
    let (x, fx) = brent_min(&f, a, b, tol.max(1e-15));
    let x_scan = lo + best as f64 * step;
    if fx <= best_val {
        Ok((x, fx))
    } else {
        Ok((x_scan, best_val))
    }
}

fn brent_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..500 {
        let xm = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Root of `f` on `[lo, hi]` by bisection with secant steps; requires a sign change.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        // secant candidate, accepted only when it stays inside the bracket
        let sec = b - fb * (b - a) / (fb - fa);
        let c = if sec > a.min(b) && sec < a.max(b) && (sec - mid).abs() < 0.25 * (b - a).abs() {
            sec
        } else {
            mid
        };
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < tol {
            return Ok(c);
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
    }
    Ok(0.5 * (a + b))
}

/// Least-squares slope of log(err) against log(eps).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits `err ~ C eps^slope` after dropping the `drop_head` largest-eps samples.
pub fn fit_order(samples: &[(f64, f64)], drop_head: usize) -> Result<OrderFit> {
    let mut s: Vec<(f64, f64)> = samples.to_vec();
    s.sort_by(|a, b| b.0.total_cmp(&a.0));
    let s: Vec<(f64, f64)> = s.into_iter().skip(drop_head).collect();
    if s.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "order fit needs 3 samples after dropping {drop_head}, have {}",
            s.len()
        )));
    }
    if let Some(&(eps, err)) = s.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "non-positive error {err:e} at eps = {eps}"
        )));
    }
    if s.iter().any(|(e, _)| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = s.iter().map(|(e, r)| (e.ln(), r.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(OrderFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let mut e = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            e[i * n + i] = c(rng.random_range(-2.0..2.0), 0.0);
            for j in i + 1..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                e[i * n + j] = z;
                e[j * n + i] = z.conj();
            }
        }
        HermitianMatrix::new(n, e).unwrap()
    }

    // det(H - x I) by complex Gaussian elimination with partial pivoting;
    // real up to roundoff for Hermitian H.
    fn char_poly(h: &HermitianMatrix, x: f64) -> f64 {
        let n = h.dim();
        let mut a: Vec<Complex64> = h.entries().to_vec();
        for i in 0..n {
            a[i * n + i] -= x;
        }
        let mut det = c(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap();
            if a[p * n + k].norm() == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                for j in k..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= f * v;
                }
            }
        }
        det.re
    }

    #[test]
    fn eigh_diagonal() {
        let h = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let r = eigh(&h, true).unwrap();
        assert_eq!(r.values.len(), 3);
        for (v, e) in r.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn eigh_offdiagonal_pair() {
        let g = c(2.0, 0.0);
        let h = HermitianMatrix::new(2, vec![c(0.0, 0.0), g, g.conj(), c(0.0, 0.0)]).unwrap();
        let r = eigh(&h, false).unwrap();
        assert!((r.values[0] + 2.0).abs() < 1e-14);
        assert!((r.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_matches_characteristic_polynomial_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(5, &mut rng);
        let vals = eigh(&h, false).unwrap().values;
        // bracket every root by scanning, then bisect the characteristic polynomial
        let bound = h.frobenius() + 1.0;
        let steps = 20_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev = char_poly(&h, prev_x);
        for s in 1..=steps {
            let x = -bound + 2.0 * bound * s as f64 / steps as f64;
            let fx = char_poly(&h, x);
            if prev.signum() != fx.signum() {
                let (mut a, mut b, mut fa) = (prev_x, x, prev);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let fm = char_poly(&h, m);
                    if fm.signum() == fa.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_x = x;
            prev = fx;
        }
        assert_eq!(roots.len(), 5, "roots {roots:?}");
        for (r, v) in roots.iter().zip(&vals) {
            assert!((r - v).abs() < 1e-9, "{r} vs {v}");
        }
    }

    #[test]
    fn eigh_residual_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(12, &mut rng);
        let r = eigh(&h, true).unwrap();
        let fro = h.frobenius();
        for i in 0..12 {
            let v = r.vector(i).unwrap();
            let hv = h.mul_vec(v);
            let res: f64 = hv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b * r.values[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-12 * fro, "residual {res}");
            for j in 0..12 {
                let w = r.vector(j).unwrap();
                let ip: Complex64 = v.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn eigh_shift_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let h = random_hermitian(9, &mut rng);
            let shift = rng.random_range(-5.0..5.0);
            let a = eigh(&h, false).unwrap().values;
            let b = eigh(&h.shifted(shift), false).unwrap().values;
            for (x, y) in a.iter().zip(&b) {
                assert!((x + shift - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigh_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 8;
        let h = random_hermitian(n, &mut rng);
        // unitary from the eigenvectors of an unrelated Hermitian matrix
        let u = eigh(&random_hermitian(n, &mut rng), true).unwrap();
        let col = |k: usize| u.vector(k).unwrap().to_vec();
        let cols: Vec<Vec<Complex64>> = (0..n).map(col).collect();
        // conj(U)^T H U
        let hu: Vec<Vec<Complex64>> = cols.iter().map(|v| h.mul_vec(v)).collect();
        let rotated = HermitianMatrix::from_fn(n, |i, j| {
            cols[i].iter().zip(&hu[j]).map(|(a, b)| a.conj() * b).sum()
        });
        // roundoff can exceed the strict constructor tolerance; symmetrize explicitly
        let rotated = match rotated {
            Ok(m) => m,
            Err(_) => {
                let mut e = vec![c(0.0, 0.0); n * n];
                for i in 0..n {
                    for j in 0..n {
                        let a: Complex64 = cols[i].iter().zip(&hu[j]).map(|(a, b)| a.conj() * b).sum();
                        let b: Complex64 = cols[j].iter().zip(&hu[i]).map(|(a, b)| a.conj() * b).sum();
                        e[i * n + j] = 0.5 * (a + b.conj());
                    }
                }
                HermitianMatrix::new(n, e).unwrap()
            }
        };
        let a = eigh(&h, false).unwrap().values;
        let b = eigh(&rotated, false).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let e = vec![c(1.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(2.0, 0.0)];
        assert!(matches!(
            HermitianMatrix::new(2, e),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn quad_constant_and_harmonics() {
        let cell = Rect::cell(1.0, 1.0);
        let one: f64 = quad_periodic(|_, _| 1.0, cell, (16, 16));
        assert!((one - 1.0).abs() < 1e-15);
        let h: Complex64 = quad_periodic(
            |x, _| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x),
            cell,
            (32, 8),
        );
        assert!(h.norm() < 1e-14);
        for j in 1..10 {
            let cell = Rect::cell(1.7, 0.9);
            let h: Complex64 = quad_periodic(
                |x, _| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 * x / 1.7),
                cell,
                (64, 4),
            );
            assert!(h.norm() <= 1e-12);
        }
    }

    #[test]
    fn quad_sin_squared() {
        let v: f64 = quad_periodic(
            |_, y| (std::f64::consts::PI * y).sin().powi(2),
            Rect::cell(1.0, 1.0),
            (4, 64),
        );
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn minimize_parabola() {
        let (t, f) = minimize_scalar(|t| (t - 1.0).powi(2), (-10.0, 10.0), 1e-10).unwrap();
        assert!((t - 1.0).abs() < 1e-8);
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn minimize_hyperbola_branch() {
        let pi = std::f64::consts::PI;
        let (s, d, g) = (-7.0 * pi / 4.0, pi / 4.0, 1.0f64);
        let f = |t: f64| -t * (s + d) + (t * t * (s - d).powi(2) + g * g).sqrt();
        let (t, fv) = minimize_scalar(f, (-10.0, 10.0), 1e-12).unwrap();
        let t_expect = -3.0 / (2.0 * pi * 7f64.sqrt());
        let f_expect = 7f64.sqrt() / 4.0;
        // independent dense grid oracle
        let grid_best = (0..200_001)
            .map(|i| -1.0 + 2.0 * i as f64 / 200_000.0)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        assert!((grid_best - t_expect).abs() < 2e-5);
        assert!((t - t_expect).abs() < 1e-7, "{t} vs {t_expect}");
        assert!((fv - f_expect).abs() < 1e-12);
    }

    #[test]
    fn minimize_abs_kink() {
        let (t, _) = minimize_scalar(|t: f64| t.abs(), (-1.0, 2.0), 1e-10).unwrap();
        assert!(t.abs() < 1e-8);
    }

    #[test]
    fn minimize_bad_bracket() {
        assert!(matches!(
            minimize_scalar(|t| t, (1.0, 1.0), 1e-8),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn root_of_cubic() {
        let r = find_root(|x| x * x * x - 2.0, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_exact_powers() {
        let eps = [0.1, 0.05, 0.025];
        let s: Vec<(f64, f64)> = eps.iter().map(|&e| (e, f64::sqrt(e))).collect();
        let fit = fit_order(&s, 0).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let s: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 3.0 * e)).collect();
        assert!((fit_order(&s, 0).unwrap().slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_noisy_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s: Vec<(f64, f64)> = [0.1, 0.07, 0.05, 0.035, 0.025, 0.0175]
            .iter()
            .map(|&e: &f64| (e, e.powf(0.8) * (1.0 + 0.05 * rng.random_range(-1.0..1.0))))
            .collect();
        let fit = fit_order(&s, 0).unwrap();
        assert!((fit.slope - 0.8).abs() < 0.1);
    }

    #[test]
    fn fit_rejects_zero_error_and_short_input() {
        let s = [(0.1, 1.0), (0.05, 0.0), (0.025, 0.5)];
        assert!(matches!(fit_order(&s, 0), Err(Error::DegenerateFit(_))));
        let s = [(0.1, 1.0), (0.05, 0.5), (0.025, 0.25)];
        assert!(matches!(fit_order(&s, 1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn fit_drops_largest_eps_first() {
        // the outlier sits at the largest eps and is discarded
        let s = [(0.2, 100.0), (0.1, 0.1), (0.05, 0.05), (0.025, 0.025)];
        let fit = fit_order(&s, 1).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }
}
