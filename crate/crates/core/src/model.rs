//! Physical configuration types, structural validation, and the Fourier data
//! (wall harmonics, coefficient-field harmonics) consumed by the solvers.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{CoefficientClause, Error, Result, WallClause};

/// Points of the wall validation grid on [-2a3, 2a3].
pub const WALL_VALIDATION_POINTS: usize = 4097;
/// Points per axis of the coefficient validation grid (closed cell).
pub const COEFF_VALIDATION_POINTS: usize = 1024;
/// Default quadrature nodes per axis for coefficient fields.
pub const DEFAULT_QUAD_NODES: usize = 1024;
/// Default bound on the two-resolution self-estimate of coefficient harmonics.
pub const DEFAULT_RESOLUTION_TOL: f64 = 1e-10;

const VALUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LatticeParams {
    pub a1: f64,
    pub a2: f64,
}

impl LatticeParams {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        let l = LatticeParams { a1, a2 };
        l.check()?;
        Ok(l)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("a1", self.a1), ("a2", self.a2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Lattice(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Brillouin zone half-widths (π/a1, π/a2).
    pub fn zone(&self) -> (f64, f64) {
        (PI / self.a1, PI / self.a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuasiMomentum {
    pub tau1: f64,
    pub tau2: f64,
}

impl QuasiMomentum {
    pub fn new(tau1: f64, tau2: f64) -> Self {
        QuasiMomentum { tau1, tau2 }
    }

    /// Folds both components into [-π/a, π/a).
    pub fn fold(self, lattice: &LatticeParams) -> Self {
        QuasiMomentum {
            tau1: fold_component(self.tau1, lattice.a1),
            tau2: fold_component(self.tau2, lattice.a2),
        }
    }

    pub fn in_zone(&self, lattice: &LatticeParams) -> bool {
        let (z1, z2) = lattice.zone();
        self.tau1.abs() <= z1 * (1.0 + 1e-14) && self.tau2.abs() <= z2 * (1.0 + 1e-14)
    }
}

pub fn fold_component(t: f64, a: f64) -> f64 {
    let period = 2.0 * PI / a;
    let mut r = t - period * (t / period).round();
    if r >= PI / a {
        r -= period;
    }
    if r < -PI / a {
        r += period;
    }
    r
}

/// Shape of the wall profile V on [-2a3, 2a3].
#[derive(Clone)]
pub enum WallShape {
    /// `height` on [-a3, a3], linear down to 0 at ±2a3.
    Trapezoid { height: f64 },
    /// `height` on [-a3, a3], half-cosine tapers down to 0 at ±2a3.
    RaisedCosine { height: f64 },
    /// Samples uniformly spaced on [-2a3, 2a3] (endpoints included), linearly interpolated.
    Table { values: Vec<f64> },
    /// Programmatic profile; evaluated on validation grids only.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for WallShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WallShape::Trapezoid { height } => write!(f, "Trapezoid {{ height: {height} }}"),
            WallShape::RaisedCosine { height } => write!(f, "RaisedCosine {{ height: {height} }}"),
            WallShape::Table { values } => write!(f, "Table {{ {} samples }}", values.len()),
            WallShape::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WallProfile {
    pub a3: f64,
    pub c0: f64,
    pub shape: WallShape,
}

impl WallProfile {
    pub fn trapezoid(a3: f64, c0: f64, height: f64) -> Self {
        WallProfile {
            a3,
            c0,
            shape: WallShape::Trapezoid { height },
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let a3 = self.a3;
        let ax = xi.abs();
        match &self.shape {
            WallShape::Trapezoid { height } => {
                if ax <= a3 {
                    *height
                } else if ax < 2.0 * a3 {
                    height * (2.0 * a3 - ax) / a3
                } else {
                    0.0
                }
            }
            WallShape::RaisedCosine { height } => {
                if ax <= a3 {
                    *height
                } else if ax < 2.0 * a3 {
                    0.5 * height * (1.0 + (PI * (ax - a3) / a3).cos())
                } else {
                    0.0
                }
            }
            WallShape::Table { values } => {
                if ax > 2.0 * a3 || values.len() < 2 {
                    return 0.0;
                }
                let segs = values.len() - 1;
                let h = 4.0 * a3 / segs as f64;
                let s = ((xi + 2.0 * a3) / h).clamp(0.0, segs as f64);
                let i = (s.floor() as usize).min(segs - 1);
                let w = s - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
            WallShape::Function(f) => f(xi),
        }
    }

    /// Even profiles have real Fourier data.
    pub fn is_even(&self) -> bool {
        match &self.shape {
            WallShape::Trapezoid { .. } | WallShape::RaisedCosine { .. } => true,
            WallShape::Table { values } => values.iter().zip(values.iter().rev()).all(|(a, b)| a == b),
            WallShape::Function(_) => false,
        }
    }

    /// Piecewise-linear breakpoints and values, when the shape is piecewise linear.
    fn linear_pieces(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let a3 = self.a3;
        match &self.shape {
            WallShape::Trapezoid { height } => Some((
                vec![-2.0 * a3, -a3, a3, 2.0 * a3],
                vec![0.0, *height, *height, 0.0],
            )),
            WallShape::Table { values } => {
                let segs = values.len().saturating_sub(1).max(1);
                let xs = (0..values.len())
                    .map(|i| -2.0 * a3 + 4.0 * a3 * i as f64 / segs as f64)
                    .collect();
                Some((xs, values.clone()))
            }
            WallShape::RaisedCosine { .. } => None,
            WallShape::Function(f) => {
                const SEGS: usize = 8192;
                let xs: Vec<f64> = (0..=SEGS)
                    .map(|i| -2.0 * a3 + 4.0 * a3 * i as f64 / SEGS as f64)
                    .collect();
                let vs = xs.iter().map(|&x| f(x)).collect();
                Some((xs, vs))
            }
        }
    }

    /// ∫ V(ξ) e^{-iωξ} dξ over the support. Exact for piecewise-linear and
    /// raised-cosine shapes; programmatic shapes use their linear interpolant
    /// on 8192 segments.
    pub fn transform(&self, omega: f64) -> Complex64 {
        if let Some((xs, vs)) = self.linear_pieces() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..xs.len() - 1 {
                let (a, b) = (xs[i], xs[i + 1]);
                let h = b - a;
                let z = Complex64::new(0.0, -omega * h);
                let phase = Complex64::from_polar(1.0, -omega * a);
                acc += phase * h * (vs[i] * phi0(z) + (vs[i + 1] - vs[i]) * phi1(z));
            }
            return acc;
        }
        let WallShape::RaisedCosine { height } = self.shape else {
            unreachable!("non-linear shapes other than raised cosine are sampled")
        };
        let a3 = self.a3;
        let iw = Complex64::new(0.0, -omega);
        let kappa = PI / a3;
        let plateau = height * int_exp(iw, -a3, a3);
        // right taper: (h/2)(1 + cos(κ(ξ - a3))), left taper: (h/2)(1 + cos(κ(ξ + a3)))
        let taper = |lo: f64, hi: f64, x0: f64| {
            let flat = int_exp(iw, lo, hi);
            let up = Complex64::from_polar(1.0, -kappa * x0)
                * int_exp(Complex64::new(0.0, kappa - omega), lo, hi);
            let down = Complex64::from_polar(1.0, kappa * x0)
                * int_exp(Complex64::new(0.0, -kappa - omega), lo, hi);
            0.5 * height * (flat + 0.5 * (up + down))
        };
        plateau + taper(a3, 2.0 * a3, a3) + taper(-2.0 * a3, -a3, -a3)
    }
}

/// (e^z - 1)/z
fn phi0(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..30 {
            term = term * z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// ∫₀¹ s e^{zs} ds
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ z^k / (k! (k + 2))
        let mut fact = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.5, 0.0);
        for k in 1..30 {
            fact = fact * z / k as f64;
            sum += fact / (k as f64 + 2.0);
        }
        sum
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// ∫_a^b e^{cξ} dξ
fn int_exp(c: Complex64, a: f64, b: f64) -> Complex64 {
    let h = b - a;
    (c * a).exp() * h * phi0(c * h)
}

/// Total mass ∫V and first moment ∫ξV over the full support [-2a3, 2a3].
pub fn wall_moments(wall: &WallProfile) -> (f64, f64) {
    if let Some((xs, vs)) = wall.linear_pieces() {
        let mut mass = 0.0;
        let mut first = 0.0;
        for i in 0..xs.len() - 1 {
            let (a, h) = (xs[i], xs[i + 1] - xs[i]);
            let (va, dv) = (vs[i], vs[i + 1] - vs[i]);
            mass += h * (va + 0.5 * dv);
            first += h * (va * a + va * h / 2.0 + dv * (a / 2.0 + h / 3.0));
        }
        return (mass, first);
    }
    // raised cosine: even, mass 2a3·h + 2·(a3·h/2)
    match wall.shape {
        WallShape::RaisedCosine { height } => (3.0 * wall.a3 * height, 0.0),
        _ => unreachable!(),
    }
}

/// k-th Fourier coefficient of the periodized wall V_ε on one period of length a2.
pub fn wall_fourier(wall: &WallProfile, eps: f64, a2: f64, k: i64) -> Result<Complex64> {
    check_overlap(wall, eps, a2)?;
    let omega = 2.0 * PI * k as f64 * eps / a2;
    let mut v = wall.transform(omega) * (eps / a2);
    if wall.is_even() {
        v.im = 0.0;
    }
    Ok(v)
}

pub fn check_overlap(wall: &WallProfile, eps: f64, a2: f64) -> Result<()> {
    let width = 2.0 * wall.a3 * eps;
    if width >= a2 / 2.0 {
        return Err(Error::Overlap {
            width,
            half_period: a2 / 2.0,
        });
    }
    Ok(())
}

/// Smooth bump on [0, a] with peak 1 at a/2, vanishing within `delta` of both ends.
pub fn bump(x: f64, a: f64, delta: f64) -> f64 {
    let half = a / 2.0 - delta;
    if half <= 0.0 {
        return 0.0;
    }
    let r = (x - a / 2.0) / half;
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// One coefficient field of the perturbation.
#[derive(Clone)]
pub enum FieldSpec {
    Zero,
    Constant(f64),
    /// amplitude·B(x₁)B(x₂)·cos(wx·x₁ + phase_x)·cos(wy·x₂ + phase_y)
    BumpHarmonic {
        amplitude: f64,
        delta: f64,
        wx: f64,
        wy: f64,
        phase_x: f64,
        phase_y: f64,
    },
    /// Samples at nodes (i·a1/n1, j·a2/n2), row-major in i, bilinear periodic interpolation.
    Grid { n1: usize, n2: usize, values: Vec<f64> },
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Zero => f.write_str("Zero"),
            FieldSpec::Constant(c) => write!(f, "Constant({c})"),
            FieldSpec::BumpHarmonic {
                amplitude,
                delta,
                wx,
                wy,
                phase_x,
                phase_y,
            } => write!(
                f,
                "BumpHarmonic {{ amplitude: {amplitude}, delta: {delta}, wx: {wx}, wy: {wy}, phase_x: {phase_x}, phase_y: {phase_y} }}"
            ),
            FieldSpec::Grid { n1, n2, .. } => write!(f, "Grid {{ {n1}x{n2} }}"),
            FieldSpec::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl FieldSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            FieldSpec::Zero => true,
            FieldSpec::Constant(c) => *c == 0.0,
            FieldSpec::BumpHarmonic { amplitude, .. } => *amplitude == 0.0,
            FieldSpec::Grid { values, .. } => values.iter().all(|v| *v == 0.0),
            FieldSpec::Function(_) => false,
        }
    }

    pub fn eval(&self, x1: f64, x2: f64, lattice: &LatticeParams) -> f64 {
        match self {
            FieldSpec::Zero => 0.0,
            FieldSpec::Constant(c) => *c,
            FieldSpec::BumpHarmonic {
                amplitude,
                delta,
                wx,
                wy,
                phase_x,
                phase_y,
            } => {
                let b1 = bump(x1, lattice.a1, *delta);
                if b1 == 0.0 {
                    return 0.0;
                }
                let b2 = bump(x2, lattice.a2, *delta);
                amplitude * b1 * b2 * (wx * x1 + phase_x).cos() * (wy * x2 + phase_y).cos()
            }
            FieldSpec::Grid { n1, n2, values } => {
                let s = x1.rem_euclid(lattice.a1) / lattice.a1 * *n1 as f64;
                let t = x2.rem_euclid(lattice.a2) / lattice.a2 * *n2 as f64;
                let (i, j) = (s.floor() as usize % n1, t.floor() as usize % n2);
                let (u, v) = (s - s.floor(), t - t.floor());
                let (i1, j1) = ((i + 1) % n1, (j + 1) % n2);
                let g = |a: usize, b: usize| values[a * n2 + b];
                (1.0 - u) * (1.0 - v) * g(i, j)
                    + u * (1.0 - v) * g(i1, j)
                    + (1.0 - u) * v * g(i, j1)
                    + u * v * g(i1, j1)
            }
            FieldSpec::Function(f) => f(x1, x2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Field {
    A11,
    A1,
    A0,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::A11 => "A11",
            Field::A1 => "A1",
            Field::A0 => "A0",
        })
    }
}

/// 2D harmonics Â(j, q) of a sampled field; zero outside |j| < n/2, |q| < n/2.
#[derive(Debug, Clone)]
pub struct FieldTable {
    n1: usize,
    n2: usize,
    coeffs: Vec<Complex64>,
    pub self_estimate: f64,
}

impl FieldTable {
    pub fn coeff(&self, j: i64, q: i64) -> Complex64 {
        let (h1, h2) = ((self.n1 / 2) as i64, (self.n2 / 2) as i64);
        if j.abs() >= h1 || q.abs() >= h2 {
            return Complex64::new(0.0, 0.0);
        }
        let jj = j.rem_euclid(self.n1 as i64) as usize;
        let qq = q.rem_euclid(self.n2 as i64) as usize;
        self.coeffs[jj * self.n2 + qq]
    }

    /// Largest |q| carried by the table.
    pub fn q_limit(&self) -> i64 {
        (self.n2 / 2) as i64 - 1
    }

    pub fn j_limit(&self) -> i64 {
        (self.n1 / 2) as i64 - 1
    }
}

fn dft2(samples: &[f64], n1: usize, n2: usize) -> Vec<Complex64> {
    let mut planner = FftPlanner::<f64>::new();
    let f1 = planner.plan_fft_forward(n1);
    let f2 = planner.plan_fft_forward(n2);
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // rows are fixed x₁ index i; transform along x₂ first
    for row in data.chunks_mut(n2) {
        f2.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n1];
    for q in 0..n2 {
        for i in 0..n1 {
            col[i] = data[i * n2 + q];
        }
        f1.process(&mut col);
        for i in 0..n1 {
            data[i * n2 + q] = col[i];
        }
    }
    let norm = 1.0 / (n1 * n2) as f64;
    data.iter_mut().for_each(|z| *z *= norm);
    data
}

impl FieldTable {
    /// Samples `spec` on an n×n grid and compares against the every-other-node subgrid.
    pub fn build(spec: &FieldSpec, lattice: &LatticeParams, n: usize) -> Result<FieldTable> {
        if n < 16 || !n.is_multiple_of(4) {
            return Err(Error::InvalidArgument(format!(
                "quadrature nodes must be a multiple of 4 and at least 16, got {n}"
            )));
        }
        let mut samples = vec![0.0; n * n];
        for i in 0..n {
            let x = i as f64 * lattice.a1 / n as f64;
            for l in 0..n {
                samples[i * n + l] = spec.eval(x, l as f64 * lattice.a2 / n as f64, lattice);
            }
        }
        let coeffs = dft2(&samples, n, n);
        let h = n / 2;
        let mut coarse = vec![0.0; h * h];
        for i in 0..h {
            for l in 0..h {
                coarse[i * h + l] = samples[2 * i * n + 2 * l];
            }
        }
        let coarse = dft2(&coarse, h, h);
        let table = FieldTable {
            n1: n,
            n2: n,
            coeffs,
            self_estimate: 0.0,
        };
        let coarse_table = FieldTable {
            n1: h,
            n2: h,
            coeffs: coarse,
            self_estimate: 0.0,
        };
        let lim = (n / 4) as i64;
        let mut est = 0.0f64;
        for j in -lim + 1..lim {
            for q in -lim + 1..lim {
                est = est.max((table.coeff(j, q) - coarse_table.coeff(j, q)).norm());
            }
        }
        Ok(FieldTable {
            self_estimate: est,
            ..table
        })
    }
}

/// Harmonic tables of all three fields at one resolution.
#[derive(Debug, Clone)]
pub struct CoeffTables {
    pub a1: f64,
    pub a2: f64,
    pub nodes: usize,
    a11: Option<Arc<FieldTable>>,
    a1_field: Option<Arc<FieldTable>>,
    a0: Option<Arc<FieldTable>>,
}

impl CoeffTables {
    pub fn field(&self, f: Field) -> Option<&FieldTable> {
        match f {
            Field::A11 => self.a11.as_deref(),
            Field::A1 => self.a1_field.as_deref(),
            Field::A0 => self.a0.as_deref(),
        }
    }

    pub fn coeff(&self, f: Field, j: i64, q: i64) -> Complex64 {
        self.field(f)
            .map(|t| t.coeff(j, q))
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.a11.is_none() && self.a1_field.is_none() && self.a0.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub a11: FieldSpec,
    pub a1: FieldSpec,
    pub a0: FieldSpec,
    pub margin: f64,
    pub quad_nodes: usize,
    pub resolution_tol: f64,
    cache: OnceLock<Arc<CoeffTables>>,
}

impl CoefficientFields {
    pub fn new(a11: FieldSpec, a1: FieldSpec, a0: FieldSpec, margin: f64) -> Self {
        CoefficientFields {
            a11,
            a1,
            a0,
            margin,
            quad_nodes: DEFAULT_QUAD_NODES,
            resolution_tol: DEFAULT_RESOLUTION_TOL,
            cache: OnceLock::new(),
        }
    }

    pub fn zero(margin: f64) -> Self {
        Self::new(FieldSpec::Zero, FieldSpec::Zero, FieldSpec::Zero, margin)
    }

    pub fn with_quadrature(mut self, nodes: usize, tol: f64) -> Self {
        self.quad_nodes = nodes;
        self.resolution_tol = tol;
        self.cache = OnceLock::new();
        self
    }

    pub fn spec(&self, f: Field) -> &FieldSpec {
        match f {
            Field::A11 => &self.a11,
            Field::A1 => &self.a1,
            Field::A0 => &self.a0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a11.is_zero() && self.a1.is_zero() && self.a0.is_zero()
    }

    /// Harmonic tables for `lattice`, built once and then shared read-only.
    pub fn tables(&self, lattice: &LatticeParams) -> Result<Arc<CoeffTables>> {
        if let Some(t) = self.cache.get() {
            if t.a1 == lattice.a1 && t.a2 == lattice.a2 {
                return Ok(t.clone());
            }
            return self.build_tables(lattice).map(Arc::new);
        }
        let t = Arc::new(self.build_tables(lattice)?);
        let _ = self.cache.set(t.clone());
        Ok(self.cache.get().cloned().unwrap_or(t))
    }

    fn build_tables(&self, lattice: &LatticeParams) -> Result<CoeffTables> {
        let n = self.quad_nodes;
        let one = |spec: &FieldSpec| -> Result<Option<Arc<FieldTable>>> {
            if spec.is_zero() {
                return Ok(None);
            }
            let t = FieldTable::build(spec, lattice, n)?;
            let scale = t.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
            if t.self_estimate > self.resolution_tol * scale {
                return Err(Error::Resolution {
                    estimate: t.self_estimate,
                    tolerance: self.resolution_tol * scale,
                });
            }
            Ok(Some(Arc::new(t)))
        };
        Ok(CoeffTables {
            a1: lattice.a1,
            a2: lattice.a2,
            nodes: n,
            a11: one(&self.a11)?,
            a1_field: one(&self.a1)?,
            a0: one(&self.a0)?,
        })
    }
}

/// (1/(a1·a2)) ∫_cell field(x) e^{-2πi(j x₁/a1 + q x₂/a2)} dx
pub fn coeff_fourier(
    coeffs: &CoefficientFields,
    field: Field,
    j: i64,
    q: i64,
    lattice: &LatticeParams,
) -> Result<Complex64> {
    Ok(coeffs.tables(lattice)?.coeff(field, j, q))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ValidationMeta {
    pub wall_grid_points: usize,
    pub coeff_grid_points: usize,
    pub quad_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct OperatorConfig {
    pub lattice: LatticeParams,
    pub wall: WallProfile,
    pub coeffs: CoefficientFields,
    pub alpha: f64,
    pub epsilons: Vec<f64>,
    pub validation: Option<ValidationMeta>,
}

impl OperatorConfig {
    pub fn mass(&self) -> f64 {
        wall_moments(&self.wall).0
    }

    pub fn tables(&self) -> Result<Arc<CoeffTables>> {
        self.coeffs.tables(&self.lattice)
    }
}

/// Checks every structural hypothesis and returns the config with validation metadata.
pub fn validate_config(raw: OperatorConfig) -> Result<OperatorConfig> {
    raw.lattice.check()?;
    validate_wall(&raw.wall)?;
    validate_coefficients(&raw.coeffs, &raw.lattice)?;
    let alpha = raw.alpha;
    if !(alpha > 1.0 / 3.0 && alpha < 0.5) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    validate_epsilons(&raw.epsilons, &raw.wall, &raw.lattice)?;
    Ok(OperatorConfig {
        validation: Some(ValidationMeta {
            wall_grid_points: WALL_VALIDATION_POINTS,
            coeff_grid_points: COEFF_VALIDATION_POINTS,
            quad_nodes: raw.coeffs.quad_nodes,
        }),
        ..raw
    })
}

fn validate_epsilons(eps: &[f64], wall: &WallProfile, lattice: &LatticeParams) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::EpsilonSchedule("schedule is empty".into()));
    }
    for (i, &e) in eps.iter().enumerate() {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::EpsilonSchedule(format!("eps[{i}] = {e} outside (0, 1)")));
        }
        if i > 0 && !(e < eps[i - 1]) {
            return Err(Error::EpsilonSchedule(format!(
                "not strictly decreasing at index {i}: {} then {e}",
                eps[i - 1]
            )));
        }
        if 2.0 * wall.a3 * e >= lattice.a2 / 2.0 {
            return Err(Error::EpsilonSchedule(format!(
                "eps = {e}: 2*a3*eps = {} reaches a2/2 = {}, adjacent walls overlap",
                2.0 * wall.a3 * e,
                lattice.a2 / 2.0
            )));
        }
    }
    Ok(())
}

fn wall_err(clause: WallClause, detail: String) -> Error {
    Error::WallViolation { clause, detail }
}

pub fn validate_wall(wall: &WallProfile) -> Result<()> {
    let a3 = wall.a3;
    if !(a3 > 0.0) || !a3.is_finite() {
        return Err(wall_err(WallClause::Support, format!("a3 = {a3} must be positive")));
    }
    if !(wall.c0 > 0.0) || !wall.c0.is_finite() {
        return Err(wall_err(WallClause::Plateau, format!("c0 = {} must be positive", wall.c0)));
    }
    match &wall.shape {
        WallShape::Table { values } => {
            if values.len() < 2 {
                return Err(wall_err(WallClause::Table, "table needs at least 2 samples".into()));
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(wall_err(WallClause::Table, format!("sample {i} is not finite")));
            }
            let (first, last) = (values[0], values[values.len() - 1]);
            if first.abs() > VALUE_TOL || last.abs() > VALUE_TOL {
                return Err(wall_err(
                    WallClause::Continuity,
                    format!("table endpoints ({first}, {last}) must vanish at ±2a3"),
                ));
            }
        }
        WallShape::Trapezoid { height } | WallShape::RaisedCosine { height } => {
            if !height.is_finite() {
                return Err(wall_err(WallClause::Plateau, "height is not finite".into()));
            }
        }
        WallShape::Function(_) => {
            // support: must vanish on (2a3, 3a3] on both sides
            for i in 1..=1024 {
                let x = 2.0 * a3 + a3 * i as f64 / 1024.0;
                for xi in [x, -x] {
                    let v = wall.eval(xi);
                    if v.abs() > VALUE_TOL {
                        return Err(wall_err(
                            WallClause::Support,
                            format!("V({xi}) = {v} outside [-2a3, 2a3]"),
                        ));
                    }
                }
            }
            check_continuity(|x| wall.eval(x), -3.0 * a3, 3.0 * a3)?;
        }
    }
    let n = WALL_VALIDATION_POINTS;
    let mut min_v = f64::INFINITY;
    let mut min_at = 0.0;
    let mut min_plateau = f64::INFINITY;
    let mut plateau_at = 0.0;
    for i in 0..n {
        let xi = -2.0 * a3 + 4.0 * a3 * i as f64 / (n - 1) as f64;
        let v = wall.eval(xi);
        if !v.is_finite() {
            return Err(wall_err(WallClause::Continuity, format!("V({xi}) is not finite")));
        }
        if v < min_v {
            min_v = v;
            min_at = xi;
        }
        if xi.abs() <= a3 && v < min_plateau {
            min_plateau = v;
            plateau_at = xi;
        }
    }
    if min_v < -VALUE_TOL {
        return Err(wall_err(
            WallClause::Positivity,
            format!("V({min_at}) = {min_v} < 0"),
        ));
    }
    if min_plateau < wall.c0 - VALUE_TOL {
        return Err(wall_err(
            WallClause::Plateau,
            format!("V({plateau_at}) = {min_plateau} < c0 = {}", wall.c0),
        ));
    }
    Ok(())
}

// A jump keeps its size under grid refinement, a continuous profile does not.
fn check_continuity(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    let max_step = |n: usize| {
        let mut worst = 0.0f64;
        let mut at = lo;
        let mut prev = f(lo);
        for i in 1..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(x);
            if (v - prev).abs() > worst {
                worst = (v - prev).abs();
                at = x;
            }
            prev = v;
        }
        (worst, at)
    };
    let (coarse, _) = max_step(1024);
    let (fine, at) = max_step(16384);
    let peak = (0..=1024)
        .map(|i| f(lo + (hi - lo) * i as f64 / 1024.0).abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    if fine > 1e-6 * peak && fine > 0.5 * coarse {
        return Err(wall_err(
            WallClause::Continuity,
            format!("jump of size {fine} near xi = {at}"),
        ));
    }
    Ok(())
}

fn coeff_err(field: Field, clause: CoefficientClause, magnitude: f64) -> Error {
    Error::CoefficientViolation {
        field: field.to_string(),
        clause,
        magnitude,
    }
}

pub fn validate_coefficients(coeffs: &CoefficientFields, lattice: &LatticeParams) -> Result<()> {
    let (a1, a2) = (lattice.a1, lattice.a2);
    let delta = coeffs.margin;
    for f in [Field::A11, Field::A1, Field::A0] {
        if !(delta > 0.0) || 2.0 * delta >= a1.min(a2) {
            return Err(coeff_err(f, CoefficientClause::Margin, delta));
        }
        let spec = coeffs.spec(f);
        if let FieldSpec::Grid { n1, n2, values } = spec {
            if *n1 < 2 || *n2 < 2 || values.len() != n1 * n2 {
                return Err(coeff_err(f, CoefficientClause::Grid, values.len() as f64));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(coeff_err(f, CoefficientClause::Grid, f64::NAN));
            }
        }
        if let FieldSpec::BumpHarmonic { delta: d, .. } = spec {
            if !(*d > 0.0) || 2.0 * d >= a1.min(a2) {
                return Err(coeff_err(f, CoefficientClause::Margin, *d));
            }
        }
        if spec.is_zero() {
            continue;
        }
        let n = COEFF_VALIDATION_POINTS;
        let x = |i: usize| a1 * i as f64 / (n - 1) as f64;
        let y = |i: usize| a2 * i as f64 / (n - 1) as f64;
        let mut scale = 0.0f64;
        let mut margin_worst = 0.0f64;
        for i in 0..n {
            for l in 0..n {
                let (px, py) = (x(i), y(l));
                let v = spec.eval(px, py, lattice);
                if !v.is_finite() {
                    return Err(coeff_err(f, CoefficientClause::Grid, f64::NAN));
                }
                scale = scale.max(v.abs());
                let dist = px.min(a1 - px).min(py).min(a2 - py);
                if dist <= delta {
                    margin_worst = margin_worst.max(v.abs());
                }
            }
        }
        let mut per_worst = 0.0f64;
        for i in 0..n {
            per_worst = per_worst
                .max((spec.eval(0.0, y(i), lattice) - spec.eval(a1, y(i), lattice)).abs())
                .max((spec.eval(x(i), 0.0, lattice) - spec.eval(x(i), a2, lattice)).abs());
        }
        if per_worst > VALUE_TOL * scale.max(1.0) {
            return Err(coeff_err(f, CoefficientClause::Periodicity, per_worst));
        }
        if margin_worst > VALUE_TOL {
            return Err(coeff_err(f, CoefficientClause::Margin, margin_worst));
        }
    }
    Ok(())
}
