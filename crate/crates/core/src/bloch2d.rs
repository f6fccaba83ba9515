//! Fiber operator H_ε(τ) on the periodicity cell: dense plane-wave Galerkin
//! assembly, a reduced basis built from the exact 1D wall modes, and the
//! Dirichlet-strip reference spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bloch1d::{self, wall_table};
use crate::error::{Error, Result};
use crate::model::{CoeffTables, Field, LatticeParams, OperatorConfig, QuasiMomentum};
use crate::numerics::{eigh, HermitianMatrix};

/// Largest dense plane-wave dimension (2N+1)(2Q+1).
pub const DENSE_DIM_CAP: usize = 8000;
pub const DEFAULT_N: usize = 16;
/// Default reduced-basis sizes: x₁ harmonics |n| ≤ N and wall modes p ≤ P.
pub const DEFAULT_MODAL_N: usize = 4;
pub const DEFAULT_MODAL_P: usize = 8;

const FIELDS: [Field; 3] = [Field::A11, Field::A1, Field::A0];

/// Default dense cutoffs, or `None` when the dimension cap would bind at this ε.
pub fn default_cutoffs(cfg: &OperatorConfig, eps: f64) -> Option<(usize, usize)> {
    let q = bloch1d::default_q(cfg, eps);
    ((2 * DEFAULT_N + 1) * (2 * q + 1) <= DENSE_DIM_CAP).then_some((DEFAULT_N, q))
}

#[inline]
fn perturbation_weight(f: Field, pa: f64, pb: f64) -> f64 {
    match f {
        Field::A11 => -pa * pb,
        Field::A1 => -(pa + pb),
        Field::A0 => 1.0,
    }
}

/// Dense matrix over e^{i(τ₁+2πn/a1)x₁}e^{i(τ₂+2πq/a2)x₂}, |n| ≤ N, |q| ≤ Q,
/// ordered n-major.
pub fn assemble_h(cfg: &OperatorConfig, tau: QuasiMomentum, eps: f64, n: usize, q: usize) -> Result<HermitianMatrix> {
    let nq = 2 * q + 1;
    let dim = (2 * n + 1) * nq;
    if dim > DENSE_DIM_CAP {
        return Err(Error::InvalidArgument(format!(
            "dense dimension {dim} exceeds the cap {DENSE_DIM_CAP}"
        )));
    }
    let (a1, a2) = (cfg.lattice.a1, cfg.lattice.a2);
    let wall = wall_table(cfg, eps, q)?;
    let tables: Option<std::sync::Arc<CoeffTables>> = if cfg.coeffs.is_zero() {
        None
    } else {
        Some(cfg.tables()?)
    };
    let amp = eps.powf(-1.5);
    let ea = eps.powf(cfg.alpha);
    let (ni, qi) = (n as i64, q as i64);
    let p1 = |k: usize| tau.tau1 + 2.0 * PI * (k as i64 / nq as i64 - ni) as f64 / a1;
    let qidx = |k: usize| (k % nq) as i64 - qi;
    HermitianMatrix::from_fn(dim, |i, j| {
        let (na, nb) = (i / nq, j / nq);
        let (qa, qb) = (qidx(i), qidx(j));
        let mut v = Complex64::new(0.0, 0.0);
        if na == nb {
            v += wall[(qa - qb + 2 * qi) as usize] * amp;
            if qa == qb {
                let k2 = tau.tau2 + 2.0 * PI * qa as f64 / a2;
                v += p1(i).powi(2) + k2 * k2;
            }
        }
        if let Some(t) = &tables {
            let (pa, pb) = (p1(i), p1(j));
            let dn = na as i64 - nb as i64;
            for f in FIELDS {
                if let Some(ft) = t.field(f) {
                    v += ft.coeff(dn, qa - qb) * (ea * perturbation_weight(f, pa, pb));
                }
            }
        }
        v
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BandSample {
    pub tau: QuasiMomentum,
    pub eps: f64,
    pub n_cut: usize,
    pub q_cut: usize,
    /// Wall modes kept by the reduced basis; `None` for the dense solver.
    pub p_modes: Option<usize>,
    pub window: (f64, f64),
    /// (global ascending index k, E) for every eigenvalue inside the window.
    pub levels: Vec<(usize, f64)>,
    pub cutoff_note: Option<String>,
}

fn in_window(values: &[f64], window: (f64, f64)) -> Result<Vec<(usize, f64)>> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument(format!(
            "empty window ({}, {})",
            window.0, window.1
        )));
    }
    Ok(values
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, e)| *e >= window.0 && *e <= window.1)
        .collect())
}

pub fn bands_2d(
    cfg: &OperatorConfig,
    tau: QuasiMomentum,
    eps: f64,
    n: usize,
    q: usize,
    window: (f64, f64),
) -> Result<BandSample> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument("window must be nonempty".into()));
    }
    let values = eigh(&assemble_h(cfg, tau, eps, n, q)?, false)?.values;
    let rec = bloch1d::recommended_q(cfg, eps);
    Ok(BandSample {
        tau,
        eps,
        n_cut: n,
        q_cut: q,
        p_modes: None,
        window,
        levels: in_window(&values, window)?,
        cutoff_note: (q < rec).then(|| format!("Q = {q} below recommended {rec}")),
    })
}

/// Lowest `count` strip levels (n, p, E₀^{(n,p)}(τ₁)), ties in (n, p) order.
pub fn reference_bands(lattice: &LatticeParams, tau1: f64, count: usize) -> Vec<(i64, i64, f64)> {
    let count = count.max(1);
    let u = 2.0 * PI / lattice.a1;
    let e = |n: i64, p: i64| (tau1 + u * n as f64).powi(2) + (PI * p as f64 / lattice.a2).powi(2);
    // any `count` distinct levels bound the answer from above
    let n0 = (-tau1 / u).round() as i64;
    let bound = (1..=count as i64).map(|p| e(n0, p)).fold(0.0, f64::max);
    let n_span = (bound.sqrt() / u).ceil() as i64 + 1;
    let p_max = (bound.sqrt() * lattice.a2 / PI).floor() as i64 + 1;
    let mut all = Vec::new();
    for n in n0 - n_span..=n0 + n_span {
        for p in 1..=p_max {
            let v = e(n, p);
            if v <= bound * (1.0 + 1e-12) {
                all.push((n, p, v));
            }
        }
    }
    all.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    all.truncate(count);
    all
}

/// Reduced basis e^{i(τ₁+2πn/a1)x₁}·Ψ^{(p)}(x₂) from the exact 1D wall modes at fixed τ₂.
///
/// The x₁-independent part of H is diagonal in this basis; the perturbation enters
/// through overlaps ⟨Ψ^p, Ã_j Ψ^{p'}⟩ with the x₁-harmonics Ã_j of each field,
/// which do not depend on τ₁. With P = 2Q+1 it reproduces the dense solve exactly.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    pub tau2: f64,
    pub eps: f64,
    pub q: usize,
    pub n_cut: usize,
    pub energies: Vec<f64>,
    // [field][j + 2N] → P×P row-major
    overlaps: [Option<Vec<Vec<Complex64>>>; 3],
}

impl ModalBasis {
    pub fn build(cfg: &OperatorConfig, tau2: f64, eps: f64, q: usize, p_modes: usize, n_cut: usize) -> Result<Self> {
        let dim1 = 2 * q + 1;
        if p_modes == 0 || p_modes > dim1 {
            return Err(Error::InvalidArgument(format!(
                "P = {p_modes} must be in 1..={dim1}"
            )));
        }
        let pairs = bloch1d::eigenpairs_1d(cfg, tau2, eps, q)?;
        let energies = pairs.values[..p_modes].to_vec();
        let mut overlaps: [Option<Vec<Vec<Complex64>>>; 3] = [None, None, None];
        if !cfg.coeffs.is_zero() {
            let tables = cfg.tables()?;
            let jmax = 2 * n_cut as i64;
            let kmax = FIELDS
                .iter()
                .filter_map(|f| tables.field(*f))
                .map(|t| t.q_limit() as usize)
                .max()
                .unwrap_or(0);
            let m = (2 * q + kmax + 1).next_power_of_two().max(16);
            let mut planner = FftPlanner::<f64>::new();
            let inv = planner.plan_fft_inverse(m);
            let place = |coeffs: &mut dyn Iterator<Item = (i64, Complex64)>| {
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                for (k, c) in coeffs {
                    buf[k.rem_euclid(m as i64) as usize] += c;
                }
                inv.process(&mut buf);
                buf
            };
            let qi = q as i64;
            let psi: Vec<Vec<Complex64>> = (0..p_modes)
                .map(|p| {
                    let v = pairs.vector(p).expect("vectors requested");
                    place(&mut v.iter().enumerate().map(|(k, c)| (k as i64 - qi, *c)))
                })
                .collect();
            for (fi, f) in FIELDS.iter().enumerate() {
                let Some(t) = tables.field(*f) else { continue };
                let ql = t.q_limit();
                let mut per_j = Vec::with_capacity(2 * jmax as usize + 1);
                for j in -jmax..=jmax {
                    let a = place(&mut (-ql..=ql).map(|k| (k, t.coeff(j, k))));
                    let mut o = vec![Complex64::new(0.0, 0.0); p_modes * p_modes];
                    for p in 0..p_modes {
                        for pp in 0..p_modes {
                            let s: Complex64 = psi[p]
                                .iter()
                                .zip(&psi[pp])
                                .zip(&a)
                                .map(|((x, y), w)| x.conj() * y * w)
                                .sum();
                            o[p * p_modes + pp] = s / m as f64;
                        }
                    }
                    per_j.push(o);
                }
                overlaps[fi] = Some(per_j);
            }
        }
        Ok(ModalBasis {
            tau2,
            eps,
            q,
            n_cut,
            energies,
            overlaps,
        })
    }

    pub fn p_modes(&self) -> usize {
        self.energies.len()
    }

    /// Reduced matrix at τ₁, ordered n-major then p.
    pub fn matrix(&self, cfg: &OperatorConfig, tau1: f64) -> Result<HermitianMatrix> {
        let pm = self.p_modes();
        let nn = 2 * self.n_cut + 1;
        let ni = self.n_cut as i64;
        let a1 = cfg.lattice.a1;
        let ea = self.eps.powf(cfg.alpha);
        let pn = |n: usize| tau1 + 2.0 * PI * (n as i64 - ni) as f64 / a1;
        HermitianMatrix::from_fn(nn * pm, |i, j| {
            let (na, pa) = (i / pm, i % pm);
            let (nb, pb) = (j / pm, j % pm);
            let mut v = Complex64::new(0.0, 0.0);
            if i == j {
                v += pn(na).powi(2) + self.energies[pa];
            }
            let jj = (na as i64 - nb as i64 + 2 * ni) as usize;
            for (fi, f) in FIELDS.iter().enumerate() {
                if let Some(o) = &self.overlaps[fi] {
                    v += o[jj][pa * pm + pb] * (ea * perturbation_weight(*f, pn(na), pn(nb)));
                }
            }
            v
        })
    }

    pub fn spectrum(&self, cfg: &OperatorConfig, tau1: f64) -> Result<Vec<f64>> {
        Ok(eigh(&self.matrix(cfg, tau1)?, false)?.values)
    }
}

/// Band sample from the reduced basis.
#[allow(clippy::too_many_arguments)]
pub fn bands_2d_modal(
    cfg: &OperatorConfig,
    tau: QuasiMomentum,
    eps: f64,
    n: usize,
    q: usize,
    p_modes: usize,
    window: (f64, f64),
) -> Result<BandSample> {
    let basis = ModalBasis::build(cfg, tau.tau2, eps, q, p_modes, n)?;
    let values = basis.spectrum(cfg, tau.tau1)?;
    let rec = bloch1d::recommended_q(cfg, eps);
    Ok(BandSample {
        tau,
        eps,
        n_cut: n,
        q_cut: q,
        p_modes: Some(p_modes),
        window,
        levels: in_window(&values, window)?,
        cutoff_note: (q < rec).then(|| format!("Q = {q} below recommended {rec}")),
    })
}
