//! Plane-wave solver for the 1D fiber operator −d²/dx₂² + ε^{−3/2}V_ε on (0, a2)
//! with quasiperiodic conditions, and its convergence to the Dirichlet limit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{check_overlap, wall_fourier, OperatorConfig};
use crate::numerics::{eigh, fit_order, EigenResult, HermitianMatrix, OrderFit};
use crate::predictor::{lambda_half_1d, lambda_half_1d_alt_parity};

/// Largest default plane-wave cutoff.
pub const MAX_DEFAULT_Q: usize = 4000;

/// Default cutoff ceil(6·a2/(ε·a3)), capped.
pub fn default_q(cfg: &OperatorConfig, eps: f64) -> usize {
    ((6.0 * cfg.lattice.a2 / (eps * cfg.wall.a3)).ceil() as usize).min(MAX_DEFAULT_Q)
}

/// Smallest cutoff that resolves the wall: max(8, ceil(4·a2/(ε·a3))).
pub fn recommended_q(cfg: &OperatorConfig, eps: f64) -> usize {
    ((4.0 * cfg.lattice.a2 / (eps * cfg.wall.a3)).ceil() as usize).max(8)
}

fn cutoff_note(cfg: &OperatorConfig, eps: f64, q: usize) -> Option<String> {
    let rec = recommended_q(cfg, eps);
    (q < rec).then(|| format!("cutoff Q = {q} below recommended {rec} at eps = {eps}"))
}

/// V̂_ε(k) for k in [−2Q, 2Q], index k + 2Q.
pub fn wall_table(cfg: &OperatorConfig, eps: f64, q: usize) -> Result<Vec<Complex64>> {
    check_overlap(&cfg.wall, eps, cfg.lattice.a2)?;
    let q = q as i64;
    (-2 * q..=2 * q)
        .map(|k| wall_fourier(&cfg.wall, eps, cfg.lattice.a2, k))
        .collect()
}

/// Galerkin matrix over e^{i(τ₂ + 2πq/a2)x₂}, q = −Q..Q.
pub fn assemble_a(cfg: &OperatorConfig, tau2: f64, eps: f64, q: usize) -> Result<HermitianMatrix> {
    let table = wall_table(cfg, eps, q)?;
    assemble_from_table(cfg.lattice.a2, &table, tau2, eps, q)
}

fn assemble_from_table(a2: f64, table: &[Complex64], tau2: f64, eps: f64, q: usize) -> Result<HermitianMatrix> {
    let dim = 2 * q + 1;
    let amp = eps.powf(-1.5);
    let qi = q as i64;
    HermitianMatrix::from_fn(dim, |i, j| {
        let k = i as i64 - j as i64;
        let mut v = table[(k + 2 * qi) as usize] * amp;
        if i == j {
            let kq = tau2 + 2.0 * PI * (i as i64 - qi) as f64 / a2;
            v += kq * kq;
        }
        v
    })
}

#[derive(Debug, Clone)]
pub struct Spectrum1D {
    pub tau2: f64,
    pub eps: f64,
    pub q: usize,
    pub values: Vec<f64>,
    pub cutoff_note: Option<String>,
}

pub fn bands_1d(cfg: &OperatorConfig, tau2: f64, eps: f64, q: usize) -> Result<Spectrum1D> {
    let h = assemble_a(cfg, tau2, eps, q)?;
    let r = eigh(&h, false)?;
    Ok(Spectrum1D {
        tau2,
        eps,
        q,
        values: r.values,
        cutoff_note: cutoff_note(cfg, eps, q),
    })
}

/// Eigenpairs of the 1D problem; vectors indexed by q + Q.
pub fn eigenpairs_1d(cfg: &OperatorConfig, tau2: f64, eps: f64, q: usize) -> Result<EigenResult> {
    eigh(&assemble_a(cfg, tau2, eps, q)?, true)
}

/// Convergence data for one band index p.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BandConvergence {
    pub p: u32,
    pub limit: f64,
    /// (ε, λ_ε^(p))
    pub values: Vec<(f64, f64)>,
    /// (ε, |λ_ε^(p) − limit|)
    pub errors: Vec<(f64, f64)>,
    /// `None` when every error vanishes (order reported as exact).
    pub order: Option<OrderFit>,
    /// (ε, (λ_ε^(p) − limit)/ε^{1/2})
    pub scaled: Vec<(f64, f64)>,
    pub predicted: f64,
    /// The formula with the opposite parity factor.
    pub predicted_alt: f64,
    /// Fit of |scaled − predicted| against ε.
    pub scaled_residual_order: Option<OrderFit>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Convergence1D {
    pub tau2: f64,
    pub bands: Vec<BandConvergence>,
    pub cutoffs: Vec<(f64, usize)>,
}

fn fit_or_exact(samples: &[(f64, f64)]) -> Result<Option<OrderFit>> {
    match fit_order(samples, 0) {
        Ok(f) => Ok(Some(f)),
        Err(Error::DegenerateFit(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Rates of λ_ε^(p) → π²p²/a2² over the config's ε schedule.
pub fn convergence_1d(cfg: &OperatorConfig, tau2: f64, p_max: u32) -> Result<Convergence1D> {
    if cfg.epsilons.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "convergence needs at least 4 eps values, have {}",
            cfg.epsilons.len()
        )));
    }
    if !(1..=3).contains(&p_max) {
        return Err(Error::InvalidArgument(format!("p_max = {p_max} must be in 1..=3")));
    }
    let spectra: Vec<Spectrum1D> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| bands_1d(cfg, tau2, eps, default_q(cfg, eps)))
        .collect::<Result<_>>()?;
    let a2 = cfg.lattice.a2;
    let mass = cfg.mass();
    let mut bands = Vec::new();
    for p in 1..=p_max {
        let limit = (PI * p as f64 / a2).powi(2);
        let values: Vec<(f64, f64)> = spectra.iter().map(|s| (s.eps, s.values[p as usize - 1])).collect();
        let errors: Vec<(f64, f64)> = values.iter().map(|&(e, v)| (e, (v - limit).abs())).collect();
        let scaled: Vec<(f64, f64)> = values.iter().map(|&(e, v)| (e, (v - limit) / e.sqrt())).collect();
        let predicted = lambda_half_1d(p, tau2, a2, mass);
        let predicted_alt = lambda_half_1d_alt_parity(p, p % 2 == 1, tau2, a2, mass);
        let resid: Vec<(f64, f64)> = scaled.iter().map(|&(e, s)| (e, (s - predicted).abs())).collect();
        bands.push(BandConvergence {
            p,
            limit,
            order: fit_or_exact(&errors)?,
            values,
            errors,
            scaled,
            predicted,
            predicted_alt,
            scaled_residual_order: fit_or_exact(&resid)?,
        });
    }
    Ok(Convergence1D {
        tau2,
        bands,
        cutoffs: spectra.iter().map(|s| (s.eps, s.q)).collect(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{CoefficientFields, LatticeParams, WallProfile, WallShape};

    pub(crate) fn s1_wall_config(height: f64) -> OperatorConfig {
        OperatorConfig {
            lattice: LatticeParams::new(1.0, 1.0).unwrap(),
            wall: WallProfile::trapezoid(0.25, 1.0, height),
            coeffs: CoefficientFields::zero(0.1),
            alpha: 0.4,
            epsilons: vec![0.1, 0.07, 0.05, 0.035, 0.025],
            validation: None,
        }
    }

    fn zero_wall_config() -> OperatorConfig {
        let mut cfg = s1_wall_config(1.0);
        cfg.wall.shape = WallShape::Table { values: vec![0.0; 5] };
        cfg
    }

    #[test]
    fn free_operator_is_diagonal() {
        let h = assemble_a(&zero_wall_config(), 0.0, 0.05, 2).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { (2.0 * PI * (i as f64 - 2.0)).powi(2) } else { 0.0 };
                assert!((h.get(i, j).re - expect).abs() < 1e-12);
                assert_eq!(h.get(i, j).im, 0.0);
            }
        }
        let s = bands_1d(&zero_wall_config(), PI / 2.0, 0.05, 3).unwrap();
        let mut expect: Vec<f64> = (-3..=3).map(|q| (PI / 2.0 + 2.0 * PI * q as f64).powi(2)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in s.values.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn hermitian_and_diagonal_shift() {
        let cfg = s1_wall_config(1.0);
        let h = assemble_a(&cfg, 0.3, 0.05, 200).unwrap();
        assert!(h.asymmetry() <= 1e-12 * h.max_abs());
        let shift = 0.75 * 0.05f64.powf(-0.5);
        for (i, q) in [(0usize, -200i64), (200, 0), (400, 200)] {
            let free = (0.3 + 2.0 * PI * q as f64).powi(2);
            assert!((h.get(i, i).re - free - shift).abs() < 1e-9);
        }
    }

    #[test]
    fn lowest_band_below_dirichlet_limit_and_rising() {
        let cfg = s1_wall_config(1.0);
        let s = bands_1d(&cfg, 0.0, 0.05, default_q(&cfg, 0.05)).unwrap();
        let coarse = bands_1d(&cfg, 0.0, 0.1, default_q(&cfg, 0.1)).unwrap();
        let l = s.values[0];
        assert!(l > 0.0 && l < PI * PI);
        assert!(l > coarse.values[0]);
        assert!(s.cutoff_note.is_none());
    }

    #[test]
    fn truncation_cauchy() {
        let cfg = s1_wall_config(1.0);
        let a = bands_1d(&cfg, 0.0, 0.05, 200).unwrap().values[0];
        let b = bands_1d(&cfg, 0.0, 0.05, 400).unwrap().values[0];
        let c = bands_1d(&cfg, 0.0, 0.05, 100).unwrap().values[0];
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        assert!((a - b).abs() < (c - a).abs());
    }

    #[test]
    fn even_in_tau2_and_nonnegative() {
        let cfg = s1_wall_config(1.0);
        for tau2 in [0.4, 1.3, 2.9] {
            let a = bands_1d(&cfg, tau2, 0.07, 150).unwrap().values;
            let b = bands_1d(&cfg, -tau2, 0.07, 150).unwrap().values;
            assert!(a[0] >= -1e-8);
            for (x, y) in a.iter().zip(&b).take(20) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn monotone_in_wall_height() {
        let low = s1_wall_config(1.0);
        let high = s1_wall_config(2.0);
        for tau2 in [0.0, 1.0] {
            let a = bands_1d(&low, tau2, 0.07, 150).unwrap().values;
            let b = bands_1d(&high, tau2, 0.07, 150).unwrap().values;
            for (x, y) in a.iter().zip(&b).take(30) {
                assert!(y >= &(x - 1e-9));
            }
        }
    }

    #[test]
    fn convergence_report_shape() {
        let mut cfg = s1_wall_config(1.0);
        cfg.epsilons = vec![0.2, 0.15, 0.1, 0.07];
        let r = convergence_1d(&cfg, 0.0, 2).unwrap();
        assert_eq!(r.bands.len(), 2);
        assert!(r.bands[0].order.is_some());
        assert!((r.bands[1].predicted).abs() < 1e-12);
        cfg.epsilons = vec![0.1, 0.05, 0.025];
        assert!(matches!(convergence_1d(&cfg, 0.0, 1), Err(Error::InsufficientData(_))));
    }
}
