//! Crossings of the p = 1 and p = 2 Dirichlet-strip dispersion curves, the
//! admissibility conditions for gap opening, and inverse lattice design.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::LatticeParams;
use crate::numerics::HermitianMatrix;

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Crossing {
    pub n: i64,
    pub m: i64,
    pub tau0: f64,
    pub e0: f64,
    /// τ₀ sits on 0 or π/a1, where the interior-extremum mechanism does not apply.
    pub boundary: bool,
    pub lattice: LatticeParams,
}

impl Crossing {
    /// Builds a crossing from (n, m, τ₀) and checks it against the crossing equation.
    pub fn new(n: i64, m: i64, tau0: f64, lattice: LatticeParams) -> Result<Self> {
        let e1 = strip_energy(&lattice, n, 1, tau0);
        let e2 = strip_energy(&lattice, m, 2, tau0);
        if (e1 - e2).abs() > 1e-12 * e1.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "(n, m, tau0) = ({n}, {m}, {tau0}) is not a crossing: {e1} != {e2}"
            )));
        }
        if n == 0 && m == 0 {
            return Err(Error::InvalidArgument("(n, m) = (0, 0)".into()));
        }
        let zone = PI / lattice.a1;
        Ok(Crossing {
            n,
            m,
            tau0,
            e0: e1,
            boundary: tau0.abs() < BOUNDARY_TOL * zone.max(1.0)
                || (tau0.abs() - zone).abs() < BOUNDARY_TOL * zone.max(1.0),
            lattice,
        })
    }

    /// Same crossing seen from the other side of the zone: (−τ₀, −n, −m).
    pub fn mirrored(&self) -> Self {
        Crossing {
            n: -self.n,
            m: -self.m,
            tau0: -self.tau0,
            ..*self
        }
    }

    /// Canonical representative with τ₀ ≥ 0.
    pub fn normalized(&self) -> Self {
        if self.tau0 < 0.0 {
            self.mirrored()
        } else {
            *self
        }
    }

    /// Product (τ₀ + 2πn/a1)(τ₀ + 2πm/a1) of the two slopes' halves.
    pub fn slope_product(&self) -> f64 {
        let u = 2.0 * PI / self.lattice.a1;
        (self.tau0 + u * self.n as f64) * (self.tau0 + u * self.m as f64)
    }
}

/// E₀^{(n,p)}(τ₁) = (τ₁ + 2πn/a1)² + π²p²/a2²
pub fn strip_energy(lattice: &LatticeParams, n: i64, p: i64, tau1: f64) -> f64 {
    (tau1 + 2.0 * PI * n as f64 / lattice.a1).powi(2)
        + (PI * p as f64 / lattice.a2).powi(2)
}

fn in_window(lattice: &LatticeParams, e0: f64) -> bool {
    let base = (PI / lattice.a2).powi(2);
    e0 > base && e0 < 9.0 * base
}

/// All crossings with |n|, |m| ≤ n_max inside the zone, normalized to τ₀ ≥ 0, sorted by E₀.
pub fn enumerate_crossings(lattice: &LatticeParams, n_max: i64) -> Vec<Crossing> {
    let u = 2.0 * PI / lattice.a1;
    let rhs = 3.0 * (PI / lattice.a2).powi(2);
    let zone = PI / lattice.a1;
    let mut out: Vec<Crossing> = Vec::new();
    for n in -n_max..=n_max {
        for m in -n_max..=n_max {
            if n == m {
                continue;
            }
            let (nf, mf) = (n as f64, m as f64);
            // (τ + un)² − (τ + um)² = 2uτ(n − m) + u²(n² − m²)
            let tau = (rhs - u * u * (nf * nf - mf * mf)) / (2.0 * u * (nf - mf));
            if tau.abs() > zone * (1.0 + 1e-14) {
                continue;
            }
            let tau = tau.clamp(-zone, zone);
            let tau = if tau.abs() < 1e-12 * zone { 0.0 } else { tau };
            let (n, m, tau) = if tau < 0.0 { (-n, -m, -tau) } else { (n, m, tau) };
            let Ok(c) = Crossing::new(n, m, tau, *lattice) else {
                continue;
            };
            if !in_window(lattice, c.e0) {
                continue;
            }
            out.push(c);
        }
    }
    // at τ₀ = 0 both (n, m) and (−n, −m) survive; keep the lexicographically smaller pair
    out.retain(|c| !(c.tau0 == 0.0 && (c.n, c.m) > (-c.n, -c.m)));
    out.sort_by(|a, b| {
        a.e0.total_cmp(&b.e0)
            .then(a.n.cmp(&b.n))
            .then(a.m.cmp(&b.m))
            .then(a.tau0.total_cmp(&b.tau0))
    });
    out.dedup_by(|a, b| a.n == b.n && a.m == b.m && a.tau0 == b.tau0);
    out
}

/// Period a1 putting the (n, m) crossing at the prescribed (τ₀, E₀) for the given a2.
pub fn design_a1(e0_target: f64, tau0_target: f64, n: i64, m: i64, a2: f64) -> Result<f64> {
    if n == m {
        return Err(Error::InvalidArgument("design_a1 needs n != m".into()));
    }
    if !(tau0_target >= 0.0) || !(a2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau0 = {tau0_target} must be non-negative and a2 = {a2} positive"
        )));
    }
    let base = (PI / a2).powi(2);
    if !(e0_target > base && e0_target < 9.0 * base) {
        return Err(Error::NoAdmissibleRoot(format!(
            "E0 = {e0_target} outside ({base}, {})",
            9.0 * base
        )));
    }
    // (τ₀ + u k)² = E₀ − π²p²/a2², u = 2π/a1, using whichever index is nonzero
    let (k, p) = if n != 0 { (n, 1.0) } else { (m, 2.0) };
    let rhs = e0_target - p * p * base;
    if rhs < 0.0 {
        return Err(Error::NoAdmissibleRoot(format!(
            "E0 = {e0_target} lies below the p = {p} band bottom"
        )));
    }
    let root = rhs.sqrt();
    let mut candidates: Vec<f64> = [root, -root]
        .iter()
        .map(|r| (r - tau0_target) / k as f64)
        .filter(|u| *u > 0.0)
        .collect();
    candidates.sort_by(|a, b| a.total_cmp(b));
    for u in candidates {
        let a1 = 2.0 * PI / u;
        if tau0_target > PI / a1 * (1.0 + 1e-12) {
            continue;
        }
        let lat = LatticeParams { a1, a2 };
        let e1 = strip_energy(&lat, n, 1, tau0_target);
        let e2 = strip_energy(&lat, m, 2, tau0_target);
        let rel = |x: f64| (x - e0_target).abs() / e0_target;
        if rel(e1) <= 1e-10 && rel(e2) <= 1e-10 {
            return Ok(a1);
        }
    }
    Err(Error::NoAdmissibleRoot(format!(
        "no positive a1 satisfies both band equations for (n, m) = ({n}, {m}), tau0 = {tau0_target}"
    )))
}

/// The three admissibility inequalities for gap opening, with raw values.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionReport {
    pub m12_nonzero_at_plus: bool,
    pub m12_abs_plus: f64,
    pub m12_nonzero_at_minus: bool,
    pub m12_abs_minus: f64,
    pub slopes_opposite: bool,
    pub slope_product: f64,
    pub beta_order: bool,
    pub beta_l: f64,
    pub beta_r: f64,
}

impl ConditionReport {
    pub fn admissible(&self) -> bool {
        self.m12_nonzero_at_plus && self.m12_nonzero_at_minus && self.slopes_opposite && self.beta_order
    }

    pub fn failures(&self) -> Vec<String> {
        let mut f = Vec::new();
        if !self.m12_nonzero_at_plus {
            f.push(format!("M12(+tau0) = {:e}", self.m12_abs_plus));
        }
        if !self.m12_nonzero_at_minus {
            f.push(format!("M12(-tau0) = {:e}", self.m12_abs_minus));
        }
        if !self.slopes_opposite {
            f.push(format!("slope product = {} >= 0", self.slope_product));
        }
        if !self.beta_order {
            f.push(format!("beta_l = {} >= beta_r = {}", self.beta_l, self.beta_r));
        }
        f
    }
}

fn m12_nonzero(m0: &HermitianMatrix) -> (bool, f64) {
    let g = m0.get(0, 1).norm();
    (g > 1e-10 * m0.max_abs(), g)
}

pub fn check_conditions(
    crossing: &Crossing,
    m0_plus: &HermitianMatrix,
    m0_minus: &HermitianMatrix,
    beta_l: f64,
    beta_r: f64,
) -> ConditionReport {
    let (p_ok, p_abs) = m12_nonzero(m0_plus);
    let (m_ok, m_abs) = m12_nonzero(m0_minus);
    let product = crossing.slope_product();
    ConditionReport {
        m12_nonzero_at_plus: p_ok,
        m12_abs_plus: p_abs,
        m12_nonzero_at_minus: m_ok,
        m12_abs_minus: m_abs,
        slopes_opposite: product < 0.0,
        slope_product: product,
        beta_order: beta_l < beta_r,
        beta_l,
        beta_r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn unit() -> LatticeParams {
        LatticeParams::new(1.0, 1.0).unwrap()
    }

    fn find(list: &[Crossing], n: i64, m: i64) -> Option<Crossing> {
        list.iter().copied().find(|c| c.n == n && c.m == m)
    }

    #[test]
    fn none_at_n_max_zero() {
        assert!(enumerate_crossings(&unit(), 0).is_empty());
    }

    #[test]
    fn unit_lattice_examples() {
        let list = enumerate_crossings(&unit(), 1);
        let c = find(&list, -1, 0).expect("(-1, 0) crossing");
        assert!((c.tau0 - PI / 4.0).abs() < 1e-14);
        // (π/4 − 2π)² + π² = (π/4)² + 4π² = 65π²/16
        let oracle = 65.0 * PI * PI / 16.0;
        assert!((c.e0 - oracle).abs() < 1e-12 * oracle);
        assert!((c.e0 - 40.0953).abs() < 1e-4);
        let c = find(&list, 1, -1).expect("(1, -1) crossing");
        assert!((c.tau0 - 3.0 * PI / 8.0).abs() < 1e-14);
        assert!((c.e0 - 425.0 * PI * PI / 64.0).abs() < 1e-11);
        for w in list.windows(2) {
            assert!(w[0].e0 <= w[1].e0);
        }
    }

    #[test]
    fn design_recovers_unit_lattice() {
        let a1 = design_a1(65.0 * PI * PI / 16.0, PI / 4.0, -1, 0, 1.0).unwrap();
        assert!((a1 - 1.0).abs() < 1e-12);
        let a1 = design_a1(425.0 * PI * PI / 64.0, 3.0 * PI / 8.0, 1, -1, 1.0).unwrap();
        assert!((a1 - 1.0).abs() < 1e-12);
        assert!(matches!(
            design_a1(10.0 * PI * PI, 0.1, -1, 0, 1.0),
            Err(Error::NoAdmissibleRoot(_))
        ));
    }

    #[test]
    fn conditions_examples() {
        let c = find(&enumerate_crossings(&unit(), 1), -1, 0).unwrap();
        let zero = HermitianMatrix::from_real_diagonal(&[0.0, 0.0]).unwrap();
        let r = check_conditions(&c, &zero, &zero, -1.0, 1.0);
        assert!(!r.m12_nonzero_at_plus && !r.m12_nonzero_at_minus);
        assert!(r.slopes_opposite);
        assert!((r.slope_product + 7.0 * PI * PI / 16.0).abs() < 1e-12);
        assert!(r.beta_order);
        assert!(!r.admissible());
        assert_eq!(r.failures().len(), 2);

        let z = Complex64::new(0.0, 0.0);
        let off = HermitianMatrix::new(2, vec![z, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), z]).unwrap();
        let r = check_conditions(&c, &off, &off, -1.0, 1.0);
        assert!(r.admissible());
    }

    #[test]
    fn boundary_flag() {
        // tau0 = 0: u²(n² − m²) = 3π² with u = 2π/a1 = π, n = 2, m = 1
        let lat = LatticeParams::new(2.0, 1.0).unwrap();
        let c = Crossing::new(2, 1, 0.0, lat).unwrap();
        assert!(c.boundary);
        let list = enumerate_crossings(&lat, 2);
        let hits: Vec<_> = list.iter().filter(|c| c.tau0 == 0.0 && c.n.abs() == 2 && c.m.abs() == 1).collect();
        // (±2, ±1) collapse to one representative per mirror pair: (−2, −1) and (−2, 1)
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|c| c.boundary && c.n == -2));
    }

    proptest! {
        #[test]
        fn crossings_satisfy_equation_and_normalization(a1 in 0.3f64..3.0, a2 in 0.3f64..3.0, n_max in 0i64..4) {
            let lat = LatticeParams::new(a1, a2).unwrap();
            for c in enumerate_crossings(&lat, n_max) {
                let e1 = strip_energy(&lat, c.n, 1, c.tau0);
                let e2 = strip_energy(&lat, c.m, 2, c.tau0);
                prop_assert!((e1 - e2).abs() <= 1e-12 * e1);
                prop_assert!((c.e0 - e1).abs() <= 1e-12 * e1);
                prop_assert!(c.tau0 >= 0.0 && c.tau0 <= PI / a1 * (1.0 + 1e-14));
                prop_assert!(c.e0 > (PI / a2).powi(2) && c.e0 < 9.0 * (PI / a2).powi(2));
                prop_assert!(c.n != 0 || c.m != 0);
                prop_assert_eq!(c.normalized(), c);
            }
        }

        #[test]
        fn design_inverts_enumeration(a1 in 0.3f64..3.0, a2 in 0.3f64..3.0) {
            let lat = LatticeParams::new(a1, a2).unwrap();
            for c in enumerate_crossings(&lat, 3) {
                if c.boundary {
                    continue;
                }
                let got = design_a1(c.e0, c.tau0, c.n, c.m, a2).unwrap();
                let back = LatticeParams::new(got, a2).unwrap();
                prop_assert!((strip_energy(&back, c.n, 1, c.tau0) - c.e0).abs() <= 1e-9 * c.e0);
                prop_assert!((strip_energy(&back, c.m, 2, c.tau0) - c.e0).abs() <= 1e-9 * c.e0);
            }
        }
    }
}
