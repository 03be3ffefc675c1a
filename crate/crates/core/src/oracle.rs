//! Brute-force minimizers over a free vector in R^3, independent of the
//! closed forms in [`crate::homogenization`].
//!
//! The objectives below are built literally from the problem statements:
//! the free vector is written into the third column before the
//! `[D_x Θ]^{-1}` factor.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::energy::{w_curv_gamma, w_mp, MaterialParams};
use crate::error::{Error, Result};
use crate::geometry::Mat3x2;
use crate::tensor::{Mat3, Vec3};

/// Second-difference step for Hessian assembly. The objectives are exactly
/// quadratic, so the only error is rounding, which a unit step keeps at
/// machine precision relative to the objective's scale.
pub const DEFAULT_PROBE_STEP: f64 = 1.0;

/// Relative eigenvalue threshold below which a Hessian counts as singular.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Quadratic model `q(v) = c0 + g.v + v.H v / 2` recovered from point values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticProbe {
    pub c0: f64,
    pub g: Vec3,
    pub h: Mat3,
    pub step: f64,
}

impl QuadraticProbe {
    pub fn new(objective: impl Fn(&Vec3) -> f64, step: f64) -> Self {
        let s = step;
        let e = [Vec3::x() * s, Vec3::y() * s, Vec3::z() * s];
        let c0 = objective(&Vec3::zeros());
        let plus = e.map(|v| objective(&v));
        let minus = e.map(|v| objective(&-v));
        let g = Vec3::from_fn(|i, _| (plus[i] - minus[i]) / (2.0 * s));
        let mut h = Mat3::zeros();
        for i in 0..3 {
            h[(i, i)] = (plus[i] - 2.0 * c0 + minus[i]) / (s * s);
            for j in (i + 1)..3 {
                let v = (objective(&(e[i] + e[j])) - objective(&(e[i] - e[j])) - objective(&(e[j] - e[i]))
                    + objective(&-(e[i] + e[j])))
                    / (4.0 * s * s);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        QuadraticProbe { c0, g, h, step }
    }

    pub fn eval(&self, v: &Vec3) -> f64 {
        self.c0 + self.g.dot(v) + 0.5 * v.dot(&(self.h * v))
    }

    /// Extreme eigenvalues `(min, max)` of `H`.
    pub fn eigen_range(&self) -> (f64, f64) {
        let ev = SymmetricEigen::new(self.h).eigenvalues;
        (ev.min(), ev.max())
    }
}

/// Result of [`minimize_quadratic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMin {
    pub argmin: Vec3,
    /// Objective evaluated at `argmin`.
    pub value: f64,
    /// `||H v* + g||`
    pub residual: f64,
    pub probe: QuadraticProbe,
}

/// Minimizes an exactly quadratic objective through its normal equations.
pub fn minimize_quadratic(objective: impl Fn(&Vec3) -> f64) -> Result<QuadraticMin> {
    minimize_quadratic_with_step(objective, DEFAULT_PROBE_STEP)
}

pub fn minimize_quadratic_with_step(objective: impl Fn(&Vec3) -> f64, step: f64) -> Result<QuadraticMin> {
    let probe = QuadraticProbe::new(&objective, step);
    let (lo, hi) = probe.eigen_range();
    if !(lo > DEGENERACY_TOL * hi.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateObjective { pivot: lo });
    }
    let chol = Cholesky::new(probe.h).ok_or(Error::DegenerateObjective { pivot: lo })?;
    let argmin = chol.solve(&-probe.g);
    let residual = (probe.h * argmin + probe.g).norm();
    Ok(QuadraticMin { argmin, value: objective(&argmin), residual, probe })
}

/// Options for [`grid_refine_min`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Grid points per axis (odd, so the centre is sampled).
    pub points: usize,
    /// Shrink steps to perform.
    pub levels: usize,
    /// Half-width of the refined box in grid spacings.
    pub keep_spacings: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { points: 11, levels: 24, keep_spacings: 3.0 }
    }
}

/// Derivative-free minimization on nested tensor grids inside the box
/// `center ± half_width`.
///
/// Each pass recentres on the best grid point. If that point lies on the
/// edge of the current box the box slides without shrinking; otherwise it
/// shrinks to `keep_spacings` grid spacings. Fails with
/// [`Error::BoxTooSmall`] if the final best point touches the initial box.
pub fn grid_refine_min(
    objective: impl Fn(&Vec3) -> f64,
    center: Vec3,
    half_width: Vec3,
    opts: GridOptions,
) -> Result<(Vec3, f64)> {
    let n = opts.points.max(3) | 1;
    let outer_lo = center - half_width;
    let outer_hi = center + half_width;
    let mut c = center;
    let mut w = half_width;
    let mut best = (c, objective(&c));
    let mut level = 0;
    let mut passes = 0;
    let max_passes = 8 * opts.levels + 8;
    while level < opts.levels && passes < max_passes {
        passes += 1;
        let spacing = w * (2.0 / (n - 1) as f64);
        let lo = c - w;
        let mut idx_best = [n / 2; 3];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = lo + Vec3::new(i as f64 * spacing[0], j as f64 * spacing[1], k as f64 * spacing[2]);
                    let v = v.sup(&outer_lo).inf(&outer_hi);
                    let f = objective(&v);
                    if f < best.1 {
                        best = (v, f);
                        idx_best = [i, j, k];
                    }
                }
            }
        }
        let on_edge = idx_best.iter().any(|&i| i == 0 || i == n - 1);
        c = best.0;
        if !on_edge || touches(&best.0, &outer_lo, &outer_hi, &spacing) {
            w = (spacing * opts.keep_spacings).inf(&w);
            level += 1;
        }
    }
    let final_spacing = w * (2.0 / (n - 1) as f64);
    if touches(&best.0, &outer_lo, &outer_hi, &final_spacing) {
        return Err(Error::BoxTooSmall);
    }
    Ok(best)
}

fn touches(v: &Vec3, lo: &Vec3, hi: &Vec3, tol: &Vec3) -> bool {
    (0..3).any(|i| v[i] - lo[i] <= 0.5 * tol[i] || hi[i] - v[i] <= 0.5 * tol[i])
}

/// Box centre and half-widths sized from the probe: the minimizer lies
/// within `||g|| / λ_min` of the origin.
pub fn auto_box(probe: &QuadraticProbe) -> (Vec3, Vec3) {
    let (lo, _) = probe.eigen_range();
    let r = 2.0 * probe.g.norm() / lo.max(f64::MIN_POSITIVE) + 1.0;
    (Vec3::zeros(), Vec3::repeat(r))
}

/// Objective of the curvature problem at thickness coordinate `x3`:
/// `c -> W_curv((col1 | col2 | c) [D_x Θ(x3)]^{-1})`.
pub fn curvature_objective(columns: [Vec3; 2], dtheta: Mat3, p: MaterialParams) -> impl Fn(&Vec3) -> f64 {
    let inv = dtheta.try_inverse().expect("invertible D_x Θ");
    move |c: &Vec3| w_curv_gamma(&(Mat3::from_columns(&[columns[0], columns[1], *c]) * inv), &p).total
}

/// Objective of the membrane problem:
/// `d -> W_mp(Q^T (D m | d) [D_x Θ(x3)]^{-1})`.
pub fn membrane_objective(q: Mat3, dm: Mat3x2, dtheta: Mat3, p: MaterialParams) -> impl Fn(&Vec3) -> f64 {
    let inv = dtheta.try_inverse().expect("invertible D_x Θ");
    let qt = q.transpose();
    move |d: &Vec3| {
        let f = Mat3::from_columns(&[dm.column(0).into_owned(), dm.column(1).into_owned(), *d]);
        w_mp(&(qt * f * inv), &p).total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_bowls() {
        let m = minimize_quadratic(|v: &Vec3| v.norm_squared()).unwrap();
        assert!(m.argmin.norm() < 1e-15 && m.value.abs() < 1e-30);
        let t = Vec3::new(1.0, 2.0, 3.0);
        let m = minimize_quadratic(|v: &Vec3| (v - t).norm_squared()).unwrap();
        assert!((m.argmin - t).norm() < 1e-14);
        assert!(m.residual < 1e-13);
    }

    #[test]
    fn probe_reconstructs_quadratic() {
        let a = Mat3::new(3.0, 0.5, -0.2, 0.5, 2.0, 0.1, -0.2, 0.1, 1.5);
        let g = Vec3::new(0.3, -1.2, 0.7);
        let f = |v: &Vec3| 0.8 + g.dot(v) + 0.5 * v.dot(&(a * v));
        let p = QuadraticProbe::new(f, DEFAULT_PROBE_STEP);
        for k in 0..50 {
            let v = Vec3::new((k as f64 * 0.37).sin(), (k as f64 * 1.3).cos(), (k as f64 * 0.71).sin() * 2.0);
            assert!((p.eval(&v) - f(&v)).abs() < 1e-11);
        }
        assert_eq!(p.h, p.h.transpose());
    }

    #[test]
    fn flat_direction_is_degenerate() {
        let f = |v: &Vec3| v[0] * v[0] + v[1] * v[1];
        assert!(matches!(minimize_quadratic(f), Err(Error::DegenerateObjective { .. })));
        let g = |v: &Vec3| v[0] * v[0] - v[1] * v[1] + v[2] * v[2];
        assert!(matches!(minimize_quadratic(g), Err(Error::DegenerateObjective { .. })));
    }

    #[test]
    fn grid_on_unit_box() {
        let opts = GridOptions { levels: 6, ..GridOptions::default() };
        let (_, v) = grid_refine_min(|v: &Vec3| v.norm_squared(), Vec3::zeros(), Vec3::repeat(1.0), opts).unwrap();
        assert!(v < 1e-6);
    }

    #[test]
    fn grid_matches_normal_equations_on_anisotropic_bowl() {
        let a = Mat3::new(40.0, 5.0, 0.0, 5.0, 1.0, 0.3, 0.0, 0.3, 0.5);
        let t = Vec3::new(0.4, -2.0, 1.1);
        let f = |v: &Vec3| 0.5 * (v - t).dot(&(a * (v - t))) + 0.25;
        let m = minimize_quadratic(f).unwrap();
        let (c, w) = auto_box(&m.probe);
        let (_, v) = grid_refine_min(f, c, w, GridOptions::default()).unwrap();
        assert!((v - m.value).abs() < 1e-6);
    }

    #[test]
    fn grid_handles_quartic() {
        let t = Vec3::new(0.3, -0.2, 0.1);
        let f = |v: &Vec3| (v - t).norm_squared().powi(2) + 1.0;
        let (x, v) = grid_refine_min(f, Vec3::zeros(), Vec3::repeat(1.0), GridOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        assert!((x - t).norm() < 1e-2);
    }

    #[test]
    fn box_too_small() {
        let f = |v: &Vec3| (v - Vec3::new(5.0, 0.0, 0.0)).norm_squared();
        let r = grid_refine_min(f, Vec3::zeros(), Vec3::repeat(1.0), GridOptions::default());
        assert_eq!(r, Err(Error::BoxTooSmall));
    }
}
