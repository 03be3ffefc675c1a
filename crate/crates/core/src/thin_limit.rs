//! Thin-shell limit at desk scale: the rescaled three-dimensional energy of
//! an ansatz on `Ω1 = ω × [-1/2, 1/2]`, compared with the two-dimensional
//! limit functional as the thickness `h` goes to zero.
//!
//! The ansatz class is
//!
//! ```text
//! φ(η) = m(η') + h η3 d(η'),      Q(η) = Q0(η') exp(h η3 anti(c(η')))
//! ```
//!
//! so `∂_{η3} φ / h = d` and `axl(Q^T ∂_{η3} Q) / h = c` are exact; only the
//! in-plane derivatives are taken by finite differences.

use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{w_curv_gamma, w_mp, MaterialParams};
use crate::error::{Error, Result};
use crate::geometry::{Mat3x2, Rect, Surface, SurfaceFrame};
use crate::homogenization::{
    optimal_curvature_completion, optimal_director, w_curv_hom, w_curv_hom_plate, w_mp_hom, BendingStrain,
    MembraneStrain,
};
use crate::rotation::{check_rotation, exp_so3};
use crate::tensor::{axl, Mat3, SkewMat3, Vec3};

/// Step of the fourth-order in-plane difference stencil.
pub const FD_STEP: f64 = 1e-3;

pub const DEFAULT_H_LIST: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// Errors below `ROUNDING_FLOOR * (1 + |J0|)` count as zero in rates,
/// slopes and monotonicity.
pub const ROUNDING_FLOOR: f64 = 1e-14;

fn stencil<T>(values: [T; 4]) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let [m2, m1, p1, p2] = values;
    ((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * FD_STEP))
}

fn shifted(x: [f64; 2], axis: usize, k: f64) -> [f64; 2] {
    let mut y = x;
    y[axis] += k * FD_STEP;
    y
}

fn partial<T>(f: impl Fn([f64; 2]) -> T, x: [f64; 2], axis: usize) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    stencil([-2.0, -1.0, 1.0, 2.0].map(|k| f(shifted(x, axis, k))))
}

fn try_partial<T>(f: impl Fn([f64; 2]) -> Result<T>, x: [f64; 2], axis: usize) -> Result<[T; 4]> {
    Ok([f(shifted(x, axis, -2.0))?, f(shifted(x, axis, -1.0))?, f(shifted(x, axis, 1.0))?, f(shifted(x, axis, 2.0))?])
}

/// Sum with `O(log n)` rounding growth and a fixed association order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Tensor-product Gauss-Legendre nodes and weights on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Cells per axis.
    pub cells: [usize; 3],
    /// Rule points per cell and axis.
    pub points: usize,
}

fn axis_rule(lo: f64, hi: f64, cells: usize, points: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap());
    let n = cells.max(1);
    let width = (hi - lo) / n as f64;
    let mut out = Vec::with_capacity(n * points);
    for c in 0..n {
        let left = lo + c as f64 * width;
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push((left + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    out
}

impl QuadratureGrid {
    pub fn new(lo: [f64; 3], hi: [f64; 3], cells: [usize; 3], points: usize) -> Self {
        let axes: Vec<_> = (0..3).map(|a| axis_rule(lo[a], hi[a], cells[a], points)).collect();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(x, wx) in &axes[0] {
            for &(y, wy) in &axes[1] {
                for &(z, wz) in &axes[2] {
                    nodes.push([x, y, z]);
                    weights.push(wx * wy * wz);
                }
            }
        }
        QuadratureGrid { nodes, weights, cells, points }
    }

    /// `ω × [-1/2, 1/2]`
    pub fn slab(omega: &Rect, cells: [usize; 2], thickness_cells: usize, points: usize) -> Self {
        Self::new(
            [omega.lo[0], omega.lo[1], -0.5],
            [omega.hi[0], omega.hi[1], 0.5],
            [cells[0], cells[1], thickness_cells],
            points,
        )
    }

    /// Planar grid on `ω`; the third coordinate of every node is zero.
    pub fn planar(omega: &Rect, cells: [usize; 2], points: usize) -> Self {
        let a = axis_rule(omega.lo[0], omega.hi[0], cells[0], points);
        let b = axis_rule(omega.lo[1], omega.hi[1], cells[1], points);
        QuadratureGrid {
            nodes: a.iter().flat_map(|&(x, _)| b.iter().map(move |&(y, _)| [x, y, 0.0])).collect(),
            weights: a.iter().flat_map(|&(_, wx)| b.iter().map(move |&(_, wy)| wx * wy)).collect(),
            cells: [cells[0], cells[1], 1],
            points,
        }
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ w_i f(x_i)`, evaluated in parallel and summed in node order.
    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> Result<f64> + Sync) -> Result<f64> {
        let terms: Vec<f64> = self
            .nodes
            .par_iter()
            .zip(self.weights.par_iter())
            .map(|(x, w)| f(x).map(|v| v * w))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    pub cells: [usize; 2],
    pub thickness_cells: usize,
    pub points: usize,
    /// Rule used for the resolution check.
    pub check_points: usize,
    /// Admissible `|I_points - I_check| / (1 + |I_check|)`.
    pub tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { cells: [4, 4], thickness_cells: 1, points: 4, check_points: 8, tol: 1e-8 }
    }
}

fn checked(q: &QuadratureOptions, eval: impl Fn(usize) -> Result<f64>) -> Result<f64> {
    let value = eval(q.points)?;
    let reference = eval(q.check_points)?;
    let difference = (value - reference).abs();
    let tolerance = q.tol * (1.0 + reference.abs());
    if difference <= tolerance {
        Ok(value)
    } else {
        Err(Error::Resolution { difference, tolerance })
    }
}

/// Reference geometry of the shell.
#[derive(Clone)]
pub enum Midsurface {
    /// Plate on the `x1 x2` plane; metric factors are identically one.
    Flat,
    Curved(Surface),
}

impl Midsurface {
    pub fn frame(&self, x: [f64; 2]) -> Result<SurfaceFrame> {
        match self {
            Midsurface::Flat => Ok(SurfaceFrame::flat()),
            Midsurface::Curved(s) => s.frame_at(x),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Midsurface::Flat)
    }
}

pub type PointMap = Arc<dyn Fn([f64; 2]) -> Vec3 + Send + Sync>;
pub type FrameMap = Arc<dyn Fn([f64; 2]) -> Mat3 + Send + Sync>;

/// A midsurface deformation `m` and elastic rotation `Q0` on `ω`.
#[derive(Clone)]
pub struct ShellProblem {
    pub name: String,
    pub midsurface: Midsurface,
    pub omega: Rect,
    pub m: PointMap,
    pub q0: FrameMap,
}

/// Reduced strains of a [`ShellProblem`] at one point of `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub frame: SurfaceFrame,
    pub m: Vec3,
    pub q0: Mat3,
    pub dm: Mat3x2,
    /// `axl(Q0^T ∂_a Q0)`
    pub columns: [Vec3; 2],
    pub membrane: Mat3,
    pub bending: Mat3,
}

impl ShellProblem {
    pub fn state(&self, x: [f64; 2]) -> Result<ReducedState> {
        let frame = self.midsurface.frame(x)?;
        let q0 = (self.q0)(x);
        check_rotation(&q0)?;
        let dm = Mat3x2::from_columns(&[partial(|y| (self.m)(y), x, 0), partial(|y| (self.m)(y), x, 1)]);
        let mut columns = [Vec3::zeros(); 2];
        for (a, col) in columns.iter_mut().enumerate() {
            let dq = partial(|y| (self.q0)(y), x, a);
            *col = axl(&SkewMat3::project(&(q0.transpose() * dq)));
        }
        let (membrane, bending) = if self.midsurface.is_flat() {
            (MembraneStrain::plate(&q0, &dm).e, BendingStrain::plate(columns).k)
        } else {
            (MembraneStrain::new(&q0, &dm, &frame).e, BendingStrain::new(columns, &frame, 0.0)?.k)
        };
        Ok(ReducedState { frame, m: (self.m)(x), q0, dm, columns, membrane, bending })
    }

    /// Integrand of the limit functional, metric factor included.
    pub fn limit_density(&self, x: [f64; 2], p: &MaterialParams) -> Result<f64> {
        let s = self.state(x)?;
        let membrane = w_mp_hom(&s.membrane, &s.frame, p).total;
        if self.midsurface.is_flat() {
            let square = Mat3::from_columns(&[s.columns[0], s.columns[1], Vec3::zeros()]);
            Ok(membrane + w_curv_hom_plate(&square, p)?.total)
        } else {
            Ok((membrane + w_curv_hom(&s.bending, &s.frame, p).total) * s.frame.dtheta0.determinant())
        }
    }

    /// Ansatz with the optimal director `d*`; with `corrected` the rotation
    /// also carries the optimal curvature completion `c*` through the
    /// thickness, otherwise it is constant in `η3`.
    pub fn ansatz(&self, p: MaterialParams, h_list: Vec<f64>, corrected: bool) -> AnsatzPair {
        let problem = self.clone();
        let profile: ProfileFn = Arc::new(move |x| {
            let s = problem.state(x)?;
            let director = optimal_director(&s.membrane, &s.q0, &s.frame, &p);
            let twist = if corrected { optimal_curvature_completion(&s.bending, &s.frame, &p) } else { Vec3::zeros() };
            Ok(ThicknessProfile { m: s.m, director, q0: s.q0, twist })
        });
        AnsatzPair {
            midsurface: self.midsurface.clone(),
            omega: self.omega,
            profile,
            h_list,
            depends_on_eta3: corrected,
        }
    }
}

/// Data of the ansatz over one point of `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThicknessProfile {
    pub m: Vec3,
    pub director: Vec3,
    pub q0: Mat3,
    pub twist: Vec3,
}

impl ThicknessProfile {
    pub fn phi(&self, eta3: f64, h: f64) -> Vec3 {
        self.m + self.director * (h * eta3)
    }

    pub fn rotation(&self, eta3: f64, h: f64) -> Mat3 {
        self.q0 * exp_so3(&(self.twist * (h * eta3)))
    }
}

pub type ProfileFn = Arc<dyn Fn([f64; 2]) -> Result<ThicknessProfile> + Send + Sync>;

/// Deformation and rotation on `Ω1` for a list of thicknesses.
#[derive(Clone)]
pub struct AnsatzPair {
    pub midsurface: Midsurface,
    pub omega: Rect,
    pub profile: ProfileFn,
    pub h_list: Vec<f64>,
    /// Whether the rotation varies through the thickness.
    pub depends_on_eta3: bool,
}

impl AnsatzPair {
    /// Energy density at `η`, metric factor included.
    pub fn density(&self, eta: &[f64; 3], h: f64, p: &MaterialParams) -> Result<f64> {
        let x = [eta[0], eta[1]];
        let x3 = h * eta[2];
        let frame = self.midsurface.frame(x)?;
        let dtheta = frame.dtheta(x3)?;
        let inv = dtheta.try_inverse().ok_or(Error::Singular)?;
        let centre = (self.profile)(x)?;
        let q = centre.rotation(eta[2], h);
        let mut dphi = [Vec3::zeros(); 2];
        let mut gamma = [Vec3::zeros(); 2];
        for a in 0..2 {
            let ring = try_partial(|y| (self.profile)(y), x, a)?;
            dphi[a] = stencil(ring.map(|t| t.phi(eta[2], h)));
            let dq = stencil(ring.map(|t| t.rotation(eta[2], h)));
            gamma[a] = axl(&SkewMat3::project(&(q.transpose() * dq)));
        }
        let f = Mat3::from_columns(&[dphi[0], dphi[1], centre.director]);
        let u = q.transpose() * f * inv;
        let g = Mat3::from_columns(&[gamma[0], gamma[1], centre.twist]) * inv;
        let det = if self.midsurface.is_flat() { 1.0 } else { dtheta.determinant() };
        Ok((w_mp(&u, p).total + w_curv_gamma(&g, p).total) * det)
    }
}

fn validate_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "h", reason: format!("thickness must be positive, got {h}") })
    }
}

/// `I_h / h` for the ansatz at thickness `h`.
pub fn rescaled_energy(a: &AnsatzPair, h: f64, p: &MaterialParams, q: &QuadratureOptions) -> Result<f64> {
    validate_h(h)?;
    checked(q, |points| {
        QuadratureGrid::slab(&a.omega, q.cells, q.thickness_cells, points).integrate(|eta| a.density(eta, h, p))
    })
}

/// Value of the limit functional.
pub fn gamma_limit_value(s: &ShellProblem, p: &MaterialParams, q: &QuadratureOptions) -> Result<f64> {
    checked(q, |points| QuadratureGrid::planar(&s.omega, q.cells, points).integrate(|x| s.limit_density([x[0], x[1]], p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub energy: f64,
    pub limit: f64,
    pub abs_err: f64,
    /// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)`; absent on the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log e` against `log h` over rows with `e > 0`.
    pub slope: Option<f64>,
    /// Errors never increase as `h` decreases.
    pub monotone: bool,
    /// Errors strictly decrease.
    pub strictly_decreasing: bool,
}

pub fn validate_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.len() < 4 {
        return Err(Error::InvalidParameter { name: "h_list", reason: format!("need at least 4 values, got {}", h_list.len()) });
    }
    for &h in h_list {
        validate_h(h).map_err(|_| Error::InvalidParameter { name: "h_list", reason: format!("non-positive value {h}") })?;
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter { name: "h_list", reason: "values must be strictly decreasing".into() });
    }
    Ok(())
}

pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, e)| *e > 0.0).map(|(h, e)| (h.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `I_h / h` against the limit value over the ansatz's `h_list`.
pub fn convergence_study(
    a: &AnsatzPair,
    s: &ShellProblem,
    p: &MaterialParams,
    q: &QuadratureOptions,
) -> Result<ConvergenceTable> {
    validate_h_list(&a.h_list)?;
    let limit = gamma_limit_value(s, p, q)?;
    let floor = ROUNDING_FLOOR * (1.0 + limit.abs());
    let resolved = |e: f64| if e > floor { e } else { 0.0 };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(a.h_list.len());
    for &h in &a.h_list {
        let energy = rescaled_energy(a, h, p, q)?;
        let abs_err = (energy - limit).abs();
        let rate = rows.last().and_then(|prev| {
            let (e0, e1) = (resolved(prev.abs_err), resolved(abs_err));
            (e0 > 0.0 && e1 > 0.0).then(|| (e0 / e1).ln() / (prev.h / h).ln())
        });
        rows.push(ConvergenceRow { h, energy, limit, abs_err, rate });
    }
    let slope = log_log_slope(&rows.iter().map(|r| (r.h, resolved(r.abs_err))).collect::<Vec<_>>());
    let monotone = rows.windows(2).all(|w| resolved(w[1].abs_err) <= resolved(w[0].abs_err));
    let strictly_decreasing = rows.windows(2).all(|w| resolved(w[1].abs_err) < resolved(w[0].abs_err));
    Ok(ConvergenceTable { rows, slope, monotone, strictly_decreasing })
}

fn padded(omega: Rect) -> Rect {
    let pad = 0.05;
    Rect::new([omega.lo[0] - pad, omega.lo[1] - pad], [omega.hi[0] + pad, omega.hi[1] + pad])
}

/// Undeformed plate: `m = y0`, `Q0 = 1`.
pub fn flat_identity() -> ShellProblem {
    ShellProblem {
        name: "flat-identity".into(),
        midsurface: Midsurface::Flat,
        omega: Rect::unit(),
        m: Arc::new(|x| Vec3::new(x[0], x[1], 0.0)),
        q0: Arc::new(|_| Mat3::identity()),
    }
}

/// Plate under simple shear `m = (x1 + s x2, x2, 0)` with the rotation
/// `Q0 = exp(anti(t x1 e3))`.
pub fn flat_shear_rotation(shear: f64, twist: f64) -> ShellProblem {
    ShellProblem {
        name: "flat-shear-rotation".into(),
        midsurface: Midsurface::Flat,
        omega: Rect::unit(),
        m: Arc::new(move |x| Vec3::new(x[0] + shear * x[1], x[1], 0.0)),
        q0: Arc::new(move |x| exp_so3(&(Vec3::z() * (twist * x[0])))),
    }
}

/// Cylinder of the given radius with `m = y0` and `Q0 = polar(D_x Θ(0))`.
pub fn cylinder_identity(radius: f64) -> Result<ShellProblem> {
    let omega = Rect::unit();
    let surface = Surface::cylinder(radius, padded(omega))?;
    let s1 = surface.clone();
    let s2 = surface.clone();
    Ok(ShellProblem {
        name: "cylinder-identity".into(),
        midsurface: Midsurface::Curved(surface),
        omega,
        m: Arc::new(move |x| s1.point(x)),
        q0: Arc::new(move |x| s2.frame_at(x).map(|f| f.q0).unwrap_or_else(|_| Mat3::identity())),
    })
}

/// Sphere patch with `m = y0` and `Q0 = exp(anti(θ(x) a))`, `θ` affine.
pub fn sphere_patch_rotation(radius: f64) -> Result<ShellProblem> {
    let omega = Rect::new([0.0, -0.5], [1.0, 0.5]);
    let surface = Surface::sphere(radius, padded(omega))?;
    let s1 = surface.clone();
    let axis = Vec3::new(1.0, 2.0, 2.0) / 3.0;
    Ok(ShellProblem {
        name: "sphere-patch-rotation".into(),
        midsurface: Midsurface::Curved(surface),
        omega,
        m: Arc::new(move |x| s1.point(x)),
        q0: Arc::new(move |x| exp_so3(&(axis * (0.4 * x[0] - 0.3 * x[1] + 0.2)))),
    })
}

/// The three documented families with their study parameters.
pub fn documented_families() -> Vec<ShellProblem> {
    FAMILY_NAMES[1..].iter().filter_map(|n| family(n)).collect()
}

/// Documented family by name.
pub fn family(name: &str) -> Option<ShellProblem> {
    match name {
        "flat-identity" => Some(flat_identity()),
        "flat-shear-rotation" => Some(flat_shear_rotation(0.2, 0.5)),
        "cylinder-identity" => cylinder_identity(1.0).ok(),
        "sphere-patch-rotation" => sphere_patch_rotation(1.0).ok(),
        _ => None,
    }
}

pub const FAMILY_NAMES: [&str; 4] = ["flat-identity", "flat-shear-rotation", "cylinder-identity", "sphere-patch-rotation"];

/// Parameters used by the documented studies: all distinct, so that every
/// completion coefficient is nonzero.
pub fn study_params() -> MaterialParams {
    MaterialParams { mu: 1.0, lambda: 0.8, mu_c: 0.5, l_c: 1.0, b1: 1.0, b2: 1.5, b3: 0.7 }
}
