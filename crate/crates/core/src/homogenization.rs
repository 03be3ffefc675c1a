//! Closed-form homogenized shell energies.
//!
//! Both homogenizations minimize a 3D energy density over the free third
//! column of a strain: for a frame with normal `n0`,
//! `(0|0|c)[D_x Θ]^{-1} = c ⊗ n0`, so the free direction is always `c ⊗ n0`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::energy::{EnergyBreakdown, MaterialParams};
use crate::error::{Error, Result};
use crate::geometry::{Mat3x2, Surface, SurfaceFrame};
use crate::rotation::RotationField;
use crate::tensor::{axl, lift_flat, skew, sym, Mat2, Mat3, SkewMat3, Vec3};

/// Elastic shell strain `(Q^T D m - D y0 | 0) [D_x Θ(0)]^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneStrain {
    pub e: Mat3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BendingVariant {
    /// Evaluated at a thickness coordinate `x3` with `[D_x Θ(x3)]^{-1}`.
    NotFullyReduced { x3: f64 },
    /// Evaluated at `x3 = 0`.
    FullyReduced,
    /// Flat plate, `D_x Θ = 1`.
    Plate,
}

/// Bending-curvature tensor
/// `(axl(Q^T d_1 Q) | axl(Q^T d_2 Q) | 0) [D_x Θ(x3)]^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendingStrain {
    pub k: Mat3,
    pub variant: BendingVariant,
}

impl MembraneStrain {
    /// From the rotation `Q`, the midsurface gradient `D m` and the frame.
    pub fn new(q: &Mat3, dm: &Mat3x2, frame: &SurfaceFrame) -> Self {
        let g = q.transpose() * dm - frame.dy0;
        MembraneStrain { e: third_column_zero(&g) * frame.dtheta0_inv }
    }

    /// `Q^T (D m | 0) - 1_2♭` for a flat plate.
    pub fn plate(q: &Mat3, dm: &Mat3x2) -> Self {
        let g = third_column_zero(&(q.transpose() * dm));
        MembraneStrain { e: g - lift_flat(&Mat2::identity()) }
    }
}

impl BendingStrain {
    /// From the first two wryness columns `axl(Q^T d_a Q)`.
    pub fn new(columns: [Vec3; 2], frame: &SurfaceFrame, x3: f64) -> Result<Self> {
        let g = Mat3::from_columns(&[columns[0], columns[1], Vec3::zeros()]);
        let (dtheta_inv, variant) = if x3 == 0.0 {
            (frame.dtheta0_inv, BendingVariant::FullyReduced)
        } else {
            let m = frame.dtheta(x3)?;
            (m.try_inverse().ok_or(Error::Singular)?, BendingVariant::NotFullyReduced { x3 })
        };
        Ok(BendingStrain { k: g * dtheta_inv, variant })
    }

    pub fn plate(columns: [Vec3; 2]) -> Self {
        BendingStrain {
            k: Mat3::from_columns(&[columns[0], columns[1], Vec3::zeros()]),
            variant: BendingVariant::Plate,
        }
    }
}

fn third_column_zero(g: &Mat3x2) -> Mat3 {
    Mat3::from_columns(&[g.column(0).into_owned(), g.column(1).into_owned(), Vec3::zeros()])
}

/// Membrane completion `v*` with `W_mp(1 + E + v* ⊗ n0)` minimal:
/// `v* = -λ/(2μ+λ) tr(E) n0 + (μc-μ)/(μc+μ) E^T n0`.
pub fn optimal_membrane_completion(e: &Mat3, frame: &SurfaceFrame, p: &MaterialParams) -> Vec3 {
    let n0 = frame.n0;
    n0 * (-p.lambda / (2.0 * p.mu + p.lambda) * e.trace()) + e.transpose() * n0 * ((p.mu_c - p.mu) / (p.mu_c + p.mu))
}

/// Optimal director
/// `d* = (1 - λ/(2μ+λ) <E, 1>) Q n0 + (μc-μ)/(μc+μ) Q E^T n0`.
pub fn optimal_director(e: &Mat3, q: &Mat3, frame: &SurfaceFrame, p: &MaterialParams) -> Vec3 {
    let n0 = frame.n0;
    q * n0 * (1.0 - p.lambda / (2.0 * p.mu + p.lambda) * e.trace())
        + q * e.transpose() * n0 * ((p.mu_c - p.mu) / (p.mu_c + p.mu))
}

/// Homogenized membrane energy
/// `μ ||sym E∥||^2 + μc ||skew E∥||^2 + λμ/(λ+2μ) [tr E∥]^2 + 2μμc/(μc+μ) ||E^T n0||^2`.
pub fn w_mp_hom(e: &Mat3, frame: &SurfaceFrame, p: &MaterialParams) -> EnergyBreakdown {
    let (par, _) = frame.decompose_tangent_normal(e);
    let normal = e.transpose() * frame.n0;
    EnergyBreakdown::new(
        p.mu * sym(&par).norm_squared(),
        p.mu_c * skew(&par).norm_squared(),
        p.lambda * p.mu / (p.lambda + 2.0 * p.mu) * par.trace().powi(2),
        2.0 * p.mu * p.mu_c / (p.mu_c + p.mu) * normal.norm_squared(),
    )
}

/// Weights of the curvature completion
/// `c* = tangential K^T n0 - trace tr(K) n0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionCoefficients {
    /// `(b2 - b1) / (b1 + b2)`
    pub tangential: f64,
    /// `b3 / (b1 + b3)`
    pub trace: f64,
}

impl CompletionCoefficients {
    pub fn new(p: &MaterialParams) -> Self {
        CompletionCoefficients {
            tangential: (p.b2 - p.b1) / (p.b1 + p.b2),
            trace: p.b3 / (p.b1 + p.b3),
        }
    }
}

/// `c* = (b2-b1)/(b1+b2) K^T n0 - b3/(b1+b3) tr(K) n0`.
pub fn optimal_curvature_completion(k: &Mat3, frame: &SurfaceFrame, p: &MaterialParams) -> Vec3 {
    optimal_curvature_completion_with(k, frame, CompletionCoefficients::new(p))
}

pub fn optimal_curvature_completion_with(k: &Mat3, frame: &SurfaceFrame, c: CompletionCoefficients) -> Vec3 {
    k.transpose() * frame.n0 * c.tangential - frame.n0 * (c.trace * k.trace())
}

/// Homogenized curvature energy
/// `μLc² (b1 ||sym K∥||^2 + b2 ||skew K∥||^2 + b1b3/(b1+b3) [tr K∥]^2 + 2b1b2/(b1+b2) ||K^T n0||^2)`.
pub fn w_curv_hom(k: &Mat3, frame: &SurfaceFrame, p: &MaterialParams) -> EnergyBreakdown {
    let (par, _) = frame.decompose_tangent_normal(k);
    curvature_hom_terms(&par, &(k.transpose() * frame.n0), p)
}

/// Plate version: `Γ_□` is the upper-left 2x2 block of `gamma0` and the
/// normal part is `(Γ31, Γ32, 0)`. The third column must vanish.
pub fn w_curv_hom_plate(gamma0: &Mat3, p: &MaterialParams) -> Result<EnergyBreakdown> {
    if gamma0.column(2).iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidInput("plate bending strain must have a zero third column".into()));
    }
    let square = gamma0.fixed_view::<2, 2>(0, 0).into_owned();
    let normal = Vec3::new(gamma0[(2, 0)], gamma0[(2, 1)], 0.0);
    Ok(curvature_hom_terms(&lift_flat(&square), &normal, p))
}

fn curvature_hom_terms(par: &Mat3, normal: &Vec3, p: &MaterialParams) -> EnergyBreakdown {
    let s = p.curvature_scale();
    EnergyBreakdown::new(
        s * p.b1 * sym(par).norm_squared(),
        s * p.b2 * skew(par).norm_squared(),
        s * p.b1 * p.b3 / (p.b1 + p.b3) * par.trace().powi(2),
        s * 2.0 * p.b1 * p.b2 / (p.b1 + p.b2) * normal.norm_squared(),
    )
}

/// The same minimum without the tangential/normal split:
/// `μLc² (b1 ||sym K||^2 + b2 ||skew K||^2 - (b1-b2)²/(2(b1+b2)) ||K^T n0||^2 + b1b3/(b1+b3) [tr K]^2)`.
pub fn w_curv_hom_undecomposed(k: &Mat3, frame: &SurfaceFrame, p: &MaterialParams) -> f64 {
    let (b1, b2, b3) = (p.b1, p.b2, p.b3);
    p.curvature_scale()
        * (b1 * sym(k).norm_squared() + b2 * skew(k).norm_squared()
            - (b1 - b2).powi(2) / (2.0 * (b1 + b2)) * (k.transpose() * frame.n0).norm_squared()
            + b1 * b3 / (b1 + b3) * k.trace().powi(2))
}

pub type MapFn = Arc<dyn Fn([f64; 2]) -> Vec3 + Send + Sync>;

/// Deformed midsurface `m: ω -> R^3`.
#[derive(Clone)]
pub enum MidsurfaceMap {
    /// `m = y0 + offset + M x`
    SurfacePlusAffine { surface: Surface, offset: Vec3, matrix: Mat3x2 },
    /// Arbitrary `m`, differentiated by central differences.
    Custom { eval: MapFn, step: f64 },
}

impl fmt::Debug for MidsurfaceMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MidsurfaceMap::SurfacePlusAffine { surface, offset, matrix } => f
                .debug_struct("SurfacePlusAffine")
                .field("surface", surface)
                .field("offset", offset)
                .field("matrix", matrix)
                .finish(),
            MidsurfaceMap::Custom { step, .. } => f.debug_struct("Custom").field("step", step).finish(),
        }
    }
}

impl MidsurfaceMap {
    /// `m = y0`, the undeformed midsurface.
    pub fn identity(surface: Surface) -> Self {
        MidsurfaceMap::SurfacePlusAffine { surface, offset: Vec3::zeros(), matrix: Mat3x2::zeros() }
    }

    pub fn eval(&self, x: [f64; 2]) -> Vec3 {
        match self {
            MidsurfaceMap::SurfacePlusAffine { surface, offset, matrix } => {
                surface.point(x) + offset + matrix * nalgebra::Vector2::new(x[0], x[1])
            }
            MidsurfaceMap::Custom { eval, .. } => eval(x),
        }
    }

    pub fn jacobian(&self, x: [f64; 2]) -> Result<Mat3x2> {
        match self {
            MidsurfaceMap::SurfacePlusAffine { surface, matrix, .. } => {
                let jet = surface.jet(x)?;
                Ok(Mat3x2::from_columns(&jet.d) + matrix)
            }
            MidsurfaceMap::Custom { eval, step } => {
                let h = *step;
                let d1 = (eval([x[0] + h, x[1]]) - eval([x[0] - h, x[1]])) / (2.0 * h);
                let d2 = (eval([x[0], x[1] + h]) - eval([x[0], x[1] - h])) / (2.0 * h);
                Ok(Mat3x2::from_columns(&[d1, d2]))
            }
        }
    }
}

/// Shell strains of the pair `(m, Q_{e,0})` at the frame's point. The
/// rotation field is evaluated at `(x1, x2, 0)`.
pub fn strain_assembly(
    m: &MidsurfaceMap,
    q: &RotationField,
    frame: &SurfaceFrame,
) -> Result<(MembraneStrain, BendingStrain)> {
    let x = Vec3::new(frame.x[0], frame.x[1], 0.0);
    let r = q.eval(&x)?;
    let mut cols = [Vec3::zeros(); 2];
    for (a, col) in cols.iter_mut().enumerate() {
        *col = axl(&SkewMat3::project(&(r.transpose() * q.derivative(&x, a)?)));
    }
    let dm = m.jacobian(frame.x)?;
    Ok((MembraneStrain::new(&r, &dm, frame), BendingStrain::new(cols, frame, 0.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{w_curv_gamma, w_mp};
    use crate::geometry::Rect;
    use crate::tensor::outer;

    fn params() -> MaterialParams {
        MaterialParams::new(1.3, 0.7, 2.2, 0.9, [0.6, 1.8, 2.5]).unwrap()
    }

    fn curved_frame() -> SurfaceFrame {
        Surface::graph("0.4*x1^2 - 0.3*x1*x2 + 0.2*x2^2", Rect::new([-1.0, -1.0], [1.0, 1.0]))
            .unwrap()
            .frame_at([0.3, -0.5])
            .unwrap()
    }

    fn tangential_strain(frame: &SurfaceFrame) -> Mat3 {
        let g = Mat3::new(0.3, -0.7, 0.0, 0.5, 0.1, 0.0, -0.4, 0.9, 0.0);
        g * frame.dtheta0_inv
    }

    #[test]
    fn zero_strains_give_zero() {
        let f = curved_frame();
        let p = params();
        assert_eq!(w_mp_hom(&Mat3::zeros(), &f, &p).total, 0.0);
        assert_eq!(w_curv_hom(&Mat3::zeros(), &f, &p).total, 0.0);
        assert_eq!(optimal_curvature_completion(&Mat3::zeros(), &f, &p), Vec3::zeros());
        let q = crate::rotation::exp_so3(&Vec3::new(0.2, 0.1, -0.3));
        assert!((optimal_director(&Mat3::zeros(), &q, &f, &p) - q * f.n0).norm() < 1e-15);
    }

    #[test]
    fn flat_membrane_example() {
        let p = MaterialParams::new(1.0, 1.0, 1.0, 1.0, [1.0; 3]).unwrap();
        let e = Mat3::from_diagonal(&Vec3::new(1.0, 0.0, 0.0));
        assert!((w_mp_hom(&e, &SurfaceFrame::flat(), &p).total - 4.0 / 3.0).abs() < 1e-15);
        let p3 = MaterialParams { mu_c: 3.0, ..p };
        let e = outer(&Vec3::z(), &Vec3::x());
        assert_eq!(w_mp_hom(&e, &SurfaceFrame::flat(), &p3).normal_term, 1.5);
    }

    #[test]
    fn membrane_completion_is_stationary() {
        let f = curved_frame();
        let p = params();
        let e = tangential_strain(&f);
        let v = optimal_membrane_completion(&e, &f, &p);
        let at = |c: Vec3| w_mp(&(Mat3::identity() + e + outer(&c, &f.n0)), &p).total;
        let best = at(v);
        assert!((best - w_mp_hom(&e, &f, &p).total).abs() < 1e-13);
        for dir in [Vec3::x(), Vec3::y(), Vec3::z()] {
            assert!(at(v + dir * 1e-3) > best && at(v - dir * 1e-3) > best);
        }
    }

    #[test]
    fn curvature_completion_is_stationary_and_optimal() {
        let f = curved_frame();
        let p = params();
        let k = tangential_strain(&f);
        let c = optimal_curvature_completion(&k, &f, &p);
        let at = |c: Vec3| w_curv_gamma(&(k + outer(&c, &f.n0)), &p).total;
        let best = at(c);
        assert!((best - w_curv_hom(&k, &f, &p).total).abs() < 1e-13);
        assert!((best - w_curv_hom_undecomposed(&k, &f, &p)).abs() < 1e-13);
        for dir in [Vec3::x(), Vec3::y(), Vec3::z()] {
            assert!(at(c + dir * 1e-3) > best && at(c - dir * 1e-3) > best);
        }
        assert!(best <= at(Vec3::zeros()));
    }

    #[test]
    fn equal_b1_b2_drops_tangential_term() {
        let f = curved_frame();
        let p = MaterialParams::new(1.0, 1.0, 1.0, 1.0, [2.0, 2.0, 3.0]).unwrap();
        let k = tangential_strain(&f);
        let c = optimal_curvature_completion(&k, &f, &p);
        assert!((c + f.n0 * (3.0 / 5.0 * k.trace())).norm() < 1e-15);
        let e = w_curv_hom(&k, &f, &p);
        assert!((e.normal_term - 2.0 * (k.transpose() * f.n0).norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn plate_examples() {
        let p = MaterialParams::default();
        let mut g = lift_flat(&Mat2::identity());
        assert_eq!(w_curv_hom_plate(&g, &p).unwrap().total, 4.0);
        g = lift_flat(&Mat2::new(0.0, 1.0, 1.0, 0.0));
        let e = w_curv_hom_plate(&g, &p).unwrap();
        assert_eq!((e.total, e.sym_term), (2.0, 2.0));
        let p13 = MaterialParams::new(1.0, 1.0, 1.0, 1.0, [1.0, 3.0, 1.0]).unwrap();
        let e = w_curv_hom_plate(&outer(&Vec3::z(), &Vec3::x()), &p13).unwrap();
        assert_eq!(e.normal_term, 1.5);
        assert!(w_curv_hom_plate(&Mat3::identity(), &p).is_err());
    }

    #[test]
    fn undeformed_flat_state_has_zero_strain() {
        let s = Surface::plane(Rect::unit());
        let f = s.frame_at([0.4, 0.6]).unwrap();
        let (e, k) = strain_assembly(&MidsurfaceMap::identity(s), &RotationField::identity(), &f).unwrap();
        assert_eq!(e.e, Mat3::zeros());
        assert_eq!(k.k, Mat3::zeros());
    }

    #[test]
    fn flat_shear_rotation_strain() {
        let t = 0.6;
        let s = Surface::plane(Rect::unit());
        let f = s.frame_at([0.4, 0.6]).unwrap();
        let q = RotationField::exp_affine(Vec3::z(), 0.0, Vec3::x() * t).unwrap();
        let (_, k) = strain_assembly(&MidsurfaceMap::identity(s), &q, &f).unwrap();
        assert!((k.k - outer(&Vec3::z(), &Vec3::x()) * t).norm() < 1e-15);
    }

    #[test]
    fn plate_membrane_matches_flat_frame() {
        let q = crate::rotation::exp_so3(&Vec3::new(0.3, -0.2, 0.5));
        let dm = Mat3x2::new(1.1, 0.2, -0.1, 0.9, 0.3, 0.05);
        let a = MembraneStrain::new(&q, &dm, &SurfaceFrame::flat());
        let b = MembraneStrain::plate(&q, &dm);
        assert!((a.e - b.e).norm() < 1e-15);
    }

    #[test]
    fn cylinder_bending_strain_is_not_symmetric() {
        let s = Surface::cylinder(1.5, Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let f = s.frame_at([0.2, 0.1]).unwrap();
        let q = RotationField::product(
            RotationField::exp_affine(Vec3::x(), 0.1, Vec3::new(0.4, -0.3, 0.0)).unwrap(),
            RotationField::exp_affine(Vec3::z(), 0.0, Vec3::new(0.2, 0.7, 0.0)).unwrap(),
        );
        let (_, k) = strain_assembly(&MidsurfaceMap::identity(s), &q, &f).unwrap();
        assert!((k.k - k.k.transpose()).norm() > 1e-3);
    }
}
