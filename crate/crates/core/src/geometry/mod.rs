//! Midsurface geometry of a shell: `Θ(x) = y0(x1, x2) + x3 n0(x1, x2)`.

pub mod expr;

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3x2, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::{Mat2, Mat3, Vec3};

pub use expr::Expr;

pub type Mat3x2 = Matrix3x2<f64>;

/// Immersion threshold on `|d1 y0 x d2 y0|`.
pub const IMMERSION_TOL: f64 = 1e-12;

/// `y0`, its first derivatives and its second derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub y: Vec3,
    pub d: [Vec3; 2],
    /// `dd[a][b] = d_a d_b y0`
    pub dd: [[Vec3; 2]; 2],
}

/// Closed rectangle `lo <= x <= hi` in the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { lo, hi }
    }

    pub fn unit() -> Self {
        Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..2).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }
}

pub type SurfaceFn = Arc<dyn Fn([f64; 2]) -> Vec3 + Send + Sync>;

#[derive(Clone)]
pub enum SurfaceKind {
    /// `y0 = (x1, x2, 0)`
    Plane,
    /// `y0 = (r cos(x1/r), r sin(x1/r), x2)`, outward normal.
    Cylinder { radius: f64 },
    /// `y0 = r (cos x2 cos x1, cos x2 sin x1, sin x2)`, outward normal;
    /// `x1` is the longitude and `x2` the latitude.
    Sphere { radius: f64 },
    /// `y0 = (x1, x2, f(x1, x2))` with symbolic derivatives of `f`.
    Graph { f: Expr, df: [Expr; 2], ddf: [[Expr; 2]; 2] },
    /// Arbitrary `y0`, differentiated by central differences with `step`.
    Custom { y0: SurfaceFn, step: f64 },
}

/// A parametrized midsurface with its parameter domain.
#[derive(Clone)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub domain: Rect,
}

impl fmt::Debug for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            SurfaceKind::Plane => "plane".to_string(),
            SurfaceKind::Cylinder { radius } => format!("cylinder(r = {radius})"),
            SurfaceKind::Sphere { radius } => format!("sphere(r = {radius})"),
            SurfaceKind::Graph { f, .. } => format!("graph({f})"),
            SurfaceKind::Custom { step, .. } => format!("custom(step = {step})"),
        };
        f.debug_struct("Surface").field("kind", &kind).field("domain", &self.domain).finish()
    }
}

impl Surface {
    pub fn plane(domain: Rect) -> Self {
        Surface { kind: SurfaceKind::Plane, domain }
    }

    pub fn cylinder(radius: f64, domain: Rect) -> Result<Self> {
        check_radius(radius)?;
        Ok(Surface { kind: SurfaceKind::Cylinder { radius }, domain })
    }

    /// Sphere patch; the latitude range must stay away from the poles.
    pub fn sphere(radius: f64, domain: Rect) -> Result<Self> {
        check_radius(radius)?;
        let half_pi = std::f64::consts::FRAC_PI_2;
        if domain.lo[1] <= -half_pi || domain.hi[1] >= half_pi {
            return Err(Error::InvalidParameter {
                name: "domain",
                reason: "sphere latitude range must lie inside (-pi/2, pi/2)".into(),
            });
        }
        Ok(Surface { kind: SurfaceKind::Sphere { radius }, domain })
    }

    pub fn graph(source: &str, domain: Rect) -> Result<Self> {
        let f = Expr::parse(source)?;
        let df = [f.diff(0), f.diff(1)];
        let ddf = [[df[0].diff(0), df[0].diff(1)], [df[1].diff(0), df[1].diff(1)]];
        Ok(Surface { kind: SurfaceKind::Graph { f, df, ddf }, domain })
    }

    pub fn custom(y0: SurfaceFn, step: f64, domain: Rect) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter { name: "step", reason: format!("must be > 0, got {step}") });
        }
        Ok(Surface { kind: SurfaceKind::Custom { y0, step }, domain })
    }

    pub fn is_plane(&self) -> bool {
        matches!(self.kind, SurfaceKind::Plane)
    }

    pub fn point(&self, x: [f64; 2]) -> Vec3 {
        match &self.kind {
            SurfaceKind::Custom { y0, .. } => y0(x),
            _ => self.jet_unchecked(x).y,
        }
    }

    pub fn jet(&self, x: [f64; 2]) -> Result<Jet> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain { point: [x[0], x[1], 0.0], margin: -1.0 });
        }
        Ok(self.jet_unchecked(x))
    }

    fn jet_unchecked(&self, x: [f64; 2]) -> Jet {
        let [x1, x2] = x;
        match &self.kind {
            SurfaceKind::Plane => Jet {
                y: Vec3::new(x1, x2, 0.0),
                d: [Vec3::x(), Vec3::y()],
                dd: [[Vec3::zeros(); 2]; 2],
            },
            SurfaceKind::Cylinder { radius: r } => {
                let (s, c) = (x1 / r).sin_cos();
                Jet {
                    y: Vec3::new(r * c, r * s, x2),
                    d: [Vec3::new(-s, c, 0.0), Vec3::z()],
                    dd: [[Vec3::new(-c / r, -s / r, 0.0), Vec3::zeros()], [Vec3::zeros(), Vec3::zeros()]],
                }
            }
            SurfaceKind::Sphere { radius: r } => {
                let (s1, c1) = x1.sin_cos();
                let (s2, c2) = x2.sin_cos();
                let d12 = Vec3::new(s2 * s1, -s2 * c1, 0.0) * *r;
                Jet {
                    y: Vec3::new(c2 * c1, c2 * s1, s2) * *r,
                    d: [Vec3::new(-c2 * s1, c2 * c1, 0.0) * *r, Vec3::new(-s2 * c1, -s2 * s1, c2) * *r],
                    dd: [
                        [Vec3::new(-c2 * c1, -c2 * s1, 0.0) * *r, d12],
                        [d12, Vec3::new(-c2 * c1, -c2 * s1, -s2) * *r],
                    ],
                }
            }
            SurfaceKind::Graph { f, df, ddf } => {
                let g = |e: &Expr| e.eval(x);
                Jet {
                    y: Vec3::new(x1, x2, g(f)),
                    d: [Vec3::new(1.0, 0.0, g(&df[0])), Vec3::new(0.0, 1.0, g(&df[1]))],
                    dd: [
                        [Vec3::new(0.0, 0.0, g(&ddf[0][0])), Vec3::new(0.0, 0.0, g(&ddf[0][1]))],
                        [Vec3::new(0.0, 0.0, g(&ddf[1][0])), Vec3::new(0.0, 0.0, g(&ddf[1][1]))],
                    ],
                }
            }
            SurfaceKind::Custom { y0, step } => fd_jet(y0.as_ref(), x, *step),
        }
    }

    pub fn frame_at(&self, x: [f64; 2]) -> Result<SurfaceFrame> {
        SurfaceFrame::from_jet(&self.jet(x)?, x)
    }

    /// `D_x Θ(x3) = (D y0 | n0) + x3 (D n0 | 0)`.
    pub fn dtheta_thick(&self, x: [f64; 2], x3: f64) -> Result<Mat3> {
        self.frame_at(x)?.dtheta(x3)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "radius", reason: format!("must be > 0, got {r}") })
    }
}

/// Central-difference jet of `y0`.
pub fn fd_jet(y0: &(dyn Fn([f64; 2]) -> Vec3 + Send + Sync), x: [f64; 2], h: f64) -> Jet {
    let at = |a: f64, b: f64| y0([x[0] + a, x[1] + b]);
    let y = at(0.0, 0.0);
    let d = [(at(h, 0.0) - at(-h, 0.0)) / (2.0 * h), (at(0.0, h) - at(0.0, -h)) / (2.0 * h)];
    let d11 = (at(h, 0.0) - y * 2.0 + at(-h, 0.0)) / (h * h);
    let d22 = (at(0.0, h) - y * 2.0 + at(0.0, -h)) / (h * h);
    let d12 = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
    Jet { y, d, dd: [[d11, d12], [d12, d22]] }
}

/// Differential-geometric data of the midsurface at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub x: [f64; 2],
    pub y0: Vec3,
    pub dy0: Mat3x2,
    pub dn0: Mat3x2,
    pub n0: Vec3,
    /// `(D y0 | n0)`
    pub dtheta0: Mat3,
    pub dtheta0_inv: Mat3,
    /// First fundamental form `(D y0)^T D y0`.
    pub first_form: Mat2,
    /// Second fundamental form `-(D y0)^T D n0`.
    pub second_form: Mat2,
    /// Weingarten map `I^{-1} II`.
    pub weingarten: Mat2,
    /// `A_{y0} = (D y0 | 0) [D_x Θ(0)]^{-1}`
    pub a_y0: Mat3,
    /// `det D_x Θ(0)`
    pub surf_el: f64,
    /// Polar factors `D_x Θ(0) = Q0 U0`.
    pub q0: Mat3,
    pub u0: Mat3,
}

impl SurfaceFrame {
    /// The plane `y0 = (x1, x2, 0)`: every matrix is an exact 0/1 matrix.
    pub fn flat() -> Self {
        let mut a = Mat3::identity();
        a[(2, 2)] = 0.0;
        SurfaceFrame {
            x: [0.0, 0.0],
            y0: Vec3::zeros(),
            dy0: Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            dn0: Mat3x2::zeros(),
            n0: Vec3::z(),
            dtheta0: Mat3::identity(),
            dtheta0_inv: Mat3::identity(),
            first_form: Mat2::identity(),
            second_form: Mat2::zeros(),
            weingarten: Mat2::zeros(),
            a_y0: a,
            surf_el: 1.0,
            q0: Mat3::identity(),
            u0: Mat3::identity(),
        }
    }

    pub fn from_jet(jet: &Jet, x: [f64; 2]) -> Result<Self> {
        let [d1, d2] = jet.d;
        let big_n = d1.cross(&d2);
        let len = big_n.norm();
        if !(len >= IMMERSION_TOL) {
            return Err(Error::DegenerateImmersion { x1: x[0], x2: x[1], cross_norm: len });
        }
        let n0 = big_n / len;
        let proj = Mat3::identity() - n0 * n0.transpose();
        let dn = [0, 1].map(|a| {
            let dn_big = jet.dd[0][a].cross(&d2) + d1.cross(&jet.dd[1][a]);
            proj * dn_big / len
        });

        let dy0 = Mat3x2::from_columns(&[d1, d2]);
        let dn0 = Mat3x2::from_columns(&dn);
        let dtheta0 = Mat3::from_columns(&[d1, d2, n0]);
        let dtheta0_inv = dtheta0.try_inverse().ok_or(Error::Singular)?;
        let first_form = dy0.transpose() * dy0;
        let second_form = -(dy0.transpose() * dn0);
        let weingarten = first_form.try_inverse().ok_or(Error::Singular)? * second_form;
        let a_y0 = Mat3::from_columns(&[d1, d2, Vec3::zeros()]) * dtheta0_inv;
        let (q0, u0) = polar(&dtheta0)?;
        Ok(SurfaceFrame {
            x,
            y0: jet.y,
            dy0,
            dn0,
            n0,
            dtheta0,
            dtheta0_inv,
            first_form,
            second_form,
            weingarten,
            a_y0,
            surf_el: dtheta0.determinant(),
            q0,
            u0,
        })
    }

    /// `D_x Θ(x3) = (D y0 | n0) + x3 (D n0 | 0)`; fails when the determinant
    /// is not positive.
    pub fn dtheta(&self, x3: f64) -> Result<Mat3> {
        if x3 == 0.0 {
            return Ok(self.dtheta0);
        }
        let d = self.dy0 + self.dn0 * x3;
        let m = Mat3::from_columns(&[d.column(0).into_owned(), d.column(1).into_owned(), self.n0]);
        let det = m.determinant();
        if !(det > 0.0) {
            return Err(Error::ThicknessRange { x3, det });
        }
        Ok(m)
    }

    /// `(A X, (1 - A) X)`.
    pub fn decompose_tangent_normal(&self, x: &Mat3) -> (Mat3, Mat3) {
        let par = self.a_y0 * x;
        (par, x - par)
    }

    pub fn nn(&self) -> Mat3 {
        self.n0 * self.n0.transpose()
    }
}

/// Free-function form of [`SurfaceFrame::decompose_tangent_normal`].
pub fn decompose_tangent_normal(x: &Mat3, frame: &SurfaceFrame) -> (Mat3, Mat3) {
    frame.decompose_tangent_normal(x)
}

/// Polar decomposition `F = Q U` with `U = sqrt(F^T F)`, for `det F > 0`.
pub fn polar(f: &Mat3) -> Result<(Mat3, Mat3)> {
    if !(f.determinant() > 0.0) {
        return Err(Error::Singular);
    }
    let eig = SymmetricEigen::new(f.transpose() * f);
    let v = eig.eigenvectors;
    let sqrt = eig.eigenvalues.map(f64::sqrt);
    let u = v * Mat3::from_diagonal(&sqrt) * v.transpose();
    let u_inv = v * Mat3::from_diagonal(&sqrt.map(|s| 1.0 / s)) * v.transpose();
    let u = (u + u.transpose()) * 0.5;
    Ok((f * u_inv, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_frame(s: &Surface, x: [f64; 2]) -> SurfaceFrame {
        let s2 = s.clone();
        let f: SurfaceFn = Arc::new(move |p| s2.point(p));
        SurfaceFrame::from_jet(&fd_jet(f.as_ref(), x, 1e-4), x).unwrap()
    }

    #[test]
    fn plane_frame() {
        let s = Surface::plane(Rect::unit());
        let f = s.frame_at([0.3, 0.4]).unwrap();
        let flat = SurfaceFrame::flat();
        assert_eq!(f.n0, Vec3::z());
        assert_eq!(f.first_form, Mat2::identity());
        assert_eq!(f.second_form, Mat2::zeros());
        assert_eq!(f.weingarten, Mat2::zeros());
        assert_eq!(f.dtheta0, Mat3::identity());
        assert_eq!(f.a_y0, flat.a_y0);
        assert!((f.q0 - Mat3::identity()).norm() < 1e-15);
        assert_eq!(s.dtheta_thick([0.3, 0.4], 0.2).unwrap(), Mat3::identity());
    }

    #[test]
    fn cylinder_forms_match_finite_differences() {
        let s = Surface::cylinder(2.0, Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let x = [0.3, -0.2];
        let f = s.frame_at(x).unwrap();
        let g = fd_frame(&s, x);
        assert!((f.first_form - Mat2::identity()).norm() < 1e-14);
        assert!((f.second_form - g.second_form).norm() < 1e-6);
        assert!((f.weingarten - g.weingarten).norm() < 1e-6);
        assert!((f.weingarten - Mat2::new(-0.5, 0.0, 0.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cylinder_thick_determinant() {
        let s = Surface::cylinder(2.0, Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let f = s.frame_at([0.1, 0.0]).unwrap();
        let det = f.dtheta(0.1).unwrap().determinant();
        assert!((det - f.surf_el * (1.0 - 0.1 * f.weingarten[(0, 0)])).abs() < 1e-14);
        assert_eq!(f.dtheta(0.0).unwrap(), f.dtheta0);
        assert!(matches!(f.dtheta(-2.5), Err(Error::ThicknessRange { .. })));
    }

    #[test]
    fn sphere_weingarten_is_minus_identity_over_r() {
        let r = 1.7;
        let s = Surface::sphere(r, Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let x = [0.4, 0.3];
        let f = s.frame_at(x).unwrap();
        assert!((f.weingarten + Mat2::identity() / r).norm() < 1e-13);
        assert!((f.n0 - f.y0 / r).norm() < 1e-14);
        assert!((f.weingarten - fd_frame(&s, x).weingarten).norm() < 1e-6);
    }

    #[test]
    fn graph_surface_matches_finite_differences() {
        let s = Surface::graph("0.3*x1^2 - 0.2*x1*x2 + 0.1*sin(x2)", Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let x = [0.25, -0.4];
        let f = s.frame_at(x).unwrap();
        let g = fd_frame(&s, x);
        assert!((f.dn0 - g.dn0).norm() < 1e-6);
        assert!((f.weingarten - g.weingarten).norm() < 1e-6);
    }

    #[test]
    fn frame_identities() {
        let s = Surface::graph("0.5*x1^2 + 0.3*x1*x2 - 0.4*x2^2", Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let f = s.frame_at([0.2, 0.7]).unwrap();
        let nn = f.nn();
        assert!((f.n0.norm() - 1.0).abs() < 1e-15);
        assert!((f.dtheta0_inv.transpose() * Vec3::z() - f.n0).norm() < 1e-14);
        assert!((f.a_y0 * f.a_y0 - f.a_y0).norm() < 1e-14);
        assert!((f.a_y0 + nn - Mat3::identity()).norm() < 1e-14);
        assert!((f.a_y0 * nn).norm() < 1e-14);
        assert!((f.q0.transpose() * f.q0 - Mat3::identity()).norm() < 1e-10);
        assert!((f.q0.determinant() - 1.0).abs() < 1e-10);
        assert!((f.u0 - f.u0.transpose()).norm() < 1e-14);
        assert!((f.q0 * f.u0 - f.dtheta0).norm() < 1e-10);
        assert!(SymmetricEigen::new(f.u0).eigenvalues.iter().all(|&l| l > 0.0));
        assert!((f.surf_el - f.first_form.determinant().sqrt()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_immersion_is_reported() {
        let f: SurfaceFn = Arc::new(|x: [f64; 2]| Vec3::new(x[0] + x[1], x[0] + x[1], 0.0));
        let s = Surface::custom(f, 1e-5, Rect::unit()).unwrap();
        assert!(matches!(s.frame_at([0.5, 0.5]), Err(Error::DegenerateImmersion { .. })));
        assert!(s.frame_at([2.0, 0.5]).is_err());
    }

    #[test]
    fn normal_vectors_are_annihilated_by_projector() {
        let s = Surface::sphere(1.3, Rect::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        let f = s.frame_at([0.1, -0.5]).unwrap();
        let x = f.n0 * Vec3::new(1.0, -2.0, 0.5).transpose();
        let (par, perp) = f.decompose_tangent_normal(&x);
        assert!(par.norm() < 1e-14);
        assert!((perp - x).norm() < 1e-14);
    }
}
