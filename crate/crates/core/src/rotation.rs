//! SO(3)-valued fields on box domains and their spatial derivatives.
//!
//! Axis indices are zero-based throughout: `derivative(x, 0)` is the
//! derivative with respect to the first coordinate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{anti, Mat3, SkewMat3, Vec3};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Orthogonality tolerance `||R^T R - 1||` checked on every evaluation.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

const SERIES_THRESHOLD: f64 = 1e-4;

/// Exponential map `so(3) -> SO(3)`, `exp(anti(w))`, by Rodrigues' formula.
pub fn exp_so3(w: &Vec3) -> Mat3 {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SERIES_THRESHOLD {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = anti(w).into_matrix();
    Mat3::identity() + k * a + k * k * b
}

/// Checks `R^T R = 1` and `det R > 0`.
pub fn check_rotation(r: &Mat3) -> Result<()> {
    let defect = (r.transpose() * r - Mat3::identity()).norm();
    if !(defect <= ORTHOGONALITY_TOL) || r.determinant() <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "not a proper rotation (||R^T R - 1|| = {defect:e}, det = {})",
            r.determinant()
        )));
    }
    Ok(())
}

pub type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Vec3) -> Mat3 + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vec3) -> [Mat3; 3] + Send + Sync>;

/// Angle field for [`make_exp_field`].
#[derive(Clone)]
pub enum ScalarField {
    /// `theta(x) = value + grad . x`
    Affine { value: f64, grad: Vec3 },
    Function(ScalarFn),
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Affine { value, grad: Vec3::zeros() }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            ScalarField::Affine { value, grad } => value + grad.dot(x),
            ScalarField::Function(f) => f(x),
        }
    }
}

/// Axis field for [`make_exp_field`].
#[derive(Clone)]
pub enum VectorField {
    Constant(Vec3),
    Function(VectorFn),
}

impl VectorField {
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        match self {
            VectorField::Constant(v) => *v,
            VectorField::Function(f) => f(x),
        }
    }
}

/// Axis-aligned box `lo <= x <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoxDomain {
    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        BoxDomain { lo, hi }
    }

    pub fn unbounded() -> Self {
        BoxDomain {
            lo: Vec3::repeat(f64::NEG_INFINITY),
            hi: Vec3::repeat(f64::INFINITY),
        }
    }

    /// Signed distance to the boundary (positive inside).
    pub fn margin(&self, x: &Vec3) -> f64 {
        (0..3)
            .map(|i| (x[i] - self.lo[i]).min(self.hi[i] - x[i]))
            .fold(f64::INFINITY, f64::min)
    }

    fn sample_points(&self) -> Vec<Vec3> {
        let lo = self.lo.map(|v| if v.is_finite() { v } else { -1.0 });
        let hi = self.hi.map(|v| if v.is_finite() { v } else { 1.0 });
        let mut pts = vec![(lo + hi) * 0.5];
        for mask in 0..8u8 {
            pts.push(Vec3::from_fn(|i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }));
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

#[derive(Clone)]
enum Kind {
    Constant(Mat3),
    /// `exp(theta(x) anti(axis))` with constant unit axis and affine angle.
    ExpAffine { axis: SkewMat3, value: f64, grad: Vec3 },
    /// `exp(theta(x) anti(axis(x)))` for general generators.
    ExpGeneral { axis: VectorField, angle: ScalarField },
    Product(Arc<RotationField>, Arc<RotationField>),
    /// `left * inner(input * x) * right`
    Transformed { left: Mat3, inner: Arc<RotationField>, input: Mat3, right: Mat3 },
    Custom { eval: MatrixFn, jacobian: Option<JacobianFn> },
}

/// A microrotation field `x -> R(x)` in SO(3).
#[derive(Clone)]
pub struct RotationField {
    kind: Kind,
    domain: BoxDomain,
    mode: DerivativeMode,
}

impl fmt::Debug for RotationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Constant(_) => "constant",
            Kind::ExpAffine { .. } => "exp_affine",
            Kind::ExpGeneral { .. } => "exp_general",
            Kind::Product(..) => "product",
            Kind::Transformed { .. } => "transformed",
            Kind::Custom { .. } => "custom",
        };
        f.debug_struct("RotationField")
            .field("kind", &kind)
            .field("domain", &self.domain)
            .field("mode", &self.mode)
            .finish()
    }
}

fn unit_axis(axis: &Vec3) -> Result<()> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > 1e-12 || !norm.is_finite() {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(())
}

/// `x -> exp(theta(x) anti(axis(x)))`.
///
/// Analytic derivatives are used when the axis is constant and the angle is
/// affine; any other combination differentiates by central differences.
pub fn make_exp_field(axis: VectorField, angle: ScalarField) -> Result<RotationField> {
    match (&axis, &angle) {
        (VectorField::Constant(a), ScalarField::Affine { value, grad }) => {
            RotationField::exp_affine(*a, *value, *grad)
        }
        _ => {
            let field = RotationField {
                kind: Kind::ExpGeneral { axis, angle },
                domain: BoxDomain::unbounded(),
                mode: DerivativeMode::FiniteDifference { step: DEFAULT_FD_STEP },
            };
            field.check_axis()?;
            Ok(field)
        }
    }
}

impl RotationField {
    pub fn identity() -> Self {
        Self::from_kind(Kind::Constant(Mat3::identity()))
    }

    pub fn constant(r: Mat3) -> Result<Self> {
        check_rotation(&r)?;
        Ok(Self::from_kind(Kind::Constant(r)))
    }

    /// `exp((value + grad . x) anti(axis))` with analytic derivatives.
    pub fn exp_affine(axis: Vec3, value: f64, grad: Vec3) -> Result<Self> {
        unit_axis(&axis)?;
        Ok(Self::from_kind(Kind::ExpAffine { axis: anti(&axis), value, grad }))
    }

    /// Pointwise product `a(x) b(x)`.
    pub fn product(a: RotationField, b: RotationField) -> Self {
        let mode = match (a.mode, b.mode) {
            (DerivativeMode::Analytic, DerivativeMode::Analytic) => DerivativeMode::Analytic,
            (DerivativeMode::FiniteDifference { step }, _)
            | (_, DerivativeMode::FiniteDifference { step }) => DerivativeMode::FiniteDifference { step },
        };
        let domain = intersect(&a.domain, &b.domain);
        RotationField { kind: Kind::Product(Arc::new(a), Arc::new(b)), domain, mode }
    }

    /// `x -> left * inner(input * x) * right`.
    ///
    /// `left` and `right` must be rotations; `input` is any invertible map.
    /// Covers frame changes `Q R(x)`, material rotations `R(x) Q` and the
    /// isotropy transform `R(Q x) Q`.
    pub fn transformed(left: Mat3, inner: RotationField, input: Mat3, right: Mat3) -> Result<Self> {
        check_rotation(&left)?;
        check_rotation(&right)?;
        let inv = input.try_inverse().ok_or(Error::Singular)?;
        let domain = if inner.domain == BoxDomain::unbounded() {
            BoxDomain::unbounded()
        } else if input.iter().all(|v| *v == 0.0 || v.abs() == 1.0) && (inv * input - Mat3::identity()).norm() == 0.0 {
            // signed permutation: the image of a box is a box
            let a = inv * inner.domain.lo;
            let b = inv * inner.domain.hi;
            BoxDomain::new(a.inf(&b), a.sup(&b))
        } else {
            BoxDomain::unbounded()
        };
        let mode = inner.mode;
        Ok(RotationField {
            kind: Kind::Transformed { left, inner: Arc::new(inner), input, right },
            domain,
            mode,
        })
    }

    /// `left * self`: a change of observer frame.
    pub fn rotate_left(self, q: Mat3) -> Result<Self> {
        Self::transformed(q, self, Mat3::identity(), Mat3::identity())
    }

    /// `self * right`: a rotation of the material directors.
    pub fn rotate_right(self, q: Mat3) -> Result<Self> {
        Self::transformed(Mat3::identity(), self, Mat3::identity(), q)
    }

    /// User-supplied field. Without a Jacobian it is differentiated by
    /// central differences.
    pub fn custom(eval: MatrixFn, jacobian: Option<JacobianFn>) -> Self {
        let mode = if jacobian.is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference { step: DEFAULT_FD_STEP }
        };
        RotationField { kind: Kind::Custom { eval, jacobian }, domain: BoxDomain::unbounded(), mode }
    }

    fn from_kind(kind: Kind) -> Self {
        RotationField { kind, domain: BoxDomain::unbounded(), mode: DerivativeMode::Analytic }
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = domain;
        self
    }

    /// Forces central differences with the given step.
    pub fn with_finite_differences(mut self, step: f64) -> Self {
        self.mode = DerivativeMode::FiniteDifference { step };
        self
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    fn check_axis(&self) -> Result<()> {
        if let Kind::ExpGeneral { axis, .. } = &self.kind {
            for p in self.domain.sample_points() {
                unit_axis(&axis.eval(&p))?;
            }
        }
        Ok(())
    }

    fn raw(&self, x: &Vec3) -> Mat3 {
        match &self.kind {
            Kind::Constant(r) => *r,
            Kind::ExpAffine { axis, value, grad } => {
                let theta = value + grad.dot(x);
                exp_so3(&(axis.axl() * theta))
            }
            Kind::ExpGeneral { axis, angle } => exp_so3(&(axis.eval(x) * angle.eval(x))),
            Kind::Product(a, b) => a.raw(x) * b.raw(x),
            Kind::Transformed { left, inner, input, right } => left * inner.raw(&(input * x)) * right,
            Kind::Custom { eval, .. } => eval(x),
        }
    }

    fn check_inside(&self, x: &Vec3, margin: f64) -> Result<()> {
        let m = self.domain.margin(x);
        if !(m >= margin) {
            return Err(Error::OutsideDomain { point: [x[0], x[1], x[2]], margin: m });
        }
        Ok(())
    }

    pub fn eval(&self, x: &Vec3) -> Result<Mat3> {
        self.check_inside(x, 0.0)?;
        let r = self.raw(x);
        check_rotation(&r)?;
        Ok(r)
    }

    /// `d R / d x_i` at `x`, zero-based `i`.
    pub fn derivative(&self, x: &Vec3, i: usize) -> Result<Mat3> {
        assert!(i < 3, "axis index {i} out of range");
        match self.mode {
            DerivativeMode::Analytic => {
                self.check_inside(x, 0.0)?;
                Ok(self.analytic(x, i))
            }
            DerivativeMode::FiniteDifference { step } => {
                self.check_inside(x, step)?;
                let mut e = Vec3::zeros();
                e[i] = step;
                Ok((self.raw(&(x + e)) - self.raw(&(x - e))) / (2.0 * step))
            }
        }
    }

    /// `(d_1 R, d_2 R, d_3 R)`.
    pub fn gradient(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        Ok([self.derivative(x, 0)?, self.derivative(x, 1)?, self.derivative(x, 2)?])
    }

    fn analytic(&self, x: &Vec3, i: usize) -> Mat3 {
        match &self.kind {
            Kind::Constant(_) => Mat3::zeros(),
            Kind::ExpAffine { axis, grad, .. } => axis.matrix() * self.raw(x) * grad[i],
            Kind::Product(a, b) => a.analytic(x, i) * b.raw(x) + a.raw(x) * b.analytic(x, i),
            Kind::Transformed { left, inner, input, right } => {
                let y = input * x;
                let mut d = Mat3::zeros();
                for j in 0..3 {
                    if input[(j, i)] != 0.0 {
                        d += inner.derivative_unchecked(&y, j) * input[(j, i)];
                    }
                }
                left * d * right
            }
            Kind::Custom { jacobian: Some(jac), .. } => jac(x)[i],
            Kind::ExpGeneral { .. } | Kind::Custom { jacobian: None, .. } => {
                unreachable!("field without analytic derivative in analytic mode")
            }
        }
    }

    fn derivative_unchecked(&self, x: &Vec3, i: usize) -> Mat3 {
        match self.mode {
            DerivativeMode::Analytic => self.analytic(x, i),
            DerivativeMode::FiniteDifference { step } => {
                let mut e = Vec3::zeros();
                e[i] = step;
                (self.raw(&(x + e)) - self.raw(&(x - e))) / (2.0 * step)
            }
        }
    }
}

fn intersect(a: &BoxDomain, b: &BoxDomain) -> BoxDomain {
    BoxDomain::new(a.lo.sup(&b.lo), a.hi.inf(&b.hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn e(i: usize) -> Vec3 {
        let mut v = Vec3::zeros();
        v[i] = 1.0;
        v
    }

    #[test]
    fn exp_series_and_closed_form_agree_near_threshold() {
        let w = Vec3::new(0.3, -0.2, 0.5).normalize();
        let below = exp_so3(&(w * 0.99e-4));
        let above = exp_so3(&(w * 1.01e-4));
        assert!((below - above).norm() < 3e-6);
        assert!(check_rotation(&exp_so3(&(w * 1e-9))).is_ok());
    }

    #[test]
    fn zero_angle_gives_identity_and_zero_derivative() {
        let f = make_exp_field(VectorField::Constant(e(2)), ScalarField::constant(0.0)).unwrap();
        let x = Vec3::new(0.1, 0.2, 0.3);
        assert_eq!(f.eval(&x).unwrap(), Mat3::identity());
        for i in 0..3 {
            assert_eq!(f.derivative(&x, i).unwrap(), Mat3::zeros());
        }
    }

    #[test]
    fn quarter_turn_maps_e1_to_e2() {
        let f = make_exp_field(VectorField::Constant(e(2)), ScalarField::constant(FRAC_PI_2)).unwrap();
        let r = f.eval(&Vec3::zeros()).unwrap();
        assert!((r * e(0) - e(1)).norm() < 1e-15);
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        let err = make_exp_field(VectorField::Constant(Vec3::new(1.0, 1.0, 0.0)), ScalarField::constant(1.0));
        assert!(matches!(err, Err(Error::NonUnitAxis { .. })));
        let axis = VectorField::Function(Arc::new(|x: &Vec3| Vec3::new(1.0 + x[0], 0.0, 0.0)));
        let err = make_exp_field(axis, ScalarField::constant(1.0));
        assert!(matches!(err, Err(Error::NonUnitAxis { .. })));
    }

    #[test]
    fn analytic_derivative_matches_finite_differences() {
        let t = 0.7;
        let f = RotationField::exp_affine(e(2), 0.0, e(0) * t).unwrap();
        let x = Vec3::new(0.3, -0.1, 0.2);
        let fd = f.clone().with_finite_differences(1e-5);
        for i in 0..3 {
            let d = f.derivative(&x, i).unwrap();
            assert!((d - fd.derivative(&x, i).unwrap()).norm() < 1e-8);
        }
        let r = f.eval(&x).unwrap();
        let k = r.transpose() * f.derivative(&x, 0).unwrap();
        assert!((k - anti(&(e(2) * t)).into_matrix()).norm() < 1e-14);
        assert!((f.derivative(&Vec3::zeros(), 0).unwrap() - anti(&(e(2) * t)).into_matrix()).norm() < 1e-15);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let dom = BoxDomain::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        let f = RotationField::identity().with_domain(dom).with_finite_differences(1e-3);
        assert!(f.derivative(&Vec3::new(0.9995, 0.0, 0.0), 0).is_err());
        assert!(f.derivative(&Vec3::new(0.5, 0.0, 0.0), 0).is_ok());
        assert!(f.eval(&Vec3::new(2.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn left_rotation_commutes_with_derivative() {
        let f = RotationField::exp_affine(Vec3::new(0.0, 0.6, 0.8), 0.2, Vec3::new(0.4, -0.3, 1.1)).unwrap();
        let q = exp_so3(&Vec3::new(0.5, 1.0, -0.7));
        let g = f.clone().rotate_left(q).unwrap();
        let x = Vec3::new(0.2, 0.4, -0.3);
        for i in 0..3 {
            assert_eq!(g.derivative(&x, i).unwrap(), q * f.derivative(&x, i).unwrap());
        }
    }

    #[test]
    fn product_rule_against_finite_differences() {
        let a = RotationField::exp_affine(e(0), 0.1, Vec3::new(0.5, 0.0, 0.2)).unwrap();
        let b = RotationField::exp_affine(e(1), -0.3, Vec3::new(0.0, 0.9, 0.4)).unwrap();
        let p = RotationField::product(a, b);
        let fd = p.clone().with_finite_differences(1e-5);
        let x = Vec3::new(0.1, 0.2, 0.3);
        for i in 0..3 {
            assert!((p.derivative(&x, i).unwrap() - fd.derivative(&x, i).unwrap()).norm() < 1e-9);
        }
    }
}
