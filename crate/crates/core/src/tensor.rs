//! Second- and third-order tensor algebra on R^3.
//!
//! Second-order tensors are plain `nalgebra` 3x3 matrices. Skew-symmetric
//! tensors get their own type so that `axl` is only ever applied to genuine
//! members of so(3). Third-order tensors are stored as three 3x3 blocks
//! `(A1 | A2 | A3)` with `A_k = (A_ijk)_ij`, i.e. the block index is the
//! *last* tensor index.

use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Vec3 = Vector3<f64>;

/// Relative Frobenius tolerance used for identities that hold exactly in
/// exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

/// Totally antisymmetric permutation symbol, zero-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub fn sym(x: &Mat3) -> Mat3 {
    (x + x.transpose()) * 0.5
}

pub fn skew(x: &Mat3) -> Mat3 {
    (x - x.transpose()) * 0.5
}

pub fn dev(x: &Mat3) -> Mat3 {
    x - Mat3::identity() * (x.trace() / 3.0)
}

/// Frobenius inner product `<X, Y> = tr(X Y^T)`.
pub fn ddot(x: &Mat3, y: &Mat3) -> f64 {
    x.component_mul(y).sum()
}

pub fn norm_sq(x: &Mat3) -> f64 {
    x.norm_squared()
}

/// `a ⊗ b` with `(a ⊗ b)_ij = a_i b_j`.
pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    a * b.transpose()
}

/// Relative size of the symmetric part, `||sym X|| / max(1, ||X||)`.
pub fn asymmetry(x: &Mat3) -> f64 {
    sym(x).norm() / x.norm().max(1.0)
}

/// A member of so(3).
///
/// The stored matrix satisfies `A + A^T = 0` bit-for-bit: every constructor
/// either builds the entries from an axial vector or stores the exact skew
/// projection of its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewMat3(Mat3);

impl SkewMat3 {
    pub fn zero() -> Self {
        SkewMat3(Mat3::zeros())
    }

    /// Accepts `m` if its symmetric part is below [`EXACT_TOL`] relative to
    /// `max(1, ||m||)`, and stores the exact skew projection.
    pub fn try_new(m: &Mat3) -> Result<Self> {
        let a = asymmetry(m);
        if a > EXACT_TOL || !a.is_finite() {
            return Err(Error::NotSkew { asymmetry: a });
        }
        Ok(Self::project(m))
    }

    /// Skew part of an arbitrary matrix.
    pub fn project(m: &Mat3) -> Self {
        let mut s = Mat3::zeros();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = -v;
            }
        }
        SkewMat3(s)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    pub fn axl(&self) -> Vec3 {
        axl(self)
    }
}

impl Index<(usize, usize)> for SkewMat3 {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// `anti(v)`: the skew matrix with `anti(v) w = v × w`.
pub fn anti(v: &Vec3) -> SkewMat3 {
    SkewMat3(Mat3::new(
        0.0, -v[2], v[1], //
        v[2], 0.0, -v[0], //
        -v[1], v[0], 0.0,
    ))
}

/// Inverse of [`anti`]: `axl(A)_k = -1/2 eps_ijk A_ij`.
pub fn axl(a: &SkewMat3) -> Vec3 {
    let m = a.matrix();
    let mut v = Vec3::zeros();
    for k in 0..3 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += levi_civita(i, j, k) * m[(i, j)];
            }
        }
        v[k] = -0.5 * s;
    }
    v
}

/// The three Frobenius-orthogonal parts of `X = dev sym X + skew X + tr(X)/3 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cartan {
    pub dev_sym: Mat3,
    pub skew: SkewMat3,
    pub spherical: Mat3,
}

impl Cartan {
    pub fn recompose(&self) -> Mat3 {
        self.dev_sym + self.skew.matrix() + self.spherical
    }
}

pub fn cartan_decompose(x: &Mat3) -> Cartan {
    let s = sym(x);
    let spherical = Mat3::identity() * (x.trace() / 3.0);
    Cartan {
        dev_sym: s - spherical,
        skew: SkewMat3::project(x),
        spherical,
    }
}

/// `M♭`: embeds a 2x2 matrix in the upper-left block of a 3x3 zero matrix.
pub fn lift_flat(m: &Mat2) -> Mat3 {
    Mat3::new(
        m[(0, 0)], m[(0, 1)], 0.0, //
        m[(1, 0)], m[(1, 1)], 0.0, //
        0.0, 0.0, 0.0,
    )
}

/// Third-order tensor in the `3 x 9` block layout `(A1 | A2 | A3)`,
/// `A_ijk = blocks[k][(i, j)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrder {
    pub blocks: [Mat3; 3],
}

impl ThirdOrder {
    pub fn new(a1: Mat3, a2: Mat3, a3: Mat3) -> Self {
        ThirdOrder { blocks: [a1, a2, a3] }
    }

    pub fn zero() -> Self {
        ThirdOrder { blocks: [Mat3::zeros(); 3] }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    t.blocks[k][(i, j)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.blocks[k][(i, j)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn sym(&self) -> Self {
        ThirdOrder { blocks: self.blocks.map(|b| sym(&b)) }
    }

    pub fn skew(&self) -> Self {
        ThirdOrder { blocks: self.blocks.map(|b| skew(&b)) }
    }

    /// `tr A = tr A1 + tr A2 + tr A3`.
    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// `sum_k [tr A_k]^2`, the block-wise trace energy.
    pub fn trace_sq_sum(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().powi(2)).sum()
    }

    /// `B A = (B A1 | B A2 | B A3)`.
    pub fn mul_left(&self, b: &Mat3) -> Self {
        ThirdOrder { blocks: self.blocks.map(|a| b * a) }
    }

    /// `A B`, block `l` equal to `sum_k A_k B_kl`.
    pub fn mul_right(&self, b: &Mat3) -> Self {
        let mut out = Self::zero();
        for l in 0..3 {
            for k in 0..3 {
                out.blocks[l] += self.blocks[k] * b[(k, l)];
            }
        }
        out
    }

    /// Largest relative asymmetry among the blocks.
    pub fn block_asymmetry(&self) -> f64 {
        self.blocks.iter().map(asymmetry).fold(0.0, f64::max)
    }

    /// `axl A = (axl A1 | axl A2 | axl A3)` applied to the skew part of each
    /// block.
    pub fn axl_blocks(&self) -> Mat3 {
        let cols = self.blocks.map(|b| axl(&SkewMat3::project(&b)));
        Mat3::from_columns(&cols)
    }

    /// Like [`ThirdOrder::axl_blocks`] but rejects blocks that are not skew.
    pub fn try_axl_blocks(&self) -> Result<Mat3> {
        let a = self.block_asymmetry();
        if a > EXACT_TOL {
            return Err(Error::NotSkew { asymmetry: a });
        }
        Ok(self.axl_blocks())
    }

    /// `anti z = (anti z1 | anti z2 | anti z3)` for the columns of `z`.
    pub fn anti_columns(z: &Mat3) -> Self {
        ThirdOrder {
            blocks: [0, 1, 2].map(|k| anti(&z.column(k).into_owned()).into_matrix()),
        }
    }

    /// Swaps the last two indices: `(P A)_ijk = A_ikj`.
    pub fn swap_last_two(&self) -> Self {
        Self::from_fn(|i, j, k| self.get(i, k, j))
    }
}

impl Add for ThirdOrder {
    type Output = ThirdOrder;

    fn add(self, rhs: ThirdOrder) -> ThirdOrder {
        ThirdOrder {
            blocks: [0, 1, 2].map(|k| self.blocks[k] + rhs.blocks[k]),
        }
    }
}

impl Sub for ThirdOrder {
    type Output = ThirdOrder;

    fn sub(self, rhs: ThirdOrder) -> ThirdOrder {
        ThirdOrder {
            blocks: [0, 1, 2].map(|k| self.blocks[k] - rhs.blocks[k]),
        }
    }
}

impl Neg for ThirdOrder {
    type Output = ThirdOrder;

    fn neg(self) -> ThirdOrder {
        ThirdOrder { blocks: self.blocks.map(|b| -b) }
    }
}

impl Mul<f64> for ThirdOrder {
    type Output = ThirdOrder;

    fn mul(self, s: f64) -> ThirdOrder {
        ThirdOrder { blocks: self.blocks.map(|b| b * s) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::assert_close;

    mod approx_eq {
        macro_rules! assert_close {
            ($a:expr, $b:expr, $tol:expr) => {{
                let (a, b): (f64, f64) = ($a, $b);
                assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
            }};
        }
        pub(crate) use assert_close;
    }

    #[test]
    fn anti_of_e1_matches_so3_layout() {
        let a = anti(&Vec3::new(1.0, 0.0, 0.0));
        let expected = Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_eq!(*a.matrix(), expected);
    }

    #[test]
    fn axl_of_zero_and_inverse_pair() {
        assert_eq!(axl(&SkewMat3::zero()), Vec3::zeros());
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(axl(&anti(&v)), v);
    }

    #[test]
    fn anti_acts_as_cross_product() {
        let v = Vec3::new(0.3, -1.2, 2.0);
        let w = Vec3::new(-0.7, 0.1, 0.4);
        let diff = anti(&v).matrix() * w - v.cross(&w);
        assert!(diff.norm() < 1e-15);
    }

    #[test]
    fn try_new_rejects_symmetric_input() {
        let m = Mat3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(SkewMat3::try_new(&m), Err(Error::NotSkew { .. })));
        let s = anti(&Vec3::new(0.1, 0.2, 0.3)).into_matrix();
        assert!(SkewMat3::try_new(&s).is_ok());
    }

    #[test]
    fn cartan_of_identity_and_pure_skew() {
        let c = cartan_decompose(&Mat3::identity());
        assert_eq!(c.dev_sym, Mat3::zeros());
        assert_eq!(c.skew, SkewMat3::zero());
        assert_eq!(c.spherical, Mat3::identity());

        let x = anti(&Vec3::new(1.0, 2.0, 3.0)).into_matrix();
        let c = cartan_decompose(&x);
        assert_eq!(c.dev_sym, Mat3::zeros());
        assert_eq!(*c.skew.matrix(), x);
        assert_eq!(c.spherical, Mat3::zeros());
    }

    #[test]
    fn lift_flat_examples() {
        assert_eq!(lift_flat(&Mat2::identity()), Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)));
        assert_eq!(lift_flat(&Mat2::zeros()), Mat3::zeros());
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(lift_flat(&m), Mat3::new(1.0, 2.0, 0.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn third_order_products() {
        let a = ThirdOrder::from_fn(|i, j, k| (i * 9 + j * 3 + k) as f64 - 13.0);
        assert_eq!(a.mul_left(&Mat3::identity()), a);
        assert_eq!(a.mul_right(&Mat3::identity()), a);

        let b = a.mul_right(&Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0)));
        assert_eq!(b.blocks[0], a.blocks[0] * 2.0);
        assert_eq!(b.blocks[1], a.blocks[1]);
        assert_eq!(b.blocks[2], a.blocks[2]);
    }

    #[test]
    fn third_order_right_product_matches_index_form() {
        let a = ThirdOrder::from_fn(|i, j, k| ((i + 2 * j + 3 * k) as f64).sin());
        let b = Mat3::from_fn(|i, j| ((i * 3 + j) as f64).cos());
        let c = a.mul_right(&b);
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    let brute: f64 = (0..3).map(|k| a.get(i, j, k) * b[(k, l)]).sum();
                    assert_close!(c.get(i, j, l), brute, 1e-14);
                }
            }
        }
    }

    #[test]
    fn norm_identity_for_anti() {
        let v = Vec3::new(0.4, -2.0, 1.5);
        assert_close!(anti(&v).matrix().norm_squared(), 2.0 * v.norm_squared(), 1e-14);
    }

    #[test]
    fn axl_blocks_inverts_anti_columns() {
        let z = Mat3::from_fn(|i, j| (i as f64) - 0.5 * (j as f64) + 0.25);
        let k = ThirdOrder::anti_columns(&z);
        assert_eq!(k.axl_blocks(), z);
        assert_eq!(k.try_axl_blocks().unwrap(), z);
        let bad = ThirdOrder::new(Mat3::identity(), Mat3::zeros(), Mat3::zeros());
        assert!(bad.try_axl_blocks().is_err());
    }
}
