//! Curvature strain measures of a rotation field: the wryness tensor `Γ`,
//! the dislocation density `α`, the third-order tensors `K = R^T D R` and
//! `K̂ = (R^T D(R e1) | R^T D(R e2) | R^T D(R e3))`, and the conversions
//! between them.

use crate::error::Result;
use crate::rotation::RotationField;
use crate::tensor::{axl, dev, levi_civita, skew, sym, Mat3, SkewMat3, ThirdOrder, Vec3};

/// `skew(R^T d_i R)`. The projection removes the symmetric defect left by
/// finite differences; in analytic mode it is a no-op up to rounding.
pub fn rt_dr(field: &RotationField, x: &Vec3, i: usize) -> Result<SkewMat3> {
    let r = field.eval(x)?;
    let d = field.derivative(x, i)?;
    Ok(SkewMat3::project(&(r.transpose() * d)))
}

/// Wryness tensor `Γ = (axl(R^T d_1 R) | axl(R^T d_2 R) | axl(R^T d_3 R))`.
pub fn wryness(field: &RotationField, x: &Vec3) -> Result<Mat3> {
    let cols = [rt_dr(field, x, 0)?, rt_dr(field, x, 1)?, rt_dr(field, x, 2)?];
    Ok(Mat3::from_columns(&cols.map(|k| axl(&k))))
}

/// `α = -Γ^T + tr(Γ) 1`.
pub fn nye_gamma_to_alpha(gamma: &Mat3) -> Mat3 {
    -gamma.transpose() + Mat3::identity() * gamma.trace()
}

/// `Γ = -α^T + tr(α)/2 1`.
pub fn nye_alpha_to_gamma(alpha: &Mat3) -> Mat3 {
    -alpha.transpose() + Mat3::identity() * (0.5 * alpha.trace())
}

/// Dislocation density `α = R^T Curl R`, obtained from the wryness tensor.
pub fn dislocation_density(field: &RotationField, x: &Vec3) -> Result<Mat3> {
    Ok(nye_gamma_to_alpha(&wryness(field, x)?))
}

/// `R^T Curl R` assembled directly, where row `i` of `Curl R` is the curl of
/// row `i` of `R`. Used only to cross-check the Nye route.
pub fn dislocation_density_direct(field: &RotationField, x: &Vec3) -> Result<Mat3> {
    let r = field.eval(x)?;
    let grad = field.gradient(x)?;
    let mut curl = Mat3::zeros();
    for i in 0..3 {
        for a in 0..3 {
            let mut s = 0.0;
            for b in 0..3 {
                for c in 0..3 {
                    s += levi_civita(a, b, c) * grad[b][(i, c)];
                }
            }
            curl[(i, a)] = s;
        }
    }
    Ok(r.transpose() * curl)
}

/// Both sides of each identity implied by the Nye formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NyeCorrespondence {
    pub gamma: Mat3,
    pub alpha: Mat3,
    /// `sym Γ` against `-sym α + tr(α)/2 1`
    pub sym: (Mat3, Mat3),
    /// `dev sym Γ` against `-dev sym α`
    pub dev_sym: (Mat3, Mat3),
    /// `skew Γ` against `skew α`
    pub skew: (Mat3, Mat3),
    /// `tr Γ` against `tr(α)/2`
    pub trace: (f64, f64),
    /// `sym α` against `-sym Γ + tr(Γ) 1`
    pub sym_alpha: (Mat3, Mat3),
}

impl NyeCorrespondence {
    /// Largest absolute discrepancy among the five identities.
    pub fn residuals(&self) -> [f64; 5] {
        [
            (self.sym.0 - self.sym.1).norm(),
            (self.dev_sym.0 - self.dev_sym.1).norm(),
            (self.skew.0 - self.skew.1).norm(),
            (self.trace.0 - self.trace.1).abs(),
            (self.sym_alpha.0 - self.sym_alpha.1).norm(),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, f64::max)
    }
}

pub fn sym_skew_tr_correspondence(gamma: &Mat3) -> NyeCorrespondence {
    let alpha = nye_gamma_to_alpha(gamma);
    let id = Mat3::identity();
    NyeCorrespondence {
        gamma: *gamma,
        alpha,
        sym: (sym(gamma), -sym(&alpha) + id * (0.5 * alpha.trace())),
        dev_sym: (dev(&sym(gamma)), -dev(&sym(&alpha))),
        skew: (skew(gamma), skew(&alpha)),
        trace: (gamma.trace(), 0.5 * alpha.trace()),
        sym_alpha: (sym(&alpha), -sym(gamma) + id * gamma.trace()),
    }
}

/// `K = R^T D R`, block `k` equal to `R^T d_k R`.
pub fn k_tensor(field: &RotationField, x: &Vec3) -> Result<ThirdOrder> {
    let r = field.eval(x)?;
    let grad = field.gradient(x)?;
    Ok(ThirdOrder { blocks: grad.map(|d| r.transpose() * d) })
}

/// `K̂`, block `k` equal to `R^T D(R e_k)`, i.e. `K̂_ijk = R_li d_j R_lk`.
pub fn k_hat_tensor(field: &RotationField, x: &Vec3) -> Result<ThirdOrder> {
    let r = field.eval(x)?;
    let grad = field.gradient(x)?;
    Ok(ThirdOrder::from_fn(|i, j, k| (0..3).map(|l| r[(l, i)] * grad[j][(l, k)]).sum()))
}

/// `(A.K̂)_ijk = K̂_ikj`; maps `K̂` onto `K`.
pub fn permute_a(k_hat: &ThirdOrder) -> ThirdOrder {
    k_hat.swap_last_two()
}

/// `K` from `Γ` through `K_ijk = -eps_ijl Γ_lk`.
pub fn k_from_gamma(gamma: &Mat3) -> ThirdOrder {
    ThirdOrder::anti_columns(gamma)
}

/// `||D R||^2` summed over all entries `d_k R_ij`.
pub fn dr_norm_sq(field: &RotationField, x: &Vec3) -> Result<f64> {
    Ok(field.gradient(x)?.iter().map(|d| d.norm_squared()).sum())
}

/// Weights `(c1, c2, c3)` of `c1 ||dev sym α||^2 + c2 ||skew α||^2 + c3 tr(α)^2`.
pub type AlphaWeights = (f64, f64, f64);

/// Weights for which the α-form reproduces `||D R||^2 = 2 ||Γ||^2`.
pub const DR_ALPHA_WEIGHTS: AlphaWeights = (2.0, 2.0, 1.0 / 6.0);

/// Competing candidate `(1, 1, 1/12)`; off by a factor two.
pub const DR_ALPHA_WEIGHTS_HALVED: AlphaWeights = (1.0, 1.0, 1.0 / 12.0);

/// `c1 ||dev sym α||^2 + c2 ||skew α||^2 + c3 tr(α)^2`.
pub fn alpha_quadratic(alpha: &Mat3, (c1, c2, c3): AlphaWeights) -> f64 {
    c1 * dev(&sym(alpha)).norm_squared() + c2 * skew(alpha).norm_squared() + c3 * alpha.trace().powi(2)
}
