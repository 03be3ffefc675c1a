//! Isotropic quadratic strain and curvature energies.

use serde::{Deserialize, Serialize};

use crate::curvature::permute_a;
use crate::error::{Error, Result};
use crate::tensor::{dev, skew, sym, Mat3, ThirdOrder};

/// Material constants of the isotropic Cosserat model.
///
/// `kappa` is always `(2 mu + 3 lambda) / 3`; it is derived, never stored
/// independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub mu: f64,
    pub lambda: f64,
    pub mu_c: f64,
    pub l_c: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams { mu: 1.0, lambda: 1.0, mu_c: 1.0, l_c: 1.0, b1: 1.0, b2: 1.0, b3: 1.0 }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and > 0, got {v}") })
    }
}

impl MaterialParams {
    pub fn new(mu: f64, lambda: f64, mu_c: f64, l_c: f64, b: [f64; 3]) -> Result<Self> {
        let p = MaterialParams { mu, lambda, mu_c, l_c, b1: b[0], b2: b[1], b3: b[2] };
        p.validate()?;
        Ok(p)
    }

    /// Checks `mu, kappa, mu_c, L_c, b1, b2, b3 > 0`.
    pub fn validate(&self) -> Result<()> {
        positive("mu", self.mu)?;
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter { name: "lambda", reason: "must be finite".into() });
        }
        positive("kappa", self.kappa())?;
        positive("mu_c", self.mu_c)?;
        positive("l_c", self.l_c)?;
        positive("b1", self.b1)?;
        positive("b2", self.b2)?;
        positive("b3", self.b3)
    }

    /// Bulk modulus `(2 mu + 3 lambda) / 3`.
    pub fn kappa(&self) -> f64 {
        (2.0 * self.mu + 3.0 * self.lambda) / 3.0
    }

    /// Curvature prefactor `mu L_c^2`.
    pub fn curvature_scale(&self) -> f64 {
        self.mu * self.l_c * self.l_c
    }

    pub fn a1(&self) -> f64 {
        self.b1
    }

    pub fn a2(&self) -> f64 {
        self.b2
    }

    /// `a3 = (b1 + 3 b3) / 3`, the value for which the dev-sym form equals
    /// the sym form.
    pub fn a3(&self) -> f64 {
        a3_candidates(self.b1, self.b3).exact
    }
}

/// The two candidate values for `a3` in terms of `(b1, b3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A3Candidates {
    /// `(b1 + 3 b3) / 3`
    pub exact: f64,
    /// `(12 b3 - b1) / 3`
    pub printed: f64,
}

pub fn a3_candidates(b1: f64, b3: f64) -> A3Candidates {
    A3Candidates { exact: (b1 + 3.0 * b3) / 3.0, printed: (12.0 * b3 - b1) / 3.0 }
}

/// Term-by-term energy density. `normal_term` is only populated by the
/// homogenized energies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub sym_term: f64,
    pub skew_term: f64,
    pub trace_term: f64,
    pub normal_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(sym_term: f64, skew_term: f64, trace_term: f64, normal_term: f64) -> Self {
        EnergyBreakdown {
            sym_term,
            skew_term,
            trace_term,
            normal_term,
            total: sym_term + skew_term + trace_term + normal_term,
        }
    }
}

/// `mu ||dev sym(U - 1)||^2 + mu_c ||skew(U - 1)||^2 + kappa/2 [tr(U - 1)]^2`.
pub fn w_mp(u: &Mat3, p: &MaterialParams) -> EnergyBreakdown {
    let x = u - Mat3::identity();
    EnergyBreakdown::new(
        p.mu * dev(&sym(&x)).norm_squared(),
        p.mu_c * skew(&x).norm_squared(),
        0.5 * p.kappa() * x.trace().powi(2),
        0.0,
    )
}

/// `mu ||sym(U - 1)||^2 + mu_c ||skew(U - 1)||^2 + lambda/2 [tr(U - 1)]^2`.
pub fn w_mp_lame(u: &Mat3, p: &MaterialParams) -> EnergyBreakdown {
    let x = u - Mat3::identity();
    EnergyBreakdown::new(
        p.mu * sym(&x).norm_squared(),
        p.mu_c * skew(&x).norm_squared(),
        0.5 * p.lambda * x.trace().powi(2),
        0.0,
    )
}

/// `mu L_c^2 (b1 ||sym Γ||^2 + b2 ||skew Γ||^2 + b3 [tr Γ]^2)`.
pub fn w_curv_gamma(gamma: &Mat3, p: &MaterialParams) -> EnergyBreakdown {
    let s = p.curvature_scale();
    EnergyBreakdown::new(
        s * p.b1 * sym(gamma).norm_squared(),
        s * p.b2 * skew(gamma).norm_squared(),
        s * p.b3 * gamma.trace().powi(2),
        0.0,
    )
}

/// Curvature energy in terms of the dislocation density,
/// `mu L_c^2 (b1 ||dev sym α||^2 + b2 ||skew α||^2 + (b1 + 3 b3)/12 [tr α]^2)`.
///
/// Equals [`w_curv_gamma`] at `Γ = -α^T + tr(α)/2 1` for every `α`.
pub fn w_curv_alpha(alpha: &Mat3, p: &MaterialParams) -> EnergyBreakdown {
    let s = p.curvature_scale();
    EnergyBreakdown::new(
        s * p.b1 * dev(&sym(alpha)).norm_squared(),
        s * p.b2 * skew(alpha).norm_squared(),
        s * (p.b1 + 3.0 * p.b3) / 12.0 * alpha.trace().powi(2),
        0.0,
    )
}

/// `mu L_c^2 (b1 ||sym α||^2 + b2 ||skew α||^2 + b3/4 [tr α]^2)`.
///
/// Agrees with [`w_curv_gamma`] only when `tr α = 0`; kept for comparison.
pub fn w_curv_alpha_sym(alpha: &Mat3, p: &MaterialParams) -> EnergyBreakdown {
    let s = p.curvature_scale();
    EnergyBreakdown::new(
        s * p.b1 * sym(alpha).norm_squared(),
        s * p.b2 * skew(alpha).norm_squared(),
        s * 0.25 * p.b3 * alpha.trace().powi(2),
        0.0,
    )
}

/// `mu L_c^2 (a1 ||dev sym Γ||^2 + a2 ||skew Γ||^2 + a3 [tr Γ]^2)` with the
/// parameters' own `a3`.
pub fn w_curv_devsym(gamma: &Mat3, p: &MaterialParams) -> EnergyBreakdown {
    w_curv_devsym_with(gamma, p, p.a3())
}

/// [`w_curv_devsym`] with an explicit trace weight.
pub fn w_curv_devsym_with(gamma: &Mat3, p: &MaterialParams, a3: f64) -> EnergyBreakdown {
    let s = p.curvature_scale();
    EnergyBreakdown::new(
        s * p.a1() * dev(&sym(gamma)).norm_squared(),
        s * p.a2() * skew(gamma).norm_squared(),
        s * a3 * gamma.trace().powi(2),
        0.0,
    )
}

/// `(mu L_c^2 / 12)(w1 ||sym K̂||^2 + w2 ||skew K̂||^2 + w3 [tr K̂]^2)` with
/// block-wise sums for each term.
pub fn w_curv_khat(k_hat: &ThirdOrder, weights: [f64; 3], p: &MaterialParams) -> EnergyBreakdown {
    let s = p.curvature_scale() / 12.0;
    EnergyBreakdown::new(
        s * weights[0] * k_hat.sym().norm_sq(),
        s * weights[1] * k_hat.skew().norm_sq(),
        s * weights[2] * k_hat.trace_sq_sum(),
        0.0,
    )
}

/// Isotropic energy of `K̂`: [`w_curv_gamma`] evaluated at `axl(A.K̂)`.
pub fn w_curv_khat_isotropic(k_hat: &ThirdOrder, p: &MaterialParams) -> EnergyBreakdown {
    w_curv_gamma(&permute_a(k_hat).axl_blocks(), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{k_hat_tensor, nye_gamma_to_alpha, wryness};
    use crate::rotation::RotationField;
    use crate::tensor::{anti, Vec3};

    fn random_ish(seed: f64) -> Mat3 {
        Mat3::from_fn(|i, j| ((i * 3 + j) as f64 * 1.7 + seed).sin())
    }

    #[test]
    fn w_mp_examples() {
        let p = MaterialParams::new(1.0, 1.0 / 3.0, 5.0, 1.0, [1.0; 3]).unwrap();
        assert_eq!(p.kappa(), 1.0);
        assert_eq!(w_mp(&Mat3::identity(), &p).total, 0.0);
        let u = Mat3::identity() + Mat3::from_diagonal(&Vec3::new(1.0, 0.0, 0.0));
        assert!((w_mp(&u, &p).total - 7.0 / 6.0).abs() < 1e-15);
        assert!((w_mp_lame(&u, &p).total - 7.0 / 6.0).abs() < 1e-15);

        let q = MaterialParams { mu_c: 2.0, ..p };
        let s = anti(&Vec3::new(0.3, -0.1, 0.7)).into_matrix();
        let e = w_mp(&(Mat3::identity() + s), &q);
        assert_eq!(e.sym_term, 0.0);
        assert_eq!(e.trace_term, 0.0);
        assert!((e.total - 2.0 * s.norm_squared()).abs() < 1e-15);
    }

    #[test]
    fn w_mp_forms_agree() {
        let p = MaterialParams::new(0.7, 1.3, 2.1, 1.0, [1.0; 3]).unwrap();
        for k in 0..20 {
            let u = random_ish(k as f64);
            let a = w_mp(&u, &p).total;
            let b = w_mp_lame(&u, &p).total;
            assert!((a - b).abs() <= 1e-13 * a.max(1.0));
        }
    }

    #[test]
    fn w_curv_gamma_identity_example() {
        let p = MaterialParams::default();
        let e = w_curv_gamma(&Mat3::identity(), &p);
        assert_eq!((e.sym_term, e.skew_term, e.trace_term, e.total), (3.0, 0.0, 9.0, 12.0));
        assert_eq!(w_curv_devsym(&Mat3::identity(), &p).total, 12.0);
        assert_eq!(w_curv_alpha(&Mat3::zeros(), &p).total, 0.0);
    }

    #[test]
    fn skew_wryness_only_feels_b2() {
        let p = MaterialParams::new(1.0, 1.0, 1.0, 2.0, [0.5, 3.0, 7.0]).unwrap();
        let g = anti(&Vec3::new(1.0, -2.0, 0.5)).into_matrix();
        let expected = p.curvature_scale() * p.b2 * g.norm_squared();
        assert!((w_curv_gamma(&g, &p).total - expected).abs() < 1e-12);
        assert!((w_curv_alpha(&nye_gamma_to_alpha(&g), &p).total - expected).abs() < 1e-12);
        assert!((w_curv_alpha_sym(&nye_gamma_to_alpha(&g), &p).total - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_form_matches_gamma_form() {
        let p = MaterialParams::new(1.2, 0.4, 1.0, 0.8, [0.3, 2.0, 4.5]).unwrap();
        for k in 0..20 {
            let g = random_ish(0.37 * k as f64);
            let a = w_curv_gamma(&g, &p).total;
            let b = w_curv_alpha(&nye_gamma_to_alpha(&g), &p).total;
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn devsym_form_of_traceless_symmetric() {
        let p = MaterialParams::new(1.0, 1.0, 1.0, 1.0, [2.5, 1.0, 1.0]).unwrap();
        let g = Mat3::new(1.0, 2.0, 0.0, 2.0, -3.0, 1.0, 0.0, 1.0, 2.0);
        assert!((w_curv_devsym(&g, &p).total - 2.5 * g.norm_squared()).abs() < 1e-13);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(MaterialParams::new(0.0, 1.0, 1.0, 1.0, [1.0; 3]).is_err());
        assert!(MaterialParams::new(1.0, -1.0, 1.0, 1.0, [1.0; 3]).is_err());
        assert!(MaterialParams::new(1.0, 1.0, 1.0, 1.0, [1.0, 0.0, 1.0]).is_err());
        assert!(MaterialParams::new(1.0, 1.0, 1.0, 1.0, [1.0, 1.0, f64::NAN]).is_err());
    }

    #[test]
    fn khat_energy_of_skew_blocks() {
        let p = MaterialParams::default();
        let k = ThirdOrder::anti_columns(&random_ish(0.4));
        let e = w_curv_khat(&k, [1.0, 2.0, 3.0], &p);
        assert!(e.sym_term.abs() < 1e-15 && e.trace_term.abs() < 1e-15);
        assert!((e.skew_term - 2.0 / 12.0 * k.norm_sq()).abs() < 1e-14);
        assert_eq!(w_curv_khat(&ThirdOrder::zero(), [1.0; 3], &p).total, 0.0);
    }

    #[test]
    fn khat_isotropic_form_matches_gamma() {
        let p = MaterialParams::new(1.0, 1.0, 1.0, 1.5, [0.7, 1.9, 0.4]).unwrap();
        let f = RotationField::exp_affine(Vec3::new(0.0, 0.6, 0.8), 0.1, Vec3::new(0.5, -1.0, 0.3)).unwrap();
        let x = Vec3::new(0.2, 0.1, -0.4);
        let a = w_curv_khat_isotropic(&k_hat_tensor(&f, &x).unwrap(), &p).total;
        let b = w_curv_gamma(&wryness(&f, &x).unwrap(), &p).total;
        assert!((a - b).abs() < 1e-12 * b.max(1.0));
    }
}
