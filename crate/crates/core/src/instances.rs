//! Seeded random instances for the verification suites.
//!
//! Instance `i` of a batch draws from its own ChaCha stream, so results do
//! not depend on how a batch is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::MaterialParams;
use crate::geometry::{Mat3x2, Rect, Surface, SurfaceFrame};
use crate::rotation::exp_so3;
use crate::tensor::{Mat3, Vec3};

/// Generator for the `index`-th instance of a batch seeded with `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn uniform_matrix(rng: &mut impl Rng) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-1.0..=1.0))
}

pub fn uniform_vector(rng: &mut impl Rng) -> Vec3 {
    Vec3::from_fn(|_, _| rng.gen_range(-1.0..=1.0))
}

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Rotation `exp(anti(v))` with `v` uniform in `[-π, π]^3`.
pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    exp_so3(&(uniform_vector(rng) * std::f64::consts::PI))
}

/// Parameters with every modulus log-uniform in `[0.1, 10]`.
pub fn random_params(rng: &mut impl Rng) -> MaterialParams {
    let mut draw = || log_uniform(rng, 0.1, 10.0);
    MaterialParams {
        mu: draw(),
        lambda: draw(),
        mu_c: draw(),
        l_c: draw(),
        b1: draw(),
        b2: draw(),
        b3: draw(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Plane,
    Cylinder,
    Sphere,
}

pub const CURVED_MIX: [FrameKind; 3] = [FrameKind::Plane, FrameKind::Cylinder, FrameKind::Sphere];

/// A frame on a random plane, cylinder (`r` in `[0.5, 3]`) or sphere patch
/// (`r` in `[0.5, 3]`, latitude in `[-1, 1]`).
pub fn random_frame(rng: &mut impl Rng, kind: FrameKind) -> SurfaceFrame {
    let big = Rect::new([-10.0, -1.5], [10.0, 1.5]);
    let surface = match kind {
        FrameKind::Plane => Surface::plane(big),
        FrameKind::Cylinder => Surface::cylinder(rng.gen_range(0.5..=3.0), big).expect("valid radius"),
        FrameKind::Sphere => Surface::sphere(rng.gen_range(0.5..=3.0), big).expect("valid patch"),
    };
    let x = [rng.gen_range(-3.0..=3.0), rng.gen_range(-1.0..=1.0)];
    surface.frame_at(x).expect("regular surface point")
}

/// `G [D_x Θ(0)]^{-1}` with `G` uniform in `[-1, 1]` and zero third column,
/// the shape shared by the membrane and bending strains.
pub fn random_shell_strain(rng: &mut impl Rng, frame: &SurfaceFrame) -> (Mat3, [Vec3; 2]) {
    let cols = [uniform_vector(rng), uniform_vector(rng)];
    let g = Mat3::from_columns(&[cols[0], cols[1], Vec3::zeros()]);
    (g * frame.dtheta0_inv, cols)
}

/// A membrane instance: rotation `Q`, midsurface gradient `D m` and the
/// strain `E = (Q^T D m - D y0 | 0)[D_x Θ(0)]^{-1}` it produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneInstance {
    pub params: MaterialParams,
    pub frame: SurfaceFrame,
    pub q: Mat3,
    pub dm: Mat3x2,
}

pub fn membrane_instance(rng: &mut impl Rng, kind: FrameKind) -> MembraneInstance {
    let params = random_params(rng);
    let frame = random_frame(rng, kind);
    let q = random_rotation(rng);
    let g = Mat3x2::from_columns(&[uniform_vector(rng), uniform_vector(rng)]);
    MembraneInstance { params, frame, q, dm: q * (frame.dy0 + g) }
}

/// A bending instance: the two wryness columns before the metric factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendingInstance {
    pub params: MaterialParams,
    pub frame: SurfaceFrame,
    pub columns: [Vec3; 2],
}

pub fn bending_instance(rng: &mut impl Rng, kind: FrameKind) -> BendingInstance {
    let params = random_params(rng);
    let frame = random_frame(rng, kind);
    let columns = [uniform_vector(rng), uniform_vector(rng)];
    BendingInstance { params, frame, columns }
}
