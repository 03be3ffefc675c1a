//! Run configuration: a single JSON document.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::MaterialParams;
use crate::geometry::expr::Expr;
use crate::geometry::{Mat3x2, Rect, Surface};
use crate::rotation::{make_exp_field, RotationField, ScalarField, VectorField};
use crate::tensor::{Mat3, Vec3};
use crate::thin_limit::{QuadratureOptions, DEFAULT_H_LIST};

pub const DEFAULT_SEED: u64 = 42;

/// A configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub material: Option<MaterialParams>,
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub energy: EnergyOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub thinlimit: ThinLimitOptions,
}

/// Parameter rectangle `[[lo1, lo2], [hi1, hi2]]`.
pub type DomainSpec = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceSpec {
    Plane {
        #[serde(default)]
        domain: Option<DomainSpec>,
    },
    Cylinder {
        radius: f64,
        #[serde(default)]
        domain: Option<DomainSpec>,
    },
    Sphere {
        radius: f64,
        #[serde(default)]
        domain: Option<DomainSpec>,
    },
    /// Graph `(x1, x2, f(x1, x2))` of an expression in `x1`, `x2`.
    Graph {
        f: String,
        #[serde(default)]
        domain: Option<DomainSpec>,
    },
}

const WIDE: DomainSpec = [[-10.0, -1.5], [10.0, 1.5]];

impl SurfaceSpec {
    pub fn build(&self) -> Result<Surface, ConfigError> {
        let rect = |d: &Option<DomainSpec>| {
            let d = d.unwrap_or(WIDE);
            Rect::new(d[0], d[1])
        };
        let built = match self {
            SurfaceSpec::Plane { domain } => Ok(Surface::plane(rect(domain))),
            SurfaceSpec::Cylinder { radius, domain } => Surface::cylinder(*radius, rect(domain)),
            SurfaceSpec::Sphere { radius, domain } => Surface::sphere(*radius, rect(domain)),
            SurfaceSpec::Graph { f, domain } => Surface::graph(f, rect(domain)),
        };
        built.map_err(|e| ConfigError(format!("surface: {e}")))
    }
}

/// A rotation field on `R^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Identity,
    /// Row-major rotation matrix.
    Constant { matrix: [[f64; 3]; 3] },
    /// `exp((value + grad . x) anti(axis))`
    ExpAffine { axis: [f64; 3], value: f64, grad: [f64; 3] },
    /// `exp(θ(x1, x2) anti(axis))` with `θ` an expression.
    Exp { axis: [f64; 3], angle: String },
}

impl FieldSpec {
    pub fn build(&self) -> crate::Result<RotationField> {
        match self {
            FieldSpec::Identity => Ok(RotationField::identity()),
            FieldSpec::Constant { matrix } => RotationField::constant(rows(matrix)),
            FieldSpec::ExpAffine { axis, value, grad } => {
                RotationField::exp_affine(Vec3::from(*axis), *value, Vec3::from(*grad))
            }
            FieldSpec::Exp { axis, angle } => {
                let e = Expr::parse(angle)?;
                let theta = ScalarField::Function(Arc::new(move |x: &Vec3| e.eval([x[0], x[1]])));
                make_exp_field(VectorField::Constant(Vec3::from(*axis)), theta)
            }
        }
    }
}

pub fn rows(m: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| m[i][j])
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyOptions {
    #[serde(default)]
    pub samples: Vec<SampleSpec>,
}

const ZERO3: [[f64; 3]; 3] = [[0.0; 3]; 3];
const ID3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn zero3() -> [[f64; 3]; 3] {
    ZERO3
}

fn id3() -> [[f64; 3]; 3] {
    ID3
}

/// One energy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    /// Bulk densities at a stretch `U` and wryness `Γ`.
    Bulk {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "id3")]
        u: [[f64; 3]; 3],
        #[serde(default = "zero3")]
        gamma: [[f64; 3]; 3],
    },
    /// Homogenized plate densities at given membrane and bending strains,
    /// both with a zero third column.
    Plate {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "zero3")]
        membrane: [[f64; 3]; 3],
        #[serde(default = "zero3")]
        curvature: [[f64; 3]; 3],
    },
    /// Homogenized shell densities of a midsurface deformation and a named
    /// rotation field at a point of the configured surface.
    Shell {
        #[serde(default)]
        name: Option<String>,
        point: [f64; 2],
        rotation: String,
        #[serde(default)]
        midsurface: MidsurfaceSpec,
    },
}

/// `m = y0 + offset + M x`, `M` given as three rows of two entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MidsurfaceSpec {
    #[serde(default)]
    pub offset: [f64; 3],
    #[serde(default)]
    pub matrix: [[f64; 2]; 3],
}

impl MidsurfaceSpec {
    pub fn matrix(&self) -> Mat3x2 {
        Mat3x2::from_fn(|i, j| self.matrix[i][j])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    /// Instances per randomized suite.
    pub instances: usize,
    /// Instances of the per-thickness membrane suite.
    pub o1_instances: usize,
    /// Rotation-field samples for the field-based checks.
    pub field_samples: usize,
    /// Relative tolerance of the closed-form versus oracle comparisons.
    pub tol: f64,
    /// Use `material` for every instance instead of random parameters.
    pub fixed_material: bool,
    /// Accept zero curvature moduli in `material` (degenerate probes).
    pub allow_degenerate: bool,
    /// Factor applied to the tangential coefficient of `c*`; anything but 1
    /// must make the curvature suites fail.
    pub completion_mutation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            instances: 1000,
            o1_instances: 200,
            field_samples: 100,
            tol: 1e-10,
            fixed_material: false,
            allow_degenerate: false,
            completion_mutation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThinLimitOptions {
    /// Family names; see [`crate::thin_limit::documented_families`].
    pub families: Vec<String>,
    pub h_list: Vec<f64>,
    /// Carry the curvature completion through the thickness.
    pub corrected: bool,
    pub quadrature: QuadratureOptions,
}

impl Default for ThinLimitOptions {
    fn default() -> Self {
        ThinLimitOptions {
            families: vec!["flat-shear-rotation".into(), "cylinder-identity".into(), "sphere-patch-rotation".into()],
            h_list: DEFAULT_H_LIST.to_vec(),
            corrected: true,
            quadrature: QuadratureOptions::default(),
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub instances: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    /// Parses and validates; syntax errors carry line and column.
    pub fn from_json(src: &str, o: Overrides) -> Result<Self, ConfigError> {
        let mut c: RunConfig = serde_json::from_str(src).map_err(|e| ConfigError(format!("config: {e}")))?;
        if let Some(s) = o.seed {
            c.seed = Some(s);
        }
        if let Some(n) = o.instances {
            c.verify.instances = n;
        }
        if let Some(t) = o.tol {
            c.verify.tol = t;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// SHA-256 of the canonical serialization of the effective config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(m) = &self.material {
            if self.verify.allow_degenerate {
                let bad = [("mu", m.mu), ("mu_c", m.mu_c), ("l_c", m.l_c), ("b1", m.b1), ("b2", m.b2), ("b3", m.b3)]
                    .into_iter()
                    .find(|(_, v)| !(v.is_finite() && *v >= 0.0));
                if let Some((name, v)) = bad {
                    return err(format!("material.{name}: must be finite and >= 0, got {v}"));
                }
            } else if let Err(e) = m.validate() {
                return err(format!("material: {e}"));
            }
        }
        if let Some(s) = &self.surface {
            s.build()?;
        }
        for (name, f) in &self.fields {
            f.build().map_err(|e| ConfigError(format!("fields.{name}: {e}")))?;
        }
        for (i, s) in self.energy.samples.iter().enumerate() {
            if let SampleSpec::Shell { rotation, .. } = s {
                if !self.fields.contains_key(rotation) {
                    return err(format!("energy.samples[{i}].rotation: unknown field `{rotation}`"));
                }
            }
        }
        let v = &self.verify;
        if !(v.tol > 0.0 && v.tol.is_finite()) {
            return err(format!("verify.tol: must be positive, got {}", v.tol));
        }
        if v.instances == 0 || v.o1_instances == 0 || v.field_samples == 0 {
            return err("verify: instance counts must be positive");
        }
        if v.fixed_material && self.material.is_none() {
            return err("verify.fixed_material: requires a `material` block");
        }
        if !v.completion_mutation.is_finite() {
            return err("verify.completion_mutation: must be finite");
        }
        let t = &self.thinlimit;
        crate::thin_limit::validate_h_list(&t.h_list).map_err(|e| ConfigError(format!("thinlimit.h_list: {e}")))?;
        for f in &t.families {
            if crate::thin_limit::family(f).is_none() {
                return err(format!("thinlimit.families: unknown family `{f}`"));
            }
        }
        let q = &t.quadrature;
        if q.cells.contains(&0) || q.thickness_cells == 0 || q.points == 0 || q.check_points == 0 || !(q.tol > 0.0) {
            return err("thinlimit.quadrature: cell and point counts and tol must be positive");
        }
        Ok(())
    }

    /// The `material` block, or an error naming it.
    pub fn require_material(&self) -> Result<MaterialParams, ConfigError> {
        self.material.ok_or_else(|| ConfigError("missing `material` block".into()))
    }

    pub fn require_surface(&self) -> Result<Surface, ConfigError> {
        self.surface.as_ref().ok_or_else(|| ConfigError("missing `surface` block".into()))?.build()
    }
}
