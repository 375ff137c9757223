//! Run configuration: one JSON document, resolved once per invocation.
//!
//! A config file provides any subset of the fields; command-line flags
//! override file values; every output embeds the fully resolved config so a
//! run can be reproduced from its own artifact. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use stokeprop::bem::{
    resistance_tensors, solve_rigid_modes_about, sphere_convergence_study, BemConfig,
    ConvergenceStudy, ResistanceSet,
};
use stokeprop::mesh::{ellipsoid, icosphere, stl::load_stl, TriMesh};
use stokeprop::output::sha256_hex;
use stokeprop::propulsion::{
    offcenter_sphere_tensors, sphere_tensors, BodyInertia, Forcing,
};
use stokeprop::IntegrateOptions;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub body: BodyConfig,
    pub inertia: InertiaConfig,
    pub fluid: FluidConfig,
    pub forcing: ForcingConfig,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodyConfig {
    pub shape: ShapeConfig,
    pub subdivisions: u32,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self {
            shape: ShapeConfig::Sphere { radius: 1.0 },
            subdivisions: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum ShapeConfig {
    Sphere { radius: f64 },
    Ellipsoid { semi_axes: [f64; 3] },
    /// Sphere of the given radius whose center of mass (the torque reference
    /// point) sits `center_offset` along +x from the geometric center.
    OffcenterSphere { radius: f64, center_offset: f64 },
    Stl { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InertiaConfig {
    pub mode: InertiaMode,
    /// Application offset r: force application point minus center of mass.
    pub offset: [f64; 3],
}

impl Default for InertiaConfig {
    fn default() -> Self {
        Self {
            mode: InertiaMode::Homogeneous { density_ratio: 1.0 },
            offset: [0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum InertiaMode {
    /// Mass and inertia of the homogeneous body with the given body/fluid
    /// density ratio.
    Homogeneous { density_ratio: f64 },
    /// Physical mass and inertia (row-major), normalized by the fluid
    /// density at load.
    Explicit { mass: f64, inertia: [f64; 9] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidConfig {
    pub viscosity: f64,
    pub density: f64,
}

impl Default for FluidConfig {
    fn default() -> Self {
        Self {
            viscosity: 1.0,
            density: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingConfig {
    pub period: f64,
    pub delta: f64,
    /// Mean coefficient c0 of the scaled waveform.
    pub mean: f64,
    /// Cosine/sine pairs for harmonics k = 1, 2, ...
    pub harmonics: Vec<[f64; 2]>,
    /// Force direction in the inertial frame; normalized at load.
    pub b_hat: [f64; 3],
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            period: 1.0,
            delta: 0.01,
            mean: 1.0,
            harmonics: vec![[1.0, 0.0]],
            b_hat: [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorSource {
    /// Analytic tensors for spheres, collocation otherwise.
    Auto,
    Analytic,
    Bem,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub blob_coeff: f64,
    pub max_panels: usize,
    pub steps_per_period: usize,
    pub orbit_tol: f64,
    pub max_periods: usize,
    /// Accept the secular-drift defect floor instead of demanding strict
    /// periodicity (always on for sweeps).
    pub allow_drift_floor: bool,
    /// Criterion tolerance; default depends on the tensor source.
    pub propulsion_tol: Option<f64>,
    pub tensor_source: TensorSource,
    /// Amplitudes for the sweep command, strictly decreasing.
    pub deltas: Vec<f64>,
    pub translation_only: bool,
    /// Optional distance for the periods-to-cover computation.
    pub distance: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            blob_coeff: stokeprop::bem::DEFAULT_BLOB_COEFF,
            max_panels: 20_000,
            steps_per_period: 1024,
            orbit_tol: 1e-10,
            max_periods: 200,
            allow_drift_floor: false,
            propulsion_tol: None,
            tensor_source: TensorSource::Auto,
            deltas: vec![0.1, 0.05, 0.025, 0.0125],
            translation_only: false,
            distance: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid config {}: {e}", p.display())))
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.into()));
        match &self.body.shape {
            ShapeConfig::Sphere { radius } if *radius <= 0.0 => {
                return bad("sphere radius must be positive")
            }
            ShapeConfig::Ellipsoid { semi_axes } if semi_axes.iter().any(|a| *a <= 0.0) => {
                return bad("ellipsoid semi-axes must be positive")
            }
            ShapeConfig::OffcenterSphere {
                radius,
                center_offset,
            } if *radius <= 0.0 || *center_offset <= 0.0 || center_offset >= radius => {
                return bad("off-center sphere needs 0 < center_offset < radius")
            }
            _ => {}
        }
        if self.fluid.viscosity <= 0.0 || self.fluid.density <= 0.0 {
            return bad("fluid viscosity and density must be positive");
        }
        if self.forcing.period <= 0.0 {
            return bad("forcing period must be positive");
        }
        if self.forcing.delta < 0.0 {
            return bad("forcing delta must be non-negative");
        }
        let b = Vector3::from(self.forcing.b_hat);
        if b.norm() == 0.0 || !b.norm().is_finite() {
            return bad("b_hat must be a nonzero finite vector");
        }
        if self.solver.steps_per_period == 0 {
            return bad("steps_per_period must be positive");
        }
        match self.inertia.mode {
            InertiaMode::Homogeneous { density_ratio } if density_ratio <= 0.0 => {
                bad("density_ratio must be positive")
            }
            InertiaMode::Explicit { mass, .. } if mass <= 0.0 => {
                bad("explicit mass must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Canonical identifier for generated meshes; STL bodies hash the file
    /// bytes instead.
    pub fn mesh_hash(&self) -> Result<String, CliError> {
        let tag = match &self.body.shape {
            ShapeConfig::Sphere { radius } => {
                format!("sphere(radius={radius},sub={})", self.body.subdivisions)
            }
            ShapeConfig::Ellipsoid { semi_axes } => format!(
                "ellipsoid(a={},b={},c={},sub={})",
                semi_axes[0], semi_axes[1], semi_axes[2], self.body.subdivisions
            ),
            ShapeConfig::OffcenterSphere {
                radius,
                center_offset,
            } => format!(
                "offcenter-sphere(radius={radius},offset={center_offset},sub={})",
                self.body.subdivisions
            ),
            ShapeConfig::Stl { path } => {
                let bytes = std::fs::read(path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                return Ok(sha256_hex(&bytes));
            }
        };
        Ok(sha256_hex(tag.as_bytes()))
    }

    pub fn build_mesh(&self) -> Result<TriMesh<f64>, CliError> {
        match &self.body.shape {
            ShapeConfig::Sphere { radius } => Ok(icosphere(*radius, self.body.subdivisions)),
            ShapeConfig::Ellipsoid { semi_axes } => {
                Ok(ellipsoid(*semi_axes, self.body.subdivisions))
            }
            ShapeConfig::OffcenterSphere { radius, .. } => {
                Ok(icosphere(*radius, self.body.subdivisions))
            }
            ShapeConfig::Stl { path } => Ok(load_stl(path)?),
        }
    }

    pub fn bem_config(&self) -> BemConfig<f64> {
        BemConfig {
            blob_coeff: self.solver.blob_coeff,
            max_panels: self.solver.max_panels,
            ..BemConfig::default()
        }
    }

    fn resolved_source(&self) -> TensorSource {
        match (self.solver.tensor_source, &self.body.shape) {
            (TensorSource::Auto, ShapeConfig::Sphere { .. })
            | (TensorSource::Auto, ShapeConfig::OffcenterSphere { .. }) => TensorSource::Analytic,
            (TensorSource::Auto, _) => TensorSource::Bem,
            (src, _) => src,
        }
    }

    /// Resistance tensors per the configured source, together with the
    /// provenance string used in reports.
    pub fn build_tensors(&self) -> Result<(ResistanceSet<f64>, String), CliError> {
        let nu = self.fluid.viscosity;
        match self.resolved_source() {
            TensorSource::Analytic => match &self.body.shape {
                ShapeConfig::Sphere { radius } => Ok((
                    sphere_tensors(*radius, nu),
                    format!("analytic:sphere({radius})"),
                )),
                ShapeConfig::OffcenterSphere {
                    radius,
                    center_offset,
                } => Ok((
                    offcenter_sphere_tensors(*radius, *center_offset, nu),
                    format!("analytic:sphere({radius},{center_offset})"),
                )),
                _ => Err(CliError::Config(
                    "analytic tensors exist only for sphere bodies".into(),
                )),
            },
            TensorSource::Bem | TensorSource::Auto => {
                let mesh = self.build_mesh()?;
                let reference = match &self.body.shape {
                    ShapeConfig::OffcenterSphere { center_offset, .. } => {
                        Vector3::new(*center_offset, 0.0, 0.0)
                    }
                    _ => mesh.volume_centroid(),
                };
                let sol = solve_rigid_modes_about(&mesh, nu, reference, &self.bem_config())?;
                let set = resistance_tensors(&sol)?;
                Ok((set, self.mesh_hash()?))
            }
        }
    }

    /// Criterion tolerance: explicit config value, or 1e-9 for analytic
    /// tensors, or three times the frozen accuracy estimate of the
    /// collocation at this refinement.
    pub fn propulsion_tol(&self) -> f64 {
        if let Some(tol) = self.solver.propulsion_tol {
            return tol;
        }
        match self.resolved_source() {
            TensorSource::Analytic => 1e-9,
            _ => {
                let accuracy = match self.body.subdivisions {
                    0 | 1 => 0.08,
                    2 => 0.02,
                    3 => 0.007,
                    _ => 0.003,
                };
                3.0 * accuracy
            }
        }
    }

    pub fn build_forcing(&self) -> Result<Forcing<f64>, CliError> {
        let b = Vector3::from(self.forcing.b_hat);
        Ok(Forcing::new(
            self.forcing.period,
            self.forcing.delta,
            self.forcing.mean,
            self.forcing.harmonics.clone(),
            b / b.norm(),
        )?)
    }

    /// Density-normalized inertia. Spheres get closed-form homogeneous
    /// values; other shapes integrate the mesh volume.
    pub fn build_inertia(&self) -> Result<BodyInertia<f64>, CliError> {
        let offset = Vector3::from(self.inertia.offset);
        match self.inertia.mode {
            InertiaMode::Explicit { mass, inertia } => {
                let rho = self.fluid.density;
                let i = Matrix3::from_fn(|r, c| inertia[3 * r + c] / rho);
                Ok(BodyInertia::new(mass / rho, i, offset)?)
            }
            InertiaMode::Homogeneous { density_ratio } => match &self.body.shape {
                ShapeConfig::Sphere { radius }
                | ShapeConfig::OffcenterSphere { radius, .. } => {
                    let v = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
                    let i = 8.0 / 15.0 * std::f64::consts::PI * radius.powi(5);
                    Ok(BodyInertia::new(
                        density_ratio * v,
                        Matrix3::identity() * (density_ratio * i),
                        offset,
                    )?)
                }
                _ => {
                    let mesh = self.build_mesh()?;
                    Ok(BodyInertia::homogeneous(&mesh, density_ratio, offset)?)
                }
            },
        }
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        IntegrateOptions {
            steps_per_period: self.solver.steps_per_period,
            max_periods: self.solver.max_periods,
            orbit_tol: self.solver.orbit_tol,
            allow_drift_floor: self.solver.allow_drift_floor,
        }
    }

    /// Convergence study over the given sphere subdivision levels.
    pub fn sphere_study(&self, levels: &[u32]) -> Result<ConvergenceStudy, CliError> {
        match &self.body.shape {
            ShapeConfig::Sphere { radius } => Ok(sphere_convergence_study(
                *radius,
                self.fluid.viscosity,
                levels,
                &self.bem_config(),
            )?),
            _ => Err(CliError::Config(
                "convergence studies require the sphere (the analytic oracle)".into(),
            )),
        }
    }
}
