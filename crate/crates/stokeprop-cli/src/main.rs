//! Command-line front end: meshes, resistance tensors, propulsion verdicts
//! and periodic simulations as reproducible runs with machine-readable
//! outputs.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
//! failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;

use config::{RunConfig, ShapeConfig, TensorSource};

pub const VERSION: &str = concat!("stokeprop ", env!("CARGO_PKG_VERSION"));

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(stokeprop::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<stokeprop::Error> for CliError {
    fn from(e: stokeprop::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) => {
                if e.is_validation() {
                    2
                } else {
                    3
                }
            }
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "stokeprop", version, about = "Stokes resistance and propulsion toolkit")]
struct Cli {
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resistance tensors of a body by regularized-Stokeslet collocation.
    Resistance {
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        fluid: FluidArgs,
        /// Blob regularization coefficient.
        #[arg(long, value_name = "C")]
        blob_coeff: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate the propulsion criterion and leading-order velocities.
    Check {
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        fluid: FluidArgs,
        #[command(flatten)]
        forcing: ForcingArgs,
        /// Application offset r as "X,Y,Z".
        #[arg(long, value_name = "X,Y,Z")]
        r: Option<String>,
        /// Criterion tolerance on the mismatch norm.
        #[arg(long, value_name = "TOL")]
        tol: Option<f64>,
        /// Tensor source: auto, analytic or bem.
        #[arg(long, value_name = "SOURCE")]
        source: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integrate the body-frame dynamics to the periodic orbit.
    Simulate {
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        fluid: FluidArgs,
        #[command(flatten)]
        forcing: ForcingArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Application offset r as "X,Y,Z".
        #[arg(long, value_name = "X,Y,Z")]
        r: Option<String>,
        /// Suppress rotation (constraint torque) and integrate only gamma.
        #[arg(long)]
        translation_only: bool,
        /// Report the periods needed to cover this distance.
        #[arg(long, value_name = "D")]
        distance: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Verify the leading-order formula across decreasing amplitudes.
    Sweep {
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        fluid: FluidArgs,
        #[command(flatten)]
        forcing: ForcingArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Application offset r as "X,Y,Z".
        #[arg(long, value_name = "X,Y,Z")]
        r: Option<String>,
        /// Comma-separated amplitudes, strictly decreasing.
        #[arg(long, value_name = "D1,D2,...")]
        deltas: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Walk the sphere example end to end: the homogeneous verdict, the
    /// off-center tensors with their flagged variant values, and the
    /// non-propelling application point.
    SphereDemo {
        /// Sphere radius.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Center-of-mass offset d along +x, 0 < d < radius.
        #[arg(long, default_value_t = 0.5)]
        center_offset: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Default)]
#[group(multiple = false)]
struct ShapeArgs {
    /// Sphere with the given radius.
    #[arg(long, value_name = "RADIUS")]
    sphere: Option<f64>,
    /// Ellipsoid semi-axes as "A,B,C".
    #[arg(long, value_name = "A,B,C")]
    ellipsoid: Option<String>,
    /// Sphere with off-center mass as "RADIUS,OFFSET".
    #[arg(long, value_name = "RADIUS,OFFSET")]
    offcenter_sphere: Option<String>,
    /// Closed triangulated surface from an STL file.
    #[arg(long, value_name = "PATH")]
    stl: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct FluidArgs {
    /// Icosphere subdivision level; repeat for a convergence study.
    #[arg(long = "sub", value_name = "LEVEL")]
    sub: Vec<u32>,
    #[arg(long, value_name = "NU")]
    viscosity: Option<f64>,
    #[arg(long, value_name = "RHO")]
    density: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct ForcingArgs {
    /// Force amplitude delta.
    #[arg(long, value_name = "DELTA")]
    delta: Option<f64>,
    #[arg(long, value_name = "T")]
    period: Option<f64>,
    /// Mean coefficient c0 of the scaled waveform.
    #[arg(long, value_name = "C0")]
    mean: Option<f64>,
    /// Harmonic "A,B" for k = 1, 2, ... in the order given; replaces the
    /// configured list.
    #[arg(long = "harmonic", value_name = "A,B")]
    harmonics: Vec<String>,
    /// Force direction as "X,Y,Z" (normalized at load).
    #[arg(long, value_name = "X,Y,Z")]
    b_hat: Option<String>,
}

#[derive(Args, Debug, Default)]
struct SimArgs {
    /// RK4 steps per period.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
    #[arg(long, value_name = "TOL")]
    orbit_tol: Option<f64>,
    #[arg(long, value_name = "N")]
    max_periods: Option<usize>,
    /// Accept the secular-drift defect floor instead of strict periodicity.
    #[arg(long)]
    allow_drift_floor: bool,
}

#[derive(Args, Debug, Default)]
struct OutArgs {
    /// Write the JSON document here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == n => Ok(v),
        Ok(v) => Err(CliError::Config(format!(
            "{what} expects {n} comma-separated numbers, got {}",
            v.len()
        ))),
        Err(e) => Err(CliError::Config(format!("{what}: {e}"))),
    }
}

fn apply_shape(config: &mut RunConfig, shape: &ShapeArgs) -> Result<(), CliError> {
    if let Some(radius) = shape.sphere {
        config.body.shape = ShapeConfig::Sphere { radius };
    } else if let Some(axes) = &shape.ellipsoid {
        let v = parse_floats(axes, 3, "--ellipsoid")?;
        config.body.shape = ShapeConfig::Ellipsoid {
            semi_axes: [v[0], v[1], v[2]],
        };
    } else if let Some(spec) = &shape.offcenter_sphere {
        let v = parse_floats(spec, 2, "--offcenter-sphere")?;
        config.body.shape = ShapeConfig::OffcenterSphere {
            radius: v[0],
            center_offset: v[1],
        };
    } else if let Some(path) = &shape.stl {
        config.body.shape = ShapeConfig::Stl { path: path.clone() };
    }
    Ok(())
}

fn apply_fluid(config: &mut RunConfig, fluid: &FluidArgs) -> Result<(), CliError> {
    if let Some(&last) = fluid.sub.last() {
        config.body.subdivisions = last;
    }
    if let Some(nu) = fluid.viscosity {
        config.fluid.viscosity = nu;
    }
    if let Some(rho) = fluid.density {
        config.fluid.density = rho;
    }
    Ok(())
}

fn apply_forcing(config: &mut RunConfig, forcing: &ForcingArgs) -> Result<(), CliError> {
    if let Some(delta) = forcing.delta {
        config.forcing.delta = delta;
    }
    if let Some(period) = forcing.period {
        config.forcing.period = period;
    }
    if let Some(mean) = forcing.mean {
        config.forcing.mean = mean;
    }
    if !forcing.harmonics.is_empty() {
        let mut list = Vec::with_capacity(forcing.harmonics.len());
        for h in &forcing.harmonics {
            let v = parse_floats(h, 2, "--harmonic")?;
            list.push([v[0], v[1]]);
        }
        config.forcing.harmonics = list;
    }
    if let Some(b) = &forcing.b_hat {
        let v = parse_floats(b, 3, "--b-hat")?;
        config.forcing.b_hat = [v[0], v[1], v[2]];
    }
    Ok(())
}

fn apply_sim(config: &mut RunConfig, sim: &SimArgs) {
    if let Some(steps) = sim.steps {
        config.solver.steps_per_period = steps;
    }
    if let Some(tol) = sim.orbit_tol {
        config.solver.orbit_tol = tol;
    }
    if let Some(n) = sim.max_periods {
        config.solver.max_periods = n;
    }
    if sim.allow_drift_floor {
        config.solver.allow_drift_floor = true;
    }
}

fn apply_offset(config: &mut RunConfig, r: &Option<String>) -> Result<(), CliError> {
    if let Some(r) = r {
        let v = parse_floats(r, 3, "--r")?;
        config.inertia.offset = [v[0], v[1], v[2]];
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Resistance {
            shape,
            fluid,
            blob_coeff,
            out,
        } => {
            apply_shape(&mut config, shape)?;
            apply_fluid(&mut config, fluid)?;
            if let Some(c) = blob_coeff {
                config.solver.blob_coeff = *c;
            }
            config.solver.tensor_source = TensorSource::Bem;
            config.validate()?;
            let levels = if fluid.sub.len() > 1 {
                Some(fluid.sub.clone())
            } else {
                None
            };
            commands::resistance(&config, levels.as_deref(), out.out.as_deref(), out.csv.as_deref())
        }
        Command::Check {
            shape,
            fluid,
            forcing,
            r,
            tol,
            source,
            out,
        } => {
            apply_shape(&mut config, shape)?;
            apply_fluid(&mut config, fluid)?;
            apply_forcing(&mut config, forcing)?;
            apply_offset(&mut config, r)?;
            if let Some(tol) = tol {
                config.solver.propulsion_tol = Some(*tol);
            }
            if let Some(source) = source {
                config.solver.tensor_source = match source.as_str() {
                    "auto" => TensorSource::Auto,
                    "analytic" => TensorSource::Analytic,
                    "bem" => TensorSource::Bem,
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown tensor source {other:?} (auto|analytic|bem)"
                        )))
                    }
                };
            }
            config.validate()?;
            commands::check(&config, out.out.as_deref())
        }
        Command::Simulate {
            shape,
            fluid,
            forcing,
            sim,
            r,
            translation_only,
            distance,
            out,
        } => {
            apply_shape(&mut config, shape)?;
            apply_fluid(&mut config, fluid)?;
            apply_forcing(&mut config, forcing)?;
            apply_sim(&mut config, sim);
            apply_offset(&mut config, r)?;
            if *translation_only {
                config.solver.translation_only = true;
            }
            if distance.is_some() {
                config.solver.distance = *distance;
            }
            config.validate()?;
            commands::simulate(&config, out.out.as_deref(), out.csv.as_deref())
        }
        Command::Sweep {
            shape,
            fluid,
            forcing,
            sim,
            r,
            deltas,
            out,
        } => {
            apply_shape(&mut config, shape)?;
            apply_fluid(&mut config, fluid)?;
            apply_forcing(&mut config, forcing)?;
            apply_sim(&mut config, sim);
            apply_offset(&mut config, r)?;
            if let Some(list) = deltas {
                let parsed: Result<Vec<f64>, _> =
                    list.split(',').map(|t| t.trim().parse::<f64>()).collect();
                config.solver.deltas =
                    parsed.map_err(|e| CliError::Config(format!("--deltas: {e}")))?;
            }
            config.validate()?;
            commands::sweep(&config, out.out.as_deref(), out.csv.as_deref())
        }
        Command::SphereDemo {
            radius,
            center_offset,
            out,
        } => {
            if !(*radius > 0.0) || !(*center_offset > 0.0) || center_offset >= radius {
                return Err(CliError::Config(
                    "sphere-demo needs 0 < center_offset < radius".into(),
                ));
            }
            commands::sphere_demo(*radius, *center_offset, out.out.as_deref())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
