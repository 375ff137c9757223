//! Single-layer collocation for exterior Stokes flow around a rigid body and
//! the resistance tensors derived from the boundary tractions.
//!
//! Six boundary-value problems are solved on the body surface, one per rigid
//! mode: unit translation along each axis and unit rotation about each axis
//! through the torque reference point. The traction densities are the
//! strengths of regularized Stokeslets collocated at the panel centroids, and
//! the force/torque resultants of those densities assemble the tensors
//! `K` (force per velocity), `C` (force per angular velocity), `S` (torque
//! per velocity) and `Theta` (torque per angular velocity), with `S = C^T`
//! and `K`, `Theta` symmetric positive definite up to discretization error.

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::scalar::{from_f64, DenseLu, Real};
use nalgebra::{DMatrix, Matrix3, Matrix6, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Solver knobs for the collocation problem.
#[derive(Debug, Clone, Copy)]
pub struct BemConfig<T> {
    /// Regularization length per panel is `blob_coeff * sqrt(panel area)`.
    /// The default was calibrated once on the subdivision-3 sphere to
    /// minimize the drag error, then frozen.
    pub blob_coeff: T,
    /// Hard cap on panel count for the dense solve.
    pub max_panels: usize,
    /// 1-norm condition estimate above which a warning is logged.
    pub cond_warn: T,
    /// Maximum acceptable relative residual of the collocation solve.
    pub solve_tol: T,
    /// Relative symmetry defect allowed in K and Theta.
    pub sym_tol: T,
}

/// Frozen from the calibration sweep in `examples/calibrate_blob.rs`:
/// on the sphere this gives monotone convergence with drag errors of
/// -2.0% / -0.70% / -0.27% at subdivisions 2 / 3 / 4.
pub const DEFAULT_BLOB_COEFF: f64 = 0.35;

impl<T: Real> Default for BemConfig<T> {
    fn default() -> Self {
        Self {
            blob_coeff: from_f64(DEFAULT_BLOB_COEFF),
            max_panels: 20_000,
            cond_warn: from_f64(1e8),
            solve_tol: from_f64(1e-7),
            sym_tol: from_f64(1e-6),
        }
    }
}

/// Traction densities of the six rigid modes on one mesh.
///
/// Modes 0..3 are unit translations along the axes, modes 3..6 unit rotations
/// about the axes through `reference_point`.
#[derive(Debug, Clone)]
pub struct BemSolution<'a, T: Real> {
    pub mesh: &'a TriMesh<T>,
    pub viscosity: T,
    pub reference_point: Vector3<T>,
    /// Per-panel regularization lengths.
    pub eps: Vec<T>,
    /// Per-panel traction density (force per area, density-normalized) for
    /// each of the six modes.
    pub tractions: Vec<[Vector3<T>; 6]>,
    /// 1-norm condition estimate of the collocation matrix.
    pub cond_estimate: T,
    /// Worst relative residual of the six solves.
    pub max_residual: T,
}

/// The resistance tensors of one rigid body about one reference point.
///
/// Conventions: tensors carry the viscosity factor explicitly; force on the
/// fluid from rigid motion `(v, w)` is `K v + C w`, torque about the
/// reference point is `S v + Theta w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceSet<T: Real> {
    pub k: Matrix3<T>,
    pub c: Matrix3<T>,
    pub s: Matrix3<T>,
    pub theta: Matrix3<T>,
    pub reference_point: Vector3<T>,
    pub viscosity: T,
}

/// Blob-regularized Oseen tensor: smooth for every separation, and within
/// `O(eps^2 / r^2)` of the singular kernel `I/r + d d^T / r^3` in the far
/// field.
pub fn oseen_blob_kernel<T: Real>(d: &Vector3<T>, eps2: T) -> Matrix3<T> {
    let r2 = d.norm_squared();
    let denom = (r2 + eps2) * (r2 + eps2).sqrt();
    let two = from_f64::<T>(2.0);
    Matrix3::identity() * ((r2 + two * eps2) / denom) + d * d.transpose() / denom
}

/// Dense 3N x 3N influence matrix mapping panel traction densities to
/// velocities at the panel centroids.
///
/// Block `(p, q)` is `G_eps(x_p - x_q) * area_q / (8 pi nu)`; the pairwise
/// regularization `eps_pq^2 = (eps_p^2 + eps_q^2) / 2` keeps the matrix
/// block-symmetric up to the area weights, which makes the resistance
/// tensors inherit their symmetry from the continuous problem.
pub fn assemble<T: Real>(mesh: &TriMesh<T>, viscosity: T, config: &BemConfig<T>) -> DMatrix<T> {
    let n = mesh.panel_count();
    let eps2 = panel_eps(mesh, config)
        .into_iter()
        .map(|e| e * e)
        .collect::<Vec<_>>();
    let centroids = mesh.centroids();
    let areas = mesh.areas();
    let scale = T::one() / (from_f64::<T>(8.0) * T::pi() * viscosity);
    let half = from_f64::<T>(0.5);

    let mut matrix = DMatrix::<T>::zeros(3 * n, 3 * n);
    let rows = 3 * n;
    matrix
        .as_mut_slice()
        .par_chunks_mut(rows * 3)
        .enumerate()
        .for_each(|(q, cols)| {
            let w = areas[q] * scale;
            for p in 0..n {
                let d = centroids[p] - centroids[q];
                let g = oseen_blob_kernel(&d, (eps2[p] + eps2[q]) * half);
                for jj in 0..3 {
                    for ii in 0..3 {
                        cols[jj * rows + 3 * p + ii] = g[(ii, jj)] * w;
                    }
                }
            }
        });
    matrix
}

fn panel_eps<T: Real>(mesh: &TriMesh<T>, config: &BemConfig<T>) -> Vec<T> {
    mesh.areas()
        .iter()
        .map(|&a| config.blob_coeff * a.sqrt())
        .collect()
}

/// Solve the six rigid-mode problems with torques referred to the volume
/// centroid of the mesh.
pub fn solve_rigid_modes<'a, T: Real>(
    mesh: &'a TriMesh<T>,
    viscosity: T,
    config: &BemConfig<T>,
) -> Result<BemSolution<'a, T>> {
    solve_rigid_modes_about(mesh, viscosity, mesh.volume_centroid(), config)
}

/// Solve the six rigid-mode problems with torques and rotations referred to
/// an arbitrary reference point.
pub fn solve_rigid_modes_about<'a, T: Real>(
    mesh: &'a TriMesh<T>,
    viscosity: T,
    reference_point: Vector3<T>,
    config: &BemConfig<T>,
) -> Result<BemSolution<'a, T>> {
    let n = mesh.panel_count();
    if n > config.max_panels {
        return Err(Error::TooManyPanels {
            panels: n,
            cap: config.max_panels,
        });
    }
    if !(viscosity > T::zero()) {
        return Err(Error::InvalidParameter("viscosity must be positive".into()));
    }

    let matrix = assemble(mesh, viscosity, config);
    let mut rhs = DMatrix::<T>::zeros(3 * n, 6);
    for (p, x) in mesh.centroids().iter().enumerate() {
        let arm = x - reference_point;
        for i in 0..3 {
            rhs[(3 * p + i, i)] = T::one();
            let rot = Vector3::ith(i, T::one()).cross(&arm);
            for k in 0..3 {
                rhs[(3 * p + k, 3 + i)] = rot[k];
            }
        }
    }

    let lu = T::Lu::factor(&matrix);
    let cond = cond_estimate_1norm(&matrix, &lu);
    if !(cond < config.cond_warn) {
        log::warn!(
            "collocation matrix poorly conditioned: 1-norm estimate {:e} (panels: {n})",
            cond.to_f64().unwrap_or(f64::NAN)
        );
    }

    let mut solution = rhs.clone();
    lu.solve_in_place(&mut solution);

    // Residual of the linear system, relative to the unit boundary data.
    let residual = {
        let r = &matrix * &solution - &rhs;
        let mut worst = T::zero();
        for j in 0..6 {
            let col_res = r.column(j).amax();
            let col_scale = rhs.column(j).amax().max(T::one());
            worst = worst.max(col_res / col_scale);
        }
        worst
    };
    if !(residual <= config.solve_tol) {
        return Err(Error::SolveFailed {
            residual: residual.to_f64().unwrap_or(f64::NAN),
            tol: config.solve_tol.to_f64().unwrap_or(f64::NAN),
            cond: cond.to_f64().unwrap_or(f64::NAN),
        });
    }

    let tractions = (0..n)
        .map(|p| {
            let mut modes = [Vector3::zeros(); 6];
            for (m, mode) in modes.iter_mut().enumerate() {
                *mode = Vector3::new(
                    solution[(3 * p, m)],
                    solution[(3 * p + 1, m)],
                    solution[(3 * p + 2, m)],
                );
            }
            modes
        })
        .collect();

    Ok(BemSolution {
        mesh,
        viscosity,
        reference_point,
        eps: panel_eps(mesh, config),
        tractions,
        cond_estimate: cond,
        max_residual: residual,
    })
}

/// Hager-style 1-norm condition estimate from an existing factorization.
fn cond_estimate_1norm<T: Real>(a: &DMatrix<T>, lu: &T::Lu) -> T {
    let n = a.nrows();
    let norm_a = (0..n)
        .map(|j| a.column(j).iter().fold(T::zero(), |s, &x| s + x.abs()))
        .fold(T::zero(), |m, x| m.max(x));

    let mut x = DMatrix::<T>::from_element(n, 1, T::one() / from_f64(n as f64));
    let mut est = T::zero();
    for _ in 0..5 {
        let mut y = x.clone();
        lu.solve_in_place(&mut y);
        est = y.iter().fold(T::zero(), |s, &v| s + v.abs());
        let mut xi = y;
        for v in xi.iter_mut() {
            *v = if *v >= T::zero() { T::one() } else { -T::one() };
        }
        lu.solve_transpose_in_place(&mut xi);
        let (mut jmax, mut zmax) = (0usize, T::zero());
        for (j, &z) in xi.iter().enumerate() {
            if z.abs() > zmax {
                zmax = z.abs();
                jmax = j;
            }
        }
        if zmax <= xi.dot(&x) {
            break;
        }
        x.fill(T::zero());
        x[(jmax, 0)] = T::one();
    }
    norm_a * est
}

/// Evaluate the force and torque resultants of the six traction fields.
pub fn resistance_tensors<T: Real>(sol: &BemSolution<'_, T>) -> Result<ResistanceSet<T>> {
    let mut k = Matrix3::zeros();
    let mut c = Matrix3::zeros();
    let mut s = Matrix3::zeros();
    let mut theta = Matrix3::zeros();
    for (p, modes) in sol.tractions.iter().enumerate() {
        let area = sol.mesh.areas()[p];
        let arm = sol.mesh.centroids()[p] - sol.reference_point;
        for i in 0..3 {
            let ft = modes[i] * area;
            let fr = modes[3 + i] * area;
            let mt = arm.cross(&ft);
            let mr = arm.cross(&fr);
            for row in 0..3 {
                k[(row, i)] += ft[row];
                s[(row, i)] += mt[row];
                c[(row, i)] += fr[row];
                theta[(row, i)] += mr[row];
            }
        }
    }

    let set = ResistanceSet {
        k,
        c,
        s,
        theta,
        reference_point: sol.reference_point,
        viscosity: sol.viscosity,
    };
    let a_char = bounding_radius_about(sol.mesh, &sol.reference_point);
    let defaults = BemConfig::<T>::default();
    set.validate(a_char, from_f64(1e-2), defaults.sym_tol)?;
    Ok(set)
}

fn bounding_radius_about<T: Real>(mesh: &TriMesh<T>, point: &Vector3<T>) -> T {
    mesh.vertices()
        .iter()
        .fold(T::zero(), |m, v| m.max((v - point).norm()))
}

impl<T: Real> ResistanceSet<T> {
    /// Structural checks: K and Theta symmetric positive definite within
    /// tolerance, S within the reciprocity defect of C^T, Schur complements
    /// invertible.
    fn validate(&self, a_char: T, recip_tol: T, sym_tol: T) -> Result<()> {
        let sym_defect = |m: &Matrix3<T>| (m - m.transpose()).norm() / m.norm();
        let k_defect = sym_defect(&self.k);
        if !(k_defect <= sym_tol) {
            return Err(Error::TensorInvariant {
                invariant: "K symmetry",
                defect: k_defect.to_f64().unwrap_or(f64::NAN),
                tol: sym_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        let t_defect = sym_defect(&self.theta);
        if !(t_defect <= sym_tol) {
            return Err(Error::TensorInvariant {
                invariant: "Theta symmetry",
                defect: t_defect.to_f64().unwrap_or(f64::NAN),
                tol: sym_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        let recip_scale = (self.k.norm() * a_char).max(self.theta.norm() / a_char);
        let recip_defect = (self.s - self.c.transpose()).norm();
        if !(recip_defect <= recip_tol * recip_scale) {
            return Err(Error::TensorInvariant {
                invariant: "S = C^T reciprocity",
                defect: recip_defect.to_f64().unwrap_or(f64::NAN),
                tol: (recip_tol * recip_scale).to_f64().unwrap_or(f64::NAN),
            });
        }
        for (name, m) in [("K", &self.k), ("Theta", &self.theta)] {
            let eig = ((m + m.transpose()) * from_f64::<T>(0.5)).symmetric_eigenvalues();
            let min = eig.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
            if !(min > T::zero()) {
                return Err(Error::TensorInvariant {
                    invariant: if name == "K" {
                        "K positive definite"
                    } else {
                        "Theta positive definite"
                    },
                    defect: min.to_f64().unwrap_or(f64::NAN),
                    tol: 0.0,
                });
            }
        }
        if self.schur_translation().is_none() || self.schur_rotation().is_none() {
            return Err(Error::TensorInvariant {
                invariant: "Schur complements invertible",
                defect: f64::NAN,
                tol: 0.0,
            });
        }
        Ok(())
    }

    /// `K - C Theta^-1 C^T`, the force-side Schur complement.
    pub fn schur_translation(&self) -> Option<Matrix3<T>> {
        let theta_inv = self.theta.try_inverse()?;
        let m = self.k - self.c * theta_inv * self.c.transpose();
        m.try_inverse().map(|_| m)
    }

    /// `Theta - C^T K^-1 C`, the torque-side Schur complement.
    pub fn schur_rotation(&self) -> Option<Matrix3<T>> {
        let k_inv = self.k.try_inverse()?;
        let m = self.theta - self.c.transpose() * k_inv * self.c;
        m.try_inverse().map(|_| m)
    }

    /// The 6x6 grand resistance matrix `[[K, C], [S, Theta]]` as measured.
    pub fn grand_matrix(&self) -> Matrix6<T> {
        let mut g = Matrix6::zeros();
        g.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.k);
        g.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.c);
        g.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.s);
        g.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.theta);
        g
    }

    /// The reciprocal form `[[K, C], [C^T, Theta]]` used by the force/torque
    /// balance algebra.
    pub fn balance_matrix(&self) -> Matrix6<T> {
        let mut g = self.grand_matrix();
        let ct = self.c.transpose();
        g.fixed_view_mut::<3, 3>(3, 0).copy_from(&ct);
        g
    }

    /// Scale of the tensors used to normalize defect measurements.
    pub fn norm_scale(&self) -> T {
        self.k.norm().max(self.theta.norm()).max(T::one())
    }
}

/// Antisymmetric matrix `[v]x` with `[v]x w = v x w`.
pub fn cross_matrix<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    )
}

/// Re-express the tensors about a new reference point of the same body.
///
/// With `c = old_reference - new_reference` and `X = [c]x`:
/// `K' = K`, `C' = C - K X`, `S' = S + X K`,
/// `Theta' = Theta + X C - S X - X K X`.
/// Derived from transporting torques (`T' = T + c x F`) and evaluating the
/// rigid velocity field at the old reference point.
pub fn transport_tensors<T: Real>(
    set: &ResistanceSet<T>,
    new_reference: Vector3<T>,
) -> ResistanceSet<T> {
    let c_vec = set.reference_point - new_reference;
    let x = cross_matrix(&c_vec);
    let k = set.k;
    let c = set.c - set.k * x;
    let s = set.s + x * set.k;
    let theta = set.theta + x * set.c - set.s * x - x * set.k * x;
    ResistanceSet {
        k,
        c,
        s,
        theta,
        reference_point: new_reference,
        viscosity: set.viscosity,
    }
}

/// One refinement level of the sphere drag/torque study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub panels: usize,
    pub k11: f64,
    pub theta11: f64,
    pub k_rel_err: f64,
    pub theta_rel_err: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
    /// Observed order from the last pair of drag errors.
    pub empirical_order: Option<f64>,
    /// Richardson extrapolation of K11 from the last three levels.
    pub richardson_k11: Option<f64>,
    pub richardson_rel_err: Option<f64>,
}

/// Refine the sphere and compare against the analytic drag `6 pi nu a` and
/// torque `8 pi nu a^3` coefficients; certifies the tolerances used by the
/// rest of the toolkit.
pub fn sphere_convergence_study<T: Real>(
    radius: T,
    viscosity: T,
    levels: &[u32],
    config: &BemConfig<T>,
) -> Result<ConvergenceStudy> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence study needs at least one level".into(),
        ));
    }
    let a = radius.to_f64().unwrap();
    let nu = viscosity.to_f64().unwrap();
    let k_exact = 6.0 * std::f64::consts::PI * nu * a;
    let theta_exact = 8.0 * std::f64::consts::PI * nu * a.powi(3);

    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = crate::mesh::icosphere(radius, level);
        let sol = solve_rigid_modes(&mesh, viscosity, config)?;
        let set = resistance_tensors(&sol)?;
        let k11 = set.k[(0, 0)].to_f64().unwrap();
        let theta11 = set.theta[(0, 0)].to_f64().unwrap();
        rows.push(ConvergenceRow {
            level,
            panels: mesh.panel_count(),
            k11,
            theta11,
            k_rel_err: (k11 - k_exact).abs() / k_exact,
            theta_rel_err: (theta11 - theta_exact).abs() / theta_exact,
        });
    }

    let monotone = rows.windows(2).all(|w| w[1].k_rel_err < w[0].k_rel_err)
        && rows.windows(2).all(|w| w[1].theta_rel_err < w[0].theta_rel_err);
    if !monotone {
        log::warn!(
            "sphere convergence study is not monotone; consider retuning blob_coeff"
        );
    }

    let empirical_order = rows.last().and_then(|_| {
        rows.windows(2).last().map(|w| {
            let ratio = w[0].k_rel_err / w[1].k_rel_err;
            ratio.log2()
        })
    });

    let (richardson_k11, richardson_rel_err) = if rows.len() >= 3 {
        let w = &rows[rows.len() - 3..];
        let d1 = w[1].k11 - w[0].k11;
        let d2 = w[2].k11 - w[1].k11;
        if d1 != 0.0 && d2 != 0.0 && (d1 / d2) > 1.0 {
            let p = (d1 / d2).log2();
            let k_rich = w[2].k11 + d2 / (2f64.powf(p) - 1.0);
            (Some(k_rich), Some((k_rich - k_exact).abs() / k_exact))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };

    Ok(ConvergenceStudy {
        rows,
        monotone,
        empirical_order,
        richardson_k11,
        richardson_rel_err,
    })
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        crate::output::csv_document(
            &["level", "panels", "k11", "theta11", "k_rel_err", "theta_rel_err"],
            self.rows.iter().map(|r| {
                vec![
                    r.level.to_string(),
                    r.panels.to_string(),
                    r.k11.to_string(),
                    r.theta11.to_string(),
                    r.k_rel_err.to_string(),
                    r.theta_rel_err.to_string(),
                ]
            }),
        )
    }
}

/// Serialized form of a [`ResistanceSet`] (row-major tensor entries).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResistanceDoc {
    pub k: [f64; 9],
    pub c: [f64; 9],
    pub s: [f64; 9],
    pub theta: [f64; 9],
    pub reference_point: [f64; 3],
    pub viscosity: f64,
    pub mesh_hash: String,
    pub panel_count: usize,
}

impl<T: Real> ResistanceSet<T> {
    pub fn to_doc(&self, mesh_hash: String, panel_count: usize) -> ResistanceDoc {
        let flat = |m: &Matrix3<T>| {
            let mut out = [0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    out[3 * i + j] = m[(i, j)].to_f64().unwrap();
                }
            }
            out
        };
        ResistanceDoc {
            k: flat(&self.k),
            c: flat(&self.c),
            s: flat(&self.s),
            theta: flat(&self.theta),
            reference_point: [
                self.reference_point.x.to_f64().unwrap(),
                self.reference_point.y.to_f64().unwrap(),
                self.reference_point.z.to_f64().unwrap(),
            ],
            viscosity: self.viscosity.to_f64().unwrap(),
            mesh_hash,
            panel_count,
        }
    }
}

impl ResistanceDoc {
    pub fn to_set<T: Real>(&self) -> ResistanceSet<T> {
        let unflat = |m: &[f64; 9]| {
            Matrix3::from_fn(|i, j| from_f64::<T>(m[3 * i + j]))
        };
        ResistanceSet {
            k: unflat(&self.k),
            c: unflat(&self.c),
            s: unflat(&self.s),
            theta: unflat(&self.theta),
            reference_point: Vector3::new(
                from_f64(self.reference_point[0]),
                from_f64(self.reference_point[1]),
                from_f64(self.reference_point[2]),
            ),
            viscosity: from_f64(self.viscosity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{ellipsoid, icosphere};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn kernel_is_finite_at_zero_separation() {
        let eps2 = 0.01f64;
        let g = oseen_blob_kernel(&Vector3::zeros(), eps2);
        // 2 eps^2 / eps^3 = 2 / eps on the diagonal
        assert_relative_eq!(g[(0, 0)], 2.0 / eps2.sqrt(), max_relative = 1e-14);
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn kernel_matches_oseen_far_field() {
        let d = Vector3::new(3.0f64, -1.0, 2.0);
        let r = d.norm();
        let eps2 = 1e-6;
        let exact = Matrix3::identity() / r + d * d.transpose() / r.powi(3);
        let blob = oseen_blob_kernel(&d, eps2);
        assert!((blob - exact).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn doubling_viscosity_halves_matrix_entries() {
        let mesh = icosphere::<f64>(1.0, 0);
        let config = BemConfig::default();
        let a1 = assemble(&mesh, 1.0, &config);
        let a2 = assemble(&mesh, 2.0, &config);
        assert_eq!(a1.len(), a2.len());
        for (x, y) in a1.iter().zip(a2.iter()) {
            assert_eq!(*y, *x * 0.5);
        }
    }

    #[test]
    fn self_blocks_are_finite() {
        let mesh = icosphere::<f64>(1.0, 0);
        let a = assemble(&mesh, 1.0, &BemConfig::default());
        assert!(a.iter().all(|x| x.is_finite()));
        for p in 0..mesh.panel_count() {
            assert!(a[(3 * p, 3 * p)] > 0.0);
        }
    }

    #[test]
    fn negated_boundary_data_negates_density() {
        let mesh = icosphere::<f64>(1.0, 1);
        let a = assemble(&mesh, 1.0, &BemConfig::default());
        let lu = <f64 as Real>::Lu::factor(&a);
        let n = 3 * mesh.panel_count();
        let mut plus = DMatrix::<f64>::zeros(n, 1);
        for p in 0..mesh.panel_count() {
            plus[(3 * p, 0)] = 1.0;
        }
        let mut minus = -plus.clone();
        lu.solve_in_place(&mut plus);
        lu.solve_in_place(&mut minus);
        for (x, y) in plus.iter().zip(minus.iter()) {
            assert_eq!(*y, -*x);
        }
    }

    #[test]
    fn sphere_drag_and_torque_match_analytic() {
        // Frozen regression at subdivision 2: drag error is about -2.0%,
        // torque error about -3.8% (see examples/calibrate_blob.rs).
        let mesh = icosphere::<f64>(1.0, 2);
        let sol = solve_rigid_modes(&mesh, 1.0, &BemConfig::default()).unwrap();
        let set = resistance_tensors(&sol).unwrap();
        let k_exact = 6.0 * PI;
        let theta_exact = 8.0 * PI;
        for i in 0..3 {
            assert!((set.k[(i, i)] - k_exact).abs() / k_exact < 0.03);
            assert!((set.theta[(i, i)] - theta_exact).abs() / theta_exact < 0.05);
        }
        assert!(set.c.norm() <= 0.02 * set.k.norm());
        assert!(set.s.norm() <= 0.02 * set.k.norm());

        // Rotation modes carry no net force on a sphere.
        let mut rot_force = Vector3::<f64>::zeros();
        for (p, modes) in sol.tractions.iter().enumerate() {
            rot_force += modes[5] * sol.mesh.areas()[p];
        }
        assert!(rot_force.norm() <= 1e-3 * 6.0 * PI);
    }

    #[test]
    fn sphere_tensors_scale_with_radius() {
        let mesh = icosphere::<f64>(2.0, 2);
        let sol = solve_rigid_modes(&mesh, 1.0, &BemConfig::default()).unwrap();
        let set = resistance_tensors(&sol).unwrap();
        let k_exact = 12.0 * PI;
        let theta_exact = 64.0 * PI;
        assert!((set.k[(0, 0)] - k_exact).abs() / k_exact < 0.03);
        assert!((set.theta[(0, 0)] - theta_exact).abs() / theta_exact < 0.05);
    }

    #[test]
    fn tensors_are_linear_in_viscosity() {
        let mesh = icosphere::<f64>(1.0, 1);
        let config = BemConfig::default();
        let s1 = resistance_tensors(&solve_rigid_modes(&mesh, 1.0, &config).unwrap()).unwrap();
        let s2 = resistance_tensors(&solve_rigid_modes(&mesh, 2.0, &config).unwrap()).unwrap();
        assert!((s2.k - s1.k * 2.0).norm() <= 1e-12 * s2.k.norm());
        assert!((s2.theta - s1.theta * 2.0).norm() <= 1e-12 * s2.theta.norm());
    }

    #[test]
    fn reciprocity_and_symmetry_on_irregular_panels() {
        // The scaled icosphere has unequal panel areas, which exercises the
        // pairwise regularization that keeps the system symmetric.
        let mesh = ellipsoid::<f64>([1.6, 1.0, 0.7], 2);
        let sol = solve_rigid_modes(&mesh, 1.0, &BemConfig::default()).unwrap();
        let set = resistance_tensors(&sol).unwrap();
        let sym_k = (set.k - set.k.transpose()).norm() / set.k.norm();
        let sym_t = (set.theta - set.theta.transpose()).norm() / set.theta.norm();
        assert!(sym_k < 1e-6, "K symmetry defect {sym_k}");
        assert!(sym_t < 1e-6, "Theta symmetry defect {sym_t}");
        let a_char = mesh.bounding_radius();
        let recip = (set.s - set.c.transpose()).norm();
        assert!(recip <= 1e-2 * (set.k.norm() * a_char).max(set.theta.norm() / a_char));
    }

    #[test]
    fn grand_resistance_is_dissipative() {
        let mesh = icosphere::<f64>(1.0, 2);
        let set =
            resistance_tensors(&solve_rigid_modes(&mesh, 1.0, &BemConfig::default()).unwrap())
                .unwrap();
        let g = set.grand_matrix();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..100 {
            let v = nalgebra::Vector6::<f64>::from_fn(|_, _| next());
            if v.norm() == 0.0 {
                continue;
            }
            let q = v.dot(&(g * v));
            assert!(q > 0.0, "quadratic form {q} not positive");
        }
    }

    #[test]
    fn rotated_mesh_gives_rotated_tensors() {
        let mesh = ellipsoid::<f64>([1.5, 1.0, 0.8], 1);
        let axis = nalgebra::Unit::new_normalize(Vector3::new(0.3, -0.5, 0.81));
        let q = nalgebra::Rotation3::from_axis_angle(&axis, 1.1).into_inner();
        let rotated = mesh.map_vertices(|v| q * v).unwrap();

        let config = BemConfig::default();
        let set = resistance_tensors(&solve_rigid_modes(&mesh, 1.0, &config).unwrap()).unwrap();
        let set_rot =
            resistance_tensors(&solve_rigid_modes(&rotated, 1.0, &config).unwrap()).unwrap();
        for (got, want) in [
            (set_rot.k, q * set.k * q.transpose()),
            (set_rot.c, q * set.c * q.transpose()),
            (set_rot.theta, q * set.theta * q.transpose()),
        ] {
            assert!((got - want).norm() / want.norm().max(1.0) < 1e-3);
        }
    }

    #[test]
    fn transport_by_zero_is_identity() {
        let mesh = icosphere::<f64>(1.0, 1);
        let set =
            resistance_tensors(&solve_rigid_modes(&mesh, 1.0, &BemConfig::default()).unwrap())
                .unwrap();
        let moved = transport_tensors(&set, set.reference_point);
        assert_eq!(moved.k, set.k);
        assert_eq!(moved.c, set.c);
        assert_eq!(moved.s, set.s);
        assert_eq!(moved.theta, set.theta);
    }

    #[test]
    fn transport_of_analytic_sphere_matches_closed_form() {
        let (a, d) = (1.0f64, 0.5);
        let sphere = ResistanceSet {
            k: Matrix3::identity() * 6.0 * PI * a,
            c: Matrix3::zeros(),
            s: Matrix3::zeros(),
            theta: Matrix3::identity() * 8.0 * PI * a.powi(3),
            reference_point: Vector3::zeros(),
            viscosity: 1.0,
        };
        let moved = transport_tensors(&sphere, Vector3::new(d, 0.0, 0.0));
        let c_exact = cross_matrix(&Vector3::new(6.0 * PI * a * d, 0.0, 0.0));
        assert!((moved.c - c_exact).norm() < 1e-12);
        assert_relative_eq!(moved.c[(1, 2)], -3.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(moved.c[(2, 1)], 3.0 * PI, max_relative = 1e-14);
        let theta_exact = Matrix3::from_diagonal(&Vector3::new(
            2.0 * PI * a * 4.0 * a * a,
            2.0 * PI * a * (4.0 * a * a + 3.0 * d * d),
            2.0 * PI * a * (4.0 * a * a + 3.0 * d * d),
        ));
        assert!((moved.theta - theta_exact).norm() < 1e-12);
        assert!((moved.s - moved.c.transpose()).norm() < 1e-12);

        let back = transport_tensors(&moved, Vector3::zeros());
        assert!((back.k - sphere.k).norm() < 1e-12);
        assert!((back.c - sphere.c).norm() < 1e-12);
        assert!((back.theta - sphere.theta).norm() < 1e-12);
    }

    #[test]
    fn condition_estimate_is_exact_for_diagonal_systems() {
        let a = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![
            4.0, 2.0, 0.5, 1.0, 8.0,
        ]));
        let lu = <f64 as Real>::Lu::factor(&a);
        let cond = cond_estimate_1norm(&a, &lu);
        assert_relative_eq!(cond, 8.0 / 0.5, max_relative = 1e-12);
    }

    #[test]
    fn panel_cap_is_enforced() {
        let mesh = icosphere::<f64>(1.0, 2);
        let config = BemConfig {
            max_panels: 100,
            ..BemConfig::default()
        };
        let err = solve_rigid_modes(&mesh, 1.0, &config).unwrap_err();
        assert!(matches!(err, crate::Error::TooManyPanels { .. }));
    }

    #[test]
    fn resistance_doc_roundtrips() {
        let mesh = icosphere::<f64>(1.0, 1);
        let set =
            resistance_tensors(&solve_rigid_modes(&mesh, 1.0, &BemConfig::default()).unwrap())
                .unwrap();
        let doc = set.to_doc("abc123".into(), mesh.panel_count());
        let json = crate::output::to_sorted_json(&doc).unwrap();
        let parsed: ResistanceDoc = serde_json::from_str(&json).unwrap();
        let back: ResistanceSet<f64> = parsed.to_set();
        assert_eq!(back.k, set.k);
        assert_eq!(back.theta, set.theta);
    }
}
