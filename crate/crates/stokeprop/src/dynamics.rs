//! Body-frame rigid-body dynamics under a T-periodic force and the
//! quasi-steady Stokes closure.
//!
//! The exact hydrodynamic load (with fluid memory) is replaced by the steady
//! resistance response: force `K gamma + C omega`, torque about the center of
//! mass `C^T gamma + Theta omega`. This is the central modeling decision of
//! the simulator; it reproduces the leading-order averaged behavior that the
//! propulsion formulas describe, and the delta sweep checks exactly that.
//!
//! The governing equations, resolved in the body frame with `b` the force
//! direction seen from the body (`b(0)` equals the inertial direction):
//!
//! ```text
//! M (gamma' + omega x gamma) = delta F(t) b - K gamma - C omega
//! I omega' + omega x (I omega) = delta F(t) (r x b) - C^T gamma - Theta omega
//! b' = omega x b
//! ```
//!
//! The sign of `b'` follows the convention in which `(Q'^T Q) a = omega x a`
//! for the body-to-inertial rotation `Q`; it is isolated here and in no other
//! function.

use crate::bem::ResistanceSet;
use crate::error::{Error, Result};
use crate::propulsion::{steady_velocities, BodyInertia, Forcing};
use crate::scalar::{from_f64, Real};
use nalgebra::{Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};

/// Instantaneous body-frame state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState<T: Real> {
    /// Translational velocity of the center of mass, body frame.
    pub gamma: Vector3<T>,
    /// Angular velocity, body frame.
    pub omega: Vector3<T>,
    /// Force direction resolved in the body frame (unit).
    pub b: Vector3<T>,
    pub t: T,
}

impl<T: Real> BodyState<T> {
    pub fn rest(direction: Vector3<T>) -> Self {
        Self {
            gamma: Vector3::zeros(),
            omega: Vector3::zeros(),
            b: direction,
            t: T::zero(),
        }
    }

    fn to_vec(&self) -> SVector<T, 9> {
        let mut v = SVector::zeros();
        for i in 0..3 {
            v[i] = self.gamma[i];
            v[3 + i] = self.omega[i];
            v[6 + i] = self.b[i];
        }
        v
    }

    fn from_vec(v: &SVector<T, 9>, t: T) -> Self {
        Self {
            gamma: Vector3::new(v[0], v[1], v[2]),
            omega: Vector3::new(v[3], v[4], v[5]),
            b: Vector3::new(v[6], v[7], v[8]),
            t,
        }
    }
}

/// Time derivative of the body-frame state under the quasi-steady closure.
pub fn rhs<T: Real>(
    state: &BodyState<T>,
    t: T,
    body: &BodyInertia<T>,
    set: &ResistanceSet<T>,
    forcing: &Forcing<T>,
) -> BodyState<T> {
    let i_inv = body
        .inertia
        .try_inverse()
        .expect("inertia tensor is invertible by construction");
    derivative(state, t, body, &i_inv, set, forcing)
}

fn derivative<T: Real>(
    state: &BodyState<T>,
    t: T,
    body: &BodyInertia<T>,
    inertia_inv: &Matrix3<T>,
    set: &ResistanceSet<T>,
    forcing: &Forcing<T>,
) -> BodyState<T> {
    let f = forcing.force(t);
    let gamma_dot = -state.omega.cross(&state.gamma)
        + (state.b * f - set.k * state.gamma - set.c * state.omega) / body.mass;
    let omega_dot = inertia_inv
        * (-state.omega.cross(&(body.inertia * state.omega))
            + body.offset.cross(&state.b) * f
            - set.c.transpose() * state.gamma
            - set.theta * state.omega);
    let b_dot = state.omega.cross(&state.b);
    BodyState {
        gamma: gamma_dot,
        omega: omega_dot,
        b: b_dot,
        t: T::one(),
    }
}

/// Kinetic energy of the body, `(M |gamma|^2 + omega . I omega) / 2`.
pub fn kinetic_energy<T: Real>(state: &BodyState<T>, body: &BodyInertia<T>) -> T {
    (body.mass * state.gamma.norm_squared() + state.omega.dot(&(body.inertia * state.omega)))
        * from_f64(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Successive period boundaries agree to within the orbit tolerance.
    Periodic,
    /// The periodicity defect stalled at the secular reorientation floor:
    /// the mean angular velocity slowly rotates `b`, so the defect cannot
    /// drop below a level proportional to the force amplitude. The fast
    /// velocity transient is dead at this point and the period averages are
    /// converged to that same order.
    DriftFloor,
}

/// One period of the converged (or drift-floor-stalled) orbit.
#[derive(Debug, Clone)]
pub struct Orbit<T: Real> {
    /// `steps_per_period + 1` states covering t0 .. t0 + T inclusive.
    pub samples: Vec<BodyState<T>>,
    pub gamma_bar: Vector3<T>,
    pub omega_bar: Vector3<T>,
    /// Sup-norm distance between the states one period apart at acceptance.
    pub periodicity_defect: T,
    pub net_displacement_per_period: Vector3<T>,
    /// Accumulated |1 - |b|| per period before renormalization, worst period.
    pub b_drift_per_period: T,
    /// Periods integrated before the stop condition fired.
    pub periods: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions<T> {
    /// Fixed RK4 steps per period; the step is exactly `T / steps`.
    pub steps_per_period: usize,
    pub max_periods: usize,
    pub orbit_tol: T,
    /// Accept a stalled defect plateau as quasi-periodic instead of failing.
    /// Used by amplitude sweeps, where configurations with a mean angular
    /// velocity not aligned with `b` have no strictly periodic orbit through
    /// the given initial direction.
    pub allow_drift_floor: bool,
}

impl<T: Real> Default for IntegrateOptions<T> {
    fn default() -> Self {
        Self {
            steps_per_period: 1024,
            max_periods: 200,
            orbit_tol: from_f64(1e-10),
            allow_drift_floor: false,
        }
    }
}

/// Integrate from rest until the state is T-periodic: the sup-norm distance
/// between consecutive period boundaries falls below the orbit tolerance.
/// Returns the final period.
pub fn integrate_periodic<T: Real>(
    body: &BodyInertia<T>,
    set: &ResistanceSet<T>,
    forcing: &Forcing<T>,
    options: &IntegrateOptions<T>,
) -> Result<Orbit<T>> {
    integrate_periodic_from(body, set, forcing, options, BodyState::rest(forcing.direction))
}

/// As [`integrate_periodic`], from an arbitrary initial state.
pub fn integrate_periodic_from<T: Real>(
    body: &BodyInertia<T>,
    set: &ResistanceSet<T>,
    forcing: &Forcing<T>,
    options: &IntegrateOptions<T>,
    initial: BodyState<T>,
) -> Result<Orbit<T>> {
    let steps = options.steps_per_period;
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "steps_per_period must be positive".into(),
        ));
    }
    let inertia_inv = body
        .inertia
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("inertia tensor is singular".into()))?;
    let dt = forcing.period / from_f64(steps as f64);
    let mut state = initial;
    let mut history: Vec<T> = Vec::new();
    let mut samples: Vec<BodyState<T>> = Vec::with_capacity(steps + 1);

    for period in 1..=options.max_periods {
        let boundary = state;
        samples.clear();
        samples.push(state);
        let mut drift = T::zero();
        for step in 0..steps {
            // Fixed-step RK4; the period boundary is hit exactly.
            let t0 = boundary.t + dt * from_f64(step as f64);
            state = rk4_step(&state, t0, dt, body, &inertia_inv, set, forcing);
            drift += (state.b.norm() - T::one()).abs();
            state.b /= state.b.norm();
            state.t = t0 + dt;
            samples.push(state);
        }
        let defect = sup_distance(&state, &boundary);
        history.push(defect);

        let periodic = defect <= options.orbit_tol;
        let stalled = options.allow_drift_floor && has_stalled(&history);
        if periodic || stalled {
            return Ok(finish_orbit(
                samples,
                forcing.period,
                defect,
                drift,
                period,
                if periodic {
                    StopReason::Periodic
                } else {
                    StopReason::DriftFloor
                },
            ));
        }
    }

    Err(Error::NoPeriodicOrbit {
        periods: options.max_periods,
        defect: history.last().and_then(|d| d.to_f64()).unwrap_or(f64::NAN),
        history: history.iter().filter_map(|d| d.to_f64()).collect(),
    })
}

/// The defect decays geometrically (fast velocity transient) until it hits
/// the secular reorientation floor; two consecutive periods with less than
/// 10% decay mean the floor is reached.
fn has_stalled<T: Real>(history: &[T]) -> bool {
    let n = history.len();
    if n < 4 {
        return false;
    }
    let r = from_f64::<T>(0.9);
    history[n - 1] > history[n - 2] * r && history[n - 2] > history[n - 3] * r
}

fn rk4_step<T: Real>(
    state: &BodyState<T>,
    t: T,
    dt: T,
    body: &BodyInertia<T>,
    inertia_inv: &Matrix3<T>,
    set: &ResistanceSet<T>,
    forcing: &Forcing<T>,
) -> BodyState<T> {
    let half = from_f64::<T>(0.5);
    let sixth = from_f64::<T>(1.0 / 6.0);
    let two = from_f64::<T>(2.0);
    let y = state.to_vec();
    let eval = |v: &SVector<T, 9>, tau: T| {
        derivative(
            &BodyState::from_vec(v, tau),
            tau,
            body,
            inertia_inv,
            set,
            forcing,
        )
        .to_vec()
    };
    let k1 = eval(&y, t);
    let k2 = eval(&(y + k1 * (dt * half)), t + dt * half);
    let k3 = eval(&(y + k2 * (dt * half)), t + dt * half);
    let k4 = eval(&(y + k3 * dt), t + dt);
    let next = y + (k1 + k2 * two + k3 * two + k4) * (dt * sixth);
    BodyState::from_vec(&next, t + dt)
}

fn sup_distance<T: Real>(a: &BodyState<T>, b: &BodyState<T>) -> T {
    let va = a.to_vec();
    let vb = b.to_vec();
    (va - vb).amax()
}

fn finish_orbit<T: Real>(
    samples: Vec<BodyState<T>>,
    period: T,
    defect: T,
    drift: T,
    periods: usize,
    stop: StopReason,
) -> Orbit<T> {
    let (gamma_bar, omega_bar) = trapezoid_averages(&samples);
    Orbit {
        net_displacement_per_period: gamma_bar * period,
        samples,
        gamma_bar,
        omega_bar,
        periodicity_defect: defect,
        b_drift_per_period: drift,
        periods,
        stop,
    }
}

/// Trapezoid average over one period of uniformly spaced samples that
/// include both endpoints.
fn trapezoid_averages<T: Real>(samples: &[BodyState<T>]) -> (Vector3<T>, Vector3<T>) {
    let n = samples.len() - 1;
    let half = from_f64::<T>(0.5);
    let mut gamma = (samples[0].gamma + samples[n].gamma) * half;
    let mut omega = (samples[0].omega + samples[n].omega) * half;
    for s in &samples[1..n] {
        gamma += s.gamma;
        omega += s.omega;
    }
    let inv_n = T::one() / from_f64(n as f64);
    (gamma * inv_n, omega * inv_n)
}

/// Integrate the translation-only dynamics `M gamma' = delta F(t) b_hat - K
/// gamma` (rotation suppressed by a constraint torque), from rest, to the
/// periodic orbit. The system is linear, so the orbit is unique and the
/// average converges to `delta F_bar K^-1 b_hat` up to discretization.
pub fn integrate_translation_only<T: Real>(
    body: &BodyInertia<T>,
    k: &Matrix3<T>,
    forcing: &Forcing<T>,
    options: &IntegrateOptions<T>,
) -> Result<Orbit<T>> {
    integrate_translation_only_from(body, k, forcing, options, Vector3::zeros())
}

/// As [`integrate_translation_only`], from an arbitrary initial velocity.
pub fn integrate_translation_only_from<T: Real>(
    body: &BodyInertia<T>,
    k: &Matrix3<T>,
    forcing: &Forcing<T>,
    options: &IntegrateOptions<T>,
    initial_gamma: Vector3<T>,
) -> Result<Orbit<T>> {
    let steps = options.steps_per_period;
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "steps_per_period must be positive".into(),
        ));
    }
    let dt = forcing.period / from_f64(steps as f64);
    let half = from_f64::<T>(0.5);
    let sixth = from_f64::<T>(1.0 / 6.0);
    let two = from_f64::<T>(2.0);
    let deriv = |g: &Vector3<T>, t: T| {
        (forcing.direction * forcing.force(t) - k * g) / body.mass
    };

    let mut gamma = initial_gamma;
    let mut t = T::zero();
    let mut samples: Vec<BodyState<T>> = Vec::with_capacity(steps + 1);
    let mut history: Vec<T> = Vec::new();
    for period in 1..=options.max_periods {
        let boundary = gamma;
        samples.clear();
        samples.push(frozen_state(gamma, forcing.direction, t));
        for step in 0..steps {
            let t0 = t + dt * from_f64(step as f64);
            let k1 = deriv(&gamma, t0);
            let k2 = deriv(&(gamma + k1 * (dt * half)), t0 + dt * half);
            let k3 = deriv(&(gamma + k2 * (dt * half)), t0 + dt * half);
            let k4 = deriv(&(gamma + k3 * dt), t0 + dt);
            gamma += (k1 + k2 * two + k3 * two + k4) * (dt * sixth);
            samples.push(frozen_state(gamma, forcing.direction, t0 + dt));
        }
        t += forcing.period;
        let defect = (gamma - boundary).amax();
        history.push(defect);
        if defect <= options.orbit_tol {
            return Ok(finish_orbit(
                samples,
                forcing.period,
                defect,
                T::zero(),
                period,
                StopReason::Periodic,
            ));
        }
    }
    Err(Error::NoPeriodicOrbit {
        periods: options.max_periods,
        defect: history.last().and_then(|d| d.to_f64()).unwrap_or(f64::NAN),
        history: history.iter().filter_map(|d| d.to_f64()).collect(),
    })
}

fn frozen_state<T: Real>(gamma: Vector3<T>, b: Vector3<T>, t: T) -> BodyState<T> {
    BodyState {
        gamma,
        omega: Vector3::zeros(),
        b,
        t,
    }
}

/// One amplitude of the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow<T: Real> {
    pub delta: T,
    pub gamma_bar: Vector3<T>,
    /// `|gamma_bar / delta - leading|`: the scaled remainder.
    pub residual: T,
    pub periods: usize,
    pub periodicity_defect: T,
    pub stop: StopReason,
}

#[derive(Debug, Clone)]
pub struct SweepTable<T: Real> {
    /// Leading coefficient `F_bar (K - C Theta^-1 C^T)^-1 (b - C Theta^-1 (r x b))`.
    pub leading: Vector3<T>,
    pub rows: Vec<SweepRow<T>>,
    /// Residuals strictly decrease down the table.
    pub monotone: bool,
    /// Observed order between consecutive rows.
    pub orders: Vec<T>,
    /// Residual contraction normalized to one halving of delta.
    pub ratios_per_halving: Vec<T>,
}

/// Verify the leading-order formula by direct simulation: for each amplitude
/// in strictly decreasing order, integrate to the (quasi-)periodic orbit and
/// report `residual = |gamma_bar / delta - leading|`, which must vanish as
/// the amplitude does.
pub fn delta_sweep<T: Real>(
    body: &BodyInertia<T>,
    set: &ResistanceSet<T>,
    forcing_template: &Forcing<T>,
    deltas: &[T],
    options: &IntegrateOptions<T>,
) -> Result<SweepTable<T>> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("empty delta list".into()));
    }
    if !deltas.iter().all(|&d| d > T::zero()) || !deltas.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "deltas must be strictly decreasing and positive".into(),
        ));
    }

    let (leading, _) = steady_velocities(
        set,
        forcing_template.mean,
        &forcing_template.direction,
        &body.offset,
    )?;

    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let forcing = Forcing {
            amplitude: delta,
            ..forcing_template.clone()
        };
        let opts = IntegrateOptions {
            allow_drift_floor: true,
            ..*options
        };
        let orbit = integrate_periodic(body, set, &forcing, &opts)?;
        let residual = (orbit.gamma_bar / delta - leading).norm();
        rows.push(SweepRow {
            delta,
            gamma_bar: orbit.gamma_bar,
            residual,
            periods: orbit.periods,
            periodicity_defect: orbit.periodicity_defect,
            stop: orbit.stop,
        });
    }

    let monotone = rows.windows(2).all(|w| w[1].residual < w[0].residual);
    let mut orders = Vec::new();
    let mut ratios_per_halving = Vec::new();
    for w in rows.windows(2) {
        let dratio = (w[0].delta / w[1].delta).ln();
        if w[0].residual > T::zero() && w[1].residual > T::zero() && dratio > T::zero() {
            let order = (w[0].residual / w[1].residual).ln() / dratio;
            orders.push(order);
            let halvings = dratio / from_f64::<T>(2.0).ln();
            ratios_per_halving.push((w[1].residual / w[0].residual).powf(T::one() / halvings));
        }
    }

    Ok(SweepTable {
        leading,
        rows,
        monotone,
        orders,
        ratios_per_halving,
    })
}

/// Smallest number of periods needed to cover `distance`:
/// `N = ceil(distance / (T |gamma_bar|))`.
pub fn net_distance<T: Real>(orbit: &Orbit<T>, distance: T) -> Result<u64> {
    if !(distance >= T::zero()) {
        return Err(Error::InvalidParameter("distance must be non-negative".into()));
    }
    let period = orbit.samples.last().expect("orbit has samples").t - orbit.samples[0].t;
    let speed = orbit.gamma_bar.norm();
    if !(speed > T::zero()) {
        return Err(Error::NoPropulsion);
    }
    if distance == T::zero() {
        return Ok(0);
    }
    let n = (distance / (period * speed)).ceil();
    Ok(n.to_f64().unwrap() as u64)
}

/// Serialized summary of an [`Orbit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitDoc {
    pub gamma_bar: [f64; 3],
    pub omega_bar: [f64; 3],
    pub periodicity_defect: f64,
    pub net_displacement_per_period: [f64; 3],
    pub b_drift_per_period: f64,
    pub periods: usize,
    pub stop: StopReason,
}

impl<T: Real> Orbit<T> {
    pub fn to_doc(&self) -> OrbitDoc {
        let flat = |v: &Vector3<T>| {
            [
                v.x.to_f64().unwrap(),
                v.y.to_f64().unwrap(),
                v.z.to_f64().unwrap(),
            ]
        };
        OrbitDoc {
            gamma_bar: flat(&self.gamma_bar),
            omega_bar: flat(&self.omega_bar),
            periodicity_defect: self.periodicity_defect.to_f64().unwrap(),
            net_displacement_per_period: flat(&self.net_displacement_per_period),
            b_drift_per_period: self.b_drift_per_period.to_f64().unwrap(),
            periods: self.periods,
            stop: self.stop,
        }
    }

    /// Full trajectory as CSV: one row per sample.
    pub fn to_csv(&self) -> String {
        crate::output::csv_document(
            &[
                "t", "gamma_x", "gamma_y", "gamma_z", "omega_x", "omega_y", "omega_z", "b_x",
                "b_y", "b_z",
            ],
            self.samples.iter().map(|s| {
                let mut row = Vec::with_capacity(10);
                row.push(fmt(s.t));
                for v in [&s.gamma, &s.omega, &s.b] {
                    row.push(fmt(v.x));
                    row.push(fmt(v.y));
                    row.push(fmt(v.z));
                }
                row
            }),
        )
    }
}

fn fmt<T: Real>(x: T) -> String {
    // Shortest round-trip formatting via f64.
    format!("{}", x.to_f64().unwrap())
}

/// Serialized summary of a [`SweepTable`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub leading: [f64; 3],
    pub deltas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub monotone: bool,
    pub orders: Vec<f64>,
    pub ratios_per_halving: Vec<f64>,
}

impl<T: Real> SweepTable<T> {
    pub fn to_doc(&self) -> SweepDoc {
        SweepDoc {
            leading: [
                self.leading.x.to_f64().unwrap(),
                self.leading.y.to_f64().unwrap(),
                self.leading.z.to_f64().unwrap(),
            ],
            deltas: self.rows.iter().map(|r| r.delta.to_f64().unwrap()).collect(),
            residuals: self
                .rows
                .iter()
                .map(|r| r.residual.to_f64().unwrap())
                .collect(),
            monotone: self.monotone,
            orders: self.orders.iter().map(|o| o.to_f64().unwrap()).collect(),
            ratios_per_halving: self
                .ratios_per_halving
                .iter()
                .map(|r| r.to_f64().unwrap())
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        crate::output::csv_document(
            &[
                "delta",
                "gamma_bar_x",
                "gamma_bar_y",
                "gamma_bar_z",
                "residual",
                "periods",
                "periodicity_defect",
                "stop",
            ],
            self.rows.iter().map(|r| {
                vec![
                    fmt(r.delta),
                    fmt(r.gamma_bar.x),
                    fmt(r.gamma_bar.y),
                    fmt(r.gamma_bar.z),
                    fmt(r.residual),
                    r.periods.to_string(),
                    fmt(r.periodicity_defect),
                    format!("{:?}", r.stop),
                ]
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propulsion::{offcenter_sphere_tensors, sphere_tensors};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sphere_body(r: Vector3<f64>) -> BodyInertia<f64> {
        BodyInertia::new(
            4.0 / 3.0 * PI,
            Matrix3::identity() * (8.0 / 15.0 * PI),
            r,
        )
        .unwrap()
    }

    fn cos_forcing(delta: f64, direction: Vector3<f64>) -> Forcing<f64> {
        Forcing::new(1.0, delta, 1.0, vec![[1.0, 0.0]], direction).unwrap()
    }

    #[test]
    fn rest_state_derivative() {
        let body = sphere_body(Vector3::new(0.2, 0.0, 0.1));
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(0.05, Vector3::x());
        let state = BodyState::rest(Vector3::x());
        let d = rhs(&state, 0.0, &body, &set, &forcing);
        // delta F(0) = 0.05 * 2
        let f0 = 0.1;
        assert!((d.gamma - Vector3::x() * (f0 / body.mass)).norm() < 1e-15);
        let i_inv = body.inertia.try_inverse().unwrap();
        let torque = body.offset.cross(&Vector3::x()) * f0;
        assert!((d.omega - i_inv * torque).norm() < 1e-15);
        assert_eq!(d.b, Vector3::zeros());
    }

    #[test]
    fn unforced_velocity_relaxes_at_drag_rate() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = Forcing::new(1.0, 0.0, 1.0, vec![], Vector3::x()).unwrap();
        let state = BodyState {
            gamma: Vector3::new(0.3, -0.1, 0.2),
            omega: Vector3::zeros(),
            b: Vector3::x(),
            t: 0.0,
        };
        let d = rhs(&state, 0.0, &body, &set, &forcing);
        let expected = -set.k * state.gamma / body.mass;
        assert!((d.gamma - expected).norm() < 1e-15);
    }

    #[test]
    fn parallel_spin_keeps_direction_fixed() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(0.1, Vector3::x());
        let state = BodyState {
            gamma: Vector3::zeros(),
            omega: Vector3::x() * 0.7,
            b: Vector3::x(),
            t: 0.0,
        };
        let d = rhs(&state, 0.25, &body, &set, &forcing);
        assert_eq!(d.b, Vector3::zeros());
    }

    #[test]
    fn zero_amplitude_orbit_is_identically_zero() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = Forcing::new(1.0, 0.0, 1.0, vec![[1.0, 0.0]], Vector3::x()).unwrap();
        let orbit =
            integrate_periodic(&body, &set, &forcing, &IntegrateOptions::default()).unwrap();
        assert_eq!(orbit.periods, 1);
        assert!(orbit
            .samples
            .iter()
            .all(|s| s.gamma == Vector3::zeros() && s.omega == Vector3::zeros()));
        assert_eq!(orbit.gamma_bar, Vector3::zeros());
    }

    #[test]
    fn translation_only_average_matches_closed_form() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let options = IntegrateOptions {
            steps_per_period: 2048,
            ..IntegrateOptions::default()
        };
        for delta in [1e-1, 1e-3] {
            let forcing = cos_forcing(delta, Vector3::x());
            let orbit = integrate_translation_only(&body, &set.k, &forcing, &options).unwrap();
            let exact = delta / (6.0 * PI);
            let err = (orbit.gamma_bar - Vector3::x() * exact).norm() / exact;
            assert!(err < 1e-6, "delta {delta}: relative error {err}");
            assert_eq!(orbit.stop, StopReason::Periodic);
        }
    }

    #[test]
    fn zero_mean_forcing_gives_oscillation_without_net_motion() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = Forcing::new(1.0, 0.1, 0.0, vec![[1.0, 0.0]], Vector3::x()).unwrap();
        let options = IntegrateOptions {
            steps_per_period: 2048,
            ..IntegrateOptions::default()
        };
        let orbit = integrate_translation_only(&body, &set.k, &forcing, &options).unwrap();
        assert!(orbit.gamma_bar.norm() < 1e-9);
        let peak = orbit
            .samples
            .iter()
            .map(|s| s.gamma.norm())
            .fold(0.0, f64::max);
        assert!(peak > 1e-3);
    }

    #[test]
    fn anisotropic_drag_deflects_the_average() {
        let body = sphere_body(Vector3::zeros());
        let k = Matrix3::from_diagonal(&Vector3::new(2.0, 8.0, 8.0));
        let b = Vector3::new(1.0, 1.0, 0.0).normalize();
        let forcing = Forcing::new(1.0, 0.05, 1.0, vec![[0.4, 0.2]], b).unwrap();
        let orbit =
            integrate_translation_only(&body, &k, &forcing, &IntegrateOptions::default()).unwrap();
        let dir = orbit.gamma_bar.normalize();
        assert!((dir - b).norm() > 1e-2, "average should tilt toward low drag");
        assert!(dir.x > dir.y);
    }

    #[test]
    fn full_dynamics_reduce_to_translation_when_uncoupled() {
        // Sphere, force through the center: omega stays zero, b stays put,
        // and the 3-D integrator must agree with the constrained one.
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(0.1, Vector3::x());
        let options = IntegrateOptions {
            steps_per_period: 2048,
            ..IntegrateOptions::default()
        };
        let full = integrate_periodic(&body, &set, &forcing, &options).unwrap();
        let constrained =
            integrate_translation_only(&body, &set.k, &forcing, &options).unwrap();
        assert!(full.samples.iter().all(|s| s.omega.norm() == 0.0));
        assert!((full.gamma_bar - constrained.gamma_bar).norm() < 1e-12);
        assert!(full.b_drift_per_period < 1e-15);
    }

    #[test]
    fn direction_norm_drift_stays_tiny() {
        let body = sphere_body(Vector3::new(0.2, -0.15, 0.1));
        let set = offcenter_sphere_tensors::<f64>(1.0, 0.5, 1.0);
        let forcing = cos_forcing(0.05, Vector3::new(0.0, 1.0, 0.0));
        let options = IntegrateOptions {
            steps_per_period: 1024,
            allow_drift_floor: true,
            ..IntegrateOptions::default()
        };
        let orbit = integrate_periodic(&body, &set, &forcing, &options).unwrap();
        assert!(
            orbit.b_drift_per_period < 1e-9,
            "drift {}",
            orbit.b_drift_per_period
        );
        for s in &orbit.samples {
            assert_relative_eq!(s.b.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unforced_energy_decays_strictly() {
        let body = sphere_body(Vector3::zeros());
        let set = offcenter_sphere_tensors::<f64>(1.0, 0.5, 1.0);
        let forcing = Forcing::new(1.0, 0.0, 1.0, vec![], Vector3::x()).unwrap();
        let initial = BodyState {
            gamma: Vector3::new(0.2, -0.3, 0.1),
            omega: Vector3::new(0.4, 0.1, -0.2),
            b: Vector3::x(),
            t: 0.0,
        };
        let options = IntegrateOptions {
            steps_per_period: 512,
            max_periods: 1,
            orbit_tol: f64::INFINITY,
            allow_drift_floor: false,
        };
        let orbit = integrate_periodic_from(&body, &set, &forcing, &options, initial).unwrap();
        let mut last = f64::INFINITY;
        for s in &orbit.samples {
            let e = kinetic_energy(s, &body);
            if last.is_finite() && e > 1e-14 {
                assert!(e < last, "energy must strictly decrease: {e} !< {last}");
            }
            last = e;
        }
    }

    #[test]
    fn periodic_orbit_is_unique_across_initial_states() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(0.05, Vector3::x());
        let options = IntegrateOptions {
            steps_per_period: 1024,
            ..IntegrateOptions::default()
        };
        let reference =
            integrate_translation_only(&body, &set.k, &forcing, &options).unwrap();
        let mut seeds = [0.3f64, -0.7, 0.11, 0.92, -0.4];
        for (i, s) in seeds.iter_mut().enumerate() {
            let g0 = Vector3::new(*s, -*s * 0.3, 0.1 * i as f64);
            let orbit =
                integrate_translation_only_from(&body, &set.k, &forcing, &options, g0).unwrap();
            assert!((orbit.gamma_bar - reference.gamma_bar).norm() < options.orbit_tol * 10.0);
        }

        // Full dynamics with uncoupled rotation: randomize gamma only.
        let full_ref = integrate_periodic(&body, &set, &forcing, &options).unwrap();
        for s in [0.25, -0.6] {
            let initial = BodyState {
                gamma: Vector3::new(s, 0.2 * s, -s),
                omega: Vector3::zeros(),
                b: Vector3::x(),
                t: 0.0,
            };
            let orbit =
                integrate_periodic_from(&body, &set, &forcing, &options, initial).unwrap();
            assert!((orbit.gamma_bar - full_ref.gamma_bar).norm() < options.orbit_tol * 10.0);
        }
    }

    #[test]
    fn sweep_on_linear_sphere_has_vanishing_residuals() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(1.0, Vector3::x());
        let options = IntegrateOptions {
            steps_per_period: 1024,
            ..IntegrateOptions::default()
        };
        let table =
            delta_sweep(&body, &set, &forcing, &[1e-1, 5e-2, 2.5e-2], &options).unwrap();
        for row in &table.rows {
            assert!(row.residual < 1e-9, "residual {}", row.residual);
        }
        assert!((table.leading - Vector3::x() / (6.0 * PI)).norm() < 1e-14);
    }

    #[test]
    fn sweep_rejects_bad_delta_lists() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(1.0, Vector3::x());
        let options = IntegrateOptions::default();
        assert!(delta_sweep(&body, &set, &forcing, &[], &options).is_err());
        assert!(delta_sweep(&body, &set, &forcing, &[0.1, 0.2], &options).is_err());
        assert!(delta_sweep(&body, &set, &forcing, &[0.1, 0.0], &options).is_err());
    }

    #[test]
    fn off_center_sweep_residual_decays() {
        let body = sphere_body(Vector3::new(0.2, -0.15, 0.1));
        let set = offcenter_sphere_tensors::<f64>(1.0, 0.5, 1.0);
        let forcing =
            Forcing::new(1.0, 1.0, 1.0, vec![[1.0, 0.0], [0.0, 0.5]], Vector3::new(0.0, 1.0, 0.0))
                .unwrap();
        let options = IntegrateOptions {
            steps_per_period: 1024,
            ..IntegrateOptions::default()
        };
        let table = delta_sweep(&body, &set, &forcing, &[1e-1, 5e-2, 2.5e-2], &options).unwrap();
        assert!(table.monotone, "residuals {:?}", table
            .rows
            .iter()
            .map(|r| r.residual)
            .collect::<Vec<_>>());
    }

    #[test]
    fn net_distance_examples() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(1.0, Vector3::x());
        let options = IntegrateOptions {
            steps_per_period: 2048,
            ..IntegrateOptions::default()
        };
        let orbit = integrate_translation_only(&body, &set.k, &forcing, &options).unwrap();
        // |gamma_bar| = 1/(6 pi) = 0.05305, T = 1, D = 10 -> N = 189
        assert_eq!(net_distance(&orbit, 10.0).unwrap(), 189);
        assert_eq!(net_distance(&orbit, 0.0).unwrap(), 0);

        let zero_forcing = Forcing::new(1.0, 0.0, 1.0, vec![], Vector3::x()).unwrap();
        let zero_orbit =
            integrate_translation_only(&body, &set.k, &zero_forcing, &options).unwrap();
        assert!(matches!(
            net_distance(&zero_orbit, 1.0),
            Err(Error::NoPropulsion)
        ));
    }

    #[test]
    fn orbit_average_is_the_trapezoid_of_samples() {
        let body = sphere_body(Vector3::zeros());
        let set = sphere_tensors::<f64>(1.0, 1.0);
        let forcing = cos_forcing(0.1, Vector3::x());
        let orbit =
            integrate_translation_only(&body, &set.k, &forcing, &IntegrateOptions::default())
                .unwrap();
        let n = orbit.samples.len() - 1;
        let mut acc = (orbit.samples[0].gamma + orbit.samples[n].gamma) * 0.5;
        for s in &orbit.samples[1..n] {
            acc += s.gamma;
        }
        acc /= n as f64;
        assert!((acc - orbit.gamma_bar).norm() < 1e-16);
        assert!((orbit.net_displacement_per_period - orbit.gamma_bar * 1.0).norm() < 1e-16);
    }
}
