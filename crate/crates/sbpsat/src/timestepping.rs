//! Classical RK4 for `(z, z_t)' = (z_t, Q z + F(t))` and the manufactured solution.

use crate::analysis::system_error_norms;
use crate::discretization::{apply_rhs_into, SemidiscreteSystem};
use crate::error::{Error, Result};
use std::fmt::Write as _;

const K: f64 = 5.0;

/// `U = cos(5x+1) cos(5y+2) cos(5√2 t+3)`, an exact solution of `U_tt = U_xx + U_yy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSolution;

impl ManufacturedSolution {
    fn omega() -> f64 {
        K * std::f64::consts::SQRT_2
    }

    pub fn u(x: f64, y: f64, t: f64) -> f64 {
        (K * x + 1.0).cos() * (K * y + 2.0).cos() * (Self::omega() * t + 3.0).cos()
    }

    pub fn u_t(x: f64, y: f64, t: f64) -> f64 {
        -Self::omega() * (K * x + 1.0).cos() * (K * y + 2.0).cos() * (Self::omega() * t + 3.0).sin()
    }

    pub fn u_tt(x: f64, y: f64, t: f64) -> f64 {
        -Self::omega().powi(2) * Self::u(x, y, t)
    }

    pub fn laplacian(x: f64, y: f64, t: f64) -> f64 {
        -2.0 * K * K * Self::u(x, y, t)
    }
}

/// `(U, U_t)` at a point.
pub fn manufactured_solution(x: f64, y: f64, t: f64) -> (f64, f64) {
    (ManufacturedSolution::u(x, y, t), ManufacturedSolution::u_t(x, y, t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub z: Vec<f64>,
    pub z_t: Vec<f64>,
}

impl SimulationState {
    pub fn new(t: f64, z: Vec<f64>, z_t: Vec<f64>) -> Result<Self> {
        if z.len() != z_t.len() {
            return Err(Error::LengthMismatch { expected: z.len(), got: z_t.len() });
        }
        Ok(Self { t, z, z_t })
    }

    /// Manufactured solution sampled on the system's grid.
    pub fn manufactured(system: &SemidiscreteSystem, t: f64) -> Self {
        let p = system.coordinates();
        Self {
            t,
            z: p.iter().map(|q| ManufacturedSolution::u(q[0], q[1], t)).collect(),
            z_t: p.iter().map(|q| ManufacturedSolution::u_t(q[0], q[1], t)).collect(),
        }
    }
}

/// Right-hand side of a second-order system `z_tt = a(z, t)`.
pub trait SecondOrderRhs {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn eval(&self, z: &[f64], t: f64, out: &mut [f64]) -> Result<()>;
}

impl SecondOrderRhs for SemidiscreteSystem {
    fn len(&self) -> usize {
        SemidiscreteSystem::len(self)
    }

    fn eval(&self, z: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        apply_rhs_into(self, z, t, out)
    }
}

/// Adapts a closure to [`SecondOrderRhs`].
pub struct FnRhs<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], f64, &mut [f64])> SecondOrderRhs for FnRhs<F> {
    fn len(&self) -> usize {
        self.n
    }

    fn eval(&self, z: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        (self.f)(z, t, out);
        Ok(())
    }
}

/// One classical RK4 step; the right-hand side is evaluated exactly four times.
pub fn rk4_step<S: SecondOrderRhs + ?Sized>(rhs: &S, state: &SimulationState, dt: f64) -> Result<SimulationState> {
    if !(dt > 0.0) {
        return Err(Error::NonpositiveInput(format!("dt = {dt}")));
    }
    let n = rhs.len();
    if state.z.len() != n || state.z_t.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: state.z.len() });
    }
    let (z, w, t) = (&state.z, &state.z_t, state.t);
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let mut a1 = vec![0.0; n];
    rhs.eval(z, t, &mut a1)?;
    let z2 = axpy(z, 0.5 * dt, w);
    let w2 = axpy(w, 0.5 * dt, &a1);
    let mut a2 = vec![0.0; n];
    rhs.eval(&z2, t + 0.5 * dt, &mut a2)?;
    let z3 = axpy(z, 0.5 * dt, &w2);
    let w3 = axpy(w, 0.5 * dt, &a2);
    let mut a3 = vec![0.0; n];
    rhs.eval(&z3, t + 0.5 * dt, &mut a3)?;
    let z4 = axpy(z, dt, &w3);
    let w4 = axpy(w, dt, &a3);
    let mut a4 = vec![0.0; n];
    rhs.eval(&z4, t + dt, &mut a4)?;
    let c = dt / 6.0;
    let z_new = (0..n).map(|i| z[i] + c * (w[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i])).collect();
    let w_new = (0..n).map(|i| w[i] + c * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])).collect();
    Ok(SimulationState { t: t + dt, z: z_new, z_t: w_new })
}

/// Time-step factor `Δt = factor · h_min` by order.
pub fn default_dt_factor(order: usize) -> f64 {
    match order {
        8 => 0.025,
        10 => 0.05,
        _ => 0.1,
    }
}

/// Scalar quantity sampled during a run.
pub struct Observer<'a> {
    pub name: String,
    pub f: Box<dyn FnMut(&SimulationState) -> f64 + 'a>,
    pub log: Vec<(f64, f64)>,
}

impl<'a> Observer<'a> {
    pub fn new(name: impl Into<String>, f: impl FnMut(&SimulationState) -> f64 + 'a) -> Self {
        Self { name: name.into(), f: Box::new(f), log: Vec::new() }
    }

    /// `t,value` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (t, v) in &self.log {
            writeln!(s, "{t:.10e},{v:.10e}").unwrap();
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationOptions {
    /// Observers are sampled every `stride` steps and at the final time.
    pub stride: usize,
    /// Abort once `max |z|` exceeds this.
    pub blowup_guard: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { stride: 1, blowup_guard: 1e6 }
    }
}

/// Integrates to `t_f` with steps of at most `dt`; the last step is shortened to land on `t_f`.
pub fn simulate<S: SecondOrderRhs + ?Sized>(
    rhs: &S,
    init: SimulationState,
    t_f: f64,
    dt: f64,
    observers: &mut [Observer<'_>],
    opts: SimulationOptions,
) -> Result<SimulationState> {
    if !(t_f > init.t) {
        return Err(Error::NonpositiveInput(format!("t_f = {t_f} must exceed t0 = {}", init.t)));
    }
    if !(dt > 0.0) {
        return Err(Error::NonpositiveInput(format!("dt = {dt}")));
    }
    let stride = opts.stride.max(1);
    let mut state = init;
    for o in observers.iter_mut() {
        let v = (o.f)(&state);
        o.log.push((state.t, v));
    }
    let mut step = 0usize;
    loop {
        let remaining = t_f - state.t;
        if remaining <= 1e-12 * t_f.abs().max(1.0) {
            break;
        }
        let h = if remaining < dt * (1.0 + 1e-9) { remaining } else { dt };
        state = rk4_step(rhs, &state, h)?;
        step += 1;
        let max_abs = state.z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(max_abs <= opts.blowup_guard) {
            return Err(Error::BlowupDetected { t: state.t, max_abs });
        }
        let done = t_f - state.t <= 1e-12 * t_f.abs().max(1.0);
        if step.is_multiple_of(stride) || done {
            for o in observers.iter_mut() {
                let v = (o.f)(&state);
                o.log.push((state.t, v));
            }
        }
    }
    state.t = t_f;
    Ok(state)
}

/// Final time of the manufactured convergence runs.
pub const MANUFACTURED_FINAL_TIME: f64 = 3.58;

/// Runs the manufactured problem from `t = 0` to `t_f` and returns the `(L2, max)` errors
/// at `t_f`, with unit amplitude.
pub fn manufactured_errors(system: &SemidiscreteSystem, t_f: f64, dt: f64) -> Result<(f64, f64)> {
    let init = SimulationState::manufactured(system, 0.0);
    let end = simulate(system, init, t_f, dt, &mut [], SimulationOptions::default())?;
    system_error_norms(system, &end.z, &SimulationState::manufactured(system, t_f).z, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> FnRhs<impl Fn(&[f64], f64, &mut [f64])> {
        FnRhs { n: 1, f: |z: &[f64], _t: f64, out: &mut [f64]| out[0] = -z[0] }
    }

    #[test]
    fn manufactured_solution_values() {
        let (u, _) = manufactured_solution(0.0, 0.0, 0.0);
        assert_eq!(u, 1f64.cos() * 2f64.cos() * 3f64.cos());
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..100 {
            let (x, y, t) = (next(), next(), next());
            let r = ManufacturedSolution::u_tt(x, y, t) - ManufacturedSolution::laplacian(x, y, t);
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_is_fourth_order_on_the_oscillator() {
        let err = |n: usize| {
            let s0 = SimulationState::new(0.0, vec![1.0], vec![0.0]).unwrap();
            let s = simulate(&oscillator(), s0, 1.0, 1.0 / n as f64, &mut [], SimulationOptions::default()).unwrap();
            (s.z[0] - 1f64.cos()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn zero_state_stays_zero() {
        let s0 = SimulationState::new(0.0, vec![0.0], vec![0.0]).unwrap();
        let s = rk4_step(&oscillator(), &s0, 0.1).unwrap();
        assert_eq!(s.z, vec![0.0]);
    }

    #[test]
    fn last_step_is_shortened_and_observers_sample() {
        let s0 = SimulationState::new(0.0, vec![1.0], vec![0.0]).unwrap();
        let mut obs = [Observer::new("z", |s: &SimulationState| s.z[0])];
        let s = simulate(&oscillator(), s0, 1.0, 0.3, &mut obs, SimulationOptions { stride: 2, blowup_guard: 1e6 })
            .unwrap();
        assert_eq!(s.t, 1.0);
        let times: Vec<f64> = obs[0].log.iter().map(|p| p.0).collect();
        assert_eq!(times.len(), 3);
        assert!((times[1] - 0.6).abs() < 1e-12 && (times[2] - 1.0).abs() < 1e-12);
        assert!(obs[0].to_csv().starts_with("t,value\n"));
    }

    #[test]
    fn blowup_is_detected() {
        let rhs = FnRhs { n: 1, f: |z: &[f64], _t: f64, out: &mut [f64]| out[0] = 100.0 * z[0] };
        let s0 = SimulationState::new(0.0, vec![1.0], vec![0.0]).unwrap();
        let r = simulate(&rhs, s0, 10.0, 0.01, &mut [], SimulationOptions::default());
        assert!(matches!(r, Err(Error::BlowupDetected { .. })));
    }
}
