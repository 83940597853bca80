//! Time-periodic trigonometric Hamiltonians on the torus R^{2n} / Z^{2n}
//! with the constant symplectic form dx ^ dy, their flows, contractible
//! 1-periodic orbits, linearized return maps, and the action functional.
//!
//! Points are q = (x_1..x_n, y_1..y_n) and the field is q' = J grad h_t(q)
//! with J(x, y) = (-y, x).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_structure, gauss_linear_step, min_singular, symplectic_residual, GAUSS_A, GAUSS_NODES};
use crate::symplectic::{MatrixFn, Smoothness, TimeSymmetricFamily, SYMPLECTICITY_LIMIT};

/// One term amp * cos(2 pi (k_t t + k_q . q) + phase).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k_t: i64,
    pub k_q: Vec<i64>,
    pub amp: f64,
    pub phase: f64,
}

/// JSON: `{"n": 1, "modes": [{"k_t": 0, "k_q": [1, 0], "amp": 0.1, "phase": 0.0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHamiltonian", into = "RawHamiltonian")]
pub struct TorusHamiltonian {
    n: usize,
    modes: Vec<Mode>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    n: usize,
    modes: Vec<Mode>,
}

impl TryFrom<RawHamiltonian> for TorusHamiltonian {
    type Error = Error;
    fn try_from(raw: RawHamiltonian) -> Result<Self> {
        Self::new(raw.n, raw.modes)
    }
}

impl From<TorusHamiltonian> for RawHamiltonian {
    fn from(h: TorusHamiltonian) -> Self {
        RawHamiltonian { n: h.n, modes: h.modes }
    }
}

impl TorusHamiltonian {
    pub fn new(n: usize, modes: Vec<Mode>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be >= 1".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if m.k_q.len() != 2 * n {
                return Err(Error::InvalidInput(format!(
                    "modes[{i}].k_q has length {}, expected {}",
                    m.k_q.len(),
                    2 * n
                )));
            }
            if !m.amp.is_finite() || !m.phase.is_finite() {
                return Err(Error::InvalidInput(format!("modes[{i}] has a non-finite value")));
            }
        }
        Ok(Self { n, modes })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, modes: vec![] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// sup |h| <= sum |amp|.
    pub fn sup_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.amp.abs()).sum()
    }

    pub fn is_autonomous(&self) -> bool {
        self.modes.iter().all(|m| m.k_t == 0)
    }

    /// True when the Hamiltonian field vanishes identically.
    pub fn has_zero_field(&self) -> bool {
        self.modes.iter().all(|m| m.amp == 0.0 || m.k_q.iter().all(|k| *k == 0))
    }

    fn angle(m: &Mode, t: f64, q: &DVector<f64>) -> f64 {
        let dot: f64 = m.k_q.iter().zip(q.iter()).map(|(k, x)| *k as f64 * x).sum();
        2.0 * PI * (m.k_t as f64 * t + dot) + m.phase
    }

    pub fn value(&self, t: f64, q: &DVector<f64>) -> f64 {
        self.modes.iter().map(|m| m.amp * Self::angle(m, t, q).cos()).sum()
    }

    pub fn gradient(&self, t: f64, q: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for m in &self.modes {
            let s = -m.amp * 2.0 * PI * Self::angle(m, t, q).sin();
            for (gi, k) in g.iter_mut().zip(&m.k_q) {
                *gi += s * *k as f64;
            }
        }
        g
    }

    pub fn hessian(&self, t: f64, q: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut hm = DMatrix::zeros(d, d);
        for m in &self.modes {
            let c = -m.amp * 4.0 * PI * PI * Self::angle(m, t, q).cos();
            for i in 0..d {
                for j in 0..d {
                    hm[(i, j)] += c * (m.k_q[i] * m.k_q[j]) as f64;
                }
            }
        }
        hm
    }

    /// The Hamiltonian field J grad h_t(q).
    pub fn field(&self, t: f64, q: &DVector<f64>) -> DVector<f64> {
        let g = self.gradient(t, q);
        let n = self.n;
        let mut f = DVector::zeros(2 * n);
        for i in 0..n {
            f[i] = -g[n + i];
            f[n + i] = g[i];
        }
        f
    }

    /// One two-stage Gauss step of size dt for the flow together with the
    /// exact Jacobian of the discrete step. Steps whose stage iteration does
    /// not settle are split in half.
    fn step(&self, t: f64, q: &DVector<f64>, dt: f64, depth: u32) -> (DVector<f64>, DMatrix<f64>) {
        let j = complex_structure(self.n);
        let k0 = self.field(t, q);
        let mut k = [k0.clone(), k0];
        let mut stages = [q.clone(), q.clone()];
        let mut converged = false;
        for _ in 0..100 {
            for s in 0..2 {
                stages[s] = q + (&k[0] * GAUSS_A[s][0] + &k[1] * GAUSS_A[s][1]) * dt;
            }
            let next = [
                self.field(t + GAUSS_NODES[0] * dt, &stages[0]),
                self.field(t + GAUSS_NODES[1] * dt, &stages[1]),
            ];
            let change = (&next[0] - &k[0]).amax().max((&next[1] - &k[1]).amax()) * dt.abs();
            k = next;
            if change <= 1e-15 * (1.0 + q.amax()) {
                converged = true;
                break;
            }
        }
        if !converged && depth < 12 {
            let (mid, p1) = self.step(t, q, 0.5 * dt, depth + 1);
            let (end, p2) = self.step(t + 0.5 * dt, &mid, 0.5 * dt, depth + 1);
            return (end, p2 * p1);
        }
        for s in 0..2 {
            stages[s] = q + (&k[0] * GAUSS_A[s][0] + &k[1] * GAUSS_A[s][1]) * dt;
        }
        let a1 = &j * self.hessian(t + GAUSS_NODES[0] * dt, &stages[0]);
        let a2 = &j * self.hessian(t + GAUSS_NODES[1] * dt, &stages[1]);
        let next = q + (&k[0] + &k[1]) * (0.5 * dt);
        (next, gauss_linear_step(&a1, &a2, dt))
    }

    /// Trajectory on the uniform grid t_i = i t_end / steps (lifted to
    /// R^{2n}) and the linearized map.
    fn integrate(&self, q0: &DVector<f64>, t_end: f64, steps: usize) -> (Vec<DVector<f64>>, DMatrix<f64>) {
        let dt = t_end / steps as f64;
        let mut traj = Vec::with_capacity(steps + 1);
        traj.push(q0.clone());
        let mut xi = DMatrix::identity(self.dim(), self.dim());
        for i in 0..steps {
            let (next, prop) = self.step(i as f64 * dt, &traj[i], dt, 0);
            xi = prop * xi;
            traj.push(next);
        }
        (traj, xi)
    }
}

pub const MIN_FLOW_STEPS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    /// Endpoint in the universal cover.
    pub point: DVector<f64>,
    /// max |q_steps - q_{2 steps}|.
    pub error_estimate: f64,
}

fn check_point(h: &TorusHamiltonian, q0: &DVector<f64>) -> Result<()> {
    if q0.len() != h.dim() || q0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("point must be {} finite reals", h.dim())));
    }
    Ok(())
}

/// Time-t map of the Hamiltonian flow from q0, with a step-halving error estimate.
pub fn flow(h: &TorusHamiltonian, q0: &DVector<f64>, t: f64, steps: usize) -> Result<FlowResult> {
    check_point(h, q0)?;
    if steps < MIN_FLOW_STEPS {
        return Err(Error::InvalidInput(format!("steps must be >= {MIN_FLOW_STEPS}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput("t must lie in [0, 1]".into()));
    }
    if t == 0.0 {
        return Ok(FlowResult {
            point: q0.clone(),
            error_estimate: 0.0,
        });
    }
    let coarse = h.integrate(q0, t, steps).0.pop().unwrap();
    let fine = h.integrate(q0, t, 2 * steps).0.pop().unwrap();
    Ok(FlowResult {
        error_estimate: (&coarse - &fine).amax(),
        point: fine,
    })
}

/// Linearization of the time-1 map at q0.
pub fn monodromy(h: &TorusHamiltonian, q0: &DVector<f64>, steps: usize) -> Result<DMatrix<f64>> {
    check_point(h, q0)?;
    if steps < MIN_FLOW_STEPS {
        return Err(Error::InvalidInput(format!("steps must be >= {MIN_FLOW_STEPS}")));
    }
    let (_, xi) = h.integrate(q0, 1.0, steps);
    check_symplectic(&xi)?;
    Ok(xi)
}

fn check_symplectic(xi: &DMatrix<f64>) -> Result<()> {
    let residual = symplectic_residual(xi) / xi.norm_squared().max(1.0);
    if residual > SYMPLECTICITY_LIMIT {
        return Err(Error::SymplecticityLost {
            residual,
            limit: SYMPLECTICITY_LIMIT,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// Initial point reduced to [0, 1)^{2n}.
    pub q0: DVector<f64>,
    /// Trajectory on the uniform grid of `steps` steps, starting at `q0`.
    pub samples: Vec<DVector<f64>>,
    pub monodromy: DMatrix<f64>,
    /// |P^1(q0) - q0| in the lift (contractible orbits close up in the lift).
    pub residual: f64,
    /// Newton residual norms, one per iterate.
    pub newton_history: Vec<f64>,
}

impl PeriodicOrbit {
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn det_monodromy_minus_identity(&self) -> f64 {
        let d = self.monodromy.nrows();
        (&self.monodromy - DMatrix::identity(d, d)).determinant()
    }
}

pub fn is_nondegenerate(orbit: &PeriodicOrbit, tol: f64) -> bool {
    orbit.det_monodromy_minus_identity().abs() > tol
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSearch {
    pub seeds_per_axis: usize,
    pub newton_tol: f64,
    pub steps: usize,
    pub max_iterations: usize,
}

impl Default for OrbitSearch {
    fn default() -> Self {
        Self {
            seeds_per_axis: 4,
            newton_tol: 1e-11,
            steps: 256,
            max_iterations: 40,
        }
    }
}

/// Deduplication radius in the torus metric.
pub const DEDUP_DISTANCE: f64 = 1e-6;

pub fn torus_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(1.0);
            d.min(1.0 - d)
        })
        .fold(0.0_f64, |acc, d| acc.hypot(d))
}

enum SeedOutcome {
    Converged(Box<PeriodicOrbit>),
    Singular,
    Failed,
}

fn newton_from_seed(h: &TorusHamiltonian, seed: DVector<f64>, opts: &OrbitSearch) -> SeedOutcome {
    let d = h.dim();
    let mut q = seed;
    let mut history = Vec::new();
    for _ in 0..opts.max_iterations {
        let (traj, xi) = h.integrate(&q, 1.0, opts.steps);
        let f = traj.last().unwrap() - &q;
        let norm = f.norm();
        history.push(norm);
        if norm <= opts.newton_tol {
            let shift = q.map(|v| v.rem_euclid(1.0)) - &q;
            let samples = traj.iter().map(|p| p + &shift).collect();
            return SeedOutcome::Converged(Box::new(PeriodicOrbit {
                q0: q + shift,
                samples,
                monodromy: xi,
                residual: norm,
                newton_history: history,
            }));
        }
        let jac = &xi - DMatrix::identity(d, d);
        if min_singular(&jac) < 1e-12 {
            return SeedOutcome::Singular;
        }
        let Some(dq) = jac.lu().solve(&(-&f)) else {
            return SeedOutcome::Singular;
        };
        // damped step: halve until the residual drops
        let mut lambda = 1.0;
        loop {
            let trial = &q + &dq * lambda;
            let (tt, _) = h.integrate(&trial, 1.0, opts.steps);
            let r = (tt.last().unwrap() - &trial).norm();
            if r < norm || lambda < 1e-4 {
                q = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    SeedOutcome::Failed
}

/// Contractible 1-periodic orbits found by Newton's method on q -> P^1(q) - q
/// from a uniform grid of seeds, deduplicated on the torus.
pub fn find_periodic_orbits(h: &TorusHamiltonian, opts: &OrbitSearch) -> Result<Vec<PeriodicOrbit>> {
    if opts.seeds_per_axis == 0 {
        return Err(Error::InvalidInput("seeds_per_axis must be >= 1".into()));
    }
    if !(opts.newton_tol >= 1e-12) {
        return Err(Error::InvalidInput("newton_tol must be >= 1e-12".into()));
    }
    if opts.steps < MIN_FLOW_STEPS {
        return Err(Error::InvalidInput(format!("steps must be >= {MIN_FLOW_STEPS}")));
    }
    if h.has_zero_field() {
        return Err(Error::DegenerateProblem(
            "the Hamiltonian field vanishes, so every point is fixed".into(),
        ));
    }
    let d = h.dim();
    let s = opts.seeds_per_axis;
    let total = s.pow(d as u32);
    // offset the grid so seeds avoid symmetric critical points exactly
    let seeds: Vec<DVector<f64>> = (0..total)
        .map(|mut idx| {
            DVector::from_fn(d, |_, _| {
                let i = idx % s;
                idx /= s;
                (i as f64 + 0.5) / s as f64
            })
        })
        .collect();
    let outcomes = crate::par::map(&seeds, |seed| newton_from_seed(h, seed.clone(), opts));
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut singular = 0;
    for (seed, outcome) in seeds.iter().zip(outcomes) {
        match outcome {
            SeedOutcome::Converged(orbit) => {
                if orbits.iter().all(|o| torus_distance(&o.q0, &orbit.q0) > DEDUP_DISTANCE) {
                    let tail: Vec<_> = orbit.newton_history.iter().rev().take(3).collect();
                    log::debug!("orbit at {:?}: last residuals {tail:?}", orbit.q0.as_slice());
                    orbits.push(*orbit);
                }
            }
            SeedOutcome::Singular => {
                singular += 1;
                log::info!("seed {:?} skipped: singular Jacobian", seed.as_slice());
            }
            SeedOutcome::Failed => log::info!("seed {:?} did not converge", seed.as_slice()),
        }
    }
    if orbits.is_empty() && singular == total {
        return Err(Error::DegenerateProblem("Jacobian singular at every seed".into()));
    }
    for o in &orbits {
        check_symplectic(&o.monodromy)?;
    }
    orbits.sort_by(|a, b| {
        a.q0.iter()
            .zip(b.q0.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(orbits)
}

/// R_t = d^2 h_t(gamma(t)) in the constant frame.
///
/// An equilibrium of an autonomous Hamiltonian gives a constant family;
/// otherwise the family evaluates the orbit by one Gauss step from the
/// nearest stored sample.
pub fn hessian_family(h: &TorusHamiltonian, orbit: &PeriodicOrbit) -> Result<TimeSymmetricFamily> {
    let q0 = orbit.q0.clone();
    let scale = 1.0 + h.sup_bound() * 4.0 * PI * PI;
    if h.is_autonomous() && h.field(0.0, &q0).amax() <= 1e-12 * scale {
        return TimeSymmetricFamily::constant(h.hessian(0.0, &q0));
    }
    let h2 = h.clone();
    let samples = orbit.samples.clone();
    let steps = orbit.steps();
    let f: MatrixFn = Arc::new(move |t: f64| {
        let t = t.clamp(0.0, 1.0);
        let i = ((t * steps as f64).floor() as usize).min(steps - 1);
        let ti = i as f64 / steps as f64;
        let q = if t > ti {
            h2.step(ti, &samples[i], t - ti, 0).0
        } else {
            samples[i].clone()
        };
        h2.hessian(t, &q)
    });
    TimeSymmetricFamily::from_fn(h.n(), Smoothness::PeriodicSmooth, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub value: f64,
    /// Difference to the same rule on every other sample.
    pub quadrature_error: f64,
}

/// Lifts a sampled closed loop to R^{2n}; consecutive samples are assumed to
/// differ by less than half a period in each coordinate.
fn lift(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    out.push(points[0].clone());
    for p in &points[1..] {
        let prev = out.last().unwrap();
        let next = DVector::from_fn(p.len(), |i, _| {
            let d = p[i] - prev[i];
            prev[i] + d - d.round()
        });
        out.push(next);
    }
    out
}

fn action_on(h: &TorusHamiltonian, lifted: &[DVector<f64>]) -> f64 {
    let n = h.n();
    let m = lifted.len() - 1;
    let mut s = 0.0;
    let mut hint = 0.0;
    for i in 0..m {
        let (a, b) = (&lifted[i], &lifted[i + 1]);
        for j in 0..n {
            s += 0.5 * (a[j] + b[j]) * (b[n + j] - a[n + j]);
        }
        hint += h.value(i as f64 / m as f64, a) / m as f64;
    }
    s - hint
}

/// phi_h(gamma) = int x . dy - h_t(gamma(t)) dt for a loop sampled at
/// t_i = i / M, i = 0..=M, with the last sample closing the loop.
pub fn action(h: &TorusHamiltonian, loop_samples: &[DVector<f64>]) -> Result<ActionValue> {
    if loop_samples.len() < 5 {
        return Err(Error::InvalidInput("a loop needs at least 5 samples".into()));
    }
    for p in loop_samples {
        check_point(h, p)?;
    }
    let lifted = lift(loop_samples);
    let gap = lifted.last().unwrap() - &lifted[0];
    let winding: Vec<i64> = gap.iter().map(|v| v.round() as i64).collect();
    if winding.iter().any(|w| *w != 0) {
        return Err(Error::NonContractibleLoop { winding });
    }
    if gap.amax() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "loop does not close (gap {:e})",
            gap.amax()
        )));
    }
    let value = action_on(h, &lifted);
    let m = lifted.len() - 1;
    let quadrature_error = if m.is_multiple_of(2) {
        let coarse: Vec<_> = lifted.iter().step_by(2).cloned().collect();
        (value - action_on(h, &coarse)).abs()
    } else {
        f64::NAN
    };
    Ok(ActionValue {
        value,
        quadrature_error,
    })
}
