use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{complex_structure, gauss_linear_step, max_abs, symplectic_residual, GAUSS_NODES};

use super::family::{MatrixFn, TimeSymmetricFamily};

/// Residual max |Q^T J Q - J| (relative to |Q|^2) above which a path is rejected.
pub const SYMPLECTICITY_LIMIT: f64 = 1e-6;
/// Smallest accepted number of integration steps on [0, 1].
pub const MIN_STEPS: usize = 8;

/// A time interval on which the path solves Q' = J R(t) Q with a single
/// generator R.
#[derive(Clone)]
pub struct PathPiece {
    pub start: f64,
    pub end: f64,
    generator: MatrixFn,
}

impl PathPiece {
    pub fn generator(&self, t: f64) -> DMatrix<f64> {
        (self.generator)(t)
    }
}

impl std::fmt::Debug for PathPiece {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathPiece")
            .field("start", &self.start)
            .field("end", &self.end)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

/// Junction between the mean-Hessian prefix and the main path. A crossing
/// there is counted with half its crossing form, evaluated on `main_side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub time: f64,
    pub main_side: Side,
}

/// A sampled path of symplectic matrices with the generators that produced it.
#[derive(Debug, Clone)]
pub struct SymplecticPath {
    n: usize,
    times: Vec<f64>,
    matrices: Vec<DMatrix<f64>>,
    pieces: Vec<PathPiece>,
    junction: Option<Junction>,
    sympl_tol: f64,
}

fn gauss_step(generator: &MatrixFn, j: &DMatrix<f64>, t: f64, h: f64) -> DMatrix<f64> {
    let a1 = j * generator(t + GAUSS_NODES[0] * h);
    let a2 = j * generator(t + GAUSS_NODES[1] * h);
    gauss_linear_step(&a1, &a2, h)
}

fn relative_residual(q: &DMatrix<f64>) -> f64 {
    symplectic_residual(q) / q.norm_squared().max(1.0)
}

struct Segment {
    times: Vec<f64>,
    matrices: Vec<DMatrix<f64>>,
    residual: f64,
}

fn integrate_segment(generator: &MatrixFn, n: usize, t0: f64, t1: f64, steps: usize, q0: &DMatrix<f64>) -> Segment {
    let j = complex_structure(n);
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut matrices = Vec::with_capacity(steps + 1);
    times.push(t0);
    matrices.push(q0.clone());
    let mut residual = relative_residual(q0);
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let next = gauss_step(generator, &j, t, h) * &matrices[i];
        residual = residual.max(relative_residual(&next));
        times.push(if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h });
        matrices.push(next);
    }
    Segment {
        times,
        matrices,
        residual,
    }
}

/// Integrates with the requested step count, doubling once if the
/// symplecticity residual exceeds the limit.
fn integrate_monitored(
    generator: &MatrixFn,
    n: usize,
    t0: f64,
    t1: f64,
    steps: usize,
    q0: &DMatrix<f64>,
) -> Result<Segment> {
    let seg = integrate_segment(generator, n, t0, t1, steps, q0);
    if seg.residual <= SYMPLECTICITY_LIMIT {
        return Ok(seg);
    }
    log::warn!(
        "symplecticity residual {:e} at {steps} steps, retrying at {}",
        seg.residual,
        2 * steps
    );
    let seg = integrate_segment(generator, n, t0, t1, 2 * steps, q0);
    if seg.residual <= SYMPLECTICITY_LIMIT {
        Ok(seg)
    } else {
        Err(Error::SymplecticityLost {
            residual: seg.residual,
            limit: SYMPLECTICITY_LIMIT,
        })
    }
}

fn family_generator(family: &TimeSymmetricFamily) -> MatrixFn {
    let family = family.clone();
    std::sync::Arc::new(move |t| family.eval(t))
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!(
            "steps must be >= {MIN_STEPS}, got {steps}"
        )));
    }
    Ok(())
}

/// Fundamental solution P^t of Q' = J R(t) Q, Q(0) = I, on [0, t_end], using
/// the two-stage Gauss-Legendre method with `steps` uniform steps.
pub fn integrate_linear_hamiltonian(family: &TimeSymmetricFamily, t_end: f64, steps: usize) -> Result<SymplecticPath> {
    check_steps(steps)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput("t_end must be positive and finite".into()));
    }
    let n = family.n();
    let generator = family_generator(family);
    let seg = integrate_monitored(&generator, n, 0.0, t_end, steps, &DMatrix::identity(2 * n, 2 * n))?;
    Ok(SymplecticPath {
        n,
        times: seg.times,
        matrices: seg.matrices,
        pieces: vec![PathPiece {
            start: 0.0,
            end: t_end,
            generator,
        }],
        junction: None,
        sympl_tol: seg.residual,
    })
}

/// The path Phi_eps on [-eps, 1]: exp(t J Rbar) for t <= 0 followed by P^t,
/// where Rbar is the mean of R. The two pieces meet at the identity at t = 0.
pub fn theorem3_path(family: &TimeSymmetricFamily, epsilon: f64, steps: usize) -> Result<SymplecticPath> {
    check_steps(steps)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInput("epsilon must lie in (0, 1]".into()));
    }
    let n = family.n();
    let dim = 2 * n;
    let mean = family.mean();
    let ev = crate::linalg::symmetric_eigenvalues(&mean)?;
    let min_abs_eig = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let scale = ev.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if min_abs_eig <= 1e-9 * scale {
        return Err(Error::DegenerateMeanHessian { min_abs_eig });
    }

    let j = complex_structure(n);
    let jr = &j * &mean;
    let cells = MIN_STEPS.max((steps as f64 * epsilon).ceil() as usize);
    let mut times = Vec::with_capacity(cells + steps + 1);
    let mut matrices = Vec::with_capacity(cells + steps + 1);
    let mut residual = 0.0_f64;
    for i in 0..cells {
        let t = -epsilon + epsilon * i as f64 / cells as f64;
        let q = (&jr * t).exp();
        residual = residual.max(relative_residual(&q));
        times.push(t);
        matrices.push(q);
    }
    let generator = family_generator(family);
    let seg = integrate_monitored(&generator, n, 0.0, 1.0, steps, &DMatrix::identity(dim, dim))?;
    if residual > SYMPLECTICITY_LIMIT {
        return Err(Error::SymplecticityLost {
            residual,
            limit: SYMPLECTICITY_LIMIT,
        });
    }
    times.extend(seg.times);
    matrices.extend(seg.matrices);
    let mean_gen: MatrixFn = std::sync::Arc::new(move |_| mean.clone());
    Ok(SymplecticPath {
        n,
        times,
        matrices,
        pieces: vec![
            PathPiece {
                start: -epsilon,
                end: 0.0,
                generator: mean_gen,
            },
            PathPiece {
                start: 0.0,
                end: 1.0,
                generator,
            },
        ],
        junction: Some(Junction {
            time: 0.0,
            main_side: Side::After,
        }),
        sympl_tol: residual.max(seg.residual),
    })
}

impl SymplecticPath {
    /// Builds a path from samples and a single generator. The samples are
    /// trusted to solve Q' = J R Q; only their symplecticity is checked.
    pub fn from_samples(times: Vec<f64>, matrices: Vec<DMatrix<f64>>, generator: MatrixFn) -> Result<Self> {
        if times.len() < 2 || times.len() != matrices.len() {
            return Err(Error::InvalidInput("need at least two matching samples".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("sample times must increase".into()));
        }
        let dim = matrices[0].nrows();
        if !dim.is_multiple_of(2) || matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::InvalidInput("samples must be square of even size".into()));
        }
        let residual = matrices.iter().map(relative_residual).fold(0.0, f64::max);
        if residual > SYMPLECTICITY_LIMIT {
            return Err(Error::SymplecticityLost {
                residual,
                limit: SYMPLECTICITY_LIMIT,
            });
        }
        let (start, end) = (times[0], *times.last().unwrap());
        Ok(Self {
            n: dim / 2,
            times,
            matrices,
            pieces: vec![PathPiece { start, end, generator }],
            junction: None,
            sympl_tol: residual,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn pieces(&self) -> &[PathPiece] {
        &self.pieces
    }

    pub fn junction(&self) -> Option<Junction> {
        self.junction
    }

    /// Largest relative symplecticity residual over the samples.
    pub fn sympl_tol(&self) -> f64 {
        self.sympl_tol
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn endpoint(&self) -> &DMatrix<f64> {
        self.matrices.last().unwrap()
    }

    fn piece_index(&self, t: f64, side: Side) -> usize {
        let last = self.pieces.len() - 1;
        match side {
            Side::After => self.pieces.iter().position(|p| t < p.end).unwrap_or(last),
            Side::Before => self.pieces.iter().position(|p| t <= p.end).unwrap_or(last),
        }
    }

    /// R(t); at a boundary between pieces `side` selects the one-sided limit.
    pub fn generator_at(&self, t: f64, side: Side) -> DMatrix<f64> {
        self.pieces[self.piece_index(t, side)].generator(t)
    }

    /// Index of the grid cell [t_i, t_{i+1}] containing t.
    fn cell(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.times.len() - 2)
    }

    /// Q(t) for any t in the path's interval, by one Gauss step from the
    /// nearest grid point to the left using that cell's generator.
    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::InvalidInput(format!(
                "time {t} outside [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        let i = self.cell(t);
        let h = t - self.times[i];
        if h == 0.0 {
            return Ok(self.matrices[i].clone());
        }
        let mid = 0.5 * (self.times[i] + self.times[i + 1]);
        let piece = &self.pieces[self.piece_index(mid, Side::After)];
        let j = complex_structure(self.n);
        Ok(gauss_step(&piece.generator, &j, self.times[i], h) * &self.matrices[i])
    }

    /// The path traversed backwards: tau -> Q(a + b - tau), generated by
    /// -R(a + b - tau).
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.start(), self.end());
        let times = self.times.iter().rev().map(|t| a + b - t).collect();
        let matrices = self.matrices.iter().rev().cloned().collect();
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|p| {
                let g = p.generator.clone();
                PathPiece {
                    start: a + b - p.end,
                    end: a + b - p.start,
                    generator: std::sync::Arc::new(move |t| -g(a + b - t)),
                }
            })
            .collect();
        let junction = self.junction.map(|j| Junction {
            time: a + b - j.time,
            main_side: match j.main_side {
                Side::Before => Side::After,
                Side::After => Side::Before,
            },
        });
        Self {
            n: self.n,
            times,
            matrices,
            pieces,
            junction,
            sympl_tol: self.sympl_tol,
        }
    }

    /// Splits at an interior time `t`, inserting a sample there if needed.
    /// Both halves contain the sample at `t`.
    pub fn split(&self, t: f64) -> Result<(Self, Self)> {
        if !(t > self.start() && t < self.end()) {
            return Err(Error::InvalidInput(format!("split time {t} is not interior")));
        }
        let q_t = self.eval(t)?;
        let k = self.times.partition_point(|&s| s < t);
        let exact = self.times[k] == t;
        let mut left_times = self.times[..k].to_vec();
        let mut left_mats = self.matrices[..k].to_vec();
        left_times.push(t);
        left_mats.push(q_t.clone());
        let skip = if exact { k + 1 } else { k };
        let mut right_times = vec![t];
        let mut right_mats = vec![q_t];
        right_times.extend_from_slice(&self.times[skip..]);
        right_mats.extend_from_slice(&self.matrices[skip..]);

        let clip = |lo: f64, hi: f64| -> Vec<PathPiece> {
            self.pieces
                .iter()
                .filter(|p| p.end > lo && p.start < hi)
                .map(|p| PathPiece {
                    start: p.start.max(lo),
                    end: p.end.min(hi),
                    generator: p.generator.clone(),
                })
                .collect()
        };
        let keep = |lo: f64, hi: f64| self.junction.filter(|j| j.time >= lo && j.time <= hi);
        let left = Self {
            n: self.n,
            pieces: clip(self.start(), t),
            junction: keep(self.start(), t),
            times: left_times,
            matrices: left_mats,
            sympl_tol: self.sympl_tol,
        };
        let right = Self {
            n: self.n,
            pieces: clip(t, self.end()),
            junction: keep(t, self.end()),
            times: right_times,
            matrices: right_mats,
            sympl_tol: self.sympl_tol,
        };
        Ok((left, right))
    }

    /// Max entrywise distance between this path and `other` at shared
    /// sample times of `self`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        let mut d = 0.0_f64;
        for (t, q) in self.times.iter().zip(&self.matrices) {
            d = d.max(max_abs(&(q - other.eval(*t)?)));
        }
        Ok(d)
    }
}
