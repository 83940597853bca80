use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, max_abs, symmetrize};

pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Regularity class of a [`TimeSymmetricFamily`] in t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// Continuous on [0, 1]; quadrature uses composite Gauss-Legendre.
    Continuous,
    /// Smooth and 1-periodic; quadrature uses the trapezoid rule.
    PeriodicSmooth,
    TrigPolynomial,
}

/// R(t) = C_0 + sum_k C_k cos(2 pi k t) + S_k sin(2 pi k t).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub constant: DMatrix<f64>,
    /// (k >= 1, C_k)
    pub cos: Vec<(usize, DMatrix<f64>)>,
    /// (k >= 1, S_k)
    pub sin: Vec<(usize, DMatrix<f64>)>,
}

impl TrigSeries {
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        let tau = 2.0 * std::f64::consts::PI * t;
        for (k, c) in &self.cos {
            out += c * (*k as f64 * tau).cos();
        }
        for (k, s) in &self.sin {
            out += s * (*k as f64 * tau).sin();
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.cos.iter().chain(&self.sin).map(|(k, _)| *k).max().unwrap_or(0)
    }
}

#[derive(Clone)]
enum Kind {
    Trig(TrigSeries),
    Function { f: MatrixFn, smoothness: Smoothness },
}

/// A family t -> R(t) of real symmetric 2n x 2n matrices on [0, 1].
#[derive(Clone)]
pub struct TimeSymmetricFamily {
    n: usize,
    kind: Kind,
}

impl fmt::Debug for TimeSymmetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Trig(series) => f
                .debug_struct("TimeSymmetricFamily")
                .field("n", &self.n)
                .field("series", series)
                .finish(),
            Kind::Function { smoothness, .. } => f
                .debug_struct("TimeSymmetricFamily")
                .field("n", &self.n)
                .field("smoothness", smoothness)
                .finish_non_exhaustive(),
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::InvalidInput(format!(
            "{what}: expected {dim}x{dim} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: non-finite entry")));
    }
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-12 * max_abs(m).max(1.0) {
        return Err(Error::InvalidInput(format!(
            "{what}: matrix is not symmetric (asymmetry {asym:e})"
        )));
    }
    Ok(())
}

impl TimeSymmetricFamily {
    pub fn trig(n: usize, series: TrigSeries) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be >= 1".into()));
        }
        let dim = 2 * n;
        check_symmetric(&series.constant, dim, "constant coefficient")?;
        for (k, c) in series.cos.iter().chain(&series.sin) {
            if *k == 0 {
                return Err(Error::InvalidInput("oscillating coefficients need k >= 1".into()));
            }
            check_symmetric(c, dim, &format!("coefficient k={k}"))?;
        }
        let series = TrigSeries {
            constant: symmetrize(&series.constant),
            cos: series.cos.into_iter().map(|(k, c)| (k, symmetrize(&c))).collect(),
            sin: series.sin.into_iter().map(|(k, c)| (k, symmetrize(&c))).collect(),
        };
        Ok(Self {
            n,
            kind: Kind::Trig(series),
        })
    }

    pub fn constant(r: DMatrix<f64>) -> Result<Self> {
        if !r.nrows().is_multiple_of(2) || r.nrows() == 0 {
            return Err(Error::InvalidInput(
                "constant family needs an even, nonzero size".into(),
            ));
        }
        let n = r.nrows() / 2;
        Self::trig(
            n,
            TrigSeries {
                constant: r,
                cos: vec![],
                sin: vec![],
            },
        )
    }

    /// A family given by a closure. Values are symmetrized on evaluation.
    pub fn from_fn(n: usize, smoothness: Smoothness, f: MatrixFn) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be >= 1".into()));
        }
        if smoothness == Smoothness::TrigPolynomial {
            return Err(Error::InvalidInput(
                "closure families cannot claim trig-polynomial smoothness".into(),
            ));
        }
        let probe = f(0.0);
        check_symmetric(&probe, 2 * n, "R(0)")?;
        Ok(Self {
            n,
            kind: Kind::Function { f, smoothness },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn smoothness(&self) -> Smoothness {
        match &self.kind {
            Kind::Trig(_) => Smoothness::TrigPolynomial,
            Kind::Function { smoothness, .. } => *smoothness,
        }
    }

    pub fn as_trig(&self) -> Option<&TrigSeries> {
        match &self.kind {
            Kind::Trig(s) => Some(s),
            Kind::Function { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(&self.kind, Kind::Trig(s) if s.cos.is_empty() && s.sin.is_empty())
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match &self.kind {
            Kind::Trig(s) => s.eval(t),
            Kind::Function { f, .. } => symmetrize(&f(t)),
        }
    }

    /// The integral of R over [0, 1].
    pub fn mean(&self) -> DMatrix<f64> {
        match &self.kind {
            Kind::Trig(s) => s.constant.clone(),
            Kind::Function { smoothness, .. } => {
                let dim = 2 * self.n;
                let mut acc = DMatrix::zeros(dim, dim);
                match smoothness {
                    Smoothness::PeriodicSmooth => {
                        let m = 512;
                        for i in 0..m {
                            acc += self.eval(i as f64 / m as f64);
                        }
                        acc / m as f64
                    }
                    _ => {
                        // composite 3-point Gauss-Legendre
                        let nodes = [-(0.6_f64).sqrt(), 0.0, (0.6_f64).sqrt()];
                        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
                        let panels = 256;
                        let h = 1.0 / panels as f64;
                        for p in 0..panels {
                            let mid = (p as f64 + 0.5) * h;
                            for (x, w) in nodes.iter().zip(weights) {
                                acc += self.eval(mid + 0.5 * h * x) * (0.5 * h * w);
                            }
                        }
                        acc
                    }
                }
            }
        }
    }

    /// Sum of spectral norms of the Fourier coefficients (trig families), or a
    /// sampled bound of sup_t |R(t)| otherwise.
    pub fn coefficient_norm(&self) -> f64 {
        let spectral = |m: &DMatrix<f64>| m.clone().svd(false, false).singular_values.max();
        match &self.kind {
            Kind::Trig(s) => spectral(&s.constant) + s.cos.iter().chain(&s.sin).map(|(_, c)| spectral(c)).sum::<f64>(),
            Kind::Function { .. } => (0..=256)
                .map(|i| spectral(&self.eval(i as f64 / 256.0)))
                .fold(0.0, f64::max),
        }
    }

    /// t -> U^T R(t) U.
    pub fn conjugated(&self, u: &DMatrix<f64>) -> Result<Self> {
        let dim = 2 * self.n;
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::InvalidInput("conjugating matrix has wrong size".into()));
        }
        let conj = |m: &DMatrix<f64>| symmetrize(&(u.transpose() * m * u));
        match &self.kind {
            Kind::Trig(s) => Self::trig(
                self.n,
                TrigSeries {
                    constant: conj(&s.constant),
                    cos: s.cos.iter().map(|(k, c)| (*k, conj(c))).collect(),
                    sin: s.sin.iter().map(|(k, c)| (*k, conj(c))).collect(),
                },
            ),
            Kind::Function { f, smoothness } => {
                let f = f.clone();
                let u = u.clone();
                Self::from_fn(self.n, *smoothness, Arc::new(move |t| u.transpose() * f(t) * &u))
            }
        }
    }

    pub fn to_spec(&self) -> Option<FamilySpec> {
        let s = self.as_trig()?;
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        let mut coeffs = vec![(0_i64, rows(&s.constant))];
        coeffs.extend(s.cos.iter().map(|(k, c)| (*k as i64, rows(c))));
        coeffs.extend(s.sin.iter().map(|(k, c)| (-(*k as i64), rows(c))));
        Some(FamilySpec {
            n: self.n,
            kind: "trig".into(),
            coeffs,
        })
    }
}

/// JSON layout of a trig-polynomial family:
/// `{"n": 1, "kind": "trig", "coeffs": [[k, [[..], ..]], ...]}`.
///
/// An entry with k >= 0 is the coefficient of cos(2 pi k t) (k = 0 is the
/// constant term); an entry with k < 0 is the coefficient of sin(2 pi |k| t).
/// Repeated k are summed. Matrices are row-major nested arrays of size 2n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub n: usize,
    pub kind: String,
    pub coeffs: Vec<(i64, Vec<Vec<f64>>)>,
}

impl TryFrom<FamilySpec> for TimeSymmetricFamily {
    type Error = Error;

    fn try_from(spec: FamilySpec) -> Result<Self> {
        if spec.kind != "trig" {
            return Err(Error::InvalidInput(format!(
                "unsupported family kind {:?} (expected \"trig\")",
                spec.kind
            )));
        }
        let dim = 2 * spec.n;
        let mut constant = DMatrix::zeros(dim, dim);
        let mut cos: Vec<(usize, DMatrix<f64>)> = vec![];
        let mut sin: Vec<(usize, DMatrix<f64>)> = vec![];
        for (idx, (k, rows)) in spec.coeffs.iter().enumerate() {
            let m = matrix_from_rows(rows, &format!("coeffs[{idx}]"))?;
            check_symmetric(&m, dim, &format!("coeffs[{idx}]"))?;
            let target = match k.cmp(&0) {
                std::cmp::Ordering::Equal => {
                    constant += m;
                    continue;
                }
                std::cmp::Ordering::Greater => &mut cos,
                std::cmp::Ordering::Less => &mut sin,
            };
            let k = k.unsigned_abs() as usize;
            match target.iter_mut().find(|(kk, _)| *kk == k) {
                Some((_, c)) => *c += m,
                None => target.push((k, m)),
            }
        }
        cos.sort_by_key(|(k, _)| *k);
        sin.sort_by_key(|(k, _)| *k);
        Self::trig(spec.n, TrigSeries { constant, cos, sin })
    }
}
