use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{SymmetricForm, ZeroTol};
use crate::linalg::{symmetric_eigenvalues, symmetrize};
use crate::par;
use crate::scalar::{bisect, golden_min};

use super::family::TimeSymmetricFamily;

/// Eigenvalues within this distance of 1 span K_t.
const EIGEN_ONE_TOL: f64 = 1e-7;
const TIME_MERGE: f64 = 1e-9;
/// Candidates closer than this are one crossing: a tangential touch is only
/// located to about the square root of machine precision.
const CANDIDATE_MERGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOneCrossing {
    pub time: f64,
    pub dim: usize,
    pub signature: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Report {
    /// 2 sum sgn(Rbar_t|K_t) + sgn(R_0) + sgn(int R).
    pub twice: i64,
    pub interior: Vec<EigenOneCrossing>,
    pub sgn_r0: i64,
    /// Nullity of R_0; a positive value is reported, not rejected.
    pub r0_nullity: usize,
    pub sgn_mean: i64,
}

impl Corollary1Report {
    pub fn value(&self) -> Result<i64> {
        if self.twice % 2 != 0 {
            Err(Error::HalfIntegerResult { twice: self.twice })
        } else {
            Ok(self.twice / 2)
        }
    }
}

fn scaled_tol(m: &DMatrix<f64>) -> ZeroTol {
    ZeroTol::Absolute(1e-9 * m.amax().max(1.0))
}

/// Closed-form index: sum over 0 < t < 1 of sgn(Rbar_t|K_t) plus half of
/// sgn(R_0) + sgn(int_0^1 R), where K_t is the eigenvalue-1 eigenspace of R_t
/// and Rbar_t(xi) = <R_t xi, xi>.
pub fn index_corollary1(family: &TimeSymmetricFamily, grid: usize) -> Result<i64> {
    index_corollary1_report(family, grid)?.value()
}

pub fn index_corollary1_report(family: &TimeSymmetricFamily, grid: usize) -> Result<Corollary1Report> {
    if grid < 8 {
        return Err(Error::InvalidInput("grid must be >= 8".into()));
    }
    let dim = 2 * family.n();
    let mean = family.mean();
    let mean_form = SymmetricForm::new(mean.clone())?;
    let mean_inertia = mean_form.inertia(scaled_tol(&mean))?;
    if mean_inertia.n_zero > 0 {
        let ev = symmetric_eigenvalues(&mean)?;
        return Err(Error::DegenerateMeanHessian {
            min_abs_eig: ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs())),
        });
    }
    let r0 = family.eval(0.0);
    let r0_inertia = SymmetricForm::new(r0.clone())?.inertia(scaled_tol(&r0))?;

    let h = 1.0 / grid as f64;
    let ts: Vec<f64> = (0..=grid).map(|i| i as f64 * h).collect();
    let spectra = par::map(&ts, |&t| symmetric_eigenvalues(&family.eval(t)));
    let spectra = spectra.into_iter().collect::<Result<Vec<_>>>()?;
    let branch =
        |j: usize, t: f64| -> f64 { symmetric_eigenvalues(&family.eval(t)).map_or(f64::NAN, |ev| ev[j] - 1.0) };

    let mut candidates = Vec::new();
    for j in 0..dim {
        let g: Vec<f64> = spectra.iter().map(|ev| ev[j] - 1.0).collect();
        for i in 0..grid {
            if g[i] == 0.0 {
                candidates.push(ts[i]);
            } else if g[i] * g[i + 1] < 0.0 {
                candidates.push(bisect(|t| branch(j, t), ts[i], ts[i + 1], 1e-13));
            }
        }
        // touches of 1 without a sign change
        for i in 1..grid {
            let local_min = g[i].abs() <= g[i - 1].abs() && g[i].abs() <= g[i + 1].abs();
            let slope = (g[i + 1] - g[i]).abs().max((g[i] - g[i - 1]).abs());
            if local_min && g[i].abs() <= 2.0 * slope {
                let (t, v) = golden_min(|t| branch(j, t).abs(), ts[i - 1], ts[i + 1], 1e-13);
                if v <= 1e-9 {
                    candidates.push(t);
                }
            }
        }
    }
    candidates.retain(|t| *t > TIME_MERGE && *t < 1.0 - TIME_MERGE);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= CANDIDATE_MERGE);

    let mut interior = Vec::with_capacity(candidates.len());
    let mut twice = 0;
    for t in candidates {
        let r = family.eval(t);
        let eig = r.clone().symmetric_eigen();
        let cols: Vec<_> = (0..dim)
            .filter(|&k| (eig.eigenvalues[k] - 1.0).abs() <= EIGEN_ONE_TOL)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        if cols.is_empty() {
            continue;
        }
        let basis = DMatrix::from_columns(&cols);
        let restricted = SymmetricForm::new(symmetrize(&(basis.transpose() * &r * &basis)))?;
        let inertia = restricted.inertia(scaled_tol(&r))?;
        if inertia.n_zero > 0 {
            return Err(Error::RegularityFailure { time: t });
        }
        twice += 2 * inertia.signature();
        interior.push(EigenOneCrossing {
            time: t,
            dim: cols.len(),
            signature: inertia.signature(),
        });
    }
    twice += r0_inertia.signature() + mean_inertia.signature();
    Ok(Corollary1Report {
        twice,
        interior,
        sgn_r0: r0_inertia.signature(),
        r0_nullity: r0_inertia.n_zero,
        sgn_mean: mean_inertia.signature(),
    })
}
