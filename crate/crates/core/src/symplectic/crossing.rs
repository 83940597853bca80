use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{SymmetricForm, ZeroTol};
use crate::linalg::{kernel_basis, min_singular, singular_values, symmetrize};
use crate::par;
use crate::scalar::golden_min;

use super::family::TimeSymmetricFamily;
use super::path::{theorem3_path, Side, SymplecticPath};

/// Default threshold on sigma_min(Q(t) - I) for accepting a crossing.
pub const DEFAULT_DET_TOL: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const DEFAULT_STEPS: usize = 2048;

/// Two times closer than this are treated as the same crossing.
const TIME_MERGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub kernel_dim: usize,
    pub sigma_min: f64,
    pub at_junction: bool,
}

fn distance_to_identity(q: &DMatrix<f64>) -> f64 {
    let dim = q.nrows();
    min_singular(&(q - DMatrix::identity(dim, dim)))
}

fn kernel_tol(det_tol: f64, sigma: f64) -> f64 {
    det_tol.max(1e3 * sigma)
}

/// Times t in the path's interval where Q(t) - I is singular.
///
/// Every grid cell whose endpoint values of sigma_min(Q - I) are within the
/// Lipschitz bound |Q'| h of zero is searched by golden section, so
/// tangential crossings without a determinant sign change are also found.
/// A crossing is accepted when the refined sigma_min is at most `det_tol`.
pub fn crossing_times(path: &SymplecticPath, det_tol: f64) -> Result<Vec<Crossing>> {
    if !(det_tol > 0.0) {
        return Err(Error::InvalidInput("det_tol must be positive".into()));
    }
    let times = path.times();
    let mats = path.matrices();
    let sigma: Vec<f64> = par::map(mats, distance_to_identity);
    let cells: Vec<usize> = (0..times.len() - 1)
        .filter(|&i| {
            let h = times[i + 1] - times[i];
            let mid = 0.5 * (times[i] + times[i + 1]);
            let lip = 1.5 * path.generator_at(mid, Side::After).norm() * mats[i].norm().max(mats[i + 1].norm());
            sigma[i].max(sigma[i + 1]) <= lip * h + det_tol
        })
        .collect();

    let refined = par::map(&cells, |&i| -> Result<Option<(f64, f64)>> {
        let (a, b) = (times[i], times[i + 1]);
        let mut err = None;
        let (t, s) = golden_min(
            |t| match path.eval(t) {
                Ok(q) => distance_to_identity(&q),
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            },
            a,
            b,
            1e-13 * (1.0 + a.abs().max(b.abs())),
        );
        if let Some(e) = err {
            return Err(e);
        }
        Ok((s <= det_tol).then_some((t, s)))
    });
    let mut found: Vec<(f64, f64)> = refined
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    found.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (t, s) in found {
        match merged.last_mut() {
            Some(last) if t - last.0 <= TIME_MERGE => {
                if s < last.1 {
                    *last = (t, s);
                }
            }
            _ => merged.push((t, s)),
        }
    }

    let junction = path.junction();
    let mut out = Vec::with_capacity(merged.len());
    for (mut t, mut s) in merged {
        // snap to a grid point that is itself a crossing
        let k = times.partition_point(|&x| x < t);
        for idx in [k.saturating_sub(1), k.min(times.len() - 1)] {
            if (times[idx] - t).abs() <= TIME_MERGE && sigma[idx] <= s.max(det_tol) {
                t = times[idx];
                s = sigma[idx];
            }
        }
        if (t - path.start()).abs() <= TIME_MERGE || (t - path.end()).abs() <= TIME_MERGE {
            return Err(Error::EndpointCrossing { time: t });
        }
        let at_junction = junction.is_some_and(|j| (j.time - t).abs() <= TIME_MERGE);
        if at_junction {
            t = junction.unwrap().time;
        }
        let q = path.eval(t)?;
        let sv = singular_values(&(q - DMatrix::identity(2 * path.n(), 2 * path.n())));
        let tol = kernel_tol(det_tol, s);
        out.push(Crossing {
            time: t,
            kernel_dim: sv.iter().filter(|v| **v <= tol).count(),
            sigma_min: s,
            at_junction,
        });
    }
    Ok(out)
}

fn side_for(path: &SymplecticPath, t: f64) -> Side {
    match path.junction() {
        Some(j) if (j.time - t).abs() <= TIME_MERGE => j.main_side,
        _ => Side::After,
    }
}

/// The crossing form xi -> <xi, R(t) xi> on an orthonormal basis of
/// ker(Q(t) - I). At the junction of a prefixed path R is taken on the main
/// side.
pub fn crossing_form(path: &SymplecticPath, t_star: f64, det_tol: f64) -> Result<SymmetricForm> {
    let q = path.eval(t_star)?;
    let dim = 2 * path.n();
    let shifted = q - DMatrix::identity(dim, dim);
    let sigma_min = min_singular(&shifted);
    if sigma_min > det_tol {
        return Err(Error::NotACrossing {
            time: t_star,
            sigma_min,
        });
    }
    let basis = kernel_basis(&shifted, kernel_tol(det_tol, sigma_min));
    let r = path.generator_at(t_star, side_for(path, t_star));
    SymmetricForm::new(symmetrize(&(basis.transpose() * r * &basis)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingContribution {
    pub time: f64,
    pub kernel_dim: usize,
    pub signature: i64,
    pub at_junction: bool,
    /// Twice the contribution to the index.
    pub twice: i64,
}

/// A Maslov index stored as twice its value, so half-integers are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaslovIndex {
    pub twice: i64,
    pub crossings: Vec<CrossingContribution>,
}

impl MaslovIndex {
    pub fn as_f64(&self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn value(&self) -> Result<i64> {
        if self.twice % 2 != 0 {
            Err(Error::HalfIntegerResult { twice: self.twice })
        } else {
            Ok(self.twice / 2)
        }
    }
}

/// Intersection number of the path with the identity, by crossing forms.
///
/// Crossings in the open interval contribute the signature of their crossing
/// form; a crossing at the junction contributes half of it.
pub fn maslov_index(path: &SymplecticPath, det_tol: f64) -> Result<MaslovIndex> {
    let mats = path.matrices();
    for (t, q) in [(path.start(), &mats[0]), (path.end(), mats.last().unwrap())] {
        if distance_to_identity(q) <= det_tol {
            return Err(Error::DegenerateEndpoint { time: t });
        }
    }
    let crossings = crossing_times(path, det_tol).map_err(|e| match e {
        Error::EndpointCrossing { time } => Error::DegenerateEndpoint { time },
        other => other,
    })?;
    let mut twice = 0;
    let mut contributions = Vec::with_capacity(crossings.len());
    for c in crossings {
        let form = crossing_form(path, c.time, det_tol)?;
        let scale = form.matrix().norm().max(1.0);
        let inertia = form.inertia(ZeroTol::Absolute(1e-8 * scale))?;
        if inertia.n_zero > 0 {
            return Err(Error::DegenerateCrossing {
                time: c.time,
                kernel_dim: c.kernel_dim,
                nullity: inertia.n_zero,
            });
        }
        let sig = inertia.signature();
        let contribution = if c.at_junction { sig } else { 2 * sig };
        twice += contribution;
        contributions.push(CrossingContribution {
            time: c.time,
            kernel_dim: c.kernel_dim,
            signature: sig,
            at_junction: c.at_junction,
            twice: contribution,
        });
    }
    Ok(MaslovIndex {
        twice,
        crossings: contributions,
    })
}

/// mu(Phi_eps) for the family, with the given prefix length and step count.
pub fn index_maslov(family: &TimeSymmetricFamily, epsilon: f64, steps: usize) -> Result<i64> {
    index_maslov_report(family, epsilon, steps)?.value()
}

pub fn index_maslov_report(family: &TimeSymmetricFamily, epsilon: f64, steps: usize) -> Result<MaslovIndex> {
    let path = theorem3_path(family, epsilon, steps)?;
    maslov_index(&path, DEFAULT_DET_TOL)
}
