//! Orbit inventories and the Morse inequalities on the torus.
//!
//! The inequalities compare alternating partial sums of Betti numbers with
//! alternating counts of orbits graded by their index. The index of an orbit
//! is centred at zero (a nondegenerate minimum of a small autonomous h has
//! index n, a maximum -n), while homology degrees run from 0 to 2n, so orbits
//! enter in degree index + `degree_shift`, with shift n by default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{index_galerkin, GalerkinOptions};
use crate::symplectic::{index_maslov, DEFAULT_EPSILON, DEFAULT_STEPS};
use crate::torus::{
    find_periodic_orbits, hessian_family, is_nondegenerate, OrbitSearch, PeriodicOrbit, TorusHamiltonian,
};

/// Betti numbers C(2n, j), j = 0..=2n, of the 2n-torus (over any field).
pub fn betti_torus(n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let d = 2 * n as u64;
    let mut out = vec![1_u64];
    for j in 1..=d {
        let prev = *out.last().unwrap();
        out.push(prev * (d - j + 1) / j);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryEntry {
    pub q0: Vec<f64>,
    pub index: i64,
    /// Galerkin index of the same orbit, when computed.
    pub index_crosscheck: Option<i64>,
    pub residual: f64,
    pub det_monodromy: f64,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitInventory {
    pub orbits: Vec<InventoryEntry>,
    pub betti: Vec<u64>,
    /// Coefficient field of the Betti numbers. Torus Betti numbers do not
    /// depend on it.
    pub field_tag: String,
    pub degree_shift: i64,
}

impl OrbitInventory {
    /// An inventory of nondegenerate fictitious orbits with the given indices
    /// on the 2n-torus.
    pub fn from_indices(n: usize, indices: &[i64]) -> Result<Self> {
        Ok(Self {
            orbits: indices
                .iter()
                .map(|&index| InventoryEntry {
                    q0: vec![],
                    index,
                    index_crosscheck: None,
                    residual: 0.0,
                    det_monodromy: f64::NAN,
                    nondegenerate: true,
                })
                .collect(),
            betti: betti_torus(n)?,
            field_tag: "Q".into(),
            degree_shift: n as i64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inequality {
    pub k: i64,
    pub lhs: i64,
    pub rhs: i64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseCheck {
    pub inequalities: Vec<Inequality>,
    /// sum (-1)^j beta_j
    pub euler_betti: i64,
    /// sum over orbits of (-1)^degree
    pub euler_orbits: i64,
    pub euler_ok: bool,
    pub all_ok: bool,
}

fn sign(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Evaluates sum_{j <= k} (-1)^{k-j} beta_j <= sum_{deg(g) <= k} (-1)^{k - deg(g)}
/// for every k where either side can change, and the Euler characteristic
/// equality both sides reach for large k.
pub fn check_morse_inequalities(inv: &OrbitInventory) -> Result<MorseCheck> {
    if let Some(i) = inv.orbits.iter().position(|o| !o.nondegenerate) {
        return Err(Error::DegenerateOrbitPresent { orbit: i });
    }
    let degrees: Vec<i64> = inv.orbits.iter().map(|o| o.index + inv.degree_shift).collect();
    let top = inv.betti.len() as i64 - 1;
    let lo = degrees.iter().copied().min().unwrap_or(0).min(0) - 1;
    let hi = degrees.iter().copied().max().unwrap_or(0).max(top) + 1;
    let inequalities = (lo..=hi)
        .map(|k| {
            let lhs = inv
                .betti
                .iter()
                .enumerate()
                .filter(|(j, _)| *j as i64 <= k)
                .map(|(j, b)| sign(k - j as i64) * *b as i64)
                .sum();
            let rhs = degrees.iter().filter(|d| **d <= k).map(|d| sign(k - d)).sum();
            Inequality {
                k,
                lhs,
                rhs,
                ok: lhs <= rhs,
            }
        })
        .collect::<Vec<_>>();
    let euler_betti = inv
        .betti
        .iter()
        .enumerate()
        .map(|(j, b)| sign(j as i64) * *b as i64)
        .sum();
    let euler_orbits = degrees.iter().map(|d| sign(*d)).sum();
    let euler_ok = euler_betti == euler_orbits;
    Ok(MorseCheck {
        all_ok: euler_ok && inequalities.iter().all(|i| i.ok),
        inequalities,
        euler_betti,
        euler_orbits,
        euler_ok,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseOptions {
    pub search: OrbitSearch,
    pub epsilon: f64,
    pub path_steps: usize,
    /// Galerkin cross-check of every index; `None` skips it.
    pub galerkin: Option<GalerkinOptions>,
    pub nondegeneracy_tol: f64,
}

impl Default for MorseOptions {
    fn default() -> Self {
        Self {
            search: OrbitSearch::default(),
            epsilon: DEFAULT_EPSILON,
            path_steps: DEFAULT_STEPS,
            galerkin: Some(GalerkinOptions {
                cutoffs: vec![8, 16, 32, 64],
                ..Default::default()
            }),
            nondegeneracy_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub inventory: OrbitInventory,
    pub check: MorseCheck,
    /// True when every computed Galerkin cross-check matched.
    pub crosscheck_ok: bool,
}

fn index_orbit(h: &TorusHamiltonian, orbit: &PeriodicOrbit, opts: &MorseOptions) -> Result<InventoryEntry> {
    let nondegenerate = is_nondegenerate(orbit, opts.nondegeneracy_tol);
    if !nondegenerate {
        return Err(Error::DegenerateOrbitPresent { orbit: 0 });
    }
    let family = hessian_family(h, orbit)?;
    let index = index_maslov(&family, opts.epsilon, opts.path_steps)?;
    let index_crosscheck = match &opts.galerkin {
        Some(g) => Some(index_galerkin(&family, g)?.value),
        None => None,
    };
    Ok(InventoryEntry {
        q0: orbit.q0.iter().copied().collect(),
        index,
        index_crosscheck,
        residual: orbit.residual,
        det_monodromy: orbit.det_monodromy_minus_identity(),
        nondegenerate,
    })
}

/// Finds the contractible 1-periodic orbits, indexes each one and checks the
/// Morse inequalities against the torus Betti numbers.
pub fn morse_report(h: &TorusHamiltonian, opts: &MorseOptions) -> Result<MorseReport> {
    let orbits = find_periodic_orbits(h, &opts.search)?;
    let entries = crate::par::map_range(orbits.len(), |i| {
        index_orbit(h, &orbits[i], opts).map_err(|e| {
            let source = match e {
                Error::DegenerateOrbitPresent { .. } => Error::DegenerateOrbitPresent { orbit: i },
                other => other,
            };
            Error::AtOrbit {
                orbit: i,
                q0: orbits[i].q0.iter().copied().collect(),
                source: Box::new(source),
            }
        })
    });
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let crosscheck_ok = entries.iter().all(|e| e.index_crosscheck.is_none_or(|g| g == e.index));
    for (i, e) in entries.iter().enumerate() {
        if let Some(g) = e.index_crosscheck.filter(|g| *g != e.index) {
            log::warn!("orbit {i}: Maslov index {} but Galerkin index {g}", e.index);
        }
    }
    let inventory = OrbitInventory {
        orbits: entries,
        betti: betti_torus(h.n())?,
        field_tag: "Q".into(),
        degree_shift: h.n() as i64,
    };
    let check = check_morse_inequalities(&inventory)?;
    Ok(MorseReport {
        inventory,
        check,
        crosscheck_ok,
    })
}
