//! Step-two Carnot algebras given by pencils of skew operators, the
//! eigenvalue moduli alpha_j of A_omega, and the limiting Betti measures of
//! horizontal loops for dim W = 2.
//!
//! On the affine line of covectors with <omega, w> = 1 the functions
//! lambda_j are the alpha_j themselves and phi is their sum, which is half
//! the nuclear norm of A_omega and therefore convex along the line.

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::scalar::golden_min;

/// dim V, dim W and the skew generators A^(1)..A^(dim W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlgebraSpec", into = "AlgebraSpec")]
pub struct CarnotAlgebra {
    dim_v: usize,
    generators: Vec<DMatrix<f64>>,
}

/// JSON layout: `{"dimV": 4, "dimW": 2, "generators": [[[..], ..], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    pub generators: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<AlgebraSpec> for CarnotAlgebra {
    type Error = Error;
    fn try_from(spec: AlgebraSpec) -> Result<Self> {
        if spec.generators.len() != spec.dim_w {
            return Err(Error::InvalidInput(format!(
                "dimW is {} but {} generators were given",
                spec.dim_w,
                spec.generators.len()
            )));
        }
        let gens = spec
            .generators
            .iter()
            .enumerate()
            .map(|(i, rows)| crate::linalg::matrix_from_rows(rows, &format!("generators[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        CarnotAlgebra::new(spec.dim_v, gens)
    }
}

impl From<CarnotAlgebra> for AlgebraSpec {
    fn from(a: CarnotAlgebra) -> Self {
        AlgebraSpec {
            dim_v: a.dim_v,
            dim_w: a.generators.len(),
            generators: a
                .generators
                .iter()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
                .collect(),
        }
    }
}

impl CarnotAlgebra {
    pub fn new(dim_v: usize, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        if dim_v == 0 || generators.is_empty() {
            return Err(Error::InvalidInput("dimV and dimW must be >= 1".into()));
        }
        let mut out = Vec::with_capacity(generators.len());
        for (i, g) in generators.into_iter().enumerate() {
            if g.nrows() != dim_v || g.ncols() != dim_v {
                return Err(Error::InvalidInput(format!("generators[{i}] is not {dim_v}x{dim_v}")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("generators[{i}] has a non-finite entry")));
            }
            let asym = max_abs(&(&g + g.transpose()));
            if asym > 1e-12 * max_abs(&g).max(1.0) {
                return Err(Error::InvalidInput(format!("generators[{i}] is not skew-symmetric")));
            }
            out.push((&g - g.transpose()) * 0.5);
        }
        // omega -> A_omega must be injective
        let stacked = DMatrix::from_fn(dim_v * dim_v, out.len(), |r, c| out[c][(r % dim_v, r / dim_v)]);
        let sv = stacked.svd(false, false).singular_values;
        if sv.min() <= 1e-10 * sv.max().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidInput("generators are linearly dependent".into()));
        }
        Ok(Self { dim_v, generators: out })
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_w(&self) -> usize {
        self.generators.len()
    }

    /// m = floor(dim V / 2), the number of eigenvalue pairs.
    pub fn m(&self) -> usize {
        self.dim_v / 2
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn operator(&self, omega: &[f64]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dim_v, self.dim_v);
        for (w, g) in omega.iter().zip(&self.generators) {
            a += g * *w;
        }
        a
    }
}

/// 0 <= alpha_1 <= ... <= alpha_m with +-i alpha_j the eigenvalues of A_omega,
/// from the Hermitian matrix i A_omega.
pub fn alphas(algebra: &CarnotAlgebra, omega: &[f64]) -> Result<Vec<f64>> {
    if omega.len() != algebra.dim_w() || omega.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "omega must have {} finite entries",
            algebra.dim_w()
        )));
    }
    let a = algebra.operator(omega);
    let m = algebra.m();
    if max_abs(&a) == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let h = a.map(|v| Complex::new(0.0, v));
    let ev = h.symmetric_eigenvalues();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure {
            residual: f64::INFINITY,
        });
    }
    let mut ev: Vec<f64> = ev.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    let mut out: Vec<f64> = ev[..m].iter().map(|v| v.max(0.0)).collect();
    out.reverse();
    Ok(out)
}

/// The affine line omega(tau) = omega0 + tau * perp in W* with <omega0, w> = 1
/// and <perp, w> = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineParam {
    pub omega0: [f64; 2],
    pub perp: [f64; 2],
}

impl LineParam {
    /// omega0 = w / |w|^2, perp the unit vector w rotated by a quarter turn.
    pub fn standard(w: [f64; 2]) -> Result<Self> {
        let nn = w[0] * w[0] + w[1] * w[1];
        if nn == 0.0 || !nn.is_finite() {
            return Err(Error::ZeroEndpoint);
        }
        let norm = nn.sqrt();
        Ok(Self {
            omega0: [w[0] / nn, w[1] / nn],
            perp: [-w[1] / norm, w[0] / norm],
        })
    }

    pub fn at(&self, tau: f64) -> [f64; 2] {
        [self.omega0[0] + tau * self.perp[0], self.omega0[1] + tau * self.perp[1]]
    }
}

fn require_plane(algebra: &CarnotAlgebra) -> Result<()> {
    if algebra.dim_w() != 2 {
        return Err(Error::UnsupportedDimension { dim_w: algebra.dim_w() });
    }
    Ok(())
}

fn endpoint(w: &[f64]) -> Result<[f64; 2]> {
    match w {
        [a, b] if *a == 0.0 && *b == 0.0 => Err(Error::ZeroEndpoint),
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::InvalidInput("w must have 2 entries".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub tau: f64,
    pub lambdas: Vec<f64>,
    pub phi: f64,
}

fn sample_line(algebra: &CarnotAlgebra, line: &LineParam, taus: &[f64]) -> Result<Vec<LineSample>> {
    let out = crate::par::map(taus, |&tau| -> Result<LineSample> {
        let lambdas = alphas(algebra, &line.at(tau))?;
        let phi = lambdas.iter().sum();
        Ok(LineSample { tau, lambdas, phi })
    });
    out.into_iter().collect()
}

/// lambda_j^w and phi^w at the given parameters of the standard line.
pub fn line_samples(algebra: &CarnotAlgebra, w: &[f64], tau_grid: &[f64]) -> Result<Vec<LineSample>> {
    require_plane(algebra)?;
    let line = LineParam::standard(endpoint(w)?)?;
    if tau_grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidInput("tau grid must increase".into()));
    }
    sample_line(algebra, &line, tau_grid)
}

/// A positive measure on [0, inf): atoms plus a piecewise-constant density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure1D {
    /// (location, weight), sorted by location.
    pub atoms: Vec<(f64, f64)>,
    /// Sorted breakpoints b_0 < ... < b_K.
    pub breakpoints: Vec<f64>,
    /// density[i] on [b_i, b_{i+1}).
    pub density: Vec<f64>,
    /// The measure is only represented on [0, horizon]; the true measure may
    /// have infinite total mass.
    pub horizon: f64,
}

impl Measure1D {
    pub fn uniform(lo: f64, hi: f64, density: f64, horizon: f64) -> Self {
        Self {
            atoms: vec![],
            breakpoints: vec![lo, hi],
            density: vec![density],
            horizon,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|(x, _)| *x <= t).map(|(_, w)| w).sum();
        let mut dens = 0.0;
        for (i, d) in self.density.iter().enumerate() {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            if t <= a {
                break;
            }
            dens += d * (b.min(t) - a);
        }
        atoms + dens
    }

    /// Mass on [0, horizon].
    pub fn mass(&self) -> f64 {
        self.cdf(self.horizon)
    }

    /// Builds the measure from cells that each spread `mass` uniformly over
    /// [lo, hi] (an atom when lo == hi), clipped to [0, horizon].
    fn from_cells(cells: &[(f64, f64, f64)], horizon: f64) -> Self {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut events: Vec<(f64, f64)> = Vec::new();
        for &(lo, hi, mass) in cells {
            if mass <= 0.0 || lo > horizon {
                continue;
            }
            if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
                atoms.push((lo, mass));
                continue;
            }
            let d = mass / (hi - lo);
            events.push((lo, d));
            events.push((hi.min(horizon), -d));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        // sweep: the density on [x_i, x_{i+1}) is the running sum of jumps
        let mut breakpoints = Vec::new();
        let mut density = Vec::new();
        let mut running = 0.0;
        let mut i = 0;
        while i < events.len() {
            let x = events[i].0;
            while i < events.len() && events[i].0 == x {
                running += events[i].1;
                i += 1;
            }
            breakpoints.push(x);
            if i < events.len() {
                density.push(running.max(0.0));
            }
        }
        Self {
            atoms,
            breakpoints,
            density,
            horizon,
        }
    }
}

/// Largest |tau| explored when extending the line towards the horizon.
pub const TAU_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOptions {
    /// Report horizon T: measures are resolved on [0, T].
    pub horizon: f64,
    /// Initial number of grid cells on the tau range.
    pub grid: usize,
    /// Sup-norm CDF change between successive grid doublings that ends refinement.
    pub cdf_tol: f64,
    pub max_refinements: usize,
    /// Explicit tau range; by default the range is extended until phi
    /// exceeds the horizon plus a margin on both sides.
    pub tau_range: Option<(f64, f64)>,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            grid: 2048,
            cdf_tol: 1e-3,
            max_refinements: 8,
            tau_range: None,
        }
    }
}

struct Phi<'a> {
    algebra: &'a CarnotAlgebra,
    line: &'a LineParam,
}

impl Phi<'_> {
    fn at(&self, tau: f64) -> f64 {
        alphas(self.algebra, &self.line.at(tau)).map_or(f64::NAN, |a| a.iter().sum())
    }

    /// A bracket around the minimum of the convex function phi.
    fn bracket_min(&self, horizon: f64) -> Result<(f64, f64)> {
        let mut lo = -1.0;
        let mut hi = 1.0;
        let (f_lo, f_mid, f_hi) = (self.at(lo), self.at(0.0), self.at(hi));
        if f_hi < f_mid {
            let mut prev = f_mid;
            let mut x = hi;
            lo = 0.0;
            loop {
                let f = self.at(x);
                if f >= prev {
                    return Ok((lo, x));
                }
                lo = x / 2.0;
                prev = f;
                x *= 2.0;
                if x > TAU_CAP {
                    return Err(Error::HorizonTooSmall { horizon, cap: TAU_CAP });
                }
            }
        }
        if f_lo < f_mid {
            let mut prev = f_mid;
            let mut x = lo;
            hi = 0.0;
            loop {
                let f = self.at(x);
                if f >= prev {
                    return Ok((x, hi));
                }
                hi = x / 2.0;
                prev = f;
                x *= 2.0;
                if x < -TAU_CAP {
                    return Err(Error::HorizonTooSmall { horizon, cap: TAU_CAP });
                }
            }
        }
        Ok((lo, hi))
    }

    fn minimum(&self, horizon: f64) -> Result<(f64, f64)> {
        let (a, b) = self.bracket_min(horizon)?;
        Ok(golden_min(|t| self.at(t), a, b, 1e-11 * (1.0 + a.abs().max(b.abs()))))
    }

    /// First point from `start` in direction `dir` where phi exceeds `target`.
    fn extend(&self, start: f64, dir: f64, target: f64, horizon: f64) -> Result<f64> {
        let mut step = 1.0;
        loop {
            let tau = start + dir * step;
            if tau.abs() > TAU_CAP {
                return Err(Error::HorizonTooSmall { horizon, cap: TAU_CAP });
            }
            if self.at(tau) > target {
                return Ok(tau);
            }
            step *= 2.0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitMeasure {
    pub measure: Measure1D,
    pub tau_range: (f64, f64),
    pub grid: usize,
    /// Sup-norm CDF change at the last doubling.
    pub cdf_change: f64,
    pub converged: bool,
}

fn check_options(opts: &MeasureOptions) -> Result<()> {
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    if opts.grid < 2 || !(opts.cdf_tol > 0.0) {
        return Err(Error::InvalidInput("grid must be >= 2 and cdf_tol positive".into()));
    }
    Ok(())
}

fn resolve_range(phi: &Phi<'_>, opts: &MeasureOptions) -> Result<(f64, f64)> {
    let target = opts.horizon + 0.1 * opts.horizon.max(1.0);
    if let Some((lo, hi)) = opts.tau_range {
        if !(lo < hi) {
            return Err(Error::InvalidInput("tau range must be increasing".into()));
        }
        if phi.at(lo) <= opts.horizon || phi.at(hi) <= opts.horizon {
            return Err(Error::HorizonTooSmall {
                horizon: opts.horizon,
                cap: lo.abs().max(hi.abs()),
            });
        }
        return Ok((lo, hi));
    }
    // phi is convex, so beyond points past the minimum where it exceeds the
    // target it stays above the horizon
    let (tau_min, _) = phi.minimum(opts.horizon)?;
    let lo = phi.extend(tau_min, -1.0, target, opts.horizon)?;
    let hi = phi.extend(tau_min, 1.0, target, opts.horizon)?;
    Ok((lo, hi))
}

fn b_measure_on_grid(
    algebra: &CarnotAlgebra,
    line: &LineParam,
    range: (f64, f64),
    cells: usize,
    horizon: f64,
) -> Result<Measure1D> {
    let h = (range.1 - range.0) / cells as f64;
    let taus: Vec<f64> = (0..=cells).map(|i| range.0 + i as f64 * h).collect();
    let samples = sample_line(algebra, line, &taus)?;
    let cell_data: Vec<(f64, f64, f64)> = samples
        .windows(2)
        .map(|p| {
            let mass: f64 = p[0].lambdas.iter().zip(&p[1].lambdas).map(|(a, b)| (b - a).abs()).sum();
            (p[0].phi.min(p[1].phi), p[0].phi.max(p[1].phi), mass)
        })
        .collect();
    Ok(Measure1D::from_cells(&cell_data, horizon))
}

fn cdf_distance(a: &Measure1D, b: &Measure1D, horizon: f64) -> f64 {
    (0..=1000)
        .map(|k| {
            let t = horizon * k as f64 / 1000.0;
            (a.cdf(t) - b.cdf(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// The pushforward under phi of sum_j |d lambda_j|, on [0, horizon].
pub fn limit_measure_b_on(algebra: &CarnotAlgebra, line: &LineParam, opts: &MeasureOptions) -> Result<LimitMeasure> {
    require_plane(algebra)?;
    check_options(opts)?;
    let phi = Phi { algebra, line };
    let range = resolve_range(&phi, opts)?;
    let mut cells = opts.grid;
    let mut prev = b_measure_on_grid(algebra, line, range, cells, opts.horizon)?;
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_refinements {
        cells *= 2;
        let next = b_measure_on_grid(algebra, line, range, cells, opts.horizon)?;
        change = cdf_distance(&prev, &next, opts.horizon);
        prev = next;
        if change < opts.cdf_tol {
            break;
        }
    }
    let converged = change < opts.cdf_tol;
    if !converged {
        log::warn!("b-measure CDF still moved by {change:e} at {cells} cells");
    }
    Ok(LimitMeasure {
        measure: prev,
        tau_range: range,
        grid: cells,
        cdf_change: change,
        converged,
    })
}

pub fn limit_measure_b(algebra: &CarnotAlgebra, w: &[f64], opts: &MeasureOptions) -> Result<LimitMeasure> {
    require_plane(algebra)?;
    limit_measure_b_on(algebra, &LineParam::standard(endpoint(w)?)?, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RMeasure {
    pub measure: Measure1D,
    pub min_phi: f64,
    pub argmin_tau: f64,
}

/// Lebesgue measure on [0, min phi].
pub fn limit_measure_r_on(algebra: &CarnotAlgebra, line: &LineParam, opts: &MeasureOptions) -> Result<RMeasure> {
    require_plane(algebra)?;
    check_options(opts)?;
    let phi = Phi { algebra, line };
    let (argmin_tau, min_phi) = phi.minimum(opts.horizon)?;
    Ok(RMeasure {
        measure: Measure1D::uniform(0.0, min_phi, 1.0, opts.horizon),
        min_phi,
        argmin_tau,
    })
}

pub fn limit_measure_r(algebra: &CarnotAlgebra, w: &[f64], opts: &MeasureOptions) -> Result<RMeasure> {
    require_plane(algebra)?;
    limit_measure_r_on(algebra, &LineParam::standard(endpoint(w)?)?, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleSpectrum {
    pub simple: bool,
    pub witness: Option<Vec<f64>>,
    pub tried: usize,
}

/// Gap below which two alpha_j (or an alpha_j and zero) count as equal.
pub const SPECTRUM_GAP: f64 = 1e-8;

/// Samples omega on the unit sphere of W* until A_omega has pairwise
/// distinct nonzero alpha_j.
pub fn check_simple_spectrum(algebra: &CarnotAlgebra, samples: usize, seed: u64) -> Result<SimpleSpectrum> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for tried in 1..=samples {
        let v: Vec<f64> = (0..algebra.dim_w()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = DVector::from_column_slice(&v).norm();
        if norm == 0.0 {
            continue;
        }
        let omega: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let a = alphas(algebra, &omega)?;
        let simple = a.first().is_none_or(|x| *x > SPECTRUM_GAP) && a.windows(2).all(|p| p[1] - p[0] > SPECTRUM_GAP);
        if simple {
            return Ok(SimpleSpectrum {
                simple: true,
                witness: Some(omega),
                tried,
            });
        }
    }
    Ok(SimpleSpectrum {
        simple: false,
        witness: None,
        tried: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn rot() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    fn blocks(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(a);
        m.view_mut((2, 2), (2, 2)).copy_from(b);
        m
    }

    /// A1 = J + 0, A2 = 0 + J.
    fn commuting() -> CarnotAlgebra {
        let z = DMatrix::zeros(2, 2);
        CarnotAlgebra::new(4, vec![blocks(&rot(), &z), blocks(&z, &rot())]).unwrap()
    }

    fn random_algebra(seed: u64, dim_v: usize, dim_w: usize) -> CarnotAlgebra {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let gens = (0..dim_w)
            .map(|_| {
                let m = DMatrix::from_fn(dim_v, dim_v, |_, _| rng.gen_range(-1.0..1.0));
                (&m - m.transpose()) * 0.5
            })
            .collect();
        CarnotAlgebra::new(dim_v, gens).unwrap()
    }

    #[test]
    fn json_layout() {
        let json = r#"{"dimV":2,"dimW":1,"generators":[[[0,-1],[1,0]]]}"#;
        let a: CarnotAlgebra = serde_json::from_str(json).unwrap();
        assert_eq!((a.dim_v(), a.dim_w()), (2, 1));
        let dependent = r#"{"dimV":2,"dimW":2,"generators":[[[0,-1],[1,0]],[[0,-2],[2,0]]]}"#;
        assert!(serde_json::from_str::<CarnotAlgebra>(dependent).is_err());
        let sym = r#"{"dimV":2,"dimW":1,"generators":[[[0,1],[1,0]]]}"#;
        assert!(serde_json::from_str::<CarnotAlgebra>(sym).is_err());
    }

    #[test]
    fn block_rotations() {
        let alg = commuting();
        assert_eq!(alphas(&alg, &[3.0, 0.5]).unwrap(), vec![0.5, 3.0]);
        assert_eq!(alphas(&alg, &[-2.0, 1.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(alphas(&alg, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn odd_dimension_has_floor_half_pairs() {
        let alg = random_algebra(3, 5, 2);
        assert_eq!(alphas(&alg, &[0.3, 0.7]).unwrap().len(), 2);
    }

    #[test]
    fn matches_squared_operator_oracle() {
        let alg = random_algebra(11, 6, 2);
        let omega = [0.4, -1.3];
        let a = alg.operator(&omega);
        let mut sq: Vec<f64> = (-(&a * &a)).symmetric_eigenvalues().iter().copied().collect();
        sq.sort_by(f64::total_cmp);
        let al = alphas(&alg, &omega).unwrap();
        for (j, v) in al.iter().enumerate() {
            assert_relative_eq!(v * v, sq[2 * j], epsilon = 1e-10);
            assert_relative_eq!(v * v, sq[2 * j + 1], epsilon = 1e-10);
        }
    }

    #[test]
    fn line_samples_of_commuting_example() {
        let taus = [-2.0, -0.5, 0.0, 0.5, 2.0];
        let s = line_samples(&commuting(), &[1.0, 0.0], &taus).unwrap();
        for (p, tau) in s.iter().zip(taus) {
            let mut expect = [1.0, f64::abs(tau)];
            expect.sort_by(f64::total_cmp);
            assert_relative_eq!(p.lambdas[0], expect[0], epsilon = 1e-12);
            assert_relative_eq!(p.lambdas[1], expect[1], epsilon = 1e-12);
            assert_relative_eq!(p.phi, 1.0 + tau.abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_w_divides_lambdas() {
        let alg = random_algebra(5, 6, 2);
        let w = [0.7, -0.2];
        let taus = [-1.0, 0.3, 2.0];
        let c = 3.0;
        let base = line_samples(&alg, &w, &taus.map(|t| c * t)).unwrap();
        let scaled = line_samples(&alg, &w.map(|x| c * x), &taus).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            assert_relative_eq!(s.phi, b.phi / c, epsilon = 1e-12);
        }
    }

    #[test]
    fn lambdas_are_lipschitz_under_refinement() {
        let alg = random_algebra(8, 6, 2);
        let lip = |n: usize| {
            let taus: Vec<f64> = (0..=n).map(|i| -3.0 + 6.0 * i as f64 / n as f64).collect();
            let s = line_samples(&alg, &[1.0, 0.5], &taus).unwrap();
            s.windows(2)
                .flat_map(|p| {
                    p[0].lambdas
                        .iter()
                        .zip(&p[1].lambdas)
                        .map(|(a, b)| (b - a).abs() * n as f64 / 6.0)
                        .collect::<Vec<_>>()
                })
                .fold(0.0, f64::max)
        };
        let (l1, l2, l3) = (lip(200), lip(400), lip(800));
        assert!(l2 <= 1.01 * l1 + 1e-9 && l3 <= 1.01 * l2 + 1e-9, "{l1} {l2} {l3}");
    }

    #[test]
    fn b_measure_of_commuting_example() {
        let lm = limit_measure_b(&commuting(), &[1.0, 0.0], &MeasureOptions::default()).unwrap();
        assert!(lm.converged);
        for t in [0.0, 0.5, 1.0, 1.5, 2.2, 3.0] {
            let expect = 2.0 * f64::max(t - 1.0, 0.0);
            assert!(
                (lm.measure.cdf(t) - expect).abs() < 1e-3,
                "t {t}: {}",
                lm.measure.cdf(t)
            );
        }
    }

    #[test]
    fn b_measure_scaling_covariance() {
        let alg = random_algebra(21, 4, 2);
        let w = [0.6, 0.9];
        let opts = MeasureOptions {
            horizon: 8.0,
            ..Default::default()
        };
        let base = limit_measure_b(&alg, &w, &opts).unwrap();
        for c in [2.0, 5.0] {
            let scaled = limit_measure_b(
                &alg,
                &w.map(|x| c * x),
                &MeasureOptions {
                    horizon: 8.0 / c,
                    ..Default::default()
                },
            )
            .unwrap();
            for k in 0..=20 {
                let t = 8.0 / c * k as f64 / 20.0;
                let lhs = scaled.measure.cdf(t);
                let rhs = base.measure.cdf(c * t) / c;
                assert!((lhs - rhs).abs() < 2e-3, "c {c} t {t}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn b_measure_is_parameterization_independent() {
        let alg = random_algebra(31, 6, 2);
        let w = [1.0, 0.4];
        let std_line = LineParam::standard(w).unwrap();
        let alt = LineParam {
            omega0: std_line.at(0.3),
            perp: [2.0 * std_line.perp[0], 2.0 * std_line.perp[1]],
        };
        let opts = MeasureOptions {
            horizon: 6.0,
            ..Default::default()
        };
        let a = limit_measure_b_on(&alg, &std_line, &opts).unwrap();
        let b = limit_measure_b_on(&alg, &alt, &opts).unwrap();
        assert!(cdf_distance(&a.measure, &b.measure, 6.0) < 2e-3);
        let ra = limit_measure_r_on(&alg, &std_line, &opts).unwrap();
        let rb = limit_measure_r_on(&alg, &alt, &opts).unwrap();
        assert_relative_eq!(ra.min_phi, rb.min_phi, epsilon = 1e-8);
    }

    #[test]
    fn b_measure_cdf_is_monotone() {
        let alg = random_algebra(41, 6, 2);
        let lm = limit_measure_b(
            &alg,
            &[0.3, 1.0],
            &MeasureOptions {
                horizon: 5.0,
                ..Default::default()
            },
        )
        .unwrap();
        let mut prev = 0.0;
        for k in 0..=500 {
            let v = lm.measure.cdf(5.0 * k as f64 / 500.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn r_measure_of_commuting_example() {
        let opts = MeasureOptions::default();
        for w in [[1.0, 0.0], [0.0, 1.0]] {
            let r = limit_measure_r(&commuting(), &w, &opts).unwrap();
            assert!((r.min_phi - 1.0).abs() < 1e-8);
            assert!((r.measure.mass() - r.min_phi).abs() < 1e-12);
            assert!((r.measure.cdf(0.5) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sorted_branches_have_the_same_total_variation() {
        // natural labels (1, |tau|) cross at |tau| = 1; sorted labels swap there
        let taus: Vec<f64> = (0..=3000).map(|i| -3.0 + 6.0 * i as f64 / 3000.0).collect();
        let s = line_samples(&commuting(), &[1.0, 0.0], &taus).unwrap();
        let sorted_tv: f64 = s
            .windows(2)
            .map(|p| {
                p[0].lambdas
                    .iter()
                    .zip(&p[1].lambdas)
                    .map(|(a, b)| (b - a).abs())
                    .sum::<f64>()
            })
            .sum();
        let natural_tv: f64 = taus.windows(2).map(|p| (p[1].abs() - p[0].abs()).abs()).sum();
        assert_relative_eq!(sorted_tv, natural_tv, epsilon = 1e-9);
    }

    #[test]
    fn errors() {
        let alg3 = random_algebra(1, 4, 3);
        assert!(matches!(
            limit_measure_b(&alg3, &[1.0, 0.0], &MeasureOptions::default()),
            Err(Error::UnsupportedDimension { dim_w: 3 })
        ));
        assert!(matches!(
            limit_measure_r(&commuting(), &[0.0, 0.0], &MeasureOptions::default()),
            Err(Error::ZeroEndpoint)
        ));
        let huge = MeasureOptions {
            horizon: 1e9,
            ..Default::default()
        };
        assert!(matches!(
            limit_measure_b(&commuting(), &[1.0, 0.0], &huge),
            Err(Error::HorizonTooSmall { .. })
        ));
    }

    #[test]
    fn simple_spectrum_witness() {
        let r = check_simple_spectrum(&commuting(), 20, 7).unwrap();
        assert!(r.simple);
        let a = alphas(&commuting(), r.witness.as_ref().unwrap()).unwrap();
        assert!(a[1] - a[0] > SPECTRUM_GAP && a[0] > SPECTRUM_GAP);
        // left multiplication by unit quaternions: every alpha pair is degenerate
        let li = DMatrix::from_fn(4, 4, |r, c| match (r, c) {
            (1, 0) | (3, 2) => 1.0,
            (0, 1) | (2, 3) => -1.0,
            _ => 0.0,
        });
        let lj = DMatrix::from_fn(4, 4, |r, c| match (r, c) {
            (2, 0) | (1, 3) => 1.0,
            (3, 1) | (0, 2) => -1.0,
            _ => 0.0,
        });
        let quat = CarnotAlgebra::new(4, vec![li, lj]).unwrap();
        let r = check_simple_spectrum(&quat, 50, 1).unwrap();
        assert!(!r.simple && r.witness.is_none() && r.tried == 50);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn alphas_are_homogeneous(seed in 0u64..100, c in -4.0..4.0f64, x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let alg = random_algebra(seed, 6, 2);
            let a = alphas(&alg, &[x, y]).unwrap();
            let b = alphas(&alg, &[c * x, c * y]).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((c.abs() * u - v).abs() < 1e-10);
            }
        }

        #[test]
        fn frobenius_identity(seed in 0u64..100, x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let alg = random_algebra(seed, 7, 2);
            let a = alphas(&alg, &[x, y]).unwrap();
            let lhs: f64 = a.iter().map(|v| v * v).sum();
            prop_assert!((lhs - 0.5 * alg.operator(&[x, y]).norm_squared()).abs() < 1e-10);
        }
    }
}
