//! Brouwer degree of normalized sphere maps x -> F(x)/|F(x)| with
//! F = id + phi for a finite-rank phi, and its stability under
//! zero-extension to larger ambient spaces.
//!
//! Preimages of a regular value y are the solutions (x, s) of
//! F(x) = s y, |x|^2 = 1, s > 0, found by multistart Newton. Each
//! preimage contributes sign det[y, DF(x) v_1, .., DF(x) v_{d-1}] where
//! (x, v_1, .., v_{d-1}) is a positive orthonormal basis.

use nalgebra::{DMatrix, DVector};
use std::ops::AddAssign;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Coordinatewise smooth primitives allowed in a map term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prim", rename_all = "snake_case")]
pub enum Primitive {
    Id,
    Pow { p: u32 },
    Sin,
    Cos,
    Tanh,
    Exp,
}

impl Primitive {
    fn eval(self, x: f64) -> (f64, f64) {
        match self {
            Primitive::Id => (x, 1.0),
            Primitive::Pow { p: 0 } => (1.0, 0.0),
            Primitive::Pow { p } => (x.powi(p as i32), p as f64 * x.powi(p as i32 - 1)),
            Primitive::Sin => (x.sin(), x.cos()),
            Primitive::Cos => (x.cos(), -x.sin()),
            Primitive::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            Primitive::Exp => (x.exp(), x.exp()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub var: usize,
    #[serde(flatten)]
    pub prim: Primitive,
}

/// `coef * prod_k prim_k(x[var_k])`, added to output coordinate `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub out: usize,
    pub coef: f64,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

/// phi: R^ambient_dim -> R^range_dim, embedded in the first range_dim
/// coordinates. The affine part is `linear x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapSpec", into = "MapSpec")]
pub struct FiniteRankMap {
    ambient_dim: usize,
    range_dim: usize,
    linear: Option<DMatrix<f64>>,
    offset: Option<DVector<f64>>,
    terms: Vec<Term>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub ambient_dim: usize,
    pub range_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl TryFrom<MapSpec> for FiniteRankMap {
    type Error = Error;
    fn try_from(spec: MapSpec) -> Result<Self> {
        let linear = match spec.linear {
            Some(rows) => {
                let m = crate::linalg::matrix_from_rows(&rows, "linear")?;
                if m.shape() != (spec.range_dim, spec.ambient_dim) {
                    return Err(Error::InvalidInput(format!(
                        "linear part must be {}x{}, got {}x{}",
                        spec.range_dim,
                        spec.ambient_dim,
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Some(m)
            }
            None => None,
        };
        let offset = match spec.offset {
            Some(v) if v.len() != spec.range_dim => {
                return Err(Error::InvalidInput(format!(
                    "offset must have length {}",
                    spec.range_dim
                )))
            }
            Some(v) => Some(DVector::from_vec(v)),
            None => None,
        };
        FiniteRankMap::new(spec.ambient_dim, spec.range_dim, linear, offset, spec.terms)
    }
}

impl From<FiniteRankMap> for MapSpec {
    fn from(m: FiniteRankMap) -> Self {
        MapSpec {
            ambient_dim: m.ambient_dim,
            range_dim: m.range_dim,
            linear: m
                .linear
                .map(|l| l.row_iter().map(|r| r.iter().copied().collect()).collect()),
            offset: m.offset.map(|o| o.iter().copied().collect()),
            terms: m.terms,
        }
    }
}

impl FiniteRankMap {
    pub fn new(
        ambient_dim: usize,
        range_dim: usize,
        linear: Option<DMatrix<f64>>,
        offset: Option<DVector<f64>>,
        terms: Vec<Term>,
    ) -> Result<Self> {
        if ambient_dim == 0 || range_dim > ambient_dim {
            return Err(Error::InvalidInput(format!(
                "need 0 < range_dim <= ambient_dim, got {range_dim} and {ambient_dim}"
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.out >= range_dim {
                return Err(Error::InvalidInput(format!(
                    "terms[{i}].out = {} is outside the range",
                    t.out
                )));
            }
            if !t.coef.is_finite() {
                return Err(Error::InvalidInput(format!("terms[{i}].coef is not finite")));
            }
            if let Some(f) = t.factors.iter().find(|f| f.var >= ambient_dim) {
                return Err(Error::InvalidInput(format!(
                    "terms[{i}] uses variable {} outside the domain",
                    f.var
                )));
            }
        }
        if linear.as_ref().is_some_and(|l| l.iter().any(|v| !v.is_finite()))
            || offset.as_ref().is_some_and(|o| o.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidInput("affine part must be finite".into()));
        }
        Ok(Self {
            ambient_dim,
            range_dim,
            linear,
            offset,
            terms,
        })
    }

    /// phi = 0, so the sphere map is the identity.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, dim, None, None, Vec::new())
    }

    /// phi(x) = c x.
    pub fn scalar(dim: usize, c: f64) -> Result<Self> {
        Self::new(dim, dim, Some(DMatrix::identity(dim, dim) * c), None, Vec::new())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn range_dim(&self) -> usize {
        self.range_dim
    }

    pub fn linear(&self) -> Option<&DMatrix<f64>> {
        self.linear.as_ref()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest variable index the map reads, plus one.
    pub fn support_dim(&self) -> usize {
        let from_terms = self
            .terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|f| f.var + 1))
            .max()
            .unwrap_or(0);
        let from_linear = self
            .linear
            .as_ref()
            .and_then(|l| {
                (0..l.ncols())
                    .rev()
                    .find(|&c| l.column(c).iter().any(|v| *v != 0.0))
                    .map(|c| c + 1)
            })
            .unwrap_or(0);
        from_terms.max(from_linear).max(self.range_dim)
    }

    /// The same phi on R^dim, extended by zero on new coordinates.
    pub fn with_ambient_dim(&self, dim: usize) -> Result<Self> {
        if dim < self.support_dim() {
            return Err(Error::InvalidInput(format!(
                "ambient dim {dim} is below the support dimension {}",
                self.support_dim()
            )));
        }
        let linear = self.linear.as_ref().map(|l| {
            let mut m = DMatrix::zeros(self.range_dim, dim);
            let c = l.ncols().min(dim);
            m.columns_mut(0, c).copy_from(&l.columns(0, c));
            m
        });
        Self::new(dim, self.range_dim, linear, self.offset.clone(), self.terms.clone())
    }

    /// (1 - t) a + t b on the common ambient space.
    pub fn blend(a: &Self, b: &Self, t: f64) -> Result<Self> {
        let dim = a.ambient_dim.max(b.ambient_dim);
        let range = a.range_dim.max(b.range_dim);
        let (a, b) = (a.with_ambient_dim(dim)?, b.with_ambient_dim(dim)?);
        let pad = |m: &Self, w: f64| -> (DMatrix<f64>, DVector<f64>) {
            let mut l = DMatrix::zeros(range, dim);
            if let Some(ml) = &m.linear {
                l.rows_mut(0, m.range_dim).copy_from(ml);
            }
            let mut o = DVector::zeros(range);
            if let Some(mo) = &m.offset {
                o.rows_mut(0, m.range_dim).copy_from(mo);
            }
            (l * w, o * w)
        };
        let (la, oa) = pad(&a, 1.0 - t);
        let (lb, ob) = pad(&b, t);
        let terms = (a.terms.iter().map(|term| (term, 1.0 - t)))
            .chain(b.terms.iter().map(|term| (term, t)))
            .map(|(term, w)| Term {
                coef: term.coef * w,
                ..term.clone()
            })
            .collect();
        Self::new(dim, range, Some(la + lb), Some(oa + ob), terms)
    }

    /// phi(x) and its Jacobian, both range_dim x ambient_dim.
    pub fn phi(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mut v = DVector::zeros(self.range_dim);
        let mut jac = DMatrix::zeros(self.range_dim, self.ambient_dim);
        if let Some(l) = &self.linear {
            v += l * x;
            jac += l;
        }
        if let Some(o) = &self.offset {
            v += o;
        }
        for t in &self.terms {
            let parts: Vec<(f64, f64)> = t.factors.iter().map(|f| f.prim.eval(x[f.var])).collect();
            v[t.out] += t.coef * parts.iter().map(|p| p.0).product::<f64>();
            for (k, f) in t.factors.iter().enumerate() {
                let others: f64 = parts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, p)| p.0)
                    .product();
                jac[(t.out, f.var)] += t.coef * parts[k].1 * others;
            }
        }
        (v, jac)
    }
}

/// A map F: R^d -> R^d, nonvanishing on the unit sphere, standing for the
/// sphere self-map x -> F(x)/|F(x)|.
pub trait SphereMap: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

impl SphereMap for FiniteRankMap {
    fn dim(&self) -> usize {
        self.ambient_dim
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut f = x.clone();
        let (p, _) = self.phi(x);
        f.rows_mut(0, self.range_dim).add_assign(&p);
        f
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::identity(self.ambient_dim, self.ambient_dim);
        let (_, dp) = self.phi(x);
        j.rows_mut(0, self.range_dim).add_assign(&dp);
        j
    }
}

/// `outer` after `inner`, both read as sphere maps.
pub struct Compose<'a> {
    pub outer: &'a dyn SphereMap,
    pub inner: &'a dyn SphereMap,
}

impl SphereMap for Compose<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        self.outer.value(&self.inner.value(x).normalize())
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let v = self.inner.value(x);
        let r = v.norm();
        let u = &v / r;
        let proj = (DMatrix::identity(v.len(), v.len()) - &u * u.transpose()) / r;
        self.outer.jacobian(&u) * proj * self.inner.jacobian(x)
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

/// Smallest |F(x)| over `samples` random points of the sphere.
pub fn min_norm_on_sphere(map: &dyn SphereMap, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<DVector<f64>> = (0..samples).map(|_| random_unit(&mut rng, map.dim())).collect();
    par::map(&pts, |x| map.value(x).norm())
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeOptions {
    /// Number of distinct regular values whose preimage counts are compared.
    pub values: usize,
    /// Random values tried before giving up on finding a regular one.
    pub regular_value_trials: usize,
    /// Newton starts per batch.
    pub starts: usize,
    /// Further batches are run until one finds no new preimage.
    pub max_batches: usize,
    pub seed: u64,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        Self {
            values: 3,
            regular_value_trials: 20,
            starts: 256,
            max_batches: 4,
            seed: 0,
        }
    }
}

/// Preimages closer than this are the same point.
pub const PREIMAGE_MERGE: f64 = 1e-7;
/// Smallest singular value of the normalized tangent map at a preimage
/// below which the value counts as critical.
pub const REGULARITY_TOL: f64 = 1e-6;
/// Sample count for the |F| > 0 check on the sphere.
pub const NONVANISHING_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub x: Vec<f64>,
    pub sign: i64,
    /// Newton starts that converged here.
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub y: Vec<f64>,
    pub degree: i64,
    pub preimages: Vec<Preimage>,
    /// The last batch found no new preimage and every preimage was hit twice.
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// All regular values agree and every preimage set is certified.
    Certified,
    /// All regular values agree; some preimage sets were not certified.
    Consistent,
    /// A strict majority of regular values agree.
    Majority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeResult {
    pub degree: i64,
    pub confidence: Confidence,
    pub values: Vec<ValueReport>,
}

/// Newton for F(x) = s y, |x|^2 = 1 from one start.
fn newton_preimage(map: &dyn SphereMap, y: &DVector<f64>, x0: &DVector<f64>) -> Option<DVector<f64>> {
    let d = map.dim();
    let residual = |x: &DVector<f64>, s: f64| -> DVector<f64> {
        let mut g = DVector::zeros(d + 1);
        g.rows_mut(0, d).copy_from(&(map.value(x) - y * s));
        g[d] = 0.5 * (x.norm_squared() - 1.0);
        g
    };
    let mut x = x0.clone();
    let mut s = map.value(&x).dot(y).max(0.1);
    let mut g = residual(&x, s);
    for _ in 0..80 {
        let gn = g.norm();
        if gn < 1e-13 {
            break;
        }
        let mut jac = DMatrix::zeros(d + 1, d + 1);
        jac.view_mut((0, 0), (d, d)).copy_from(&map.jacobian(&x));
        jac.view_mut((0, d), (d, 1)).copy_from(&(-y));
        jac.view_mut((d, 0), (1, d)).copy_from(&x.transpose());
        let step = jac.lu().solve(&(-&g))?;
        let mut lambda = 1.0;
        loop {
            let xn = &x + step.rows(0, d) * lambda;
            let sn = s + step[d] * lambda;
            let gn_new = residual(&xn, sn);
            if gn_new.norm() < gn || lambda < 1e-4 {
                x = xn;
                s = sn;
                g = gn_new;
                break;
            }
            lambda *= 0.5;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let scale = 1.0 + map.value(&x).norm();
    (g.norm() < 1e-10 * scale && s > 0.0).then(|| x.normalize())
}

/// Orthonormal basis of x^perp with det[x, V] > 0.
fn tangent_frame(x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let skip = x.iamax();
    let mut cols: Vec<DVector<f64>> = vec![x.clone()];
    for i in (0..d).filter(|&i| i != skip) {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        for c in &cols {
            v -= c * c.dot(&v);
        }
        cols.push(v.normalize());
    }
    let mut frame = DMatrix::from_columns(&cols);
    if frame.determinant() < 0.0 {
        let mut last = frame.column_mut(d - 1);
        last.neg_mut();
    }
    frame.columns(1, d - 1).into_owned()
}

/// Local degree sign at a preimage, or None when y is critical there.
fn local_sign(map: &dyn SphereMap, y: &DVector<f64>, x: &DVector<f64>) -> Option<i64> {
    let d = map.dim();
    let v = tangent_frame(x);
    let f = map.value(x);
    let dfv = map.jacobian(x) * &v;
    let proj = (DMatrix::identity(d, d) - y * y.transpose()) * &dfv / f.norm();
    let smin = proj.svd(false, false).singular_values.min();
    if smin < REGULARITY_TOL {
        return None;
    }
    let mut m = DMatrix::zeros(d, d);
    m.set_column(0, y);
    m.columns_mut(1, d - 1).copy_from(&dfv);
    Some(if m.determinant() > 0.0 { 1 } else { -1 })
}

fn merge_into(found: &mut Vec<(DVector<f64>, usize)>, x: DVector<f64>) -> bool {
    if let Some(entry) = found.iter_mut().find(|(p, _)| (p - &x).norm() < PREIMAGE_MERGE) {
        entry.1 += 1;
        false
    } else {
        found.push((x, 1));
        true
    }
}

/// All preimages of y found by batched multistart Newton, sorted
/// lexicographically, with the certification flag.
pub fn preimages(
    map: &dyn SphereMap,
    y: &DVector<f64>,
    opts: &DegreeOptions,
    rng: &mut ChaCha8Rng,
) -> (Vec<(DVector<f64>, usize)>, bool) {
    let mut found: Vec<(DVector<f64>, usize)> = Vec::new();
    let mut certified = false;
    for batch in 0..opts.max_batches.max(1) {
        let starts: Vec<DVector<f64>> = (0..opts.starts).map(|_| random_unit(rng, map.dim())).collect();
        let sols = par::map(&starts, |x0| newton_preimage(map, y, x0));
        let mut new = false;
        for x in sols.into_iter().flatten() {
            new |= merge_into(&mut found, x);
        }
        if batch > 0 && !new {
            certified = found.iter().all(|(_, hits)| *hits >= 2);
            break;
        }
    }
    found.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    (found, certified)
}

/// Brouwer degree of x -> F(x)/|F(x)| on the unit sphere of R^d, d >= 2.
pub fn sphere_degree(map: &dyn SphereMap, opts: &DegreeOptions) -> Result<DegreeResult> {
    let d = map.dim();
    if d < 2 {
        return Err(Error::InvalidInput("sphere degree needs ambient dim >= 2".into()));
    }
    if opts.values == 0 || opts.starts == 0 {
        return Err(Error::InvalidInput("values and starts must be positive".into()));
    }
    let min_norm = min_norm_on_sphere(map, NONVANISHING_SAMPLES, opts.seed ^ 0x5eed);
    if !(min_norm > 1e-9) {
        return Err(Error::DegenerateProblem(format!(
            "|x + phi(x)| reaches {min_norm:e} on the sphere"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reports = Vec::new();
    for _ in 0..opts.regular_value_trials {
        if reports.len() == opts.values {
            break;
        }
        let y = random_unit(&mut rng, d);
        let (found, certified) = preimages(map, &y, opts, &mut rng);
        let signs: Option<Vec<i64>> = found.iter().map(|(x, _)| local_sign(map, &y, x)).collect();
        let Some(signs) = signs else {
            log::debug!("value {y:?} is critical; drawing another");
            continue;
        };
        reports.push(ValueReport {
            y: y.iter().copied().collect(),
            degree: signs.iter().sum(),
            preimages: found
                .iter()
                .zip(&signs)
                .map(|((x, hits), s)| Preimage {
                    x: x.iter().copied().collect(),
                    sign: *s,
                    hits: *hits,
                })
                .collect(),
            certified,
        });
    }
    if reports.is_empty() {
        return Err(Error::RegularValueNotFound {
            trials: opts.regular_value_trials,
        });
    }
    let estimates: Vec<i64> = reports.iter().map(|r| r.degree).collect();
    let mut counts: Vec<(i64, usize)> = Vec::new();
    for e in &estimates {
        match counts.iter_mut().find(|(v, _)| v == e) {
            Some(c) => c.1 += 1,
            None => counts.push((*e, 1)),
        }
    }
    let (degree, votes) = counts
        .iter()
        .copied()
        .max_by_key(|(v, c)| (*c, -v.abs()))
        .expect("nonempty");
    let confidence = if votes == estimates.len() {
        if reports.iter().all(|r| r.certified) {
            Confidence::Certified
        } else {
            Confidence::Consistent
        }
    } else if 2 * votes > estimates.len() {
        Confidence::Majority
    } else {
        return Err(Error::PreimageIncomplete { estimates });
    };
    if confidence != Confidence::Certified {
        log::warn!("degree {degree} reported with {confidence:?} confidence; estimates {estimates:?}");
    }
    Ok(DegreeResult {
        degree,
        confidence,
        values: reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimDegree {
    pub dim: usize,
    pub degree: i64,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsDegree {
    pub degree: i64,
    pub confidence: Confidence,
    pub per_dim: Vec<DimDegree>,
}

/// Sphere degrees of phi zero-extended to each ambient dimension; they
/// must all coincide.
pub fn ls_degree(map: &FiniteRankMap, dims: &[usize], opts: &DegreeOptions) -> Result<LsDegree> {
    if dims.is_empty() || dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("dims must be a nonempty increasing list".into()));
    }
    let mut per_dim = Vec::with_capacity(dims.len());
    for &dim in dims {
        let r = sphere_degree(&map.with_ambient_dim(dim)?, opts)?;
        per_dim.push(DimDegree {
            dim,
            degree: r.degree,
            confidence: r.confidence,
        });
    }
    if per_dim.iter().any(|p| p.degree != per_dim[0].degree) {
        return Err(Error::Instability {
            per_dim: per_dim.iter().map(|p| (p.dim, p.degree)).collect(),
        });
    }
    let confidence = per_dim
        .iter()
        .map(|p| p.confidence)
        .max_by_key(|c| match c {
            Confidence::Certified => 0,
            Confidence::Consistent => 1,
            Confidence::Majority => 2,
        })
        .expect("nonempty");
    Ok(LsDegree {
        degree: per_dim[0].degree,
        confidence,
        per_dim,
    })
}

/// phi for z -> z^k on the circle, written through Re and Im of
/// (x + iy)^k, minus the identity.
pub fn circle_power(k: u32) -> Result<FiniteRankMap> {
    let mut terms = Vec::new();
    for j in 0..=k {
        // binom(k, j) x^(k-j) (iy)^j
        let binom = (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
        let (out, sign) = match j % 4 {
            0 => (0, 1.0),
            1 => (1, 1.0),
            2 => (0, -1.0),
            _ => (1, -1.0),
        };
        terms.push(Term {
            out,
            coef: sign * binom,
            factors: vec![
                Factor {
                    var: 0,
                    prim: Primitive::Pow { p: k - j },
                },
                Factor {
                    var: 1,
                    prim: Primitive::Pow { p: j },
                },
            ],
        });
    }
    FiniteRankMap::new(2, 2, Some(-DMatrix::identity(2, 2)), None, terms)
}
