//! Fourier-Galerkin truncations of the second variation of the action on
//! H^{1/2}(S^1; C^n) and the index obtained from their signatures.
//!
//! The real basis is e_{k,j}(t) = exp(2 pi k t J) e_j for |k| <= N and
//! j = 1..2n, which is orthonormal in L^2. Blocks are ordered by mode
//! k = -N, ..., N, so negative modes come first, then the constants, then
//! positive modes. In this basis the kinetic part is diagonal with blocks
//! 2 pi k I, and the potential part couples modes through
//! C(q) = int R_c(t) exp(2 pi q t J) dt and A(q) = int R_a(t) exp(2 pi q t J) dt,
//! where R_c and R_a are the J-linear and J-antilinear parts of R.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{relative_signature, RelativeSignature, SymmetricForm, TruncationFamily, ZeroTol};
use crate::linalg::{complex_structure, max_abs, symmetrize};
use crate::symplectic::{Smoothness, TimeSymmetricFamily, TrigSeries};

use std::f64::consts::PI;

pub const DEFAULT_CUTOFFS: [usize; 5] = [8, 16, 32, 64, 128];
pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// Mode layout of span{exp(2 pi k t J) e_j : |k| <= N}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierTruncation {
    pub n: usize,
    pub cutoff: usize,
}

impl FourierTruncation {
    pub fn new(n: usize, cutoff: usize) -> Result<Self> {
        if n == 0 || cutoff == 0 {
            return Err(Error::InvalidInput("n and the cutoff must be >= 1".into()));
        }
        Ok(Self { n, cutoff })
    }

    pub fn dim(&self) -> usize {
        2 * self.n * (2 * self.cutoff + 1)
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let c = self.cutoff as i64;
        -c..=c
    }

    /// Row offset of the block of mode k.
    pub fn offset(&self, k: i64) -> usize {
        (k + self.cutoff as i64) as usize * 2 * self.n
    }

    pub fn constant_block(&self) -> std::ops::Range<usize> {
        let o = self.offset(0);
        o..o + 2 * self.n
    }

    /// The involution xi(t) -> xi(-t), which swaps the blocks of k and -k.
    pub fn reversal_matrix(&self) -> DMatrix<f64> {
        let d = 2 * self.n;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for k in self.modes() {
            let (r, c) = (self.offset(-k), self.offset(k));
            m.view_mut((r, c), (d, d)).fill_with_identity();
        }
        m
    }

    /// Basis function e_{k,j} evaluated at t.
    pub fn basis_value(&self, k: i64, j: usize, t: f64) -> nalgebra::DVector<f64> {
        let rot = (complex_structure(self.n) * (2.0 * PI * k as f64 * t)).exp();
        rot.column(j).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledPair {
    pub cutoff: usize,
    /// Kinetic form: diagonal, 2 pi k on mode k, zero on the constants.
    pub a0: SymmetricForm,
    /// A0 minus the L^2 mass form of R.
    pub ah: SymmetricForm,
    /// Quadrature error estimate; `None` for exact trig assembly.
    pub quadrature_error: Option<f64>,
}

impl AssembledPair {
    /// Dense text dump, one `i j a0 ah` line per nonzero entry (1-based).
    pub fn to_dense_text(&self) -> String {
        let dim = self.a0.dim();
        let mut out = format!("%% cutoff {}\n{dim} {dim}\n", self.cutoff);
        for j in 0..dim {
            for i in 0..dim {
                let (a, b) = (self.a0.matrix()[(i, j)], self.ah.matrix()[(i, j)]);
                if a != 0.0 || b != 0.0 {
                    out.push_str(&format!("{} {} {a:e} {b:e}\n", i + 1, j + 1));
                }
            }
        }
        out
    }
}

/// C(q) and A(q) for q = -2N..=2N, indexed by q + 2N.
struct Couplings {
    c: Vec<DMatrix<f64>>,
    a: Vec<DMatrix<f64>>,
}

fn split_parts(r: &DMatrix<f64>, j: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let jrj = j * r * j;
    ((r - &jrj) * 0.5, (r + jrj) * 0.5)
}

fn exact_couplings(series: &TrigSeries, n: usize, cutoff: usize) -> Couplings {
    let d = 2 * n;
    let j = complex_structure(n);
    let qmax = 2 * cutoff as i64;
    let len = (2 * qmax + 1) as usize;
    let mut c = vec![DMatrix::zeros(d, d); len];
    let mut a = vec![DMatrix::zeros(d, d); len];
    let idx = |q: i64| (q + qmax) as usize;
    let (rc, ra) = split_parts(&series.constant, &j);
    c[idx(0)] += rc;
    a[idx(0)] += ra;
    // int cos(2 pi p t) exp(2 pi q t J) = (delta_{q,p} + delta_{q,-p}) / 2
    for (p, m) in &series.cos {
        let p = *p as i64;
        if p > qmax {
            continue;
        }
        let (rc, ra) = split_parts(m, &j);
        for q in [p, -p] {
            c[idx(q)] += &rc * 0.5;
            a[idx(q)] += &ra * 0.5;
        }
    }
    // int sin(2 pi p t) exp(2 pi q t J) = (delta_{q,p} - delta_{q,-p}) J / 2
    for (p, m) in &series.sin {
        let p = *p as i64;
        if p > qmax {
            continue;
        }
        let (rc, ra) = split_parts(m, &j);
        let (rcj, raj) = (&rc * &j * 0.5, &ra * &j * 0.5);
        c[idx(p)] += &rcj;
        c[idx(-p)] -= &rcj;
        a[idx(p)] += &raj;
        a[idx(-p)] -= &raj;
    }
    Couplings { c, a }
}

fn sampled_couplings(family: &TimeSymmetricFamily, cutoff: usize, samples: usize) -> Couplings {
    let n = family.n();
    let d = 2 * n;
    let j = complex_structure(n);
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match family.smoothness() {
        Smoothness::Continuous => {
            let g = [-(0.6_f64).sqrt(), 0.0, (0.6_f64).sqrt()];
            let w = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
            let h = 1.0 / samples as f64;
            (0..samples)
                .flat_map(|p| (0..3).map(move |i| ((p as f64 + 0.5) * h + 0.5 * h * g[i], 0.5 * h * w[i])))
                .unzip()
        }
        _ => (0..samples)
            .map(|s| (s as f64 / samples as f64, 1.0 / samples as f64))
            .unzip(),
    };
    let parts: Vec<(DMatrix<f64>, DMatrix<f64>)> = crate::par::map(&nodes, |&t| split_parts(&family.eval(t), &j));
    let qmax = 2 * cutoff as i64;
    let per_q = crate::par::map_range((2 * qmax + 1) as usize, |i| {
        let q = i as i64 - qmax;
        let mut cc = DMatrix::zeros(d, d);
        let mut cs = DMatrix::zeros(d, d);
        let mut ac = DMatrix::zeros(d, d);
        let mut as_ = DMatrix::zeros(d, d);
        for ((t, w), (rc, ra)) in nodes.iter().zip(&weights).zip(&parts) {
            let (s, co) = (2.0 * PI * q as f64 * t).sin_cos();
            cc += rc * (w * co);
            cs += rc * (w * s);
            ac += ra * (w * co);
            as_ += ra * (w * s);
        }
        (cc + cs * &j, ac + as_ * &j)
    });
    let (c, a) = per_q.into_iter().unzip();
    Couplings { c, a }
}

fn couplings_distance(x: &Couplings, y: &Couplings) -> f64 {
    x.c.iter()
        .zip(&y.c)
        .chain(x.a.iter().zip(&y.a))
        .map(|(p, q)| max_abs(&(p - q)))
        .fold(0.0, f64::max)
}

fn couplings(family: &TimeSymmetricFamily, cutoff: usize, quadrature_tol: f64) -> Result<(Couplings, Option<f64>)> {
    if let Some(series) = family.as_trig() {
        return Ok((exact_couplings(series, family.n(), cutoff), None));
    }
    let mut samples = (8 * cutoff).max(256);
    let mut coarse = sampled_couplings(family, cutoff, samples);
    loop {
        samples *= 2;
        let fine = sampled_couplings(family, cutoff, samples);
        let estimate = couplings_distance(&coarse, &fine);
        if estimate <= quadrature_tol {
            return Ok((fine, Some(estimate)));
        }
        if samples >= 1 << 15 {
            log::warn!("assembly quadrature error estimate {estimate:e}");
            return Err(Error::QuadratureWarning { estimate });
        }
        coarse = fine;
    }
}

/// The L^2 mass form int <R xi, eta> dt on the truncation.
fn mass_matrix(tr: &FourierTruncation, cp: &Couplings) -> DMatrix<f64> {
    let d = 2 * tr.n;
    let qmax = 2 * tr.cutoff as i64;
    let mut m = DMatrix::zeros(tr.dim(), tr.dim());
    for k in tr.modes() {
        for l in tr.modes() {
            let block = &cp.c[(l - k + qmax) as usize] + &cp.a[(k + l + qmax) as usize];
            m.view_mut((tr.offset(k), tr.offset(l)), (d, d)).copy_from(&block);
        }
    }
    m
}

fn kinetic_diagonal(tr: &FourierTruncation) -> Vec<f64> {
    tr.modes()
        .flat_map(|k| std::iter::repeat_n(2.0 * PI * k as f64, 2 * tr.n))
        .collect()
}

/// Truncations of the kinetic form and of the second variation at cutoff N.
pub fn assemble(family: &TimeSymmetricFamily, cutoff: usize) -> Result<AssembledPair> {
    assemble_with_tol(family, cutoff, DEFAULT_QUADRATURE_TOL)
}

pub fn assemble_with_tol(family: &TimeSymmetricFamily, cutoff: usize, quadrature_tol: f64) -> Result<AssembledPair> {
    let tr = FourierTruncation::new(family.n(), cutoff)?;
    let (cp, quadrature_error) = couplings(family, cutoff, quadrature_tol)?;
    let mass = mass_matrix(&tr, &cp);
    let a0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(kinetic_diagonal(&tr)));
    let ah = symmetrize(&(&a0 - mass));
    Ok(AssembledPair {
        cutoff,
        a0: SymmetricForm::from_symmetric_unchecked(a0),
        ah: SymmetricForm::from_symmetric_unchecked(ah),
        quadrature_error,
    })
}

/// The kinetic form with the constant block removed: blocks 2 pi k I, k != 0.
pub fn kinetic_without_constants(n: usize, cutoff: usize) -> Result<SymmetricForm> {
    let tr = FourierTruncation::new(n, cutoff)?;
    let diag: Vec<f64> = tr
        .modes()
        .filter(|k| *k != 0)
        .flat_map(|k| std::iter::repeat_n(2.0 * PI * k as f64, 2 * n))
        .collect();
    SymmetricForm::from_diagonal(&diag)
}

struct SecondVariation<'a> {
    family: &'a TimeSymmetricFamily,
    quadrature_tol: f64,
}

impl TruncationFamily for SecondVariation<'_> {
    fn assemble(&self, cutoff: usize) -> Result<SymmetricForm> {
        Ok(assemble_with_tol(self.family, cutoff, self.quadrature_tol)?.ah)
    }
}

struct Kinetic(usize);

impl TruncationFamily for Kinetic {
    fn assemble(&self, cutoff: usize) -> Result<SymmetricForm> {
        kinetic_without_constants(self.0, cutoff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinOptions {
    pub cutoffs: Vec<usize>,
    pub zero_tol: ZeroTol,
    pub window: usize,
    pub quadrature_tol: f64,
}

impl Default for GalerkinOptions {
    fn default() -> Self {
        Self {
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            zero_tol: ZeroTol::Auto,
            window: DEFAULT_WINDOW,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinIndex {
    pub value: i64,
    pub relative: RelativeSignature,
}

/// Half the stabilized signature drop from the kinetic form (constants
/// excluded) to the second variation.
pub fn index_galerkin(family: &TimeSymmetricFamily, opts: &GalerkinOptions) -> Result<GalerkinIndex> {
    let ah = SecondVariation {
        family,
        quadrature_tol: opts.quadrature_tol,
    };
    let a0 = Kinetic(family.n());
    let window = opts.window.min(opts.cutoffs.len());
    let relative = relative_signature(&ah, &a0, &opts.cutoffs, opts.zero_tol, window)?;
    if relative.value % 2 != 0 {
        return Err(Error::OddDifference {
            difference: relative.value,
        });
    }
    Ok(GalerkinIndex {
        value: relative.value / 2,
        relative,
    })
}

/// b_q(xi, eta) = int sigma(xi, eta') dt on the truncation, by trapezoid
/// quadrature of the basis functions (exact for these trig polynomials).
pub fn assemble_bq(n: usize, cutoff: usize) -> Result<SymmetricForm> {
    let tr = FourierTruncation::new(n, cutoff)?;
    let j = complex_structure(n);
    let samples = 4 * cutoff + 4;
    let dim = tr.dim();
    let mut b = DMatrix::zeros(dim, dim);
    for s in 0..samples {
        let t = s as f64 / samples as f64;
        // columns: basis values and derivatives at t
        let mut vals = DMatrix::zeros(2 * n, dim);
        let mut ders = DMatrix::zeros(2 * n, dim);
        for k in tr.modes() {
            let rot = (&j * (2.0 * PI * k as f64 * t)).exp();
            let o = tr.offset(k);
            vals.view_mut((0, o), (2 * n, 2 * n)).copy_from(&rot);
            ders.view_mut((0, o), (2 * n, 2 * n))
                .copy_from(&(&j * &rot * (2.0 * PI * k as f64)));
        }
        // sigma(x, y) = <J x, y>
        b += (&j * &vals).transpose() * ders / samples as f64;
    }
    SymmetricForm::new(symmetrize(&b))
}

/// Kernel dimension of b_q on the truncation; 2n means only constants.
pub fn bq_kernel_dimension(n: usize, cutoff: usize) -> Result<usize> {
    let b = assemble_bq(n, cutoff)?;
    Ok(b.inertia(ZeroTol::Absolute(1e-8))?.n_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{index_maslov, MatrixFn};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn scalar(a: f64) -> TimeSymmetricFamily {
        TimeSymmetricFamily::constant(DMatrix::identity(2, 2) * a).unwrap()
    }

    fn random_trig(seed: u64, n: usize, scale: f64) -> TimeSymmetricFamily {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * n;
        let mut sym = || symmetrize(&DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0))) * scale;
        let series = TrigSeries {
            constant: sym(),
            cos: vec![(1, sym()), (2, sym() * 0.5)],
            sin: vec![(1, sym())],
        };
        TimeSymmetricFamily::trig(n, series).unwrap()
    }

    #[test]
    fn zero_family_is_kinetic_diagonal() {
        let p = assemble(&scalar(0.0), 2).unwrap();
        let expect = [-4.0, -4.0, -2.0, -2.0, 0.0, 0.0, 2.0, 2.0, 4.0, 4.0].map(|v| v * PI);
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&expect));
        assert_eq!(p.a0.matrix(), &d);
        assert_eq!(p.ah.matrix(), &d);
    }

    #[test]
    fn constant_scalar_shift() {
        let p = assemble(&scalar(1.5), 3).unwrap();
        let diff = p.a0.matrix() - p.ah.matrix();
        assert!(max_abs(&(diff - DMatrix::identity(14, 14) * 1.5)) < 1e-15);
    }

    #[test]
    fn cosine_couples_neighbouring_modes_by_half() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]) * 2.0;
        let series = TrigSeries {
            constant: DMatrix::zeros(2, 2),
            cos: vec![(1, s.clone())],
            sin: vec![],
        };
        let fam = TimeSymmetricFamily::trig(1, series).unwrap();
        let tr = FourierTruncation::new(1, 2).unwrap();
        let p = assemble(&fam, 2).unwrap();
        let mass = p.a0.matrix() - p.ah.matrix();
        for k in tr.modes() {
            for l in tr.modes() {
                let block = mass.view((tr.offset(k), tr.offset(l)), (2, 2)).into_owned();
                let expected = if (k - l).abs() == 1 {
                    &s * 0.5
                } else {
                    DMatrix::zeros(2, 2)
                };
                assert!(max_abs(&(block - expected)) < 1e-15, "k {k} l {l}");
            }
        }
    }

    /// Brute-force oracle: int <R(t) e_{k,i}(t), e_{l,j}(t)> dt by trapezoid.
    fn brute_mass(fam: &TimeSymmetricFamily, cutoff: usize) -> DMatrix<f64> {
        let tr = FourierTruncation::new(fam.n(), cutoff).unwrap();
        let d = 2 * fam.n();
        let samples = 64 * cutoff + 64;
        let mut m = DMatrix::zeros(tr.dim(), tr.dim());
        for s in 0..samples {
            let t = s as f64 / samples as f64;
            let r = fam.eval(t);
            let mut basis = DMatrix::zeros(d, tr.dim());
            for k in tr.modes() {
                for jj in 0..d {
                    basis.set_column(tr.offset(k) + jj, &tr.basis_value(k, jj, t));
                }
            }
            m += basis.transpose() * r * &basis / samples as f64;
        }
        m
    }

    #[test]
    fn exact_assembly_matches_brute_force_quadrature() {
        for (seed, n) in [(1, 1), (2, 2)] {
            let fam = random_trig(seed, n, 1.0);
            let p = assemble(&fam, 4).unwrap();
            let mass = p.a0.matrix() - p.ah.matrix();
            assert!(max_abs(&(mass - brute_mass(&fam, 4))) < 1e-12);
        }
    }

    #[test]
    fn sampled_assembly_matches_exact() {
        let fam = random_trig(7, 2, 1.0);
        let wrapped = {
            let f = fam.clone();
            let func: MatrixFn = Arc::new(move |t| f.eval(t));
            TimeSymmetricFamily::from_fn(2, Smoothness::PeriodicSmooth, func).unwrap()
        };
        let exact = assemble(&fam, 8).unwrap();
        let sampled = assemble(&wrapped, 8).unwrap();
        assert!(sampled.quadrature_error.unwrap() <= DEFAULT_QUADRATURE_TOL);
        assert!(max_abs(&(exact.ah.matrix() - sampled.ah.matrix())) < 1e-12);
    }

    #[test]
    fn kinetic_form_is_odd_under_reversal_and_balanced() {
        let tr = FourierTruncation::new(2, 5).unwrap();
        let fam = TimeSymmetricFamily::constant(DMatrix::zeros(4, 4)).unwrap();
        let a0 = assemble(&fam, 5).unwrap().a0;
        let m = tr.reversal_matrix();
        assert!(max_abs(&(m.transpose() * a0.matrix() * &m + a0.matrix())) == 0.0);
        let off = kinetic_without_constants(2, 5).unwrap().inertia(ZeroTol::Auto).unwrap();
        assert_eq!(off.n_plus, off.n_minus);
        assert_eq!(off.n_zero, 0);
    }

    #[test]
    fn scalar_index_by_hand_count() {
        // blocks (2 pi k - a) I: only k = 0 flips sign for 0 < a < 2 pi
        let opts = GalerkinOptions {
            cutoffs: vec![4, 8, 16],
            ..Default::default()
        };
        assert_eq!(index_galerkin(&scalar(1.0), &opts).unwrap().value, 1);
        assert_eq!(index_galerkin(&scalar(-1.0), &opts).unwrap().value, -1);
        // 2 pi < a < 4 pi flips k = 0 and k = 1
        assert_eq!(index_galerkin(&scalar(2.0 * PI + 1.0), &opts).unwrap().value, 3);
        assert_eq!(
            index_galerkin(&scalar(0.0), &opts).unwrap_err().kind(),
            "NoStabilization"
        );
    }

    #[test]
    fn bq_kernel_is_the_constants() {
        assert_eq!(bq_kernel_dimension(1, 1).unwrap(), 2);
        assert_eq!(bq_kernel_dimension(2, 3).unwrap(), 4);
        // constants are in the kernel
        let b = assemble_bq(2, 3).unwrap();
        let tr = FourierTruncation::new(2, 3).unwrap();
        for j in tr.constant_block() {
            let mut v = DVector::zeros(tr.dim());
            v[j] = 1.0;
            assert!((b.matrix() * v).amax() < 1e-10);
        }
    }

    #[test]
    fn bq_matches_explicit_diagonal() {
        // b_q(e_{k,i}, e_{l,j}) = 2 pi l delta_{kl} delta_{ij}
        let b = assemble_bq(1, 1).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_row_slice(&[-1.0, -1.0, 0.0, 0.0, 1.0, 1.0])) * (2.0 * PI);
        assert!(max_abs(&(b.matrix() - expect)) < 1e-12);
    }

    #[test]
    fn agrees_with_maslov_on_random_families() {
        let mut compared = 0;
        for seed in 0..6 {
            let fam = random_trig(50 + seed, 1 + (seed as usize % 2), 1.5);
            let Ok(m) = index_maslov(&fam, 0.01, 1024) else {
                continue;
            };
            let g = index_galerkin(
                &fam,
                &GalerkinOptions {
                    cutoffs: vec![8, 16, 32],
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(m, g.value, "seed {}", 50 + seed);
            compared += 1;
        }
        assert!(compared >= 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn unitary_frame_invariance(seed in 0u64..500, theta in 0.0..std::f64::consts::TAU) {
            let fam = random_trig(seed, 1, 1.0);
            let u = (complex_structure(1) * theta).exp();
            let opts = GalerkinOptions { cutoffs: vec![4, 8, 16], ..Default::default() };
            let a = index_galerkin(&fam, &opts);
            let b = index_galerkin(&fam.conjugated(&u).unwrap(), &opts);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert_eq!(a.value, b.value);
            }
        }

        #[test]
        fn perturbation_decays_with_mode_distance(seed in 0u64..500) {
            let fam = random_trig(seed, 1, 1.0);
            let p = assemble(&fam, 6).unwrap();
            let tr = FourierTruncation::new(1, 6).unwrap();
            let diff = p.a0.matrix() - p.ah.matrix();
            // degree-2 family: couplings vanish beyond |k - l| > 2 and |k + l| > 2
            for k in tr.modes() {
                for l in tr.modes() {
                    if (k - l).abs() > 2 && (k + l).abs() > 2 {
                        let b = diff.view((tr.offset(k), tr.offset(l)), (2, 2)).amax();
                        prop_assert!(b == 0.0);
                    }
                }
            }
        }
    }
}
