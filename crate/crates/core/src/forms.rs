//! Symmetric bilinear forms, inertia, and the stabilized relative signature
//! of two nested truncation families.
//!
//! Only the difference sgn(b1) - sgn(b0) of two forms with a compact
//! difference is meaningful in infinite dimension. On nested finite
//! truncations it is the plain difference of signatures, provided it stops
//! moving as the cutoff grows; [`relative_signature`] demands that it does.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TraceEntry};
use crate::linalg::{max_abs, symmetric_eigenvalues, symmetrize};
use crate::par;

/// Default tolerance on the entrywise asymmetry accepted by [`SymmetricForm::new`],
/// relative to the largest entry.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric bilinear form on R^dim, stored symmetrized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricForm {
    entries: DMatrix<f64>,
    symmetry_tol: f64,
}

/// Zero threshold used when counting eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ZeroTol {
    /// dim * machine epsilon * (largest absolute eigenvalue).
    #[default]
    Auto,
    Absolute(f64),
}

impl From<f64> for ZeroTol {
    fn from(v: f64) -> Self {
        ZeroTol::Absolute(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub n_plus: usize,
    pub n_zero: usize,
    pub n_minus: usize,
}

impl InertiaTriple {
    pub fn signature(&self) -> i64 {
        self.n_plus as i64 - self.n_minus as i64
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_zero + self.n_minus
    }
}

impl SymmetricForm {
    /// Accepts a square matrix whose asymmetry is within
    /// [`DEFAULT_SYMMETRY_TOL`] relative to its largest entry.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let scale = max_abs(&entries).max(1.0);
        Self::with_tolerance(entries, DEFAULT_SYMMETRY_TOL * scale)
    }

    pub fn with_tolerance(entries: DMatrix<f64>, symmetry_tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidInput(format!(
                "form matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidInput("form dimension must be >= 1".into()));
        }
        if !(symmetry_tol >= 0.0) {
            return Err(Error::InvalidInput("symmetry_tol must be >= 0".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("form has non-finite entries".into()));
        }
        let asym = max_abs(&(&entries - entries.transpose()));
        if asym > symmetry_tol {
            return Err(Error::InvalidInput(format!(
                "form asymmetry {asym:e} exceeds tolerance {symmetry_tol:e}"
            )));
        }
        Ok(Self {
            entries: symmetrize(&entries),
            symmetry_tol,
        })
    }

    pub(crate) fn from_symmetric_unchecked(entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        Self {
            entries: symmetrize(&entries),
            symmetry_tol: 0.0,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("form dimension must be >= 1".into()));
        }
        let d = nalgebra::DVector::from_column_slice(diag);
        Ok(Self::from_symmetric_unchecked(DMatrix::from_diagonal(&d)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn symmetry_tol(&self) -> f64 {
        self.symmetry_tol
    }

    /// The form evaluated on a pair of vectors.
    pub fn apply(&self, x: &nalgebra::DVector<f64>, y: &nalgebra::DVector<f64>) -> f64 {
        x.dot(&(&self.entries * y))
    }

    /// b_s = s b1 + (1 - s) b0.
    pub fn affine(b0: &Self, b1: &Self, s: f64) -> Result<Self> {
        if b0.dim() != b1.dim() {
            return Err(Error::InvalidInput(
                "affine combination of forms of different dimension".into(),
            ));
        }
        Ok(Self::from_symmetric_unchecked(
            b1.matrix() * s + b0.matrix() * (1.0 - s),
        ))
    }

    pub fn negated(&self) -> Self {
        Self::from_symmetric_unchecked(-&self.entries)
    }

    /// T^T A T.
    pub fn congruent(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.nrows() != self.dim() || t.ncols() == 0 {
            return Err(Error::InvalidInput("congruence matrix has wrong shape".into()));
        }
        Ok(Self::from_symmetric_unchecked(t.transpose() * &self.entries * t))
    }

    /// Restriction to the span of the columns of `basis`.
    pub fn restrict(&self, basis: &DMatrix<f64>) -> Result<Self> {
        self.congruent(basis)
    }

    /// Leading principal block of size `dim`.
    pub fn leading_block(&self, dim: usize) -> Result<Self> {
        if dim == 0 || dim > self.dim() {
            return Err(Error::InvalidInput(format!("leading block {dim} out of range")));
        }
        Ok(Self::from_symmetric_unchecked(
            self.entries.view((0, 0), (dim, dim)).into_owned(),
        ))
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        Self::from_symmetric_unchecked(m)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        symmetric_eigenvalues(&self.entries)
    }

    pub fn inertia(&self, zero_tol: impl Into<ZeroTol>) -> Result<InertiaTriple> {
        let ev = self.eigenvalues()?;
        Ok(count_inertia(&ev, zero_tol.into()))
    }

    pub fn signature(&self, zero_tol: impl Into<ZeroTol>) -> Result<i64> {
        Ok(self.inertia(zero_tol)?.signature())
    }
}

pub(crate) fn resolve_zero_tol(eigenvalues: &[f64], zero_tol: ZeroTol) -> f64 {
    match zero_tol {
        ZeroTol::Absolute(t) => t,
        ZeroTol::Auto => {
            let largest = eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            eigenvalues.len() as f64 * f64::EPSILON * largest
        }
    }
}

pub(crate) fn count_inertia(eigenvalues: &[f64], zero_tol: ZeroTol) -> InertiaTriple {
    let tol = resolve_zero_tol(eigenvalues, zero_tol);
    let mut out = InertiaTriple {
        n_plus: 0,
        n_zero: 0,
        n_minus: 0,
    };
    for &v in eigenvalues {
        if v > tol {
            out.n_plus += 1;
        } else if v < -tol {
            out.n_minus += 1;
        } else {
            out.n_zero += 1;
        }
    }
    out
}

pub fn inertia(form: &SymmetricForm, zero_tol: impl Into<ZeroTol>) -> Result<InertiaTriple> {
    form.inertia(zero_tol)
}

pub fn signature(form: &SymmetricForm, zero_tol: impl Into<ZeroTol>) -> Result<i64> {
    form.signature(zero_tol)
}

/// A directed family of finite truncations of a form, indexed by a cutoff.
///
/// Implementations should be nested: the form at a smaller cutoff is the
/// restriction of the form at a larger cutoff to a coordinate subspace.
pub trait TruncationFamily: Sync {
    fn assemble(&self, cutoff: usize) -> Result<SymmetricForm>;
}

/// A truncation family backed by a closure.
pub struct FnFamily<F>(pub F);

impl<F> TruncationFamily for FnFamily<F>
where
    F: Fn(usize) -> Result<SymmetricForm> + Sync,
{
    fn assemble(&self, cutoff: usize) -> Result<SymmetricForm> {
        (self.0)(cutoff)
    }
}

impl<T: TruncationFamily + ?Sized> TruncationFamily for &T {
    fn assemble(&self, cutoff: usize) -> Result<SymmetricForm> {
        (**self).assemble(cutoff)
    }
}

/// Per-cutoff record of a relative-signature computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignaturePoint {
    pub cutoff: usize,
    pub inertia_b0: InertiaTriple,
    pub inertia_b1: InertiaTriple,
    /// sgn(b1) - sgn(b0); `None` when the cutoff was skipped.
    pub difference: Option<i64>,
}

impl SignaturePoint {
    pub fn skipped(&self) -> bool {
        self.difference.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeSignature {
    pub value: i64,
    pub trace: Vec<SignaturePoint>,
}

impl RelativeSignature {
    pub fn skipped_cutoffs(&self) -> Vec<usize> {
        self.trace.iter().filter(|p| p.skipped()).map(|p| p.cutoff).collect()
    }
}

/// Stabilized sgn(b1) - sgn(b0) over increasing cutoffs.
///
/// Cutoffs are evaluated independently (in parallel when enabled); a cutoff
/// where either truncation has a zero eigenvalue is skipped and kept in the
/// trace. The value must be constant on the last `window` evaluated cutoffs.
pub fn relative_signature<B0, B1>(
    b0: &B0,
    b1: &B1,
    cutoffs: &[usize],
    zero_tol: impl Into<ZeroTol>,
    window: usize,
) -> Result<RelativeSignature>
where
    B0: TruncationFamily + ?Sized,
    B1: TruncationFamily + ?Sized,
{
    let zero_tol = zero_tol.into();
    if window == 0 {
        return Err(Error::InvalidInput("stabilization window must be >= 1".into()));
    }
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("cutoffs must be a nonempty increasing list".into()));
    }
    if cutoffs[0] == 0 {
        return Err(Error::InvalidInput("cutoffs must be positive".into()));
    }

    let points = par::map(cutoffs, |&cutoff| -> Result<SignaturePoint> {
        let i0 = b0.assemble(cutoff)?.inertia(zero_tol)?;
        let i1 = b1.assemble(cutoff)?.inertia(zero_tol)?;
        let difference = if i0.n_zero > 0 || i1.n_zero > 0 {
            log::debug!("cutoff {cutoff} skipped: degenerate truncation ({i0:?}, {i1:?})");
            None
        } else {
            Some(i1.signature() - i0.signature())
        };
        Ok(SignaturePoint {
            cutoff,
            inertia_b0: i0,
            inertia_b1: i1,
            difference,
        })
    });
    let trace = points.into_iter().collect::<Result<Vec<_>>>()?;

    let evaluated: Vec<i64> = trace.iter().filter_map(|p| p.difference).collect();
    let tail = evaluated.len().checked_sub(window).map(|s| &evaluated[s..]);
    match tail {
        Some(tail) if tail.iter().all(|d| *d == tail[0]) => Ok(RelativeSignature { value: tail[0], trace }),
        _ => Err(Error::NoStabilization {
            window,
            trace: trace
                .iter()
                .map(|p| TraceEntry {
                    cutoff: p.cutoff,
                    difference: p.difference,
                })
                .collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> SymmetricForm {
        SymmetricForm::from_diagonal(v).unwrap()
    }

    #[test]
    fn inertia_of_diagonal_forms() {
        let t = inertia(&diag(&[1.0, -1.0]), 1e-10).unwrap();
        assert_eq!((t.n_plus, t.n_zero, t.n_minus), (1, 0, 1));
        let t = inertia(&SymmetricForm::identity(3).unwrap(), 1e-10).unwrap();
        assert_eq!((t.n_plus, t.n_zero, t.n_minus), (3, 0, 0));
    }

    #[test]
    fn hilbert_matrix_is_positive_definite() {
        let h = DMatrix::from_fn(4, 4, |i, j| 1.0 / (i + j + 1) as f64);
        let t = inertia(&SymmetricForm::new(h).unwrap(), 1e-12).unwrap();
        assert_eq!((t.n_plus, t.n_zero, t.n_minus), (4, 0, 0));
    }

    #[test]
    fn signatures_of_simple_forms() {
        assert_eq!(signature(&diag(&[1.0, 1.0, -1.0]), ZeroTol::Auto).unwrap(), 1);
        assert_eq!(signature(&SymmetricForm::zeros(2).unwrap(), ZeroTol::Auto).unwrap(), 0);
        assert_eq!(signature(&diag(&[2.0, -3.0, 5.0, -7.0]), ZeroTol::Auto).unwrap(), 0);
    }

    #[test]
    fn zero_tolerance_is_respected() {
        let f = diag(&[1.0, 1e-9, -1.0]);
        assert_eq!(f.inertia(1e-6).unwrap().n_zero, 1);
        assert_eq!(f.inertia(1e-12).unwrap().n_zero, 0);
    }

    #[test]
    fn rejects_asymmetric_and_empty() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymmetricForm::new(m), Err(Error::InvalidInput(_))));
        assert!(SymmetricForm::new(DMatrix::zeros(0, 0)).is_err());
        assert!(SymmetricForm::new(DMatrix::zeros(2, 3)).is_err());
    }

    fn alternating(cutoff: usize, flip_first: bool) -> Result<SymmetricForm> {
        let mut d: Vec<f64> = (0..cutoff).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        if flip_first {
            d[0] = -1.0;
        }
        SymmetricForm::from_diagonal(&d)
    }

    #[test]
    fn identical_families_have_zero_relative_signature() {
        let b = FnFamily(SymmetricForm::identity);
        let r = relative_signature(&b, &b, &[1, 2, 4, 8], ZeroTol::Auto, 3).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.trace.len(), 4);
    }

    #[test]
    fn rank_one_flip_gives_minus_two_at_every_cutoff() {
        let b0 = FnFamily(|n| alternating(n, false));
        let b1 = FnFamily(|n| alternating(n, true));
        let r = relative_signature(&b0, &b1, &[1, 2, 3, 5, 8], ZeroTol::Auto, 3).unwrap();
        assert_eq!(r.value, -2);
        assert!(r.trace.iter().all(|p| p.difference == Some(-2)));
        let back = relative_signature(&b1, &b0, &[1, 2, 3, 5, 8], ZeroTol::Auto, 3).unwrap();
        assert_eq!(back.value, 2);
    }

    #[test]
    fn drifting_difference_is_no_stabilization() {
        let b0 = FnFamily(SymmetricForm::identity);
        // number of negative entries grows with the cutoff: not a compact change
        let b1 = FnFamily(|n| {
            let d: Vec<f64> = (0..n).map(|i| if i < n / 2 { -1.0 } else { 1.0 }).collect();
            SymmetricForm::from_diagonal(&d)
        });
        let err = relative_signature(&b0, &b1, &[2, 4, 8, 16], ZeroTol::Auto, 3).unwrap_err();
        assert!(matches!(err, Error::NoStabilization { .. }));
    }

    #[test]
    fn degenerate_cutoffs_are_skipped_and_reported() {
        let b0 = FnFamily(SymmetricForm::identity);
        let b1 = FnFamily(|n| {
            let mut d = vec![1.0; n];
            d[0] = -1.0;
            if n == 4 {
                d[1] = 0.0;
            }
            SymmetricForm::from_diagonal(&d)
        });
        let r = relative_signature(&b0, &b1, &[2, 4, 6, 8, 10], 1e-12, 3).unwrap();
        assert_eq!(r.value, -2);
        assert_eq!(r.skipped_cutoffs(), vec![4]);
    }

    #[test]
    fn bad_cutoff_lists_are_rejected() {
        let b = FnFamily(SymmetricForm::identity);
        assert!(relative_signature(&b, &b, &[], ZeroTol::Auto, 1).is_err());
        assert!(relative_signature(&b, &b, &[3, 2], ZeroTol::Auto, 1).is_err());
        assert!(relative_signature(&b, &b, &[1, 2], ZeroTol::Auto, 0).is_err());
    }

    fn random_symmetric(dim: usize, seed: &[f64]) -> DMatrix<f64> {
        let m = DMatrix::from_fn(dim, dim, |i, j| seed[(i * dim + j) % seed.len()]);
        symmetrize(&m)
    }

    fn well_separated(f: &SymmetricForm, tol: f64) -> bool {
        f.eigenvalues().unwrap().iter().all(|v| v.abs() > 10.0 * tol)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn inertia_is_congruence_invariant(
            entries in proptest::collection::vec(-2.0..2.0_f64, 25),
            tvals in proptest::collection::vec(-1.0..1.0_f64, 25),
        ) {
            let a = SymmetricForm::new(random_symmetric(5, &entries)).unwrap();
            let t = DMatrix::from_fn(5, 5, |i, j| tvals[i * 5 + j]) + DMatrix::identity(5, 5) * 2.5;
            let tol = 1e-9;
            let ta = a.congruent(&t).unwrap();
            prop_assume!(t.determinant().abs() > 1e-3);
            prop_assume!(well_separated(&a, tol) && well_separated(&ta, tol));
            prop_assert_eq!(a.inertia(tol).unwrap(), ta.inertia(tol).unwrap());
        }

        #[test]
        fn signature_is_odd_and_additive(
            e1 in proptest::collection::vec(-2.0..2.0_f64, 16),
            e2 in proptest::collection::vec(-2.0..2.0_f64, 9),
        ) {
            let a = SymmetricForm::new(random_symmetric(4, &e1)).unwrap();
            let b = SymmetricForm::new(random_symmetric(3, &e2)).unwrap();
            let tol = 1e-9;
            prop_assume!(well_separated(&a, tol) && well_separated(&b, tol));
            let sa = a.signature(tol).unwrap();
            prop_assert_eq!(a.negated().signature(tol).unwrap(), -sa);
            prop_assert_eq!(
                a.direct_sum(&b).signature(tol).unwrap(),
                sa + b.signature(tol).unwrap()
            );
        }

        #[test]
        fn relative_signature_is_antisymmetric_and_additive(
            flips1 in proptest::collection::vec(any::<bool>(), 3),
            flips2 in proptest::collection::vec(any::<bool>(), 3),
        ) {
            // finite-rank sign flips on the first three coordinates
            let family = |flips: Vec<bool>| FnFamily(move |n: usize| {
                let d: Vec<f64> = (0..n)
                    .map(|i| {
                        let base = if i % 2 == 0 { 1.0 } else { -1.0 };
                        if i < flips.len() && flips[i] { -base } else { base }
                    })
                    .collect();
                SymmetricForm::from_diagonal(&d)
            });
            let b0 = family(vec![false; 3]);
            let b1 = family(flips1.clone());
            let b2 = family(flips1.iter().zip(&flips2).map(|(a, b)| a ^ b).collect());
            let cut = [4, 6, 8, 10];
            let r01 = relative_signature(&b0, &b1, &cut, ZeroTol::Auto, 3).unwrap().value;
            let r10 = relative_signature(&b1, &b0, &cut, ZeroTol::Auto, 3).unwrap().value;
            let r12 = relative_signature(&b1, &b2, &cut, ZeroTol::Auto, 3).unwrap().value;
            let r02 = relative_signature(&b0, &b2, &cut, ZeroTol::Auto, 3).unwrap().value;
            prop_assert_eq!(r01, -r10);
            prop_assert_eq!(r01 + r12, r02);
        }
    }
}
