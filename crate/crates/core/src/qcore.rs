//! Dense complex linear algebra for two-, four- and eight-dimensional qubit
//! spaces.
//!
//! Basis convention: the basis ket `|n m l>` of three qubits `A B C` sits at
//! flat index `4n + 2m + l`, so the ancilla `A` is the most significant
//! factor of every Kronecker product. A single qubit `|1>` is the `+1`
//! eigenvector of `sigma_z`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest Hilbert-space dimension handled (three qubits).
pub const MAX_DIM: usize = 8;

/// Hermiticity and eigen-reconstruction tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues above `-PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-10;

const NORM_TOL: f64 = 1e-12;

fn check_dim(dim: usize) -> Result<()> {
    if matches!(dim, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "dimension {dim} is not one of 2, 4, 8"
        )))
    }
}

/// Square complex matrix of dimension 2, 4 or 8.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        check_dim(m.nrows())?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries given for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Real row-major entries, for the many matrices that need no imaginary part.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub(crate) fn from_fn_unchecked(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                values[r]
            } else {
                ZERO
            }
        }))
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &PureState, v: &PureState) -> Self {
        Self(u.as_dvector() * v.as_dvector().adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `m - m^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Largest entrywise deviation of `U^dagger U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * self).max_abs_diff(&Self::identity(self.dim()))
    }

    pub fn apply(&self, v: &PureState) -> DVector<C64> {
        &self.0 * v.as_dvector()
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate_by(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        Self(&self.0 * &rho.0 * self.0.adjoint())
    }

    /// `<u| self |v>`.
    pub fn sandwich(&self, u: &PureState, v: &PureState) -> C64 {
        (u.as_dvector().adjoint() * &self.0 * v.as_dvector())[(0, 0)]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 * &rhs.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 * rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Kronecker product with `a` as the most significant factor.
///
/// Fails when the product would exceed eight dimensions.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(Error::Dimension(format!(
            "kron of {}x{} and {}x{} exceeds {MAX_DIM} dimensions",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(ComplexMatrix(a.0.kronecker(&b.0)))
}

/// Normalized state vector.
#[derive(Clone, PartialEq)]
pub struct PureState(DVector<C64>);

impl PureState {
    /// Accepts only vectors whose squared norm is 1 within 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let v = DVector::from_vec(amplitudes);
        let norm2 = v.norm_squared();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self(v))
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(v: DVector<C64>) -> Result<Self> {
        check_dim(v.len())?;
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Ok(Self(v / C64::new(norm, 0.0)))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.0[index]
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.0
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::Dimension(format!(
                "state of dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        Ok(Self(self.0.kronecker(&other.0)))
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(self, self)
    }
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PureState{:?}", self.0.as_slice())
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix of dimension 4 or 8.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn from_pure(psi: &PureState) -> Result<Self> {
        density_dim(psi.dim())?;
        Ok(Self(psi.projector()))
    }

    /// Maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        density_dim(dim)?;
        Ok(Self(
            ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0.get(row, col)
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        self.0.sandwich(psi, psi).re
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    /// Wraps a matrix that is known to satisfy the invariants by construction.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix{:?}", self.0)
    }
}

fn density_dim(dim: usize) -> Result<()> {
    if dim == 4 || dim == 8 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "density matrices are 4x4 or 8x8, got {dim}x{dim}"
        )))
    }
}

/// Checks a candidate density matrix and repairs round-off.
///
/// Each deviation (hermiticity, trace, negative eigenvalue) is measured on
/// the raw input and must be within `tol`. The accepted matrix is
/// `(rho + rho^dagger)/2` divided by its trace.
pub fn validate_density(rho: ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    density_dim(rho.dim())?;
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    let herm = rho.hermiticity_error();
    if herm > tol {
        return Err(Error::InvalidDensity {
            invariant: "hermiticity",
            deviation: herm,
        });
    }
    let sym = (&rho + &rho.adjoint()).scale_real(0.5);
    let trace = sym.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(Error::InvalidDensity {
            invariant: "unit trace",
            deviation: (trace - 1.0).abs(),
        });
    }
    let min_eig = eigenvalues_unsorted(&sym)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -tol {
        return Err(Error::InvalidDensity {
            invariant: "positivity",
            deviation: -min_eig,
        });
    }
    Ok(DensityMatrix(sym.scale_real(1.0 / trace)))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(Lambda) V^dagger`.
    pub fn map_values(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = self.vectors.as_dmatrix();
        let n = self.values.len();
        let mut scaled = v.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            for r in 0..n {
                scaled[(r, k)] *= fk;
            }
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| C64::new(x, 0.0))
    }
}

fn eigenvalues_unsorted(m: &ComplexMatrix) -> Vec<f64> {
    m.0.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect()
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let herm = m.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = SymmetricEigen::new(m.0.clone());
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let herm = m.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let mut values = eigenvalues_unsorted(m);
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Traces the ancilla (most significant qubit) out of an eight-dimensional
/// state: `rho_BC[(ml),(m'l')] = sum_n rho[(nml),(nm'l')]`.
pub fn partial_trace_ancilla(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 8 {
        return Err(Error::Dimension(format!(
            "partial trace over the ancilla needs an 8x8 state, got {}x{}",
            rho.dim(),
            rho.dim()
        )));
    }
    let trace = rho.0.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidDensity {
            invariant: "unit trace",
            deviation: (trace - 1.0).abs(),
        });
    }
    let m = rho.matrix();
    let reduced = ComplexMatrix::from_fn_unchecked(4, |r, c| m.get(r, c) + m.get(4 + r, 4 + c));
    Ok(DensityMatrix(reduced))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[-1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_one_projectors_lands_on_index_seven() {
        let p1 = PureState::basis(2, 1).projector();
        let p = kron(&kron(&p1, &p1).unwrap(), &p1).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let expected = if r == 7 && c == 7 { ONE } else { ZERO };
                assert_eq!(p.get(r, c), expected);
            }
        }
    }

    #[test]
    fn kron_left_factor_is_most_significant() {
        let flip = kron(&sigma_x(), &ComplexMatrix::identity(2)).unwrap();
        // |10> is index 2, |00> is index 0
        let out = flip.apply(&PureState::basis(4, 2));
        assert_eq!(out[0], ONE);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn kron_rejects_oversize() {
        let i4 = ComplexMatrix::identity(4);
        assert!(matches!(kron(&i4, &i4), Err(Error::Dimension(_))));
    }

    #[test]
    fn kron_is_associative() {
        let a = sigma_x();
        let b = ComplexMatrix::from_rows(2, &[ONE, I, -I, C64::new(0.5, 0.25)]).unwrap();
        let c = sigma_z();
        let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = DensityMatrix::from_pure(&PureState::basis(8, 7)).unwrap();
        let bc = partial_trace_ancilla(&rho).unwrap();
        let expected = DensityMatrix::from_pure(&PureState::basis(4, 3)).unwrap();
        assert!(bc.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_of_factorized_ancilla() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |Phi-> = (|11> - |00>)/sqrt2
        let phi_minus =
            PureState::new(vec![C64::new(-s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]).unwrap();
        let full = PureState::basis(2, 1).kron(&phi_minus).unwrap();
        let bc = partial_trace_ancilla(&DensityMatrix::from_pure(&full).unwrap()).unwrap();
        assert!(bc.max_abs_diff(&DensityMatrix::from_pure(&phi_minus).unwrap()) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension_and_trace() {
        let rho4 = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(matches!(
            partial_trace_ancilla(&rho4),
            Err(Error::Dimension(_))
        ));
        let bad = DensityMatrix(ComplexMatrix::identity(8).scale_real(0.2));
        assert!(matches!(
            partial_trace_ancilla(&bad),
            Err(Error::InvalidDensity {
                invariant: "unit trace",
                ..
            })
        ));
    }

    #[test]
    fn eig_of_paulis() {
        let e = hermitian_eig(&sigma_z()).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
        let e = hermitian_eig(&sigma_x()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(vec![C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let minus = PureState::new(vec![C64::new(s, 0.0), C64::new(-s, 0.0)]).unwrap();
        let v0 = PureState::normalized(e.vectors.as_dmatrix().column(0).into_owned()).unwrap();
        let v1 = PureState::normalized(e.vectors.as_dmatrix().column(1).into_owned()).unwrap();
        assert!((v0.overlap(&plus) - 1.0).abs() < 1e-14);
        assert!((v1.overlap(&minus) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_of_trace_distance_block() {
        // quadratic formula: 1/8 +- sqrt(1/64 + 1/4)
        let root = (1.0f64 / 64.0 + 0.25).sqrt();
        let m = ComplexMatrix::from_real_rows(2, &[0.0, 0.5, 0.5, 0.25]).unwrap();
        let e = hermitian_eig(&m).unwrap();
        assert!((e.values[0] - (0.125 + root)).abs() < 1e-14);
        assert!((e.values[1] - (0.125 - root)).abs() < 1e-14);
        assert!((e.values[0] - 0.64039).abs() < 5e-6);
        assert!((e.values[1] + 0.39039).abs() < 5e-6);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_reconstructs_complex_hermitian() {
        let m = ComplexMatrix::from_rows(
            4,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.2, 0.3),
                C64::new(0.0, -1.0),
                C64::new(0.4, 0.0),
                C64::new(0.2, -0.3),
                C64::new(-0.5, 0.0),
                C64::new(0.1, 0.1),
                C64::new(0.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.1, -0.1),
                C64::new(2.0, 0.0),
                C64::new(0.3, 0.7),
                C64::new(0.4, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.3, -0.7),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let e = hermitian_eig(&m).unwrap();
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let sum: f64 = e.values.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-10);
        let mv = &m * &e.vectors;
        let vl = &e.vectors
            * &ComplexMatrix::diagonal(
                &e.values
                    .iter()
                    .map(|&x| C64::new(x, 0.0))
                    .collect::<Vec<_>>(),
            );
        assert!(mv.max_abs_diff(&vl) < 1e-10);
    }

    #[test]
    fn validate_accepts_bell_projector_unchanged() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = PureState::new(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]).unwrap();
        let p = phi.projector();
        let rho = validate_density(p.clone(), TRACE_TOL).unwrap();
        assert!(rho.matrix().max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn validate_renormalizes_small_trace_excess() {
        let m = ComplexMatrix::identity(4).scale_real((1.0 + 1e-11) / 4.0);
        let rho = validate_density(m, TRACE_TOL).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_negative_eigenvalue() {
        let m = ComplexMatrix::diagonal(&[
            C64::new(0.51, 0.0),
            C64::new(0.25, 0.0),
            C64::new(0.25, 0.0),
            C64::new(-0.01, 0.0),
        ]);
        match validate_density(m, TRACE_TOL) {
            Err(Error::InvalidDensity {
                invariant,
                deviation,
            }) => {
                assert_eq!(invariant, "positivity");
                assert!((deviation - 0.01).abs() < 1e-12);
            }
            other => panic!("expected positivity failure, got {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_trace_and_hermiticity() {
        let m = ComplexMatrix::identity(4).scale_real(0.3);
        assert!(matches!(
            validate_density(m, TRACE_TOL),
            Err(Error::InvalidDensity {
                invariant: "unit trace",
                ..
            })
        ));
        let mut raw = ComplexMatrix::identity(4).scale_real(0.25).into_dmatrix();
        raw[(0, 1)] = C64::new(0.1, 0.0);
        let m = ComplexMatrix::from_dmatrix(raw).unwrap();
        assert!(matches!(
            validate_density(m, TRACE_TOL),
            Err(Error::InvalidDensity {
                invariant: "hermiticity",
                ..
            })
        ));
    }

    #[test]
    fn pure_state_requires_unit_norm() {
        assert!(matches!(
            PureState::new(vec![ONE, ONE]),
            Err(Error::NotNormalized(_))
        ));
        assert!(PureState::normalized(DVector::zeros(2)).is_err());
    }
}
