//! Truncated Fock-space algebra for the cavity, transmon and reservoir modes.
//!
//! Basis ordering is cavity ⊗ transmon ⊗ reservoir with the cavity as the
//! slowest index: `|n, q, r⟩` sits at `(n * n_tmon + q) * n_res + r`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cavity,
    Transmon,
    Reservoir,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Cavity, Mode::Transmon, Mode::Reservoir];

    pub fn index(self) -> usize {
        match self {
            Mode::Cavity => 0,
            Mode::Transmon => 1,
            Mode::Reservoir => 2,
        }
    }
}

/// Mode truncations. A mode of dimension 1 is a spectator and carries no
/// dynamics; this is how single-mode (cavity-only) spaces are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDims {
    pub n_cav: usize,
    pub n_tmon: usize,
    pub n_res: usize,
}

impl Default for ModeDims {
    fn default() -> Self {
        ModeDims { n_cav: 10, n_tmon: 3, n_res: 2 }
    }
}

impl ModeDims {
    /// Three-mode truncation; every mode needs at least two levels.
    pub fn new(n_cav: usize, n_tmon: usize, n_res: usize) -> Result<Self> {
        let dims = ModeDims { n_cav, n_tmon, n_res };
        dims.validate()?;
        Ok(dims)
    }

    /// A single oscillator of dimension `n` in the cavity slot.
    pub fn single(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!("single-mode dimension {n} < 2")));
        }
        Ok(ModeDims { n_cav: n, n_tmon: 1, n_res: 1 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_single() {
            return if self.n_cav >= 2 {
                Ok(())
            } else {
                Err(Error::InvalidDimension(format!("cavity dimension {} < 2", self.n_cav)))
            };
        }
        for (name, d) in [("n_cav", self.n_cav), ("n_tmon", self.n_tmon), ("n_res", self.n_res)] {
            if d < 2 {
                return Err(Error::InvalidDimension(format!("{name} = {d} < 2")));
            }
        }
        Ok(())
    }

    pub fn is_single(&self) -> bool {
        self.n_tmon == 1 && self.n_res == 1
    }

    pub fn total(&self) -> usize {
        self.n_cav * self.n_tmon * self.n_res
    }

    pub fn get(&self, mode: Mode) -> usize {
        match mode {
            Mode::Cavity => self.n_cav,
            Mode::Transmon => self.n_tmon,
            Mode::Reservoir => self.n_res,
        }
    }

    /// Flat basis index of `|n, q, r⟩`.
    pub fn index(&self, occ: [usize; 3]) -> Result<usize> {
        let [n, q, r] = occ;
        for (mode, k) in Mode::ALL.iter().zip(occ) {
            let d = self.get(*mode);
            if k >= d {
                return Err(Error::OutOfRange(format!("{mode:?} occupation {k} >= dimension {d}")));
            }
        }
        Ok((n * self.n_tmon + q) * self.n_res + r)
    }

    /// Inverse of [`ModeDims::index`].
    pub fn occupations(&self, idx: usize) -> [usize; 3] {
        let r = idx % self.n_res;
        let q = (idx / self.n_res) % self.n_tmon;
        let n = idx / (self.n_res * self.n_tmon);
        [n, q, r]
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOperator {
    dims: ModeDims,
    matrix: CMatrix,
}

impl QuantumOperator {
    pub fn new(dims: ModeDims, matrix: CMatrix) -> Result<Self> {
        let n = dims.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(QuantumOperator { dims, matrix })
    }

    /// Wraps a square matrix as a single-mode operator.
    pub fn single(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension(format!("non-square {}x{} matrix", matrix.nrows(), matrix.ncols())));
        }
        Self::new(ModeDims::single(matrix.nrows())?, matrix)
    }

    pub fn identity(dims: ModeDims) -> Self {
        let n = dims.total();
        QuantumOperator { dims, matrix: CMatrix::identity(n, n) }
    }

    pub fn zeros(dims: ModeDims) -> Self {
        let n = dims.total();
        QuantumOperator { dims, matrix: CMatrix::zeros(n, n) }
    }

    /// `|i⟩⟨j|` in the flat basis.
    pub fn outer_basis(dims: ModeDims, i: [usize; 3], j: [usize; 3]) -> Result<Self> {
        let mut op = Self::zeros(dims);
        op.matrix[(dims.index(i)?, dims.index(j)?)] = C64::new(1.0, 0.0);
        Ok(op)
    }

    pub fn projector(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        QuantumOperator { dims: psi.dims(), matrix: v * v.adjoint() }
    }

    pub fn dims(&self) -> ModeDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        QuantumOperator { dims: self.dims, matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        QuantumOperator { dims: self.dims, matrix: &self.matrix * s }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        QuantumOperator { dims: self.dims, matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_dims(self.dims, psi.dims())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hermitian eigen-decomposition, eigenvalues ascending.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        eigh(&self.matrix)
    }
}

impl Add for &QuantumOperator {
    type Output = QuantumOperator;
    fn add(self, rhs: &QuantumOperator) -> QuantumOperator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        QuantumOperator { dims: self.dims, matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &QuantumOperator {
    type Output = QuantumOperator;
    fn sub(self, rhs: &QuantumOperator) -> QuantumOperator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        QuantumOperator { dims: self.dims, matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &QuantumOperator {
    type Output = QuantumOperator;
    fn mul(self, rhs: &QuantumOperator) -> QuantumOperator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        QuantumOperator { dims: self.dims, matrix: &self.matrix * &rhs.matrix }
    }
}

fn check_dims(a: ModeDims, b: ModeDims) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a.total(), actual: b.total() });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: ModeDims,
    amplitudes: CVector,
}

impl StateVector {
    /// Normalizes `amplitudes`; a zero vector is rejected.
    pub fn new(dims: ModeDims, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), actual: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if !(norm > 1e-14) || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero or non-finite norm".into()));
        }
        Ok(StateVector { dims, amplitudes: amplitudes.unscale(norm) })
    }

    pub fn from_amplitudes(dims: ModeDims, amps: &[C64]) -> Result<Self> {
        Self::new(dims, CVector::from_column_slice(amps))
    }

    /// Single-mode state from real Fock amplitudes.
    pub fn from_fock_amplitudes(dim: usize, amps: &[(usize, C64)]) -> Result<Self> {
        let dims = ModeDims::single(dim)?;
        let mut v = CVector::zeros(dim);
        for &(n, a) in amps {
            if n >= dim {
                return Err(Error::OutOfRange(format!("Fock index {n} >= dimension {dim}")));
            }
            v[n] += a;
        }
        Self::new(dims, v)
    }

    pub fn dims(&self) -> ModeDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `self ⊗ |q, r⟩` for a single-mode cavity state.
    pub fn embed_cavity(&self, dims: ModeDims, q: usize, r: usize) -> Result<StateVector> {
        if !self.dims.is_single() || self.dims.n_cav != dims.n_cav {
            return Err(Error::DimensionMismatch { expected: dims.n_cav, actual: self.dims.n_cav });
        }
        let mut v = CVector::zeros(dims.total());
        for n in 0..dims.n_cav {
            v[dims.index([n, q, r])?] = self.amplitudes[n];
        }
        StateVector::new(dims, v)
    }
}

pub fn fock_state(occ: [usize; 3], dims: ModeDims) -> Result<StateVector> {
    let idx = dims.index(occ)?;
    let mut v = CVector::zeros(dims.total());
    v[idx] = C64::new(1.0, 0.0);
    Ok(StateVector { dims, amplitudes: v })
}

pub fn fock(n: usize, dim: usize) -> Result<StateVector> {
    fock_state([n, 0, 0], ModeDims::single(dim)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: ModeDims,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validating constructor.
    pub fn new(dims: ModeDims, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(dims, matrix)?;
        let herm = rho.hermiticity_defect();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({herm:.2e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.2e}")));
        }
        Ok(rho)
    }

    /// Shape check only; used for integrator output whose drift is reported separately.
    pub fn from_matrix_unchecked(dims: ModeDims, matrix: CMatrix) -> Result<Self> {
        let n = dims.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: matrix.nrows() });
        }
        Ok(DensityMatrix { dims, matrix })
    }

    pub fn pure(psi: &StateVector) -> Self {
        let v = psi.amplitudes();
        DensityMatrix { dims: psi.dims(), matrix: v * v.adjoint() }
    }

    pub fn maximally_mixed(dims: ModeDims) -> Self {
        let n = dims.total();
        DensityMatrix { dims, matrix: CMatrix::identity(n, n) / C64::new(n as f64, 0.0) }
    }

    /// Convex combination `Σ p_k ρ_k`; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?.1;
        let total: f64 = parts.iter().map(|(p, _)| p).sum();
        if parts.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("mixture weights must be a distribution".into()));
        }
        let mut m = CMatrix::zeros(first.dim(), first.dim());
        for (p, rho) in parts {
            check_dims(first.dims, rho.dims)?;
            m += &rho.matrix * C64::new(*p, 0.0);
        }
        Ok(DensityMatrix { dims: first.dims, matrix: m })
    }

    pub fn dims(&self) -> ModeDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        eigh(&h).0.first().copied().unwrap_or(0.0)
    }

    pub fn population(&self, occ: [usize; 3]) -> Result<f64> {
        let i = self.dims.index(occ)?;
        Ok(self.matrix[(i, i)].re)
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Single-mode lowering operator.
pub fn annihilation(dim: usize) -> Result<QuantumOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("annihilation needs dim >= 2, got {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    QuantumOperator::single(m)
}

pub fn creation(dim: usize) -> Result<QuantumOperator> {
    Ok(annihilation(dim)?.dagger())
}

pub fn number(dim: usize) -> Result<QuantumOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("number operator needs dim >= 2, got {dim}")));
    }
    diagonal(&(0..dim).map(|n| n as f64).collect::<Vec<_>>())
}

/// Single-mode diagonal operator.
pub fn diagonal(values: &[f64]) -> Result<QuantumOperator> {
    let n = values.len();
    let m = CMatrix::from_diagonal(&CVector::from_iterator(n, values.iter().map(|&v| C64::new(v, 0.0))));
    QuantumOperator::single(m)
}

/// Single-mode `|i⟩⟨j|`.
pub fn transition(i: usize, j: usize, dim: usize) -> Result<QuantumOperator> {
    if i >= dim || j >= dim {
        return Err(Error::OutOfRange(format!("transition {i}<-{j} outside dimension {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = C64::new(1.0, 0.0);
    QuantumOperator::single(m)
}

/// Lifts a single-mode operator into `dims`, identity elsewhere.
pub fn embed(op: &QuantumOperator, mode: Mode, dims: ModeDims) -> Result<QuantumOperator> {
    let d = dims.get(mode);
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: op.dim() });
    }
    let eye = |n: usize| CMatrix::identity(n, n);
    let m = match mode {
        Mode::Cavity => kron(&kron(op.matrix(), &eye(dims.n_tmon)), &eye(dims.n_res)),
        Mode::Transmon => kron(&kron(&eye(dims.n_cav), op.matrix()), &eye(dims.n_res)),
        Mode::Reservoir => kron(&eye(dims.n_cav * dims.n_tmon), op.matrix()),
    };
    QuantumOperator::new(dims, m)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0;
    if norm1 > 0.5 {
        s = (norm1 / 0.5).log2().ceil() as i32;
    }
    let scaled = a / C64::new(2f64.powi(s), 0.0);
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..64 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
        let tn = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Hermitian eigen-decomposition; eigenvalues ascending, eigenvectors in columns.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

/// `D(α) = exp(α a† − α* a)` in a `dim`-level truncation.
pub fn displacement(alpha: C64, dim: usize) -> Result<QuantumOperator> {
    let a = annihilation(dim)?;
    if alpha.norm_sqr() > dim as f64 / 4.0 {
        log::warn!(
            "displacement |alpha|^2 = {:.3} exceeds dim/4 = {:.2}; truncation error likely",
            alpha.norm_sqr(),
            dim as f64 / 4.0
        );
    }
    let gen = a.matrix().adjoint() * alpha - a.matrix() * alpha.conj();
    QuantumOperator::single(expm(&gen))
}

/// `e^{i 2π n / m}` on each Fock level.
pub fn parity_phases(m: usize, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|n| {
            // Quarter turns are returned exactly.
            let k = n % m;
            match (4 * k) % (4 * m) {
                0 => C64::new(1.0, 0.0),
                x if x == m => C64::new(0.0, 1.0),
                x if x == 2 * m => C64::new(-1.0, 0.0),
                x if x == 3 * m => C64::new(0.0, -1.0),
                _ => C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64),
            }
        })
        .collect()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation(2).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(a.matrix()[(0, 0)], c(0.0, 0.0));
        assert_eq!(a.matrix()[(1, 0)], c(0.0, 0.0));
        let a3 = annihilation(3).unwrap();
        assert_abs_diff_eq!(a3.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn number_operator_on_fock_five() {
        let a = annihilation(8).unwrap();
        let n = &a.dagger() * &a;
        let v = n.apply(&fock(5, 8).unwrap()).unwrap();
        assert_abs_diff_eq!(v[5].re, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let d = 7;
        let a = annihilation(d).unwrap();
        let comm = a.commutator(&a.dagger());
        for i in 0..d {
            let expected = if i < d - 1 { 1.0 } else { -((d - 1) as f64) };
            assert_abs_diff_eq!(comm.matrix()[(i, i)].re, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn ordering_convention() {
        let dims = ModeDims::default();
        assert_eq!(dims.index([0, 0, 0]).unwrap(), 0);
        assert_eq!(dims.index([0, 0, 1]).unwrap(), 1);
        assert_eq!(dims.index([0, 1, 0]).unwrap(), 2);
        assert_eq!(dims.index([1, 0, 0]).unwrap(), 6);
        assert_eq!(dims.occupations(6 * 3 + 2 * 2 + 1), [3, 2, 1]);
        assert!(dims.index([10, 0, 0]).is_err());
    }

    #[test]
    fn embed_identity_and_number() {
        let dims = ModeDims::default();
        let id = embed(&QuantumOperator::identity(ModeDims::single(3).unwrap()), Mode::Transmon, dims).unwrap();
        assert_eq!(id.matrix(), QuantumOperator::identity(dims).matrix());
        let n = embed(&number(10).unwrap(), Mode::Cavity, dims).unwrap();
        let psi = fock_state([3, 0, 0], dims).unwrap();
        let rho = DensityMatrix::pure(&psi);
        assert_abs_diff_eq!((n.matrix() * rho.matrix()).trace().re, 3.0, epsilon = 1e-14);
        assert!(embed(&number(4).unwrap(), Mode::Cavity, dims).is_err());
    }

    #[test]
    fn disjoint_modes_commute() {
        let dims = ModeDims::default();
        let a = embed(&annihilation(10).unwrap(), Mode::Cavity, dims).unwrap();
        let q = embed(&annihilation(3).unwrap(), Mode::Transmon, dims).unwrap();
        let r = embed(&annihilation(2).unwrap(), Mode::Reservoir, dims).unwrap();
        assert_eq!(max_abs(a.commutator(&q).matrix()), 0.0);
        assert_eq!(max_abs(q.commutator(&r).matrix()), 0.0);
    }

    #[test]
    fn fock_states_orthonormal() {
        let dims = ModeDims::default();
        let g = fock_state([0, 0, 0], dims).unwrap();
        assert_eq!(g.amplitudes()[0], c(1.0, 0.0));
        let f = fock_state([1, 2, 0], dims).unwrap();
        assert_abs_diff_eq!(f.inner(&f).re, 1.0);
        assert_abs_diff_eq!(f.inner(&g).norm(), 0.0);
        assert!(fock_state([0, 3, 0], dims).is_err());
    }

    #[test]
    fn displacement_identity_and_inverse() {
        let d0 = displacement(c(0.0, 0.0), 12).unwrap();
        assert!(d0.max_abs_diff(&QuantumOperator::identity(d0.dims())) < 1e-15);
        let alpha = c(1.3, -0.9);
        let p = &displacement(alpha, 20).unwrap() * &displacement(-alpha, 20).unwrap();
        // The truncated generator is exactly anti-Hermitian, so the product is exact up to roundoff.
        assert!(p.max_abs_diff(&QuantumOperator::identity(p.dims())) < 1e-6);
    }

    #[test]
    fn displacement_vacuum_overlap_matches_series() {
        let dmat = displacement(c(1.0, 0.0), 20).unwrap();
        // ⟨0|D(α)|0⟩ = e^{-|α|²/2}, summed as a power series.
        let series: f64 = (0..30)
            .map(|n| {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                (-0.5f64).powi(n) / fact
            })
            .sum();
        assert_abs_diff_eq!(dmat.matrix()[(0, 0)].re, series, epsilon = 1e-6);
        assert_abs_diff_eq!(dmat.matrix()[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-6);
        // Column zero is the coherent state e^{-1/2} αⁿ/√n!.
        for n in 0..8 {
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            assert_abs_diff_eq!(dmat.matrix()[(n, 0)].re, (-0.5f64).exp() / fact.sqrt(), epsilon = 1e-6);
        }
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 1.0), c(-2.0, 0.0), c(5.0, 0.5)]));
        let e = expm(&m);
        for k in 0..3 {
            let z = m[(k, k)].exp();
            assert_abs_diff_eq!((e[(k, k)] - z).norm() / z.norm(), 0.0, epsilon = 1e-12);
        }
        let mut nil = CMatrix::zeros(2, 2);
        nil[(0, 1)] = c(3.0, 0.0);
        let e = expm(&nil);
        assert_abs_diff_eq!(e[(0, 1)].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn density_matrix_validation() {
        let dims = ModeDims::single(3).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = c(0.5, 0.0);
        assert!(DensityMatrix::new(dims, m.clone()).is_err());
        m[(1, 1)] = c(0.5, 0.0);
        assert!(DensityMatrix::new(dims, m.clone()).is_ok());
        m[(0, 1)] = c(0.6, 0.0);
        m[(1, 0)] = c(0.6, 0.0);
        assert!(DensityMatrix::new(dims, m).is_err());
        assert!(StateVector::new(dims, CVector::zeros(3)).is_err());
    }

    #[test]
    fn single_mode_dims() {
        assert!(ModeDims::single(1).is_err());
        assert!(ModeDims::new(10, 1, 2).is_err());
        let d = ModeDims::single(6).unwrap();
        assert!(d.is_single());
        assert_eq!(d.total(), 6);
    }
}
