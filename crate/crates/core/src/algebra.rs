//! Dense operator algebra for an N-qubit register.
//!
//! Everything is stored as row-major complex matrices of dimension 2^N.
//! Construction is deterministic: building the same operator twice yields
//! bit-identical storage, so `PartialEq` compares exactly.
//!
//! Qubit convention: site 0 occupies the most significant bit of a basis
//! index, i.e. `embed_pauli(axis, s, n)` returns
//! `I^(⊗s) ⊗ σ_axis ⊗ I^(⊗ n-s-1)`.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default cap on register size. A 12-qubit operator already needs
/// 16 B * 4^12 = 256 MiB, so anything larger is rejected unless the
/// ceiling is raised explicitly.
pub const DEFAULT_REGISTER_CEILING: usize = 12;

/// Hard cap regardless of configuration; dense storage is hopeless beyond it.
const HARD_QUBIT_LIMIT: usize = 24;

static REGISTER_CEILING: AtomicUsize = AtomicUsize::new(DEFAULT_REGISTER_CEILING);

/// Current register ceiling (number of qubits).
pub fn register_ceiling() -> usize {
    REGISTER_CEILING.load(Ordering::Relaxed)
}

/// Raise or lower the register ceiling for this process.
pub fn set_register_ceiling(n_qubits: usize) {
    REGISTER_CEILING.store(n_qubits.min(HARD_QUBIT_LIMIT), Ordering::Relaxed);
}

/// Check a register size against the configured ceiling.
pub fn check_register_size(n_qubits: usize) -> Result<()> {
    let ceiling = register_ceiling();
    if n_qubits > ceiling {
        return Err(Error::RegisterCeiling { qubits: n_qubits, ceiling });
    }
    Ok(())
}

/// Pauli axis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Layer tag of a register site.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Central,
    Layer1,
    Layer2,
}

/// One qubit of the register: its index and which layer it belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SiteIndex {
    pub index: usize,
    pub layer: Layer,
}

/// Bit position of a site inside a basis index (site 0 is the MSB).
#[inline]
pub(crate) fn bit_for_site(n_qubits: usize, site: usize) -> usize {
    n_qubits - 1 - site
}

// ---------------------------------------------------------------------------
// gemm kernel
// ---------------------------------------------------------------------------

/// Row-block size for the parallel matrix product. Fixed so that results are
/// bit-identical regardless of how many worker threads execute the blocks.
const GEMM_ROW_BLOCK: usize = 128;

/// `out = a · b` for row-major square matrices, dispatched to the SIMD zgemm
/// kernel in fixed-size row blocks.
fn gemm(n: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    use matrixmultiply::{zgemm, CGemmOption};

    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * n);
    debug_assert_eq!(out.len(), n * n);

    let block = |rows: usize, r0: usize, c_chunk: &mut [C64]| unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            rows,
            n,
            n,
            [1.0, 0.0],
            (a.as_ptr() as *const [f64; 2]).add(r0 * n),
            n as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c_chunk.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    };

    if n <= GEMM_ROW_BLOCK {
        block(n, 0, out);
    } else {
        out.par_chunks_mut(GEMM_ROW_BLOCK * n)
            .enumerate()
            .for_each(|(bi, chunk)| block(chunk.len() / n, bi * GEMM_ROW_BLOCK, chunk));
    }
}

// ---------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------

/// Dense complex square matrix acting on the full register.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Operator {
        assert!(dim.is_power_of_two(), "operator dimension must be a power of two");
        Operator { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Operator {
        let mut m = Operator::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_data(dim: usize, data: Vec<C64>) -> Operator {
        assert!(dim.is_power_of_two());
        assert_eq!(data.len(), dim * dim);
        Operator { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    /// `self · rhs`
    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        let mut out = Operator::zeros(self.dim);
        gemm(self.dim, &self.data, &rhs.data, &mut out.data);
        Ok(out)
    }

    /// `self† · rhs`
    pub fn adjoint_matmul(&self, rhs: &Operator) -> Result<Operator> {
        self.adjoint().matmul(rhs)
    }

    /// `self · rhs†`
    pub fn matmul_adjoint(&self, rhs: &Operator) -> Result<Operator> {
        self.matmul(&rhs.adjoint())
    }

    /// `u · self · u†`
    pub fn conjugated_by(&self, u: &Operator) -> Result<Operator> {
        u.matmul(self)?.matmul_adjoint(u)
    }

    pub fn adjoint(&self) -> Operator {
        let mut out = Operator::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[j * self.dim + i] = self.data[i * self.dim + j].conj();
            }
        }
        out
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Operator { dim: self.dim, data })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Operator { dim: self.dim, data })
    }

    pub fn add_assign_scaled(&mut self, coeff: C64, rhs: &Operator) -> Result<()> {
        self.check_same_dim(rhs)?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += coeff * b;
        }
        Ok(())
    }

    pub fn scaled(&self, coeff: C64) -> Operator {
        let data = self.data.iter().map(|a| coeff * a).collect();
        Operator { dim: self.dim, data }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |M[i,j] - conj(M[j,i])|
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..=i {
                let r = (self.data[i * self.dim + j] - self.data[j * self.dim + i].conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// max-norm of `self† self - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.adjoint_matmul(self).expect("same dims");
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.data[i * self.dim + j] - want).norm());
            }
        }
        worst
    }

    pub fn is_diagonal(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && self.data[i * self.dim + j] != C64::new(0.0, 0.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Tensor product `self ⊗ rhs` (self on the high bits).
    pub fn kron(&self, rhs: &Operator) -> Operator {
        let dim = self.dim * rhs.dim;
        let mut out = Operator::zeros(dim);
        for i1 in 0..self.dim {
            for j1 in 0..self.dim {
                let a = self.data[i1 * self.dim + j1];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for i2 in 0..rhs.dim {
                    let row = i1 * rhs.dim + i2;
                    for j2 in 0..rhs.dim {
                        out.data[row * dim + j1 * rhs.dim + j2] =
                            a * rhs.data[i2 * rhs.dim + j2];
                    }
                }
            }
        }
        out
    }

    /// `M |v>`
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.dim != v.dim() {
            return Err(Error::DimensionMismatch { left: self.dim, right: v.dim() });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(v.amplitudes()).map(|(a, b)| a * b).sum();
        }
        Ok(StateVector { dim: self.dim, data: out })
    }

    /// Partial trace over the trailing `n_traced` qubits (the low bits).
    pub fn partial_trace_trailing(&self, n_traced: usize) -> Operator {
        let traced_dim = 1usize << n_traced;
        let keep_dim = self.dim / traced_dim;
        let mut out = Operator::zeros(keep_dim);
        for i in 0..keep_dim {
            for j in 0..keep_dim {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..traced_dim {
                    acc += self.data[(i * traced_dim + k) * self.dim + j * traced_dim + k];
                }
                out.data[i * keep_dim + j] = acc;
            }
        }
        out
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

// ---------------------------------------------------------------------------
// Pauli constructions
// ---------------------------------------------------------------------------

fn check_sites(sites: &[usize], n_qubits: usize) -> Result<()> {
    let mut seen = vec![false; n_qubits];
    for &s in sites {
        if s >= n_qubits {
            return Err(Error::SiteOutOfRange { site: s, n_qubits });
        }
        if seen[s] {
            return Err(Error::DuplicateSite { site: s });
        }
        seen[s] = true;
    }
    Ok(())
}

/// Product of single-site Paulis, e.g. `σ_z^(0) σ_x^(3)`, embedded in the
/// full register. Sites must be distinct.
pub fn pauli_string(n_qubits: usize, factors: &[(usize, Axis)]) -> Result<Operator> {
    check_register_size(n_qubits)?;
    let sites: Vec<usize> = factors.iter().map(|&(s, _)| s).collect();
    check_sites(&sites, n_qubits)?;

    let dim = 1usize << n_qubits;
    let mut out = Operator::zeros(dim);

    let mut xmask = 0usize;
    for &(site, axis) in factors {
        if matches!(axis, Axis::X | Axis::Y) {
            xmask |= 1 << bit_for_site(n_qubits, site);
        }
    }

    for col in 0..dim {
        let row = col ^ xmask;
        let mut amp = C64::new(1.0, 0.0);
        for &(site, axis) in factors {
            let bit = (col >> bit_for_site(n_qubits, site)) & 1;
            amp *= match (axis, bit) {
                (Axis::X, _) => C64::new(1.0, 0.0),
                (Axis::Y, 0) => C64::new(0.0, 1.0),
                (Axis::Y, _) => C64::new(0.0, -1.0),
                (Axis::Z, 0) => C64::new(1.0, 0.0),
                (Axis::Z, _) => C64::new(-1.0, 0.0),
            };
        }
        out.data[row * dim + col] = amp;
    }
    Ok(out)
}

/// Single Pauli operator on one site: `I^(⊗site) ⊗ σ_axis ⊗ I^(⊗ rest)`.
pub fn embed_pauli(axis: Axis, site: usize, n_qubits: usize) -> Result<Operator> {
    pauli_string(n_qubits, &[(site, axis)])
}

/// Sum of single-site Paulis over the listed sites.
pub fn collective_sum(axis: Axis, sites: &[usize], n_qubits: usize) -> Result<Operator> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("collective_sum needs at least one site".into()));
    }
    check_sites(sites, n_qubits)?;
    let mut out = Operator::zeros(1 << n_qubits);
    for &s in sites {
        out.add_assign_scaled(C64::new(1.0, 0.0), &embed_pauli(axis, s, n_qubits)?)?;
    }
    Ok(out)
}

/// Product of σ_x over the listed sites, identity elsewhere. Unitary,
/// Hermitian and involutory.
pub fn collective_flip(sites: &[usize], n_qubits: usize) -> Result<Operator> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("collective_flip needs at least one site".into()));
    }
    let factors: Vec<(usize, Axis)> = sites.iter().map(|&s| (s, Axis::X)).collect();
    pauli_string(n_qubits, &factors)
}

/// `[A, B] = AB - BA`
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.matmul(b)?.sub(&b.matmul(a)?)
}

/// `Tr(A·B)` computed as the entrywise sum `Σ_jk A[j,k] B[k,j]`, without
/// forming the product matrix.
pub fn overlap_trace(a: &Operator, b: &Operator) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let n = a.dim();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let row = &a.data[j * n..(j + 1) * n];
        for (k, ajk) in row.iter().enumerate() {
            acc += ajk * b.data[k * n + j];
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// StateVector
// ---------------------------------------------------------------------------

/// Pure state of the register; unit norm to 1e-12.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dim: usize,
    data: Vec<C64>,
}

impl StateVector {
    pub fn new(data: Vec<C64>) -> Result<StateVector> {
        let dim = data.len();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "state dimension {dim} is not a power of two"
            )));
        }
        let norm: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "state vector norm {norm} deviates from 1 by more than 1e-12"
            )));
        }
        Ok(StateVector { dim, data })
    }

    pub fn basis(dim: usize, index: usize) -> StateVector {
        assert!(dim.is_power_of_two() && index < dim);
        let mut data = vec![C64::new(0.0, 0.0); dim];
        data[index] = C64::new(1.0, 0.0);
        StateVector { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.data
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|self><other|`
    pub fn outer(&self, other: &StateVector) -> Result<Operator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let mut out = Operator::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i * self.dim + j] = self.data[i] * other.data[j].conj();
            }
        }
        Ok(out)
    }

    /// `self ⊗ rhs` (self on the high bits).
    pub fn kron(&self, rhs: &StateVector) -> StateVector {
        let dim = self.dim * rhs.dim;
        let mut data = vec![C64::new(0.0, 0.0); dim];
        for (i, a) in self.data.iter().enumerate() {
            for (j, b) in rhs.data.iter().enumerate() {
                data[i * rhs.dim + j] = a * b;
            }
        }
        StateVector { dim, data }
    }
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

/// Whether a density matrix is a full state (trace 1) or a traceless
/// deviation part.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StateKind {
    State,
    Deviation,
}

/// Hermitian density matrix; full states have trace 1, deviation matrices
/// trace 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: Operator,
    kind: StateKind,
}

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;

impl DensityMatrix {
    pub fn state(matrix: Operator) -> Result<DensityMatrix> {
        Self::validated(matrix, StateKind::State)
    }

    pub fn deviation(matrix: Operator) -> Result<DensityMatrix> {
        Self::validated(matrix, StateKind::Deviation)
    }

    fn validated(matrix: Operator, kind: StateKind) -> Result<DensityMatrix> {
        let herm = matrix.hermiticity_residual();
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian { residual: herm });
        }
        let tr = matrix.trace();
        let want = match kind {
            StateKind::State => 1.0,
            StateKind::Deviation => 0.0,
        };
        if (tr.re - want).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "trace {tr} deviates from {want} beyond tolerance"
            )));
        }
        Ok(DensityMatrix { matrix, kind })
    }

    pub fn from_pure(psi: &StateVector) -> DensityMatrix {
        let matrix = psi.outer(psi).expect("same dims");
        DensityMatrix { matrix, kind: StateKind::State }
    }

    /// Wrap a matrix that is known to satisfy the invariants already
    /// (used on evolution outputs, where re-validating every snapshot
    /// would dominate the runtime).
    pub(crate) fn trusted(matrix: Operator, kind: StateKind) -> DensityMatrix {
        DensityMatrix { matrix, kind }
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn into_matrix(self) -> Operator {
        self.matrix
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        overlap_trace(&self.matrix, &self.matrix).expect("same dims").re
    }
}
