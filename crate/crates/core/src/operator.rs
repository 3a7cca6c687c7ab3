//! Dense complex operators on a chain of qubits.
//!
//! Basis convention: computational basis index bit `k` (0 = most significant)
//! belongs to site `k + 1`, and spin-up is bit value 0. With this convention
//! site 1 is the leftmost tensor factor, so `σ_1^z ⊗ I` has `+1` on the first
//! half of the diagonal.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest chain handled with dense storage (dimension 4096).
pub const MAX_QUBITS: usize = 12;

/// Absolute tolerance on `max |X - X†|` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn matrix(self) -> CMat {
        match self {
            PauliAxis::X => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            PauliAxis::Y => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            PauliAxis::Z => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }
}

pub fn dimension(n_qubits: usize) -> Result<usize> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(1usize << n_qubits)
}

/// `I ⊗ … ⊗ σ^α ⊗ … ⊗ I` with the Pauli matrix on `site` (1-based).
pub fn pauli_site_operator(axis: PauliAxis, site: usize, n_qubits: usize) -> Result<CMat> {
    pauli_string(&[(site, axis)], n_qubits)
}

/// Dense matrix of a product of single-site Pauli operators.
///
/// Sites are 1-based and must be distinct; an empty list yields the identity.
pub fn pauli_string(ops: &[(usize, PauliAxis)], n_qubits: usize) -> Result<CMat> {
    let dim = dimension(n_qubits)?;
    let mut m = CMat::zeros(dim, dim);
    add_pauli_string(&mut m, 1.0, ops, n_qubits)?;
    Ok(m)
}

/// `m += coeff · P` for the Pauli string `P`, touching only its nonzero entries.
pub fn add_pauli_string(
    m: &mut CMat,
    coeff: f64,
    ops: &[(usize, PauliAxis)],
    n_qubits: usize,
) -> Result<()> {
    let dim = dimension(n_qubits)?;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            left: m.nrows(),
            right: dim,
        });
    }
    for &(site, _) in ops {
        if site == 0 || site > n_qubits {
            return Err(Error::SiteOutOfRange { site, n_qubits });
        }
    }
    let mut flip = 0usize;
    for &(site, axis) in ops {
        if axis != PauliAxis::Z {
            flip |= 1 << (n_qubits - site);
        }
    }
    for col in 0..dim {
        let mut amp = C64::new(coeff, 0.0);
        for &(site, axis) in ops {
            let down = (col >> (n_qubits - site)) & 1 == 1;
            amp *= match (axis, down) {
                (PauliAxis::X, _) => ONE,
                (PauliAxis::Y, false) => I,
                (PauliAxis::Y, true) => -I,
                (PauliAxis::Z, false) => ONE,
                (PauliAxis::Z, true) => -ONE,
            };
        }
        m[(col ^ flip, col)] += amp;
    }
    Ok(())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermiticity_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `‖U†U − I‖_F`.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    let n = u.nrows();
    frobenius_norm(&(u.adjoint() * u - identity(n)))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Nearest unitary in Frobenius norm (polar factor `W V†` of `M = W Σ V†`).
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    w * v_t
}

/// Eigendecomposition `H = V Λ V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

/// A Hermitian matrix that caches its eigendecomposition.
///
/// The decomposition is computed on the first exponential and reused for
/// every later `θ`. The cache is a `OnceLock`, so a shared `HermitianOp`
/// can be exponentiated from several threads.
#[derive(Debug)]
pub struct HermitianOp {
    matrix: CMat,
    eigen: OnceLock<Eigen>,
}

impl Clone for HermitianOp {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            matrix: self.matrix.clone(),
            eigen,
        }
    }
}

impl HermitianOp {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix,
            eigen: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigen(&self) -> &Eigen {
        self.eigen.get_or_init(|| {
            let eig = SymmetricEigen::new(self.matrix.clone());
            Eigen {
                values: eig.eigenvalues,
                vectors: eig.eigenvectors,
            }
        })
    }

    /// `e^{iθH}`.
    pub fn exp_i(&self, theta: f64) -> CMat {
        let eig = self.eigen();
        let mut scaled = eig.vectors.clone();
        for (j, lambda) in eig.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, theta * lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        scaled * eig.vectors.adjoint()
    }

    /// Exact propagator `e^{−iHt}`.
    pub fn propagator(&self, t: f64) -> CMat {
        self.exp_i(-t)
    }
}

/// `e^{iθH}` for Hermitian `H`, via the cached eigendecomposition.
pub fn matexp_hermitian(h: &HermitianOp, theta: f64) -> CMat {
    h.exp_i(theta)
}

/// Normalized Frobenius distance `‖U − V‖_F / (2√D)`; lies in `[0, 1]` for unitaries.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErrorMetric(f64);

impl ErrorMetric {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:e}", self.0)
    }
}

fn check_same_dim(u: &CMat, v: &CMat) -> Result<()> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            left: u.nrows(),
            right: v.nrows(),
        });
    }
    Ok(())
}

pub fn frobenius_error(u: &CMat, v: &CMat) -> Result<ErrorMetric> {
    check_same_dim(u, v)?;
    let dim = u.nrows() as f64;
    Ok(ErrorMetric(frobenius_norm(&(u - v)) / (2.0 * dim.sqrt())))
}

/// `‖U(nτ) − U_stepⁿ‖_F / (2√D)` with the exact propagator of `h`.
pub fn strob_frobenius_error(
    h: &HermitianOp,
    u_step: &CMat,
    tau: f64,
    n: usize,
) -> Result<ErrorMetric> {
    check_same_dim(h.matrix(), u_step)?;
    let exact = h.propagator(n as f64 * tau);
    let approx = crate::reference::unitary_power(u_step, n);
    frobenius_error(&exact, &approx)
}
