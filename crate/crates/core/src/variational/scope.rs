//! Trace scopes: the full Hilbert space or a Krylov subspace of an initial state.

use crate::error::{Error, Result};
use crate::models::SpinState;
use crate::operator::{CMat, CVec, HermitianOp};

/// Post-projection norm below which a Krylov vector ends the basis.
pub const KRYLOV_BREAKDOWN: f64 = 1e-10;

/// `Tr_scope[X] = Tr[P X]` with `P` the identity or a Krylov projector.
#[derive(Debug, Clone, Default)]
pub enum TraceScope {
    #[default]
    Full,
    /// Orthonormal columns spanning `{ψ₀, Hψ₀, …, H^{𝒩−1}ψ₀}`.
    Krylov(CMat),
}

impl TraceScope {
    pub fn is_full(&self) -> bool {
        matches!(self, TraceScope::Full)
    }

    /// Subspace size, or `None` for the full space.
    pub fn size(&self) -> Option<usize> {
        match self {
            TraceScope::Full => None,
            TraceScope::Krylov(v) => Some(v.ncols()),
        }
    }

    pub fn basis(&self) -> Option<&CMat> {
        match self {
            TraceScope::Full => None,
            TraceScope::Krylov(v) => Some(v),
        }
    }
}

/// Krylov basis by modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Stops early when a new vector is numerically dependent on the previous
/// ones, so the returned scope may hold fewer than `n_vectors` columns.
pub fn krylov_basis(h: &HermitianOp, psi0: &SpinState, n_vectors: usize) -> Result<TraceScope> {
    let dim = h.dim();
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: psi0.dim(),
            right: dim,
        });
    }
    if n_vectors == 0 || n_vectors > dim {
        return Err(Error::InvalidAnsatz(format!(
            "Krylov size {n_vectors} outside 1..={dim}"
        )));
    }
    let first = psi0.amplitudes().clone();
    let norm = first.norm();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    let mut basis: Vec<CVec> = vec![first.unscale(norm)];
    while basis.len() < n_vectors {
        let mut w = h.matrix() * basis.last().expect("nonempty");
        let scale = w.norm();
        for _ in 0..2 {
            for v in &basis {
                let overlap = v.dotc(&w);
                w.axpy(-overlap, v, num_complex::Complex64::new(1.0, 0.0));
            }
        }
        let norm = w.norm();
        if norm < KRYLOV_BREAKDOWN * scale.max(1.0) {
            break;
        }
        basis.push(w.unscale(norm));
    }
    Ok(TraceScope::Krylov(CMat::from_columns(&basis)))
}
