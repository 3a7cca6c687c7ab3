//! Spin-chain Hamiltonians and their block splittings.
//!
//! Each builder returns a [`HamiltonianSplit`] whose blocks are sums of
//! mutually commuting Pauli strings, so every block exponential is exact.
//! Chains use open boundaries and spin-1/2 operators `S = σ/2`; the
//! single-qubit model uses bare Pauli matrices.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{
    add_pauli_string, dimension, CMat, CVec, HermitianOp, PauliAxis, C64, ONE, ZERO,
};

/// `coeff · σ^{a1}_{s1} σ^{a2}_{s2} …` with 1-based distinct sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, PauliAxis)>,
}

impl PauliTerm {
    pub fn new(coeff: f64, ops: Vec<(usize, PauliAxis)>) -> Self {
        Self { coeff, ops }
    }

    /// Two Pauli strings commute iff they anticommute on an even number of sites.
    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        let clashes = self
            .ops
            .iter()
            .filter(|(s, a)| other.ops.iter().any(|(t, b)| s == t && a != b))
            .count();
        clashes % 2 == 0
    }
}

/// A named Hermitian block with its Pauli decomposition.
#[derive(Debug, Clone)]
pub struct Block {
    name: String,
    terms: Vec<PauliTerm>,
    op: Arc<HermitianOp>,
}

impl Block {
    pub fn from_terms(name: &str, terms: Vec<PauliTerm>, n_qubits: usize) -> Result<Self> {
        for (i, a) in terms.iter().enumerate() {
            for b in &terms[i + 1..] {
                if !a.commutes_with(b) {
                    return Err(Error::InvalidModel(format!(
                        "block {name} contains non-commuting terms {:?} and {:?}",
                        a.ops, b.ops
                    )));
                }
            }
        }
        let dim = dimension(n_qubits)?;
        let mut m = CMat::zeros(dim, dim);
        for t in &terms {
            add_pauli_string(&mut m, t.coeff, &t.ops, n_qubits)?;
        }
        Ok(Self {
            name: name.to_string(),
            terms,
            op: Arc::new(HermitianOp::new(m)?),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn op(&self) -> &Arc<HermitianOp> {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }
}

/// Model parameters, in energy units with ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Couplings {
    TwoLevel { h_x: f64, h_z: f64 },
    Qim { j: f64, h_x: f64, h_z: f64 },
    XxzNn { j1: f64, delta1: f64 },
    XxzNnn { j1: f64, j2: f64, delta1: f64, delta2: f64 },
}

/// Full Hamiltonian together with an ordered list of blocks summing to it.
#[derive(Debug, Clone)]
pub struct HamiltonianSplit {
    n_qubits: usize,
    h: Arc<HermitianOp>,
    blocks: Vec<Block>,
    couplings: Couplings,
}

impl HamiltonianSplit {
    pub fn from_blocks(n_qubits: usize, blocks: Vec<Block>, couplings: Couplings) -> Result<Self> {
        let dim = dimension(n_qubits)?;
        if blocks.is_empty() {
            return Err(Error::InvalidModel("no blocks".into()));
        }
        let mut h = CMat::zeros(dim, dim);
        for (i, b) in blocks.iter().enumerate() {
            if b.matrix().nrows() != dim {
                return Err(Error::DimensionMismatch {
                    left: b.matrix().nrows(),
                    right: dim,
                });
            }
            if blocks[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::InvalidModel(format!("duplicate block {}", b.name)));
            }
            h += b.matrix();
        }
        Ok(Self {
            n_qubits,
            h: Arc::new(HermitianOp::new(h)?),
            blocks,
            couplings,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn hamiltonian(&self) -> &Arc<HermitianOp> {
        &self.h
    }

    pub fn h(&self) -> &CMat {
        self.h.matrix()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn block_names(&self) -> Vec<&str> {
        self.blocks.iter().map(|b| b.name.as_str()).collect()
    }

    pub fn block_index(&self, name: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::UnknownBlock(name.to_string()))
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        Ok(&self.blocks[self.block_index(name)?])
    }

    /// Split whose Hamiltonian is the sum of the named blocks only.
    pub fn restricted(&self, names: &[&str]) -> Result<Self> {
        let blocks = names
            .iter()
            .map(|n| self.block(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(self.n_qubits, blocks, self.couplings)
    }

    /// Replaces the named blocks by one effective block `name` holding their
    /// sum, placed where the first of them was. The merged block's terms need
    /// not commute; it is exponentiated by diagonalization like any other.
    pub fn merged(&self, names: &[&str], name: &str) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::InvalidModel("merge needs at least two blocks".into()));
        }
        let first = names
            .iter()
            .map(|n| self.block_index(n))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min()
            .unwrap_or(0);
        let mut terms = Vec::new();
        let mut m = CMat::zeros(self.dim(), self.dim());
        for n in names {
            let b = self.block(n)?;
            terms.extend(b.terms.iter().cloned());
            m += b.matrix();
        }
        let effective = Block {
            name: name.to_string(),
            terms,
            op: Arc::new(HermitianOp::new(m)?),
        };
        let mut blocks = Vec::with_capacity(self.blocks.len() + 1 - names.len());
        for (i, b) in self.blocks.iter().enumerate() {
            if i == first {
                blocks.push(effective.clone());
            }
            if !names.contains(&b.name.as_str()) {
                blocks.push(b.clone());
            }
        }
        Self::from_blocks(self.n_qubits, blocks, self.couplings)
    }

    /// Same blocks, stored in the given order (each name exactly once).
    pub fn reordered(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.blocks.len() {
            return Err(Error::BlockCount {
                expected: self.blocks.len(),
                found: order.len(),
            });
        }
        let mut blocks = Vec::with_capacity(order.len());
        for (i, name) in order.iter().enumerate() {
            if order[..i].contains(name) {
                return Err(Error::InvalidModel(format!("block {name} listed twice")));
            }
            blocks.push(self.block(name)?.clone());
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            h: Arc::clone(&self.h),
            blocks,
            couplings: self.couplings,
        })
    }
}

/// `H = h_x σ_x + h_z σ_z` with blocks `A = h_x σ_x`, `B = h_z σ_z`.
pub fn build_two_level(h_x: f64, h_z: f64) -> Result<HamiltonianSplit> {
    if h_x == 0.0 && h_z == 0.0 {
        return Err(Error::InvalidModel("two-level model needs a nonzero field".into()));
    }
    let a = Block::from_terms("A", vec![PauliTerm::new(h_x, vec![(1, PauliAxis::X)])], 1)?;
    let b = Block::from_terms("B", vec![PauliTerm::new(h_z, vec![(1, PauliAxis::Z)])], 1)?;
    HamiltonianSplit::from_blocks(1, vec![a, b], Couplings::TwoLevel { h_x, h_z })
}

/// Closed-form `e^{−iHt} = cos(Ωt) − (i/Ω) sin(Ωt) H` with `Ω = √(h_x² + h_z²)`.
pub fn exact_two_level_propagator(h_x: f64, h_z: f64, t: f64) -> Result<CMat> {
    let omega = h_x.hypot(h_z);
    if omega == 0.0 {
        return Err(Error::InvalidModel("two-level model needs a nonzero field".into()));
    }
    let (s, c) = (omega * t).sin_cos();
    let k = s / omega;
    Ok(CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(c, -k * h_z),
            C64::new(0.0, -k * h_x),
            C64::new(0.0, -k * h_x),
            C64::new(c, k * h_z),
        ],
    ))
}

fn check_chain(n_qubits: usize, min: usize) -> Result<()> {
    if n_qubits < min {
        return Err(Error::InvalidModel(format!(
            "chain needs at least {min} sites, got {n_qubits}"
        )));
    }
    dimension(n_qubits).map(|_| ())
}

// S^a_j S^a_k = σ^a_j σ^a_k / 4
fn bond(coeff: f64, j: usize, k: usize, axis: PauliAxis) -> PauliTerm {
    PauliTerm::new(coeff / 4.0, vec![(j, axis), (k, axis)])
}

fn field(coeff: f64, j: usize, axis: PauliAxis) -> PauliTerm {
    PauliTerm::new(coeff / 2.0, vec![(j, axis)])
}

/// Quantum Ising chain `J Σ S^z_j S^z_{j+1} + h_x Σ S^x_j + h_z Σ S^z_j`.
///
/// Block `A` holds the transverse field, block `B` the bonds and the
/// longitudinal field.
pub fn build_qim(j: f64, h_x: f64, h_z: f64, n_qubits: usize) -> Result<HamiltonianSplit> {
    check_chain(n_qubits, 2)?;
    let a_terms = (1..=n_qubits).map(|s| field(h_x, s, PauliAxis::X)).collect();
    let mut b_terms: Vec<PauliTerm> = (1..n_qubits)
        .map(|s| bond(j, s, s + 1, PauliAxis::Z))
        .collect();
    b_terms.extend((1..=n_qubits).map(|s| field(h_z, s, PauliAxis::Z)));
    let a = Block::from_terms("A", a_terms, n_qubits)?;
    let b = Block::from_terms("B", b_terms, n_qubits)?;
    HamiltonianSplit::from_blocks(n_qubits, vec![a, b], Couplings::Qim { j, h_x, h_z })
}

fn xxz_bond(j1: f64, delta: f64, s: usize, t: usize) -> [PauliTerm; 3] {
    [
        bond(j1, s, t, PauliAxis::X),
        bond(j1, s, t, PauliAxis::Y),
        bond(j1 * delta, s, t, PauliAxis::Z),
    ]
}

/// Nearest-neighbour XXZ chain split into even and odd bonds.
///
/// Bond `(j, j+1)` goes to block `A` for even `j` and to block `B` for odd `j`.
pub fn build_xxz_nn(j1: f64, delta1: f64, n_qubits: usize) -> Result<HamiltonianSplit> {
    check_chain(n_qubits, 3)?;
    let mut a_terms = Vec::new();
    let mut b_terms = Vec::new();
    for s in 1..n_qubits {
        let target = if s % 2 == 0 { &mut a_terms } else { &mut b_terms };
        target.extend(xxz_bond(j1, delta1, s, s + 1));
    }
    let a = Block::from_terms("A", a_terms, n_qubits)?;
    let b = Block::from_terms("B", b_terms, n_qubits)?;
    HamiltonianSplit::from_blocks(n_qubits, vec![a, b], Couplings::XxzNn { j1, delta1 })
}

/// XXZ chain with nearest- and next-nearest-neighbour couplings, split by
/// spin component: `A` = all XX bonds, `B` = all YY bonds, `C` = all ZZ bonds.
pub fn build_xxz_nnn(
    j1: f64,
    j2: f64,
    delta1: f64,
    delta2: f64,
    n_qubits: usize,
) -> Result<HamiltonianSplit> {
    check_chain(n_qubits, 3)?;
    let component = |axis: PauliAxis, d1: f64, d2: f64| {
        let mut terms: Vec<PauliTerm> = (1..n_qubits)
            .map(|s| bond(j1 * d1, s, s + 1, axis))
            .collect();
        terms.extend((1..n_qubits - 1).map(|s| bond(j2 * d2, s, s + 2, axis)));
        terms
    };
    let a = Block::from_terms("A", component(PauliAxis::X, 1.0, 1.0), n_qubits)?;
    let b = Block::from_terms("B", component(PauliAxis::Y, 1.0, 1.0), n_qubits)?;
    let c = Block::from_terms("C", component(PauliAxis::Z, delta1, delta2), n_qubits)?;
    HamiltonianSplit::from_blocks(
        n_qubits,
        vec![a, b, c],
        Couplings::XxzNnn {
            j1,
            j2,
            delta1,
            delta2,
        },
    )
}

/// Normalized state vector on `n_qubits` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n_qubits: usize,
    amplitudes: CVec,
}

impl SpinState {
    /// Normalizes `amplitudes`; fails on a zero vector or a length that is not `2^N`.
    pub fn new(n_qubits: usize, amplitudes: CVec) -> Result<Self> {
        let dim = dimension(n_qubits)?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                left: amplitudes.len(),
                right: dim,
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    /// `U|ψ⟩`, renormalized to absorb round-off.
    pub fn evolve(&self, u: &CMat) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: u.ncols(),
                right: self.dim(),
            });
        }
        Self::new(self.n_qubits, u * &self.amplitudes)
    }
}

/// `|↑⟩^{⊗N}`, the first computational basis vector.
pub fn all_up_state(n_qubits: usize) -> Result<SpinState> {
    let dim = dimension(n_qubits)?;
    let mut v = CVec::from_element(dim, ZERO);
    v[0] = ONE;
    SpinState::new(n_qubits, v)
}

/// `(1/N) Σ_j ⟨ψ|S^z_j|ψ⟩`.
pub fn magnetization(psi: &SpinState) -> f64 {
    let n = psi.n_qubits();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * (n as f64 - 2.0 * b.count_ones() as f64))
        .sum();
    total / (2.0 * n as f64)
}
