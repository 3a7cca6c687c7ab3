//! Exact evolution and fixed-coefficient product formulas.

use crate::error::{Error, Result};
use crate::models::HamiltonianSplit;
use crate::operator::{identity, polar_unitary, CMat, HermitianOp};

/// Multiplications between polar re-projections in [`unitary_power`].
pub const REUNITARIZE_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaKind {
    Ts1,
    Ts2,
    Ruth4,
    Ts7Abc,
}

impl FormulaKind {
    pub fn name(self) -> &'static str {
        match self {
            FormulaKind::Ts1 => "ts1",
            FormulaKind::Ts2 => "ts2",
            FormulaKind::Ruth4 => "ruth4",
            FormulaKind::Ts7Abc => "ts7",
        }
    }
}

/// Product formula `Π_k e^{−i a_k t X_k}` over factors `(block index, a_k)`.
///
/// Factors are stored left to right as written, so the last one acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFormula {
    pub kind: FormulaKind,
    pub factors: Vec<(usize, f64)>,
}

/// Ruth's coefficients `p = 1/(2 − 2^{1/3})`, `q = 1 − 2p`.
pub fn ruth_coefficients() -> (f64, f64) {
    let p = 1.0 / (2.0 - 2f64.cbrt());
    (p, 1.0 - 2.0 * p)
}

fn expect_blocks(split: &HamiltonianSplit, n: usize) -> Result<()> {
    if split.n_blocks() != n {
        return Err(Error::BlockCount {
            expected: n,
            found: split.n_blocks(),
        });
    }
    Ok(())
}

impl SplitFormula {
    pub fn new(kind: FormulaKind, split: &HamiltonianSplit) -> Result<Self> {
        let factors = match kind {
            FormulaKind::Ts1 => {
                expect_blocks(split, 2)?;
                vec![(0, 1.0), (1, 1.0)]
            }
            FormulaKind::Ts2 => {
                expect_blocks(split, 2)?;
                vec![(0, 0.5), (1, 1.0), (0, 0.5)]
            }
            FormulaKind::Ruth4 => {
                // TS2(pt) TS2(qt) TS2(pt) with adjacent outer factors merged
                expect_blocks(split, 2)?;
                let (p, q) = ruth_coefficients();
                vec![
                    (0, p / 2.0),
                    (1, p),
                    (0, (p + q) / 2.0),
                    (1, q),
                    (0, (p + q) / 2.0),
                    (1, p),
                    (0, p / 2.0),
                ]
            }
            FormulaKind::Ts7Abc => {
                expect_blocks(split, 3)?;
                vec![
                    (2, 0.25),
                    (1, 0.5),
                    (2, 0.25),
                    (0, 1.0),
                    (2, 0.25),
                    (1, 0.5),
                    (2, 0.25),
                ]
            }
        };
        Ok(Self { kind, factors })
    }

    pub fn n_exponentials(&self) -> usize {
        self.factors.len()
    }

    /// Sum of coefficients per block; each is 1 for a consistent formula.
    pub fn block_weights(&self, n_blocks: usize) -> Vec<f64> {
        let mut w = vec![0.0; n_blocks];
        for &(b, a) in &self.factors {
            w[b] += a;
        }
        w
    }

    pub fn unitary(&self, split: &HamiltonianSplit, t: f64) -> CMat {
        let mut u = identity(split.dim());
        for &(b, a) in &self.factors {
            u *= split.blocks()[b].op().propagator(a * t);
        }
        u
    }
}

/// `e^{−iHt}` via eigendecomposition.
pub fn exact_propagator(h: &HermitianOp, t: f64) -> CMat {
    h.propagator(t)
}

/// `e^{−itX₁} e^{−itX₂}` in the split's stored order.
pub fn ts1(split: &HamiltonianSplit, t: f64) -> Result<CMat> {
    Ok(SplitFormula::new(FormulaKind::Ts1, split)?.unitary(split, t))
}

/// `e^{−i(t/2)X₁} e^{−itX₂} e^{−i(t/2)X₁}`; the first stored block is outer.
pub fn ts2(split: &HamiltonianSplit, t: f64) -> Result<CMat> {
    Ok(SplitFormula::new(FormulaKind::Ts2, split)?.unitary(split, t))
}

/// Ruth's fourth-order formula as seven exponentials.
pub fn ruth4(split: &HamiltonianSplit, t: f64) -> Result<CMat> {
    Ok(SplitFormula::new(FormulaKind::Ruth4, split)?.unitary(split, t))
}

/// `U_BC e^{−itA} U_BC` with `U_BC = e^{−i(t/4)C} e^{−i(t/2)B} e^{−i(t/4)C}`.
pub fn ts7_abc(split: &HamiltonianSplit, t: f64) -> Result<CMat> {
    Ok(SplitFormula::new(FormulaKind::Ts7Abc, split)?.unitary(split, t))
}

/// `Uⁿ` by repeated multiplication, re-projected onto the unitaries every
/// [`REUNITARIZE_EVERY`] products.
pub fn unitary_power(u: &CMat, n: usize) -> CMat {
    let mut acc = identity(u.nrows());
    for k in 1..=n {
        acc = u * acc;
        if k % REUNITARIZE_EVERY == 0 {
            acc = polar_unitary(&acc);
        }
    }
    acc
}

/// Number of whole steps of size `tau` in `t_total`.
pub fn step_count(t_total: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveStep(tau));
    }
    // guard against 5τ/τ evaluating to 4.999…
    let ratio = t_total / tau;
    let n = (ratio + 1e-9 * ratio.abs().max(1.0)).floor();
    Ok(n.max(0.0) as usize)
}

/// `(U_stepⁿ, n)` with `n = ⌊t_total/τ⌋`.
pub fn repeat_stroboscopic(u_step: &CMat, t_total: f64, tau: f64) -> Result<(CMat, usize)> {
    let n = step_count(t_total, tau)?;
    Ok((unitary_power(u_step, n), n))
}
