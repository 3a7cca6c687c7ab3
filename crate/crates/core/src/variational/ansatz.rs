//! Parameterized product ansätze `U(c) = Π_p e^{i c_{s(p)} X_{b(p)}}`.
//!
//! Factors are written left to right, so factor 0 is the leftmost matrix and
//! the last factor acts first on a state. Each factor is bound to a slot; a
//! slot is either free (an integration variable) or fixed to a constant.
//! Several factors may share one free slot.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::HamiltonianSplit;
use crate::operator::{identity, CMat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Free,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub block: usize,
    pub slot: usize,
}

/// How slots are assigned to the factors of a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sharing {
    /// One free slot per factor.
    #[default]
    Free,
    /// Mirror-image factors share a slot (`ABA` has two slots).
    Palindromic,
}

#[derive(Debug, Clone)]
pub struct ProductAnsatz {
    split: HamiltonianSplit,
    factors: Vec<Factor>,
    slots: Vec<Slot>,
    /// index into the free-parameter vector for each slot
    free_index: Vec<Option<usize>>,
    n_free: usize,
}

impl ProductAnsatz {
    /// General constructor from `(block name, slot)` pairs.
    pub fn new(split: &HamiltonianSplit, factors: &[(&str, usize)], slots: Vec<Slot>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidAnsatz("no factors".into()));
        }
        let mut bound = Vec::with_capacity(factors.len());
        for &(name, slot) in factors {
            if slot >= slots.len() {
                return Err(Error::InvalidAnsatz(format!(
                    "factor {name} bound to slot {slot}, only {} slots",
                    slots.len()
                )));
            }
            bound.push(Factor {
                block: split.block_index(name)?,
                slot,
            });
        }
        for s in 0..slots.len() {
            if !bound.iter().any(|f| f.slot == s) {
                return Err(Error::InvalidAnsatz(format!("slot {s} is not used")));
            }
        }
        let mut free_index = Vec::with_capacity(slots.len());
        let mut n_free = 0;
        for s in &slots {
            match s {
                Slot::Free => {
                    free_index.push(Some(n_free));
                    n_free += 1;
                }
                Slot::Fixed(_) => free_index.push(None),
            }
        }
        if n_free == 0 {
            return Err(Error::InvalidAnsatz("no free slots".into()));
        }
        Ok(Self {
            split: split.clone(),
            factors: bound,
            slots,
            free_index,
            n_free,
        })
    }

    /// Ansatz from a string of single-character block names, e.g. `"BAB"`.
    pub fn from_pattern(split: &HamiltonianSplit, pattern: &str, sharing: Sharing) -> Result<Self> {
        let names: Vec<String> = pattern.chars().map(|c| c.to_string()).collect();
        let m = names.len();
        let slot_of = |p: usize| match sharing {
            Sharing::Free => p,
            Sharing::Palindromic => p.min(m - 1 - p),
        };
        if sharing == Sharing::Palindromic {
            for p in 0..m {
                if names[p] != names[m - 1 - p] {
                    return Err(Error::InvalidAnsatz(format!(
                        "pattern {pattern} is not a palindrome"
                    )));
                }
            }
        }
        let n_slots = (0..m).map(slot_of).max().map_or(0, |s| s + 1);
        let factors: Vec<(&str, usize)> = names
            .iter()
            .enumerate()
            .map(|(p, n)| (n.as_str(), slot_of(p)))
            .collect();
        Self::new(split, &factors, vec![Slot::Free; n_slots])
    }

    pub fn split(&self) -> &HamiltonianSplit {
        &self.split
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Block names of the factors concatenated, e.g. `"BAB"`.
    pub fn pattern(&self) -> String {
        self.factors
            .iter()
            .map(|f| self.split.blocks()[f.block].name())
            .collect()
    }

    /// Free-parameter index of factor `p`, or `None` if its slot is fixed.
    pub fn factor_param(&self, p: usize) -> Option<usize> {
        self.free_index[self.factors[p].slot]
    }

    fn check_len(&self, c: &DVector<f64>) -> Result<()> {
        if c.len() != self.n_free {
            return Err(Error::ParameterLength {
                expected: self.n_free,
                found: c.len(),
            });
        }
        Ok(())
    }

    /// Angle of every factor given the free parameters.
    pub fn factor_angles(&self, c: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_len(c)?;
        Ok(self
            .factors
            .iter()
            .map(|f| match self.slots[f.slot] {
                Slot::Free => c[self.free_index[f.slot].expect("free slot")],
                Slot::Fixed(v) => v,
            })
            .collect())
    }

    /// The factor exponentials `e^{i θ_p X_p}` in order.
    pub fn factor_exponentials(&self, c: &DVector<f64>) -> Result<Vec<CMat>> {
        let angles = self.factor_angles(c)?;
        Ok(self
            .factors
            .iter()
            .zip(angles)
            .map(|(f, theta)| self.split.blocks()[f.block].op().exp_i(theta))
            .collect())
    }

    pub fn assemble_unitary(&self, c: &DVector<f64>) -> Result<CMat> {
        let mut u = identity(self.split.dim());
        for e in self.factor_exponentials(c)? {
            u *= e;
        }
        Ok(u)
    }

    /// Free parameters that reproduce a fixed-coefficient formula at time `t`:
    /// each factor gets `−a_p t`. Fails if shared factors disagree.
    pub fn params_from_coefficients(&self, coeffs: &[f64], t: f64) -> Result<DVector<f64>> {
        if coeffs.len() != self.factors.len() {
            return Err(Error::ParameterLength {
                expected: self.factors.len(),
                found: coeffs.len(),
            });
        }
        let mut c = DVector::from_element(self.n_free, f64::NAN);
        for (p, &a) in coeffs.iter().enumerate() {
            if let Some(k) = self.factor_param(p) {
                let v = -a * t;
                if c[k].is_nan() {
                    c[k] = v;
                } else if c[k] != v {
                    return Err(Error::InvalidAnsatz(format!(
                        "shared slot {k} needs both {} and {v}",
                        c[k]
                    )));
                }
            }
        }
        Ok(c)
    }
}
