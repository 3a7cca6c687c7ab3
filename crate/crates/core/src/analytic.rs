//! Closed-form traces and cubic-order approximate parameters.
//!
//! For a short-time expansion of a product ansatz the parameters read
//! `c_j(t) ≈ a_j t + b_j t³/6`, where `a_j` are the Trotter–Suzuki
//! coefficients and `b_j` depend on the Hamiltonian only through a handful of
//! traces of the two blocks. Those traces are available in closed form for
//! the Ising and XXZ chains, so the approximate parameters cost no matrix work.
//!
//! A [`TraceRecord`] is always stated for an ordered pair of roles: `A` is the
//! block of the outer (first and last) factors, `B` the block in between. The
//! Ising closed forms use the labelling `A` = bonds plus longitudinal field,
//! `B` = transverse field, which is the opposite of the block names in
//! [`build_qim`](crate::models::build_qim); [`qim_pair_traces`] does the
//! translation.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::HamiltonianSplit;
use crate::operator::{trace, CMat};
use crate::variational::{Lagrangian, ProductAnsatz};

/// Relative size below which `Tr[A²]Tr[B²] − Tr[AB]²` counts as zero.
const DEGENERATE_REL: f64 = 1e-13;

/// Traces of the blocks that enter the cubic coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub a2: f64,
    pub b2: f64,
    pub ab: f64,
    pub a2b2: f64,
    /// `Tr[(AB)²]`
    pub abab: f64,
    /// extra traces when a third block `C` is present
    pub three: Option<ThreeBlockTraces>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeBlockTraces {
    pub c2: f64,
    pub ac: f64,
    pub bc: f64,
    pub a2c2: f64,
    pub b2c2: f64,
    pub a2bc: f64,
    pub a2cb: f64,
    pub acac: f64,
    pub bcbc: f64,
    pub abac: f64,
}

impl TraceRecord {
    pub fn pair(a2: f64, b2: f64, ab: f64, a2b2: f64, abab: f64) -> Self {
        Self {
            a2,
            b2,
            ab,
            a2b2,
            abab,
            three: None,
        }
    }

    /// Record with the roles of `A` and `B` exchanged (two-block part only).
    pub fn swapped(&self) -> Self {
        Self::pair(self.b2, self.a2, self.ab, self.a2b2, self.abab)
    }

    /// Pair record for `(A, B + C)`.
    pub fn merged_bc(&self) -> Result<Self> {
        let x = self.require_three()?;
        Ok(Self::pair(
            self.a2,
            self.b2 + x.c2 + 2.0 * x.bc,
            self.ab + x.ac,
            self.a2b2 + x.a2c2 + x.a2bc + x.a2cb,
            self.abab + x.acac + 2.0 * x.abac,
        ))
    }

    /// Pair record for `(B, C)`.
    pub fn inner_bc(&self) -> Result<Self> {
        let x = self.require_three()?;
        Ok(Self::pair(self.b2, x.c2, x.bc, x.b2c2, x.bcbc))
    }

    fn require_three(&self) -> Result<&ThreeBlockTraces> {
        self.three
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("trace record has no third block".into()))
    }
}

/// `χ = (Tr[A²B²] − Tr[(AB)²]) / (Tr[A²]Tr[B²] − Tr[AB]²)`.
pub fn chi_factor(tr: &TraceRecord) -> Result<f64> {
    let den = tr.a2 * tr.b2 - tr.ab * tr.ab;
    let scale = tr.a2.abs() * tr.b2.abs();
    if !(den > DEGENERATE_REL * scale) || scale == 0.0 {
        return Err(Error::DegenerateTraces(den));
    }
    Ok((tr.a2b2 - tr.abab) / den)
}

/// Linear and cubic Taylor coefficients of one factor's parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicTerm {
    pub linear: f64,
    /// third derivative at `t = 0`
    pub cubic: f64,
}

impl CubicTerm {
    pub fn eval(&self, t: f64) -> f64 {
        self.linear * t + self.cubic * t.powi(3) / 6.0
    }
}

/// Cubic approximation, one entry per factor of the ansatz pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicParams {
    pub terms: Vec<CubicTerm>,
}

impl CubicParams {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.terms.iter().map(|c| c.eval(t)).collect()
    }

    /// Free-parameter vector of `ansatz` at time `t`. Factors sharing a slot
    /// must carry equal coefficients.
    pub fn params_for(&self, ansatz: &ProductAnsatz, t: f64) -> Result<DVector<f64>> {
        if self.terms.len() != ansatz.n_factors() {
            return Err(Error::ParameterLength {
                expected: ansatz.n_factors(),
                found: self.terms.len(),
            });
        }
        let mut c = DVector::from_element(ansatz.n_free(), f64::NAN);
        for (p, term) in self.terms.iter().enumerate() {
            let Some(k) = ansatz.factor_param(p) else {
                continue;
            };
            let v = term.eval(t);
            if c[k].is_nan() {
                c[k] = v;
            } else if (c[k] - v).abs() > 1e-14 * (1.0 + v.abs()) {
                return Err(Error::InvalidAnsatz(format!(
                    "factors sharing slot {k} have different cubic coefficients"
                )));
            }
        }
        Ok(c)
    }
}

/// Two factors `e^{i c₀ A} e^{i c₁ B}`.
pub fn cubic_2exp(tr: &TraceRecord, lagrangian: Lagrangian) -> Result<CubicParams> {
    let chi = chi_factor(tr)?;
    let (c0, c1) = match lagrangian {
        Lagrangian::L1 => (-2.0 * chi * tr.ab, 2.0 * chi * tr.a2),
        Lagrangian::L2 => (
            -2.0 * chi * (tr.b2 + tr.ab),
            2.0 * chi * (tr.a2 + tr.ab),
        ),
    };
    Ok(CubicParams {
        terms: vec![
            CubicTerm {
                linear: -1.0,
                cubic: c0,
            },
            CubicTerm {
                linear: -1.0,
                cubic: c1,
            },
        ],
    })
}

/// Three factors `e^{i c₀ A} e^{i c₁ B} e^{i c₂ A}`; both principles agree.
pub fn cubic_3exp(tr: &TraceRecord) -> Result<CubicParams> {
    let chi = chi_factor(tr)?;
    let outer = CubicTerm {
        linear: -0.5,
        cubic: -chi * (tr.b2 + 0.5 * tr.ab) / 2.0,
    };
    let middle = CubicTerm {
        linear: -1.0,
        cubic: chi * (tr.ab + 0.5 * tr.a2),
    };
    Ok(CubicParams {
        terms: vec![outer, middle, outer],
    })
}

/// Ising chain traces in the closed-form labelling (`A` = `J ZZ + h_z Z`
/// block, `B` = transverse field), open boundary.
pub fn ising_closed_traces(j: f64, h_x: f64, h_z: f64, n: usize) -> Result<TraceRecord> {
    check_sites(n, 2)?;
    let nf = n as f64;
    let p = 2f64.powi(n as i32);
    let (j2, x2, z2) = (j * j, h_x * h_x, h_z * h_z);
    let a2 = (nf - 1.0) * p * j2 / 16.0 + nf * p * z2 / 4.0;
    let b2 = nf * p * x2 / 4.0;
    let a2b2 = nf * p * x2 / 4.0 * ((nf - 1.0) * j2 / 16.0 + nf * z2 / 4.0);
    let abab = p * x2 / 4.0 * (j2 / 16.0 * (nf - 1.0) * (nf - 4.0) + z2 / 4.0 * nf * (nf - 2.0));
    Ok(TraceRecord::pair(a2, b2, 0.0, a2b2, abab))
}

/// QIM traces with the outer role given to the model block named `outer`
/// (`"A"` = transverse field, `"B"` = bonds and longitudinal field).
pub fn qim_pair_traces(j: f64, h_x: f64, h_z: f64, n: usize, outer: &str) -> Result<TraceRecord> {
    let tr = ising_closed_traces(j, h_x, h_z, n)?;
    match outer {
        "B" => Ok(tr),
        "A" => Ok(tr.swapped()),
        other => Err(Error::UnknownBlock(other.to_string())),
    }
}

/// Even/odd-bond XXZ chain traces; `A` holds the even bonds.
pub fn xxz_nn_closed_traces(j1: f64, delta1: f64, n: usize) -> Result<TraceRecord> {
    check_sites(n, 3)?;
    let p = 2f64.powi(n as i32);
    let (even, odd) = bond_parity_counts(n);
    let d2 = delta1 * delta1;
    let unit = j1 * j1 * p * (2.0 + d2) / 16.0;
    let q = (j1 / 4.0).powi(4);
    let a2b2 = q * (2.0 + d2).powi(2) * p * even * odd;
    let abab = a2b2 - 4.0 * q * (1.0 + 2.0 * d2) * p * (n as f64 - 2.0);
    Ok(TraceRecord::pair(unit * even, unit * odd, 0.0, a2b2, abab))
}

/// `(⌊(N−1)/2⌋, ⌈(N−1)/2⌉)`: numbers of even- and odd-start bonds.
pub fn bond_parity_counts(n: usize) -> (f64, f64) {
    let bonds = n.saturating_sub(1);
    ((bonds / 2) as f64, bonds.div_ceil(2) as f64)
}

/// XX/YY/ZZ-component traces for the XXZ chain with next-nearest neighbours.
pub fn xxz_nnn_closed_traces(j1: f64, j2: f64, delta1: f64, delta2: f64, n: usize) -> Result<TraceRecord> {
    check_sites(n, 3)?;
    let nf = n as f64;
    let p = 2f64.powi(n as i32);
    let p8 = p / 256.0;
    let (d1s, d2s) = (delta1 * delta1, delta2 * delta2);
    let s = j1 * j1 * (nf - 1.0) + j2 * j2 * (nf - 2.0);
    let sz = d1s * j1 * j1 * (nf - 1.0) + d2s * j2 * j2 * (nf - 2.0);
    let tail = if n == 3 { 1.0 } else { nf * nf - 8.0 * nf + 20.0 };
    let mixed = nf * nf - 11.0 * nf + 22.0;
    let a2bc = -(j1 / 4.0).powi(2) * (j2 / 4.0) * (delta2 * j2 / 2.0 + delta1 * j1) * p * (nf - 2.0);
    let acac = p8
        * (d1s * j1.powi(4) * (nf - 3.0).powi(2)
            + (d1s + d2s) * j1 * j1 * j2 * j2 * mixed
            + d2s * j2.powi(4) * tail);
    Ok(TraceRecord {
        a2: p / 16.0 * s,
        b2: p / 16.0 * s,
        ab: 0.0,
        a2b2: p8 * s * s,
        abab: p8
            * (j1.powi(4) * (nf - 3.0).powi(2) + 2.0 * j1 * j1 * j2 * j2 * mixed + j2.powi(4) * tail),
        three: Some(ThreeBlockTraces {
            c2: p / 16.0 * sz,
            ac: 0.0,
            bc: 0.0,
            a2c2: p8 * sz * s,
            b2c2: p8 * sz * s,
            a2bc,
            a2cb: a2bc,
            acac,
            bcbc: acac,
            abac: p / 128.0 * (nf - 2.0) * j1 * j1 * j2 * (2.0 * delta1 * j1 + delta2 * j2),
        }),
    })
}

fn check_sites(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidModel(format!("closed traces need N ≥ {min}, got {n}")));
    }
    Ok(())
}

fn tr_re(m: &CMat) -> f64 {
    trace(m).re
}

/// Dense traces of the named blocks, in role order (`[A, B]` or `[A, B, C]`).
pub fn dense_traces(split: &HamiltonianSplit, roles: &[&str]) -> Result<TraceRecord> {
    if !(2..=3).contains(&roles.len()) {
        return Err(Error::BlockCount {
            expected: 2,
            found: roles.len(),
        });
    }
    let a = split.block(roles[0])?.matrix();
    let b = split.block(roles[1])?.matrix();
    let (aa, bb, ab) = (a * a, b * b, a * b);
    let mut rec = TraceRecord::pair(tr_re(&aa), tr_re(&bb), tr_re(&ab), tr_re(&(&aa * &bb)), tr_re(&(&ab * &ab)));
    if let Some(name) = roles.get(2) {
        let c = split.block(name)?.matrix();
        let (cc, ac, bc) = (c * c, a * c, b * c);
        rec.three = Some(ThreeBlockTraces {
            c2: tr_re(&cc),
            ac: tr_re(&ac),
            bc: tr_re(&bc),
            a2c2: tr_re(&(&aa * &cc)),
            b2c2: tr_re(&(&bb * &cc)),
            a2bc: tr_re(&(&aa * &bc)),
            a2cb: tr_re(&(&aa * &(c * b))),
            acac: tr_re(&(&ac * &ac)),
            bcbc: tr_re(&(&bc * &bc)),
            abac: tr_re(&(&ab * &ac)),
        });
    }
    Ok(rec)
}

/// Six parameters of the two-stage three-block ansatz
/// `e^{i c₀ A} e^{i c₃ B} e^{i c₄ C} e^{i c₅ B} e^{i c₂ A}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepParams {
    /// `c₀ … c₅`; `c₁` is the angle of the merged `B + C` factor
    pub c: [f64; 6],
}

impl TwoStepParams {
    /// Factor angles for the pattern `ABCBA`.
    pub fn factor_angles(&self) -> [f64; 5] {
        let c = &self.c;
        [c[0], c[3], c[4], c[5], c[2]]
    }
}

/// Outer stage: three-factor approximation for `(A, B + C)`. Inner stage: the
/// merged factor `e^{i c₁ (B + C)}` is itself a three-factor product over
/// `(B, C)` whose effective evolution time is `−c₁`.
pub fn three_block_two_step_params(outer: &TraceRecord, inner: &TraceRecord, t: f64) -> Result<TwoStepParams> {
    let o = cubic_3exp(outer)?;
    let i = cubic_3exp(inner)?;
    let c0 = o.terms[0].eval(t);
    let c1 = o.terms[1].eval(t);
    let s = -c1;
    let c35 = i.terms[0].eval(s);
    let c4 = i.terms[1].eval(s);
    Ok(TwoStepParams {
        c: [c0, c1, c0, c35, c4, c35],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_qim, build_two_level, build_xxz_nn, build_xxz_nnn};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    fn assert_record(closed: &TraceRecord, dense: &TraceRecord) {
        let pairs = [
            (closed.a2, dense.a2),
            (closed.b2, dense.b2),
            (closed.ab, dense.ab),
            (closed.a2b2, dense.a2b2),
            (closed.abab, dense.abab),
        ];
        for (k, (c, d)) in pairs.iter().enumerate() {
            assert!(close(*c, *d, 1e-10), "entry {k}: {c} vs {d}");
        }
        if let (Some(c), Some(d)) = (closed.three, dense.three) {
            let pairs = [
                (c.c2, d.c2),
                (c.ac, d.ac),
                (c.bc, d.bc),
                (c.a2c2, d.a2c2),
                (c.b2c2, d.b2c2),
                (c.a2bc, d.a2bc),
                (c.a2cb, d.a2cb),
                (c.acac, d.acac),
                (c.bcbc, d.bcbc),
                (c.abac, d.abac),
            ];
            for (k, (c, d)) in pairs.iter().enumerate() {
                assert!(close(*c, *d, 1e-10), "three-block entry {k}: {c} vs {d}");
            }
        } else {
            assert_eq!(closed.three.is_some(), dense.three.is_some());
        }
    }

    #[test]
    fn ising_small_values() {
        let tr = ising_closed_traces(1.0, 0.0, 1.0, 3).unwrap();
        assert!(close(tr.a2, 7.0, 1e-15));
        let tr = ising_closed_traces(0.0, 1.0, 0.0, 3).unwrap();
        assert!(close(tr.b2, 6.0, 1e-15));
        let tr = ising_closed_traces(1.0, 1.0, 1.0, 3).unwrap();
        assert!(close(tr.abab, 1.25, 1e-15));
    }

    #[test]
    fn closed_forms_match_dense() {
        for n in 3..=6 {
            let s = build_qim(0.7, -1.2, 0.4, n).unwrap();
            assert_record(
                &ising_closed_traces(0.7, -1.2, 0.4, n).unwrap(),
                &dense_traces(&s, &["B", "A"]).unwrap(),
            );
            let s = build_xxz_nn(1.3, -0.6, n).unwrap();
            assert_record(
                &xxz_nn_closed_traces(1.3, -0.6, n).unwrap(),
                &dense_traces(&s, &["A", "B"]).unwrap(),
            );
            let s = build_xxz_nnn(2.0, 0.5, 0.2, -0.7, n).unwrap();
            assert_record(
                &xxz_nnn_closed_traces(2.0, 0.5, 0.2, -0.7, n).unwrap(),
                &dense_traces(&s, &["A", "B", "C"]).unwrap(),
            );
        }
    }

    #[test]
    fn qim_mapping() {
        let s = build_qim(1.0, 0.8, 0.3, 4).unwrap();
        assert_record(
            &qim_pair_traces(1.0, 0.8, 0.3, 4, "A").unwrap(),
            &dense_traces(&s, &["A", "B"]).unwrap(),
        );
        assert!(qim_pair_traces(1.0, 0.8, 0.3, 4, "C").is_err());
    }

    #[test]
    fn merged_records_match_dense() {
        let s = build_xxz_nnn(2.0, 0.5, 0.2, 0.2, 5).unwrap();
        let tr = xxz_nnn_closed_traces(2.0, 0.5, 0.2, 0.2, 5).unwrap();
        let m = s.merged(&["B", "C"], "D").unwrap();
        assert_record(&tr.merged_bc().unwrap(), &dense_traces(&m, &["A", "D"]).unwrap());
        assert_record(&tr.inner_bc().unwrap(), &dense_traces(&s, &["B", "C"]).unwrap());
        assert!(tr.swapped().merged_bc().is_err());
    }

    #[test]
    fn chi_two_level_by_hand() {
        // A = h_x σx, B = h_z σz: A²B² = h_x²h_z² I, (AB)² = −h_x²h_z² I
        let (hx, hz) = (5.0f64, 2.0f64);
        let s = build_two_level(hx, hz).unwrap();
        let chi = chi_factor(&dense_traces(&s, &["A", "B"]).unwrap()).unwrap();
        let expect = (2.0 * hx * hx * hz * hz + 2.0 * hx * hx * hz * hz) / (4.0 * hx * hx * hz * hz);
        assert!(close(chi, expect, 1e-14));
    }

    #[test]
    fn chi_zero_for_commuting_blocks() {
        // Tr[A²B²] = Tr[(AB)²] whenever [A, B] = 0
        let tr = TraceRecord::pair(3.0, 5.0, 1.0, 7.0, 7.0);
        assert_eq!(chi_factor(&tr).unwrap(), 0.0);
        let c = cubic_3exp(&tr).unwrap();
        assert_eq!(c.eval(0.3), vec![-0.15, -0.3, -0.15]);
        let c = cubic_2exp(&tr, Lagrangian::L2).unwrap();
        assert_eq!(c.eval(0.3), vec![-0.3, -0.3]);
    }

    #[test]
    fn degenerate_blocks_rejected() {
        let tr = TraceRecord::pair(2.0, 8.0, 4.0, 1.0, 1.0);
        assert!(matches!(chi_factor(&tr), Err(Error::DegenerateTraces(_))));
        let tr = TraceRecord::pair(0.0, 8.0, 0.0, 0.0, 0.0);
        assert!(chi_factor(&tr).is_err());
    }

    #[test]
    fn qim_two_exp_matches_closed_expression() {
        for n in [3usize, 5, 8] {
            let (j, hx, hz) = (0.9, 1.1, 0.6);
            let tr = ising_closed_traces(j, hx, hz, n).unwrap();
            let c = cubic_2exp(&tr, Lagrangian::L1).unwrap();
            let nf = n as f64;
            let expect = (1.0 - 1.0 / nf) * j * j / 12.0 + hz * hz / 6.0;
            assert_eq!(c.terms[0].cubic, 0.0);
            assert!(close(c.terms[1].cubic / 6.0, expect, 1e-13));
            let c2 = cubic_2exp(&tr, Lagrangian::L2).unwrap();
            let chi = chi_factor(&tr).unwrap();
            assert!(close(c2.terms[0].cubic - c.terms[0].cubic, -2.0 * chi * tr.b2, 1e-13));
            assert!(close(c2.terms[1].cubic - c.terms[1].cubic, 2.0 * chi * tr.ab, 1e-13));
        }
    }

    #[test]
    fn qim_three_exp_matches_closed_expression() {
        let (j, hx, hz) = (1.0, 1.0, 1.0);
        for n in [3usize, 5, 7] {
            let nf = n as f64;
            let c = cubic_3exp(&ising_closed_traces(j, hx, hz, n).unwrap()).unwrap();
            let r = (j * j * (nf - 1.0) + 2.0 * hz * hz * nf) / (j * j * (nf - 1.0) + 4.0 * hz * hz * nf);
            assert!(close(c.terms[0].cubic / 6.0, -hx * hx / 12.0 * r, 1e-13));
            assert_eq!(c.terms[0], c.terms[2]);
            let mid = ((1.0 - 1.0 / nf) * j * j / 2.0 + hz * hz) / 24.0;
            assert!(close(c.terms[1].cubic / 6.0, mid, 1e-13));
        }
    }

    #[test]
    fn xxz_nn_three_exp_floor_ceil() {
        let (j1, d) = (1.4, 0.3);
        for n in 3..=8usize {
            let nf = n as f64;
            let c = cubic_3exp(&xxz_nn_closed_traces(j1, d, n).unwrap()).unwrap();
            let (even, odd) = bond_parity_counts(n);
            let r = (1.0 + 2.0 * d * d) / (2.0 + d * d) * (nf - 2.0);
            assert!(close(c.terms[0].cubic / 6.0, -j1 * j1 / 48.0 * r / even, 1e-13), "n={n}");
            assert!(close(c.terms[1].cubic / 6.0, j1 * j1 / 48.0 * r / odd, 1e-13));
            let c2 = cubic_2exp(&xxz_nn_closed_traces(j1, d, n).unwrap(), Lagrangian::L1).unwrap();
            assert!(close(c2.terms[1].cubic / 6.0, j1 * j1 / 12.0 * r / odd, 1e-13));
        }
    }

    #[test]
    fn thermodynamic_limit() {
        let lim = cubic_3exp(&ising_closed_traces(1.0, 1.0, 1.0, 200).unwrap()).unwrap();
        let big = cubic_3exp(&ising_closed_traces(1.0, 1.0, 1.0, 400).unwrap()).unwrap();
        assert!((lim.terms[1].cubic - big.terms[1].cubic).abs() < 1e-3);
        assert!(close(big.terms[1].cubic, 0.25 * 1.5 / 1.0, 2e-3));
    }

    #[test]
    fn two_step_commuting_limit() {
        let commuting = TraceRecord::pair(1.0, 2.0, 0.0, 3.0, 3.0);
        let p = three_block_two_step_params(&commuting, &commuting, 0.4).unwrap();
        assert_eq!(p.c, [-0.2, -0.4, -0.2, -0.2, -0.4, -0.2]);
        assert_eq!(p.factor_angles(), [-0.2, -0.2, -0.4, -0.2, -0.2]);
    }

    #[test]
    fn params_for_ansatz() {
        let s = build_qim(1.0, 1.0, 1.0, 3).unwrap();
        let tr = qim_pair_traces(1.0, 1.0, 1.0, 3, "B").unwrap();
        let c = cubic_3exp(&tr).unwrap();
        let shared = ProductAnsatz::from_pattern(&s, "BAB", crate::variational::Sharing::Palindromic).unwrap();
        let v = c.params_for(&shared, 0.2).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], c.terms[0].eval(0.2));
        let two = ProductAnsatz::from_pattern(&s, "BA", crate::variational::Sharing::Free).unwrap();
        assert!(c.params_for(&two, 0.2).is_err());
    }
}
