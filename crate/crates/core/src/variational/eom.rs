//! Equations of motion for the ansatz parameters.
//!
//! With `U = Π_p E_p`, `E_p = e^{iθ_p X_p}` and prefix `L_p = E_0 ⋯ E_{p−1}`,
//! the derivative of `U` with respect to factor `p` is `i X̃_p U` where
//! `X̃_p = L_p X_p L_p†`. A free parameter `j` drives every factor bound to it,
//! so `∂_j U = i T_j U` with `T_j = Σ_{p→j} X̃_p`.
//!
//! For a scope projector `P` and `Q = U P U†`:
//!
//! * `g_jk = Tr[P (∂_jU)†(∂_kU)] = Tr[Q T_j T_k]`
//! * `F_j  = Tr[P (∂_jU)† H U]   = −i Tr[Q T_j H]`
//!
//! and the first-order equation is `g ċ = −iF`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::{frobenius_norm, identity, CMat, C64, I};
use crate::variational::ansatz::ProductAnsatz;
use crate::variational::scope::TraceScope;

/// Relative singular-value cutoff of the pseudo-inverse solves.
pub const PINV_RCOND: f64 = 1e-10;

/// Relative bound on the imaginary part of the full-scope solution.
pub const IMAG_TOL: f64 = 1e-8;

/// Ansatz unitary and its derivative generators at one parameter point.
#[derive(Debug, Clone)]
pub struct Tangents {
    pub u: CMat,
    /// `X̃_p` for every factor (fixed-slot factors included)
    pub factor_gens: Vec<CMat>,
    /// `T_j` for every free parameter
    pub param_gens: Vec<CMat>,
}

pub fn tangents(ansatz: &ProductAnsatz, c: &DVector<f64>) -> Result<Tangents> {
    let exps = ansatz.factor_exponentials(c)?;
    let dim = ansatz.split().dim();
    let blocks = ansatz.split().blocks();
    let mut prefix = identity(dim);
    let mut factor_gens = Vec::with_capacity(exps.len());
    let mut param_gens = vec![CMat::zeros(dim, dim); ansatz.n_free()];
    for (p, (f, e)) in ansatz.factors().iter().zip(&exps).enumerate() {
        let x = blocks[f.block].matrix();
        let conj = if p == 0 {
            x.clone()
        } else {
            &prefix * x * prefix.adjoint()
        };
        if let Some(j) = ansatz.factor_param(p) {
            param_gens[j] += &conj;
        }
        factor_gens.push(conj);
        prefix *= e;
    }
    Ok(Tangents {
        u: prefix,
        factor_gens,
        param_gens,
    })
}

/// `Σ_ab conj(X_ab) Y_ab = Tr[X† Y]`.
fn inner(x: &CMat, y: &CMat) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Evaluates `Tr_scope`-weighted quantities. For the full scope the traces
/// are elementwise contractions; for a Krylov scope everything is applied to
/// `W = U V`, the evolved basis.
struct ScopedTraces {
    /// `T_j W` (Krylov) or `T_j` (full)
    applied: Vec<CMat>,
    /// `H W` (Krylov) or `H` (full)
    h_applied: CMat,
}

impl ScopedTraces {
    fn new(tan: &Tangents, h: &CMat, scope: &TraceScope) -> Self {
        match scope {
            TraceScope::Full => Self {
                applied: tan.param_gens.clone(),
                h_applied: h.clone(),
            },
            TraceScope::Krylov(v) => {
                let w = &tan.u * v;
                Self {
                    applied: tan.param_gens.iter().map(|t| t * &w).collect(),
                    h_applied: h * &w,
                }
            }
        }
    }

    /// `Tr[Q T_j T_k]` using Hermiticity of `T_j`.
    fn metric(&self) -> DMatrix<C64> {
        let m = self.applied.len();
        DMatrix::from_fn(m, m, |j, k| inner(&self.applied[j], &self.applied[k]))
    }

    /// `−i Tr[Q T_j H]`.
    fn force(&self) -> DVector<C64> {
        DVector::from_iterator(
            self.applied.len(),
            self.applied.iter().map(|a| -I * inner(a, &self.h_applied)),
        )
    }
}

pub fn geometric_tensor(ansatz: &ProductAnsatz, c: &DVector<f64>, scope: &TraceScope) -> Result<DMatrix<C64>> {
    let tan = tangents(ansatz, c)?;
    Ok(ScopedTraces::new(&tan, ansatz.split().h(), scope).metric())
}

pub fn force_vector(ansatz: &ProductAnsatz, c: &DVector<f64>, scope: &TraceScope) -> Result<DVector<C64>> {
    let tan = tangents(ansatz, c)?;
    Ok(ScopedTraces::new(&tan, ansatz.split().h(), scope).force())
}

/// Minimum-norm solution of `g x = b` for real symmetric `g`, discarding
/// eigenvalues with `|λ| < PINV_RCOND · max|λ|`.
///
/// For a symmetric matrix the singular values are `|λ|`, so this is the
/// Moore–Penrose solution. The symmetric eigensolver resolves the nearly
/// null direction of `g` close to `t = 0` far more accurately than a
/// general SVD does.
pub fn pinv_solve(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let sym = (g + g.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    let mut x = DVector::zeros(b.len());
    if lmax == 0.0 {
        return x;
    }
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() >= PINV_RCOND * lmax {
            let v = eig.eigenvectors.column(i);
            x.axpy(v.dot(b) / lambda, &v, 1.0);
        }
    }
    x
}

/// Result of one first-order right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct L1Solution {
    pub cdot: DVector<f64>,
    /// largest imaginary part of the symmetrized `g` and of `−iF`,
    /// relative to the largest entry of each
    pub imag_residue: f64,
    /// `max |g − g†|` before symmetrization
    pub asymmetry: f64,
}

fn relative_imag<'a>(entries: impl Iterator<Item = &'a C64> + Clone) -> f64 {
    let scale = entries.clone().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    entries.fold(0.0f64, |m, z| m.max(z.im.abs())) / scale
}

/// `ċ` from `g ċ = −iF`.
///
/// The parameters are real, so the real part of the system is solved,
/// `Re(g) ċ = Re(−iF)`. In the full scope `g` is real symmetric and `−iF`
/// real, so nothing is discarded; the relative imaginary content of the
/// system is checked against [`IMAG_TOL`]. The check is made on `g` and `F`
/// rather than on the solution because the pseudo-inverse amplifies
/// round-off near the singular points of `g`. In a Krylov scope `g` is
/// complex Hermitian and the imaginary content is only recorded.
pub fn eom_rhs_l1(ansatz: &ProductAnsatz, c: &DVector<f64>, scope: &TraceScope) -> Result<L1Solution> {
    let tan = tangents(ansatz, c)?;
    let traces = ScopedTraces::new(&tan, ansatz.split().h(), scope);
    let mut g = traces.metric();
    let rhs = traces.force() * -I;
    let asymmetry = g
        .iter()
        .zip(g.adjoint().iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let imag_residue = relative_imag(g.iter()).max(relative_imag(rhs.iter()));
    if scope.is_full() && imag_residue > IMAG_TOL {
        return Err(Error::ImaginaryResidue {
            imag: imag_residue,
            tol: IMAG_TOL,
        });
    }
    let cdot = pinv_solve(&g.map(|z| z.re), &rhs.map(|z| z.re));
    Ok(L1Solution {
        cdot,
        imag_residue,
        asymmetry,
    })
}

/// `‖i U̇ − H U‖_F` with `U̇ = Σ_j ċ_j ∂_jU`.
///
/// Since `i U̇ = −(Σ_j ċ_j T_j) U` and `U` is unitary, this equals
/// `‖Σ_j ċ_j T_j + H‖_F`.
pub fn residual_norm(ansatz: &ProductAnsatz, c: &DVector<f64>, cdot: &DVector<f64>) -> Result<f64> {
    if cdot.len() != ansatz.n_free() {
        return Err(Error::ParameterLength {
            expected: ansatz.n_free(),
            found: cdot.len(),
        });
    }
    let tan = tangents(ansatz, c)?;
    let mut k = ansatz.split().h().clone();
    for (t, v) in tan.param_gens.iter().zip(cdot.iter()) {
        k += t * C64::new(*v, 0.0);
    }
    Ok(frobenius_norm(&k))
}

/// Second-order (`∂²_tU + H²U = 0`) parameter acceleration.
///
/// The real-parameter Euler–Lagrange equation is
/// `Re[g c̈ + Γċċ + 2i𝓑ċ + 𝓕] = 0` with, in the full trace,
///
/// * `(Γċċ)_j = i Tr[T_j S]`, `S = Σ_{p,q} ċ_p ċ_q X̃_{min(p,q)} X̃_{max(p,q)}`
/// * `(𝓑ċ)_j  = Tr[T_j H K]`, `K = Σ_k ċ_k T_k`
/// * `𝓕_j     = i Tr[T_j H²]`
///
/// where `S` collects the factor-level second derivatives
/// `∂_p∂_q U = −X̃_{min} X̃_{max} U`.
pub fn eom_rhs_l2(ansatz: &ProductAnsatz, c: &DVector<f64>, cdot: &DVector<f64>) -> Result<DVector<f64>> {
    if cdot.len() != ansatz.n_free() {
        return Err(Error::ParameterLength {
            expected: ansatz.n_free(),
            found: cdot.len(),
        });
    }
    let tan = tangents(ansatz, c)?;
    let h = ansatz.split().h();
    let dim = h.nrows();
    let m = tan.param_gens.len();

    let rates: Vec<f64> = (0..ansatz.n_factors())
        .map(|p| ansatz.factor_param(p).map_or(0.0, |j| cdot[j]))
        .collect();
    let weighted: Vec<CMat> = tan
        .factor_gens
        .iter()
        .zip(&rates)
        .map(|(x, r)| x * C64::new(*r, 0.0))
        .collect();
    // S = Σ_p w_p (w_p + 2 Σ_{q>p} w_q), w_p = ċ_p X̃_p
    let mut s = CMat::zeros(dim, dim);
    let mut tail = CMat::zeros(dim, dim);
    for w in weighted.iter().rev() {
        let inner_sum = w + &tail * C64::new(2.0, 0.0);
        s += w * inner_sum;
        tail += w;
    }
    let mut k = CMat::zeros(dim, dim);
    for (t, v) in tan.param_gens.iter().zip(cdot.iter()) {
        k += t * C64::new(*v, 0.0);
    }
    let hk = h * &k;
    let h2 = h * h;

    let g = DMatrix::from_fn(m, m, |j, l| inner(&tan.param_gens[j], &tan.param_gens[l]).re);
    // T_j Hermitian, so Tr[T_j Y] = inner(T_j, Y)
    let r = DVector::from_fn(m, |j, _| {
        let t = &tan.param_gens[j];
        let gamma = I * inner(t, &s);
        let drag = C64::new(2.0, 0.0) * I * inner(t, &hk);
        let force = I * inner(t, &h2);
        -(gamma + drag + force).re
    });
    Ok(pinv_solve(&g, &r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_qim, build_two_level};
    use crate::operator::trace;
    use crate::variational::ansatz::Sharing;

    fn qim() -> crate::models::HamiltonianSplit {
        build_qim(1.0, 1.0, 1.0, 3).unwrap()
    }

    #[test]
    fn metric_at_zero_is_block_gram() {
        let s = qim();
        let a = ProductAnsatz::from_pattern(&s, "AB", Sharing::Free).unwrap();
        let g = geometric_tensor(&a, &DVector::zeros(2), &TraceScope::Full).unwrap();
        let (am, bm) = (s.block("A").unwrap().matrix(), s.block("B").unwrap().matrix());
        assert!((g[(0, 0)] - trace(&(am * am))).norm() < 1e-12);
        assert!((g[(0, 1)] - trace(&(am * bm))).norm() < 1e-12);
        assert!((g[(1, 1)] - trace(&(bm * bm))).norm() < 1e-12);
        let f = force_vector(&a, &DVector::zeros(2), &TraceScope::Full).unwrap();
        assert!((f[0] + I * trace(&(am * s.h()))).norm() < 1e-12);
        assert!((f[1] + I * trace(&(bm * s.h()))).norm() < 1e-12);
    }

    #[test]
    fn ts_rates_at_zero() {
        let s = qim();
        let a2 = ProductAnsatz::from_pattern(&s, "AB", Sharing::Free).unwrap();
        let sol = eom_rhs_l1(&a2, &DVector::zeros(2), &TraceScope::Full).unwrap();
        for v in sol.cdot.iter() {
            assert!((v + 1.0).abs() < 1e-12);
        }
        let a3 = ProductAnsatz::from_pattern(&s, "BAB", Sharing::Free).unwrap();
        let sol = eom_rhs_l1(&a3, &DVector::zeros(3), &TraceScope::Full).unwrap();
        let expect = [-0.5, -1.0, -0.5];
        for (v, e) in sol.cdot.iter().zip(expect) {
            assert!((v - e).abs() < 1e-10, "{v} vs {e}");
        }
    }

    #[test]
    fn residual_limits() {
        let s = qim();
        let a = ProductAnsatz::from_pattern(&s, "AB", Sharing::Free).unwrap();
        let r = residual_norm(&a, &DVector::zeros(2), &DVector::zeros(2)).unwrap();
        assert!((r - frobenius_norm(s.h())).abs() < 1e-12);
    }

    #[test]
    fn residual_matches_direct_definition() {
        let s = qim();
        let a = ProductAnsatz::from_pattern(&s, "BAB", Sharing::Free).unwrap();
        let c = DVector::from_vec(vec![0.3, -0.2, 0.7]);
        let cd = DVector::from_vec(vec![-0.4, 1.1, 0.2]);
        let eps = 1e-6;
        // central difference of U along ċ
        let up = a.assemble_unitary(&(&c + &cd * eps)).unwrap();
        let um = a.assemble_unitary(&(&c - &cd * eps)).unwrap();
        let udot = (up - um) / C64::new(2.0 * eps, 0.0);
        let u = a.assemble_unitary(&c).unwrap();
        let direct = frobenius_norm(&(udot * I - s.h() * u));
        let r = residual_norm(&a, &c, &cd).unwrap();
        assert!((r - direct).abs() < 1e-7);
    }

    #[test]
    fn krylov_full_dimension_matches_full() {
        let s = qim();
        let a = ProductAnsatz::from_pattern(&s, "BAB", Sharing::Free).unwrap();
        let c = DVector::from_vec(vec![0.3, -0.2, 0.7]);
        let scope = TraceScope::Krylov(identity(8));
        let gk = geometric_tensor(&a, &c, &scope).unwrap();
        let gf = geometric_tensor(&a, &c, &TraceScope::Full).unwrap();
        assert!((gk - gf).norm() < 1e-10);
        let fk = force_vector(&a, &c, &scope).unwrap();
        let ff = force_vector(&a, &c, &TraceScope::Full).unwrap();
        assert!((fk - ff).norm() < 1e-10);
    }

    #[test]
    fn l2_matches_l1_on_exact_two_level() {
        // the analytic two-level trajectory is exact, so both principles agree:
        // differentiate the L1 rate along itself and compare with L2
        let s = build_two_level(5.0, 2.0).unwrap();
        let a = ProductAnsatz::from_pattern(&s, "ABA", Sharing::Free).unwrap();
        let c = DVector::from_vec(vec![-0.05, -0.09, -0.05]);
        let scope = TraceScope::Full;
        let cd = eom_rhs_l1(&a, &c, &scope).unwrap().cdot;
        let eps = 1e-6;
        let cp = eom_rhs_l1(&a, &(&c + &cd * eps), &scope).unwrap().cdot;
        let cm = eom_rhs_l1(&a, &(&c - &cd * eps), &scope).unwrap().cdot;
        let cdd_fd = (cp - cm) / (2.0 * eps);
        let cdd = eom_rhs_l2(&a, &c, &cd).unwrap();
        assert!((cdd - cdd_fd).norm() < 1e-5);
    }

    #[test]
    fn imaginary_content_measure() {
        let real = [C64::new(2.0, 0.0), C64::new(-1.0, 1e-17)];
        assert!(relative_imag(real.iter()) < 1e-16);
        let mixed = [C64::new(2.0, 0.0), C64::new(0.0, 1.0)];
        assert_eq!(relative_imag(mixed.iter()), 0.5);
        // a non-Hermitian "Hamiltonian" makes −iF complex
        let s = qim();
        let a = ProductAnsatz::from_pattern(&s, "AB", Sharing::Free).unwrap();
        let tan = tangents(&a, &DVector::zeros(2)).unwrap();
        let traces = ScopedTraces::new(&tan, &(s.h() * C64::new(1.0, 1.0)), &TraceScope::Full);
        let rhs = traces.force() * -I;
        assert!(relative_imag(rhs.iter()) > 0.1);
        let ok = eom_rhs_l1(&a, &DVector::zeros(2), &TraceScope::Full).unwrap();
        assert!(ok.imag_residue < 1e-14);
    }
}
