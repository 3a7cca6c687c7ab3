//! Ordering selection and observable trajectories.

use crate::error::{Error, Result};
use crate::models::{magnetization, SpinState};
use crate::operator::CMat;
use crate::variational::ansatz::ProductAnsatz;
use crate::variational::integrator::SolverOptions;
use crate::variational::scope::TraceScope;
use crate::variational::trajectory::{integrate_l1, uniform_grid};

/// Samples on `[0, τ]` used for the time-averaged residual.
pub const RANKING_SAMPLES: usize = 41;

#[derive(Debug, Clone)]
pub struct RankedAnsatz {
    /// position in the candidate list
    pub index: usize,
    pub pattern: String,
    pub mean_residual: f64,
}

#[derive(Debug)]
pub struct OrderingReport {
    /// best first
    pub ranked: Vec<RankedAnsatz>,
    /// candidates whose integration failed
    pub failed: Vec<(usize, Error)>,
}

/// Integrates every candidate to `tau` and ranks by time-averaged residual.
/// Ties keep the candidate order.
pub fn select_ordering(candidates: &[ProductAnsatz], tau: f64, opts: &SolverOptions) -> Result<OrderingReport> {
    if candidates.len() < 2 {
        return Err(Error::InvalidAnsatz("need at least two candidates".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::NonPositiveStep(tau));
    }
    let grid = uniform_grid(tau, RANKING_SAMPLES);
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for (index, a) in candidates.iter().enumerate() {
        match integrate_l1(a, &grid, opts, &TraceScope::Full) {
            Ok(traj) => ranked.push(RankedAnsatz {
                index,
                pattern: a.pattern(),
                mean_residual: traj.mean_residual(),
            }),
            Err(e) => {
                log::warn!("candidate {} ({}) failed: {e}", index, a.pattern());
                failed.push((index, e));
            }
        }
    }
    ranked.sort_by(|x, y| x.mean_residual.total_cmp(&y.mean_residual));
    Ok(OrderingReport { ranked, failed })
}

/// `𝓜_z` of `ψ₀` and of `U_stepᵏ ψ₀` for `k = 1…n_steps` (length `n_steps + 1`).
pub fn magnetization_trajectory(psi0: &SpinState, u_step: &CMat, n_steps: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut psi = psi0.clone();
    out.push(magnetization(&psi));
    for _ in 0..n_steps {
        psi = psi.evolve(u_step)?;
        out.push(magnetization(&psi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{all_up_state, build_qim, build_two_level};
    use crate::operator::identity;
    use crate::variational::ansatz::Sharing;

    #[test]
    fn magnetization_edge_cases() {
        let psi = all_up_state(3).unwrap();
        assert_eq!(magnetization_trajectory(&psi, &identity(8), 0).unwrap(), vec![0.5]);
        let m = magnetization_trajectory(&psi, &identity(8), 4).unwrap();
        assert_eq!(m, vec![0.5; 5]);
    }

    #[test]
    fn two_level_prefers_ab() {
        let s = build_two_level(5.0, 2.0).unwrap();
        let cands = [
            ProductAnsatz::from_pattern(&s, "BA", Sharing::Free).unwrap(),
            ProductAnsatz::from_pattern(&s, "AB", Sharing::Free).unwrap(),
        ];
        let rep = select_ordering(&cands, 0.2, &SolverOptions::default()).unwrap();
        assert_eq!(rep.ranked[0].pattern, "AB");
        assert!(rep.failed.is_empty());
    }

    #[test]
    fn ties_keep_input_order() {
        let s = build_qim(1.0, 1.0, 1.0, 3).unwrap();
        let a = ProductAnsatz::from_pattern(&s, "BAB", Sharing::Free).unwrap();
        let rep = select_ordering(&[a.clone(), a], 0.1, &SolverOptions::default()).unwrap();
        assert_eq!(rep.ranked[0].index, 0);
        assert_eq!(rep.ranked[1].index, 1);
        assert_eq!(rep.ranked[0].mean_residual, rep.ranked[1].mean_residual);
    }

    #[test]
    fn needs_two_candidates() {
        let s = build_qim(1.0, 1.0, 1.0, 3).unwrap();
        let a = ProductAnsatz::from_pattern(&s, "BAB", Sharing::Free).unwrap();
        assert!(select_ordering(&[a], 0.1, &SolverOptions::default()).is_err());
    }
}
