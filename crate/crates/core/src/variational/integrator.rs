//! Adaptive Dormand–Prince 5(4) integrator with continuous output.
//!
//! Step control and the dense-output interpolant follow Hairer, Nørsett and
//! Wanner's DOPRI5: RMS error norm with mixed tolerances, safety factor 0.9
//! and step ratio clamped to `[0.2, 5]`.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: Tolerances,
    pub max_steps: usize,
    /// initial step; chosen automatically when `None`
    pub h0: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            max_steps: 200_000,
            h0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

type Vec64 = DVector<f64>;

fn lin(y: &Vec64, h: f64, terms: &[(f64, &Vec64)]) -> Vec64 {
    let mut out = y.clone();
    for (a, k) in terms {
        out.axpy(h * a, k, 1.0);
    }
    out
}

fn err_norm(err: &Vec64, y0: &Vec64, y1: &Vec64, tol: Tolerances) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
struct Dense {
    t0: f64,
    h: f64,
    r: [Vec64; 5],
}

impl Dense {
    fn eval(&self, t: f64) -> Vec64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        r1 + (r2 + (r3 + (r4 + r5 * th1) * th) * th1) * th
    }
}

/// Integrates `y' = f(t, y)` from `t0` and samples `y` at the increasing
/// times `grid` (all ≥ `t0`). `f` may fail; its error aborts the run.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: Vec64,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<Vec64>, SolverStats)>
where
    F: FnMut(f64, &Vec64) -> Result<Vec64>,
{
    let mut stats = SolverStats::default();
    let mut out = Vec::with_capacity(grid.len());
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.first().is_some_and(|&g| g < t0) {
        return Err(Error::InvalidAnsatz("output grid must be increasing from t0".into()));
    }
    let t_end = match grid.last() {
        Some(&t) => t,
        None => return Ok((out, stats)),
    };
    let tol = opts.tol;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    stats.rhs_evals += 1;
    let mut gi = 0;
    while gi < grid.len() && grid[gi] <= t {
        out.push(y.clone());
        gi += 1;
    }
    if gi == grid.len() {
        return Ok((out, stats));
    }

    let span = t_end - t0;
    let mut h = match opts.h0 {
        Some(h) => h,
        None => initial_step(&mut f, t, &y, &k1, tol, &mut stats)?,
    }
    .min(span);

    while gi < grid.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        if h.abs() < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = f(t + C2 * h, &lin(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(
            t + C5 * h,
            &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = f(
            t + h,
            &lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y1 = lin(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1)?;
        stats.rhs_evals += 6;

        let err = lin(
            &Vec64::zeros(y.len()),
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let en = err_norm(&err, &y, &y1, tol);
        if !en.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h *= FAC_MIN;
            if !y1.iter().all(|v| v.is_finite()) && h.abs() < 1e-14 {
                return Err(Error::NonFinite { t });
            }
            continue;
        }
        let fac = (SAFETY * en.powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
        if en <= 1.0 {
            stats.accepted += 1;
            let t1 = if last { t_end } else { t + h };
            let r2 = &y1 - &y;
            let r3 = &k1 * h - &r2;
            let r4 = &r2 - &k7 * h - &r3;
            let r5 = lin(
                &Vec64::zeros(y.len()),
                h,
                &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
            );
            let dense = Dense {
                t0: t,
                h,
                r: [y.clone(), r2, r3, r4, r5],
            };
            while gi < grid.len() && grid[gi] <= t1 {
                out.push(if grid[gi] == t1 { y1.clone() } else { dense.eval(grid[gi]) });
                gi += 1;
            }
            t = t1;
            y = y1;
            k1 = k7;
            h *= if en == 0.0 { FAC_MAX } else { fac };
        } else {
            stats.rejected += 1;
            h *= fac.min(1.0);
        }
    }
    Ok((out, stats))
}

/// Initial step heuristic (Hairer, Nørsett, Wanner, II.4).
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &Vec64,
    f0: &Vec64,
    tol: Tolerances,
    stats: &mut SolverStats,
) -> Result<f64>
where
    F: FnMut(f64, &Vec64) -> Result<Vec64>,
{
    let scale = |v: &Vec64| {
        let n = v.len().max(1) as f64;
        (v.iter()
            .zip(y.iter())
            .map(|(a, b)| (a / (tol.atol + tol.rtol * b.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scale(y);
    let d1 = scale(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = y + f0 * h0;
    let f1 = f(t + h0, &y1)?;
    stats.rhs_evals += 1;
    let d2 = scale(&(&f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}
