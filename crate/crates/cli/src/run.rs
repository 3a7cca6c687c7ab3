//! Executes an experiment configuration.

use std::fmt;
use std::time::Instant;

use log::info;
use nalgebra::DVector;
use varprop::analytic::{
    cubic_2exp, cubic_3exp, dense_traces, qim_pair_traces, three_block_two_step_params, xxz_nn_closed_traces,
    xxz_nnn_closed_traces, CubicParams, TraceRecord, TwoStepParams,
};
use varprop::circuit::{emit_qim_ansatz, GateProgram};
use varprop::models::{all_up_state, build_qim, build_two_level, build_xxz_nn, build_xxz_nnn, HamiltonianSplit};
use varprop::operator::{frobenius_error, CMat};
use varprop::reference::{exact_propagator, ruth4, step_count, ts1, ts2, ts7_abc};
use varprop::variational::{
    integrate_l1, integrate_l2, krylov_basis, magnetization_trajectory, uniform_grid, Lagrangian,
    ProductAnsatz, Sharing, SolverOptions, Tolerances, TraceScope,
};

use crate::config::{ConfigError, ExperimentConfig, Method, ModelSpec, Observable, SharingSpec, TimeSpec};
use crate::table::ResultTable;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Solver { method: String, source: varprop::Error },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Solver { method, source } => write!(f, "{method}: {source}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

fn config_err(field: &str, e: impl fmt::Display) -> RunError {
    RunError::Config(ConfigError(format!("{field}: {e}")))
}

fn solver_err(method: &str) -> impl Fn(varprop::Error) -> RunError + '_ {
    move |source| RunError::Solver {
        method: method.to_string(),
        source,
    }
}

pub fn build_model(spec: &ModelSpec) -> varprop::Result<HamiltonianSplit> {
    match *spec {
        ModelSpec::TwoLevel { h_x, h_z } => build_two_level(h_x, h_z),
        ModelSpec::Qim { n, j, h_x, h_z } => build_qim(j, h_x, h_z, n),
        ModelSpec::XxzNn { n, j1, delta1 } => build_xxz_nn(j1, delta1, n),
        ModelSpec::XxzNnn {
            n,
            j1,
            j2,
            delta1,
            delta2,
        } => build_xxz_nnn(j1, j2, delta1, delta2, n),
    }
}

/// Cubic-in-time parameters for one ansatz.
enum Approx {
    Cubic(CubicParams),
    TwoStep(TraceRecord, TraceRecord),
}

impl Approx {
    fn params(&self, ansatz: &ProductAnsatz, t: f64) -> varprop::Result<DVector<f64>> {
        match self {
            Self::Cubic(c) => c.params_for(ansatz, t),
            Self::TwoStep(outer, inner) => {
                let p: TwoStepParams = three_block_two_step_params(outer, inner, t)?;
                let angles = p.factor_angles();
                let mut c = DVector::zeros(ansatz.n_free());
                for (k, a) in angles.iter().enumerate() {
                    if let Some(i) = ansatz.factor_param(k) {
                        c[i] = *a;
                    }
                }
                Ok(c)
            }
        }
    }
}

/// Trace record for `(outer, inner)`, from the closed forms when the model has
/// them and from dense products otherwise.
fn pair_record(split: &HamiltonianSplit, model: &ModelSpec, outer: &str, inner: &str) -> varprop::Result<TraceRecord> {
    match (*model, outer, inner) {
        (ModelSpec::Qim { n, j, h_x, h_z }, "A", "B") | (ModelSpec::Qim { n, j, h_x, h_z }, "B", "A") => {
            qim_pair_traces(j, h_x, h_z, n, outer)
        }
        (ModelSpec::XxzNn { n, j1, delta1 }, "A", "B") if n >= 3 => xxz_nn_closed_traces(j1, delta1, n),
        (ModelSpec::XxzNn { n, j1, delta1 }, "B", "A") if n >= 3 => {
            Ok(xxz_nn_closed_traces(j1, delta1, n)?.swapped())
        }
        _ => dense_traces(split, &[outer, inner]),
    }
}

fn approx_for(split: &HamiltonianSplit, model: &ModelSpec, pattern: &str) -> Result<Approx, RunError> {
    let names: Vec<String> = pattern.chars().map(String::from).collect();
    let field = "methods: var_cubic";
    let res = match names.as_slice() {
        [x, y] if x != y => cubic_2exp(&pair_record(split, model, x, y).map_err(|e| config_err(field, e))?, Lagrangian::L1)
            .map(Approx::Cubic),
        [x, y, z] if x == z && x != y => {
            cubic_3exp(&pair_record(split, model, x, y).map_err(|e| config_err(field, e))?).map(Approx::Cubic)
        }
        [a, b, c, d, e] if a == e && b == d && a != b && b != c && a != c => {
            let record = match (*model, a.as_str(), b.as_str(), c.as_str()) {
                (
                    ModelSpec::XxzNnn {
                        n,
                        j1,
                        j2,
                        delta1,
                        delta2,
                    },
                    "A",
                    "B",
                    "C",
                ) => xxz_nnn_closed_traces(j1, j2, delta1, delta2, n),
                _ => dense_traces(split, &[a, b, c]),
            }
            .map_err(|e| config_err(field, e))?;
            let outer = record.merged_bc().map_err(|e| config_err(field, e))?;
            let inner = record.inner_bc().map_err(|e| config_err(field, e))?;
            Ok(Approx::TwoStep(outer, inner))
        }
        _ => {
            return Err(config_err(
                field,
                format!("no closed-form parameters for pattern `{pattern}` (use XY, XYX or XYZYX)"),
            ))
        }
    };
    res.map_err(|e| config_err(field, e))
}

/// A variational method bound to one ansatz.
struct VarRun {
    label: String,
    method: Method,
    ansatz: ProductAnsatz,
    scope: TraceScope,
    approx: Option<Approx>,
}

impl VarRun {
    /// Parameters on `grid`.
    fn params(&self, grid: &[f64], opts: &SolverOptions) -> Result<Vec<DVector<f64>>, RunError> {
        let err = solver_err(&self.label);
        let start = Instant::now();
        let values = match (self.method, &self.approx) {
            (Method::VarCubic, Some(a)) => grid.iter().map(|t| a.params(&self.ansatz, *t)).collect::<Result<_, _>>(),
            (Method::VarL2, _) => integrate_l2(&self.ansatz, grid, opts).map(|t| t.values),
            _ => integrate_l1(&self.ansatz, grid, opts, &self.scope).map(|t| t.values),
        }
        .map_err(err)?;
        info!("{}: {} samples in {:.3} s", self.label, grid.len(), start.elapsed().as_secs_f64());
        Ok(values)
    }

    fn unitaries(&self, grid: &[f64], opts: &SolverOptions) -> Result<Vec<CMat>, RunError> {
        let params = if grid.iter().all(|t| *t == 0.0) {
            vec![DVector::zeros(self.ansatz.n_free()); grid.len()]
        } else {
            self.params(grid, opts)?
        };
        params
            .iter()
            .map(|c| self.ansatz.assemble_unitary(c))
            .collect::<Result<_, _>>()
            .map_err(solver_err(&self.label))
    }
}

/// A fixed formula or the exact propagator.
struct FixedRun {
    method: Method,
}

impl FixedRun {
    fn unitary(&self, full: &HamiltonianSplit, ordered: &HamiltonianSplit, t: f64) -> varprop::Result<CMat> {
        match self.method {
            Method::Exact => Ok(exact_propagator(full.hamiltonian(), t)),
            Method::Ts1 => ts1(ordered, t),
            Method::Ts2 => ts2(ordered, t),
            Method::Ruth4 => ruth4(ordered, t),
            Method::Ts7 => ts7_abc(ordered, t),
            _ => unreachable!("variational methods run through VarRun"),
        }
    }
}

enum Run {
    Fixed(FixedRun),
    Var(VarRun),
}

impl Run {
    fn label(&self) -> String {
        match self {
            Self::Fixed(f) => f.method.to_string(),
            Self::Var(v) => v.label.clone(),
        }
    }
}

pub struct Experiment {
    config: ExperimentConfig,
    split: HamiltonianSplit,
    ordered: HamiltonianSplit,
    runs: Vec<Run>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, RunError> {
        let split = build_model(&config.model).map_err(|e| config_err("model", e))?;
        let ordered = match &config.split_order {
            Some(order) => {
                let names: Vec<&str> = order.iter().map(String::as_str).collect();
                split.reordered(&names).map_err(|e| config_err("split_order", e))?
            }
            None => split.clone(),
        };
        let psi0 = all_up_state(split.n_qubits()).map_err(|e| config_err("model", e))?;
        let mut runs = Vec::new();
        for (i, &method) in config.methods.iter().enumerate() {
            let field = format!("methods[{i}]");
            if !method.is_variational() {
                if config.observable == Observable::Params {
                    return Err(config_err(&field, format!("`{method}` has no variational parameters")));
                }
                if method == Method::Ts7 && split.n_blocks() != 3 {
                    return Err(config_err(&field, "ts7 needs a three-block model"));
                }
                runs.push(Run::Fixed(FixedRun { method }));
                continue;
            }
            let scope = match method {
                Method::VarKrylov(n) => krylov_basis(split.hamiltonian(), &psi0, n).map_err(|e| config_err(&field, e))?,
                _ => TraceScope::Full,
            };
            for (k, spec) in config.ansatze.iter().enumerate() {
                let sharing = match spec.sharing {
                    SharingSpec::Free => Sharing::Free,
                    SharingSpec::Palindromic => Sharing::Palindromic,
                };
                let ansatz = ProductAnsatz::from_pattern(&split, &spec.pattern, sharing)
                    .map_err(|e| config_err(&format!("ansatze[{k}]"), e))?;
                let approx = match method {
                    Method::VarCubic => Some(approx_for(&split, &config.model, &spec.pattern)?),
                    _ => None,
                };
                let label = if config.ansatze.len() == 1 {
                    method.to_string()
                } else {
                    format!("{method}_{}", spec.pattern)
                };
                runs.push(Run::Var(VarRun {
                    label,
                    method,
                    ansatz,
                    scope: scope.clone(),
                    approx,
                }));
            }
        }
        Ok(Self {
            config,
            split,
            ordered,
            runs,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: Tolerances {
                rtol: self.config.tolerances.rtol,
                atol: self.config.tolerances.atol,
            },
            ..SolverOptions::default()
        }
    }

    pub fn run(&self) -> Result<ResultTable, RunError> {
        match (self.config.time, self.config.observable) {
            (TimeSpec::Grid { t_end, points }, Observable::Frobenius) => self.frobenius(&uniform_grid(t_end, points)),
            (TimeSpec::Grid { t_end, points }, Observable::Params) => self.params(&uniform_grid(t_end, points)),
            (TimeSpec::Stroboscopic { t_total, tau }, obs) => {
                let n = step_count(t_total, tau).map_err(|e| config_err("time", e))?;
                if obs == Observable::Magnetization {
                    self.magnetization(tau, n)
                } else {
                    self.strob_frobenius(tau, n)
                }
            }
            _ => unreachable!("observable and time spec are checked when parsing"),
        }
    }

    fn frobenius(&self, grid: &[f64]) -> Result<ResultTable, RunError> {
        let opts = self.solver_options();
        let exact: Vec<CMat> = grid.iter().map(|t| exact_propagator(self.split.hamiltonian(), *t)).collect();
        let mut table = ResultTable::with_time(grid.to_vec());
        for run in &self.runs {
            let label = run.label();
            let us = match run {
                Run::Fixed(f) => grid
                    .iter()
                    .map(|t| f.unitary(&self.split, &self.ordered, *t))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(solver_err(&label))?,
                Run::Var(v) => v.unitaries(grid, &opts)?,
            };
            let col = exact
                .iter()
                .zip(&us)
                .map(|(e, u)| frobenius_error(e, u).map(|m| m.value()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(solver_err(&label))?;
            table.push_column(label, col);
        }
        Ok(table)
    }

    fn params(&self, grid: &[f64]) -> Result<ResultTable, RunError> {
        let opts = self.solver_options();
        let mut table = ResultTable::with_time(grid.to_vec());
        for run in &self.runs {
            let Run::Var(v) = run else { continue };
            let values = v.params(grid, &opts)?;
            for k in 0..v.ansatz.n_free() {
                table.push_column(format!("{}_c{k}", v.label), values.iter().map(|c| c[k]).collect());
            }
        }
        Ok(table)
    }

    /// One-step unitary of every run at `τ`.
    fn steps(&self, tau: f64) -> Result<Vec<(String, CMat)>, RunError> {
        let opts = self.solver_options();
        self.runs
            .iter()
            .map(|run| {
                let label = run.label();
                let u = match run {
                    Run::Fixed(f) => f.unitary(&self.split, &self.ordered, tau).map_err(solver_err(&label))?,
                    Run::Var(v) => v.unitaries(&[tau], &opts)?.pop().expect("one sample"),
                };
                Ok((label, u))
            })
            .collect()
    }

    fn strob_frobenius(&self, tau: f64, n: usize) -> Result<ResultTable, RunError> {
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * tau).collect();
        let exact: Vec<CMat> = times.iter().map(|t| exact_propagator(self.split.hamiltonian(), *t)).collect();
        let mut table = ResultTable::with_time(times);
        for (label, step) in self.steps(tau)? {
            let mut u = CMat::identity(self.split.dim(), self.split.dim());
            let mut col = Vec::with_capacity(n + 1);
            for (k, e) in exact.iter().enumerate() {
                if k > 0 {
                    u = &step * &u;
                }
                col.push(frobenius_error(e, &u).map_err(solver_err(&label))?.value());
            }
            table.push_column(label, col);
        }
        Ok(table)
    }

    fn magnetization(&self, tau: f64, n: usize) -> Result<ResultTable, RunError> {
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * tau).collect();
        let psi0 = all_up_state(self.split.n_qubits()).map_err(|e| config_err("model", e))?;
        let exact_step = exact_propagator(self.split.hamiltonian(), tau);
        let m_ex = magnetization_trajectory(&psi0, &exact_step, n).map_err(solver_err("exact"))?;
        let mut table = ResultTable::with_time(times);
        table.push_column("exact".into(), m_ex.clone());
        for (label, step) in self.steps(tau)? {
            if label == "exact" {
                continue;
            }
            let m = magnetization_trajectory(&psi0, &step, n).map_err(solver_err(&label))?;
            let rel = m
                .iter()
                .zip(&m_ex)
                .map(|(a, b)| if *b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() })
                .collect();
            table.push_column(label.clone(), m);
            table.push_column(format!("{label}_rel_err"), rel);
        }
        Ok(table)
    }

    /// Gate program for the first variational method and ansatz, with the
    /// parameters at the step length (stroboscopic) or final time (grid).
    pub fn circuit(&self) -> Result<GateProgram, RunError> {
        if !matches!(self.config.model, ModelSpec::Qim { .. }) {
            return Err(config_err("model", "circuits are emitted for the Ising model only"));
        }
        let Some(v) = self.runs.iter().find_map(|r| match r {
            Run::Var(v) => Some(v),
            Run::Fixed(_) => None,
        }) else {
            return Err(config_err("methods", "emit-circuit needs a variational method"));
        };
        let t = match self.config.time {
            TimeSpec::Grid { t_end, .. } => t_end,
            TimeSpec::Stroboscopic { tau, .. } => tau,
        };
        let c = v.params(&[t], &self.solver_options())?.pop().expect("one sample");
        emit_qim_ansatz(&v.ansatz, &c).map_err(solver_err(&v.label))
    }
}

pub fn run_experiment(config: ExperimentConfig) -> Result<ResultTable, RunError> {
    Experiment::new(config)?.run()
}
