//! Gate-level lowering of quantum Ising product ansätze.
//!
//! Conventions: `RX(θ) = e^{−iθX/2}`, `RZ(θ) = e^{−iθZ/2}`, qubit `q` is chain
//! site `q + 1` (the most significant bit of a basis index). Gates are listed
//! in the order they act, so the last factor of the product comes first.
//!
//! With `A = (h_x/2) Σ X_j` and `B = (J/4) Σ Z_j Z_{j+1} + (h_z/2) Σ Z_j`:
//! - `e^{iθA}` is `RX(−θ h_x)` on every qubit,
//! - `e^{iθB}` is `RZ(−θ h_z)` on every qubit followed by one
//!   `CNOT · RZ(−θ J/2) · CNOT` per bond, bonds starting on an even qubit
//!   first and then the odd ones.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::Couplings;
use crate::operator::{identity, CMat, C64};
use crate::variational::ProductAnsatz;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    fn check(&self, n_qubits: usize) -> Result<()> {
        let bad = |q: usize| q >= n_qubits;
        match *self {
            Gate::Rx { qubit, angle } | Gate::Rz { qubit, angle } => {
                if bad(qubit) {
                    return Err(Error::InvalidGate(format!("qubit {qubit} of {n_qubits}")));
                }
                if !angle.is_finite() {
                    return Err(Error::InvalidGate(format!("angle {angle}")));
                }
            }
            Gate::Cnot { control, target } => {
                if bad(control) || bad(target) {
                    return Err(Error::InvalidGate(format!(
                        "cx {control},{target} on {n_qubits} qubits"
                    )));
                }
                if control == target {
                    return Err(Error::InvalidGate(format!("cx with control = target = {control}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub rx: usize,
    pub rz: usize,
    pub cnot: usize,
}

impl GateCounts {
    pub fn scaled(self, n: usize) -> Self {
        Self {
            rx: self.rx * n,
            rz: self.rz * n,
            cnot: self.cnot * n,
        }
    }

    /// Fractional savings `1 − self/reference` for (rx, rz, cnot).
    pub fn reduction_vs(&self, reference: &GateCounts) -> [f64; 3] {
        let r = |a: usize, b: usize| if b == 0 { 0.0 } else { 1.0 - a as f64 / b as f64 };
        [
            r(self.rx, reference.rx),
            r(self.rz, reference.rz),
            r(self.cnot, reference.cnot),
        ]
    }

    fn add(&mut self, g: &Gate) {
        match g {
            Gate::Rx { .. } => self.rx += 1,
            Gate::Rz { .. } => self.rz += 1,
            Gate::Cnot { .. } => self.cnot += 1,
        }
    }
}

/// Counts for one layer of a pattern and for `layers` repetitions of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateReport {
    pub per_layer: GateCounts,
    pub layers: usize,
    pub total: GateCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateProgram {
    n_qubits: usize,
    gates: Vec<Gate>,
    /// gate ranges, one per exponential factor, in time order
    layers: Vec<Range<usize>>,
    /// block name of each layer
    layer_blocks: Vec<char>,
    /// frozen factor angles of the source ansatz (product order)
    params: Vec<f64>,
}

impl GateProgram {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            layers: Vec::new(),
            layer_blocks: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn layers(&self) -> &[Range<usize>] {
        &self.layers
    }

    pub fn layer_blocks(&self) -> &[char] {
        &self.layer_blocks
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    fn open_layer(&mut self, block: char) {
        let at = self.gates.len();
        self.layers.push(at..at);
        self.layer_blocks.push(block);
    }

    fn close_layer(&mut self) {
        if let Some(last) = self.layers.last_mut() {
            last.end = self.gates.len();
        }
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            c.add(g);
        }
        c
    }
}

/// Lowers `ansatz` at parameters `c`. The split must be the quantum Ising
/// model with its `A` (transverse field) and `B` (bonds + longitudinal field)
/// blocks.
pub fn emit_qim_ansatz(ansatz: &ProductAnsatz, c: &DVector<f64>) -> Result<GateProgram> {
    let split = ansatz.split();
    let Couplings::Qim { j, h_x, h_z } = split.couplings() else {
        return Err(Error::InvalidModel("circuit emission supports the quantum Ising split only".into()));
    };
    let n = split.n_qubits();
    let angles = ansatz.factor_angles(c)?;
    let names: Vec<char> = ansatz.pattern().chars().collect();
    let mut prog = GateProgram::new(n);
    prog.params = angles.clone();
    for (&block, theta) in names.iter().zip(&angles).rev() {
        prog.open_layer(block);
        match block {
            'A' => {
                for q in 0..n {
                    prog.push(Gate::Rx {
                        qubit: q,
                        angle: -theta * h_x,
                    })?;
                }
            }
            'B' => {
                for q in 0..n {
                    prog.push(Gate::Rz {
                        qubit: q,
                        angle: -theta * h_z,
                    })?;
                }
                let bonds = (0..n - 1).step_by(2).chain((1..n - 1).step_by(2));
                for q in bonds {
                    prog.push(Gate::Cnot {
                        control: q,
                        target: q + 1,
                    })?;
                    prog.push(Gate::Rz {
                        qubit: q + 1,
                        angle: -theta * j / 2.0,
                    })?;
                    prog.push(Gate::Cnot {
                        control: q,
                        target: q + 1,
                    })?;
                }
            }
            other => return Err(Error::UnknownBlock(other.to_string())),
        }
        prog.close_layer();
    }
    Ok(prog)
}

/// Composes the gates (first gate rightmost) into a dense unitary.
pub fn program_to_unitary(program: &GateProgram) -> Result<CMat> {
    let n = program.n_qubits;
    let dim = crate::operator::dimension(n)?;
    let mut u = identity(dim);
    for g in &program.gates {
        g.check(n)?;
        apply_gate(&mut u, g, n);
    }
    Ok(u)
}

fn mask(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

/// Left-multiplies `u` by the gate.
fn apply_gate(u: &mut CMat, g: &Gate, n: usize) {
    let dim = u.nrows();
    match *g {
        Gate::Rx { qubit, angle } => {
            let m = mask(qubit, n);
            let (s, c) = (angle / 2.0).sin_cos();
            let mis = C64::new(0.0, -s);
            for i in (0..dim).filter(|i| i & m == 0) {
                for col in 0..u.ncols() {
                    let (a, b) = (u[(i, col)], u[(i | m, col)]);
                    u[(i, col)] = a * c + b * mis;
                    u[(i | m, col)] = a * mis + b * c;
                }
            }
        }
        Gate::Rz { qubit, angle } => {
            let m = mask(qubit, n);
            let up = C64::from_polar(1.0, -angle / 2.0);
            let down = up.conj();
            for i in 0..dim {
                let f = if i & m == 0 { up } else { down };
                for col in 0..u.ncols() {
                    u[(i, col)] *= f;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let (mc, mt) = (mask(control, n), mask(target, n));
            for i in (0..dim).filter(|i| i & mc != 0 && i & mt == 0) {
                u.swap_rows(i, i | mt);
            }
        }
    }
}

/// `|Tr(U†V)| / D`; 1 iff `U` and `V` agree up to a global phase.
pub fn phase_invariant_fidelity(u: &CMat, v: &CMat) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch {
            left: u.nrows(),
            right: v.nrows(),
        });
    }
    let overlap: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(overlap.norm() / u.nrows() as f64)
}

/// Gate counts of a QIM pattern over blocks `A` and `B`.
pub fn gate_counts(pattern: &str, n_qubits: usize, layers: usize) -> Result<GateReport> {
    if n_qubits < 2 {
        return Err(Error::InvalidModel(format!("need N ≥ 2, got {n_qubits}")));
    }
    let mut per = GateCounts::default();
    for b in pattern.chars() {
        match b {
            'A' => per.rx += n_qubits,
            'B' => {
                per.rz += 2 * n_qubits - 1;
                per.cnot += 2 * n_qubits - 2;
            }
            other => return Err(Error::UnknownBlock(other.to_string())),
        }
    }
    Ok(GateReport {
        per_layer: per,
        layers,
        total: per.scaled(layers),
    })
}

const HEADER: &str = "// varprop gate program";

/// Text form: a comment header, `// layer k X` markers, then one gate per line.
pub fn export_text(program: &GateProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "// qubits {}", program.n_qubits);
    s.push_str("// params");
    for p in &program.params {
        let _ = write!(s, " {p:.16e}");
    }
    s.push('\n');
    let mut next_layer = 0;
    for (i, g) in program.gates.iter().enumerate() {
        while next_layer < program.layers.len() && program.layers[next_layer].start == i {
            let _ = writeln!(s, "// layer {next_layer} {}", program.layer_blocks[next_layer]);
            next_layer += 1;
        }
        let _ = match g {
            Gate::Rx { qubit, angle } => writeln!(s, "rx({angle:.16e}) q[{qubit}];"),
            Gate::Rz { qubit, angle } => writeln!(s, "rz({angle:.16e}) q[{qubit}];"),
            Gate::Cnot { control, target } => writeln!(s, "cx q[{control}],q[{target}];"),
        };
    }
    for k in next_layer..program.layers.len() {
        let _ = writeln!(s, "// layer {k} {}", program.layer_blocks[k]);
    }
    s
}

/// Inverse of [`export_text`].
pub fn parse_text(text: &str) -> Result<GateProgram> {
    let err = |line: usize, msg: &str| Error::CircuitParse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let mut prog: Option<GateProgram> = None;
    let mut params = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line == HEADER {
            continue;
        }
        if let Some(rest) = line.strip_prefix("// qubits ") {
            let n = rest.trim().parse().map_err(|_| err(ln, "bad qubit count"))?;
            prog = Some(GateProgram::new(n));
            continue;
        }
        let p = prog.as_mut().ok_or_else(|| err(ln, "gate before `// qubits`"))?;
        if let Some(rest) = line.strip_prefix("// params") {
            for tok in rest.split_whitespace() {
                params.push(tok.parse::<f64>().map_err(|_| err(ln, "bad parameter"))?);
            }
        } else if let Some(rest) = line.strip_prefix("// layer ") {
            let block = rest
                .split_whitespace()
                .nth(1)
                .and_then(|b| b.chars().next())
                .ok_or_else(|| err(ln, "layer marker without block"))?;
            p.close_layer();
            p.open_layer(block);
        } else if line.starts_with("//") {
            continue;
        } else {
            let gate = parse_gate(line).ok_or_else(|| err(ln, "unrecognized gate"))?;
            p.push(gate).map_err(|e| err(ln, &e.to_string()))?;
        }
    }
    let mut p = prog.ok_or_else(|| err(0, "missing `// qubits` line"))?;
    p.close_layer();
    p.params = params;
    Ok(p)
}

fn parse_qubit(s: &str) -> Option<usize> {
    s.trim().strip_prefix("q[")?.strip_suffix(']')?.parse().ok()
}

fn parse_gate(line: &str) -> Option<Gate> {
    let body = line.strip_suffix(';')?;
    if let Some(rest) = body.strip_prefix("cx ") {
        let (a, b) = rest.split_once(',')?;
        return Some(Gate::Cnot {
            control: parse_qubit(a)?,
            target: parse_qubit(b)?,
        });
    }
    let (head, qubit) = body.split_once(')')?;
    let qubit = parse_qubit(qubit)?;
    if let Some(a) = head.strip_prefix("rx(") {
        return Some(Gate::Rx {
            qubit,
            angle: a.parse().ok()?,
        });
    }
    let a = head.strip_prefix("rz(")?;
    Some(Gate::Rz {
        qubit,
        angle: a.parse().ok()?,
    })
}
