use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use varprop::circuit::{parse_text, phase_invariant_fidelity, program_to_unitary};
use varprop_cli::config::{Method, Observable, TimeSpec};
use varprop_cli::{parse_config, run_experiment, Experiment, ResultTable};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> String {
    fs::read_to_string(configs_dir().join(name)).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_varprop"))
}

const MINIMAL: &str = r#"{
  "model": {"family": "qim", "n": 3, "j": 1.0, "h_x": 1.0, "h_z": 1.0},
  "ansatze": [{"pattern": "ABA"}],
  "methods": ["ts2", "var_l1"],
  "time": {"grid": {"t_end": 0.5, "points": 6}},
  "observable": "frobenius"
}"#;

/// Reads a CSV produced by the runner back into header and rows.
fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn minimal_config_gets_default_tolerances() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.tolerances.rtol, 1e-9);
    assert_eq!(cfg.tolerances.atol, 1e-12);
    assert_eq!(cfg.methods, vec![Method::Ts2, Method::VarL1]);
    assert_eq!(cfg.output, None);
}

#[test]
fn misspelled_method_names_the_field() {
    let text = MINIMAL.replace("\"ts2\"", "\"ts3\"");
    let err = parse_config(&text).unwrap_err().to_string();
    assert!(err.contains("methods"), "{err}");
    assert!(err.contains("ts3"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = MINIMAL.replace("\"observable\"", "\"colour\": 1, \"observable\"");
    assert!(parse_config(&text).unwrap_err().to_string().contains("colour"));
    let text = MINIMAL.replace("\"h_z\": 1.0", "\"h_z\": 1.0, \"h_y\": 0.0");
    let err = parse_config(&text).unwrap_err().to_string();
    assert!(err.contains("model") && err.contains("h_y"), "{err}");
}

#[test]
fn krylov_method_syntax() {
    assert_eq!(Method::try_from("var_krylov(4)".to_string()), Ok(Method::VarKrylov(4)));
    assert!(Method::try_from("var_krylov(0)".to_string()).is_err());
    assert!(Method::try_from("var_krylov(x)".to_string()).is_err());
    assert_eq!(Method::VarKrylov(4).to_string(), "var_krylov_4");
}

#[test]
fn inconsistent_configs_are_rejected() {
    let no_ansatz = MINIMAL.replace(r#""ansatze": [{"pattern": "ABA"}],"#, "");
    assert!(parse_config(&no_ansatz).unwrap_err().to_string().contains("ansatze"));
    let dup = MINIMAL.replace(r#"["ts2", "var_l1"]"#, r#"["ts2", "ts2"]"#);
    assert!(parse_config(&dup).unwrap_err().to_string().contains("duplicate"));
    let strob = MINIMAL.replace("\"frobenius\"", "\"magnetization\"");
    assert!(parse_config(&strob).is_err());
    let ts7 = MINIMAL.replace("\"ts2\"", "\"ts7\"");
    assert!(Experiment::new(parse_config(&ts7).unwrap()).is_err());
    let bad_pattern = MINIMAL.replace("\"ABA\"", "\"ABX\"");
    assert!(Experiment::new(parse_config(&bad_pattern).unwrap()).is_err());
}

#[test]
fn xxz_nnn_long_time_config_is_valid() {
    let cfg = parse_config(&shipped("xxz_nnn_stroboscopic.json")).unwrap();
    assert_eq!(cfg.methods, vec![Method::Ts7, Method::VarL1]);
    assert_eq!(cfg.ansatze[0].pattern, "CBCACBC");
    assert_eq!(
        cfg.time,
        TimeSpec::Stroboscopic {
            t_total: 100.0,
            tau: 0.2
        }
    );
    assert_eq!(cfg.observable, Observable::StrobFrobenius);
    Experiment::new(cfg).unwrap();
}

#[test]
fn two_level_variational_error_is_at_integrator_level() {
    let table = run_experiment(parse_config(&shipped("two_level_error.json")).unwrap()).unwrap();
    assert_eq!(table.header(), ["t", "ts2", "var_l1"]);
    assert!(table.column("var_l1").unwrap().iter().all(|e| *e <= 1e-6));
    assert!(table.column("ts2").unwrap().iter().any(|e| *e > 1e-3));
}

#[test]
fn magnetization_config_reports_relative_errors() {
    let table = run_experiment(parse_config(&shipped("qim_magnetization.json")).unwrap()).unwrap();
    assert_eq!(table.header(), ["t", "exact", "ts2", "ts2_rel_err", "var_l1", "var_l1_rel_err"]);
    assert_eq!(table.n_rows(), 26);
    let t = table.column("t").unwrap();
    assert!((t[25] - 10.0).abs() < 1e-12);
    let ts = table.column("ts2_rel_err").unwrap();
    let var = table.column("var_l1_rel_err").unwrap();
    let better = (1..26).filter(|&k| var[k] < ts[k]).count();
    assert!(better > 20, "variational better at {better}/25 steps");
}

#[test]
fn cubic_parameters_track_the_integrated_ones() {
    let table = run_experiment(parse_config(&shipped("qim_cubic_params.json")).unwrap()).unwrap();
    assert_eq!(table.header(), ["t", "var_l1_c0", "var_l1_c1", "var_cubic_c0", "var_cubic_c1"]);
    // at t = 0.2 the quintic remainder is far below the cubic term
    let row = 10;
    assert!((table.column("t").unwrap()[row] - 0.2).abs() < 1e-12);
    for k in 0..2 {
        let ode = table.column(&format!("var_l1_c{k}")).unwrap()[row];
        let cubic = table.column(&format!("var_cubic_c{k}")).unwrap()[row];
        assert!((ode - cubic).abs() < 1e-5, "c{k}: {ode} vs {cubic}");
    }
}

#[test]
fn ruth_comparison_has_one_column_per_ansatz() {
    let cfg = parse_config(&shipped("qim_four_exp_vs_ruth.json")).unwrap();
    let expected = 1 + cfg.ansatze.len() + cfg.methods.iter().filter(|m| !m.is_variational()).count();
    let table = run_experiment(cfg).unwrap();
    assert_eq!(table.header(), ["t", "var_l1_ABAB", "var_l1_BABA", "ruth4"]);
    assert_eq!(table.header().len(), expected);
}

#[test]
fn empty_table_is_header_only() {
    assert_eq!(ResultTable::with_time(Vec::new()).to_csv_string(), "t\n");
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let mut table = ResultTable::with_time(vec![0.0, 0.1, 1.0 / 3.0]);
    let values = vec![-0.0, std::f64::consts::PI * 1e-300, 1.0 - f64::EPSILON];
    table.push_column("x".into(), values.clone());
    let (header, rows) = read_csv(&table.to_csv_string());
    assert_eq!(header, ["t", "x"]);
    for (row, v) in rows.iter().zip(&values) {
        assert_eq!(row[1].to_bits(), (v + 0.0).to_bits());
    }
    assert_eq!(rows[2][0].to_bits(), (1.0f64 / 3.0).to_bits());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let path = configs_dir().join("qim_cubic_stroboscopic.json");
    let a = bin().arg("run").arg(&path).output().unwrap();
    let b = bin().arg("run").arg(&path).output().unwrap();
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let status = bin()
        .args(["run", "-v"])
        .arg(configs_dir().join("two_level_error.json"))
        .arg("-o")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let (header, rows) = read_csv(&fs::read_to_string(out).unwrap());
    assert_eq!(header, ["t", "ts2", "var_l1"]);
    assert_eq!(rows.len(), 101);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn exit_codes_distinguish_config_and_solver_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, MINIMAL.replace("\"ts2\"", "\"ts3\"")).unwrap();
    assert_eq!(bin().arg("run").arg(&bad).status().unwrap().code(), Some(2));
    assert_eq!(bin().arg("run").arg(dir.path().join("missing.json")).status().unwrap().code(), Some(2));

    // tolerances no step size can meet
    let stiff = dir.path().join("stiff.json");
    fs::write(
        &stiff,
        MINIMAL.replace("\"observable\"", r#""tolerances": {"rtol": 1e-300, "atol": 1e-300}, "observable""#),
    )
    .unwrap();
    let out = bin().arg("run").arg(&stiff).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("var_l1"));
}

#[test]
fn emitted_circuit_matches_the_ansatz() {
    let path = configs_dir().join("qim_circuit.json");
    let out = bin().arg("emit-circuit").arg(&path).output().unwrap();
    assert!(out.status.success());
    let program = parse_text(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(program.n_qubits(), 4);
    assert_eq!(program.layers().len(), 4);

    let exp = Experiment::new(parse_config(&fs::read_to_string(&path).unwrap()).unwrap()).unwrap();
    let again = exp.circuit().unwrap();
    assert_eq!(again, program);
    let split = varprop_cli::run::build_model(&exp.config().model).unwrap();
    let ansatz = varprop::variational::ProductAnsatz::from_pattern(&split, "ABAB", varprop::variational::Sharing::Free)
        .unwrap();
    let c = nalgebra::DVector::from_column_slice(program.params());
    let f = phase_invariant_fidelity(&program_to_unitary(&program).unwrap(), &ansatz.assemble_unitary(&c).unwrap())
        .unwrap();
    assert!(f > 1.0 - 1e-9);
}

#[test]
fn emit_circuit_needs_the_ising_model() {
    let status = bin()
        .arg("emit-circuit")
        .arg(configs_dir().join("two_level_error.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn every_shipped_config_runs() {
    let mut names: Vec<_> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    assert!(names.len() >= 8);
    for path in names {
        let table = run_experiment(parse_config(&fs::read_to_string(&path).unwrap()).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        for name in table.header() {
            assert!(table.column(name).unwrap().iter().all(|v| v.is_finite()), "{}: {name}", path.display());
        }
    }
}
