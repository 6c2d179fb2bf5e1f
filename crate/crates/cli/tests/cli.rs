//! End-to-end runs of the `sacs` binary.

use std::process::{Command, Output};

fn sacs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sacs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header and data rows of a CSV document, metadata dropped.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].clone()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn sweep_reference_values() {
    let o = sacs(&["sweep", "--mu", "0:2:201", "--outputs", "energy,q"]);
    assert!(o.status.success());
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(rows.len(), 201);
    let mus = column(&h, &rows, "mu");
    let k = mus.iter().position(|m| num(m) == 1.0).unwrap();
    assert_eq!(column(&h, &rows, "coherent_energy")[k], "-5.6250000000000000e-1");
    // normal regime: even 0, odd 1/(2N)
    for (i, m) in mus.iter().enumerate() {
        if num(m) < 0.5 {
            assert_eq!(num(&column(&h, &rows, "even_energy")[i]), 0.0);
            assert_eq!(num(&column(&h, &rows, "odd_energy")[i]), 0.25);
            assert_eq!(num(&column(&h, &rows, "even_Q")[i]), 1.0);
            assert_eq!(num(&column(&h, &rows, "odd_Q")[i]), -1.0);
            assert_eq!(column(&h, &rows, "coherent_Q")[i], "NA");
        }
    }
    // even Q_M changes sign once above the boundary; at N = 2 this happens
    // between 0.85 and 0.86
    let q: Vec<f64> = column(&h, &rows, "even_Q").iter().map(|s| num(s)).collect();
    let first_negative = q.iter().position(|&v| v < 0.0).unwrap();
    assert!(
        (num(&mus[first_negative]) - 0.86).abs() < 1e-12,
        "{}",
        mus[first_negative]
    );
}

#[test]
fn normal_range_sweep_has_constant_sacs_columns() {
    let o = sacs(&["sweep", "--mu", "0:0.4:9", "--outputs", "energy"]);
    let (h, rows) = csv(&stdout(&o));
    assert!(column(&h, &rows, "even_energy").iter().all(|v| num(v) == 0.0));
    assert!(column(&h, &rows, "odd_energy").iter().all(|v| num(v) == 0.25));
}

#[test]
fn sweep_output_is_deterministic_and_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, jobs) in [(&a, "1"), (&b, "3")] {
        let o = sacs(&[
            "sweep",
            "--mu",
            "0.3:1.7:15",
            "--jobs",
            jobs,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    for key in [
        "# tool: sacs",
        "# configuration: v",
        "# omega: 1",
        "# mu: 0.3:1.7:15",
        "# swept: mu",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn json_mirrors_csv() {
    let c = stdout(&sacs(&["sweep", "--mu", "0:1:3", "--outputs", "energy,q"]));
    let j = stdout(&sacs(&[
        "sweep",
        "--mu",
        "0:1:3",
        "--outputs",
        "energy,q",
        "--format",
        "json",
    ]));
    let (h, rows) = csv(&c);
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), h.len());
    let k = h.iter().position(|x| x == "coherent_Q").unwrap();
    assert_eq!(rows[0][k], "NA");
    assert!(v["rows"][0][k].is_null());
    let e = h.iter().position(|x| x == "coherent_energy").unwrap();
    assert_eq!(v["rows"][2][e].as_f64().unwrap(), -0.5625);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("recipe.cfg");
    std::fs::write(
        &cfg,
        "# recipe\nmu = 0:1:5\noutputs = energy\nbranch = coherent\nna = 3\n",
    )
    .unwrap();
    let o = sacs(&["sweep", "--config", cfg.to_str().unwrap(), "--na", "4"]);
    assert!(o.status.success());
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(h, ["mu", "theta", "na", "coherent_energy"]);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[2] == "4"));
}

#[test]
fn exit_codes() {
    assert_eq!(sacs(&["sweep", "--mu", "0:1:0"]).status.code(), Some(2));
    assert_eq!(
        sacs(&["sweep", "--mu", "0:1:3", "--na", "1:2:2"]).status.code(),
        Some(2)
    );
    assert_eq!(sacs(&["sweep", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(sacs(&["sweep", "--na", "0"]).status.code(), Some(2));
    assert_eq!(sacs(&["phase-boundary", "--mu", "0:0.4:9"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        sacs(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        sacs(&["sweep", "--config", "/nonexistent/recipe.cfg"]).status.code(),
        Some(2)
    );
}

#[test]
fn phase_boundary_full_and_rwa() {
    for (extra, target) in [(None, 0.5), (Some("--rwa"), 1.0)] {
        let mut args = vec!["phase-boundary"];
        args.extend(extra);
        let o = sacs(&args);
        assert!(o.status.success());
        let (h, rows) = csv(&stdout(&o));
        let mu_c = num(&column(&h, &rows, "mu_c")[0]);
        assert!((mu_c - target).abs() < 1e-6, "{mu_c}");
        assert_eq!(num(&column(&h, &rows, "analytic")[0]), target);
        assert!(String::from_utf8_lossy(&o.stderr).contains("analytic"));
    }
    let o = sacs(&["phase-boundary", "--configuration", "xi", "--w2", "1", "--w3", "2"]);
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(column(&h, &rows, "analytic")[0], "NA");
}

#[test]
fn photon_distribution_fit_and_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = sacs(&["photon-dist", "--mu", "3", "--fit", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let (h, rows) = csv(&text);
    assert_eq!(h, ["nu", "P_even", "P_odd", "P_coh"]);
    for name in ["P_even", "P_odd", "P_coh"] {
        let total: f64 = column(&h, &rows, name).iter().map(|s| num(s)).sum();
        assert!((total - 1.0).abs() <= 1e-10, "{name}: {total}");
    }
    let fit_line = text.lines().find(|l| l.starts_with("# fit P_even")).unwrap();
    let fields: Vec<f64> = fit_line.split([',', ' ']).filter_map(|t| t.parse().ok()).collect();
    let (mean, sigma) = (fields[0], fields[1]);
    assert!((mean - 17.74).abs() / 17.74 <= 0.02, "{mean}");
    assert!((sigma - 4.23).abs() / 4.23 <= 0.03, "{sigma}");
}

#[test]
fn photon_distribution_in_normal_regime() {
    let o = sacs(&["photon-dist", "--mu", "0.3", "--branch", "even"]);
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(h, ["nu", "P_even"]);
    assert_eq!(rows, vec![vec!["0".to_string(), "1.0000000000000000e0".to_string()]]);
    let o = sacs(&["photon-dist", "--mu", "0.3", "--branch", "odd"]);
    let (_, rows) = csv(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(num(&rows[0][1]) + num(&rows[1][1]), 1.0);
}

#[test]
fn spectrum_and_exact_sweep_agree() {
    let o = sacs(&["spectrum", "--mu", "1", "--count", "2"]);
    assert!(o.status.success());
    let (h, rows) = csv(&stdout(&o));
    let energies = column(&h, &rows, "energy");
    assert_eq!(column(&h, &rows, "sector"), ["even", "even", "odd", "odd"]);
    assert!(num(&energies[0]) < num(&energies[1]));
    let s = sacs(&["sweep", "--mu", "1", "--branch", "exact,even", "--outputs", "energy"]);
    let (hs, rs) = csv(&stdout(&s));
    let exact = num(&column(&hs, &rs, "exact_even_energy")[0]) * 2.0;
    let sacs_even = num(&column(&hs, &rs, "even_energy")[0]) * 2.0;
    assert!((exact - num(&energies[0])).abs() < 1e-10);
    assert!(exact <= sacs_even);
    assert_eq!(sacs(&["spectrum", "--branch", "coherent"]).status.code(), Some(2));
}

#[test]
fn validate_fast_passes_and_reports_discrepancies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = sacs(&[
        "validate",
        "--level",
        "fast",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("PASS oracle equivalence")));
    assert!(text.lines().any(|l| l.starts_with("INFO reference-form discrepancy")));
    assert!(!text.lines().any(|l| l.starts_with("FAIL")));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["rows"].as_array().unwrap().len() >= 10);
}

#[test]
fn help_names_the_backed_figures() {
    for (cmd, phrase) in [
        ("sweep", "Backs the curves"),
        ("phase-boundary", "Backs the phase diagram"),
        ("photon-dist", "Backs the photon-distribution plots"),
        ("spectrum", "Backs the exact curves"),
    ] {
        let o = sacs(&[cmd, "--help"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains(phrase), "{cmd}");
    }
}

#[test]
fn other_configurations_report_na_for_degenerate_states() {
    let o = sacs(&[
        "sweep",
        "--configuration",
        "lambda",
        "--w2",
        "0.5",
        "--w3",
        "1",
        "--mu",
        "0:1.5:4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&stdout(&o));
    // at μ = 0 the minimum is the origin and the odd projection vanishes
    assert_eq!(column(&h, &rows, "odd_energy")[0], "NA");
    assert!(num(&column(&h, &rows, "odd_energy")[3]).is_finite());
}
