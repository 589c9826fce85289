//! End-to-end checks of the mixlab binary: exit codes, CSV shape, config
//! echoes, determinism of reruns, and the SVG emitter.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use mixlab_core::grid::{GridSpec, IndicatorField};
use rand::{Rng, SeedableRng};

fn mixlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlab"))
        .args(args)
        .env_remove("MIXLAB_THREADS")
        .output()
        .expect("binary should spawn")
}

/// Fresh scratch directory, unique per test name.
fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mixlab-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("scratch dir should be creatable");
    dir
}

/// Split a CSV produced by the binary into (comment lines, header, rows).
fn split_csv(text: &str) -> (Vec<&str>, &str, Vec<&str>) {
    let mut comments = Vec::new();
    let mut header = "";
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') {
            comments.push(line);
        } else if header.is_empty() {
            header = line;
        } else if !line.trim().is_empty() {
            rows.push(line);
        }
    }
    (comments, header, rows)
}

#[test]
fn help_exits_zero() {
    let out = mixlab(&["--help"]);
    assert_eq!(out.status.code(), Some(0), "--help should succeed");
    assert!(
        String::from_utf8_lossy(&out.stdout).contains("mixlab"),
        "help text should name the binary"
    );
    let out = mixlab(&["seminorm", "--help"]);
    assert_eq!(out.status.code(), Some(0), "subcommand help should succeed");
}

#[test]
fn usage_errors_exit_two() {
    let unknown_flag = mixlab(&["seminorm", "--bogus"]);
    assert_eq!(unknown_flag.status.code(), Some(2), "unknown flag");
    assert!(
        !String::from_utf8_lossy(&unknown_flag.stderr).is_empty(),
        "usage errors should explain themselves on stderr"
    );
    let unknown_cmd = mixlab(&["frobnicate"]);
    assert_eq!(unknown_cmd.status.code(), Some(2), "unknown subcommand");
    let missing_source = mixlab(&["seminorm"]);
    assert_eq!(
        missing_source.status.code(),
        Some(2),
        "a set source is required"
    );
    let both_sources = mixlab(&["seminorm", "--set", "x.txt", "--shape", "half"]);
    assert_eq!(both_sources.status.code(), Some(2), "sources are exclusive");
}

#[test]
fn computation_errors_exit_one() {
    let out = mixlab(&["seminorm", "--set", "/nonexistent/field.txt"]);
    assert_eq!(out.status.code(), Some(1), "missing input file");
    let out = mixlab(&["seminorm", "--shape", "half", "--N", "64", "--eps", "0.4"]);
    assert_eq!(out.status.code(), Some(1), "eps out of range");
}

#[test]
fn seminorm_echoes_config_then_data() {
    let out = mixlab(&["seminorm", "--shape", "half", "--N", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).expect("utf8 csv");
    let (comments, header, rows) = split_csv(&text);
    assert!(
        text.starts_with("# config: cmd=seminorm shape=half N=64"),
        "resolved config must be the first comment line, got {:?}",
        comments.first()
    );
    assert!(comments[0].contains("seed=0"), "seed echoed");
    assert_eq!(header, "eps,kappa,rho,seminorm");
    assert_eq!(rows.len(), 1, "one summary row");
    let value: f64 = rows[0].split(',').last().unwrap().parse().unwrap();
    assert!(value.is_finite() && value > 0.0, "half torus is unmixed");
}

#[test]
fn run_scheme_writes_level_rows() {
    let dir = tmpdir("scheme");
    let ledger = dir.join("l.csv");
    let out = mixlab(&[
        "run-scheme",
        "--levels",
        "3",
        "--N",
        "64",
        "--ledger",
        ledger.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&ledger).unwrap();
    let (comments, header, rows) = split_csv(&text);
    assert!(comments[0].starts_with("# config: cmd=run-scheme levels=3 N=64"));
    assert_eq!(
        header,
        "level,moves,level_cost,seminorm_after,mixing_scale_after"
    );
    assert_eq!(rows.len(), 3, "one row per level");
    for row in &rows {
        let cost: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(cost, 0.375, "every level costs exactly 3/8");
    }
}

#[test]
fn counterexample_emits_part_rows() {
    let dir = tmpdir("parts");
    let csv = dir.join("parts.csv");
    let out = mixlab(&[
        "counterexample",
        "--M",
        "12",
        "--L",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    let (comments, header, rows) = split_csv(&text);
    assert!(comments[0].starts_with("# config: cmd=counterexample M=12 L=3"));
    assert_eq!(header, "L,eps,E1,E2,E3,I,e1_floor");
    assert_eq!(rows.len(), 2, "rows for L = 2 and 3");
    for row in &rows {
        let f: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        let (l, eps, e1, i_total, floor) = (f[0], f[1], f[2], f[5], f[6]);
        assert_eq!(eps, 2f64.powi(-12 * l as i32), "eps = 2^(-LM)");
        assert!(e1 >= floor, "diagonal part above its floor");
        assert!(i_total > 0.0, "interaction positive");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tmpdir("rerun");
    let run = |path: &PathBuf, extra_env: Option<(&str, &str)>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mixlab"));
        cmd.args([
            "ledger",
            "--shape",
            "checker",
            "--checker-m",
            "2",
            "--N",
            "32",
            "--random",
            "5",
            "--csv",
            path.to_str().unwrap(),
        ]);
        cmd.env_remove("MIXLAB_THREADS");
        if let Some((k, v)) = extra_env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let (a, b, c) = (dir.join("a.csv"), dir.join("b.csv"), dir.join("c.csv"));
    run(&a, None);
    run(&b, None);
    run(&c, Some(("MIXLAB_THREADS", "1")));
    let bytes_a = fs::read(&a).unwrap();
    assert_eq!(bytes_a, fs::read(&b).unwrap(), "same seed, same bytes");
    assert_eq!(
        bytes_a,
        fs::read(&c).unwrap(),
        "thread cap must not change results"
    );
    let seeded = dir.join("seeded.csv");
    let out = mixlab(&[
        "ledger",
        "--shape",
        "checker",
        "--checker-m",
        "2",
        "--N",
        "32",
        "--random",
        "5",
        "--seed",
        "1",
        "--csv",
        seeded.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(
        bytes_a,
        fs::read(&seeded).unwrap(),
        "a new seed draws a new corpus"
    );
}

#[test]
fn plot_renders_deterministic_svg() {
    let dir = tmpdir("plot");
    let ledger = dir.join("l.csv");
    let out = mixlab(&[
        "run-scheme",
        "--levels",
        "3",
        "--N",
        "64",
        "--ledger",
        ledger.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (p1, p2) = (dir.join("a.svg"), dir.join("b.svg"));
    for p in [&p1, &p2] {
        let out = mixlab(&[
            "plot",
            "--csv",
            ledger.to_str().unwrap(),
            "--x",
            "level",
            "--y",
            "level_cost",
            "--out",
            p.to_str().unwrap(),
            "--title",
            "cost per level",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let svg = fs::read_to_string(&p1).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("polyline"), "three points draw a line");
    assert!(svg.contains("cost per level"), "title rendered");
    assert_eq!(
        fs::read(&p1).unwrap(),
        fs::read(&p2).unwrap(),
        "identical input, identical bytes"
    );

    let single = dir.join("single.csv");
    fs::write(&single, "x,y\n1.0,2.0\n").unwrap();
    let p3 = dir.join("single.svg");
    let out = mixlab(&[
        "plot",
        "--csv",
        single.to_str().unwrap(),
        "--x",
        "x",
        "--y",
        "y",
        "--out",
        p3.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let svg = fs::read_to_string(&p3).unwrap();
    assert!(
        svg.contains("circle") && !svg.contains("polyline"),
        "a single point plots as one marker"
    );
    let missing = mixlab(&[
        "plot",
        "--csv",
        single.to_str().unwrap(),
        "--x",
        "x",
        "--y",
        "nope",
        "--out",
        p3.to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1), "unknown column");
}

#[test]
fn verify_identity_reports_both_sides() {
    let dir = tmpdir("identity");
    let csv = dir.join("v.csv");
    let samples = dir.join("s.csv");
    let out = mixlab(&[
        "verify-identity",
        "--N",
        "64",
        "--steps",
        "2",
        "--csv",
        csv.to_str().unwrap(),
        "--samples",
        samples.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    let (_, header, rows) = split_csv(&text);
    assert_eq!(header, "lhs,rhs,rel_gap,seminorm_start,seminorm_end");
    let f: Vec<f64> = rows[0].split(',').map(|s| s.parse().unwrap()).collect();
    assert!(f.iter().all(|v| v.is_finite()), "all summary values finite");
    assert!(f[0] > 0.0, "shear raises the seminorm");
    let text = fs::read_to_string(&samples).unwrap();
    let (_, header, rows) = split_csv(&text);
    assert_eq!(header, "t,form_value");
    assert_eq!(rows.len(), 2, "one sample per midpoint step");
}

#[test]
fn slider_reports_distances_and_cascades() {
    let out = mixlab(&["slider", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let (_, header, rows) = split_csv(&text);
    assert_eq!(header, "n,mode,distance");
    assert_eq!(rows[0], "1,exhaustive,1", "one move mixes the n=1 torus");

    let out = mixlab(&["slider", "--n", "4", "--cascade-budget", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let (_, header, rows) = split_csv(&text);
    assert_eq!(header, "n,mode,moves_used,reached_parity,mixed_scale_cells");
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[1], "cascade");
    assert_eq!(fields[3], "true", "budget 200 reaches parity at n=4");
}

#[test]
fn set_files_round_trip() {
    let dir = tmpdir("roundtrip");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for k in 0..100 {
        let n = [8usize, 16, 32][k % 3];
        let spec = GridSpec::new(n).unwrap();
        let cells: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(0.5)).collect();
        let field = IndicatorField::from_fn(spec, |i, j| cells[j * n + i]);
        let path = dir.join(format!("f{k}.txt"));
        field.write_file(&path).unwrap();
        let back = IndicatorField::read_file(&path).unwrap();
        assert_eq!(
            field.to_text(),
            back.to_text(),
            "field {k} must survive the file round trip"
        );
    }
}
