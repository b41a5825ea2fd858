use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use inflap::grid::{boundary_trace, Grid, ScalarField, Shape};
use inflap_cli::io::{read_field, write_boundary_table, write_field};
use serde_json::{json, Value};

fn inflap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inflap"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run(config: &Path) -> Output {
    inflap(&["run", config.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn linear_1d(out: &str) -> Value {
    json!({
        "format_version": 1,
        "command": "solve-mv",
        "domain": {"lo": [0.0], "hi": [1.0], "h": 0.0625},
        "boundary": {"catalog": {"id": "affine", "coef": [1.0]}},
        "solver": {"eps": 0.0625, "tolerance": 1e-12},
        "output": {"dir": out}
    })
}

fn read_csv_values(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect()
}

#[test]
fn linear_solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", &linear_1d("solve"));
    let o = run(&cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("solve-mv:"));
    let rows = read_csv_values(&dir.path().join("solve/field.csv"));
    assert_eq!(rows.len(), 17);
    for row in &rows {
        assert!((row[1] - row[0]).abs() <= 1e-6);
    }
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solve/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["converged"], true);

    let verify = json!({
        "format_version": 1,
        "command": "verify",
        "domain": {"lo": [0.0], "hi": [1.0], "h": 0.0625},
        "input": "solve/field.csv",
        "checks": ["max-principle", "cone-comparison"],
        "seed": 3,
        "output": {"dir": "verify"}
    });
    let o = run(&write_config(dir.path(), "verify.json", &verify));
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["property"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["max_principle", "cone_comparison"]);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut small = linear_1d("out");
    small["solver"]["eps"] = json!(0.03);
    let o = run(&write_config(dir.path(), "a.json", &small));
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("solver.eps") && stderr(&o).contains("eps >= h"),
        "{}",
        stderr(&o)
    );

    let mut unknown = linear_1d("out");
    unknown["solver"]["omega"] = json!(1.5);
    let o = run(&write_config(dir.path(), "b.json", &unknown));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.omega"), "{}", stderr(&o));

    let mut command = linear_1d("out");
    command["command"] = json!("solve-everything");
    let o = run(&write_config(dir.path(), "c.json", &command));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`command`"), "{}", stderr(&o));

    let mut two_sources = linear_1d("out");
    two_sources["boundary"]["table"] = json!("missing.csv");
    let o = run(&write_config(dir.path(), "d.json", &two_sources));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("boundary"), "{}", stderr(&o));

    let mut p = linear_1d("out");
    p["command"] = json!("solve-p");
    p["solver"] = json!({"p": 100.0});
    let o = run(&write_config(dir.path(), "e.json", &p));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.p"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn iteration_cap_exits_with_three_and_keeps_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "format_version": 1,
        "command": "solve-mv",
        "domain": {"lo": [0.0, 0.0], "hi": [1.0, 1.0], "h": 0.125},
        "boundary": {"catalog": {"id": "aronsson"}},
        "solver": {"eps": 0.25, "max_iterations": 2, "tolerance": 1e-14},
        "output": {"dir": "out"}
    });
    let o = run(&write_config(dir.path(), "cap.json", &config));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("NOT CONVERGED"));
    assert!(dir.path().join("out/field.csv").is_file());
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["converged"], false);
}

#[test]
fn field_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::build(&[-1.0, 0.0], &[1.0, 1.5], 0.1, Shape::Rectangle).unwrap();
    let u = ScalarField::from_fn(&grid, |x| {
        (x[0] * 7.3).sin() / 3.0 + x[1].exp() * 1e-7 + 1e300 * (x[0] - 0.3).abs()
    });
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_field(&a, &grid, &u).unwrap();
    let back = read_field(&a, &grid).unwrap();
    assert_eq!(back, u);
    write_field(&b, &grid, &back).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let other = Grid::build(&[-1.0, 0.0], &[1.0, 1.5], 0.05, Shape::Rectangle).unwrap();
    assert!(read_field(&a, &other).is_err());
}

#[test]
fn boundary_table_matches_catalog_source() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::build(&[0.0, 0.0], &[1.0, 1.0], 0.125, Shape::LShape).unwrap();
    let apex = [-0.5, -0.25];
    let g = boundary_trace(&grid, |x| {
        ((x[0] - apex[0]).powi(2) + (x[1] - apex[1]).powi(2)).sqrt()
    })
    .unwrap();
    write_boundary_table(&dir.path().join("g.csv"), &grid, &g).unwrap();
    let base = json!({
        "format_version": 1,
        "command": "solve-mv",
        "domain": {"lo": [0.0, 0.0], "hi": [1.0, 1.0], "h": 0.125, "shape": {"kind": "l-shape"}},
        "boundary": {"table": "g.csv"},
        "solver": {"eps": 0.25},
        "output": {"dir": "table"}
    });
    let o = run(&write_config(dir.path(), "table.json", &base));
    assert!(o.status.success(), "{}", stderr(&o));

    let mut catalog = base.clone();
    catalog["boundary"] = json!({"catalog": {"id": "cone", "apex": apex, "b": 1.0}});
    catalog["output"]["dir"] = json!("catalog");
    let o = run(&write_config(dir.path(), "catalog.json", &catalog));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.path().join("table/field.csv")).unwrap(),
        fs::read(dir.path().join("catalog/field.csv")).unwrap()
    );
}

#[test]
fn every_command_runs_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let domain = json!({"lo": [0.0, 0.0], "hi": [1.0, 1.0], "h": 0.125});
    let boundary = json!({"catalog": {"id": "cone", "apex": [-0.5, -0.25], "b": 1.0}});
    let solve = json!({
        "format_version": 1, "command": "solve-mv", "domain": domain, "boundary": boundary,
        "solver": {"eps": 0.25, "tolerance": 1e-12}, "output": {"dir": "mv"}
    });
    let configs = [
        solve.clone(),
        json!({"format_version": 1, "command": "solve-p", "domain": domain, "boundary": boundary,
               "solver": {"p": 4.0}, "output": {"dir": "p"}}),
        json!({"format_version": 1, "command": "sweep-p", "domain": domain, "boundary": boundary,
               "solver": {"eps": 0.25, "ps": [2.0, 4.0, 8.0], "warm_start": false}, "output": {"dir": "sweep"}}),
        json!({"format_version": 1, "command": "sandwich", "domain": domain, "boundary": boundary,
               "solver": {"eps": 0.25, "delta": 0.5}, "output": {"dir": "sandwich"}}),
        json!({"format_version": 1, "command": "extend", "domain": domain, "boundary": boundary,
               "solver": {"side": "lower"}, "output": {"dir": "extend"}}),
        json!({"format_version": 1, "command": "residual", "domain": domain, "input": "mv/field.csv",
               "solver": {"eps": 0.25}, "output": {"dir": "residual"}}),
        json!({"format_version": 1, "command": "verify", "domain": domain, "input": "mv/field.csv",
               "solver": {"eps": 0.25}, "seed": 11,
               "checks": ["max-principle", {"check": "cone-comparison", "cones": 20, "subdomains": 5},
                          {"check": "harnack", "x0": [0.5, 0.5], "r": 0.1, "R": 0.45, "form": "exponential"},
                          {"check": "amle", "ball": {"center": [0.5, 0.5], "radius": 0.3}}],
               "output": {"dir": "verify"}}),
        json!({"format_version": 1, "command": "tug-of-war", "domain": domain, "boundary": boundary,
               "solver": {"eps": 0.25}, "seed": 5,
               "game": {"start": [0.5, 0.5], "runs": 500, "max_strategy": "dpp:mv/field.csv",
                        "min_strategy": "dpp:mv/field.csv", "transcript": true},
               "output": {"dir": "game"}}),
    ];
    let mut first = Vec::new();
    for round in 0..2 {
        for (k, c) in configs.iter().enumerate() {
            let o = run(&write_config(dir.path(), &format!("c{k}.json"), c));
            assert!(o.status.success(), "{}: {}", c["command"], stderr(&o));
            let out = dir.path().join(c["output"]["dir"].as_str().unwrap());
            let mut files: Vec<PathBuf> = fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            let contents: Vec<(PathBuf, Vec<u8>)> = files
                .into_iter()
                .map(|f| (f.clone(), fs::read(&f).unwrap()))
                .collect();
            if round == 0 {
                first.push(contents);
            } else {
                assert_eq!(
                    first[k], contents,
                    "{} artifacts differ between runs",
                    c["command"]
                );
            }
        }
    }
    let verify: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify/report.json")).unwrap())
            .unwrap();
    assert_eq!(verify["passed"], true, "{verify:#}");
    let game: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("game/report.json")).unwrap())
            .unwrap();
    assert_eq!(
        read_csv_values_lossy(&dir.path().join("game/transcript.csv")),
        500
    );
    assert!(game["stats"]["mean"].as_f64().unwrap() > 0.0);
    let sweep = fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    assert!(sweep.starts_with("p,energy,distance_to_mv,grad_L2,grad_L4,grad_L8,passes,converged"));
}

fn read_csv_values_lossy(path: &Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

#[test]
fn game_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "format_version": 1, "command": "tug-of-war",
        "domain": {"lo": [0.0], "hi": [1.0], "h": 0.25},
        "boundary": {"catalog": {"id": "affine", "coef": [1.0]}},
        "solver": {"eps": 0.25},
        "game": {"start": [0.5], "runs": 100},
        "output": {"dir": "game"}
    });
    let path = write_config(dir.path(), "g.json", &config);
    let o = inflap(&[
        "run",
        path.to_str().unwrap(),
        "--start",
        "0.75",
        "--runs",
        "4000",
        "--seed",
        "9",
        "--max-strategy",
        "random",
        "--min-strategy",
        "random",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("game/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["game"]["runs"], 4000);
    assert_eq!(report["game"]["seed"], 9);
    assert_eq!(report["game"]["max_strategy"], "random");
    let stats = &report["stats"];
    let (mean, hw) = (
        stats["mean"].as_f64().unwrap(),
        stats["half_width"].as_f64().unwrap(),
    );
    assert!((mean - 0.75).abs() <= 3.0 * hw, "{stats}");

    let o = inflap(&["run", path.to_str().unwrap(), "--runs", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("game.runs"));
    let o = inflap(&["check", path.to_str().unwrap()]);
    assert!(o.status.success());
}
