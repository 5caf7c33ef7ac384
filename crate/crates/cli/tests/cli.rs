use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pnpqkd::{parse_config, RunConfig};
use pnpqkd_core::experiments::point_from_row;
use pnpqkd_core::KeyRateModel;

fn pnpqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnpqkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn scan_into(dir: &Path) -> Output {
    pnpqkd(&[
        "scan",
        "--scenario",
        "no-decoy-finite",
        "--na",
        "1e11,1e12",
        "--lmin",
        "0",
        "--lmax-km",
        "20",
        "--lstep",
        "10",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn identical_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(scan_into(&a).status.success());
    assert!(scan_into(&b).status.success());
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, fb);
}

#[test]
fn csv_rows_are_complete_and_reproduce_rates() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(scan_into(tmp.path()).status.success());
    let model = KeyRateModel::default();
    for (name, bytes) in files(tmp.path()) {
        let text = String::from_utf8(bytes).unwrap();
        assert!(!text.contains('\r'));
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&header[..4], &["scenario", "L_km", "N_A", "R"]);
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 3, "{name}");
        for row in rows {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields.len(), header.len(), "{name}: {row}");
            let rate: f64 = fields[3].parse().unwrap();
            let again = model
                .evaluate(&point_from_row(&fields).unwrap())
                .unwrap()
                .rate;
            assert!(
                (again - rate).abs() <= 1e-12 * rate.abs(),
                "{name}: {rate} vs {again}"
            );
        }
    }
}

#[test]
fn empty_distance_range_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let o = pnpqkd(&[
        "scan",
        "--scenario",
        "no-decoy-infinite",
        "--lmin",
        "30",
        "--lmax-km",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty range"));
    assert!(!out.exists());
}

#[test]
fn config_file_drives_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            "scenario = \"decoy-infinite\"\nlmin = 0.0\nlmax_km = 10.0\nlstep = 10.0\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let o = pnpqkd(&["scan", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written = files(&out);
    assert_eq!(written.len(), 1);
    assert_eq!(written[0].0, "scan_decoy-infinite_inf.csv");
}

#[test]
fn invalid_config_is_reported_with_its_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "eta_B = 0.045\nq_A = 1.5\n").unwrap();
    let o = pnpqkd(&[
        "lmax",
        "--scenario",
        "no-decoy-infinite",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("q_A") && err.contains("line 2"), "{err}");
}

#[test]
fn lmax_command_writes_one_row_per_pulse_count() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pnpqkd(&[
        "lmax",
        "--scenario",
        "no-decoy-infinite",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let written = files(tmp.path());
    let text = String::from_utf8(written[0].1.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,N_A,L_max_km");
    assert_eq!(lines.len(), 2);
    let lmax: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(lmax > 30.0 && lmax < 50.0, "{lmax}");
}

#[test]
fn serialized_defaults_parse_back() {
    let text = RunConfig::default().to_toml();
    assert_eq!(parse_config(&text).unwrap(), RunConfig::default());
}
