use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use windbench_cli::synth::{write_fixture, FixtureSpec, SynthDataset};
use windbench_cli::tables::{read_column_strings, NumericTable};
use windbench_core::grid::read_wgrd;
use windbench_core::{
    cumulative_power, extrapolate_height, js_distance, kde_eval, relative_power, scott_bandwidth, select_region,
    top_k_mean, w1_distance, wind_speed, EmpiricalSample, PowerCurve, RegionSelection, SpeedGrid, WindParams,
};

fn windbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_spec() -> FixtureSpec {
    let ds = |id: &str, shape, scale, n| SynthDataset {
        id: id.into(),
        shape,
        scale,
        n_y: n,
        n_x: n,
    };
    FixtureSpec {
        seed: 7,
        n_steps: 40,
        reference: ds("REF", 2.0, 6.0, 8),
        candidates: vec![ds("A", 2.2, 6.5, 6), ds("B", 1.8, 5.5, 5)],
        reference_mask: true,
    }
}

fn fixture(dir: &Path) -> PathBuf {
    write_fixture(dir, &small_spec()).unwrap()
}

fn evaluate(config: &Path) -> Output {
    windbench(&["evaluate", "--config", config.to_str().unwrap()])
}

fn edit_config(config: &Path, name: &str, f: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(config).unwrap()).unwrap();
    f(&mut doc);
    let path = config.with_file_name(name);
    std::fs::write(&path, serde_json::to_vec_pretty(&doc).unwrap()).unwrap();
    path
}

fn cell(table: &NumericTable, id: &str, col: &str) -> Option<f64> {
    let c = table.column(col).unwrap();
    table.rows.iter().find(|(k, _)| k == id).and_then(|(_, v)| v[c])
}

#[test]
fn zero_candidates_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = edit_config(&fixture(dir.path()), "solo.json", |doc| {
        doc["datasets"].as_array_mut().unwrap().truncate(1);
    });
    let out = evaluate(&config);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("candidate"));
}

#[test]
fn invalid_thread_setting_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_windbench"))
        .args(["evaluate", "--config", config.to_str().unwrap()])
        .env("WINDBENCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_match_library_calls_composed_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let out = evaluate(&config);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let metrics = NumericTable::read(&run.join("metrics.csv")).unwrap();
    let power = NumericTable::read(&run.join("power.csv")).unwrap();

    let curve = PowerCurve::from_csv(dir.path().join("vestas_v126_3450.csv")).unwrap();
    let params = WindParams {
        h_hub: 126.0,
        ..WindParams::default()
    };
    let load = |id: &str, mask: bool| {
        let u = read_wgrd(dir.path().join(format!("{id}_uas.wgrd"))).unwrap();
        let v = read_wgrd(dir.path().join(format!("{id}_vas.wgrd"))).unwrap();
        let hub = extrapolate_height(&wind_speed(&u, &v).unwrap(), &params).unwrap();
        let mut region = RegionSelection::new(25.0, 73.0, -30.0, 42.0).unwrap();
        if mask {
            region = region
                .with_mask(read_wgrd(dir.path().join(format!("{id}_landmask.wgrd"))).unwrap())
                .unwrap();
        }
        let selected = select_region(&hub, &region).unwrap();
        let summary = cumulative_power(&selected, &curve, 6.0).unwrap();
        let sample = EmpiricalSample::new(id, selected.active_values()).unwrap();
        (sample, summary)
    };
    let (ref_sample, ref_power) = load("REF", true);
    let h_ref = scott_bandwidth(&ref_sample).unwrap();
    assert_eq!(cell(&metrics, "REF", "mean"), Some(ref_sample.mean()));
    assert_eq!(
        cell(&metrics, "REF", "top_k_mean"),
        Some(top_k_mean(&ref_sample, 100).unwrap())
    );

    for id in ["A", "B"] {
        let (sample, summary) = load(id, false);
        let h = scott_bandwidth(&sample).unwrap();
        let grid = SpeedGrid::shared(&[&ref_sample, &sample], &[h_ref, h], 1024).unwrap();
        let p = kde_eval(&ref_sample, &grid, h_ref).unwrap();
        let q = kde_eval(&sample, &grid, h).unwrap();
        assert_eq!(cell(&metrics, id, "mean"), Some(sample.mean()), "{id}");
        assert_eq!(
            cell(&metrics, id, "top_k_mean"),
            Some(top_k_mean(&sample, 100).unwrap()),
            "{id}"
        );
        assert_eq!(cell(&metrics, id, "js"), Some(js_distance(&p, &q).unwrap()), "{id}");
        assert_eq!(
            cell(&metrics, id, "w1"),
            Some(w1_distance(&ref_sample, &sample).unwrap()),
            "{id}"
        );
        assert_eq!(
            cell(&power, id, "relative_power_percent"),
            Some(relative_power(&summary, &ref_power).unwrap()),
            "{id}"
        );
    }
}

#[test]
fn corrupt_candidate_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    assert!(evaluate(&config).status.success());
    let clean = NumericTable::read(&dir.path().join("run/metrics.csv")).unwrap();
    let clean_power = std::fs::read_to_string(dir.path().join("run/power.csv")).unwrap();

    let bytes = std::fs::read(dir.path().join("B_uas.wgrd")).unwrap();
    std::fs::write(dir.path().join("B_broken.wgrd"), &bytes[..bytes.len() / 2]).unwrap();
    let broken = edit_config(&config, "broken.json", |doc| {
        doc["datasets"][2]["u_path"] = "B_broken.wgrd".into();
        doc["output_dir"] = "broken-run".into();
    });
    let out = evaluate(&broken);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    let run = dir.path().join("broken-run");
    let metrics = NumericTable::read(&run.join("metrics.csv")).unwrap();
    assert_eq!(metrics.rows.len(), 2);
    for id in ["REF", "A"] {
        for col in ["mean", "top_k_mean", "js", "w1"] {
            assert_eq!(cell(&metrics, id, col), cell(&clean, id, col), "{id} {col}");
        }
    }
    let clean_a: Vec<&str> = clean_power.lines().filter(|l| l.starts_with("A,")).collect();
    let broken_power = std::fs::read_to_string(run.join("power.csv")).unwrap();
    let broken_a: Vec<&str> = broken_power.lines().filter(|l| l.starts_with("A,")).collect();
    assert_eq!(clean_a, broken_a);

    let err: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("datasets/B/error.json")).unwrap()).unwrap();
    assert!(err["error"].as_str().unwrap().contains("offset"), "{err}");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("run.json")).unwrap()).unwrap();
    let statuses: Vec<&str> = meta["datasets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["status"].as_str().unwrap())
        .collect();
    assert_eq!(statuses, ["ok", "ok", "failed"]);
}

#[test]
fn report_renders_three_well_formed_charts() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    assert!(evaluate(&config).status.success());
    let run = dir.path().join("run");
    let out = windbench(&["report", "--run", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for name in ["kde.svg", "resolution.svg", "relative_power.svg"] {
        let text = std::fs::read_to_string(run.join(name)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
    }

    // Bar labels carry the CSV strings verbatim.
    let text = std::fs::read_to_string(run.join("relative_power.svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let labels: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("value"))
        .filter_map(|n| n.text())
        .collect();
    let csv = read_column_strings(&run.join("power.csv"), "relative_power_percent").unwrap();
    assert_eq!(labels, &csv[1..]);

    let kde = std::fs::read_to_string(run.join("kde.svg")).unwrap();
    let kde = roxmltree::Document::parse(&kde).unwrap();
    let lines = kde.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(lines, 3);
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = windbench(&["report", "--run", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn regress_prints_one_row_per_metric() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.csv",
        "source_id,js,w1\nA,0.2,0.01\nB,0.15,0.008\nC,0.1,0.004\nD,0.12,0.005\n",
    );
    let p = write(dir.path(), "p.csv", "source_id,points\nA,150\nB,400\nC,1600\nD,900\n");
    let out = windbench(&["regress", "--metrics", &m, "--points", &p, "--log-base", "natural"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "metric,intercept,slope,std_dev,r_squared_percent,p_value");
    assert!(lines[1].starts_with("js,") && lines[2].starts_with("w1,"));
    assert_eq!(lines.len(), 3);

    // Shuffled and duplicated rows give the same output.
    let m2 = write(
        dir.path(),
        "m2.csv",
        "source_id,js,w1\nC,0.1,0.004\nA,0.2,0.01\nD,0.12,0.005\nB,0.15,0.008\nA,0.2,0.01\n",
    );
    let again = windbench(&["regress", "--metrics", &m2, "--points", &p, "--log-base", "natural"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn regress_rejects_mismatched_ids_and_tiny_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "source_id,points\nA,150\nB,400\nC,1600\n");
    let m = write(dir.path(), "m.csv", "source_id,js\nA,0.2\nX,0.1\nY,0.3\n");
    let out = windbench(&["regress", "--metrics", &m, "--points", &p]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('X') && err.contains('Y'), "{err}");

    let single = write(dir.path(), "s.csv", "source_id,js\nA,0.2\n");
    let out = windbench(&["regress", "--metrics", &single, "--points", &p]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = windbench(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}
