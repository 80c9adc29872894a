use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use auctionfda::auction_data::{parse_lot_catalog, write_lot_catalog, TimeFormat};
use auctionfda::report::sha256_hex;
use auctionfda::Money;

const BIN: &str = env!("CARGO_BIN_EXE_auctionfda");

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

struct Run {
    code: i32,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("AUCTIONFDA_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn header_block(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn polylines(svg: &Path) -> usize {
    let text = fs::read_to_string(svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("valid XML");
    doc.descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .count()
}

fn smooth(lots: &Path, bids: &Path, out: &Path, extra: &[&str]) -> Run {
    let mut args = vec![
        "smooth",
        "--lots",
        p(lots),
        "--bids",
        p(bids),
        "--out",
        p(out),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn simulate(out: &Path, extra: &[&str]) -> Run {
    let mut args = vec!["simulate", "--out", p(out)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn smooth_sample_catalog_writes_one_row_per_lot_and_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let r = smooth(
        &fixture("sample_lots.csv"),
        &fixture("sample_bids.csv"),
        dir.path(),
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = data_rows(&dir.path().join("curves.csv"));
    assert_eq!(rows.len(), 400);
    assert!(rows[0].starts_with("1,1,0,"));
    assert!(rows[399].starts_with("81,100,1,"));
    assert_eq!(polylines(&dir.path().join("curves.svg")), 4);

    let header = header_block(&dir.path().join("curves.csv"));
    assert!(header[0].starts_with("# auctionfda "));
    assert_eq!(header[1], "# command: smooth");
    assert!(header[2].contains("--grid 100 --degree 4 --knots 10 --penalty-order 2 --lambda 0.1"));
    let digest = sha256_hex(&fs::read(fixture("sample_bids.csv")).unwrap());
    assert!(header.contains(&format!("# input: sample_bids.csv sha256={digest}")));
}

#[test]
fn lot_without_bids_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let bids: String = fs::read_to_string(fixture("sample_bids.csv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("10,"))
        .map(|l| format!("{l}\n"))
        .collect();
    let bids_path = dir.path().join("bids.csv");
    fs::write(&bids_path, bids).unwrap();
    let r = smooth(&fixture("sample_lots.csv"), &bids_path, dir.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.contains("lot 10 has no bids"), "{}", r.stderr);
    assert_eq!(data_rows(&dir.path().join("curves.csv")).len(), 300);
    assert!(header_block(&dir.path().join("curves.csv")).contains(&"# skipped: 10".to_string()));
}

#[test]
fn per_lot_failure_gives_exit_code_one_and_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    let mut bids = fs::read_to_string(fixture("sample_bids.csv")).unwrap();
    let lots = fs::read_to_string(fixture("sample_lots.csv")).unwrap();
    let lots = format!(
        "{lots}99,\"Anon\",Others,1,1,1,2,10,10,Oil on canvas,,0,1,2005-12-07T09:30:00Z,2005-12-10T10:00:00Z\n"
    );
    bids.push_str("99,x,2005-12-08T09:30:00Z,1\n99,y,2005-12-09T09:30:00Z,1\n");
    fs::write(dir.path().join("lots.csv"), lots).unwrap();
    fs::write(dir.path().join("bids.csv"), bids).unwrap();
    let r = smooth(
        &dir.path().join("lots.csv"),
        &dir.path().join("bids.csv"),
        dir.path(),
        &[],
    );
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert_eq!(data_rows(&dir.path().join("curves.csv")).len(), 400);
    assert!(header_block(&dir.path().join("curves.csv"))
        .iter()
        .any(|l| l.starts_with("# failed: 99")));

    let r = smooth(
        &dir.path().join("lots.csv"),
        &dir.path().join("bids.csv"),
        &dir.path().join("log"),
        &["--response", "logprice"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn invalid_input_and_config_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(smooth(&missing, &missing, dir.path(), &[]).code, 2);
    let lots = fixture("sample_lots.csv");
    let bids = fixture("sample_bids.csv");
    assert_eq!(smooth(&lots, &bids, dir.path(), &["--degree", "0"]).code, 2);
    assert_eq!(smooth(&lots, &bids, dir.path(), &["--grid", "1"]).code, 2);
    assert_eq!(
        smooth(&lots, &bids, dir.path(), &["--response", "odd"]).code,
        2
    );
    let r = run_env(
        &[
            "smooth",
            "--lots",
            p(&lots),
            "--bids",
            p(&bids),
            "--out",
            p(dir.path()),
        ],
        &[("AUCTIONFDA_THREADS", "zero")],
    );
    assert_eq!(r.code, 2);
    assert_eq!(simulate(dir.path(), &["--n-lots", "0"]).code, 2);
    let bad_spec = dir.path().join("spec.json");
    fs::write(&bad_spec, r#"{"n_lots": 20, "bogus": 1}"#).unwrap();
    assert_eq!(
        run(&["simulate", p(&bad_spec), "--out", p(dir.path())]).code,
        2
    );
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let lots = fixture("sample_lots.csv");
    let bids = fixture("sample_bids.csv");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(smooth(&lots, &bids, &a, &[]).code, 0);
    let r = run_env(
        &[
            "smooth",
            "--lots",
            p(&lots),
            "--bids",
            p(&bids),
            "--out",
            p(&b),
        ],
        &[("AUCTIONFDA_THREADS", "1")],
    );
    assert_eq!(r.code, 0);
    assert_eq!(
        fs::read(a.join("curves.csv")).unwrap(),
        fs::read(b.join("curves.csv")).unwrap()
    );
}

#[test]
fn simulated_data_feeds_smooth_and_regress() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let r = simulate(&data, &["--seed", "5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["seed"], 5);
    assert!(truth["rng"].as_str().unwrap().contains("ChaCha20"));

    let lots = data.join("lots.csv");
    let bids = data.join("bids.csv");
    let out = dir.path().join("fit");
    assert_eq!(smooth(&lots, &bids, &out, &[]).code, 0);
    assert_eq!(data_rows(&out.join("curves.csv")).len(), 107 * 100);

    let r = run(&[
        "regress",
        "--lots",
        p(&lots),
        "--bids",
        p(&bids),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let coef = out.join("coefficients.csv");
    let rows = data_rows(&coef);
    assert_eq!(rows.len(), 1800);
    assert_eq!(rows.iter().filter(|r| r.contains(",level,")).count(), 900);
    assert_eq!(
        rows.iter().filter(|r| r.contains(",velocity,")).count(),
        900
    );
    let header = header_block(&coef);
    assert!(header[2].contains("--alpha 0.05"), "{header:?}");
    assert!(header.contains(&"# N: 107".to_string()));
    for name in auctionfda::funcreg::column_names() {
        let svg = out.join(format!("coef_{name}.svg"));
        assert_eq!(polylines(&svg), 2, "{name}");
    }

    let via_file = dir.path().join("via_file");
    let r = run(&[
        "regress",
        "--lots",
        p(&lots),
        "--bids",
        p(&bids),
        "--out",
        p(&via_file),
        "--curves",
        p(&out.join("curves.csv")),
        "--acceleration",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows_from_file = data_rows(&via_file.join("coefficients.csv"));
    assert_eq!(rows_from_file.len(), 2700);
    assert_eq!(&rows_from_file[..1800], &rows[..]);
    assert_eq!(polylines(&via_file.join("coef_bidders.svg")), 3);
}

#[test]
fn planted_outliers_are_removed_before_regression() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(dir.path(), &["--seed", "9"]).code, 0);
    let lots_path = dir.path().join("lots.csv");
    let mut lots = parse_lot_catalog(&lots_path).unwrap();
    let planted = [3usize, 17, 29, 44, 58, 71, 96];
    let scale = |m: Money| Money(m.cents() * 1000);
    for &i in &planted {
        let l = &mut lots[i];
        l.opening_bid = scale(l.opening_bid);
        l.low_estimate = scale(l.low_estimate);
        l.high_estimate = scale(l.high_estimate);
        l.prev_price_per_sqin = l.prev_price_per_sqin.map(scale);
        l.length_in *= 40.0;
        l.width_in *= 40.0;
    }
    let mut buf = Vec::new();
    write_lot_catalog(&mut buf, &lots, TimeFormat::Iso8601).unwrap();
    fs::write(&lots_path, buf).unwrap();

    let r = run(&[
        "regress",
        "--lots",
        p(&lots_path),
        "--bids",
        p(&dir.path().join("bids.csv")),
        "--out",
        p(dir.path()),
        "--outlier-sd",
        "2.5",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let header = header_block(&dir.path().join("coefficients.csv"));
    assert!(header.contains(&"# N: 100".to_string()), "{header:?}");
    let ids: Vec<String> = planted.iter().map(|&i| lots[i].lot_id.clone()).collect();
    assert!(
        header.contains(&format!("# outliers_removed: {}", ids.join(" "))),
        "{header:?}"
    );
    assert!(header[2].contains("--outlier-sd 2.5"));
}

fn linear_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut lots = String::from("lot_id,artist_id,artist_type,opening_bid,low_estimate,high_estimate,position_group,length_in,width_in,medium,prev_price_per_sqin,prev_lots_sold,realized_price,auction_open,auction_close\n");
    let mut bids = String::from("lot_id,bidder_id,timestamp,amount\n");
    for j in 0..12 {
        let (a, b) = (9.0 + 0.1 * j as f64, 0.2 + 0.05 * j as f64);
        let open = (a.exp() * 100.0).round() / 100.0;
        lots.push_str(&format!(
            "{j},a{j},Others,{open},{open},{open},1,10,10,canvas,5,1,,0,1000\n"
        ));
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let amount = ((a + b * t).exp() * 100.0).round() / 100.0;
            bids.push_str(&format!("{j},b{},{},{amount}\n", k % 3, k * 100));
        }
    }
    let (lp, bp) = (dir.join("lots.csv"), dir.join("bids.csv"));
    fs::write(&lp, lots).unwrap();
    fs::write(&bp, bids).unwrap();
    (lp, bp)
}

#[test]
fn sensitivity_sweeps_flag_one_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let (lots, bids) = linear_fixture(dir.path());
    for response in ["fraction", "logprice"] {
        let r = run(&[
            "sensitivity",
            "--lots",
            p(&lots),
            "--bids",
            p(&bids),
            "--out",
            p(dir.path()),
            "--response",
            response,
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let rows = data_rows(&dir.path().join("sensitivity.csv"));
        assert_eq!(rows.len(), 42);
        assert_eq!(rows.iter().filter(|r| r.contains(",true,")).count(), 1);
        for row in &rows {
            let rmse: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
            assert!(rmse < 1e-5, "{row}");
        }
    }

    let r = run(&[
        "sensitivity",
        "--lots",
        p(&lots),
        "--bids",
        p(&bids),
        "--out",
        p(dir.path()),
        "--degrees",
        "5",
        "--lambdas",
        "0.5",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = data_rows(&dir.path().join("sensitivity.csv"));
    assert_eq!(
        rows,
        vec!["5,0.5,".to_string() + rows[0].split(',').nth(2).unwrap() + ",true,"]
    );
}

#[test]
fn failing_sensitivity_cells_are_left_empty_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let (lots, bids) = linear_fixture(dir.path());
    let r = run(&[
        "sensitivity",
        "--lots",
        p(&lots),
        "--bids",
        p(&bids),
        "--out",
        p(dir.path()),
        "--degrees",
        "4",
        "--lambdas",
        "0,1",
        "--knots",
        "20",
        "--grid",
        "12",
    ]);
    assert_eq!(r.code, 1, "{}", r.stderr);
    let rows = data_rows(&dir.path().join("sensitivity.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("4,0,,false,"), "{rows:?}");
    assert!(rows[1].ends_with(",true,"), "{rows:?}");
}
