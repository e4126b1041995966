use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn meva(args: &[&str], out: &Path) -> std::process::Output {
    let o = Command::new(env!("CARGO_BIN_EXE_meva"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MEVA_SEED")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let (_, r) = meva::table::read_table(path).unwrap();
    r
}

#[test]
fn theorem_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    meva(&["run", "theorem", "--trials", "10", "--Ns", "50,100"], dir.path());
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let r = rows(&dir.path().join("theorem.csv"));
    assert_eq!(r.len(), 2);
    for row in &r {
        for cell in row {
            assert!(cell.parse::<f64>().unwrap().is_finite());
        }
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest")).unwrap();
    assert!(manifest.contains("ns = 50,100"));
    assert!(manifest.contains("# wall_time_s"));
}

#[test]
fn pathological1_reports_zero_good_weight() {
    let dir = tempfile::tempdir().unwrap();
    meva(&["run", "pathological1"], dir.path());
    let r = rows(&dir.path().join("pathological1_summary.csv"));
    let w: f64 = r.iter().find(|row| row[0] == "good_weight").unwrap()[1].parse().unwrap();
    assert!(w < 1e-6);
    let svgs = std::fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension() == Some("svg".as_ref()));
    assert_eq!(svgs.count(), 0);
}

#[test]
fn laplace_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["run", "laplace", "--n-train", "60", "--grid", "64", "--seed", "7"];
    meva(&args, a.path());
    meva(&args, b.path());
    for f in ["laplace.csv", "laplace_summary.csv", "laplace_counts.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    meva(&["run", "pathological2", "--seed", "4", "--grid", "51"], a.path());
    let manifest = a.path().join("manifest");
    let cfg = manifest.to_str().unwrap();
    meva(&["run", "pathological2", "--config", cfg], b.path());
    assert_eq!(
        std::fs::read(a.path().join("pathological2.csv")).unwrap(),
        std::fs::read(b.path().join("pathological2.csv")).unwrap()
    );
}

#[test]
fn plots_are_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    meva(&["run", "tabular", "--splits", "2", "--plots", "--set", "rows=120"], dir.path());
    let bars = std::fs::read_to_string(dir.path().join("tabular_bars.svg")).unwrap();
    roxmltree::Document::parse(&bars).unwrap();
    let r = rows(&dir.path().join("tabular.csv"));
    assert!(r.iter().any(|row| row[1] == "meva" && row[2] == "aggregate"));

    meva(&["run", "theorem", "--trials", "5", "--Ns", "40,80,160", "--plots"], dir.path());
    roxmltree::Document::parse(&std::fs::read_to_string(dir.path().join("theorem_rate.svg")).unwrap()).unwrap();

    let o = Command::new(env!("CARGO_BIN_EXE_meva"))
        .args(["plot", dir.path().join("theorem.csv").to_str().unwrap(), "--kind", "sorted"])
        .output()
        .unwrap();
    assert!(!o.status.success());
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for args in [vec!["run", "tabular", "--splits", "0"], vec!["run", "weather"], vec!["run", "theorem", "--set", "colour=red"]] {
        let o = Command::new(env!("CARGO_BIN_EXE_meva")).args(&args).arg("--out").arg(dir.path()).output().unwrap();
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("invalid config"));
    }
}
