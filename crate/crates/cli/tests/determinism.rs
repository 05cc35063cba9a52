use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

const SMALL_DETECT: &str = "\
id = small_detect
problem = wave_x
coefficient.jump_at = 0
coefficient.values = 1, 2
data.u1 = delta:-1
ladder.eps0 = 0.1
ladder.ratio = 0.7
ladder.count = 4
grid.x_min = -4.5
grid.x_max = 4.5
grid.nx = 4200
grid.t_end = 2.5
grid.snapshot_dt = 0.05
analyses = detect, associate, oracle_compare
detect.alpha_max = 2
detect.xs = -4:4:0.1
associate.psi = 1.5,0,0.5,0.8
output.dump = true
";

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            for (k, v) in files(&p) {
                out.insert(format!("{}/{k}", p.file_name().unwrap().to_string_lossy()), v);
            }
        } else {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
        }
    }
    out
}

fn run(dir: &Path, scenario: &str, threads: &str, out: &str) {
    let st = Command::new(env!("CARGO_BIN_EXE_colwave")).args(["run", scenario, "--out", out, "--threads", threads]).current_dir(dir).status().unwrap();
    assert!(st.success());
}

#[test]
fn identical_runs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("s.scn"), SMALL_DETECT).unwrap();
    run(d, "s.scn", "1", "a");
    run(d, "s.scn", "3", "b");
    let (a, b) = (files(&d.join("a/small_detect")), files(&d.join("b/small_detect")));
    for name in ["manifest.txt", "detect.csv", "rays.csv", "verdict.txt", "overlay.svg", "association.csv", "oracle.csv", "family/manifest.txt"] {
        assert!(a.contains_key(name), "{name} missing");
    }
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        assert!(v == &b[k], "{k} differs between runs");
    }
}

#[test]
fn dumps_read_back() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let text = SMALL_DETECT.replace("analyses = detect, associate, oracle_compare", "analyses =");
    let sc = colwave::validate(&text, None).unwrap();
    let report = colwave::run::run(&sc).unwrap();
    colwave::report::write_outputs(&sc, &report, d).unwrap();
    let back = colwave_core::io::read_family(&d.join("small_detect/family")).unwrap();
    assert_eq!(&back, report.family.as_ref().unwrap());
}
