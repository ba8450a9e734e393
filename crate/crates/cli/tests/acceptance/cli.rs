use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Output;

use num_complex::Complex64;
use scatterlab::config::parse_config;
use scatterlab::container::{index_from_container, read_container};
use scatterlab::medium::RefractiveIndex;

use crate::support::*;

pub fn checks() -> Vec<Check> {
    vec![
        Check::new("cli", "phantom container round trip", None, phantom_round_trip),
        Check::new("cli", "vacuum config gives n = 1", None, vacuum_phantom),
        Check::new("cli", "malformed config is rejected", None, malformed_config),
        Check::new("cli", "forward selftest", None, forward_selftest),
        Check::new("cli", "forward rejects r <= r1", None, forward_radius),
        Check::new("cli", "forward output is reproducible", None, forward_reproducible),
        Check::new("cli", "forward discrepancy against a reference", None, forward_against),
        Check::new("cli", "verify on identical phantoms", None, verify_identical),
        Check::new("cli", "verify on the standard pair", None, verify_standard),
        Check::new("cli", "missing phantom file", None, missing_phantom),
        Check::new("cli", "manifest prints the digest", None, manifest_digest),
    ]
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = binary();
    for a in args {
        cmd.arg(a);
    }
    cmd.output().expect("scatterlab binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn cfg(name: &str) -> PathBuf {
    configs_dir().join(name)
}

fn load_index(path: &Path) -> RefractiveIndex {
    let (h, v) = read_container(BufReader::new(File::open(path).unwrap())).unwrap();
    index_from_container(&h, v).unwrap()
}

fn make_phantom_file(dir: &Path, config: &str, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = run(&[&"phantom", &cfg(config), &"--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn starts_with_digest(path: &Path) -> bool {
    fs::read_to_string(path).map(|t| t.starts_with("# config_digest=")).unwrap_or(false)
}

fn phantom_round_trip() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let path = make_phantom_file(dir.path(), "standard.cfg", "n1.bin");
    let loaded = load_index(&path);
    let (expected, _) = standard_indices(0.0);
    let exact = loaded.samples == expected.samples && loaded.grid == expected.grid;
    Verdict::new(exact, format!("bit-exact reload {exact}"))
}

fn vacuum_phantom() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let n = load_index(&make_phantom_file(dir.path(), "vacuum.cfg", "vac.bin"));
    let ones = n.samples.iter().all(|z| *z == Complex64::new(1.0, 0.0));
    Verdict::new(ones, format!("{} nodes, all equal to 1: {ones}", n.samples.len()))
}

fn malformed_config() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "grid { L = 2.0; Nx = 32 }\nbogus_key = 3\n").unwrap();
    let o = run(&[&"phantom", &bad, &"--out", &dir.path().join("x.bin")]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    let parse_err = parse_config("grid { L = 2.0; Nx = 32 }\nbogus_key = 3\n").is_err();
    Verdict::new(
        code(&o) != 0 && !stderr.trim().is_empty() && parse_err,
        format!("exit {}, diagnostic `{}`", code(&o), stderr.lines().next().unwrap_or("")),
    )
}

fn forward_selftest() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let vac = make_phantom_file(dir.path(), "vacuum.cfg", "vac.bin");
    let o = run(&[&"forward", &vac, &"--quad", &"4x8", &"--selftest", &"-o", &dir.path().join("vac_near.bin")]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let ok = code(&o) == 0 && stdout.contains("selftest max relative error");
    let std = make_phantom_file(dir.path(), "standard.cfg", "n1.bin");
    let o2 = run(&[&"forward", &std, &"--quad", &"4x8", &"--selftest", &"-o", &dir.path().join("n1_near.bin")]);
    Verdict::new(
        ok && code(&o2) != 0,
        format!("vacuum exit {}, non-vacuum exit {}", code(&o), code(&o2)),
    )
}

fn forward_radius() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let std = make_phantom_file(dir.path(), "standard.cfg", "n1.bin");
    let o = run(&[&"forward", &std, &"--r", &"0.9", &"--quad", &"4x8", &"-o", &dir.path().join("x.bin")]);
    Verdict::new(code(&o) == 1, format!("exit {} (expected 1)", code(&o)))
}

fn forward_reproducible() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let std = make_phantom_file(dir.path(), "standard.cfg", "n1.bin");
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    let oa = run(&[&"forward", &std, &"--quad", &"4x8", &"-o", &a]);
    let ob = run(&[&"forward", &std, &"--quad", &"4x8", &"-o", &b]);
    let same = fs::read(a.with_extension("csv")).ok() == fs::read(b.with_extension("csv")).ok();
    Verdict::new(
        code(&oa) == 0 && code(&ob) == 0 && same && starts_with_digest(&a.with_extension("csv")),
        format!("byte-identical CSV {same}"),
    )
}

fn forward_against() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let n1 = make_phantom_file(d, "standard.cfg", "n1.bin");
    let n2 = d.join("n2.bin");
    let o = run(&[&"phantom", &cfg("standard.cfg"), &"--alpha", &"1", &"--out", &n2]);
    assert_eq!(code(&o), 0);
    let ref_out = d.join("near1.bin");
    assert_eq!(code(&run(&[&"forward", &n1, &"--quad", &"4x8", &"-o", &ref_out])), 0);
    let out2 = d.join("near2.bin");
    let o = run(&[&"forward", &n2, &"--quad", &"4x8", &"-o", &out2, &"--against", &ref_out]);
    let delta_path = d.join("near2.bin.delta.csv");
    let text = fs::read_to_string(&delta_path).unwrap_or_default();
    let row = text.lines().nth(2).unwrap_or("");
    let delta: f64 = row.rsplit(',').next().and_then(|s| s.parse().ok()).unwrap_or(f64::NAN);
    Verdict::new(
        code(&o) == 0 && starts_with_digest(&delta_path) && row.starts_with("n2,near,") && delta > 0.0,
        format!("delta row `{row}`"),
    )
}

fn verify_identical() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&"verify", &cfg("identical.cfg"), &"--out-dir", &dir.path()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let report = dir.path().join("report.txt");
    let ok = code(&o) == 0
        && stdout.contains("PASS")
        && !stdout.contains("FAIL")
        && starts_with_digest(&report)
        && starts_with_digest(&dir.path().join("regression.csv"));
    Verdict::new(ok, format!("exit {}", code(&o)))
}

fn verify_standard() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&"verify", &cfg("standard.cfg"), &"--out-dir", &dir.path()]);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap_or_default();
    let failing = report.contains("FAIL");
    let blocks = report.matches("inputs_digest = ").count();
    let consistent = (code(&o) == 3) == failing && (code(&o) == 0) == !failing;
    Verdict::new(
        blocks >= 4 && consistent,
        format!("{blocks} blocks, exit {}, report has FAIL {failing}", code(&o)),
    )
}

fn missing_phantom() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&"forward", &dir.path().join("nope.bin"), &"-o", &dir.path().join("x.bin")]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    Verdict::new(
        code(&o) == 1 && stderr.contains("nope.bin"),
        format!("exit {}, diagnostic `{}`", code(&o), stderr.lines().next().unwrap_or("")),
    )
}

fn manifest_digest() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&"phantom", &cfg("standard.cfg"), &"--manifest", &"--out", &dir.path().join("n.bin")]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let text = fs::read_to_string(cfg("standard.cfg")).unwrap();
    let digest = parse_config(&text).unwrap().digest();
    Verdict::new(
        code(&o) == 0 && stdout.contains(&format!("# config_digest = {digest}")),
        format!("digest {digest}"),
    )
}
