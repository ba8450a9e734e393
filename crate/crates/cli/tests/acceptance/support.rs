use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use scatterlab::gmres::SolverConfig;
use scatterlab::inversion::SweepConfig;
use scatterlab::medium::{make_phantom, potential_of, Bump, Potential, RefractiveIndex};
use scatterlab::Grid3;

pub const OMEGA: f64 = 2.0;

/// Outcome of one check: pass flag and a one-line measurement summary.
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

pub struct Check {
    pub label: String,
    pub name: &'static str,
    pub budget: Option<Duration>,
    pub run: Box<dyn Fn() -> Verdict>,
}

impl Check {
    pub fn new(label: impl Into<String>, name: &'static str, budget_s: Option<u64>, run: impl Fn() -> Verdict + 'static) -> Self {
        Self {
            label: label.into(),
            name,
            budget: budget_s.map(Duration::from_secs),
            run: Box::new(run),
        }
    }
}

/// Runs every check, printing one line each; returns the number of failures.
pub fn run_all(checks: Vec<Check>) -> usize {
    let mut failed = 0;
    for c in checks {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(|| (c.run)())).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Verdict::new(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = c.budget.map_or(true, |b| elapsed <= b);
        let passed = verdict.passed && in_time;
        if !passed {
            failed += 1;
        }
        let budget = match c.budget {
            Some(b) if !in_time => format!(" (over the {} s budget)", b.as_secs()),
            _ => String::new(),
        };
        let line = format!(
            "{} {} {}: {} [{:.1} s]{budget}\n",
            if passed { "PASS" } else { "FAIL" },
            c.label,
            c.name,
            verdict.detail,
            elapsed.as_secs_f64()
        );
        // written straight to the stream so the line survives output capture
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(line.as_bytes());
        let _ = out.flush();
    }
    failed
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn grid(n: usize) -> Grid3 {
    Grid3::new(2.0, n).unwrap()
}

pub fn bump(center: [f64; 3], radius: f64, amp: f64) -> Bump {
    Bump::new(center, radius, c(amp))
}

pub fn index(bumps: &[Bump], g: Grid3) -> RefractiveIndex {
    make_phantom(bumps, g, 1.0, 6).unwrap()
}

pub fn potential(bumps: &[Bump], g: Grid3) -> Potential {
    potential_of(&index(bumps, g), OMEGA).unwrap()
}

pub fn standard() -> SweepConfig {
    SweepConfig::default()
}

/// Base and perturbed standard phantoms on the default grid.
pub fn standard_indices(alpha: f64) -> (RefractiveIndex, RefractiveIndex) {
    let s = standard();
    let g = s.grid().unwrap();
    let mut bumps = s.base.clone();
    bumps.extend(s.perturbation.iter().map(|b| b.scaled(alpha)));
    (
        make_phantom(&s.base, g, s.r1, s.m).unwrap(),
        make_phantom(&bumps, g, s.r1, s.m).unwrap(),
    )
}

pub fn standard_pair(alpha: f64) -> (Potential, Potential) {
    standard().potentials(alpha).unwrap()
}

pub fn solver() -> SolverConfig {
    SolverConfig::default()
}

pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    scatterlab::inversion::loglog_slope(x, y).unwrap()
}

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn binary() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_scatterlab"))
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Complex64>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            for k in col..n {
                let t = a[col * n + k];
                a[row * n + k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = vec![c(0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    x
}

pub fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn tight() -> SolverConfig {
    SolverConfig {
        tol: 1e-13,
        max_iter: 500,
        restart: 60,
    }
}

/// `(2π)^{-3} Σ h³ e^{ip·x} w(x)` by a direct loop over nodes.
pub fn direct_fourier(g: &Grid3, w: &[Complex64], p: [f64; 3]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, val) in w.iter().enumerate() {
        if *val == Complex64::new(0.0, 0.0) {
            continue;
        }
        let x = g.node_of_index(idx);
        acc += Complex64::from_polar(1.0, p[0] * x[0] + p[1] * x[1] + p[2] * x[2]) * val;
    }
    acc * g.cell_volume() / (8.0 * std::f64::consts::PI.powi(3))
}
