use std::cell::Cell;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::rc::Rc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterlab::faddeev::{amplitude_h, hat_v_from_h, h_error, solve_cgo, solve_cgo_on, theta_pair};
use scatterlab::forward::{far_field_matrix, free_green_cell_average, near_field_matrix, solve_total_field};
use scatterlab::grid::{norm, sub};
use scatterlab::inversion::{ball_lattice, linf_in_ball, lowpass_reconstruct, measure_tail_constants, split_integrals};
use scatterlab::medium::{potential_of, FourierLattice, FourierSample, Potential};
use scatterlab::quadrature::SphereQuadrature;
use scatterlab::verify::{cgo_solution_pair, check_alessandrini, check_h_difference_identity};

use crate::support::*;

const R2: f64 = 1.8;

pub fn checks() -> Vec<Check> {
    let sweep_dir = Rc::new(tempfile::tempdir().expect("temporary directory"));
    let first_run = Rc::new(Cell::new(f64::NAN));
    let (dir12, dir13) = (sweep_dir.clone(), sweep_dir);
    let (t12, t13) = (first_run.clone(), first_run);
    vec![
        Check::new("criterion 1", "free-space exactness", Some(30), free_space),
        Check::new("criterion 2", "near-field reciprocity", Some(300), reciprocity),
        Check::new("criterion 3", "dense-oracle equivalence", Some(10), dense_oracle),
        Check::new("criterion 4", "Born consistency", Some(120), born),
        Check::new("criterion 5", "zero-potential triviality", Some(5), zero_potential),
        Check::new("criterion 6", "CGO decay", Some(300), cgo_decay),
        Check::new("criterion 7", "h to v-hat rate", Some(300), h_rate),
        Check::new("criterion 8", "exact h identity", Some(120), h_identity),
        Check::new("criterion 9", "Alessandrini structure", Some(300), alessandrini),
        Check::new("criterion 10", "tail power law", Some(60), tail_power_law),
        Check::new("criterion 11", "round-trip reconstruction", Some(60), round_trip),
        Check::new("criterion 12", "stability sweep", Some(1800), move || stability_sweep(dir12.path(), &t12)),
        Check::new("criterion 13", "determinism", None, move || determinism(dir13.path(), &t13)),
    ]
}

fn free_space() -> Verdict {
    let v = potential(&[], grid(32));
    let q = SphereQuadrature::new(1.5, 16, 32).unwrap();
    let data = near_field_matrix(&v, &q, &solver()).unwrap();
    let mut worst = 0.0f64;
    for i in 0..q.len() {
        for j in 0..q.len() {
            let d = norm(sub(q.nodes[i], q.nodes[j]));
            if d >= q.radius / 4.0 {
                let exact = -(Complex64::new(0.0, OMEGA * d)).exp() / (4.0 * PI * d);
                worst = worst.max((data.at(i, j) - exact).norm() / exact.norm());
            }
        }
    }
    Verdict::new(worst <= 1e-6, format!("max relative error {worst:.3e} (tol 1e-6)"))
}

fn reciprocity() -> Verdict {
    let (v, _) = standard_pair(0.0);
    let q = SphereQuadrature::new(1.5, 16, 32).unwrap();
    let defect = near_field_matrix(&v, &q, &solver()).unwrap().reciprocity_defect();
    Verdict::new(defect <= 1e-3, format!("|V - V^T| / |V| = {defect:.3e} (tol 1e-3)"))
}

fn dense_oracle() -> Verdict {
    let g = grid(8);
    let v = potential(&[bump([0.05, 0.0, 0.0], 0.9, -0.3)], g);
    let k = [OMEGA, 0.0, 0.0];
    let field = solve_total_field(&v, k, &tight()).unwrap();
    let n = g.len();
    let h3 = g.cell_volume();
    let nodes: Vec<[f64; 3]> = (0..n).map(|i| g.node_of_index(i)).collect();
    // ball of one cell volume, averaged analytically
    let a_rad = g.spacing() * (3.0 / (4.0 * PI)).cbrt();
    let iw = Complex64::new(0.0, OMEGA);
    let origin = -((iw * a_rad).exp() * (a_rad / iw + 1.0 / (OMEGA * OMEGA)) - 1.0 / (OMEGA * OMEGA)) / h3;
    let mut a = vec![c(0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let kern = if i == j {
                origin
            } else {
                let d = norm(sub(nodes[i], nodes[j]));
                -(iw * d).exp() / (4.0 * PI * d)
            };
            a[i * n + j] = -kern * v.samples[j] * h3;
        }
        a[i * n + i] += 1.0;
    }
    let rhs = nodes
        .iter()
        .map(|x| Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]))
        .collect();
    let dense = dense_solve(a, rhs);
    let scale = dense.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = field.values.iter().zip(&dense).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
    let origin_lib = free_green_cell_average(OMEGA, g.spacing());
    let origin_gap = (origin_lib - origin).norm() / origin.norm();
    Verdict::new(
        err <= 1e-10 && origin_gap <= 1e-12,
        format!("FFT vs dense relative error {err:.3e} (tol 1e-10)"),
    )
}

fn sphere_dir(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn born() -> Verdict {
    let v = potential(&[bump([0.0; 3], 0.5, -1e-3)], grid(32));
    let pairs: Vec<_> = (0..20)
        .map(|j| {
            let t = j as f64;
            (sphere_dir(0.3 + 0.13 * t, 0.7 * t), sphere_dir(2.6 - 0.11 * t, 1.9 + 0.5 * t))
        })
        .collect();
    let data = far_field_matrix(&v, &pairs, &solver()).unwrap();
    let born: Vec<Complex64> = pairs
        .iter()
        .map(|(k, l)| direct_fourier(&v.grid, &v.samples, [0, 1, 2].map(|a| OMEGA * (k[a] - l[a]))))
        .collect();
    let floor = 1e-3 * born.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut used = 0;
    for (f, b) in data.values.iter().zip(&born) {
        if b.norm() > floor {
            used += 1;
            worst = worst.max((f - b).norm() / b.norm());
        }
    }
    Verdict::new(
        worst <= 0.05 && used > 0,
        format!("max relative deviation {worst:.3e} over {used} pairs (tol 5e-2)"),
    )
}

fn zero_potential() -> Verdict {
    let g = grid(32);
    let v = Potential::zero(g, OMEGA, 1.0);
    let mut worst = 0.0f64;
    for (p, rho) in [([0.0, 0.0, 0.0], 2.0), ([1.0, 0.5, 0.0], 4.0), ([-2.0, 1.0, 3.0], 16.0)] {
        let t = theta_pair(p, v.energy, rho, 0.0).unwrap();
        for cgo in [
            solve_cgo(&v, &t.k, &tight()).unwrap(),
            solve_cgo_on(&v, &t.k, Some(g.ball_box(1.0)), &tight()).unwrap(),
        ] {
            let mu = cgo.extend_to_grid();
            worst = mu.iter().map(|m| (m - 1.0).norm()).fold(worst, f64::max);
            worst = worst.max(amplitude_h(&v, &cgo, &t.l).unwrap().norm());
        }
    }
    Verdict::new(worst <= 1e-14, format!("max |mu - 1|, |h| = {worst:.3e} (tol 1e-14)"))
}

fn cgo_decay() -> Verdict {
    let (v, _) = standard_pair(0.0);
    let mut ks = Vec::new();
    let mut devs = Vec::new();
    for rho in [2.0, 4.0, 8.0, 16.0] {
        let t = theta_pair([1.0, 0.0, 0.0], v.energy, rho, 0.0).unwrap();
        let cgo = solve_cgo(&v, &t.k, &tight()).unwrap();
        ks.push(t.k.modulus());
        devs.push(cgo.sup_deviation);
    }
    let s = slope(&ks, &devs);
    Verdict::new(
        (s + 1.0).abs() <= 0.25,
        format!("slope {s:.3} (target -1 +- 0.25), sup|mu - 1| = {}", fmt_list(&devs)),
    )
}

fn h_rate() -> Verdict {
    let (v, _) = standard_pair(0.0);
    let rhos = [2.0, 4.0, 8.0, 16.0];
    let scales: Vec<f64> = rhos.iter().map(|r| (v.energy + r * r).sqrt()).collect();
    let mut slopes = Vec::new();
    for p in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]] {
        let errs: Vec<f64> = rhos
            .iter()
            .map(|&rho| h_error(&v, &hat_v_from_h(&v, p, rho, &tight()).unwrap()).unwrap())
            .collect();
        slopes.push(slope(&scales, &errs));
    }
    Verdict::new(
        slopes.iter().all(|s| (s + 1.0).abs() <= 0.25),
        format!("slopes {} at p = 0, e1, (1,1,1) (target -1 +- 0.25)", fmt_list(&slopes)),
    )
}

fn h_identity() -> Verdict {
    let (v1, v2) = standard_pair(1.0);
    let pair = theta_pair([1.0, 0.0, 0.0], v1.energy, 4.0, 0.0).unwrap();
    let id = check_h_difference_identity(&v1, &v2, &pair, &tight()).unwrap();
    Verdict::new(
        id.rel_mismatch <= 1e-6 && id.lhs.norm() > 0.0,
        format!("relative mismatch {:.3e} (tol 1e-6)", id.rel_mismatch),
    )
}

fn alessandrini() -> Verdict {
    let (n1, n2) = standard_indices(1.0);
    let v1 = potential_of(&n1, OMEGA).unwrap();
    let v2 = potential_of(&n2, OMEGA).unwrap();
    let q = SphereQuadrature::new(1.5, 16, 32).unwrap();
    let d1 = near_field_matrix(&v1, &q, &solver()).unwrap();
    let d2 = near_field_matrix(&v2, &q, &solver()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ratios = Vec::new();
    let mut scale_gap = 0.0f64;
    for _ in 0..10 {
        let p = [0; 3].map(|_| rng.gen_range(-2.0..=2.0));
        let angle = rng.gen_range(0.0..2.0 * PI);
        let pair = theta_pair(p, v1.energy, 2.0, angle).unwrap();
        let (psi1, psi2) = cgo_solution_pair(&v1, &v2, &pair, R2, &tight()).unwrap();
        let s = check_alessandrini(&n1, &n2, &psi1, &psi2, &d1, &d2, R2).unwrap();
        let a = Complex64::new(rng.gen_range(0.1..10.0), rng.gen_range(-10.0..10.0));
        let b = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.1..10.0));
        let scaled = check_alessandrini(&n1, &n2, &psi1.scaled(a), &psi2.scaled(b), &d1, &d2, R2).unwrap();
        scale_gap = scale_gap.max((scaled.ratio - s.ratio).abs() / s.ratio);
        ratios.push(s.ratio);
    }
    let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    Verdict::new(
        finite && spread <= 3.0 && scale_gap <= 1e-12,
        format!("max/min ratio {spread:.3} (tol 3), scale-invariance gap {scale_gap:.1e}"),
    )
}

/// Lattice samples of the transform of `v2 - v1` inside the Nyquist ball.
fn difference_lattice(v1: &Potential, v2: &Potential) -> (Vec<FourierSample>, f64) {
    let w = v2.difference(v1).unwrap();
    let lat = FourierLattice::new(&v1.grid, &w, 64).unwrap();
    let nyquist = v1.grid.nyquist();
    (lat.samples().filter(|s| norm(s.p) <= nyquist).collect(), lat.spacing)
}

fn tail_power_law() -> Verdict {
    let (v1, v2) = standard_pair(1.0);
    let (samples, spacing) = difference_lattice(&v1, &v2);
    let kappas = [2.0, 4.0, 8.0];
    let tails: Vec<f64> = kappas.iter().map(|&k| split_integrals(&samples, spacing, k).1).collect();
    let s = slope(&kappas, &tails);
    let tc = measure_tail_constants(&v1, &v2, &samples, 6).unwrap();
    Verdict::new(
        (s + 3.0).abs() <= 0.5,
        format!("slope {s:.3} (target -3 +- 0.5), I2 = {}, c4 = {:.3e}", fmt_list(&tails), tc.c4),
    )
}

fn round_trip() -> Verdict {
    let (v, _) = standard_pair(0.0);
    let g = v.grid;
    let lat = FourierLattice::new(&g, &v.samples, 64).unwrap();
    let kappa = g.nyquist();
    let samples: Vec<FourierSample> = ball_lattice(lat.spacing, kappa)
        .into_iter()
        .map(|n| FourierSample {
            p: n.map(|c| c as f64 * lat.spacing),
            value: lat.at(n),
        })
        .collect();
    let field = lowpass_reconstruct(&samples, lat.spacing, kappa, &g).unwrap();
    let zero = vec![c(0.0); g.len()];
    let err = linf_in_ball(&g, &v.samples, &field, 1.0) / linf_in_ball(&g, &v.samples, &zero, 1.0);
    Verdict::new(err <= 0.01, format!("relative L-inf error on B1 {err:.3e} (tol 1e-2)"))
}

fn run_sweep(out: &Path) -> Result<f64, String> {
    let start = Instant::now();
    let status = binary()
        .arg("sweep")
        .arg(configs_dir().join("standard.cfg"))
        .arg("--out-dir")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("sweep exited with {status}"));
    }
    Ok(start.elapsed().as_secs_f64())
}

struct Row {
    delta: f64,
    err: f64,
    bound: f64,
    s: f64,
}

fn parse_sweep(text: &str) -> Vec<Row> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("missing column {name}"));
    let (cd, ce, cb, cs) = (col("delta_near"), col("err_linf"), col("bound"), col("s"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect();
            Row {
                delta: f[cd],
                err: f[ce],
                bound: f[cb],
                s: f[cs],
            }
        })
        .collect()
}

fn stability_sweep(dir: &Path, first_run: &Cell<f64>) -> Verdict {
    let out = dir.join("a");
    let secs = match run_sweep(&out) {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, e),
    };
    first_run.set(secs);
    let mut rows = parse_sweep(&fs::read_to_string(out.join("sweep.csv")).unwrap());
    let majorized = rows.iter().all(|r| r.err <= r.bound);
    let exponent = rows.iter().all(|r| r.s == 1.0);
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let monotone = rows.windows(2).all(|w| w[0].err <= w[1].err);
    let errs: Vec<f64> = rows.iter().map(|r| r.err).collect();
    Verdict::new(
        rows.len() == 5 && majorized && exponent && monotone,
        format!(
            "{} rungs, envelope {}, s = 1 {}, monotone {}, errors by delta {}",
            rows.len(),
            majorized,
            exponent,
            monotone,
            fmt_list(&errs)
        ),
    )
}

fn determinism(dir: &Path, first_run: &Cell<f64>) -> Verdict {
    let reference = first_run.get();
    if !reference.is_finite() {
        return Verdict::new(false, "first sweep run missing");
    }
    let out = dir.join("b");
    let secs = match run_sweep(&out) {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, e),
    };
    let same = ["sweep.csv", "plot.csv"].iter().all(|f| {
        fs::read(dir.join("a").join(f)).ok() == fs::read(out.join(f)).ok() && out.join(f).exists()
    });
    Verdict::new(
        same && secs < 2.0 * reference,
        format!("byte-identical {same}, rerun {secs:.1} s vs first {reference:.1} s"),
    )
}
