use scatterlab::faddeev::{faddeev_kernel, theta_pair};
use scatterlab::inversion::{reconstruct_difference, schedule_from_delta, ReconOptions, SweepConfig};
use scatterlab::medium::{fourier_hat, sobolev_norm};
use scatterlab::verify::check_delta_v_bound;

use crate::support::*;

pub fn checks() -> Vec<Check> {
    vec![
        Check::new("invariant", "Faddeev kernel decay in rho", None, g_decay),
        Check::new("invariant", "delta_v slope and amplitude doubling", None, delta_v),
        Check::new("invariant", "reconstruction at rho = 8", None, large_rho_reconstruction),
        Check::new("invariant", "grid doubling of sobolev_norm and fourier_hat", None, grid_doubling),
    ]
}

fn g_decay() -> Verdict {
    let g = grid(32);
    let energy = OMEGA * OMEGA;
    let reach = (1.0 / g.spacing()).floor() as i64;
    let rhos = [2.0, 4.0, 8.0, 16.0];
    let sups: Vec<f64> = rhos
        .iter()
        .map(|&rho| {
            let t = theta_pair([1.0, 0.0, 0.0], energy, rho, 0.0).unwrap();
            let kernel = faddeev_kernel(g, t.k.im, energy).unwrap();
            let mut sup = 0.0f64;
            for a in -reach..=reach {
                for b in -reach..=reach {
                    for c in -reach..=reach {
                        if a * a + b * b + c * c <= reach * reach {
                            sup = sup.max(kernel.g(t.k.re, [a, b, c]).norm());
                        }
                    }
                }
            }
            sup
        })
        .collect();
    let s = slope(&rhos, &sups);
    Verdict::new(
        (s + 1.0).abs() <= 0.3,
        format!("slope {s:.3} (target -1 +- 0.3), sup|g| on B1 = {}", fmt_list(&sups)),
    )
}

fn delta_v() -> Verdict {
    let rhos = [2.0, 4.0, 8.0, 16.0];
    let report = |alpha: f64| {
        let (v1, v2) = standard_pair(alpha);
        check_delta_v_bound(&v1, &v2, [1.0, 0.0, 0.0], &rhos, &tight()).unwrap()
    };
    let (one, two) = (report(1.0), report(2.0));
    let slope = one.slope.unwrap_or(f64::NAN);
    let gain = two.prefactor / one.prefactor;
    Verdict::new(
        (-1.25..=-0.75).contains(&slope) && (1.6..=2.4).contains(&gain),
        format!("slope {slope:.3} (target [-1.25, -0.75]), prefactor gain {gain:.3} (target 2 +- 20%)"),
    )
}

fn large_rho_reconstruction() -> Verdict {
    let cfg = SweepConfig {
        half_extent: 1.25,
        points_per_axis: 16,
        ..SweepConfig::default()
    };
    let (v1, v2) = cfg.potentials(1.0).unwrap();
    let schedule = schedule_from_delta(1e-3, cfg.tau, cfg.r2, v1.energy, cfg.epsilon).unwrap();
    let opts = ReconOptions {
        rho: Some(8.0),
        kappa: Some(12.0),
        spacing: None,
    };
    let rec = reconstruct_difference(&v1, &v2, &schedule, &opts, &tight()).unwrap();
    let rel = rec.err_linf / rec.diff_linf;
    Verdict::new(rel <= 0.1, format!("error {rel:.3e} of |v2 - v1| (tol 1e-1), kappa 12, Nx 16"))
}

fn grid_doubling() -> Verdict {
    let cfg = |n: usize| SweepConfig {
        points_per_axis: n,
        ..SweepConfig::default()
    };
    let (coarse, _) = cfg(32).potentials(0.0).unwrap();
    let (fine, _) = cfg(64).potentials(0.0).unwrap();
    let sc = sobolev_norm(&coarse.grid, &coarse.samples, 6);
    let sf = sobolev_norm(&fine.grid, &fine.samples, 6);
    let sobolev_change = (sf.value - sc.value).abs() / sf.value;
    let mut fourier_change = 0.0f64;
    for p in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 1.0, 0.5], [4.0, 0.0, 3.0]] {
        let a = fourier_hat(&coarse, p).unwrap().value;
        let b = fourier_hat(&fine, p).unwrap().value;
        fourier_change = fourier_change.max((a - b).norm() / b.norm());
    }
    Verdict::new(
        sobolev_change < 0.01 && fourier_change < 0.01,
        format!(
            "sobolev_norm m=6 change {sobolev_change:.3e} (resolved {}), fourier_hat change {fourier_change:.3e} (tol 1e-2)",
            sc.resolved && sf.resolved
        ),
    )
}
