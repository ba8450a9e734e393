use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use scatterlab::config::{digest_text, parse_config, ExperimentConfig};
use scatterlab::container::{
    far_from_container, far_to_container, index_from_container, index_to_container, near_from_container,
    near_to_container, read_container, write_container, Header,
};
use scatterlab::faddeev::hat_v_from_h;
use scatterlab::forward::{data_discrepancy, far_field_on_sphere, free_green, near_field_matrix};
use scatterlab::grid::{norm, sub};
use scatterlab::inversion::{
    fmt_float, reconstruct_difference, schedule_from_delta, stability_sweep, ReconOptions, DELTA_FLOOR,
};
use scatterlab::medium::{fourier_hat, make_phantom, potential_of, RefractiveIndex};
use scatterlab::quadrature::SphereQuadrature;
use scatterlab::verify::run_suite;
use scatterlab::Error;

use crate::{Failure, Kind};

type CmdResult = Result<(), Failure>;

const THREADS_ENV: &str = "SCATTERLAB_THREADS";

fn setup_threads(workers: Option<usize>) {
    let from_env = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok());
    if let Some(n) = from_env.or(workers).filter(|n| *n > 0) {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("worker pool already initialised; ignoring thread count {n}");
        }
    }
}

struct Loaded {
    cfg: ExperimentConfig,
    digest: String,
    dir: PathBuf,
}

fn with_path(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Core(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_config(path: &Path, manifest: bool) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path).map_err(with_path(path))?;
    let cfg = parse_config(&text)?;
    let digest = cfg.digest();
    log::info!("config {} digest {digest}", path.display());
    if manifest {
        print!("{}", cfg.canonical());
        println!("# config_digest = {digest}");
    }
    setup_threads(cfg.workers);
    Ok(Loaded {
        cfg,
        digest,
        dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

fn with_digest(digest: &str, body: &str) -> String {
    format!("# config_digest={digest}\n{body}")
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_manifest(dir: &Path, l: &Loaded) -> CmdResult {
    let mut text = l.cfg.canonical();
    let _ = writeln!(text, "# config_digest = {}", l.digest);
    let _ = writeln!(text, "# version = {}", env!("CARGO_PKG_VERSION"));
    write_text(&dir.join("manifest.txt"), &text)
}

fn save(path: &Path, header: &Header, values: &[Complex64]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_container(&mut w, header, values)?;
    Ok(())
}

fn load(path: &Path) -> Result<(Header, Vec<Complex64>), Failure> {
    Ok(read_container(BufReader::new(File::open(path).map_err(with_path(path))?))?)
}

fn load_index(path: &Path) -> Result<RefractiveIndex, Failure> {
    let (h, v) = load(path)?;
    Ok(index_from_container(&h, v)?)
}

fn build_index(cfg: &ExperimentConfig, alpha: f64) -> Result<RefractiveIndex, Failure> {
    let s = &cfg.sweep;
    let mut bumps = s.base.clone();
    bumps.extend(s.perturbation.iter().map(|b| b.scaled(alpha)));
    Ok(make_phantom(&bumps, s.grid()?, s.r1, s.m)?)
}

/// `(n₁, n₂)` from phantom files if given, else from the bump lists.
fn phantom_pair(l: &Loaded) -> Result<(RefractiveIndex, RefractiveIndex), Failure> {
    let n1 = match &l.cfg.phantom1 {
        Some(p) => load_index(&l.dir.join(p))?,
        None => build_index(&l.cfg, 0.0)?,
    };
    let n2 = match &l.cfg.phantom2 {
        Some(p) => load_index(&l.dir.join(p))?,
        None if l.cfg.phantom1.is_some() => n1.clone(),
        None => build_index(&l.cfg, l.cfg.alpha)?,
    };
    Ok((n1, n2))
}

pub fn phantom(config: &Path, out: &Path, alpha: Option<f64>, manifest: bool) -> CmdResult {
    let l = load_config(config, manifest)?;
    let n = build_index(&l.cfg, alpha.unwrap_or(0.0))?;
    let (h, v) = index_to_container(&n, &l.digest);
    save(out, &h, &v)?;
    log::info!("wrote {} (norm budget {:e})", out.display(), n.norm_budget);
    Ok(())
}

pub struct ForwardArgs {
    pub phantom: PathBuf,
    pub kind: Kind,
    pub r: f64,
    pub quad: String,
    pub omega: f64,
    pub out: PathBuf,
    pub csv: Option<PathBuf>,
    pub against: Option<PathBuf>,
    pub selftest: bool,
}

fn parse_quad(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Core(Error::InvalidArgument(format!("quadrature `{s}` is not of the form 16x32")));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Core(Error::InvalidArgument(format!("malformed number list `{s}`"))))
        })
        .collect()
}

pub fn forward(a: ForwardArgs) -> CmdResult {
    setup_threads(None);
    let (ph, pv) = load(&a.phantom)?;
    let n = index_from_container(&ph, pv)?;
    let (nt, np) = parse_quad(&a.quad)?;
    let solver = Default::default();
    let v = potential_of(&n, a.omega)?;
    let kind = match a.kind {
        Kind::Near => "near",
        Kind::Far => "far",
    };
    let digest = digest_text(&format!(
        "{}|kind={kind}|r={:e}|quad={nt}x{np}|omega={:e}",
        ph.config_digest, a.r, a.omega
    ));
    let mut table = String::new();
    let (header, values) = match a.kind {
        Kind::Near => {
            if a.r <= n.support_radius {
                return Err(Error::InvalidArgument(format!(
                    "measurement radius r = {} must exceed r1 = {}",
                    a.r, n.support_radius
                ))
                .into());
            }
            let quad = SphereQuadrature::new(a.r, nt, np)?;
            let data = near_field_matrix(&v, &quad, &solver)?;
            log::info!("near field: max GMRES iterations {}, residual {:e}", data.max_iterations, data.max_residual);
            table.push_str("i,j,re,im\n");
            for i in 0..data.size() {
                for j in 0..data.size() {
                    let z = data.at(i, j);
                    let _ = writeln!(table, "{i},{j},{},{}", fmt_float(z.re), fmt_float(z.im));
                }
            }
            if a.selftest {
                selftest(&n, &data)?;
            }
            if let Some(other) = &a.against {
                let (oh, ov) = load(other)?;
                let reference = near_from_container(&oh, ov)?;
                write_delta(&a, kind, data_discrepancy(&reference, &data)?, &digest)?;
            }
            near_to_container(&data, &digest)
        }
        Kind::Far => {
            if a.selftest {
                return Err(Error::InvalidArgument("--selftest applies to near-field data".into()).into());
            }
            let dirs = SphereQuadrature::unit(nt, np)?;
            let data = far_field_on_sphere(&v, &dirs, &solver)?;
            table.push_str("kx,ky,kz,lx,ly,lz,re,im\n");
            for ((k, l), z) in data.pairs.iter().zip(&data.values) {
                for c in k.iter().chain(l) {
                    let _ = write!(table, "{},", fmt_float(*c));
                }
                let _ = writeln!(table, "{},{}", fmt_float(z.re), fmt_float(z.im));
            }
            if let Some(other) = &a.against {
                let (oh, ov) = load(other)?;
                let reference = far_from_container(&oh, ov)?;
                write_delta(&a, kind, data_discrepancy(&reference, &data)?, &digest)?;
            }
            far_to_container(&data, &dirs, &digest)
        }
    };
    save(&a.out, &header, &values)?;
    let csv = a.csv.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    write_text(&csv, &with_digest(&digest, &table))
}

fn write_delta(a: &ForwardArgs, kind: &str, delta: f64, digest: &str) -> CmdResult {
    let id = a.phantom.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let body = format!("phantom_id,kind,delta\n{id},{kind},{}\n", fmt_float(delta));
    let mut path = a.out.clone().into_os_string();
    path.push(".delta.csv");
    write_text(Path::new(&path), &with_digest(digest, &body))
}

/// Vacuum data must reproduce the free kernel on well-separated node pairs.
fn selftest(n: &RefractiveIndex, data: &scatterlab::forward::NearFieldData) -> CmdResult {
    if n.samples.iter().any(|z| *z != Complex64::new(1.0, 0.0)) {
        return Err(Error::InvalidArgument("--selftest needs the vacuum phantom n = 1".into()).into());
    }
    let q = &data.quad;
    let mut worst = 0.0f64;
    for i in 0..data.size() {
        for j in 0..data.size() {
            let d = norm(sub(q.nodes[i], q.nodes[j]));
            if d >= q.radius / 4.0 {
                let exact = free_green(data.omega, d);
                worst = worst.max((data.at(i, j) - exact).norm() / exact.norm());
            }
        }
    }
    println!("selftest max relative error {}", fmt_float(worst));
    if worst > 1e-6 {
        return Err(Failure::Verification(format!("selftest error {worst:e} above 1e-6")));
    }
    Ok(())
}

pub fn faddeev(config: &Path, out: &Path, ps: &[String], rho: Option<&str>, manifest: bool) -> CmdResult {
    let l = load_config(config, manifest)?;
    let (n1, _) = phantom_pair(&l)?;
    let v = potential_of(&n1, l.cfg.sweep.omega)?;
    let rhos = match rho {
        Some(s) => parse_floats(s)?,
        None => l.cfg.rhos.clone(),
    };
    let ps: Vec<[f64; 3]> = if ps.is_empty() {
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]]
    } else {
        ps.iter()
            .map(|s| {
                let v = parse_floats(s)?;
                <[f64; 3]>::try_from(v)
                    .map_err(|_| Failure::Core(Error::InvalidArgument(format!("`{s}` is not px,py,pz"))))
            })
            .collect::<Result<_, _>>()?
    };
    let mut table = String::from("px,py,pz,rho,E,re_h,im_h,re_vhat,im_vhat,residual\n");
    for p in &ps {
        let vhat = fourier_hat(&v, *p)?.value;
        for &r in &rhos {
            let s = hat_v_from_h(&v, *p, r, &l.cfg.sweep.solver)?;
            let cols = [p[0], p[1], p[2], r, s.energy, s.h.re, s.h.im, vhat.re, vhat.im, s.residual];
            let row: Vec<String> = cols.iter().map(|x| fmt_float(*x)).collect();
            let _ = writeln!(table, "{}", row.join(","));
        }
    }
    write_text(out, &with_digest(&l.digest, &table))
}

pub fn reconstruct(config: &Path, out_dir: &Path, rho: Option<f64>, kappa: Option<f64>, manifest: bool) -> CmdResult {
    let l = load_config(config, manifest)?;
    let (n1, n2) = phantom_pair(&l)?;
    let s = &l.cfg.sweep;
    let v1 = potential_of(&n1, s.omega)?;
    let v2 = potential_of(&n2, s.omega)?;
    let quad = SphereQuadrature::new(s.r, s.n_theta, s.n_phi)?;
    let delta = data_discrepancy(&near_field_matrix(&v1, &quad, &s.solver)?, &near_field_matrix(&v2, &quad, &s.solver)?)?;
    let schedule = schedule_from_delta(delta.max(DELTA_FLOOR), s.tau, s.r2, v1.energy, s.epsilon)?;
    let opts = ReconOptions {
        rho,
        kappa,
        spacing: None,
    };
    let rec = reconstruct_difference(&v1, &v2, &schedule, &opts, &s.solver)?;
    let k = v1.grid.points_per_axis();
    let mut header = Header::new("potential_difference", vec![k, k, k], Some(v1.grid), &l.digest);
    header.meta.insert("rho".into(), rec.rho.into());
    header.meta.insert("kappa".into(), rec.kappa.into());
    save(&out_dir.join("reconstruction.bin"), &header, &rec.field)?;
    let mut table = String::from("delta_near,rho,kappa,spacing,samples,dropped,err_linf,diff_linf,max_residual\n");
    let _ = writeln!(
        table,
        "{},{},{},{},{},{},{},{},{}",
        fmt_float(delta),
        fmt_float(rec.rho),
        fmt_float(rec.kappa),
        fmt_float(rec.spacing),
        rec.samples.len(),
        rec.dropped,
        fmt_float(rec.err_linf),
        fmt_float(rec.diff_linf),
        fmt_float(rec.max_residual)
    );
    write_text(&out_dir.join("reconstruction.csv"), &with_digest(&l.digest, &table))?;
    write_manifest(out_dir, &l)
}

pub fn sweep(config: &Path, out_dir: &Path, manifest: bool) -> CmdResult {
    let l = load_config(config, manifest)?;
    let outcome = stability_sweep(&l.cfg.sweep)?;
    write_text(&out_dir.join("sweep.csv"), &with_digest(&l.digest, &outcome.csv()))?;
    write_text(&out_dir.join("plot.csv"), &with_digest(&l.digest, &outcome.plot_data()))?;
    write_manifest(out_dir, &l)?;
    for (alpha, reason) in &outcome.failures {
        log::error!("rung alpha = {alpha:e} failed: {reason}");
    }
    let v = outcome.violations();
    if !v.is_empty() {
        log::warn!("envelope violated at alpha = {v:?}");
    }
    let total = outcome.records.len() + outcome.failures.len();
    if outcome.failures.len() * 5 > total {
        return Err(Failure::Solver(format!("{} of {total} rungs failed", outcome.failures.len())));
    }
    Ok(())
}

pub fn verify(config: &Path, out_dir: &Path, manifest: bool) -> CmdResult {
    let l = load_config(config, manifest)?;
    let (n1, n2) = phantom_pair(&l)?;
    let report = run_suite(&n1, &n2, &l.cfg.suite()?)?;
    let text = format!("# config_digest={}\n\n{}", l.digest, report.text());
    write_text(&out_dir.join("report.txt"), &text)?;
    write_text(&out_dir.join("regression.csv"), &with_digest(&l.digest, &report.regression_csv()))?;
    write_manifest(out_dir, &l)?;
    print!("{}", report.text());
    if !report.all_passed() {
        let failed: Vec<&str> = report.blocks.iter().filter(|b| !b.passed).map(|b| b.check.as_str()).collect();
        return Err(Failure::Verification(failed.join(", ")));
    }
    Ok(())
}
