//! Experiment configuration in a small key/value block language.
//!
//! ```text
//! # comments run to end of line
//! r1 = 1.0
//! omega = 2.0
//! grid { L = 2.0; Nx = 32 }
//! bump { center = [0, 0, 0]; radius = 0.5; amp_re = -0.1; amp_im = 0 }
//! perturb { center = [0.3, 0, 0]; radius = 0.4; amp_re = -0.05 }
//! alphas = [1e-4, 1e-3, 1e-2, 1e-1, 1]
//! solver { tol = 1e-8; max_iter = 500; restart = 30 }
//! phantom1 = "base.bin"
//! ```
//!
//! Statements are separated by newlines or `;`. Unknown keys are errors.

use std::fmt::Write as _;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gmres::SolverConfig;
use crate::inversion::SweepConfig;
use crate::medium::Bump;
use crate::quadrature::SphereQuadrature;
use crate::verify::SuiteConfig;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Punct(char),
    Sep,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line_no = ln + 1;
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c == ';' {
                out.push((Tok::Sep, line_no));
                i += 1;
            } else if "={}[],".contains(c) {
                out.push((Tok::Punct(c), line_no));
                i += 1;
            } else if c == '"' {
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&d| d == '"')
                    .ok_or_else(|| Error::config(line_no, "unterminated string"))?;
                out.push((Tok::Str(chars[start..start + end].iter().collect()), line_no));
                i = start + end + 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), line_no));
            } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || "+-.".contains(chars[i])) {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::config(line_no, format!("malformed number `{text}`")))?;
                out.push((Tok::Num(v), line_no));
            } else {
                return Err(Error::config(line_no, format!("unexpected character `{c}`")));
            }
        }
        out.push((Tok::Sep, line_no));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    List(Vec<f64>),
    Str(String),
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: Value,
    line: usize,
}

#[derive(Debug, Clone)]
enum Stmt {
    Assign(Entry),
    Block {
        name: String,
        entries: Vec<Entry>,
        line: usize,
    },
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.1)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn skip_seps(&mut self) {
        while self.peek() == Some(&Tok::Sep) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let line = self.line();
        match self.next() {
            Some(Tok::Punct(d)) if d == c => Ok(()),
            other => Err(Error::config(line, format!("expected `{c}`, found {}", describe(other.as_ref())))),
        }
    }

    fn value(&mut self) -> Result<Value> {
        let line = self.line();
        match self.next() {
            Some(Tok::Num(v)) => Ok(Value::Num(v)),
            Some(Tok::Str(s)) => Ok(Value::Str(s)),
            Some(Tok::Punct('[')) => {
                let mut items = Vec::new();
                loop {
                    while self.peek() == Some(&Tok::Sep) {
                        self.pos += 1;
                    }
                    let line = self.line();
                    match self.next() {
                        Some(Tok::Punct(']')) => break,
                        Some(Tok::Num(v)) => items.push(v),
                        other => {
                            return Err(Error::config(line, format!("expected a number, found {}", describe(other.as_ref()))))
                        }
                    }
                    while self.peek() == Some(&Tok::Sep) {
                        self.pos += 1;
                    }
                    match self.peek() {
                        Some(Tok::Punct(',')) => self.pos += 1,
                        Some(Tok::Punct(']')) => {}
                        other => {
                            let d = describe(other);
                            return Err(Error::config(self.line(), format!("expected `,` or `]`, found {d}")));
                        }
                    }
                }
                Ok(Value::List(items))
            }
            other => Err(Error::config(line, format!("expected a value, found {}", describe(other.as_ref())))),
        }
    }

    fn entry(&mut self, key: String, line: usize) -> Result<Entry> {
        self.expect('=')?;
        let value = self.value()?;
        Ok(Entry { key, value, line })
    }

    fn parse(&mut self) -> Result<Vec<Stmt>> {
        let mut stmts = Vec::new();
        loop {
            self.skip_seps();
            let line = self.line();
            let Some(tok) = self.next() else {
                break;
            };
            let Tok::Ident(name) = tok else {
                return Err(Error::config(line, format!("expected a key, found {}", describe(Some(&tok)))));
            };
            match self.peek() {
                Some(Tok::Punct('{')) => {
                    self.pos += 1;
                    let mut entries = Vec::new();
                    loop {
                        self.skip_seps();
                        let l = self.line();
                        match self.next() {
                            Some(Tok::Punct('}')) => break,
                            Some(Tok::Ident(k)) => entries.push(self.entry(k, l)?),
                            other => {
                                return Err(Error::config(l, format!("expected a key or `}}`, found {}", describe(other.as_ref()))))
                            }
                        }
                    }
                    stmts.push(Stmt::Block { name, entries, line });
                }
                _ => stmts.push(Stmt::Assign(self.entry(name, line)?)),
            }
            match self.peek() {
                None | Some(Tok::Sep) => {}
                other => {
                    let d = describe(other);
                    return Err(Error::config(self.line(), format!("unexpected {d} after statement")));
                }
            }
        }
        Ok(stmts)
    }
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of input".into(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Num(v)) => format!("number {v}"),
        Some(Tok::Str(s)) => format!("string \"{s}\""),
        Some(Tok::Punct(c)) => format!("`{c}`"),
        Some(Tok::Sep) => "end of statement".into(),
    }
}

/// Everything an experiment run needs. Defaults reproduce the standard bump
/// pair at `Nx = 32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: SweepConfig,
    /// Worker threads; `None` lets the runtime decide.
    pub workers: Option<usize>,
    /// Perturbation scale used by `reconstruct` and `verify`.
    pub alpha: f64,
    /// `ρ` of the single-pair checks.
    pub rho: f64,
    /// `ρ` ladder of the rate checks.
    pub rhos: Vec<f64>,
    /// `ρ` of the random solution pairs in `verify`.
    pub pair_rho: f64,
    pub n_pairs: usize,
    /// `ρ` ladder of the chain inequality.
    pub chain_rhos: Vec<f64>,
    /// Optional phantom container files overriding the bump lists.
    pub phantom1: Option<String>,
    pub phantom2: Option<String>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sweep: SweepConfig::default(),
            workers: None,
            alpha: 1.0,
            rho: 4.0,
            rhos: vec![2.0, 4.0, 8.0, 16.0],
            pair_rho: 2.0,
            n_pairs: 10,
            chain_rhos: vec![2.0, 4.0, 8.0],
            phantom1: None,
            phantom2: None,
            seed: 1,
        }
    }
}

fn num(e: &Entry) -> Result<f64> {
    match &e.value {
        Value::Num(v) if v.is_finite() => Ok(*v),
        _ => Err(Error::config(e.line, format!("`{}` expects a finite number", e.key))),
    }
}

fn count(e: &Entry) -> Result<usize> {
    let v = num(e)?;
    if v < 0.0 || v.fract() != 0.0 || v > 1e9 {
        return Err(Error::config(e.line, format!("`{}` expects a nonnegative integer", e.key)));
    }
    Ok(v as usize)
}

fn list(e: &Entry) -> Result<Vec<f64>> {
    match &e.value {
        Value::List(v) if v.iter().all(|x| x.is_finite()) => Ok(v.clone()),
        _ => Err(Error::config(e.line, format!("`{}` expects a list of numbers", e.key))),
    }
}

fn string(e: &Entry) -> Result<String> {
    match &e.value {
        Value::Str(s) => Ok(s.clone()),
        _ => Err(Error::config(e.line, format!("`{}` expects a quoted string", e.key))),
    }
}

fn bump(entries: &[Entry], line: usize) -> Result<Bump> {
    let mut center = None;
    let mut radius = None;
    let mut re = 0.0;
    let mut im = 0.0;
    for e in entries {
        match e.key.as_str() {
            "center" => {
                let c = list(e)?;
                if c.len() != 3 {
                    return Err(Error::config(e.line, "`center` needs three coordinates"));
                }
                center = Some([c[0], c[1], c[2]]);
            }
            "radius" => radius = Some(num(e)?),
            "amp_re" => re = num(e)?,
            "amp_im" => im = num(e)?,
            other => return Err(Error::config(e.line, format!("unknown bump key `{other}`"))),
        }
    }
    let center = center.ok_or_else(|| Error::config(line, "bump without `center`"))?;
    let radius = radius.ok_or_else(|| Error::config(line, "bump without `radius`"))?;
    if !(radius > 0.0) {
        return Err(Error::config(line, "bump radius must be positive"));
    }
    Ok(Bump::new(center, radius, Complex64::new(re, im)))
}

fn pair_block(entries: &[Entry], line: usize, what: &str) -> Result<(usize, usize)> {
    let mut nt = None;
    let mut np = None;
    for e in entries {
        match e.key.as_str() {
            "n_theta" => nt = Some(count(e)?),
            "n_phi" => np = Some(count(e)?),
            other => return Err(Error::config(e.line, format!("unknown {what} key `{other}`"))),
        }
    }
    match (nt, np) {
        (Some(a), Some(b)) if a > 0 && b > 0 => Ok((a, b)),
        _ => Err(Error::config(line, format!("{what} needs positive `n_theta` and `n_phi`"))),
    }
}

/// SHA-256 of a text, hex encoded.
pub fn digest_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Parses a configuration; an empty text yields a vacuum experiment
/// (no bumps, default numerics).
pub fn parse_config(src: &str) -> Result<ExperimentConfig> {
    let toks = tokenize(src)?;
    let stmts = Parser { toks, pos: 0 }.parse()?;
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.base.clear();
    cfg.sweep.perturbation.clear();
    for stmt in stmts {
        match stmt {
            Stmt::Assign(e) => match e.key.as_str() {
                "r1" => cfg.sweep.r1 = num(&e)?,
                "omega" => cfg.sweep.omega = num(&e)?,
                "m" => {
                    let m = count(&e)?;
                    if m <= 3 {
                        return Err(Error::config(e.line, "smoothness `m` must exceed 3"));
                    }
                    cfg.sweep.m = m as u32;
                }
                "alphas" => cfg.sweep.alphas = list(&e)?,
                "tau" => cfg.sweep.tau = num(&e)?,
                "r2" => cfg.sweep.r2 = num(&e)?,
                "epsilon" => cfg.sweep.epsilon = num(&e)?,
                "r" => cfg.sweep.r = num(&e)?,
                "workers" => cfg.workers = Some(count(&e)?.max(1)),
                "alpha" => cfg.alpha = num(&e)?,
                "rho" => cfg.rho = num(&e)?,
                "rhos" => cfg.rhos = list(&e)?,
                "pair_rho" => cfg.pair_rho = num(&e)?,
                "n_pairs" => cfg.n_pairs = count(&e)?,
                "chain_rhos" => cfg.chain_rhos = list(&e)?,
                "seed" => cfg.seed = count(&e)? as u64,
                "phantom1" => cfg.phantom1 = Some(string(&e)?),
                "phantom2" => cfg.phantom2 = Some(string(&e)?),
                other => return Err(Error::config(e.line, format!("unknown key `{other}`"))),
            },
            Stmt::Block { name, entries, line } => match name.as_str() {
                "bump" => cfg.sweep.base.push(bump(&entries, line)?),
                "perturb" => cfg.sweep.perturbation.push(bump(&entries, line)?),
                "grid" => {
                    for e in &entries {
                        match e.key.as_str() {
                            "L" => cfg.sweep.half_extent = num(e)?,
                            "Nx" => cfg.sweep.points_per_axis = count(e)?,
                            other => return Err(Error::config(e.line, format!("unknown grid key `{other}`"))),
                        }
                    }
                }
                "quad" => {
                    let (a, b) = pair_block(&entries, line, "quad")?;
                    cfg.sweep.n_theta = a;
                    cfg.sweep.n_phi = b;
                }
                "far_quad" => cfg.sweep.far_quad = Some(pair_block(&entries, line, "far_quad")?),
                "solver" => {
                    for e in &entries {
                        match e.key.as_str() {
                            "tol" => cfg.sweep.solver.tol = num(e)?,
                            "max_iter" => cfg.sweep.solver.max_iter = count(e)?,
                            "restart" => cfg.sweep.solver.restart = count(e)?,
                            other => return Err(Error::config(e.line, format!("unknown solver key `{other}`"))),
                        }
                    }
                }
                other => return Err(Error::config(line, format!("unknown block `{other}`"))),
            },
        }
    }
    Ok(cfg)
}

fn list_text(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    format!("[{}]", items.join(", "))
}

fn bump_text(kind: &str, b: &Bump) -> String {
    format!(
        "{kind} {{ center = {}; radius = {:e}; amp_re = {:e}; amp_im = {:e} }}",
        list_text(&b.center),
        b.radius,
        b.amplitude.re,
        b.amplitude.im
    )
}

impl ExperimentConfig {
    /// The effective configuration in canonical form; parsing it gives back
    /// an equal value.
    pub fn canonical(&self) -> String {
        let s = &self.sweep;
        let mut out = String::new();
        let _ = writeln!(out, "r1 = {:e}", s.r1);
        let _ = writeln!(out, "omega = {:e}", s.omega);
        let _ = writeln!(out, "m = {}", s.m);
        let _ = writeln!(out, "grid {{ L = {:e}; Nx = {} }}", s.half_extent, s.points_per_axis);
        for b in &s.base {
            let _ = writeln!(out, "{}", bump_text("bump", b));
        }
        for b in &s.perturbation {
            let _ = writeln!(out, "{}", bump_text("perturb", b));
        }
        let _ = writeln!(out, "alphas = {}", list_text(&s.alphas));
        let _ = writeln!(out, "tau = {:e}", s.tau);
        let _ = writeln!(out, "r2 = {:e}", s.r2);
        let _ = writeln!(out, "epsilon = {:e}", s.epsilon);
        let _ = writeln!(out, "r = {:e}", s.r);
        let _ = writeln!(out, "quad {{ n_theta = {}; n_phi = {} }}", s.n_theta, s.n_phi);
        if let Some((a, b)) = s.far_quad {
            let _ = writeln!(out, "far_quad {{ n_theta = {a}; n_phi = {b} }}");
        }
        let SolverConfig { tol, max_iter, restart } = s.solver;
        let _ = writeln!(out, "solver {{ tol = {tol:e}; max_iter = {max_iter}; restart = {restart} }}");
        if let Some(w) = self.workers {
            let _ = writeln!(out, "workers = {w}");
        }
        let _ = writeln!(out, "alpha = {:e}", self.alpha);
        let _ = writeln!(out, "rho = {:e}", self.rho);
        let _ = writeln!(out, "rhos = {}", list_text(&self.rhos));
        let _ = writeln!(out, "pair_rho = {:e}", self.pair_rho);
        let _ = writeln!(out, "n_pairs = {}", self.n_pairs);
        let _ = writeln!(out, "chain_rhos = {}", list_text(&self.chain_rhos));
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(p) = &self.phantom1 {
            let _ = writeln!(out, "phantom1 = \"{p}\"");
        }
        if let Some(p) = &self.phantom2 {
            let _ = writeln!(out, "phantom2 = \"{p}\"");
        }
        out
    }

    pub fn suite(&self) -> Result<SuiteConfig> {
        let s = &self.sweep;
        Ok(SuiteConfig {
            omega: s.omega,
            quad: SphereQuadrature::new(s.r, s.n_theta, s.n_phi)?,
            r2: s.r2,
            identity_rho: self.rho,
            pair_rho: self.pair_rho,
            n_pairs: self.n_pairs,
            chain_rhos: self.chain_rhos.clone(),
            rate_rhos: self.rhos.clone(),
            rate_ps: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
            seed: self.seed,
            solver: s.solver,
        })
    }

    /// SHA-256 of the canonical form; worker count excluded.
    pub fn digest(&self) -> String {
        let without_workers = ExperimentConfig {
            workers: None,
            ..self.clone()
        };
        digest_text(&without_workers.canonical())
    }
}
