//! Self-describing binary container for gridded fields and scattering data:
//! one JSON header line followed by complex values as interleaved
//! little-endian `f64` pairs.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::forward::{FarFieldData, NearFieldData};
use crate::grid::Grid3;
use crate::medium::RefractiveIndex;
use crate::quadrature::SphereQuadrature;

pub const FORMAT: &str = "scatterlab-container";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    #[serde(rename = "L")]
    pub half_extent: f64,
    #[serde(rename = "Nx")]
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub field: String,
    pub layout: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub grid: Option<GridMeta>,
    pub meta: Map<String, Value>,
    pub config_digest: String,
}

impl Header {
    pub fn new(field: &str, shape: Vec<usize>, grid: Option<Grid3>, config_digest: &str) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            field: field.into(),
            layout: "re,im interleaved".into(),
            dtype: "f64le".into(),
            shape,
            grid: grid.map(|g| GridMeta {
                half_extent: g.half_extent(),
                points_per_axis: g.points_per_axis(),
            }),
            meta: Map::new(),
            config_digest: config_digest.into(),
        }
    }

    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    fn meta_f64(&self, key: &str) -> Result<f64> {
        self.meta
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Format(format!("header lacks numeric `{key}`")))
    }

    fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta
            .get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Format(format!("header lacks integer `{key}`")))
    }

    fn grid3(&self) -> Result<Grid3> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Format("header lacks grid metadata".into()))?;
        Grid3::new(g.half_extent, g.points_per_axis)
    }
}

pub fn write_container(mut w: impl Write, header: &Header, values: &[Complex64]) -> Result<()> {
    if values.len() != header.len() {
        return Err(Error::Format(format!(
            "{} values for shape {:?}",
            values.len(),
            header.shape
        )));
    }
    let line = serde_json::to_string(header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(values.len() * 16);
    for z in values {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_container(mut r: impl BufRead) -> Result<(Header, Vec<Complex64>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported container {} v{}",
            header.format, header.version
        )));
    }
    if header.dtype != "f64le" || header.layout != "re,im interleaved" {
        return Err(Error::Format("unsupported payload layout".into()));
    }
    let n = header.len();
    let mut bytes = Vec::with_capacity(n * 16);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 16 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            n * 16
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    let values = bytes
        .chunks_exact(16)
        .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
        .collect();
    Ok((header, values))
}

pub fn index_to_container(n: &RefractiveIndex, config_digest: &str) -> (Header, Vec<Complex64>) {
    let k = n.grid.points_per_axis();
    let mut h = Header::new("refractive_index", vec![k, k, k], Some(n.grid), config_digest);
    h.meta.insert("r1".into(), json!(n.support_radius));
    h.meta.insert("m".into(), json!(n.smoothness));
    h.meta.insert("norm_budget".into(), json!(n.norm_budget));
    (h, n.samples.clone())
}

pub fn index_from_container(h: &Header, values: Vec<Complex64>) -> Result<RefractiveIndex> {
    if h.field != "refractive_index" {
        return Err(Error::Format(format!("expected a refractive index, found `{}`", h.field)));
    }
    let grid = h.grid3()?;
    if values.len() != grid.len() {
        return Err(Error::Format("payload does not match the grid".into()));
    }
    RefractiveIndex::from_samples(grid, values, h.meta_f64("r1")?, h.meta_usize("m")? as u32)
}

fn quad_meta(h: &mut Header, q: &SphereQuadrature) {
    h.meta.insert("r".into(), json!(q.radius));
    h.meta.insert("n_theta".into(), json!(q.n_theta));
    h.meta.insert("n_phi".into(), json!(q.n_phi));
    h.meta.insert("quadrature".into(), json!(q.descriptor()));
}

pub fn near_to_container(d: &NearFieldData, config_digest: &str) -> (Header, Vec<Complex64>) {
    let n = d.size();
    let mut h = Header::new("near_field", vec![n, n], None, config_digest);
    h.meta.insert("kind".into(), json!("near"));
    h.meta.insert("omega".into(), json!(d.omega));
    quad_meta(&mut h, &d.quad);
    (h, d.values.clone())
}

pub fn near_from_container(h: &Header, values: Vec<Complex64>) -> Result<NearFieldData> {
    if h.meta.get("kind").and_then(Value::as_str) != Some("near") {
        return Err(Error::Format("not near-field data".into()));
    }
    let quad = SphereQuadrature::new(h.meta_f64("r")?, h.meta_usize("n_theta")?, h.meta_usize("n_phi")?)?;
    if values.len() != quad.len() * quad.len() {
        return Err(Error::Format("payload does not match the quadrature".into()));
    }
    Ok(NearFieldData {
        quad,
        omega: h.meta_f64("omega")?,
        values,
        max_iterations: 0,
        max_residual: 0.0,
    })
}

/// Far-field data computed on the product of a direction rule with itself.
pub fn far_to_container(d: &FarFieldData, dirs: &SphereQuadrature, config_digest: &str) -> (Header, Vec<Complex64>) {
    let n = dirs.len();
    let mut h = Header::new("far_field", vec![n, n], None, config_digest);
    h.meta.insert("kind".into(), json!("far"));
    h.meta.insert("omega".into(), json!(d.omega));
    h.meta.insert("measure".into(), json!("product surface measure on |k| = |l| = omega"));
    quad_meta(&mut h, dirs);
    (h, d.values.clone())
}

pub fn far_from_container(h: &Header, values: Vec<Complex64>) -> Result<FarFieldData> {
    if h.meta.get("kind").and_then(Value::as_str) != Some("far") {
        return Err(Error::Format("not far-field data".into()));
    }
    let dirs = SphereQuadrature::unit(h.meta_usize("n_theta")?, h.meta_usize("n_phi")?)?;
    let omega = h.meta_f64("omega")?;
    if values.len() != dirs.len() * dirs.len() {
        return Err(Error::Format("payload does not match the quadrature".into()));
    }
    let e = omega * omega;
    let mut pairs = Vec::with_capacity(values.len());
    let mut weights = Vec::with_capacity(values.len());
    for (k, wk) in dirs.nodes.iter().zip(&dirs.weights) {
        for (l, wl) in dirs.nodes.iter().zip(&dirs.weights) {
            pairs.push((*k, *l));
            weights.push(e * wk * e * wl);
        }
    }
    Ok(FarFieldData {
        omega,
        pairs,
        values,
        weights,
    })
}
