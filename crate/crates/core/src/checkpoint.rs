//! Binary checkpoint format.
//!
//! ```text
//! "NELF"  u32 version
//! repeated: [u8; 4] tag, u64 payload length, payload
//! ```
//!
//! All integers and floats are little-endian. Sections, in write order:
//!
//! | tag    | payload |
//! |--------|---------|
//! | `EMBD` | sigma f64, L u32, seed u64, then L x 4 f32 row-major |
//! | `MCFG` | input_dim, hidden_layers, hidden_width, output_dim as u32 |
//! | `MPRM` | per layer, input to output: weight f32 (fan_in x fan_out, row-major), bias f32 |
//! | `NBOX` | (center, half_extent) f64 pairs for u, v, s, t |
//! | `PLNS` | z_uv f64, z_st f64 |
//! | `META` | iteration u64, four seeds u64, camera flag u8 (+ focal f64, width u32, height u32), config text (u32 length + UTF-8) |
//! | `ADAM` | optional: step u64, beta1 f64, beta2 f64, eps f64, first then second moments in `MPRM` layout |
//!
//! Unknown sections are skipped on read.

use std::path::Path;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::geometry::{NormalizationBox, PlanePair};
use crate::model::LightFieldNetwork;
use crate::network::{AdamState, MlpConfig, MlpParams};

pub const MAGIC: &[u8; 4] = b"NELF";
pub const FORMAT_VERSION: u32 = 1;

/// Default intrinsics for rendering, taken from the training cameras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraDefaults {
    pub focal_px: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMetadata {
    /// Completed iterations.
    pub iteration: u64,
    /// `[init, shuffle, virtual_camera, bundle]`.
    pub seeds: [u64; 4],
    pub camera: Option<CameraDefaults>,
    /// The training configuration as TOML.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: LightFieldNetwork,
    pub meta: TrainMetadata,
    pub optimizer: Option<AdamState<f32>>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn params(&mut self, p: &MlpParams<f32>) {
        for t in p.tensors() {
            for &x in t {
                self.f32(x);
            }
        }
    }
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], body: impl FnOnce(&mut Writer)) {
    let mut w = Writer { buf: Vec::new() };
    body(&mut w);
    out.extend_from_slice(tag);
    out.extend_from_slice(&(w.buf.len() as u64).to_le_bytes());
    out.extend_from_slice(&w.buf);
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{what} = {v} does not fit in u32")))
}

pub fn to_bytes(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let m = &ckpt.model;
    let cfg = m.params.config();
    let dims = [
        to_u32(cfg.input_dim, "input_dim")?,
        to_u32(cfg.hidden_layers, "hidden_layers")?,
        to_u32(cfg.hidden_width, "hidden_width")?,
        to_u32(cfg.output_dim, "output_dim")?,
    ];
    let features = to_u32(m.embedding.features(), "L")?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    section(&mut out, b"EMBD", |w| {
        w.f64(m.embedding.sigma());
        w.u32(features);
        w.u64(m.embedding.seed());
        for row in m.embedding.rows() {
            for &x in row {
                w.f32(x);
            }
        }
    });
    section(&mut out, b"MCFG", |w| dims.iter().for_each(|&d| w.u32(d)));
    section(&mut out, b"MPRM", |w| w.params(&m.params));
    section(&mut out, b"NBOX", |w| m.norm.to_array().iter().for_each(|&x| w.f64(x)));
    section(&mut out, b"PLNS", |w| {
        w.f64(m.planes.z_uv);
        w.f64(m.planes.z_st);
    });
    let meta = &ckpt.meta;
    section(&mut out, b"META", |w| {
        w.u64(meta.iteration);
        meta.seeds.iter().for_each(|&s| w.u64(s));
        match meta.camera {
            Some(c) => {
                w.u8(1);
                w.f64(c.focal_px);
                w.u32(c.width);
                w.u32(c.height);
            }
            None => w.u8(0),
        }
        w.u32(meta.config.len() as u32);
        w.buf.extend_from_slice(meta.config.as_bytes());
    });
    if let Some(adam) = &ckpt.optimizer {
        section(&mut out, b"ADAM", |w| {
            w.u64(adam.step);
            w.f64(adam.beta1);
            w.f64(adam.beta2);
            w.f64(adam.eps);
            w.params(&adam.first_moment);
            w.params(&adam.second_moment);
        });
    }
    Ok(out)
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], what: &'static str) -> Self {
        Self { data, pos: 0, what }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Checkpoint(format!("section {} is truncated", self.what)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn params(&mut self, cfg: &MlpConfig) -> Result<MlpParams<f32>> {
        let mut p = MlpParams::zeros(cfg);
        for t in p.tensors_mut() {
            for x in t.iter_mut() {
                *x = self.f32()?;
            }
        }
        Ok(p)
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Checkpoint(format!(
                "section {} has {} trailing bytes",
                self.what,
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn from_bytes(data: &[u8]) -> Result<Checkpoint> {
    if data.len() < 8 || &data[..4] != MAGIC {
        return Err(Error::Checkpoint("missing NELF magic".into()));
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let mut pos = 8;
    let mut sections: Vec<([u8; 4], &[u8])> = Vec::new();
    while pos < data.len() {
        if pos + 12 > data.len() {
            return Err(Error::Checkpoint("truncated section header".into()));
        }
        let tag: [u8; 4] = data[pos..pos + 4].try_into().unwrap();
        let len = u64::from_le_bytes(data[pos + 4..pos + 12].try_into().unwrap()) as usize;
        pos += 12;
        if pos + len > data.len() {
            return Err(Error::Checkpoint(format!(
                "section {} is truncated",
                String::from_utf8_lossy(&tag)
            )));
        }
        sections.push((tag, &data[pos..pos + len]));
        pos += len;
    }
    let find = |tag: &[u8; 4], name: &'static str| -> Result<Reader<'_>> {
        sections
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, body)| Reader::new(body, name))
            .ok_or_else(|| Error::Checkpoint(format!("missing section {name}")))
    };

    let mut r = find(b"EMBD", "EMBD")?;
    let sigma = r.f64()?;
    let features = r.u32()? as usize;
    let seed = r.u64()?;
    let mut rows = Vec::with_capacity(features);
    for _ in 0..features {
        rows.push([r.f32()?, r.f32()?, r.f32()?, r.f32()?]);
    }
    r.finish()?;
    let embedding = EmbeddingMatrix::from_rows(sigma, seed, rows)?;

    let mut r = find(b"MCFG", "MCFG")?;
    let cfg = MlpConfig {
        input_dim: r.u32()? as usize,
        hidden_layers: r.u32()? as usize,
        hidden_width: r.u32()? as usize,
        output_dim: r.u32()? as usize,
    };
    r.finish()?;
    cfg.validate()
        .map_err(|e| Error::Checkpoint(format!("bad network config: {e}")))?;

    let mut r = find(b"MPRM", "MPRM")?;
    let params = r.params(&cfg)?;
    r.finish()?;

    let mut r = find(b"NBOX", "NBOX")?;
    let mut nb = [0.0; 8];
    for x in nb.iter_mut() {
        *x = r.f64()?;
    }
    r.finish()?;
    let norm = NormalizationBox::from_array(nb);

    let mut r = find(b"PLNS", "PLNS")?;
    let planes = PlanePair::new(r.f64()?, r.f64()?)
        .map_err(|e| Error::Checkpoint(format!("bad plane pair: {e}")))?;
    r.finish()?;

    let mut r = find(b"META", "META")?;
    let iteration = r.u64()?;
    let seeds = [r.u64()?, r.u64()?, r.u64()?, r.u64()?];
    let camera = match r.u8()? {
        0 => None,
        1 => Some(CameraDefaults {
            focal_px: r.f64()?,
            width: r.u32()?,
            height: r.u32()?,
        }),
        other => return Err(Error::Checkpoint(format!("bad camera flag {other}"))),
    };
    let len = r.u32()? as usize;
    let config = String::from_utf8(r.take(len)?.to_vec())
        .map_err(|_| Error::Checkpoint("config text is not UTF-8".into()))?;
    r.finish()?;

    let optimizer = match sections.iter().find(|(t, _)| t == b"ADAM") {
        None => None,
        Some((_, body)) => {
            let mut r = Reader::new(body, "ADAM");
            let step = r.u64()?;
            let beta1 = r.f64()?;
            let beta2 = r.f64()?;
            let eps = r.f64()?;
            let first_moment = r.params(&cfg)?;
            let second_moment = r.params(&cfg)?;
            r.finish()?;
            Some(AdamState {
                first_moment,
                second_moment,
                step,
                beta1,
                beta2,
                eps,
            })
        }
    };

    let model = LightFieldNetwork::new(embedding, params, planes, norm)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(Checkpoint {
        model,
        meta: TrainMetadata {
            iteration,
            seeds,
            camera,
            config,
        },
        optimizer,
    })
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bytes = to_bytes(ckpt)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// `ckpt_{iteration:07}.nelf`
pub fn checkpoint_file_name(iteration: u64) -> String {
    format!("ckpt_{iteration:07}.nelf")
}
