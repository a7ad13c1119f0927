//! Versioned flat-file model checkpoint.
//!
//! Layout: magic `GMCK`, format version, every hyperparameter, then the
//! eight parameter tensors as `rows, cols` followed by row-major
//! little-endian f64 values (biases are n x 1). Write and read round-trip
//! bit-exactly.

use std::fs;
use std::path::Path;

use graphmal_core::model::{GraphModel, Hyperparams, Matrix, ModelParams};

use crate::error::CliError;

const MAGIC: &[u8; 4] = b"GMCK";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, rows: usize, cols: usize, data: &[f64]) {
    put_u64(out, rows as u64);
    put_u64(out, cols as u64);
    for v in data {
        put_f64(out, *v);
    }
}

/// Serializes hyperparameters and parameters to checkpoint bytes.
pub fn encode(params: &ModelParams, hp: &Hyperparams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    out.push(match hp.gm {
        GraphModel::MeanField => 0,
    });
    put_u64(&mut out, hp.batch_size as u64);
    put_u64(&mut out, hp.seed);
    put_u64(&mut out, hp.feat_dim as u64);
    put_u64(&mut out, hp.num_class as u64);
    put_u64(&mut out, hp.num_epochs as u64);
    put_u64(&mut out, hp.latent_dim as u64);
    put_u64(&mut out, hp.out_dim as u64);
    put_u64(&mut out, hp.hidden as u64);
    put_u64(&mut out, hp.max_lv as u64);
    put_f64(&mut out, hp.learning_rate);
    put_f64(&mut out, hp.train_fraction);

    put_tensor(
        &mut out,
        params.w_node.rows,
        params.w_node.cols,
        &params.w_node.data,
    );
    put_tensor(
        &mut out,
        params.w_msg.rows,
        params.w_msg.cols,
        &params.w_msg.data,
    );
    put_tensor(
        &mut out,
        params.w_out.rows,
        params.w_out.cols,
        &params.w_out.data,
    );
    put_tensor(&mut out, params.b_out.len(), 1, &params.b_out);
    put_tensor(&mut out, params.w_h.rows, params.w_h.cols, &params.w_h.data);
    put_tensor(&mut out, params.b_h.len(), 1, &params.b_h);
    put_tensor(&mut out, params.w_c.rows, params.w_c.cols, &params.w_c.data);
    put_tensor(&mut out, params.b_c.len(), 1, &params.b_c);
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).ok_or("length overflow")?;
        let slice = self
            .data
            .get(self.pos..end)
            .ok_or("unexpected end of file")?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize, String> {
        usize::try_from(self.u64()?).map_err(|_| "value out of range".to_string())
    }

    fn tensor(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix, String> {
        let r = self.usize()?;
        let c = self.usize()?;
        if r != rows || c != cols {
            return Err(format!(
                "{what}: stored {r}x{c}, header implies {rows}x{cols}"
            ));
        }
        let n = r.checked_mul(c).ok_or("tensor size overflow")?;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(self.f64()?);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }
}

/// Parses checkpoint bytes back into parameters and hyperparameters.
pub fn decode(bytes: &[u8]) -> Result<(ModelParams, Hyperparams), String> {
    let mut c = Cursor {
        data: bytes,
        pos: 0,
    };
    if c.take(4)? != MAGIC {
        return Err("not a model checkpoint (bad magic)".into());
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let gm = match c.take(1)?[0] {
        0 => GraphModel::MeanField,
        other => return Err(format!("unknown graph model {other}")),
    };
    let hp = Hyperparams {
        gm,
        batch_size: c.usize()?,
        seed: c.u64()?,
        feat_dim: c.usize()?,
        num_class: c.usize()?,
        num_epochs: c.usize()?,
        latent_dim: c.usize()?,
        out_dim: c.usize()?,
        hidden: c.usize()?,
        max_lv: c.usize()?,
        learning_rate: c.f64()?,
        train_fraction: c.f64()?,
    };

    let w_node = c.tensor(hp.latent_dim, hp.feat_dim, "w_node")?;
    let w_msg = c.tensor(hp.latent_dim, hp.latent_dim, "w_msg")?;
    let w_out = c.tensor(hp.out_dim, hp.latent_dim, "w_out")?;
    let b_out = c.tensor(hp.out_dim, 1, "b_out")?.data;
    let w_h = c.tensor(hp.hidden, hp.out_dim, "w_h")?;
    let b_h = c.tensor(hp.hidden, 1, "b_h")?.data;
    let w_c = c.tensor(hp.num_class, hp.hidden, "w_c")?;
    let b_c = c.tensor(hp.num_class, 1, "b_c")?.data;
    if c.pos != bytes.len() {
        return Err("trailing bytes after last tensor".into());
    }

    Ok((
        ModelParams {
            w_node,
            w_msg,
            w_out,
            b_out,
            w_h,
            b_h,
            w_c,
            b_c,
        },
        hp,
    ))
}

pub fn save(params: &ModelParams, hp: &Hyperparams, path: &Path) -> Result<(), CliError> {
    fs::write(path, encode(params, hp)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<(ModelParams, Hyperparams), CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes).map_err(|message| CliError::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}
