//! Binary model file.
//!
//! Header: magic `KGCM`, version, e, n, r, depth (u32 each), activation (u8),
//! dropout, l1, w_cred, w_repair (f64). Payload: each hidden layer's weights
//! (row-major) then bias, then the credibility head, then the repair head.

use std::path::Path;

use super::{Activation, Dense, MlpModel, ModelDims, Params};
use crate::binio::{BinReader, BinWriter};
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"KGCM";

fn write_dense(w: &mut BinWriter, d: &Dense) {
    w.f64s(&d.weights);
    w.f64s(&d.bias);
}

fn read_dense(r: &mut BinReader, rows: usize, cols: usize) -> Result<Dense> {
    Ok(Dense {
        rows,
        cols,
        weights: r.f64s(rows * cols)?,
        bias: r.f64s(rows)?,
    })
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BinWriter::new(MAGIC, MODEL_VERSION);
    let d = model.dims;
    for v in [d.embedding_dim, d.num_flags, d.num_classes, model.depth()] {
        w.u32(v as u32);
    }
    w.u8(match model.activation {
        Activation::Tanh => 0,
        Activation::Relu => 1,
    });
    w.f64(model.dropout_rate);
    w.f64(model.l1_lambda);
    w.f64(model.loss_weights.0);
    w.f64(model.loss_weights.1);
    for layer in model.params.layers() {
        write_dense(&mut w, layer);
    }
    w.finish(path.as_ref())
}

/// Loads a model file. When `expected_classes` is given, a repair head of a
/// different size is a dimension error.
pub fn load_model(path: impl AsRef<Path>, expected_classes: Option<usize>) -> Result<MlpModel> {
    let mut r = BinReader::open(path.as_ref(), MAGIC, MODEL_VERSION)?;
    let e = r.u32()? as usize;
    let n = r.u32()? as usize;
    let classes = r.u32()? as usize;
    let depth = r.u32()? as usize;
    if let Some(expected) = expected_classes {
        if expected != classes {
            return Err(Error::Dimension(format!(
                "model has {classes} repair classes, catalog has {expected}"
            )));
        }
    }
    let activation = match r.u8()? {
        0 => Activation::Tanh,
        1 => Activation::Relu,
        other => return Err(r.corrupt(format!("unknown activation code {other}"))),
    };
    if activation != Activation::for_depth(depth) {
        return Err(r.corrupt(format!(
            "activation {} inconsistent with depth {depth}",
            activation.name()
        )));
    }
    let dropout_rate = r.f64()?;
    let l1_lambda = r.f64()?;
    let loss_weights = (r.f64()?, r.f64()?);
    let dims = ModelDims {
        embedding_dim: e,
        num_flags: n,
        num_classes: classes,
        depth,
    };
    let width = dims.input_dim();
    if width == 0 || classes < 2 {
        return Err(r.corrupt("degenerate dimensions"));
    }
    let hidden = (0..depth)
        .map(|_| read_dense(&mut r, width, width))
        .collect::<Result<Vec<_>>>()?;
    let cred = read_dense(&mut r, 1, width)?;
    let repair = read_dense(&mut r, classes, width)?;
    r.expect_end()?;
    Ok(MlpModel {
        params: Params { hidden, cred, repair },
        dims,
        activation,
        dropout_rate,
        l1_lambda,
        loss_weights,
    })
}
