//! Binary matrix container: the magic bytes, a little-endian `u64`
//! matrix count, then per matrix `u64` rows, `u64` cols and row-major
//! little-endian `f64` entries.

use crate::config::ModelDims;
use crate::model::{Layer, ModelParams, Trainable};
use crate::{Result, TransformerError};
use joma_num::Matrix;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 8] = b"JOMAMAT1";

pub fn write_matrices<W: Write>(mut w: W, mats: &[&Matrix]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(mats.len() as u64).to_le_bytes())?;
    for m in mats {
        w.write_all(&(m.rows() as u64).to_le_bytes())?;
        w.write_all(&(m.cols() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * m.as_slice().len());
        for x in m.as_slice() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_matrices<R: Read>(mut r: R) -> Result<Vec<Matrix>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TransformerError::Checkpoint("bad magic bytes".into()));
    }
    let n = read_u64(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..n {
        let (rows, cols) = (read_u64(&mut r)? as usize, read_u64(&mut r)? as usize);
        let len = rows
            .checked_mul(cols)
            .filter(|l| *l <= 1 << 28)
            .ok_or_else(|| TransformerError::Checkpoint(format!("implausible shape {rows}×{cols}")))?;
        let mut buf = vec![0u8; 8 * len];
        r.read_exact(&mut buf)?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        out.push(Matrix::new(rows, cols, data)?);
    }
    Ok(out)
}

/// Embeddings, then per layer `z`, `lower`, `upper`, then the classifier.
pub fn write_params<W: Write>(w: W, p: &ModelParams) -> Result<()> {
    let mut mats = vec![&p.emb_c, &p.emb_q];
    mats.extend(p.train.tensors());
    write_matrices(w, &mats)
}

pub fn read_params<R: Read>(r: R) -> Result<ModelParams> {
    let mats = read_matrices(r)?;
    if mats.len() < 6 || (mats.len() - 3) % 3 != 0 {
        return Err(TransformerError::Checkpoint(format!("{} matrices do not form a model", mats.len())));
    }
    let mut it = mats.into_iter();
    let emb_c = it.next().expect("checked");
    let emb_q = it.next().expect("checked");
    let rest: Vec<Matrix> = it.collect();
    let (layer_mats, classifier) = rest.split_at(rest.len() - 1);
    let layers: Vec<Layer> = layer_mats
        .chunks_exact(3)
        .map(|c| Layer {
            z: c[0].clone(),
            lower: c[1].clone(),
            upper: c[2].clone(),
        })
        .collect();
    let dims = ModelDims {
        vocab: emb_c.rows(),
        d: emb_c.cols(),
        hidden: layers[0].lower.rows(),
        classes: classifier[0].rows(),
        layers: layers.len(),
    };
    let shapes_ok = emb_q.rows() == dims.vocab
        && emb_q.cols() == dims.d
        && classifier[0].cols() == dims.d
        && layers.iter().all(|l| {
            (l.z.rows(), l.z.cols()) == (dims.vocab, dims.vocab)
                && (l.lower.rows(), l.lower.cols()) == (dims.hidden, dims.d)
                && (l.upper.rows(), l.upper.cols()) == (dims.hidden, dims.d)
        });
    if !shapes_ok {
        return Err(TransformerError::Checkpoint("inconsistent tensor shapes".into()));
    }
    let p = ModelParams {
        dims,
        emb_c,
        emb_q,
        train: Trainable {
            layers,
            classifier: classifier[0].clone(),
        },
    };
    p.check_embeddings()?;
    Ok(p)
}
