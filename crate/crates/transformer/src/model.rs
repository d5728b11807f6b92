use crate::config::ModelDims;
use crate::{Result, TransformerError};
use joma_dynamics::AttentionKind;
use joma_num::{Matrix, RngSeed};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Attention logits, row `q` holds `z_q` over context tokens.
    pub z: Matrix,
    /// Row `k` is the lower MLP weight `w_k`.
    pub lower: Matrix,
    /// Row `k` is added to the residual stream with weight `h_k`.
    pub upper: Matrix,
}

/// Everything that receives a gradient. Also used as the gradient type.
#[derive(Debug, Clone, PartialEq)]
pub struct Trainable {
    pub layers: Vec<Layer>,
    /// Row `c` scores class `c`.
    pub classifier: Matrix,
}

impl Trainable {
    pub fn zeros(dims: &ModelDims) -> Self {
        let layer = Layer {
            z: Matrix::zeros(dims.vocab, dims.vocab),
            lower: Matrix::zeros(dims.hidden, dims.d),
            upper: Matrix::zeros(dims.hidden, dims.d),
        };
        Self {
            layers: vec![layer; dims.layers],
            classifier: Matrix::zeros(dims.classes, dims.d),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    z: z(&l.z),
                    lower: z(&l.lower),
                    upper: z(&l.upper),
                })
                .collect(),
            classifier: z(&self.classifier),
        }
    }

    /// Tensors in a fixed order: per layer `z`, `lower`, `upper`, then the
    /// classifier.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v: Vec<&Matrix> = Vec::with_capacity(3 * self.layers.len() + 1);
        for l in &self.layers {
            v.extend([&l.z, &l.lower, &l.upper]);
        }
        v.push(&self.classifier);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v: Vec<&mut Matrix> = Vec::with_capacity(3 * self.layers.len() + 1);
        for l in &mut self.layers {
            v.extend([&mut l.z, &mut l.lower, &mut l.upper]);
        }
        v.push(&mut self.classifier);
        v
    }

    pub fn add_assign(&mut self, other: &Trainable) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|m| m.as_slice().iter())
            .fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.as_slice().iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    /// Row `l` is the context embedding `u_l`.
    pub emb_c: Matrix,
    /// Row `q` is the query embedding; orthogonal to every context row.
    pub emb_q: Matrix,
    pub train: Trainable,
}

/// `n` orthonormal rows in dimension `d`, by Gram–Schmidt on Gaussian
/// vectors (two passes).
fn orthonormal_rows<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for r in &rows {
                let p: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, a) in v.iter_mut().zip(r) {
                    *x -= p * a;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            rows.push(v);
        }
    }
    rows
}

impl ModelParams {
    /// Random initialization. `Z` starts at 0 (1 for linear attention, so
    /// that `b = x`), lower weights have standard deviation
    /// `init_scale/√d`, upper weights `1/√K` and the classifier `1/√d`.
    pub fn init(dims: ModelDims, attention: AttentionKind, init_scale: f64, seed: RngSeed) -> Result<Self> {
        dims.validate()?;
        let mut rng = seed.rng();
        let basis = orthonormal_rows(2 * dims.vocab, dims.d, &mut rng);
        let emb = |rows: &[Vec<f64>]| Matrix::from_fn(rows.len(), dims.d, |r, c| rows[r][c]);
        let emb_c = emb(&basis[..dims.vocab])?;
        let emb_q = emb(&basis[dims.vocab..])?;
        let mut gauss = |rows: usize, cols: usize, sd: f64| {
            Matrix::from_fn(rows, cols, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
        };
        let z0 = if attention == AttentionKind::Linear { 1.0 } else { 0.0 };
        let sd_d = 1.0 / (dims.d as f64).sqrt();
        let sd_k = 1.0 / (dims.hidden as f64).sqrt();
        let mut layers = Vec::with_capacity(dims.layers);
        for _ in 0..dims.layers {
            layers.push(Layer {
                z: Matrix::from_fn(dims.vocab, dims.vocab, |_, _| z0)?,
                lower: gauss(dims.hidden, dims.d, init_scale * sd_d)?,
                upper: gauss(dims.hidden, dims.d, sd_k)?,
            });
        }
        let classifier = gauss(dims.classes, dims.d, sd_d)?;
        let params = Self {
            dims,
            emb_c,
            emb_q,
            train: Trainable { layers, classifier },
        };
        params.check_embeddings()?;
        Ok(params)
    }

    /// Largest deviation of the stacked embedding Gram matrix from `I`.
    pub fn embedding_orthogonality_error(&self) -> f64 {
        let rows: Vec<&[f64]> = (0..self.dims.vocab)
            .map(|l| self.emb_c.row(l))
            .chain((0..self.dims.vocab).map(|q| self.emb_q.row(q)))
            .collect();
        let mut worst = 0.0f64;
        for i in 0..rows.len() {
            for j in i..rows.len() {
                let g: f64 = rows[i].iter().zip(rows[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - want).abs());
            }
        }
        worst
    }

    pub fn check_embeddings(&self) -> Result<()> {
        let err = self.embedding_orthogonality_error();
        if err > 1e-10 {
            return Err(TransformerError::Dimension(format!("embeddings are not orthonormal (error {err:e})")));
        }
        Ok(())
    }

    /// `v_k = U_Cᵀ w_k` for every hidden node of `layer`, as rows.
    pub fn context_projection(&self, layer: usize) -> Matrix {
        let lower = &self.train.layers[layer].lower;
        let (k, m) = (self.dims.hidden, self.dims.vocab);
        let mut out = Matrix::zeros(k, m);
        for kk in 0..k {
            let w = lower.row(kk);
            let row = out.row_mut(kk);
            for (l, slot) in row.iter_mut().enumerate() {
                *slot = self.emb_c.row(l).iter().zip(w).map(|(a, b)| a * b).sum();
            }
        }
        out
    }
}
