//! Contrastive and distillation loss kernels with analytic gradients, and the
//! pairwise-distance correlation used to compare two embedding spaces.
//!
//! Matrices are dense and row-major. Kernels never normalize their inputs;
//! with [`LossParams::check_normalized`] set they reject rows whose norm is
//! off by more than [`NORM_TOLERANCE`].

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Allowed deviation of a normalized row's L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("row {0} is not unit-normalized")]
    NotNormalized(usize),
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("all distances are equal in one of the spaces")]
    DegenerateVariance,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("matrix file: {0}")]
    Format(String),
}

fn mismatch(what: impl Into<String>) -> LossError {
    LossError::ShapeMismatch(what.into())
}

/// An `rows x dim` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<EmbeddingMatrix, LossError> {
        if rows == 0 || dim == 0 {
            return Err(mismatch("matrix must have at least one row and one column"));
        }
        if values.len() != rows * dim {
            return Err(mismatch(format!("{} values for a {rows}x{dim} matrix", values.len())));
        }
        let mut m = EmbeddingMatrix {
            rows,
            dim,
            values,
            normalized: false,
        };
        m.normalized = m.first_unnormalized_row().is_none();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<EmbeddingMatrix, LossError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(mismatch("ragged rows"));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    /// Uniform random entries in [-1, 1), seeded.
    pub fn random(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self::new(rows, dim, values).expect("non-empty shape")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.normalized = false;
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// True when every row had unit norm at construction or normalization.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    fn first_unnormalized_row(&self) -> Option<usize> {
        (0..self.rows).find(|&i| (norm(self.row(i)) - 1.0).abs() > NORM_TOLERANCE)
    }

    /// Copy with every row scaled to unit L2 norm.
    pub fn normalize(&self) -> Result<EmbeddingMatrix, LossError> {
        let mut values = self.values.clone();
        for (i, row) in values.chunks_mut(self.dim).enumerate() {
            let n = norm(row);
            if n == 0.0 {
                return Err(LossError::ZeroRow(i));
            }
            row.iter_mut().for_each(|x| *x /= n);
        }
        Ok(EmbeddingMatrix {
            rows: self.rows,
            dim: self.dim,
            values,
            normalized: true,
        })
    }

    /// Reads a whitespace/comma/tab separated matrix whose first line holds
    /// `N d`.
    pub fn read_text<R: BufRead>(input: R) -> Result<EmbeddingMatrix, LossError> {
        let mut lines = input
            .lines()
            .map(|l| l.map_err(|e| LossError::Format(e.to_string())))
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header = lines.next().ok_or_else(|| LossError::Format("missing header".into()))??;
        let dims = parse_numbers::<usize>(&header)?;
        let [rows, dim] = dims[..] else {
            return Err(LossError::Format(format!("header {header:?} is not `N d`")));
        };
        let mut values = Vec::with_capacity(rows * dim);
        for line in lines.by_ref().take(rows) {
            let row = parse_numbers::<f64>(&line?)?;
            if row.len() != dim {
                return Err(LossError::Format(format!("row of length {} in a {dim}-column matrix", row.len())));
            }
            values.extend(row);
        }
        if values.len() != rows * dim {
            return Err(LossError::Format("fewer rows than the header declares".into()));
        }
        Self::new(rows, dim, values)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.rows, self.dim)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn parse_numbers<T: std::str::FromStr>(line: &str) -> Result<Vec<T>, LossError> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| LossError::Format(format!("bad number {t:?}"))))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable `log(1 + exp(x))`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossParams {
    /// Temperature of the NT-Xent logits.
    pub tau: f64,
    /// SigLIP logit bias.
    pub bias: f64,
    /// SigLIP logit scale.
    pub scale: f64,
    /// Weight of the projection-matching term of the hybrid loss.
    pub alpha: f64,
    /// Weight of the regression term of the hybrid loss.
    pub beta: f64,
    /// Include the positive pair in the NT-Xent denominator (the usual
    /// formulation). Off by default: the default denominator runs over
    /// negatives only.
    pub canonical_nt_xent: bool,
    /// Add the SigLIP bias without multiplying it by the pair label.
    pub unsigned_bias: bool,
    /// Reject inputs whose rows are not unit-normalized.
    pub check_normalized: bool,
}

impl Default for LossParams {
    fn default() -> Self {
        LossParams {
            tau: 0.07,
            bias: 0.0,
            scale: 1.0,
            alpha: 10.0,
            beta: 1.0,
            canonical_nt_xent: false,
            unsigned_bias: false,
            check_normalized: true,
        }
    }
}

impl LossParams {
    fn check(&self, m: &EmbeddingMatrix) -> Result<(), LossError> {
        if self.check_normalized {
            if let Some(i) = m.first_unnormalized_row() {
                return Err(LossError::NotNormalized(i));
            }
        }
        Ok(())
    }
}

fn same_shape(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<(), LossError> {
    if a.rows != b.rows || a.dim != b.dim {
        return Err(mismatch(format!("{}x{} vs {}x{}", a.rows, a.dim, b.rows, b.dim)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    /// Gradient with respect to the first input, row-major.
    pub grad_a: Vec<f64>,
    /// Gradient with respect to the second input, row-major.
    pub grad_b: Vec<f64>,
}

/// NT-Xent over positive pairs `(v1_i, v2_i)`, summed over rows:
/// `sum_i [-s_ii + log sum_{k in D_i} exp(s_ik)]` with `s_ik = v1_i . v2_k / tau`.
///
/// `D_i` excludes `i` by default, so the loss can be negative; with
/// [`LossParams::canonical_nt_xent`] it includes `i`.
pub fn nt_xent(v1: &EmbeddingMatrix, v2: &EmbeddingMatrix, params: &LossParams) -> Result<PairLoss, LossError> {
    same_shape(v1, v2)?;
    if v1.rows < 2 {
        return Err(LossError::TooFewRows { need: 2, got: v1.rows });
    }
    if !(params.tau > 0.0) {
        return Err(LossError::InvalidParameter("tau must be positive"));
    }
    params.check(v1)?;
    params.check(v2)?;
    let (n, d, tau) = (v1.rows, v1.dim, params.tau);
    let mut loss = 0.0;
    let mut grad_a = vec![0.0; n * d];
    let mut grad_b = vec![0.0; n * d];
    let mut logits = vec![0.0; n];
    for i in 0..n {
        for (k, s) in logits.iter_mut().enumerate() {
            *s = dot(v1.row(i), v2.row(k)) / tau;
        }
        let in_denominator = |k: usize| params.canonical_nt_xent || k != i;
        let max = (0..n).filter(|&k| in_denominator(k)).map(|k| logits[k]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..n).filter(|&k| in_denominator(k)).map(|k| (logits[k] - max).exp()).sum();
        loss += -logits[i] + max + z.ln();
        for k in 0..n {
            let p = if in_denominator(k) { (logits[k] - max).exp() / z } else { 0.0 };
            let dl_ds = p - if k == i { 1.0 } else { 0.0 };
            if dl_ds == 0.0 {
                continue;
            }
            let g = dl_ds / tau;
            axpy(g, v2.row(k), &mut grad_a[i * d..(i + 1) * d]);
            axpy(g, v1.row(i), &mut grad_b[k * d..(k + 1) * d]);
        }
    }
    Ok(PairLoss { loss, grad_a, grad_b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiglipLoss {
    pub loss: f64,
    pub grad_v: Vec<f64>,
    pub grad_t: Vec<f64>,
    pub grad_scale: f64,
    pub grad_bias: f64,
}

/// Pairwise sigmoid loss `-(1/N^2) sum_ij log sigmoid(l_ij s (v_i . t_j) + l_ij b)`
/// with `l_ij = +1` on the diagonal and `-1` elsewhere. With
/// [`LossParams::unsigned_bias`] the bias term is `+b` for every pair.
pub fn siglip_loss(v: &EmbeddingMatrix, t: &EmbeddingMatrix, params: &LossParams) -> Result<SiglipLoss, LossError> {
    same_shape(v, t)?;
    params.check(v)?;
    params.check(t)?;
    let (n, d) = (v.rows, v.dim);
    let (s, b) = (params.scale, params.bias);
    let inv = 1.0 / (n * n) as f64;
    let mut out = SiglipLoss {
        loss: 0.0,
        grad_v: vec![0.0; n * d],
        grad_t: vec![0.0; n * d],
        grad_scale: 0.0,
        grad_bias: 0.0,
    };
    for i in 0..n {
        for j in 0..n {
            let label = if i == j { 1.0 } else { -1.0 };
            let sim = dot(v.row(i), t.row(j));
            let bias_term = if params.unsigned_bias { b } else { label * b };
            let z = label * s * sim + bias_term;
            out.loss += softplus(-z) * inv;
            let dl_dz = -sigmoid(-z) * inv;
            let dl_dsim = dl_dz * label * s;
            axpy(dl_dsim, t.row(j), &mut out.grad_v[i * d..(i + 1) * d]);
            axpy(dl_dsim, v.row(i), &mut out.grad_t[j * d..(j + 1) * d]);
            out.grad_scale += dl_dz * label * sim;
            out.grad_bias += dl_dz * if params.unsigned_bias { 1.0 } else { label };
        }
    }
    Ok(out)
}

/// Affine map `x -> W x + c` with `W` stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub out_dim: usize,
    pub in_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearMap {
    pub fn new(out_dim: usize, in_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<LinearMap, LossError> {
        if weight.len() != out_dim * in_dim || bias.len() != out_dim {
            return Err(mismatch("linear map weight/bias sizes"));
        }
        Ok(LinearMap {
            out_dim,
            in_dim,
            weight,
            bias,
        })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> LinearMap {
        LinearMap {
            out_dim,
            in_dim,
            weight: vec![0.0; out_dim * in_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn random(out_dim: usize, in_dim: usize, seed: u64) -> LinearMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (in_dim as f64).sqrt();
        LinearMap {
            out_dim,
            in_dim,
            weight: (0..out_dim * in_dim).map(|_| rng.gen_range(-scale..scale)).collect(),
            bias: (0..out_dim).map(|_| rng.gen_range(-0.1..0.1)).collect(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|o| dot(&self.weight[o * self.in_dim..(o + 1) * self.in_dim], x) + self.bias[o])
            .collect()
    }

    pub fn apply_rows(&self, m: &EmbeddingMatrix) -> Result<EmbeddingMatrix, LossError> {
        if m.dim != self.in_dim {
            return Err(mismatch(format!("map expects {} inputs, rows have {}", self.in_dim, m.dim)));
        }
        let values = (0..m.rows).flat_map(|i| self.apply(m.row(i))).collect();
        EmbeddingMatrix::new(m.rows, self.out_dim, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridLoss {
    pub loss: f64,
    pub siglip: f64,
    pub projection: f64,
    pub regression: f64,
    pub grad_v: Vec<f64>,
    pub grad_proj: LinearMap,
    pub grad_head: LinearMap,
    pub grad_scale: f64,
    pub grad_bias: f64,
}

/// `siglip(V, normalize(proj G)) + alpha sum_i |proj g_i - v_i|^2 + beta sum_i (head v_i - y_i)^2`.
///
/// `head` maps the embedding to one output. `G` is raw; only `V` is subject
/// to the normalization check.
pub fn hybrid_loss(
    v: &EmbeddingMatrix,
    g: &EmbeddingMatrix,
    proj: &LinearMap,
    head: &LinearMap,
    y: &[f64],
    params: &LossParams,
) -> Result<HybridLoss, LossError> {
    let (n, d) = (v.rows, v.dim);
    if g.rows != n || y.len() != n {
        return Err(mismatch("V, G and y need the same number of rows"));
    }
    if proj.in_dim != g.dim || proj.out_dim != d {
        return Err(mismatch("projection must map teacher dim to embedding dim"));
    }
    if head.in_dim != d || head.out_dim != 1 {
        return Err(mismatch("head must map embedding dim to 1"));
    }
    if params.alpha < 0.0 || params.beta < 0.0 {
        return Err(LossError::InvalidParameter("alpha and beta must be non-negative"));
    }
    params.check(v)?;
    let p = proj.apply_rows(g)?;
    let p_hat = p.normalize()?;
    let sig = siglip_loss(v, &p_hat, &LossParams {
        check_normalized: false,
        ..params.clone()
    })?;

    let mut grad_v = sig.grad_v.clone();
    let mut grad_p = vec![0.0; n * d];
    // back through row normalization: dP = (dQ - q (q . dQ)) / |p|
    for i in 0..n {
        let q = p_hat.row(i);
        let dq = &sig.grad_t[i * d..(i + 1) * d];
        let pn = norm(p.row(i));
        let qdq = dot(q, dq);
        for k in 0..d {
            grad_p[i * d + k] = (dq[k] - q[k] * qdq) / pn;
        }
    }

    let mut projection = 0.0;
    for i in 0..n * d {
        let diff = p.values[i] - v.values[i];
        projection += diff * diff;
        grad_p[i] += 2.0 * params.alpha * diff;
        grad_v[i] -= 2.0 * params.alpha * diff;
    }

    let mut regression = 0.0;
    let mut grad_head = LinearMap::zeros(1, d);
    for i in 0..n {
        let r = head.apply(v.row(i))[0] - y[i];
        regression += r * r;
        let c = 2.0 * params.beta * r;
        axpy(c, &head.weight, &mut grad_v[i * d..(i + 1) * d]);
        axpy(c, v.row(i), &mut grad_head.weight);
        grad_head.bias[0] += c;
    }

    let mut grad_proj = LinearMap::zeros(d, g.dim);
    for i in 0..n {
        for o in 0..d {
            let gp = grad_p[i * d + o];
            axpy(gp, g.row(i), &mut grad_proj.weight[o * g.dim..(o + 1) * g.dim]);
            grad_proj.bias[o] += gp;
        }
    }

    Ok(HybridLoss {
        loss: sig.loss + params.alpha * projection + params.beta * regression,
        siglip: sig.loss,
        projection,
        regression,
        grad_v,
        grad_proj,
        grad_head,
        grad_scale: sig.grad_scale,
        grad_bias: sig.grad_bias,
    })
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman correlation as the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// `n_pairs` seeded random index pairs `(i, j)` with `i != j`.
pub fn sample_pairs(rows: usize, n_pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_pairs)
        .map(|_| {
            let i = rng.gen_range(0..rows);
            let mut j = rng.gen_range(0..rows - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// Spearman and Pearson correlation between Euclidean distances in two
/// embedding spaces over the given index pairs.
pub fn distance_correlation_on_pairs(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    pairs: &[(usize, usize)],
) -> Result<(f64, f64), LossError> {
    if a.rows != b.rows {
        return Err(mismatch("both spaces need the same rows"));
    }
    if pairs.len() < 2 {
        return Err(LossError::TooFewPairs(pairs.len()));
    }
    if pairs.iter().any(|&(i, j)| i >= a.rows || j >= a.rows) {
        return Err(mismatch("pair index out of range"));
    }
    let dist = |m: &EmbeddingMatrix, i: usize, j: usize| {
        m.row(i).iter().zip(m.row(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let da: Vec<f64> = pairs.iter().map(|&(i, j)| dist(a, i, j)).collect();
    let db: Vec<f64> = pairs.iter().map(|&(i, j)| dist(b, i, j)).collect();
    let rho = spearman(&da, &db).ok_or(LossError::DegenerateVariance)?;
    let r = pearson(&da, &db).ok_or(LossError::DegenerateVariance)?;
    Ok((rho, r))
}

/// [`distance_correlation_on_pairs`] over `n_pairs` seeded random pairs.
pub fn pairwise_distance_correlation(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    n_pairs: usize,
    seed: u64,
) -> Result<(f64, f64), LossError> {
    if a.rows != b.rows {
        return Err(mismatch("both spaces need the same rows"));
    }
    if a.rows < 2 {
        return Err(LossError::TooFewRows { need: 2, got: a.rows });
    }
    distance_correlation_on_pairs(a, b, &sample_pairs(a.rows, n_pairs, seed))
}
