use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::PipelineError;
use crate::losses::{
    average_ranks, hybrid_loss, nt_xent, pairwise_distance_correlation, siglip_loss, spearman, EmbeddingMatrix,
    LinearMap, LossError, LossParams,
};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Allowed relative gradient error.
pub const GRAD_TOLERANCE: f64 = 1e-5;
const EXACT_TOLERANCE: f64 = 1e-12;
const SHAPES: [(usize, usize); 6] = [(2, 4), (2, 8), (4, 4), (4, 8), (8, 4), (8, 8)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    /// Largest error seen over all cases.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossCheckReport {
    pub checks: Vec<CheckResult>,
}

impl LossCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for LossCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}\t{}\tcases={}\tworst={:.3e}\ttol={:.0e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.worst,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

/// `|a - n| / max(|a|, |n|, 1)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Central differences of `f` at `x`.
pub fn central_difference(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + step;
            let up = f(&probe);
            probe[k] = x[k] - step;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn worst_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Tally {
        Tally {
            name,
            cases: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN counts as a failure
        self.worst = if err.is_nan() { f64::INFINITY } else { self.worst.max(err) };
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
            passed: self.cases > 0 && self.worst <= self.tolerance,
        }
    }
}

fn unit_rows(n: usize, d: usize, seed: u64) -> Result<EmbeddingMatrix, LossError> {
    EmbeddingMatrix::random(n, d, seed).normalize()
}

fn split(x: &[f64], n: usize, d: usize) -> (EmbeddingMatrix, EmbeddingMatrix) {
    let a = EmbeddingMatrix::new(n, d, x[..n * d].to_vec()).expect("shape");
    let b = EmbeddingMatrix::new(n, d, x[n * d..2 * n * d].to_vec()).expect("shape");
    (a, b)
}

fn unchecked(params: LossParams) -> LossParams {
    LossParams {
        check_normalized: false,
        ..params
    }
}

fn check_nt_xent(n: usize, d: usize, seed: u64, canonical: bool) -> Result<f64, LossError> {
    let params = unchecked(LossParams {
        canonical_nt_xent: canonical,
        ..LossParams::default()
    });
    let (v1, v2) = (unit_rows(n, d, seed)?, unit_rows(n, d, seed ^ 0x9e37)?);
    let out = nt_xent(&v1, &v2, &params)?;
    let x = [v1.values(), v2.values()].concat();
    let numeric = central_difference(&x, FD_STEP, |p| {
        let (a, b) = split(p, n, d);
        nt_xent(&a, &b, &params).map_or(f64::NAN, |l| l.loss)
    });
    Ok(worst_error(&[out.grad_a, out.grad_b].concat(), &numeric))
}

fn check_siglip(n: usize, d: usize, seed: u64, unsigned_bias: bool) -> Result<f64, LossError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51e);
    let base = unchecked(LossParams {
        scale: rng.gen_range(0.5..5.0),
        bias: rng.gen_range(-2.0..2.0),
        unsigned_bias,
        ..LossParams::default()
    });
    let (v, t) = (unit_rows(n, d, seed)?, unit_rows(n, d, seed ^ 0x7f4a)?);
    let out = siglip_loss(&v, &t, &base)?;
    let x = [v.values(), t.values(), &[base.scale, base.bias]].concat();
    let numeric = central_difference(&x, FD_STEP, |p| {
        let (a, b) = split(p, n, d);
        let params = LossParams {
            scale: p[2 * n * d],
            bias: p[2 * n * d + 1],
            ..base.clone()
        };
        siglip_loss(&a, &b, &params).map_or(f64::NAN, |l| l.loss)
    });
    let analytic = [out.grad_v, out.grad_t, vec![out.grad_scale, out.grad_bias]].concat();
    Ok(worst_error(&analytic, &numeric))
}

fn check_hybrid(n: usize, d: usize, seed: u64) -> Result<f64, LossError> {
    let dg = d + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4b1d);
    let base = unchecked(LossParams {
        scale: rng.gen_range(0.5..5.0),
        bias: rng.gen_range(-2.0..2.0),
        ..LossParams::default()
    });
    let v = unit_rows(n, d, seed)?;
    let g = EmbeddingMatrix::random(n, dg, seed ^ 0x66);
    let proj = LinearMap::random(d, dg, seed ^ 0x77);
    let head = LinearMap::random(1, d, seed ^ 0x88);
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let out = hybrid_loss(&v, &g, &proj, &head, &y, &base)?;

    let (nv, nw, nh) = (n * d, d * dg, d);
    let x = [
        v.values(),
        &proj.weight,
        &proj.bias,
        &head.weight,
        &head.bias,
        &[base.scale, base.bias],
    ]
    .concat();
    let numeric = central_difference(&x, FD_STEP, |p| {
        let mut at = 0;
        let mut take = |k: usize| {
            let s = p[at..at + k].to_vec();
            at += k;
            s
        };
        let v = EmbeddingMatrix::new(n, d, take(nv)).expect("shape");
        let proj = LinearMap::new(d, dg, take(nw), take(d)).expect("shape");
        let head = LinearMap::new(1, d, take(nh), take(1)).expect("shape");
        let sb = take(2);
        let params = LossParams {
            scale: sb[0],
            bias: sb[1],
            ..base.clone()
        };
        hybrid_loss(&v, &g, &proj, &head, &y, &params).map_or(f64::NAN, |l| l.loss)
    });
    let analytic = [
        out.grad_v,
        out.grad_proj.weight,
        out.grad_proj.bias,
        out.grad_head.weight,
        out.grad_head.bias,
        vec![out.grad_scale, out.grad_bias],
    ]
    .concat();
    Ok(worst_error(&analytic, &numeric))
}

/// With `proj(G) = V` and `head(v_i) = y_i` the two regression terms vanish.
fn check_hybrid_identity(n: usize, d: usize, seed: u64) -> Result<f64, LossError> {
    let v = unit_rows(n, d, seed)?;
    let mut eye = LinearMap::zeros(d, d);
    for k in 0..d {
        eye.weight[k * d + k] = 1.0;
    }
    let head = LinearMap::random(1, d, seed ^ 0x99);
    let y: Vec<f64> = (0..n).map(|i| head.apply(v.row(i))[0]).collect();
    let params = LossParams::default();
    let hybrid = hybrid_loss(&v, &v, &eye, &head, &y, &params)?;
    let sig = siglip_loss(&v, &v, &params)?;
    Ok((hybrid.loss - sig.loss).abs())
}

fn permute_rows(m: &EmbeddingMatrix, perm: &[usize]) -> EmbeddingMatrix {
    let d = m.dim();
    let values = perm.iter().flat_map(|&i| m.row(i).to_vec()).collect();
    EmbeddingMatrix::new(m.rows(), d, values).expect("shape")
}

/// Permuting rows permutes the gradient rows and leaves the loss unchanged.
fn check_permutation(n: usize, d: usize, seed: u64) -> Result<f64, LossError> {
    let params = LossParams::default();
    let (a, b) = (unit_rows(n, d, seed)?, unit_rows(n, d, seed ^ 0x3c)?);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (pa, pb) = (permute_rows(&a, &perm), permute_rows(&b, &perm));
    let rows_of = |g: &[f64]| -> Vec<f64> { perm.iter().flat_map(|&i| g[i * d..(i + 1) * d].to_vec()).collect() };

    let mut worst = 0.0f64;
    let x = nt_xent(&a, &b, &params)?;
    let px = nt_xent(&pa, &pb, &params)?;
    worst = worst.max(relative_error(x.loss, px.loss));
    worst = worst.max(worst_error(&rows_of(&x.grad_a), &px.grad_a));
    let s = siglip_loss(&a, &b, &params)?;
    let ps = siglip_loss(&pa, &pb, &params)?;
    worst = worst.max(relative_error(s.loss, ps.loss));
    worst = worst.max(worst_error(&rows_of(&s.grad_t), &ps.grad_t));
    Ok(worst)
}

/// Random orthogonal matrix by Gram-Schmidt on uniform random columns.
fn random_rotation(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for prev in &q {
            let proj: f64 = c.iter().zip(prev).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(prev).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(c.into_iter().map(|a| a / norm).collect());
        }
    }
    q.concat()
}

/// Distance correlation is 1 for identical and rotated spaces; Spearman
/// matches a pairwise-count rank computation on 5-point data.
fn check_correlation(seed: u64) -> Result<f64, LossError> {
    let (n, d) = (20, 4);
    let a = EmbeddingMatrix::random(n, d, seed);
    let rot = random_rotation(d, seed ^ 0xabc);
    let rotated: Vec<f64> = (0..n)
        .flat_map(|i| {
            let row = a.row(i);
            (0..d)
                .map(|o| (0..d).map(|k| rot[o * d + k] * row[k]).sum::<f64>())
                .collect::<Vec<_>>()
        })
        .collect();
    let b = EmbeddingMatrix::new(n, d, rotated)?;
    let mut worst = 0.0f64;
    for other in [&a, &b] {
        let (rho, r) = pairwise_distance_correlation(&a, other, 50, seed)?;
        worst = worst.max((rho - 1.0).abs()).max((r - 1.0).abs());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
    // small integer values force ties
    let x: Vec<f64> = (0..5).map(|_| rng.gen_range(0..4) as f64).collect();
    let y: Vec<f64> = (0..5).map(|_| rng.gen_range(0..4) as f64).collect();
    let counted = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    worst = worst.max(worst_error(&average_ranks(&x), &counted(&x)));
    if let Some(rho) = spearman(&x, &y) {
        let (rx, ry) = (counted(&x), counted(&y));
        let mean = 3.0;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
        let sx = rx.iter().map(|a| (a - mean).powi(2)).sum::<f64>().sqrt();
        let sy = ry.iter().map(|b| (b - mean).powi(2)).sum::<f64>().sqrt();
        worst = worst.max((rho - cov / (sx * sy)).abs());
    }
    Ok(worst)
}

/// Runs every loss self-check over `seeds` seeds starting at `base_seed`.
pub fn loss_check(seeds: u64, base_seed: u64) -> Result<LossCheckReport, PipelineError> {
    let mut tallies = [
        Tally::new("nt_xent_gradient", GRAD_TOLERANCE),
        Tally::new("nt_xent_canonical_gradient", GRAD_TOLERANCE),
        Tally::new("siglip_gradient", GRAD_TOLERANCE),
        Tally::new("siglip_unsigned_bias_gradient", GRAD_TOLERANCE),
        Tally::new("hybrid_gradient", GRAD_TOLERANCE),
        Tally::new("hybrid_identity", EXACT_TOLERANCE),
        Tally::new("permutation_equivariance", EXACT_TOLERANCE),
        Tally::new("distance_correlation", EXACT_TOLERANCE),
    ];
    for s in 0..seeds {
        let seed = base_seed.wrapping_add(s);
        for (k, &(n, d)) in SHAPES.iter().enumerate() {
            let case = seed.wrapping_mul(0x1000).wrapping_add(k as u64);
            tallies[0].record(check_nt_xent(n, d, case, false)?);
            tallies[1].record(check_nt_xent(n, d, case, true)?);
            tallies[2].record(check_siglip(n, d, case, false)?);
            tallies[3].record(check_siglip(n, d, case, true)?);
            tallies[4].record(check_hybrid(n, d, case)?);
            tallies[5].record(check_hybrid_identity(n, d, case)?);
            tallies[6].record(check_permutation(n, d, case)?);
        }
        tallies[7].record(check_correlation(seed)?);
    }
    Ok(LossCheckReport {
        checks: tallies.into_iter().map(Tally::finish).collect(),
    })
}

fn read_matrix(path: &Path) -> Result<EmbeddingMatrix, PipelineError> {
    let file = File::open(path).map_err(PipelineError::io(path))?;
    Ok(EmbeddingMatrix::read_text(BufReader::new(file))?)
}

/// Spearman and Pearson correlation of pairwise distances between two
/// embedding files in the `N d` text format.
pub fn correlate_files(a: &Path, b: &Path, n_pairs: usize, seed: u64) -> Result<(f64, f64), PipelineError> {
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    Ok(pairwise_distance_correlation(&a, &b, n_pairs, seed)?)
}
