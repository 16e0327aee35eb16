//! A small ReLU network trained on oracle solutions, and the continuity test
//! it cannot pass on the adversarial families.
//!
//! `Φ(x) = T_L ρ(T_{L−1} ρ(… ρ(T_1 x)))` with `T_ℓ x = W_ℓ x + b_ℓ` and
//! `ρ = ReLU`. The last layer is affine.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversarial::{exact_solution, omega, separation_certificate, Family, FamilyParams};
use crate::qcbp::{embedded_select, feasible, Instance};
use crate::rational::{ComplexRational, Rational, RationalMatrix, RationalVector};

/// Slack for float rounding in the conflict bound.
pub const ROUNDING_SLACK: f64 = 1e-6;
const POWER_STEPS: usize = 50;
const LIPSCHITZ_INFLATION: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("input has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("empty training set")]
    EmptyData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Checkpoint", into = "Checkpoint")]
pub struct Mlp {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// On-disk form: dims plus row-major weight arrays.
#[derive(Serialize, Deserialize)]
struct Checkpoint {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl TryFrom<Checkpoint> for Mlp {
    type Error = NnError;

    fn try_from(c: Checkpoint) -> Result<Self, NnError> {
        Mlp::from_parts(c.dims, c.weights, c.biases)
    }
}

impl From<Mlp> for Checkpoint {
    fn from(m: Mlp) -> Self {
        Checkpoint { dims: m.dims, weights: m.weights, biases: m.biases }
    }
}

impl Mlp {
    /// He-initialized network with zero biases.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self, NnError> {
        check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
            weights.push((0..w[0] * w[1]).map(|_| normal.sample(&mut rng)).collect());
        }
        let biases = dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Mlp { dims: dims.to_vec(), weights, biases })
    }

    pub fn from_parts(dims: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self, NnError> {
        check_dims(&dims)?;
        let layers = dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(NnError::Architecture(format!("expected {layers} layers")));
        }
        for l in 0..layers {
            if weights[l].len() != dims[l] * dims[l + 1] || biases[l].len() != dims[l + 1] {
                return Err(NnError::Architecture(format!("layer {} has wrong shape", l + 1)));
            }
        }
        let net = Mlp { dims, weights, biases };
        if !net.is_finite() {
            return Err(NnError::Architecture("non-finite parameter".into()));
        }
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn weight(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(x)?.pop().expect("at least one layer").1)
    }

    /// Per layer `(z_ℓ, a_ℓ)`; the input is layer 0 with `z = a = x`.
    fn forward_cached(&self, x: &[f64]) -> Result<Vec<(Vec<f64>, Vec<f64>)>, NnError> {
        if x.len() != self.dims[0] {
            return Err(NnError::DimensionMismatch { expected: self.dims[0], found: x.len() });
        }
        let mut cache = vec![(x.to_vec(), x.to_vec())];
        let last = self.layers() - 1;
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let a = &cache[l].1;
            let z: Vec<f64> = (0..n_out)
                .map(|i| {
                    let row = &self.weights[l][i * n_in..(i + 1) * n_in];
                    self.biases[l][i] + row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            let act = if l == last { z.clone() } else { z.iter().map(|v| v.max(0.0)).collect() };
            cache.push((z, act));
        }
        Ok(cache)
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Flat parameter order: per layer, `W` row-major then `b`.
    pub fn param(&self, idx: usize) -> f64 {
        *self.locate(idx)
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        *self.locate_mut(idx) = value;
    }

    fn slot(&self, mut idx: usize) -> (usize, bool, usize) {
        for l in 0..self.layers() {
            if idx < self.weights[l].len() {
                return (l, true, idx);
            }
            idx -= self.weights[l].len();
            if idx < self.biases[l].len() {
                return (l, false, idx);
            }
            idx -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    fn locate(&self, idx: usize) -> &f64 {
        match self.slot(idx) {
            (l, true, i) => &self.weights[l][i],
            (l, false, i) => &self.biases[l][i],
        }
    }

    fn locate_mut(&mut self, idx: usize) -> &mut f64 {
        match self.slot(idx) {
            (l, true, i) => &mut self.weights[l][i],
            (l, false, i) => &mut self.biases[l][i],
        }
    }

    /// Mean `‖Φ(x) − t‖²` over `samples` and its gradient, in flat parameter order.
    pub fn loss_and_grad(&self, samples: &[(&[f64], &[f64])]) -> Result<(f64, Vec<f64>), NnError> {
        if samples.is_empty() {
            return Err(NnError::EmptyData);
        }
        let r = samples.len() as f64;
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut loss = 0.0;
        for (x, t) in samples {
            let cache = self.forward_cached(x)?;
            let out = &cache[self.layers()].1;
            if t.len() != out.len() {
                return Err(NnError::DimensionMismatch { expected: out.len(), found: t.len() });
            }
            loss += out.iter().zip(*t).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / r;
            let mut delta: Vec<f64> = out.iter().zip(*t).map(|(o, t)| 2.0 * (o - t) / r).collect();
            for l in (0..self.layers()).rev() {
                let n_in = self.dims[l];
                let a_prev = &cache[l].1;
                for (i, d) in delta.iter().enumerate() {
                    gb[l][i] += d;
                    for (k, a) in a_prev.iter().enumerate() {
                        gw[l][i * n_in + k] += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let z_prev = &cache[l].0;
                delta = (0..n_in)
                    .map(|k| {
                        if z_prev[k] <= 0.0 {
                            return 0.0;
                        }
                        delta.iter().enumerate().map(|(i, d)| d * self.weights[l][i * n_in + k]).sum()
                    })
                    .collect();
            }
        }
        let mut grad = Vec::with_capacity(self.param_count());
        for l in 0..self.layers() {
            grad.extend_from_slice(&gw[l]);
            grad.extend_from_slice(&gb[l]);
        }
        Ok((loss, grad))
    }

    fn step(&mut self, grad: &[f64], lr: f64) {
        let mut it = grad.iter();
        for l in 0..self.layers() {
            for w in self.weights[l].iter_mut().chain(self.biases[l].iter_mut()) {
                *w -= lr * it.next().expect("gradient length");
            }
        }
    }

    /// Sign pattern of all hidden pre-activations at `x`.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<bool>, NnError> {
        let cache = self.forward_cached(x)?;
        Ok(cache[1..self.layers()].iter().flat_map(|(z, _)| z.iter().map(|v| *v > 0.0)).collect())
    }
}

fn check_dims(dims: &[usize]) -> Result<(), NnError> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(NnError::Architecture(format!("widths {dims:?}")));
    }
    Ok(())
}

/// `(n₀, 64, 64, 2N)` for the family's instance shape.
pub fn default_dims(p: &FamilyParams) -> Vec<usize> {
    let (m, n) = (p.rows(), p.cols());
    vec![2 * (m * n + m), 64, 64, 2 * n]
}

/// `(Re A row-major, Im A row-major, Re y, Im y)`, each entry rounded to nearest.
pub fn realify(inst: &Instance) -> Vec<f64> {
    let a = inst.a().entries();
    let y = inst.y().entries();
    let mut out = Vec::with_capacity(2 * (a.len() + y.len()));
    out.extend(a.iter().map(|z| z.re.to_f64()));
    out.extend(a.iter().map(|z| z.im.to_f64()));
    out.extend(y.iter().map(|z| z.re.to_f64()));
    out.extend(y.iter().map(|z| z.im.to_f64()));
    out
}

/// `(Re x, Im x)`.
pub fn realify_solution(x: &RationalVector) -> Vec<f64> {
    let (re, im) = x.to_f64_parts();
    re.into_iter().chain(im).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub a: String,
    pub eps: String,
    pub rows: usize,
    pub cols: usize,
    pub n_first: u32,
    pub n_last: u32,
    pub noise: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub meta: TrainingMeta,
    /// Exact instances and solutions behind each pair.
    #[serde(skip)]
    pub originals: Vec<(Instance, RationalVector)>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn pairs(&self) -> Vec<(&[f64], &[f64])> {
        self.inputs.iter().zip(&self.targets).map(|(x, t)| (x.as_slice(), t.as_slice())).collect()
    }
}

/// Both adversarial families over `n_range`, targets from the exact oracle.
///
/// With `noise > 0` the measurement becomes `1 + e`, `|e| ≤ noise`, `e` on a
/// dyadic grid; the target is the oracle solution of the noisy instance,
/// obtained by dividing `A` and `ε` by `y`. Instances the oracle cannot
/// handle (nonpositive `y`, `ε/y ≥ 1`) are skipped with a warning. Noise
/// needs `m = 1`.
pub fn gen_training_set(
    p: &FamilyParams,
    n_range: RangeInclusive<u32>,
    noise: &Rational,
    seed: u64,
) -> Result<TrainingSet, NnError> {
    if noise.is_negative() {
        return Err(NnError::Config("noise bound must be nonnegative".into()));
    }
    if !noise.is_zero() && p.rows() != 1 {
        return Err(NnError::Config("noise needs m = 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Rational::pow2(-20);
    let steps: i64 = (noise.clone() * Rational::pow2(20)).floor_to_grid(0).numer().try_into().unwrap_or(i64::MAX);
    let mut set = TrainingSet {
        inputs: Vec::new(),
        targets: Vec::new(),
        meta: TrainingMeta {
            a: p.a().to_string(),
            eps: p.eps().to_string(),
            rows: p.rows(),
            cols: p.cols(),
            n_first: *n_range.start(),
            n_last: *n_range.end(),
            noise: noise.to_string(),
            seed,
        },
        originals: Vec::new(),
    };
    for n in n_range {
        for j in [Family::First, Family::Second] {
            let clean = omega(j, n, p);
            let (inst, x) = if steps == 0 {
                (clean.clone(), exact_solution(j, n, p))
            } else {
                let e = Rational::from(rng.gen_range(-steps..=steps)) * &grid;
                let y = Rational::one() + e;
                match noisy_solution(&clean, &y) {
                    Some(pair) => pair,
                    None => {
                        log::warn!("skipping n={n}, family {j:?}: oracle preconditions fail for y={y}");
                        continue;
                    }
                }
            };
            if !feasible(&inst, &x).expect("shapes match") {
                log::warn!("skipping n={n}, family {j:?}: target not feasible");
                continue;
            }
            set.inputs.push(realify(&inst));
            set.targets.push(realify_solution(&x));
            set.originals.push((inst, x));
        }
    }
    Ok(set)
}

fn noisy_solution(clean: &Instance, y: &Rational) -> Option<(Instance, RationalVector)> {
    if !y.is_positive() {
        return None;
    }
    let noisy = clean.with_y(RationalVector::from_real(vec![y.clone()])).ok()?;
    let inv = y.recip().ok()?;
    let row: Vec<ComplexRational> = clean.a().row(0).iter().map(|z| ComplexRational::real(&z.re * &inv)).collect();
    let normalized = Instance::new(
        RationalMatrix::new(1, row.len(), row).ok()?,
        RationalVector::from_real(vec![Rational::one()]),
        clean.eps() * &inv,
    )
    .ok()?;
    let x = embedded_select(&normalized).ok()?;
    Some((noisy, x))
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    /// `None` is full batch.
    pub batch: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { steps: 2000, lr: 0.05, batch: None, seed: 0 }
    }
}

/// Gradient descent on the mean squared loss. Returns the net and the loss
/// before each step.
pub fn train(net: &Mlp, data: &TrainingSet, cfg: &TrainConfig) -> Result<(Mlp, Vec<f64>), NnError> {
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(NnError::Config(format!("lr must be positive, got {}", cfg.lr)));
    }
    if cfg.batch == Some(0) {
        return Err(NnError::Config("batch size must be positive".into()));
    }
    let mut net = net.clone();
    if cfg.steps == 0 {
        return Ok((net, Vec::new()));
    }
    if data.is_empty() {
        return Err(NnError::EmptyData);
    }
    let pairs = data.pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut cursor = pairs.len();
    let mut trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch: Vec<(&[f64], &[f64])> = match cfg.batch {
            None => pairs.clone(),
            Some(b) => {
                let mut out = Vec::with_capacity(b);
                while out.len() < b.min(pairs.len()) {
                    if cursor == order.len() {
                        order.shuffle(&mut rng);
                        cursor = 0;
                    }
                    out.push(pairs[order[cursor]]);
                    cursor += 1;
                }
                out
            }
        };
        let (loss, grad) = net.loss_and_grad(&batch)?;
        if !loss.is_finite() {
            return Err(NnError::Diverged { step, loss });
        }
        trace.push(loss);
        net.step(&grad, cfg.lr);
        if !net.is_finite() {
            return Err(NnError::Diverged { step, loss: f64::NAN });
        }
    }
    Ok((net, trace))
}

/// Upper estimate of `‖W‖₂` by power iteration, inflated by 10%.
pub fn spectral_bound(w: &[f64], rows: usize, cols: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut sigma = 0.0;
    for _ in 0..POWER_STEPS {
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let u: Vec<f64> = (0..rows).map(|i| w[i * cols..(i + 1) * cols].iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        sigma = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = (0..cols).map(|k| (0..rows).map(|i| w[i * cols + k] * u[i]).sum()).collect();
    }
    sigma * LIPSCHITZ_INFLATION
}

/// `L̂ = Π ‖W_ℓ‖₂` upper estimates; ReLU is 1-Lipschitz.
pub fn lipschitz_bound(net: &Mlp) -> f64 {
    (0..net.layers())
        .map(|l| spectral_bound(&net.weights[l], net.dims[l + 1], net.dims[l], l as u64))
        .product()
}

#[derive(Debug, Clone, Serialize)]
pub struct InstabilityRow {
    pub n: u32,
    /// `‖realify(ω¹ₙ) − realify(ω²ₙ)‖₂`.
    pub gap: f64,
    pub e1: f64,
    pub e2: f64,
    /// `L̂ · gap`.
    pub lip_slack: f64,
    /// `e1 + e2 + L̂ · gap`.
    pub bound_lhs: f64,
    pub kappa: f64,
}

impl InstabilityRow {
    pub fn bound_holds(&self) -> bool {
        self.bound_lhs >= self.kappa - ROUNDING_SLACK
    }

    pub fn max_error(&self) -> f64 {
        self.e1.max(self.e2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstabilityReport {
    pub lipschitz: f64,
    pub kappa: f64,
    pub rows: Vec<InstabilityRow>,
}

impl InstabilityReport {
    pub fn all_bounds_hold(&self) -> bool {
        self.rows.iter().all(InstabilityRow::bound_holds)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("n,gap,e1,e2,lip_slack,bound_lhs,kappa\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6e},{:.9},{:.9},{:.6e},{:.9},{:.9}\n",
                r.n, r.gap, r.e1, r.e2, r.lip_slack, r.bound_lhs, r.kappa
            ));
        }
        out
    }
}

/// Errors of `net` on both families for `n ≤ n_max`, against the exact targets.
///
/// For any net with Lipschitz constant at most `L̂`,
/// `e1 + e2 ≥ ‖x¹ₙ − x²ₙ‖ − L̂·gap ≥ κ − L̂·gap`.
pub fn instability_eval(net: &Mlp, p: &FamilyParams, n_max: u32) -> Result<InstabilityReport, NnError> {
    let kappa = separation_certificate(p, n_max).kappa.to_f64();
    let lipschitz = lipschitz_bound(net);
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let x1 = realify(&omega(Family::First, n, p));
        let x2 = realify(&omega(Family::Second, n, p));
        let gap = x1.iter().zip(&x2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let err = |x: &[f64], j: Family| -> Result<f64, NnError> {
            let t = realify_solution(&exact_solution(j, n, p));
            let out = net.forward(x)?;
            Ok(out.iter().zip(&t).map(|(o, t)| (o - t).powi(2)).sum::<f64>().sqrt())
        };
        let e1 = err(&x1, Family::First)?;
        let e2 = err(&x2, Family::Second)?;
        let lip_slack = lipschitz * gap;
        rows.push(InstabilityRow { n, gap, e1, e2, lip_slack, bound_lhs: e1 + e2 + lip_slack, kappa });
    }
    Ok(InstabilityReport { lipschitz, kappa, rows })
}
