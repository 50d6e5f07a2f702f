//! Stochastic policy: one ReLU hidden layer and a softmax over `2d` actions,
//! with hand-derived gradients and an adaptive-moment optimizer.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvState;
use crate::rng::seeded;
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 64;

/// Weights are row-major: `w1` is `h x d`, `w2` is `2d x h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub d: usize,
    pub h: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = PolicyParams;

impl PolicyParams {
    pub fn zeros(d: usize, h: usize) -> Self {
        PolicyParams {
            d,
            h,
            w1: vec![0.0; h * d],
            b1: vec![0.0; h],
            w2: vec![0.0; 2 * d * h],
            b2: vec![0.0; 2 * d],
        }
    }

    pub fn n_actions(&self) -> usize {
        2 * self.d
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn same_shape(&self, other: &PolicyParams) -> bool {
        self.d == other.d && self.h == other.h
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, c: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Checkpoint bytes: `d`, `h`, `step` as little-endian u64, then every
    /// parameter as little-endian f64 in `w1, b1, w2, b2` order.
    pub fn to_bytes(&self, step: u64) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.tensors().iter().map(|t| t.len()).sum::<usize>());
        for v in [self.d as u64, self.h as u64, step] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for t in self.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(PolicyParams, u64)> {
        let word = |i: usize| -> Option<[u8; 8]> { bytes.get(8 * i..8 * i + 8)?.try_into().ok() };
        let header = |i| word(i).map(u64::from_le_bytes).ok_or_else(|| Error::Shape("truncated checkpoint header".into()));
        let (d, h, step) = (header(0)? as usize, header(1)? as usize, header(2)?);
        let mut p = PolicyParams::zeros(d, h);
        let expected = 24 + 8 * p.tensors().iter().map(|t| t.len()).sum::<usize>();
        if bytes.len() != expected {
            return Err(Error::Shape(format!(
                "checkpoint for d={d}, h={h} should hold {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let mut i = 3;
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = f64::from_le_bytes(word(i).expect("length checked"));
                i += 1;
            }
        }
        if !p.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters".into()));
        }
        Ok((p, step))
    }

    pub fn save(&self, path: &Path, step: u64) -> Result<()> {
        std::fs::write(path, self.to_bytes(step)).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<(PolicyParams, u64)> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        PolicyParams::from_bytes(&bytes).map_err(|e| e.context(path.display().to_string()))
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(d: usize, h: usize, seed: u64) -> Result<PolicyParams> {
    if d == 0 || h == 0 {
        return Err(Error::invalid("policy needs d >= 1 and h >= 1"));
    }
    let mut rng = seeded(seed);
    let mut p = PolicyParams::zeros(d, h);
    let s1 = (6.0 / (d + h) as f64).sqrt();
    let s2 = (6.0 / (h + 2 * d) as f64).sqrt();
    p.w1.iter_mut().for_each(|w| *w = rng.gen_range(-s1..=s1));
    p.w2.iter_mut().for_each(|w| *w = rng.gen_range(-s2..=s2));
    Ok(p)
}

/// Values from one forward pass, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub input: Vec<f64>,
    pub hidden_pre: Vec<f64>,
    pub probs: Vec<f64>,
}

/// One decision of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub activations: Activations,
    pub action: usize,
    pub log_prob: f64,
}

impl StepCache {
    pub fn new(activations: Activations, action: usize) -> Self {
        let log_prob = activations.probs[action].ln();
        StepCache {
            activations,
            action,
            log_prob,
        }
    }
}

pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    logits.iter_mut().for_each(|v| *v /= sum);
}

pub fn forward_input(p: &PolicyParams, input: &[f64]) -> Result<Activations> {
    if input.len() != p.d {
        return Err(Error::ColumnMismatch {
            expected: p.d,
            got: input.len(),
        });
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("policy parameters".into()));
    }
    let hidden_pre: Vec<f64> = (0..p.h)
        .map(|i| p.b1[i] + p.w1[i * p.d..(i + 1) * p.d].iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
        .collect();
    let hidden: Vec<f64> = hidden_pre.iter().map(|&z| z.max(0.0)).collect();
    let mut probs: Vec<f64> = (0..p.n_actions())
        .map(|a| p.b2[a] + p.w2[a * p.h..(a + 1) * p.h].iter().zip(&hidden).map(|(w, x)| w * x).sum::<f64>())
        .collect();
    softmax_in_place(&mut probs);
    Ok(Activations {
        input: input.to_vec(),
        hidden_pre,
        probs,
    })
}

pub fn forward(p: &PolicyParams, s: &EnvState) -> Result<Activations> {
    forward_input(p, &s.as_input())
}

/// Inverse-CDF draw from one uniform variate. Returns the action and its
/// log-probability.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> (usize, f64) {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            chosen = Some(i);
            break;
        }
    }
    // rounding can leave the cumulative sum just below u
    let a = chosen.unwrap_or_else(|| probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1));
    (a, probs[a].ln())
}

/// Exact gradient of `L = -Σ_t G_t · log π(a_t | s_t)`.
pub fn policy_gradient(p: &PolicyParams, episode: &[StepCache], returns: &[f64]) -> Result<Gradients> {
    if episode.len() != returns.len() {
        return Err(Error::Shape(format!(
            "{} steps vs {} returns",
            episode.len(),
            returns.len()
        )));
    }
    let mut g = PolicyParams::zeros(p.d, p.h);
    let mut dhidden = vec![0.0; p.h];
    for (step, &ret) in episode.iter().zip(returns) {
        let act = &step.activations;
        if act.input.len() != p.d || act.probs.len() != p.n_actions() {
            return Err(Error::Shape("step cache does not match policy shape".into()));
        }
        dhidden.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..p.n_actions() {
            let onehot = if a == step.action { 1.0 } else { 0.0 };
            let dlogit = ret * (act.probs[a] - onehot);
            if dlogit == 0.0 {
                continue;
            }
            g.b2[a] += dlogit;
            let row = a * p.h;
            for i in 0..p.h {
                let hid = act.hidden_pre[i].max(0.0);
                g.w2[row + i] += dlogit * hid;
                dhidden[i] += dlogit * p.w2[row + i];
            }
        }
        for i in 0..p.h {
            if act.hidden_pre[i] <= 0.0 {
                continue;
            }
            let dz = dhidden[i];
            g.b1[i] += dz;
            let row = i * p.d;
            for (j, &x) in act.input.iter().enumerate() {
                g.w1[row + j] += dz * x;
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Plain gradient descent, `θ ← θ - α g`.
    Sgd,
}

/// Adam moment estimates with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: PolicyParams,
    pub v: PolicyParams,
    pub t: u64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(d: usize, h: usize) -> Self {
        AdamState {
            m: PolicyParams::zeros(d, h),
            v: PolicyParams::zeros(d, h),
            t: 0,
        }
    }
}

/// One Adam step descending `grads`.
pub fn adam_step(p: &mut PolicyParams, grads: &Gradients, lr: f64, state: &mut AdamState) -> Result<()> {
    if !p.same_shape(grads) || !p.same_shape(&state.m) {
        return Err(Error::Shape("gradient shape does not match parameters".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("policy gradient".into()));
    }
    state.t += 1;
    let c1 = 1.0 - AdamState::BETA1.powi(state.t as i32);
    let c2 = 1.0 - AdamState::BETA2.powi(state.t as i32);
    let AdamState { m, v, .. } = state;
    for (((pt, gt), mt), vt) in p
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(m.tensors_mut())
        .zip(v.tensors_mut())
    {
        for i in 0..pt.len() {
            let g = gt[i];
            mt[i] = AdamState::BETA1 * mt[i] + (1.0 - AdamState::BETA1) * g;
            vt[i] = AdamState::BETA2 * vt[i] + (1.0 - AdamState::BETA2) * g * g;
            let mhat = mt[i] / c1;
            let vhat = vt[i] / c2;
            pt[i] -= lr * mhat / (vhat.sqrt() + AdamState::EPS);
        }
    }
    Ok(())
}

/// Optimizer with its running state.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam(AdamState),
    Sgd { steps: u64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, d: usize, h: usize) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(d, h)),
            OptimizerKind::Sgd => Optimizer::Sgd { steps: 0 },
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            Optimizer::Adam(s) => s.t,
            Optimizer::Sgd { steps } => *steps,
        }
    }

    pub fn step(&mut self, p: &mut PolicyParams, grads: &Gradients, lr: f64) -> Result<()> {
        match self {
            Optimizer::Adam(state) => adam_step(p, grads, lr, state),
            Optimizer::Sgd { steps } => {
                if !grads.is_finite() {
                    return Err(Error::NonFinite("policy gradient".into()));
                }
                if !p.same_shape(grads) {
                    return Err(Error::Shape("gradient shape does not match parameters".into()));
                }
                for (pt, gt) in p.tensors_mut().into_iter().zip(grads.tensors()) {
                    pt.iter_mut().zip(gt).for_each(|(w, g)| *w -= lr * g);
                }
                *steps += 1;
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_seed;

    fn random_params(d: usize, h: usize, seed: u64) -> PolicyParams {
        let mut p = init_params(d, h, seed).unwrap();
        let mut rng = seeded(child_seed(seed, 1));
        p.b1.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        p.b2.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        p
    }

    #[test]
    fn init_shapes_and_determinism() {
        let p = init_params(20, 64, 3).unwrap();
        assert_eq!(p, init_params(20, 64, 3).unwrap());
        assert_ne!(p, init_params(20, 64, 4).unwrap());
        assert_eq!(p.w2.len() / p.h, 40);
        assert!(p.b1.iter().chain(&p.b2).all(|&b| b == 0.0));
        let s = (6.0f64 / 84.0).sqrt();
        assert!(p.w1.iter().all(|w| w.abs() <= s));
        assert!(init_params(0, 4, 0).is_err());
    }

    #[test]
    fn zero_params_give_uniform_probs() {
        let p = PolicyParams::zeros(3, 5);
        let a = forward_input(&p, &[1.0, 0.0, 1.0]).unwrap();
        assert!(a.probs.iter().all(|&q| (q - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn logit_shift_and_normalization() {
        let mut p = random_params(4, 8, 9);
        let x = [1.0, 0.0, 0.0, 1.0];
        let base = forward_input(&p, &x).unwrap().probs;
        assert!((base.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(base.iter().all(|&q| q > 0.0));
        p.b2.iter_mut().for_each(|b| *b += 3.7);
        let shifted = forward_input(&p, &x).unwrap().probs;
        for (a, b) in base.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_errors() {
        let mut p = PolicyParams::zeros(2, 2);
        assert!(forward_input(&p, &[1.0]).is_err());
        p.w1[0] = f64::NAN;
        assert!(matches!(forward_input(&p, &[1.0, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn degenerate_and_deterministic_sampling() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            assert_eq!(sample_action(&[1.0, 0.0, 0.0, 0.0], &mut rng).0, 0);
        }
        let probs = [0.1, 0.2, 0.3, 0.4];
        let a = sample_action(&probs, &mut seeded(77));
        assert_eq!(a, sample_action(&probs, &mut seeded(77)));
        assert_eq!(a.1, probs[a.0].ln());
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let k = 8;
        let probs = vec![1.0 / k as f64; k];
        let draws = 20_000;
        let mut counts = vec![0usize; k];
        let mut rng = seeded(2024);
        for _ in 0..draws {
            counts[sample_action(&probs, &mut rng).0] += 1;
        }
        let p = 1.0 / k as f64;
        let se = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts {
            let expected = draws as f64 * p;
            assert!((c as f64 - expected).abs() < 3.0 * se, "count {c}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 7 degrees of freedom, 0.999 quantile
        assert!(chi2 < 24.32, "chi2 {chi2}");
    }

    fn episode(p: &PolicyParams, seed: u64, len: usize) -> (Vec<StepCache>, Vec<f64>) {
        let mut rng = seeded(seed);
        let mut steps = Vec::new();
        let mut returns = Vec::new();
        for _ in 0..len {
            let x: Vec<f64> = (0..p.d).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect();
            let act = forward_input(p, &x).unwrap();
            let (a, _) = sample_action(&act.probs, &mut rng);
            steps.push(StepCache::new(act, a));
            returns.push(rng.gen_range(-2.0..2.0));
        }
        (steps, returns)
    }

    fn loss(p: &PolicyParams, steps: &[StepCache], returns: &[f64]) -> f64 {
        steps
            .iter()
            .zip(returns)
            .map(|(s, g)| -g * forward_input(p, &s.activations.input).unwrap().probs[s.action].ln())
            .sum()
    }

    #[test]
    fn zero_and_scaled_returns() {
        let p = random_params(3, 4, 5);
        let (steps, returns) = episode(&p, 6, 4);
        let zero = policy_gradient(&p, &steps, &[0.0; 4]).unwrap();
        assert_eq!(zero, PolicyParams::zeros(3, 4));
        let g = policy_gradient(&p, &steps, &returns).unwrap();
        let tripled: Vec<f64> = returns.iter().map(|r| 3.0 * r).collect();
        let mut g3 = policy_gradient(&p, &steps, &tripled).unwrap();
        g3.scale(1.0 / 3.0);
        for (a, b) in g.tensors().iter().zip(g3.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(policy_gradient(&p, &steps, &returns[..2]).is_err());
        // softmax shift direction carries no gradient
        assert!(g.b2.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn matches_central_differences() {
        let h_step = 1e-5;
        for seed in 0..5 {
            let p = random_params(4, 8, seed);
            let (steps, returns) = episode(&p, 100 + seed, 5);
            let g = policy_gradient(&p, &steps, &returns).unwrap();
            for (ti, grad) in g.tensors().iter().enumerate() {
                for i in 0..grad.len() {
                    let mut plus = p.clone();
                    plus.tensors_mut()[ti][i] += h_step;
                    let mut minus = p.clone();
                    minus.tensors_mut()[ti][i] -= h_step;
                    let fd = (loss(&plus, &steps, &returns) - loss(&minus, &steps, &returns)) / (2.0 * h_step);
                    let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
                    assert!(err < 1e-4, "tensor {ti} entry {i}: fd {fd} vs {}", grad[i]);
                }
            }
        }
    }

    #[test]
    fn adam_zero_gradient_and_first_step() {
        let mut p = random_params(2, 3, 1);
        let before = p.clone();
        let mut st = AdamState::new(2, 3);
        adam_step(&mut p, &PolicyParams::zeros(2, 3), 0.01, &mut st).unwrap();
        assert_eq!(p, before);

        let mut p = before.clone();
        let mut g = PolicyParams::zeros(2, 3);
        g.w1[0] = 0.3;
        g.b2[1] = -2.0;
        let mut st = AdamState::new(2, 3);
        adam_step(&mut p, &g, 0.01, &mut st).unwrap();
        assert!((p.w1[0] - (before.w1[0] - 0.01)).abs() < 1e-6);
        assert!((p.b2[1] - (before.b2[1] + 0.01)).abs() < 1e-6);
        assert_eq!(p.w1[1], before.w1[1]);

        g.w1[0] = f64::INFINITY;
        assert!(adam_step(&mut p, &g, 0.01, &mut st).is_err());
    }

    #[test]
    fn adam_learns_a_bandit() {
        // one state, reward 1 for action 0 and 0 otherwise
        let d = 3;
        let mut p = init_params(d, 16, 8).unwrap();
        let mut st = AdamState::new(d, 16);
        let mut rng = seeded(9);
        let x = vec![1.0, 0.0, 1.0];
        for _ in 0..200 {
            let act = forward_input(&p, &x).unwrap();
            let (a, _) = sample_action(&act.probs, &mut rng);
            let r = if a == 0 { 1.0 } else { 0.0 };
            let g = policy_gradient(&p, &[StepCache::new(act, a)], &[r]).unwrap();
            adam_step(&mut p, &g, 0.01, &mut st).unwrap();
        }
        let p0 = forward_input(&p, &x).unwrap().probs[0];
        assert!(p0 > 0.9, "p(action 0) = {p0}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = random_params(3, 5, 2);
        let bytes = p.to_bytes(17);
        assert_eq!(bytes.len(), 24 + 8 * (15 + 5 + 30 + 6));
        assert_eq!(&bytes[..8], &3u64.to_le_bytes());
        assert_eq!(PolicyParams::from_bytes(&bytes).unwrap(), (p, 17));
        assert!(PolicyParams::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(PolicyParams::from_bytes(&bytes[..4]).is_err());
    }

    #[test]
    fn sgd_fallback() {
        let mut p = PolicyParams::zeros(1, 1);
        let mut g = PolicyParams::zeros(1, 1);
        g.b1[0] = 2.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 1, 1);
        opt.step(&mut p, &g, 0.5).unwrap();
        assert_eq!(p.b1[0], -1.0);
        assert_eq!(opt.steps(), 1);
    }
}
