//! Adam with bias correction and an optional decoupled weight decay.

use std::io::{Cursor, Read};

use crate::encodings::walks::{read_u32, read_u64};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Applied as `θ -= lr · wd · θ` after the moment update.
    pub decoupled_weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decoupled_weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    /// First moments, one flat vector per tensor in [`ModelParams::tensors`] order.
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|(_, t)| vec![0.0; t.len()])
            .collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"SESGADAM");
        out.extend_from_slice(&1u32.to_le_bytes());
        let c = &self.config;
        for x in [c.lr, c.beta1, c.beta2, c.eps, c.decoupled_weight_decay] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&(self.m.len() as u64).to_le_bytes());
        for (m, v) in self.m.iter().zip(&self.v) {
            out.extend_from_slice(&(m.len() as u64).to_le_bytes());
            for x in m.iter().chain(v) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("truncated optimizer state".into()))?;
        if &magic != b"SESGADAM" || read_u32(&mut r)? != 1 {
            return Err(Error::Format("not an optimizer state file".into()));
        }
        let f = |r: &mut Cursor<&[u8]>| read_u64(r).map(f64::from_bits);
        let config = AdamConfig {
            lr: f(&mut r)?,
            beta1: f(&mut r)?,
            beta2: f(&mut r)?,
            eps: f(&mut r)?,
            decoupled_weight_decay: f(&mut r)?,
        };
        let step = read_u64(&mut r)?;
        let count = read_u64(&mut r)? as usize;
        let (mut m, mut v) = (Vec::new(), Vec::new());
        for _ in 0..count {
            let len = read_u64(&mut r)? as usize;
            if len > bytes.len() {
                return Err(Error::Format("corrupt optimizer state".into()));
            }
            let read_vec = |r: &mut Cursor<&[u8]>| -> Result<Vec<f64>> {
                Ok((0..len).map(|_| read_u64(r).map(f64::from_bits)).collect::<std::io::Result<_>>()?)
            };
            m.push(read_vec(&mut r)?);
            v.push(read_vec(&mut r)?);
        }
        Ok(Self { config, step, m, v })
    }
}

/// One Adam update of `params` in place.
pub fn optimizer_step(params: &mut ModelParams, grads: &ModelParams, state: &mut OptimizerState) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    let shapes_match = state.m.len() == params.tensors().len()
        && params
            .tensors()
            .iter()
            .zip(grads.tensors())
            .zip(&state.m)
            .all(|(((_, p), (_, g)), m)| p.len() == g.len() && p.len() == m.len());
    if !shapes_match {
        return Err(Error::Shape("optimizer state does not match parameters".into()));
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for ((((_, p), (_, g)), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for idx in 0..p.len() {
            let gi = g[idx];
            m[idx] = c.beta1 * m[idx] + (1.0 - c.beta1) * gi;
            v[idx] = c.beta2 * v[idx] + (1.0 - c.beta2) * gi * gi;
            let m_hat = m[idx] / bc1;
            let v_hat = v[idx] / bc2;
            p[idx] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            p[idx] -= c.lr * c.decoupled_weight_decay * p[idx];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;

    fn dims() -> ModelDims {
        ModelDims {
            width: 2,
            heads: 1,
            layers: 1,
            max_degree: 1,
            num_walks: 1,
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = ModelParams::init(dims(), 0).unwrap();
        let before = p.clone();
        let mut st = OptimizerState::new(AdamConfig::default(), &p);
        for _ in 0..3 {
            optimizer_step(&mut p, &before.zeros_like(), &mut st).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = ModelParams::zeros(dims());
        let mut g = p.zeros_like();
        g.walk_weights[0] = 1.0;
        let mut st = OptimizerState::new(AdamConfig::default(), &p);
        optimizer_step(&mut p, &g, &mut st).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = -lr / (1 + eps)
        let expect = -1e-3 / (1.0 + 1e-8);
        assert!((p.walk_weights[0] - expect).abs() < 1e-15);
        assert_eq!(p.walk_weights.len(), 1);
    }

    #[test]
    fn replay_from_saved_state() {
        let mut p = ModelParams::init(dims(), 1).unwrap();
        let g = ModelParams::init(dims(), 2).unwrap();
        let mut st = OptimizerState::new(AdamConfig::default(), &p);
        optimizer_step(&mut p, &g, &mut st).unwrap();
        let saved_p = p.clone();
        let saved = OptimizerState::decode(&st.encode()).unwrap();
        assert_eq!(saved, st);
        optimizer_step(&mut p, &g, &mut st).unwrap();
        let mut p2 = saved_p;
        let mut st2 = saved;
        optimizer_step(&mut p2, &g, &mut st2).unwrap();
        assert_eq!(p, p2);
        assert_eq!(st, st2);
    }

    #[test]
    fn nan_gradient_is_rejected() {
        let mut p = ModelParams::zeros(dims());
        let mut g = p.zeros_like();
        g.classifier[[0, 0]] = f64::NAN;
        let mut st = OptimizerState::new(AdamConfig::default(), &p);
        assert!(optimizer_step(&mut p, &g, &mut st).is_err());
    }

    #[test]
    fn decoupled_decay_shrinks_parameters() {
        let mut p = ModelParams::zeros(dims());
        p.walk_weights[0] = 2.0;
        let cfg = AdamConfig {
            decoupled_weight_decay: 0.5,
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut st = OptimizerState::new(cfg, &p);
        let zero = p.zeros_like();
        optimizer_step(&mut p, &zero, &mut st).unwrap();
        assert!((p.walk_weights[0] - 1.9).abs() < 1e-15);
    }
}
