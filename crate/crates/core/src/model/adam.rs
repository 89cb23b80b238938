use serde::{Deserialize, Serialize};

use super::ModelError;

/// Bias-corrected Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update over every parameter.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
) -> Result<(), ModelError> {
    step(params, grads, state, lr, None)
}

/// Adam update restricted to entries where `trainable` is set; frozen
/// entries keep both their value and their moments.
pub fn adam_step_masked(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    trainable: &[bool],
) -> Result<(), ModelError> {
    step(params, grads, state, lr, Some(trainable))
}

fn step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    trainable: Option<&[bool]>,
) -> Result<(), ModelError> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || trainable.is_some_and(|t| t.len() != n) {
        return Err(ModelError::ShapeMismatch {
            expected: n,
            got: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(ModelError::NonFiniteGradient);
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for i in 0..n {
        if trainable.is_some_and(|t| !t[i]) {
            continue;
        }
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![0.5, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        assert_eq!(p, vec![0.5, -2.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_hand_value() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, 1e-3).unwrap();
        // m̂ = 1, v̂ = 1 ⇒ Δ = −lr / (1 + ε)
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15, "{}", p[0]);
    }

    #[test]
    fn counter_and_errors() {
        let mut p = vec![1.0; 3];
        let mut s = AdamState::new(3);
        for _ in 0..7 {
            adam_step(&mut p, &[0.1, -0.2, 0.3], &mut s, 1e-2).unwrap();
        }
        assert_eq!(s.t, 7);
        assert_eq!(
            adam_step(&mut p, &[f64::NAN, 0.0, 0.0], &mut s, 1e-2),
            Err(ModelError::NonFiniteGradient)
        );
        assert_eq!(s.t, 7);
    }

    #[test]
    fn masked_entries_stay_put() {
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new(2);
        adam_step_masked(&mut p, &[1.0, 1.0], &mut s, 0.1, &[false, true]).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1] < 1.0);
        assert_eq!(s.m[0], 0.0);
    }
}
