//! Analytic gradients of a scalar loss through the fixed-α decomposed
//! attention of one text token, for finite-difference verification.
//!
//! The loss is `L = c · (Wo · h)` where `h` is the unit-weight branch
//! sum and `c` a fixed coefficient vector. The backward pass here
//! re-derives the forward quantities itself, so the finite-difference
//! check against [`super::kernel::decomposed_fixed`] exercises two
//! independent routes through the math.

use crate::error::{Error, Result};

use super::linalg::{axpy, dot, Mat};
use super::{Modality, ProjectionWeights, TokenSequence};

/// Gradients of the loss with respect to each projection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub wq: Mat,
    pub wk: Mat,
    pub wv: Mat,
    pub wo: Mat,
}

/// Computes `L = c · (Wo · decomposed_fixed(t))` and its analytic
/// gradients with respect to `Wq`, `Wk`, `Wv`, and `Wo`.
pub fn fixed_loss_and_gradients(
    t_index: usize,
    seq: &TokenSequence,
    weights: &ProjectionWeights,
    loss_coeffs: &[f64],
) -> Result<(f64, LayerGradients)> {
    let d = seq.d_model();
    if loss_coeffs.len() != d {
        return Err(Error::Contract(format!(
            "loss coefficient vector must have width {d}, got {}",
            loss_coeffs.len()
        )));
    }
    if t_index >= seq.len() || seq.modality(t_index) != Modality::Text {
        return Err(Error::Contract(format!(
            "token {t_index} is not a text token"
        )));
    }
    if weights.d_model() != d {
        return Err(Error::Contract(
            "projection width does not match embedding width".into(),
        ));
    }

    let x_t = seq.embedding(t_index);
    let q = weights.wq.matvec(x_t);

    let branches: Vec<Vec<usize>> = [
        seq.indices_of(Modality::Visual),
        seq.indices_of(Modality::Audio),
        seq.indices_of(Modality::Text)
            .into_iter()
            .filter(|&i| i <= t_index)
            .collect(),
    ]
    .into_iter()
    .filter(|idxs| !idxs.is_empty())
    .collect();

    // Forward: per-branch softmax weights and outputs.
    struct BranchState {
        idxs: Vec<usize>,
        keys: Vec<Vec<f64>>,
        vals: Vec<Vec<f64>>,
        weights: Vec<f64>,
    }
    let mut states = Vec::with_capacity(branches.len());
    let mut h = vec![0.0; d];
    for idxs in branches {
        let keys: Vec<Vec<f64>> = idxs
            .iter()
            .map(|&j| weights.wk.matvec(seq.embedding(j)))
            .collect();
        let vals: Vec<Vec<f64>> = idxs
            .iter()
            .map(|&j| weights.wv.matvec(seq.embedding(j)))
            .collect();
        let scores: Vec<f64> = keys.iter().map(|k| dot(&q, k)).collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let w: Vec<f64> = exps.into_iter().map(|e| e / sum).collect();
        for (wj, vj) in w.iter().zip(&vals) {
            axpy(&mut h, *wj, vj);
        }
        states.push(BranchState {
            idxs,
            keys,
            vals,
            weights: w,
        });
    }

    let y = weights.wo.matvec(&h);
    let loss = dot(loss_coeffs, &y);

    // Backward.
    let mut d_wo = Mat::zeros(d, d);
    d_wo.add_scaled_outer(loss_coeffs, &h, 1.0);
    let g = weights.wo.t_matvec(loss_coeffs); // dL/dh

    let mut d_wq = Mat::zeros(d, d);
    let mut d_wk = Mat::zeros(d, d);
    let mut d_wv = Mat::zeros(d, d);
    let mut dq = vec![0.0; d];
    for state in &states {
        let u: Vec<f64> = state.vals.iter().map(|v| dot(v, &g)).collect();
        let u_bar: f64 = state.weights.iter().zip(&u).map(|(w, u)| w * u).sum();
        for (slot, &j) in state.idxs.iter().enumerate() {
            let w_j = state.weights[slot];
            let ds_j = w_j * (u[slot] - u_bar);
            axpy(&mut dq, ds_j, &state.keys[slot]);
            d_wk.add_scaled_outer(&q, seq.embedding(j), ds_j);
            d_wv.add_scaled_outer(&g, seq.embedding(j), w_j);
        }
    }
    d_wq.add_scaled_outer(&dq, x_t, 1.0);

    Ok((
        loss,
        LayerGradients {
            wq: d_wq,
            wk: d_wk,
            wv: d_wv,
            wo: d_wo,
        },
    ))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dattn::check::{central_difference_gradients, random_sequence, SeqShape};

    #[test]
    fn analytic_gradients_match_central_differences() {
        let mut r = ChaCha8Rng::seed_from_u64(101);
        let shape = SeqShape {
            d: 8,
            n_visual: 6,
            tokens_per_frame: 3,
            n_audio: 4,
            tokens_per_chunk: 2,
            n_text: 5,
        };
        let seq = random_sequence(&shape, &mut r);
        let weights = ProjectionWeights::random(8, &mut r, 0.35);
        let coeffs: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let t = seq.len() - 1;
        let (_, analytic) = fixed_loss_and_gradients(t, &seq, &weights, &coeffs).unwrap();
        let numeric = central_difference_gradients(t, &seq, &weights, &coeffs, 1e-5);
        for (name, a, n) in [
            ("wq", &analytic.wq, &numeric.wq),
            ("wk", &analytic.wk, &numeric.wk),
            ("wv", &analytic.wv, &numeric.wv),
            ("wo", &analytic.wo, &numeric.wo),
        ] {
            for (av, nv) in a.data().iter().zip(n.data()) {
                let denom = av.abs().max(nv.abs());
                let diff = (av - nv).abs();
                assert!(
                    diff <= 1e-6 * denom || diff <= 1e-9,
                    "{name}: analytic {av} vs numeric {nv}"
                );
            }
        }
    }

    #[test]
    fn loss_matches_kernel_route() {
        let mut r = ChaCha8Rng::seed_from_u64(103);
        let shape = SeqShape {
            d: 8,
            n_visual: 4,
            tokens_per_frame: 2,
            n_audio: 2,
            tokens_per_chunk: 2,
            n_text: 3,
        };
        let seq = random_sequence(&shape, &mut r);
        let weights = ProjectionWeights::random(8, &mut r, 0.3);
        let coeffs: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let t = seq.len() - 1;
        let (loss, _) = fixed_loss_and_gradients(t, &seq, &weights, &coeffs).unwrap();
        let h = crate::dattn::kernel::decomposed_fixed(t, &seq, &weights).unwrap();
        let via_kernel = dot(&coeffs, &weights.wo.matvec(&h));
        assert!((loss - via_kernel).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_coefficient_width() {
        let mut r = ChaCha8Rng::seed_from_u64(107);
        let shape = SeqShape {
            d: 8,
            n_visual: 2,
            tokens_per_frame: 2,
            n_audio: 0,
            tokens_per_chunk: 1,
            n_text: 2,
        };
        let seq = random_sequence(&shape, &mut r);
        let weights = ProjectionWeights::random(8, &mut r, 0.3);
        assert!(fixed_loss_and_gradients(3, &seq, &weights, &[1.0; 4]).is_err());
    }
}
