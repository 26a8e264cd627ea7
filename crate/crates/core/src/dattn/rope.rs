//! Rotary position encoding for the text self-attention branch.
//!
//! Queries and keys are rotated pairwise by angles proportional to the
//! token position, so a dot product between rotated vectors depends on
//! the positions only through their difference. The cross-attention
//! branches never call into this module; that omission is what makes
//! them position-invariant.

/// Positional treatment of the text self-attention branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositionalScheme {
    /// No positional signal anywhere.
    None,
    /// Rotary encoding with the given frequency base.
    Rotary { base: f64 },
}

impl PositionalScheme {
    pub const DEFAULT_ROTARY_BASE: f64 = 10_000.0;

    pub fn rotary() -> Self {
        PositionalScheme::Rotary {
            base: Self::DEFAULT_ROTARY_BASE,
        }
    }
}

/// Rotates adjacent dimension pairs `(2i, 2i+1)` of `v` by
/// `position · base^(-2i/d)`. A trailing unpaired dimension (odd `d`)
/// passes through unchanged.
pub fn apply_rotary(v: &[f64], position: u64, base: f64) -> Vec<f64> {
    let d = v.len();
    let mut out = v.to_vec();
    let pos = position as f64;
    for pair in 0..d / 2 {
        let theta = base.powf(-2.0 * pair as f64 / d as f64);
        let angle = pos * theta;
        let (sin, cos) = angle.sin_cos();
        let (x0, x1) = (v[2 * pair], v[2 * pair + 1]);
        out[2 * pair] = x0 * cos - x1 * sin;
        out[2 * pair + 1] = x0 * sin + x1 * cos;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_zero_is_identity() {
        let v = [0.3, -1.2, 0.7, 2.0];
        assert_eq!(apply_rotary(&v, 0, 10_000.0), v.to_vec());
    }

    #[test]
    fn two_dim_rotation_matches_hand_arithmetic() {
        // d=2 has a single pair with theta = base^0 = 1, so position p
        // rotates by exactly p radians.
        let v = [1.0, 0.0];
        let got = apply_rotary(&v, 3, 10_000.0);
        assert!((got[0] - 3.0_f64.cos()).abs() < 1e-15);
        assert!((got[1] - 3.0_f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn scores_depend_on_relative_offset_only() {
        let q = [0.4, -0.9, 1.1, 0.2];
        let k = [-0.5, 0.8, 0.3, -1.0];
        let base = 10_000.0;
        let s1 = super::super::linalg::dot(&apply_rotary(&q, 7, base), &apply_rotary(&k, 3, base));
        let s2 = super::super::linalg::dot(
            &apply_rotary(&q, 1007, base),
            &apply_rotary(&k, 1003, base),
        );
        assert!((s1 - s2).abs() < 1e-9);
    }

    #[test]
    fn rotation_preserves_norm() {
        let v = [0.3, -1.2, 0.7, 2.0, 0.1];
        let r = apply_rotary(&v, 41, 10_000.0);
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>();
        assert!((norm(&v) - norm(&r)).abs() < 1e-12);
    }
}
