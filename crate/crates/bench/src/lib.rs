//! Deterministic fixtures shared by the benchmarks.

use num_complex::Complex64;

use holosim_core::gaussian::{prepare_coherent, prepare_squeezed_vacuum, prepare_twb};
use holosim_core::{GaussianState, Ladder, OperatorPolynomial};

/// Coherent, squeezed and twin-beam modes side by side (four modes).
pub fn mixed_state() -> GaussianState {
    prepare_coherent(2.0, 0.3)
        .unwrap()
        .direct_sum(&prepare_squeezed_vacuum(0.7, -0.4).unwrap())
        .direct_sum(&prepare_twb(1.2, 0.9).unwrap())
}

/// `terms` words of length `degree` cycling through modes and daggers.
pub fn polynomial(modes: usize, degree: usize, terms: usize) -> OperatorPolynomial {
    OperatorPolynomial::from_terms((0..terms).map(|t| {
        let word = (0..degree)
            .map(|k| Ladder::new((t + 3 * k) % modes, (t + k) % 3 == 0))
            .collect();
        (Complex64::new(1.0 / (t + 1) as f64, 0.5), word)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shape() {
        assert_eq!(mixed_state().num_modes(), 4);
        let p = polynomial(4, 6, 5);
        assert_eq!(p.degree(), 6);
    }
}
