use num_complex::Complex64 as C64;

use crate::error::{FlyqError, Result};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Normalized,
    Unnormalized,
}

/// Pure state of a standing system.
///
/// States produced by a non-unitary propagator carry
/// [`Normalization::Unnormalized`]; their norm is the probability that no
/// photon has been emitted so far.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
    normalization: Normalization,
}

impl QuantumState {
    /// Normalized state from raw amplitudes. Rejects zero or non-finite
    /// vectors and vectors whose norm differs from one by more than `1e-12`.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(FlyqError::UnsupportedDimension(0));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FlyqError::InvalidState("non-finite amplitude".into()));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(FlyqError::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, normalization: Normalization::Normalized })
    }

    /// Rescales to unit norm.
    pub fn renormalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n > 0.0 && n.is_finite()) {
            return Err(FlyqError::InvalidState(format!("cannot normalize vector of norm {n}")));
        }
        Self::normalized(amplitudes.into_iter().map(|z| z / n).collect())
    }

    pub fn unnormalized(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes, normalization: Normalization::Unnormalized }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes, normalization: Normalization::Normalized }
    }

    pub fn ground(dim: usize) -> Self {
        Self::basis(dim, 0)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn tensor(&self, rhs: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * rhs.dim());
        for &a in &self.amplitudes {
            for &b in &rhs.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let normalization = match (self.normalization, rhs.normalization) {
            (Normalization::Normalized, Normalization::Normalized) => Normalization::Normalized,
            _ => Normalization::Unnormalized,
        };
        Self { amplitudes, normalization }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_input() {
        let err = QuantumState::normalized(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, FlyqError::InvalidState(_)));
        let ok = QuantumState::renormalized(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        assert!((ok.norm() - 1.0).abs() < 1e-15);
        assert!(QuantumState::renormalized(vec![C64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn tensor_orders_left_factor_slow() {
        let one = QuantumState::basis(2, 1);
        let zero = QuantumState::basis(2, 0);
        let s = one.tensor(&zero);
        assert_eq!(s.amplitudes()[2], C64::new(1.0, 0.0));
        assert_eq!(s.normalization(), Normalization::Normalized);
    }
}
