use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-node infection rates `β_i` and recovery rates `δ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    beta: Vec<f64>,
    delta: Vec<f64>,
}

impl EpidemicParams {
    pub fn new(beta: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if beta.len() != delta.len() || beta.is_empty() {
            return Err(Error::InvalidParams(format!(
                "beta has {} entries and delta {}",
                beta.len(),
                delta.len()
            )));
        }
        if let Some(b) = beta.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "infection rate {b} is not positive"
            )));
        }
        if let Some(d) = delta.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "recovery rate {d} is not positive"
            )));
        }
        Ok(Self { beta, delta })
    }

    /// Rates that may be zero. Simulation accepts these; certificates need
    /// positive rates.
    pub fn nonnegative(beta: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if beta.len() != delta.len() || beta.is_empty() {
            return Err(Error::InvalidParams(format!(
                "beta has {} entries and delta {}",
                beta.len(),
                delta.len()
            )));
        }
        if beta
            .iter()
            .chain(&delta)
            .any(|&v| !(v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParams(
                "rates must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { beta, delta })
    }

    pub fn homogeneous(n: usize, beta: f64, delta: f64) -> Result<Self> {
        Self::new(vec![beta; n], vec![delta; n])
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// `b̄ = max_i β_i`.
    pub fn beta_max(&self) -> f64 {
        self.beta.iter().cloned().fold(0.0, f64::max)
    }

    /// `δ̲ = min_i δ_i`.
    pub fn delta_min(&self) -> f64 {
        self.delta.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `Some((β, δ))` when all nodes share the same rates.
    pub fn as_homogeneous(&self) -> Option<(f64, f64)> {
        let (b, d) = (self.beta[0], self.delta[0]);
        (self.beta.iter().all(|&x| x == b) && self.delta.iter().all(|&x| x == d)).then_some((b, d))
    }

    /// Discrete-time use needs every `δ_i ≤ 1`.
    pub fn check_discrete(&self) -> Result<()> {
        if let Some(d) = self.delta.iter().find(|&&d| d > 1.0) {
            return Err(Error::ParamRange(format!(
                "recovery probability {d} exceeds 1"
            )));
        }
        Ok(())
    }

    pub fn b_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.beta))
    }

    pub fn d_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.delta))
    }

    /// `B A − D`.
    pub fn ct_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            let v = self.beta[i] * a[(i, j)];
            if i == j {
                v - self.delta[i]
            } else {
                v
            }
        })
    }

    /// `B A + I − D`.
    pub fn dt_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = self.ct_matrix(a);
        for i in 0..self.n() {
            m[(i, i)] += 1.0;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(EpidemicParams::new(vec![1.0], vec![0.0]).is_err());
        assert!(EpidemicParams::new(vec![-1.0], vec![1.0]).is_err());
        assert!(EpidemicParams::new(vec![1.0, 2.0], vec![1.0]).is_err());
        let p = EpidemicParams::new(vec![0.2, 0.5], vec![1.0, 0.3]).unwrap();
        assert_eq!(p.beta_max(), 0.5);
        assert_eq!(p.delta_min(), 0.3);
        assert!(p.as_homogeneous().is_none());
        assert!(EpidemicParams::homogeneous(3, 0.1, 2.0)
            .unwrap()
            .check_discrete()
            .is_err());
    }

    #[test]
    fn matrices() {
        let p = EpidemicParams::new(vec![2.0, 3.0], vec![0.5, 0.25]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        let m = p.ct_matrix(&a);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-0.5, 2.0, 1.5, -0.25]));
        assert_eq!(p.dt_matrix(&a)[(0, 0)], 0.5);
        assert_eq!(p.ct_matrix(&a), p.b_matrix() * &a - p.d_matrix());
    }
}
