//! Tracking accuracy: RMSE `r₁ = ‖d − a‖/√n` and MAE `r₂ = ‖d − a‖₁/n`.
//!
//! Per-axis figures treat each axis as its own series. The 3D figures use the
//! Euclidean error of each sample: RMSE over `‖e_k‖` and MAE as the mean of
//! `‖e_k‖`, which keeps `r₂ ≤ r₁` for the 3D pair as well.

use thiserror::Error;

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot compute metrics of an empty series")]
    EmptySeries,
    #[error("series lengths differ: {desired} desired vs {actual} actual")]
    LengthMismatch { desired: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub n: usize,
    /// Per-axis RMSE (x, y, z), m.
    pub rmse: [f64; 3],
    /// Per-axis MAE (x, y, z), m.
    pub mae: [f64; 3],
    pub rmse_3d: f64,
    pub mae_3d: f64,
}

impl Metrics {
    pub fn rmse_z(&self) -> f64 {
        self.rmse[2]
    }

    pub fn mae_z(&self) -> f64 {
        self.mae[2]
    }
}

/// Streaming form used by the simulator; [`compute_metrics`] goes through it too.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    n: usize,
    sum_sq: [f64; 3],
    sum_abs: [f64; 3],
    sum_norm: f64,
}

impl MetricsAccumulator {
    pub fn push(&mut self, desired: &Vec3, actual: &Vec3) {
        let e = desired - actual;
        for i in 0..3 {
            self.sum_sq[i] += e[i] * e[i];
            self.sum_abs[i] += e[i].abs();
        }
        self.sum_norm += e.norm();
        self.n += 1;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn finish(&self) -> Result<Metrics, MetricsError> {
        if self.n == 0 {
            return Err(MetricsError::EmptySeries);
        }
        let n = self.n as f64;
        let rmse = self.sum_sq.map(|s| (s / n).sqrt());
        let mae = self.sum_abs.map(|s| s / n);
        let sum_sq_total: f64 = self.sum_sq.iter().sum();
        Ok(Metrics { n: self.n, rmse, mae, rmse_3d: (sum_sq_total / n).sqrt(), mae_3d: self.sum_norm / n })
    }
}

pub fn compute_metrics(desired: &[Vec3], actual: &[Vec3]) -> Result<Metrics, MetricsError> {
    if desired.len() != actual.len() {
        return Err(MetricsError::LengthMismatch { desired: desired.len(), actual: actual.len() });
    }
    let mut acc = MetricsAccumulator::default();
    for (d, a) in desired.iter().zip(actual) {
        acc.push(d, a);
    }
    acc.finish()
}

/// RMSE and MAE of a scalar series.
pub fn rmse_mae(desired: &[f64], actual: &[f64]) -> Result<(f64, f64), MetricsError> {
    if desired.len() != actual.len() {
        return Err(MetricsError::LengthMismatch { desired: desired.len(), actual: actual.len() });
    }
    if desired.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let n = desired.len() as f64;
    let (sq, abs) = desired
        .iter()
        .zip(actual)
        .fold((0.0, 0.0), |(sq, abs), (d, a)| (sq + (d - a) * (d - a), abs + (d - a).abs()));
    Ok(((sq / n).sqrt(), abs / n))
}
