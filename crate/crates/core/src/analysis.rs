//! Lyapunov tooling for the translational error system.
//!
//! With `e = (e_p, e_v)` the closed loop reads `ė = A e + B d̃` where
//! `A = [[0, I], [−K_p, −K_v]]` and `d̃` is the force-estimate error over the
//! mass. The candidate is `V = eᵀ M e + ½ Δf̃²` with `AᵀM + MA = −I`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::control::TranslationalGains;
use crate::geom::Vec3;

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;

/// `A = [[0, I], [−K_p, −K_v]]`.
pub fn error_system_matrix(gains: &TranslationalGains) -> Mat6 {
    let mut a = Mat6::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&crate::geom::Mat3::identity());
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-gains.kp));
    a.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-gains.kv));
    a
}

/// Solves `AᵀM + MA = −Q` through its Kronecker form. `None` when singular,
/// which happens iff `A` has eigenvalues summing to zero.
pub fn solve_lyapunov(a: &Mat6, q: &Mat6) -> Option<Mat6> {
    let n = 6;
    let at = a.transpose();
    let mut k = DMatrix::<f64>::zeros(n * n, n * n);
    // column-major vec: vec(AᵀM) = (I ⊗ Aᵀ) vec(M), vec(MA) = (Aᵀ ⊗ I) vec(M)
    for i in 0..n {
        for r in 0..n {
            for c in 0..n {
                k[(i * n + r, i * n + c)] += at[(r, c)];
                k[(r * n + i, c * n + i)] += at[(r, c)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
    let sol = k.lu().solve(&rhs)?;
    let m = Mat6::from_iterator(sol.iter().copied());
    // symmetrize away rounding
    Some((m + m.transpose()) * 0.5)
}

/// `V` for the translational loop with `M` solving `AᵀM + MA = −I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationalLyapunov {
    pub a: Mat6,
    pub m: Mat6,
}

impl TranslationalLyapunov {
    pub fn new(gains: &TranslationalGains) -> Option<Self> {
        let a = error_system_matrix(gains);
        let m = solve_lyapunov(&a, &Mat6::identity())?;
        Some(Self { a, m })
    }

    pub fn stack(e_p: &Vec3, e_v: &Vec3) -> Vec6 {
        Vec6::new(e_p.x, e_p.y, e_p.z, e_v.x, e_v.y, e_v.z)
    }

    /// `eᵀ M e + ½ Δf̃²`.
    pub fn value(&self, e_p: &Vec3, e_v: &Vec3, delta_f_err: f64) -> f64 {
        let e = Self::stack(e_p, e_v);
        e.dot(&(self.m * e)) + 0.5 * delta_f_err * delta_f_err
    }
}

/// Samples where `V` rose while above `residual`.
pub fn count_increases(values: &[f64], residual: f64) -> usize {
    values.windows(2).filter(|w| w[0] > residual && w[1] > w[0]).count()
}
