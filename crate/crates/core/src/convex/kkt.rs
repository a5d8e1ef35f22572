use serde::{Deserialize, Serialize};

use super::ConvexProgram;

/// Residuals of the KKT system for `max f(v)` s.t. `g_j(v) <= 0`, `v >= 0`.
///
/// Recomputed from the program callbacks and the reported multipliers; the
/// bound multipliers are implied as `ν = -(∇f - Σ θ_j ∇g_j)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// Largest positive part of `∇f - Σ θ_j ∇g_j` (negative parts are
    /// absorbed by bound multipliers).
    pub stationarity: f64,
    /// Largest `max(g_j, 0)` or `max(-v_i, 0)`.
    pub primal: f64,
    /// Largest negative multiplier magnitude.
    pub dual: f64,
    /// Largest `|θ_j g_j|`.
    pub complementarity: f64,
    /// Largest `ν_i v_i` over implied bound multipliers.
    pub bound_complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
            .max(self.bound_complementarity)
    }
}

pub fn kkt_residuals<T>(program: &ConvexProgram<T>, v: &[f64], theta: &[f64]) -> KktResiduals {
    let n = program.n;
    let mut r = vec![0.0; n];
    program.objective.gradient(v, &mut r);
    let mut g = vec![0.0; n];
    let mut res = KktResiduals::default();
    for (c, &t) in program.constraints.iter().zip(theta) {
        let gj = c.function.value(v);
        c.function.gradient(v, &mut g);
        for (ri, gi) in r.iter_mut().zip(&g) {
            *ri -= t * gi;
        }
        res.primal = res.primal.max(gj);
        res.dual = res.dual.max(-t);
        res.complementarity = res.complementarity.max((t * gj).abs());
    }
    for (ri, vi) in r.iter().zip(v) {
        res.primal = res.primal.max(-vi);
        res.stationarity = res.stationarity.max(*ri);
        res.bound_complementarity = res.bound_complementarity.max((-ri).max(0.0) * vi.abs());
    }
    res
}
