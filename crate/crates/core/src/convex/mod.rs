//! Smooth convex programs solved by a logarithmic-barrier interior point method.
//!
//! Problems have the form `max f(v)` s.t. `g_j(v) <= 0`, `v >= 0`, with `f`
//! concave and each `g_j` convex. Each outer stage minimizes
//! `-f(v) - w (Σ_j ln(-g_j(v)) + Σ_i ln v_i)` by damped Newton steps, then
//! divides the barrier weight `w` by 10. Constraint multipliers start at
//! `θ_j = w / -g_j(v)` and are carried along as primal-dual Newton variables,
//! which keeps them accurate once slacks approach rounding level.

mod functions;
mod kkt;

pub use functions::{Affine, FnSmooth, LinearForm, LogSum, PowerSum, PowerTerm, SmoothFunction};
pub use kkt::{kkt_residuals, KktResiduals};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Iterates beyond this magnitude are taken as an improving feasible ray.
const UNBOUNDED_NORM: f64 = 1e12;
const STAGE_FACTOR: f64 = 10.0;

/// `(Δv, Δθ, Δν, ∇Φ·Δv)`.
type Direction = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

pub struct Constraint<T> {
    pub function: Box<dyn SmoothFunction>,
    pub tag: T,
}

pub struct ConvexProgram<T = ()> {
    pub n: usize,
    pub objective: Box<dyn SmoothFunction>,
    pub constraints: Vec<Constraint<T>>,
    /// Strictly feasible starting point; when absent one is found by shrinking
    /// an all-ones seed toward the origin.
    pub initial_point: Option<Vec<f64>>,
}

impl<T> ConvexProgram<T> {
    pub fn new(n: usize, objective: impl SmoothFunction + 'static) -> Self {
        Self {
            n,
            objective: Box::new(objective),
            constraints: Vec::new(),
            initial_point: None,
        }
    }

    pub fn constrain(&mut self, function: impl SmoothFunction + 'static, tag: T) -> &mut Self {
        self.constraints.push(Constraint {
            function: Box::new(function),
            tag,
        });
        self
    }

    fn strictly_feasible(&self, v: &[f64]) -> bool {
        v.iter().all(|&x| x > 0.0 && x.is_finite())
            && self.constraints.iter().all(|c| c.function.value(v) < 0.0)
    }

    fn starting_point(&self) -> Option<Vec<f64>> {
        if let Some(v) = &self.initial_point {
            if v.len() == self.n && self.strictly_feasible(v) {
                return Some(v.clone());
            }
        }
        let origin = vec![0.0; self.n];
        let at_origin: Vec<f64> = self
            .constraints
            .iter()
            .map(|c| c.function.value(&origin))
            .collect();
        let mut scale = 1.0;
        for _ in 0..200 {
            let v = vec![scale; self.n];
            let ok = self.constraints.iter().zip(&at_origin).all(|(c, &g0)| {
                let g = c.function.value(&v);
                g < 0.0 && (g0 >= 0.0 || g <= 0.5 * g0)
            });
            if ok {
                return Some(v);
            }
            scale *= 0.5;
        }
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Target on every KKT residual family.
    pub tolerance: f64,
    /// Newton iterations allowed per barrier stage.
    pub max_iterations: usize,
    pub initial_barrier_weight: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            initial_barrier_weight: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Unbounded,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct PrimalDualSolution {
    pub primal: Vec<f64>,
    /// One nonnegative multiplier per constraint, in program order.
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub residuals: KktResiduals,
    pub max_residual: f64,
    /// Newton iterations over all stages.
    pub iterations: usize,
    pub barrier_weight: f64,
    pub status: Status,
}

enum Centering {
    Centered,
    Unbounded,
    Stalled,
    Exhausted,
}

/// Primal iterate with constraint and bound multipliers.
struct Iterate {
    v: Vec<f64>,
    theta: Vec<f64>,
    nu: Vec<f64>,
}

struct Workspace<'a, T> {
    program: &'a ConvexProgram<T>,
    /// Constraint gradients at the current point, one row per constraint.
    jac: Vec<Vec<f64>>,
    slack: Vec<f64>,
    obj_grad: Vec<f64>,
}

impl<'a, T> Workspace<'a, T> {
    fn new(program: &'a ConvexProgram<T>) -> Self {
        let n = program.n;
        let m = program.constraints.len();
        Self {
            program,
            jac: vec![vec![0.0; n]; m],
            slack: vec![0.0; m],
            obj_grad: vec![0.0; n],
        }
    }

    fn evaluate(&mut self, v: &[f64]) {
        self.program.objective.gradient(v, &mut self.obj_grad);
        for (j, c) in self.program.constraints.iter().enumerate() {
            self.slack[j] = -c.function.value(v);
            c.function.gradient(v, &mut self.jac[j]);
        }
    }

    /// Barrier merit `-f - w Σ ln(-g) - w Σ ln v`, or `None` outside the domain.
    fn merit(&self, v: &[f64], w: f64) -> Option<f64> {
        if v.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let mut phi = -self.program.objective.value(v);
        for c in &self.program.constraints {
            let g = c.function.value(v);
            if !(g < 0.0) {
                return None;
            }
            phi -= w * (-g).ln();
        }
        phi -= w * v.iter().map(|x| x.ln()).sum::<f64>();
        phi.is_finite().then_some(phi)
    }

    /// Dual residual `-∇f + Σ θ_j ∇g_j - ν` and worst centrality error.
    fn residuals(&self, it: &Iterate, w: f64) -> (f64, f64) {
        let n = self.program.n;
        let mut dual: f64 = 0.0;
        for i in 0..n {
            let mut r = -self.obj_grad[i] - it.nu[i];
            for (j, row) in self.jac.iter().enumerate() {
                r += it.theta[j] * row[i];
            }
            dual = dual.max(r.abs());
        }
        let mut centrality: f64 = 0.0;
        for (t, s) in it.theta.iter().zip(&self.slack) {
            centrality = centrality.max((t * s - w).abs());
        }
        for (nu, v) in it.nu.iter().zip(&it.v) {
            centrality = centrality.max((nu * v - w).abs());
        }
        (dual, centrality)
    }

    /// Primal-dual Newton direction for the perturbed KKT system at weight `w`.
    fn direction(&self, it: &Iterate, w: f64) -> Option<Direction> {
        let n = self.program.n;
        let mut hess = DMatrix::zeros(n, n);
        self.program.objective.add_hessian(&it.v, -1.0, &mut hess);
        let mut grad = DVector::zeros(n);
        for i in 0..n {
            grad[i] = -self.obj_grad[i] - w / it.v[i];
            hess[(i, i)] += it.nu[i] / it.v[i];
        }
        for (j, c) in self.program.constraints.iter().enumerate() {
            let row = &self.jac[j];
            let s = self.slack[j];
            c.function.add_hessian(&it.v, it.theta[j], &mut hess);
            let nz: Vec<usize> = (0..n).filter(|&i| row[i] != 0.0).collect();
            let weight = it.theta[j] / s;
            for &i in &nz {
                grad[i] += w * row[i] / s;
                for &k in &nz {
                    hess[(i, k)] += weight * row[i] * row[k];
                }
            }
        }
        let dv = newton_direction(&hess, &grad)?;
        let slope = grad.dot(&dv);
        let dtheta = self
            .jac
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let s = self.slack[j];
                let ds: f64 = -row.iter().zip(dv.iter()).map(|(a, b)| a * b).sum::<f64>();
                (w - it.theta[j] * s - it.theta[j] * ds) / s
            })
            .collect();
        let dnu = (0..n)
            .map(|i| (w - it.nu[i] * it.v[i] - it.nu[i] * dv[i]) / it.v[i])
            .collect();
        Some((dv.iter().copied().collect(), dtheta, dnu, slope))
    }
}

/// Solves the Newton system with symmetric diagonal scaling, regularizing if
/// the scaled matrix is not numerically positive definite.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let scale = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let d = hess[(i, i)];
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        }),
    );
    let mut scaled = hess.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= scale[i] * scale[j];
        }
    }
    let rhs = -grad.component_mul(&scale);
    let mut shift = 0.0;
    for _ in 0..12 {
        let mut m = scaled.clone();
        for i in 0..n {
            m[(i, i)] += shift;
        }
        if let Some(chol) = m.cholesky() {
            let y = chol.solve(&rhs);
            if y.iter().all(|x| x.is_finite()) {
                return Some(y.component_mul(&scale));
            }
        }
        shift = if shift == 0.0 { 1e-12 } else { shift * 100.0 };
    }
    None
}

/// Largest step in `(0, 1]` keeping `x + t dx` above `(1 - 0.99) x`.
fn boundary_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| 0.99 * x / -d)
        .fold(1.0, f64::min)
}

fn center<T>(
    ws: &mut Workspace<'_, T>,
    it: &mut Iterate,
    w: f64,
    dual_tol: f64,
    max_iterations: usize,
    iterations: &mut usize,
) -> Centering {
    for _ in 0..max_iterations {
        ws.evaluate(&it.v);
        let (dual, centrality) = ws.residuals(it, w);
        if dual <= dual_tol && centrality <= 0.1 * w {
            return Centering::Centered;
        }
        let Some((dv, dtheta, dnu, slope)) = ws.direction(it, w) else {
            return Centering::Stalled;
        };
        *iterations += 1;

        let Some(phi0) = ws.merit(&it.v, w) else {
            return Centering::Stalled;
        };
        let mut t = boundary_step(&it.v, &dv);
        // near the solution the merit change drowns in rounding; take the
        // feasible Newton step and let the residual test decide
        let local = -slope <= 1e-14 * (1.0 + phi0.abs());
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = it.v.iter().zip(&dv).map(|(x, d)| x + t * d).collect();
            if let Some(phi) = ws.merit(&trial, w) {
                if local || phi <= phi0 + 0.25 * t * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            return Centering::Stalled;
        };
        let t_dual = t
            .min(boundary_step(&it.theta, &dtheta))
            .min(boundary_step(&it.nu, &dnu));
        it.v = next;
        for (x, d) in it.theta.iter_mut().zip(&dtheta) {
            *x += t_dual * d;
        }
        for (x, d) in it.nu.iter_mut().zip(&dnu) {
            *x += t_dual * d;
        }
        if it.v.iter().any(|x| x.abs() > UNBOUNDED_NORM) {
            return Centering::Unbounded;
        }
    }
    Centering::Exhausted
}

/// Maximizes a concave objective over `{v >= 0, g_j(v) <= 0}`.
pub fn solve_convex<T>(program: &ConvexProgram<T>, opts: &SolveOptions) -> PrimalDualSolution {
    let n = program.n;
    let m = program.constraints.len();
    let Some(v) = program.starting_point() else {
        return PrimalDualSolution {
            primal: vec![0.0; n],
            multipliers: vec![0.0; m],
            objective: f64::NAN,
            residuals: KktResiduals::default(),
            max_residual: f64::INFINITY,
            iterations: 0,
            barrier_weight: opts.initial_barrier_weight,
            status: Status::Infeasible,
        };
    };

    let final_weight = opts.tolerance * 1e-2;
    let mut w = opts.initial_barrier_weight.max(final_weight);
    let mut ws = Workspace::new(program);
    let mut it = Iterate {
        theta: program
            .constraints
            .iter()
            .map(|c| w / -c.function.value(&v))
            .collect(),
        nu: v.iter().map(|x| w / x).collect(),
        v,
    };
    let mut iterations = 0;
    let mut status = Status::Optimal;
    loop {
        let last = w <= final_weight;
        let dual_tol = if last {
            0.1 * opts.tolerance
        } else {
            w.max(0.1 * opts.tolerance)
        };
        match center(
            &mut ws,
            &mut it,
            w,
            dual_tol,
            opts.max_iterations,
            &mut iterations,
        ) {
            Centering::Unbounded => {
                status = Status::Unbounded;
                break;
            }
            Centering::Exhausted => status = Status::MaxIterations,
            Centering::Stalled | Centering::Centered => {}
        }
        if last {
            break;
        }
        w = (w / STAGE_FACTOR).max(final_weight);
    }

    let residuals = kkt_residuals(program, &it.v, &it.theta);
    let max_residual = residuals.max();
    if status == Status::Optimal && !(max_residual <= opts.tolerance) {
        status = Status::MaxIterations;
    }
    PrimalDualSolution {
        objective: program.objective.value(&it.v),
        primal: it.v,
        multipliers: it.theta,
        residuals,
        max_residual,
        iterations,
        barrier_weight: w,
        status,
    }
}
