use nalgebra::DMatrix;

/// A twice-differentiable function over the positive orthant.
///
/// Objectives handed to the solver must be concave, constraints convex.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, v: &[f64]) -> f64;

    /// Writes the gradient into `out` (overwriting it).
    fn gradient(&self, v: &[f64], out: &mut [f64]);

    /// Adds `scale * ∇²f(v)` to `h`.
    fn add_hessian(&self, v: &[f64], scale: f64, h: &mut DMatrix<f64>);
}

/// Sparse linear form `Σ_k coeff_k * v[index_k]`.
pub type LinearForm = Vec<(usize, f64)>;

fn dot(form: &[(usize, f64)], v: &[f64]) -> f64 {
    form.iter().map(|&(i, a)| a * v[i]).sum()
}

/// `c·v + constant`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub coefficients: LinearForm,
    pub constant: f64,
}

impl Affine {
    pub fn new(coefficients: LinearForm, constant: f64) -> Self {
        Self {
            coefficients,
            constant,
        }
    }
}

impl SmoothFunction for Affine {
    fn value(&self, v: &[f64]) -> f64 {
        dot(&self.coefficients, v) + self.constant
    }

    fn gradient(&self, _v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(i, a) in &self.coefficients {
            out[i] += a;
        }
    }

    fn add_hessian(&self, _v: &[f64], _scale: f64, _h: &mut DMatrix<f64>) {}
}

/// One power term `a * (form·v)^beta` with a nonnegative form.
#[derive(Clone, Debug)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
    pub form: LinearForm,
}

/// `Σ_k a_k (form_k·v)^beta_k + constant`; convex for `a_k >= 0`, `beta_k >= 1`
/// and nonnegative forms.
#[derive(Clone, Debug)]
pub struct PowerSum {
    pub terms: Vec<PowerTerm>,
    pub constant: f64,
}

impl SmoothFunction for PowerSum {
    fn value(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let z = dot(&t.form, v);
                if z <= 0.0 {
                    0.0
                } else {
                    t.coefficient * z.powf(t.exponent)
                }
            })
            .sum::<f64>()
            + self.constant
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for t in &self.terms {
            let z = dot(&t.form, v);
            let dz = if t.exponent == 1.0 {
                t.coefficient
            } else if z <= 0.0 {
                0.0
            } else {
                t.coefficient * t.exponent * z.powf(t.exponent - 1.0)
            };
            for &(i, a) in &t.form {
                out[i] += dz * a;
            }
        }
    }

    fn add_hessian(&self, v: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        for t in &self.terms {
            if t.exponent == 1.0 {
                continue;
            }
            let z = dot(&t.form, v);
            if z <= 0.0 {
                continue;
            }
            let d2 =
                scale * t.coefficient * t.exponent * (t.exponent - 1.0) * z.powf(t.exponent - 2.0);
            for &(i, a) in &t.form {
                for &(j, b) in &t.form {
                    h[(i, j)] += d2 * a * b;
                }
            }
        }
    }
}

/// `Σ_g weight_g * log(Σ_{i in g} v_i)`: the budget-weighted log-utility objective.
#[derive(Clone, Debug)]
pub struct LogSum {
    pub groups: Vec<(f64, Vec<usize>)>,
}

impl SmoothFunction for LogSum {
    fn value(&self, v: &[f64]) -> f64 {
        self.groups
            .iter()
            .map(|(w, idx)| w * idx.iter().map(|&i| v[i]).sum::<f64>().ln())
            .sum()
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (w, idx) in &self.groups {
            let total: f64 = idx.iter().map(|&i| v[i]).sum();
            for &i in idx {
                out[i] += w / total;
            }
        }
    }

    fn add_hessian(&self, v: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        for (w, idx) in &self.groups {
            let total: f64 = idx.iter().map(|&i| v[i]).sum();
            let d2 = -scale * w / (total * total);
            for &i in idx {
                for &j in idx {
                    h[(i, j)] += d2;
                }
            }
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type MatrixFn = dyn Fn(&[f64], &mut DMatrix<f64>) + Send + Sync;

/// Function given by closures; the Hessian closure writes the full matrix.
pub struct FnSmooth {
    value: Box<ValueFn>,
    gradient: Box<VectorFn>,
    hessian: Box<MatrixFn>,
}

impl FnSmooth {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        hessian: impl Fn(&[f64], &mut DMatrix<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
        }
    }
}

impl SmoothFunction for FnSmooth {
    fn value(&self, v: &[f64]) -> f64 {
        (self.value)(v)
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        (self.gradient)(v, out)
    }

    fn add_hessian(&self, v: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        let n = v.len();
        let mut local = DMatrix::zeros(n, n);
        (self.hessian)(v, &mut local);
        *h += local * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(f: &dyn SmoothFunction, v: &[f64]) {
        let n = v.len();
        let mut g = vec![0.0; n];
        f.gradient(v, &mut g);
        let mut h = DMatrix::zeros(n, n);
        f.add_hessian(v, 1.0, &mut h);
        for i in 0..n {
            let step = 1e-6 * v[i].max(1.0);
            let mut p = v.to_vec();
            let mut m = v.to_vec();
            p[i] += step;
            m[i] -= step;
            let fd = (f.value(&p) - f.value(&m)) / (2.0 * step);
            assert!(
                (fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()),
                "grad {i}: {fd} vs {}",
                g[i]
            );
            let mut gp = vec![0.0; n];
            let mut gm = vec![0.0; n];
            f.gradient(&p, &mut gp);
            f.gradient(&m, &mut gm);
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!(
                    (fd - h[(j, i)]).abs() < 1e-5 * (1.0 + h[(j, i)].abs()),
                    "hess {j},{i}: {fd} vs {}",
                    h[(j, i)]
                );
            }
        }
    }

    #[test]
    fn power_sum_derivatives() {
        let f = PowerSum {
            terms: vec![
                PowerTerm {
                    coefficient: 1.5,
                    exponent: 2.5,
                    form: vec![(0, 1.0), (1, 2.0)],
                },
                PowerTerm {
                    coefficient: 0.5,
                    exponent: 1.0,
                    form: vec![(2, 3.0)],
                },
            ],
            constant: -4.0,
        };
        check_derivatives(&f, &[0.3, 0.7, 1.1]);
    }

    #[test]
    fn log_sum_derivatives() {
        let f = LogSum {
            groups: vec![(2.0, vec![0, 1]), (0.5, vec![2])],
        };
        check_derivatives(&f, &[0.3, 0.7, 1.1]);
    }
}
