//! Damped Newton minimization of smooth strictly convex potentials.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

/// Potential value, gradient and Hessian at one point.
#[derive(Debug, Clone)]
pub struct PotentialEval<const N: usize> {
    pub value: f64,
    pub gradient: SVector<f64, N>,
    pub hessian: SMatrix<f64, N, N>,
}

/// A convex potential on an open feasible set.
pub trait ConvexPotential<const N: usize> {
    /// `None` when `x` is infeasible.
    fn evaluate(&self, x: &SVector<f64, N>) -> Option<PotentialEval<N>>;

    /// Density used to normalize gradient components.
    fn density_scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Accepted scaled gradient norm.
    pub gradient_tol: f64,
    /// Iteration continues toward this norm while it keeps making progress.
    pub polish_tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            gradient_tol: 1e-11,
            polish_tol: 1e-13,
            max_iterations: 50,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome<const N: usize> {
    pub x: SVector<f64, N>,
    pub iterations: usize,
    pub residual: f64,
    pub eval: PotentialEval<N>,
}

/// Scaled gradient norm `max_i |g_i| / sqrt(H_ii · D)`.
pub fn scaled_residual<const N: usize>(eval: &PotentialEval<N>, density: f64) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..N {
        let s = (eval.hessian[(i, i)].abs() * density).sqrt();
        let gi = eval.gradient[i].abs();
        r = r.max(if s > 0.0 { gi / s } else { gi });
    }
    r
}

/// Minimize `potential` starting from `start`.
pub fn newton_minimize<const N: usize, P: ConvexPotential<N>>(
    potential: &P,
    start: SVector<f64, N>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome<N>> {
    let density = potential.density_scale();
    let mut x = start;
    let mut eval = potential
        .evaluate(&x)
        .ok_or_else(|| Error::Feasibility("newton start point is infeasible".into()))?;
    let mut residual = scaled_residual(&eval, density);
    let mut iterations = 0;

    loop {
        if residual <= opts.polish_tol {
            break;
        }
        if iterations >= opts.max_iterations {
            if residual <= opts.gradient_tol {
                break;
            }
            return Err(Error::NonConvergence { iterations, residual });
        }

        // Jacobi-scaled Cholesky solve of H d = −g.
        let mut dscale = SVector::<f64, N>::zeros();
        for i in 0..N {
            let h = eval.hessian[(i, i)];
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::SingularHessian { iteration: iterations });
            }
            dscale[i] = 1.0 / h.sqrt();
        }
        let hs = SMatrix::<f64, N, N>::from_fn(|i, j| eval.hessian[(i, j)] * dscale[i] * dscale[j]);
        let chol = hs
            .cholesky()
            .ok_or(Error::SingularHessian { iteration: iterations })?;
        let rhs = -eval.gradient.component_mul(&dscale);
        let step = chol.solve(&rhs).component_mul(&dscale);
        let slope = eval.gradient.dot(&step);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = x + step * t;
            if let Some(e) = potential.evaluate(&trial) {
                let r = scaled_residual(&e, density);
                let armijo = e.value <= eval.value + 1e-4 * t * slope;
                if armijo || r < residual {
                    accepted = Some((trial, e, r));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, e, r)) = accepted else {
            if residual <= opts.gradient_tol {
                break;
            }
            return Err(Error::Feasibility(format!(
                "step halving exhausted after {} halvings (residual {residual:e})",
                opts.max_halvings
            )));
        };
        iterations += 1;
        let stalled = r > 0.25 * residual;
        x = trial;
        eval = e;
        residual = r;
        if stalled && residual <= opts.gradient_tol {
            break;
        }
    }

    Ok(NewtonOutcome {
        x,
        iterations,
        residual,
        eval,
    })
}
