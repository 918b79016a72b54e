use crate::assembly::{AssembledSystem, FieldSolution};
use crate::linalg::{solve_linear, DofReduction, Symmetry};

use super::{contact_contribution, ContactError, ContactPoint};

/// Active set used for the first Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialActive {
    /// From the sign of the projection argument at the initial iterate.
    #[default]
    FromIterate,
    /// Every contact point active.
    AllActive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub theta: f64,
    pub gamma: f64,
    /// Relative residual tolerance `|R| <= tol |F|`.
    pub tol: f64,
    /// With an unchanged active set, a correction `|du| <= step_tol |u|` means the
    /// residual has reached its rounding floor and the iterate is accepted.
    pub step_tol: f64,
    pub max_iter: usize,
    pub initial_active: InitialActive,
}

impl NewtonOptions {
    pub fn new(theta: f64, gamma: f64) -> Self {
        Self { theta, gamma, tol: 1e-9, step_tol: 1e-12, max_iter: 100, initial_active: InitialActive::FromIterate }
    }
}

/// Iteration record of a semi-smooth Newton solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactState {
    pub iterations: usize,
    pub converged: bool,
    /// `|R| / |F|` after each step.
    pub residual_history: Vec<f64>,
    /// Active flags at the final iterate.
    pub active: Vec<bool>,
    /// Why the iteration stopped early, if it did.
    pub failure: Option<String>,
    /// Accepted by the rounding-floor test rather than the residual tolerance.
    pub at_floor: bool,
}

impl ContactState {
    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Semi-smooth Newton on `K u - F + contact(u) = 0`.
///
/// Converged when the active set did not change in the last step and either the
/// relative residual is below `tol` or the correction is below `step_tol` relative
/// to the iterate. Nonconvergence is reported in the state, not as an error.
pub fn semismooth_newton(
    system: &AssembledSystem,
    points: &[ContactPoint],
    options: &NewtonOptions,
    reduction: Option<&DofReduction>,
    initial: Option<&[f64]>,
) -> Result<(FieldSolution, ContactState), ContactError> {
    let n = system.dim();
    let identity = DofReduction::identity(n);
    let red = reduction.unwrap_or(&identity);
    if red.full_dim() != n {
        return Err(ContactError::Unsupported("reduction does not match the system size".into()));
    }
    let mut u = match initial {
        Some(x) => red.expand(&red.restrict(x)),
        None => vec![0.0; n],
    };
    let fnorm = norm(&red.reduce_vector(&system.rhs)).max(f64::MIN_POSITIVE);
    let k = system.matrix();
    let base_coo = system.triplets();
    let sym = if options.theta == 1.0 { system.symmetry() } else { Symmetry::Nonsymmetric };
    let mut state = ContactState::default();
    let mut active: Vec<bool> = match options.initial_active {
        InitialActive::AllActive => vec![true; points.len()],
        InitialActive::FromIterate => contact_contribution(points, &u, options.theta, options.gamma, None)?.2,
    };
    for it in 1..=options.max_iter {
        state.iterations = it;
        let (rc, jc, _) = contact_contribution(points, &u, options.theta, options.gamma, Some(&active))?;
        let mut r: Vec<f64> = k.mul_vec(&u).iter().zip(&system.rhs).map(|(a, b)| a - b).collect();
        for (a, b) in r.iter_mut().zip(rc) {
            *a += b;
        }
        let mut coo = base_coo.clone();
        coo.extend_from(&jc);
        let j = red.reduce_matrix(&coo.to_csr(sym));
        let rr = red.reduce_vector(&r);
        let du = match solve_linear(&j, &rr) {
            Ok(du) => du,
            Err(e) => {
                state.failure = Some(format!("linear solve failed: {e}"));
                break;
            }
        };
        let step = norm(&du);
        for (x, d) in u.iter_mut().zip(red.expand(&du)) {
            *x -= d;
        }
        let (rc, _, new_active) = contact_contribution(points, &u, options.theta, options.gamma, None)?;
        let mut r: Vec<f64> = k.mul_vec(&u).iter().zip(&system.rhs).map(|(a, b)| a - b).collect();
        for (a, b) in r.iter_mut().zip(rc) {
            *a += b;
        }
        let rel = norm(&red.reduce_vector(&r)) / fnorm;
        state.residual_history.push(rel);
        let stable = new_active == active;
        active = new_active;
        if !rel.is_finite() || rel > 1e14 {
            state.failure = Some("iterates diverged".into());
            break;
        }
        if stable && rel <= options.tol {
            state.converged = true;
            break;
        }
        if stable && step <= options.step_tol * norm(&red.restrict(&u)) {
            state.converged = true;
            state.at_floor = true;
            break;
        }
    }
    if !state.converged && state.failure.is_none() {
        state.failure = Some(format!("no convergence in {} iterations", options.max_iter));
    }
    state.active = active;
    Ok((FieldSolution::new(u, system.dof_map.clone()), state))
}
