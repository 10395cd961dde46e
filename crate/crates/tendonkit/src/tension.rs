//! Tension distribution: turn a desired joint torque into non-negative
//! wire tensions.
//!
//! Wires only pull, so a torque request `τ_ref` is realized by solving
//!
//! ```text
//! minimize  ‖f‖² + (τ_ref + Gᵀf)ᵀ Λ (τ_ref + Gᵀf)
//! subject to f_min ≤ f ≤ f_max     (elementwise)
//! ```
//!
//! where `G` is the muscle Jacobian (torque convention `τ = −Gᵀf`). The
//! first term keeps pretension low, the second — weighted heavily by the
//! diagonal matrix `Λ` — makes the realized torque track the request. The
//! Hessian `2(I + GΛGᵀ)` is positive definite for any `G`, so the problem
//! has a unique solution.
//!
//! Problems here are tiny (R ≤ 10 wires, N ≤ 7 joints) and solved at
//! control rate, so the solver is a dense primal active-set method with
//! exact termination, warm-started from the previous solve.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default torque-tracking weight (per joint): large enough that torque
/// tracking dominates pretension minimization by several orders.
pub const DEFAULT_LAMBDA: f64 = 1e6;

#[derive(Debug, Clone, Error)]
pub enum TensionError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("problem data contains NaN or infinity")]
    NonFinite,
    #[error("route {route}: lower bound {lo} exceeds upper bound {hi}")]
    InfeasibleBounds { route: usize, lo: f64, hi: f64 },
    #[error("torque weights must be positive and finite")]
    BadWeight,
    #[error("quadratic subproblem factorization failed")]
    NumericalBreakdown,
}

/// One tension-distribution instance.
#[derive(Debug, Clone)]
pub struct TensionProblem {
    /// Muscle Jacobian, R×N (row per wire).
    pub g: DMatrix<f64>,
    /// Desired joint torque, length N.
    pub tau_ref: DVector<f64>,
    /// Per-wire lower tension bounds, length R.
    pub f_min: DVector<f64>,
    /// Per-wire upper tension bounds, length R.
    pub f_max: DVector<f64>,
    /// Diagonal of the torque-tracking weight matrix Λ, length N.
    pub lambda: DVector<f64>,
}

impl TensionProblem {
    /// Builds a problem with the default uniform torque weight.
    pub fn new(
        g: DMatrix<f64>,
        tau_ref: DVector<f64>,
        f_min: DVector<f64>,
        f_max: DVector<f64>,
    ) -> TensionProblem {
        let n = g.ncols();
        TensionProblem { g, tau_ref, f_min, f_max, lambda: DVector::from_element(n, DEFAULT_LAMBDA) }
    }

    /// Replaces the torque weight with a uniform value.
    pub fn with_uniform_lambda(mut self, w: f64) -> TensionProblem {
        self.lambda = DVector::from_element(self.g.ncols(), w);
        self
    }

    /// Replaces the torque weight diagonal.
    pub fn with_lambda(mut self, lambda: DVector<f64>) -> TensionProblem {
        self.lambda = lambda;
        self
    }

    pub fn n_wires(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_joints(&self) -> usize {
        self.g.ncols()
    }

    pub fn validate(&self) -> Result<(), TensionError> {
        let (r, n) = self.g.shape();
        if r == 0 || n == 0 {
            return Err(TensionError::DimensionMismatch { what: "g", expected: 1, got: 0 });
        }
        for (what, len, expected) in [
            ("tau_ref", self.tau_ref.len(), n),
            ("lambda", self.lambda.len(), n),
            ("f_min", self.f_min.len(), r),
            ("f_max", self.f_max.len(), r),
        ] {
            if len != expected {
                return Err(TensionError::DimensionMismatch { what, expected, got: len });
            }
        }
        let finite = self.g.iter().all(|x| x.is_finite())
            && self.tau_ref.iter().all(|x| x.is_finite())
            && self.f_min.iter().all(|x| x.is_finite())
            && self.f_max.iter().all(|x| x.is_finite());
        if !finite {
            return Err(TensionError::NonFinite);
        }
        if !self.lambda.iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(TensionError::BadWeight);
        }
        for i in 0..r {
            if self.f_min[i] > self.f_max[i] {
                return Err(TensionError::InfeasibleBounds {
                    route: i,
                    lo: self.f_min[i],
                    hi: self.f_max[i],
                });
            }
        }
        Ok(())
    }

    /// Hessian of the objective: `2(I + GΛGᵀ)`.
    fn hessian(&self) -> DMatrix<f64> {
        let r = self.n_wires();
        let mut glg = DMatrix::zeros(r, r);
        for k in 0..self.n_joints() {
            let col = self.g.column(k);
            glg += col * col.transpose() * self.lambda[k];
        }
        (DMatrix::identity(r, r) + glg) * 2.0
    }

    /// Linear term of the objective: `2GΛτ_ref`.
    fn linear(&self) -> DVector<f64> {
        let lam_tau = self.lambda.component_mul(&self.tau_ref);
        (&self.g * lam_tau) * 2.0
    }

    /// Objective value at `f` (including the constant term).
    pub fn objective(&self, f: &DVector<f64>) -> f64 {
        let r = &self.tau_ref + self.g.transpose() * f;
        f.norm_squared() + r.component_mul(&self.lambda).dot(&r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Exact KKT point found.
    Optimal,
    /// Iteration budget exhausted; `f` is the best feasible iterate.
    MaxIterations,
}

/// Result of one tension solve.
#[derive(Debug, Clone)]
pub struct TensionSolution {
    /// Distributed tensions, within the box.
    pub f: DVector<f64>,
    /// Torque-tracking residual `τ_ref + Gᵀf` (zero when the request is
    /// realized exactly).
    pub torque_residual: DVector<f64>,
    /// Scaled projected-gradient stationarity residual at `f`.
    pub kkt_residual: f64,
    /// Active-set iterations spent (0 means the warm start was optimal).
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Free,
    AtLo,
    AtHi,
}

/// Warm-started tension solver. Reusing one solver across control ticks
/// carries the previous solution and active set forward, which typically
/// terminates the next solve in zero or one iteration.
#[derive(Debug, Clone, Default)]
pub struct TensionSolver {
    warm_f: Option<DVector<f64>>,
}

impl TensionSolver {
    pub fn new() -> TensionSolver {
        TensionSolver { warm_f: None }
    }

    /// Drops the warm start.
    pub fn reset(&mut self) {
        self.warm_f = None;
    }

    pub fn solve(&mut self, p: &TensionProblem) -> Result<TensionSolution, TensionError> {
        p.validate()?;
        let r = p.n_wires();
        let start = match &self.warm_f {
            Some(f) if f.len() == r => f.clone(),
            _ => DVector::zeros(r),
        };
        let sol = active_set_solve(p, start)?;
        self.warm_f = Some(sol.f.clone());
        Ok(sol)
    }
}

/// One-shot solve without warm start.
pub fn solve_tension(p: &TensionProblem) -> Result<TensionSolution, TensionError> {
    TensionSolver::new().solve(p)
}

fn active_set_solve(p: &TensionProblem, start: DVector<f64>) -> Result<TensionSolution, TensionError> {
    let r = p.n_wires();
    let h = p.hessian();
    let c = p.linear();
    let scale = c.amax().max(1.0);

    // Clamp the start into the box and classify each variable; variables
    // sitting exactly on a bound begin active, which is what makes warm
    // starts effective.
    let mut f = start;
    let mut state = vec![VarState::Free; r];
    for i in 0..r {
        if f[i] <= p.f_min[i] {
            f[i] = p.f_min[i];
            state[i] = VarState::AtLo;
        } else if f[i] >= p.f_max[i] {
            f[i] = p.f_max[i];
            state[i] = VarState::AtHi;
        }
    }

    let max_iter = 30 * (r + 2);
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    while iterations < max_iter {
        iterations += 1;

        // Equality-constrained subproblem on the free set:
        // H_FF x_F = −c_F − H_FA f_A.
        let free: Vec<usize> = (0..r).filter(|&i| state[i] == VarState::Free).collect();
        let mut target = f.clone();
        if !free.is_empty() {
            let nf = free.len();
            let mut hff = DMatrix::zeros(nf, nf);
            let mut rhs = DVector::zeros(nf);
            for (a, &i) in free.iter().enumerate() {
                rhs[a] = -c[i];
                for j in 0..r {
                    if state[j] == VarState::Free {
                        let b = free.iter().position(|&k| k == j).unwrap();
                        hff[(a, b)] = h[(i, j)];
                    } else {
                        rhs[a] -= h[(i, j)] * f[j];
                    }
                }
            }
            let x = hff.cholesky().ok_or(TensionError::NumericalBreakdown)?.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                target[i] = x[a];
            }
        }

        // Step toward the subproblem solution, stopping at the first bound.
        let step_size: f64 = free.iter().map(|&i| (target[i] - f[i]).abs()).fold(0.0, f64::max);
        let bound_scale = p.f_max.amax().max(p.f_min.amax()).max(1.0);
        if step_size > 1e-13 * bound_scale {
            let mut alpha = 1.0_f64;
            let mut blocking: Option<(usize, VarState)> = None;
            for &i in &free {
                let d = target[i] - f[i];
                if d < 0.0 && target[i] < p.f_min[i] {
                    let a = (p.f_min[i] - f[i]) / d;
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, VarState::AtLo));
                    }
                } else if d > 0.0 && target[i] > p.f_max[i] {
                    let a = (p.f_max[i] - f[i]) / d;
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, VarState::AtHi));
                    }
                }
            }
            for &i in &free {
                f[i] += alpha * (target[i] - f[i]);
            }
            if let Some((i, s)) = blocking {
                // Snap exactly onto the bound so feasibility is exact.
                f[i] = if s == VarState::AtLo { p.f_min[i] } else { p.f_max[i] };
                state[i] = s;
                continue;
            }
            // Full step taken: free variables are now stationary; fall
            // through to the multiplier check on the next loop entry.
        }

        // Stationary on the free set. Check bound multipliers: gradient
        // must point into the feasible box at every active bound.
        let grad = &h * &f + &c;
        let mut worst = -1e-12 * scale;
        let mut release: Option<usize> = None;
        for i in 0..r {
            if p.f_min[i] == p.f_max[i] {
                continue; // pinned variable, never released
            }
            let v = match state[i] {
                VarState::AtLo => grad[i],
                VarState::AtHi => -grad[i],
                VarState::Free => continue,
            };
            if v < worst {
                worst = v;
                release = Some(i);
            }
        }
        match release {
            Some(i) => state[i] = VarState::Free,
            None => {
                status = SolveStatus::Optimal;
                break;
            }
        }
    }

    let torque_residual = &p.tau_ref + p.g.transpose() * &f;
    let kkt = kkt_residual(p, &f);
    Ok(TensionSolution { f, torque_residual, kkt_residual: kkt, iterations, status })
}

/// Scaled stationarity residual of a feasible point: the ∞-norm of the
/// projected gradient (gradient components must be ≥ 0 at a lower bound,
/// ≤ 0 at an upper bound, and 0 in the interior), divided by
/// `max(1, ‖2GΛτ_ref‖∞)` so the certificate is insensitive to the size of
/// the torque weights.
pub fn kkt_residual(p: &TensionProblem, f: &DVector<f64>) -> f64 {
    let grad = p.hessian() * f + p.linear();
    let scale = p.linear().amax().max(1.0);
    let mut worst = 0.0_f64;
    for i in 0..p.n_wires() {
        let tol = 1e-9 * (1.0 + p.f_min[i].abs().max(p.f_max[i].abs()));
        let at_lo = f[i] - p.f_min[i] <= tol;
        let at_hi = p.f_max[i] - f[i] <= tol;
        let v = match (at_lo, at_hi) {
            (true, true) => 0.0, // pinned by a degenerate box
            (true, false) => (-grad[i]).max(0.0),
            (false, true) => grad[i].max(0.0),
            (false, false) => grad[i].abs(),
        };
        worst = worst.max(v);
    }
    worst / scale
}
