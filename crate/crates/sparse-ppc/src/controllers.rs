//! The two sparse packetized predictive controllers.
//!
//! * ℓ²-constrained ℓ⁰: `min ‖U‖₀ s.t. ‖M U − K x‖₂² ≤ xᵀ Π x`, solved by
//!   orthogonal matching pursuit. The weight Π = Π* + ξ comes out of the
//!   Riccati-based design rule, with Π* = P − Q for the r = 0 solution P.
//! * unconstrained ℓ¹-ℓ²: `min ‖M U − K x‖₂² + ‖x‖_Q² + ν‖U‖₁`, solved by
//!   FISTA with adaptive restart.
//!
//! Designs are immutable after synthesis and safe to share across
//! simulation runs; the solvers are pure functions of `(design, x)`.

use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::model::{build_lifted, ControlPacket, LiftedSystem, ModelError, PlantModel};
use crate::numerics::{
    dot, lstsq, solve_dare, DareProblem, Mat, NumericsError, SymMatrix,
};

/// Relative slack applied to the ℓ⁰ feasibility constraint; strict
/// floating-point inequality testing needs explicit headroom.
pub const OMP_FEASIBILITY_SLACK: f64 = 1e-9;

/// Default FISTA stopping tolerance (relative objective change, and the
/// scale of the subgradient optimality check).
pub const FISTA_DEFAULT_TOL: f64 = 1e-10;

/// Default FISTA iteration cap.
pub const FISTA_DEFAULT_MAX_ITER: usize = 5000;

const DARE_TOL: f64 = 1e-11;
const DARE_MAX_ITER: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("design synthesis failed: {0}")]
    Synthesis(String),
    #[error(
        "infeasible l0 instance: full-support residual {residual:.6e} above threshold \
         {threshold:.6e}"
    )]
    Infeasible { residual: f64, threshold: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Outcome bookkeeping shared by both solvers.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub iterations: usize,
    /// Squared constraint residual for OMP, full objective for FISTA.
    pub final_objective_or_residual: f64,
    pub converged: bool,
    pub support_size: usize,
}

/// Parameter bundle for the ℓ²-constrained ℓ⁰ controller.
#[derive(Clone, Debug)]
pub struct L0Design {
    q: SymMatrix,
    p: SymMatrix,
    pi_star: SymMatrix,
    xi: SymMatrix,
    pi: SymMatrix,
    lifted: LiftedSystem,
    condition_ok: bool,
    phi1: f64,
    c1: f64,
}

impl L0Design {
    pub fn q(&self) -> &SymMatrix {
        &self.q
    }
    pub fn p(&self) -> &SymMatrix {
        &self.p
    }
    pub fn pi_star(&self) -> &SymMatrix {
        &self.pi_star
    }
    pub fn xi(&self) -> &SymMatrix {
        &self.xi
    }
    pub fn pi(&self) -> &SymMatrix {
        &self.pi
    }
    pub fn lifted(&self) -> &LiftedSystem {
        &self.lifted
    }
    /// Whether the synthesized ξ satisfies the strict contraction condition
    /// required for the practical-stability bound.
    pub fn condition_ok(&self) -> bool {
        self.condition_ok
    }
    pub fn phi1(&self) -> f64 {
        self.phi1
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
}

/// Parameter bundle for the unconstrained ℓ¹-ℓ² controller.
#[derive(Clone, Debug)]
pub struct L1L2Design {
    q: SymMatrix,
    nu: f64,
    r: f64,
    zeta: f64,
    p: SymMatrix,
    lifted: LiftedSystem,
    lipschitz: f64,
}

impl L1L2Design {
    pub fn q(&self) -> &SymMatrix {
        &self.q
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn zeta(&self) -> f64 {
        self.zeta
    }
    pub fn p(&self) -> &SymMatrix {
        &self.p
    }
    pub fn lifted(&self) -> &LiftedSystem {
        &self.lifted
    }
    /// Gradient Lipschitz constant 2·λ_max(MᵀM) of the smooth part.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Full cost `‖MU − Kx‖₂² + ‖x‖_Q² + ν‖U‖₁` of a candidate packet.
    pub fn objective(&self, x: &[f64], inputs: &[f64]) -> f64 {
        self.lifted.prediction_cost(x, inputs)
            + self.q.quad_form(x)
            + self.nu * inputs.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Deadbeat-style state feedback `F = −(BᵀPB)⁻¹BᵀPA` associated with a
/// Riccati solution P.
pub fn controller_gain_f(p: &SymMatrix, plant: &PlantModel) -> Result<Vec<f64>, ControllerError> {
    let bv = plant.b().col(0);
    let pb = p.as_mat().matvec(&bv);
    let s = dot(&bv, &pb);
    if s <= 0.0 {
        return Err(ControllerError::Numerics(NumericsError::Singular(format!(
            "BᵀPB = {s:.3e} is not positive"
        ))));
    }
    Ok(plant.a().t_matvec(&pb).into_iter().map(|v| -v / s).collect())
}

/// Synthesize the ℓ⁰ controller design: solve the r = 0 Riccati equation,
/// set Π* = P − Q, and pick ξ. When `xi_scale` is absent, ξ defaults to
/// `((1−φ₁)⁴ λ_min(P) / (4 c₁)) I`, which meets the contraction condition
/// with a factor-of-two margin by construction.
pub fn synthesize_l0(
    plant: &PlantModel,
    n_steps: usize,
    q: &SymMatrix,
    xi_scale: Option<f64>,
) -> Result<L0Design, ControllerError> {
    let dare = DareProblem::new(plant.a().clone(), plant.b().clone(), q.clone(), 0.0)?;
    let p = solve_dare(&dare, DARE_TOL, DARE_MAX_ITER)?;

    let pi_star = SymMatrix::new(p.as_mat() - q.as_mat())?;
    let pi_star_lmin = pi_star.lambda_min()?;
    if pi_star_lmin < -1e-10 {
        return Err(ControllerError::Synthesis(format!(
            "P − Q has eigenvalue {pi_star_lmin:.3e}; Riccati solution does not dominate Q"
        )));
    }

    let lifted = build_lifted(plant, n_steps, q, &p)?;
    let (rho, c1) = analysis::contraction_constants(&p, q, &lifted)?;
    let phi1 = rho.sqrt();
    let lmin_p = p.lambda_min()?;

    let xi_value = match xi_scale {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(ControllerError::Parameter(format!(
                "xi scale must be positive, got {s}"
            )))
        }
        None => (1.0 - phi1).powi(4) * lmin_p / (4.0 * c1),
    };
    let xi = SymMatrix::scaled_identity(plant.dim(), xi_value);
    let pi = pi_star.add(&xi);
    let condition_ok = xi_value.sqrt() < (1.0 - phi1).powi(2) * lmin_p.sqrt() / c1.sqrt();

    Ok(L0Design {
        q: q.clone(),
        p,
        pi_star,
        xi,
        pi,
        lifted,
        condition_ok,
        phi1,
        c1,
    })
}

pub(crate) struct OmpOutcome {
    pub u: Vec<f64>,
    pub residual_sq: f64,
    /// Squared residual after 0, 1, 2, … greedy selections.
    pub residual_history: Vec<f64>,
}

/// Greedy core: grow the support by the column most correlated with the
/// residual (ties to the lowest index), re-fit by least squares, stop at
/// feasibility or full support.
pub(crate) fn omp_core(
    lifted: &LiftedSystem,
    pi: &SymMatrix,
    x: &[f64],
) -> Result<OmpOutcome, ControllerError> {
    let horizon = lifted.horizon();
    let m = lifted.m();
    let target = lifted.k().matvec(x);
    let budget = pi.quad_form(x).max(0.0);
    let threshold = budget + OMP_FEASIBILITY_SLACK * (1.0 + budget);

    let mut u = vec![0.0; horizon];
    let mut residual = target.clone();
    let mut residual_sq = dot(&residual, &residual);
    let mut history = vec![residual_sq];
    let mut support: Vec<usize> = Vec::new();

    while residual_sq > threshold && support.len() < horizon {
        let scores = m.t_matvec(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, score) in scores.iter().enumerate() {
            if support.contains(&j) {
                continue;
            }
            let mag = score.abs();
            if best.map_or(true, |(_, b)| mag > b) {
                best = Some((j, mag));
            }
        }
        let (pick, _) = best.expect("support not yet full");
        support.push(pick);

        let cols = m.select_cols(&support);
        let coefs = lstsq(&cols, &target)?;
        let fitted = cols.matvec(&coefs);
        residual = target.iter().zip(&fitted).map(|(t, f)| t - f).collect();
        residual_sq = dot(&residual, &residual);
        history.push(residual_sq);

        u = vec![0.0; horizon];
        for (&j, &c) in support.iter().zip(&coefs) {
            u[j] = c;
        }
    }

    if residual_sq > threshold {
        return Err(ControllerError::Infeasible {
            residual: residual_sq,
            threshold,
        });
    }

    Ok(OmpOutcome {
        u,
        residual_sq,
        residual_history: history,
    })
}

/// Solve the ℓ²-constrained ℓ⁰ problem by orthogonal matching pursuit.
pub fn solve_l0_omp(
    design: &L0Design,
    x: &[f64],
    origin_time: usize,
) -> Result<(ControlPacket, SolverReport), ControllerError> {
    let outcome = omp_core(&design.lifted, &design.pi, x)?;
    let iterations = outcome.residual_history.len() - 1;
    let packet = ControlPacket::new(outcome.u, origin_time)?;
    let report = SolverReport {
        iterations,
        final_objective_or_residual: outcome.residual_sq,
        converged: true,
        support_size: packet.l0_norm(),
    };
    Ok((packet, report))
}

/// Synthesize the ℓ¹-ℓ² controller design. P solves the Riccati equation
/// with the supplied input weight `r`; when `zeta` is absent it is derived
/// from `r = ν²N/ζ`, reading the coupling symbol as ν.
pub fn synthesize_l1l2(
    plant: &PlantModel,
    n_steps: usize,
    q: &SymMatrix,
    nu: f64,
    r: f64,
    zeta: Option<f64>,
) -> Result<L1L2Design, ControllerError> {
    if !(nu > 0.0) {
        return Err(ControllerError::Parameter(format!(
            "l1 weight nu must be positive, got {nu}"
        )));
    }
    let zeta = match zeta {
        Some(z) if z > 0.0 => z,
        Some(z) => {
            return Err(ControllerError::Parameter(format!(
                "zeta must be positive, got {z}"
            )))
        }
        None if r > 0.0 => nu * nu * n_steps as f64 / r,
        None => {
            return Err(ControllerError::Parameter(
                "zeta is undefined for r = 0; pass it explicitly".into(),
            ))
        }
    };

    let dare = DareProblem::new(plant.a().clone(), plant.b().clone(), q.clone(), r)?;
    let p = solve_dare(&dare, DARE_TOL, DARE_MAX_ITER)?;
    let lifted = build_lifted(plant, n_steps, q, &p)?;
    let lipschitz = 2.0 * lifted.mtm().lambda_max()?;

    Ok(L1L2Design {
        q: q.clone(),
        nu,
        r,
        zeta,
        p,
        lifted,
        lipschitz,
    })
}

fn soft_threshold(v: f64, level: f64) -> f64 {
    if v > level {
        v - level
    } else if v < -level {
        v + level
    } else {
        0.0
    }
}

/// Componentwise check of the ℓ¹ optimality condition at `u`: the smooth
/// gradient `2Mᵀ(MU − Kx)` must sit at `∓ν` on the support and inside
/// `[−ν, ν]` off it, up to `eps`.
fn subdifferential_ok(gram: &Mat, c: &[f64], u: &[f64], nu: f64, eps: f64) -> bool {
    let gu = gram.matvec(u);
    u.iter().zip(gu.iter().zip(c)).all(|(&uj, (&guj, &cj))| {
        let g = 2.0 * (guj - cj);
        if uj > 0.0 {
            (g + nu).abs() <= eps
        } else if uj < 0.0 {
            (g - nu).abs() <= eps
        } else {
            g.abs() <= nu + eps
        }
    })
}

/// Solve the ℓ¹-ℓ² problem with FISTA (constant step 1/L, Nesterov momentum,
/// restart on objective increase so the objective sequence never increases).
///
/// `converged` in the report means both the relative objective change fell
/// below `tol` and the subgradient condition holds with `eps = tol·(1+ν)`;
/// otherwise the best iterate found within `max_iter` is returned.
pub fn solve_l1l2_fista(
    design: &L1L2Design,
    x: &[f64],
    origin_time: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(ControlPacket, SolverReport), ControllerError> {
    if !(tol > 0.0) {
        return Err(ControllerError::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let horizon = design.lifted.horizon();
    let gram = design.lifted.mtm().as_mat();
    let kx = design.lifted.k().matvec(x);
    let c = design.lifted.m().t_matvec(&kx);
    let constant = dot(&kx, &kx) + design.q.quad_form(x);
    let nu = design.nu;
    let step = 1.0 / design.lipschitz;
    let shrink = nu * step;
    let eps = tol * (1.0 + nu);

    // Expanded objective UᵀGU − 2Uᵀc + const + ν‖U‖₁ avoids touching the
    // tall lifted matrices inside the loop.
    let objective = |u: &[f64]| -> f64 {
        let gu = gram.matvec(u);
        dot(u, &gu) - 2.0 * dot(u, &c) + constant + nu * u.iter().map(|v| v.abs()).sum::<f64>()
    };
    let prox_step = |from: &[f64]| -> Vec<f64> {
        let gf = gram.matvec(from);
        from.iter()
            .zip(gf.iter().zip(&c))
            .map(|(&f, (&g, &cj))| soft_threshold(f - step * 2.0 * (g - cj), shrink))
            .collect()
    };

    let mut u = vec![0.0; horizon];
    let mut obj = objective(&u);
    if subdifferential_ok(gram, &c, &u, nu, eps) {
        let packet = ControlPacket::new(u, origin_time)?;
        let report = SolverReport {
            iterations: 0,
            final_objective_or_residual: obj,
            converged: true,
            support_size: packet.l0_norm(),
        };
        return Ok((packet, report));
    }

    let mut y = u.clone();
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = max_iter;

    for iter in 1..=max_iter {
        let mut cand = prox_step(&y);
        let mut obj_cand = objective(&cand);
        if obj_cand > obj {
            // Momentum overshot: restart from the last accepted iterate. A
            // plain proximal step from u cannot increase the objective.
            t = 1.0;
            cand = prox_step(&u);
            obj_cand = objective(&cand);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = cand
            .iter()
            .zip(&u)
            .map(|(&new, &old)| new + beta * (new - old))
            .collect();
        let rel_change = (obj - obj_cand).abs() / obj_cand.abs().max(1.0);
        u = cand;
        obj = obj_cand;
        t = t_next;

        if rel_change < tol && subdifferential_ok(gram, &c, &u, nu, eps) {
            converged = true;
            iterations = iter;
            break;
        }
    }

    let packet = ControlPacket::new(u, origin_time)?;
    let report = SolverReport {
        iterations,
        final_objective_or_residual: obj,
        converged,
        support_size: packet.l0_norm(),
    };
    Ok((packet, report))
}
