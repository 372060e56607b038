//! Disturbed LTI plant `x(k+1) = A x(k) + B u(k) + w(k)`, disturbance
//! generation, nominal state prediction, and the lifted horizon matrices
//! used by both sparse controllers.
//!
//! The lifted system stacks the horizon-N predictions into
//! `[x̃₁; …; x̃_N] = Γ U + Λ x` and carries the weighted maps
//! `M = Q̂^{1/2} Γ`, `K = −Q̂^{1/2} Λ` with `Q̂ = diag{Q, …, Q, P}`, so that
//! `‖M U − K x‖₂²` equals the quadratic prediction cost.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, norm2, Mat, NumericsError, SymMatrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("pair (A, B) is not reachable")]
    NotReachable,
    #[error("disturbance bound must be nonnegative, got {0}")]
    NegativeBound(f64),
    #[error("disturbance mode 'none' requires W_m = 0, got {0}")]
    NoneModeBound(f64),
    #[error("disturbance norm {norm:.6e} exceeds the bound {bound:.6e}")]
    DisturbanceBound { norm: f64, bound: f64 },
    #[error("lifted input map lost column rank")]
    RankDeficient,
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("control packet entries must be finite")]
    NonFinitePacket,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Support of the disturbance sequence `w(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceMode {
    /// Uniform on the closed ℓ² ball of radius `W_m`.
    L2BallUniform,
    /// Each component i.i.d. uniform on `[-W_m, W_m]`; the ℓ² norm can then
    /// reach `√n · W_m`.
    PerComponentUniform,
    /// No disturbance.
    None,
}

/// Single-input discrete-time plant with a norm-bounded disturbance.
#[derive(Clone, Debug)]
pub struct PlantModel {
    a: Mat,
    b: Mat,
    w_m: f64,
    mode: DisturbanceMode,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat, w_m: f64, mode: DisturbanceMode) -> Result<Self, ModelError> {
        if !a.is_square() || b.nrows() != a.nrows() || b.ncols() != 1 {
            return Err(ModelError::Dimension(format!(
                "need square A and n×1 B, got A {}x{}, B {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if !(w_m >= 0.0) {
            return Err(ModelError::NegativeBound(w_m));
        }
        if mode == DisturbanceMode::None && w_m != 0.0 {
            return Err(ModelError::NoneModeBound(w_m));
        }
        if !numerics::is_reachable(&a, &b)? {
            return Err(ModelError::NotReachable);
        }
        Ok(Self { a, b, w_m, mode })
    }

    /// The 4-state example plant used by the simulation experiment.
    pub fn paper_example(w_m: f64, mode: DisturbanceMode) -> Result<Self, ModelError> {
        let a = Mat::from_rows(&[
            vec![0.3966, -0.4586, -0.0250, -0.7958],
            vec![0.7459, 0.8061, -0.0983, 0.7943],
            vec![-0.9451, -0.3111, -0.8236, 0.2473],
            vec![0.1551, -1.3821, -1.9151, 0.0369],
        ]);
        let b = Mat::column(&[1.0617, -0.1986, -0.3184, 0.5562]);
        Self::new(a, b, w_m, mode)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn w_m(&self) -> f64 {
        self.w_m
    }

    pub fn disturbance_mode(&self) -> DisturbanceMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Same plant with a different disturbance bound.
    pub fn with_w_m(&self, w_m: f64) -> Result<Self, ModelError> {
        Self::new(self.a.clone(), self.b.clone(), w_m, self.mode)
    }

    /// Largest ℓ² norm any sampled disturbance can attain. Per-component
    /// sampling inflates the bound to `√n · W_m`; the stability certificates
    /// must use this value for their hypotheses to hold.
    pub fn effective_l2_bound(&self) -> f64 {
        match self.mode {
            DisturbanceMode::L2BallUniform => self.w_m,
            DisturbanceMode::PerComponentUniform => (self.dim() as f64).sqrt() * self.w_m,
            DisturbanceMode::None => 0.0,
        }
    }
}

/// One transmitted control packet: the full horizon of tentative inputs
/// computed from one state measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPacket {
    u: Vec<f64>,
    origin_time: usize,
}

impl ControlPacket {
    pub fn new(u: Vec<f64>, origin_time: usize) -> Result<Self, ModelError> {
        if u.is_empty() {
            return Err(ModelError::EmptyHorizon);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinitePacket);
        }
        Ok(Self { u, origin_time })
    }

    pub fn inputs(&self) -> &[f64] {
        &self.u
    }

    pub fn origin_time(&self) -> usize {
        self.origin_time
    }

    pub fn horizon(&self) -> usize {
        self.u.len()
    }

    /// Number of nonzero entries.
    pub fn l0_norm(&self) -> usize {
        self.u.iter().filter(|v| **v != 0.0).count()
    }
}

/// Apply one plant step `A x + B u + w`, checking the disturbance against
/// the mode's ℓ² support.
pub fn step_plant(
    plant: &PlantModel,
    x: &[f64],
    u: f64,
    w: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let n = plant.dim();
    if x.len() != n || w.len() != n {
        return Err(ModelError::Dimension(format!(
            "state/disturbance length must be {n}"
        )));
    }
    let bound = plant.effective_l2_bound();
    let wn = norm2(w);
    if wn > bound + 1e-12 {
        return Err(ModelError::DisturbanceBound { norm: wn, bound });
    }
    let mut next = plant.a.matvec(x);
    let bcol = plant.b.col(0);
    for i in 0..n {
        next[i] += bcol[i] * u + w[i];
    }
    Ok(next)
}

/// Draw one disturbance vector according to the plant's mode. Deterministic
/// given the generator state.
pub fn sample_disturbance<R: Rng + ?Sized>(plant: &PlantModel, rng: &mut R) -> Vec<f64> {
    let n = plant.dim();
    match plant.mode {
        DisturbanceMode::None => vec![0.0; n],
        DisturbanceMode::PerComponentUniform => {
            if plant.w_m == 0.0 {
                return vec![0.0; n];
            }
            (0..n)
                .map(|_| rng.random_range(-plant.w_m..=plant.w_m))
                .collect()
        }
        DisturbanceMode::L2BallUniform => {
            if plant.w_m == 0.0 {
                return vec![0.0; n];
            }
            // Direction from a normalized Gaussian, radius from the inverse
            // CDF of the ball's radial density.
            loop {
                let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let gn = norm2(&g);
                if gn > 1e-12 {
                    let radius = plant.w_m * rng.random::<f64>().powf(1.0 / n as f64);
                    return g.iter().map(|v| v / gn * radius).collect();
                }
            }
        }
    }
}

/// Nominal (disturbance-free) predictions `x̃₁, …, x̃_N` under the recursion
/// `x̃_{i+1} = A x̃_i + B u_i` with `x̃₀ = x`.
pub fn predict_states(plant: &PlantModel, x: &[f64], inputs: &[f64]) -> Vec<Vec<f64>> {
    let bcol = plant.b.col(0);
    let mut out = Vec::with_capacity(inputs.len());
    let mut cur = x.to_vec();
    for &u in inputs {
        let mut next = plant.a.matvec(&cur);
        for (nx, bi) in next.iter_mut().zip(&bcol) {
            *nx += bi * u;
        }
        out.push(next.clone());
        cur = next;
    }
    out
}

/// Horizon-N stacked system. Immutable after construction.
#[derive(Clone, Debug)]
pub struct LiftedSystem {
    horizon: usize,
    state_dim: usize,
    gamma: Mat,
    lambda: Mat,
    qhat: Mat,
    m: Mat,
    k: Mat,
    mtm: SymMatrix,
    m_pinv: Mat,
}

impl LiftedSystem {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn gamma(&self) -> &Mat {
        &self.gamma
    }

    /// Row block `i` of Γ (an n×N matrix), i.e. the input-to-`x̃_{i+1}` map.
    pub fn gamma_block(&self, i: usize) -> Mat {
        let n = self.state_dim;
        Mat::from_fn(n, self.horizon, |r, c| self.gamma[(i * n + r, c)])
    }

    pub fn lambda(&self) -> &Mat {
        &self.lambda
    }

    pub fn qhat(&self) -> &Mat {
        &self.qhat
    }

    pub fn m(&self) -> &Mat {
        &self.m
    }

    pub fn k(&self) -> &Mat {
        &self.k
    }

    /// Cached Gram matrix MᵀM.
    pub fn mtm(&self) -> &SymMatrix {
        &self.mtm
    }

    /// Cached pseudo-inverse M† = (MᵀM)⁻¹Mᵀ.
    pub fn m_pinv(&self) -> &Mat {
        &self.m_pinv
    }

    /// `‖M U − K x‖₂²`, the quadratic prediction cost of a candidate packet.
    pub fn prediction_cost(&self, x: &[f64], inputs: &[f64]) -> f64 {
        let mu = self.m.matvec(inputs);
        let kx = self.k.matvec(x);
        mu.iter().zip(&kx).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// Build Γ, Λ, Q̂ and the weighted maps M, K for a horizon of `n_steps`.
pub fn build_lifted(
    plant: &PlantModel,
    n_steps: usize,
    q: &SymMatrix,
    p: &SymMatrix,
) -> Result<LiftedSystem, ModelError> {
    if n_steps == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    let n = plant.dim();
    if q.dim() != n || p.dim() != n {
        return Err(ModelError::Dimension(format!(
            "weights must be {n}x{n}"
        )));
    }
    if q.lambda_min()? <= 0.0 || p.lambda_min()? <= 0.0 {
        return Err(ModelError::Numerics(NumericsError::NotPositiveDefinite(
            q.lambda_min()?.min(p.lambda_min()?),
        )));
    }

    // Powers of A up to A^N.
    let mut powers = Vec::with_capacity(n_steps + 1);
    powers.push(Mat::identity(n));
    for i in 0..n_steps {
        powers.push(&powers[i] * plant.a());
    }

    let mut gamma = Mat::zeros(n_steps * n, n_steps);
    let mut lambda = Mat::zeros(n_steps * n, n);
    for i in 0..n_steps {
        lambda.set_block(i * n, 0, &powers[i + 1]);
        for j in 0..=i {
            let col = (&powers[i - j] * plant.b()).col(0);
            for r in 0..n {
                gamma[(i * n + r, j)] = col[r];
            }
        }
    }

    let q_sqrt = q.sqrt()?;
    let p_sqrt = p.sqrt()?;
    let mut qhat = Mat::zeros(n_steps * n, n_steps * n);
    let mut m = Mat::zeros(n_steps * n, n_steps);
    let mut k = Mat::zeros(n_steps * n, n);
    for i in 0..n_steps {
        let (weight, weight_sqrt) = if i < n_steps - 1 {
            (q.as_mat(), &q_sqrt)
        } else {
            (p.as_mat(), &p_sqrt)
        };
        qhat.set_block(i * n, i * n, weight);
        let gblock = Mat::from_fn(n, n_steps, |r, c| gamma[(i * n + r, c)]);
        let lblock = Mat::from_fn(n, n, |r, c| lambda[(i * n + r, c)]);
        m.set_block(i * n, 0, &(weight_sqrt * &gblock));
        k.set_block(i * n, 0, &(weight_sqrt * &lblock).scale(-1.0));
    }

    let mtm = SymMatrix::new(&m.t() * &m)?;
    let m_pinv = numerics::pinv_tall(&m).map_err(|e| match e {
        NumericsError::RankDeficient(_) => ModelError::RankDeficient,
        other => ModelError::Numerics(other),
    })?;

    Ok(LiftedSystem {
        horizon: n_steps,
        state_dim: n,
        gamma,
        lambda,
        qhat,
        m,
        k,
        mtm,
        m_pinv,
    })
}
