//! Similarity exponents and the kernel of the profile equation
//!
//!   U^m(z) = ∫_z^∞ K(z, ρ) U(ρ) dρ,   K(z, ρ) = ρ Q(z/ρ),
//!
//! with Q(η) = Γ(1-α)^{-1} ∫_η^1 (1 - σ^{1/b})^{-α} σ^{1-d} dσ.

use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::Mesh;
use crate::specfun::{beta, gamma_fn, gamma_ratio, inc_beta, integrate, rgamma, QuadratureSpec, Singular};

/// Model parameters: fractional order, diffusion exponent, dimension, mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub alpha: f64,
    pub m: f64,
    pub d: u32,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Slow,
    Linear,
    Fast,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Slow => "slow",
            Regime::Linear => "linear",
            Regime::Fast => "fast",
        })
    }
}

/// m_c = max(0, (d-2)/d).
pub fn critical_exponent(d: u32) -> f64 {
    (d as f64 - 2.0).max(0.0) / d as f64
}

impl Params {
    pub fn new(alpha: f64, m: f64, d: u32, mass: f64) -> Result<Self> {
        let p = Self { alpha, m, d, mass };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Param(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.d < 1 {
            return Err(Error::Param("dimension d must be at least 1".into()));
        }
        let mc = critical_exponent(self.d);
        if !(self.m > mc) || !self.m.is_finite() {
            return Err(Error::Param(format!(
                "m must exceed the critical exponent m_c = {mc} for d = {}, got m = {}",
                self.d, self.m
            )));
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::Param(format!("mass M must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.m > 1.0 {
            Regime::Slow
        } else if self.m < 1.0 {
            Regime::Fast
        } else {
            Regime::Linear
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    pub fn with_m(&self, m: f64) -> Self {
        Self { m, ..*self }
    }

    pub fn b(&self) -> f64 {
        self.alpha / (2.0 + self.d as f64 * (self.m - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub a: f64,
    pub b: f64,
}

pub fn exponents(p: &Params) -> Result<Exponents> {
    p.validate()?;
    let b = p.b();
    Ok(Exponents { a: p.d as f64 * b, b })
}

fn quad_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-13, max_subdivisions: 4000 }
}

// Leading behaviour (b^α/Γ(2-α)) ε^{1-α} (1 + c₁(1-α)/(2-α) ε) for ε = 1-η → 0.
fn q_near_one(p: &Params, b: f64, eps: f64) -> f64 {
    let a = p.alpha;
    let c1 = a * (1.0 / b - 1.0) / 2.0 + (p.d as f64 - 1.0);
    b.powf(a) * rgamma(2.0 - a) * eps.powf(1.0 - a) * (1.0 + c1 * (1.0 - a) / (2.0 - a) * eps)
}

// Q(η) without argument checks; η ∈ [0, 1].
pub(crate) fn q_unchecked(p: &Params, b: f64, eta: f64) -> f64 {
    if p.alpha == 1.0 {
        return b;
    }
    if eta >= 1.0 {
        return 0.0;
    }
    let eps = 1.0 - eta;
    if eps < 1e-8 {
        return q_near_one(p, b, eps);
    }
    let a = p.alpha;
    if p.d == 1 {
        if eta == 0.0 {
            return gamma_ratio(b + 1.0, b + 1.0 - a);
        }
        // (b/Γ(1-α)) B_{1-η^{1/b}}(1-α, b), via the complement when η^{1/b} is small
        let y = (eta.ln() / b).exp();
        let bx = if y < 0.5 {
            beta(1.0 - a, b) - inc_beta(y, b, 1.0 - a).unwrap_or(f64::NAN)
        } else {
            inc_beta(-(eta.ln() / b).exp_m1(), 1.0 - a, b).unwrap_or(f64::NAN)
        };
        return b * rgamma(1.0 - a) * bx;
    }
    if eta == 0.0 {
        return f64::INFINITY;
    }
    q_integral(p, b, eta)
}

// Γ(1-α)^{-1} ∫_η^1 (1-σ^{1/b})^{-α} σ^{1-d} dσ for any d
fn q_integral(p: &Params, b: f64, eta: f64) -> f64 {
    let a = p.alpha;
    // u = ln σ turns the η → 0 end into a smooth (possibly long) range
    let dm2 = 2.0 - p.d as f64;
    let f = |u: f64| (-(u / b).exp_m1()).powf(-a) * (dm2 * u).exp();
    let v = match integrate(&f, eta.ln(), 0.0, &quad_spec(), Singular::UPPER) {
        Ok((v, _)) => v,
        Err(Error::NoConvergence { value, .. }) => value,
        Err(_) => f64::NAN,
    };
    v * rgamma(1.0 - a)
}

/// Q(η) from its defining integral, whatever the dimension; the d = 1 closed
/// form in q_kernel is checked against this.
pub fn q_kernel_quadrature(p: &Params, eta: f64) -> Result<f64> {
    p.validate()?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("q_kernel_quadrature needs eta in (0, 1), got {eta}")));
    }
    if p.alpha == 1.0 {
        return Ok(p.b());
    }
    Ok(q_integral(p, p.b(), eta))
}

/// Q(η) for η ∈ (0, 1]. At α = 1 this is the classical kernel Q ≡ b.
pub fn q_kernel(p: &Params, eta: f64) -> Result<f64> {
    p.validate()?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("q_kernel needs eta in (0, 1], got {eta}")));
    }
    Ok(q_unchecked(p, p.b(), eta))
}

pub(crate) fn q_deriv_unchecked(alpha: f64, b: f64, d: u32, eta: f64) -> f64 {
    if eta > 0.5 {
        return q_deriv_eps(alpha, b, d, 1.0 - eta);
    }
    -(-(eta.ln() / b).exp_m1()).powf(-alpha) * eta.powi(1 - d as i32) * rgamma(1.0 - alpha)
}

/// Q'(1 - ε), accurate for small ε.
pub(crate) fn q_deriv_eps(alpha: f64, b: f64, d: u32, eps: f64) -> f64 {
    let gap = -((-eps).ln_1p() / b).exp_m1();
    -gap.powf(-alpha) * (1.0 - eps).powi(1 - d as i32) * rgamma(1.0 - alpha)
}

/// Q'(η) = -Γ(1-α)^{-1} (1 - η^{1/b})^{-α} η^{1-d} for η ∈ (0, 1), α < 1.
pub fn q_kernel_deriv(p: &Params, eta: f64) -> Result<f64> {
    p.validate()?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("q_kernel_deriv needs eta in (0, 1), got {eta}")));
    }
    if p.alpha == 1.0 {
        return Err(Error::Domain("q_kernel_deriv is defined for alpha < 1 only".into()));
    }
    Ok(q_deriv_unchecked(p.alpha, p.b(), p.d, eta))
}

/// Moment Q̂(γ) = ∫₀¹ Q(σ) σ^{γ-3} dσ = (b/(γ-2)) Γ(b(γ-d)) / Γ(1-α+b(γ-d)).
pub fn q_moment(p: &Params, gamma: f64) -> Result<f64> {
    p.validate()?;
    let lim = 2f64.max(p.d as f64);
    if !(gamma > lim) {
        return Err(Error::Domain(format!("q_moment needs gamma > {lim}, got {gamma}")));
    }
    let b = p.b();
    let x = b * (gamma - p.d as f64);
    Ok(b / (gamma - 2.0) * gamma_ratio(x, 1.0 - p.alpha + x))
}

/// K(z, ρ) = ρ Q(z/ρ) for 0 < z <= ρ.
pub fn k_point(p: &Params, z: f64, rho: f64) -> Result<f64> {
    p.validate()?;
    if !(z > 0.0) || !(z <= rho) {
        return Err(Error::Domain(format!("k_point needs 0 < z <= rho, got z = {z}, rho = {rho}")));
    }
    if p.alpha < 1.0 && z == rho {
        return Ok(0.0);
    }
    Ok(rho * q_unchecked(p, p.b(), z / rho))
}

/// Shape of Q near η = 0: the limit of Q/𝒱^m is finite for this 𝒱^m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HeadShape {
    /// 𝒱^m = 1 (d = 1)
    Constant,
    /// 𝒱^m = |log η| (d = 2)
    Log,
    /// 𝒱^m = η^{2-d} (d >= 3)
    Power(i32),
}

impl HeadShape {
    pub fn for_dimension(d: u32) -> Self {
        match d {
            1 => HeadShape::Constant,
            2 => HeadShape::Log,
            _ => HeadShape::Power(2 - d as i32),
        }
    }

    /// 𝒱^m evaluated at z.
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            HeadShape::Constant => 1.0,
            HeadShape::Log => z.ln().abs(),
            HeadShape::Power(k) => z.powi(*k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QAsymptotics {
    /// lim_{η→1} Q(η)/(1-η)^{1-α}
    pub eta1_coeff: f64,
    /// lim_{η→0} Q(η)/𝒱^m(η)
    pub eta0_limit: f64,
    pub eta0_shape: HeadShape,
}

pub fn q_asymptotics(p: &Params) -> Result<QAsymptotics> {
    p.validate()?;
    if p.alpha >= 1.0 {
        return Err(Error::Domain("q_asymptotics needs alpha < 1".into()));
    }
    let b = p.b();
    let a = p.alpha;
    let eta1_coeff = b.powf(a) / gamma_fn(2.0 - a)?;
    let eta0_limit = match p.d {
        1 => gamma_ratio(b + 1.0, b + 1.0 - a),
        2 => rgamma(1.0 - a),
        d => rgamma(1.0 - a) / (d as f64 - 2.0),
    };
    Ok(QAsymptotics { eta1_coeff, eta0_limit, eta0_shape: HeadShape::for_dimension(p.d) })
}

/// Reference shape used inside each cell: U(ρ) ≈ U_j φ(ρ)/φ(z_j).
///
/// `Constant` is the piecewise-constant convention. `Tail` is
/// φ(ρ) = (κ + (ρ/s)^{γ*})^{-γ/γ*} with κ = γ*/γ, which is flat near 0 and
/// behaves like ρ^{-γ}(1 - (ρ/s)^{-γ*}) for large ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CellShape {
    Constant,
    /// cell j carries the mean (U_j + U_{j+1})/2 of its end values
    Trapezoid,
    Tail { gamma: f64, gamma_star: f64, scale: f64 },
}

impl CellShape {
    fn log_phi(&self, rho: f64) -> f64 {
        match *self {
            CellShape::Constant | CellShape::Trapezoid => 0.0,
            CellShape::Tail { gamma, gamma_star, scale } => {
                let kappa = gamma_star / gamma;
                -(gamma / gamma_star) * (kappa + (rho / scale).powf(gamma_star)).ln()
            }
        }
    }

    /// φ(ρ)/φ(z).
    pub fn ratio(&self, rho: f64, z: f64) -> f64 {
        match self {
            CellShape::Constant | CellShape::Trapezoid => 1.0,
            _ => (self.log_phi(rho) - self.log_phi(z)).exp(),
        }
    }

    /// The shape after the node map z → s·z.
    pub fn rescaled(&self, s: f64) -> Self {
        match *self {
            CellShape::Constant | CellShape::Trapezoid => *self,
            CellShape::Tail { gamma, gamma_star, scale } => CellShape::Tail { gamma, gamma_star, scale: scale * s },
        }
    }
}

/// Analytic tail U(ρ) = c* ρ^{-γ} (1 - L ρ^{-γ*} + c₂ ρ^{-2γ*}) attached beyond the last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub c_star: f64,
    pub gamma: f64,
    pub gamma_star: f64,
    pub l: f64,
    pub c2: f64,
}

impl TailModel {
    /// (coefficient, decay exponent) pairs of the power terms.
    pub fn terms(&self) -> [(f64, f64); 3] {
        let (g, gs) = (self.gamma, self.gamma_star);
        [(self.c_star, g), (-self.c_star * self.l, g + gs), (self.c_star * self.c2, g + 2.0 * gs)]
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let x = rho.powf(-self.gamma_star);
        self.c_star * rho.powf(-self.gamma) * (1.0 - self.l * x + self.c2 * x * x)
    }

    /// ∫_{z_max}^∞ U(ρ) ρ^k dρ.
    pub fn moment(&self, z_max: f64, k: f64) -> f64 {
        self.terms().iter().map(|&(c, s)| c * z_max.powf(k + 1.0 - s) / (s - k - 1.0)).sum()
    }

    /// The tail of A·u(z/s) when u carries this tail.
    pub fn rescaled(&self, a: f64, s: f64) -> Self {
        let x = s.powf(self.gamma_star);
        Self { c_star: self.c_star * a * s.powf(self.gamma), l: self.l * x, c2: self.c2 * x * x, ..*self }
    }
}

/// ∫_{z_max}^∞ K(z, ρ) ρ^{-s} dρ = z^{2-s} ∫₀^{z/z_max} Q(σ) σ^{s-3} dσ.
pub fn tail_power_integral(p: &Params, z: f64, z_max: f64, s: f64) -> Result<f64> {
    let b = p.b();
    if p.alpha == 1.0 {
        return Ok(b * z_max.powf(2.0 - s) / (s - 2.0));
    }
    let x = (z / z_max).min(1.0);
    // σ = x t keeps σ^{s-3} and z^{2-s} from under/overflowing for large s
    let f = |t: f64| q_unchecked(p, b, x * t) * t.powf(s - 3.0);
    let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-12, max_subdivisions: 2000 };
    let (v, _) = integrate(&f, 0.0, 1.0, &spec, Singular::BOTH)?;
    Ok(((2.0 - s) * z.ln() + (s - 2.0) * x.ln()).exp() * v)
}

/// Discrete kernel: w[i][j] = ∫_{z_j}^{z_{j+1}} K(z_i, ρ) φ(ρ)/φ(z_j) dρ for j >= i,
/// plus the fixed tail contribution of each row. Row i holds the coefficients
/// of nodes i..=I; the node I entry is nonzero only for the trapezoid shape,
/// where node k gets (w[i][k-1] + w[i][k])/2.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub mesh_id: u64,
    pub n_cells: usize,
    pub shape: CellShape,
    rows: Vec<Vec<f64>>,
    pub tail: Vec<f64>,
}

impl KernelWeights {
    /// Coefficient of U_j in row i; zero below the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.rows[i][j - i]
        }
    }

    /// Entries j = i..=I of row i.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }
}

pub(crate) fn mesh_hash(nodes: &[f64]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for z in nodes {
        z.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Worker pool sized by FPME_NUM_THREADS (0 or unset = automatic).
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var("FPME_NUM_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
    })
}

/// Piecewise-constant weights without tail.
pub fn assemble_weights(p: &Params, mesh: &Mesh) -> Result<KernelWeights> {
    assemble_weights_with(p, mesh, CellShape::Constant, None)
}

/// Weights for a given cell shape, with the tail column filled when a tail
/// model is supplied.
pub fn assemble_weights_with(p: &Params, mesh: &Mesh, shape: CellShape, tail: Option<&TailModel>) -> Result<KernelWeights> {
    p.validate()?;
    let z = &mesh.nodes;
    let n = z.len() - 1;
    if p.d >= 2 && z[0] <= 0.0 {
        return Err(Error::Domain("for d >= 2 the kernel is singular at z = 0; start the mesh at z_min > 0".into()));
    }
    let b = p.b();
    let rows: Vec<Result<Vec<f64>>> = pool().install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| cell_weight(p, b, z, i, j, shape)).collect::<Result<Vec<f64>>>())
            .collect()
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    for (i, r) in rows.iter_mut().enumerate() {
        if shape == CellShape::Trapezoid {
            let cells = std::mem::take(r);
            *r = (i..=n)
                .map(|k| 0.5 * (if k > i { cells[k - 1 - i] } else { 0.0 } + if k < n { cells[k - i] } else { 0.0 }))
                .collect();
        } else {
            r.push(0.0);
        }
    }
    let tail_col = match tail {
        None => vec![0.0; n],
        Some(t) => {
            let zmax = z[n];
            let col: Vec<Result<f64>> = pool().install(|| {
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut acc = 0.0;
                        for (c, s) in t.terms() {
                            if c != 0.0 {
                                acc += c * tail_power_integral(p, z[i].max(1e-300), zmax, s)?;
                            }
                        }
                        Ok(acc)
                    })
                    .collect()
            });
            col.into_iter().collect::<Result<Vec<_>>>()?
        }
    };
    Ok(KernelWeights { mesh_id: mesh_hash(z), n_cells: n, shape, rows, tail: tail_col })
}

fn cell_weight(p: &Params, b: f64, z: &[f64], i: usize, j: usize, shape: CellShape) -> Result<f64> {
    let (zi, zj, zj1) = (z[i], z[j], z[j + 1]);
    // tiny cells can stall on roundoff well below any useful accuracy
    let wrap = |e: Error| match e {
        Error::NoConvergence { value, err_est } => Error::Weight { i, j, value, err_est },
        other => other,
    };
    let accept = |r: Result<(f64, f64)>| match r {
        Err(Error::NoConvergence { value, err_est }) if err_est <= 1e-8 * value.abs() => Ok((value, err_est)),
        other => other,
    };
    let scale = (zj1 * zj1 - zj * zj).abs();
    let spec = QuadratureSpec { abs_tol: 1e-14 * scale.max(1e-300), rel_tol: 1e-11, max_subdivisions: 400 };
    if let CellShape::Tail { .. } = shape {
        // ρ-form with the shape inside the integrand
        let f = |rho: f64| rho * q_unchecked(p, b, zi / rho) * shape.ratio(rho, zj);
        let sing = if j == i && p.alpha < 1.0 { Singular::LOWER } else { Singular::NONE };
        return accept(integrate(&f, zj, zj1, &spec, sing)).map(|(v, _)| v).map_err(wrap);
    }
    if p.alpha == 1.0 {
        return Ok(b * (zj1 * zj1 - zj * zj) / 2.0);
    }
    if zi == 0.0 {
        return Ok(q_unchecked(p, b, 0.0) * (zj1 * zj1 - zj * zj) / 2.0);
    }
    // integrated-by-parts η-form:
    //   ½∫_{η_a}^{η_b} (-Q'(η)) (z_{j+1}² - z_i²/η²) dη + ½(z_{j+1}² - z_j²) Q(η_b)
    // integrated in ε = 1 - η so the endpoint η = 1 stays resolved
    let eta_b = if j == i { 1.0 } else { zi / zj };
    let (e_lo, e_hi) = (if j == i { 0.0 } else { (zj - zi) / zj }, (zj1 - zi) / zj1);
    let f = |e: f64| {
        let eta = 1.0 - e;
        -q_deriv_eps(p.alpha, b, p.d, e) * (zj1 * zj1 - zi * zi / (eta * eta))
    };
    let (v, _) = if j == i {
        // t = ε^{1-α} absorbs the ε^{-α} endpoint singularity for any α < 1
        let k = 1.0 / (1.0 - p.alpha);
        let g = |t: f64| {
            let e = t.powf(k);
            let gap = -((-e).ln_1p() / b).exp_m1();
            let ratio = if e > 0.0 { e / gap } else { b };
            let eta = 1.0 - e;
            ratio.powf(p.alpha) * eta.powi(1 - p.d as i32) * rgamma(2.0 - p.alpha) * (zj1 * zj1 - zi * zi / (eta * eta))
        };
        accept(integrate(&g, 0.0, e_hi.powf(1.0 - p.alpha), &spec, Singular::NONE)).map_err(wrap)?
    } else {
        let sing = if j == i + 1 { Singular::LOWER } else { Singular::NONE };
        accept(integrate(&f, e_lo, e_hi, &spec, sing)).map_err(wrap)?
    };
    let flat = if j == i { 0.0 } else { (zj1 * zj1 - zj * zj) * q_unchecked(p, b, eta_b) };
    Ok(0.5 * (v + flat))
}
