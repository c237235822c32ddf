//! Meshes, the discrete operator (𝒦_h U)_i = (Σ_{j>=i} K_ij U_j)^{1/m},
//! monotone Picard drivers for m > 1 and m_c < m < 1, mass and rescaling.

use rayon::prelude::*;
use serde::Serialize;

use crate::closedform::{gamma_star, reference_shape, sphere_area, vss, TailExpansion, VssProfile};
use crate::error::{Error, Result};
use crate::kernel::{
    assemble_weights_with, mesh_hash, pool, q_deriv_eps, q_deriv_unchecked, q_unchecked, CellShape, HeadShape,
    KernelWeights, Params, Regime, TailModel, q_moment,
};
use crate::specfun::{integrate, rgamma, QuadratureSpec, Singular};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Grading {
    Uniform,
    /// z_i = 1 - (1 - i/I)^p, clustered toward the right end
    Power { p: f64 },
    /// geometric spacing
    Log,
    /// nodes supplied directly
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshRegime {
    /// [0, 1]
    Slow,
    /// [z_min, z_max]
    Fast { z_min: f64, z_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub nodes: Vec<f64>,
    pub grading: Grading,
}

impl Mesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        Self::with_grading(nodes, Grading::Custom)
    }

    fn with_grading(nodes: Vec<f64>, grading: Grading) -> Result<Self> {
        if nodes.len() < 9 {
            return Err(Error::Domain(format!("a mesh needs at least 8 cells, got {}", nodes.len().saturating_sub(1))));
        }
        if !(nodes[0] >= 0.0) || nodes.iter().any(|z| !z.is_finite()) {
            return Err(Error::Domain("mesh nodes must be finite with z_0 >= 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("mesh nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, grading })
    }

    /// Number of cells I.
    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn z_max(&self) -> f64 {
        self.nodes[self.n_cells()]
    }

    fn scaled(&self, s: f64) -> Self {
        Self { nodes: self.nodes.iter().map(|z| z * s).collect(), grading: self.grading }
    }
}

pub fn make_mesh(regime: MeshRegime, n: usize, grading: Grading) -> Result<Mesh> {
    if n < 8 {
        return Err(Error::Domain(format!("I must be at least 8, got {n}")));
    }
    let t = |i: usize| i as f64 / n as f64;
    let nodes: Vec<f64> = match (regime, grading) {
        (MeshRegime::Slow, Grading::Uniform) => (0..=n).map(t).collect(),
        (MeshRegime::Slow, Grading::Power { p }) => {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(Error::Domain(format!("power grading needs p >= 1, got {p}")));
            }
            (0..=n).map(|i| 1.0 - (1.0 - t(i)).powf(p)).collect()
        }
        (MeshRegime::Fast { z_min, z_max }, g) => {
            if !(z_min > 0.0 && z_max > z_min) {
                return Err(Error::Domain(format!("need 0 < z_min < z_max, got [{z_min}, {z_max}]")));
            }
            match g {
                Grading::Log => {
                    let r = (z_max / z_min).ln();
                    (0..=n).map(|i| if i == n { z_max } else { z_min * (r * t(i)).exp() }).collect()
                }
                Grading::Uniform => (0..=n).map(|i| z_min + (z_max - z_min) * t(i)).collect(),
                _ => return Err(Error::Domain("fast meshes support uniform or log grading".into())),
            }
        }
        (MeshRegime::Slow, g) => return Err(Error::Domain(format!("slow meshes support uniform or power grading, got {g:?}"))),
    };
    Mesh::with_grading(nodes, grading)
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub monotone_certificate: bool,
    pub converged: bool,
    pub final_mass: f64,
    pub flux_extrapolate: f64,
    pub wall_notes: String,
}

/// Node values of a profile. Cell j = [z_j, z_{j+1}] carries U_j·φ(ρ)/φ(z_j)
/// for the stored cell shape φ; the last node holds 0 (slow) or the tail value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteProfile {
    pub params: Params,
    pub mesh: Mesh,
    pub values: Vec<f64>,
    pub regime: Regime,
    pub shape: CellShape,
    pub tail: Option<TailModel>,
}

impl DiscreteProfile {
    /// Point evaluation: interpolation between nodes, the tail beyond z_max and
    /// the head asymptote below z_0.
    pub fn eval(&self, z: f64) -> f64 {
        let nodes = &self.mesh.nodes;
        let n = self.mesh.n_cells();
        if z >= nodes[n] {
            return match &self.tail {
                Some(t) => t.eval(z),
                None if z == nodes[n] => self.values[n],
                None => 0.0,
            };
        }
        if z <= nodes[0] {
            return self.head_value(z);
        }
        let j = nodes.partition_point(|&x| x <= z) - 1;
        let (a, b) = (nodes[j], nodes[j + 1]);
        let t = (z - a) / (b - a);
        match self.shape {
            CellShape::Constant | CellShape::Trapezoid => self.values[j] * (1.0 - t) + self.values[j + 1] * t,
            _ => {
                // shaped interpolation corrected to hit both node values
                let end = self.values[j] * self.shape.ratio(b, a);
                let corr = if end > 0.0 { (self.values[j + 1] / end).powf(t) } else { 1.0 };
                self.values[j] * self.shape.ratio(z, a) * corr
            }
        }
    }

    fn head_value(&self, z: f64) -> f64 {
        let z0 = self.mesh.nodes[0];
        if z0 == 0.0 || z >= z0 {
            return self.values[0];
        }
        let hs = HeadShape::for_dimension(self.params.d);
        self.values[0] * (hs.eval(z) / hs.eval(z0)).powf(1.0 / self.params.m)
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    /// Amplitude multiplying φ(ρ)/φ(z_j) on cell j.
    pub fn cell_amplitude(&self, j: usize) -> f64 {
        match self.shape {
            CellShape::Trapezoid => 0.5 * (self.values[j] + self.values[j + 1]),
            _ => self.values[j],
        }
    }
}

fn check_mesh(w: &KernelWeights, mesh: &Mesh) -> Result<()> {
    if w.mesh_id != mesh_hash(&mesh.nodes) || w.n_cells != mesh.n_cells() {
        return Err(Error::MeshMismatch(format!(
            "weights built for {} cells on another mesh; profile has {} cells",
            w.n_cells,
            mesh.n_cells()
        )));
    }
    Ok(())
}

fn operator_values(w: &KernelWeights, m: f64, u: &[f64]) -> Vec<f64> {
    let n = w.n_cells;
    let row = |i: usize| {
        let r = w.row(i);
        let s: f64 = r.iter().zip(&u[i..=n]).map(|(a, b)| a * b).sum::<f64>() + w.tail[i];
        if s.is_nan() { s } else { s.max(0.0).powf(1.0 / m) }
    };
    if n >= 256 {
        pool().install(|| (0..n).into_par_iter().map(row).collect())
    } else {
        (0..n).map(row).collect()
    }
}

/// (𝒦_h u)_i for i < I; the last node keeps u's boundary value.
pub fn apply_operator(w: &KernelWeights, u: &DiscreteProfile) -> Result<DiscreteProfile> {
    check_mesh(w, &u.mesh)?;
    if u.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("apply_operator needs a non-negative profile".into()));
    }
    let mut values = operator_values(w, u.params.m, &u.values);
    values.push(u.values[u.n_cells()]);
    Ok(DiscreteProfile { values, ..u.clone() })
}

fn ratio_range(w: &KernelWeights, m: f64, shape: &[f64]) -> Result<(f64, f64)> {
    if shape.len() != w.n_cells + 1 {
        return Err(Error::MeshMismatch("shape length differs from node count".into()));
    }
    // a trailing run of zeros is floating-point underflow toward the free boundary
    let end = shape[..w.n_cells].iter().rposition(|v| *v > 0.0).map_or(0, |k| k + 1);
    if end == 0 {
        return Err(Error::Domain("reference shape vanishes everywhere".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..end {
        let v = shape[i];
        if !(v > 0.0) {
            return Err(Error::Domain(format!("reference shape vanishes at interior node {i}")));
        }
        let s: f64 = w.row(i).iter().zip(&shape[i..]).map(|(a, b)| a * b).sum();
        let r = s / v.powf(m);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// Largest c with c𝒱 <= 𝒦_h(c𝒱): c = (min_i Σ_j K_ij𝒱_j / 𝒱_i^m)^{1/(m-1)}.
pub fn subsolution_constant(w: &KernelWeights, m: f64, shape: &[f64]) -> Result<f64> {
    if !(m > 1.0) {
        return Err(Error::Regime("subsolution_constant is for m > 1".into()));
    }
    let (lo, _) = ratio_range(w, m, shape)?;
    let c = lo.powf(1.0 / (m - 1.0));
    let u: Vec<f64> = shape.iter().map(|v| c * v).collect();
    certify_subsolution(w, m, 1.0, &u)?;
    Ok(c)
}

// Checks g·𝒦_h(v) >= v node by node, with g = 1 for c𝒱 itself or
// g = lo^{-1/m} for the scaled shape v = 𝒱.
fn certify_subsolution(w: &KernelWeights, m: f64, gain: f64, v: &[f64]) -> Result<()> {
    let kv = operator_values(w, m, v);
    for i in 0..w.n_cells {
        if gain * kv[i] < v[i] - slack(v[i]) {
            return Err(Error::BoundViolation { node: i, z: f64::NAN, what: "subsolution certificate failed".into() });
        }
    }
    Ok(())
}

fn slack(u: f64) -> f64 {
    1e-12 * u + f64::MIN_POSITIVE
}

// Where 𝒱^m drops below this the reference shape is cut to zero. c𝒱 is long
// zero in f64 there for any c the slow driver meets.
const SHAPE_FLOOR: f64 = 1e-280;

/// Smallest C with C𝒱 >= 𝒦_h(C𝒱), from the max of the same ratio.
pub fn supersolution_constant(w: &KernelWeights, m: f64, shape: &[f64]) -> Result<f64> {
    if !(m > 1.0) {
        return Err(Error::Regime("supersolution_constant is for m > 1".into()));
    }
    let (_, hi) = ratio_range(w, m, shape)?;
    Ok(hi.powf(1.0 / (m - 1.0)))
}

/// Default slow mesh: power grading toward the free boundary.
pub const SLOW_GRADING: Grading = Grading::Power { p: 2.0 };

/// Slow mesh for dimension d; for d >= 2 the first node is moved off the
/// kernel singularity at 0.
pub fn slow_mesh(d: u32, n: usize, grading: Grading) -> Result<Mesh> {
    let mut mesh = make_mesh(MeshRegime::Slow, n, grading)?;
    if d >= 2 {
        mesh.nodes[0] = (mesh.nodes[1] / 4.0).min(1e-3);
    }
    Ok(mesh)
}

pub fn solve_slow(p: &Params, n: usize, tol: f64, max_iter: usize) -> Result<(DiscreteProfile, SolveReport)> {
    let mesh = slow_mesh(p.d, n, SLOW_GRADING)?;
    solve_slow_on(p, mesh, tol, max_iter)
}

/// Picard iteration from the certified subsolution c𝒱 on a given mesh over [·, 1].
pub fn solve_slow_on(p: &Params, mesh: Mesh, tol: f64, max_iter: usize) -> Result<(DiscreteProfile, SolveReport)> {
    p.validate()?;
    if p.regime() != Regime::Slow {
        return Err(Error::Regime(format!("solve_slow needs m > 1, got m = {}", p.m)));
    }
    let n = mesh.n_cells();
    let w = assemble_weights_with(p, &mesh, CellShape::Trapezoid, None)?;
    let shape: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|&z| if z >= 1.0 { Ok(0.0) } else { reference_shape(p, z.max(1e-300)) })
        .map(|v| v.map(|v| if v.powf(p.m) < SHAPE_FLOOR { 0.0 } else { v }))
        .collect::<Result<_>>()?;
    // Iterate on v = U/c, v <- lo^{-1/m} 𝒦_h(v), starting from v = 𝒱. For m
    // near 1, c = lo^{1/(m-1)} is tiny and c𝒱 would underflow inside the
    // support, where the truncated start is no longer a subsolution.
    let (lo, hi) = ratio_range(&w, p.m, &shape)?;
    let gain = lo.powf(-1.0 / p.m);
    certify_subsolution(&w, p.m, gain, &shape)?;
    let ln_c = lo.ln() / (p.m - 1.0);
    let spread = ((hi / lo).ln() / (p.m - 1.0)).exp();
    let upper: Vec<f64> = shape.iter().map(|v| spread * v).collect();
    let mut report = SolveReport { monotone_certificate: true, ..Default::default() };
    report.wall_notes = format!("slow: c = {:.6e}, C = {:.6e}", ln_c.exp(), (hi.ln() / (p.m - 1.0)).exp());
    let v = picard(&w, p.m, gain, shape, Some(&upper), tol, max_iter, &mut report, |_, _| 0.0)?;
    let values = v.iter().map(|x| if *x > 0.0 { (x.ln() + ln_c).exp() } else { 0.0 }).collect();
    let prof = DiscreteProfile { params: *p, mesh, values, regime: Regime::Slow, shape: CellShape::Trapezoid, tail: None };
    finish(prof, report, n)
}

fn finish(prof: DiscreteProfile, mut report: SolveReport, _n: usize) -> Result<(DiscreteProfile, SolveReport)> {
    report.final_mass = mass(&prof);
    report.flux_extrapolate = flux_and_head_diagnostics(&prof).map(|f| f.flux0).unwrap_or(f64::NAN);
    Ok((prof, report))
}

// Monotone Picard loop for u <- gain·𝒦_h(u). `last` gives the fixed value of node I.
#[allow(clippy::too_many_arguments)]
fn picard(
    w: &KernelWeights,
    m: f64,
    gain: f64,
    start: Vec<f64>,
    upper: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    report: &mut SolveReport,
    last: impl Fn(usize, &[f64]) -> f64,
) -> Result<Vec<f64>> {
    let n = w.n_cells;
    let mut u = start;
    for it in 1..=max_iter {
        let mut next = operator_values(w, m, &u);
        if gain != 1.0 {
            next.iter_mut().for_each(|x| *x *= gain);
        }
        next.push(last(it, &u));
        let sup = next.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut diff: f64 = 0.0;
        for i in 0..n {
            if !next[i].is_finite() {
                return Err(Error::Domain(format!("iterate {it} is not finite at node {i}")));
            }
            let slack = slack(u[i]);
            if next[i] < u[i] - slack {
                report.monotone_certificate = false;
                report.iterations = it;
                return Err(Error::Monotonicity { iter: it, node: i, prev: u[i], next: next[i] });
            }
            if let Some(up) = upper {
                if next[i] > up[i] * (1.0 + 1e-9) + slack {
                    return Err(Error::BoundViolation {
                        node: i,
                        z: f64::NAN,
                        what: format!("iterate {} exceeds the upper barrier {}", next[i], up[i]),
                    });
                }
            }
            diff = diff.max((next[i] - u[i]).abs());
        }
        let res = if sup > 0.0 { diff / sup } else { 0.0 };
        report.residual_history.push(res);
        report.iterations = it;
        u = next;
        if res <= tol {
            report.converged = true;
            return Ok(u);
        }
    }
    Err(Error::MaxIter(max_iter))
}

/// Data of the fast-regime tail: U*, γ* and the frozen subsolution tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FastSetup {
    pub vss: VssProfile,
    pub tail: TailExpansion,
    pub model: TailModel,
    pub shape: CellShape,
}

pub fn fast_setup(p: &Params) -> Result<FastSetup> {
    let v = vss(p)?;
    let t = gamma_star(p, 1e-13)?;
    // second-order coefficient from matching ρ^{-2γ*} terms in U^m = ∫K U
    let q0 = q_moment(p, v.gamma_mass)?;
    let r2 = q_moment(p, v.gamma_mass + 2.0 * t.gamma_star)? / q0;
    let c2 = p.m * (p.m - 1.0) / 2.0 / (r2 - p.m);
    let model = TailModel { c_star: v.c_star, gamma: v.gamma_mass, gamma_star: t.gamma_star, l: 1.0, c2 };
    let shape = CellShape::Tail { gamma: v.gamma_mass, gamma_star: t.gamma_star, scale: 1.0 };
    Ok(FastSetup { vss: v, tail: t, model, shape })
}

/// First node z >= z0 where U leaves [U*(1 - z^{-γ*}), U*(1 - z^{-γ*} + z^{-3γ*/2})].
pub fn fast_bracket_violation(u: &DiscreteProfile, c_star: f64, gamma_star: f64, z0: f64) -> Option<(usize, f64, String)> {
    let g = 2.0 / (1.0 - u.params.m);
    for (i, (&z, &v)) in u.mesh.nodes.iter().zip(&u.values).enumerate() {
        if z < z0 {
            continue;
        }
        let us = c_star * z.powf(-g);
        let lo = us * (1.0 - z.powf(-gamma_star));
        let hi = us * (1.0 - z.powf(-gamma_star) + z.powf(-1.5 * gamma_star));
        if v < lo * (1.0 - 1e-12) {
            return Some((i, z, format!("U = {v} below U*(1 - z^-γ*) = {lo}")));
        }
        if v > hi * (1.0 + 1e-12) {
            return Some((i, z, format!("U = {v} above U*(1 - z^-γ* + z^-3γ*/2) = {hi}")));
        }
    }
    None
}

pub fn solve_fast(p: &Params, n: usize, z_min: f64, z_max: f64, tol: f64, max_iter: usize) -> Result<(DiscreteProfile, SolveReport)> {
    let mesh = make_mesh(MeshRegime::Fast { z_min, z_max }, n, Grading::Log)?;
    solve_fast_on(p, mesh, tol, max_iter)
}

/// Picard iteration from U*(1 - z^{-γ*})₊ with the tail U*(1 - ρ^{-γ*}) frozen
/// beyond the last node.
pub fn solve_fast_on(p: &Params, mesh: Mesh, tol: f64, max_iter: usize) -> Result<(DiscreteProfile, SolveReport)> {
    p.validate()?;
    if p.regime() != Regime::Fast {
        return Err(Error::Regime(format!("solve_fast needs m_c < m < 1, got m = {}", p.m)));
    }
    let setup = fast_setup(p)?;
    let (z_min, z_max) = (mesh.nodes[0], mesh.z_max());
    let need = (10.0 * setup.tail.z0).max(10.0 * z_min);
    if z_max < need {
        return Err(Error::Domain(format!("z_max = {z_max} must be at least max(10 z0, 10 z_min) = {need}")));
    }
    let n = mesh.n_cells();
    let w = assemble_weights_with(p, &mesh, setup.shape, Some(&setup.model))?;
    let us: Vec<f64> = mesh.nodes.iter().map(|&z| setup.vss.eval(z)).collect();
    let gs = setup.tail.gamma_star;
    // zero for z <= 1, where U* may overflow
    let mut start: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|&z| if z > 1.0 { setup.vss.eval(z) * (1.0 - z.powf(-gs)) } else { 0.0 })
        .collect();
    start[n] = setup.model.eval(z_max);
    let boundary = start[n];
    let mut report = SolveReport { monotone_certificate: true, ..Default::default() };
    report.wall_notes = format!("fast: c* = {:.6e}, gamma* = {:.6e}, z0 = {:.4}", setup.vss.c_star, setup.tail.gamma_star, setup.tail.z0);
    let values = picard(&w, p.m, 1.0, start, Some(&us), tol, max_iter, &mut report, |_, _| boundary)?;
    if values[..n].iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("fast profile is not strictly positive".into()));
    }
    let prof = DiscreteProfile { params: *p, mesh, values, regime: Regime::Fast, shape: setup.shape, tail: Some(setup.model) };
    if let Some((node, z, what)) = fast_bracket_violation(&prof, setup.vss.c_star, setup.tail.gamma_star, setup.tail.z0) {
        return Err(Error::BoundViolation { node, z, what });
    }
    finish(prof, report, n)
}

fn cell_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-12, max_subdivisions: 400 }
}

/// |∂B₁| ∫₀^∞ U ρ^{d-1} dρ for the cell representation, plus the analytic
/// tail and the head below z_0.
pub fn mass(u: &DiscreteProfile) -> f64 {
    let d = u.params.d;
    let di = d as i32;
    let z = &u.mesh.nodes;
    let n = u.n_cells();
    let mut total = 0.0;
    for j in 0..n {
        let v = u.cell_amplitude(j);
        if v == 0.0 {
            continue;
        }
        total += match u.shape {
            CellShape::Constant | CellShape::Trapezoid => v * (z[j + 1].powi(di) - z[j].powi(di)) / d as f64,
            shape => {
                let f = |r: f64| shape.ratio(r, z[j]) * r.powi(di - 1);
                v * integrate(&f, z[j], z[j + 1], &cell_spec(), Singular::NONE).map(|r| r.0).unwrap_or(f64::NAN)
            }
        };
    }
    if let Some(t) = &u.tail {
        let zm = z[n];
        let df = d as f64;
        total += t.moment(zm, df - 1.0);
    }
    let z0 = z[0];
    if z0 > 0.0 {
        let u0 = u.values[0];
        let m = u.params.m;
        total += match d {
            1 => u0 * z0,
            2 => {
                let f = |r: f64| (r.ln() / z0.ln()).powf(1.0 / m) * r;
                u0 * integrate(&f, 0.0, z0, &cell_spec(), Singular::LOWER).map(|r| r.0).unwrap_or(f64::NAN)
            }
            _ => {
                let k = (d as f64 - 2.0) / m;
                u0 * z0.powi(di) / (d as f64 - k)
            }
        };
    }
    sphere_area(d) * total
}

/// U_M(z) = A u(z/s), s = A^{(m-1)/2}, A^{1+(m-1)d/2} = M/mass(u); nodes are
/// mapped exactly.
pub fn rescale_to_mass(u: &DiscreteProfile, target: f64) -> Result<DiscreteProfile> {
    let m0 = mass(u);
    if !(m0 > 0.0) {
        return Err(Error::ZeroMass);
    }
    if !(target > 0.0) {
        return Err(Error::Param(format!("mass M must be positive, got {target}")));
    }
    let p = u.params;
    let ex = 1.0 + (p.m - 1.0) * p.d as f64 / 2.0;
    let ln_a = (target / m0).ln() / ex;
    let a = ln_a.exp();
    let s = (ln_a * (p.m - 1.0) / 2.0).exp();
    Ok(DiscreteProfile {
        params: Params { mass: target, ..p },
        mesh: u.mesh.scaled(s),
        values: u.values.iter().map(|v| v * a).collect(),
        regime: u.regime,
        shape: u.shape.rescaled(s),
        tail: u.tail.map(|t| t.rescaled(a, s)),
    })
}

// ∫_{z_max}^∞ Q'(z/ρ) ρ^{-s} dρ = z^{1-s} ∫₀^{z/z_max} Q'(σ) σ^{s-2} dσ
//   = z_max^{1-s} ∫₀¹ Q'(xt) t^{s-2} dt with x = z/z_max, which stays finite for large s
fn tail_deriv_power(p: &Params, z: f64, z_max: f64, s: f64) -> f64 {
    let b = p.b();
    let x = (z / z_max).min(1.0);
    let f = |t: f64| q_deriv_unchecked(p.alpha, b, p.d, x * t) * t.powf(s - 2.0);
    let v = integrate(&f, 0.0, 1.0, &cell_spec(), Singular::BOTH).map(|r| r.0).unwrap_or(f64::NAN);
    ((1.0 - s) * z_max.ln()).exp() * v
}

/// (U^m)'(z_i) = ∫_{z_i}^∞ Q'(z_i/ρ) U(ρ) dρ at node i, from the cell representation.
pub fn um_derivative(u: &DiscreteProfile, i: usize) -> f64 {
    let p = &u.params;
    let z = &u.mesh.nodes;
    let n = u.n_cells();
    let zi = z[i];
    if p.alpha == 1.0 {
        // K = bρ for ρ > z: the derivative only sees the diagonal
        return -p.b() * zi * u.eval(zi);
    }
    let b = p.b();
    let mut total = 0.0;
    for j in i..n {
        let v = u.cell_amplitude(j);
        if v == 0.0 {
            continue;
        }
        let shape = u.shape;
        let zj = z[j];
        // t = ρ - z_i keeps 1 - z_i/ρ = t/ρ exact near the diagonal
        let f = |t: f64| {
            let r = zi + t;
            q_deriv_eps(p.alpha, b, p.d, t / r) * shape.ratio(r, zj)
        };
        let r = if j == i && zi > 0.0 {
            // s = t^{1-α} absorbs the t^{-α} singularity on the diagonal
            let k = 1.0 / (1.0 - p.alpha);
            let g = |s: f64| {
                let t = s.powf(k);
                let r = zi + t;
                let e = t / r;
                let gap = -((-e).ln_1p() / b).exp_m1();
                let ratio = if e > 0.0 { t / gap } else { r * b };
                -ratio.powf(p.alpha) * (1.0 - e).powi(1 - p.d as i32) * rgamma(2.0 - p.alpha) * shape.ratio(r, zj)
            };
            integrate(&g, 0.0, (z[j + 1] - zi).powf(1.0 - p.alpha), &cell_spec(), Singular::NONE)
        } else {
            integrate(&f, zj - zi, z[j + 1] - zi, &cell_spec(), Singular::NONE)
        };
        total += v * r.map(|r| r.0).unwrap_or(f64::NAN);
    }
    if let Some(t) = &u.tail {
        if zi > 0.0 {
            let zm = z[n];
            for (c, s) in t.terms() {
                if c != 0.0 {
                    total += c * tail_deriv_power(p, zi, zm, s);
                }
            }
        } else {
            // Q'(0) = -1/Γ(1-α) for d = 1
            total -= rgamma(1.0 - p.alpha) * t.moment(z[n], 0.0);
        }
    }
    total
}

/// z_i^{d-1} (U^m)'(z_i) at every node.
pub fn flux_profile(u: &DiscreteProfile) -> Vec<f64> {
    let d = u.params.d as i32;
    let nodes = &u.mesh.nodes;
    pool().install(|| (0..nodes.len()).into_par_iter().map(|i| nodes[i].powi(d - 1) * um_derivative(u, i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxHead {
    pub flux0: f64,
    pub head_constant: f64,
    /// successive extrapolants agree within 10%
    pub stable: bool,
}

fn extrapolate0(z: &[f64], f: &[f64]) -> (f64, f64) {
    if z[0] == 0.0 {
        return (f[0], f[0] - z[1] * (f[2] - f[1]) / (z[2] - z[1]));
    }
    let e01 = f[0] - z[0] * (f[1] - f[0]) / (z[1] - z[0]);
    let e12 = f[1] - z[1] * (f[2] - f[1]) / (z[2] - z[1]);
    (e01, e12)
}

/// Flux -|∂B₁| z^{d-1}(U^m)' and U^m/𝒱^m extrapolated to z = 0 from the three
/// smallest nodes.
pub fn flux_and_head_diagnostics(u: &DiscreteProfile) -> Result<FluxHead> {
    let p = &u.params;
    let z = &u.mesh.nodes[..3];
    let area = sphere_area(p.d);
    let d = p.d as i32;
    let hs = HeadShape::for_dimension(p.d);
    let mut fl = [0.0; 3];
    let mut hd = [0.0; 3];
    for i in 0..3 {
        fl[i] = -area * z[i].powi(d - 1) * um_derivative(u, i);
        let v = if p.d == 1 { 1.0 } else { hs.eval(z[i]) };
        hd[i] = u.values[i].powf(p.m) / v;
    }
    let (f0, f1) = extrapolate0(z, &fl);
    let (h0, _) = extrapolate0(z, &hd);
    if !f0.is_finite() || !h0.is_finite() {
        return Err(Error::Domain("non-finite flux or head estimate".into()));
    }
    let stable = (f0 - f1).abs() <= 0.1 * f0.abs().max(1e-300) || (f0 == 0.0 && f1 == 0.0);
    Ok(FluxHead { flux0: f0, head_constant: h0, stable })
}

/// Head constant predicted by the profile equation at z = 0 for d = 1:
/// U^m(0) = Q(0) ∫₀^∞ ρ U(ρ) dρ.
pub fn head_first_moment(u: &DiscreteProfile) -> f64 {
    let p = &u.params;
    let z = &u.mesh.nodes;
    let n = u.n_cells();
    let mut mom = 0.0;
    for j in 0..n {
        let f = |r: f64| r * u.shape.ratio(r, z[j]);
        mom += u.cell_amplitude(j) * integrate(&f, z[j], z[j + 1], &cell_spec(), Singular::NONE).map(|r| r.0).unwrap_or(f64::NAN);
    }
    if let Some(t) = &u.tail {
        let zm = z[n];
        mom += t.moment(zm, 1.0);
    }
    if z[0] > 0.0 {
        mom += u.values[0] * z[0] * z[0] / 2.0;
    }
    q_unchecked(p, p.b(), 0.0) * mom
}

/// Pointwise bounds every converged profile must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsCheck {
    /// worst U(z)/(d M/(|∂B₁| z^d)) over z > 0
    pub lieb_ratio: f64,
    /// worst |z^{d-1}(U^m)'|/(M/(|∂B₁|Γ(1-α))); None at α = 1 where the bound degenerates
    pub equicontinuity_ratio: Option<f64>,
    pub first_violation: Option<(usize, f64, String)>,
}

pub fn check_bounds(u: &DiscreteProfile) -> BoundsCheck {
    let p = &u.params;
    let mm = mass(u);
    let area = sphere_area(p.d);
    let d = p.d as f64;
    let mut lieb_ratio: f64 = 0.0;
    let mut first = None;
    for (i, (&z, &v)) in u.mesh.nodes.iter().zip(&u.values).enumerate() {
        if z <= 0.0 {
            continue;
        }
        let r = v / (d * mm / (area * z.powf(d)));
        lieb_ratio = lieb_ratio.max(r);
        if r > 1.0 + 1e-9 && first.is_none() {
            first = Some((i, z, format!("Lieb bound exceeded by factor {r}")));
        }
    }
    let eq = if p.alpha < 1.0 {
        let bound = mm * rgamma(1.0 - p.alpha) / area;
        let fl = flux_profile(u);
        let mut worst: f64 = 0.0;
        for (i, f) in fl.iter().enumerate() {
            let r = f.abs() / bound;
            worst = if r.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(r) };
            if r > 1.0 + 1e-8 && first.is_none() {
                first = Some((i, u.mesh.nodes[i], format!("equicontinuity bound exceeded by factor {r}")));
            }
        }
        Some(worst)
    } else {
        None
    };
    BoundsCheck { lieb_ratio, equicontinuity_ratio: eq, first_violation: first }
}
