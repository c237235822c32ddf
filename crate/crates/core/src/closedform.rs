//! Closed-form reference objects: the very singular solution, the tail
//! exponent γ*, classical limits, sharp constants and the m = 1 profile.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{q_moment, Params, Regime};
use crate::specfun::{
    bessel_j0, bessel_k0, find_root, gamma_fn, integrate, ln_gamma, mittag_leffler_neg, rgamma, QuadratureSpec, Singular,
};

/// |∂B₁| = 2π^{d/2}/Γ(d/2).
pub fn sphere_area(d: u32) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// |B₁| = π^{d/2}/Γ(d/2 + 1).
pub fn ball_volume(d: u32) -> f64 {
    sphere_area(d) / d as f64
}

/// U*(z) = c* z^{-2/(1-m)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VssProfile {
    pub c_star: f64,
    pub gamma_mass: f64,
    pub params: Params,
}

impl VssProfile {
    pub fn eval(&self, z: f64) -> f64 {
        self.c_star * z.powf(-self.gamma_mass)
    }
}

fn require_fast(p: &Params, what: &str) -> Result<()> {
    p.validate()?;
    if p.regime() != Regime::Fast {
        return Err(Error::Regime(format!("{what} needs m_c < m < 1, got m = {}", p.m)));
    }
    Ok(())
}

fn require_slow(p: &Params, what: &str) -> Result<()> {
    p.validate()?;
    if p.regime() != Regime::Slow {
        return Err(Error::Regime(format!("{what} needs m > 1, got m = {}", p.m)));
    }
    Ok(())
}

pub fn vss(p: &Params) -> Result<VssProfile> {
    require_fast(p, "vss")?;
    let gamma = 2.0 / (1.0 - p.m);
    let qh = q_moment(p, gamma)?;
    let c_star = (-qh.ln() / (1.0 - p.m)).exp();
    if !c_star.is_finite() {
        return Err(Error::Overflow(c_star));
    }
    Ok(VssProfile { c_star, gamma_mass: gamma, params: *p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailExpansion {
    pub gamma_star: f64,
    pub z0: f64,
    /// Λ = m - Q̂(γ + 3γ*/2)/Q̂(γ)
    pub lambda: f64,
}

/// Solves Q̂(γ + γ*) = m Q̂(γ) for γ = 2/(1-m) and picks z0 on the grid 1.05^k.
pub fn gamma_star(p: &Params, root_tol: f64) -> Result<TailExpansion> {
    require_fast(p, "gamma_star")?;
    let g = 2.0 / (1.0 - p.m);
    let q0 = q_moment(p, g)?;
    let f = |s: f64| q_moment(p, g + s).map(|v| v / q0 - p.m).unwrap_or(f64::NAN);
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Bracket(format!("no sign change of Q̂(γ+s) - mQ̂(γ) up to s = {hi}")));
        }
    }
    let fh = f(hi);
    if !(fh <= 0.0) {
        return Err(Error::Bracket(format!("Q̂ ratio not finite at s = {hi}")));
    }
    let gs = if fh == 0.0 { hi } else { find_root(f, 0.0, hi, root_tol)? };
    let lambda = p.m - q_moment(p, g + 1.5 * gs)? / q0;
    let coef = (p.m * (p.m - 1.0)).abs() / 2.0;
    let mut z0: f64 = 1.05;
    while coef * z0.powf(-2.0 * gs) > lambda * z0.powf(-1.5 * gs) {
        z0 *= 1.05;
        if z0 > 1e12 {
            return Err(Error::Bracket("no z0 below 1e12 satisfies the remainder bound".into()));
        }
    }
    Ok(TailExpansion { gamma_star: gs, z0, lambda })
}

/// Classical Barenblatt profile ((m-1)b₁/(2m) (1-z²)₊)^{1/(m-1)}, b₁ = b at α = 1.
pub fn barenblatt_classical(p: &Params, z: f64) -> Result<f64> {
    require_slow(p, "barenblatt_classical")?;
    let b1 = p.with_alpha(1.0).b();
    let s = (1.0 - z * z).max(0.0);
    Ok(((p.m - 1.0) * b1 / (2.0 * p.m) * s).powf(1.0 / (p.m - 1.0)))
}

/// c*_{1,m} (1 + z²)^{-1/(1-m)}.
pub fn fast_classical(p: &Params, z: f64) -> Result<f64> {
    require_fast(p, "fast_classical")?;
    let c = vss(&p.with_alpha(1.0))?.c_star;
    Ok(c * (1.0 + z * z).powf(-1.0 / (1.0 - p.m)))
}

/// The α = 1 fast profile with unit tail coefficient,
/// c*_{1,m} (z² + 1 - m)^{-1/(1-m)}; this is what the minimal fixed point
/// above U*(1 - z^{-2})₊ converges to.
pub fn fast_classical_canonical(p: &Params, z: f64) -> Result<f64> {
    require_fast(p, "fast_classical_canonical")?;
    let c = vss(&p.with_alpha(1.0))?.c_star;
    Ok(c * (z * z + 1.0 - p.m).powf(-1.0 / (1.0 - p.m)))
}

fn head_shape(p: &Params, z: f64) -> f64 {
    match p.d {
        1 => 1.0,
        2 => z.ln().abs().powf(1.0 / p.m),
        d => z.powf(-(d as f64 - 2.0) / p.m),
    }
}

/// 𝒱(z): (1-z)₊^{(2-α)/(m-1)} for z >= 1/2, the head shape below, joined
/// continuously at 1/2.
pub fn reference_shape(p: &Params, z: f64) -> Result<f64> {
    require_slow(p, "reference_shape")?;
    if !(z > 0.0) {
        return Err(Error::Domain(format!("reference_shape needs z > 0, got {z}")));
    }
    let e = (2.0 - p.alpha) / (p.m - 1.0);
    if z >= 0.5 {
        return Ok((1.0 - z).max(0.0).powf(e));
    }
    let k = 0.5f64.powf(e) / head_shape(p, 0.5);
    Ok(k * head_shape(p, z))
}

/// (b^α Γ(1+e)/Γ(3-α+e))^{1/(m-1)}, e = (2-α)/(m-1).
pub fn free_boundary_constant(p: &Params) -> Result<f64> {
    require_slow(p, "free_boundary_constant")?;
    Ok(free_boundary_constant_with_b(p, p.b()))
}

/// Same constant for an explicitly supplied b.
pub fn free_boundary_constant_with_b(p: &Params, b: f64) -> f64 {
    let a = p.alpha;
    let e = (2.0 - a) / (p.m - 1.0);
    let ln = a * b.ln() + ln_gamma(1.0 + e) - ln_gamma(3.0 - a + e);
    (ln / (p.m - 1.0)).exp()
}

/// M χ_{|x|<=1}/|B₁|.
pub fn mesa_plateau(p: &Params, x_norm: f64) -> f64 {
    if x_norm <= 1.0 {
        p.mass / ball_volume(p.d)
    } else {
        0.0
    }
}

/// σ_α = (2-α)(α^α/4)^{1/(2-α)}.
pub fn linear_tail_rate(alpha: f64) -> f64 {
    (2.0 - alpha) * (alpha.powf(alpha) / 4.0).powf(1.0 / (2.0 - alpha))
}

/// Shape ζ^{d(α-1)/(2(2-α))} exp(-σ_α ζ^{1/(2-α)}) of the two-sided m = 1
/// tail bound, in ζ = z² (the form that reduces to e^{-z²/4} at α = 1).
/// The constants of the bound are not known, so both returned shapes are
/// the same function.
pub fn linear_tail_envelope(p: &Params, z: f64) -> Result<(f64, f64)> {
    p.validate()?;
    if !(z >= 1.0) {
        return Err(Error::Domain(format!("linear_tail_envelope needs z >= 1, got {z}")));
    }
    let a = p.alpha;
    let d = p.d as f64;
    let zeta = z * z;
    let v = zeta.powf(d * (a - 1.0) / (2.0 * (2.0 - a))) * (-linear_tail_rate(a) * zeta.powf(1.0 / (2.0 - a))).exp();
    Ok((v, v))
}

// E_α(-ξ²) minus its leading large-ξ behaviour 1/(Γ(1-α)(1+ξ²))
fn ml_remainder(alpha: f64, xi: f64) -> f64 {
    let e = mittag_leffler_neg(alpha, xi * xi).unwrap_or(f64::NAN);
    e - rgamma(1.0 - alpha) / (1.0 + xi * xi)
}

// Σ of alternating panel integrals, with repeated averaging of the partial sums
fn panel_sum<F: Fn(f64) -> f64>(f: &F, edges: impl Fn(usize) -> f64, spec: &QuadratureSpec) -> Result<f64> {
    const DIRECT: f64 = 20.0;
    const EXTRA: usize = 24;
    let mut sum = 0.0;
    let mut k = 0;
    while edges(k) < DIRECT {
        sum += integrate(f, edges(k), edges(k + 1), spec, Singular::NONE)?.0;
        k += 1;
        if k > 200_000 {
            return Err(Error::NoConvergence { value: sum, err_est: f64::NAN });
        }
    }
    let mut partial = Vec::with_capacity(EXTRA + 1);
    partial.push(sum);
    for _ in 0..EXTRA {
        sum += integrate(f, edges(k), edges(k + 1), spec, Singular::NONE)?.0;
        partial.push(sum);
        k += 1;
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    Ok(partial[0])
}

/// Radial inverse Fourier transform of M E_α(-|ξ|²) at radius z, d ∈ {1, 2, 3}.
pub fn linear_profile(p: &Params, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    p.validate()?;
    if p.d > 3 {
        return Err(Error::Regime(format!("linear_profile supports d <= 3, got d = {}", p.d)));
    }
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("linear_profile needs z >= 0, got {z}")));
    }
    let a = p.alpha;
    let g = rgamma(1.0 - a);
    let mass = p.mass;
    if a == 1.0 {
        // exact heat kernel
        return Ok(mass * (4.0 * PI).powf(-(p.d as f64) / 2.0) * (-z * z / 4.0).exp());
    }
    if z == 0.0 {
        if p.d == 1 {
            let f = |xi: f64| mittag_leffler_neg(a, xi * xi).unwrap_or(f64::NAN);
            let (v, _) = integrate(&f, 0.0, f64::INFINITY, spec, Singular::NONE)?;
            return Ok(mass * v / PI);
        }
        return Err(Error::Domain(format!("the m = 1 profile is unbounded at z = 0 for d = {} and alpha < 1", p.d)));
    }
    let w = PI / z;
    match p.d {
        1 => {
            let f = |xi: f64| ml_remainder(a, xi) * (xi * z).cos();
            // first panel ends at the first zero of cos(ξz)
            let edges = |k: usize| if k == 0 { 0.0 } else { (k as f64 - 0.5) * w };
            let r = panel_sum(&f, edges, spec)?;
            Ok(mass / PI * (0.5 * PI * g * (-z).exp() + r))
        }
        2 => {
            let f = |xi: f64| ml_remainder(a, xi) * xi * bessel_j0(xi * z);
            // approximate zeros of J₀(ξz)
            let edges = |k: usize| if k == 0 { 0.0 } else { (k as f64 - 0.25) * w };
            let r = panel_sum(&f, edges, spec)?;
            Ok(mass / (2.0 * PI) * (g * bessel_k0(z) + r))
        }
        _ => {
            let f = |xi: f64| ml_remainder(a, xi) * xi * (xi * z).sin();
            let edges = |k: usize| k as f64 * w;
            let r = panel_sum(&f, edges, spec)?;
            Ok(mass / (2.0 * PI * PI * z) * (0.5 * PI * g * (-z).exp() + r))
        }
    }
}

/// |∂B₁| ∫₀^∞ U_{α,1,M}(z) z^{d-1} dz by quadrature on dyadic shells; should
/// return M.
pub fn linear_mass(p: &Params, spec: &QuadratureSpec) -> Result<f64> {
    let di = p.d as i32;
    let f = |z: f64| linear_profile(p, z, spec).map_or(f64::NAN, |v| v * z.powi(di - 1));
    // point values carry ~1e-12 absolute noise far out; don't chase it
    let outer = QuadratureSpec { abs_tol: spec.abs_tol.max(1e-11), rel_tol: spec.rel_tol.max(1e-9), ..*spec };
    let (mut total, _) = integrate(&f, 0.0, 0.5, &outer, Singular::LOWER)?;
    let mut lo = 0.5;
    while lo < 1e3 {
        let (v, _) = integrate(&f, lo, 2.0 * lo, &outer, Singular::NONE)?;
        total += v;
        lo *= 2.0;
        if v.abs() <= 1e-9 * total.abs() {
            break;
        }
    }
    if !total.is_finite() {
        return Err(Error::Domain("linear profile quadrature returned a non-finite value".into()));
    }
    Ok(sphere_area(p.d) * total)
}

/// Γ-ratio helper kept public for the CLI constants table: M/Γ(1-α).
pub fn flux_constant(p: &Params) -> f64 {
    p.mass * rgamma(1.0 - p.alpha)
}

/// Limit of Q(η)/𝒱^m(η) at η → 0 times the profile head data, d >= 2:
/// M/(|∂B₁|Γ(1-α)) for d = 2 and M/(|∂B₁|(d-2)Γ(1-α)) for d >= 3.
pub fn head_constant_high_dim(p: &Params) -> Option<f64> {
    match p.d {
        1 => None,
        2 => Some(p.mass * rgamma(1.0 - p.alpha) / sphere_area(2)),
        d => Some(p.mass * rgamma(1.0 - p.alpha) / (sphere_area(d) * (d as f64 - 2.0))),
    }
}

/// Γ(b+1)/Γ(b+1-α), the value of Q at η = 0 for d = 1.
pub fn q_at_zero_d1(p: &Params) -> Result<f64> {
    let b = p.b();
    Ok(gamma_fn(b + 1.0)? / gamma_fn(b + 1.0 - p.alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::wright_m;
    use approx::assert_relative_eq;

    fn p(alpha: f64, m: f64, d: u32) -> Params {
        Params::new(alpha, m, d, 1.0).unwrap()
    }

    #[test]
    fn ball_and_sphere() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn vss_classical() {
        let v = vss(&p(1.0, 0.5, 1)).unwrap();
        assert_relative_eq!(v.c_star, 9.0, max_relative = 1e-13);
        assert_relative_eq!(v.gamma_mass, 4.0);
        assert!(vss(&p(0.5, 2.0, 1)).is_err());
    }

    #[test]
    fn vss_moment_identity() {
        for &(a, m, d) in &[(0.5, 0.5, 1u32), (0.3, 0.8, 1), (0.7, 0.6, 3), (0.5, 0.98, 1)] {
            let pp = p(a, m, d);
            let v = vss(&pp).unwrap();
            let qh = q_moment(&pp, v.gamma_mass).unwrap();
            assert_relative_eq!(v.c_star.powf(1.0 - m) * qh, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn gamma_star_classical_is_two() {
        for &m in &[0.3, 0.5, 0.8] {
            for &d in &[1u32, 3] {
                if m <= crate::kernel::critical_exponent(d) {
                    continue;
                }
                let t = gamma_star(&p(1.0, m, d), 1e-13).unwrap();
                assert!((t.gamma_star - 2.0).abs() < 1e-10, "m {m} d {d}: {}", t.gamma_star);
            }
        }
    }

    #[test]
    fn gamma_star_solves_moment_equation() {
        let pp = p(0.5, 0.5, 1);
        let t = gamma_star(&pp, 1e-13).unwrap();
        let g = 4.0;
        let r = q_moment(&pp, g + t.gamma_star).unwrap() / q_moment(&pp, g).unwrap();
        assert_relative_eq!(r, 0.5, max_relative = 1e-11);
        // independent bisection
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if q_moment(&pp, g + mid).unwrap() > 0.5 * q_moment(&pp, g).unwrap() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t.gamma_star - lo).abs() < 1e-10);
        assert!(t.lambda > 0.0);
        assert!(t.z0 > 1.0);
    }

    #[test]
    fn barenblatt_examples() {
        let pp = p(1.0, 2.0, 1);
        assert_relative_eq!(barenblatt_classical(&pp, 0.0).unwrap(), 1.0 / 12.0, max_relative = 1e-14);
        assert_eq!(barenblatt_classical(&pp, 1.0).unwrap(), 0.0);
        assert_eq!(barenblatt_classical(&pp, 1.5).unwrap(), 0.0);
        let f = |z: f64| barenblatt_classical(&pp, z).unwrap();
        let (v, _) = integrate(&f, 0.0, 1.0, &QuadratureSpec::default(), Singular::NONE).unwrap();
        assert_relative_eq!(2.0 * v, 1.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn fast_classical_examples() {
        let pp = p(1.0, 0.5, 1);
        assert_relative_eq!(fast_classical(&pp, 0.0).unwrap(), 9.0, max_relative = 1e-13);
        let z: f64 = 1e3;
        let u = vss(&pp).unwrap().eval(z);
        let f = fast_classical(&pp, z).unwrap();
        assert_relative_eq!(f / u, 1.0, max_relative = 1e-5);
        // (U* - U)/U* z² → 1/(1-m)
        assert_relative_eq!((u - f) / u * z * z, 2.0, max_relative = 1e-5);
        let c = fast_classical_canonical(&pp, z).unwrap();
        assert_relative_eq!((u - c) / u * z * z, 1.0, max_relative = 1e-5);
    }

    #[test]
    fn reference_shape_examples() {
        let pp = p(0.5, 2.0, 1);
        let v = reference_shape(&pp, 0.25).unwrap();
        assert_relative_eq!(v, 0.5f64.powf(1.5), max_relative = 1e-14);
        assert_eq!(reference_shape(&pp, 1.0).unwrap(), 0.0);
        let q = p(0.5, 2.0, 3);
        let r = reference_shape(&q, 0.1).unwrap() / reference_shape(&q, 0.4).unwrap();
        assert_relative_eq!(r, 4.0f64.sqrt(), max_relative = 1e-13);
        let c = p(0.5, 2.0, 2);
        let l = reference_shape(&c, 0.5 - 1e-12).unwrap();
        let u = reference_shape(&c, 0.5).unwrap();
        assert_relative_eq!(l, u, max_relative = 1e-9);
        assert!(reference_shape(&pp, 0.0).is_err());
    }

    #[test]
    fn free_boundary_examples() {
        // mpmath: (sqrt(1/6) gamma(2.5)/gamma(4))
        assert_relative_eq!(free_boundary_constant(&p(0.5, 2.0, 1)).unwrap(), 0.090_450_156_819_783_46, max_relative = 1e-12);
        let c3 = free_boundary_constant(&p(0.5, 3.0, 1)).unwrap();
        let b: f64 = 0.5 / 4.0;
        let want = (b.sqrt() * gamma_fn(1.75).unwrap() / gamma_fn(3.25).unwrap()).sqrt();
        assert_relative_eq!(c3, want, max_relative = 1e-13);
        // classical reduction ((m-1) b₁ / m)^{1/(m-1)}
        let near = free_boundary_constant(&p(0.999, 2.0, 1)).unwrap();
        let classical = (1.0f64 / 3.0 / 2.0).powf(1.0);
        assert!((near / classical - 1.0).abs() < 1e-2);
        assert_relative_eq!(free_boundary_constant(&p(1.0, 2.0, 1)).unwrap(), classical, max_relative = 1e-13);
    }

    #[test]
    fn mesa_examples() {
        let pp = Params::new(0.5, 8.0, 1, 1.0).unwrap();
        assert_relative_eq!(mesa_plateau(&pp, 0.5), 0.5);
        assert_eq!(mesa_plateau(&pp, 1.5), 0.0);
        let q = Params::new(0.5, 8.0, 3, 1.0).unwrap();
        assert_relative_eq!(mesa_plateau(&q, 0.2), 3.0 / (4.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn tail_envelope() {
        assert_relative_eq!(linear_tail_rate(1.0), 0.25);
        // mpmath: 1.5*(sqrt(0.5)/4)**(2/3)
        assert_relative_eq!(linear_tail_rate(0.5), 0.472_470_393_710_577_4, max_relative = 1e-12);
        let pp = p(0.5, 1.0, 1);
        let z: f64 = 3.0;
        let (lo, hi) = linear_tail_envelope(&pp, z).unwrap();
        assert_eq!(lo, hi);
        let zeta = z * z;
        let resid = lo.ln() + linear_tail_rate(0.5) * zeta.powf(1.0 / 1.5) - (-0.5 / 3.0) * zeta.ln();
        assert!(resid.abs() < 1e-13);
        let g = linear_tail_envelope(&p(1.0, 1.0, 1), z).unwrap().0;
        assert_relative_eq!(g, (-z * z / 4.0).exp(), max_relative = 1e-14);
    }

    #[test]
    fn linear_gaussian_limit() {
        let spec = QuadratureSpec::default();
        for &d in &[1u32, 3] {
            let pp = p(1.0, 1.0, d);
            for k in 0..=10 {
                let z = 0.5 * k as f64;
                let g = (4.0 * PI).powf(-(d as f64) / 2.0) * (-z * z / 4.0).exp();
                assert!((linear_profile(&pp, z, &spec).unwrap() - g).abs() < 1e-6);
            }
        }
        let pp = p(1.0, 1.0, 1);
        assert_relative_eq!(linear_profile(&pp, 0.0, &spec).unwrap(), 0.282_094_791_773_878_1, max_relative = 1e-12);
    }

    #[test]
    fn linear_matches_wright() {
        let spec = QuadratureSpec::default();
        let pp = p(0.5, 1.0, 1);
        for &z in &[0.0, 0.3, 1.0, 2.5, 5.0] {
            let want = 0.5 * wright_m(0.25, z).unwrap();
            let got = linear_profile(&pp, z, &spec).unwrap();
            assert!((got - want).abs() < 1e-8, "z {z}: {got} vs {want}");
        }
        assert_relative_eq!(linear_profile(&pp, 0.0, &spec).unwrap(), 0.5 / gamma_fn(0.75).unwrap(), max_relative = 1e-8);
    }

    #[test]
    fn linear_higher_dimensions_positive_decreasing() {
        let spec = QuadratureSpec::default();
        for &d in &[2u32, 3] {
            let pp = p(0.5, 1.0, d);
            let mut prev = f64::INFINITY;
            for k in 1..=10 {
                let v = linear_profile(&pp, 0.5 * k as f64, &spec).unwrap();
                assert!(v > 0.0 && v < prev, "d {d} z {}", 0.5 * k as f64);
                prev = v;
            }
        }
    }

    #[test]
    fn linear_d3_from_d1() {
        // radial relation U₃(z) = -U₁'(z)/(2πz) between the d = 1 and d = 3 profiles
        let spec = QuadratureSpec::default();
        let p1 = p(0.5, 1.0, 1);
        let p3 = p(0.5, 1.0, 3);
        for &z in &[0.5, 1.5, 3.0] {
            let h = 1e-3;
            let d1 = (linear_profile(&p1, z + h, &spec).unwrap() - linear_profile(&p1, z - h, &spec).unwrap()) / (2.0 * h);
            let want = -d1 / (2.0 * PI * z);
            assert_relative_eq!(linear_profile(&p3, z, &spec).unwrap(), want, max_relative = 1e-5);
        }
    }

    #[test]
    fn linear_profile_carries_the_mass() {
        let v = linear_mass(&Params::new(0.5, 1.0, 1, 2.0).unwrap(), &QuadratureSpec::default()).unwrap();
        assert!((v - 2.0).abs() < 2e-8, "{v}");
    }
}
