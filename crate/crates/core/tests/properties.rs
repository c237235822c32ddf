use fpme::closedform::{gamma_star, vss};
use fpme::kernel::{critical_exponent, exponents, q_kernel, q_moment, Params};
use fpme::solver::{mass, rescale_to_mass, solve_slow};
use proptest::prelude::*;

fn admissible() -> impl Strategy<Value = Params> {
    (0.05f64..1.0, 1u32..4, 0.0f64..1.0, 0.1f64..10.0).prop_filter_map("m > m_c", |(alpha, d, t, mass)| {
        let mc = critical_exponent(d);
        // m spread over (m_c, 4)
        let m = mc + (4.0 - mc) * t;
        (m > mc && (m - 1.0).abs() > 1e-3).then_some(Params { alpha, m, d, mass })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_conservation_of_exponents(p in admissible()) {
        let e = exponents(&p).unwrap();
        prop_assert!((e.a - p.d as f64 * e.b).abs() <= 1e-15 * e.a.abs());
        prop_assert!(e.b > 0.0);
    }

    #[test]
    fn kernel_decreases_to_zero(p in admissible()) {
        let mut prev = f64::INFINITY;
        for k in 1..=16 {
            let q = q_kernel(&p, k as f64 / 16.0).unwrap();
            prop_assert!(q >= 0.0 && q <= prev, "eta {} q {q} prev {prev}", k as f64 / 16.0);
            prev = q;
        }
        if p.alpha < 1.0 {
            prop_assert_eq!(q_kernel(&p, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn tail_exponent_solves_its_equation(alpha in 0.2f64..1.0, m in 0.2f64..0.9) {
        let p = Params { alpha, m, d: 1, mass: 1.0 };
        let v = vss(&p).unwrap();
        let t = gamma_star(&p, 1e-13).unwrap();
        let lhs = q_moment(&p, v.gamma_mass + t.gamma_star).unwrap();
        let rhs = m * q_moment(&p, v.gamma_mass).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs, "{lhs} vs {rhs}");
    }
}

#[test]
fn rescaling_composes() {
    let p = Params::new(0.6, 2.5, 1, 1.0).unwrap();
    let (u, _) = solve_slow(&p, 128, 1e-10, 100_000).unwrap();
    let a = rescale_to_mass(&u, 3.0).unwrap();
    let b = rescale_to_mass(&rescale_to_mass(&u, 0.2).unwrap(), 3.0).unwrap();
    assert!((mass(&a) - 3.0).abs() < 1e-10);
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
    }
    for (x, y) in a.mesh.nodes.iter().zip(&b.mesh.nodes) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
    }
}
