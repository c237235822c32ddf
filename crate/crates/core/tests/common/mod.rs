//! Criterion evaluation shared by the acceptance targets.
#![allow(dead_code)]

use fpme::validate::{
    check_classical_gamma_star, check_kernel_closed_form, run_all, CheckResult, Suite, ValidateConfig, ValidationReport,
};

pub struct Line {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn select<'a>(r: &'a ValidationReport, pred: impl Fn(&str) -> bool) -> Vec<&'a CheckResult> {
    r.checks.iter().filter(|c| pred(&c.name)).collect()
}

pub fn all_pass(id: &'static str, checks: &[&CheckResult]) -> Line {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let passed = !checks.is_empty() && failed.is_empty();
    let detail = if checks.is_empty() {
        "no checks ran".to_string()
    } else if failed.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Line { id, passed, detail }
}

pub fn owned(v: &[CheckResult]) -> Vec<&CheckResult> {
    v.iter().collect()
}

pub fn criterion_9(r: &ValidationReport) -> Line {
    all_pass("9", &select(r, |n| n.ends_with("/lieb") || n.ends_with("/equicontinuity")))
}

pub fn criterion_14(r_cstar: &ValidationReport, r_b: &ValidationReport) -> (Line, bool, bool) {
    let bracket_broken = select(r_cstar, |n| n == "fast_tail/bracket").iter().any(|c| !c.passed);
    let fb_broken = select(r_b, |n| n.starts_with("free_boundary/constant")).iter().any(|c| !c.passed);
    let line = Line {
        id: "14",
        passed: bracket_broken && fb_broken,
        detail: format!(
            "c* x1.1 breaks bracket: {}; b x1.01 breaks free-boundary constant: {}",
            if bracket_broken { "yes" } else { "NO" },
            if fb_broken { "yes" } else { "NO" }
        ),
    };
    (line, bracket_broken, fb_broken)
}

pub fn perturbed(suite: Suite, c_star: f64, b: f64) -> ValidationReport {
    run_all(&ValidateConfig { suites: vec![suite], perturb_c_star: c_star, perturb_b: b, ..Default::default() })
}


pub struct Evaluation {
    pub lines: Vec<Line>,
    pub report: ValidationReport,
    /// the c* half of the negative controls
    pub cstar_control: bool,
}

pub fn evaluate() -> Evaluation {
    let r = run_all(&ValidateConfig::default());
    let r_cstar = perturbed(Suite::FastTail, 1.1, 1.0);
    let r_b = perturbed(Suite::FreeBoundary, 1.0, 1.01);

    let k = check_kernel_closed_form(&[0.3, 0.5, 0.8], &[0.5, 2.0, 3.0], 1e-9);
    let g = check_classical_gamma_star(1e-13, 1e-10);
    let (c14, cstar_control, _) = criterion_14(&r_cstar, &r_b);

    // the decrease along m is part of the criterion, so trend checks count here
    let c12 = select(&r, |n| n.starts_with("mesa/") && (n.contains("trend") || n.contains("plateau") || n.contains("alpha_independence")));
    let lines = vec![
        all_pass("1", &owned(&k)),
        all_pass("2", &owned(&g)),
        all_pass("3", &select(&r, |n| n.starts_with("vss/"))),
        all_pass("4", &select(&r, |n| n.starts_with("classical/barenblatt"))),
        all_pass("5", &select(&r, |n| n.starts_with("free_boundary/constant"))),
        all_pass("6", &select(&r, |n| n.starts_with("flux/") && !n.contains("/lieb") && !n.contains("/equi") && !n.contains("/monotone"))),
        all_pass("7", &select(&r, |n| n.starts_with("mass/"))),
        all_pass(
            "8",
            &select(&r, |n| {
                n.ends_with("/monotone_certificate") && (n.starts_with("classical") || n.starts_with("free_boundary") || n.starts_with("flux"))
            }),
        ),
        criterion_9(&r),
        all_pass("10", &select(&r, |n| n.starts_with("linear/"))),
        all_pass("11", &select(&r, |n| n == "fast_tail/bracket")),
        all_pass("12", &c12),
        all_pass("13", &select(&r, |n| n.starts_with("m_to_1/profile") || n.starts_with("m_to_1/mass"))),
        c14,
    ];
    Evaluation { lines, report: r, cstar_control }
}
