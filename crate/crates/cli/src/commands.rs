//! One function per subcommand. Each returns the text for stdout and the
//! process exit code; files go through `write_atomic`.

use fpme::closedform::{free_boundary_constant, gamma_star, head_constant_high_dim, linear_mass, linear_profile, q_at_zero_d1, flux_constant, vss};
use fpme::kernel::{critical_exponent, exponents, q_kernel, Params, Regime};
use fpme::solver::{
    make_mesh, mass, rescale_to_mass, slow_mesh, solve_fast_on, solve_slow, solve_slow_on, DiscreteProfile, Grading,
    MeshRegime, SolveReport,
};
use fpme::validate::{run_all, ValidateConfig};
use serde_json::{json, Map, Value};

use crate::config::{Command, Format, RunConfig};
use crate::output::{fmt_f64, pretty, report_path, write_atomic, Table};
use crate::CliError;

pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Exponents => cmd_exponents(cfg),
        Command::Kernel => cmd_kernel(cfg),
        Command::Constants => cmd_constants(cfg),
        Command::Profile => cmd_profile(cfg),
        Command::Linear => cmd_linear(cfg),
        Command::Validate => cmd_validate(cfg),
    }
}

fn key_values(pairs: &[(String, String)], format: Format) -> String {
    match format {
        Format::Csv => pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect(),
        Format::Json => {
            let mut m = Map::new();
            for (k, v) in pairs {
                m.insert(k.clone(), Value::String(v.clone()));
            }
            pretty(&Value::Object(m))
        }
    }
}

/// Table to `--out` if given, else to stdout.
fn emit(cfg: &RunConfig, table: &Table) -> Result<String, CliError> {
    let text = table.render(cfg.format);
    match &cfg.out {
        Some(path) => {
            write_atomic(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn cmd_exponents(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let e = exponents(&p)?;
    let pairs = vec![
        ("a".into(), fmt_f64(e.a)),
        ("b".into(), fmt_f64(e.b)),
        ("m_c".into(), fmt_f64(critical_exponent(p.d))),
        ("regime".into(), p.regime().to_string()),
    ];
    Ok(Outcome::ok(key_values(&pairs, cfg.format)))
}

fn cmd_kernel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let e = exponents(&p)?;
    let n = cfg.grid_size.max(1);
    let rows = (1..=n)
        .map(|i| {
            let eta = i as f64 / n as f64;
            q_kernel(&p, eta).map(|q| [eta, q])
        })
        .collect::<fpme::Result<Vec<_>>>()?;
    let mut meta = cfg.entries();
    meta.push(("a".into(), fmt_f64(e.a)));
    meta.push(("b".into(), fmt_f64(e.b)));
    Ok(Outcome::ok(emit(cfg, &Table::new(meta, "eta", "Q", rows))?))
}

fn cmd_constants(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let e = exponents(&p)?;
    let mut pairs: Vec<(String, String)> = vec![
        ("regime".into(), p.regime().to_string()),
        ("a".into(), fmt_f64(e.a)),
        ("b".into(), fmt_f64(e.b)),
        ("m_c".into(), fmt_f64(critical_exponent(p.d))),
        ("flux_constant".into(), fmt_f64(flux_constant(&p))),
    ];
    match p.regime() {
        Regime::Fast => {
            let v = vss(&p)?;
            let t = gamma_star(&p, cfg.root_tol)?;
            pairs.push(("c_star".into(), fmt_f64(v.c_star)));
            pairs.push(("gamma".into(), fmt_f64(v.gamma_mass)));
            pairs.push(("gamma_star".into(), fmt_f64(t.gamma_star)));
            pairs.push(("z0".into(), fmt_f64(t.z0)));
            pairs.push(("lambda".into(), fmt_f64(t.lambda)));
        }
        Regime::Slow => {
            pairs.push(("free_boundary_exponent".into(), fmt_f64((2.0 - p.alpha) / (p.m - 1.0))));
            pairs.push(("free_boundary_constant".into(), fmt_f64(free_boundary_constant(&p)?)));
        }
        Regime::Linear => {
            if p.d <= 3 {
                pairs.push(("u_at_zero".into(), fmt_f64(linear_profile(&p, 0.0, &cfg.quadrature())?)));
            }
        }
    }
    if p.d == 1 && p.alpha < 1.0 {
        pairs.push(("q_at_zero".into(), fmt_f64(q_at_zero_d1(&p)?)));
    }
    if let Some(h) = head_constant_high_dim(&p) {
        pairs.push(("head_constant".into(), fmt_f64(h)));
    }
    Ok(Outcome::ok(key_values(&pairs, cfg.format)))
}

fn grading(cfg: &RunConfig, fallback: Grading) -> Result<Grading, CliError> {
    let g = cfg.grading.trim();
    if g.is_empty() || g == "default" {
        return Ok(fallback);
    }
    match g {
        "uniform" => Ok(Grading::Uniform),
        "log" => Ok(Grading::Log),
        _ => match g.strip_prefix("power:").map(|s| s.parse::<f64>()) {
            Some(Ok(p)) => Ok(Grading::Power { p }),
            _ => Err(CliError::Usage(format!("grading must be uniform, log or power:<p>, got `{g}`"))),
        },
    }
}

fn solve(cfg: &RunConfig, p: &Params) -> fpme::Result<(DiscreteProfile, SolveReport)> {
    let bad_grading = |e: CliError| fpme::Error::Param(e.to_string());
    match p.regime() {
        Regime::Slow if cfg.grading.is_empty() || cfg.grading == "default" => {
            solve_slow(p, cfg.grid_size, cfg.tol, cfg.max_iter)
        }
        Regime::Slow => {
            let mesh = slow_mesh(p.d, cfg.grid_size, grading(cfg, Grading::Uniform).map_err(bad_grading)?)?;
            solve_slow_on(p, mesh, cfg.tol, cfg.max_iter)
        }
        _ => {
            let z_max = cfg.z_max.unwrap_or(30.0);
            let g = grading(cfg, Grading::Log).map_err(bad_grading)?;
            let mesh = make_mesh(MeshRegime::Fast { z_min: cfg.z_min, z_max }, cfg.grid_size, g)?;
            solve_fast_on(p, mesh, cfg.tol, cfg.max_iter)
        }
    }
}

fn is_usage(e: &fpme::Error) -> bool {
    matches!(e, fpme::Error::Param(_) | fpme::Error::Regime(_))
}

fn cmd_profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.params();
    let e = exponents(&p)?;
    if p.regime() == Regime::Linear {
        return cmd_linear(cfg);
    }
    let mut meta = cfg.entries();
    meta.push(("regime".into(), p.regime().to_string()));
    meta.push(("a".into(), fmt_f64(e.a)));
    meta.push(("b".into(), fmt_f64(e.b)));
    let result = solve(cfg, &p).and_then(|(u, rep)| Ok((rescale_to_mass(&u, p.mass)?, u, rep)));
    let (r, u, rep) = match result {
        Ok(x) => x,
        Err(err) if is_usage(&err) => return Err(err.into()),
        Err(err) => {
            meta.push(("status".into(), "failed".into()));
            meta.push(("error".into(), err.to_string()));
            if let Some(out) = &cfg.out {
                write_atomic(out, &Table::new(meta, "z", "U", vec![]).render(cfg.format))?;
                write_atomic(&report_path(out), &pretty(&json!({ "status": "failed", "error": err.to_string() })))?;
            }
            return Err(CliError::Numerical(err.to_string()));
        }
    };
    let scale = r.mesh.z_max() / u.mesh.z_max();
    meta.push(("status".into(), "ok".into()));
    meta.push(("iterations".into(), rep.iterations.to_string()));
    meta.push(("residual".into(), fmt_f64(rep.residual_history.last().copied().unwrap_or(f64::NAN))));
    meta.push(("converged".into(), rep.converged.to_string()));
    meta.push(("monotone_certificate".into(), rep.monotone_certificate.to_string()));
    meta.push(("mass_computed".into(), fmt_f64(mass(&r))));
    meta.push(("L".into(), fmt_f64(scale)));
    if p.regime() == Regime::Slow {
        meta.push(("support_end".into(), fmt_f64(r.mesh.z_max())));
    }
    if let Some(t) = &r.tail {
        meta.push(("c_star".into(), fmt_f64(t.c_star)));
        meta.push(("gamma".into(), fmt_f64(t.gamma)));
        meta.push(("gamma_star".into(), fmt_f64(t.gamma_star)));
        meta.push(("tail_l".into(), fmt_f64(t.l)));
        meta.push(("tail_c2".into(), fmt_f64(t.c2)));
    }
    let rows = r.mesh.nodes.iter().zip(&r.values).map(|(&z, &v)| [z, v]).collect();
    let table = Table::new(meta, "z", "U", rows);
    let stdout = emit(cfg, &table)?;
    if let Some(out) = &cfg.out {
        write_atomic(&report_path(out), &pretty(&json!({ "status": "ok", "report": rep })))?;
    }
    Ok(Outcome::ok(stdout))
}

/// m is forced to 1; the grid is z_i = i·z_max/I.
fn cmd_linear(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = Params { m: 1.0, ..cfg.params() };
    let e = exponents(&p)?;
    let spec = cfg.quadrature();
    let z_max = cfg.z_max.unwrap_or(10.0);
    if !(z_max > 0.0) {
        return Err(CliError::Usage(format!("z_max must be positive, got {z_max}")));
    }
    let n = cfg.grid_size.max(1);
    let rows = (0..=n)
        .map(|i| {
            let z = z_max * i as f64 / n as f64;
            linear_profile(&p, z, &spec).map(|u| [z, u])
        })
        .collect::<fpme::Result<Vec<_>>>()?;
    let mut meta = cfg.entries();
    meta.retain(|(k, _)| k != "m");
    meta.push(("m".into(), fmt_f64(1.0)));
    meta.push(("regime".into(), "linear".into()));
    meta.push(("a".into(), fmt_f64(e.a)));
    meta.push(("b".into(), fmt_f64(e.b)));
    meta.push(("status".into(), "ok".into()));
    meta.push(("iterations".into(), "0".into()));
    meta.push(("residual".into(), fmt_f64(0.0)));
    meta.push(("mass_computed".into(), fmt_f64(linear_mass(&p, &spec)?)));
    Ok(Outcome::ok(emit(cfg, &Table::new(meta, "z", "U", rows))?))
}

fn cmd_validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut vc = ValidateConfig {
        quadrature: cfg.quadrature(),
        solver_tol: cfg.tol,
        max_iter: cfg.max_iter,
        root_tol: cfg.root_tol,
        ..ValidateConfig::default()
    };
    if !cfg.only.is_empty() {
        let names: Vec<&str> = cfg.only.iter().map(|s| s.as_str()).collect();
        vc = vc.only(&names).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let report = run_all(&vc);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let json = pretty(&serde_json::to_value(&report.checks).expect("check results serialize"));
    let mut stdout = String::new();
    if let Some(out) = &cfg.out {
        write_atomic(out, &json)?;
    }
    if cfg.format == Format::Json && cfg.out.is_none() {
        stdout = json;
    } else {
        for c in &report.checks {
            let tag = if c.passed { "PASS" } else if c.severity == fpme::validate::Severity::Soft { "WARN" } else { "FAIL" };
            stdout.push_str(&format!("{tag} {} observed={} expected={} tol={}\n", c.name, c.observed, c.expected, c.tolerance));
        }
        stdout.push_str(&format!("{} checks, {} hard failures\n", report.checks.len(), report.hard_failures()));
    }
    Ok(Outcome { stdout, code: if report.all_passed() { 0 } else { 1 } })
}
