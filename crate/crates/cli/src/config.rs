//! Run configuration: defaults, then a `key = value` file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpme::kernel::Params;
use fpme::specfun::QuadratureSpec;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Similarity exponents a, b, the critical exponent and the regime
    Exponents,
    /// Kernel Q on a uniform η grid
    Kernel,
    /// Closed-form constants of the regime
    Constants,
    /// Solve for the mass-M profile
    Profile,
    /// m = 1 profile from its Fourier representation
    Linear,
    /// Run the diagnostic suite
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Exponents => "exponents",
            Command::Kernel => "kernel",
            Command::Constants => "constants",
            Command::Profile => "profile",
            Command::Linear => "linear",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fpme", version, about = "Self-similar profiles of the time-fractional porous medium equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Every flag is optional so that unset flags fall through to the config file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true)]
    pub d: Option<u32>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// number of cells I
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    /// uniform, log, or power:<p>
    #[arg(long, global = true)]
    pub grading: Option<String>,
    #[arg(long, global = true)]
    pub z_min: Option<f64>,
    #[arg(long, global = true)]
    pub z_max: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub quad_abs_tol: Option<f64>,
    #[arg(long, global = true)]
    pub quad_rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub root_tol: Option<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// comma-separated check suites (validate)
    #[arg(long, global = true, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub m: f64,
    pub d: u32,
    pub mass: f64,
    pub grid_size: usize,
    /// empty means the regime default
    pub grading: String,
    pub z_min: f64,
    /// None means the command default
    pub z_max: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub root_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub only: Vec<String>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let q = QuadratureSpec::default();
        Self {
            command,
            alpha: 0.5,
            m: 2.0,
            d: 1,
            mass: 1.0,
            grid_size: 256,
            grading: String::new(),
            z_min: 1e-3,
            z_max: None,
            tol: 1e-10,
            max_iter: 100_000,
            quad_abs_tol: q.abs_tol,
            quad_rel_tol: q.rel_tol,
            root_tol: 1e-13,
            out: None,
            format: Format::Csv,
            only: Vec::new(),
        }
    }

    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self, CliError> {
        let mut c = Self::defaults(command);
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            c.apply_file(&text, path)?;
        }
        c.apply_flags(flags);
        Ok(c)
    }

    pub fn apply_file(&mut self, text: &str, path: &Path) -> Result<(), CliError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Usage(format!("{}:{}: {msg}", path.display(), k + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim()).map_err(at)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("field `{key}`: cannot parse `{v}`"))
        }
        match key.replace('-', "_").as_str() {
            "alpha" => self.alpha = num(key, v)?,
            "m" => self.m = num(key, v)?,
            "d" => self.d = num(key, v)?,
            "mass" => self.mass = num(key, v)?,
            "grid_size" => self.grid_size = num(key, v)?,
            "grading" => self.grading = v.to_string(),
            "z_min" => self.z_min = num(key, v)?,
            "z_max" => self.z_max = Some(num(key, v)?),
            "tol" => self.tol = num(key, v)?,
            "max_iter" => self.max_iter = num(key, v)?,
            "quad_abs_tol" => self.quad_abs_tol = num(key, v)?,
            "quad_rel_tol" => self.quad_rel_tol = num(key, v)?,
            "root_tol" => self.root_tol = num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = Format::parse(v).ok_or_else(|| format!("field `{key}`: expected csv or json, got `{v}`"))?,
            "only" => self.only = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            _ => return Err(format!("unknown field `{key}`")),
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Flags) {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field.clone() { self.$field = v; } )* };
        }
        take!(alpha, m, d, mass, grid_size, grading, z_min, tol, max_iter, quad_abs_tol, quad_rel_tol, root_tol, format, only);
        if let Some(v) = f.z_max {
            self.z_max = Some(v);
        }
        if let Some(v) = &f.out {
            self.out = Some(v.clone());
        }
    }

    pub fn params(&self) -> Params {
        Params { alpha: self.alpha, m: self.m, d: self.d, mass: self.mass }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { abs_tol: self.quad_abs_tol, rel_tol: self.quad_rel_tol, ..QuadratureSpec::default() }
    }

    /// `key=value` pairs for every field, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let f = crate::output::fmt_f64;
        vec![
            ("command".into(), self.command.name().into()),
            ("alpha".into(), f(self.alpha)),
            ("m".into(), f(self.m)),
            ("d".into(), self.d.to_string()),
            ("mass".into(), f(self.mass)),
            ("grid_size".into(), self.grid_size.to_string()),
            ("grading".into(), if self.grading.is_empty() { "default".into() } else { self.grading.clone() }),
            ("z_min".into(), f(self.z_min)),
            ("z_max".into(), self.z_max.map_or("default".into(), f)),
            ("tol".into(), f(self.tol)),
            ("max_iter".into(), self.max_iter.to_string()),
            ("quad_abs_tol".into(), f(self.quad_abs_tol)),
            ("quad_rel_tol".into(), f(self.quad_rel_tol)),
            ("root_tol".into(), f(self.root_tol)),
            ("format".into(), self.format.name().into()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::defaults(Command::Profile);
        c.apply_file("# run\nalpha = 0.3\nm=3 # slow\n\ngrid-size = 64\nformat = json\n", Path::new("run.cfg")).unwrap();
        assert_eq!((c.alpha, c.m, c.grid_size, c.format), (0.3, 3.0, 64, Format::Json));
        c.apply_flags(&Flags { m: Some(4.0), ..Default::default() });
        assert_eq!((c.alpha, c.m), (0.3, 4.0));
    }

    #[test]
    fn file_errors_name_line_and_field() {
        let mut c = RunConfig::defaults(Command::Profile);
        let e = c.apply_file("alpha = 0.3\nm = two\n", Path::new("x.cfg")).unwrap_err();
        assert_eq!(e.to_string(), "x.cfg:2: field `m`: cannot parse `two`");
        let e = c.apply_file("\nalpha 0.3\n", Path::new("x.cfg")).unwrap_err();
        assert!(e.to_string().starts_with("x.cfg:2: expected"));
        let e = c.apply_file("beta = 1\n", Path::new("x.cfg")).unwrap_err();
        assert_eq!(e.to_string(), "x.cfg:1: unknown field `beta`");
    }
}
