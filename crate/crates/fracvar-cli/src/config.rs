//! INI-style system-definition files: `[section]` headers and `key = value`
//! lines, `#`/`;` comments, quoted expression strings.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fracvar::expr::{parse_expr, DerivKind, PowerExpr, Var};
use fracvar::numfrac::{Method, SystemDef};

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    fn new(msg: impl Into<String>) -> ConfigError {
        ConfigError { message: msg.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.message)
    }
}

#[derive(Debug, Clone)]
pub struct SimSection {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Default)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub coords: Vec<String>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub hamiltonian: Option<String>,
    pub lagrangian: Option<String>,
    pub deriv: DerivKind,
    pub forces_g: BTreeMap<usize, String>,
    pub forces_f: BTreeMap<usize, String>,
    pub simulate: Option<SimSection>,
    pub output: OutputSection,
}

type Sections = BTreeMap<String, BTreeMap<String, (String, usize)>>;

fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(format!("line {}: unclosed section header", lineno + 1)))?;
            current = name.trim().to_lowercase();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("line {}: expected `key = value`", lineno + 1)))?;
        if current.is_empty() {
            return Err(ConfigError::new(format!("line {}: key outside any section", lineno + 1)));
        }
        let key = key.trim().to_string();
        let mut value = value.trim().to_string();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = value[1..value.len() - 1].to_string();
        }
        sections
            .get_mut(&current)
            .unwrap()
            .insert(key, (value, lineno + 1));
    }
    Ok(sections)
}

fn parse_f64(value: &str, what: &str) -> Result<f64, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::new(format!("{what}: `{value}` is not a number")))
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let sections = parse_sections(text)?;
    let system = sections
        .get("system")
        .ok_or_else(|| ConfigError::new("missing [system] section"))?;

    let coords = system
        .get("coords")
        .map(|(v, _)| parse_list(v))
        .ok_or_else(|| ConfigError::new("[system] is missing `coords`"))?;
    if coords.is_empty() || coords.len() % 2 != 0 {
        return Err(ConfigError::new(
            "coords must list an even number of variables (positions then momenta/velocities)",
        ));
    }
    if coords.iter().any(|c| c == "t") {
        return Err(ConfigError::new("`t` is the time variable and cannot be a coordinate"));
    }

    let alpha = parse_f64(
        &system
            .get("alpha")
            .map(|(v, _)| v.clone())
            .ok_or_else(|| ConfigError::new("[system] is missing `alpha`"))?,
        "alpha",
    )?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ConfigError::new(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let beta = system.get("beta").map(|(v, _)| parse_f64(v, "beta")).transpose()?;

    let hamiltonian = system.get("hamiltonian").map(|(v, _)| v.clone());
    let lagrangian = system.get("lagrangian").map(|(v, _)| v.clone());
    if hamiltonian.is_some() == lagrangian.is_some() {
        return Err(ConfigError::new(
            "[system] needs exactly one of `hamiltonian` or `lagrangian`",
        ));
    }

    let deriv = match system.get("deriv").map(|(v, _)| v.to_lowercase()) {
        None => DerivKind::Caputo,
        Some(s) if s == "caputo" => DerivKind::Caputo,
        Some(s) if s == "rl" || s == "riemann-liouville" => DerivKind::RiemannLiouville,
        Some(s) => return Err(ConfigError::new(format!("deriv must be caputo or rl, got `{s}`"))),
    };

    let mut forces_g = BTreeMap::new();
    let mut forces_f = BTreeMap::new();
    if let Some(forces) = sections.get("forces") {
        for (key, (value, lineno)) in forces {
            let (which, idx) = key
                .split_once('_')
                .ok_or_else(|| ConfigError::new(format!("line {lineno}: force keys look like F_1, G_2")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| ConfigError::new(format!("line {lineno}: bad force index `{idx}`")))?;
            if idx == 0 || idx > coords.len() / 2 {
                return Err(ConfigError::new(format!(
                    "line {lineno}: force index {idx} out of range 1..={}",
                    coords.len() / 2
                )));
            }
            match which {
                "F" => forces_f.insert(idx - 1, value.clone()),
                "G" => forces_g.insert(idx - 1, value.clone()),
                other => {
                    return Err(ConfigError::new(format!(
                        "line {lineno}: unknown force family `{other}`"
                    )))
                }
            };
        }
    }

    let simulate = match sections.get("simulate") {
        None => None,
        Some(sim) => {
            let get = |key: &str| -> Result<String, ConfigError> {
                sim.get(key)
                    .map(|(v, _)| v.clone())
                    .ok_or_else(|| ConfigError::new(format!("[simulate] is missing `{key}`")))
            };
            let x0: Vec<f64> = parse_list(&get("x0")?)
                .iter()
                .map(|s| parse_f64(s, "x0 entry"))
                .collect::<Result<_, _>>()?;
            let t0 = parse_f64(&get("t0")?, "t0")?;
            let t1 = parse_f64(&get("t1")?, "t1")?;
            let h = parse_f64(&get("h")?, "h")?;
            if !(h > 0.0) {
                return Err(ConfigError::new(format!("h must be positive, got {h}")));
            }
            if !(t1 > t0) {
                return Err(ConfigError::new(format!("need t1 > t0, got [{t0}, {t1}]")));
            }
            let method = match sim.get("method").map(|(v, _)| v.to_lowercase()) {
                None => Method::Pece,
                Some(s) if s == "pece" => Method::Pece,
                Some(s) if s == "gl" => Method::Gl,
                Some(s) => {
                    return Err(ConfigError::new(format!("method must be pece or gl, got `{s}`")))
                }
            };
            Some(SimSection { x0, t0, t1, h, method })
        }
    };

    let output = match sections.get("output") {
        None => OutputSection::default(),
        Some(out) => OutputSection {
            csv: out.get("csv").map(|(v, _)| PathBuf::from(v)),
            report: out.get("report").map(|(v, _)| PathBuf::from(v)),
            svg: out.get("svg").map(|(v, _)| PathBuf::from(v)),
        },
    };

    Ok(Config {
        coords,
        alpha,
        beta,
        hamiltonian,
        lagrangian,
        deriv,
        forces_g,
        forces_f,
        simulate,
        output,
    })
}

/// Chart variables (t first, then the declared coordinates).
pub fn chart_vars(config: &Config) -> Result<Vec<Var>, fracvar::Error> {
    let mut vars = vec![Var::new("t")?];
    for name in &config.coords {
        vars.push(Var::new(name.clone())?);
    }
    Ok(vars)
}

/// Build the SystemDef: first half of coords are positions, second half
/// momenta (Hamiltonian) or velocities (Lagrangian).
pub fn build_system(config: &Config) -> Result<SystemDef, fracvar::Error> {
    let chart = chart_vars(config)?;
    let n = config.coords.len() / 2;
    let q: Vec<Var> = chart[1..=n].to_vec();
    let second: Vec<Var> = chart[n + 1..].to_vec();

    let mut def = if let Some(text) = &config.hamiltonian {
        let h = parse_expr(text, &chart)?;
        SystemDef::hamiltonian_system(q, second, config.alpha, h)?
    } else {
        let l = parse_expr(config.lagrangian.as_ref().unwrap(), &chart)?;
        SystemDef::lagrangian_system(q, second, config.alpha, l)?
    };

    if !config.forces_g.is_empty() || !config.forces_f.is_empty() {
        let parse_forces = |m: &BTreeMap<usize, String>| -> Result<Vec<PowerExpr>, fracvar::Error> {
            (0..n)
                .map(|i| match m.get(&i) {
                    Some(text) => parse_expr(text, &chart),
                    None => Ok(PowerExpr::zero()),
                })
                .collect()
        };
        let g = parse_forces(&config.forces_g)?;
        let f = parse_forces(&config.forces_f)?;
        def = def.with_forces(g, f)?;
    }
    if let Some(b) = config.beta {
        def = def.with_beta(b)?;
    }
    def = def.with_deriv(config.deriv);
    Ok(def)
}
