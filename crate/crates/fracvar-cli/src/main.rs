//! `fracvar`: classify, derive and simulate fractional dynamical systems.
//!
//! Exit codes: 0 success, 2 input error, 3 derivation error, 4 integration
//! error (partial CSV written with a truncation footer).

mod config;
mod report;
mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracvar::eqgen;
use fracvar::expr::{eval, frac_partial, parse_expr, DerivKind, Var};
use fracvar::numfrac::{self, simulate, Grid, SolverOptions, Trajectory};
use fracvar::specialfn::mittag_leffler;
use fracvar::Error as FvError;

use config::{build_system, parse_config, Config};
use report::{ClassifyReport, DeriveReport};

#[derive(Parser)]
#[command(name = "fracvar", version, about = "fractional variational mechanics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// System definition file
    #[arg(long)]
    config: PathBuf,
    /// Directory that relative output paths are joined onto
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress report output on stdout
    #[arg(long)]
    quiet: bool,
    /// Emit the report as JSON instead of structured text
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the (fractional) Helmholtz conditions for a configured system
    Classify(CommonOpts),
    /// Derive and print the equations of motion
    Derive(CommonOpts),
    /// Integrate the system and write a CSV trajectory (and optional SVG)
    Simulate(CommonOpts),
    /// Compare the analytic Caputo derivative of an expression in t with
    /// the quadrature value
    Caputo {
        #[arg(long)]
        alpha: f64,
        /// Expression over the single variable t
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        /// Evaluation time (must be positive)
        #[arg(long)]
        t: f64,
        /// Quadrature step (must divide t)
        #[arg(long, default_value_t = 1e-4)]
        h: f64,
    },
    /// Evaluate the Mittag-Leffler function E_alpha(z)
    Ml {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
    },
}

const EXIT_INPUT: u8 = 2;
const EXIT_DERIVE: u8 = 3;
const EXIT_INTEGRATE: u8 = 4;

fn exit_for(e: &FvError) -> u8 {
    match e {
        FvError::DegenerateLagrangian
        | FvError::NonInvertibleMomentum
        | FvError::CompositeLhs(_)
        | FvError::JetOrder(_)
        | FvError::Compile(_) => EXIT_DERIVE,
        FvError::SingularMomentum { .. } | FvError::Blowup { .. } => EXIT_INTEGRATE,
        _ => EXIT_INPUT,
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("fracvar: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify(opts) => with_config(&opts, cmd_classify),
        Command::Derive(opts) => with_config(&opts, cmd_derive),
        Command::Simulate(opts) => with_config(&opts, cmd_simulate),
        Command::Caputo { alpha, expr, t, h } => cmd_caputo(alpha, &expr, t, h),
        Command::Ml { alpha, z } => cmd_ml(alpha, z),
    }
}

fn with_config(opts: &CommonOpts, f: fn(&CommonOpts, &Config) -> ExitCode) -> ExitCode {
    let text = match std::fs::read_to_string(&opts.config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, format!("{}: {e}", opts.config.display())),
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    f(opts, &config)
}

fn out_path(opts: &CommonOpts, p: &Path) -> PathBuf {
    match (&opts.out, p.is_relative()) {
        (Some(dir), true) => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn write_file(opts: &CommonOpts, p: &Path, contents: &str) -> Result<(), ExitCode> {
    let path = out_path(opts, p);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            let _ = std::fs::create_dir_all(parent);
        }
    }
    std::fs::write(&path, contents)
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn emit_report(opts: &CommonOpts, text: &str) -> Result<(), ExitCode> {
    if !opts.quiet {
        print!("{text}");
    }
    Ok(())
}

fn deriv_name(kind: DerivKind) -> &'static str {
    match kind {
        DerivKind::Caputo => "caputo",
        DerivKind::RiemannLiouville => "riemann-liouville",
    }
}

fn cmd_classify(opts: &CommonOpts, config: &Config) -> ExitCode {
    if config.hamiltonian.is_none() {
        return fail(EXIT_INPUT, "classify needs a hamiltonian system");
    }
    let sys = match build_system(config) {
        Ok(s) => s,
        Err(e) => return fail(exit_for(&e), e),
    };
    let h = sys.hamiltonian.as_ref().unwrap();
    let n = sys.q.len();
    let zero = fracvar::expr::PowerExpr::zero();
    let force_g = |i: usize| sys.forces_g.get(i).unwrap_or(&zero).clone();
    let force_f = |i: usize| sys.forces_f.get(i).unwrap_or(&zero).clone();

    let (g_cl, f_cl) =
        fracvar::helmholtz::phase_space_fields(h, &sys.q, &sys.second, &sys.forces_g, &sys.forces_f);
    let classical = match fracvar::helmholtz::check_phase_space(&g_cl, &f_cl, &sys.q, &sys.second) {
        Ok(r) => r,
        Err(e) => return fail(exit_for(&e), e),
    };

    let (g_fr, f_fr) = match fracvar::helmholtz::phase_space_fields_frac(
        h, &sys.q, &sys.second, &sys.forces_g, &sys.forces_f, sys.alpha, sys.kind,
    ) {
        Ok(gf) => gf,
        Err(e) => return fail(exit_for(&e), e),
    };
    let fractional = match fracvar::helmholtz::check_phase_space_frac(
        &g_fr, &f_fr, &sys.q, &sys.second, sys.alpha, sys.kind,
    ) {
        Ok(r) => r,
        Err(e) => return fail(exit_for(&e), e),
    };

    let rep = ClassifyReport {
        alpha: sys.alpha,
        deriv: deriv_name(sys.kind).to_string(),
        coords: config.coords.clone(),
        hamiltonian: h.to_string(),
        forces_g: (0..n).map(|i| force_g(i).to_string()).collect(),
        forces_f: (0..n).map(|i| force_f(i).to_string()).collect(),
        classical,
        fractional,
    };
    let text = if opts.json { rep.render_json() } else { rep.render_text() };
    if let Some(path) = &config.output.report {
        if let Err(code) = write_file(opts, path, &text) {
            return code;
        }
    }
    if emit_report(opts, &text).is_err() {
        return ExitCode::from(EXIT_INPUT);
    }
    ExitCode::SUCCESS
}

fn cmd_derive(opts: &CommonOpts, config: &Config) -> ExitCode {
    let sys = match build_system(config) {
        Ok(s) => s,
        Err(e) => return fail(exit_for(&e), e),
    };
    let eom = match sys.derive() {
        Ok(e) => e,
        Err(e) => return fail(exit_for(&e), e),
    };
    let el_operators = if let Some(l) = &sys.lagrangian {
        match eqgen::frac_el_operator(l, &sys.q, &sys.second, sys.alpha, sys.kind) {
            Ok(ops) => ops,
            Err(e) => return fail(exit_for(&e), e),
        }
    } else {
        Vec::new()
    };
    let source = sys
        .hamiltonian
        .as_ref()
        .map(|h| format!("H = {h}"))
        .unwrap_or_else(|| format!("L = {}", sys.lagrangian.as_ref().unwrap()));
    let rep = DeriveReport {
        alpha: sys.alpha,
        deriv: deriv_name(sys.kind).to_string(),
        coords: config.coords.clone(),
        source,
        eom,
        el_operators,
    };
    let text = if opts.json { rep.render_json() } else { rep.render_text() };
    if let Some(path) = &config.output.report {
        if let Err(code) = write_file(opts, path, &text) {
            return code;
        }
    }
    if emit_report(opts, &text).is_err() {
        return ExitCode::from(EXIT_INPUT);
    }
    ExitCode::SUCCESS
}

fn render_csv(traj: &Trajectory, with_energy: bool) -> String {
    let mut out = String::new();
    out.push('t');
    for v in &traj.state_vars {
        out.push(',');
        out.push_str(v.name());
    }
    if with_energy {
        out.push_str(",H");
    }
    out.push('\n');
    let energy = traj.energy.as_deref().unwrap_or(&[]);
    for (k, row) in traj.states.iter().enumerate() {
        out.push_str(&format!("{}", traj.grid.node(k)));
        for x in row {
            out.push_str(&format!(",{x}"));
        }
        if with_energy {
            out.push_str(&format!(",{}", energy[k]));
        }
        out.push('\n');
    }
    if let Some(reason) = &traj.meta.truncated {
        out.push_str(&format!("# truncated: {reason}\n"));
    }
    out
}

fn cmd_simulate(opts: &CommonOpts, config: &Config) -> ExitCode {
    let Some(sim) = &config.simulate else {
        return fail(EXIT_INPUT, "simulate needs a [simulate] section");
    };
    let Some(csv_path) = &config.output.csv else {
        return fail(EXIT_INPUT, "simulate needs an [output] csv path");
    };
    let sys = match build_system(config) {
        Ok(s) => s,
        Err(e) => return fail(exit_for(&e), e),
    };
    let grid = match Grid::from_span(sim.t0, sim.t1, sim.h) {
        Ok(g) => g,
        Err(e) => return fail(exit_for(&e), e),
    };
    let solver = SolverOptions { method: sim.method, memory_window: None };
    let traj = match simulate(&sys, &sim.x0, &grid, &solver) {
        Ok(t) => t,
        Err(e) => return fail(exit_for(&e), e),
    };

    let csv = render_csv(&traj, traj.energy.is_some());
    if let Err(code) = write_file(opts, csv_path, &csv) {
        return code;
    }
    if let Some(svg_path) = &config.output.svg {
        if let Err(code) = write_file(opts, svg_path, &svg::render(&traj)) {
            return code;
        }
    }
    if !opts.quiet {
        println!(
            "wrote {} rows to {} (method {}, alpha {})",
            traj.states.len(),
            out_path(opts, csv_path).display(),
            traj.meta.method,
            traj.meta.alpha
        );
    }
    if let Some(reason) = &traj.meta.truncated {
        eprintln!("fracvar: integration truncated: {reason}");
        return ExitCode::from(EXIT_INTEGRATE);
    }
    ExitCode::SUCCESS
}

fn cmd_caputo(alpha: f64, expr_text: &str, t: f64, h: f64) -> ExitCode {
    let t_var = match Var::new("t") {
        Ok(v) => v,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let chart = [t_var.clone()];
    let f_expr = match parse_expr(expr_text, &chart) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    if !(alpha > 0.0) {
        return fail(EXIT_INPUT, format!("alpha must be positive, got {alpha}"));
    }
    if !(t > 0.0) {
        return fail(EXIT_INPUT, format!("t must be positive, got {t}"));
    }
    let deriv = match frac_partial(&f_expr, &t_var, alpha, DerivKind::Caputo) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let mut point = BTreeMap::new();
    point.insert(t_var.clone(), t);
    let analytic = match eval(&deriv, &point) {
        Ok(x) => x,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    println!("analytic: {analytic}");
    if alpha < 1.0 {
        let callable = {
            let f_expr = f_expr.clone();
            let t_var = t_var.clone();
            move |y: f64| {
                let mut pt = BTreeMap::new();
                pt.insert(t_var.clone(), y);
                eval(&f_expr, &pt).unwrap_or(f64::NAN)
            }
        };
        match numfrac::caputo_num(&callable, alpha, t, h) {
            Ok(quad) => {
                println!("quadrature: {quad}");
                println!("difference: {:e}", (quad - analytic).abs());
            }
            Err(e) => return fail(EXIT_INPUT, e),
        }
    } else {
        println!("quadrature: n/a (alpha outside (0,1))");
    }
    ExitCode::SUCCESS
}

fn cmd_ml(alpha: f64, z: f64) -> ExitCode {
    match mittag_leffler(alpha, z, 1e-12) {
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_INPUT, e),
    }
}
