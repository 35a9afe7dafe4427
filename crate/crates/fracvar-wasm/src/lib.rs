//! wasm-bindgen surface for the browser demo: three interactive operations
//! over the core crate, each returning JSON or plain text for a static page
//! to render. The inner functions are ordinary Rust and are tested on the
//! host; the `#[wasm_bindgen]` wrappers only map errors onto `JsValue`.

use wasm_bindgen::prelude::*;

use fracvar::eqgen;
use fracvar::expr::{parse_expr, PowerExpr, Var};
use fracvar::helmholtz;
use fracvar::numfrac::{simulate, Grid, Method, SolverOptions, SystemDef};
use fracvar::specialfn::mittag_leffler;
use serde_json::json;

fn parse_coords(coords_csv: &str) -> Result<Vec<Var>, fracvar::Error> {
    let names: Vec<&str> = coords_csv.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() || names.len() % 2 != 0 {
        return Err(fracvar::Error::Domain(
            "coords must list an even number of variables (q..., p...)".into(),
        ));
    }
    names.into_iter().map(Var::new).collect()
}

fn parse_x0(x0_csv: &str, dim: usize) -> Result<Vec<f64>, fracvar::Error> {
    let x0: Vec<f64> = x0_csv
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| fracvar::Error::Domain(format!("bad initial state `{x0_csv}`")))?;
    if x0.len() != dim {
        return Err(fracvar::Error::Domain(format!(
            "initial state needs {dim} entries, got {}",
            x0.len()
        )));
    }
    Ok(x0)
}

fn build_system(
    hamiltonian: &str,
    coords_csv: &str,
    alpha: f64,
    friction: f64,
) -> Result<SystemDef, fracvar::Error> {
    let coords = parse_coords(coords_csv)?;
    let n = coords.len() / 2;
    let q = coords[..n].to_vec();
    let p = coords[n..].to_vec();
    let mut chart = vec![Var::new("t")?];
    chart.extend(coords.iter().cloned());
    let h = parse_expr(hamiltonian, &chart)?;
    let mut sys = SystemDef::hamiltonian_system(q, p.clone(), alpha, h)?;
    if friction != 0.0 {
        let g = vec![PowerExpr::zero(); n];
        let f = p.iter().map(|pi| PowerExpr::var(pi).scale(-friction)).collect();
        sys = sys.with_forces(g, f)?;
    }
    Ok(sys)
}

pub fn trajectory_json_inner(
    hamiltonian: &str,
    coords_csv: &str,
    alpha: f64,
    friction: f64,
    x0_csv: &str,
    t1: f64,
    h: f64,
) -> Result<String, fracvar::Error> {
    let sys = build_system(hamiltonian, coords_csv, alpha, friction)?;
    let eom_state = sys.derive()?.state;
    let x0 = parse_x0(x0_csv, eom_state.len())?;
    let grid = Grid::from_span(0.0, t1, h)?;
    if grid.n > 200_000 {
        return Err(fracvar::Error::Domain(format!(
            "grid of {} steps is too large for the demo",
            grid.n
        )));
    }
    let traj = simulate(&sys, &x0, &grid, &SolverOptions::default())?;
    let t: Vec<f64> = (0..traj.states.len()).map(|k| traj.grid.node(k)).collect();
    let mut columns = serde_json::Map::new();
    for (m, var) in traj.state_vars.iter().enumerate() {
        let col: Vec<f64> = traj.states.iter().map(|row| row[m]).collect();
        columns.insert(var.name().to_string(), json!(col));
    }
    let doc = json!({
        "t": t,
        "columns": columns,
        "energy": traj.energy,
        "alpha": traj.meta.alpha,
        "method": traj.meta.method,
        "truncated": traj.meta.truncated,
    });
    Ok(doc.to_string())
}

pub fn relaxation_json_inner(alpha: f64, t1: f64, h: f64) -> Result<String, fracvar::Error> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(fracvar::Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let grid = Grid::from_span(0.0, t1, h)?;
    if grid.n > 20_000 {
        return Err(fracvar::Error::Domain("grid too large for the demo".into()));
    }
    let rhs = |_t: f64, y: &[f64], out: &mut [f64]| -> fracvar::Result<()> {
        out[0] = -y[0];
        Ok(())
    };
    let kinds = [eqgen::LhsKind::CaputoRate(alpha)];
    let traj = fracvar::numfrac::solve_frac_ivp(
        &rhs,
        &kinds,
        &[1.0],
        &grid,
        &SolverOptions { method: Method::Pece, memory_window: None },
    )?;
    let t: Vec<f64> = (0..traj.states.len()).map(|k| traj.grid.node(k)).collect();
    let numeric: Vec<f64> = traj.states.iter().map(|row| row[0]).collect();
    let oracle: Vec<f64> = t
        .iter()
        .map(|&tk| {
            if tk == 0.0 {
                Ok(1.0)
            } else {
                mittag_leffler(alpha, -tk.powf(alpha), 1e-12)
            }
        })
        .collect::<fracvar::Result<_>>()?;
    Ok(json!({ "t": t, "numeric": numeric, "oracle": oracle, "alpha": alpha }).to_string())
}

pub fn derive_text_inner(
    hamiltonian: &str,
    coords_csv: &str,
    alpha: f64,
    friction: f64,
) -> Result<String, fracvar::Error> {
    let sys = build_system(hamiltonian, coords_csv, alpha, friction)?;
    let eom = sys.derive()?;
    let h = sys.hamiltonian.as_ref().unwrap();

    let mut out = String::new();
    out.push_str(&format!("H = {h}\n"));
    out.push_str(&format!("origin: {}\n\n", eom.origin));
    for law in &eom.laws {
        out.push_str(&format!("{law}\n"));
    }

    let (g_cl, f_cl) =
        helmholtz::phase_space_fields(h, &sys.q, &sys.second, &sys.forces_g, &sys.forces_f);
    let classical = helmholtz::check_phase_space(&g_cl, &f_cl, &sys.q, &sys.second)?;
    let (g_fr, f_fr) = helmholtz::phase_space_fields_frac(
        h, &sys.q, &sys.second, &sys.forces_g, &sys.forces_f, sys.alpha, sys.kind,
    )?;
    let fractional =
        helmholtz::check_phase_space_frac(&g_fr, &f_fr, &sys.q, &sys.second, sys.alpha, sys.kind)?;

    out.push_str(&format!("\nhamiltonian system: {}\n", classical.satisfied));
    for v in &classical.violations {
        out.push_str(&format!("  {v}\n"));
    }
    out.push_str(&format!(
        "fractional hamiltonian system (alpha={}): {}\n",
        sys.alpha, fractional.satisfied
    ));
    for v in &fractional.violations {
        out.push_str(&format!("  {v}\n"));
    }
    Ok(out)
}

fn to_js<T>(r: Result<T, fracvar::Error>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Simulate a (fractional, optionally damped) Hamiltonian system and return
/// the trajectory as JSON.
#[wasm_bindgen]
pub fn trajectory_json(
    hamiltonian: &str,
    coords: &str,
    alpha: f64,
    friction: f64,
    x0: &str,
    t1: f64,
    h: f64,
) -> Result<String, JsValue> {
    to_js(trajectory_json_inner(hamiltonian, coords, alpha, friction, x0, t1, h))
}

/// Fractional relaxation curve: the integrator against the Mittag-Leffler
/// series, as JSON.
#[wasm_bindgen]
pub fn relaxation_json(alpha: f64, t1: f64, h: f64) -> Result<String, JsValue> {
    to_js(relaxation_json_inner(alpha, t1, h))
}

/// Derived equations of motion plus the Helmholtz verdicts, as plain text.
#[wasm_bindgen]
pub fn derive_text(
    hamiltonian: &str,
    coords: &str,
    alpha: f64,
    friction: f64,
) -> Result<String, JsValue> {
    to_js(derive_text_inner(hamiltonian, coords, alpha, friction))
}
