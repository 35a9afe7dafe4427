//! Inverse-problem classifiers: does a given system of right-hand sides
//! descend from a variational principle?
//!
//! Covers the phase-space conditions (classical and fractional), the
//! first-order jet conditions with their linear specialization, and the
//! second-order conditions. Residuals are reported symbolically: the
//! violated identity's left-hand side is the certificate of failure.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{frac_partial, is_zero_within, partial, DerivKind, PowerExpr, Var};

/// Symbolic zero test used for every residual.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionSet {
    PhaseSpace,
    PhaseSpaceFractional,
    FirstOrder,
    FirstOrderLinear,
    SecondOrder,
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionSet::PhaseSpace => "phase-space",
            ConditionSet::PhaseSpaceFractional => "phase-space-fractional",
            ConditionSet::FirstOrder => "first-order",
            ConditionSet::FirstOrderLinear => "first-order-linear",
            ConditionSet::SecondOrder => "second-order",
        };
        f.write_str(s)
    }
}

/// One violated identity: which condition family, at which index tuple,
/// with the nonzero residual expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: &'static str,
    pub indices: Vec<usize>,
    pub residual: PowerExpr,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{} ({}): {}", self.condition, idx.join(","), self.residual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzReport {
    pub condition_set: ConditionSet,
    pub satisfied: bool,
    pub violations: Vec<Violation>,
}

impl HelmholtzReport {
    fn new(condition_set: ConditionSet, violations: Vec<Violation>) -> HelmholtzReport {
        HelmholtzReport { condition_set, satisfied: violations.is_empty(), violations }
    }
}

struct Collector {
    violations: Vec<Violation>,
}

impl Collector {
    fn new() -> Collector {
        Collector { violations: Vec::new() }
    }

    fn check(&mut self, condition: &'static str, indices: &[usize], residual: PowerExpr) {
        if !is_zero_within(&residual, RESIDUAL_TOL) {
            self.violations.push(Violation {
                condition,
                indices: indices.to_vec(),
                residual,
            });
        }
    }
}

/// (G, F) right-hand sides of a Hamiltonian system with optional forces:
/// G^i = ∂H/∂p_i + G_f^i, F^i = -∂H/∂q_i + F_f^i.
pub fn phase_space_fields(
    h: &PowerExpr,
    q: &[Var],
    p: &[Var],
    g_forces: &[PowerExpr],
    f_forces: &[PowerExpr],
) -> (Vec<PowerExpr>, Vec<PowerExpr>) {
    let zero = PowerExpr::zero();
    let g = p
        .iter()
        .enumerate()
        .map(|(i, pi)| partial(h, pi).add(g_forces.get(i).unwrap_or(&zero)))
        .collect();
    let f = q
        .iter()
        .enumerate()
        .map(|(i, qi)| partial(h, qi).neg().add(f_forces.get(i).unwrap_or(&zero)))
        .collect();
    (g, f)
}

/// Fractional analogue of [`phase_space_fields`] built with D^α partials
/// (the exact-form construction G = D^α_p H, F = -D^α_q H plus forces).
pub fn phase_space_fields_frac(
    h: &PowerExpr,
    q: &[Var],
    p: &[Var],
    g_forces: &[PowerExpr],
    f_forces: &[PowerExpr],
    alpha: f64,
    kind: DerivKind,
) -> Result<(Vec<PowerExpr>, Vec<PowerExpr>)> {
    let zero = PowerExpr::zero();
    let mut g = Vec::with_capacity(p.len());
    let mut f = Vec::with_capacity(q.len());
    for (i, pi) in p.iter().enumerate() {
        g.push(frac_partial(h, pi, alpha, kind)?.add(g_forces.get(i).unwrap_or(&zero)));
    }
    for (i, qi) in q.iter().enumerate() {
        f.push(frac_partial(h, qi, alpha, kind)?.neg().add(f_forces.get(i).unwrap_or(&zero)));
    }
    Ok((g, f))
}

/// Phase-space conditions on dq_i/dt = G^i, dp_i/dt = F^i:
/// ∂G^i/∂p_j - ∂G^j/∂p_i = 0, ∂G^j/∂q_i + ∂F^i/∂p_j = 0,
/// ∂F^i/∂q_j - ∂F^j/∂q_i = 0.
pub fn check_phase_space(
    g: &[PowerExpr],
    f: &[PowerExpr],
    q: &[Var],
    p: &[Var],
) -> Result<HelmholtzReport> {
    let n = check_dims(g, f, q, p)?;
    let mut col = Collector::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = partial(&g[i], &p[j]).sub(&partial(&g[j], &p[i]));
            col.check("momentum-gradient-antisymmetry", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let r = partial(&g[j], &q[i]).add(&partial(&f[i], &p[j]));
            col.check("cross-gradient", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let r = partial(&f[i], &q[j]).sub(&partial(&f[j], &q[i]));
            col.check("position-gradient-antisymmetry", &[i, j], r);
        }
    }
    Ok(HelmholtzReport::new(ConditionSet::PhaseSpace, col.violations))
}

/// Fractional analogue of [`check_phase_space`] with D^α partials:
/// D^α_{p_j}G^i - D^α_{p_i}G^j = 0, D^α_{q_i}G^j + D^α_{p_j}F^i = 0,
/// D^α_{q_j}F^i - D^α_{q_i}F^j = 0.
pub fn check_phase_space_frac(
    g: &[PowerExpr],
    f: &[PowerExpr],
    q: &[Var],
    p: &[Var],
    alpha: f64,
    kind: DerivKind,
) -> Result<HelmholtzReport> {
    let n = check_dims(g, f, q, p)?;
    let mut col = Collector::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = frac_partial(&g[i], &p[j], alpha, kind)?
                .sub(&frac_partial(&g[j], &p[i], alpha, kind)?);
            col.check("momentum-gradient-antisymmetry", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let r = frac_partial(&g[j], &q[i], alpha, kind)?
                .add(&frac_partial(&f[i], &p[j], alpha, kind)?);
            col.check("cross-gradient", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let r = frac_partial(&f[i], &q[j], alpha, kind)?
                .sub(&frac_partial(&f[j], &q[i], alpha, kind)?);
            col.check("position-gradient-antisymmetry", &[i, j], r);
        }
    }
    Ok(HelmholtzReport::new(ConditionSet::PhaseSpaceFractional, col.violations))
}

fn check_dims(g: &[PowerExpr], f: &[PowerExpr], q: &[Var], p: &[Var]) -> Result<usize> {
    let n = q.len();
    if g.len() != n || f.len() != n || p.len() != n {
        return Err(Error::Domain(format!(
            "dimension mismatch: |G| = {}, |F| = {}, |q| = {}, |p| = {}",
            g.len(),
            f.len(),
            n,
            p.len()
        )));
    }
    Ok(n)
}

/// Total time derivative on a jet chart: ∂_t + Σ rate·∂_coord over the given
/// (coordinate, rate) levels. Errors when the argument depends on a top-level
/// rate the truncated operator cannot produce derivatives of.
fn total_time_derivative(
    e: &PowerExpr,
    t: &Var,
    levels: &[(&[Var], &[Var])],
    top: &[Var],
    jet_order: u8,
) -> Result<PowerExpr> {
    for v in top {
        if e.depends_on(v) {
            return Err(Error::JetOrder(jet_order));
        }
    }
    let mut out = partial(e, t);
    for (coords, rates) in levels {
        for (c, r) in coords.iter().zip(rates.iter()) {
            out = out.add(&partial(e, c).mul(&PowerExpr::var(r)));
        }
    }
    Ok(out)
}

/// First-order conditions for F_i(t, q, qd) = 0: velocity-gradient symmetry
/// ∂F_i/∂qd_j + ∂F_j/∂qd_i = 0, its second-derivative consequence
/// ∂²F_i/∂qd_j∂qd_k = 0, and the position curl coupled through
/// d/dt = ∂_t + qd·∂_q.
pub fn check_first_order(
    f: &[PowerExpr],
    t: &Var,
    q: &[Var],
    qdot: &[Var],
) -> Result<HelmholtzReport> {
    let n = q.len();
    if f.len() != n || qdot.len() != n {
        return Err(Error::Domain("dimension mismatch in first-order check".into()));
    }
    let mut col = Collector::new();
    for i in 0..n {
        for j in i..n {
            let r = partial(&f[i], &qdot[j]).add(&partial(&f[j], &qdot[i]));
            col.check("velocity-gradient-symmetry", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let r = partial(&partial(&f[i], &qdot[j]), &qdot[k]);
                col.check("velocity-linearity", &[i, j, k], r);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let dt_arg = partial(&f[j], &qdot[i]);
            let ddt = total_time_derivative(&dt_arg, t, &[(q, qdot)], qdot, 1)?;
            let r = partial(&f[i], &q[j]).sub(&partial(&f[j], &q[i])).add(&ddt);
            col.check("position-curl", &[i, j], r);
        }
    }
    Ok(HelmholtzReport::new(ConditionSet::FirstOrder, col.violations))
}

/// Conditions for the linear first-order family
/// F_i = C_ij(t,q) qd_j + D_i(t,q): antisymmetry of C, the cyclic gradient
/// sum over q, and the mixed time condition
/// ∂C_ij/∂t - ∂D_i/∂q_j + ∂D_j/∂q_i = 0.
pub fn check_first_order_linear(
    c: &[Vec<PowerExpr>],
    d: &[PowerExpr],
    t: &Var,
    q: &[Var],
) -> Result<HelmholtzReport> {
    let n = q.len();
    if c.len() != n || c.iter().any(|row| row.len() != n) || d.len() != n {
        return Err(Error::Domain("dimension mismatch in linear first-order check".into()));
    }
    let mut col = Collector::new();
    for i in 0..n {
        for j in i..n {
            let r = c[i][j].add(&c[j][i]);
            col.check("antisymmetry", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let r = partial(&c[i][j], &q[k])
                    .add(&partial(&c[j][k], &q[i]))
                    .add(&partial(&c[k][i], &q[j]));
                col.check("cyclic-gradient", &[i, j, k], r);
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let r = partial(&c[i][j], t)
                .sub(&partial(&d[i], &q[j]))
                .add(&partial(&d[j], &q[i]));
            col.check("time-mixed", &[i, j], r);
        }
    }
    Ok(HelmholtzReport::new(ConditionSet::FirstOrderLinear, col.violations))
}

/// Second-order conditions for F_i(t, q, qd, qdd) = 0: acceleration-gradient
/// antisymmetry, the velocity condition
/// ∂F_i/∂qd_j + ∂F_j/∂qd_i - 2 d/dt(∂F_j/∂qdd_i) = 0, and the symmetric
/// position condition
/// ∂F_i/∂q_j - ∂F_j/∂q_i - ½ d/dt(∂F_i/∂qd_j - ∂F_j/∂qd_i) = 0
/// with d/dt = ∂_t + qd·∂_q + qdd·∂_qd.
pub fn check_second_order(
    f: &[PowerExpr],
    t: &Var,
    q: &[Var],
    qdot: &[Var],
    qddot: &[Var],
) -> Result<HelmholtzReport> {
    let n = q.len();
    if f.len() != n || qdot.len() != n || qddot.len() != n {
        return Err(Error::Domain("dimension mismatch in second-order check".into()));
    }
    let levels: [(&[Var], &[Var]); 2] = [(q, qdot), (qdot, qddot)];
    let mut col = Collector::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = partial(&f[i], &qddot[j]).sub(&partial(&f[j], &qddot[i]));
            col.check("acceleration-gradient-antisymmetry", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in i..n {
            let arg = partial(&f[j], &qddot[i]);
            let ddt = total_time_derivative(&arg, t, &levels, qddot, 2)?;
            let r = partial(&f[i], &qdot[j])
                .add(&partial(&f[j], &qdot[i]))
                .sub(&ddt.scale(2.0));
            col.check("velocity-total-derivative", &[i, j], r);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let arg = partial(&f[i], &qdot[j]).sub(&partial(&f[j], &qdot[i]));
            let ddt = total_time_derivative(&arg, t, &levels, qddot, 2)?;
            let r = partial(&f[i], &q[j])
                .sub(&partial(&f[j], &q[i]))
                .sub(&ddt.scale(0.5));
            col.check("position-curl", &[i, j], r);
        }
    }
    Ok(HelmholtzReport::new(ConditionSet::SecondOrder, col.violations))
}
