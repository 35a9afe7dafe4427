//! Symbolic derivation of equations of motion from a Hamiltonian or
//! Lagrangian: classical Hamilton equations, their fractional
//! generalization (including the momentum-power variant), classical and
//! fractional Euler-Lagrange systems, and the non-Hamiltonian equations
//! with non-potential forces.
//!
//! Fractional q-laws arrive as (dq/dt)^α = R and are resolved with the
//! signed-power branch convention dq/dt = sign(R)·|R|^{1/α}, which keeps
//! the α → 1 limit continuous.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{frac_partial, partial, DerivKind, PowerExpr, Var};
use crate::specialfn::gamma;

/// What kind of rate sits on the left of a law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LhsKind {
    /// d(var)/dt
    OrdinaryRate,
    /// Caputo rate D^α_t var (terminal at the trajectory start)
    CaputoRate(f64),
    /// Composite Caputo rate D^α_t (var^β); has no explicit form unless
    /// β = 1, and is simulated through the substitution u = var^β when
    /// β = α and the momentum stays positive.
    CaputoPowerRate { alpha: f64, beta: f64 },
}

/// Right-hand side of a law: either an expression or the signed-power
/// extraction spow(inner, exponent) = sign·|inner|^exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Expr(PowerExpr),
    SignedPower { inner: PowerExpr, exponent: f64 },
}

impl Rhs {
    pub fn as_expr(&self) -> Option<&PowerExpr> {
        match self {
            Rhs::Expr(e) => Some(e),
            Rhs::SignedPower { .. } => None,
        }
    }

    fn signed_power(inner: PowerExpr, exponent: f64) -> Rhs {
        // spow(x, 1) = x and spow(0, r) = 0 simplify away
        if exponent == 1.0 || inner.is_zero() {
            Rhs::Expr(inner)
        } else {
            Rhs::SignedPower { inner, exponent }
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Expr(e) => write!(f, "{e}"),
            Rhs::SignedPower { inner, exponent } => write!(f, "spow({inner}, {exponent})"),
        }
    }
}

/// One evolution law for one state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Law {
    pub var: Var,
    pub lhs: LhsKind,
    pub rhs: Rhs,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lhs {
            LhsKind::OrdinaryRate => write!(f, "d{}/dt = {}", self.var, self.rhs),
            LhsKind::CaputoRate(alpha) => write!(f, "D^{alpha}_t {} = {}", self.var, self.rhs),
            LhsKind::CaputoPowerRate { alpha, beta } => {
                write!(f, "D^{alpha}_t {}^{beta} = {}", self.var, self.rhs)
            }
        }
    }
}

/// An algebraic constraint var = rhs carried alongside the laws when a
/// momentum cannot be eliminated symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub var: Var,
    pub rhs: PowerExpr,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.var, self.rhs)
    }
}

/// Derived first-order evolution laws with symbolic right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationsOfMotion {
    /// State variables in chart order; every law's `var` appears here.
    pub state: Vec<Var>,
    pub laws: Vec<Law>,
    pub constraints: Vec<Constraint>,
    /// Which derivation produced this system, e.g. "hamilton" or
    /// "fractional-hamilton(alpha=0.5)".
    pub origin: String,
}

impl EquationsOfMotion {
    pub fn law_for(&self, var: &Var) -> Option<&Law> {
        self.laws.iter().find(|l| &l.var == var)
    }
}

impl fmt::Display for EquationsOfMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "origin: {}", self.origin)?;
        for law in &self.laws {
            writeln!(f, "{law}")?;
        }
        for c in &self.constraints {
            writeln!(f, "constraint: {c}")?;
        }
        Ok(())
    }
}

/// Classical Hamilton equations dq_i/dt = ∂H/∂p_i, dp_i/dt = -∂H/∂q_i.
pub fn hamilton_eqs(h: &PowerExpr, q: &[Var], p: &[Var]) -> EquationsOfMotion {
    let mut laws = Vec::new();
    for (qi, pi) in q.iter().zip(p.iter()) {
        laws.push(Law {
            var: qi.clone(),
            lhs: LhsKind::OrdinaryRate,
            rhs: Rhs::Expr(partial(h, pi)),
        });
    }
    for (qi, pi) in q.iter().zip(p.iter()) {
        laws.push(Law {
            var: pi.clone(),
            lhs: LhsKind::OrdinaryRate,
            rhs: Rhs::Expr(partial(h, qi).neg()),
        });
    }
    let mut state = q.to_vec();
    state.extend(p.iter().cloned());
    EquationsOfMotion { state, laws, constraints: Vec::new(), origin: "hamilton".into() }
}

/// Fractional Hamilton equations
/// (dq_i/dt)^α = Γ(2-α) p_i^{α-1} D^α_{p_i} H,  D^α_t p_i = -D^α_{q_i} H,
/// with the q-law resolved through the signed power. At α = 1 this is
/// exactly [`hamilton_eqs`].
pub fn frac_hamilton_eqs(
    h: &PowerExpr,
    q: &[Var],
    p: &[Var],
    alpha: f64,
    kind: DerivKind,
) -> Result<EquationsOfMotion> {
    let mut eom = nonhamiltonian_eqs(h, &[], &[], q, p, alpha, kind)?;
    eom.origin = if alpha == 1.0 {
        "hamilton".into()
    } else {
        format!("fractional-hamilton(alpha={alpha})")
    };
    Ok(eom)
}

/// Fractional non-Hamiltonian equations with non-potential forces:
/// (dq_i/dt)^α = Γ(2-α) p_i^{α-1} D^α_{p_i} H + G^i,
/// D^α_t p_i = -D^α_{q_i} H + F^i.
pub fn nonhamiltonian_eqs(
    h: &PowerExpr,
    g: &[PowerExpr],
    f: &[PowerExpr],
    q: &[Var],
    p: &[Var],
    alpha: f64,
    kind: DerivKind,
) -> Result<EquationsOfMotion> {
    let n = q.len();
    if p.len() != n {
        return Err(Error::Domain("q and p lists must have equal length".into()));
    }
    if !(g.is_empty() || g.len() == n) || !(f.is_empty() || f.len() == n) {
        return Err(Error::Domain("force lists must be empty or match the pairs".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let zero = PowerExpr::zero();
    let gi = |i: usize| g.get(i).unwrap_or(&zero);
    let fi = |i: usize| f.get(i).unwrap_or(&zero);

    let mut laws = Vec::new();
    if alpha == 1.0 {
        for (i, (qi, pi)) in q.iter().zip(p.iter()).enumerate() {
            laws.push(Law {
                var: qi.clone(),
                lhs: LhsKind::OrdinaryRate,
                rhs: Rhs::Expr(partial(h, pi).add(gi(i))),
            });
        }
        for (i, (qi, pi)) in q.iter().zip(p.iter()).enumerate() {
            laws.push(Law {
                var: pi.clone(),
                lhs: LhsKind::OrdinaryRate,
                rhs: Rhs::Expr(partial(h, qi).neg().add(fi(i))),
            });
        }
    } else {
        let g2a = gamma(2.0 - alpha)?;
        for (i, (qi, pi)) in q.iter().zip(p.iter()).enumerate() {
            let dh = frac_partial(h, pi, alpha, kind)?;
            let inner = dh.mul_power(pi, alpha - 1.0).scale(g2a).add(gi(i));
            laws.push(Law {
                var: qi.clone(),
                lhs: LhsKind::OrdinaryRate,
                rhs: Rhs::signed_power(inner, 1.0 / alpha),
            });
        }
        for (i, (qi, pi)) in q.iter().zip(p.iter()).enumerate() {
            let dh = frac_partial(h, qi, alpha, kind)?;
            laws.push(Law {
                var: pi.clone(),
                lhs: LhsKind::CaputoRate(alpha),
                rhs: Rhs::Expr(dh.neg().add(fi(i))),
            });
        }
    }

    let has_forces = g.iter().chain(f.iter()).any(|e| !e.is_zero());
    let origin = match (alpha == 1.0, has_forces) {
        (true, false) => "hamilton".to_string(),
        (true, true) => "non-hamiltonian".to_string(),
        (false, false) => format!("fractional-hamilton(alpha={alpha})"),
        (false, true) => format!("fractional-non-hamiltonian(alpha={alpha})"),
    };
    let mut state = q.to_vec();
    state.extend(p.iter().cloned());
    Ok(EquationsOfMotion { state, laws, constraints: Vec::new(), origin })
}

/// Momentum-power variant of the fractional Hamilton equations:
/// (dq_i/dt)^α = Γ(β+1-α)/Γ(β+1) p_i^{α-β} D^α_{p_i} H,
/// D^α_t (p_i^β) = -D^α_{q_i} H.
///
/// The momentum law keeps its composite left side; there is no chain rule
/// for D^α_t p^β, so no explicit p-law exists unless β = 1.
pub fn frac_hamilton_eqs_beta(
    h: &PowerExpr,
    q: &[Var],
    p: &[Var],
    alpha: f64,
    beta: f64,
    kind: DerivKind,
) -> Result<EquationsOfMotion> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if beta == 1.0 {
        return frac_hamilton_eqs(h, q, p, alpha, kind);
    }
    let n = q.len();
    if p.len() != n {
        return Err(Error::Domain("q and p lists must have equal length".into()));
    }
    let coeff = gamma(beta + 1.0 - alpha)? / gamma(beta + 1.0)?;
    let mut laws = Vec::new();
    for (qi, pi) in q.iter().zip(p.iter()) {
        let dh = frac_partial(h, pi, alpha, kind)?;
        let inner = dh.mul_power(pi, alpha - beta).scale(coeff);
        laws.push(Law {
            var: qi.clone(),
            lhs: LhsKind::OrdinaryRate,
            rhs: Rhs::signed_power(inner, 1.0 / alpha),
        });
    }
    for (qi, pi) in q.iter().zip(p.iter()) {
        let dh = frac_partial(h, qi, alpha, kind)?;
        laws.push(Law {
            var: pi.clone(),
            lhs: LhsKind::CaputoPowerRate { alpha, beta },
            rhs: Rhs::Expr(dh.neg()),
        });
    }
    let mut state = q.to_vec();
    state.extend(p.iter().cloned());
    Ok(EquationsOfMotion {
        state,
        laws,
        constraints: Vec::new(),
        origin: format!("fractional-hamilton-beta(alpha={alpha},beta={beta})"),
    })
}

/// Classical Lagrange equations as a first-order system: dq_i/dt = v_i,
/// dp_i/dt = ∂L/∂q_i with p_i = ∂L/∂v_i. When the velocity Hessian is a
/// constant diagonal with nonzero entries the momentum is eliminated and a
/// closed (q, v) system comes back; otherwise the triple is returned with
/// the momentum constraints attached.
pub fn euler_lagrange(l: &PowerExpr, t: &Var, q: &[Var], v: &[Var]) -> Result<EquationsOfMotion> {
    let n = q.len();
    if v.len() != n {
        return Err(Error::Domain("q and v lists must have equal length".into()));
    }
    let p_exprs: Vec<PowerExpr> = v.iter().map(|vi| partial(l, vi)).collect();

    // degenerate when some momentum has no velocity dependence at all
    for pe in &p_exprs {
        if v.iter().all(|vj| !pe.depends_on(vj)) {
            return Err(Error::DegenerateLagrangian);
        }
    }

    let mut diag = Vec::with_capacity(n);
    let mut closed = true;
    'outer: for (i, pe) in p_exprs.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            let second = partial(pe, vj);
            if i == j {
                match second.as_constant() {
                    Some(c) if c != 0.0 => diag.push(c),
                    _ => {
                        closed = false;
                        break 'outer;
                    }
                }
            } else if !second.is_zero() {
                closed = false;
                break 'outer;
            }
        }
    }

    if closed {
        // v̇_i = (∂L/∂q_i - ∂²L/∂t∂v_i - Σ_j v_j ∂²L/∂q_j∂v_i) / ∂²L/∂v_i²
        let mut laws = Vec::new();
        for (qi, vi) in q.iter().zip(v.iter()) {
            laws.push(Law {
                var: qi.clone(),
                lhs: LhsKind::OrdinaryRate,
                rhs: Rhs::Expr(PowerExpr::var(vi)),
            });
        }
        for (i, vi) in v.iter().enumerate() {
            let mut num = partial(l, &q[i]).sub(&partial(&p_exprs[i], t));
            for (j, vj) in v.iter().enumerate() {
                num = num.sub(&partial(&p_exprs[i], &q[j]).mul(&PowerExpr::var(vj)));
            }
            laws.push(Law {
                var: vi.clone(),
                lhs: LhsKind::OrdinaryRate,
                rhs: Rhs::Expr(num.scale(1.0 / diag[i])),
            });
        }
        let mut state = q.to_vec();
        state.extend(v.iter().cloned());
        return Ok(EquationsOfMotion {
            state,
            laws,
            constraints: Vec::new(),
            origin: "euler-lagrange".into(),
        });
    }

    // DAE triple in (q, v, p) with p eliminated only through constraints
    let p_vars: Vec<Var> = (0..n)
        .map(|i| Var::new(format!("p_{}", q[i].name())))
        .collect::<Result<_>>()?;
    let mut laws = Vec::new();
    for (qi, vi) in q.iter().zip(v.iter()) {
        laws.push(Law {
            var: qi.clone(),
            lhs: LhsKind::OrdinaryRate,
            rhs: Rhs::Expr(PowerExpr::var(vi)),
        });
    }
    for (i, pv) in p_vars.iter().enumerate() {
        laws.push(Law {
            var: pv.clone(),
            lhs: LhsKind::OrdinaryRate,
            rhs: Rhs::Expr(partial(l, &q[i])),
        });
    }
    let constraints = p_vars
        .iter()
        .zip(p_exprs)
        .map(|(pv, pe)| Constraint { var: pv.clone(), rhs: pe })
        .collect();
    let mut state = q.to_vec();
    state.extend(v.iter().cloned());
    state.extend(p_vars);
    Ok(EquationsOfMotion {
        state,
        laws,
        constraints,
        origin: "euler-lagrange".into(),
    })
}

/// Fractional Lagrange triple D^α_t p_i = D^α_{q_i} L, q̇_i = v_i,
/// p_i = Γ(2-α) D^α_{v_i} L (the velocity power matches the order, β = α).
///
/// When each momentum relation is a single pure power of its own velocity
/// and the position derivative of L carries no velocity, the momentum is
/// inverted symbolically and a closed (q, p) system is returned; otherwise
/// the (q, v, p) triple comes back with the momentum constraints attached.
pub fn frac_euler_lagrange(
    l: &PowerExpr,
    t: &Var,
    q: &[Var],
    v: &[Var],
    alpha: f64,
    kind: DerivKind,
) -> Result<EquationsOfMotion> {
    let n = q.len();
    if v.len() != n {
        return Err(Error::Domain("q and v lists must have equal length".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        // Γ(1) D^1_v = ∂_v: the classical construction, exact
        return euler_lagrange(l, t, q, v);
    }
    let g2a = gamma(2.0 - alpha)?;
    let p_exprs: Vec<PowerExpr> = v
        .iter()
        .map(|vi| frac_partial(l, vi, alpha, kind).map(|d| d.scale(g2a)))
        .collect::<Result<_>>()?;
    let dq_exprs: Vec<PowerExpr> = q
        .iter()
        .map(|qi| frac_partial(l, qi, alpha, kind))
        .collect::<Result<_>>()?;

    for pe in &p_exprs {
        if v.iter().all(|vj| !pe.depends_on(vj)) {
            return Err(Error::DegenerateLagrangian);
        }
    }

    let p_vars: Vec<Var> = (0..n)
        .map(|i| Var::new(format!("p_{}", q[i].name())))
        .collect::<Result<_>>()?;

    // closed (q, p) form requires p_i = c·v_i^k with a constant c, and
    // D^α_q L free of every velocity
    let mut inverses = Vec::with_capacity(n);
    let mut closed = dq_exprs.iter().all(|e| v.iter().all(|vj| !e.depends_on(vj)));
    if closed {
        for (i, pe) in p_exprs.iter().enumerate() {
            let invertible = pe.as_monomial().and_then(|m| {
                let k = m.exponent_of(&v[i]);
                let pure = m.powers().iter().all(|(w, _)| w == &v[i]);
                if pure && k != 0.0 && m.coeff() != 0.0 {
                    Some((m.coeff(), k))
                } else {
                    None
                }
            });
            match invertible {
                Some(ck) => inverses.push(ck),
                None => {
                    closed = false;
                    break;
                }
            }
        }
    }

    if closed {
        let mut laws = Vec::new();
        for (i, qi) in q.iter().enumerate() {
            let (c, k) = inverses[i];
            // v_i = spow(p_i/c, 1/k), and q̇_i = v_i
            let inner = PowerExpr::var(&p_vars[i]).scale(1.0 / c);
            laws.push(Law {
                var: qi.clone(),
                lhs: LhsKind::OrdinaryRate,
                rhs: Rhs::signed_power(inner, 1.0 / k),
            });
        }
        for (i, pv) in p_vars.iter().enumerate() {
            laws.push(Law {
                var: pv.clone(),
                lhs: LhsKind::CaputoRate(alpha),
                rhs: Rhs::Expr(dq_exprs[i].clone()),
            });
        }
        let mut state = q.to_vec();
        state.extend(p_vars.iter().cloned());
        return Ok(EquationsOfMotion {
            state,
            laws,
            constraints: Vec::new(),
            origin: format!("fractional-euler-lagrange(alpha={alpha})"),
        });
    }

    let mut laws = Vec::new();
    for (qi, vi) in q.iter().zip(v.iter()) {
        laws.push(Law {
            var: qi.clone(),
            lhs: LhsKind::OrdinaryRate,
            rhs: Rhs::Expr(PowerExpr::var(vi)),
        });
    }
    for (i, pv) in p_vars.iter().enumerate() {
        laws.push(Law {
            var: pv.clone(),
            lhs: LhsKind::CaputoRate(alpha),
            rhs: Rhs::Expr(dq_exprs[i].clone()),
        });
    }
    let constraints = p_vars
        .iter()
        .zip(p_exprs)
        .map(|(pv, pe)| Constraint { var: pv.clone(), rhs: pe })
        .collect();
    let mut state = q.to_vec();
    state.extend(v.iter().cloned());
    state.extend(p_vars);
    Ok(EquationsOfMotion {
        state,
        laws,
        constraints,
        origin: format!("fractional-euler-lagrange(alpha={alpha})"),
    })
}

/// The fractional Euler-Lagrange operator applied to L, kept in its
/// two-piece reporting form: `direct - memory_coeff · D^α_t [memory_arg]`
/// where `direct` = D^α_q L, `memory_coeff` = Γ(2-α) and
/// `memory_arg` = D^α_v L. The outer time derivative is a trajectory
/// operator, so it stays formal.
#[derive(Debug, Clone, PartialEq)]
pub struct ElOperator {
    pub coordinate: Var,
    pub alpha: f64,
    pub direct: PowerExpr,
    pub memory_coeff: f64,
    pub memory_arg: PowerExpr,
}

impl fmt::Display for ElOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E[{}]: {} - {}*D^{}_t[{}] = 0",
            self.coordinate, self.direct, self.memory_coeff, self.alpha, self.memory_arg
        )
    }
}

/// Assemble the fractional Euler-Lagrange operator residual for each
/// coordinate of L(t, q, v).
pub fn frac_el_operator(
    l: &PowerExpr,
    q: &[Var],
    v: &[Var],
    alpha: f64,
    kind: DerivKind,
) -> Result<Vec<ElOperator>> {
    if q.len() != v.len() {
        return Err(Error::Domain("q and v lists must have equal length".into()));
    }
    let g2a = gamma(2.0 - alpha)?;
    q.iter()
        .zip(v.iter())
        .map(|(qi, vi)| {
            Ok(ElOperator {
                coordinate: qi.clone(),
                alpha,
                direct: frac_partial(l, qi, alpha, kind)?,
                memory_coeff: g2a,
                memory_arg: frac_partial(l, vi, alpha, kind)?,
            })
        })
        .collect()
}
