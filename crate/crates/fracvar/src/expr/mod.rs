//! Symbolic substrate: finite sums of real-exponent monomials over named
//! coordinates, exact classical and fractional partial derivatives on that
//! class, evaluation, and a text parser (see [`parse`]).
//!
//! The class is closed under every derivative rule used elsewhere in the
//! crate, which is the reason it is the only expression form supported.

mod parse;

pub use parse::parse_expr;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::specialfn::gamma;

/// Exponents this close to an integer are stored as that integer, so that
/// chains like (α-1) + (2-α) land back on exact values and terms merge.
const EXP_SNAP: f64 = 1e-12;

fn snap(e: f64) -> f64 {
    let r = e.round();
    if (e - r).abs() < EXP_SNAP {
        r
    } else {
        e
    }
}

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

/// A named coordinate. Names match `[a-zA-Z][a-zA-Z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Result<Var> {
        let name = name.into();
        let mut chars = name.chars();
        let ok = match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            }
            _ => false,
        };
        if ok {
            Ok(Var(name))
        } else {
            Err(Error::Domain(format!("invalid variable name `{name}`")))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which fractional derivative the power rule should follow.
///
/// Caputo is the default everywhere; Riemann-Liouville exists to show that
/// constants stop being annihilated (D^α_q p = p·D^α_q 1 ≠ 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivKind {
    #[default]
    Caputo,
    RiemannLiouville,
}

/// coeff · Π var^exponent with real exponents; zero exponents are dropped
/// and factors are kept sorted by variable name.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    coeff: f64,
    powers: Vec<(Var, f64)>,
}

impl Monomial {
    pub fn new(coeff: f64, powers: impl IntoIterator<Item = (Var, f64)>) -> Monomial {
        let mut map: BTreeMap<Var, f64> = BTreeMap::new();
        for (v, e) in powers {
            *map.entry(v).or_insert(0.0) += e;
        }
        let powers = map
            .into_iter()
            .map(|(v, e)| (v, snap(e)))
            .filter(|(_, e)| *e != 0.0)
            .collect();
        Monomial { coeff, powers }
    }

    pub fn constant(c: f64) -> Monomial {
        Monomial { coeff: c, powers: Vec::new() }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn powers(&self) -> &[(Var, f64)] {
        &self.powers
    }

    pub fn exponent_of(&self, v: &Var) -> f64 {
        self.powers
            .iter()
            .find(|(w, _)| w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0.0)
    }

    fn key_eq(&self, other: &Monomial) -> bool {
        self.powers.len() == other.powers.len()
            && self
                .powers
                .iter()
                .zip(&other.powers)
                .all(|((va, ea), (vb, eb))| va == vb && ea == eb)
    }

    // Fixed total order on exponent maps: compare factors pairwise by
    // (name ascending, exponent descending); on a shared prefix the longer
    // monomial sorts first. Gives the usual descending-degree look.
    fn key_cmp(&self, other: &Monomial) -> Ordering {
        for ((va, ea), (vb, eb)) in self.powers.iter().zip(&other.powers) {
            match va.cmp(vb) {
                Ordering::Equal => {}
                ord => return ord,
            }
            match eb.total_cmp(ea) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        other.powers.len().cmp(&self.powers.len())
    }
}

/// Canonicalized sum of monomials. Immutable once built; every operation
/// returns a fresh value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerExpr {
    terms: Vec<Monomial>,
}

impl PowerExpr {
    pub fn zero() -> PowerExpr {
        PowerExpr { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> PowerExpr {
        PowerExpr::from_terms(vec![Monomial::constant(c)])
    }

    pub fn var(v: &Var) -> PowerExpr {
        PowerExpr::from_terms(vec![Monomial::new(1.0, [(v.clone(), 1.0)])])
    }

    pub fn monomial(m: Monomial) -> PowerExpr {
        PowerExpr::from_terms(vec![m])
    }

    pub fn from_terms(terms: Vec<Monomial>) -> PowerExpr {
        let mut ts = terms;
        ts.sort_by(Monomial::key_cmp);
        let mut out: Vec<Monomial> = Vec::with_capacity(ts.len());
        for m in ts {
            match out.last_mut() {
                Some(last) if last.key_eq(&m) => last.coeff += m.coeff,
                _ => out.push(m),
            }
        }
        out.retain(|m| m.coeff != 0.0);
        PowerExpr { terms: out }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(c) when the expression is a plain constant (including zero).
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 if self.terms[0].powers.is_empty() => Some(self.terms[0].coeff),
            _ => None,
        }
    }

    /// Some(monomial) when the expression is a single term.
    pub fn as_monomial(&self) -> Option<&Monomial> {
        match self.terms.len() {
            1 => Some(&self.terms[0]),
            _ => None,
        }
    }

    pub fn depends_on(&self, v: &Var) -> bool {
        self.terms.iter().any(|m| m.exponent_of(v) != 0.0)
    }

    pub fn scale(&self, c: f64) -> PowerExpr {
        PowerExpr::from_terms(
            self.terms
                .iter()
                .map(|m| Monomial { coeff: m.coeff * c, powers: m.powers.clone() })
                .collect(),
        )
    }

    pub fn neg(&self) -> PowerExpr {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &PowerExpr) -> PowerExpr {
        let mut ts = self.terms.clone();
        ts.extend(other.terms.iter().cloned());
        PowerExpr::from_terms(ts)
    }

    pub fn sub(&self, other: &PowerExpr) -> PowerExpr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PowerExpr) -> PowerExpr {
        let mut ts = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut powers = a.powers.clone();
                powers.extend(b.powers.iter().cloned());
                ts.push(Monomial::new(a.coeff * b.coeff, powers));
            }
        }
        PowerExpr::from_terms(ts)
    }

    /// Multiply by a single factor var^exp.
    pub fn mul_power(&self, v: &Var, exp: f64) -> PowerExpr {
        self.mul(&PowerExpr::monomial(Monomial::new(1.0, [(v.clone(), exp)])))
    }

    /// Integer power by repeated multiplication (n ≥ 0); n < 0 only for a
    /// single-monomial base.
    pub fn powi(&self, n: i32) -> Result<PowerExpr> {
        if n < 0 {
            return self.pow_monomial(n as f64);
        }
        let mut out = PowerExpr::constant(1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        Ok(out)
    }

    /// Real power of a single-monomial expression.
    pub fn pow_monomial(&self, r: f64) -> Result<PowerExpr> {
        let m = self.as_monomial().ok_or_else(|| {
            Error::Domain("non-integer power of a multi-term expression".into())
        })?;
        let coeff = if is_integer(r) {
            if r.abs() > i32::MAX as f64 {
                return Err(Error::Domain(format!("power {r} too large")));
            }
            m.coeff.powi(r as i32)
        } else if m.coeff >= 0.0 {
            m.coeff.powf(r)
        } else {
            return Err(Error::Domain(format!(
                "fractional power {r} of negative coefficient {}",
                m.coeff
            )));
        };
        let powers = m.powers.iter().map(|(v, e)| (v.clone(), snap(e * r)));
        Ok(PowerExpr::monomial(Monomial::new(coeff, powers.collect::<Vec<_>>())))
    }

    /// Replace var^m by new^(m·factor) in every term (used when a state is
    /// re-expressed through a power of itself).
    pub fn rescale_exponent(&self, v: &Var, factor: f64, new: &Var) -> PowerExpr {
        PowerExpr::from_terms(
            self.terms
                .iter()
                .map(|m| {
                    let powers: Vec<(Var, f64)> = m
                        .powers
                        .iter()
                        .map(|(w, e)| {
                            if w == v {
                                (new.clone(), snap(e * factor))
                            } else {
                                (w.clone(), *e)
                            }
                        })
                        .collect();
                    Monomial::new(m.coeff, powers)
                })
                .collect(),
        )
    }
}

/// Classical partial derivative ∂e/∂x, exact on the monomial class.
pub fn partial(e: &PowerExpr, x: &Var) -> PowerExpr {
    let mut ts = Vec::new();
    for m in &e.terms {
        let beta = m.exponent_of(x);
        if beta == 0.0 {
            continue;
        }
        let powers: Vec<(Var, f64)> = m
            .powers
            .iter()
            .map(|(v, ex)| {
                if v == x {
                    (v.clone(), snap(ex - 1.0))
                } else {
                    (v.clone(), *ex)
                }
            })
            .collect();
        ts.push(Monomial::new(m.coeff * beta, powers));
    }
    PowerExpr::from_terms(ts)
}

/// Fractional partial derivative D^α_x of order α > 0 by the monomial power
/// rule: coefficient scaled by Γ(β+1)/Γ(β+1-α), exponent β ↦ β-α.
///
/// Caputo annihilates monomials whose x-exponent is a nonnegative integer
/// below ⌈α⌉ (the m-th whole derivative kills them first);
/// Riemann-Liouville applies the Γ ratio to everything, so constants map to
/// c·x^{-α}/Γ(1-α). At α = 1 both reduce to the classical derivative and are
/// computed exactly.
pub fn frac_partial(e: &PowerExpr, x: &Var, alpha: f64, kind: DerivKind) -> Result<PowerExpr> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "fractional derivative order must be positive, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(partial(e, x));
    }
    let m_ord = alpha.ceil();
    let mut ts = Vec::new();
    for mono in &e.terms {
        let beta = mono.exponent_of(x);
        if kind == DerivKind::Caputo && beta >= 0.0 && is_integer(beta) && beta < m_ord {
            continue;
        }
        if beta <= -1.0 {
            return Err(Error::ExponentDomain { var: x.name().to_string(), exponent: beta });
        }
        let ratio = gamma(beta + 1.0)? / gamma(beta + 1.0 - alpha)?;
        let mut powers: Vec<(Var, f64)> = mono
            .powers
            .iter()
            .filter(|(v, _)| v != x)
            .cloned()
            .collect();
        let new_exp = snap(beta - alpha);
        if new_exp != 0.0 {
            powers.push((x.clone(), new_exp));
        }
        ts.push(Monomial::new(mono.coeff * ratio, powers));
    }
    Ok(PowerExpr::from_terms(ts))
}

/// Strict evaluation at a point. Negative bases are only allowed with
/// integer exponents; a zero base with a negative exponent is rejected.
pub fn eval(e: &PowerExpr, point: &BTreeMap<Var, f64>) -> Result<f64> {
    let mut sum = 0.0;
    for m in &e.terms {
        let mut value = m.coeff;
        for (v, ex) in &m.powers {
            let x = *point
                .get(v)
                .ok_or_else(|| Error::MissingVariable(v.name().to_string()))?;
            value *= pow_strict(x, *ex, v)?;
        }
        sum += value;
    }
    Ok(sum)
}

fn pow_strict(x: f64, ex: f64, v: &Var) -> Result<f64> {
    if x == 0.0 && ex < 0.0 {
        return Err(Error::Domain(format!("`{v}` = 0 raised to negative power {ex}")));
    }
    if is_integer(ex) && ex.abs() <= i32::MAX as f64 {
        Ok(x.powi(ex as i32))
    } else if x < 0.0 {
        Err(Error::Domain(format!(
            "negative base `{v}` = {x} with non-integer exponent {ex}"
        )))
    } else {
        Ok(x.powf(ex))
    }
}

/// Term-by-term approximate equality of canonical forms: exponent maps must
/// match exactly, coefficients within tol·max(1, |coeff|).
pub fn expr_equal(a: &PowerExpr, b: &PowerExpr, tol: f64) -> bool {
    let close = |ca: f64, cb: f64| (ca - cb).abs() <= tol * ca.abs().max(cb.abs()).max(1.0);
    let mut ia = a.terms.iter().peekable();
    let mut ib = b.terms.iter().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (None, None) => return true,
            (Some(ma), None) => {
                if !close(ma.coeff, 0.0) {
                    return false;
                }
                ia.next();
            }
            (None, Some(mb)) => {
                if !close(0.0, mb.coeff) {
                    return false;
                }
                ib.next();
            }
            (Some(ma), Some(mb)) => match ma.key_cmp(mb) {
                Ordering::Equal => {
                    if !close(ma.coeff, mb.coeff) {
                        return false;
                    }
                    ia.next();
                    ib.next();
                }
                Ordering::Less => {
                    if !close(ma.coeff, 0.0) {
                        return false;
                    }
                    ia.next();
                }
                Ordering::Greater => {
                    if !close(0.0, mb.coeff) {
                        return false;
                    }
                    ib.next();
                }
            },
        }
    }
}

/// True when the expression is zero to the given coefficient tolerance.
pub fn is_zero_within(e: &PowerExpr, tol: f64) -> bool {
    expr_equal(e, &PowerExpr::zero(), tol)
}

fn fmt_number(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if self.powers.is_empty() || self.coeff != 1.0 {
            write!(f, "{}", fmt_number(self.coeff))?;
            first = false;
        }
        for (v, e) in &self.powers {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1.0 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{}", fmt_number(*e))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for PowerExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            let mag = Monomial { coeff: m.coeff.abs(), powers: m.powers.clone() };
            if i == 0 {
                if m.coeff < 0.0 {
                    write!(f, "-{mag}")?;
                } else {
                    write!(f, "{mag}")?;
                }
            } else if m.coeff < 0.0 {
                write!(f, " - {mag}")?;
            } else {
                write!(f, " + {mag}")?;
            }
        }
        Ok(())
    }
}

/// Signed-power evaluation used by the simulation layer: non-integer powers
/// of a negative base take sign(x)·|x|^e (odd extension), integer powers are
/// the true real power. A base within 1e-12 of zero under a negative
/// exponent is reported as a singular momentum instead of overflowing.
pub fn eval_signed(e: &PowerExpr, point: &BTreeMap<Var, f64>) -> Result<f64> {
    let mut sum = 0.0;
    for m in &e.terms {
        let mut value = m.coeff;
        for (v, ex) in &m.powers {
            let x = *point
                .get(v)
                .ok_or_else(|| Error::MissingVariable(v.name().to_string()))?;
            value *= pow_signed(x, *ex).map_err(|_| Error::SingularMomentum {
                var: v.name().to_string(),
                value: x,
            })?;
        }
        sum += value;
    }
    Ok(sum)
}

/// sign(x)·|x|^r for non-integer r, true power for integer r.
pub fn pow_signed(x: f64, r: f64) -> std::result::Result<f64, ()> {
    if r < 0.0 && x.abs() < 1e-12 {
        return Err(());
    }
    if is_integer(r) && r.abs() <= i32::MAX as f64 {
        Ok(x.powi(r as i32))
    } else {
        Ok(x.signum() * x.abs().powf(r))
    }
}

/// The branch convention for extracting a rate from (rate)^α = R:
/// spow(x, r) = sign(x)·|x|^r, always signed.
pub fn spow(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(r)
    }
}
