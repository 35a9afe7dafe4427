//! Fractional differential forms over a coordinate chart: grades 0 to 2,
//! the fractional exterior derivative d^α = (dx_i)^α D^α_{x_i}, closedness
//! and exactness tests, and builders for the action forms used by the
//! derivation layer.
//!
//! Basis elements (dx_i)^α are formal symbols with strict antisymmetry
//! (dx)^α ∧ (dx)^α = 0; grade-2 bases are stored only with i < j.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{expr_equal, frac_partial, DerivKind, PowerExpr, Var};

/// An ordered chart with one shared fractional order α for every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coords: Vec<Var>,
    alpha: f64,
}

impl Chart {
    pub fn new(coords: Vec<Var>, alpha: f64) -> Result<Chart> {
        if coords.is_empty() {
            return Err(Error::Domain("chart needs at least one coordinate".into()));
        }
        for (i, v) in coords.iter().enumerate() {
            if coords[..i].contains(v) {
                return Err(Error::Domain(format!("duplicate coordinate `{v}`")));
            }
        }
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("chart order must be positive, got {alpha}")));
        }
        Ok(Chart { coords, alpha })
    }

    pub fn coords(&self) -> &[Var] {
        &self.coords
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, v: &Var) -> Option<usize> {
        self.coords.iter().position(|c| c == v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Grade {
    Zero,
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq)]
enum FormData {
    Zero(PowerExpr),
    One(BTreeMap<usize, PowerExpr>),
    Two(BTreeMap<(usize, usize), PowerExpr>),
}

/// A fractional differential form of grade 0, 1 or 2 with [`PowerExpr`]
/// coefficients over a [`Chart`].
#[derive(Debug, Clone, PartialEq)]
pub struct FracForm {
    chart: Chart,
    data: FormData,
}

impl FracForm {
    pub fn scalar(chart: Chart, value: PowerExpr) -> FracForm {
        FracForm { chart, data: FormData::Zero(value) }
    }

    /// Grade-1 form from (coordinate index, coefficient) pairs.
    pub fn one_form(chart: Chart, terms: impl IntoIterator<Item = (usize, PowerExpr)>) -> FracForm {
        let mut map: BTreeMap<usize, PowerExpr> = BTreeMap::new();
        for (i, coeff) in terms {
            let entry = map.entry(i).or_insert_with(PowerExpr::zero);
            *entry = entry.add(&coeff);
        }
        map.retain(|_, c| !c.is_zero());
        FracForm { chart, data: FormData::One(map) }
    }

    /// Grade-2 form from ((i, j), coefficient) pairs; (j, i) contributions
    /// are folded in as their negation on (i, j), diagonal pairs vanish.
    pub fn two_form(
        chart: Chart,
        terms: impl IntoIterator<Item = ((usize, usize), PowerExpr)>,
    ) -> FracForm {
        let mut map: BTreeMap<(usize, usize), PowerExpr> = BTreeMap::new();
        for ((i, j), coeff) in terms {
            if i == j {
                continue;
            }
            let (key, signed) = if i < j { ((i, j), coeff) } else { ((j, i), coeff.neg()) };
            let entry = map.entry(key).or_insert_with(PowerExpr::zero);
            *entry = entry.add(&signed);
        }
        map.retain(|_, c| !c.is_zero());
        FracForm { chart, data: FormData::Two(map) }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn alpha(&self) -> f64 {
        self.chart.alpha
    }

    pub fn grade(&self) -> Grade {
        match self.data {
            FormData::Zero(_) => Grade::Zero,
            FormData::One(_) => Grade::One,
            FormData::Two(_) => Grade::Two,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.data {
            FormData::Zero(e) => e.is_zero(),
            FormData::One(m) => m.is_empty(),
            FormData::Two(m) => m.is_empty(),
        }
    }

    /// Coefficient on the grade-1 basis element (dx_i)^α.
    pub fn coeff_one(&self, i: usize) -> PowerExpr {
        match &self.data {
            FormData::One(m) => m.get(&i).cloned().unwrap_or_else(PowerExpr::zero),
            _ => PowerExpr::zero(),
        }
    }

    /// Coefficient on the grade-2 basis element (dx_i)^α ∧ (dx_j)^α, i < j.
    pub fn coeff_two(&self, i: usize, j: usize) -> PowerExpr {
        match &self.data {
            FormData::Two(m) => {
                if i < j {
                    m.get(&(i, j)).cloned().unwrap_or_else(PowerExpr::zero)
                } else {
                    m.get(&(j, i)).map(|c| c.neg()).unwrap_or_else(PowerExpr::zero)
                }
            }
            _ => PowerExpr::zero(),
        }
    }

    /// All grade-2 coefficients in basis order.
    pub fn two_terms(&self) -> Vec<((usize, usize), PowerExpr)> {
        match &self.data {
            FormData::Two(m) => m.iter().map(|(k, c)| (*k, c.clone())).collect(),
            _ => Vec::new(),
        }
    }
}

/// Fractional exterior derivative of a grade-0 or grade-1 form.
///
/// Grade 0: V ↦ Σ (D^α_{x_i} V)(dx_i)^α.
/// Grade 1: A^i (dx_i)^α ↦ (D^α_{x_j} A^i)(dx_j)^α ∧ (dx_i)^α, antisymmetry
/// normalized onto i < j. Grade-2 input is rejected.
pub fn frac_exterior_derivative(f: &FracForm, kind: DerivKind) -> Result<FracForm> {
    let chart = f.chart.clone();
    let alpha = chart.alpha;
    match &f.data {
        FormData::Zero(value) => {
            let mut terms = Vec::new();
            for (i, x) in chart.coords.iter().enumerate() {
                let d = frac_partial(value, x, alpha, kind)?;
                if !d.is_zero() {
                    terms.push((i, d));
                }
            }
            Ok(FracForm::one_form(chart, terms))
        }
        FormData::One(coeffs) => {
            let mut terms = Vec::new();
            for (&i, a_i) in coeffs {
                for (j, x_j) in chart.coords.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let d = frac_partial(a_i, x_j, alpha, kind)?;
                    if !d.is_zero() {
                        terms.push(((j, i), d));
                    }
                }
            }
            Ok(FracForm::two_form(chart, terms))
        }
        FormData::Two(_) => Err(Error::Grade(2)),
    }
}

/// True when every coefficient of d^α f vanishes within `tol`.
pub fn is_closed(f: &FracForm, kind: DerivKind, tol: f64) -> Result<bool> {
    let d = frac_exterior_derivative(f, kind)?;
    let zero = PowerExpr::zero();
    Ok(match &d.data {
        FormData::Zero(e) => expr_equal(e, &zero, tol),
        FormData::One(m) => m.values().all(|c| expr_equal(c, &zero, tol)),
        FormData::Two(m) => m.values().all(|c| expr_equal(c, &zero, tol)),
    })
}

/// Exactness test for the 1-form F^i (dx_i)^α: true iff
/// D^α_{x_j} F^i - D^α_{x_i} F^j = 0 for all i < j.
pub fn exactness_check(
    field: &[PowerExpr],
    chart: &Chart,
    kind: DerivKind,
    tol: f64,
) -> Result<bool> {
    if field.len() != chart.dim() {
        return Err(Error::Domain(format!(
            "field has {} components over a {}-dimensional chart",
            field.len(),
            chart.dim()
        )));
    }
    let alpha = chart.alpha;
    for i in 0..field.len() {
        for j in (i + 1)..field.len() {
            let a = frac_partial(&field[i], &chart.coords[j], alpha, kind)?;
            let b = frac_partial(&field[j], &chart.coords[i], alpha, kind)?;
            if !expr_equal(&a.sub(&b), &PowerExpr::zero(), tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn phase_chart(t: &Var, q: &[Var], p: &[Var], alpha: f64) -> Result<Chart> {
    if q.len() != p.len() {
        return Err(Error::Domain("q and p lists must have equal length".into()));
    }
    let mut coords = vec![t.clone()];
    coords.extend(q.iter().cloned());
    coords.extend(p.iter().cloned());
    Chart::new(coords, alpha)
}

/// Action 1-form ω = p_i (dq_i)^α - H (dt)^α over the chart (t, q, p).
pub fn poincare_cartan(
    t: &Var,
    q: &[Var],
    p: &[Var],
    h: &PowerExpr,
    alpha: f64,
) -> Result<FracForm> {
    let chart = phase_chart(t, q, p, alpha)?;
    let n = q.len();
    let mut terms = vec![(0usize, h.neg())];
    for i in 0..n {
        terms.push((1 + i, PowerExpr::var(&p[i])));
    }
    Ok(FracForm::one_form(chart, terms))
}

/// Variant with a power of the momentum: p_i^β (dq_i)^α - H (dt)^α.
pub fn poincare_cartan_beta(
    t: &Var,
    q: &[Var],
    p: &[Var],
    h: &PowerExpr,
    alpha: f64,
    beta: f64,
) -> Result<FracForm> {
    let chart = phase_chart(t, q, p, alpha)?;
    let n = q.len();
    let mut terms = vec![(0usize, h.neg())];
    for i in 0..n {
        terms.push((1 + i, PowerExpr::var(&p[i]).pow_monomial(beta)?));
    }
    Ok(FracForm::one_form(chart, terms))
}

/// Extended action 1-form over (t, q, p, v):
/// p_i (dq_i)^α + (L - Σ p_i v_i^β)(dt)^α.
pub fn extended_poincare_cartan(
    t: &Var,
    q: &[Var],
    p: &[Var],
    v: &[Var],
    l: &PowerExpr,
    alpha: f64,
    beta: f64,
) -> Result<FracForm> {
    if q.len() != p.len() || q.len() != v.len() {
        return Err(Error::Domain("q, p, v lists must have equal length".into()));
    }
    let mut coords = vec![t.clone()];
    coords.extend(q.iter().cloned());
    coords.extend(p.iter().cloned());
    coords.extend(v.iter().cloned());
    let chart = Chart::new(coords, alpha)?;
    let n = q.len();
    let mut dt_coeff = l.clone();
    for i in 0..n {
        let pv = PowerExpr::var(&p[i]).mul(&PowerExpr::var(&v[i]).pow_monomial(beta)?);
        dt_coeff = dt_coeff.sub(&pv);
    }
    let mut terms = vec![(0usize, dt_coeff)];
    for i in 0..n {
        terms.push((1 + i, PowerExpr::var(&p[i])));
    }
    Ok(FracForm::one_form(chart, terms))
}

/// Non-potential force 2-form
/// θ = F^i (dt)^α ∧ (dq_i)^α - G^i (dt)^α ∧ (dp_i)^α.
pub fn force_two_form(
    t: &Var,
    q: &[Var],
    p: &[Var],
    g: &[PowerExpr],
    f: &[PowerExpr],
    alpha: f64,
) -> Result<FracForm> {
    let chart = phase_chart(t, q, p, alpha)?;
    let n = q.len();
    if g.len() != n || f.len() != n {
        return Err(Error::Domain("force lists must match the number of pairs".into()));
    }
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push(((0usize, 1 + i), f[i].clone()));
        terms.push(((0usize, 1 + n + i), g[i].neg()));
    }
    Ok(FracForm::two_form(chart, terms))
}

fn fmt_basis(chart: &Chart, i: usize) -> String {
    let alpha = chart.alpha;
    if alpha == 1.0 {
        format!("d{}", chart.coords[i])
    } else {
        format!("(d{})^{}", chart.coords[i], alpha)
    }
}

fn fmt_coeff_times(coeff: &PowerExpr, basis: &str, first: bool) -> String {
    // pull an overall sign out when every term is negative, so forms print
    // like "p*(dq)^0.5 - (0.5*p^2 + 0.5*q^2)*(dt)^0.5"
    let all_neg = coeff.terms().iter().all(|m| m.coeff() < 0.0);
    let (sign, body) = if all_neg { ("-", coeff.neg()) } else { ("+", coeff.clone()) };
    let needs_parens = body.terms().len() > 1;
    let body_str = if let Some(c) = body.as_constant() {
        if c == 1.0 {
            basis.to_string()
        } else {
            format!("{c}*{basis}")
        }
    } else if needs_parens {
        format!("({body})*{basis}")
    } else {
        format!("{body}*{basis}")
    };
    match (first, sign) {
        (true, "-") => format!("-{body_str}"),
        (true, _) => body_str,
        (false, s) => format!(" {s} {body_str}"),
    }
}

impl fmt::Display for FracForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.data {
            FormData::Zero(e) => write!(f, "{e}"),
            FormData::One(m) => {
                if m.is_empty() {
                    return write!(f, "0");
                }
                let mut first = true;
                for (&i, coeff) in m {
                    let basis = fmt_basis(&self.chart, i);
                    write!(f, "{}", fmt_coeff_times(coeff, &basis, first))?;
                    first = false;
                }
                Ok(())
            }
            FormData::Two(m) => {
                if m.is_empty() {
                    return write!(f, "0");
                }
                let mut first = true;
                for (&(i, j), coeff) in m {
                    let basis =
                        format!("{}∧{}", fmt_basis(&self.chart, i), fmt_basis(&self.chart, j));
                    write!(f, "{}", fmt_coeff_times(coeff, &basis, first))?;
                    first = false;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Monomial};
    use crate::specialfn::gamma;

    fn v(name: &str) -> Var {
        Var::new(name).unwrap()
    }

    fn chart2(alpha: f64) -> Chart {
        Chart::new(vec![v("q"), v("p")], alpha).unwrap()
    }

    #[test]
    fn d_alpha_of_scalar() {
        // d^α(q·p) over (q,p), α = 0.5
        let ch = chart2(0.5);
        let e = parse_expr("q*p", ch.coords()).unwrap();
        let form = FracForm::scalar(ch.clone(), e);
        let d = frac_exterior_derivative(&form, DerivKind::Caputo).unwrap();
        assert_eq!(d.grade(), Grade::One);
        let g15 = gamma(1.5).unwrap();
        let dq = PowerExpr::monomial(Monomial::new(1.0 / g15, [(v("q"), 0.5), (v("p"), 1.0)]));
        let dp = PowerExpr::monomial(Monomial::new(1.0 / g15, [(v("p"), 0.5), (v("q"), 1.0)]));
        assert!(expr_equal(&d.coeff_one(0), &dq, 1e-14));
        assert!(expr_equal(&d.coeff_one(1), &dp, 1e-14));
    }

    #[test]
    fn d_alpha_squared_vanishes_on_monomials() {
        let ch = chart2(0.5);
        let e = parse_expr("3*q^2*p^1.5", ch.coords()).unwrap();
        let d1 = frac_exterior_derivative(&FracForm::scalar(ch, e), DerivKind::Caputo).unwrap();
        let d2 = frac_exterior_derivative(&d1, DerivKind::Caputo).unwrap();
        assert!(is_closed_coeffs(&d2, 1e-12));
    }

    fn is_closed_coeffs(f: &FracForm, tol: f64) -> bool {
        f.two_terms().iter().all(|(_, c)| expr_equal(c, &PowerExpr::zero(), tol))
    }

    #[test]
    fn classic_poincare_cartan_derivative() {
        // d of p dq - H dt at α = 1, H = p²/2 + q²/2:
        // coefficients {(t,q): q, (q,p): -1, (t,p): p}
        let t = v("t");
        let q = [v("q")];
        let p = [v("p")];
        let chart_vars = [t.clone(), q[0].clone(), p[0].clone()];
        let h = parse_expr("p^2/2 + q^2/2", &chart_vars).unwrap();
        let omega = poincare_cartan(&t, &q, &p, &h, 1.0).unwrap();
        let d = frac_exterior_derivative(&omega, DerivKind::Caputo).unwrap();
        assert!(expr_equal(&d.coeff_two(0, 1), &PowerExpr::var(&q[0]), 1e-14));
        assert!(expr_equal(&d.coeff_two(1, 2), &PowerExpr::constant(-1.0), 1e-14));
        assert!(expr_equal(&d.coeff_two(0, 2), &PowerExpr::var(&p[0]), 1e-14));
        // ω itself is not closed off-shell
        assert!(!is_closed(&omega, DerivKind::Caputo, 1e-12).unwrap());
    }

    #[test]
    fn exact_forms_are_closed() {
        // ω = d^α V for V = q² p² is closed
        let ch = chart2(0.5);
        let vpot = parse_expr("q^2*p^2", ch.coords()).unwrap();
        let omega =
            frac_exterior_derivative(&FracForm::scalar(ch, vpot), DerivKind::Caputo).unwrap();
        assert!(is_closed(&omega, DerivKind::Caputo, 1e-12).unwrap());
    }

    #[test]
    fn grade_two_input_rejected() {
        let t = v("t");
        let q = [v("q")];
        let p = [v("p")];
        let gamma_p = parse_expr("-0.1*p", &[q[0].clone(), p[0].clone()]).unwrap();
        let theta =
            force_two_form(&t, &q, &p, &[PowerExpr::zero()], &[gamma_p], 0.5).unwrap();
        assert_eq!(
            frac_exterior_derivative(&theta, DerivKind::Caputo),
            Err(Error::Grade(2))
        );
        assert!(is_closed(&theta, DerivKind::Caputo, 1e-12).is_err());
    }

    #[test]
    fn exactness_check_examples() {
        // F^i = -D^α(x1 x2): exact, so the cross condition holds
        let x1 = v("x1");
        let x2 = v("x2");
        let ch = Chart::new(vec![x1.clone(), x2.clone()], 0.5).unwrap();
        let pot = parse_expr("x1*x2", ch.coords()).unwrap();
        let f: Vec<PowerExpr> = ch
            .coords()
            .iter()
            .map(|x| frac_partial(&pot, x, 0.5, DerivKind::Caputo).unwrap().neg())
            .collect();
        assert!(exactness_check(&f, &ch, DerivKind::Caputo, 1e-12).unwrap());

        // F = (x2, 0) is not exact at α = 0.5
        let f2 = vec![PowerExpr::var(&x2), PowerExpr::zero()];
        assert!(!exactness_check(&f2, &ch, DerivKind::Caputo, 1e-12).unwrap());

        // constants: Caputo kills both cross-derivatives
        let f3 = vec![PowerExpr::constant(2.0), PowerExpr::constant(2.0)];
        assert!(exactness_check(&f3, &ch, DerivKind::Caputo, 1e-12).unwrap());
    }

    #[test]
    fn antisymmetry_normalization() {
        let ch = chart2(1.0);
        let c = PowerExpr::var(&v("q"));
        let a = FracForm::two_form(ch.clone(), [((0usize, 1usize), c.clone())]);
        let b = FracForm::two_form(ch, [((1usize, 0usize), c.neg())]);
        assert_eq!(a, b);
    }

    #[test]
    fn builders_and_printing() {
        let t = v("t");
        let q = [v("q")];
        let p = [v("p")];
        let chart_vars = [t.clone(), q[0].clone(), p[0].clone()];
        let h = parse_expr("p^2/2 + q^2/2", &chart_vars).unwrap();
        let omega = poincare_cartan(&t, &q, &p, &h, 0.5).unwrap();
        assert_eq!(
            omega.to_string(),
            "-(0.5*p^2 + 0.5*q^2)*(dt)^0.5 + p*(dq)^0.5"
        );
        let zero_h = poincare_cartan(&t, &q, &p, &PowerExpr::zero(), 0.5).unwrap();
        assert_eq!(zero_h.to_string(), "p*(dq)^0.5");

        // β-variant carries p^β on (dq)^α
        let ob = poincare_cartan_beta(&t, &q, &p, &h, 0.5, 0.25).unwrap();
        let m = ob.coeff_one(1);
        assert_eq!(m.as_monomial().unwrap().exponent_of(&p[0]), 0.25);

        // friction force form at α = 1 prints with plain bases
        let gp = parse_expr("-0.1*p", &chart_vars).unwrap();
        let theta = force_two_form(&t, &q, &p, &[PowerExpr::zero()], &[gp], 1.0).unwrap();
        assert_eq!(theta.to_string(), "-0.1*p*dt∧dq");
    }

    #[test]
    fn extended_form_classic_limit() {
        // L = v²/2 - q²/2, α = β = 1: p dq + (v²/2 - q²/2 - p v) dt
        let t = v("t");
        let q = [v("q")];
        let p = [v("p")];
        let vv = [v("v")];
        let all = [t.clone(), q[0].clone(), p[0].clone(), vv[0].clone()];
        let l = parse_expr("v^2/2 - q^2/2", &all).unwrap();
        let omega = extended_poincare_cartan(&t, &q, &p, &vv, &l, 1.0, 1.0).unwrap();
        let dt_coeff = omega.coeff_one(0);
        let expect = parse_expr("v^2/2 - q^2/2 - p*v", &all).unwrap();
        assert!(expr_equal(&dt_coeff, &expect, 0.0));
        assert!(expr_equal(&omega.coeff_one(1), &PowerExpr::var(&p[0]), 0.0));
    }

    #[test]
    fn extended_form_derivative_structure() {
        // d of the α = β = 1 extended form splits into
        // [D_t p - D_q L] dt∧dq - [dq - v dt]∧dp - [p - D_v L] dv∧dt
        let t = v("t");
        let q = [v("q")];
        let p = [v("p")];
        let vv = [v("v")];
        let all = [t.clone(), q[0].clone(), p[0].clone(), vv[0].clone()];
        let l = parse_expr("v^2/2 - q^2/2", &all).unwrap();
        let omega = extended_poincare_cartan(&t, &q, &p, &vv, &l, 1.0, 1.0).unwrap();
        let d = frac_exterior_derivative(&omega, DerivKind::Caputo).unwrap();
        // coordinates: t=0, q=1, p=2, v=3
        let q_expr = parse_expr("q", &all).unwrap();
        assert!(expr_equal(&d.coeff_two(0, 1), &q_expr, 1e-14)); // -D_q L
        assert!(expr_equal(&d.coeff_two(1, 2), &PowerExpr::constant(-1.0), 1e-14));
        assert!(expr_equal(&d.coeff_two(0, 2), &parse_expr("v", &all).unwrap(), 1e-14));
        let pv = parse_expr("p - v", &all).unwrap();
        assert!(expr_equal(&d.coeff_two(0, 3), &pv, 1e-14)); // p - D_v L
        assert!(d.coeff_two(1, 3).is_zero());
        assert!(d.coeff_two(2, 3).is_zero());
    }
}

