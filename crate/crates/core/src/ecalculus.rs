//! E-forms in the dual basis `E₁*, …, E_p*`, the E-exterior derivative,
//! interior products, Lie derivatives, and E-functions (smooth functions
//! enlarged by logarithmic and negative-power terms in boundary coordinates).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estructure::EFrame;
use crate::expr::{Expr, Func};
use crate::field::ScalarField;

/// An E-form of fixed degree. Keys are strictly increasing index tuples.
#[derive(Debug, Clone)]
pub struct EForm {
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, ScalarField>,
}

/// Sort `idx` in place and return the permutation sign, or `None` on a repeat.
fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// `ω(E_l, E_K…)` expressed through the stored coefficient of `K ∪ {l}`:
/// returns the key and sign, or `None` when `l ∈ K`.
fn insert_front(l: usize, k: &[usize]) -> Option<(Vec<usize>, f64)> {
    if k.contains(&l) {
        return None;
    }
    let before = k.iter().filter(|&&x| x < l).count();
    let mut key = k.to_vec();
    key.insert(before, l);
    Some((key, if before % 2 == 0 { 1.0 } else { -1.0 }))
}

fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..p {
            cur.push(i);
            rec(i + 1, p, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= p {
        rec(0, p, k, &mut Vec::new(), &mut out);
    }
    out
}

impl EForm {
    pub fn zero(degree: usize) -> EForm {
        EForm {
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// Degree-0 form.
    pub fn scalar(f: ScalarField) -> EForm {
        let mut coeffs = BTreeMap::new();
        if !f.is_identically_zero() {
            coeffs.insert(Vec::new(), f);
        }
        EForm { degree: 0, coeffs }
    }

    /// `E_{i₁}* ∧ … ∧ E_{i_k}*` (indices in any order; sign follows the sort).
    pub fn basis(indices: &[usize]) -> EForm {
        EForm::monomial(indices, ScalarField::constant(1.0))
    }

    /// `f · E_{i₁}* ∧ … ∧ E_{i_k}*`.
    pub fn monomial(indices: &[usize], f: ScalarField) -> EForm {
        let mut form = EForm::zero(indices.len());
        form.add_term(indices, f);
        form
    }

    /// Add `f · E_{indices}*` to this form. Repeated indices add nothing.
    pub fn add_term(&mut self, indices: &[usize], f: ScalarField) {
        assert_eq!(indices.len(), self.degree, "term degree mismatch");
        let mut key = indices.to_vec();
        let Some(sign) = sort_with_sign(&mut key) else {
            return;
        };
        if f.is_identically_zero() {
            return;
        }
        let f = if sign < 0.0 { f.neg() } else { f };
        let entry = match self.coeffs.remove(&key) {
            Some(prev) => prev.add(&f),
            None => f,
        };
        if !entry.is_identically_zero() {
            self.coeffs.insert(key, entry);
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of a strictly increasing key (zero if absent).
    pub fn coefficient(&self, key: &[usize]) -> ScalarField {
        self.coeffs.get(key).cloned().unwrap_or_else(ScalarField::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &ScalarField)> {
        self.coeffs.iter()
    }

    /// True when every stored coefficient is symbolically zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(ScalarField::is_identically_zero)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().filter_map(|k| k.last().copied()).max()
    }

    /// Coefficient values at `x`.
    pub fn eval(&self, x: &[f64]) -> BTreeMap<Vec<usize>, f64> {
        self.coeffs.iter().map(|(k, f)| (k.clone(), f.eval(x))).collect()
    }

    /// Largest absolute coefficient at `x`.
    pub fn max_abs_at(&self, x: &[f64]) -> f64 {
        self.coeffs
            .values()
            .map(|f| f.eval(x).abs())
            .fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
    }

    pub fn add(&self, other: &EForm) -> EForm {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, f) in &other.coeffs {
            out.add_term(k, f.clone());
        }
        out
    }

    pub fn scale(&self, c: f64) -> EForm {
        let mut out = EForm::zero(self.degree);
        for (k, f) in &self.coeffs {
            out.add_term(k, f.scale(c));
        }
        out
    }

    pub fn wedge(&self, other: &EForm) -> EForm {
        let mut out = EForm::zero(self.degree + other.degree);
        for (a, f) in &self.coeffs {
            for (b, g) in &other.coeffs {
                let idx: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                out.add_term(&idx, f.mul(g));
            }
        }
        out
    }

    /// Interior product with the frame vector field `X = Σ X_l E_l`.
    pub fn interior(&self, x: &[ScalarField]) -> EForm {
        if self.degree == 0 {
            return EForm::zero(0);
        }
        let mut out = EForm::zero(self.degree - 1);
        for (key, f) in &self.coeffs {
            // ι_X (f E_K*) = Σ_a (−1)^a X_{K_a} f E_{K∖a}*
            for (a, &l) in key.iter().enumerate() {
                let Some(xl) = x.get(l) else { continue };
                if xl.is_identically_zero() {
                    continue;
                }
                let mut rest = key.clone();
                rest.remove(a);
                let term = xl.mul(f);
                out.add_term(&rest, if a % 2 == 0 { term } else { term.neg() });
            }
        }
        out
    }

    /// Value `ω(E_{j₀}, …, E_{j_k})` as a field, for arbitrary index order.
    fn on_generators(&self, idx: &[usize]) -> ScalarField {
        let mut key = idx.to_vec();
        match sort_with_sign(&mut key) {
            None => ScalarField::zero(),
            Some(s) => {
                let c = self.coefficient(&key);
                if s < 0.0 {
                    c.neg()
                } else {
                    c
                }
            }
        }
    }
}

fn check_form_indices(form: &EForm, frame: &EFrame) -> Result<()> {
    if let Some(m) = form.max_index() {
        if m >= frame.rank() {
            return Err(Error::Index {
                context: "E-form basis index".into(),
                index: m,
                limit: frame.rank(),
            });
        }
    }
    Ok(())
}

/// E-exterior derivative:
/// `dω(E_J) = Σ_a (−1)^a E_{j_a}(ω_{J∖a}) + Σ_{a<b} (−1)^{a+b} Σ_l C_{j_a j_b}^l ω(E_l, E_{J∖{a,b}})`.
pub fn e_differential(form: &EForm, frame: &EFrame) -> Result<EForm> {
    check_form_indices(form, frame)?;
    let p = frame.rank();
    let k = form.degree();
    let mut out = EForm::zero(k + 1);
    if k + 1 > p {
        return Ok(out);
    }
    for key in combinations(p, k + 1) {
        let mut terms: Vec<ScalarField> = Vec::new();
        for a in 0..=k {
            let mut rest = key.clone();
            let ja = rest.remove(a);
            let coeff = form.coefficient(&rest);
            if coeff.is_identically_zero() {
                continue;
            }
            let t = frame.generator_derivative_field(ja, &coeff);
            terms.push(if a % 2 == 0 { t } else { t.neg() });
        }
        for a in 0..=k {
            for b in (a + 1)..=k {
                let rest: Vec<usize> = key
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != a && *i != b)
                    .map(|(_, &v)| v)
                    .collect();
                for l in 0..p {
                    let c = frame.structure_field(key[a], key[b], l);
                    if c.is_identically_zero() {
                        continue;
                    }
                    let Some((ins, s)) = insert_front(l, &rest) else {
                        continue;
                    };
                    let w = form.coefficient(&ins);
                    if w.is_identically_zero() {
                        continue;
                    }
                    let t = c.mul(&w);
                    let sign = s * if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    terms.push(if sign > 0.0 { t } else { t.neg() });
                }
            }
        }
        out.add_term(&key, ScalarField::sum(terms.iter()));
    }
    Ok(out)
}

/// Max-norm of the coefficients of `d(dω)` at `q`.
pub fn d_squared_residual(form: &EForm, frame: &EFrame, q: &[f64]) -> Result<f64> {
    frame.chart().check(q)?;
    let dd = e_differential(&e_differential(form, frame)?, frame)?;
    let r = dd.max_abs_at(q);
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite {
            context: format!("d² residual at {q:?}"),
        })
    }
}

/// `L_X ω = d ι_X ω + ι_X dω` for `X` given by frame components.
pub fn lie_derivative(x: &[ScalarField], form: &EForm, frame: &EFrame) -> Result<EForm> {
    if x.len() != frame.rank() {
        return Err(Error::Dimension {
            context: "vector field frame components".into(),
            expected: frame.rank(),
            got: x.len(),
        });
    }
    check_form_indices(form, frame)?;
    if x.iter().all(ScalarField::is_identically_zero) {
        return Ok(EForm::zero(form.degree()));
    }
    let a = if form.degree() == 0 {
        EForm::zero(0)
    } else {
        e_differential(&form.interior(x), frame)?
    };
    let b = e_differential(form, frame)?.interior(x);
    Ok(a.add(&b))
}

/// Evaluate `ω(E_{idx…})(x)` for any index order.
pub fn eval_on_generators(form: &EForm, idx: &[usize], x: &[f64]) -> f64 {
    form.on_generators(idx).eval(x)
}

/// `g · log|q_b|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTerm {
    pub coord: usize,
    pub coeff: f64,
}

/// `g_k(q_b) · q_b^{−k}` with `g_k` a field of the single variable `q_b`
/// (its variable index 0 stands for `q_b`).
#[derive(Debug, Clone)]
pub struct PowerTerm {
    pub coord: usize,
    pub exponent: u32,
    pub coeff: ScalarField,
}

/// A smooth function plus a ledger of singular terms in boundary coordinates.
/// The smooth part may depend on base coordinates only, or on the full
/// phase-space tuple `(q, m[, O])`.
#[derive(Debug, Clone)]
pub struct EFunction {
    smooth: ScalarField,
    log_terms: Vec<LogTerm>,
    power_terms: Vec<PowerTerm>,
}

impl From<ScalarField> for EFunction {
    fn from(f: ScalarField) -> Self {
        EFunction::smooth(f)
    }
}

impl EFunction {
    pub fn new(smooth: ScalarField, log_terms: Vec<LogTerm>, power_terms: Vec<PowerTerm>) -> Result<Self> {
        for t in &power_terms {
            if t.exponent == 0 {
                return Err(Error::SingularTerm("power-term exponent must be ≥ 1".into()));
            }
        }
        for t in &log_terms {
            if !t.coeff.is_finite() {
                return Err(Error::NonFinite {
                    context: "log-term coefficient".into(),
                });
            }
        }
        Ok(EFunction {
            smooth,
            log_terms,
            power_terms,
        })
    }

    pub fn smooth(f: ScalarField) -> Self {
        EFunction {
            smooth: f,
            log_terms: Vec::new(),
            power_terms: Vec::new(),
        }
    }

    /// `log|q_b|`.
    pub fn log(coord: usize) -> Self {
        EFunction {
            smooth: ScalarField::zero(),
            log_terms: vec![LogTerm { coord, coeff: 1.0 }],
            power_terms: Vec::new(),
        }
    }

    /// `q_b^{−k}`.
    pub fn inverse_power(coord: usize, k: u32) -> Result<Self> {
        EFunction::new(
            ScalarField::zero(),
            vec![],
            vec![PowerTerm {
                coord,
                exponent: k,
                coeff: ScalarField::constant(1.0),
            }],
        )
    }

    pub fn smooth_part(&self) -> &ScalarField {
        &self.smooth
    }

    pub fn log_terms(&self) -> &[LogTerm] {
        &self.log_terms
    }

    pub fn power_terms(&self) -> &[PowerTerm] {
        &self.power_terms
    }

    pub fn is_smooth(&self) -> bool {
        self.log_terms.is_empty() && self.power_terms.is_empty()
    }

    pub fn add(&self, other: &EFunction) -> EFunction {
        let mut out = self.clone();
        out.smooth = out.smooth.add(&other.smooth);
        out.log_terms.extend(other.log_terms.iter().cloned());
        out.power_terms.extend(other.power_terms.iter().cloned());
        out
    }

    /// Value at `x`; infinite or NaN on the singular locus of a singular term.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.smooth.eval(x);
        for t in &self.log_terms {
            v += t.coeff * x[t.coord].abs().ln();
        }
        for t in &self.power_terms {
            let qb = x[t.coord];
            v += t.coeff.eval(&[qb]) * qb.powi(-(t.exponent as i32));
        }
        v
    }

    /// Check the ledger against the frame: every singular coordinate must be
    /// a boundary coordinate with vanishing data, and power exponents must not
    /// exceed `order − 1`.
    pub fn validate(&self, frame: &EFrame) -> Result<()> {
        let bf = frame.chart().boundary_functions();
        let coords = self
            .log_terms
            .iter()
            .map(|t| t.coord)
            .chain(self.power_terms.iter().map(|t| t.coord));
        for b in coords {
            if !bf.contains(&b) || frame.boundary_datum(b).is_none() {
                return Err(Error::SingularTerm(format!(
                    "coordinate `{}` is not a boundary coordinate of chart `{}`",
                    frame
                        .chart()
                        .coord_names()
                        .get(b)
                        .cloned()
                        .unwrap_or_else(|| format!("#{b}")),
                    frame.chart().name()
                )));
            }
        }
        for t in &self.power_terms {
            let m = frame.boundary_datum(t.coord).map_or(0, |d| d.order);
            if t.exponent + 1 > m {
                return Err(Error::SingularTerm(format!(
                    "exponent {} on `{}` exceeds order − 1 = {} of the frame; the frame derivative would be singular",
                    t.exponent,
                    frame.chart().coord_names()[t.coord],
                    m as i64 - 1
                )));
            }
        }
        Ok(())
    }

    /// `⟨df, E_i⟩(x)` for every generator; smooth up to and on the boundary.
    pub fn frame_gradient(&self, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>> {
        self.validate(frame)?;
        frame.chart().check(x)?;
        let p = frame.rank();
        let mut grad: Vec<f64> = (0..p).map(|i| frame.generator_derivative(i, &self.smooth, x)).collect();
        for t in &self.log_terms {
            let d = frame.boundary_datum(t.coord).expect("validated");
            let qb = x[t.coord];
            let s = t.coeff * qb.powi(d.order as i32 - 1);
            for (i, g) in grad.iter_mut().enumerate() {
                *g += s * d.reduced[i].eval(x);
            }
        }
        for t in &self.power_terms {
            let d = frame.boundary_datum(t.coord).expect("validated");
            let qb = x[t.coord];
            let (m, k) = (d.order as i32, t.exponent as i32);
            let g = t.coeff.eval(&[qb]);
            let dg = t.coeff.partial(&[qb], 0);
            let s = dg * qb.powi(m - k) - k as f64 * g * qb.powi(m - k - 1);
            for (i, gi) in grad.iter_mut().enumerate() {
                *gi += s * d.reduced[i].eval(x);
            }
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("E-function gradient at {x:?}"),
            });
        }
        Ok(grad)
    }

    /// The E-differential as a degree-1 form with smooth coefficient fields.
    pub fn differential(&self, frame: &EFrame) -> Result<EForm> {
        self.validate(frame)?;
        let p = frame.rank();
        let mut form = e_differential(&EForm::scalar(self.smooth.clone()), frame)?;
        for t in &self.log_terms {
            let d = frame.boundary_datum(t.coord).expect("validated");
            let s = ScalarField::symbolic(Expr::mul(
                Expr::Const(t.coeff),
                Expr::powi(Expr::Var(t.coord), d.order as i32 - 1),
            ));
            for i in 0..p {
                form.add_term(&[i], s.mul(&d.reduced[i]));
            }
        }
        for t in &self.power_terms {
            let d = frame.boundary_datum(t.coord).expect("validated");
            let (m, k) = (d.order as i32, t.exponent as i32);
            let b = t.coord;
            let g = lift_single_variable(&t.coeff, b);
            let dg = lift_single_variable(&t.coeff.partial_field(0), b);
            let qpow = |e: i32| ScalarField::symbolic(Expr::powi(Expr::Var(b), e));
            let s = dg.mul(&qpow(m - k)).sub(&g.mul(&qpow(m - k - 1)).scale(k as f64));
            for i in 0..p {
                form.add_term(&[i], s.mul(&d.reduced[i]));
            }
        }
        Ok(form)
    }

    /// Partial derivative of the smooth part in slot `j` (fibre slots have no singular terms).
    pub fn smooth_partial(&self, x: &[f64], j: usize) -> f64 {
        self.smooth.partial(x, j)
    }

    /// Parse an expression, moving `c·log(q_b)` and `g(q_b)·q_b^-k` terms in
    /// boundary coordinates into the singular ledger.
    pub fn parse(src: &str, names: &[&str], boundary: &[usize]) -> Result<Self> {
        let expr = crate::expr::parse(src, names)?;
        let mut terms = Vec::new();
        split_sum(&expr, 1.0, &mut terms);
        let mut smooth = Expr::Const(0.0);
        let mut log_terms: Vec<LogTerm> = Vec::new();
        let mut power_terms = Vec::new();
        for (sign, term) in terms {
            let mut factors = Vec::new();
            let mut c = sign;
            split_product(&term, &mut factors, &mut c);
            match classify(&factors, boundary) {
                Singular::Log(b, rest) if rest.is_empty() => log_terms.push(LogTerm { coord: b, coeff: c }),
                Singular::Power(b, k, rest) if rest.iter().all(|f| f.only_uses(&[b])) => {
                    let g = rest
                        .into_iter()
                        .fold(Expr::Const(c), Expr::mul)
                        .remap_vars(&|_| Expr::Var(0));
                    power_terms.push(PowerTerm {
                        coord: b,
                        exponent: k,
                        coeff: ScalarField::symbolic(g),
                    });
                }
                Singular::None => smooth = Expr::add(smooth, Expr::mul(Expr::Const(c), rebuild(&factors))),
                _ => {
                    return Err(Error::SingularTerm(format!(
                        "term `{}` in `{src}` mixes a boundary singularity with other variables",
                        term.display_with(&names.iter().map(|s| s.to_string()).collect::<Vec<_>>())
                    )))
                }
            }
        }
        let smooth_has_singularity = boundary.iter().any(|&b| contains_singularity(&smooth, b));
        if smooth_has_singularity {
            return Err(Error::SingularTerm(format!(
                "`{src}` contains a boundary singularity outside the admissible log/power forms"
            )));
        }
        // merge log terms on the same coordinate
        let mut merged: Vec<LogTerm> = Vec::new();
        for t in log_terms {
            match merged.iter_mut().find(|m| m.coord == t.coord) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        EFunction::new(ScalarField::symbolic(smooth), merged, power_terms)
    }
}

fn lift_single_variable(f: &ScalarField, b: usize) -> ScalarField {
    match f.as_expr() {
        Some(e) => ScalarField::symbolic(e.remap_vars(&|_| Expr::Var(b))),
        None => {
            let g = f.clone();
            let g2 = f.clone();
            ScalarField::from_fn_with_partials(
                move |x| g.eval(&[x[b]]),
                move |x, j| if j == b { g2.partial(&[x[b]], 0) } else { 0.0 },
            )
        }
    }
}

fn split_sum(e: &Expr, sign: f64, out: &mut Vec<(f64, Expr)>) {
    match e {
        Expr::Add(a, b) => {
            split_sum(a, sign, out);
            split_sum(b, sign, out);
        }
        Expr::Sub(a, b) => {
            split_sum(a, sign, out);
            split_sum(b, -sign, out);
        }
        Expr::Neg(a) => split_sum(a, -sign, out),
        Expr::Const(c) if *c == 0.0 => {}
        other => out.push((sign, other.clone())),
    }
}

fn split_product(e: &Expr, out: &mut Vec<Expr>, c: &mut f64) {
    match e {
        Expr::Mul(a, b) => {
            split_product(a, out, c);
            split_product(b, out, c);
        }
        Expr::Neg(a) => {
            *c = -*c;
            split_product(a, out, c);
        }
        Expr::Const(k) => *c *= k,
        Expr::Div(a, b) => {
            split_product(a, out, c);
            match &**b {
                Expr::PowI(base, n) => out.push(Expr::powi((**base).clone(), -n)),
                Expr::Var(i) => out.push(Expr::powi(Expr::Var(*i), -1)),
                Expr::Const(k) => *c /= k,
                other => out.push(Expr::div(Expr::Const(1.0), other.clone())),
            }
        }
        other => out.push(other.clone()),
    }
}

enum Singular {
    None,
    Log(usize, Vec<Expr>),
    Power(usize, u32, Vec<Expr>),
    Mixed,
}

fn classify(factors: &[Expr], boundary: &[usize]) -> Singular {
    let mut found: Option<(usize, Option<u32>)> = None;
    let mut rest = Vec::new();
    let mut total_power: i32 = 0;
    let mut power_coord = None;
    for f in factors {
        let hit = match f {
            Expr::Call(Func::Log, inner) => match &**inner {
                Expr::Var(b) if boundary.contains(b) => Some((*b, None)),
                Expr::Call(Func::Abs, v) => match &**v {
                    Expr::Var(b) if boundary.contains(b) => Some((*b, None)),
                    _ => None,
                },
                _ => None,
            },
            Expr::PowI(base, n) if *n < 0 => match &**base {
                Expr::Var(b) if boundary.contains(b) => Some((*b, Some((-n) as u32))),
                _ => None,
            },
            _ => None,
        };
        match hit {
            Some((b, Some(k))) => {
                if power_coord.is_some_and(|pc| pc != b) || matches!(found, Some((_, None))) {
                    return Singular::Mixed;
                }
                power_coord = Some(b);
                total_power += k as i32;
                found = Some((b, Some(total_power as u32)));
            }
            Some((b, None)) => {
                if found.is_some() {
                    return Singular::Mixed;
                }
                found = Some((b, None));
            }
            None => rest.push(f.clone()),
        }
    }
    match found {
        None => Singular::None,
        Some((b, None)) => Singular::Log(b, rest),
        Some((b, Some(_))) => {
            // positive powers of q_b among the remaining factors reduce the exponent
            let mut k = total_power;
            let mut others = Vec::new();
            for f in rest {
                match &f {
                    Expr::Var(v) if *v == b && k > 0 => k -= 1,
                    Expr::PowI(base, n) if *n > 0 && matches!(&**base, Expr::Var(v) if *v == b) && k >= *n => {
                        k -= n
                    }
                    _ => others.push(f),
                }
            }
            if k == 0 {
                Singular::None
            } else {
                Singular::Power(b, k as u32, others)
            }
        }
    }
}

fn rebuild(factors: &[Expr]) -> Expr {
    factors.iter().cloned().fold(Expr::Const(1.0), Expr::mul)
}

// A factor that depends on q_b is harmless if it reduces to a nonzero
// constant on q_b = 0, e.g. √(1 + q_b²·g).
fn vanishes_on_boundary(e: &Expr, b: usize) -> bool {
    if !e.uses_var(b) {
        return false;
    }
    let on_z = e.remap_vars(&|i| if i == b { Expr::Const(0.0) } else { Expr::Var(i) });
    !matches!(on_z.as_const(), Some(c) if c != 0.0 && c.is_finite())
}

fn contains_singularity(e: &Expr, b: usize) -> bool {
    match e {
        Expr::Call(Func::Log, inner) => vanishes_on_boundary(inner, b) || contains_singularity(inner, b),
        Expr::PowI(base, n) => (*n < 0 && vanishes_on_boundary(base, b)) || contains_singularity(base, b),
        Expr::Div(a, d) => vanishes_on_boundary(d, b) || contains_singularity(a, b) || contains_singularity(d, b),
        Expr::Const(_) | Expr::Var(_) => false,
        Expr::Neg(a) | Expr::Call(_, a) => contains_singularity(a, b),
        Expr::Add(a, c) | Expr::Sub(a, c) | Expr::Mul(a, c) | Expr::Pow(a, c) => {
            contains_singularity(a, b) || contains_singularity(c, b)
        }
    }
}
