//! Scalar coefficient fields on a chart.
//!
//! A field is either a symbolic [`Expr`] (exact partials) or an opaque
//! closure, optionally with an analytic gradient. Closure partials fall back
//! to central differences with step `h = fd_scale * max(1, |x_j|)`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::expr::{self, Expr, Func};

pub const DEFAULT_FD_SCALE: f64 = 1e-5;

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type PartialFn = dyn Fn(&[f64], usize) -> f64 + Send + Sync;

struct SymbolicField {
    expr: Expr,
    partials: Vec<OnceLock<Expr>>,
}

impl SymbolicField {
    fn partial_expr(&self, j: usize) -> Expr {
        match self.partials.get(j) {
            Some(cell) => cell.get_or_init(|| self.expr.diff(j)).clone(),
            None => Expr::Const(0.0),
        }
    }
}

struct ClosureField {
    eval: Arc<EvalFn>,
    partial: Option<Arc<PartialFn>>,
    fd_scale: f64,
}

#[derive(Clone)]
enum Repr {
    Symbolic(Arc<SymbolicField>),
    Closure(Arc<ClosureField>),
}

/// A real-valued function of a coordinate tuple with partial derivatives.
#[derive(Clone)]
pub struct ScalarField {
    repr: Repr,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Symbolic(s) => write!(f, "ScalarField({})", s.expr),
            Repr::Closure(c) => write!(
                f,
                "ScalarField(<closure>, analytic_partials={})",
                c.partial.is_some()
            ),
        }
    }
}

impl From<Expr> for ScalarField {
    fn from(e: Expr) -> Self {
        ScalarField::symbolic(e)
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::constant(c)
    }
}

impl ScalarField {
    pub fn symbolic(expr: Expr) -> Self {
        let n = expr.max_var().map_or(0, |m| m + 1);
        ScalarField {
            repr: Repr::Symbolic(Arc::new(SymbolicField {
                expr,
                partials: (0..n).map(|_| OnceLock::new()).collect(),
            })),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::symbolic(Expr::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(i: usize) -> Self {
        Self::symbolic(Expr::Var(i))
    }

    /// Parse an expression over the named variables.
    pub fn parse(src: &str, names: &[&str]) -> Result<Self> {
        Ok(Self::symbolic(expr::parse(src, names)?))
    }

    /// Closure field whose partials are central finite differences.
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            repr: Repr::Closure(Arc::new(ClosureField {
                eval: Arc::new(f),
                partial: None,
                fd_scale: DEFAULT_FD_SCALE,
            })),
        }
    }

    /// Closure field with analytic partials `df(x, j)`.
    pub fn from_fn_with_partials(
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        df: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            repr: Repr::Closure(Arc::new(ClosureField {
                eval: Arc::new(f),
                partial: Some(Arc::new(df)),
                fd_scale: DEFAULT_FD_SCALE,
            })),
        }
    }

    /// Override the finite-difference step scale (closure fields only).
    pub fn with_fd_scale(self, scale: f64) -> Self {
        match self.repr {
            Repr::Closure(c) => ScalarField {
                repr: Repr::Closure(Arc::new(ClosureField {
                    eval: c.eval.clone(),
                    partial: c.partial.clone(),
                    fd_scale: scale,
                })),
            },
            other => ScalarField { repr: other },
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Symbolic(s) => Some(&s.expr),
            Repr::Closure(_) => None,
        }
    }

    pub fn has_analytic_partials(&self) -> bool {
        match &self.repr {
            Repr::Symbolic(_) => true,
            Repr::Closure(c) => c.partial.is_some(),
        }
    }

    /// Exactly zero as a symbol (not merely at sampled points).
    pub fn is_identically_zero(&self) -> bool {
        self.as_expr().is_some_and(Expr::is_zero)
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.as_expr().and_then(Expr::as_const)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Symbolic(s) => s.expr.eval(x),
            Repr::Closure(c) => (c.eval)(x),
        }
    }

    /// `∂f/∂x_j` at `x`.
    pub fn partial(&self, x: &[f64], j: usize) -> f64 {
        match &self.repr {
            Repr::Symbolic(s) => s.partial_expr(j).eval(x),
            Repr::Closure(c) => match &c.partial {
                Some(df) => df(x, j),
                None => central_difference(&*c.eval, x, j, c.fd_scale),
            },
        }
    }

    /// Central-difference partial regardless of representation.
    pub fn fd_partial(&self, x: &[f64], j: usize, scale: f64) -> f64 {
        central_difference(&|y: &[f64]| self.eval(y), x, j, scale)
    }

    /// Compare analytic partials against central differences at `x`.
    /// Returns the worst relative discrepancy over the first `n` coordinates.
    pub fn partials_self_consistency(&self, x: &[f64], n: usize) -> f64 {
        (0..n)
            .map(|j| {
                let a = self.partial(x, j);
                let b = self.fd_partial(x, j, DEFAULT_FD_SCALE);
                (a - b).abs() / (1.0 + a.abs().max(b.abs()))
            })
            .fold(0.0, f64::max)
    }

    /// The field `∂f/∂x_j`.
    pub fn partial_field(&self, j: usize) -> ScalarField {
        match &self.repr {
            Repr::Symbolic(s) => ScalarField::symbolic(s.partial_expr(j)),
            Repr::Closure(_) => {
                let me = self.clone();
                ScalarField::from_fn(move |x| me.partial(x, j))
            }
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.combine(other, Expr::add, |a, b| a + b, |_, da, _, db| da + db)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.combine(other, Expr::sub, |a, b| a - b, |_, da, _, db| da - db)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.combine(other, Expr::mul, |a, b| a * b, |a, da, b, db| da * b + a * db)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.mul(&ScalarField::constant(c))
    }

    pub fn neg(&self) -> ScalarField {
        match &self.repr {
            Repr::Symbolic(s) => ScalarField::symbolic(Expr::neg(s.expr.clone())),
            Repr::Closure(_) => self.scale(-1.0),
        }
    }

    /// Apply one of the grammar's unary functions.
    pub fn apply(&self, f: Func) -> ScalarField {
        match &self.repr {
            Repr::Symbolic(s) => ScalarField::symbolic(Expr::call(f, s.expr.clone())),
            Repr::Closure(_) => {
                let me = self.clone();
                let outer = ScalarField::symbolic(Expr::call(f, Expr::Var(0)));
                let me2 = me.clone();
                let outer2 = outer.clone();
                ScalarField::from_fn_with_partials(
                    move |x| outer.eval(&[me.eval(x)]),
                    move |x, j| outer2.partial(&[me2.eval(x)], 0) * me2.partial(x, j),
                )
            }
        }
    }

    fn combine(
        &self,
        other: &ScalarField,
        sym: fn(Expr, Expr) -> Expr,
        val: fn(f64, f64) -> f64,
        der: fn(f64, f64, f64, f64) -> f64,
    ) -> ScalarField {
        if let (Some(a), Some(b)) = (self.as_expr(), other.as_expr()) {
            return ScalarField::symbolic(sym(a.clone(), b.clone()));
        }
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        ScalarField::from_fn_with_partials(
            move |x| val(a.eval(x), b.eval(x)),
            move |x, j| der(a2.eval(x), a2.partial(x, j), b2.eval(x), b2.partial(x, j)),
        )
    }

    /// Sum of fields, symbolic when every term is.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a ScalarField>) -> ScalarField {
        terms
            .into_iter()
            .fold(ScalarField::zero(), |acc, t| acc.add(t))
    }
}

fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], j: usize, scale: f64) -> f64 {
    if j >= x.len() {
        return 0.0;
    }
    let h = scale * x[j].abs().max(1.0);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[j] += h;
    xm[j] -= h;
    // use the actual representable step
    let step = xp[j] - xm[j];
    (f(&xp) - f(&xm)) / step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_fd_matches_analytic() {
        let f = ScalarField::from_fn(|x| x[0].sin() * x[1].exp());
        let x = [0.3, -0.2];
        let d0 = f.partial(&x, 0);
        assert!((d0 - 0.3f64.cos() * (-0.2f64).exp()).abs() < 1e-9);
        let g = ScalarField::from_fn_with_partials(
            |x| x[0] * x[0],
            |x, j| if j == 0 { 2.0 * x[0] } else { 0.0 },
        );
        assert!(g.partials_self_consistency(&[1.5, 0.0], 2) < 1e-6);
    }

    #[test]
    fn inconsistent_partials_are_detected() {
        let bad = ScalarField::from_fn_with_partials(|x| x[0] * x[0], |x, _| 3.0 * x[0]);
        assert!(bad.partials_self_consistency(&[1.0], 1) > 1e-3);
    }

    #[test]
    fn algebra_stays_symbolic() {
        let x = ScalarField::coordinate(0);
        let y = ScalarField::coordinate(1);
        let f = x.mul(&y).add(&ScalarField::constant(2.0));
        assert!(f.as_expr().is_some());
        assert_eq!(f.eval(&[3.0, 4.0]), 14.0);
        assert_eq!(f.partial(&[3.0, 4.0], 1), 3.0);
        assert!(x.mul(&ScalarField::zero()).is_identically_zero());
    }

    #[test]
    fn mixed_algebra_uses_product_rule() {
        let x = ScalarField::coordinate(0);
        let c = ScalarField::from_fn(|x| x[0].exp());
        let f = x.mul(&c);
        let at = [0.5];
        let expect = 0.5f64.exp() * 1.5;
        assert!((f.partial(&at, 0) - expect).abs() < 1e-8);
    }
}
