//! Pointwise checks of moment-map data for Hamiltonian actions on the
//! E-cotangent bundle.

use crate::error::{Error, Result};
use crate::estructure::EFrame;
use crate::field::ScalarField;
use crate::phasespace::{canonical_symplectic, PhaseFunction, PhasePoint};

/// Fundamental field `X♯` of one Lie-algebra element, as `2p` frame
/// components `(E…, V…)` depending on the flat phase state.
#[derive(Debug, Clone)]
pub struct ActionGenerator {
    pub label: String,
    pub fundamental: Vec<ScalarField>,
}

impl ActionGenerator {
    pub fn new(label: impl Into<String>, fundamental: Vec<ScalarField>) -> Self {
        ActionGenerator {
            label: label.into(),
            fundamental,
        }
    }

    /// Constant frame components.
    pub fn constant(label: impl Into<String>, components: &[f64]) -> Self {
        ActionGenerator::new(label, components.iter().map(|c| ScalarField::constant(*c)).collect())
    }

    pub fn eval(&self, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>> {
        let p = frame.rank();
        if self.fundamental.len() != 2 * p {
            return Err(Error::Dimension {
                context: format!("fundamental field `{}`", self.label),
                expected: 2 * p,
                got: self.fundamental.len(),
            });
        }
        let v: Vec<f64> = self.fundamental.iter().map(|f| f.eval(x)).collect();
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("fundamental field `{}` at {x:?}", self.label),
            });
        }
        Ok(v)
    }
}

/// `‖ι_{X♯} ω + dμ‖₂` in the frame basis.
pub fn moment_residual(gen: &ActionGenerator, mu: &dyn PhaseFunction, frame: &EFrame, pt: &PhasePoint) -> Result<f64> {
    let omega = canonical_symplectic(frame, pt)?;
    let x = pt.flat();
    let xs = gen.eval(frame, &x)?;
    let grad = mu.phase_gradient(frame, &x)?;
    let om = omega.matrix();
    let n = om.nrows();
    let r = (0..n)
        .map(|b| {
            let c: f64 = (0..n).map(|a| xs[a] * om[(a, b)]).sum();
            (c + grad[b]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    Ok(r)
}

/// `|L_{X♯} μ| = |dμ(X♯)|`.
pub fn level_tangency(gen: &ActionGenerator, mu: &dyn PhaseFunction, frame: &EFrame, pt: &PhasePoint) -> Result<f64> {
    pt.validate(frame)?;
    let x = pt.flat();
    let xs = gen.eval(frame, &x)?;
    let grad = mu.phase_gradient(frame, &x)?;
    Ok(xs.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>().abs())
}
