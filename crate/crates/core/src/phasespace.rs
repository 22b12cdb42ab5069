//! The E-cotangent bundle in natural coordinates `(q, m)`.
//!
//! Frame components of phase-space vectors are ordered `(E₁…E_p, V₁…V_p)`,
//! where `V_i = ∂/∂m_i`. The canonical form is
//! `ω = Σ V_i*∧E_i* − ½ Σ m_i C_jk^i E_j*∧E_k*` and Hamiltonian fields obey
//! `ι_X ω = −dH`.

use nalgebra::DMatrix;

use crate::ecalculus::EFunction;
use crate::error::{Error, Result};
use crate::estructure::EFrame;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, m: Vec<f64>) -> Self {
        PhasePoint { q, m }
    }

    /// Split a flat `[q…, m…]` state.
    pub fn from_flat(frame: &EFrame, x: &[f64]) -> Result<Self> {
        let (n, p) = (frame.dim(), frame.rank());
        if x.len() != n + p {
            return Err(Error::Dimension {
                context: "phase-space state".into(),
                expected: n + p,
                got: x.len(),
            });
        }
        Ok(PhasePoint {
            q: x[..n].to_vec(),
            m: x[n..].to_vec(),
        })
    }

    pub fn flat(&self) -> Vec<f64> {
        self.q.iter().chain(self.m.iter()).copied().collect()
    }

    pub fn validate(&self, frame: &EFrame) -> Result<()> {
        if self.q.len() != frame.dim() {
            return Err(Error::Dimension {
                context: "phase point base coordinates".into(),
                expected: frame.dim(),
                got: self.q.len(),
            });
        }
        if self.m.len() != frame.rank() {
            return Err(Error::Dimension {
                context: "phase point momenta".into(),
                expected: frame.rank(),
                got: self.m.len(),
            });
        }
        if self.m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("momenta {:?}", self.m),
            });
        }
        frame.chart().check(&self.q)
    }
}

/// `Ω_ab = ω(e_a, e_b)` in the basis `(E, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    omega: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.omega
    }

    pub fn determinant(&self) -> f64 {
        self.omega.determinant()
    }

    /// `max |Ω + Ωᵀ|`, zero for the constructed matrices.
    pub fn skew_defect(&self) -> f64 {
        (&self.omega + self.omega.transpose()).amax()
    }

    /// `ω(u, v)` summed over pairs `a < b`, so that `ω(u, u) = 0` and
    /// `ω(u, v) = −ω(v, u)` hold exactly in floating point.
    pub fn pair(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.omega.nrows();
        let mut s = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let w = self.omega[(a, b)];
                if w != 0.0 {
                    s += w * (u[a] * v[b] - u[b] * v[a]);
                }
            }
        }
        s
    }

    /// `‖Ωᵀ x + g‖∞`: residual of `ι_x ω = −dH` with `g = ∇H`.
    pub fn contraction_residual(&self, x: &[f64], grad: &[f64]) -> f64 {
        let n = self.omega.nrows();
        (0..n)
            .map(|b| {
                let s: f64 = (0..n).map(|a| x[a] * self.omega[(a, b)]).sum();
                (s + grad[b]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `B_jk = Σ_i m_i C_jk^i(q)`.
pub fn momentum_structure(frame: &EFrame, pt: &PhasePoint) -> Result<DMatrix<f64>> {
    pt.validate(frame)?;
    let p = frame.rank();
    let c = frame.structure_constants(&pt.q)?;
    Ok(DMatrix::from_fn(p, p, |j, k| {
        (0..p).map(|i| pt.m[i] * c[(j * p + k) * p + i]).sum()
    }))
}

/// Components of the Liouville form `λ = Σ m_i E_i*`: `(m, 0)`.
pub fn liouville_components(frame: &EFrame, pt: &PhasePoint) -> Result<Vec<f64>> {
    pt.validate(frame)?;
    let mut out = pt.m.clone();
    out.resize(out.len() + frame.rank(), 0.0);
    Ok(out)
}

/// `[[−B, −I], [I, 0]]`.
pub fn canonical_symplectic(frame: &EFrame, pt: &PhasePoint) -> Result<SymplecticMatrix> {
    let b = momentum_structure(frame, pt)?;
    let p = frame.rank();
    let mut omega = DMatrix::zeros(2 * p, 2 * p);
    for j in 0..p {
        for k in (j + 1)..p {
            omega[(j, k)] = -b[(j, k)];
            omega[(k, j)] = b[(j, k)];
        }
        omega[(j, p + j)] = -1.0;
        omega[(p + j, j)] = 1.0;
    }
    Ok(SymplecticMatrix { omega })
}

/// A function on phase space with frame-basis gradients.
pub trait PhaseFunction {
    fn value(&self, frame: &EFrame, x: &[f64]) -> Result<f64>;

    /// `(⟨dH, E_i⟩, ∂H/∂m_i)` at the flat state `x = [q…, m…]`.
    fn phase_gradient(&self, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>>;
}

impl PhaseFunction for EFunction {
    fn value(&self, frame: &EFrame, x: &[f64]) -> Result<f64> {
        frame.chart().check(x)?;
        Ok(EFunction::value(self, x))
    }

    fn phase_gradient(&self, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>> {
        let n = frame.dim();
        let mut g = self.frame_gradient(frame, x)?;
        for i in 0..frame.rank() {
            let d = self.smooth_partial(x, n + i);
            if !d.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("∂H/∂m{} at {x:?}", i + 1),
                });
            }
            g.push(d);
        }
        Ok(g)
    }
}

/// Solve `ι_X ω = −dH`. With `Ω = [[−B, −I], [I, 0]]` this is
/// `x_E = ∂H/∂m`, `x_V = −⟨dH, E⟩ − B x_E`.
pub fn hamiltonian_field(h: &dyn PhaseFunction, frame: &EFrame, pt: &PhasePoint) -> Result<Vec<f64>> {
    let b = momentum_structure(frame, pt)?;
    let grad = h.phase_gradient(frame, &pt.flat())?;
    Ok(solve_with_structure(&b, &grad))
}

fn solve_with_structure(b: &DMatrix<f64>, grad: &[f64]) -> Vec<f64> {
    let p = b.nrows();
    let xe: Vec<f64> = grad[p..].to_vec();
    let mut out = xe.clone();
    for j in 0..p {
        let bx: f64 = (0..p).map(|k| b[(j, k)] * xe[k]).sum();
        out.push(-grad[j] - bx);
    }
    out
}

/// General solve of `Ωᵀ x = −∇H` by LU; used to cross-check the block formula.
pub fn hamiltonian_field_lu(omega: &SymplecticMatrix, grad: &[f64]) -> Result<Vec<f64>> {
    let rhs = nalgebra::DVector::from_iterator(grad.len(), grad.iter().map(|g| -g));
    omega
        .matrix()
        .transpose()
        .lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Degenerate {
            context: "canonical symplectic matrix".into(),
        })
}

/// `{f, g} = ω(X_f, X_g) = dg(X_f)`; the time derivative of `f` under `H` is `{H, f}`.
pub fn poisson_bracket(
    f: &dyn PhaseFunction,
    g: &dyn PhaseFunction,
    frame: &EFrame,
    pt: &PhasePoint,
) -> Result<f64> {
    let omega = canonical_symplectic(frame, pt)?;
    let xf = hamiltonian_field(f, frame, pt)?;
    let xg = hamiltonian_field(g, frame, pt)?;
    Ok(omega.pair(&xf, &xg))
}

/// Ambient velocity `(q̇, ṁ)` of the frame-component vector `x`.
pub fn pushforward_velocity(frame: &EFrame, pt: &PhasePoint, x: &[f64]) -> Result<Vec<f64>> {
    let p = frame.rank();
    if x.len() != 2 * p {
        return Err(Error::Dimension {
            context: "phase-space frame vector".into(),
            expected: 2 * p,
            got: x.len(),
        });
    }
    let mut v = frame.push_forward(&pt.q, &x[..p])?;
    v.extend_from_slice(&x[p..]);
    Ok(v)
}

/// `(q̇, ṁ)` of the Hamiltonian flow at the flat state `x`.
pub fn hamiltonian_velocity(h: &dyn PhaseFunction, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>> {
    let pt = PhasePoint::from_flat(frame, x)?;
    let xh = hamiltonian_field(h, frame, &pt)?;
    pushforward_velocity(frame, &pt, &xh)
}
