//! E-metrics on the frame bundle and the kinetic Hamiltonian `H = mᵀ g⁻¹ m`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estructure::EFrame;
use crate::field::ScalarField;
use crate::phasespace::{hamiltonian_field, PhaseFunction, PhasePoint};

/// Number of negative eigenvalues expected (0 for a Riemannian metric).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub negative: usize,
}

impl Signature {
    pub const RIEMANNIAN: Signature = Signature { negative: 0 };

    pub fn lorentzian() -> Self {
        Signature { negative: 1 }
    }
}

/// Symmetric `p × p` matrix of fields in the frame basis.
#[derive(Debug, Clone)]
pub struct EMetric {
    frame: EFrame,
    // upper triangle, row-major
    entries: Vec<ScalarField>,
    signature: Signature,
}

fn upper_slot(p: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * p - a * (a + 1) / 2 + b
}

const DEGENERACY_RCOND: f64 = 1e-13;

impl EMetric {
    /// Build from a full `p × p` array; the lower triangle must repeat the
    /// upper one (checked symbolically for expressions, at `probe` otherwise).
    pub fn new(frame: EFrame, g: Vec<Vec<ScalarField>>, signature: Signature) -> Result<EMetric> {
        let p = frame.rank();
        if g.len() != p || g.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension {
                context: "metric matrix".into(),
                expected: p,
                got: g.len(),
            });
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let same = match (g[i][j].as_expr(), g[j][i].as_expr()) {
                    (Some(a), Some(b)) => a == b,
                    _ => true,
                };
                if !same {
                    return Err(Error::InvalidArgument(format!(
                        "metric is not symmetric: entries ({}, {}) and ({}, {}) differ",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        if signature.negative > p {
            return Err(Error::InvalidArgument("signature has more negative directions than the rank".into()));
        }
        let mut entries = Vec::with_capacity(p * (p + 1) / 2);
        for (i, row) in g.iter().enumerate() {
            for f in &row[i..] {
                entries.push(f.clone());
            }
        }
        Ok(EMetric {
            frame,
            entries,
            signature,
        })
    }

    /// Constant diagonal metric.
    pub fn diagonal(frame: EFrame, diag: &[f64]) -> Result<EMetric> {
        let p = frame.rank();
        let negative = diag.iter().filter(|d| **d < 0.0).count();
        let g = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        if i == j {
                            ScalarField::constant(diag.get(i).copied().unwrap_or(f64::NAN))
                        } else {
                            ScalarField::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        if diag.len() != p {
            return Err(Error::Dimension {
                context: "diagonal metric".into(),
                expected: p,
                got: diag.len(),
            });
        }
        EMetric::new(frame, g, Signature { negative })
    }

    pub fn identity(frame: EFrame) -> Result<EMetric> {
        let p = frame.rank();
        EMetric::diagonal(frame, &vec![1.0; p])
    }

    pub fn frame(&self) -> &EFrame {
        &self.frame
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[upper_slot(self.frame.rank(), i, j)]
    }

    /// `g(q)`, exactly symmetric.
    pub fn matrix(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.frame.chart().check(q)?;
        let p = self.frame.rank();
        let m = DMatrix::from_fn(p, p, |i, j| self.entry(i, j).eval(q));
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("metric at {q:?}"),
            });
        }
        Ok(m)
    }

    fn partial_matrix(&self, q: &[f64], j: usize) -> DMatrix<f64> {
        let p = self.frame.rank();
        DMatrix::from_fn(p, p, |a, b| self.entry(a, b).partial(q, j))
    }

    fn solve(&self, q: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let g = self.matrix(q)?;
        let scale = g.amax();
        let lu = g.clone().lu();
        let det = lu.determinant();
        let p = g.nrows() as i32;
        if scale == 0.0 || !det.is_finite() || det.abs() <= (DEGENERACY_RCOND * scale).powi(p) {
            return Err(Error::Degenerate {
                context: format!("metric at {q:?} (det = {det:e})"),
            });
        }
        let v = lu
            .solve(&DVector::from_column_slice(rhs))
            .ok_or_else(|| Error::Degenerate {
                context: format!("metric at {q:?}"),
            })?;
        Ok(v.iter().copied().collect())
    }

    /// Solve `g(q) v = α`.
    pub fn sharp(&self, q: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.frame.rank() {
            return Err(Error::Dimension {
                context: "covector".into(),
                expected: self.frame.rank(),
                got: alpha.len(),
            });
        }
        self.solve(q, alpha)
    }

    /// `g(q) v`.
    pub fn flat(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let g = self.matrix(q)?;
        Ok((g * DVector::from_column_slice(v)).iter().copied().collect())
    }

    /// `(#positive, #negative)` eigenvalues of `g(q)`.
    pub fn inertia(&self, q: &[f64]) -> Result<(usize, usize)> {
        let g = self.matrix(q)?;
        let eig = g.symmetric_eigenvalues();
        let tol = 1e-12 * eig.amax().max(1e-300);
        let pos = eig.iter().filter(|&&e| e > tol).count();
        let neg = eig.iter().filter(|&&e| e < -tol).count();
        Ok((pos, neg))
    }

    /// Check the declared signature at every point; returns the first offender.
    pub fn check_signature(&self, points: &[Vec<f64>]) -> Result<()> {
        let p = self.frame.rank();
        for q in points {
            let (pos, neg) = self.inertia(q)?;
            if neg != self.signature.negative || pos + neg != p {
                return Err(Error::InvalidArgument(format!(
                    "metric at {q:?} has inertia (+{pos}, −{neg}); declared {} negative direction(s)",
                    self.signature.negative
                )));
            }
        }
        Ok(())
    }
}

/// `H(q, m) = mᵀ g(q)⁻¹ m` (no factor ½).
#[derive(Debug, Clone)]
pub struct KineticHamiltonian {
    pub metric: EMetric,
}

impl KineticHamiltonian {
    pub fn new(metric: EMetric) -> Self {
        KineticHamiltonian { metric }
    }
}

pub fn kinetic_hamiltonian(gm: &EMetric, pt: &PhasePoint) -> Result<f64> {
    pt.validate(gm.frame())?;
    let v = gm.sharp(&pt.q, &pt.m)?;
    Ok(pt.m.iter().zip(&v).map(|(a, b)| a * b).sum())
}

impl PhaseFunction for KineticHamiltonian {
    fn value(&self, frame: &EFrame, x: &[f64]) -> Result<f64> {
        let pt = PhasePoint::from_flat(frame, x)?;
        kinetic_hamiltonian(&self.metric, &pt)
    }

    /// `⟨dH, E_i⟩ = −Σ_j ρ_ij vᵀ ∂_j g v` and `∂H/∂m = 2v` with `v = g⁻¹ m`.
    fn phase_gradient(&self, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>> {
        let pt = PhasePoint::from_flat(frame, x)?;
        pt.validate(frame)?;
        let gm = &self.metric;
        let v = gm.sharp(&pt.q, &pt.m)?;
        let (n, p) = (frame.dim(), frame.rank());
        let a = frame.anchor_matrix(&pt.q)?;
        let vv = DVector::from_column_slice(&v);
        let mut dq = vec![0.0; n];
        for (j, d) in dq.iter_mut().enumerate() {
            if (0..p).all(|i| a[(i, j)] == 0.0) {
                continue;
            }
            let dg = gm.partial_matrix(&pt.q, j);
            *d = -(vv.transpose() * dg * &vv)[(0, 0)];
        }
        let mut grad: Vec<f64> = (0..p).map(|i| (0..n).map(|j| a[(i, j)] * dq[j]).sum()).collect();
        grad.extend(v.iter().map(|x| 2.0 * x));
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("kinetic Hamiltonian gradient at {x:?}"),
            });
        }
        Ok(grad)
    }
}

/// Frame components of the geodesic spray.
pub fn geodesic_field(gm: &EMetric, pt: &PhasePoint) -> Result<Vec<f64>> {
    let h = KineticHamiltonian::new(gm.clone());
    hamiltonian_field(&h, gm.frame(), pt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estructure::{make_b_structure, make_foliation_structure};

    #[test]
    fn sharp_examples() {
        let f = make_foliation_structure(2, 2).unwrap();
        let id = EMetric::identity(f.clone()).unwrap();
        assert_eq!(id.sharp(&[0.0, 0.0], &[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
        let d = EMetric::diagonal(f.clone(), &[2.0, 1.0]).unwrap();
        assert_eq!(d.sharp(&[0.0, 0.0], &[4.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        let v = d.sharp(&[0.3, 0.1], &[0.7, -0.4]).unwrap();
        let back = d.flat(&[0.3, 0.1], &v).unwrap();
        assert!((back[0] - 0.7).abs() < 1e-15 && (back[1] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn degenerate_metric_rejected() {
        let f = make_foliation_structure(2, 2).unwrap();
        let g = EMetric::diagonal(f, &[1.0, 0.0]).unwrap();
        assert!(matches!(g.sharp(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn kinetic_examples() {
        let f = make_foliation_structure(2, 2).unwrap();
        let id = EMetric::identity(f).unwrap();
        assert_eq!(kinetic_hamiltonian(&id, &PhasePoint::new(vec![0.0, 0.0], vec![3.0, 4.0])).unwrap(), 25.0);
        assert_eq!(kinetic_hamiltonian(&id, &PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn geodesic_examples() {
        let f = make_foliation_structure(2, 2).unwrap();
        let id = EMetric::identity(f).unwrap();
        let x = geodesic_field(&id, &PhasePoint::new(vec![0.2, 0.1], vec![0.5, -1.0])).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 0.0, 0.0]);
        let b = make_b_structure(1, 1).unwrap();
        let g = EMetric::identity(b).unwrap();
        let x = geodesic_field(&g, &PhasePoint::new(vec![0.4], vec![0.3])).unwrap();
        assert_eq!(x, vec![0.6, 0.0]);
    }

    #[test]
    fn metric_gradient_matches_finite_difference() {
        let f = make_foliation_structure(2, 2).unwrap();
        let names = ["x", "y"];
        let e = |s: &str| ScalarField::parse(s, &names).unwrap();
        let g = EMetric::new(
            f.clone(),
            vec![vec![e("2 + sin(x)*y"), e("x*y/4")], vec![e("x*y/4"), e("3 + cos(y)")]],
            Signature::RIEMANNIAN,
        )
        .unwrap();
        let h = KineticHamiltonian::new(g);
        let x = [0.4, -0.7, 1.1, 0.6];
        let grad = h.phase_gradient(&f, &x).unwrap();
        for (j, gj) in grad.iter().enumerate() {
            let step = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[j] += step;
            xm[j] -= step;
            let fd = (h.value(&f, &xp).unwrap() - h.value(&f, &xm).unwrap()) / (2.0 * step);
            assert!((fd - gj).abs() < 1e-7, "slot {j}: {fd} vs {gj}");
        }
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let f = make_foliation_structure(2, 2).unwrap();
        let c = ScalarField::constant;
        assert!(EMetric::new(f, vec![vec![c(1.0), c(0.5)], vec![c(0.4), c(1.0)]], Signature::RIEMANNIAN).is_err());
    }

    #[test]
    fn signature_check() {
        let f = make_foliation_structure(2, 2).unwrap();
        let g = EMetric::diagonal(f, &[-1.0, 1.0]).unwrap();
        assert_eq!(g.signature(), Signature::lorentzian());
        assert!(g.check_signature(&[vec![0.0, 0.0]]).is_ok());
    }
}
