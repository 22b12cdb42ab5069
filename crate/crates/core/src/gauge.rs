//! Local gauge data: a Lie algebra, connection coefficients `A_i^a` on the
//! frame, curvature, the minimal-coupling map, the coupled Poisson bivector
//! and Wong's equations.
//!
//! Gauge states are flat `[q…, m…, O…]`. The coupled bivector is written in
//! frame components `(E₁…E_p, V₁…V_p, O₁…O_d)`; a Hamiltonian `H` generates
//! the velocity `Πᵀ ∇H`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estructure::EFrame;
use crate::field::ScalarField;
use crate::phasespace::{momentum_structure, PhaseFunction, PhasePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    name: String,
    dim: usize,
    // c[(a * d + b) * d + k] = c_ab^k
    c: Vec<f64>,
}

impl LieAlgebra {
    /// Validate skew-symmetry and the Jacobi identity (to `1e-12`).
    pub fn new(name: impl Into<String>, dim: usize, c: Vec<f64>) -> Result<LieAlgebra> {
        if dim == 0 {
            return Err(Error::InvalidArgument("Lie algebra dimension must be ≥ 1".into()));
        }
        if c.len() != dim * dim * dim {
            return Err(Error::Dimension {
                context: "structure constants".into(),
                expected: dim * dim * dim,
                got: c.len(),
            });
        }
        let alg = LieAlgebra {
            name: name.into(),
            dim,
            c,
        };
        if alg.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "structure constants".into(),
            });
        }
        for a in 0..dim {
            for b in 0..dim {
                for k in 0..dim {
                    if alg.constant(a, b, k) != -alg.constant(b, a, k) {
                        return Err(Error::Structure(format!(
                            "structure constants not skew in ({}, {})",
                            a + 1,
                            b + 1
                        )));
                    }
                }
            }
        }
        let r = alg.jacobi_defect();
        if r > 1e-12 {
            return Err(Error::Structure(format!("structure constants violate Jacobi (defect {r:e})")));
        }
        Ok(alg)
    }

    pub fn abelian(dim: usize) -> LieAlgebra {
        LieAlgebra {
            name: if dim == 1 { "u1".into() } else { format!("abelian{dim}") },
            dim,
            c: vec![0.0; dim * dim * dim],
        }
    }

    pub fn u1() -> LieAlgebra {
        LieAlgebra::abelian(1)
    }

    /// `c_ab^k = ε_abk`.
    pub fn so3() -> LieAlgebra {
        let mut c = vec![0.0; 27];
        for (a, b, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[(a * 3 + b) * 3 + k] = 1.0;
            c[(b * 3 + a) * 3 + k] = -1.0;
        }
        LieAlgebra {
            name: "so3".into(),
            dim: 3,
            c,
        }
    }

    /// su(2) in the basis `−iσ_a/2`, isomorphic to so(3).
    pub fn su2() -> LieAlgebra {
        LieAlgebra {
            name: "su2".into(),
            ..LieAlgebra::so3()
        }
    }

    pub fn by_name(name: &str) -> Result<LieAlgebra> {
        match name {
            "u1" => Ok(LieAlgebra::u1()),
            "so3" => Ok(LieAlgebra::so3()),
            "su2" => Ok(LieAlgebra::su2()),
            other => Err(Error::InvalidArgument(format!(
                "unknown Lie algebra `{other}` (expected u1, so3, su2, or explicit constants)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self, a: usize, b: usize, k: usize) -> f64 {
        self.c[(a * self.dim + b) * self.dim + k]
    }

    pub fn constants(&self) -> &[f64] {
        &self.c
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }

    /// Max over `(a, b, e, m)` of `|Σ_l c_ab^l c_le^m + cyc|`.
    pub fn jacobi_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    for m in 0..d {
                        let mut s = 0.0;
                        for (x, y, z) in [(a, b, e), (b, e, a), (e, a, b)] {
                            for l in 0..d {
                                s += self.constant(x, y, l) * self.constant(l, z, m);
                            }
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Connection coefficients `A_i^a(q)`: frame index `i`, algebra index `a`.
#[derive(Debug, Clone)]
pub struct GaugeData {
    frame: EFrame,
    algebra: LieAlgebra,
    a: Vec<Vec<ScalarField>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugePhasePoint {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
    pub o: Vec<f64>,
}

impl GaugePhasePoint {
    pub fn new(q: Vec<f64>, m: Vec<f64>, o: Vec<f64>) -> Self {
        GaugePhasePoint { q, m, o }
    }

    pub fn from_flat(gd: &GaugeData, x: &[f64]) -> Result<Self> {
        let (n, p, d) = (gd.frame.dim(), gd.frame.rank(), gd.algebra.dim);
        if x.len() != n + p + d {
            return Err(Error::Dimension {
                context: "gauge phase state".into(),
                expected: n + p + d,
                got: x.len(),
            });
        }
        Ok(GaugePhasePoint {
            q: x[..n].to_vec(),
            m: x[n..n + p].to_vec(),
            o: x[n + p..].to_vec(),
        })
    }

    pub fn flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.m).chain(&self.o).copied().collect()
    }

    pub fn base(&self) -> PhasePoint {
        PhasePoint::new(self.q.clone(), self.m.clone())
    }
}

/// Sign multipliers for the coupled bivector blocks. All `1.0` is the
/// correct structure; other values exist to exercise the verification suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivectorSigns {
    pub magnetic: f64,
    pub momentum_charge: f64,
    pub charge: f64,
}

impl Default for BivectorSigns {
    fn default() -> Self {
        BivectorSigns {
            magnetic: 1.0,
            momentum_charge: 1.0,
            charge: 1.0,
        }
    }
}

impl GaugeData {
    pub fn new(frame: EFrame, algebra: LieAlgebra, a: Vec<Vec<ScalarField>>) -> Result<GaugeData> {
        let (p, d) = (frame.rank(), algebra.dim);
        if a.len() != p {
            return Err(Error::Dimension {
                context: "connection coefficients (rows = generators)".into(),
                expected: p,
                got: a.len(),
            });
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Dimension {
                    context: format!("connection coefficients of generator {}", i + 1),
                    expected: d,
                    got: row.len(),
                });
            }
        }
        Ok(GaugeData { frame, algebra, a })
    }

    /// `A ≡ 0`.
    pub fn trivial(frame: EFrame, algebra: LieAlgebra) -> GaugeData {
        let a = vec![vec![ScalarField::zero(); algebra.dim]; frame.rank()];
        GaugeData { frame, algebra, a }
    }

    pub fn frame(&self) -> &EFrame {
        &self.frame
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn connection(&self, i: usize, a: usize) -> &ScalarField {
        &self.a[i][a]
    }

    pub fn connection_matrix(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.frame.chart().check(q)?;
        let m = DMatrix::from_fn(self.frame.rank(), self.algebra.dim, |i, a| self.a[i][a].eval(q));
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("connection coefficients at {q:?}"),
            });
        }
        Ok(m)
    }

    pub fn validate(&self, pt: &GaugePhasePoint) -> Result<()> {
        pt.base().validate(&self.frame)?;
        if pt.o.len() != self.algebra.dim {
            return Err(Error::Dimension {
                context: "charge vector".into(),
                expected: self.algebra.dim,
                got: pt.o.len(),
            });
        }
        if pt.o.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("charge {:?}", pt.o),
            });
        }
        Ok(())
    }
}

/// Flattened `F[(i * p + j) * d + a] = F_ij^a(q)` with
/// `F_ij^a = E_i(A_j^a) − E_j(A_i^a) − Σ_k C_ij^k A_k^a + Σ_{b,c} c_bc^a A_i^b A_j^c`.
pub fn curvature(gd: &GaugeData, q: &[f64]) -> Result<Vec<f64>> {
    let frame = &gd.frame;
    let a = gd.connection_matrix(q)?;
    let c = frame.structure_constants(q)?;
    let (p, d) = (frame.rank(), gd.algebra.dim);
    let alg = &gd.algebra;
    let mut f = vec![0.0; p * p * d];
    for i in 0..p {
        for j in (i + 1)..p {
            for s in 0..d {
                let mut v = frame.generator_derivative(i, &gd.a[j][s], q) - frame.generator_derivative(j, &gd.a[i][s], q);
                for k in 0..p {
                    v -= c[(i * p + j) * p + k] * a[(k, s)];
                }
                if !alg.is_abelian() {
                    for b in 0..d {
                        for e in 0..d {
                            v += alg.constant(b, e, s) * a[(i, b)] * a[(j, e)];
                        }
                    }
                }
                f[(i * p + j) * d + s] = v;
                f[(j * p + i) * d + s] = -v;
            }
        }
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("curvature at {q:?}"),
        });
    }
    Ok(f)
}

/// `(q, m, O) ↦ (q, m + A(q)·O, O)`.
pub fn minimal_coupling_map(gd: &GaugeData, pt: &GaugePhasePoint) -> Result<GaugePhasePoint> {
    shift_momenta(gd, pt, 1.0)
}

/// `(q, m, O) ↦ (q, m − A(q)·O, O)`.
pub fn minimal_coupling_inverse(gd: &GaugeData, pt: &GaugePhasePoint) -> Result<GaugePhasePoint> {
    shift_momenta(gd, pt, -1.0)
}

fn shift_momenta(gd: &GaugeData, pt: &GaugePhasePoint, sign: f64) -> Result<GaugePhasePoint> {
    gd.validate(pt)?;
    let a = gd.connection_matrix(&pt.q)?;
    let m = pt
        .m
        .iter()
        .enumerate()
        .map(|(i, mi)| mi + sign * (0..gd.algebra.dim).map(|s| a[(i, s)] * pt.o[s]).sum::<f64>())
        .collect();
    Ok(GaugePhasePoint {
        q: pt.q.clone(),
        m,
        o: pt.o.clone(),
    })
}

pub fn coupled_poisson_bivector(gd: &GaugeData, pt: &GaugePhasePoint) -> Result<DMatrix<f64>> {
    coupled_poisson_bivector_with(gd, pt, BivectorSigns::default())
}

/// Blocks: `[E, V] = −I`; `[V_i, V_j] = B_ij(m) + Σ_k O_k F_ij^k`;
/// `[V_i, O_a] = −Σ_{b,k} O_k c_ab^k A_i^b`; `[O_a, O_b] = Σ_k O_k c_ab^k`.
pub fn coupled_poisson_bivector_with(gd: &GaugeData, pt: &GaugePhasePoint, signs: BivectorSigns) -> Result<DMatrix<f64>> {
    gd.validate(pt)?;
    let (p, d) = (gd.frame.rank(), gd.algebra.dim);
    let b = momentum_structure(&gd.frame, &pt.base())?;
    let f = curvature(gd, &pt.q)?;
    let a = gd.connection_matrix(&pt.q)?;
    let alg = &gd.algebra;
    let mut pi = DMatrix::zeros(2 * p + d, 2 * p + d);
    for i in 0..p {
        pi[(i, p + i)] = -1.0;
        pi[(p + i, i)] = 1.0;
        for j in (i + 1)..p {
            let mag: f64 = (0..d).map(|k| pt.o[k] * f[(i * p + j) * d + k]).sum();
            let v = b[(i, j)] + signs.magnetic * mag;
            pi[(p + i, p + j)] = v;
            pi[(p + j, p + i)] = -v;
        }
    }
    if !alg.is_abelian() {
        for s in 0..d {
            for i in 0..p {
                let mut v = 0.0;
                for bb in 0..d {
                    if a[(i, bb)] == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        v -= pt.o[k] * alg.constant(s, bb, k) * a[(i, bb)];
                    }
                }
                v *= signs.momentum_charge;
                pi[(p + i, 2 * p + s)] = v;
                pi[(2 * p + s, p + i)] = -v;
            }
            for t in (s + 1)..d {
                let v: f64 = signs.charge * (0..d).map(|k| pt.o[k] * alg.constant(s, t, k)).sum::<f64>();
                pi[(2 * p + s, 2 * p + t)] = v;
                pi[(2 * p + t, 2 * p + s)] = -v;
            }
        }
    }
    Ok(pi)
}

/// Poisson tensor in the coordinates `(q, m, O)`: `T Π Tᵀ`, where `T` sends
/// frame components to coordinate velocities (`ρᵀ` on the base block).
pub fn ambient_poisson_tensor(gd: &GaugeData, x: &[f64], signs: BivectorSigns) -> Result<DMatrix<f64>> {
    let pt = GaugePhasePoint::from_flat(gd, x)?;
    let pi = coupled_poisson_bivector_with(gd, &pt, signs)?;
    let (n, p, d) = (gd.frame.dim(), gd.frame.rank(), gd.algebra.dim);
    let rho = gd.frame.anchor_matrix(&pt.q)?;
    let mut t = DMatrix::zeros(n + p + d, 2 * p + d);
    for i in 0..p {
        for j in 0..n {
            t[(j, i)] = rho[(i, j)];
        }
        t[(n + i, p + i)] = 1.0;
    }
    for s in 0..d {
        t[(n + p + s, 2 * p + s)] = 1.0;
    }
    Ok(&t * pi * t.transpose())
}

/// Largest Jacobiator component `Σ_l (P_il ∂_l P_jk + P_jl ∂_l P_ki + P_kl ∂_l P_ij)`
/// of the ambient tensor, with central differences for `∂_l P`.
pub fn poisson_jacobi_residual(gd: &GaugeData, x: &[f64], signs: BivectorSigns) -> Result<f64> {
    let dim = x.len();
    let p0 = ambient_poisson_tensor(gd, x, signs)?;
    let mut dp = Vec::with_capacity(dim);
    for l in 0..dim {
        let h = 1e-4 * x[l].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[l] += h;
        xm[l] -= h;
        let diff = ambient_poisson_tensor(gd, &xp, signs)? - ambient_poisson_tensor(gd, &xm, signs)?;
        dp.push(diff / (2.0 * h));
    }
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            for k in (j + 1)..dim {
                let s: f64 = (0..dim)
                    .map(|l| p0[(i, l)] * dp[l][(j, k)] + p0[(j, l)] * dp[l][(k, i)] + p0[(k, l)] * dp[l][(i, j)])
                    .sum();
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// Frame-basis gradient of a function of `(q, m, O)` given its analytic
/// partials: `(Σ_j ρ_ij ∂f/∂q_j, ∂f/∂m, ∂f/∂O)`.
pub fn gauge_frame_gradient(gd: &GaugeData, x: &[f64], partials: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = (gd.frame.dim(), gd.frame.rank());
    let anchor = gd.frame.anchor_matrix(&x[..n])?;
    let mut g: Vec<f64> = (0..p).map(|i| (0..n).map(|j| anchor[(i, j)] * partials[j]).sum()).collect();
    g.extend_from_slice(&partials[n..]);
    Ok(g)
}

/// `{f, g}` of two functions given by frame-basis gradients at a point.
pub fn coupled_bracket(pi: &DMatrix<f64>, df: &[f64], dg: &[f64]) -> f64 {
    let n = pi.nrows();
    let mut s = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let w = pi[(a, b)];
            if w != 0.0 {
                s += w * (df[a] * dg[b] - df[b] * dg[a]);
            }
        }
    }
    s
}

/// Velocity `(q̇, ṁ, Ȯ)` of Wong's equations for a Hamiltonian of `(q, m)`.
pub fn wong_field(h: &dyn PhaseFunction, gd: &GaugeData, pt: &GaugePhasePoint) -> Result<Vec<f64>> {
    wong_field_with(h, gd, pt, BivectorSigns::default())
}

pub fn wong_field_with(
    h: &dyn PhaseFunction,
    gd: &GaugeData,
    pt: &GaugePhasePoint,
    signs: BivectorSigns,
) -> Result<Vec<f64>> {
    let pi = coupled_poisson_bivector_with(gd, pt, signs)?;
    let (p, d) = (gd.frame.rank(), gd.algebra.dim);
    let mut grad = h.phase_gradient(&gd.frame, &pt.base().flat())?;
    grad.resize(grad.len() + d, 0.0);
    let dim = 2 * p + d;
    let x: Vec<f64> = (0..dim).map(|b| (0..dim).map(|a| pi[(a, b)] * grad[a]).sum()).collect();
    let mut v = gd.frame.push_forward(&pt.q, &x[..p])?;
    v.extend_from_slice(&x[p..2 * p]);
    if gd.algebra.is_abelian() {
        v.resize(v.len() + d, 0.0);
    } else {
        v.extend_from_slice(&x[2 * p..]);
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("Wong velocity at {:?}", pt.flat()),
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecalculus::EFunction;
    use crate::estructure::make_foliation_structure;

    fn magnetic() -> GaugeData {
        let f = make_foliation_structure(2, 2).unwrap();
        GaugeData::new(f, LieAlgebra::u1(), vec![vec![ScalarField::zero()], vec![ScalarField::coordinate(0)]]).unwrap()
    }

    #[test]
    fn curvature_examples() {
        let gd = magnetic();
        let f = curvature(&gd, &[0.3, -1.0]).unwrap();
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], -1.0);
        let fr = make_foliation_structure(2, 2).unwrap();
        let c = GaugeData::new(
            fr.clone(),
            LieAlgebra::u1(),
            vec![vec![ScalarField::constant(2.0)], vec![ScalarField::constant(-1.0)]],
        )
        .unwrap();
        assert!(curvature(&c, &[0.1, 0.2]).unwrap().iter().all(|v| *v == 0.0));
        let t = GaugeData::trivial(fr, LieAlgebra::su2());
        assert!(curvature(&t, &[0.1, 0.2]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn minimal_coupling_examples() {
        let gd = magnetic();
        let pt = GaugePhasePoint::new(vec![2.0, 0.0], vec![1.0, 1.0], vec![3.0]);
        let out = minimal_coupling_map(&gd, &pt).unwrap();
        assert_eq!(out.m, vec![1.0, 7.0]);
        assert_eq!(minimal_coupling_inverse(&gd, &out).unwrap(), pt);
        let neutral = GaugePhasePoint::new(vec![2.0, 0.0], vec![1.0, 1.0], vec![0.0]);
        assert_eq!(minimal_coupling_map(&gd, &neutral).unwrap(), neutral);
    }

    #[test]
    fn lie_algebra_validation() {
        assert_eq!(LieAlgebra::so3().jacobi_defect(), 0.0);
        let mut c = vec![0.0; 8];
        c[2] = 1.0; // C_01^0
        assert!(LieAlgebra::new("bad", 2, c.clone()).is_err());
        c[4] = -1.0; // C_10^0
        assert!(LieAlgebra::new("aff", 2, c).is_ok());
        assert!(LieAlgebra::by_name("e8").is_err());
    }

    #[test]
    fn bivector_is_skew_and_reduces_when_uncoupled() {
        let f = make_foliation_structure(3, 3).unwrap();
        let gd = GaugeData::new(
            f.clone(),
            LieAlgebra::so3(),
            (0..3)
                .map(|i| (0..3).map(|a| ScalarField::constant(0.1 * (i + 2 * a) as f64)).collect())
                .collect(),
        )
        .unwrap();
        let pt = GaugePhasePoint::new(vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 0.5], vec![0.3, 0.7, -0.2]);
        let pi = coupled_poisson_bivector(&gd, &pt).unwrap();
        assert_eq!((&pi + pi.transpose()).amax(), 0.0);
        assert_eq!(pi[(6, 7)], pt.o[2]);
        let t = GaugeData::trivial(f, LieAlgebra::so3());
        let zero = GaugePhasePoint::new(pt.q.clone(), pt.m.clone(), vec![0.0; 3]);
        let pi0 = coupled_poisson_bivector(&t, &zero).unwrap();
        assert!(pi0.view((0, 6), (9, 3)).iter().all(|v| *v == 0.0));
        assert!(pi0.view((3, 3), (3, 3)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn magnetic_wong_velocity() {
        let gd = magnetic();
        let h = EFunction::parse("m1^2 + m2^2", &["q1", "q2", "m1", "m2"], &[]).unwrap();
        let pt = GaugePhasePoint::new(vec![0.5, 0.0], vec![1.0, 0.5], vec![2.0]);
        let v = wong_field(&h, &gd, &pt).unwrap();
        assert_eq!(v, vec![2.0, 1.0, -2.0, 4.0, 0.0]);
    }
}
