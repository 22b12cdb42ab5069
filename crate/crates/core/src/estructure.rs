//! E-structures on a coordinate chart: generators given by anchor
//! coefficients `ρ_ij` and structure functions `C_ij^k` with
//! `[E_i, E_j] = Σ_k C_ij^k E_k`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::ScalarField;

type RegionFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// Coordinate chart with a validity predicate and the indices of the
/// coordinates that define singular loci.
#[derive(Clone)]
pub struct Chart {
    name: String,
    coord_names: Vec<String>,
    region: Arc<RegionFn>,
    region_desc: String,
    boundary_functions: Vec<usize>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("coord_names", &self.coord_names)
            .field("region", &self.region_desc)
            .field("boundary_functions", &self.boundary_functions)
            .finish()
    }
}

impl Chart {
    pub fn new(name: impl Into<String>, coord_names: Vec<String>) -> Result<Chart> {
        if coord_names.is_empty() {
            return Err(Error::InvalidArgument("a chart needs at least one coordinate".into()));
        }
        for (i, a) in coord_names.iter().enumerate() {
            if coord_names[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate coordinate name `{a}`")));
            }
        }
        Ok(Chart {
            name: name.into(),
            coord_names,
            region: Arc::new(|_| true),
            region_desc: "all finite points".into(),
            boundary_functions: Vec::new(),
        })
    }

    /// `ℝⁿ` with coordinates `q1..qn`.
    pub fn euclidean(name: impl Into<String>, n: usize) -> Result<Chart> {
        Chart::new(name, (1..=n).map(|i| format!("q{i}")).collect())
    }

    pub fn with_region(
        mut self,
        desc: impl Into<String>,
        region: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Chart {
        self.region = Arc::new(region);
        self.region_desc = desc.into();
        self
    }

    pub fn with_boundary(mut self, indices: Vec<usize>) -> Result<Chart> {
        for &b in &indices {
            if b >= self.dim() {
                return Err(Error::Index {
                    context: format!("boundary functions of chart `{}`", self.name),
                    index: b,
                    limit: self.dim(),
                });
            }
        }
        self.boundary_functions = indices;
        Ok(self)
    }

    /// Replace the coordinate names, keeping region and boundary data.
    pub fn renamed(mut self, name: impl Into<String>, coord_names: Vec<String>) -> Result<Chart> {
        let fresh = Chart::new(name, coord_names)?;
        if fresh.dim() != self.dim() {
            return Err(Error::Dimension {
                context: format!("coordinate names for chart `{}`", self.name),
                expected: self.dim(),
                got: fresh.dim(),
            });
        }
        self.name = fresh.name;
        self.coord_names = fresh.coord_names;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coord_names.iter().position(|c| c == name)
    }

    pub fn region_description(&self) -> &str {
        &self.region_desc
    }

    pub fn boundary_functions(&self) -> &[usize] {
        &self.boundary_functions
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dim() && q.iter().all(|v| v.is_finite()) && (self.region)(q)
    }

    /// Reject points of the wrong length, non-finite points, and points
    /// outside the region. Only the first `dim` entries are inspected.
    pub fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() < self.dim() {
            return Err(Error::Dimension {
                context: format!("point on chart `{}`", self.name),
                expected: self.dim(),
                got: q.len(),
            });
        }
        let q = &q[..self.dim()];
        if !self.contains(q) {
            return Err(Error::OutsideRegion {
                chart: self.name.clone(),
                region: self.region_desc.clone(),
                point: q.to_vec(),
            });
        }
        Ok(())
    }

    /// Evaluate a field with a region check first.
    pub fn eval_checked(&self, field: &ScalarField, q: &[f64]) -> Result<f64> {
        self.check(q)?;
        let v = field.eval(q);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                context: format!("field {field:?} on chart `{}` at {q:?}", self.name),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FrameFamily {
    BM { order: u32 },
    Corner { depth: usize },
    Foliation { rank: usize },
    Elliptic,
    Vanishing,
    Custom,
}

impl fmt::Display for FrameFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameFamily::BM { order } => write!(f, "b^{order}"),
            FrameFamily::Corner { depth } => write!(f, "corner(depth {depth})"),
            FrameFamily::Foliation { rank } => write!(f, "foliation(rank {rank})"),
            FrameFamily::Elliptic => write!(f, "elliptic"),
            FrameFamily::Vanishing => write!(f, "vanishing"),
            FrameFamily::Custom => write!(f, "custom"),
        }
    }
}

/// Vanishing data of the anchor along a boundary coordinate `b`:
/// `ρ_{i b}(q) = q_b^order · reduced_i(q)`, every other column is free of
/// `q_b`-singularities. E-function gradients need this factorization to be
/// evaluated on the singular locus itself.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    pub coord: usize,
    pub order: u32,
    pub reduced: Vec<ScalarField>,
}

/// A chart together with `p` generators of an E-structure.
#[derive(Debug, Clone)]
pub struct EFrame {
    chart: Chart,
    rank: usize,
    anchor: Vec<Vec<ScalarField>>,
    // upper triangle i < j, row-major, then k
    structure: Vec<ScalarField>,
    family: FrameFamily,
    boundary: Vec<BoundaryDatum>,
}

/// Components of an E-vector in the generator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector {
    pub components: Vec<f64>,
}

impl FrameVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "frame vector components".into(),
            });
        }
        Ok(FrameVector { components })
    }

    pub fn basis(p: usize, i: usize) -> Self {
        let mut components = vec![0.0; p];
        components[i] = 1.0;
        FrameVector { components }
    }
}

fn pair_slot(p: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < p);
    // number of pairs (a, b), a < b, preceding (i, j)
    i * (2 * p - i - 1) / 2 + (j - i - 1)
}

impl EFrame {
    /// Build a frame from explicit anchor rows (`p × n`) and the nonzero
    /// structure functions `(i, j, k, C_ij^k)`. Entries with `i > j` are
    /// stored as `−C_ji^k`; declaring both orders must be consistent.
    pub fn new(
        chart: Chart,
        anchor: Vec<Vec<ScalarField>>,
        structure: Vec<(usize, usize, usize, ScalarField)>,
        family: FrameFamily,
        boundary: Vec<BoundaryDatum>,
    ) -> Result<EFrame> {
        let p = anchor.len();
        let n = chart.dim();
        if p == 0 {
            return Err(Error::InvalidArgument("a frame needs at least one generator".into()));
        }
        for (i, row) in anchor.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    context: format!("anchor row {i}"),
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let npairs = p * (p - 1) / 2;
        let mut slots: Vec<Option<ScalarField>> = vec![None; npairs * p];
        for (i, j, k, c) in structure {
            for (idx, what) in [(i, "i"), (j, "j"), (k, "k")] {
                if idx >= p {
                    return Err(Error::Index {
                        context: format!("structure function index {what}"),
                        index: idx,
                        limit: p,
                    });
                }
            }
            if i == j {
                if c.is_identically_zero() {
                    continue;
                }
                return Err(Error::Structure(format!(
                    "C_{i}{i}^{k} must vanish by skew-symmetry"
                )));
            }
            let (a, b, field) = if i < j { (i, j, c) } else { (j, i, c.neg()) };
            let slot = pair_slot(p, a, b) * p + k;
            if let Some(prev) = &slots[slot] {
                let same = match (prev.as_expr(), field.as_expr()) {
                    (Some(x), Some(y)) => x == y,
                    _ => false,
                };
                if !same {
                    return Err(Error::Structure(format!(
                        "structure function C_{a}{b}^{k} declared twice with different values"
                    )));
                }
            }
            slots[slot] = Some(field);
        }
        let structure = slots
            .into_iter()
            .map(|s| s.unwrap_or_else(ScalarField::zero))
            .collect();
        for d in &boundary {
            if d.coord >= n {
                return Err(Error::Index {
                    context: "boundary datum coordinate".into(),
                    index: d.coord,
                    limit: n,
                });
            }
            if d.reduced.len() != p {
                return Err(Error::Dimension {
                    context: format!("reduced anchor column for boundary coordinate {}", d.coord),
                    expected: p,
                    got: d.reduced.len(),
                });
            }
            if d.order == 0 {
                return Err(Error::InvalidArgument("boundary vanishing order must be ≥ 1".into()));
            }
        }
        let mut chart = chart;
        let mut bf: Vec<usize> = chart.boundary_functions().to_vec();
        for d in &boundary {
            if !bf.contains(&d.coord) {
                bf.push(d.coord);
            }
        }
        chart = chart.with_boundary(bf)?;
        Ok(EFrame {
            chart,
            rank: p,
            anchor,
            structure,
            family,
            boundary,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Rename the chart and its coordinates.
    pub fn renamed(mut self, name: impl Into<String>, coord_names: Vec<String>) -> Result<EFrame> {
        self.chart = self.chart.renamed(name, coord_names)?;
        Ok(self)
    }

    /// Restrict the chart to a region.
    pub fn with_region(
        mut self,
        desc: impl Into<String>,
        region: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> EFrame {
        self.chart = self.chart.with_region(desc, region);
        self
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn family(&self) -> FrameFamily {
        self.family
    }

    pub fn boundary_data(&self) -> &[BoundaryDatum] {
        &self.boundary
    }

    pub fn boundary_datum(&self, coord: usize) -> Option<&BoundaryDatum> {
        self.boundary.iter().find(|d| d.coord == coord)
    }

    pub fn anchor_field(&self, i: usize, j: usize) -> &ScalarField {
        &self.anchor[i][j]
    }

    /// `C_ij^k` as a field, honoring skew-symmetry.
    pub fn structure_field(&self, i: usize, j: usize, k: usize) -> ScalarField {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => ScalarField::zero(),
            Less => self.structure[pair_slot(self.rank, i, j) * self.rank + k].clone(),
            Greater => self.structure[pair_slot(self.rank, j, i) * self.rank + k].neg(),
        }
    }

    /// `C_ij^k(q)` without a region check. `C_ji^k` is the exact negation.
    pub fn structure_value(&self, i: usize, j: usize, k: usize, q: &[f64]) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => 0.0,
            Less => self.structure[pair_slot(self.rank, i, j) * self.rank + k].eval(q),
            Greater => -self.structure[pair_slot(self.rank, j, i) * self.rank + k].eval(q),
        }
    }

    /// True when every structure function is symbolically zero.
    pub fn is_abelian(&self) -> bool {
        self.structure.iter().all(ScalarField::is_identically_zero)
    }

    /// `p × n` anchor matrix at `q`.
    pub fn anchor_matrix(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.chart.check(q)?;
        let (p, n) = (self.rank, self.dim());
        let m = DMatrix::from_fn(p, n, |i, j| self.anchor[i][j].eval(q));
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("anchor at {q:?}"),
            });
        }
        Ok(m)
    }

    /// All `C_ij^k(q)`, flattened as `[(i * p + j) * p + k]`.
    pub fn structure_constants(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.chart.check(q)?;
        let p = self.rank;
        let mut out = vec![0.0; p * p * p];
        for i in 0..p {
            for j in (i + 1)..p {
                for k in 0..p {
                    let c = self.structure_value(i, j, k, q);
                    out[(i * p + j) * p + k] = c;
                    out[(j * p + i) * p + k] = -c;
                }
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("structure functions at {q:?}"),
            });
        }
        Ok(out)
    }

    /// `E_i(f)(x) = Σ_j ρ_ij ∂f/∂q_j`, where `x` starts with the chart coordinates.
    pub fn generator_derivative(&self, i: usize, f: &ScalarField, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (j, rho) in self.anchor[i].iter().enumerate() {
            if rho.is_identically_zero() {
                continue;
            }
            let r = rho.eval(x);
            if r != 0.0 {
                acc += r * f.partial(x, j);
            }
        }
        acc
    }

    /// The field `E_i(f)`.
    pub fn generator_derivative_field(&self, i: usize, f: &ScalarField) -> ScalarField {
        let terms: Vec<ScalarField> = self.anchor[i]
            .iter()
            .enumerate()
            .filter(|(_, rho)| !rho.is_identically_zero())
            .map(|(j, rho)| rho.mul(&f.partial_field(j)))
            .collect();
        ScalarField::sum(terms.iter())
    }

    /// Ambient velocity `Σ_i x_i ρ_i(q)` of the frame vector `x`.
    pub fn push_forward(&self, q: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rank {
            return Err(Error::Dimension {
                context: "frame vector".into(),
                expected: self.rank,
                got: x.len(),
            });
        }
        let a = self.anchor_matrix(q)?;
        let n = self.dim();
        let mut v = vec![0.0; n];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += xi * a[(i, j)];
            }
        }
        Ok(v)
    }

    /// Numerical rank of the anchor at `q`.
    pub fn anchor_rank(&self, q: &[f64], tol: f64) -> Result<usize> {
        Ok(self.anchor_matrix(q)?.rank(tol))
    }

    /// Verify bracket and Jacobi consistency at the given points.
    pub fn check_consistency(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        let p = self.rank;
        for q in points {
            for i in 0..p {
                for j in (i + 1)..p {
                    let r = bracket_residual(self, q, i, j)?;
                    if r > tol {
                        return Err(Error::Structure(format!(
                            "bracket residual of (E{}, E{}) is {r:.3e} at {q:?}",
                            i + 1,
                            j + 1
                        )));
                    }
                    for k in 0..p {
                        let r = jacobi_residual(self, q, i, j, k)?;
                        if r > tol {
                            return Err(Error::Structure(format!(
                                "Jacobi residual of (E{}, E{}, E{}) is {r:.3e} at {q:?}",
                                i + 1,
                                j + 1,
                                k + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn poly_coord(i: usize, power: u32) -> ScalarField {
    ScalarField::symbolic(Expr::powi(Expr::Var(i), power as i32))
}

fn standard_rows(n: usize, diag: impl Fn(usize) -> ScalarField) -> Vec<Vec<ScalarField>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { diag(i) } else { ScalarField::zero() })
                .collect()
        })
        .collect()
}

fn unit_column(p: usize, i: usize) -> Vec<ScalarField> {
    (0..p)
        .map(|k| ScalarField::constant(if k == i { 1.0 } else { 0.0 }))
        .collect()
}

/// b^m-structure on `ℝⁿ`: generators `q₁^m ∂q₁, ∂q₂, …, ∂qₙ`.
pub fn make_b_structure(n: usize, m: u32) -> Result<EFrame> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "b^m structure needs n ≥ 1 and m ≥ 1 (got n = {n}, m = {m})"
        )));
    }
    let chart = Chart::euclidean(format!("b^{m} chart"), n)?;
    let anchor = standard_rows(n, |i| if i == 0 { poly_coord(0, m) } else { ScalarField::constant(1.0) });
    EFrame::new(
        chart,
        anchor,
        vec![],
        FrameFamily::BM { order: m },
        vec![BoundaryDatum {
            coord: 0,
            order: m,
            reduced: unit_column(n, 0),
        }],
    )
}

/// Corner structure of depth `k`: `q₁∂q₁, …, q_k∂q_k, ∂q_{k+1}, …, ∂qₙ`.
pub fn make_corner_structure(n: usize, k: usize) -> Result<EFrame> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "corner depth must lie in [1, n]; got k = {k}, n = {n}"
        )));
    }
    let chart = Chart::euclidean(format!("corner chart (depth {k})"), n)?;
    let anchor = standard_rows(n, |i| if i < k { poly_coord(i, 1) } else { ScalarField::constant(1.0) });
    let boundary = (0..k)
        .map(|b| BoundaryDatum {
            coord: b,
            order: 1,
            reduced: unit_column(n, b),
        })
        .collect();
    EFrame::new(chart, anchor, vec![], FrameFamily::Corner { depth: k }, boundary)
}

/// Regular foliation of rank `p`: generators `∂q₁, …, ∂q_p`.
pub fn make_foliation_structure(n: usize, p: usize) -> Result<EFrame> {
    if p == 0 || p > n {
        return Err(Error::InvalidArgument(format!(
            "foliation rank must lie in [1, n]; got p = {p}, n = {n}"
        )));
    }
    let chart = Chart::euclidean(format!("foliation chart (rank {p})"), n)?;
    let anchor = (0..p)
        .map(|i| {
            (0..n)
                .map(|j| ScalarField::constant(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    EFrame::new(chart, anchor, vec![], FrameFamily::Foliation { rank: p }, vec![])
}

/// Elliptic singularity at the origin of `ℝ²`: `V = x∂x + y∂y`, `W = −y∂x + x∂y`.
pub fn make_elliptic_structure() -> Result<EFrame> {
    let chart = Chart::new("elliptic chart", vec!["x".into(), "y".into()])?;
    let x = ScalarField::coordinate(0);
    let y = ScalarField::coordinate(1);
    let anchor = vec![vec![x.clone(), y.clone()], vec![y.neg(), x]];
    EFrame::new(chart, anchor, vec![], FrameFamily::Elliptic, vec![])
}

/// `E₁ = x∂x`, `E₂ = x∂y` with `[E₁, E₂] = E₂`.
pub fn make_vanishing_structure() -> Result<EFrame> {
    let chart = Chart::new("vanishing chart", vec!["x".into(), "y".into()])?;
    let x = ScalarField::coordinate(0);
    let anchor = vec![
        vec![x.clone(), ScalarField::zero()],
        vec![ScalarField::zero(), x],
    ];
    EFrame::new(
        chart,
        anchor,
        vec![(0, 1, 1, ScalarField::constant(1.0))],
        FrameFamily::Vanishing,
        vec![BoundaryDatum {
            coord: 0,
            order: 1,
            reduced: vec![ScalarField::constant(1.0), ScalarField::zero()],
        }],
    )
}

/// Ambient commutator `[E_i, E_j](q)` from anchor coefficients and partials.
pub fn ambient_commutator(frame: &EFrame, q: &[f64], i: usize, j: usize) -> Result<Vec<f64>> {
    frame.chart.check(q)?;
    let p = frame.rank;
    for idx in [i, j] {
        if idx >= p {
            return Err(Error::Index {
                context: "generator".into(),
                index: idx,
                limit: p,
            });
        }
    }
    let n = frame.dim();
    let mut out = vec![0.0; n];
    for (a, slot) in out.iter_mut().enumerate() {
        let mut v = 0.0;
        for b in 0..n {
            let ri = frame.anchor[i][b].eval(q);
            let rj = frame.anchor[j][b].eval(q);
            if ri != 0.0 {
                v += ri * frame.anchor[j][a].partial(q, b);
            }
            if rj != 0.0 {
                v -= rj * frame.anchor[i][a].partial(q, b);
            }
        }
        *slot = v;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("commutator of generators {i}, {j} at {q:?}"),
        });
    }
    Ok(out)
}

/// `‖[E_i, E_j](q) − Σ_k C_ij^k(q) E_k(q)‖₂` in ambient coordinates.
pub fn bracket_residual(frame: &EFrame, q: &[f64], i: usize, j: usize) -> Result<f64> {
    let mut comm = ambient_commutator(frame, q, i, j)?;
    let n = frame.dim();
    for k in 0..frame.rank {
        let c = frame.structure_value(i, j, k, q);
        if c == 0.0 {
            continue;
        }
        for (a, v) in comm.iter_mut().enumerate().take(n) {
            *v -= c * frame.anchor[k][a].eval(q);
        }
    }
    let r = comm.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite {
            context: format!("bracket residual at {q:?}"),
        })
    }
}

/// Norm over `m` of the cyclic sum over `(i, j, k)` of
/// `Σ_l C_ij^l C_lk^m − E_k(C_ij^m)`, the coordinate form of
/// `[[E_i, E_j], E_k] + cyc = 0`.
pub fn jacobi_residual(frame: &EFrame, q: &[f64], i: usize, j: usize, k: usize) -> Result<f64> {
    frame.chart.check(q)?;
    let p = frame.rank;
    for idx in [i, j, k] {
        if idx >= p {
            return Err(Error::Index {
                context: "generator".into(),
                index: idx,
                limit: p,
            });
        }
    }
    let mut total = 0.0;
    for m in 0..p {
        let mut s = 0.0;
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
            for l in 0..p {
                s += frame.structure_value(a, b, l, q) * frame.structure_value(l, c, m, q);
            }
            let cab = frame.structure_field(a, b, m);
            if !cab.is_identically_zero() {
                s -= frame.generator_derivative(c, &cab, q);
            }
        }
        total += s * s;
    }
    let r = total.sqrt();
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite {
            context: format!("Jacobi residual at {q:?}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(frame: &EFrame, q: &[f64]) -> Vec<Vec<f64>> {
        let a = frame.anchor_matrix(q).unwrap();
        (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
    }

    #[test]
    fn b_structure_anchor() {
        let f = make_b_structure(2, 1).unwrap();
        assert_eq!(mat(&f, &[0.7, 3.0]), vec![vec![0.7, 0.0], vec![0.0, 1.0]]);
        assert!(f.structure_constants(&[0.7, 3.0]).unwrap().iter().all(|c| *c == 0.0));
        assert_eq!(f.chart().boundary_functions(), &[0]);
        let f1 = make_b_structure(1, 1).unwrap();
        assert_eq!(mat(&f1, &[0.0]), vec![vec![0.0]]);
        let f3 = make_b_structure(2, 3).unwrap();
        assert_eq!(mat(&f3, &[2.0, -1.0]), vec![vec![8.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn b_structure_rejects_zero_arguments() {
        assert!(make_b_structure(0, 1).is_err());
        assert!(make_b_structure(2, 0).is_err());
    }

    #[test]
    fn corner_structure() {
        let f = make_corner_structure(3, 2).unwrap();
        assert_eq!(
            mat(&f, &[0.5, -2.0, 4.0]),
            vec![vec![0.5, 0.0, 0.0], vec![0.0, -2.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        assert_eq!(f.chart().boundary_functions(), &[0, 1]);
        let g = make_corner_structure(2, 2).unwrap();
        assert_eq!(mat(&g, &[1.0, 1.0]), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(mat(&g, &[0.0, 0.0]), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(make_corner_structure(2, 0).is_err());
        assert!(make_corner_structure(2, 3).is_err());
    }

    #[test]
    fn foliation_structure() {
        let f = make_foliation_structure(3, 2).unwrap();
        assert_eq!(mat(&f, &[1.0, 2.0, 3.0]), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!(f.chart().boundary_functions().is_empty());
        let t = make_foliation_structure(1, 1).unwrap();
        assert_eq!(mat(&t, &[5.0]), vec![vec![1.0]]);
        assert_eq!(make_foliation_structure(4, 3).unwrap().rank(), 3);
        assert!(make_foliation_structure(2, 3).is_err());
        assert!(make_foliation_structure(2, 0).is_err());
    }

    #[test]
    fn elliptic_structure() {
        let f = make_elliptic_structure().unwrap();
        assert_eq!(mat(&f, &[1.0, 0.0]), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(mat(&f, &[0.0, 0.0]), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(bracket_residual(&f, &[0.3, -0.7], 0, 1).unwrap() < 1e-8);
    }

    #[test]
    fn vanishing_structure() {
        let f = make_vanishing_structure().unwrap();
        assert!(bracket_residual(&f, &[0.5, 1.0], 0, 1).unwrap() < 1e-8);
        assert_eq!(mat(&f, &[2.0, 0.0]), vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        let q = [0.3, 0.9];
        assert_eq!(f.structure_value(1, 0, 1, &q), -1.0);
        assert_eq!(f.structure_value(0, 1, 1, &q), 1.0);
        assert!(jacobi_residual(&f, &[1.2, 0.4], 0, 1, 0).unwrap() < 1e-8);
    }

    #[test]
    fn corrupted_structure_is_detected() {
        let good = make_vanishing_structure().unwrap();
        let corrupted = EFrame::new(
            good.chart().clone(),
            good.anchor.clone(),
            vec![],
            FrameFamily::Custom,
            vec![],
        )
        .unwrap();
        let r = bracket_residual(&corrupted, &[0.5, 1.0], 0, 1).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rank_drops_on_singular_locus() {
        let f = make_b_structure(3, 1).unwrap();
        assert_eq!(f.anchor_rank(&[0.4, 1.0, 2.0], 1e-12).unwrap(), 3);
        assert_eq!(f.anchor_rank(&[0.0, 1.0, 2.0], 1e-12).unwrap(), 2);
    }

    #[test]
    fn region_violations_error() {
        let chart = Chart::new("half plane", vec!["x".into(), "y".into()])
            .unwrap()
            .with_region("x > 0", |q| q[0] > 0.0);
        let field = ScalarField::coordinate(0);
        assert!(chart.eval_checked(&field, &[1.0, 0.0]).is_ok());
        assert!(matches!(
            chart.eval_checked(&field, &[-1.0, 0.0]),
            Err(Error::OutsideRegion { .. })
        ));
        assert!(matches!(chart.check(&[1.0]), Err(Error::Dimension { .. })));
        assert!(chart.check(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn chart_validation() {
        assert!(Chart::new("bad", vec![]).is_err());
        assert!(Chart::new("bad", vec!["x".into(), "x".into()]).is_err());
        assert!(Chart::euclidean("c", 2).unwrap().with_boundary(vec![2]).is_err());
    }

    #[test]
    fn inconsistent_skew_declaration_rejected() {
        let chart = Chart::euclidean("c", 2).unwrap();
        let anchor = vec![
            vec![ScalarField::constant(1.0), ScalarField::zero()],
            vec![ScalarField::zero(), ScalarField::constant(1.0)],
        ];
        let r = EFrame::new(
            chart.clone(),
            anchor.clone(),
            vec![
                (0, 1, 0, ScalarField::constant(1.0)),
                (1, 0, 0, ScalarField::constant(1.0)),
            ],
            FrameFamily::Custom,
            vec![],
        );
        assert!(r.is_err());
        let ok = EFrame::new(
            chart,
            anchor,
            vec![
                (0, 1, 0, ScalarField::constant(1.0)),
                (1, 0, 0, ScalarField::constant(-1.0)),
            ],
            FrameFamily::Custom,
            vec![],
        );
        assert!(ok.is_ok());
    }
}
