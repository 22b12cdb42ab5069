//! Declarative descriptions of frames, metrics, gauge data and Hamiltonians,
//! as read from configuration files. Expressions are strings in the shared
//! grammar over the declared coordinate (and momentum) names.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecalculus::EFunction;
use crate::error::{Error, Result};
use crate::estructure::{
    make_b_structure, make_corner_structure, make_elliptic_structure, make_foliation_structure,
    make_vanishing_structure, BoundaryDatum, Chart, EFrame, FrameFamily,
};
use crate::field::ScalarField;
use crate::gauge::{GaugeData, LieAlgebra};
use crate::riemann::{EMetric, KineticHamiltonian, Signature};
use crate::scenarios::{Hamiltonian, ScenarioSpec};

/// `[E_i, E_j]` has component `value` along `E_k`; indices start at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDecl {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: String,
}

/// Anchor column of `coord` equals `coord^order · reduced`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDecl {
    pub coord: String,
    pub order: u32,
    pub reduced: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundDecl {
    pub coord: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// `family` is one of `b`, `corner`, `foliation`, `elliptic`, `vanishing`,
/// `custom`. Built-in families take their sizes from `n`, `m`, `k`, `p`;
/// `custom` needs `anchor` (one row per generator) and optional
/// `structure` and `boundary` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDecl {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub structure: Vec<StructureDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundaryDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub region: Vec<BoundDecl>,
}

/// Frame-basis metric matrix with `negative` negative eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDecl {
    pub matrix: Vec<Vec<String>>,
    #[serde(default)]
    pub negative: usize,
}

/// Lie algebra by name (`u1`, `so3`, `su2`), or `abelian` with `dim`, or
/// `custom` with `dim` and the flat constants `c_ab^k` at `(a·d + b)·d + k`.
/// `connection` holds one row of `A_i^a` per generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeDecl {
    pub algebra: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Vec<f64>>,
    pub connection: Vec<Vec<String>>,
}

/// A complete user-defined system. `hamiltonian` is an expression over
/// coordinates and momenta, or `kinetic` to use the metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomDecl {
    #[serde(default = "custom_name")]
    pub name: String,
    pub frame: FrameDecl,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeDecl>,
    pub hamiltonian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momenta: Option<Vec<String>>,
}

fn custom_name() -> String {
    "custom".into()
}

fn context(what: String) -> impl FnOnce(Error) -> Error {
    move |e| Error::InvalidArgument(format!("{what}: {e}"))
}

fn need<T: Copy>(v: Option<T>, key: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("frame.{key} is required for family `{family}`")))
}

fn parse_field(src: &str, names: &[&str], what: String) -> Result<ScalarField> {
    ScalarField::parse(src, names).map_err(context(what))
}

impl FrameDecl {
    fn coordinate_names(&self, n: usize) -> Vec<String> {
        self.coords
            .clone()
            .unwrap_or_else(|| (1..=n).map(|i| format!("q{i}")).collect())
    }

    pub fn build(&self) -> Result<EFrame> {
        let fam = self.family.as_str();
        let frame = match fam {
            "b" | "b_m" => make_b_structure(need(self.n, "n", fam)?, self.m.unwrap_or(1))?,
            "corner" => make_corner_structure(need(self.n, "n", fam)?, need(self.k, "k", fam)?)?,
            "foliation" => {
                let n = need(self.n, "n", fam)?;
                make_foliation_structure(n, self.p.unwrap_or(n))?
            }
            "elliptic" => make_elliptic_structure()?,
            "vanishing" => make_vanishing_structure()?,
            "custom" => self.build_custom()?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown frame family `{other}` (expected b, corner, foliation, elliptic, vanishing, custom)"
                )))
            }
        };
        let frame = if fam != "custom" && self.coords.is_some() {
            let (name, n) = (frame.chart().name().to_string(), frame.dim());
            frame.renamed(name, self.coordinate_names(n))?
        } else {
            frame
        };
        self.apply_region(frame)
    }

    fn build_custom(&self) -> Result<EFrame> {
        let anchor_src = self
            .anchor
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("frame.anchor is required for family `custom`".into()))?;
        let n = match (&self.coords, self.n) {
            (Some(c), _) => c.len(),
            (None, Some(n)) => n,
            (None, None) => anchor_src.first().map_or(0, Vec::len),
        };
        let coord_names = self.coordinate_names(n);
        let names: Vec<&str> = coord_names.iter().map(String::as_str).collect();
        let chart = Chart::new("custom chart", coord_names.clone())?;
        let mut anchor = Vec::new();
        for (i, row) in anchor_src.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    context: format!("frame.anchor row {}", i + 1),
                    expected: n,
                    got: row.len(),
                });
            }
            let parsed = row
                .iter()
                .enumerate()
                .map(|(j, s)| parse_field(s, &names, format!("frame.anchor[{}][{}]", i + 1, j + 1)))
                .collect::<Result<Vec<_>>>()?;
            anchor.push(parsed);
        }
        let p = anchor.len();
        let mut structure = Vec::new();
        for s in &self.structure {
            for (key, v) in [("i", s.i), ("j", s.j), ("k", s.k)] {
                if v == 0 || v > p {
                    return Err(Error::Index {
                        context: format!("frame.structure entry {key} (1-based)"),
                        index: v,
                        limit: p,
                    });
                }
            }
            let f = parse_field(&s.value, &names, format!("frame.structure C_{}{}^{}", s.i, s.j, s.k))?;
            structure.push((s.i - 1, s.j - 1, s.k - 1, f));
        }
        let mut boundary = Vec::new();
        for b in &self.boundary {
            let coord = coord_names.iter().position(|c| *c == b.coord).ok_or_else(|| {
                Error::InvalidArgument(format!("frame.boundary names unknown coordinate `{}`", b.coord))
            })?;
            if b.reduced.len() != p {
                return Err(Error::Dimension {
                    context: format!("frame.boundary `{}` reduced column", b.coord),
                    expected: p,
                    got: b.reduced.len(),
                });
            }
            let reduced = b
                .reduced
                .iter()
                .enumerate()
                .map(|(i, s)| parse_field(s, &names, format!("frame.boundary `{}` reduced[{}]", b.coord, i + 1)))
                .collect::<Result<Vec<_>>>()?;
            boundary.push(BoundaryDatum {
                coord,
                order: b.order,
                reduced,
            });
        }
        let chart = chart.with_boundary(boundary.iter().map(|b| b.coord).collect())?;
        EFrame::new(chart, anchor, structure, FrameFamily::Custom, boundary)
    }

    fn apply_region(&self, frame: EFrame) -> Result<EFrame> {
        if self.region.is_empty() {
            return Ok(frame);
        }
        let mut bounds = Vec::new();
        let mut desc = Vec::new();
        for b in &self.region {
            let i = frame.chart().coord_index(&b.coord).ok_or_else(|| {
                Error::InvalidArgument(format!("frame.region names unknown coordinate `{}`", b.coord))
            })?;
            let (lo, hi) = (b.min.unwrap_or(f64::NEG_INFINITY), b.max.unwrap_or(f64::INFINITY));
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidArgument(format!("frame.region for `{}` is empty", b.coord)));
            }
            desc.push(format!("{lo} ≤ {} ≤ {hi}", b.coord));
            bounds.push((i, lo, hi));
        }
        Ok(frame.with_region(desc.join(", "), move |q| {
            bounds.iter().all(|&(i, lo, hi)| q[i] >= lo && q[i] <= hi)
        }))
    }
}

impl MetricDecl {
    pub fn build(&self, frame: &EFrame) -> Result<EMetric> {
        let p = frame.rank();
        let names: Vec<&str> = frame.chart().coord_names().iter().map(String::as_str).collect();
        if self.matrix.len() != p {
            return Err(Error::Dimension {
                context: "metric.matrix rows".into(),
                expected: p,
                got: self.matrix.len(),
            });
        }
        let mut g = Vec::new();
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Dimension {
                    context: format!("metric.matrix row {}", i + 1),
                    expected: p,
                    got: row.len(),
                });
            }
            g.push(
                row.iter()
                    .enumerate()
                    .map(|(j, s)| parse_field(s, &names, format!("metric.matrix[{}][{}]", i + 1, j + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        EMetric::new(frame.clone(), g, Signature { negative: self.negative })
    }
}

impl GaugeDecl {
    pub fn algebra(&self) -> Result<LieAlgebra> {
        match self.algebra.as_str() {
            "abelian" => Ok(LieAlgebra::abelian(self.dim.unwrap_or(1))),
            "custom" => {
                let d = self
                    .dim
                    .ok_or_else(|| Error::InvalidArgument("gauge.dim is required for a custom algebra".into()))?;
                let c = self.constants.clone().ok_or_else(|| {
                    Error::InvalidArgument("gauge.constants is required for a custom algebra".into())
                })?;
                LieAlgebra::new("custom", d, c)
            }
            name => LieAlgebra::by_name(name),
        }
    }

    pub fn build(&self, frame: &EFrame) -> Result<GaugeData> {
        let algebra = self.algebra()?;
        let names: Vec<&str> = frame.chart().coord_names().iter().map(String::as_str).collect();
        let mut a = Vec::new();
        for (i, row) in self.connection.iter().enumerate() {
            a.push(
                row.iter()
                    .enumerate()
                    .map(|(k, s)| parse_field(s, &names, format!("gauge.connection[{}][{}]", i + 1, k + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        GaugeData::new(frame.clone(), algebra, a)
    }
}

impl CustomDecl {
    pub fn build(&self) -> Result<ScenarioSpec> {
        let frame = self.frame.build()?;
        let p = frame.rank();
        let metric = self.metric.as_ref().map(|m| m.build(&frame)).transpose()?;
        let momenta = self
            .momenta
            .clone()
            .unwrap_or_else(|| (1..=p).map(|i| format!("m{i}")).collect());
        if momenta.len() != p {
            return Err(Error::Dimension {
                context: "momenta names".into(),
                expected: p,
                got: momenta.len(),
            });
        }
        let hamiltonian = if self.hamiltonian.trim() == "kinetic" {
            let g = metric.clone().ok_or_else(|| {
                Error::InvalidArgument("hamiltonian = \"kinetic\" needs a metric block".into())
            })?;
            Hamiltonian::Kinetic(KineticHamiltonian::new(g))
        } else {
            let names: Vec<&str> = frame
                .chart()
                .coord_names()
                .iter()
                .chain(&momenta)
                .map(String::as_str)
                .collect();
            let boundary: Vec<usize> = frame.boundary_data().iter().map(|b| b.coord).collect();
            let h = EFunction::parse(&self.hamiltonian, &names, &boundary).map_err(context("hamiltonian".into()))?;
            Hamiltonian::Function(h)
        };
        let momentum_refs: Vec<&str> = momenta.iter().map(String::as_str).collect();
        let mut spec = ScenarioSpec::new(self.name.clone(), frame.clone(), hamiltonian)
            .with_provenance(format!("user-defined {} frame", frame.family()))
            .with_momentum_names(&momentum_refs);
        if let Some(g) = metric {
            spec = spec.with_metric(g);
        }
        if let Some(g) = &self.gauge {
            let gd = g.build(&frame)?;
            let d = gd.algebra().dim();
            spec = spec.with_gauge(gd);
            spec.initial.charge = vec![0.0; d];
        }
        Ok(spec)
    }
}

/// Bracket and Jacobi consistency of a frame at `q` and at `count` seeded
/// random points within distance `spread` of it that lie in the region.
pub fn check_frame_near(frame: &EFrame, q: &[f64], seed: u64, count: usize, spread: f64, tol: f64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![q.to_vec()];
    let mut tries = 0;
    while points.len() <= count && tries < 20 * count.max(1) {
        tries += 1;
        let p: Vec<f64> = q.iter().map(|v| v + rng.gen_range(-spread..spread)).collect();
        if frame.chart().contains(&p) {
            points.push(p);
        }
    }
    frame.check_consistency(&points, tol)
}
