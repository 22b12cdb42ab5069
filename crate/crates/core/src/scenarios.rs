//! Built-in configurations: frames, Hamiltonians and default initial data
//! for the classical singular examples, plus the spin Calogero–Moser
//! identity.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ecalculus::EFunction;
use crate::error::{Error, Result};
use crate::estructure::{make_foliation_structure, BoundaryDatum, Chart, EFrame, FrameFamily};
use crate::expr::xcsc;
use crate::field::ScalarField;
use crate::gauge::{wong_field_with, BivectorSigns, GaugeData, GaugePhasePoint, LieAlgebra};
use crate::integrator::{integrate, IntegratorConfig, Monitor, OdeSystem, Trajectory};
use crate::phasespace::{hamiltonian_velocity, PhaseFunction, PhasePoint};
use crate::riemann::{EMetric, KineticHamiltonian, Signature};
use crate::symmetry::ActionGenerator;

/// A scenario parameter: a number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone)]
pub enum Hamiltonian {
    Function(EFunction),
    Kinetic(KineticHamiltonian),
}

impl PhaseFunction for Hamiltonian {
    fn value(&self, frame: &EFrame, x: &[f64]) -> Result<f64> {
        match self {
            Hamiltonian::Function(h) => PhaseFunction::value(h, frame, x),
            Hamiltonian::Kinetic(h) => h.value(frame, x),
        }
    }

    fn phase_gradient(&self, frame: &EFrame, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Hamiltonian::Function(h) => h.phase_gradient(frame, x),
            Hamiltonian::Kinetic(h) => h.phase_gradient(frame, x),
        }
    }
}

/// Initial base point, frame momenta, and (with a gauge block) charges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charge: Vec<f64>,
}

impl InitialState {
    pub fn new(q: Vec<f64>, m: Vec<f64>) -> Self {
        InitialState { q, m, charge: Vec::new() }
    }

    pub fn with_charge(mut self, charge: Vec<f64>) -> Self {
        self.charge = charge;
        self
    }

    pub fn flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.m).chain(&self.charge).copied().collect()
    }
}

/// A group action given by its fundamental field and a candidate moment map.
#[derive(Debug, Clone)]
pub struct MomentData {
    pub generator: ActionGenerator,
    pub moment: EFunction,
}

type MonitorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A complete, runnable configuration.
#[derive(Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub provenance: String,
    pub frame: EFrame,
    pub metric: Option<EMetric>,
    pub gauge: Option<GaugeData>,
    pub hamiltonian: Hamiltonian,
    pub momentum_names: Vec<String>,
    pub charge_names: Vec<String>,
    pub initial: InitialState,
    pub params: Params,
    pub integrator: IntegratorConfig,
    pub action: Option<MomentData>,
    monitors: Vec<(String, MonitorFn)>,
}

impl fmt::Debug for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioSpec")
            .field("name", &self.name)
            .field("frame", &self.frame)
            .field("metric", &self.metric.is_some())
            .field("gauge", &self.gauge.as_ref().map(|g| g.algebra().name().to_string()))
            .field("initial", &self.initial)
            .field("params", &self.params)
            .field("monitors", &self.monitors.iter().map(|m| &m.0).collect::<Vec<_>>())
            .finish()
    }
}

impl ScenarioSpec {
    /// A spec with momenta `m1..mp`, zero initial data, and an adaptive
    /// integrator over `T = 10`.
    pub fn new(name: impl Into<String>, frame: EFrame, hamiltonian: Hamiltonian) -> ScenarioSpec {
        let (n, p) = (frame.dim(), frame.rank());
        ScenarioSpec {
            name: name.into(),
            provenance: String::new(),
            frame,
            metric: None,
            gauge: None,
            hamiltonian,
            momentum_names: (1..=p).map(|i| format!("m{i}")).collect(),
            charge_names: Vec::new(),
            initial: InitialState::new(vec![0.0; n], vec![0.0; p]),
            params: Params::new(),
            integrator: IntegratorConfig::rk45(1e-10, 1e-12, 10.0),
            action: None,
            monitors: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, s: impl Into<String>) -> Self {
        self.provenance = s.into();
        self
    }

    pub fn with_metric(mut self, metric: EMetric) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn with_gauge(mut self, gauge: GaugeData) -> Self {
        self.charge_names = (1..=gauge.algebra().dim()).map(|a| format!("O{a}")).collect();
        self.gauge = Some(gauge);
        self
    }

    pub fn with_momentum_names(mut self, names: &[&str]) -> Self {
        self.momentum_names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn with_integrator(mut self, cfg: IntegratorConfig) -> Self {
        self.integrator = cfg;
        self
    }

    pub fn with_action(mut self, generator: ActionGenerator, moment: EFunction) -> Self {
        self.action = Some(MomentData { generator, moment });
        self
    }

    /// Extra recorded channel evaluated on the flat state.
    pub fn with_monitor(mut self, name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.monitors.push((name.into(), Arc::new(f)));
        self
    }

    /// Replace the initial data after checking it against the spec.
    pub fn with_initial(mut self, initial: InitialState) -> Result<Self> {
        self.initial = initial;
        self.validate()?;
        Ok(self)
    }

    pub fn charge_dim(&self) -> usize {
        self.gauge.as_ref().map_or(0, |g| g.algebra().dim())
    }

    pub fn state_names(&self) -> Vec<String> {
        self.frame
            .chart()
            .coord_names()
            .iter()
            .chain(&self.momentum_names)
            .chain(&self.charge_names)
            .cloned()
            .collect()
    }

    pub fn state_dim(&self) -> usize {
        self.frame.dim() + self.frame.rank() + self.charge_dim()
    }

    /// Check that every component agrees on dimensions and that the initial
    /// point lies in the admissible region.
    pub fn validate(&self) -> Result<()> {
        let (n, p, d) = (self.frame.dim(), self.frame.rank(), self.charge_dim());
        let dim = |context: &str, expected: usize, got: usize| -> Result<()> {
            if expected == got {
                Ok(())
            } else {
                Err(Error::Dimension {
                    context: format!("{context} of scenario `{}`", self.name),
                    expected,
                    got,
                })
            }
        };
        dim("momentum names", p, self.momentum_names.len())?;
        dim("charge names", d, self.charge_names.len())?;
        dim("initial q", n, self.initial.q.len())?;
        dim("initial m", p, self.initial.m.len())?;
        dim("initial charge", d, self.initial.charge.len())?;
        if let Some(g) = &self.metric {
            dim("metric rank", p, g.frame().rank())?;
            dim("metric base dimension", n, g.frame().dim())?;
        }
        if let Some(g) = &self.gauge {
            dim("gauge frame rank", p, g.frame().rank())?;
            dim("gauge base dimension", n, g.frame().dim())?;
        }
        if let Some(a) = &self.action {
            dim("action generator", 2 * p, a.generator.fundamental.len())?;
        }
        if let Hamiltonian::Function(h) = &self.hamiltonian {
            h.validate(&self.frame)?;
        }
        self.integrator.validate()?;
        let x = self.initial.flat();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("initial state of scenario `{}`", self.name),
            });
        }
        self.frame.chart().check(&self.initial.q)?;
        self.energy(&x)?;
        Ok(())
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        let np = self.frame.dim() + self.frame.rank();
        self.hamiltonian.value(&self.frame, &x[..np.min(x.len())])
    }

    /// Ambient velocity at the flat state.
    pub fn velocity(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.velocity_with(x, BivectorSigns::default())
    }

    pub fn velocity_with(&self, x: &[f64], signs: BivectorSigns) -> Result<Vec<f64>> {
        match &self.gauge {
            Some(gd) => {
                let pt = GaugePhasePoint::from_flat(gd, x)?;
                wong_field_with(&self.hamiltonian, gd, &pt, signs)
            }
            None => hamiltonian_velocity(&self.hamiltonian, &self.frame, x),
        }
    }

    pub fn system(&self) -> OdeSystem<'_> {
        self.system_with(BivectorSigns::default())
    }

    /// The ODE with monitors `energy`, `charge_norm` (gauge scenarios) and
    /// any extra channels.
    pub fn system_with(&self, signs: BivectorSigns) -> OdeSystem<'_> {
        let (n, p) = (self.frame.dim(), self.frame.rank());
        let mut sys = OdeSystem::new(self.state_names(), move |_t, x: &[f64]| self.velocity_with(x, signs))
            .with_region(move |x: &[f64]| self.frame.chart().contains(&x[..n]))
            .with_monitor(Monitor::new("energy", move |x: &[f64]| {
                self.hamiltonian.value(&self.frame, &x[..n + p]).unwrap_or(f64::NAN)
            }));
        if self.gauge.is_some() {
            sys = sys.with_monitor(Monitor::new("charge_norm", move |x: &[f64]| {
                x[n + p..].iter().map(|o| o * o).sum::<f64>().sqrt()
            }));
        }
        for (name, f) in &self.monitors {
            let f = f.clone();
            sys = sys.with_monitor(Monitor::new(name.clone(), move |x: &[f64]| f(x)));
        }
        sys
    }

    pub fn run(&self) -> Result<Trajectory> {
        self.validate()?;
        integrate(&self.system(), &self.initial.flat(), &self.integrator)
    }

    pub fn phase_point(&self, x: &[f64]) -> Result<PhasePoint> {
        let np = self.frame.dim() + self.frame.rank();
        PhasePoint::from_flat(&self.frame, &x[..np.min(x.len())])
    }
}

/// Reads scenario parameters with defaults and rejects unknown keys.
struct ParamReader<'a> {
    scenario: &'static str,
    given: &'a Params,
    used: Params,
}

impl<'a> ParamReader<'a> {
    fn new(scenario: &'static str, given: &'a Params) -> Self {
        ParamReader {
            scenario,
            given,
            used: Params::new(),
        }
    }

    fn number(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.given.get(key) {
            None => default,
            Some(ParamValue::Number(v)) if v.is_finite() => *v,
            Some(other) => {
                return Err(Error::InvalidArgument(format!(
                    "parameter `{key}` of scenario `{}` must be a finite number, got {other}",
                    self.scenario
                )))
            }
        };
        self.used.insert(key.into(), ParamValue::Number(v));
        Ok(v)
    }

    fn text(&mut self, key: &str, default: Option<&str>) -> Result<Option<String>> {
        let v = match self.given.get(key) {
            None => default.map(str::to_string),
            Some(ParamValue::Text(s)) => Some(s.clone()),
            Some(other) => {
                return Err(Error::InvalidArgument(format!(
                    "parameter `{key}` of scenario `{}` must be a string, got {other}",
                    self.scenario
                )))
            }
        };
        if let Some(s) = &v {
            self.used.insert(key.into(), ParamValue::Text(s.clone()));
        }
        Ok(v)
    }

    fn finish(self) -> Result<Params> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains_key(*k)) {
            let known: Vec<&String> = self.used.keys().collect();
            return Err(Error::InvalidArgument(format!(
                "unknown parameter `{k}` for scenario `{}` (known: {known:?})",
                self.scenario
            )));
        }
        Ok(self.used)
    }
}

// exact decimal round trip inside expression strings
fn num(v: f64) -> String {
    format!("({v:?})")
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// One-dimensional b-chart with generator `−q∂q`: its canonical form on
/// `(q, m)` is `(dq/q) ∧ dm`.
fn b_line(chart_name: &str, coord: &str, region: Option<(f64, f64)>) -> Result<EFrame> {
    let mut chart = Chart::new(chart_name, names(&[coord]))?.with_boundary(vec![0])?;
    if let Some((lo, hi)) = region {
        chart = chart.with_region(format!("{lo} ≤ {coord} ≤ {hi}"), move |q| q[0] >= lo && q[0] <= hi);
    }
    EFrame::new(
        chart,
        vec![vec![ScalarField::coordinate(0).neg()]],
        vec![],
        FrameFamily::BM { order: 1 },
        vec![BoundaryDatum {
            coord: 0,
            order: 1,
            reduced: vec![ScalarField::constant(-1.0)],
        }],
    )
}

pub fn scenario_radko_sphere(params: &Params) -> Result<ScenarioSpec> {
    let mut r = ParamReader::new("radko_sphere", params);
    let eps = r.number("eps", 0.0)?;
    let params = r.finish()?;
    let frame = b_line("b-sphere", "h", Some((-1.0, 1.0)))?;
    let vars = ["h", "theta"];
    let h = EFunction::parse(&format!("log(h) + {}*h*sin(theta)", num(eps)), &vars, &[0])?;
    let spec = ScenarioSpec::new("radko_sphere", frame, Hamiltonian::Function(h))
        .with_provenance(
            "Radko b-sphere: height h and angle θ with ω = (dh/h) ∧ dθ, singular along the equator h = 0; \
             rotation ∂θ has moment map log|h|",
        )
        .with_momentum_names(&["theta"])
        .with_params(params)
        .with_action(ActionGenerator::constant("rotation", &[0.0, 1.0]), EFunction::log(0));
    spec.with_initial(InitialState::new(vec![0.5], vec![0.0]))
}

pub fn scenario_lorentz_plane(params: &Params) -> Result<ScenarioSpec> {
    let params = ParamReader::new("lorentz_plane", params).finish()?;
    let frame = b_line("geodesic-space", "epsilon", None)?;
    let h = EFunction::parse("u", &["epsilon", "u"], &[0])?;
    let spec = ScenarioSpec::new("lorentz_plane", frame, Hamiltonian::Function(h))
        .with_provenance(
            "space of oriented geodesics of the Lorentz plane near its conformal boundary: \
             ω = (1/ε) dε ∧ du",
        )
        .with_momentum_names(&["u"])
        .with_params(params);
    spec.with_initial(InitialState::new(vec![0.8], vec![0.3]))
}

/// `x²/(2√(1 − d cos(α − φ) x² + d²x⁴/4)) = 1/|q − q_i|` for `r = 2/x²`.
fn primary_term(d: f64, phi_is_pi: bool) -> String {
    let c = if phi_is_pi { format!("{}*cos(alpha)", num(d)) } else { format!("(-{})*cos(alpha)", num(d)) };
    format!("x^2/(2*sqrt(1 + {c}*x^2 + {}*x^4/4))", num(d * d))
}

fn primary_radicand(d: f64, phi_is_pi: bool, x: f64, alpha: f64) -> f64 {
    let c = if phi_is_pi { d * alpha.cos() } else { -d * alpha.cos() };
    1.0 + c * x * x + d * d * x.powi(4) / 4.0
}

pub fn scenario_mcgehee_3bp(params: &Params) -> Result<ScenarioSpec> {
    let mut r = ParamReader::new("mcgehee_3bp", params);
    let potential = r.text("potential", Some("restricted"))?.unwrap_or_default();
    let mu = r.number("mu", 0.1)?;
    let gm = r.number("gm", 1.0)?;
    let params = r.finish()?;
    if !(0.0..=0.5).contains(&mu) {
        return Err(Error::InvalidArgument(format!("mass parameter mu = {mu} outside [0, 1/2]")));
    }
    let vars = ["x", "alpha", "P_r", "P_alpha"];
    let (u, collision): (String, Option<Box<dyn Fn(f64, f64) -> bool + Send + Sync>>) = match potential.as_str() {
        "none" => ("0".into(), None),
        "kepler" => (format!("{}*x^2/2", num(gm)), None),
        "restricted" => (
            format!("{}*{} + {}*{}", num(1.0 - mu), primary_term(mu, true), num(mu), primary_term(1.0 - mu, false)),
            Some(Box::new(move |x, a| {
                primary_radicand(mu, true, x, a) > 1e-10 && primary_radicand(1.0 - mu, false, x, a) > 1e-10
            })),
        ),
        custom => (custom.to_string(), None),
    };
    let region_desc = if collision.is_some() { "x ≥ 0, away from both primaries" } else { "x ≥ 0" };
    let chart = Chart::new("mcgehee", names(&["x", "alpha"]))?
        .with_boundary(vec![0])?
        .with_region(region_desc, move |q| q[0] >= 0.0 && collision.as_ref().map_or(true, |c| c(q[0], q[1])));
    let anchor = vec![
        vec![ScalarField::parse("-x^3/4", &vars)?, ScalarField::zero()],
        vec![ScalarField::zero(), ScalarField::constant(1.0)],
    ];
    let frame = EFrame::new(
        chart,
        anchor,
        vec![],
        FrameFamily::BM { order: 3 },
        vec![BoundaryDatum {
            coord: 0,
            order: 3,
            reduced: vec![ScalarField::constant(-0.25), ScalarField::zero()],
        }],
    )?;
    let src = format!("P_r^2/2 + x^4*P_alpha^2/8 - ({u})");
    let h = EFunction::parse(&src, &vars, &[0]).map_err(|e| match e {
        Error::Parse { .. } | Error::UnknownSymbol { .. } => {
            Error::InvalidArgument(format!("potential `{potential}` is neither a known kind nor a valid expression: {e}"))
        }
        e => e,
    })?;
    let x0 = (2.0f64 / 4.0).sqrt();
    let spec = ScenarioSpec::new("mcgehee_3bp", frame, Hamiltonian::Function(h))
        .with_provenance(
            "planar three-body problem in McGehee coordinates r = 2/x²: infinity x = 0 is a b³-type boundary, \
             H = P_r²/2 + x⁴P_α²/8 − U",
        )
        .with_momentum_names(&["P_r", "P_alpha"])
        .with_params(params);
    spec.with_initial(InitialState::new(vec![x0, 0.3], vec![0.2, 1.5]))
}

/// Horizon function `h = 1 − 2M/r` in the recentred compactified chart.
pub fn penrose_h(mass: f64, alpha: f64, beta: f64) -> f64 {
    1.0 + 4.0 * mass * alpha.sin() / (alpha.cos() + alpha.sin() * beta.tan())
}

/// `r − 2M > 0` and the chart bounds.
pub fn penrose_admissible(mass: f64, alpha: f64, beta: f64) -> bool {
    let in_box = alpha > -PI && alpha <= 0.0 && beta.abs() < FRAC_PI_2;
    in_box && (alpha == 0.0 || -1.0 / alpha.tan() - beta.tan() > 4.0 * mass)
}

/// The metric in the generators `α²∂α, ∂β`, evaluated directly.
pub fn penrose_metric_matrix(mass: f64, alpha: f64, beta: f64) -> [[f64; 2]; 2] {
    let h = penrose_h(mass, alpha, beta);
    let (x, s) = (xcsc(0, alpha).powi(2), 1.0 / beta.cos().powi(2));
    let (dm, dp) = (1.0 / h - h, 1.0 / h + h);
    [[0.25 * dm * x * x, -0.25 * dp * x * s], [-0.25 * dp * x * s, 0.25 * dm * s * s]]
}

/// The inverse metric as displayed alongside the metric, prefactor
/// `−4 sin⁴α cos⁴β / α⁴` included. Off by a factor 4 from the true inverse.
pub fn penrose_printed_inverse(mass: f64, alpha: f64, beta: f64) -> [[f64; 2]; 2] {
    let h = penrose_h(mass, alpha, beta);
    let (x, s) = (xcsc(0, alpha).powi(2), 1.0 / beta.cos().powi(2));
    let (dm, dp) = (1.0 / h - h, 1.0 / h + h);
    let pre = -4.0 / (x * x * s * s);
    [[pre * dm * s * s, pre * dp * x * s], [pre * dp * x * s, pre * dm * x * x]]
}

/// Kinetic energy as displayed; equals `pᵀ (printed inverse) p`.
pub fn penrose_printed_kinetic(mass: f64, alpha: f64, beta: f64, pa: f64, pb: f64) -> f64 {
    let h = penrose_h(mass, alpha, beta);
    let (x, s) = (xcsc(0, alpha).powi(2), 1.0 / beta.cos().powi(2));
    let (dm, dp) = (1.0 / h - h, 1.0 / h + h);
    -4.0 / (x * x * s * s) * (dm * s * s * pa * pa + 2.0 * dp * x * s * pa * pb + dm * x * x * pb * pb)
}

pub fn scenario_penrose_blackhole(params: &Params) -> Result<ScenarioSpec> {
    let mut r = ParamReader::new("penrose_blackhole", params);
    let mass = r.number("M", 1.0)?;
    let a1 = r.text("A1", None)?;
    let a2 = r.text("A2", None)?;
    let gauged = a1.is_some() || a2.is_some();
    let charge = if gauged { Some(r.number("charge", 1.0)?) } else { None };
    let params = r.finish()?;
    if mass <= 0.0 {
        return Err(Error::InvalidArgument(format!("black-hole mass M = {mass} must be positive")));
    }
    let vars = ["alpha", "beta"];
    let chart = Chart::new("penrose", names(&vars))?
        .with_boundary(vec![0])?
        .with_region(
            format!("−π < α ≤ 0, |β| < π/2, −cot α − tan β > 4M (M = {mass})"),
            move |q| penrose_admissible(mass, q[0], q[1]),
        );
    let anchor = vec![
        vec![ScalarField::parse("alpha^2", &vars)?, ScalarField::zero()],
        vec![ScalarField::zero(), ScalarField::constant(1.0)],
    ];
    let frame = EFrame::new(
        chart,
        anchor,
        vec![],
        FrameFamily::BM { order: 2 },
        vec![BoundaryDatum {
            coord: 0,
            order: 2,
            reduced: vec![ScalarField::constant(1.0), ScalarField::zero()],
        }],
    )?;
    let h = format!("(1 + 4*{}*sin(alpha)/(cos(alpha) + sin(alpha)*tan(beta)))", num(mass));
    let dm = format!("(1/{h} - {h})");
    let dp = format!("(1/{h} + {h})");
    let g11 = ScalarField::parse(&format!("{dm}*xcsc(alpha)^4/4"), &vars)?;
    let g12 = ScalarField::parse(&format!("-{dp}*xcsc(alpha)^2*sec(beta)^2/4"), &vars)?;
    let g22 = ScalarField::parse(&format!("{dm}*sec(beta)^4/4"), &vars)?;
    let metric = EMetric::new(frame.clone(), vec![vec![g11, g12.clone()], vec![g12, g22]], Signature::lorentzian())?;
    let mut spec = ScenarioSpec::new("penrose_blackhole", frame.clone(), Hamiltonian::Kinetic(KineticHamiltonian::new(metric.clone())))
        .with_provenance(
            "Penrose-compactified Schwarzschild exterior, radial-temporal part: generators α²∂α, ∂β near \
             the null boundary, kinetic Hamiltonian of the induced pseudo-metric, optional u(1) coupling",
        )
        .with_metric(metric)
        .with_momentum_names(&["p_alpha", "p_beta"])
        .with_params(params);
    let mut initial = InitialState::new(vec![-0.15, 0.1], vec![0.13, -0.27]);
    if let Some(c) = charge {
        let parse = |s: &Option<String>| ScalarField::parse(s.as_deref().unwrap_or("0"), &vars);
        let gd = GaugeData::new(frame, LieAlgebra::u1(), vec![vec![parse(&a1)?], vec![parse(&a2)?]])?;
        spec = spec.with_gauge(gd);
        initial = initial.with_charge(vec![c]);
    }
    spec.with_initial(initial)
}

pub fn scenario_minkowski_foliation(params: &Params) -> Result<ScenarioSpec> {
    let params = ParamReader::new("minkowski_foliation", params).finish()?;
    let frame = make_foliation_structure(4, 4)?.renamed("minkowski", names(&["t", "x", "y", "z"]))?;
    let metric = EMetric::diagonal(frame.clone(), &[-1.0, 1.0, 1.0, 1.0])?;
    let g = metric.clone();
    ScenarioSpec::new("minkowski_foliation", frame, Hamiltonian::Kinetic(KineticHamiltonian::new(metric.clone())))
        .with_provenance(
            "Minkowski space with metric diag(−1, 1, 1, 1): geodesics are straight lines and the level sets \
             of the kinetic energy (time-like, null, space-like) are invariant",
        )
        .with_metric(metric)
        .with_momentum_names(&["p_t", "p_x", "p_y", "p_z"])
        .with_params(params)
        // g(v, v) for v = q̇ = 2 g⁻¹ m
        .with_monitor("g_vv", move |x| match g.sharp(&x[..4], &x[4..8]) {
            Ok(v) => 4.0 * v.iter().zip(&x[4..8]).map(|(a, b)| a * b).sum::<f64>(),
            Err(_) => f64::NAN,
        })
        .with_initial(InitialState::new(vec![0.0; 4], vec![1.0, 0.5, 0.2, 0.0]))
}

pub fn scenario_magnetic_plane(params: &Params) -> Result<ScenarioSpec> {
    let mut r = ParamReader::new("magnetic_plane", params);
    let b = r.number("B", 1.0)?;
    let params = r.finish()?;
    let frame = make_foliation_structure(2, 2)?;
    let gd = GaugeData::new(
        frame.clone(),
        LieAlgebra::u1(),
        vec![vec![ScalarField::zero()], vec![ScalarField::coordinate(0).scale(b)]],
    )?;
    let h = EFunction::parse("m1^2 + m2^2", &["q1", "q2", "m1", "m2"], &[])?;
    ScenarioSpec::new("magnetic_plane", frame, Hamiltonian::Function(h))
        .with_provenance(
            "charged particle in a constant magnetic field on the plane: u(1) connection A = B q1 dq2 with \
             Wong's equations giving circular orbits",
        )
        .with_gauge(gd)
        .with_params(params)
        .with_initial(InitialState::new(vec![0.0, 0.0], vec![1.0, 0.0]).with_charge(vec![1.0]))
}

pub fn scenario_so3_wong(params: &Params) -> Result<ScenarioSpec> {
    let mut r = ParamReader::new("so3_wong", params);
    let k = r.number("k", 0.5)?;
    let params = r.finish()?;
    let frame = make_foliation_structure(2, 2)?;
    let vars = ["q1", "q2", "m1", "m2"];
    let a = |s: &str| ScalarField::parse(s, &vars);
    let gd = GaugeData::new(
        frame.clone(),
        LieAlgebra::so3(),
        vec![vec![a("0.3*q2")?, a("0")?, a("0.2")?], vec![a("0")?, a("0.5*q1")?, a("0.1*q1*q2")?]],
    )?;
    let h = EFunction::parse(&format!("m1^2 + m2^2 + {}*(q1^2 + q2^2)", num(k)), &vars, &[])?;
    ScenarioSpec::new("so3_wong", frame, Hamiltonian::Function(h))
        .with_provenance(
            "non-abelian Wong particle: so(3) charges coupled to a non-constant connection on the plane, \
             harmonic confinement; the charge norm is a Casimir",
        )
        .with_gauge(gd)
        .with_params(params)
        .with_initial(InitialState::new(vec![0.1, 0.2], vec![0.5, -0.3]).with_charge(vec![0.3, 0.4, 0.5]))
}

type Builder = fn(&Params) -> Result<ScenarioSpec>;

const REGISTRY: &[(&str, Builder)] = &[
    ("radko_sphere", scenario_radko_sphere),
    ("lorentz_plane", scenario_lorentz_plane),
    ("mcgehee_3bp", scenario_mcgehee_3bp),
    ("penrose_blackhole", scenario_penrose_blackhole),
    ("minkowski_foliation", scenario_minkowski_foliation),
    ("magnetic_plane", scenario_magnetic_plane),
    ("so3_wong", scenario_so3_wong),
];

pub fn scenario_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Build a named scenario with parameter overrides.
pub fn build_scenario(name: &str, params: &Params) -> Result<ScenarioSpec> {
    let (_, build) = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    build(params)
}

/// Every scenario with default parameters.
pub fn builtin_scenarios() -> Result<Vec<ScenarioSpec>> {
    REGISTRY.iter().map(|(_, b)| b(&Params::new())).collect()
}

/// Both sides of the spin Calogero–Moser reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalogeroForms {
    /// `tr X²`
    pub trace: f64,
    /// `Σ xᵢᵢ² + Σ_{i≠j} μᵢⱼμⱼᵢ/(aᵢ − aⱼ)²`
    pub reduced: f64,
    /// The inverse-square interaction part of `reduced`.
    pub interaction: f64,
}

/// Raw commutator `[diag(a), X]`.
pub fn calogero_commutator(a: &[f64], x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.len(), a.len(), |i, j| x[(i, j)] * (a[i] - a[j]))
}

/// Hermitian moment `μ = i[diag(a), X]`.
pub fn calogero_moment(a: &[f64], x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    calogero_commutator(a, x).map(|z| z * Complex64::i())
}

pub fn calogero_reduced_hamiltonian(a: &[f64], x: &DMatrix<Complex64>) -> Result<CalogeroForms> {
    let n = a.len();
    if n == 0 || x.nrows() != n || x.ncols() != n {
        return Err(Error::Dimension {
            context: "Calogero matrix (must be n × n for n eigenvalues)".into(),
            expected: n,
            got: x.nrows().max(x.ncols()),
        });
    }
    if a.iter().any(|v| !v.is_finite()) || x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite {
            context: "Calogero data".into(),
        });
    }
    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let herm = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (x[(i, j)] - x[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    if herm > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!("X is not Hermitian (defect {herm:e})")));
    }
    let tr = x.trace();
    if tr.norm() > 1e-12 * scale * n as f64 {
        return Err(Error::InvalidArgument(format!("X is not traceless (trace {tr})")));
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = a[i].abs().max(a[j].abs()).max(1.0);
            if (a[i] - a[j]).abs() <= 1e-12 * s {
                return Err(Error::Degenerate {
                    context: format!(
                        "eigenvalues a{} = a{} = {}: the reduced Hamiltonian only exists on the stratum of \
                         pairwise distinct aᵢ; coincident values lie on a different orbit type",
                        i + 1,
                        j + 1,
                        a[i]
                    ),
                });
            }
        }
    }
    let trace = (x * x).trace().re;
    let mu = calogero_moment(a, x);
    let mut interaction = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                interaction += (mu[(i, j)] * mu[(j, i)]).re / (a[i] - a[j]).powi(2);
            }
        }
    }
    let diag: f64 = (0..n).map(|i| x[(i, i)].re.powi(2)).sum();
    Ok(CalogeroForms {
        trace,
        reduced: diag + interaction,
        interaction,
    })
}
