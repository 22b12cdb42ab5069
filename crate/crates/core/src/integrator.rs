//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) integration with region
//! checks, monitor channels, and trajectory export.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed {
        dt: f64,
    },
    Rk45Adaptive {
        rtol: f64,
        atol: f64,
        dt_min: f64,
        dt_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt_init: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct IntegratorConfig {
    #[serde(flatten)]
    pub method: Method,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum MethodName {
    Rk4Fixed,
    Rk45Adaptive,
}

// Flat mirror of the serialized form. Going through it keeps unknown keys an
// error, which serde cannot do for a flattened enum.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    method: MethodName,
    horizon: f64,
    #[serde(default = "default_stride")]
    sample_stride: usize,
    dt: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    dt_init: Option<f64>,
}

impl TryFrom<RawConfig> for IntegratorConfig {
    type Error = String;

    fn try_from(r: RawConfig) -> std::result::Result<Self, String> {
        let method = match r.method {
            MethodName::Rk4Fixed => {
                let extra = [("rtol", r.rtol), ("atol", r.atol), ("dt_min", r.dt_min), ("dt_max", r.dt_max)]
                    .into_iter()
                    .chain([("dt_init", r.dt_init)])
                    .find(|(_, v)| v.is_some());
                if let Some((k, _)) = extra {
                    return Err(format!("`{k}` does not apply to rk4_fixed"));
                }
                Method::Rk4Fixed {
                    dt: r.dt.ok_or("rk4_fixed needs `dt`")?,
                }
            }
            MethodName::Rk45Adaptive => {
                if r.dt.is_some() {
                    return Err("`dt` does not apply to rk45_adaptive (use dt_init)".into());
                }
                Method::Rk45Adaptive {
                    rtol: r.rtol.unwrap_or(1e-10),
                    atol: r.atol.unwrap_or(1e-12),
                    dt_min: r.dt_min.unwrap_or(1e-12),
                    dt_max: r.dt_max.unwrap_or(r.horizon),
                    dt_init: r.dt_init,
                }
            }
        };
        Ok(IntegratorConfig {
            method,
            horizon: r.horizon,
            sample_stride: r.sample_stride,
        })
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, horizon: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed { dt },
            horizon,
            sample_stride: 1,
        }
    }

    pub fn rk45(rtol: f64, atol: f64, horizon: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive {
                rtol,
                atol,
                dt_min: 1e-12,
                dt_max: horizon,
                dt_init: None,
            },
            horizon,
            sample_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("integrator: {what}")));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive and finite");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be ≥ 1");
        }
        match self.method {
            Method::Rk4Fixed { dt } => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return bad("dt must be positive");
                }
            }
            Method::Rk45Adaptive {
                rtol,
                atol,
                dt_min,
                dt_max,
                dt_init,
            } => {
                if !(rtol > 0.0 && atol >= 0.0 && rtol.is_finite() && atol.is_finite()) {
                    return bad("tolerances must be positive");
                }
                if !(dt_min > 0.0 && dt_max > dt_min) {
                    return bad("need 0 < dt_min < dt_max");
                }
                if let Some(h) = dt_init {
                    if !(h > 0.0 && h.is_finite()) {
                        return bad("dt_init must be positive");
                    }
                }
            }
        }
        Ok(())
    }
}

type FieldFn<'a> = dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'a;
type RegionFn<'a> = dyn Fn(&[f64]) -> bool + Send + Sync + 'a;
type MonitorFn<'a> = dyn Fn(&[f64]) -> f64 + Send + Sync + 'a;

pub struct Monitor<'a> {
    pub name: String,
    pub eval: Box<MonitorFn<'a>>,
}

impl<'a> Monitor<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        Monitor {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

/// An autonomous or time-dependent ODE with a validity region and monitors.
pub struct OdeSystem<'a> {
    pub state_names: Vec<String>,
    field: Box<FieldFn<'a>>,
    region: Box<RegionFn<'a>>,
    monitors: Vec<Monitor<'a>>,
}

impl<'a> OdeSystem<'a> {
    pub fn new(
        state_names: Vec<String>,
        field: impl Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'a,
    ) -> Self {
        OdeSystem {
            state_names,
            field: Box::new(field),
            region: Box::new(|_| true),
            monitors: Vec::new(),
        }
    }

    pub fn with_region(mut self, region: impl Fn(&[f64]) -> bool + Send + Sync + 'a) -> Self {
        self.region = Box::new(region);
        self
    }

    pub fn with_monitor(mut self, monitor: Monitor<'a>) -> Self {
        self.monitors.push(monitor);
        self
    }

    pub fn monitor_names(&self) -> Vec<String> {
        self.monitors.iter().map(|m| m.name.clone()).collect()
    }

    pub fn dim(&self) -> usize {
        self.state_names.len()
    }

    fn sample_monitors(&self, x: &[f64]) -> Vec<f64> {
        self.monitors.iter().map(|m| (m.eval)(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    LeftRegion,
    StepUnderflow,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::LeftRegion => "left_region",
            Status::StepUnderflow => "step_underflow",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest embedded error ratio among accepted adaptive steps (≤ 1).
    pub max_accepted_error_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub state_names: Vec<String>,
    pub monitor_names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<Vec<f64>>,
    pub status: Status,
    pub stats: StepStats,
}

enum StepOutcome {
    Ok(Vec<f64>, Option<f64>),
    Region,
}

fn stage(sys: &OdeSystem, t: f64, x: &[f64]) -> Result<Option<Vec<f64>>> {
    if !(sys.region)(x) {
        return Ok(None);
    }
    match (sys.field)(t, x) {
        Ok(v) => {
            if v.len() != x.len() {
                return Err(Error::Dimension {
                    context: "vector field output".into(),
                    expected: x.len(),
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteField { t, state: x.to_vec() });
            }
            Ok(Some(v))
        }
        Err(Error::OutsideRegion { .. }) => Ok(None),
        Err(Error::NonFinite { .. }) => Err(Error::NonFiniteField { t, state: x.to_vec() }),
        Err(e) => Err(e),
    }
}

fn axpy(x: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..x.len())
        .map(|i| x[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
        .collect()
}

fn rk4_step(sys: &OdeSystem, t: f64, x: &[f64], h: f64) -> Result<StepOutcome> {
    let Some(k1) = stage(sys, t, x)? else { return Ok(StepOutcome::Region) };
    let x2 = axpy(x, h, &[(0.5, &k1)]);
    let Some(k2) = stage(sys, t + 0.5 * h, &x2)? else { return Ok(StepOutcome::Region) };
    let x3 = axpy(x, h, &[(0.5, &k2)]);
    let Some(k3) = stage(sys, t + 0.5 * h, &x3)? else { return Ok(StepOutcome::Region) };
    let x4 = axpy(x, h, &[(1.0, &k3)]);
    let Some(k4) = stage(sys, t + h, &x4)? else { return Ok(StepOutcome::Region) };
    let xn = axpy(x, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    if !(sys.region)(&xn) {
        return Ok(StepOutcome::Region);
    }
    Ok(StepOutcome::Ok(xn, None))
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// b5 − b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dp_step(sys: &OdeSystem, t: f64, x: &[f64], h: f64, rtol: f64, atol: f64) -> Result<StepOutcome> {
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    let Some(k1) = stage(sys, t, x)? else { return Ok(StepOutcome::Region) };
    k.push(k1);
    for s in 0..6 {
        let terms: Vec<(f64, &[f64])> = (0..=s).map(|j| (A[s][j], k[j].as_slice())).collect();
        let xs = axpy(x, h, &terms);
        let Some(ks) = stage(sys, t + C[s + 1] * h, &xs)? else { return Ok(StepOutcome::Region) };
        k.push(ks);
    }
    let terms: Vec<(f64, &[f64])> = (0..6).map(|j| (A[5][j], k[j].as_slice())).collect();
    let xn = axpy(x, h, &terms);
    if !(sys.region)(&xn) {
        return Ok(StepOutcome::Region);
    }
    let mut acc = 0.0;
    for i in 0..x.len() {
        let err: f64 = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
        let sc = atol + rtol * x[i].abs().max(xn[i].abs());
        acc += (err / sc).powi(2);
    }
    let ratio = (acc / x.len().max(1) as f64).sqrt();
    Ok(StepOutcome::Ok(xn, Some(ratio)))
}

struct Recorder<'s, 'a> {
    sys: &'s OdeSystem<'a>,
    traj: Trajectory,
    since_sample: usize,
    stride: usize,
}

impl Recorder<'_, '_> {
    fn push(&mut self, t: f64, x: &[f64]) {
        self.traj.times.push(t);
        self.traj.states.push(x.to_vec());
        self.traj.monitors.push(self.sys.sample_monitors(x));
        self.since_sample = 0;
    }

    fn accepted(&mut self, t: f64, x: &[f64]) {
        self.traj.stats.accepted += 1;
        self.since_sample += 1;
        if self.since_sample >= self.stride {
            self.push(t, x);
        }
    }

    fn finish(mut self, t: f64, x: &[f64], status: Status) -> Trajectory {
        if self.traj.times.last() != Some(&t) {
            self.push(t, x);
        }
        self.traj.status = status;
        let stats = &self.traj.stats;
        match status {
            Status::Completed => log::debug!("completed at t = {t} ({} accepted, {} rejected)", stats.accepted, stats.rejected),
            _ => log::warn!("stopped at t = {t}: {}", status.as_str()),
        }
        self.traj
    }
}

/// Integrate `sys` from `x0` at `t = 0` to `cfg.horizon`.
pub fn integrate(sys: &OdeSystem, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if x0.len() != sys.dim() {
        return Err(Error::Dimension {
            context: "initial state".into(),
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Trajectory(format!("initial state {x0:?} is not finite")));
    }
    if !(sys.region)(x0) {
        return Err(Error::Trajectory(format!("initial state {x0:?} lies outside the region")));
    }
    if stage(sys, 0.0, x0)?.is_none() {
        return Err(Error::Trajectory(format!("vector field is not defined at the initial state {x0:?}")));
    }
    let mut rec = Recorder {
        sys,
        traj: Trajectory {
            state_names: sys.state_names.clone(),
            monitor_names: sys.monitor_names(),
            times: Vec::new(),
            states: Vec::new(),
            monitors: Vec::new(),
            status: Status::Completed,
            stats: StepStats::default(),
        },
        since_sample: 0,
        stride: cfg.sample_stride,
    };
    rec.push(0.0, x0);
    let horizon = cfg.horizon;
    let mut t = 0.0;
    let mut x = x0.to_vec();
    match cfg.method {
        Method::Rk4Fixed { dt } => {
            let nsteps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
            for s in 0..nsteps {
                let t_next = if s + 1 == nsteps { horizon } else { (s + 1) as f64 * dt };
                let h = t_next - t;
                match rk4_step(sys, t, &x, h)? {
                    StepOutcome::Ok(xn, _) => {
                        x = xn;
                        t = t_next;
                        rec.accepted(t, &x);
                    }
                    StepOutcome::Region => return Ok(rec.finish(t, &x, Status::LeftRegion)),
                }
            }
            Ok(rec.finish(t, &x, Status::Completed))
        }
        Method::Rk45Adaptive {
            rtol,
            atol,
            dt_min,
            dt_max,
            dt_init,
        } => {
            let mut h = dt_init.unwrap_or_else(|| initial_step(sys, &x, rtol, atol)).clamp(dt_min, dt_max);
            let mut prev_ratio: f64 = 1e-4;
            let mut last_reject_region = false;
            while t < horizon {
                let last = horizon - t <= h;
                let step = if last { horizon - t } else { h };
                if step < dt_min && !last {
                    let status = if last_reject_region { Status::LeftRegion } else { Status::StepUnderflow };
                    return Ok(rec.finish(t, &x, status));
                }
                match dp_step(sys, t, &x, step, rtol, atol)? {
                    StepOutcome::Ok(xn, Some(ratio)) if ratio <= 1.0 => {
                        x = xn;
                        t = if last { horizon } else { t + step };
                        rec.traj.stats.max_accepted_error_ratio = rec.traj.stats.max_accepted_error_ratio.max(ratio);
                        rec.accepted(t, &x);
                        // PI controller
                        let r = ratio.max(1e-10);
                        let fac = 0.9 * r.powf(-0.7 / 5.0) * prev_ratio.powf(0.4 / 5.0);
                        prev_ratio = r;
                        h = (step * fac.clamp(0.2, 5.0)).min(dt_max);
                        last_reject_region = false;
                    }
                    StepOutcome::Ok(_, ratio) => {
                        rec.traj.stats.rejected += 1;
                        let r = ratio.unwrap_or(f64::INFINITY);
                        let fac = if r.is_finite() { (0.9 * r.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                        h = step * fac;
                        last_reject_region = false;
                        if h < dt_min {
                            return Ok(rec.finish(t, &x, Status::StepUnderflow));
                        }
                    }
                    StepOutcome::Region => {
                        rec.traj.stats.rejected += 1;
                        h = step * 0.5;
                        last_reject_region = true;
                        if h < dt_min {
                            return Ok(rec.finish(t, &x, Status::LeftRegion));
                        }
                    }
                }
                if t + h == t {
                    return Ok(rec.finish(t, &x, Status::StepUnderflow));
                }
            }
            Ok(rec.finish(t, &x, Status::Completed))
        }
    }
}

fn initial_step(sys: &OdeSystem, x: &[f64], rtol: f64, atol: f64) -> f64 {
    let Ok(Some(f0)) = stage(sys, 0.0, x) else { return 1e-6 };
    let sc: Vec<f64> = x.iter().map(|v| atol + rtol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len().max(1) as f64).sqrt();
    let d0 = norm(x);
    let d1 = norm(&f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0.clamp(1e-10, 1.0)
}

/// Integrate several initial states on scoped worker threads.
pub fn integrate_ensemble(sys: &OdeSystem, initial: &[Vec<f64>], cfg: &IntegratorConfig) -> Vec<Result<Trajectory>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = initial.iter().map(|x0| s.spawn(move || integrate(sys, x0, cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Trajectory("worker panicked".into()))))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelDrift {
    pub name: String,
    pub initial: f64,
    pub last: f64,
    pub max_abs_drift: f64,
    /// `max |x(t) − x(0)| / max(1, |x(0)|)`.
    pub max_rel_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub status: Status,
    pub samples: usize,
    pub final_time: f64,
    pub channels: Vec<ChannelDrift>,
    pub stats: StepStats,
}

impl InvariantReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelDrift> {
        self.channels.iter().find(|c| c.name == name)
    }
}

pub fn invariant_report(traj: &Trajectory) -> Result<InvariantReport> {
    if traj.times.is_empty() {
        return Err(Error::Trajectory("empty trajectory".into()));
    }
    let channels = traj
        .monitor_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let initial = traj.monitors[0][c];
            let mut max_abs: f64 = 0.0;
            for row in &traj.monitors {
                let d = (row[c] - initial).abs();
                max_abs = if d.is_nan() || max_abs.is_nan() { f64::NAN } else { max_abs.max(d) };
            }
            ChannelDrift {
                name: name.clone(),
                initial,
                last: traj.monitors.last().map_or(f64::NAN, |r| r[c]),
                max_abs_drift: max_abs,
                max_rel_drift: max_abs / initial.abs().max(1.0),
            }
        })
        .collect();
    Ok(InvariantReport {
        status: traj.status,
        samples: traj.times.len(),
        final_time: *traj.times.last().unwrap(),
        channels,
        stats: traj.stats.clone(),
    })
}

fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

impl Trajectory {
    pub fn columns(&self) -> Vec<String> {
        std::iter::once("t".to_string())
            .chain(self.state_names.iter().cloned())
            .chain(self.monitor_names.iter().cloned())
            .collect()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], |s| s.as_slice())
    }

    /// Index of a state or monitor column by name.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        if name == "t" {
            return Some(self.times.clone());
        }
        if let Some(i) = self.state_names.iter().position(|n| n == name) {
            return Some(self.states.iter().map(|s| s[i]).collect());
        }
        let i = self.monitor_names.iter().position(|n| n == name)?;
        Some(self.monitors.iter().map(|m| m[i]).collect())
    }

    /// CSV with a header row; floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(self.columns()).map_err(io)?;
        for (k, t) in self.times.iter().enumerate() {
            let row: Vec<String> = std::iter::once(*t)
                .chain(self.states[k].iter().copied())
                .chain(self.monitors[k].iter().copied())
                .map(fmt17)
                .collect();
            wr.write_record(&row).map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// `{meta, columns, rows, status}`; non-finite numbers become `null`.
    pub fn to_json(&self, meta: Value) -> Value {
        let rows: Vec<Value> = (0..self.times.len())
            .map(|k| {
                Value::Array(
                    std::iter::once(self.times[k])
                        .chain(self.states[k].iter().copied())
                        .chain(self.monitors[k].iter().copied())
                        .map(json_num)
                        .collect(),
                )
            })
            .collect();
        json!({
            "meta": meta,
            "columns": self.columns(),
            "rows": rows,
            "status": self.status.as_str(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_system() -> OdeSystem<'static> {
        OdeSystem::new(vec!["x".into()], |_, x| Ok(vec![x[0]])).with_monitor(Monitor::new("x", |x| x[0]))
    }

    #[test]
    fn exponential_adaptive() {
        let tr = integrate(&exp_system(), &[1.0], &IntegratorConfig::rk45(1e-9, 1e-12, 1.0)).unwrap();
        assert_eq!(tr.status, Status::Completed);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        assert!((tr.final_state()[0] - std::f64::consts::E).abs() < 1e-8);
        assert!(tr.stats.max_accepted_error_ratio <= 1.0);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |dt: f64| {
            let tr = integrate(&exp_system(), &[1.0], &IntegratorConfig::rk4(dt, 1.0)).unwrap();
            (tr.final_state()[0] - std::f64::consts::E).abs()
        };
        let r = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&r), "ratio {r}");
    }

    #[test]
    fn fixed_step_lands_on_horizon() {
        let tr = integrate(&exp_system(), &[1.0], &IntegratorConfig::rk4(0.3, 1.0)).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn region_exit_is_reported() {
        let sys = OdeSystem::new(vec!["x".into()], |_, _| Ok(vec![1.0])).with_region(|x| x[0] < 0.5);
        let tr = integrate(&sys, &[0.0], &IntegratorConfig::rk4(0.1, 2.0)).unwrap();
        assert_eq!(tr.status, Status::LeftRegion);
        assert!(tr.states.iter().all(|s| s[0] < 0.5));
        let tr = integrate(&sys, &[0.0], &IntegratorConfig::rk45(1e-8, 1e-10, 2.0)).unwrap();
        assert_eq!(tr.status, Status::LeftRegion);
        assert!(tr.final_state()[0] < 0.5 && tr.final_state()[0] > 0.49);
    }

    #[test]
    fn blow_up_underflows() {
        // x' = x², x(0) = 1 blows up at t = 1
        let sys = OdeSystem::new(vec!["x".into()], |_, x| Ok(vec![x[0] * x[0]]));
        let mut cfg = IntegratorConfig::rk45(1e-8, 1e-10, 2.0);
        if let Method::Rk45Adaptive { dt_min, .. } = &mut cfg.method {
            *dt_min = 1e-9;
        }
        let tr = integrate(&sys, &[1.0], &cfg).unwrap();
        assert_eq!(tr.status, Status::StepUnderflow);
        assert!(*tr.times.last().unwrap() < 1.0);
    }

    #[test]
    fn nan_field_aborts_with_state() {
        let sys = OdeSystem::new(vec!["x".into()], |_, x| Ok(vec![if x[0] > 1.5 { f64::NAN } else { 1.0 }]));
        let e = integrate(&sys, &[1.0], &IntegratorConfig::rk4(0.1, 2.0)).unwrap_err();
        assert!(matches!(e, Error::NonFiniteField { .. }));
        assert!(integrate(&sys, &[f64::NAN], &IntegratorConfig::rk4(0.1, 2.0)).is_err());
    }

    #[test]
    fn stride_and_report() {
        let sys = OdeSystem::new(vec!["x".into()], |_, _| Ok(vec![0.0])).with_monitor(Monitor::new("c", |x| x[0]));
        let tr = integrate(&sys, &[2.0], &IntegratorConfig::rk4(0.1, 1.0).with_stride(3)).unwrap();
        assert_eq!(tr.times.len(), 5);
        let rep = invariant_report(&tr).unwrap();
        assert_eq!(rep.channels[0].max_abs_drift, 0.0);
        assert_eq!(rep.channels[0].max_rel_drift, 0.0);
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(IntegratorConfig::rk4(0.0, 1.0).validate().is_err());
        assert!(IntegratorConfig::rk4(0.1, -1.0).validate().is_err());
        assert!(IntegratorConfig::rk45(0.0, 1e-9, 1.0).validate().is_err());
        assert!(IntegratorConfig::rk4(0.1, 1.0).with_stride(0).validate().is_err());
    }

    #[test]
    fn export_formats() {
        let tr = integrate(&exp_system(), &[1.0], &IntegratorConfig::rk4(0.5, 1.0)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,x"));
        let last: Vec<f64> = lines.last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last[1], tr.final_state()[0]);
        let j = tr.to_json(json!({"k": 1}));
        assert_eq!(j["status"], "completed");
        assert_eq!(j["rows"].as_array().unwrap().len(), tr.times.len());
    }

    #[test]
    fn config_serde_round_trip() {
        for cfg in [IntegratorConfig::rk4(0.01, 2.0), IntegratorConfig::rk45(1e-9, 1e-11, 5.0).with_stride(3)] {
            let v = serde_json::to_value(cfg).unwrap();
            assert_eq!(serde_json::from_value::<IntegratorConfig>(v).unwrap(), cfg);
        }
        let short: IntegratorConfig =
            serde_json::from_value(json!({"method": "rk45_adaptive", "horizon": 4.0})).unwrap();
        assert_eq!(short, IntegratorConfig::rk45(1e-10, 1e-12, 4.0));
        for bad in [
            json!({"method": "rk4_fixed", "horizon": 1.0}),
            json!({"method": "rk4_fixed", "dt": 0.1, "rtol": 1e-3, "horizon": 1.0}),
            json!({"method": "rk45_adaptive", "horizon": 1.0, "tol": 1e-3}),
            json!({"method": "euler", "dt": 0.1, "horizon": 1.0}),
        ] {
            assert!(serde_json::from_value::<IntegratorConfig>(bad).is_err());
        }
    }
}
