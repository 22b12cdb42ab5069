//! Run configuration: a TOML file naming a built-in scenario (or declaring a
//! custom system), initial data, integrator settings and outputs. A JSON
//! trajectory written by `esym run` is also accepted; its embedded config is
//! used.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use esym_core::decl::{check_frame_near, CustomDecl};
use esym_core::{build_scenario, InitialState, IntegratorConfig, Params, ScenarioSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Pairs `a:b` of column names.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plot: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomDecl>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let cfg: RunConfig = if is_json {
            let v: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?;
            let inner = v.get("meta").and_then(|m| m.get("config")).cloned().unwrap_or(v);
            serde_json::from_value(inner).with_context(|| format!("invalid run config in {}", path.display()))?
        } else {
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config {}:\n{e}", path.display()))?
        };
        Ok(cfg)
    }

    /// Build the scenario and pin every default that influences the run, so
    /// the returned config reproduces it exactly.
    pub fn resolve(&self) -> Result<(ScenarioSpec, RunConfig)> {
        let mut spec = match (&self.scenario, &self.custom) {
            (Some(_), Some(_)) => bail!("config: give either `scenario` or a [custom] block, not both"),
            (None, None) => bail!("config: one of `scenario` or a [custom] block is required"),
            (Some(name), None) => build_scenario(name, &self.params).context("[params]")?,
            (None, Some(c)) => {
                if !self.params.is_empty() {
                    bail!("config: [params] only applies to built-in scenarios");
                }
                if self.initial.is_none() {
                    bail!("config: a custom system needs an [initial] block");
                }
                c.build().context("[custom]")?
            }
        };
        if let Some(init) = &self.initial {
            spec = spec.with_initial(init.clone()).context("[initial]")?;
        }
        if let Some(cfg) = self.integrator {
            cfg.validate().context("[integrator]")?;
            spec = spec.with_integrator(cfg);
        }
        if self.custom.is_some() {
            check_frame_near(&spec.frame, &spec.initial.q, self.seed, 16, 0.1, 1e-7)
                .context("[custom.frame] is not closed under brackets near the initial point")?;
        }
        spec.validate().context("scenario")?;
        let mut resolved = self.clone();
        if resolved.scenario.is_some() {
            resolved.params = spec.params.clone();
        }
        resolved.initial = Some(spec.initial.clone());
        resolved.integrator = Some(spec.integrator);
        Ok((spec, resolved))
    }
}

/// `a:b` pairs, comma separated.
pub fn parse_pairs(items: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        match item.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => out.push((a.to_string(), b.to_string())),
            _ => bail!("plot pair `{item}` must have the form a:b"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        let p = parse_pairs(&["q1:q2, t:energy".into(), "h:theta".into()]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[1], ("t".into(), "energy".into()));
        assert!(parse_pairs(&["q1".into()]).is_err());
        assert!(parse_pairs(&[":q2".into()]).is_err());
    }

    #[test]
    fn resolve_pins_defaults() {
        let cfg: RunConfig = toml::from_str("scenario = \"radko_sphere\"\n").unwrap();
        let (spec, resolved) = cfg.resolve().unwrap();
        assert_eq!(spec.name, "radko_sphere");
        assert!(resolved.integrator.is_some() && resolved.initial.is_some());
        assert!(resolved.params.contains_key("eps"));
        let again: RunConfig = serde_json::from_value(serde_json::to_value(&resolved).unwrap()).unwrap();
        assert_eq!(again, resolved);
    }

    #[test]
    fn scenario_and_custom_are_exclusive() {
        let both = "scenario = \"radko_sphere\"\n[custom]\nhamiltonian = \"m1\"\n[custom.frame]\nfamily = \"b\"\nn = 1\n";
        let cfg: RunConfig = toml::from_str(both).unwrap();
        assert!(cfg.resolve().is_err());
        let none: RunConfig = toml::from_str("seed = 1\n").unwrap();
        assert!(none.resolve().is_err());
    }
}
