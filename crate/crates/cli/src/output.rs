//! Files written by `run` and `export`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Column-oriented view shared by fresh trajectories and re-read JSON.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn from_json(v: &Value) -> Result<Table> {
        let columns: Vec<String> = v
            .get("columns")
            .and_then(Value::as_array)
            .context("trajectory JSON has no `columns` array")?
            .iter()
            .map(|c| c.as_str().map(str::to_string).context("column names must be strings"))
            .collect::<Result<_>>()?;
        let rows = v
            .get("rows")
            .and_then(Value::as_array)
            .context("trajectory JSON has no `rows` array")?
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let r = r.as_array().with_context(|| format!("row {i} is not an array"))?;
                if r.len() != columns.len() {
                    bail!("row {i} has {} entries, expected {}", r.len(), columns.len());
                }
                Ok(r.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Table { columns, rows })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .with_context(|| format!("unknown column `{name}` (available: {})", self.columns.join(", ")))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| format!("{x:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two-column `a b` data file plus an SVG polyline of the same series.
    pub fn write_plot(&self, dir: &Path, stem: &str, a: &str, b: &str) -> Result<Vec<PathBuf>> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r[ia], r[ib])).collect();
        let dat = dir.join(format!("{stem}_{a}_{b}.dat"));
        let mut w = BufWriter::new(File::create(&dat).with_context(|| format!("cannot write {}", dat.display()))?);
        writeln!(w, "# {a} {b}")?;
        for (x, y) in &pts {
            writeln!(w, "{x:.16e} {y:.16e}")?;
        }
        w.flush()?;
        let svg = dir.join(format!("{stem}_{a}_{b}.svg"));
        std::fs::write(&svg, render_svg(&pts, a, b)).with_context(|| format!("cannot write {}", svg.display()))?;
        Ok(vec![dat, svg])
    }
}

fn render_svg(pts: &[(f64, f64)], a: &str, b: &str) -> String {
    let finite: Vec<(f64, f64)> = pts.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (w, h, pad) = (480.0, 360.0, 40.0);
    let span = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), x| (l.min(x), u.max(x)));
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo - 1.0, lo + 1.0)
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = span(&mut finite.iter().map(|p| p.0));
    let (y0, y1) = span(&mut finite.iter().map(|p| p.1));
    let poly: Vec<String> = finite
        .iter()
        .map(|(x, y)| {
            let px = pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
            let py = h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect x="{pad}" y="{pad}" width="{iw}" height="{ih}" fill="none" stroke="#999"/>
<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{points}"/>
<text x="{cx}" y="{by}" font-size="12" text-anchor="middle">{a} [{x0:.4}, {x1:.4}]</text>
<text x="12" y="{cy}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {cy})">{b} [{y0:.4}, {y1:.4}]</text>
</svg>
"##,
        iw = w - 2.0 * pad,
        ih = h - 2.0 * pad,
        points = poly.join(" "),
        cx = w / 2.0,
        by = h - 10.0,
        cy = h / 2.0,
    )
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
