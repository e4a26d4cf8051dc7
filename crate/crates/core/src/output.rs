//! Run artefacts: metrics CSV, legacy VTK field snapshots, SVG summary
//! plots, the JSON pattern record and the file manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{DerivedMaterial, RunConfig};
use crate::driver::{FieldState, Observer, RunResult, Simulation, Termination};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRow, MetricsSeries, CRACK_THRESHOLD};
use crate::mesh::radius;
use crate::real::Real;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK of one state: point data `c`, `c_bar`, `phi`, `zeta`,
/// `sigma_h`, `u` and the cell mask `cracked` (mean nodal phi above 0.95).
pub fn vtk_string<T: Real>(sim: &Simulation<T>, state: &FieldState<T>) -> String {
    use std::fmt::Write as _;
    let mesh = &sim.mesh;
    let n = mesh.n_nodes();
    let mut s = String::with_capacity(64 * n);
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "core-shell particle t = {:.6e} s step {} {}", state.time, state.step, state.stage);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.9e} {:.9e} 0", p[0].as_f64(), p[1].as_f64());
    }
    let ne = mesh.n_elements();
    let _ = writeln!(s, "CELLS {ne} {}", 4 * ne);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {ne}\nSCALARS cracked int 1\nLOOKUP_TABLE default");
    let thr = T::lit(CRACK_THRESHOLD);
    for t in &mesh.triangles {
        let mean = (state.phi[t[0]] + state.phi[t[1]] + state.phi[t[2]]) / T::lit(3.0);
        s.push_str(if mean > thr { "1\n" } else { "0\n" });
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let mut scalar = |name: &str, value: &dyn Fn(usize) -> f64| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for i in 0..n {
            let _ = writeln!(s, "{:.9e}", value(i));
        }
    };
    scalar("c", &|i| state.c[i].as_f64());
    scalar("c_bar", &|i| {
        let c_max = sim.phases.at(mesh.conc_dof_region[i], radius(mesh.nodes[i])).c_max;
        (state.c[i] / c_max).as_f64()
    });
    scalar("phi", &|i| state.phi[i].as_f64());
    scalar("zeta", &|i| sim.zeta.0[i].as_f64());
    scalar("sigma_h", &|i| state.sigma_h[i].as_f64());
    let _ = writeln!(s, "VECTORS u double");
    for i in 0..n {
        let _ = writeln!(s, "{:.9e} {:.9e} 0", state.u[2 * i].as_f64(), state.u[2 * i + 1].as_f64());
    }
    s
}

/// Minimal SVG line chart.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 400.0, 70.0, 20.0, 40.0, 50.0);
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = finite.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if finite.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.05 * y0.abs() };
        (y0, y1) = (y0 - pad, y1 + pad);
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    let path: Vec<String> = finite.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w / 2.0,
        escape(title),
        w - ml - mr,
        h - mt - mb
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            px(xv),
            h - mb + 16.0,
            tick(xv),
            ml - 6.0,
            py(yv) + 4.0,
            tick(yv)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n\
         <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n</svg>\n",
        (ml + w - mr) / 2.0,
        h - 12.0,
        escape(x_label),
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0,
        escape(y_label),
        path.join(" ")
    ));
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One-line summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct PatternRecord {
    pub name: String,
    pub pattern: String,
    pub propagation: bool,
    pub initiation: bool,
    pub debonding: bool,
    pub branching: bool,
    pub final_sol: f64,
    pub max_delta_sol: f64,
    pub final_crack_volume: f64,
    pub termination: Termination,
    pub cv_start: Option<f64>,
    pub debond_onset: Option<f64>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub wall_seconds: f64,
}

impl PatternRecord {
    pub fn new<T>(name: &str, r: &RunResult<T>) -> Self {
        PatternRecord {
            name: name.to_string(),
            pattern: r.pattern.to_string(),
            propagation: r.pattern.propagation,
            initiation: r.pattern.initiation,
            debonding: r.pattern.debonding,
            branching: r.pattern.branching,
            final_sol: r.final_sol(),
            max_delta_sol: r.series.max_delta_sol(),
            final_crack_volume: r.series.last().map_or(0.0, |l| l.crack_volume),
            termination: r.termination.clone(),
            cv_start: r.cv_start,
            debond_onset: r.debond_onset,
            steps: r.series.last().map_or(0, |l| l.step),
            rejected_steps: r.rejected_steps,
            wall_seconds: r.wall_seconds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub status: String,
    pub files: Vec<ManifestEntry>,
    pub derived: std::collections::BTreeMap<String, DerivedMaterial>,
    pub elements: usize,
    pub nodes: usize,
    pub j0: f64,
    /// Config paths that differ from a sweep's base configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub differs_from_base: Option<Vec<String>>,
    pub crate_version: &'static str,
}

/// Observer that streams metrics rows and writes snapshots on a cadence;
/// [`RunWriter::finish`] emits the remaining artefacts.
pub struct RunWriter {
    dir: PathBuf,
    snapshot_every: usize,
    csv: BufWriter<File>,
    files: Vec<PathBuf>,
    error: Option<Error>,
    progress: bool,
}

impl RunWriter {
    pub fn new(dir: &Path, snapshot_every: usize) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("metrics.csv");
        let mut csv = create(&csv_path)?;
        writeln!(csv, "{}", MetricsSeries::CSV_HEADER).map_err(|e| Error::io(&csv_path, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            snapshot_every,
            csv,
            files: vec![csv_path],
            error: None,
            progress: false,
        })
    }

    /// Also prints one progress line per accepted step to standard output.
    pub fn with_progress(mut self, on: bool) -> Self {
        self.progress = on;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn snapshot<T: Real>(&mut self, sim: &Simulation<T>, state: &FieldState<T>) -> Result<()> {
        let path = self.dir.join("snapshots").join(format!("step_{:06}.vtk", state.step));
        if self.files.contains(&path) {
            return Ok(());
        }
        write_text(&path, &vtk_string(sim, state))?;
        self.files.push(path);
        Ok(())
    }

    fn record(&mut self, e: Error) {
        if self.error.is_none() {
            log::error!("output failure: {e}");
            self.error = Some(e);
        }
    }

    /// Writes the final snapshot, plots, pattern record, effective config
    /// and manifest. Returns the manifest.
    pub fn finish<T: Real>(
        mut self,
        sim: &Simulation<T>,
        result: &RunResult<T>,
        config: &RunConfig,
        differs_from_base: Option<Vec<String>>,
    ) -> Result<Manifest> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        let csv_path = self.dir.join("metrics.csv");
        self.csv.flush().map_err(|e| Error::io(&csv_path, e))?;
        self.snapshot(sim, &result.final_state)?;
        let sol: Vec<(f64, f64)> = result.series.rows.iter().map(|r| (r.time, r.sol)).collect();
        let ac: Vec<(f64, f64)> = result.series.rows.iter().map(|r| (r.time, r.crack_volume)).collect();
        for (file, title, label, pts) in [
            ("sol.svg", "State of lithiation", "SOL", &sol),
            ("crack_volume.svg", "Normalised crack volume", "a_c", &ac),
        ] {
            let path = self.dir.join(file);
            write_text(&path, &svg_line_plot(title, "t (s)", label, pts))?;
            self.files.push(path);
        }
        let record = PatternRecord::new(&config.output.name, result);
        let path = self.dir.join("pattern.json");
        write_text(&path, &(serde_json::to_string(&record).expect("serialisable record") + "\n"))?;
        self.files.push(path);
        let path = self.dir.join("effective_config.toml");
        write_text(&path, &config.effective()?.to_toml_string()?)?;
        self.files.push(path);
        if let Termination::Aborted(reason) = &result.termination {
            let path = self.dir.join("failure.json");
            let body = serde_json::json!({
                "reason": reason,
                "time": result.final_state.time,
                "step": result.final_state.step,
                "dt": result.final_state.dt,
            });
            write_text(&path, &(body.to_string() + "\n"))?;
            self.files.push(path);
        }
        let mut files = Vec::new();
        for p in &self.files {
            let bytes = fs::metadata(p).map_err(|e| Error::io(p, e))?.len();
            let rel = p.strip_prefix(&self.dir).unwrap_or(p);
            files.push(ManifestEntry {
                path: rel.to_string_lossy().into_owned(),
                bytes,
            });
        }
        let manifest = Manifest {
            name: config.output.name.clone(),
            status: if result.completed() { "completed".into() } else { "aborted".into() },
            files,
            derived: config.resolve()?.derived,
            elements: sim.mesh.n_elements(),
            nodes: sim.mesh.n_nodes(),
            j0: sim.j0.as_f64(),
            differs_from_base,
            crate_version: env!("CARGO_PKG_VERSION"),
        };
        let path = self.dir.join("manifest.json");
        write_text(&path, &(serde_json::to_string_pretty(&manifest).expect("serialisable manifest") + "\n"))?;
        Ok(manifest)
    }
}

/// Record left behind when a run fails before producing a result.
pub fn write_failure(dir: &Path, error: &Error) -> Result<PathBuf> {
    let path = dir.join("failure.json");
    let body = serde_json::json!({ "reason": error.to_string() });
    write_text(&path, &(body.to_string() + "\n"))?;
    Ok(path)
}

impl<T: Real> Observer<T> for RunWriter {
    fn on_step(&mut self, sim: &Simulation<T>, state: &FieldState<T>, row: &MetricsRow) {
        if self.progress {
            println!(
                "step {:6} t {:10.2} s {} SOL {:.4} a_c {:.4e} dt {:.3e} inner {}",
                row.step, row.time, row.stage, row.sol, row.crack_volume, row.dt, row.inner_iterations
            );
        }
        let csv_path = self.dir.join("metrics.csv");
        if let Err(e) = writeln!(self.csv, "{}", row.csv_line()).and_then(|_| self.csv.flush()) {
            self.record(Error::io(csv_path, e));
        }
        let due = row.step == 0 || (self.snapshot_every > 0 && row.step % self.snapshot_every == 0);
        if due {
            if let Err(e) = self.snapshot(sim, state) {
                self.record(e);
            }
        }
    }
}
