//! Artifact writing. Every file goes through a temporary sibling and a
//! rename, and data files carry no timestamps.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use isospec::record::TransformRecord;
use isospec::sampled::fmt_num;
use isospec::{ComplexFunction, SampledFunction};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const RUN_INFO: &str = "run_info.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct PlotEntry {
    name: String,
    file: String,
    x_label: String,
    y_label: String,
}

pub struct Output {
    dir: PathBuf,
    plots_enabled: bool,
    files: Vec<String>,
    plots: Vec<PlotEntry>,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

fn pretty(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

impl Output {
    pub fn new(dir: &Path, plots_enabled: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), plots_enabled, files: Vec::new(), plots: Vec::new() })
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(rel), bytes)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn json(&mut self, rel: &str, v: &impl Serialize) -> Result<(), CliError> {
        self.bytes(rel, &pretty(v))
    }

    pub fn function(&mut self, rel: &str, f: &SampledFunction, header: &str) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f.write_csv(&mut buf, header).map_err(|e| CliError::io(&self.dir.join(rel), e))?;
        self.bytes(rel, &buf)
    }

    pub fn complex(&mut self, rel: &str, f: &ComplexFunction) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f.write_csv(&mut buf).map_err(|e| CliError::io(&self.dir.join(rel), e))?;
        self.bytes(rel, &buf)
    }

    /// `<stem>.csv` with the provenance chain in `<stem>.record.json`.
    pub fn potential(&mut self, stem: &str, v: &SampledFunction, record: &TransformRecord) -> Result<(), CliError> {
        self.function(&format!("{stem}.csv"), v, "V")?;
        self.json(&format!("{stem}.record.json"), record)?;
        self.plot(stem, "x", "V", v.grid().abscissae().iter().copied().zip(v.values().iter().copied()))
    }

    /// Rows of numbers under a header line.
    pub fn table(&mut self, rel: &str, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
        let mut s = String::from(header);
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(fmt_num).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.bytes(rel, s.as_bytes())
    }

    /// Two-column `x y` data under `plots/`, when plot data is requested.
    pub fn plot(
        &mut self,
        name: &str,
        x_label: &str,
        y_label: &str,
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<(), CliError> {
        if !self.plots_enabled {
            return Ok(());
        }
        let mut s = String::new();
        for (x, y) in points {
            s.push_str(&fmt_num(x));
            s.push(' ');
            s.push_str(&fmt_num(y));
            s.push('\n');
        }
        let file = format!("plots/{name}.dat");
        self.bytes(&file, s.as_bytes())?;
        self.plots.push(PlotEntry { name: name.into(), file, x_label: x_label.into(), y_label: y_label.into() });
        Ok(())
    }

    /// Writes the plot index, the manifest and the run info.
    pub fn finish(mut self, config: &RunConfig, summary: Value) -> Result<Value, CliError> {
        if self.plots_enabled {
            self.plots.sort_by(|a, b| a.name.cmp(&b.name));
            let index = json!({ "plots": self.plots });
            self.json("plots/index.json", &index)?;
        }
        let mut outputs = self.files.clone();
        outputs.sort();
        outputs.dedup();
        let manifest = json!({
            "manifest_version": MANIFEST_VERSION,
            "tool": { "name": "isospec", "version": env!("CARGO_PKG_VERSION") },
            "config": config,
            "outputs": outputs,
            "summary": summary,
        });
        write_atomic(&self.dir.join(MANIFEST), &pretty(&manifest))?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let info = json!({ "finished_unix_seconds": stamp, "manifest": MANIFEST });
        write_atomic(&self.dir.join(RUN_INFO), &pretty(&info))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        let names: Vec<_> = fs::read_dir(dir.path().join("sub")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn plots_are_skipped_unless_enabled() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::new(dir.path(), false).unwrap();
        out.plot("a", "x", "y", [(0.0, 1.0)]).unwrap();
        assert!(!dir.path().join("plots").exists());
        let mut out = Output::new(dir.path(), true).unwrap();
        out.plot("a", "x", "y", [(0.0, 1.0), (0.5, 2.0)]).unwrap();
        let text = fs::read_to_string(dir.path().join("plots/a.dat")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap().split(' ').count(), 2);
    }
}
