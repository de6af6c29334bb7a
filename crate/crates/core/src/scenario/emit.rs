use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{FinslerError, Result};
use crate::geodesic::fmt17;
use crate::scenario::run::RunArtifacts;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvBundle,
}

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const CSV_FILES: [&str; 4] = ["geodesic.csv", "jacobi_det.csv", "conjugate_points.csv", "tau_sweep.csv"];

fn io(path: &Path, e: impl std::fmt::Display) -> FinslerError {
    FinslerError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io(path, e))?))
}

fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| io(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt17(*v))).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))?;
    Ok(())
}

/// Writes the requested outputs into `dir`, returning the files written.
pub fn emit(art: &RunArtifacts, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let path = dir.join(REPORT_FILE);
        create(&path)?
            .write_all(art.report.to_json().as_bytes())
            .map_err(|e| io(&path, e))?;
        written.push(path);
    }
    if formats.contains(&Format::CsvBundle) {
        let n = art.report.config.q.as_ref().map_or(0, Vec::len);

        let path = dir.join(CSV_FILES[0]);
        match &art.path {
            Some(p) => p.write_csv(create(&path)?)?,
            None => {
                let mut header = vec!["s".to_string()];
                header.extend((0..n).map(|i| format!("x{i}")));
                header.extend((0..n).map(|i| format!("v{i}")));
                header.push("L".into());
                write_table(&path, &header, std::iter::empty())?;
            }
        }
        written.push(path);

        let path = dir.join(CSV_FILES[1]);
        let samples = art.scan.iter().flat_map(|s| s.samples.iter());
        write_table(
            &path,
            &["s".into(), "det".into(), "sigma_min".into()],
            samples.map(|d| vec![d.s, d.det, d.sigma_min]),
        )?;
        written.push(path);

        let path = dir.join(CSV_FILES[2]);
        let points = art
            .scan
            .iter()
            .flat_map(|s| s.points.iter().chain(s.endpoint.iter()).map(|p| (p, s.endpoint.as_ref() == Some(p))));
        write_table(
            &path,
            &["s".into(), "mult".into(), "endpoint".into()],
            points.map(|(p, end)| vec![p.s, p.mult as f64, if end { 1.0 } else { 0.0 }]),
        )?;
        written.push(path);

        let path = dir.join(CSV_FILES[3]);
        write_table(
            &path,
            &["eps".into(), "tau".into()],
            art.tau_sweep.iter().map(|(e, t)| vec![*e, *t]),
        )?;
        written.push(path);
    }
    Ok(written)
}

/// Wall-clock seconds per analysis, kept apart from the byte-stable report.
pub fn write_timing(art: &RunArtifacts, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(TIMING_FILE);
    let map: serde_json::Map<String, serde_json::Value> = art
        .timings
        .iter()
        .map(|(a, t)| (a.name().to_string(), serde_json::Value::from(*t)))
        .collect();
    let text = serde_json::to_string_pretty(&map).expect("timings serialize");
    create(&path)?.write_all(text.as_bytes()).map_err(|e| io(&path, e))?;
    Ok(path)
}
