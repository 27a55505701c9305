//! Metrics CSV, snapshot CSV/PGM and path dumps.
//!
//! Floats are written in Rust's shortest round-trip form, so every CSV value
//! parses back to the exact bits that were computed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hks_core::characteristics::CharPath;
use hks_core::simulator::{MetricsRow, RunSink, SimState};
use hks_core::{Dimension, Error as CoreError, Grid};

pub const METRICS_HEADER: [&str; 7] = ["t", "U1", "U2", "p1", "p2", "overlap", "mass_residual"];

fn sink_error(e: impl std::fmt::Display) -> CoreError {
    CoreError::Sink(e.to_string())
}

pub struct MetricsWriter {
    writer: csv::Writer<BufWriter<File>>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        writer.write_record(METRICS_HEADER).map_err(std::io::Error::other)?;
        Ok(Self { writer })
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.writer.flush()
    }
}

impl RunSink for MetricsWriter {
    fn metrics(&mut self, row: &MetricsRow) -> hks_core::Result<()> {
        let fields = [row.t, row.mass[0], row.mass[1], row.proportion[0], row.proportion[1], row.overlap, row.mass_residual];
        self.writer.write_record(fields.iter().map(|v| v.to_string())).map_err(sink_error)
    }
}

pub fn snapshot_stem(t: f64) -> String {
    format!("snap_{t:.6}")
}

pub fn write_snapshot_csv(path: &Path, grid: &Grid, state: &SimState) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["cell", "x", "y", "u1", "u2", "P"]).map_err(std::io::Error::other)?;
    let [u1, u2] = &state.densities;
    for (k, c) in grid.centers().iter().enumerate() {
        let rec = [k.to_string(), c[0].to_string(), c[1].to_string(), u1[k].to_string(), u2[k].to_string(), state.pressure[k].to_string()];
        w.write_record(&rec).map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// 8-bit heat map of `u1 - u2`: 128 where the species balance, towards 255
/// where species 1 dominates and towards 1 where species 2 does; cells
/// outside the disk are 0. The top row is the largest `y`.
pub fn pgm_bytes(grid: &Grid, state: &SimState) -> Vec<u8> {
    let m = grid.resolution();
    let [u1, u2] = &state.densities;
    let scale = u1.iter().zip(u2.iter()).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut pixels = vec![0u8; m * m];
    for k in 0..grid.len() {
        let (i, j) = grid.lattice(k);
        let level = 128.0 + 127.0 * (u1[k] - u2[k]) / scale;
        pixels[(m - 1 - j) * m + i] = level.round().clamp(1.0, 255.0) as u8;
    }
    let mut out = format!("P5\n{m} {m}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    out
}

/// Writes `snap_<t>.csv` (and `.pgm` on the disk) into `dir` at every snapshot.
pub struct SnapshotWriter {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl SnapshotWriter {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), written: Vec::new() }
    }

    pub fn write(&mut self, grid: &Grid, state: &SimState) -> std::io::Result<()> {
        let stem = snapshot_stem(state.t);
        let csv = self.dir.join(format!("{stem}.csv"));
        write_snapshot_csv(&csv, grid, state)?;
        self.written.push(csv);
        if grid.dimension() == Dimension::Two {
            let pgm = self.dir.join(format!("{stem}.pgm"));
            std::fs::write(&pgm, pgm_bytes(grid, state))?;
            self.written.push(pgm);
        }
        Ok(())
    }
}

impl RunSink for SnapshotWriter {
    fn snapshot(&mut self, grid: &Grid, state: &SimState) -> hks_core::Result<()> {
        self.write(grid, state).map_err(sink_error)
    }
}

pub fn write_path_csv(path: &Path, trace: &CharPath, dimension: Dimension) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let header: &[&str] = match dimension {
        Dimension::One => &["t", "x", "int_h", "int_p_minus_u"],
        Dimension::Two => &["t", "x", "y", "int_h", "int_p_minus_u"],
    };
    w.write_record(header).map_err(std::io::Error::other)?;
    for k in 0..trace.times.len() {
        let p = trace.positions[k];
        let mut rec = vec![trace.times[k].to_string(), p[0].to_string()];
        if dimension == Dimension::Two {
            rec.push(p[1].to_string());
        }
        rec.push(trace.int_h[k].to_string());
        rec.push(trace.int_p_minus_u[k].to_string());
        w.write_record(&rec).map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(std::io::Error::other)?;
    f.write_all(b"\n")?;
    f.flush()
}

/// Reads a metrics CSV back into rows.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect();
        rows.push(MetricsRow {
            t: v[0],
            mass: [v[1], v[2]],
            proportion: [v[3], v[4]],
            overlap: v[5],
            mass_residual: v[6],
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hks_core::{Field, GridSpec};

    #[test]
    fn pgm_layout() {
        let grid = Grid::new(GridSpec::disk(8)).unwrap();
        let n = grid.len();
        let u1 = Field::from_fn(&grid, |[x, _]| x.max(0.0));
        let state = SimState { t: 0.0, densities: [u1, Field::zeros(n)], pressure: Field::zeros(n) };
        let bytes = pgm_bytes(&grid, &state);
        let header = b"P5\n8 8\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 64);
        assert_eq!(px[0], 0);
        assert_eq!(px[3 * 8 + 7], 255);
        assert_eq!(px[3 * 8 + 1], 128);
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_stem(0.0), "snap_0.000000");
        assert_eq!(snapshot_stem(6.0), "snap_6.000000");
    }
}
