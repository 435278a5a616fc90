//! Exporters: OBJ and binary PLY meshes, JSON reports, CSV step logs and line dumps.

use crate::complexkit::SampledLine;
use crate::error::{Result, WlabError};
use crate::kdvflow::StepLog;
use crate::weierstrass::SurfaceMesh;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Version tag carried by every JSON report.
pub const REPORT_SCHEMA: &str = "wlab-report/1";

/// ASCII OBJ with vertex normals and quad faces.
pub fn write_obj<W: Write>(mesh: &SurfaceMesh, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "# wlab mesh: {} vertices, {} faces", mesh.vertices.len(), mesh.faces.len())?;
    for v in &mesh.vertices {
        let [x, y, z] = v.position;
        writeln!(w, "v {x:.12e} {y:.12e} {z:.12e}")?;
    }
    for v in &mesh.vertices {
        let [x, y, z] = v.normal;
        writeln!(w, "vn {x:.12e} {y:.12e} {z:.12e}")?;
    }
    for f in &mesh.faces {
        let [a, b, c, d] = f.map(|i| i + 1);
        writeln!(w, "f {a}//{a} {b}//{b} {c}//{c} {d}//{d}")?;
    }
    w.flush()?;
    Ok(())
}

/// Binary little-endian PLY: float32 x, y, z, K, Lambda per vertex and quad faces.
pub fn write_ply<W: Write>(mesh: &SurfaceMesh, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property float K\nproperty float Lambda\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    )?;
    for v in &mesh.vertices {
        for x in [v.position[0], v.position[1], v.position[2], v.k, v.lambda] {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    for f in &mesh.faces {
        w.write_all(&[4u8])?;
        for &i in f {
            let i = i32::try_from(i).map_err(|_| WlabError::Io("vertex index exceeds i32".into()))?;
            w.write_all(&i.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads back the per-vertex float32 records of a PLY written by [`write_ply`].
pub fn read_ply_vertices(bytes: &[u8]) -> Result<Vec<[f32; 5]>> {
    let marker = b"end_header\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| WlabError::Io("missing PLY header".into()))?
        + marker.len();
    let header = std::str::from_utf8(&bytes[..end]).map_err(|e| WlabError::Io(e.to_string()))?;
    let n: usize = header
        .lines()
        .find_map(|l| l.strip_prefix("element vertex "))
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| WlabError::Io("missing vertex count".into()))?;
    let body = &bytes[end..];
    if body.len() < 20 * n {
        return Err(WlabError::Io("truncated PLY body".into()));
    }
    Ok((0..n)
        .map(|k| std::array::from_fn(|j| f32::from_le_bytes(body[20 * k + 4 * j..20 * k + 4 * j + 4].try_into().unwrap())))
        .collect())
}

/// One named check in a JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// The identity or statement the check instantiates.
    pub paper_anchor: String,
}

impl CheckResult {
    /// Passes when |value − target| ≤ tolerance.
    pub fn near(name: &str, value: f64, target: f64, tolerance: f64, anchor: &str) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: (value - target).abs() <= tolerance,
            paper_anchor: anchor.into(),
        }
    }

    /// Passes when value < bound.
    pub fn below(name: &str, value: f64, bound: f64, anchor: &str) -> Self {
        Self { name: name.into(), value, tolerance: bound, pass: value < bound, paper_anchor: anchor.into() }
    }

    /// Passes when value > bound.
    pub fn above(name: &str, value: f64, bound: f64, anchor: &str) -> Self {
        Self { name: name.into(), value, tolerance: bound, pass: value > bound, paper_anchor: anchor.into() }
    }
}

/// Versioned JSON report: checks plus free-form payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub surface: String,
    pub checks: Vec<CheckResult>,
    pub payload: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, surface: &str) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            surface: surface.into(),
            checks: Vec::new(),
            payload: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Adds `value` under `key` in the payload object.
    pub fn attach<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| WlabError::Io(e.to_string()))?;
        if let serde_json::Value::Object(m) = &mut self.payload {
            m.insert(key.into(), v);
        }
        Ok(())
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| WlabError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> WlabError {
    WlabError::Io(e.to_string())
}

/// CSV step log: time, step, conserved periods, flux, drifts and pole data (poles as `re;im` lists).
pub fn write_step_log<W: Write>(log: &[StepLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "dt",
        "re_dz_over_g",
        "im_dz_over_g",
        "re_g_dz",
        "im_g_dz",
        "period_drift",
        "flux_1",
        "flux_2",
        "flux_3",
        "route_discrepancy",
        "gauge_consistency",
        "kernel_dz_over_g2",
        "kernel_dz",
        "poles",
        "c_minus2",
    ])
    .map_err(csv_err)?;
    let list = |v: &[crate::C64]| v.iter().map(|z| format!("{};{}", z.re, z.im)).collect::<Vec<_>>().join(" ");
    for l in log {
        let rec = [
            l.t.to_string(),
            l.dt.to_string(),
            l.period_dz_over_g.re.to_string(),
            l.period_dz_over_g.im.to_string(),
            l.period_g_dz.re.to_string(),
            l.period_g_dz.im.to_string(),
            l.period_drift.to_string(),
            l.flux[0].to_string(),
            l.flux[1].to_string(),
            l.flux[2].to_string(),
            l.route_discrepancy.to_string(),
            l.gauge_consistency.to_string(),
            l.kernel[0].to_string(),
            l.kernel[1].to_string(),
            list(&l.poles),
            list(&l.c_minus2),
        ];
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary line dump: N as u64, then complex64 (two float32) samples, little-endian.
pub fn write_line_dump<W: Write>(line: &SampledLine, mut out: W) -> Result<()> {
    out.write_all(&line.to_le_bytes())?;
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_line_dump`]; returns the samples only.
pub fn read_line_dump(bytes: &[u8]) -> Result<Vec<crate::C64>> {
    if bytes.len() < 8 {
        return Err(WlabError::Io("truncated line dump".into()));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 8 * n {
        return Err(WlabError::Io("line dump length mismatch".into()));
    }
    let f = |k: usize| f32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as f64;
    Ok((0..n).map(|j| crate::C64::new(f(8 + 8 * j), f(12 + 8 * j))).collect())
}

/// Creates `path` (and its parent directory) and hands a writer to `f`.
pub fn with_file(path: &Path, f: impl FnOnce(File) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    f(File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weierstrass::{MeshVertex, SurfaceMesh};
    use crate::C64;

    fn square() -> SurfaceMesh {
        let v = |x: f64, y: f64| MeshVertex {
            domain: C64::new(x, y),
            sheet: 1,
            position: [x, y, 0.0],
            normal: [0.0, 0.0, 1.0],
            lambda: 1.5,
            k: -0.25,
        };
        SurfaceMesh { vertices: vec![v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)], faces: vec![[0, 1, 2, 3]] }
    }

    #[test]
    fn ply_round_trips_curvature_and_metric() {
        let mut buf = Vec::new();
        write_ply(&square(), &mut buf).unwrap();
        let v = read_ply_vertices(&buf).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[2], [1.0, 1.0, 0.0, -0.25, 1.5]);
        assert_eq!(buf.len() - buf.windows(11).position(|w| w == b"end_header\n").unwrap() - 11, 4 * 20 + 17);
    }

    #[test]
    fn obj_lists_vertices_and_faces() {
        let mut buf = Vec::new();
        write_obj(&square(), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert!(s.contains("f 1//1 2//2 3//3 4//4"));
    }

    #[test]
    fn line_dump_round_trips() {
        let l = SampledLine::vertical(0.1, 8, 1.0, |z| z * 2.0);
        let mut buf = Vec::new();
        write_line_dump(&l, &mut buf).unwrap();
        let back = read_line_dump(&buf).unwrap();
        assert!(back.iter().zip(&l.values).all(|(a, b)| (a - b).norm() < 1e-6));
    }
}
