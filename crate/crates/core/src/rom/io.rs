//! Binary persistence for assembled operator sets and CSV trajectory export.
//!
//! Container layout (all integers and floats little-endian):
//! - magic `LROP`, format version u32
//! - stabilization mode u8, mesh fingerprint u64
//! - a fixed sequence of blocks; matrices as (rows u64, cols u64, data
//!   column-major), vectors as (len u64, data), tensors as (count u64,
//!   matrices), the pressure-Poisson block behind a presence flag u8
//!
//! Online runs can load a container and step without any mesh access.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

use super::assembly::{ConvectionTensor, PpeOperators, ReducedOperators};
use super::online::RomTrajectory;
use super::StabilizationMode;

const MAGIC: &[u8; 4] = b"LROP";
const VERSION: u32 = 1;

fn mode_code(mode: StabilizationMode) -> u8 {
    match mode {
        StabilizationMode::Nos => 0,
        StabilizationMode::Ppe => 1,
        StabilizationMode::Sup1 => 2,
        StabilizationMode::Sup2 => 3,
    }
}

fn mode_from_code(code: u8) -> Result<StabilizationMode> {
    match code {
        0 => Ok(StabilizationMode::Nos),
        1 => Ok(StabilizationMode::Ppe),
        2 => Ok(StabilizationMode::Sup1),
        3 => Ok(StabilizationMode::Sup2),
        other => Err(CoreError::OperatorFormat(format!(
            "unknown stabilization mode code {other}"
        ))),
    }
}

fn put_matrix(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_vector(out: &mut Vec<u8>, v: &DVector<f64>) {
    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for x in v.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_tensor(out: &mut Vec<u8>, t: &ConvectionTensor) {
    out.extend_from_slice(&(t.len() as u64).to_le_bytes());
    for m in t {
        put_matrix(out, m);
    }
}

/// Serialize an operator set to its binary representation.
pub fn encode_operators(ops: &ReducedOperators) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(mode_code(ops.mode));
    out.extend_from_slice(&ops.mesh_fingerprint.to_le_bytes());

    put_matrix(&mut out, &ops.mass);
    put_matrix(&mut out, &ops.mass_cross);
    put_matrix(&mut out, &ops.diffusion);
    put_matrix(&mut out, &ops.diffusion_transpose);
    put_matrix(&mut out, &ops.pressure_gradient);
    put_matrix(&mut out, &ops.divergence);
    put_tensor(&mut out, &ops.convection);

    put_matrix(&mut out, &ops.mass_bar);
    put_matrix(&mut out, &ops.diffusion_bar);
    put_matrix(&mut out, &ops.pressure_gradient_bar);
    put_matrix(&mut out, &ops.divergence_bar);

    put_vector(&mut out, &ops.lift_mass);
    put_vector(&mut out, &ops.lift_diffusion);
    put_vector(&mut out, &ops.lift_diffusion_transpose);
    put_matrix(&mut out, &ops.lift_convection_in);
    put_matrix(&mut out, &ops.lift_convection_by);
    put_vector(&mut out, &ops.lift_convection_self);
    put_vector(&mut out, &ops.lift_divergence);
    put_vector(&mut out, &ops.lift_diffusion_bar);
    put_vector(&mut out, &ops.lift_divergence_bar);

    match &ops.ppe {
        Some(ppe) => {
            out.push(1);
            put_matrix(&mut out, &ppe.stiffness);
            put_matrix(&mut out, &ppe.stiffness_bar);
            put_matrix(&mut out, &ppe.curl_boundary);
            put_matrix(&mut out, &ppe.curl_boundary_bar);
            put_matrix(&mut out, &ppe.trace_boundary);
            put_matrix(&mut out, &ppe.trace_boundary_bar);
            put_tensor(&mut out, &ppe.convection_grad);
            put_matrix(&mut out, &ppe.lift_convection_grad_in);
            put_matrix(&mut out, &ppe.lift_convection_grad_by);
            put_vector(&mut out, &ppe.lift_convection_grad_self);
            put_vector(&mut out, &ppe.lift_curl_boundary);
            put_vector(&mut out, &ppe.lift_curl_boundary_bar);
            put_vector(&mut out, &ppe.lift_trace_boundary);
        }
        None => out.push(0),
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CoreError::OperatorFormat(format!(
                "truncated operator data: needed {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(8 * n)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.dim()?;
        let cols = self.dim()?;
        let data = self.f64_vec(rows * cols)?;
        Ok(DMatrix::from_column_slice(rows, cols, &data))
    }

    fn vector(&mut self) -> Result<DVector<f64>> {
        let len = self.dim()?;
        Ok(DVector::from_vec(self.f64_vec(len)?))
    }

    fn tensor(&mut self) -> Result<ConvectionTensor> {
        let count = self.dim()?;
        (0..count).map(|_| self.matrix()).collect()
    }

    fn dim(&mut self) -> Result<usize> {
        let d = self.u64()?;
        // A dimension beyond any plausible reduced cardinality means a
        // corrupt container; catching it here avoids huge allocations.
        if d > 1 << 24 {
            return Err(CoreError::OperatorFormat(format!(
                "implausible dimension {d} in operator container"
            )));
        }
        Ok(d as usize)
    }
}

/// Parse an operator set from its binary representation.
pub fn decode_operators(buf: &[u8]) -> Result<ReducedOperators> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(CoreError::OperatorFormat("bad magic bytes".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(CoreError::OperatorVersion(version, VERSION));
    }
    let mode = mode_from_code(c.u8()?)?;
    let mesh_fingerprint = c.u64()?;

    let mass = c.matrix()?;
    let mass_cross = c.matrix()?;
    let diffusion = c.matrix()?;
    let diffusion_transpose = c.matrix()?;
    let pressure_gradient = c.matrix()?;
    let divergence = c.matrix()?;
    let convection = c.tensor()?;

    let mass_bar = c.matrix()?;
    let diffusion_bar = c.matrix()?;
    let pressure_gradient_bar = c.matrix()?;
    let divergence_bar = c.matrix()?;

    let lift_mass = c.vector()?;
    let lift_diffusion = c.vector()?;
    let lift_diffusion_transpose = c.vector()?;
    let lift_convection_in = c.matrix()?;
    let lift_convection_by = c.matrix()?;
    let lift_convection_self = c.vector()?;
    let lift_divergence = c.vector()?;
    let lift_diffusion_bar = c.vector()?;
    let lift_divergence_bar = c.vector()?;

    let ppe = match c.u8()? {
        0 => None,
        1 => Some(PpeOperators {
            stiffness: c.matrix()?,
            stiffness_bar: c.matrix()?,
            curl_boundary: c.matrix()?,
            curl_boundary_bar: c.matrix()?,
            trace_boundary: c.matrix()?,
            trace_boundary_bar: c.matrix()?,
            convection_grad: c.tensor()?,
            lift_convection_grad_in: c.matrix()?,
            lift_convection_grad_by: c.matrix()?,
            lift_convection_grad_self: c.vector()?,
            lift_curl_boundary: c.vector()?,
            lift_curl_boundary_bar: c.vector()?,
            lift_trace_boundary: c.vector()?,
        }),
        other => {
            return Err(CoreError::OperatorFormat(format!(
                "bad pressure-Poisson block flag {other}"
            )))
        }
    };
    if c.pos != buf.len() {
        return Err(CoreError::OperatorFormat(format!(
            "{} trailing bytes after operator data",
            buf.len() - c.pos
        )));
    }
    Ok(ReducedOperators {
        mode,
        mesh_fingerprint,
        mass,
        mass_cross,
        diffusion,
        diffusion_transpose,
        pressure_gradient,
        divergence,
        convection,
        mass_bar,
        diffusion_bar,
        pressure_gradient_bar,
        divergence_bar,
        lift_mass,
        lift_diffusion,
        lift_diffusion_transpose,
        lift_convection_in,
        lift_convection_by,
        lift_convection_self,
        lift_divergence,
        lift_diffusion_bar,
        lift_divergence_bar,
        ppe,
    })
}

pub fn save_operators(ops: &ReducedOperators, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_operators(ops))?;
    Ok(())
}

pub fn load_operators(path: impl AsRef<Path>) -> Result<ReducedOperators> {
    decode_operators(&std::fs::read(path)?)
}

/// Write a coefficient trajectory as CSV: time, evolve/filter velocity and
/// pressure coefficients, then the two per-step condition numbers.
///
/// Formatting uses the shortest round-trip float representation, so equal
/// trajectories serialize to identical bytes.
pub fn write_trajectory_csv(trajectory: &RomTrajectory, mut w: impl Write) -> Result<()> {
    let first = match trajectory.rows.first() {
        Some(f) => f,
        None => return Ok(()),
    };
    let mut header = String::from("t");
    for i in 0..first.beta.len() {
        header.push_str(&format!(",beta_{i}"));
    }
    for i in 0..first.gamma.len() {
        header.push_str(&format!(",gamma_{i}"));
    }
    for i in 0..first.beta_bar.len() {
        header.push_str(&format!(",beta_bar_{i}"));
    }
    for i in 0..first.gamma_bar.len() {
        header.push_str(&format!(",gamma_bar_{i}"));
    }
    header.push_str(",cond_evolve,cond_filter");
    writeln!(w, "{header}")?;
    for row in &trajectory.rows {
        let mut line = format!("{}", row.t);
        for v in row
            .beta
            .iter()
            .chain(&row.gamma)
            .chain(&row.beta_bar)
            .chain(&row.gamma_bar)
        {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{},{}", row.cond_evolve, row.cond_filter));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rom::assembly::assemble;
    use crate::rom::online::TrajectoryRow;
    use crate::rom::testutil::{channel_mesh, random_spaces};
    use crate::rom::StabilizationMode;

    fn sample_operators() -> ReducedOperators {
        let mesh = channel_mesh(6, 3);
        let (spaces, case) = random_spaces(&mesh, StabilizationMode::Ppe, (2, 1, 1, 1), 101, false);
        assemble(&mesh, &spaces, &case).unwrap()
    }

    #[test]
    fn round_trip_preserves_every_block() {
        let ops = sample_operators();
        let bytes = encode_operators(&ops);
        let back = decode_operators(&bytes).unwrap();
        assert_eq!(ops, back);

        // Without the pressure-Poisson blocks too.
        let mesh = channel_mesh(6, 3);
        let (spaces, case) =
            random_spaces(&mesh, StabilizationMode::Nos, (2, 1, 1, 1), 103, false);
        let nos = assemble(&mesh, &spaces, &case).unwrap();
        assert!(nos.ppe.is_none());
        let back = decode_operators(&encode_operators(&nos)).unwrap();
        assert_eq!(nos, back);
    }

    #[test]
    fn save_and_load_through_files() {
        let ops = sample_operators();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ops.bin");
        save_operators(&ops, &path).unwrap();
        let back = load_operators(&path).unwrap();
        assert_eq!(ops, back);
    }

    #[test]
    fn rejects_corrupt_containers() {
        let ops = sample_operators();
        let good = encode_operators(&ops);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode_operators(&bad_magic).unwrap_err(),
            CoreError::OperatorFormat(_)
        ));

        let mut bad_version = good.clone();
        bad_version[4..8].copy_from_slice(&99u32.to_le_bytes());
        assert!(matches!(
            decode_operators(&bad_version).unwrap_err(),
            CoreError::OperatorVersion(99, 1)
        ));

        let mut bad_mode = good.clone();
        bad_mode[8] = 7;
        assert!(matches!(
            decode_operators(&bad_mode).unwrap_err(),
            CoreError::OperatorFormat(_)
        ));

        let truncated = &good[..good.len() - 9];
        assert!(matches!(
            decode_operators(truncated).unwrap_err(),
            CoreError::OperatorFormat(_)
        ));

        let mut trailing = good.clone();
        trailing.extend_from_slice(&[0u8; 3]);
        assert!(matches!(
            decode_operators(&trailing).unwrap_err(),
            CoreError::OperatorFormat(_)
        ));

        // Huge declared dimension right where the first matrix starts.
        let mut huge = good;
        let dim_offset = 4 + 4 + 1 + 8;
        huge[dim_offset..dim_offset + 8].copy_from_slice(&(u64::MAX).to_le_bytes());
        assert!(matches!(
            decode_operators(&huge).unwrap_err(),
            CoreError::OperatorFormat(_)
        ));
    }

    #[test]
    fn trajectory_csv_is_stable() {
        let trajectory = RomTrajectory {
            mode: StabilizationMode::Ppe,
            rows: vec![
                TrajectoryRow {
                    t: 0.0,
                    beta: vec![0.0, 0.0],
                    gamma: vec![0.0],
                    beta_bar: vec![0.0],
                    gamma_bar: vec![],
                    cond_evolve: 0.0,
                    cond_filter: 0.0,
                },
                TrajectoryRow {
                    t: 0.25,
                    beta: vec![1.5, -0.125],
                    gamma: vec![3.0],
                    beta_bar: vec![0.0625],
                    gamma_bar: vec![],
                    cond_evolve: 12.5,
                    cond_filter: 2.0,
                },
            ],
        };
        let mut out = Vec::new();
        write_trajectory_csv(&trajectory, &mut out).unwrap();
        let expected = "t,beta_0,beta_1,gamma_0,beta_bar_0,cond_evolve,cond_filter\n\
                        0,0,0,0,0,0,0\n\
                        0.25,1.5,-0.125,3,0.0625,12.5,2\n";
        assert_eq!(String::from_utf8(out).unwrap(), expected);

        let empty = RomTrajectory {
            mode: StabilizationMode::Nos,
            rows: Vec::new(),
        };
        let mut out = Vec::new();
        write_trajectory_csv(&empty, &mut out).unwrap();
        assert!(out.is_empty());
    }
}
