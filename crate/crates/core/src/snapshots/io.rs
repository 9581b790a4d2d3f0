//! Binary snapshot and lifting persistence.
//!
//! Snapshot layout (all integers and floats little-endian):
//! - magic `LRSS`, format version u32
//! - field tag (u32 length + UTF-8 bytes), components u32
//! - n_cells u64, n_snapshots u64, mesh fingerprint u64
//! - cell weights (n_cells f64), time stamps (n_snapshots f64)
//! - dof matrix column-major (n_cells * components * n_snapshots f64)
//!
//! Lifting layout:
//! - magic `LRLF`, format version u32
//! - n_cells u64, n_faces u64, mesh fingerprint u64
//! - chi values interleaved (2 * n_cells f64), face flux (n_faces f64)
//!
//! The lifting's boundary conditions are not stored; they are a pure
//! function of the mesh and are rebuilt on load.

use std::path::Path;

use crate::error::{CoreError, Result};
use crate::fom::CaseBcs;
use crate::fv::VectorField;
use crate::geom::Vec2;
use crate::mesh::Mesh;
use crate::snapshots::lifting::LiftingFunction;
use crate::snapshots::SnapshotSet;

const MAGIC: &[u8; 4] = b"LRSS";
const LIFTING_MAGIC: &[u8; 4] = b"LRLF";
const VERSION: u32 = 1;

/// Serialize a snapshot set to its binary representation.
pub fn encode_snapshots(set: &SnapshotSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * (set.data.len() + set.times.len() + set.n_cells));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(set.field.len() as u32).to_le_bytes());
    out.extend_from_slice(set.field.as_bytes());
    out.extend_from_slice(&(set.components as u32).to_le_bytes());
    out.extend_from_slice(&(set.n_cells as u64).to_le_bytes());
    out.extend_from_slice(&(set.n_snapshots() as u64).to_le_bytes());
    out.extend_from_slice(&set.mesh_fingerprint.to_le_bytes());
    for w in &set.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for t in &set.times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for v in &set.data {
        out.extend_from_slice(&v.to_le_bytes());
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
            return Err(CoreError::SnapshotFormat(format!(
                "truncated snapshot data: needed {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
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
}

/// Parse a snapshot set from its binary representation.
pub fn decode_snapshots(buf: &[u8]) -> Result<SnapshotSet> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(CoreError::SnapshotFormat("bad magic bytes".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(CoreError::SnapshotVersion(version, VERSION));
    }
    let name_len = c.u32()? as usize;
    let field = String::from_utf8(c.take(name_len)?.to_vec())
        .map_err(|_| CoreError::SnapshotFormat("field tag is not UTF-8".into()))?;
    let components = c.u32()? as usize;
    if components != 1 && components != 2 {
        return Err(CoreError::SnapshotFormat(format!(
            "unsupported component count {components}"
        )));
    }
    let n_cells = c.u64()? as usize;
    let n_snapshots = c.u64()? as usize;
    let mesh_fingerprint = c.u64()?;
    let weights = c.f64_vec(n_cells)?;
    let times = c.f64_vec(n_snapshots)?;
    let data = c.f64_vec(n_cells * components * n_snapshots)?;
    if c.pos != buf.len() {
        return Err(CoreError::SnapshotFormat(format!(
            "{} trailing bytes after snapshot data",
            buf.len() - c.pos
        )));
    }
    Ok(SnapshotSet {
        field,
        components,
        n_cells,
        data,
        times,
        mesh_fingerprint,
        weights,
    })
}

pub fn save_snapshots(set: &SnapshotSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_snapshots(set))?;
    Ok(())
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<SnapshotSet> {
    decode_snapshots(&std::fs::read(path)?)
}

/// Serialize a lifting function to its binary representation.
pub fn encode_lifting(lifting: &LiftingFunction) -> Vec<u8> {
    let n = lifting.chi.values.len();
    let mut out = Vec::with_capacity(32 + 8 * (2 * n + lifting.flux.len()));
    out.extend_from_slice(LIFTING_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(lifting.flux.len() as u64).to_le_bytes());
    out.extend_from_slice(&lifting.mesh_fingerprint.to_le_bytes());
    for v in &lifting.chi.values {
        out.extend_from_slice(&v.x.to_le_bytes());
        out.extend_from_slice(&v.y.to_le_bytes());
    }
    for f in &lifting.flux {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out
}

/// Parse a lifting function; the mesh supplies counts, the fingerprint
/// check, and the reconstructed boundary conditions.
pub fn decode_lifting(buf: &[u8], mesh: &Mesh) -> Result<LiftingFunction> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != LIFTING_MAGIC {
        return Err(CoreError::SnapshotFormat("bad lifting magic bytes".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(CoreError::SnapshotVersion(version, VERSION));
    }
    let n_cells = c.u64()? as usize;
    let n_faces = c.u64()? as usize;
    let mesh_fingerprint = c.u64()?;
    if mesh_fingerprint != mesh.fingerprint() {
        return Err(CoreError::FingerprintMismatch {
            expected: mesh_fingerprint,
            got: mesh.fingerprint(),
        });
    }
    if n_cells != mesh.n_cells() || n_faces != mesh.n_faces() {
        return Err(CoreError::SnapshotFormat(format!(
            "lifting sized {n_cells} cells / {n_faces} faces does not match the mesh"
        )));
    }
    let raw = c.f64_vec(2 * n_cells)?;
    let flux = c.f64_vec(n_faces)?;
    if c.pos != buf.len() {
        return Err(CoreError::SnapshotFormat(format!(
            "{} trailing bytes after lifting data",
            buf.len() - c.pos
        )));
    }
    let values = raw.chunks_exact(2).map(|p| Vec2::new(p[0], p[1])).collect();
    Ok(LiftingFunction {
        chi: VectorField {
            values,
            bcs: CaseBcs::steady_channel(mesh).velocity_at(mesh, 0.0),
            mesh_fingerprint,
        },
        flux,
        mesh_fingerprint,
    })
}

pub fn save_lifting(lifting: &LiftingFunction, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_lifting(lifting))?;
    Ok(())
}

pub fn load_lifting(path: impl AsRef<Path>, mesh: &Mesh) -> Result<LiftingFunction> {
    decode_lifting(&std::fs::read(path)?, mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::{ScalarField, VectorField};
    use crate::geom::Vec2;
    use crate::mesh::{generate_rect_mesh, RectMeshSpec};

    fn sample_set() -> SnapshotSet {
        let m = generate_rect_mesh(&RectMeshSpec::unit(4, 3)).unwrap();
        let mut set = SnapshotSet::new(&m, "v", 2);
        for k in 0..5 {
            let t = 0.1 * (k + 1) as f64;
            let f = VectorField::from_fn(&m, |c| {
                Vec2::new((c.x * t).sin(), c.y - t * t)
            });
            set.push_vector(&f, t);
        }
        set
    }

    #[test]
    fn round_trip_is_bitwise() {
        let set = sample_set();
        let bytes = encode_snapshots(&set);
        let back = decode_snapshots(&bytes).unwrap();
        assert_eq!(set, back);
        assert_eq!(encode_snapshots(&back), bytes);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.snap");
        let set = sample_set();
        save_snapshots(&set, &path).unwrap();
        assert_eq!(load_snapshots(&path).unwrap(), set);
    }

    #[test]
    fn scalar_set_round_trips() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(3, 3)).unwrap();
        let mut set = SnapshotSet::new(&m, "q_bar", 1);
        set.push_scalar(&ScalarField::from_fn(&m, |c| c.x * c.y), 1.0);
        let back = decode_snapshots(&encode_snapshots(&set)).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn corrupted_magic_rejected() {
        let mut bytes = encode_snapshots(&sample_set());
        bytes[0] = b'X';
        assert!(matches!(
            decode_snapshots(&bytes),
            Err(CoreError::SnapshotFormat(_))
        ));
    }

    #[test]
    fn future_version_rejected() {
        let mut bytes = encode_snapshots(&sample_set());
        bytes[4..8].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            decode_snapshots(&bytes),
            Err(CoreError::SnapshotVersion(9, 1))
        ));
    }

    #[test]
    fn truncated_data_rejected() {
        let bytes = encode_snapshots(&sample_set());
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            decode_snapshots(cut),
            Err(CoreError::SnapshotFormat(_))
        ));
    }

    #[test]
    fn trailing_garbage_rejected() {
        let mut bytes = encode_snapshots(&sample_set());
        bytes.push(0);
        assert!(matches!(
            decode_snapshots(&bytes),
            Err(CoreError::SnapshotFormat(_))
        ));
    }

    #[test]
    fn lifting_round_trips_bitwise() {
        let m = generate_rect_mesh(&RectMeshSpec::channel(8, 4, 2.2, 0.41)).unwrap();
        let lifting = LiftingFunction::build(&m, &crate::fom::SolverParams::default()).unwrap();
        let bytes = encode_lifting(&lifting);
        let back = decode_lifting(&bytes, &m).unwrap();
        assert_eq!(back.chi.values, lifting.chi.values);
        assert_eq!(back.chi.bcs, lifting.chi.bcs);
        assert_eq!(back.flux, lifting.flux);
        assert_eq!(back.mesh_fingerprint, lifting.mesh_fingerprint);
        assert_eq!(encode_lifting(&back), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lifting.bin");
        save_lifting(&lifting, &path).unwrap();
        assert_eq!(load_lifting(&path, &m).unwrap().chi.values, lifting.chi.values);
    }

    #[test]
    fn lifting_decode_rejects_wrong_mesh() {
        let m = generate_rect_mesh(&RectMeshSpec::channel(8, 4, 2.2, 0.41)).unwrap();
        let other = generate_rect_mesh(&RectMeshSpec::channel(9, 4, 2.2, 0.41)).unwrap();
        let lifting = LiftingFunction::build(&m, &crate::fom::SolverParams::default()).unwrap();
        let bytes = encode_lifting(&lifting);
        assert!(matches!(
            decode_lifting(&bytes, &other),
            Err(CoreError::FingerprintMismatch { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_lifting(&bad, &m),
            Err(CoreError::SnapshotFormat(_))
        ));
        assert!(matches!(
            decode_lifting(&bytes[..bytes.len() - 5], &m),
            Err(CoreError::SnapshotFormat(_))
        ));
    }
}
