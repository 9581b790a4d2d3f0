//! 2-D finite-volume mesh: cells, faces, boundary patches, quality metrics.
//!
//! Conventions:
//! - A face is a straight segment `v0 -> v1` stored in the owner cell's
//!   counter-clockwise traversal order; its area vector (length times unit
//!   normal, unit depth) therefore points from owner to neighbour, outward on
//!   boundary faces.
//! - Faces are stored internal-first, then boundary faces grouped by patch.
//! - Cell area and centroid are evaluated from exact edge integrals of the
//!   face segments, so generated and loaded meshes share one geometry path.

pub mod generator;
pub mod io;

use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::geom::Vec2;

pub use generator::{generate_cylinder_mesh, generate_rect_mesh, RectMeshSpec};
pub use io::{load_mesh, parse_mesh_str, save_mesh, write_mesh_string};

/// Relative tolerance for the closed-cell area-vector check.
const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub v0: usize,
    pub v1: usize,
    pub owner: usize,
    /// `None` on boundary faces.
    pub neighbour: Option<usize>,
    pub centroid: Vec2,
    /// Area vector oriented owner -> neighbour (outward on boundary faces).
    pub area: Vec2,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbour.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub centroid: Vec2,
    /// 2-D "volume": polygon area with unit depth.
    pub area: f64,
    /// Ids of the faces bounding this cell.
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub name: String,
    /// First face id of the patch's contiguous face block.
    pub start: usize,
    pub count: usize,
}

impl Patch {
    pub fn faces(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.count
    }
}

/// Raw connectivity prior to geometry construction.
///
/// `faces` may be in any order; boundary faces carry the index of their patch
/// in `patch_names`. `Mesh::from_data` canonicalizes the ordering.
#[derive(Debug, Clone)]
pub struct MeshData {
    pub points: Vec<Vec2>,
    pub faces: Vec<RawFace>,
    pub patch_names: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct RawFace {
    pub v0: usize,
    pub v1: usize,
    pub owner: usize,
    pub neighbour: Option<usize>,
    /// Patch index for boundary faces; ignored for internal faces.
    pub patch: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub points: Vec<Vec2>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
    pub patches: Vec<Patch>,
    pub n_internal_faces: usize,
    /// min/max over cells of sqrt(area).
    pub h_min: f64,
    pub h_max: f64,
    fingerprint: u64,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        // Derived geometry is a function of these.
        self.points == other.points && self.faces == other.faces && self.patches == other.patches
    }
}

impl Mesh {
    pub fn from_data(data: MeshData) -> Result<Mesh> {
        let MeshData {
            points,
            faces: raw,
            patch_names,
        } = data;

        for (i, f) in raw.iter().enumerate() {
            let bad_vertex = f.v0 >= points.len() || f.v1 >= points.len();
            if bad_vertex || f.v0 == f.v1 {
                return Err(CoreError::MeshValidation(format!(
                    "face {i} has invalid vertex ids {} {}",
                    f.v0, f.v1
                )));
            }
            if f.is_boundary() && f.patch >= patch_names.len() {
                return Err(CoreError::MeshValidation(format!(
                    "face {i} references patch {} of {}",
                    f.patch,
                    patch_names.len()
                )));
            }
        }

        // Canonical order: internal faces first, then boundary faces grouped
        // by patch; relative order within each group is preserved.
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&i| match raw[i].neighbour {
            Some(_) => (0usize, 0usize, i),
            None => (1, raw[i].patch, i),
        });
        let n_internal = raw.iter().filter(|f| f.neighbour.is_some()).count();

        let mut n_cells = 0usize;
        let mut faces = Vec::with_capacity(raw.len());
        let mut patches: Vec<Patch> = patch_names
            .iter()
            .map(|n| Patch {
                name: n.clone(),
                start: 0,
                count: 0,
            })
            .collect();
        for (new_id, &old_id) in order.iter().enumerate() {
            let rf = raw[old_id];
            let a = points[rf.v0];
            let b = points[rf.v1];
            let d = b - a;
            n_cells = n_cells.max(rf.owner + 1).max(rf.neighbour.map_or(0, |n| n + 1));
            if rf.is_boundary() {
                let p = &mut patches[rf.patch];
                if p.count == 0 {
                    p.start = new_id;
                }
                p.count += 1;
            }
            faces.push(Face {
                v0: rf.v0,
                v1: rf.v1,
                owner: rf.owner,
                neighbour: rf.neighbour,
                centroid: (a + b) * 0.5,
                // Outward normal of the owner's CCW traversal.
                area: Vec2::new(d.y, -d.x),
            });
        }

        let mut cells = vec![
            Cell {
                centroid: Vec2::ZERO,
                area: 0.0,
                faces: Vec::new(),
            };
            n_cells
        ];
        for (j, f) in faces.iter().enumerate() {
            cells[f.owner].faces.push(j);
            if let Some(n) = f.neighbour {
                cells[n].faces.push(j);
            }
        }

        // Exact polygon integrals over the face segments:
        //   area      = 1/2 sum (c_f . A)
        //   area*x_c  = 1/2 sum A_x * mean(x^2 over segment)
        // with sign +1 for owner, -1 for neighbour.
        for (i, cell) in cells.iter_mut().enumerate() {
            if cell.faces.is_empty() {
                return Err(CoreError::MeshValidation(format!("cell {i} has no faces")));
            }
            let mut area = 0.0;
            let mut cx = 0.0;
            let mut cy = 0.0;
            let mut closure = Vec2::ZERO;
            let mut perimeter = 0.0;
            for &j in &cell.faces {
                let f = &faces[j];
                let sign = if f.owner == i { 1.0 } else { -1.0 };
                let a = points[f.v0];
                let b = points[f.v1];
                area += 0.5 * sign * f.centroid.dot(f.area);
                cx += 0.5 * sign * f.area.x * (a.x * a.x + a.x * b.x + b.x * b.x) / 3.0;
                cy += 0.5 * sign * f.area.y * (a.y * a.y + a.y * b.y + b.y * b.y) / 3.0;
                closure += f.area * sign;
                perimeter += f.area.norm();
            }
            if closure.norm() > CLOSURE_TOL * perimeter {
                return Err(CoreError::MeshValidation(format!(
                    "cell {i} is not closed: face-area defect {:.3e} vs perimeter {:.3e}",
                    closure.norm(),
                    perimeter
                )));
            }
            if !(area > 0.0) {
                return Err(CoreError::MeshValidation(format!(
                    "cell {i} has non-positive area {area:.3e}"
                )));
            }
            cell.area = area;
            cell.centroid = Vec2::new(cx / area, cy / area);
        }

        let mut h_min = f64::INFINITY;
        let mut h_max = 0.0f64;
        for c in &cells {
            let h = c.area.sqrt();
            h_min = h_min.min(h);
            h_max = h_max.max(h);
        }

        let fingerprint = compute_fingerprint(&points, &faces, &patches);
        Ok(Mesh {
            points,
            faces,
            cells,
            patches,
            n_internal_faces: n_internal,
            h_min,
            h_max,
            fingerprint,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn internal_faces(&self) -> std::ops::Range<usize> {
        0..self.n_internal_faces
    }

    pub fn boundary_faces(&self) -> std::ops::Range<usize> {
        self.n_internal_faces..self.faces.len()
    }

    pub fn patch_id(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.name == name)
    }

    /// Patch index of a boundary face; `None` for internal faces.
    pub fn face_patch(&self, face: usize) -> Option<usize> {
        if face < self.n_internal_faces {
            return None;
        }
        self.patches.iter().position(|p| p.faces().contains(&face))
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// Stable 64-bit digest of points, connectivity, and patch layout.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Owner-to-neighbour centroid vector (internal faces) or
    /// owner-to-face-centroid vector (boundary faces).
    pub fn face_delta(&self, face: usize) -> Vec2 {
        let f = &self.faces[face];
        match f.neighbour {
            Some(n) => self.cells[n].centroid - self.cells[f.owner].centroid,
            None => f.centroid - self.cells[f.owner].centroid,
        }
    }

    /// Linear interpolation weight of the owner cell at an internal face,
    /// from centroid-to-face distances.
    pub fn face_weight(&self, face: usize) -> f64 {
        let f = &self.faces[face];
        let n = f.neighbour.expect("face_weight on boundary face");
        let df_p = (f.centroid - self.cells[f.owner].centroid).norm();
        let df_n = (f.centroid - self.cells[n].centroid).norm();
        df_n / (df_p + df_n)
    }

    pub fn quality(&self) -> QualityReport {
        let mut max_non_orth = 0.0f64;
        let mut sum_non_orth = 0.0;
        let mut max_skew = 0.0f64;
        for j in self.internal_faces() {
            let f = &self.faces[j];
            let n = f.neighbour.unwrap();
            let d = self.cells[n].centroid - self.cells[f.owner].centroid;
            let cos = (d.dot(f.area) / (d.norm() * f.area.norm())).clamp(-1.0, 1.0);
            let angle = cos.acos().to_degrees();
            max_non_orth = max_non_orth.max(angle);
            sum_non_orth += angle;

            // Skewness: offset of the face centroid from the point where the
            // owner-neighbour line crosses the face, relative to |d|.
            let p = self.cells[f.owner].centroid;
            let a = self.points[f.v0];
            let b = self.points[f.v1];
            let e = b - a;
            // p + t*d = a + s*e
            let det = d.cross(-e);
            if det.abs() > 1e-300 {
                let rhs = a - p;
                let t = rhs.cross(-e) / det;
                let hit = p + d * t;
                max_skew = max_skew.max((f.centroid - hit).norm() / d.norm());
            }
        }
        let mut max_aspect = 0.0f64;
        for c in &self.cells {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for &j in &c.faces {
                let len = self.faces[j].area.norm();
                lo = lo.min(len);
                hi = hi.max(len);
            }
            max_aspect = max_aspect.max(hi / lo);
        }
        QualityReport {
            max_non_orthogonality_deg: max_non_orth,
            avg_non_orthogonality_deg: if self.n_internal_faces > 0 {
                sum_non_orth / self.n_internal_faces as f64
            } else {
                0.0
            },
            max_skewness: max_skew,
            max_aspect_ratio: max_aspect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub max_non_orthogonality_deg: f64,
    pub avg_non_orthogonality_deg: f64,
    pub max_skewness: f64,
    pub max_aspect_ratio: f64,
}

fn compute_fingerprint(points: &[Vec2], faces: &[Face], patches: &[Patch]) -> u64 {
    let mut h = Sha256::new();
    h.update((points.len() as u64).to_le_bytes());
    h.update((faces.len() as u64).to_le_bytes());
    h.update((patches.len() as u64).to_le_bytes());
    for p in points {
        h.update(p.x.to_le_bytes());
        h.update(p.y.to_le_bytes());
    }
    for f in faces {
        h.update((f.v0 as u64).to_le_bytes());
        h.update((f.v1 as u64).to_le_bytes());
        h.update((f.owner as u64).to_le_bytes());
        h.update(f.neighbour.map_or(u64::MAX, |n| n as u64).to_le_bytes());
    }
    for p in patches {
        h.update((p.name.len() as u64).to_le_bytes());
        h.update(p.name.as_bytes());
        h.update((p.start as u64).to_le_bytes());
        h.update((p.count as u64).to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

impl RawFace {
    fn is_boundary(&self) -> bool {
        self.neighbour.is_none()
    }
}

/// Builds the face soup of a cell list given as CCW vertex polygons.
///
/// `classify` maps a boundary edge (its two vertex ids, in owner CCW order)
/// to a patch index.
pub(crate) fn faces_from_polygons(
    polygons: &[Vec<usize>],
    classify: impl Fn(usize, usize) -> usize,
) -> Vec<RawFace> {
    use std::collections::HashMap;
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<RawFace> = Vec::new();
    for (cell, poly) in polygons.iter().enumerate() {
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            let key = (a.min(b), a.max(b));
            match edge_map.get(&key) {
                Some(&fid) => {
                    debug_assert!(faces[fid].neighbour.is_none());
                    debug_assert_eq!((faces[fid].v0, faces[fid].v1), (b, a), "orientation clash");
                    faces[fid].neighbour = Some(cell);
                }
                None => {
                    edge_map.insert(key, faces.len());
                    faces.push(RawFace {
                        v0: a,
                        v1: b,
                        owner: cell,
                        neighbour: None,
                        patch: usize::MAX,
                    });
                }
            }
        }
    }
    for f in &mut faces {
        if f.neighbour.is_none() {
            f.patch = classify(f.v0, f.v1);
        }
    }
    faces
}
