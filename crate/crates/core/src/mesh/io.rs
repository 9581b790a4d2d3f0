//! Plain-text mesh persistence.
//!
//! Format (see docs/mesh-format.md):
//! ```text
//! lesrom-mesh 1
//! <n_points> <n_faces> <n_cells> <n_patches>
//! <x> <y>                         n_points lines
//! <v0> <v1> <owner> <neighbour | patch-name>   n_faces lines
//! <patch-name> <start> <count>    n_patches lines
//! ```
//! Faces are stored internal-first, then boundary faces grouped by patch,
//! matching the in-memory canonical order; the patch table is redundant and
//! verified on load. Coordinates use shortest round-trip decimal formatting,
//! so save/load is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::geom::Vec2;
use crate::mesh::{Mesh, MeshData, RawFace};

const MAGIC: &str = "lesrom-mesh";
const VERSION: u32 = 1;

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(
        out,
        "{} {} {} {}",
        mesh.points.len(),
        mesh.faces.len(),
        mesh.cells.len(),
        mesh.patches.len()
    )
    .unwrap();
    for p in &mesh.points {
        writeln!(out, "{} {}", p.x, p.y).unwrap();
    }
    for (j, f) in mesh.faces.iter().enumerate() {
        match f.neighbour {
            Some(n) => writeln!(out, "{} {} {} {}", f.v0, f.v1, f.owner, n).unwrap(),
            None => {
                let patch = mesh.face_patch(j).expect("boundary face without patch");
                writeln!(
                    out,
                    "{} {} {} {}",
                    f.v0, f.v1, f.owner, mesh.patches[patch].name
                )
                .unwrap();
            }
        }
    }
    for p in &mesh.patches {
        writeln!(out, "{} {} {}", p.name, p.start, p.count).unwrap();
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path)?;
    parse_mesh_str(&text)
}

fn parse_err(line: usize, message: impl Into<String>) -> CoreError {
    CoreError::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        loop {
            match self.iter.next() {
                Some(l) => {
                    self.line_no += 1;
                    if !l.trim().is_empty() {
                        return Ok((self.line_no, l.trim()));
                    }
                }
                None => return Err(parse_err(self.line_no + 1, format!("expected {what}"))),
            }
        }
    }
}

fn parse_counts(line: &str, line_no: usize, n: usize, what: &str) -> Result<Vec<usize>> {
    let vals: Vec<usize> = line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(line_no, format!("{what}: {e}")))?;
    if vals.len() != n {
        return Err(parse_err(
            line_no,
            format!("{what}: expected {n} integers, got {}", vals.len()),
        ));
    }
    Ok(vals)
}

pub fn parse_mesh_str(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        iter: text.lines(),
        line_no: 0,
    };

    let (ln, header) = lines.next("header")?;
    let mut it = header.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(parse_err(ln, format!("expected `{MAGIC}` header")));
    }
    let version: u32 = it
        .next()
        .ok_or_else(|| parse_err(ln, "missing format version"))?
        .parse()
        .map_err(|e| parse_err(ln, format!("bad version: {e}")))?;
    if version != VERSION {
        return Err(parse_err(
            ln,
            format!("unsupported mesh format version {version} (expected {VERSION})"),
        ));
    }

    let (ln, counts_line) = lines.next("counts")?;
    let counts = parse_counts(counts_line, ln, 4, "counts")?;
    let (n_points, n_faces, n_cells, n_patches) = (counts[0], counts[1], counts[2], counts[3]);

    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let (ln, l) = lines.next("point coordinates")?;
        let mut it = l.split_whitespace();
        let mut coord = |name: &str| -> Result<f64> {
            it.next()
                .ok_or_else(|| parse_err(ln, format!("missing {name} coordinate")))?
                .parse::<f64>()
                .map_err(|e| parse_err(ln, format!("bad {name} coordinate: {e}")))
        };
        let x = coord("x")?;
        let y = coord("y")?;
        points.push(Vec2::new(x, y));
    }

    // Boundary rows name their patch; the patch table arrives later, so names
    // are resolved in a second pass.
    enum Neigh<'a> {
        Cell(usize),
        Patch(&'a str),
    }
    let mut raw_rows: Vec<(usize, usize, usize, usize, Neigh)> = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (ln, l) = lines.next("face row")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(parse_err(ln, format!("face row needs 4 fields, got {}", toks.len())));
        }
        let idx = |k: usize, name: &str| -> Result<usize> {
            toks[k]
                .parse::<usize>()
                .map_err(|e| parse_err(ln, format!("bad {name}: {e}")))
        };
        let v0 = idx(0, "vertex id")?;
        let v1 = idx(1, "vertex id")?;
        let owner = idx(2, "owner cell id")?;
        let neigh = match toks[3].parse::<usize>() {
            Ok(n) => Neigh::Cell(n),
            Err(_) => Neigh::Patch(toks[3]),
        };
        raw_rows.push((ln, v0, v1, owner, neigh));
    }

    let mut patch_names = Vec::with_capacity(n_patches);
    let mut declared = Vec::with_capacity(n_patches);
    for _ in 0..n_patches {
        let (ln, l) = lines.next("patch row")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(ln, format!("patch row needs 3 fields, got {}", toks.len())));
        }
        let start: usize = toks[1]
            .parse()
            .map_err(|e| parse_err(ln, format!("bad patch start: {e}")))?;
        let count: usize = toks[2]
            .parse()
            .map_err(|e| parse_err(ln, format!("bad patch count: {e}")))?;
        patch_names.push(toks[0].to_string());
        declared.push((start, count));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for (ln, v0, v1, owner, neigh) in raw_rows {
        let (neighbour, patch) = match neigh {
            Neigh::Cell(n) => (Some(n), usize::MAX),
            Neigh::Patch(name) => {
                let id = patch_names
                    .iter()
                    .position(|p| p == name)
                    .ok_or_else(|| parse_err(ln, format!("unknown patch `{name}`")))?;
                (None, id)
            }
        };
        faces.push(RawFace {
            v0,
            v1,
            owner,
            neighbour,
            patch,
        });
    }

    let mesh = Mesh::from_data(MeshData {
        points,
        faces,
        patch_names,
    })?;

    if mesh.cells.len() != n_cells {
        return Err(CoreError::MeshValidation(format!(
            "header declares {n_cells} cells, connectivity implies {}",
            mesh.cells.len()
        )));
    }
    for (p, &(start, count)) in mesh.patches.iter().zip(&declared) {
        if p.start != start || p.count != count {
            return Err(CoreError::MeshValidation(format!(
                "patch `{}` table entry ({start}, {count}) disagrees with face \
                 layout ({}, {})",
                p.name, p.start, p.count
            )));
        }
    }
    Ok(mesh)
}
