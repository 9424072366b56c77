//! ASCII OFF import/export with a JSON geometry sidecar.
//!
//! The sidecar sits next to the OFF file with a `.json` extension, e.g.
//! `{ "geometry": "flat-torus", "Lx": 1.0, "Ly": 1.0 }`. Without a sidecar a
//! mesh is planar when every `z` is zero and embedded otherwise.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::{Geometry, TriMesh};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

pub fn write_off<W: Write>(mesh: &TriMesh, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.num_vertices(), mesh.num_faces())?;
    for p in mesh.positions() {
        writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Parses vertex coordinates and triangles from an OFF stream.
pub fn read_off<R: Read>(input: R) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let reader = BufReader::new(input);
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim().to_string();
        if !body.is_empty() {
            lines.push(body);
        }
    }
    let mut it = lines.into_iter();
    let header = it.next().ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    // Some writers put the counts on the header line.
    let counts_line = match header.strip_prefix("OFF") {
        Some(rest) if rest.trim().is_empty() => {
            it.next().ok_or_else(|| Error::Parse("missing OFF counts line".into()))?
        }
        Some(rest) => rest.trim().to_string(),
        None => return Err(Error::Parse(format!("expected OFF header, found {header:?}"))),
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(Error::Parse("OFF counts line needs V and F".into()));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut positions = Vec::with_capacity(nv);
    for i in 0..nv {
        let line = it.next().ok_or_else(|| Error::Parse(format!("missing vertex {i}")))?;
        let c: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(Error::Parse(format!("vertex {i} needs three coordinates")));
        }
        positions.push([c[0], c[1], c[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let line = it.next().ok_or_else(|| Error::Parse(format!("missing face {f}")))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad index {t:?}"))))
            .collect::<Result<_>>()?;
        if idx.len() < 4 || idx[0] != 3 {
            return Err(Error::Parse(format!("face {f} is not a triangle")));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    Ok((positions, faces))
}

pub fn sidecar_path(off_path: &Path) -> PathBuf {
    off_path.with_extension("json")
}

/// Writes the OFF file and, for non-planar geometries, its sidecar.
pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_off(mesh, &mut buf)?;
    fs::write(path, buf)?;
    if mesh.geometry() != Geometry::Planar {
        let json = serde_json::to_string_pretty(&mesh.geometry())?;
        fs::write(sidecar_path(path), json + "\n")?;
    }
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let (positions, faces) = read_off(fs::File::open(path)?)?;
    let sidecar = sidecar_path(path);
    let geometry = if sidecar.exists() {
        serde_json::from_str(&fs::read_to_string(sidecar)?)?
    } else if positions.iter().all(|p| p[2] == 0.0) {
        Geometry::Planar
    } else {
        Geometry::Embedded
    };
    TriMesh::new(positions, faces, geometry)
}
