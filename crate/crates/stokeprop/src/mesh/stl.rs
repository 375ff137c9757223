//! STL import and export.
//!
//! Binary and ASCII STL per the de-facto standard: an 80-byte header, a u32
//! facet count, and 50-byte facet records for binary. Facet vertices are
//! welded by exact bit pattern, connectivity is rebuilt, and orientation is
//! repaired so the signed volume is positive.

use super::TriMesh;
use crate::error::{Error, Result};
use crate::scalar::{from_f64, Real};
use nalgebra::Vector3;
use std::collections::HashMap;
use std::path::Path;

const HEADER_LEN: usize = 80;
const FACET_LEN: usize = 50;

pub fn load_stl<T: Real>(path: impl AsRef<Path>) -> Result<TriMesh<T>> {
    let bytes = std::fs::read(path)?;
    parse_stl(&bytes)
}

pub fn parse_stl<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>> {
    if bytes.is_empty() {
        return Err(Error::MalformedStl {
            offset: 0,
            reason: "empty file".into(),
        });
    }
    let facets = if is_binary(bytes) {
        parse_binary(bytes)?
    } else if bytes.trim_ascii_start().starts_with(b"solid") {
        parse_ascii(bytes)?
    } else {
        parse_binary(bytes)?
    };
    weld(facets)
}

/// A file whose length is consistent with its binary facet count is binary,
/// even if the header happens to start with "solid".
fn is_binary(bytes: &[u8]) -> bool {
    if bytes.len() < HEADER_LEN + 4 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
    bytes.len() == HEADER_LEN + 4 + FACET_LEN * count as usize
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<[[f64; 3]; 3]>> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::MalformedStl {
            offset: bytes.len() as u64,
            reason: format!("file too short for a binary header ({} bytes)", bytes.len()),
        });
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
    let expected = HEADER_LEN + 4 + FACET_LEN * count as usize;
    if bytes.len() != expected {
        return Err(Error::MalformedStl {
            offset: HEADER_LEN as u64,
            reason: format!(
                "facet count {count} implies {expected} bytes, file has {}",
                bytes.len()
            ),
        });
    }
    let mut facets = Vec::with_capacity(count as usize);
    for f in 0..count as usize {
        let base = HEADER_LEN + 4 + f * FACET_LEN;
        let mut tri = [[0.0f64; 3]; 3];
        for (v, vert) in tri.iter_mut().enumerate() {
            for (c, coord) in vert.iter_mut().enumerate() {
                // 12 bytes of facet normal precede the vertices; it is
                // recomputed from geometry, so only skipped here.
                let off = base + 12 + 12 * v + 4 * c;
                let val = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
                if !val.is_finite() {
                    return Err(Error::MalformedStl {
                        offset: off as u64,
                        reason: "non-finite vertex coordinate".into(),
                    });
                }
                *coord = val as f64;
            }
        }
        facets.push(tri);
    }
    Ok(facets)
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<[[f64; 3]; 3]>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedStl {
        offset: e.valid_up_to() as u64,
        reason: "not valid UTF-8".into(),
    })?;
    let mut facets = Vec::new();
    let mut current: Vec<[f64; 3]> = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += line.len() as u64;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let mut coords = [0.0f64; 3];
                for coord in &mut coords {
                    let tok = tokens.next().ok_or_else(|| Error::MalformedStl {
                        offset: line_offset,
                        reason: "vertex with fewer than 3 coordinates".into(),
                    })?;
                    *coord = tok.parse::<f64>().map_err(|_| Error::MalformedStl {
                        offset: line_offset,
                        reason: format!("unparseable coordinate {tok:?}"),
                    })?;
                }
                current.push(coords);
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(Error::MalformedStl {
                        offset: line_offset,
                        reason: format!("facet with {} vertices", current.len()),
                    });
                }
                facets.push([current[0], current[1], current[2]]);
                current.clear();
            }
            // solid/endsolid/facet/outer/endloop carry no geometry
            _ => {}
        }
    }
    if !current.is_empty() {
        return Err(Error::MalformedStl {
            offset,
            reason: "dangling vertices at end of file".into(),
        });
    }
    if facets.is_empty() {
        return Err(Error::MalformedStl {
            offset: 0,
            reason: "no facets".into(),
        });
    }
    Ok(facets)
}

/// Merge bit-identical vertex positions and rebuild a repaired mesh.
fn weld<T: Real>(facets: Vec<[[f64; 3]; 3]>) -> Result<TriMesh<T>> {
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices: Vec<Vector3<T>> = Vec::new();
    let mut triangles = Vec::with_capacity(facets.len());
    for facet in &facets {
        let mut tri = [0usize; 3];
        for (slot, vert) in tri.iter_mut().zip(facet) {
            let key = [vert[0].to_bits(), vert[1].to_bits(), vert[2].to_bits()];
            *slot = *index.entry(key).or_insert_with(|| {
                vertices.push(Vector3::new(
                    from_f64(vert[0]),
                    from_f64(vert[1]),
                    from_f64(vert[2]),
                ));
                vertices.len() - 1
            });
        }
        triangles.push(tri);
    }
    TriMesh::new_with_repair(vertices, triangles)
}

/// Serialize to binary STL (vertices cast to f32 per the format).
pub fn to_stl_binary<T: Real>(mesh: &TriMesh<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + FACET_LEN * mesh.panel_count());
    let mut header = *b"stokeprop binary stl";
    header[19] = b' ';
    out.extend_from_slice(&header);
    out.resize(HEADER_LEN, 0);
    out.extend_from_slice(&(mesh.panel_count() as u32).to_le_bytes());
    for (tri, normal) in mesh.triangles().iter().zip(mesh.normals()) {
        for c in 0..3 {
            let x: f64 = normal[c].to_f64().unwrap_or(0.0);
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
        for &vi in tri {
            let v = mesh.vertices()[vi];
            for c in 0..3 {
                let x: f64 = v[c].to_f64().unwrap_or(0.0);
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn save_stl<T: Real>(mesh: &TriMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_stl_binary(mesh))?;
    Ok(())
}
