//! Minimal ASCII Wavefront OBJ reader/writer: `v x y z` and triangular
//! `f i j k` records with 1-based indices. Other records are skipped.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::TriMesh;
use crate::{Error, Result};

pub fn parse_obj(text: &str) -> Result<TriMesh<f64>> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords = tokens
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| Error::Parse {
                            line,
                            message: format!("bad vertex coordinate `{t}`"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if coords.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: "vertex needs three coordinates".into(),
                    });
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("face has {} vertices, only triangles are supported", refs.len()),
                    });
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    // `i`, `i/t`, `i/t/n` and `i//n` all start with the vertex index.
                    let idx = r.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("bad face index `{r}`"),
                    })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(Error::Parse {
                            line,
                            message: format!("face index {i} out of range"),
                        });
                    }
                    *slot = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh<f64>> {
    let path = path.as_ref();
    let load = || -> Result<TriMesh<f64>> {
        let text = std::fs::read_to_string(path)?;
        let mesh = parse_obj(&text)?;
        mesh.require_non_empty()?;
        Ok(mesh)
    };
    load().map_err(|e| Error::MeshLoad {
        path: path.display().to_string(),
        source: Box::new(e),
    })
}

/// Serializes with shortest round-trip float formatting, so
/// `parse_obj(&format_obj(m))` reproduces `m` exactly.
pub fn format_obj(mesh: &TriMesh<f64>) -> String {
    let mut out = String::with_capacity(mesh.len() * 48 + mesh.faces().len() * 24);
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(path: impl AsRef<Path>, mesh: &TriMesh<f64>) -> Result<()> {
    std::fs::write(path, format_obj(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vertices_and_faces() {
        let text = "# cube corner\nmtllib x.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2//1 3\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn quad_rejected_with_line_number() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n";
        match parse_obj(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("4 vertices"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_face() {
        assert!(matches!(
            parse_obj("v 0 0 0\nf 1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn format_round_trip_is_exact() {
        let m = TriMesh::new(
            vec![
                Vector3::new(0.1, -2.0 / 3.0, 1e-17),
                Vector3::new(123.456789012345, 0.0, -0.0),
                Vector3::new(1.0, 2.0, 3.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let back = parse_obj(&format_obj(&m)).unwrap();
        assert_eq!(back, m);
    }
}
