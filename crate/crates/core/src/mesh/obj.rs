use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::TriangleMesh;
use crate::error::{GombocError, Result};

/// `v x y z` lines (17 significant digits) then 1-indexed `f i j k` lines.
pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let wrap = |source| GombocError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "# {}", mesh.provenance.header())?;
        for v in &mesh.vertices {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
        }
        for t in &mesh.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        out.flush()
    };
    write(&mut out).map_err(wrap)
}

/// Minimal OBJ reader for triangle meshes written by [`write_obj`].
pub fn read_obj(path: impl AsRef<Path>) -> Result<(Vec<Vector3<f64>>, Vec<[u32; 3]>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GombocError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |line: usize, message: &str| GombocError::Parse {
        path: path.to_path_buf(),
        message: format!("line {}: {message}", line + 1),
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .map(|p| p.parse().map_err(|_| malformed(n, "bad coordinate")))
                    .collect::<Result<_>>()?;
                if xyz.len() != 3 {
                    return Err(malformed(n, "vertex needs three coordinates"));
                }
                vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = parts
                    .map(|p| {
                        p.split('/')
                            .next()
                            .and_then(|i| i.parse::<u32>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| malformed(n, "bad face index"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(malformed(n, "only triangles are supported"));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    if let Some(bad) = faces.iter().flatten().find(|&&i| i as usize >= vertices.len()) {
        return Err(GombocError::Parse {
            path: path.to_path_buf(),
            message: format!("face index {} exceeds {} vertices", bad + 1, vertices.len()),
        });
    }
    Ok((vertices, faces))
}
