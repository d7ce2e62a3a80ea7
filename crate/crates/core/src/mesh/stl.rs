use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::TriangleMesh;
use crate::error::{GombocError, Result};

const HEADER_LEN: usize = 80;
const FACET_LEN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StlMode {
    Binary,
    Ascii,
}

/// One facet as stored in a binary STL file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StlFacet {
    pub normal: [f32; 3],
    pub vertices: [[f32; 3]; 3],
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GombocError + '_ {
    move |source| GombocError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn unit_normal(mesh: &TriangleMesh, t: &[u32; 3]) -> Vector3<f64> {
    mesh.face_normal(t)
        .try_normalize(0.0)
        .unwrap_or_else(Vector3::zeros)
}

/// Writes the mesh as STL. Facet normals are recomputed from the vertex winding.
pub fn write_stl(mesh: &TriangleMesh, path: impl AsRef<Path>, mode: StlMode) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match mode {
        StlMode::Binary => write_binary(mesh, &mut out),
        StlMode::Ascii => write_ascii(mesh, &mut out),
    }
    .and_then(|_| out.flush())
    .map_err(io_err(path))
}

fn write_binary(mesh: &TriangleMesh, out: &mut impl Write) -> std::io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    let text = mesh.provenance.header();
    let n = text.len().min(HEADER_LEN);
    header[..n].copy_from_slice(&text.as_bytes()[..n]);
    out.write_all(&header)?;
    out.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;

    let mut record = [0u8; FACET_LEN];
    for t in &mesh.triangles {
        let n = unit_normal(mesh, t);
        let floats = std::iter::once(n)
            .chain(t.iter().map(|&i| mesh.vertices[i as usize]))
            .flat_map(|v| [v.x as f32, v.y as f32, v.z as f32]);
        for (k, f) in floats.enumerate() {
            record[4 * k..4 * k + 4].copy_from_slice(&f.to_le_bytes());
        }
        // trailing attribute byte count stays zero
        out.write_all(&record)?;
    }
    Ok(())
}

fn write_ascii(mesh: &TriangleMesh, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "solid gomboc")?;
    for t in &mesh.triangles {
        let n = unit_normal(mesh, t);
        writeln!(out, "  facet normal {:e} {:e} {:e}", n.x as f32, n.y as f32, n.z as f32)?;
        writeln!(out, "    outer loop")?;
        for &i in t {
            let v = mesh.vertices[i as usize];
            writeln!(out, "      vertex {:e} {:e} {:e}", v.x as f32, v.y as f32, v.z as f32)?;
        }
        writeln!(out, "    endloop")?;
        writeln!(out, "  endfacet")?;
    }
    writeln!(out, "endsolid gomboc")
}

/// Reads a binary STL file back into its header text and facets.
pub fn read_stl_binary(path: impl AsRef<Path>) -> Result<(String, Vec<StlFacet>)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let malformed = |message: String| GombocError::Parse {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN + 4 {
        return Err(malformed(format!("{} bytes is shorter than the STL header", bytes.len())));
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + 4 + FACET_LEN * count;
    if bytes.len() != expected {
        return Err(malformed(format!(
            "{count} facets need {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let header = String::from_utf8_lossy(&bytes[..HEADER_LEN])
        .trim_end_matches('\0')
        .to_string();
    let facets = bytes[HEADER_LEN + 4..]
        .chunks_exact(FACET_LEN)
        .map(|rec| {
            let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
            StlFacet {
                normal: [f(0), f(1), f(2)],
                vertices: [[f(3), f(4), f(5)], [f(6), f(7), f(8)], [f(9), f(10), f(11)]],
            }
        })
        .collect();
    Ok((header, facets))
}
