//! Text OFF and OBJ triangle meshes.
//!
//! Positions are written with Rust's shortest round-trip float formatting,
//! so a write followed by a read reproduces every coordinate bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sflab_core::{MeshError, TriangleMesh, Vec3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported mesh format: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<MeshFormat, MeshIoError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("off") => Ok(MeshFormat::Off),
            Some("obj") => Ok(MeshFormat::Obj),
            _ => Err(MeshIoError::Unsupported(path.display().to_string())),
        }
    }
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh, MeshIoError> {
    let format = MeshFormat::from_path(path)?;
    let bytes = fs::read(path).map_err(|source| MeshIoError::Io { path: path.display().to_string(), source })?;
    let text = String::from_utf8(bytes).map_err(|_| MeshIoError::Unsupported("binary or non-UTF-8 content".into()))?;
    match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Obj => parse_obj(&text),
    }
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<(), MeshIoError> {
    let text = match MeshFormat::from_path(path)? {
        MeshFormat::Off => format_off(mesh),
        MeshFormat::Obj => format_obj(mesh),
    };
    fs::write(path, text).map_err(|source| MeshIoError::Io { path: path.display().to_string(), source })
}

/// Non-empty lines with `#` comments stripped, numbered from one.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_f64(token: &str, line: usize) -> Result<f64, MeshIoError> {
    let x: f64 = token.parse().map_err(|_| parse_err(line, format!("bad number {token:?}")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(parse_err(line, "non-finite coordinate"))
    }
}

fn index_u32(i: usize, line: usize) -> Result<u32, MeshIoError> {
    u32::try_from(i).map_err(|_| parse_err(line, "index too large"))
}

pub fn parse_off(text: &str) -> Result<TriangleMesh, MeshIoError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut tokens: Vec<&str> = header.split_whitespace().collect();
    match tokens.first().copied() {
        Some("OFF") => {
            tokens.remove(0);
        }
        Some(t) if t.ends_with("OFF") => return Err(MeshIoError::Unsupported(format!("{t} variant"))),
        _ => return Err(parse_err(ln, "missing OFF header")),
    }
    if tokens.first() == Some(&"BINARY") {
        return Err(MeshIoError::Unsupported("binary OFF".into()));
    }
    // Counts may share the header line.
    let (ln, counts) = if tokens.is_empty() {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "missing counts"))?;
        (ln, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (ln, tokens)
    };
    if counts.len() < 2 {
        return Err(parse_err(ln, "expected vertex and face counts"));
    }
    let nv: usize = counts[0].parse().map_err(|_| parse_err(ln, "bad vertex count"))?;
    let nf: usize = counts[1].parse().map_err(|_| parse_err(ln, "bad face count"))?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of vertices"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        positions.push(Vec3::new(parse_f64(t[0], ln)?, parse_f64(t[1], ln)?, parse_f64(t[2], ln)?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of faces"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let n: usize = t.first().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad face size"))?;
        if n != 3 {
            return Err(parse_err(ln, format!("only triangles are supported, got a {n}-gon")));
        }
        if t.len() < 4 {
            return Err(parse_err(ln, "face needs three indices"));
        }
        let mut f = [0u32; 3];
        for k in 0..3 {
            let i: usize = t[k + 1].parse().map_err(|_| parse_err(ln, "bad vertex index"))?;
            if i >= nv {
                return Err(parse_err(ln, format!("vertex index {i} out of range")));
            }
            f[k] = index_u32(i, ln)?;
        }
        faces.push(f);
    }
    Ok(TriangleMesh::new(positions, faces)?)
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshIoError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (ln, l) in content_lines(text) {
        let mut t = l.split_whitespace();
        match t.next() {
            Some("v") => {
                let c: Vec<&str> = t.collect();
                if c.len() < 3 {
                    return Err(parse_err(ln, "vertex needs three coordinates"));
                }
                positions.push(Vec3::new(parse_f64(c[0], ln)?, parse_f64(c[1], ln)?, parse_f64(c[2], ln)?));
            }
            Some("f") => {
                let refs: Vec<&str> = t.collect();
                if refs.len() != 3 {
                    return Err(parse_err(ln, format!("only triangles are supported, got {} corners", refs.len())));
                }
                let mut f = [0u32; 3];
                for (k, r) in refs.iter().enumerate() {
                    let head = r.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| parse_err(ln, format!("bad vertex reference {r:?}")))?;
                    // one-based, negative counts back from the latest vertex
                    let idx = match i {
                        i if i > 0 => i - 1,
                        i if i < 0 => positions.len() as i64 + i,
                        _ => return Err(parse_err(ln, "vertex index 0 is invalid")),
                    };
                    if idx < 0 || idx as usize >= positions.len() {
                        return Err(parse_err(ln, format!("vertex reference {i} out of range")));
                    }
                    f[k] = index_u32(idx as usize, ln)?;
                }
                faces.push(f);
            }
            // normals, texture coordinates, groups and materials carry nothing we use
            _ => {}
        }
    }
    Ok(TriangleMesh::new(positions, faces)?)
}

pub fn format_off(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertex_count(), mesh.face_count());
    for p in mesh.positions() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for p in mesh.positions() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}
