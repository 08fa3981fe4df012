//! CSV side files and gnuplot data files.
//!
//! Column orders:
//! - curvature: `vertex_id,Nx,Ny,Nz,H,K,k1,k2,area_weight` (`k1 >= k2`)
//! - family: `wraps,half_height,vertices,area,min_h,max_h,max_shape_norm,shape_norm_sq,min_chord,smoothing_iterations`
//! - chords: `source,hit_x,hit_y,hit_z,hit_face,length,source_angle,hit_angle,near_orthogonal,frankel`
//!   (angles in radians; `frankel` empty unless the chord is near-orthogonal)

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sflab_core::experiments::{ChordScan, FamilyRecord};
use sflab_core::CurvatureField;

#[derive(Serialize)]
struct CurvatureRow {
    vertex_id: usize,
    #[serde(rename = "Nx")]
    nx: f64,
    #[serde(rename = "Ny")]
    ny: f64,
    #[serde(rename = "Nz")]
    nz: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "K")]
    k: f64,
    k1: f64,
    k2: f64,
    area_weight: f64,
}

#[derive(Serialize)]
struct ChordRow {
    source: usize,
    hit_x: f64,
    hit_y: f64,
    hit_z: f64,
    hit_face: usize,
    length: f64,
    source_angle: f64,
    hit_angle: f64,
    near_orthogonal: bool,
    frankel: Option<f64>,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn curvature_csv(field: &CurvatureField) -> Result<String, csv::Error> {
    to_csv((0..field.vertex_count()).map(|v| {
        let (k1, k2) = field.principal(v);
        let n = field.normals[v];
        CurvatureRow { vertex_id: v, nx: n.x, ny: n.y, nz: n.z, h: field.mean[v], k: field.gauss[v], k1, k2, area_weight: field.areas[v] }
    }))
}

pub fn family_csv(members: &[FamilyRecord]) -> Result<String, csv::Error> {
    to_csv(members)
}

pub fn chords_csv(scan: &ChordScan) -> Result<String, csv::Error> {
    to_csv(scan.records.iter().map(|r| ChordRow {
        source: r.source,
        hit_x: r.hit.x,
        hit_y: r.hit.y,
        hit_z: r.hit.z,
        hit_face: r.hit_face,
        length: r.length,
        source_angle: r.source_angle,
        hit_angle: r.hit_angle,
        near_orthogonal: r.near_orthogonal,
        frankel: r.frankel,
    }))
}

/// Whitespace-separated columns under a `#` header line, one row per entry.
pub fn gnuplot_dat(columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("# {}\n", columns.join(" "));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "{}", cells.join(" "));
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sflab_core::curvature::compute_curvature;
    use sflab_core::mesh::generate_icosphere;

    #[test]
    fn curvature_columns_and_values() {
        let m = generate_icosphere(2, 1.0).unwrap();
        let f = compute_curvature(&m).unwrap();
        let text = curvature_csv(&f).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, ["vertex_id", "Nx", "Ny", "Nz", "H", "K", "k1", "k2", "area_weight"]);
        let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), m.vertex_count());
        let h: f64 = rows[5][4].parse().unwrap();
        assert_eq!(h, f.mean[5]);
    }

    #[test]
    fn gnuplot_layout() {
        let s = gnuplot_dat(&["a", "b"], [vec![1.0, 0.5], vec![2.0, -1e-9]]);
        assert_eq!(s, "# a b\n1.0 0.5\n2.0 -1e-9\n");
    }
}
