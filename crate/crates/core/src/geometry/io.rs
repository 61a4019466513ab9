//! Readers for OFF / PLY (ascii) / OBJ / XYZ and writers for PLY / XYZ.
//!
//! Coordinates are kept in input order so indices are stable across runs.
//! Polygonal faces with more than three vertices are fan-triangulated.

use super::PointCloud;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Supported shape file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFormat {
    Off,
    Ply,
    Obj,
    Xyz,
}

impl ShapeFormat {
    /// Guess from a file extension (case-insensitive).
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path
            .extension()?
            .to_str()?
            .to_ascii_lowercase()
            .as_str()
        {
            "off" => Some(Self::Off),
            "ply" => Some(Self::Ply),
            "obj" => Some(Self::Obj),
            "xyz" | "txt" | "pts" => Some(Self::Xyz),
            _ => None,
        }
    }
}

impl std::str::FromStr for ShapeFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Self::Off),
            "ply" => Ok(Self::Ply),
            "obj" => Ok(Self::Obj),
            "xyz" => Ok(Self::Xyz),
            other => Err(Error::Parse(format!("unknown shape format '{other}'"))),
        }
    }
}

/// Loads a shape and attaches the uniform measure.
pub fn load_shape(path: &Path, format: ShapeFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("shape")
        .to_string();
    let (points, triangles) = match format {
        ShapeFormat::Off => parse_off(&text)?,
        ShapeFormat::Ply => parse_ply(&text)?,
        ShapeFormat::Obj => parse_obj(&text)?,
        ShapeFormat::Xyz => (parse_xyz(&text)?, None),
    };
    PointCloud::new(points, triangles, name)
}

fn parse_float(tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse(format!("bad number '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite coordinate '{tok}'")));
    }
    Ok(v)
}

fn parse_index(tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad index '{tok}'")))
}

fn fan_triangulate(face: &[usize], out: &mut Vec<[usize; 3]>) -> Result<()> {
    if face.len() < 3 {
        return Err(Error::Parse(format!("face with {} vertices", face.len())));
    }
    for k in 1..face.len() - 1 {
        out.push([face[0], face[k], face[k + 1]]);
    }
    Ok(())
}

fn points_from_rows(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Parse("no vertices".into()));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Parse("inconsistent coordinate count".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}

fn parse_off(text: &str) -> Result<(DMatrix<f64>, Option<Vec<[usize; 3]>>)> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let mut first = lines.next().ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    if first.eq_ignore_ascii_case("off") {
        first = lines.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))?;
    } else if let Some(rest) = first.strip_prefix("OFF") {
        // header and counts on one line
        first = rest.trim();
        if first.is_empty() {
            first = lines.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))?;
        }
    }
    let counts: Vec<&str> = first.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(Error::Parse("malformed OFF counts line".into()));
    }
    let nv = parse_index(counts[0])?;
    let nf = parse_index(counts[1])?;
    let mut rows = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated OFF vertices".into()))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(parse_float)
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(Error::Parse(format!("OFF vertex line '{line}'")));
        }
        rows.push(coords);
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated OFF faces".into()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let k = parse_index(toks[0])?;
        if toks.len() < k + 1 {
            return Err(Error::Parse(format!("OFF face line '{line}'")));
        }
        let face: Vec<usize> = toks[1..=k].iter().map(|t| parse_index(t)).collect::<Result<_>>()?;
        fan_triangulate(&face, &mut tris)?;
    }
    let points = points_from_rows(rows)?;
    Ok((points, if tris.is_empty() { None } else { Some(tris) }))
}

fn parse_ply(text: &str) -> Result<(DMatrix<f64>, Option<Vec<[usize; 3]>>)> {
    let mut lines = text.lines();
    if lines
        .next()
        .map(|l| l.trim() != "ply")
        .unwrap_or(true)
    {
        return Err(Error::Parse("missing 'ply' magic".into()));
    }
    let mut nv = 0usize;
    let mut nf = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current = None::<&str>;
    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", kind, _] => {
                if *kind != "ascii" {
                    return Err(Error::Parse("only ascii PLY is supported".into()));
                }
            }
            ["element", "vertex", n] => {
                nv = parse_index(n)?;
                current = Some("vertex");
            }
            ["element", "face", n] => {
                nf = parse_index(n)?;
                current = Some("face");
            }
            ["element", ..] => current = Some("other"),
            ["property", rest @ ..] if current == Some("vertex") => {
                if let Some(name) = rest.last() {
                    vertex_props.push((*name).to_string());
                }
            }
            _ => {}
        }
    }
    let ix = vertex_props.iter().position(|p| p == "x");
    let iy = vertex_props.iter().position(|p| p == "y");
    let iz = vertex_props.iter().position(|p| p == "z");
    let (ix, iy, iz) = match (ix, iy, iz) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::Parse("PLY vertex element lacks x/y/z".into())),
    };
    let mut data = lines.filter(|l| !l.trim().is_empty());
    let mut rows = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = data.next().ok_or_else(|| Error::Parse("truncated PLY vertices".into()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < vertex_props.len() {
            return Err(Error::Parse(format!("PLY vertex line '{line}'")));
        }
        rows.push(vec![
            parse_float(toks[ix])?,
            parse_float(toks[iy])?,
            parse_float(toks[iz])?,
        ]);
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = data.next().ok_or_else(|| Error::Parse("truncated PLY faces".into()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let k = parse_index(toks[0])?;
        if toks.len() < k + 1 {
            return Err(Error::Parse(format!("PLY face line '{line}'")));
        }
        let face: Vec<usize> = toks[1..=k].iter().map(|t| parse_index(t)).collect::<Result<_>>()?;
        fan_triangulate(&face, &mut tris)?;
    }
    let points = points_from_rows(rows)?;
    Ok((points, if tris.is_empty() { None } else { Some(tris) }))
}

fn parse_obj(text: &str) -> Result<(DMatrix<f64>, Option<Vec<[usize; 3]>>)> {
    let mut rows = Vec::new();
    let mut tris = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "v" => {
                if toks.len() < 4 {
                    return Err(Error::Parse(format!("OBJ vertex line '{line}'")));
                }
                rows.push(vec![
                    parse_float(toks[1])?,
                    parse_float(toks[2])?,
                    parse_float(toks[3])?,
                ]);
            }
            "f" => {
                let mut face = Vec::with_capacity(toks.len() - 1);
                for t in &toks[1..] {
                    let first = t.split('/').next().unwrap_or("");
                    let idx: i64 = first
                        .parse()
                        .map_err(|_| Error::Parse(format!("OBJ face index '{t}'")))?;
                    if idx < 1 {
                        return Err(Error::Parse(format!("OBJ face index '{t}' must be positive")));
                    }
                    face.push((idx - 1) as usize);
                }
                fan_triangulate(&face, &mut tris)?;
            }
            _ => {} // v/f records only
        }
    }
    let points = points_from_rows(rows)?;
    Ok((points, if tris.is_empty() { None } else { Some(tris) }))
}

fn parse_xyz(text: &str) -> Result<DMatrix<f64>> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords: Vec<f64> = line.split_whitespace().map(parse_float).collect::<Result<_>>()?;
        rows.push(coords);
    }
    points_from_rows(rows)
}

/// Writes an ascii PLY with optional extra per-vertex scalar fields and the
/// triangulation when present. Coordinates beyond the third column are
/// dropped; clouds with fewer than three columns are zero-padded.
pub fn write_ply(path: &Path, cloud: &PointCloud, scalars: &[(&str, &[f64])]) -> Result<()> {
    for (name, vals) in scalars {
        if vals.len() != cloud.len() {
            return Err(Error::DimensionMismatch(format!(
                "scalar field '{name}' has {} values for {} vertices",
                vals.len(),
                cloud.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", cloud.len()));
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    for (name, _) in scalars {
        out.push_str(&format!("property double {name}\n"));
    }
    let ntri = cloud.triangles().map_or(0, |t| t.len());
    out.push_str(&format!("element face {ntri}\n"));
    out.push_str("property list uchar int vertex_indices\nend_header\n");
    let pts = cloud.points();
    for i in 0..cloud.len() {
        for j in 0..3 {
            if j > 0 {
                out.push(' ');
            }
            let v = if j < pts.ncols() { pts[(i, j)] } else { 0.0 };
            out.push_str(&format!("{v:.17e}"));
        }
        for (_, vals) in scalars {
            out.push_str(&format!(" {:.17e}", vals[i]));
        }
        out.push('\n');
    }
    if let Some(tris) = cloud.triangles() {
        for t in tris {
            out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes coordinates as whitespace-separated floats, one point per line.
pub fn write_xyz(path: &Path, coords: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..coords.nrows() {
        for j in 0..coords.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{:.17e}", coords[(i, j)]));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str, ext: &str) -> tempfile::TempPath {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.into_temp_path()
    }

    const TETRA_OFF: &str = "OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn off_tetrahedron() {
        let p = write_temp(TETRA_OFF, ".off");
        let pc = load_shape(&p, ShapeFormat::Off).unwrap();
        assert_eq!(pc.len(), 4);
        assert_eq!(pc.triangles().unwrap().len(), 4);
        for &w in pc.measure().iter() {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn off_out_of_range_face_is_degenerate_input() {
        let bad = "OFF\n5 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 0\n3 0 1 9\n";
        let p = write_temp(bad, ".off");
        let err = load_shape(&p, ShapeFormat::Off).unwrap_err();
        assert!(matches!(err, crate::error::Error::DegenerateInput(_)));
    }

    #[test]
    fn xyz_hundred_lines() {
        let mut s = String::new();
        for i in 0..100 {
            s.push_str(&format!("{} {} {}\n", i, i * 2, 0.5));
        }
        let p = write_temp(&s, ".xyz");
        let pc = load_shape(&p, ShapeFormat::Xyz).unwrap();
        assert_eq!(pc.len(), 100);
        assert!(pc.triangles().is_none());
    }

    #[test]
    fn obj_with_slashed_faces() {
        let s = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n";
        let p = write_temp(s, ".obj");
        let pc = load_shape(&p, ShapeFormat::Obj).unwrap();
        assert_eq!(pc.len(), 3);
        assert_eq!(pc.triangles().unwrap(), &[[0, 1, 2]]);
    }

    #[test]
    fn non_finite_coordinate_is_parse_error() {
        let s = "v 0 0 nan\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        let p = write_temp(s, ".obj");
        assert!(matches!(
            load_shape(&p, ShapeFormat::Obj),
            Err(crate::error::Error::Parse(_))
        ));
    }

    #[test]
    fn ply_round_trip_with_scalars() {
        let p = write_temp(TETRA_OFF, ".off");
        let pc = load_shape(&p, ShapeFormat::Off).unwrap();
        let scalars: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let out = tempfile::Builder::new().suffix(".ply").tempfile().unwrap();
        write_ply(out.path(), &pc, &[("f1", &scalars)]).unwrap();
        let back = load_shape(out.path(), ShapeFormat::Ply).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back.triangles().unwrap().len(), 4);
        assert_eq!(back.points(), pc.points());
    }

    #[test]
    fn quad_faces_are_fan_triangulated() {
        let s = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let p = write_temp(s, ".off");
        let pc = load_shape(&p, ShapeFormat::Off).unwrap();
        assert_eq!(pc.triangles().unwrap(), &[[0, 1, 2], [0, 2, 3]]);
    }
}
