//! ASCII mesh readers: OFF, OBJ (`v`/`f` records only), and ASCII PLY.
//!
//! Only triangle faces are accepted. OBJ texture/normal sub-indices are
//! ignored; everything else unknown is skipped where the format allows it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{CleanedMesh, MeshError, TriangleMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    PlyAscii,
}

/// Parse a mesh from raw bytes, validate it, and drop unreferenced vertices
/// (the remap is returned alongside the mesh).
pub fn load_mesh(bytes: &[u8], format: MeshFormat) -> Result<CleanedMesh, MeshError> {
    let (vertices, faces) = match format {
        MeshFormat::Off => parse_off(bytes)?,
        MeshFormat::Obj => parse_obj(bytes)?,
        MeshFormat::PlyAscii => parse_ply(bytes)?,
    };
    TriangleMesh::from_parts(vertices, faces)
}

fn err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Lines as UTF-8 with 1-based numbering; bad encoding is a parse error.
fn lines(bytes: &[u8]) -> Result<Vec<(usize, &str)>, MeshError> {
    let mut out = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let text = core::str::from_utf8(raw).map_err(|_| err(i + 1, "invalid UTF-8"))?;
        out.push((i + 1, text));
    }
    Ok(out)
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, MeshError> {
    tok.parse::<f64>()
        .map_err(|_| err(line, format!("expected a number, got `{tok}`")))
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, MeshError> {
    tok.parse::<usize>()
        .map_err(|_| err(line, format!("expected a nonnegative integer, got `{tok}`")))
}

fn parse_off(bytes: &[u8]) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>), MeshError> {
    let all = lines(bytes)?;
    let mut it = all
        .iter()
        .map(|(n, l)| (*n, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = it.next().ok_or_else(|| err(1, "empty OFF stream"))?;
    let mut counts: Vec<&str>;
    if header == "OFF" {
        let (ln2, c) = it.next().ok_or_else(|| err(ln, "missing OFF count line"))?;
        counts = c.split_whitespace().collect();
        if counts.len() < 2 {
            return Err(err(ln2, "OFF count line needs `V F [E]`"));
        }
    } else if let Some(rest) = header.strip_prefix("OFF") {
        // single-line variant: `OFF V F E`
        counts = rest.split_whitespace().collect();
        if counts.len() < 2 {
            return Err(err(ln, "malformed OFF header"));
        }
    } else {
        return Err(err(ln, "missing OFF keyword"));
    }
    counts.truncate(3);
    let nv = parse_usize(ln, counts[0])?;
    let nf = parse_usize(ln, counts[1])?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = it
            .next()
            .ok_or_else(|| err(all.len(), "unexpected end of OFF vertex list"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(err(ln, "vertex line needs 3 coordinates"));
        }
        vertices.push([
            parse_f64(ln, toks[0])?,
            parse_f64(ln, toks[1])?,
            parse_f64(ln, toks[2])?,
        ]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = it
            .next()
            .ok_or_else(|| err(all.len(), "unexpected end of OFF face list"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            return Err(err(ln, "empty face line"));
        }
        let arity = parse_usize(ln, toks[0])?;
        if arity != 3 {
            return Err(err(ln, format!("only triangle faces supported, got {arity}")));
        }
        if toks.len() < 4 {
            return Err(err(ln, "face line needs 3 indices"));
        }
        faces.push([
            parse_usize(ln, toks[1])?,
            parse_usize(ln, toks[2])?,
            parse_usize(ln, toks[3])?,
        ]);
    }
    Ok((vertices, faces))
}

fn parse_obj(bytes: &[u8]) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>), MeshError> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in lines(bytes)? {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let coords: Vec<&str> = toks.collect();
                if coords.len() < 3 {
                    return Err(err(ln, "vertex record needs 3 coordinates"));
                }
                vertices.push([
                    parse_f64(ln, coords[0])?,
                    parse_f64(ln, coords[1])?,
                    parse_f64(ln, coords[2])?,
                ]);
            }
            Some("f") => {
                let idx: Vec<&str> = toks.collect();
                if idx.len() != 3 {
                    return Err(err(
                        ln,
                        format!("only triangle faces supported, got {} corners", idx.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, tok) in face.iter_mut().zip(&idx) {
                    // `i`, `i/t`, `i//n`, `i/t/n`; negative = relative to end
                    let first = tok.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| err(ln, format!("bad face index `{tok}`")))?;
                    let resolved = if raw > 0 {
                        (raw - 1) as usize
                    } else if raw < 0 && (-raw as usize) <= vertices.len() {
                        vertices.len() - (-raw as usize)
                    } else {
                        return Err(err(ln, format!("face index {raw} out of range")));
                    };
                    *slot = resolved;
                }
                faces.push(face);
            }
            // vn / vt / usemtl / o / g / s / mtllib all ignored
            _ => {}
        }
    }
    Ok((vertices, faces))
}

struct PlyElement {
    name: String,
    count: usize,
    // (property name, is_list)
    properties: Vec<(String, bool)>,
}

fn parse_ply(bytes: &[u8]) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>), MeshError> {
    let all = lines(bytes)?;
    let mut it = all
        .iter()
        .map(|(n, l)| (*n, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    match it.next() {
        Some((_, "ply")) => {}
        Some((ln, _)) => return Err(err(ln, "missing `ply` magic")),
        None => return Err(err(1, "empty PLY stream")),
    }
    match it.next() {
        Some((_, l)) if l.starts_with("format ascii") => {}
        Some((ln, l)) => return Err(err(ln, format!("unsupported PLY format `{l}`"))),
        None => return Err(err(1, "truncated PLY header")),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (ln, line) in it.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "comment" | "obj_info" => {}
            "element" => {
                if toks.len() < 3 {
                    return Err(err(ln, "element record needs a name and a count"));
                }
                elements.push(PlyElement {
                    name: toks[1].to_string(),
                    count: parse_usize(ln, toks[2])?,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err(ln, "property before any element"))?;
                if toks.len() < 3 {
                    return Err(err(ln, "malformed property record"));
                }
                let is_list = toks[1] == "list";
                let name = *toks.last().unwrap();
                el.properties.push((name.to_string(), is_list));
            }
            "end_header" => {
                header_done = true;
                break;
            }
            other => return Err(err(ln, format!("unknown header record `{other}`"))),
        }
    }
    if !header_done {
        return Err(err(all.len(), "PLY header never ended"));
    }

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for el in &elements {
        if el.name == "vertex" {
            let find = |axis: &str| el.properties.iter().position(|(n, _)| n == axis);
            let (xi, yi, zi) = match (find("x"), find("y"), find("z")) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(err(1, "vertex element lacks x/y/z properties")),
            };
            if el.properties.iter().any(|(_, list)| *list) {
                return Err(err(1, "list properties on vertices are not supported"));
            }
            for _ in 0..el.count {
                let (ln, line) = it
                    .next()
                    .ok_or_else(|| err(all.len(), "unexpected end of PLY vertex data"))?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() < el.properties.len() {
                    return Err(err(ln, "vertex line shorter than property list"));
                }
                vertices.push([
                    parse_f64(ln, toks[xi])?,
                    parse_f64(ln, toks[yi])?,
                    parse_f64(ln, toks[zi])?,
                ]);
            }
        } else if el.name == "face" {
            for _ in 0..el.count {
                let (ln, line) = it
                    .next()
                    .ok_or_else(|| err(all.len(), "unexpected end of PLY face data"))?;
                let mut toks = line.split_whitespace();
                let mut face: Vec<usize> = Vec::new();
                for (pname, is_list) in &el.properties {
                    if *is_list {
                        let cnt = parse_usize(ln, toks.next().ok_or_else(|| {
                            err(ln, "face line missing list count")
                        })?)?;
                        let items: Vec<usize> = (0..cnt)
                            .map(|_| {
                                toks.next()
                                    .ok_or_else(|| err(ln, "face line truncated"))
                                    .and_then(|t| parse_usize(ln, t))
                            })
                            .collect::<Result<_, _>>()?;
                        if pname.starts_with("vertex_ind") || pname == "vertex_indices" {
                            face = items;
                        }
                    } else {
                        toks.next();
                    }
                }
                if face.len() != 3 {
                    return Err(err(
                        ln,
                        format!("only triangle faces supported, got {} corners", face.len()),
                    ));
                }
                faces.push([face[0], face[1], face[2]]);
            }
        } else {
            for _ in 0..el.count {
                it.next()
                    .ok_or_else(|| err(all.len(), "unexpected end of PLY data"))?;
            }
        }
    }
    Ok((vertices, faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET_OFF: &str = "OFF\n4 4 6\n1 1 1\n-1 -1 1\n-1 1 -1\n1 -1 -1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn off_tetrahedron() {
        let cleaned = load_mesh(TET_OFF.as_bytes(), MeshFormat::Off).unwrap();
        assert_eq!(cleaned.mesh.n_vertices(), 4);
        assert_eq!(cleaned.mesh.n_faces(), 4);
        assert_eq!(cleaned.mesh.n_edges(), 6);
    }

    #[test]
    fn off_header_on_one_line_and_comments() {
        let text = "# a comment\nOFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let cleaned = load_mesh(text.as_bytes(), MeshFormat::Off).unwrap();
        assert_eq!(cleaned.mesh.n_vertices(), 3);
    }

    #[test]
    fn off_reports_line_numbers() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 x\n0 1 0\n3 0 1 2\n";
        match load_mesh(text.as_bytes(), MeshFormat::Off) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn off_rejects_non_triangle() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(
            load_mesh(text.as_bytes(), MeshFormat::Off),
            Err(MeshError::Parse { .. })
        ));
    }

    #[test]
    fn obj_with_subindices_and_out_of_range() {
        let good = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2/3 3//2\n";
        let cleaned = load_mesh(good.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(cleaned.mesh.n_faces(), 1);

        let bad = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 2 2\nf 1 2 100\n";
        assert!(matches!(
            load_mesh(bad.as_bytes(), MeshFormat::Obj),
            Err(MeshError::Topology(_))
        ));
    }

    #[test]
    fn obj_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let cleaned = load_mesh(text.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(cleaned.mesh.face(0), [0, 1, 2]);
    }

    #[test]
    fn ply_ascii_roundtrip() {
        let text = "ply\nformat ascii 1.0\ncomment tet\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 4\nproperty list uchar int vertex_indices\nend_header\n1 1 1\n-1 -1 1\n-1 1 -1\n1 -1 -1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";
        let cleaned = load_mesh(text.as_bytes(), MeshFormat::PlyAscii).unwrap();
        assert_eq!(cleaned.mesh.n_vertices(), 4);
        assert_eq!(cleaned.mesh.n_edges(), 6);
    }

    #[test]
    fn ply_rejects_binary() {
        let text = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(matches!(
            load_mesh(text.as_bytes(), MeshFormat::PlyAscii),
            Err(MeshError::Parse { .. })
        ));
    }

    #[test]
    fn off_unreferenced_vertex_removed() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n5 5 5\n3 0 1 2\n";
        let cleaned = load_mesh(text.as_bytes(), MeshFormat::Off).unwrap();
        assert_eq!(cleaned.mesh.n_vertices(), 3);
        assert_eq!(cleaned.remap[3], None);
    }
}
