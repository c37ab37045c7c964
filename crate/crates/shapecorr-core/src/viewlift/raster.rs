//! Z-buffer rasterization of normalized meshes: depth and face-id buffers,
//! per-vertex visibility flags, and perspective-correct attribute rendering
//! (the synthetic stand-in for an external feature extractor).

use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;
use crate::mesh::{cross3, dot3, sub3, TriangleMesh};

use super::{Camera, FeatureImage, ViewError, NEAR_PLANE};

/// Per-view rasterization output.
#[derive(Clone, Debug)]
pub struct RasterOutput {
    /// Eye-space depth per pixel, row-major `H x W`; `f64::INFINITY` where
    /// nothing was drawn.
    pub depth: Vec<f64>,
    /// Face index per pixel; `-1` where nothing was drawn.
    pub face_id: Vec<i64>,
    /// Per-vertex visibility under the depth test.
    pub visible: Vec<bool>,
    /// Depth tolerance used for the visibility test.
    pub eps_z: f64,
}

struct Projected {
    px: f64,
    py: f64,
    depth: f64,
}

fn project_all(mesh: &TriangleMesh, cam: &Camera) -> Result<Vec<Projected>, ViewError> {
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for v in mesh.vertices() {
        let (px, py, depth) = cam.project_unclipped(*v);
        if depth < NEAR_PLANE {
            return Err(ViewError::CameraInsideMesh);
        }
        out.push(Projected { px, py, depth });
    }
    Ok(out)
}

fn front_facing(mesh: &TriangleMesh, fi: usize, cam_pos: [f64; 3]) -> bool {
    let n = mesh.face_normal(fi);
    let [a, _, _] = mesh.face(fi);
    dot3(n, sub3(cam_pos, mesh.vertex(a))) > 0.0
}

/// Vertices this close to grazing (cosine of the angle between the vertex
/// normal and the direction to the camera) are treated as invisible; their
/// image samples would come from a nearly edge-on surface.
pub const GRAZING_MARGIN: f64 = 0.05;

fn area_weighted_vertex_normal(mesh: &TriangleMesh, v: usize) -> [f64; 3] {
    let mut n = [0.0f64; 3];
    for &f in mesh.incident_faces(v) {
        let fnorm = mesh.face_normal(f); // length is twice the face area
        for a in 0..3 {
            n[a] += fnorm[a];
        }
    }
    let len = libm::sqrt(dot3(n, n));
    if len > 0.0 {
        for a in n.iter_mut() {
            *a /= len;
        }
    }
    n
}

/// Rasterize with backface culling, then derive per-vertex visibility: a
/// vertex is visible when it projects inside the image, belongs to at least
/// one front-facing face, and either passes the depth test within `eps_z`
/// (one part in a thousand of the scene's depth range) or owns the pixel's
/// face.
pub fn rasterize(mesh: &TriangleMesh, cam: &Camera) -> Result<RasterOutput, ViewError> {
    let (w, h) = (cam.width, cam.height);
    let proj = project_all(mesh, cam)?;

    let (mut zmin, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &proj {
        zmin = zmin.min(p.depth);
        zmax = zmax.max(p.depth);
    }
    let eps_z = ((zmax - zmin) * 1e-3).max(1e-9);

    let mut depth = vec![f64::INFINITY; w * h];
    let mut face_id = vec![-1i64; w * h];
    let cam_pos = cam.position();

    for fi in 0..mesh.n_faces() {
        if !front_facing(mesh, fi, cam_pos) {
            continue;
        }
        let [a, b, c] = mesh.face(fi);
        let (pa, pb, pc) = (&proj[a], &proj[b], &proj[c]);
        let denom = edge(pa, pb, pc.px, pc.py);
        if denom.abs() < 1e-12 {
            continue;
        }
        let x0 = libm::floor(pa.px.min(pb.px).min(pc.px)).max(0.0) as usize;
        let x1 = libm::ceil(pa.px.max(pb.px).max(pc.px)).min(w as f64) as usize;
        let y0 = libm::floor(pa.py.min(pb.py).min(pc.py)).max(0.0) as usize;
        let y1 = libm::ceil(pa.py.max(pb.py).max(pc.py)).min(h as f64) as usize;
        for y in y0..y1 {
            for x in x0..x1 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let w0 = edge(pb, pc, cx, cy) / denom;
                let w1 = edge(pc, pa, cx, cy) / denom;
                let w2 = edge(pa, pb, cx, cy) / denom;
                if w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12 {
                    continue;
                }
                // perspective-correct depth
                let inv_z = w0 / pa.depth + w1 / pb.depth + w2 / pc.depth;
                let z = 1.0 / inv_z;
                let idx = y * w + x;
                if z < depth[idx] {
                    depth[idx] = z;
                    face_id[idx] = fi as i64;
                }
            }
        }
    }

    let mut visible = vec![false; mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        if !mesh.incident_faces(v).iter().any(|&f| front_facing(mesh, f, cam_pos)) {
            continue;
        }
        let nv = area_weighted_vertex_normal(mesh, v);
        let to_cam = sub3(cam_pos, mesh.vertex(v));
        let dist = libm::sqrt(dot3(to_cam, to_cam));
        if dot3(nv, to_cam) < GRAZING_MARGIN * dist {
            continue;
        }
        let p = &proj[v];
        if p.px < 0.0 || p.py < 0.0 || p.px >= w as f64 || p.py >= h as f64 {
            continue;
        }
        visible[v] = probe_patch(mesh, v, p, &depth, &face_id, w, h, eps_z);
    }

    Ok(RasterOutput {
        depth,
        face_id,
        visible,
        eps_z,
    })
}

#[inline]
fn edge(a: &Projected, b: &Projected, px: f64, py: f64) -> f64 {
    (b.px - a.px) * (py - a.py) - (b.py - a.py) * (px - a.px)
}

/// Depth test for a vertex. Anything strictly nearer at the vertex's own
/// pixel occludes it. Otherwise the vertex counts as visible when its pixel
/// matches its depth or is empty (a vertex sits on the silhouette of its own
/// faces, so its pixel is often uncovered), or when some pixel of the 3x3
/// patch matches the depth or belongs to an incident face.
fn probe_patch(
    mesh: &TriangleMesh,
    v: usize,
    p: &Projected,
    depth: &[f64],
    face_id: &[i64],
    w: usize,
    h: usize,
    eps_z: f64,
) -> bool {
    let (cx, cy) = (p.px as i64, p.py as i64);
    let center = cy as usize * w + cx as usize;
    if p.depth > depth[center] + eps_z {
        return false;
    }
    if depth[center].is_infinite() || (p.depth - depth[center]).abs() < eps_z {
        return true;
    }
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            let (x, y) = (cx + dx, cy + dy);
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                continue;
            }
            let idx = y as usize * w + x as usize;
            if (p.depth - depth[idx]).abs() < eps_z {
                return true;
            }
            if face_id[idx] >= 0 && mesh.incident_faces(v).contains(&(face_id[idx] as usize)) {
                return true;
            }
        }
    }
    false
}

/// Render per-vertex attributes into an image with perspective-correct
/// interpolation; background pixels stay zero. Serves as the deterministic
/// feature extractor for synthetic pipelines and tests.
pub fn render_attribute_image(
    mesh: &TriangleMesh,
    cam: &Camera,
    attributes: &Mat,
    view: usize,
) -> Result<FeatureImage, ViewError> {
    if attributes.rows() != mesh.n_vertices() {
        return Err(ViewError::DimensionMismatch(alloc::format!(
            "{} attribute rows for {} vertices",
            attributes.rows(),
            mesh.n_vertices()
        )));
    }
    let (w, h) = (cam.width, cam.height);
    let d = attributes.cols();
    let proj = project_all(mesh, cam)?;
    let cam_pos = cam.position();
    let mut depth = vec![f64::INFINITY; w * h];
    let mut data = vec![0.0f64; w * h * d];

    for fi in 0..mesh.n_faces() {
        if !front_facing(mesh, fi, cam_pos) {
            continue;
        }
        let [a, b, c] = mesh.face(fi);
        let (pa, pb, pc) = (&proj[a], &proj[b], &proj[c]);
        let denom = edge(pa, pb, pc.px, pc.py);
        if denom.abs() < 1e-12 {
            continue;
        }
        let x0 = libm::floor(pa.px.min(pb.px).min(pc.px)).max(0.0) as usize;
        let x1 = libm::ceil(pa.px.max(pb.px).max(pc.px)).min(w as f64) as usize;
        let y0 = libm::floor(pa.py.min(pb.py).min(pc.py)).max(0.0) as usize;
        let y1 = libm::ceil(pa.py.max(pb.py).max(pc.py)).min(h as f64) as usize;
        for y in y0..y1 {
            for x in x0..x1 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let w0 = edge(pb, pc, cx, cy) / denom;
                let w1 = edge(pc, pa, cx, cy) / denom;
                let w2 = edge(pa, pb, cx, cy) / denom;
                if w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12 {
                    continue;
                }
                let iz0 = w0 / pa.depth;
                let iz1 = w1 / pb.depth;
                let iz2 = w2 / pc.depth;
                let inv_z = iz0 + iz1 + iz2;
                let z = 1.0 / inv_z;
                let idx = y * w + x;
                if z < depth[idx] {
                    depth[idx] = z;
                    let out = &mut data[idx * d..(idx + 1) * d];
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = (iz0 * attributes.at(a, k)
                            + iz1 * attributes.at(b, k)
                            + iz2 * attributes.at(c, k))
                            * z;
                    }
                }
            }
        }
    }
    // edge-pad the footprint so bilinear sampling at silhouettes does not
    // bleed background zeros; dense upsampled feature images behave this way
    dilate(&mut data, &mut depth, w, h, d, 2);

    Ok(FeatureImage {
        view,
        height: h,
        width: w,
        dim: d,
        data,
    })
}

/// Copy each covered pixel into uncovered 4-neighbors, `passes` times.
fn dilate(data: &mut [f64], depth: &mut [f64], w: usize, h: usize, d: usize, passes: usize) {
    for _ in 0..passes {
        let snapshot = depth.to_vec();
        for y in 0..h {
            for x in 0..w {
                let idx = y * w + x;
                if snapshot[idx].is_finite() {
                    continue;
                }
                let neighbors = [
                    (x > 0).then(|| idx - 1),
                    (x + 1 < w).then(|| idx + 1),
                    (y > 0).then(|| idx - w),
                    (y + 1 < h).then(|| idx + w),
                ];
                if let Some(src) = neighbors
                    .into_iter()
                    .flatten()
                    .find(|&s| snapshot[s].is_finite())
                {
                    let (a, b) = if src < idx {
                        let (lo, hi) = data.split_at_mut(idx * d);
                        (&lo[src * d..src * d + d], &mut hi[..d])
                    } else {
                        let (lo, hi) = data.split_at_mut(src * d);
                        (&hi[..d], &mut lo[idx * d..idx * d + d])
                    };
                    b.copy_from_slice(a);
                    depth[idx] = snapshot[src];
                }
            }
        }
    }
}

/// Ray-cast visibility oracle (Moller-Trumbore against every face); slow and
/// used only to cross-check the rasterizer in tests.
pub fn raycast_visibility(mesh: &TriangleMesh, cam: &Camera) -> Vec<bool> {
    let pos = cam.position();
    let mut out = vec![false; mesh.n_vertices()];
    'vertex: for v in 0..mesh.n_vertices() {
        let target = mesh.vertex(v);
        if !mesh.incident_faces(v).iter().any(|&f| front_facing(mesh, f, pos)) {
            continue;
        }
        let dir = sub3(target, pos);
        for fi in 0..mesh.n_faces() {
            let [a, b, c] = mesh.face(fi);
            if a == v || b == v || c == v {
                continue;
            }
            if let Some(t) = ray_triangle(
                pos,
                dir,
                mesh.vertex(a),
                mesh.vertex(b),
                mesh.vertex(c),
            ) {
                if t > 1e-9 && t < 1.0 - 1e-9 {
                    continue 'vertex; // occluded before reaching the vertex
                }
            }
        }
        out[v] = true;
    }
    out
}

fn ray_triangle(
    origin: [f64; 3],
    dir: [f64; 3],
    a: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
) -> Option<f64> {
    let e1 = sub3(b, a);
    let e2 = sub3(c, a);
    let p = cross3(dir, e2);
    let det = dot3(e1, p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = sub3(origin, a);
    let u = dot3(s, p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = cross3(s, e1);
    let v = dot3(dir, q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = dot3(e2, q) * inv;
    (t > 0.0).then_some(t)
}
