//! Camera sampling, visibility, and lifting of per-view 2D feature images
//! onto mesh vertices by visibility-weighted averaging.

mod raster;

pub use raster::{rasterize, raycast_visibility, render_attribute_image, RasterOutput};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geodesics;
use crate::mat::Mat;
use crate::mesh::{cross3, norm3, TriangleMesh};

/// Per-vertex descriptor matrix (`n x d`): lifted visual features, fused
/// semantic descriptors, or adapter outputs.
pub type FeatureField = Mat;

pub const NEAR_PLANE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum ViewError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("camera near plane clips the mesh")]
    CameraInsideMesh,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no vertex is visible in any view")]
    AllInvisible,
    #[error(transparent)]
    Geodesic(#[from] geodesics::GeodesicError),
}

/// Perspective camera on the view sphere, looking at the origin. The mesh is
/// assumed normalized into the unit sphere, and the intrinsics must keep
/// that sphere fully inside the image.
#[derive(Clone, Debug)]
pub struct Camera {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub radius: f64,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
    position: [f64; 3],
    right: [f64; 3],
    up: [f64; 3],
    forward: [f64; 3],
}

impl Camera {
    pub fn new(
        azimuth_deg: f64,
        elevation_deg: f64,
        radius: f64,
        fov_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Camera, ViewError> {
        if width < 16 || height < 16 {
            return Err(ViewError::InvalidCamera(format!(
                "image size {width}x{height} below 16x16"
            )));
        }
        if radius <= 1.0 {
            return Err(ViewError::InvalidCamera(format!(
                "radius {radius} must exceed the unit sphere"
            )));
        }
        if !(1.0..180.0).contains(&fov_deg) {
            return Err(ViewError::InvalidCamera(format!("fov {fov_deg} degrees")));
        }
        // the unit sphere's angular radius must fit the narrower fov
        let aspect = width as f64 / height as f64;
        let tan_v = libm::tan(fov_deg.to_radians() / 2.0);
        let half_fov_h = libm::atan(tan_v * aspect);
        let half_fov_min = (fov_deg.to_radians() / 2.0).min(half_fov_h);
        let sphere_angle = libm::asin(1.0 / radius);
        if sphere_angle > half_fov_min {
            return Err(ViewError::InvalidCamera(format!(
                "unit sphere (angular radius {:.1} deg) overflows the {:.1} deg half-fov; \
                 increase radius or fov",
                sphere_angle.to_degrees(),
                half_fov_min.to_degrees()
            )));
        }

        let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
        let position = [
            radius * libm::cos(el) * libm::cos(az),
            radius * libm::sin(el),
            radius * libm::cos(el) * libm::sin(az),
        ];
        let fwd_unnorm = [-position[0], -position[1], -position[2]];
        let fn_ = norm3(fwd_unnorm);
        let forward = [fwd_unnorm[0] / fn_, fwd_unnorm[1] / fn_, fwd_unnorm[2] / fn_];
        let world_up = [0.0, 1.0, 0.0];
        let right_unnorm = cross3(forward, world_up);
        let rn = norm3(right_unnorm);
        if rn < 1e-9 {
            return Err(ViewError::InvalidCamera(
                "camera looks along the up axis".into(),
            ));
        }
        let right = [
            right_unnorm[0] / rn,
            right_unnorm[1] / rn,
            right_unnorm[2] / rn,
        ];
        let up = cross3(right, forward);
        Ok(Camera {
            azimuth_deg,
            elevation_deg,
            radius,
            fov_deg,
            width,
            height,
            position,
            right,
            up,
            forward,
        })
    }

    pub fn position(&self) -> [f64; 3] {
        self.position
    }

    /// Project a world point to continuous pixel coordinates plus eye-space
    /// depth; no clipping is applied.
    pub fn project_unclipped(&self, p: [f64; 3]) -> (f64, f64, f64) {
        let d = [
            p[0] - self.position[0],
            p[1] - self.position[1],
            p[2] - self.position[2],
        ];
        let x = d[0] * self.right[0] + d[1] * self.right[1] + d[2] * self.right[2];
        let y = d[0] * self.up[0] + d[1] * self.up[1] + d[2] * self.up[2];
        let z = d[0] * self.forward[0] + d[1] * self.forward[1] + d[2] * self.forward[2];
        let tan_v = libm::tan(self.fov_deg.to_radians() / 2.0);
        let aspect = self.width as f64 / self.height as f64;
        let ndc_x = x / (z * tan_v * aspect);
        let ndc_y = y / (z * tan_v);
        let px = (ndc_x + 1.0) * 0.5 * self.width as f64;
        let py = (1.0 - ndc_y) * 0.5 * self.height as f64;
        (px, py, z)
    }
}

/// Deterministic view ring: azimuths at `360 i / K` degrees, elevations
/// cycling through a fixed four-level ladder. The seed does not perturb the
/// angles; it is carried so run manifests can echo it.
pub const ELEVATION_LADDER_DEG: [f64; 4] = [-30.0, 0.0, 30.0, 60.0];

pub fn sample_cameras(
    k: usize,
    radius: f64,
    fov_deg: f64,
    height: usize,
    width: usize,
    _seed: u64,
) -> Result<Vec<Camera>, ViewError> {
    assert!(k >= 1, "need at least one view");
    (0..k)
        .map(|i| {
            Camera::new(
                360.0 * i as f64 / k as f64,
                ELEVATION_LADDER_DEG[i % ELEVATION_LADDER_DEG.len()],
                radius,
                fov_deg,
                width,
                height,
            )
        })
        .collect()
}

/// One view's feature image, `H x W x D` row-major.
#[derive(Clone, Debug)]
pub struct FeatureImage {
    pub view: usize,
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FeatureImage {
    pub fn constant(view: usize, height: usize, width: usize, value: &[f64]) -> Self {
        let dim = value.len();
        let mut data = vec![0.0; height * width * dim];
        for px in 0..height * width {
            data[px * dim..(px + 1) * dim].copy_from_slice(value);
        }
        FeatureImage {
            view,
            height,
            width,
            dim,
            data,
        }
    }

    #[inline]
    pub fn texel(&self, x: usize, y: usize) -> &[f64] {
        let idx = y * self.width + x;
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Bilinear sample at continuous pixel coordinates (texel centers at
    /// half-pixel offsets), clamped at the borders.
    pub fn sample_bilinear(&self, px: f64, py: f64, out: &mut [f64]) {
        let fx = (px - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (py - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx as usize;
        let y0 = fy as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let (t00, t10, t01, t11) = (
            self.texel(x0, y0),
            self.texel(x1, y0),
            self.texel(x0, y1),
            self.texel(x1, y1),
        );
        for k in 0..self.dim {
            out[k] = (1.0 - tx) * (1.0 - ty) * t00[k]
                + tx * (1.0 - ty) * t10[k]
                + (1.0 - tx) * ty * t01[k]
                + tx * ty * t11[k];
        }
    }
}

/// Per-vertex visibility flags per view.
#[derive(Clone, Debug)]
pub struct VisibilityRecord {
    pub per_view: Vec<Vec<bool>>,
}

impl VisibilityRecord {
    pub fn from_rasters(rasters: &[RasterOutput]) -> Self {
        VisibilityRecord {
            per_view: rasters.iter().map(|r| r.visible.clone()).collect(),
        }
    }

    pub fn n_views(&self) -> usize {
        self.per_view.len()
    }
}

/// Visibility-weighted average of bilinear image samples per vertex.
/// Vertices visible nowhere inherit the feature of their geodesically
/// nearest visible vertex.
pub fn lift_features(
    mesh: &TriangleMesh,
    cameras: &[Camera],
    images: &[FeatureImage],
    visibility: &VisibilityRecord,
) -> Result<FeatureField, ViewError> {
    let n = mesh.n_vertices();
    if cameras.len() != images.len() || cameras.len() != visibility.n_views() {
        return Err(ViewError::DimensionMismatch(format!(
            "{} cameras, {} images, {} visibility views",
            cameras.len(),
            images.len(),
            visibility.n_views()
        )));
    }
    if cameras.is_empty() {
        return Err(ViewError::DimensionMismatch("no views".into()));
    }
    let d = images[0].dim;
    for (cam, img) in cameras.iter().zip(images) {
        if img.dim != d {
            return Err(ViewError::DimensionMismatch(
                "feature dimension varies across views".into(),
            ));
        }
        if img.width != cam.width || img.height != cam.height {
            return Err(ViewError::DimensionMismatch(format!(
                "view {}: image {}x{} does not match camera {}x{}",
                img.view, img.width, img.height, cam.width, cam.height
            )));
        }
        if visibility.per_view[img.view.min(visibility.n_views() - 1)].len() != n {
            return Err(ViewError::DimensionMismatch(
                "visibility record does not match vertex count".into(),
            ));
        }
    }

    let mut out = Mat::zeros(n, d);
    let mut counts = vec![0usize; n];
    let mut sample = vec![0.0f64; d];
    for ((cam, img), vis) in cameras.iter().zip(images).zip(&visibility.per_view) {
        for v in 0..n {
            if !vis[v] {
                continue;
            }
            let (px, py, _) = cam.project_unclipped(mesh.vertex(v));
            img.sample_bilinear(px, py, &mut sample);
            for (o, s) in out.row_mut(v).iter_mut().zip(&sample) {
                *o += s;
            }
            counts[v] += 1;
        }
    }

    let seen: Vec<usize> = (0..n).filter(|&v| counts[v] > 0).collect();
    if seen.is_empty() {
        return Err(ViewError::AllInvisible);
    }
    for &v in &seen {
        let c = counts[v] as f64;
        for o in out.row_mut(v) {
            *o /= c;
        }
    }
    if seen.len() < n {
        let field = geodesics::single_source(mesh, &seen)?;
        for v in 0..n {
            if counts[v] == 0 {
                let src = field.nearest_source[v];
                let row = out.row(src).to_vec();
                out.row_mut(v).copy_from_slice(&row);
            }
        }
    }
    Ok(out)
}
