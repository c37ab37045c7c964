//! Graph geodesics: multi-source Dijkstra over the mesh edge graph with
//! Euclidean edge lengths. Used for region completion, semantic edge
//! weights, zero-visibility fill, and error evaluation.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::mat::Mat;
use crate::mesh::{MeshError, TriangleMesh, AREA_EPS};

#[derive(Debug, thiserror::Error)]
pub enum GeodesicError {
    #[error("empty source set")]
    EmptySourceSet,
    #[error("vertex index {index} out of range for a {n}-vertex mesh")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Distance field from a set of source vertices.
#[derive(Clone, Debug)]
pub struct GeodesicField {
    /// Distance to the nearest source (`f64::INFINITY` when unreachable).
    pub dist: Vec<f64>,
    /// Nearest source vertex per vertex (ties go to the smallest source
    /// index); meaningless where `dist` is infinite.
    pub nearest_source: Vec<usize>,
    /// Set when the mesh is disconnected and some vertex was unreachable.
    pub has_unreachable: bool,
}

struct HeapItem {
    dist: f64,
    source: usize,
    vertex: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for smallest (dist, source, vertex)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.source.cmp(&self.source))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Multi-source Dijkstra; distance to the nearest source per vertex.
pub fn single_source(
    mesh: &TriangleMesh,
    sources: &[usize],
) -> Result<GeodesicField, GeodesicError> {
    let n = mesh.n_vertices();
    if sources.is_empty() {
        return Err(GeodesicError::EmptySourceSet);
    }
    for &s in sources {
        if s >= n {
            return Err(GeodesicError::IndexOutOfRange { index: s, n });
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut nearest = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s] > 0.0 || nearest[s] > s {
            dist[s] = 0.0;
            nearest[s] = nearest[s].min(s);
            heap.push(HeapItem {
                dist: 0.0,
                source: nearest[s],
                vertex: s,
            });
        }
    }
    while let Some(HeapItem {
        dist: d,
        source,
        vertex,
    }) = heap.pop()
    {
        if (d, source) != (dist[vertex], nearest[vertex]) {
            continue;
        }
        for &w in mesh.neighbors(vertex) {
            let nd = d + mesh.edge_length([vertex, w]);
            if nd < dist[w] || (nd == dist[w] && source < nearest[w]) {
                dist[w] = nd;
                nearest[w] = source;
                heap.push(HeapItem {
                    dist: nd,
                    source,
                    vertex: w,
                });
            }
        }
    }
    let has_unreachable = dist.iter().any(|d| d.is_infinite());
    Ok(GeodesicField {
        dist,
        nearest_source: nearest,
        has_unreachable,
    })
}

/// `|a| x |b|` matrix of graph distances between two vertex subsets.
pub fn pairwise_subset(
    mesh: &TriangleMesh,
    subset_a: &[usize],
    subset_b: &[usize],
) -> Result<Mat, GeodesicError> {
    if subset_a.is_empty() || subset_b.is_empty() {
        return Err(GeodesicError::EmptySourceSet);
    }
    let mut out = Mat::zeros(subset_a.len(), subset_b.len());
    for (i, &a) in subset_a.iter().enumerate() {
        let field = single_source(mesh, &[a])?;
        for (j, &b) in subset_b.iter().enumerate() {
            if b >= mesh.n_vertices() {
                return Err(GeodesicError::IndexOutOfRange {
                    index: b,
                    n: mesh.n_vertices(),
                });
            }
            *out.at_mut(i, j) = field.dist[b];
        }
    }
    Ok(out)
}

/// Global length scale for normalized geodesic errors: sqrt of total area.
pub fn normalization_scale(mesh: &TriangleMesh) -> Result<f64, MeshError> {
    let area = mesh.total_area();
    if area < AREA_EPS {
        return Err(MeshError::DegenerateGeometry(
            "total surface area is numerically zero".into(),
        ));
    }
    Ok(libm::sqrt(area))
}
