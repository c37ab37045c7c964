//! Region labels from ingested score tables, geodesic completion of partial
//! partitions, and fusion of per-region language embeddings into per-vertex
//! descriptors.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geodesics;
use crate::mat::Mat;
use crate::mesh::TriangleMesh;
use crate::viewlift::FeatureField;

#[derive(Debug, thiserror::Error)]
pub enum SemanticsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no labeled vertices to grow the partition from")]
    NoLabeledVertices,
    #[error("vertex {0} cannot reach any labeled vertex")]
    Unreachable(usize),
    #[error("partition is not complete")]
    IncompletePartition,
    #[error("no embedding for region {0}")]
    MissingEmbedding(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Geodesic(#[from] geodesics::GeodesicError),
}

/// Per-vertex region labels (`None` = unlabeled) plus the region names.
#[derive(Clone, Debug)]
pub struct SemanticPartition {
    pub labels: Vec<Option<u32>>,
    pub region_names: Vec<String>,
}

impl SemanticPartition {
    pub fn n_regions(&self) -> usize {
        self.region_names.len()
    }

    pub fn is_complete(&self) -> bool {
        self.labels.iter().all(|l| l.is_some())
    }

    pub fn region_vertices(&self, region: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(region as u32))
            .map(|(i, _)| i)
            .collect()
    }

    /// Regions that ended up with no vertices; they are dropped from graph
    /// construction and reported in run manifests.
    pub fn empty_regions(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_regions()];
        for l in self.labels.iter().flatten() {
            counts[*l as usize] += 1;
        }
        counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == 0)
            .map(|(r, _)| r)
            .collect()
    }

    /// Labels as plain indices; fails if any vertex is unlabeled.
    pub fn complete_labels(&self) -> Result<Vec<usize>, SemanticsError> {
        self.labels
            .iter()
            .map(|l| l.map(|v| v as usize).ok_or(SemanticsError::IncompletePartition))
            .collect()
    }
}

/// Ingested per-vertex region scores, `n x N`.
#[derive(Clone, Debug)]
pub struct ScoreTable {
    pub scores: Mat,
}

impl ScoreTable {
    pub fn new(scores: Mat) -> Result<Self, SemanticsError> {
        if !scores.is_finite() {
            return Err(SemanticsError::NonFinite("score table".into()));
        }
        Ok(ScoreTable { scores })
    }
}

/// Ingested language embeddings, one row per region prompt.
#[derive(Clone, Debug)]
pub struct LanguageTable {
    pub embeddings: Mat,
    pub encoder: String,
}

impl LanguageTable {
    pub fn new(embeddings: Mat, encoder: String) -> Result<Self, SemanticsError> {
        if !embeddings.is_finite() {
            return Err(SemanticsError::NonFinite("language table".into()));
        }
        for r in 0..embeddings.rows() {
            let norm_sq: f64 = embeddings.row(r).iter().map(|v| v * v).sum();
            if norm_sq <= 0.0 {
                return Err(SemanticsError::MissingEmbedding(r));
            }
        }
        Ok(LanguageTable {
            embeddings,
            encoder,
        })
    }
}

/// Argmax labeling: region of highest score when the maximum clears
/// `threshold`, otherwise unlabeled; score ties go to the smallest region.
pub fn labels_from_scores(
    table: &ScoreTable,
    region_names: &[String],
    threshold: f64,
) -> Result<SemanticPartition, SemanticsError> {
    let n_regions = region_names.len();
    if n_regions == 0 || table.scores.cols() != n_regions {
        return Err(SemanticsError::DimensionMismatch(format!(
            "score table has {} columns for {} regions",
            table.scores.cols(),
            n_regions
        )));
    }
    let labels = (0..table.scores.rows())
        .map(|u| {
            let row = table.scores.row(u);
            let mut best = 0usize;
            for (t, &s) in row.iter().enumerate() {
                if s > row[best] {
                    best = t;
                }
            }
            (row[best] >= threshold).then_some(best as u32)
        })
        .collect();
    Ok(SemanticPartition {
        labels,
        region_names: region_names.to_vec(),
    })
}

/// Assign every unlabeled vertex the label of its geodesically nearest
/// labeled vertex (one multi-source field per region; distance ties go to
/// the smallest region index). Labeled vertices are never changed.
pub fn complete_partition(
    partial: &SemanticPartition,
    mesh: &TriangleMesh,
) -> Result<SemanticPartition, SemanticsError> {
    let n = mesh.n_vertices();
    if partial.labels.len() != n {
        return Err(SemanticsError::DimensionMismatch(format!(
            "{} labels for a {n}-vertex mesh",
            partial.labels.len()
        )));
    }
    if partial.labels.iter().all(|l| l.is_none()) {
        return Err(SemanticsError::NoLabeledVertices);
    }
    if partial.is_complete() {
        return Ok(partial.clone());
    }

    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_label: Vec<Option<u32>> = vec![None; n];
    for region in 0..partial.n_regions() {
        let sources = partial.region_vertices(region);
        if sources.is_empty() {
            continue;
        }
        let field = geodesics::single_source(mesh, &sources)?;
        for v in 0..n {
            if field.dist[v] < best_dist[v] {
                best_dist[v] = field.dist[v];
                best_label[v] = Some(region as u32);
            }
        }
    }

    let labels = (0..n)
        .map(|v| match partial.labels[v] {
            Some(l) => Ok(Some(l)),
            None => best_label[v]
                .map(Some)
                .ok_or(SemanticsError::Unreachable(v)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SemanticPartition {
        labels,
        region_names: partial.region_names.clone(),
    })
}

/// Append the (L2-normalized, `weight`-scaled) language embedding of each
/// vertex's region to its visual feature row.
pub fn fuse_language(
    visual: &FeatureField,
    partition: &SemanticPartition,
    table: &LanguageTable,
    weight: f64,
) -> Result<FeatureField, SemanticsError> {
    let n = visual.rows();
    if partition.labels.len() != n {
        return Err(SemanticsError::DimensionMismatch(format!(
            "{} labels for {n} feature rows",
            partition.labels.len()
        )));
    }
    if !partition.is_complete() {
        return Err(SemanticsError::IncompletePartition);
    }
    let d_vis = visual.cols();
    let d_lang = table.embeddings.cols();

    // one normalized block per region, shared by all its vertices
    let mut blocks = Mat::zeros(partition.n_regions(), d_lang);
    for r in 0..partition.n_regions() {
        if r >= table.embeddings.rows() {
            return Err(SemanticsError::MissingEmbedding(r));
        }
        let row = table.embeddings.row(r);
        let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
        for (out, &v) in blocks.row_mut(r).iter_mut().zip(row) {
            *out = weight * v / norm;
        }
    }

    let mut out = Mat::zeros(n, d_vis + d_lang);
    for u in 0..n {
        out.row_mut(u)[..d_vis].copy_from_slice(visual.row(u));
        let label = partition.labels[u].unwrap() as usize;
        out.row_mut(u)[d_vis..].copy_from_slice(blocks.row(label));
    }
    Ok(out)
}

/// Default fusion weight: half the RMS row norm of the visual block, so the
/// language block carries comparable but not dominating influence.
pub fn default_language_weight(visual: &FeatureField) -> f64 {
    if visual.rows() == 0 {
        return 0.0;
    }
    let mean_sq: f64 = (0..visual.rows())
        .map(|r| visual.row(r).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / visual.rows() as f64;
    0.5 * libm::sqrt(mean_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use alloc::string::ToString;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("region{i}")).collect()
    }

    #[test]
    fn argmax_thresholds_and_ties() {
        let scores = Mat::from_rows(&[&[0.1, 0.9], &[0.2, 0.2], &[0.05, 0.04]]);
        let table = ScoreTable::new(scores).unwrap();
        let p = labels_from_scores(&table, &names(2), 0.1).unwrap();
        assert_eq!(p.labels, vec![Some(1), Some(0), None]);
        // threshold 0: everything labeled, ties to smallest
        let p0 = labels_from_scores(&table, &names(2), 0.0).unwrap();
        assert_eq!(p0.labels, vec![Some(1), Some(0), Some(0)]);
    }

    #[test]
    fn completion_on_chain() {
        // v0(A) - v1(?) - v2(?) - v3(B): v1 is nearer A, v2 nearer B
        let mesh = synth::strip_chain(4);
        let partial = SemanticPartition {
            labels: vec![Some(0), None, None, Some(1)],
            region_names: names(2),
        };
        let full = complete_partition(&partial, &mesh).unwrap();
        assert_eq!(full.labels, vec![Some(0), Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn completion_single_label_floods() {
        let mesh = synth::icosphere(1);
        let mut labels = vec![None; mesh.n_vertices()];
        labels[7] = Some(0);
        let partial = SemanticPartition {
            labels,
            region_names: names(1),
        };
        let full = complete_partition(&partial, &mesh).unwrap();
        assert!(full.labels.iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn completion_is_idempotent_and_preserves_labels() {
        let mesh = synth::icosphere(1);
        let n = mesh.n_vertices();
        let labels: Vec<Option<u32>> = (0..n)
            .map(|v| (v % 3 == 0).then_some((v % 2) as u32))
            .collect();
        let partial = SemanticPartition {
            labels: labels.clone(),
            region_names: names(2),
        };
        let full = complete_partition(&partial, &mesh).unwrap();
        assert!(full.is_complete());
        for v in 0..n {
            if let Some(l) = labels[v] {
                assert_eq!(full.labels[v], Some(l));
            }
        }
        let again = complete_partition(&full, &mesh).unwrap();
        assert_eq!(again.labels, full.labels);
    }

    #[test]
    fn completion_stable_under_label_permutation() {
        // irregular mesh so no two regions tie exactly; at exact ties the
        // smallest-region rule is deliberately not permutation-equivariant
        let mesh = synth::random_fan(40, 77);
        let n = mesh.n_vertices();
        let labels: Vec<Option<u32>> = (0..n)
            .map(|v| (v % 5 == 0).then_some((v % 3) as u32))
            .collect();
        let base = complete_partition(
            &SemanticPartition {
                labels: labels.clone(),
                region_names: names(3),
            },
            &mesh,
        )
        .unwrap();
        // permute labels 0->2, 1->0, 2->1 (a cyclic shift keeps tie order
        // consistent only when ties are absent; use tie-free input)
        let perm = [2u32, 0, 1];
        let permuted: Vec<Option<u32>> = labels.iter().map(|l| l.map(|v| perm[v as usize])).collect();
        let out = complete_partition(
            &SemanticPartition {
                labels: permuted,
                region_names: names(3),
            },
            &mesh,
        )
        .unwrap();
        let mut mismatches = 0;
        for v in 0..n {
            if out.labels[v] != base.labels[v].map(|l| perm[l as usize]) {
                mismatches += 1;
            }
        }
        // ties between regions can flip under permutation; none should exist
        // on this irregular labeling
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn no_labels_rejected() {
        let mesh = synth::tetrahedron();
        let partial = SemanticPartition {
            labels: vec![None; 4],
            region_names: names(2),
        };
        assert!(matches!(
            complete_partition(&partial, &mesh),
            Err(SemanticsError::NoLabeledVertices)
        ));
    }

    #[test]
    fn fusion_concatenates_and_scales() {
        let visual = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let partition = SemanticPartition {
            labels: vec![Some(0), Some(1), Some(0)],
            region_names: names(2),
        };
        let table = LanguageTable::new(
            Mat::from_rows(&[&[3.0, 0.0, 4.0], &[0.0, 2.0, 0.0]]),
            "test-encoder".to_string(),
        )
        .unwrap();
        let fused = fuse_language(&visual, &partition, &table, 2.0).unwrap();
        assert_eq!(fused.cols(), 5);
        // visual block untouched
        for u in 0..3 {
            assert_eq!(&fused.row(u)[..2], visual.row(u));
        }
        // normalized embedding [0.6, 0, 0.8] scaled by 2
        assert_eq!(&fused.row(0)[2..], &[1.2, 0.0, 1.6]);
        // same region, same block
        assert_eq!(&fused.row(0)[2..], &fused.row(2)[2..]);
        // weight 0 zeroes the language block
        let zero = fuse_language(&visual, &partition, &table, 0.0).unwrap();
        assert!(zero.row(1)[2..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fusion_requires_complete_partition_and_embeddings() {
        let visual = Mat::zeros(2, 2);
        let incomplete = SemanticPartition {
            labels: vec![Some(0), None],
            region_names: names(1),
        };
        let table =
            LanguageTable::new(Mat::from_rows(&[&[1.0, 0.0]]), "e".to_string()).unwrap();
        assert!(matches!(
            fuse_language(&visual, &incomplete, &table, 1.0),
            Err(SemanticsError::IncompletePartition)
        ));

        let partition = SemanticPartition {
            labels: vec![Some(0), Some(1)],
            region_names: names(2),
        };
        assert!(matches!(
            fuse_language(&visual, &partition, &table, 1.0),
            Err(SemanticsError::MissingEmbedding(1))
        ));
    }

    #[test]
    fn zero_norm_embedding_rejected() {
        let m = Mat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(
            LanguageTable::new(m, "e".to_string()),
            Err(SemanticsError::MissingEmbedding(1))
        ));
    }
}
