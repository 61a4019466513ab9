//! Connectivity transfer: push a source triangulation through a computed
//! correspondence and judge registration quality by how regular the induced
//! target mesh is.

use super::{Correspondence, PointCloud};
use crate::error::{Error, Result};

/// Result of a connectivity transfer.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    /// Target points carrying the transferred (non-degenerate) triangles.
    pub cloud: PointCloud,
    /// Number of source triangles pushed through the map.
    pub total_triangles: usize,
    /// Transferred triangles with three distinct target indices.
    pub non_degenerate: usize,
    /// `non_degenerate / total_triangles`.
    pub quality: f64,
    /// Total transferred edge length over the target mesh's own edge length,
    /// when the target has a triangulation of its own.
    pub edge_length_ratio: Option<f64>,
}

/// Applies `corr.assignment` to every source triangle. Degenerate images
/// (repeated target index) are counted but dropped from the returned mesh,
/// since they carry no surface.
pub fn transfer_connectivity(
    source: &PointCloud,
    target: &PointCloud,
    corr: &Correspondence,
) -> Result<TransferOutcome> {
    let tris = source.triangles().ok_or_else(|| {
        Error::MissingConnectivity("connectivity transfer needs source triangles".into())
    })?;
    if corr.source_size() != source.len() || corr.target_size() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "correspondence is {}x{} but shapes have {} and {} points",
            corr.source_size(),
            corr.target_size(),
            source.len(),
            target.len()
        )));
    }
    let a = corr.assignment();
    let mut transferred = Vec::with_capacity(tris.len());
    let mut non_degenerate = 0usize;
    for t in tris {
        let img = [a[t[0]], a[t[1]], a[t[2]]];
        if img[0] != img[1] && img[1] != img[2] && img[0] != img[2] {
            non_degenerate += 1;
            transferred.push(img);
        }
    }
    let quality = non_degenerate as f64 / tris.len().max(1) as f64;
    let cloud = PointCloud::with_measure(
        target.points().clone(),
        if transferred.is_empty() {
            None
        } else {
            Some(transferred)
        },
        target.measure().clone(),
        format!("{}-transfer", target.name()),
    )?;
    let edge_length_ratio = match (cloud.total_edge_length(), target.total_edge_length()) {
        (Some(got), Some(own)) if own > 0.0 => Some(got / own),
        _ => None,
    };
    Ok(TransferOutcome {
        cloud,
        total_triangles: tris.len(),
        non_degenerate,
        quality,
        edge_length_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_shape, ShapeKind};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    #[test]
    fn identity_correspondence_preserves_everything() {
        let mesh = generate_shape(ShapeKind::Sphere, 42, 0).unwrap();
        let corr = Correspondence::identity(mesh.len());
        let out = transfer_connectivity(&mesh, &mesh, &corr).unwrap();
        assert_eq!(out.quality, 1.0);
        assert_eq!(out.cloud.triangles(), mesh.triangles());
        let ratio = out.edge_length_ratio.unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_correspondence_degenerates_everything() {
        let mesh = generate_shape(ShapeKind::Sphere, 42, 0).unwrap();
        let corr = Correspondence::from_assignment(vec![0; mesh.len()], mesh.len()).unwrap();
        let out = transfer_connectivity(&mesh, &mesh, &corr).unwrap();
        assert_eq!(out.quality, 0.0);
        assert!(out.cloud.triangles().is_none());
    }

    #[test]
    fn permutation_transfer_reproduces_permuted_mesh() {
        let mesh = generate_shape(ShapeKind::Sphere, 42, 0).unwrap();
        let mut perm: Vec<usize> = (0..mesh.len()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let permuted = mesh.permuted(&perm).unwrap();
        let corr = Correspondence::from_assignment(perm.clone(), mesh.len()).unwrap();
        let out = transfer_connectivity(&mesh, &permuted, &corr).unwrap();
        assert_eq!(out.quality, 1.0);
        let mut got: Vec<[usize; 3]> = out.cloud.triangles().unwrap().to_vec();
        let mut want: Vec<[usize; 3]> = permuted.triangles().unwrap().to_vec();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let mesh = generate_shape(ShapeKind::Sphere, 42, 0).unwrap();
        let corr = Correspondence::identity(12);
        assert!(matches!(
            transfer_connectivity(&mesh, &mesh, &corr),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
