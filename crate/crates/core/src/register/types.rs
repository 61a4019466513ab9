//! Shared registration types: orthogonal matrices, direction sets, search
//! configuration and result bundles.

use crate::error::{Error, Result};
use crate::geometry::Correspondence;
use crate::transport::TransportPlan;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Frobenius tolerance for membership in `O(n)`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// A validated member of `O(n)`. Reflections (determinant -1) are allowed;
/// they are what absorbs eigenfunction sign flips.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    m: DMatrix<f64>,
}

impl OrthogonalMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Validates `|R R^T - I|_F <= 1e-10`.
    pub fn try_new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = orthogonality_defect(&m);
        if !(defect <= ORTHOGONALITY_TOL) {
            return Err(Error::DegenerateInput(format!(
                "matrix is {defect:.3e} away from O(n)"
            )));
        }
        Ok(Self { m })
    }

    /// Wraps without the membership check. Exists so energies can be
    /// evaluated off the manifold (finite differences in tests); not part of
    /// the public contract.
    #[doc(hidden)]
    pub fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    /// Signed permutation: entry `(i, perm[i])` carries `signs[i]`.
    pub fn signed_permutation(perm: &[usize], signs: &[f64]) -> Result<Self> {
        let n = perm.len();
        if signs.len() != n {
            return Err(Error::DimensionMismatch(
                "permutation and signs disagree".into(),
            ));
        }
        let mut seen = vec![false; n];
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if perm[i] >= n || seen[perm[i]] {
                return Err(Error::DegenerateInput("not a permutation".into()));
            }
            if signs[i].abs() != 1.0 {
                return Err(Error::DegenerateInput("signs must be +-1".into()));
            }
            seen[perm[i]] = true;
            m[(i, perm[i])] = signs[i];
        }
        Ok(Self { m })
    }

    /// Uniform-ish random sample of `O(n)`: QR of a Gaussian matrix with a
    /// coin flip for the reflection component.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        // Fix the sign convention so the distribution is Haar.
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                for i in 0..n {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        if rng.gen_bool(0.5) {
            for i in 0..n {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        Self { m: q }
    }

    /// Embeds into the top-left block of the identity on `R^n`; the warm
    /// start used when the multi-scale driver widens the embedding.
    pub fn block_embed(&self, n: usize) -> Result<Self> {
        let k = self.dim();
        if n < k {
            return Err(Error::DimensionMismatch(format!(
                "cannot embed {k}x{k} rotation into dimension {n}"
            )));
        }
        let mut m = DMatrix::identity(n, n);
        m.view_mut((0, 0), (k, k)).copy_from(&self.m);
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.m)
    }

    /// Frobenius distance to another matrix.
    pub fn distance_to(&self, other: &OrthogonalMatrix) -> f64 {
        (&self.m - &other.m).norm()
    }
}

pub(crate) fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m * m.transpose() - DMatrix::<f64>::identity(n, n)).norm()
}

/// All `n! * 2^n` signed permutation matrices; the restart grid for the
/// desk-scale robust Wasserstein distance. Guarded to small `n`.
pub fn signed_permutations(n: usize) -> Result<Vec<OrthogonalMatrix>> {
    if n == 0 || n > 6 {
        return Err(Error::SizeLimitExceeded(format!(
            "signed permutation enumeration is limited to 1 <= n <= 6, got {n}"
        )));
    }
    let mut perms = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    heap_permutations(&mut idx, n, &mut perms);
    let mut out = Vec::with_capacity(perms.len() << n);
    for perm in &perms {
        for mask in 0..(1usize << n) {
            let signs: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            out.push(OrthogonalMatrix::signed_permutation(perm, &signs)?);
        }
    }
    Ok(out)
}

fn heap_permutations(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(idx.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(idx, k - 1, out);
        if k % 2 == 0 {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// A seeded set of unit projection directions on `S^{n-1}`. Regeneration
/// from `(len, dim, seed)` is bitwise reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dirs: DMatrix<f64>,
    seed: u64,
}

impl DirectionSet {
    /// `count` unit-normalized standard Gaussian rows.
    pub fn sample(count: usize, dim: usize, seed: u64) -> Result<Self> {
        if count == 0 || dim == 0 {
            return Err(Error::DegenerateInput(
                "direction set needs count >= 1 and dim >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dirs = DMatrix::zeros(count, dim);
        for l in 0..count {
            loop {
                let mut norm2 = 0.0;
                for k in 0..dim {
                    let v: f64 = rng.sample(StandardNormal);
                    dirs[(l, k)] = v;
                    norm2 += v * v;
                }
                if norm2 > 1e-18 {
                    let norm = norm2.sqrt();
                    for k in 0..dim {
                        dirs[(l, k)] /= norm;
                    }
                    break;
                }
            }
        }
        Ok(Self { dirs, seed })
    }

    pub fn len(&self) -> usize {
        self.dirs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.dirs.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One direction as a row view.
    pub fn row(&self, l: usize) -> nalgebra::RowDVectorView<'_, f64> {
        self.dirs.row(l)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dirs
    }

    /// Reorders the directions; the sliced value is invariant under this.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::DimensionMismatch("bad direction order".into()));
        }
        let mut dirs = DMatrix::zeros(self.len(), self.dim());
        for (l, &src) in order.iter().enumerate() {
            dirs.set_row(l, &self.dirs.row(src));
        }
        Ok(Self {
            dirs,
            seed: self.seed,
        })
    }
}

/// Parameters of the nonmonotone curvilinear search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvilinearConfig {
    /// Sufficient-decrease constant.
    pub rho: f64,
    /// Backtracking factor.
    pub delta: f64,
    /// Nonmonotone averaging memory.
    pub xi: f64,
    /// Stop when the Riemannian gradient norm falls below this.
    pub epsilon: f64,
    /// Cap on inner (search) iterations per outer step.
    pub max_inner: usize,
    /// Cap on outer (plan refresh) iterations.
    pub max_outer: usize,
}

impl Default for CurvilinearConfig {
    fn default() -> Self {
        Self {
            rho: 1e-4,
            delta: 0.1,
            xi: 0.85,
            epsilon: 1e-8,
            max_inner: 100,
            max_outer: 50,
        }
    }
}

impl CurvilinearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::DegenerateInput(format!("rho {} not in (0,1)", self.rho)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::DegenerateInput(format!(
                "delta {} not in (0,1)",
                self.delta
            )));
        }
        if !(self.xi >= 0.0 && self.xi < 1.0) {
            return Err(Error::DegenerateInput(format!("xi {} not in [0,1)", self.xi)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Per-level summary of a multi-scale run.
#[derive(Debug, Clone)]
pub struct ScaleReport {
    pub level: usize,
    /// Embedding dimension at this level.
    pub dim: usize,
    pub directions: usize,
    pub iterations: usize,
    pub final_energy: f64,
    pub energy_trace: Vec<f64>,
    pub correspondence: Correspondence,
}

/// Everything a registration run produces: the aligning orthogonal matrix,
/// the coupling, the per-iteration energies and the extracted map.
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub rotation: OrthogonalMatrix,
    pub plan: TransportPlan,
    pub energy_trace: Vec<f64>,
    pub correspondence: Correspondence,
    pub scale_reports: Option<Vec<ScaleReport>>,
}

impl RegistrationResult {
    pub fn final_energy(&self) -> f64 {
        *self.energy_trace.last().expect("non-empty trace")
    }

    pub fn initial_energy(&self) -> f64 {
        self.energy_trace[0]
    }
}

/// Direction counts used in the single-scale experiments, by embedding
/// dimension.
pub fn default_direction_count(n: usize) -> usize {
    match n {
        0..=5 => 1000,
        6..=10 => 1500,
        11..=20 => 2000,
        21..=30 => 3000,
        31..=50 => 5000,
        _ => 100 * n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_permutation_counts() {
        assert_eq!(signed_permutations(1).unwrap().len(), 2);
        assert_eq!(signed_permutations(3).unwrap().len(), 48);
        assert!(signed_permutations(9).is_err());
    }

    #[test]
    fn directions_are_unit_and_reproducible() {
        let a = DirectionSet::sample(64, 7, 123).unwrap();
        let b = DirectionSet::sample(64, 7, 123).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        for l in 0..a.len() {
            assert!((a.row(l).norm() - 1.0).abs() < 1e-12);
        }
        let c = DirectionSet::sample(64, 7, 124).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [1usize, 2, 5, 9] {
            let r = OrthogonalMatrix::random(n, &mut rng);
            assert!(r.orthogonality_defect() < 1e-12);
        }
    }

    #[test]
    fn block_embed_preserves_orthogonality() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let r = OrthogonalMatrix::random(3, &mut rng);
        let big = r.block_embed(7).unwrap();
        assert!(big.orthogonality_defect() < 1e-12);
        assert_eq!(big.matrix()[(5, 5)], 1.0);
        assert_eq!(big.matrix()[(0, 1)], r.matrix()[(0, 1)]);
        assert!(r.block_embed(2).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = CurvilinearConfig::default();
        assert!(c.validate().is_ok());
        c.delta = 1.5;
        assert!(c.validate().is_err());
    }
}
