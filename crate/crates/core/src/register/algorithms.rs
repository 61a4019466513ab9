//! The registration drivers.
//!
//! - [`rwd_register`]: alternates the closed-form orthogonal alignment with
//!   an exact transport solve; the energy trace is non-increasing.
//! - [`rswd_register_alternating`]: alternates a curvilinear search on
//!   `O(n)` at frozen per-direction plans with a per-direction 1D refresh;
//!   also monotone.
//! - [`empirical_register`]: alternates the closed-form alignment with the
//!   average of the per-direction 1D plans; cheap and good in practice, with
//!   no monotonicity guarantee.
//! - [`rwd_distance_upper_bound`]: desk-scale robust Wasserstein distance by
//!   restarting the alternation from every signed permutation.

use super::curvilinear::search_on_workspace;
use super::procrustes::{check_pair, energy, procrustes};
use super::sliced::SlicedWorkspace;
use super::types::{
    signed_permutations, CurvilinearConfig, DirectionSet, OrthogonalMatrix, RegistrationResult,
};
use crate::eigenmap::Embedding;
use crate::error::{Error, Result};
use crate::transport::{ot_exact, plan_to_map, TransportPlan, EXACT_CELL_LIMIT};
use nalgebra::DMatrix;

/// Relative energy-decrease threshold that stops the exact alternation.
pub const RWD_STOP_REL: f64 = 1e-12;

/// Relative energy-change threshold that stops the sliced alternations.
pub const SLICED_STOP_REL: f64 = 1e-10;

/// Cells allowed in the dense averaged plan of the sliced methods.
pub const AVERAGE_CELL_LIMIT: usize = 20_000_000;

/// How a registration run is initialized.
#[derive(Debug, Clone)]
pub enum RegistrationSeed {
    /// Cold start from a rotation; the first step solves for plans at it.
    Rotation(OrthogonalMatrix),
    /// Warm start from a previous coupling (multi-scale levels); the first
    /// step re-solves the rotation against it.
    Warm {
        rotation: OrthogonalMatrix,
        plan: TransportPlan,
    },
}

fn seed_rotation(seed: &RegistrationSeed) -> &OrthogonalMatrix {
    match seed {
        RegistrationSeed::Rotation(r) => r,
        RegistrationSeed::Warm { rotation, .. } => rotation,
    }
}

fn check_seed(p: &Embedding, rotation: &OrthogonalMatrix) -> Result<()> {
    if rotation.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "seed rotation is {}x{}, embeddings are {}-dimensional",
            rotation.dim(),
            rotation.dim(),
            p.dim()
        )));
    }
    Ok(())
}

fn squared_distance_matrix(p: &Embedding, q: &Embedding, r: &OrthogonalMatrix) -> DMatrix<f64> {
    let pr = p.coords() * r.matrix();
    DMatrix::from_fn(p.len(), q.len(), |i, j| {
        (pr.row(i) - q.coords().row(j)).norm_squared()
    })
}

/// Alternation of the closed-form `O(n)` projection and an exact transport
/// solve, starting with a transport solve at `init_r` so the restart
/// rotation matters. Stops when the energy decrease falls below
/// [`RWD_STOP_REL`] relative or after `max_iter` alternations.
pub fn rwd_register(
    p: &Embedding,
    q: &Embedding,
    init_r: OrthogonalMatrix,
    max_iter: usize,
) -> Result<RegistrationResult> {
    check_pair(p, q)?;
    if init_r.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial rotation is {}x{}, embeddings are {}-dimensional",
            init_r.dim(),
            init_r.dim(),
            p.dim()
        )));
    }
    if p.len() * q.len() > EXACT_CELL_LIMIT {
        return Err(Error::SizeLimitExceeded(format!(
            "{}x{} exceeds the exact-solver guard",
            p.len(),
            q.len()
        )));
    }
    let mut r = init_r;
    let (mut plan, mut e) = ot_exact(
        &squared_distance_matrix(p, q, &r),
        p.measure(),
        q.measure(),
    )?;
    let mut trace = vec![e];
    for _ in 0..max_iter {
        let prev = e;
        r = procrustes(p, q, &plan)?;
        let (next_plan, next_e) = ot_exact(
            &squared_distance_matrix(p, q, &r),
            p.measure(),
            q.measure(),
        )?;
        plan = next_plan;
        e = next_e;
        trace.push(e);
        if prev - e < RWD_STOP_REL * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let correspondence = plan_to_map(&plan)?;
    Ok(RegistrationResult {
        rotation: r,
        plan,
        energy_trace: trace,
        correspondence,
        scale_reports: None,
    })
}

/// Robust Wasserstein distance at desk scale: the exact alternation is
/// restarted from every signed permutation and the best local minimum is
/// kept. Returns the distance estimate (square root of the best energy) and
/// the minimizing rotation. Limited to embedding dimension 6.
pub fn rwd_distance_upper_bound(
    p: &Embedding,
    q: &Embedding,
    max_iter: usize,
) -> Result<(f64, OrthogonalMatrix)> {
    check_pair(p, q)?;
    let mut best: Option<RegistrationResult> = None;
    for r0 in signed_permutations(p.dim())? {
        let run = rwd_register(p, q, r0, max_iter)?;
        if best
            .as_ref()
            .map_or(true, |b| run.final_energy() < b.final_energy())
        {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok((best.final_energy().max(0.0).sqrt(), best.rotation))
}

fn dense_average_guard(p: &Embedding, q: &Embedding) -> Result<()> {
    if p.len() * q.len() > AVERAGE_CELL_LIMIT {
        return Err(Error::SizeLimitExceeded(format!(
            "{}x{} averaged plan exceeds {AVERAGE_CELL_LIMIT} cells",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Algorithm of averaged sliced plans: the rotation step is the closed-form
/// projection against the current averaged coupling, the coupling step
/// averages the per-direction 1D optimal plans. Cold start.
pub fn empirical_register(
    p: &Embedding,
    q: &Embedding,
    dirs: &DirectionSet,
    init_r: OrthogonalMatrix,
    max_iter: usize,
) -> Result<RegistrationResult> {
    empirical_register_seeded(p, q, dirs, RegistrationSeed::Rotation(init_r), max_iter)
}

/// [`empirical_register`] with an explicit seed (used by the multi-scale
/// driver to warm-start from the previous level's coupling).
pub fn empirical_register_seeded(
    p: &Embedding,
    q: &Embedding,
    dirs: &DirectionSet,
    seed: RegistrationSeed,
    max_iter: usize,
) -> Result<RegistrationResult> {
    check_pair(p, q)?;
    check_seed(p, seed_rotation(&seed))?;
    dense_average_guard(p, q)?;
    let ws = SlicedWorkspace::new(p, q, dirs)?;
    let mut avg = DMatrix::zeros(p.len(), q.len());
    let (mut r, mut plan) = match seed {
        RegistrationSeed::Rotation(r0) => {
            ws.refresh(&r0, Some(&mut avg))?;
            let plan =
                TransportPlan::from_dense(&avg, p.measure().clone(), q.measure().clone())?;
            (r0, plan)
        }
        RegistrationSeed::Warm { rotation, plan } => {
            super::procrustes::check_plan(p, q, &plan)?;
            (rotation, plan)
        }
    };
    let mut e = energy(p, q, &r, &plan)?;
    let mut trace = vec![e];
    for _ in 0..max_iter {
        let prev = e;
        r = procrustes(p, q, &plan)?;
        avg.fill(0.0);
        ws.refresh(&r, Some(&mut avg))?;
        plan = TransportPlan::from_dense(&avg, p.measure().clone(), q.measure().clone())?;
        e = energy(p, q, &r, &plan)?;
        trace.push(e);
        if (prev - e).abs() < SLICED_STOP_REL * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let correspondence = plan_to_map(&plan)?;
    Ok(RegistrationResult {
        rotation: r,
        plan,
        energy_trace: trace,
        correspondence,
        scale_reports: None,
    })
}

/// Alternating minimization of the sliced energy: a curvilinear search on
/// `O(n)` at frozen per-direction plans, then a per-direction 1D plan
/// refresh. The recorded energies are the direction-averaged refresh costs
/// and are non-increasing. Cold start.
pub fn rswd_register_alternating(
    p: &Embedding,
    q: &Embedding,
    dirs: &DirectionSet,
    config: &CurvilinearConfig,
    init_r: OrthogonalMatrix,
) -> Result<RegistrationResult> {
    rswd_register_alternating_seeded(p, q, dirs, config, RegistrationSeed::Rotation(init_r))
}

/// [`rswd_register_alternating`] with an explicit seed.
pub fn rswd_register_alternating_seeded(
    p: &Embedding,
    q: &Embedding,
    dirs: &DirectionSet,
    config: &CurvilinearConfig,
    seed: RegistrationSeed,
) -> Result<RegistrationResult> {
    config.validate()?;
    check_pair(p, q)?;
    check_seed(p, seed_rotation(&seed))?;
    dense_average_guard(p, q)?;
    let ws = SlicedWorkspace::new(p, q, dirs)?;
    let (mut r, mut frozen) = match seed {
        RegistrationSeed::Rotation(r0) => {
            let frozen = ws.refresh(&r0, None)?;
            (r0, frozen)
        }
        RegistrationSeed::Warm { rotation, plan } => {
            let frozen = ws.freeze_shared(&plan, &rotation)?;
            (rotation, frozen)
        }
    };
    let mut totals = vec![frozen.total_cost];
    for _ in 0..config.max_outer {
        let prev = *totals.last().unwrap();
        r = search_on_workspace(&ws, &frozen, &r, config, Some(prev), None)?;
        frozen = ws.refresh(&r, None)?;
        totals.push(frozen.total_cost);
        if prev - frozen.total_cost < SLICED_STOP_REL * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    // Output coupling: the average of the final per-direction plans.
    let mut avg = DMatrix::zeros(p.len(), q.len());
    ws.refresh(&r, Some(&mut avg))?;
    let plan = TransportPlan::from_dense(&avg, p.measure().clone(), q.measure().clone())?;
    let correspondence = plan_to_map(&plan)?;
    let l = dirs.len() as f64;
    Ok(RegistrationResult {
        rotation: r,
        plan,
        energy_trace: totals.into_iter().map(|t| t / l).collect(),
        correspondence,
        scale_reports: None,
    })
}
