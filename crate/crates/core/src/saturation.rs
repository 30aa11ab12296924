//! Experiment drivers: cube-set and face-orbit saturation checks, the
//! unique-completion collision scan, and the critical-pair pattern study on
//! the Sturmian system.
//!
//! Verdicts use a three-valued vocabulary. Inner approximations cannot
//! certify non-membership, so CONSISTENT means every trial converged below
//! tolerance, VIOLATION-EVIDENCE means some profile flattened out above it,
//! and everything else is INCONCLUSIVE. Reports carry their profiles so a
//! verdict can always be recomputed from the stored data.

use crate::cube::CubeConfiguration;
use crate::engine;
use crate::error::{Error, Result};
use crate::sampler::{
    distance_profile, face_orbit_distance_profile, lift_through_fiber, sample_cube_set,
    sample_face_orbit, validate_schedule, CubeSetSample, DistanceProfile, ProfilePoint,
    SamplingBudget,
};
use crate::spaces::{
    apply_factor, sturmian_symbol, Convention, FactorMapSpec, Metric, Point, SymbolicPoint,
    SystemKind, SystemSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Three-valued experiment verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "CONSISTENT")]
    Consistent,
    #[serde(rename = "VIOLATION-EVIDENCE")]
    ViolationEvidence,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

fn saturation_verdict(profiles: &[DistanceProfile], tol: f64) -> Verdict {
    if profiles.iter().all(|p| p.final_distance() < tol) {
        Verdict::Consistent
    } else if profiles
        .iter()
        .any(|p| p.plateaued() && p.final_distance() >= tol)
    {
        Verdict::ViolationEvidence
    } else {
        Verdict::Inconclusive
    }
}

/// Outcome of a saturation experiment: per-trial profiles plus summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaturationReport {
    pub system: SystemSpec,
    pub factor: FactorMapSpec,
    pub d: usize,
    pub tol: f64,
    pub seed: u64,
    /// Base point of the face-orbit variant, absent for full cube sets.
    pub base_point: Option<Point>,
    pub profiles: Vec<DistanceProfile>,
    pub max_final_distance: f64,
    pub n_plateaued_above_tol: usize,
    pub verdict: Verdict,
}

impl SaturationReport {
    fn assemble(
        system: SystemSpec,
        factor: FactorMapSpec,
        d: usize,
        tol: f64,
        seed: u64,
        base_point: Option<Point>,
        profiles: Vec<DistanceProfile>,
    ) -> Self {
        let max_final_distance = profiles
            .iter()
            .map(|p| p.final_distance())
            .fold(0.0, f64::max);
        let n_plateaued_above_tol = profiles
            .iter()
            .filter(|p| p.plateaued() && p.final_distance() >= tol)
            .count();
        let verdict = saturation_verdict(&profiles, tol);
        Self {
            system,
            factor,
            d,
            tol,
            seed,
            base_point,
            profiles,
            max_final_distance,
            n_plateaued_above_tol,
            verdict,
        }
    }

    /// Recompute the verdict from the stored profiles; reports are
    /// self-contained.
    pub fn recompute_verdict(&self) -> Verdict {
        saturation_verdict(&self.profiles, self.tol)
    }
}

/// Sample the cube set downstairs, lift random configurations through the
/// fibers, and profile each lift's distance into the upstairs cube set.
#[allow(clippy::too_many_arguments)]
pub fn check_cube_saturation(
    sys: &SystemSpec,
    f: &FactorMapSpec,
    d: usize,
    schedule: &[SamplingBudget],
    n_trials: usize,
    tol: f64,
    seed: u64,
    metric: &Metric,
) -> Result<SaturationReport> {
    if f.source() != sys {
        return Err(Error::SystemMismatch(
            "factor source must be the system under test".into(),
        ));
    }
    validate_schedule(sys, schedule)?;
    // Draw trials from the coarsest budget: nested schedules then contain
    // every identity-lifted configuration at every stage.
    let down_budget = schedule.first().unwrap();
    let s_down = sample_cube_set(f.target(), d, down_budget)?;
    let lifts = crate::sampler::sample_saturated_preimage(f, d, &s_down, n_trials, seed)?;
    let profiles = lifts
        .iter()
        .map(|lift| distance_profile(lift, sys, d, schedule, metric))
        .collect::<Result<Vec<_>>>()?;
    Ok(SaturationReport::assemble(
        sys.clone(),
        f.clone(),
        d,
        tol,
        seed,
        None,
        profiles,
    ))
}

/// Face-orbit variant: the downstairs face orbit of `pi(x)` is sampled,
/// star coordinates are lifted through fibers while the coordinate at the
/// zero vertex stays pinned to `x` exactly, and distances are measured into
/// the sampled face orbit of `x`.
#[allow(clippy::too_many_arguments)]
pub fn check_face_saturation(
    sys: &SystemSpec,
    f: &FactorMapSpec,
    d: usize,
    x: &Point,
    schedule: &[SamplingBudget],
    n_trials: usize,
    tol: f64,
    seed: u64,
    metric: &Metric,
) -> Result<SaturationReport> {
    if f.source() != sys {
        return Err(Error::SystemMismatch(
            "factor source must be the system under test".into(),
        ));
    }
    validate_schedule(f.target(), schedule)?;
    let y = apply_factor(f, x)?;
    let down_budget = schedule.first().unwrap();
    let s_down = sample_face_orbit(f.target(), &y, d, down_budget)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<usize> = if n_trials >= s_down.len() {
        (0..s_down.len()).collect()
    } else {
        let mut v = rand::seq::index::sample(&mut rng, s_down.len(), n_trials).into_vec();
        v.sort_unstable();
        v
    };

    let mut profiles = Vec::with_capacity(picked.len());
    for i in picked {
        let down = s_down.config_at(i)?;
        let mut entries = Vec::with_capacity(1 << d);
        entries.push(x.clone());
        for rank in 1..1usize << d {
            entries.push(lift_through_fiber(f, down.entry_at_rank(rank), &mut rng)?);
        }
        let lift = CubeConfiguration::new(d, entries)?;
        debug_assert_eq!(lift.base_entry(), x);
        profiles.push(face_orbit_distance_profile(
            &lift, sys, x, d, schedule, metric,
        )?);
    }
    Ok(SaturationReport::assemble(
        sys.clone(),
        f.clone(),
        d,
        tol,
        seed,
        Some(x.clone()),
        profiles,
    ))
}

/// A pair of sampled configurations agreeing on all entries but one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NearCollisionPair {
    pub i: usize,
    pub j: usize,
    /// The entry left out of the agreement.
    pub free_rank: usize,
    /// Largest entry distance over the agreeing positions.
    pub match_distance: f64,
    /// Distance at the free position.
    pub free_distance: f64,
}

/// Outcome of the unique-completion scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionReport {
    pub d: usize,
    pub delta_match: f64,
    pub factor_c: f64,
    pub n_pairs: usize,
    pub max_free_distance: f64,
    /// Worst offenders, largest free-position distance first (capped).
    pub pairs: Vec<NearCollisionPair>,
    pub verdict: Verdict,
}

const COMPLETION_REPORT_CAP: usize = 32;

/// Flattened comparable coordinates of a configuration entry, used only
/// for bucketing; exact agreement is re-checked with the point metric.
fn entry_key_coords(p: &Point) -> Vec<f64> {
    match p {
        Point::Torus(t) => t.coords().to_vec(),
        Point::Symbolic(s) => vec![s.base()],
    }
}

/// Scan a sample for pairs agreeing within `delta_match` on all but one
/// entry, and compare their remaining entries. Unique completion predicts
/// the remaining entries stay within `factor_c * delta_match`.
pub fn unique_completion_check(
    s: &CubeSetSample,
    delta_match: f64,
    factor_c: f64,
    metric: &Metric,
) -> Result<CompletionReport> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    if delta_match <= 0.0 || factor_c < 1.0 {
        return Err(Error::InvalidParameter(
            "delta_match must be positive and factor_c >= 1".into(),
        ));
    }
    let d = s.d();
    let n_entries = 1usize << d;

    // materialize entry coordinates once
    let mut coords: Vec<Vec<Vec<f64>>> = Vec::with_capacity(s.len());
    let mut points: Vec<Vec<Point>> = Vec::with_capacity(s.len());
    for cfg in s.iter_configs() {
        let cfg = cfg?;
        coords.push(cfg.entries().iter().map(entry_key_coords).collect());
        points.push(cfg.entries().to_vec());
    }
    let star_dims = (n_entries - 1) * coords[0][0].len();
    let cell = if star_dims >= 5 {
        4.0 * delta_match
    } else {
        2.0 * delta_match
    };
    let n_cells = (1.0 / cell).ceil() as i64;

    let cell_of = |v: f64| -> i64 { ((v / cell).floor() as i64).rem_euclid(n_cells) };

    let mut pairs: Vec<NearCollisionPair> = Vec::new();
    let mut n_pairs = 0usize;
    let mut max_free = 0.0f64;

    for free_rank in 0..n_entries {
        // bucket every configuration by the quantized non-free coordinates
        let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
        let key_of = |cells: &[i64]| -> u64 {
            let mut h = 1469598103934665603u64; // FNV-1a
            for c in cells {
                h ^= *c as u64;
                h = h.wrapping_mul(1099511628211);
            }
            h
        };
        let cells_of = |i: usize| -> Vec<i64> {
            let mut cells = Vec::with_capacity(star_dims);
            for (rank, e) in coords[i].iter().enumerate() {
                if rank == free_rank {
                    continue;
                }
                for v in e {
                    cells.push(cell_of(*v));
                }
            }
            cells
        };
        for i in 0..coords.len() {
            buckets.entry(key_of(&cells_of(i))).or_default().push(i as u32);
        }

        for i in 0..coords.len() {
            // probe the own cell plus wrapped neighbors where the
            // coordinate sits within delta of a cell edge
            let mut options: Vec<Vec<i64>> = Vec::with_capacity(star_dims);
            for (rank, e) in coords[i].iter().enumerate() {
                if rank == free_rank {
                    continue;
                }
                for v in e {
                    let c = cell_of(*v);
                    let pos = v - (v / cell).floor() * cell;
                    let mut opts = vec![c];
                    if pos <= delta_match {
                        opts.push((c - 1).rem_euclid(n_cells));
                    }
                    if pos >= cell - delta_match {
                        opts.push((c + 1).rem_euclid(n_cells));
                    }
                    options.push(opts);
                }
            }
            let mut probe = vec![0usize; star_dims];
            let mut cells = vec![0i64; star_dims];
            'probing: loop {
                for (slot, sel) in probe.iter().enumerate() {
                    cells[slot] = options[slot][*sel];
                }
                if let Some(candidates) = buckets.get(&key_of(&cells)) {
                    for &j in candidates {
                        let j = j as usize;
                        if j >= i {
                            continue;
                        }
                        // exact verification with the point metric
                        let mut match_d = 0.0f64;
                        let mut ok = true;
                        for rank in 0..n_entries {
                            if rank == free_rank {
                                continue;
                            }
                            let dv = metric.distance(&points[i][rank], &points[j][rank])?;
                            if dv > delta_match {
                                ok = false;
                                break;
                            }
                            match_d = match_d.max(dv);
                        }
                        if !ok {
                            continue;
                        }
                        let free_d =
                            metric.distance(&points[i][free_rank], &points[j][free_rank])?;
                        n_pairs += 1;
                        max_free = max_free.max(free_d);
                        pairs.push(NearCollisionPair {
                            i: j,
                            j: i,
                            free_rank,
                            match_distance: match_d,
                            free_distance: free_d,
                        });
                        if pairs.len() > 4 * COMPLETION_REPORT_CAP {
                            pairs.sort_by(|a, b| b.free_distance.total_cmp(&a.free_distance));
                            pairs.truncate(COMPLETION_REPORT_CAP);
                        }
                    }
                }
                // odometer over probe options
                let mut slot = 0;
                loop {
                    if slot == star_dims {
                        break 'probing;
                    }
                    probe[slot] += 1;
                    if probe[slot] < options[slot].len() {
                        break;
                    }
                    probe[slot] = 0;
                    slot += 1;
                }
            }
        }
    }

    pairs.sort_by(|a, b| {
        b.free_distance
            .total_cmp(&a.free_distance)
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
            .then(a.free_rank.cmp(&b.free_rank))
    });
    pairs.truncate(COMPLETION_REPORT_CAP);

    let verdict = if n_pairs == 0 {
        Verdict::Consistent // vacuous
    } else if max_free > 10.0 * factor_c * delta_match {
        Verdict::ViolationEvidence
    } else if max_free < factor_c * delta_match {
        Verdict::Consistent
    } else {
        Verdict::Inconclusive
    };

    Ok(CompletionReport {
        d,
        delta_match,
        factor_c,
        n_pairs,
        max_free_distance: max_free,
        pairs,
        verdict,
    })
}

impl CompletionReport {
    /// Re-check a listed pair against the sample it came from.
    pub fn verify_pair(
        &self,
        s: &CubeSetSample,
        pair: &NearCollisionPair,
        metric: &Metric,
    ) -> Result<bool> {
        let a = s.config_at(pair.i)?;
        let b = s.config_at(pair.j)?;
        for rank in 0..1usize << self.d {
            let dv = metric.distance(a.entry_at_rank(rank), b.entry_at_rank(rank))?;
            if rank == pair.free_rank {
                if (dv - pair.free_distance).abs() > 1e-12 {
                    return Ok(false);
                }
            } else if dv > self.delta_match {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// One critical-pair pattern with its convergence profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternProfile {
    /// Entries in rank order, `"x1"` for the left-closed coding of the
    /// critical point, `"x2"` for the right-closed one.
    pub pattern: Vec<String>,
    pub pattern_id: usize,
    pub profile: DistanceProfile,
}

/// Distance profiles of every pattern over the two critical codings into
/// the sampled Sturmian cube set, sorted by final distance. Which patterns
/// converge and which plateau is reported empirically.
pub fn sturmian_counterexample(
    sys: &SystemSpec,
    d: usize,
    schedule: &[SamplingBudget],
    window: u32,
) -> Result<Vec<PatternProfile>> {
    if sys.kind() != SystemKind::Sturmian {
        return Err(Error::SystemMismatch(
            "the critical-pair study needs a Sturmian system".into(),
        ));
    }
    if !(d == 2 || d == 3) {
        return Err(Error::InvalidParameter(
            "pattern study supports d in {2, 3}".into(),
        ));
    }
    validate_schedule(sys, schedule)?;
    let n_patterns = 1usize << (1 << d);
    let mut bests = vec![f64::INFINITY; n_patterns];
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(schedule.len());
    for b in schedule {
        engine::pattern_sweep(sys, d, b.n_max, b.orbit_len as i64, window, &mut bests)?;
        history.push(bests.clone());
    }

    let mut out = Vec::with_capacity(n_patterns);
    for id in 0..n_patterns {
        let points: Vec<ProfilePoint> = schedule
            .iter()
            .zip(&history)
            .map(|(budget, row)| ProfilePoint {
                budget: *budget,
                distance: row[id],
            })
            .collect();
        let pattern = (0..1usize << d)
            .map(|rank| {
                if (id >> rank) & 1 == 1 {
                    "x2".to_string()
                } else {
                    "x1".to_string()
                }
            })
            .collect();
        out.push(PatternProfile {
            pattern,
            pattern_id: id,
            profile: DistanceProfile::new(points)?,
        });
    }
    out.sort_by(|a, b| {
        a.profile
            .final_distance()
            .total_cmp(&b.profile.final_distance())
            .then(a.pattern_id.cmp(&b.pattern_id))
    });
    Ok(out)
}

/// Positions `|n| <= range` where the codings of the two critical points
/// disagree.
pub fn boundary_disagreement_positions(alpha: f64, range: i64) -> Vec<i64> {
    let x1 = SymbolicPoint::new(0.0, Convention::LeftClosed).unwrap();
    let x2 = SymbolicPoint::new(0.0, Convention::RightClosed).unwrap();
    (-range..=range)
        .filter(|n| sturmian_symbol(alpha, &x1, *n) != sturmian_symbol(alpha, &x2, *n))
        .collect()
}
