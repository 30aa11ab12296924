//! Proximality and regionally-proximal-of-order-d estimation.
//!
//! The RP verdict path goes through the cube criterion: `(x, y)` is tested
//! by profiling the distance of the configuration `(x, y, .., y)` in
//! dimension `d + 1` to the sampled cube set. The direct witness search
//! (perturb the pair, scan the exponent box) is a secondary diagnostic: a
//! returned witness re-verifies its defining inequalities, while absence is
//! a value, not an error.

use crate::cube::CubeConfiguration;
use crate::error::{Error, Result};
use crate::sampler::{distance_profile, DistanceProfile, SamplingBudget};
use crate::spaces::{apply_power, Convention, Metric, Point, SystemSpec};
use serde::{Deserialize, Serialize};

/// A regionally-proximal query: the pair, the order, and the budgets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RPQuery {
    pub sys: SystemSpec,
    pub x: Point,
    pub y: Point,
    pub d: usize,
    pub schedule: Vec<SamplingBudget>,
}

/// A verified regional-proximality witness: perturbed pair and exponent
/// vector bringing all off-base coordinates within `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RPWitness {
    pub x_prime: Point,
    pub y_prime: Point,
    pub n: Vec<i64>,
    pub delta: f64,
}

impl RPWitness {
    /// Re-check every inequality in the definition against the original
    /// pair.
    pub fn verify(&self, sys: &SystemSpec, x: &Point, y: &Point, metric: &Metric) -> Result<bool> {
        if metric.distance(x, &self.x_prime)? >= self.delta {
            return Ok(false);
        }
        if metric.distance(y, &self.y_prime)? >= self.delta {
            return Ok(false);
        }
        let d = self.n.len();
        for rank in 1..1usize << d {
            let k = crate::cube::rank_dot(rank, &self.n);
            let a = apply_power(sys, &self.x_prime, k)?;
            let b = apply_power(sys, &self.y_prime, k)?;
            if metric.distance(&a, &b)? >= self.delta {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Minimum of `rho(T^n x, T^n y)` over `|n| <= n_range`.
pub fn proximal_distance(
    sys: &SystemSpec,
    x: &Point,
    y: &Point,
    n_range: i64,
    metric: &Metric,
) -> Result<f64> {
    if n_range < 1 {
        return Err(Error::InvalidParameter("n_range must be >= 1".into()));
    }
    let mut best = f64::INFINITY;
    for n in -n_range..=n_range {
        let a = apply_power(sys, x, n)?;
        let b = apply_power(sys, y, n)?;
        let d = metric.distance(&a, &b)?;
        if d < best {
            best = d;
            if best == 0.0 {
                break;
            }
        }
    }
    Ok(best)
}

/// The cube criterion: profile the distance of `(x, y, .., y)` in dimension
/// `d + 1` to the sampled cube set.
pub fn rp_distance(q: &RPQuery, metric: &Metric) -> Result<DistanceProfile> {
    if q.d < 1 {
        return Err(Error::InvalidParameter("rp order must be >= 1".into()));
    }
    let dim = q.d + 1;
    let mut entries = vec![q.y.clone(); 1 << dim];
    entries[0] = q.x.clone();
    let c = CubeConfiguration::new(dim, entries)?;
    distance_profile(&c, &q.sys, dim, &q.schedule, metric)
}

/// Box vectors ordered by sup norm, then lexicographically: deterministic,
/// and the identity comes first.
fn shell_ordered_box(d: usize, n_max: i64) -> Vec<Vec<i64>> {
    let side = (2 * n_max + 1) as usize;
    let mut out: Vec<Vec<i64>> = (0..side.pow(d as u32))
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let v = (idx % side) as i64 - n_max;
                    idx /= side;
                    v
                })
                .collect()
        })
        .collect();
    out.sort_by(|a, b| {
        let na = a.iter().map(|v| v.abs()).max().unwrap();
        let nb = b.iter().map(|v| v.abs()).max().unwrap();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    out
}

/// Perturbation net around a point: per-coordinate offsets of half the
/// tolerance, the unperturbed point first. Candidates farther than `delta`
/// from the center (possible for symbolic points) are filtered out.
fn perturbation_net(
    sys: &SystemSpec,
    p: &Point,
    delta: f64,
    metric: &Metric,
) -> Result<Vec<Point>> {
    let offsets = [0.0, -delta / 2.0, delta / 2.0];
    let mut out = Vec::new();
    match p {
        Point::Torus(t) => {
            let s = t.dim();
            let mut idx = vec![0usize; s];
            loop {
                let coords: Vec<f64> = t
                    .coords()
                    .iter()
                    .zip(&idx)
                    .map(|(c, i)| c + offsets[*i])
                    .collect();
                out.push(Point::torus(coords)?);
                let mut axis = 0;
                loop {
                    if axis == s {
                        let _ = &sys;
                        return Ok(out);
                    }
                    idx[axis] += 1;
                    if idx[axis] < offsets.len() {
                        break;
                    }
                    idx[axis] = 0;
                    axis += 1;
                }
            }
        }
        Point::Symbolic(sp) => {
            for off in offsets {
                for convention in [sp.convention(), flip(sp.convention())] {
                    let cand = Point::symbolic(sp.base() + off, convention)?;
                    if metric.distance(p, &cand)? < delta {
                        out.push(cand);
                    }
                }
            }
            Ok(out)
        }
    }
}

fn flip(c: Convention) -> Convention {
    match c {
        Convention::LeftClosed => Convention::RightClosed,
        Convention::RightClosed => Convention::LeftClosed,
    }
}

/// Deterministic first-hit search for an RP witness: perturbed pairs over
/// the net, exponents over the box in shell order. `None` when the box is
/// exhausted.
pub fn rp_witness(
    sys: &SystemSpec,
    x: &Point,
    y: &Point,
    d: usize,
    delta: f64,
    budget: &SamplingBudget,
    metric: &Metric,
) -> Result<Option<RPWitness>> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if d < 1 {
        return Err(Error::InvalidParameter("witness order must be >= 1".into()));
    }
    let net_x = perturbation_net(sys, x, delta, metric)?;
    let net_y = perturbation_net(sys, y, delta, metric)?;
    let boxes = shell_ordered_box(d, budget.n_max);

    for xp in &net_x {
        if metric.distance(x, xp)? >= delta {
            continue;
        }
        for yp in &net_y {
            if metric.distance(y, yp)? >= delta {
                continue;
            }
            'boxes: for n in &boxes {
                for rank in 1..1usize << d {
                    let k = crate::cube::rank_dot(rank, n);
                    let a = apply_power(sys, xp, k)?;
                    let b = apply_power(sys, yp, k)?;
                    if metric.distance(&a, &b)? >= delta {
                        continue 'boxes;
                    }
                }
                return Ok(Some(RPWitness {
                    x_prime: xp.clone(),
                    y_prime: yp.clone(),
                    n: n.clone(),
                    delta,
                }));
            }
        }
    }
    Ok(None)
}
