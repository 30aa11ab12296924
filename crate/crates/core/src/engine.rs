//! Streaming minimum-distance engine over generated-configuration
//! enumerations.
//!
//! A query asks: how close does the family `(T^(n.eps) x)_eps`, over all `n`
//! in a box and `x` in a base set, come to a fixed target configuration in
//! the sup metric? The enumeration is never materialized. The walker visits
//! the box axis by axis, carrying the partial sup over the entries decided
//! so far and pruning any branch that already exceeds the best candidate
//! seen by any worker. Minima are folded through an atomic, so the result
//! is the exact global minimum independent of worker count and visit order.
//!
//! Per-system evaluators keep the arithmetic bit-identical to
//! `apply_power`: torus evaluators tabulate entry coordinates by calling
//! `apply_power` itself, and the Sturmian evaluator reads codings at exact
//! integer orbit indices, so boundary conventions at the critical orbit are
//! honored exactly rather than through a rounded base coordinate.

use crate::error::{Error, Result};
use crate::mod1::circle_dist;
use crate::spaces::{
    apply_power, sturmian_symbol, Convention, Metric, Point, SymbolicPoint, SystemKind,
    SystemSpec, TorusPoint,
};
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

/// Hard ceiling on streamed enumeration size (configurations per budget).
const MAX_STREAMED: u128 = 1_000_000_000_000;

/// Atomic f64 minimum over non-negative values (bit order equals numeric
/// order for non-negative IEEE doubles).
pub(crate) struct AtomicMin(AtomicU64);

impl AtomicMin {
    pub fn new(v: f64) -> Self {
        Self(AtomicU64::new(v.to_bits()))
    }

    #[inline]
    pub fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    pub fn update(&self, v: f64) {
        self.0.fetch_min(v.to_bits(), Ordering::Relaxed);
    }
}

/// The base set of an enumeration.
#[derive(Clone, Debug)]
pub(crate) enum BaseSet {
    /// Uniform grid, `g` points per torus dimension.
    TorusGrid { g: usize },
    /// Orbit segment of both critical codings: indices `0..len` with each
    /// convention.
    SturmianOrbit { len: i64 },
    /// A single fixed base point (face-orbit enumerations).
    Fixed(Point),
}

pub(crate) struct Query<'a> {
    pub sys: &'a SystemSpec,
    pub d: usize,
    pub n_max: i64,
    pub base: BaseSet,
    pub targets: &'a [Point],
    pub metric: Metric,
}

impl Query<'_> {
    fn base_count(&self) -> u128 {
        match &self.base {
            BaseSet::TorusGrid { g } => (*g as u128).pow(self.sys.dim() as u32),
            BaseSet::SturmianOrbit { len } => 2 * (*len as u128),
            BaseSet::Fixed(_) => 1,
        }
    }

    pub fn candidate_count(&self) -> u128 {
        let side = 2 * self.n_max as u128 + 1;
        self.base_count() * side.pow(self.d as u32)
    }
}

/// Minimum sup-distance from the targets to the enumerated family, not
/// larger than `init` (pass `f64::INFINITY` when nothing is known).
pub(crate) fn min_distance(q: &Query, init: f64) -> Result<f64> {
    if q.targets.len() != 1 << q.d {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for a {}-cube query",
            q.targets.len(),
            q.d
        )));
    }
    if q.n_max < 0 {
        return Err(Error::InvalidParameter("n_max must be >= 0".into()));
    }
    let count = q.candidate_count();
    if count > MAX_STREAMED {
        return Err(Error::BudgetOverflow {
            requested: count,
            limit: MAX_STREAMED as u64,
        });
    }
    let best = AtomicMin::new(init);
    match q.sys.kind() {
        SystemKind::Rotation | SystemKind::AffineSkew => torus_search(q, &best)?,
        SystemKind::Sturmian => sturmian_search(q, &best)?,
    }
    Ok(best.get())
}

// ---------------------------------------------------------------------------
// box walker
// ---------------------------------------------------------------------------

/// Visit levels `level..=d` of the box given exponents fixed so far in
/// `karr[..2^(level-1)]` and their partial sup `pmax`.
fn walk<F>(entry: &F, d: usize, n_max: i64, level: usize, karr: &mut [i64], pmax: f64, best: &AtomicMin)
where
    F: Fn(usize, i64) -> f64,
{
    let lo = 1usize << (level - 1);
    for nl in -n_max..=n_max {
        let ceiling = best.get();
        if pmax >= ceiling {
            return; // pmax cannot shrink once the ceiling drops below it
        }
        let mut m = pmax;
        let mut pruned = false;
        for r in lo..2 * lo {
            let k = karr[r - lo] + nl;
            karr[r] = k;
            let dv = entry(r, k);
            if dv > m {
                m = dv;
                if m >= ceiling {
                    pruned = true;
                    break;
                }
            }
        }
        if pruned {
            continue;
        }
        if level == d {
            best.update(m);
        } else {
            walk(entry, d, n_max, level + 1, karr, m, best);
        }
    }
}

/// Run one base: check the pinned entry at rank 0, then walk the box.
/// `entry(rank, k)` must return the distance of target `rank` to
/// `T^k base`.
fn run_base<F>(entry: &F, d: usize, n_max: i64, best: &AtomicMin)
where
    F: Fn(usize, i64) -> f64,
{
    let e0 = entry(0, 0);
    if e0 >= best.get() {
        return;
    }
    let mut karr = vec![0i64; 1 << d];
    walk(entry, d, n_max, 1, &mut karr, e0, best);
}

/// Same as `run_base` but with the first axis restricted to a sub-range,
/// used to parallelize single-base queries.
fn run_base_slice<F>(entry: &F, d: usize, n_max: i64, n1_range: (i64, i64), best: &AtomicMin)
where
    F: Fn(usize, i64) -> f64,
{
    let e0 = entry(0, 0);
    if e0 >= best.get() {
        return;
    }
    let mut karr = vec![0i64; 1 << d];
    for n1 in n1_range.0..=n1_range.1 {
        karr[1] = n1;
        let dv = entry(1, n1);
        let m = e0.max(dv);
        if m >= best.get() {
            continue;
        }
        if d == 1 {
            best.update(m);
        } else {
            walk(entry, d, n_max, 2, &mut karr, m, best);
        }
    }
}

// ---------------------------------------------------------------------------
// torus systems
// ---------------------------------------------------------------------------

/// Per-base tables of entry coordinates at every in-range exponent, built
/// through `apply_power` so streamed values are bit-identical to
/// materialized ones.
struct TorusBaseTables {
    dn: i64,
    coords: Vec<Vec<f64>>, // coords[k + dn][j]
}

impl TorusBaseTables {
    fn build(sys: &SystemSpec, base: &TorusPoint, dn: i64) -> Self {
        let p = Point::Torus(base.clone());
        let coords = (-dn..=dn)
            .map(|k| {
                let q = apply_power(sys, &p, k).expect("base belongs to sys");
                q.as_torus().unwrap().coords().to_vec()
            })
            .collect();
        Self { dn, coords }
    }

    #[inline]
    fn dist(&self, target: &[f64], k: i64) -> f64 {
        let row = &self.coords[(k + self.dn) as usize];
        let mut m = 0.0f64;
        for (a, b) in row.iter().zip(target) {
            let d = circle_dist(*a, *b);
            if d > m {
                m = d;
            }
        }
        m
    }
}

fn torus_targets(q: &Query) -> Result<Vec<Vec<f64>>> {
    q.targets
        .iter()
        .map(|p| match p {
            Point::Torus(t) if t.dim() == q.sys.dim() => Ok(t.coords().to_vec()),
            _ => Err(Error::SystemMismatch(
                "target entries must be torus points of the system's dimension".into(),
            )),
        })
        .collect()
}

fn torus_base_points(q: &Query) -> Result<Vec<TorusPoint>> {
    match &q.base {
        BaseSet::TorusGrid { g } => {
            let s = q.sys.dim();
            let mut out = Vec::with_capacity(g.pow(s as u32));
            let mut idx = vec![0usize; s];
            loop {
                let coords: Vec<f64> = idx.iter().map(|i| *i as f64 / *g as f64).collect();
                out.push(TorusPoint::new(coords).unwrap());
                let mut axis = 0;
                loop {
                    if axis == s {
                        return Ok(out);
                    }
                    idx[axis] += 1;
                    if idx[axis] < *g {
                        break;
                    }
                    idx[axis] = 0;
                    axis += 1;
                }
            }
        }
        BaseSet::Fixed(Point::Torus(t)) => Ok(vec![t.clone()]),
        _ => Err(Error::SystemMismatch(
            "torus query needs a torus base set".into(),
        )),
    }
}

fn torus_search(q: &Query, best: &AtomicMin) -> Result<()> {
    let targets = torus_targets(q)?;
    let bases = torus_base_points(q)?;
    let dn = q.d as i64 * q.n_max;
    let entry0: Vec<f64> = targets[0].clone();

    if bases.len() == 1 {
        let tabs = TorusBaseTables::build(q.sys, &bases[0], dn);
        let entry = |rank: usize, k: i64| tabs.dist(&targets[rank], k);
        let slices = par_slices(q.n_max);
        slices
            .par_iter()
            .for_each(|r| run_base_slice(&entry, q.d, q.n_max, *r, best));
    } else {
        bases.par_iter().for_each(|b| {
            // cheap pinned-entry check before building tables
            let mut e0 = 0.0f64;
            for (a, t) in b.coords().iter().zip(&entry0) {
                e0 = e0.max(circle_dist(*a, *t));
            }
            if e0 >= best.get() {
                return;
            }
            let tabs = TorusBaseTables::build(q.sys, b, dn);
            let entry = |rank: usize, k: i64| tabs.dist(&targets[rank], k);
            run_base(&entry, q.d, q.n_max, best);
        });
    }
    Ok(())
}

/// Split `[-n_max, n_max]` into chunks for single-base parallelism.
fn par_slices(n_max: i64) -> Vec<(i64, i64)> {
    let workers = rayon::current_num_threads().max(1) as i64 * 4;
    let span = 2 * n_max + 1;
    let chunk = (span / workers).max(1);
    let mut out = Vec::new();
    let mut lo = -n_max;
    while lo <= n_max {
        let hi = (lo + chunk - 1).min(n_max);
        out.push((lo, hi));
        lo = hi + 1;
    }
    out
}

// ---------------------------------------------------------------------------
// Sturmian system
// ---------------------------------------------------------------------------

/// Windowed distances of every in-range orbit point (per convention) to
/// every target entry, read off exact integer indices.
pub(crate) struct SturmianTables {
    lo: i64,
    /// dist[rank][conv][a - lo] = d(sigma^a x_conv, target_rank)
    dist: Vec<[Vec<f64>; 2]>,
}

/// Codings of the two critical points over an index range.
pub(crate) struct CriticalCodings {
    lo: i64,
    code: [Vec<u8>; 2],
}

impl CriticalCodings {
    pub fn build(alpha: f64, lo: i64, hi: i64) -> Self {
        let left = SymbolicPoint::new(0.0, Convention::LeftClosed).unwrap();
        let right = SymbolicPoint::new(0.0, Convention::RightClosed).unwrap();
        let code = [
            (lo..=hi).map(|m| sturmian_symbol(alpha, &left, m)).collect(),
            (lo..=hi)
                .map(|m| sturmian_symbol(alpha, &right, m))
                .collect(),
        ];
        Self { lo, code }
    }

    #[inline]
    pub fn at(&self, conv: usize, m: i64) -> u8 {
        self.code[conv][(m - self.lo) as usize]
    }
}

impl SturmianTables {
    fn build(q: &Query, len: i64) -> Result<Self> {
        let alpha = q.sys.alpha();
        let w = q.metric.window;
        let dn = q.d as i64 * q.n_max;
        let lo = -dn;
        let hi = (len - 1).max(0) + dn;
        let codings = CriticalCodings::build(alpha, lo - w as i64, hi + w as i64);

        // target codings over the window
        let mut tcodes = Vec::with_capacity(q.targets.len());
        for t in q.targets {
            let sp = t.as_symbolic().ok_or_else(|| {
                Error::SystemMismatch("target entries must be symbolic points".into())
            })?;
            let row: Vec<u8> = (-(w as i64)..=w as i64)
                .map(|p| sturmian_symbol(alpha, sp, p))
                .collect();
            tcodes.push(row);
        }

        let dist = tcodes
            .iter()
            .map(|tc| {
                let per_conv = |conv: usize| -> Vec<f64> {
                    (lo..=hi)
                        .map(|a| {
                            for t in 0..=w as i64 {
                                if codings.at(conv, a + t) != tc[(t + w as i64) as usize]
                                    || (t > 0
                                        && codings.at(conv, a - t)
                                            != tc[(w as i64 - t) as usize])
                                {
                                    return (2.0f64).powi(-(t as i32));
                                }
                            }
                            0.0
                        })
                        .collect()
                };
                [per_conv(0), per_conv(1)]
            })
            .collect();
        Ok(Self { lo, dist })
    }

    #[inline]
    fn entry_dist(&self, rank: usize, conv: usize, a: i64) -> f64 {
        self.dist[rank][conv][(a - self.lo) as usize]
    }
}

fn sturmian_search(q: &Query, best: &AtomicMin) -> Result<()> {
    match &q.base {
        BaseSet::SturmianOrbit { len } => {
            let tabs = SturmianTables::build(q, *len)?;
            let candidates: Vec<(usize, i64)> = (0..2usize)
                .flat_map(|conv| (0..*len).map(move |j| (conv, j)))
                .collect();
            candidates.par_iter().for_each(|(conv, j)| {
                let entry = |rank: usize, k: i64| tabs.entry_dist(rank, *conv, j + k);
                run_base(&entry, q.d, q.n_max, best);
            });
            Ok(())
        }
        BaseSet::Fixed(Point::Symbolic(sp)) => {
            // Fixed symbolic base: evaluate codings of sigma^k x directly
            // from the base point (it need not sit on the critical orbit).
            let tabs = fixed_symbolic_tables(q, sp)?;
            let entry = |rank: usize, k: i64| tabs[rank][(k + q.d as i64 * q.n_max) as usize];
            let slices = par_slices(q.n_max);
            slices
                .par_iter()
                .for_each(|r| run_base_slice(&entry, q.d, q.n_max, *r, best));
            Ok(())
        }
        _ => Err(Error::SystemMismatch(
            "sturmian query needs a symbolic base set".into(),
        )),
    }
}

/// dist[rank][k + dn] for a fixed symbolic base.
fn fixed_symbolic_tables(q: &Query, base: &SymbolicPoint) -> Result<Vec<Vec<f64>>> {
    let alpha = q.sys.alpha();
    let w = q.metric.window;
    let dn = q.d as i64 * q.n_max;
    let p = Point::Symbolic(base.clone());
    let shifted: Vec<SymbolicPoint> = (-dn..=dn)
        .map(|k| {
            apply_power(q.sys, &p, k)
                .expect("symbolic base")
                .as_symbolic()
                .unwrap()
                .clone()
        })
        .collect();
    q.targets
        .iter()
        .map(|t| {
            let sp = t.as_symbolic().ok_or_else(|| {
                Error::SystemMismatch("target entries must be symbolic points".into())
            })?;
            Ok(shifted
                .iter()
                .map(|s| crate::spaces::symbolic_distance(alpha, s, sp, w))
                .collect())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// multi-pattern sweep (targets drawn from the two critical codings)
// ---------------------------------------------------------------------------

/// Minimum distances, over one enumeration sweep, for every pattern of the
/// two critical points over the cube vertices. Pattern `p` places the
/// right-closed coding at rank `r` iff bit `r` of `p` is set. `bests` is
/// both the initial ceiling per pattern (from earlier budgets) and the
/// output.
pub(crate) fn pattern_sweep(
    sys: &SystemSpec,
    d: usize,
    n_max: i64,
    len: i64,
    window: u32,
    bests: &mut [f64],
) -> Result<()> {
    if !(d == 2 || d == 3) {
        return Err(Error::InvalidParameter(
            "pattern sweep is defined for d in {2, 3}".into(),
        ));
    }
    let n_patterns = 1usize << (1 << d);
    if bests.len() != n_patterns {
        return Err(Error::DimensionMismatch(format!(
            "expected {n_patterns} pattern slots, got {}",
            bests.len()
        )));
    }
    let count = 2 * len as u128 * (2 * n_max as u128 + 1).pow(d as u32);
    if count > MAX_STREAMED {
        return Err(Error::BudgetOverflow {
            requested: count,
            limit: MAX_STREAMED as u64,
        });
    }
    let alpha = sys.alpha();
    let dn = d as i64 * n_max;
    let lo = -dn;
    let hi = len - 1 + dn;
    let codings = CriticalCodings::build(alpha, lo - window as i64, hi + window as i64);

    // dist[t][conv][a - lo]: distance of sigma^a x_conv to critical coding t
    let dist: Vec<[Vec<f64>; 2]> = (0..2usize)
        .map(|t| {
            let per_conv = |conv: usize| -> Vec<f64> {
                (lo..=hi)
                    .map(|a| {
                        for s in 0..=window as i64 {
                            if codings.at(conv, a + s) != codings.at(t, s)
                                || (s > 0 && codings.at(conv, a - s) != codings.at(t, -s))
                            {
                                return (2.0f64).powi(-(s as i32));
                            }
                        }
                        0.0
                    })
                    .collect()
            };
            [per_conv(0), per_conv(1)]
        })
        .collect();

    let shared: Vec<AtomicMin> = bests.iter().map(|b| AtomicMin::new(*b)).collect();
    let candidates: Vec<(usize, i64)> = (0..2usize)
        .flat_map(|conv| (0..len).map(move |j| (conv, j)))
        .collect();

    candidates.par_iter().for_each(|(conv, j)| {
        let lookup = |t: usize, a: i64| -> f64 { dist[t][*conv][(a - lo) as usize] };
        match d {
            2 => pattern_walk_d2(&lookup, n_max, *j, &shared),
            3 => pattern_walk_d3(&lookup, n_max, *j, &shared),
            _ => unreachable!("pattern sweep is defined for d in {{2, 3}}"),
        }
    });

    for (b, s) in bests.iter_mut().zip(&shared) {
        *b = s.get();
    }
    Ok(())
}

fn pattern_walk_d2<F>(lookup: &F, n_max: i64, j: i64, bests: &[AtomicMin])
where
    F: Fn(usize, i64) -> f64,
{
    let d0 = [lookup(0, j), lookup(1, j)];
    let alive0: Vec<usize> = (0..16)
        .filter(|p| d0[p & 1] < bests[*p].get())
        .collect();
    if alive0.is_empty() {
        return;
    }
    for n1 in -n_max..=n_max {
        let a1 = j + n1;
        let d1 = [lookup(0, a1), lookup(1, a1)];
        let alive1: Vec<usize> = alive0
            .iter()
            .copied()
            .filter(|p| d0[p & 1].max(d1[(p >> 1) & 1]) < bests[*p].get())
            .collect();
        if alive1.is_empty() {
            continue;
        }
        for n2 in -n_max..=n_max {
            let a2 = j + n2;
            let a3 = a1 + n2;
            let d2 = [lookup(0, a2), lookup(1, a2)];
            let d3 = [lookup(0, a3), lookup(1, a3)];
            for &p in &alive1 {
                let m = d0[p & 1]
                    .max(d1[(p >> 1) & 1])
                    .max(d2[(p >> 2) & 1])
                    .max(d3[(p >> 3) & 1]);
                if m < bests[p].get() {
                    bests[p].update(m);
                }
            }
        }
    }
}

fn pattern_walk_d3<F>(lookup: &F, n_max: i64, j: i64, bests: &[AtomicMin])
where
    F: Fn(usize, i64) -> f64,
{
    let d0 = [lookup(0, j), lookup(1, j)];
    let alive0: Vec<usize> = (0..256)
        .filter(|p| d0[p & 1] < bests[*p].get())
        .collect();
    if alive0.is_empty() {
        return;
    }
    for n1 in -n_max..=n_max {
        let a1 = j + n1;
        let d1 = [lookup(0, a1), lookup(1, a1)];
        let alive1: Vec<usize> = alive0
            .iter()
            .copied()
            .filter(|p| d0[p & 1].max(d1[(p >> 1) & 1]) < bests[*p].get())
            .collect();
        if alive1.is_empty() {
            continue;
        }
        for n2 in -n_max..=n_max {
            let a2 = j + n2;
            let a3 = a1 + n2;
            let d2 = [lookup(0, a2), lookup(1, a2)];
            let d3 = [lookup(0, a3), lookup(1, a3)];
            let alive2: Vec<usize> = alive1
                .iter()
                .copied()
                .filter(|p| {
                    d0[p & 1]
                        .max(d1[(p >> 1) & 1])
                        .max(d2[(p >> 2) & 1])
                        .max(d3[(p >> 3) & 1])
                        < bests[*p].get()
                })
                .collect();
            if alive2.is_empty() {
                continue;
            }
            for n3 in -n_max..=n_max {
                let a4 = j + n3;
                let a5 = a1 + n3;
                let a6 = a2 + n3;
                let a7 = a3 + n3;
                let d4 = [lookup(0, a4), lookup(1, a4)];
                let d5 = [lookup(0, a5), lookup(1, a5)];
                let d6 = [lookup(0, a6), lookup(1, a6)];
                let d7 = [lookup(0, a7), lookup(1, a7)];
                for &p in &alive2 {
                    let m = d0[p & 1]
                        .max(d1[(p >> 1) & 1])
                        .max(d2[(p >> 2) & 1])
                        .max(d3[(p >> 3) & 1])
                        .max(d4[(p >> 4) & 1])
                        .max(d5[(p >> 5) & 1])
                        .max(d6[(p >> 6) & 1])
                        .max(d7[(p >> 7) & 1]);
                    if m < bests[p].get() {
                        bests[p].update(m);
                    }
                }
            }
        }
    }
}
