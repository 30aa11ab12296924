//! Points, concrete minimal systems, and their analytic factor maps.
//!
//! Three system families are built in: the circle rotation by an irrational
//! `alpha`, the unipotent affine skew product on the s-torus
//! `(x1, .., xs) -> (x1 + alpha, x2 + x1, .., xs + x_{s-1})`, and the
//! two-interval coding of the rotation (a Sturmian subshift). Sturmian
//! points are carried as `(base, convention)` pairs rather than explicit
//! sequences: the shift acts exactly on the base, and only the metric is
//! windowed.

use crate::error::{Error, Result};
use crate::mod1::{binom_frac, circle_dist, frac, mul_frac};
use serde::{Deserialize, Serialize};

/// A point on the s-torus, every coordinate in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Wraps arbitrary finite coordinates into `[0, 1)`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter(
                "torus point needs at least one coordinate".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "torus coordinates must be finite".into(),
            ));
        }
        Ok(Self {
            coords: coords.into_iter().map(frac).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Which side of the cutting intervals is closed in the Sturmian coding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    LeftClosed,
    RightClosed,
}

/// A Sturmian point: the circle parameter plus the coding convention.
///
/// If the orbit of `base` never hits `{0, 1 - alpha}`, both conventions
/// induce the same two-sided sequence; on the critical orbit they give the
/// two distinct coding points over the same circle fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicPoint {
    base: f64,
    convention: Convention,
}

impl SymbolicPoint {
    pub fn new(base: f64, convention: Convention) -> Result<Self> {
        if !base.is_finite() {
            return Err(Error::InvalidParameter("base must be finite".into()));
        }
        Ok(Self {
            base: frac(base),
            convention,
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }
}

/// A point of whichever space a `SystemSpec` acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Torus(TorusPoint),
    Symbolic(SymbolicPoint),
}

impl Point {
    pub fn torus(coords: Vec<f64>) -> Result<Self> {
        Ok(Point::Torus(TorusPoint::new(coords)?))
    }

    pub fn symbolic(base: f64, convention: Convention) -> Result<Self> {
        Ok(Point::Symbolic(SymbolicPoint::new(base, convention)?))
    }

    pub fn as_torus(&self) -> Option<&TorusPoint> {
        match self {
            Point::Torus(p) => Some(p),
            Point::Symbolic(_) => None,
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicPoint> {
        match self {
            Point::Symbolic(p) => Some(p),
            Point::Torus(_) => None,
        }
    }
}

/// Built-in system families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    Rotation,
    AffineSkew,
    Sturmian,
}

/// A concrete minimal system: family, rotation number, torus dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    kind: SystemKind,
    alpha: f64,
    dim: usize,
}

/// Rejection margin for nearly rational `alpha`: `|alpha - p/q| > MARGIN/q^2`
/// must hold for every `q <= MAX_DENOMINATOR`.
const IRRATIONALITY_MARGIN: f64 = 1e-6;
const MAX_DENOMINATOR: u32 = 100;

impl SystemSpec {
    pub fn new(kind: SystemKind, alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        for q in 1..=MAX_DENOMINATOR {
            let qf = f64::from(q);
            let p = (alpha * qf).round();
            if (alpha - p / qf).abs() <= IRRATIONALITY_MARGIN / (qf * qf) {
                return Err(Error::InvalidParameter(format!(
                    "alpha = {alpha} is too close to {p}/{q} (numerical irrationality check)"
                )));
            }
        }
        match kind {
            SystemKind::Rotation | SystemKind::Sturmian => {
                if dim != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "{kind:?} requires dim = 1, got {dim}"
                    )));
                }
            }
            SystemKind::AffineSkew => {
                if dim < 1 {
                    return Err(Error::InvalidParameter("skew dim must be >= 1".into()));
                }
            }
        }
        Ok(Self { kind, alpha, dim })
    }

    pub fn rotation(alpha: f64) -> Result<Self> {
        Self::new(SystemKind::Rotation, alpha, 1)
    }

    pub fn affine_skew(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(SystemKind::AffineSkew, alpha, dim)
    }

    pub fn sturmian(alpha: f64) -> Result<Self> {
        Self::new(SystemKind::Sturmian, alpha, 1)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Does `x` belong to this system's space?
    pub fn contains(&self, x: &Point) -> bool {
        match (self.kind, x) {
            (SystemKind::Rotation, Point::Torus(p)) => p.dim() == 1,
            (SystemKind::AffineSkew, Point::Torus(p)) => p.dim() == self.dim,
            (SystemKind::Sturmian, Point::Symbolic(_)) => true,
            _ => false,
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::SystemMismatch(format!(
                "{:?} (dim {}) cannot act on {:?}",
                self.kind, self.dim, x
            )))
        }
    }
}

/// Sup metric over coordinates with wraparound per coordinate.
pub fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "torus points of dim {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| circle_dist(*x, *y))
        .fold(0.0, f64::max))
}

/// `T^k x` in closed form (never by iteration).
///
/// Rotation: `x + k alpha`. Skew of dim s: coordinate `j` gains
/// `sum_{i<j} C(k,i) x_{j-i} + C(k,j) alpha`, the unipotent power formula.
/// Sturmian: rotate the base, keep the convention.
pub fn apply_power(sys: &SystemSpec, x: &Point, k: i64) -> Result<Point> {
    sys.check_point(x)?;
    if k == 0 {
        return Ok(x.clone());
    }
    match (sys.kind, x) {
        (SystemKind::Rotation, Point::Torus(p)) => {
            let c = frac(p.coords()[0] + mul_frac(k as f64, sys.alpha));
            Ok(Point::Torus(TorusPoint { coords: vec![c] }))
        }
        (SystemKind::AffineSkew, Point::Torus(p)) => {
            let xs = p.coords();
            let mut out = Vec::with_capacity(xs.len());
            for j in 1..=xs.len() {
                let mut acc = xs[j - 1];
                for i in 1..j {
                    acc = frac(acc + binom_frac(k, i as u32, xs[j - 1 - i]));
                }
                acc = frac(acc + binom_frac(k, j as u32, sys.alpha));
                out.push(acc);
            }
            Ok(Point::Torus(TorusPoint { coords: out }))
        }
        (SystemKind::Sturmian, Point::Symbolic(p)) => {
            let base = frac(p.base + mul_frac(k as f64, sys.alpha));
            Ok(Point::Symbolic(SymbolicPoint {
                base,
                convention: p.convention,
            }))
        }
        _ => unreachable!("check_point rules out mismatches"),
    }
}

/// Symbol of the coding of `base + n alpha` against the two cutting
/// intervals. Left-closed: `A0 = [0, 1-alpha)`, `A1 = [1-alpha, 1)`.
/// Right-closed: `A0 = (0, 1-alpha]`, `A1 = (1-alpha, 1]` with `0 == 1`.
pub fn sturmian_symbol(alpha: f64, p: &SymbolicPoint, n: i64) -> u8 {
    let z = frac(p.base + mul_frac(n as f64, alpha));
    let cut = 1.0 - alpha;
    match p.convention {
        Convention::LeftClosed => u8::from(z >= cut),
        Convention::RightClosed => {
            if z == 0.0 {
                1
            } else {
                u8::from(z > cut)
            }
        }
    }
}

/// Subshift metric truncated to a window: `2^-k` where `k` is the least
/// `|n| <= window` at which the codings disagree, `0.0` if none (so the
/// resolution floor is `2^-window`).
pub fn symbolic_distance(alpha: f64, x: &SymbolicPoint, y: &SymbolicPoint, window: u32) -> f64 {
    for t in 0..=window as i64 {
        if sturmian_symbol(alpha, x, t) != sturmian_symbol(alpha, y, t)
            || (t > 0 && sturmian_symbol(alpha, x, -t) != sturmian_symbol(alpha, y, -t))
        {
            return (2.0f64).powi(-(t as i32));
        }
    }
    0.0
}

/// Point metric: torus sup metric or windowed subshift metric, by type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub window: u32,
    pub alpha: f64,
}

impl Metric {
    pub fn new(alpha: f64, window: u32) -> Self {
        Self { window, alpha }
    }

    pub fn for_system(sys: &SystemSpec, window: u32) -> Self {
        Self::new(sys.alpha(), window)
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match (a, b) {
            (Point::Torus(p), Point::Torus(q)) => torus_distance(p, q),
            (Point::Symbolic(p), Point::Symbolic(q)) => {
                Ok(symbolic_distance(self.alpha, p, q, self.window))
            }
            _ => Err(Error::DimensionMismatch(
                "cannot compare a torus point with a symbolic point".into(),
            )),
        }
    }
}

/// The available factor-map shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactorKind {
    Identity,
    /// Keep the first `k` coordinates of a skew product.
    SkewTruncate(usize),
    /// Send a Sturmian point to its base circle point.
    SturmianToRotation,
}

/// An analytic factor map between built-in systems. The target is derived
/// from the source and the kind, so the pair is consistent by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorMapSpec {
    source: SystemSpec,
    target: SystemSpec,
    kind: FactorKind,
}

impl FactorMapSpec {
    pub fn new(source: SystemSpec, kind: FactorKind) -> Result<Self> {
        let target = match kind {
            FactorKind::Identity => source.clone(),
            FactorKind::SkewTruncate(k) => {
                if source.kind() != SystemKind::AffineSkew {
                    return Err(Error::InvalidParameter(
                        "SKEW_TRUNCATE requires an AFFINE_SKEW source".into(),
                    ));
                }
                if k < 1 || k >= source.dim() {
                    return Err(Error::InvalidParameter(format!(
                        "SKEW_TRUNCATE(k) needs 1 <= k < {}, got {k}",
                        source.dim()
                    )));
                }
                if k == 1 {
                    SystemSpec::rotation(source.alpha())?
                } else {
                    SystemSpec::affine_skew(source.alpha(), k)?
                }
            }
            FactorKind::SturmianToRotation => {
                if source.kind() != SystemKind::Sturmian {
                    return Err(Error::InvalidParameter(
                        "STURMIAN_TO_ROTATION requires a STURMIAN source".into(),
                    ));
                }
                SystemSpec::rotation(source.alpha())?
            }
        };
        Ok(Self {
            source,
            target,
            kind,
        })
    }

    pub fn source(&self) -> &SystemSpec {
        &self.source
    }

    pub fn target(&self) -> &SystemSpec {
        &self.target
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }
}

/// Apply the factor map to a point of the source space.
pub fn apply_factor(f: &FactorMapSpec, x: &Point) -> Result<Point> {
    f.source.check_point(x)?;
    match (f.kind, x) {
        (FactorKind::Identity, _) => Ok(x.clone()),
        (FactorKind::SkewTruncate(k), Point::Torus(p)) => Ok(Point::Torus(TorusPoint {
            coords: p.coords()[..k].to_vec(),
        })),
        (FactorKind::SturmianToRotation, Point::Symbolic(p)) => Ok(Point::Torus(TorusPoint {
            coords: vec![p.base],
        })),
        _ => Err(Error::SystemMismatch(format!(
            "factor {:?} cannot act on {x:?}",
            f.kind
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub const ALPHA: f64 = 0.618033988749895;

    fn rot() -> SystemSpec {
        SystemSpec::rotation(0.618034).unwrap()
    }

    fn skew2() -> SystemSpec {
        SystemSpec::affine_skew(0.618034, 2).unwrap()
    }

    // Iteration oracle in 128-bit fixed point: u128 wraparound is exact
    // arithmetic mod 1, so repeated application of the defining map carries
    // no drift at all. Naive f64 iteration would lose ~k^3 ulp at the third
    // skew coordinate, which is the very effect the closed form avoids.
    const TWO64: f64 = 18446744073709551616.0;

    fn to_fix(x: f64) -> u128 {
        let y = x * TWO64; // exponent shift, exact
        let hi = y.floor();
        let lo = (y - hi) * TWO64;
        ((hi as u128) << 64).wrapping_add(lo as u128)
    }

    fn fix_to_f64(v: u128) -> f64 {
        frac((v as f64) / (TWO64 * TWO64))
    }

    fn step_fix(sys: &SystemSpec, x: &mut [u128], forward: bool) {
        let alpha = to_fix(sys.alpha());
        if forward {
            for j in (1..x.len()).rev() {
                x[j] = x[j].wrapping_add(x[j - 1]);
            }
            x[0] = x[0].wrapping_add(alpha);
        } else {
            x[0] = x[0].wrapping_sub(alpha);
            for j in 1..x.len() {
                x[j] = x[j].wrapping_sub(x[j - 1]);
            }
        }
    }

    /// `T^k x` by exact stepwise iteration of the defining map.
    fn iterate(sys: &SystemSpec, x: &Point, k: i64) -> Point {
        let coords: Vec<f64> = match x {
            Point::Torus(p) => p.coords().to_vec(),
            Point::Symbolic(p) => vec![p.base()],
        };
        let mut fix: Vec<u128> = coords.iter().map(|c| to_fix(*c)).collect();
        for _ in 0..k.abs() {
            step_fix(sys, &mut fix, k > 0);
        }
        let out: Vec<f64> = fix.iter().map(|v| fix_to_f64(*v)).collect();
        match x {
            Point::Torus(_) => Point::torus(out).unwrap(),
            Point::Symbolic(p) => Point::symbolic(out[0], p.convention()).unwrap(),
        }
    }

    fn point_dist(sys: &SystemSpec, a: &Point, b: &Point) -> f64 {
        Metric::for_system(sys, 60).distance(a, b).unwrap()
    }

    #[test]
    fn torus_distance_examples() {
        let a = TorusPoint::new(vec![0.1]).unwrap();
        let b = TorusPoint::new(vec![0.9]).unwrap();
        assert!((torus_distance(&a, &b).unwrap() - 0.2).abs() < 1e-12);

        let a = TorusPoint::new(vec![0.25, 0.0]).unwrap();
        let b = TorusPoint::new(vec![0.75, 0.0]).unwrap();
        assert!((torus_distance(&a, &b).unwrap() - 0.5).abs() < 1e-12);

        assert_eq!(torus_distance(&a, &a).unwrap(), 0.0);

        let c = TorusPoint::new(vec![0.1]).unwrap();
        assert!(torus_distance(&a, &c).is_err());
    }

    #[test]
    fn torus_metric_axioms_randomized() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..10_000 {
            let dim = rng.gen_range(1..=3);
            let p = |rng: &mut StdRng| {
                TorusPoint::new((0..dim).map(|_| rng.gen::<f64>()).collect()).unwrap()
            };
            let (a, b, c) = (p(&mut rng), p(&mut rng), p(&mut rng));
            let dab = torus_distance(&a, &b).unwrap();
            let dba = torus_distance(&b, &a).unwrap();
            let dac = torus_distance(&a, &c).unwrap();
            let dcb = torus_distance(&c, &b).unwrap();
            assert!((dab - dba).abs() < 1e-12);
            assert!(dab <= dac + dcb + 1e-12);
            assert_eq!(torus_distance(&a, &a).unwrap(), 0.0);
            assert!(dab <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn apply_power_examples() {
        let sys = rot();
        let x = Point::torus(vec![0.1]).unwrap();
        let y = apply_power(&sys, &x, 3).unwrap();
        assert!((y.as_torus().unwrap().coords()[0] - 0.954102).abs() < 1e-6);

        let sys = skew2();
        let x = Point::torus(vec![0.0, 0.0]).unwrap();
        let y = apply_power(&sys, &x, 2).unwrap();
        let c = y.as_torus().unwrap().coords();
        assert!((c[0] - 0.236068).abs() < 1e-6);
        assert!((c[1] - 0.618034).abs() < 1e-6);
        // and against straight iteration of the defining map
        assert!(point_dist(&sys, &y, &iterate(&sys, &x, 2)) < 1e-12);

        let x = Point::torus(vec![0.37, 0.91]).unwrap();
        assert_eq!(apply_power(&sys, &x, 0).unwrap(), x);
    }

    #[test]
    fn apply_power_rejects_mismatch() {
        let sys = rot();
        let x = Point::torus(vec![0.1, 0.2]).unwrap();
        assert!(apply_power(&sys, &x, 1).is_err());
        let s = Point::symbolic(0.1, Convention::LeftClosed).unwrap();
        assert!(apply_power(&sys, &s, 1).is_err());
    }

    #[test]
    fn closed_form_matches_iteration() {
        let mut rng = StdRng::seed_from_u64(7);
        let systems = [
            SystemSpec::rotation(ALPHA).unwrap(),
            SystemSpec::affine_skew(ALPHA, 2).unwrap(),
            SystemSpec::affine_skew(ALPHA, 3).unwrap(),
            SystemSpec::sturmian(ALPHA).unwrap(),
        ];
        for sys in &systems {
            for _ in 0..1000 {
                let x = match sys.kind() {
                    SystemKind::Sturmian => {
                        Point::symbolic(rng.gen::<f64>(), Convention::LeftClosed).unwrap()
                    }
                    _ => Point::torus((0..sys.dim()).map(|_| rng.gen::<f64>()).collect()).unwrap(),
                };
                let k = rng.gen_range(-1000i64..=1000);
                let closed = apply_power(sys, &x, k).unwrap();
                let iter = iterate(sys, &x, k);
                assert!(
                    point_dist(sys, &closed, &iter) < 1e-9,
                    "{:?} k={k}",
                    sys.kind()
                );
            }
        }
    }

    #[test]
    fn power_composition() {
        let mut rng = StdRng::seed_from_u64(11);
        let systems = [
            SystemSpec::rotation(ALPHA).unwrap(),
            SystemSpec::affine_skew(ALPHA, 3).unwrap(),
        ];
        for sys in &systems {
            for _ in 0..300 {
                let x =
                    Point::torus((0..sys.dim()).map(|_| rng.gen::<f64>()).collect()).unwrap();
                // Intermediate rounding is amplified by C(b, j), so the
                // identity only holds to 1e-9 at desk-scale exponents.
                let a = rng.gen_range(-1000i64..=1000);
                let b = rng.gen_range(-1000i64..=1000);
                let two = apply_power(sys, &apply_power(sys, &x, a).unwrap(), b).unwrap();
                let one = apply_power(sys, &x, a + b).unwrap();
                assert!(point_dist(sys, &two, &one) < 1e-9);
            }
        }
    }

    #[test]
    fn sturmian_symbol_examples() {
        let alpha = 0.618034;
        let left = SymbolicPoint::new(0.0, Convention::LeftClosed).unwrap();
        let right = SymbolicPoint::new(0.0, Convention::RightClosed).unwrap();
        assert_eq!(sturmian_symbol(alpha, &left, 0), 0);
        assert_eq!(sturmian_symbol(alpha, &right, 0), 1);
        assert_eq!(sturmian_symbol(alpha, &left, 1), 1);
        assert_eq!(sturmian_symbol(alpha, &right, 1), 1);
    }

    #[test]
    fn symbolic_distance_examples() {
        let alpha = ALPHA;
        // boundary pair differs at n = 0 -> distance 1
        let x = SymbolicPoint::new(0.0, Convention::LeftClosed).unwrap();
        let y = SymbolicPoint::new(0.0, Convention::RightClosed).unwrap();
        assert_eq!(symbolic_distance(alpha, &x, &y, 50), 1.0);
        assert_eq!(symbolic_distance(alpha, &x, &x, 50), 0.0);
        // shift the pair by 3: first disagreement moves to |n| = 3
        let sys = SystemSpec::sturmian(alpha).unwrap();
        let x3 = apply_power(&sys, &Point::Symbolic(x), 3).unwrap();
        let y3 = apply_power(&sys, &Point::Symbolic(y), 3).unwrap();
        let d = symbolic_distance(
            alpha,
            x3.as_symbolic().unwrap(),
            y3.as_symbolic().unwrap(),
            50,
        );
        assert_eq!(d, 0.125);
    }

    #[test]
    fn conventions_agree_off_critical_orbit() {
        let alpha = ALPHA;
        let mut rng = StdRng::seed_from_u64(17);
        let mut tested = 0;
        'outer: while tested < 50 {
            let base: f64 = rng.gen();
            // keep away from the critical orbit {-n alpha, 1 - alpha - n alpha}
            for n in -201i64..=201 {
                let shift = frac(base + mul_frac(n as f64, alpha));
                if circle_dist(shift, 0.0) < 1e-6 || circle_dist(shift, 1.0 - alpha) < 1e-6 {
                    continue 'outer;
                }
            }
            let l = SymbolicPoint::new(base, Convention::LeftClosed).unwrap();
            let r = SymbolicPoint::new(base, Convention::RightClosed).unwrap();
            for n in -200i64..=200 {
                assert_eq!(sturmian_symbol(alpha, &l, n), sturmian_symbol(alpha, &r, n));
            }
            tested += 1;
        }
    }

    #[test]
    fn factor_examples_and_equivariance() {
        let skew = skew2();
        let f = FactorMapSpec::new(skew.clone(), FactorKind::SkewTruncate(1)).unwrap();
        assert_eq!(f.target().kind(), SystemKind::Rotation);
        let x = Point::torus(vec![0.2, 0.7]).unwrap();
        let y = apply_factor(&f, &x).unwrap();
        assert_eq!(y.as_torus().unwrap().coords(), &[0.2]);

        // f(T x) = T f(x)
        let lhs = apply_factor(&f, &apply_power(&skew, &x, 1).unwrap()).unwrap();
        let rhs = apply_power(f.target(), &y, 1).unwrap();
        assert!(point_dist(f.target(), &lhs, &rhs) < 1e-12);
        assert!((lhs.as_torus().unwrap().coords()[0] - frac(0.2 + skew.alpha())).abs() < 1e-12);

        let st = SystemSpec::sturmian(0.618034).unwrap();
        let g = FactorMapSpec::new(st, FactorKind::SturmianToRotation).unwrap();
        let p = Point::symbolic(0.3, Convention::LeftClosed).unwrap();
        let q = apply_factor(&g, &p).unwrap();
        assert_eq!(q.as_torus().unwrap().coords(), &[0.3]);
    }

    #[test]
    fn factor_equivariance_randomized() {
        let mut rng = StdRng::seed_from_u64(23);
        let skew3 = SystemSpec::affine_skew(ALPHA, 3).unwrap();
        let st = SystemSpec::sturmian(ALPHA).unwrap();
        let factors = vec![
            FactorMapSpec::new(skew3.clone(), FactorKind::Identity).unwrap(),
            FactorMapSpec::new(skew3.clone(), FactorKind::SkewTruncate(1)).unwrap(),
            FactorMapSpec::new(skew3.clone(), FactorKind::SkewTruncate(2)).unwrap(),
            FactorMapSpec::new(st.clone(), FactorKind::SturmianToRotation).unwrap(),
        ];
        for f in &factors {
            for _ in 0..1000 {
                let x = match f.source().kind() {
                    SystemKind::Sturmian => {
                        Point::symbolic(rng.gen::<f64>(), Convention::RightClosed).unwrap()
                    }
                    _ => Point::torus((0..f.source().dim()).map(|_| rng.gen::<f64>()).collect())
                        .unwrap(),
                };
                let lhs = apply_factor(f, &apply_power(f.source(), &x, 1).unwrap()).unwrap();
                let rhs =
                    apply_power(f.target(), &apply_factor(f, &x).unwrap(), 1).unwrap();
                assert!(point_dist(f.target(), &lhs, &rhs) < 1e-9);
            }
        }
    }

    #[test]
    fn irrationality_guard() {
        assert!(SystemSpec::rotation(0.5).is_err());
        assert!(SystemSpec::rotation(1.0 / 3.0).is_err());
        assert!(SystemSpec::rotation(0.618033988749895).is_ok());
        // within 1e-6/q^2 of 2/3
        assert!(SystemSpec::rotation(2.0 / 3.0 + 1e-8).is_err());
        assert!(SystemSpec::rotation(0.0).is_err());
        assert!(SystemSpec::rotation(1.2).is_err());
    }

    #[test]
    fn rotation_requires_dim_one() {
        assert!(SystemSpec::new(SystemKind::Rotation, ALPHA, 2).is_err());
        assert!(SystemSpec::new(SystemKind::Sturmian, ALPHA, 3).is_err());
        assert!(SystemSpec::new(SystemKind::AffineSkew, ALPHA, 4).is_ok());
    }
}
