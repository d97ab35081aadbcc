//! Ball-intersection fractions `ψ_r(x) = |Ω ∩ B_r(x)| / |B_r(x)|`, their
//! supremum `Ψ_r`, the inradius and the generalized inradius.
//!
//! Every eigenvalue bound in this crate is nonincreasing in `Ψ_r`, so a
//! certified bound needs an *upper* enclosure of `Ψ_r`. Enclosures are built
//! from two ingredients:
//!
//! * a sound cell classification of the domain ([`Domain::classify_box`]),
//!   refined adaptively, which bounds `|Ω ∩ B|` from above, and
//! * a covering of the bounding box by a node grid with covering radius
//!   `ρ`: if `|x - x_j| <= ρ` then `B_r(x) ⊂ B_{r+ρ}(x_j)`, hence
//!   `ψ_r(x) <= |Ω ∩ B_{r+ρ}(x_j)| / |B_r|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::{AxisBox, CellClass, Domain};
use super::{unit_ball_volume, DirectionSet};
use crate::error::{param, Error, Result};

/// Default fixed seed for Monte Carlo estimates.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionMode {
    /// Fast estimate; may lie on either side of the true value.
    Estimate,
    /// Guaranteed to be at least the true value.
    UpperEnclosure,
}

/// How a fraction was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Samples(usize),
    Spacing(f64),
    /// Known in closed form.
    Exact,
}

/// A value of `ψ_r(x)` or `Ψ_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub value: f64,
    pub mode: FractionMode,
    pub error_radius: f64,
    pub resolution: Resolution,
}

impl FractionEstimate {
    /// A fraction known exactly, e.g. from a containment argument.
    pub fn exact(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(param(format!("fraction must lie in [0, 1], got {value}")));
        }
        Ok(Self {
            value,
            mode: FractionMode::UpperEnclosure,
            error_radius: 0.0,
            resolution: Resolution::Exact,
        })
    }

    pub fn estimate(value: f64, error_radius: f64, samples: usize) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            mode: FractionMode::Estimate,
            error_radius,
            resolution: Resolution::Samples(samples),
        }
    }

    pub fn is_certified(&self) -> bool {
        self.mode == FractionMode::UpperEnclosure
    }
}

/// Work budget for a single-center fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Monte Carlo with `count` accepted samples from stream `stream` of `seed`.
    Samples { count: usize, seed: u64, stream: u64 },
    /// Deterministic upper enclosure with minimum cell size `spacing`.
    Cells { spacing: f64 },
}

impl Budget {
    pub fn samples(count: usize) -> Self {
        Budget::Samples { count, seed: DEFAULT_SEED, stream: 0 }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(param(format!("radius must be positive and finite, got {r}")));
    }
    Ok(())
}

/// Three-sigma binomial half-width.
pub(crate) fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Uniform samples in the `k`-ball of radius `r` by rejection from the cube.
pub(crate) struct BallSampler {
    rng: ChaCha8Rng,
    dim: usize,
    radius: f64,
}

impl BallSampler {
    pub(crate) fn new(dim: usize, radius: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, dim, radius }
    }

    pub(crate) fn next_into(&mut self, out: &mut [f64]) {
        loop {
            let mut r2 = 0.0;
            for v in out.iter_mut().take(self.dim) {
                *v = self.rng.random_range(-1.0..1.0);
                r2 += *v * *v;
            }
            if r2 < 1.0 {
                for v in out.iter_mut().take(self.dim) {
                    *v *= self.radius;
                }
                return;
            }
        }
    }
}

/// Lower and upper bounds on the measure of `{y ∈ root : classify(y) }`
/// by adaptive bisection down to cells of side `min_side`.
pub(crate) fn measure_bounds<F>(root: &AxisBox, min_side: f64, classify: &F) -> (f64, f64)
where
    F: Fn(&AxisBox) -> CellClass,
{
    match classify(root) {
        CellClass::Outside => (0.0, 0.0),
        CellClass::Inside => {
            let v = root.volume();
            (v, v)
        }
        CellClass::Uncertain => {
            let side = root.lo.iter().zip(&root.hi).map(|(a, b)| b - a).fold(0.0, f64::max);
            if side <= min_side {
                (0.0, root.volume())
            } else {
                root.bisect()
                    .iter()
                    .map(|c| measure_bounds(c, min_side, classify))
                    .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
            }
        }
    }
}

/// Combines two classifications into one for the intersection of the sets.
pub(crate) fn intersect_class(a: CellClass, b: CellClass) -> CellClass {
    match (a, b) {
        (CellClass::Outside, _) | (_, CellClass::Outside) => CellClass::Outside,
        (CellClass::Inside, CellClass::Inside) => CellClass::Inside,
        _ => CellClass::Uncertain,
    }
}

pub(crate) fn ball_class(cell: &AxisBox, center: &[f64], radius: f64) -> CellClass {
    if cell.distance_to(center) >= radius {
        CellClass::Outside
    } else if cell.farthest_distance(center) <= radius {
        CellClass::Inside
    } else {
        CellClass::Uncertain
    }
}

/// Bounds on `|Ω ∩ B_radius(center)|`.
fn ball_intersection_measure(domain: &Domain, center: &[f64], radius: f64, min_side: f64) -> (f64, f64) {
    let root = AxisBox::around(center, radius);
    measure_bounds(&root, min_side, &|cell: &AxisBox| {
        let b = ball_class(cell, center, radius);
        if b == CellClass::Outside {
            return b;
        }
        intersect_class(b, domain.classify_box(cell))
    })
}

/// `ψ_r(x)` by Monte Carlo (estimate) or by cell covering (upper enclosure).
pub fn ball_fraction(domain: &Domain, x: &[f64], r: f64, budget: Budget) -> Result<FractionEstimate> {
    check_radius(r)?;
    if x.len() != domain.dim() || x.iter().any(|v| !v.is_finite()) {
        return Err(param("center must be a finite point of the domain's dimension"));
    }
    let d = domain.dim();
    match budget {
        Budget::Samples { count, seed, stream } => {
            if count == 0 {
                return Err(param("sample count must be positive"));
            }
            let mut sampler = BallSampler::new(d, r, seed, stream);
            let mut y = vec![0.0; d];
            let mut z = vec![0.0; d];
            let mut hits = 0usize;
            for _ in 0..count {
                sampler.next_into(&mut y);
                for i in 0..d {
                    z[i] = x[i] + y[i];
                }
                if domain.contains(&z) {
                    hits += 1;
                }
            }
            let p = hits as f64 / count as f64;
            Ok(FractionEstimate::estimate(p, three_sigma(p, count), count))
        }
        Budget::Cells { spacing } => {
            if !(spacing > 0.0) {
                return Err(param("cell spacing must be positive"));
            }
            let ball = unit_ball_volume(d) * r.powi(d as i32);
            if !domain.classifies_cells() {
                return Ok(FractionEstimate {
                    value: 1.0,
                    mode: FractionMode::UpperEnclosure,
                    error_radius: 1.0,
                    resolution: Resolution::Spacing(spacing),
                });
            }
            let (lo, hi) = ball_intersection_measure(domain, x, r, spacing);
            Ok(FractionEstimate {
                value: (hi / ball).min(1.0),
                mode: FractionMode::UpperEnclosure,
                error_radius: (hi - lo) / ball,
                resolution: Resolution::Spacing(spacing),
            })
        }
    }
}

/// Node grid covering a box with per-axis spacing at most `h`.
#[derive(Debug, Clone)]
pub(crate) struct NodeGrid {
    pub lo: Vec<f64>,
    pub step: Vec<f64>,
    pub counts: Vec<usize>,
}

impl NodeGrid {
    pub(crate) fn covering(bbox: &AxisBox, h: f64) -> Self {
        let counts: Vec<usize> = bbox
            .lo
            .iter()
            .zip(&bbox.hi)
            .map(|(a, b)| (((b - a) / h) - 1e-9).ceil().max(1.0) as usize + 1)
            .collect();
        let step = bbox
            .lo
            .iter()
            .zip(&bbox.hi)
            .zip(&counts)
            .map(|((a, b), n)| (b - a) / (*n - 1) as f64)
            .collect();
        Self { lo: bbox.lo.clone(), step, counts }
    }

    pub(crate) fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub(crate) fn point(&self, mut flat: usize) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| {
                let k = flat % self.counts[i];
                flat /= self.counts[i];
                self.lo[i] + k as f64 * self.step[i]
            })
            .collect()
    }

    /// Cell of points whose nearest node (per axis) is `x`.
    pub(crate) fn cell(&self, x: &[f64]) -> AxisBox {
        AxisBox {
            lo: x.iter().zip(&self.step).map(|(v, s)| v - 0.5 * s).collect(),
            hi: x.iter().zip(&self.step).map(|(v, s)| v + 0.5 * s).collect(),
        }
    }

    /// Covering radius: every point of the box lies within this distance of a node.
    pub(crate) fn covering_radius(&self) -> f64 {
        0.5 * self.step.iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Parameters for [`sup_ball_fraction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupConfig {
    pub mode: FractionMode,
    /// Spacing of the grid of centers.
    pub h: f64,
    /// Monte Carlo samples per center (estimate mode).
    pub samples: usize,
    /// Minimum cell side of the adaptive covering (enclosure mode).
    pub cell: f64,
    pub seed: u64,
}

impl SupConfig {
    pub fn estimate(h: f64) -> Self {
        Self { mode: FractionMode::Estimate, h, samples: 4000, cell: h / 8.0, seed: DEFAULT_SEED }
    }

    pub fn enclosure(h: f64) -> Self {
        Self { mode: FractionMode::UpperEnclosure, h, samples: 0, cell: h / 8.0, seed: DEFAULT_SEED }
    }
}

/// `Ψ_r = sup_x ψ_r(x)`.
///
/// Estimate mode takes the maximum of Monte Carlo estimates over interior
/// grid points, which is a lower estimate of `Ψ_r` up to sampling noise.
/// Enclosure mode returns `max_j |Ω ∩ B_{r+ρ}(x_j)| / |B_r|` (clamped to 1)
/// over grid nodes `x_j` whose cells meet Ω, a rigorous upper bound.
pub fn sup_ball_fraction(domain: &Domain, r: f64, config: &SupConfig) -> Result<FractionEstimate> {
    check_radius(r)?;
    if !(config.h > 0.0 && config.h.is_finite()) {
        return Err(param(format!("grid spacing must be positive, got {}", config.h)));
    }
    let d = domain.dim();
    let grid = NodeGrid::covering(&domain.bounding_box(), config.h);
    match config.mode {
        FractionMode::Estimate => {
            if config.samples == 0 {
                return Err(param("sample count must be positive"));
            }
            let results: Vec<Option<FractionEstimate>> = (0..grid.len())
                .into_par_iter()
                .map(|j| {
                    let x = grid.point(j);
                    if !domain.contains(&x) {
                        return None;
                    }
                    let budget = Budget::Samples { count: config.samples, seed: config.seed, stream: j as u64 };
                    ball_fraction(domain, &x, r, budget).ok()
                })
                .collect();
            first_max(results.into_iter().flatten())
                .ok_or_else(|| Error::Numeric("no grid point falls inside the domain; refine h".into()))
        }
        FractionMode::UpperEnclosure => {
            if !(config.cell > 0.0) {
                return Err(param("cell size must be positive"));
            }
            let resolution = Resolution::Spacing(config.h);
            if !domain.classifies_cells() {
                return Ok(FractionEstimate {
                    value: 1.0,
                    mode: FractionMode::UpperEnclosure,
                    error_radius: 1.0,
                    resolution,
                });
            }
            let rho = grid.covering_radius();
            let ball = unit_ball_volume(d) * r.powi(d as i32);
            let results: Vec<Option<FractionEstimate>> = (0..grid.len())
                .into_par_iter()
                .map(|j| {
                    let x = grid.point(j);
                    if domain.classify_box(&grid.cell(&x)) == CellClass::Outside {
                        return None;
                    }
                    let (lo, hi) = ball_intersection_measure(domain, &x, r + rho, config.cell);
                    Some(FractionEstimate {
                        value: (hi / ball).min(1.0),
                        mode: FractionMode::UpperEnclosure,
                        error_radius: (hi - lo) / ball,
                        resolution,
                    })
                })
                .collect();
            first_max(results.into_iter().flatten())
                .ok_or_else(|| Error::Numeric("domain has no cell meeting the grid".into()))
        }
    }
}

/// First maximal element by value.
pub(crate) fn first_max(it: impl Iterator<Item = FractionEstimate>) -> Option<FractionEstimate> {
    it.fold(None, |best: Option<FractionEstimate>, e| match best {
        Some(b) if b.value >= e.value => Some(b),
        _ => Some(e),
    })
}

/// The inradius `R_Ω` evaluated on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inradius {
    /// Largest distance to the complement found at a grid point.
    pub value: f64,
    /// Guaranteed upper bound (`value + ρ`), when distances are exact.
    pub upper: Option<f64>,
    /// `value` equals `R_Ω` exactly.
    pub exact: bool,
}

impl Inradius {
    pub fn exact(value: f64) -> Self {
        Self { value, upper: Some(value), exact: true }
    }
}

/// Number of directions used to approximate `dist(x, Ω^c)` on implicit domains.
const IMPLICIT_DIRECTIONS: usize = 360;

/// `R_Ω = sup_x dist(x, Ω^c)` over a node grid of spacing `h`.
pub fn inradius(domain: &Domain, h: f64) -> Result<Inradius> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(param(format!("grid spacing must be positive, got {h}")));
    }
    if let Domain::Ball(b) = domain {
        return Ok(Inradius::exact(b.radius));
    }
    let grid = NodeGrid::covering(&domain.bounding_box(), h);
    let dirs = if domain.is_analytic() { None } else { Some(DirectionSet::new(domain.dim(), IMPLICIT_DIRECTIONS)?) };
    let value = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let x = grid.point(j);
            if !domain.contains(&x) {
                return 0.0;
            }
            match (&dirs, domain.distance_to_complement(&x)) {
                (_, Some(dist)) => dist,
                (Some(dirs), None) => dirs
                    .iter()
                    .map(|(w, _)| domain.ray_distance(&x, w).unwrap_or(0.0))
                    .fold(f64::INFINITY, f64::min),
                (None, None) => 0.0,
            }
        })
        .reduce(|| 0.0, f64::max);
    let upper = domain.is_analytic().then(|| value + grid.covering_radius());
    Ok(Inradius { value, upper, exact: false })
}

/// Lieb's generalized inradius on a scan grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedInradius {
    /// Largest scanned `r` with estimated `Ψ_r >= ψ`; `None` if none qualifies.
    pub value: Option<f64>,
    /// `(r, Ψ_r estimate)` for every scanned radius.
    pub scan: Vec<(f64, f64)>,
}

/// `R^{(ψ)} = sup{ r : Ψ_r >= ψ }` restricted to `radii`, using estimate-mode `Ψ_r`.
pub fn generalized_inradius(
    domain: &Domain,
    psi: f64,
    radii: &[f64],
    config: &SupConfig,
) -> Result<GeneralizedInradius> {
    if !(psi > 0.0 && psi < 1.0) {
        return Err(param(format!("fraction must lie in (0, 1), got {psi}")));
    }
    let config = SupConfig { mode: FractionMode::Estimate, ..*config };
    let mut scan = Vec::with_capacity(radii.len());
    let mut value: Option<f64> = None;
    for &r in radii {
        let est = sup_ball_fraction(domain, r, &config)?;
        scan.push((r, est.value));
        if est.value >= psi {
            value = Some(value.map_or(r, |v| v.max(r)));
        }
    }
    Ok(GeneralizedInradius { value, scan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square() -> Domain {
        Domain::cube(2, 1.0).unwrap()
    }

    #[test]
    fn inscribed_ball_fraction_is_one() {
        let sq = unit_square();
        let est = ball_fraction(&sq, &[0.5, 0.5], 0.4, Budget::samples(2000)).unwrap();
        assert_eq!(est.value, 1.0);
        let enc = ball_fraction(&sq, &[0.5, 0.5], 0.4, Budget::Cells { spacing: 0.01 }).unwrap();
        assert!((enc.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_plane_fraction() {
        let half = Domain::open_box(vec![-1e6, 0.0], vec![1e6, 1e6]).unwrap();
        let est = ball_fraction(&half, &[0.0, 1e-6], 1.0, Budget::samples(20_000)).unwrap();
        assert!((est.value - 0.5).abs() <= est.error_radius);
    }

    #[test]
    fn square_in_unit_ball() {
        let sq = unit_square();
        let est = ball_fraction(&sq, &[0.5, 0.5], 1.0, Budget::samples(200_000)).unwrap();
        assert!((est.value - 1.0 / PI).abs() <= est.error_radius);
        let enc = ball_fraction(&sq, &[0.5, 0.5], 1.0, Budget::Cells { spacing: 0.002 }).unwrap();
        assert!(enc.value >= 1.0 / PI);
        assert!(enc.value - 1.0 / PI < 0.01);
    }

    #[test]
    fn sup_fraction_square() {
        let sq = unit_square();
        for (r, expected) in [(1.0, 1.0 / PI), (2.0, 1.0 / (4.0 * PI))] {
            let enc = sup_ball_fraction(&sq, r, &SupConfig::enclosure(0.05)).unwrap();
            assert!(enc.value >= expected && enc.value < expected * 1.05, "r={r}: {enc:?}");
        }
        let full = sup_ball_fraction(&sq, 0.3, &SupConfig::enclosure(0.05)).unwrap();
        assert_eq!(full.value, 1.0);
        let est = sup_ball_fraction(&sq, 0.3, &SupConfig::estimate(0.05)).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn inradius_examples() {
        assert_eq!(inradius(&unit_square(), 0.05).unwrap().value, 0.5);
        let rect = Domain::open_box(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let r = inradius(&rect, 0.05).unwrap();
        assert_eq!(r.value, 0.5);
        assert!(r.upper.unwrap() >= 0.5);
        assert_eq!(inradius(&Domain::ball(vec![0.0; 3], 1.7).unwrap(), 0.1).unwrap().value, 1.7);
    }

    #[test]
    fn generalized_inradius_square() {
        let sq = unit_square();
        let radii: Vec<f64> = (0..=20).map(|k| 0.4 + 0.01 * k as f64).collect();
        let g = generalized_inradius(&sq, 0.9, &radii, &SupConfig::estimate(0.05)).unwrap();
        let v = g.value.unwrap();
        assert!((0.5..=0.6).contains(&v), "{v}");
        assert!(generalized_inradius(&sq, 1.0, &radii, &SupConfig::estimate(0.05)).is_err());
    }

    #[test]
    fn parameter_errors() {
        let sq = unit_square();
        assert!(ball_fraction(&sq, &[0.5, 0.5], 0.0, Budget::samples(10)).is_err());
        assert!(ball_fraction(&sq, &[f64::NAN, 0.5], 1.0, Budget::samples(10)).is_err());
        assert!(sup_ball_fraction(&sq, 1.0, &SupConfig::enclosure(0.0)).is_err());
        assert!(sup_ball_fraction(&sq, -1.0, &SupConfig::enclosure(0.1)).is_err());
    }
}
