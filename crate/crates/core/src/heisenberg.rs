//! Heisenberg group `H^N = R^{2N} × R` with the law
//! `(z,t)∘(z',t') = (z+z', t+t'+½ z·Jz')`.
//!
//! Horizontal lines `s ↦ p∘(sω,0)` are Euclidean lines through `(z,t)` with
//! direction `(ω, ½ z·Jω)`, so ray casting reuses the Euclidean engine.
//! Hyperplane sections `B_r^H(p) = { p∘(z',0) : |z'| < r }` are parametrized
//! by `z'`; the induced surface measure is a constant multiple of `dz'`, so
//! section fractions are plain volume fractions in the `z'` chart.

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::geometry::{
    ball_class, first_max, intersect_class, measure_bounds, three_sigma, unit_ball_volume, AxisBox, BallSampler,
    Budget, CellClass, DirectionSet, Domain, DomainSpec, FractionEstimate, FractionMode, Implicit, NodeGrid,
    Resolution, SupConfig,
};

/// `z·Jw` with `J = [[0, I], [-I, 0]]`.
pub fn symplectic(z: &[f64], w: &[f64]) -> f64 {
    let n = z.len() / 2;
    (0..n).map(|a| z[a] * w[n + a] - z[n + a] * w[a]).sum()
}

/// A point `(z, t)` of `H^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    pub z: Vec<f64>,
    pub t: f64,
}

impl HPoint {
    pub fn new(z: Vec<f64>, t: f64) -> Result<Self> {
        if z.is_empty() || z.len() % 2 != 0 {
            return Err(param(format!("z must have even positive length 2N, got {}", z.len())));
        }
        Ok(Self { z, t })
    }

    pub fn identity(n: usize) -> Self {
        Self { z: vec![0.0; 2 * n], t: 0.0 }
    }

    /// Splits ambient coordinates `(z_1..z_2N, t)`.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        let (t, z) = coords.split_last().ok_or_else(|| param("empty coordinate vector"))?;
        Self::new(z.to_vec(), *t)
    }

    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.z.clone();
        c.push(self.t);
        c
    }

    /// Group product `self ∘ other`.
    pub fn mul(&self, other: &HPoint) -> Result<HPoint> {
        if self.z.len() != other.z.len() {
            return Err(param("Heisenberg points of different dimension"));
        }
        Ok(HPoint {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + b).collect(),
            t: self.t + other.t + 0.5 * symplectic(&self.z, &other.z),
        })
    }

    pub fn inverse(&self) -> HPoint {
        HPoint { z: self.z.iter().map(|v| -v).collect(), t: -self.t }
    }
}

/// An open subset of `H^N`, stored as a Euclidean domain in `R^{2N+1}`.
#[derive(Debug, Clone)]
pub struct HDomain {
    domain: Domain,
    n: usize,
}

impl HDomain {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        if n == 0 || domain.dim() != 2 * n + 1 {
            return Err(param(format!(
                "Heisenberg domain with N = {n} needs ambient dimension {}, got {}",
                2 * n + 1,
                domain.dim()
            )));
        }
        Ok(Self { domain, n })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        let n = spec.heisenberg_n.ok_or_else(|| Error::Spec("Heisenberg domains need the field N".into()))?;
        Self::new(spec.build()?, n).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, p: &HPoint) -> bool {
        p.n() == self.n && self.domain.contains(&p.coords())
    }

    /// `q∘Ω` as an implicit domain with marching step `step`.
    pub fn left_translate(&self, q: &HPoint, step: f64) -> Result<HDomain> {
        if q.n() != self.n {
            return Err(param("translation has the wrong dimension"));
        }
        let bbox = self.domain.bounding_box();
        let dim = 2 * self.n + 1;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for mask in 0..1usize << dim {
            let corner: Vec<f64> =
                (0..dim).map(|i| if mask >> i & 1 == 0 { bbox.lo[i] } else { bbox.hi[i] }).collect();
            let image = q.mul(&HPoint::from_coords(&corner)?)?.coords();
            for i in 0..dim {
                lo[i] = lo[i].min(image[i]);
                hi[i] = hi[i].max(image[i]);
            }
        }
        let inner = self.domain.clone();
        let q_inv = q.inverse();
        let predicate = move |x: &[f64]| match HPoint::from_coords(x).and_then(|p| q_inv.mul(&p)) {
            Ok(p) => inner.contains(&p.coords()),
            Err(_) => false,
        };
        let pad = step;
        let bbox = AxisBox::new(lo.iter().map(|v| v - pad).collect(), hi.iter().map(|v| v + pad).collect())?;
        Ok(HDomain { domain: Domain::Implicit(Implicit::from_fn(predicate, bbox, step)?), n: self.n })
    }

    fn check(&self, p: &HPoint) -> Result<()> {
        if p.n() != self.n {
            return Err(param("point has the wrong Heisenberg dimension"));
        }
        if !self.contains(p) {
            return Err(Error::OutsideDomain(p.coords()));
        }
        Ok(())
    }

    /// Image under `z' ↦ p∘(z',0)` of a `z'`-cell, swept over all `p` in
    /// the box `base` of base points, enclosed in an axis box.
    fn section_hull(&self, base: &AxisBox, cell: &AxisBox) -> AxisBox {
        let m = 2 * self.n;
        let mut lo = Vec::with_capacity(m + 1);
        let mut hi = Vec::with_capacity(m + 1);
        for i in 0..m {
            lo.push(base.lo[i] + cell.lo[i]);
            hi.push(base.hi[i] + cell.hi[i]);
        }
        let (mut tlo, mut thi) = (0.0, 0.0);
        for a in 0..self.n {
            let (l1, h1) = interval_mul((base.lo[a], base.hi[a]), (cell.lo[self.n + a], cell.hi[self.n + a]));
            let (l2, h2) = interval_mul((base.lo[self.n + a], base.hi[self.n + a]), (cell.lo[a], cell.hi[a]));
            tlo += l1 - h2;
            thi += h1 - l2;
        }
        lo.push(base.lo[m] + 0.5 * tlo);
        hi.push(base.hi[m] + 0.5 * thi);
        AxisBox { lo, hi }
    }

    /// Bounds on `|{ z' : |z'| < r, ∃ p ∈ base, p∘(z',0) ∈ Ω }|`.
    fn section_measure(&self, base: &AxisBox, r: f64, min_side: f64) -> (f64, f64) {
        let m = 2 * self.n;
        let origin = vec![0.0; m];
        let root = AxisBox::around(&origin, r);
        measure_bounds(&root, min_side, &|cell: &AxisBox| {
            let b = ball_class(cell, &origin, r);
            if b == CellClass::Outside {
                return b;
            }
            intersect_class(b, self.domain.classify_box(&self.section_hull(base, cell)))
        })
    }
}

fn interval_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let p = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (p.iter().copied().fold(f64::INFINITY, f64::min), p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `δ̃_ω(p) = inf{ |s| : p∘(sω,0) ∉ Ω }`.
pub fn horizontal_ray_distance(hd: &HDomain, p: &HPoint, w: &[f64]) -> Result<f64> {
    hd.check(p)?;
    if w.len() != 2 * hd.n {
        return Err(param("horizontal direction must lie in R^{2N}"));
    }
    let mut v = w.to_vec();
    v.push(0.5 * symplectic(&p.z, w));
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((wn - 1.0).abs() < 1e-9) {
        return Err(param(format!("direction must be a unit vector, |w| = {wn}")));
    }
    v.iter_mut().for_each(|x| *x /= len);
    Ok(hd.domain.ray_distance(&p.coords(), &v)? / len)
}

/// Davies–Hardy distance `δ̃(p) = (2N Σ_i w_i δ̃_{ω_i}(p)^{-2})^{-1/2}`.
pub fn davies_hardy_distance(hd: &HDomain, p: &HPoint, dirs: &DirectionSet) -> Result<f64> {
    if dirs.dim() != 2 * hd.n {
        return Err(param("direction set must live on S^{2N-1}"));
    }
    hd.check(p)?;
    let mut avg = 0.0;
    for (w, wt) in dirs.iter() {
        let delta = horizontal_ray_distance(hd, p, w)?;
        if delta.is_finite() {
            avg += wt / (delta * delta);
        }
    }
    Ok(if avg == 0.0 { f64::INFINITY } else { (2.0 * hd.n as f64 * avg).powf(-0.5) })
}

/// `ψ̃_r(p)`, the fraction of the section disk `B_r^H(p)` lying in Ω.
pub fn hyperplane_ball_fraction(hd: &HDomain, p: &HPoint, r: f64, budget: Budget) -> Result<FractionEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(param(format!("radius must be positive, got {r}")));
    }
    if p.n() != hd.n || p.z.iter().chain([&p.t]).any(|v| !v.is_finite()) {
        return Err(param("base point must be finite with matching N"));
    }
    let m = 2 * hd.n;
    match budget {
        Budget::Samples { count, seed, stream } => {
            if count == 0 {
                return Err(param("sample count must be positive"));
            }
            let mut sampler = BallSampler::new(m, r, seed, stream);
            let mut zp = vec![0.0; m];
            let mut x = vec![0.0; m + 1];
            let mut hits = 0usize;
            for _ in 0..count {
                sampler.next_into(&mut zp);
                for i in 0..m {
                    x[i] = p.z[i] + zp[i];
                }
                x[m] = p.t + 0.5 * symplectic(&p.z, &zp);
                if hd.domain.contains(&x) {
                    hits += 1;
                }
            }
            let frac = hits as f64 / count as f64;
            Ok(FractionEstimate::estimate(frac, three_sigma(frac, count), count))
        }
        Budget::Cells { spacing } => {
            if !(spacing > 0.0) {
                return Err(param("cell spacing must be positive"));
            }
            let base = AxisBox { lo: p.coords(), hi: p.coords() };
            let disk = unit_ball_volume(m) * r.powi(m as i32);
            let (lo, hi) = hd.section_measure(&base, r, spacing);
            Ok(FractionEstimate {
                value: (hi / disk).min(1.0),
                mode: FractionMode::UpperEnclosure,
                error_radius: (hi - lo) / disk,
                resolution: Resolution::Spacing(spacing),
            })
        }
    }
}

/// `Ψ̃_r = sup_p ψ̃_r(p)`.
///
/// The enclosure covers the bounding box by cells `P_j` of side `h` and
/// bounds, for each cell, the measure of those `z'` for which `p∘(z',0)`
/// may lie in Ω for *some* `p ∈ P_j` (interval hull of the sheared
/// section). The maximum over cells is a rigorous upper bound.
pub fn sup_hyperplane_fraction(hd: &HDomain, r: f64, config: &SupConfig) -> Result<FractionEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(param(format!("radius must be positive, got {r}")));
    }
    if !(config.h > 0.0 && config.h.is_finite()) {
        return Err(param(format!("grid spacing must be positive, got {}", config.h)));
    }
    let grid = NodeGrid::covering(&hd.domain.bounding_box(), config.h);
    match config.mode {
        FractionMode::Estimate => {
            if config.samples == 0 {
                return Err(param("sample count must be positive"));
            }
            let results: Vec<Option<FractionEstimate>> = (0..grid.len())
                .into_par_iter()
                .map(|j| {
                    let x = grid.point(j);
                    if !hd.domain.contains(&x) {
                        return None;
                    }
                    let p = HPoint::from_coords(&x).ok()?;
                    let budget = Budget::Samples { count: config.samples, seed: config.seed, stream: j as u64 };
                    hyperplane_ball_fraction(hd, &p, r, budget).ok()
                })
                .collect();
            first_max(results.into_iter().flatten())
                .ok_or_else(|| Error::Numeric("no grid point falls inside the domain; refine h".into()))
        }
        FractionMode::UpperEnclosure => {
            let m = 2 * hd.n;
            let disk = unit_ball_volume(m) * r.powi(m as i32);
            let resolution = Resolution::Spacing(config.h);
            if !(config.cell > 0.0) {
                return Err(param("cell size must be positive"));
            }
            if !hd.domain.classifies_cells() {
                return Ok(FractionEstimate {
                    value: 1.0,
                    mode: FractionMode::UpperEnclosure,
                    error_radius: 1.0,
                    resolution,
                });
            }
            let results: Vec<Option<FractionEstimate>> = (0..grid.len())
                .into_par_iter()
                .map(|j| {
                    let cell = grid.cell(&grid.point(j));
                    if hd.domain.classify_box(&cell) == CellClass::Outside {
                        return None;
                    }
                    let (lo, hi) = hd.section_measure(&cell, r, config.cell);
                    Some(FractionEstimate {
                        value: (hi / disk).min(1.0),
                        mode: FractionMode::UpperEnclosure,
                        error_radius: (hi - lo) / disk,
                        resolution,
                    })
                })
                .collect();
            first_max(results.into_iter().flatten())
                .ok_or_else(|| Error::Numeric("domain has no cell meeting the grid".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cube() -> HDomain {
        HDomain::new(Domain::open_box(vec![-1.0; 3], vec![1.0; 3]).unwrap(), 1).unwrap()
    }

    #[test]
    fn group_law_examples() {
        let e1 = HPoint::new(vec![1.0, 0.0], 0.0).unwrap();
        let e2 = HPoint::new(vec![0.0, 1.0], 0.0).unwrap();
        let prod = e1.mul(&e2).unwrap();
        assert_eq!(prod, HPoint::new(vec![1.0, 1.0], 0.5).unwrap());
        let p = HPoint::new(vec![0.3, -1.2, 2.0, 0.7], 1.5).unwrap();
        assert_eq!(p.mul(&HPoint::identity(2)).unwrap(), p);
        assert_eq!(p.mul(&p.inverse()).unwrap(), HPoint::identity(2));
        assert!(p.mul(&e1).is_err());
    }

    #[test]
    fn axis_rays_from_origin() {
        let hd = cube();
        let o = HPoint::identity(1);
        assert_eq!(horizontal_ray_distance(&hd, &o, &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(horizontal_ray_distance(&hd, &o, &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn slab_exit_through_tilt() {
        // Slab |t| < 0.1 inside a large box; from z = (1, 0) the horizontal
        // line in direction e2 climbs with slope ½ z·J e2 = ½.
        let tau = 0.1;
        let hd = HDomain::new(Domain::open_box(vec![-10.0, -10.0, -tau], vec![10.0, 10.0, tau]).unwrap(), 1).unwrap();
        let p = HPoint::new(vec![1.0, 0.0], 0.0).unwrap();
        let d = horizontal_ray_distance(&hd, &p, &[0.0, 1.0]).unwrap();
        assert!((d - tau / 0.5).abs() < 1e-14);
        let d = horizontal_ray_distance(&hd, &p, &[1.0, 0.0]).unwrap();
        assert!((d - 9.0).abs() < 1e-14);
    }

    #[test]
    fn davies_hardy_examples() {
        let ball = HDomain::new(Domain::ball(vec![0.0; 3], 2.0).unwrap(), 1).unwrap();
        let dirs = DirectionSet::new(2, 64).unwrap();
        let d = davies_hardy_distance(&ball, &HPoint::identity(1), &dirs).unwrap();
        assert!((d - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        // δ̃_{e1} = 1 and δ̃_{e2} = 2 on a box, equal weights: (2·(½·1 + ½·¼))^{-1/2}.
        let hd = HDomain::new(Domain::open_box(vec![-1.0, -2.0, -1.0], vec![1.0, 2.0, 1.0]).unwrap(), 1).unwrap();
        let four = DirectionSet::new(2, 4).unwrap();
        let d = davies_hardy_distance(&hd, &HPoint::identity(1), &four).unwrap();
        assert!((d - 1.25f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn section_fractions_at_origin() {
        let hd = cube();
        let o = HPoint::identity(1);
        let est = hyperplane_ball_fraction(&hd, &o, 1.0, Budget::samples(5000)).unwrap();
        assert_eq!(est.value, 1.0);
        let r = 2.0 * 2f64.sqrt();
        let est = hyperplane_ball_fraction(&hd, &o, r, Budget::samples(100_000)).unwrap();
        assert!((est.value - 1.0 / (2.0 * PI)).abs() <= est.error_radius);
        let enc = hyperplane_ball_fraction(&hd, &o, r, Budget::Cells { spacing: 0.005 }).unwrap();
        assert!(enc.value >= 1.0 / (2.0 * PI) && enc.value < 1.0 / (2.0 * PI) * 1.02);
    }

    #[test]
    fn left_translation_invariance() {
        let hd = HDomain::new(Domain::ball(vec![0.0; 3], 1.0).unwrap(), 1).unwrap();
        let q = HPoint::new(vec![0.7, -0.4], 0.3).unwrap();
        let moved = hd.left_translate(&q, 1e-3).unwrap();
        let p = HPoint::new(vec![0.2, 0.1], -0.3).unwrap();
        let qp = q.mul(&p).unwrap();
        for w in DirectionSet::new(2, 12).unwrap().nodes() {
            let a = horizontal_ray_distance(&hd, &p, w).unwrap();
            let b = horizontal_ray_distance(&moved, &qp, w).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn sup_over_cube() {
        let hd = cube();
        let mut cfg = SupConfig::estimate(0.25);
        cfg.samples = 20_000;
        let est = sup_hyperplane_fraction(&hd, 2.0, &cfg).unwrap();
        assert!(est.value - 1.5 * est.error_radius <= 1.0 / PI && est.value > 1.0 / PI - 0.01, "{}", est.value);
        let mut cfg = SupConfig::enclosure(0.1);
        cfg.cell = 0.02;
        let enc = sup_hyperplane_fraction(&hd, 2.0, &cfg).unwrap();
        assert!(enc.value >= 1.0 / PI && enc.value < 1.25 / PI, "{}", enc.value);
    }

    #[test]
    fn rejects_bad_inputs() {
        let hd = cube();
        assert!(HDomain::new(Domain::cube(2, 1.0).unwrap(), 1).is_err());
        let outside = HPoint::new(vec![3.0, 0.0], 0.0).unwrap();
        assert!(matches!(horizontal_ray_distance(&hd, &outside, &[1.0, 0.0]), Err(Error::OutsideDomain(_))));
        assert!(hyperplane_ball_fraction(&hd, &HPoint::identity(1), 0.0, Budget::samples(10)).is_err());
    }
}
