use std::fmt;
use std::sync::Arc;

use crate::error::{param, Error, Result};

/// A closed axis-aligned box `[lo, hi]`. As a domain component it is read as
/// the open box `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(param("box corners must have equal, nonzero dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(param(format!("box requires finite lo < hi, got {lo:?} / {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// Cube of half-width `half` around `center`; no validation.
    pub(crate) fn around(center: &[f64], half: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a < v && v < b)
    }

    /// Euclidean distance from `x` to the closed box.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .map(|((a, b), v)| {
                let d = if v < a { a - v } else if v > b { v - b } else { 0.0 };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance from `x` to a point of the box (attained at a corner).
    pub fn farthest_distance(&self, x: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .map(|((a, b), v)| {
                let d = (v - a).abs().max((b - v).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Whether the closed box `self` meets the open box `other`.
    fn meets_open(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|i| other.lo[i] < self.hi[i] && other.hi[i] > self.lo[i])
    }

    /// Whether the closed box `self` lies strictly inside the open box `other`.
    fn inside_open(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|i| other.lo[i] < self.lo[i] && self.hi[i] < other.hi[i])
    }

    /// Splits the box into `2^d` congruent children.
    pub(crate) fn bisect(&self) -> Vec<AxisBox> {
        let d = self.dim();
        let mid = self.center();
        (0..1usize << d)
            .map(|mask| {
                let mut lo = self.lo.clone();
                let mut hi = self.hi.clone();
                for i in 0..d {
                    if mask >> i & 1 == 0 {
                        hi[i] = mid[i];
                    } else {
                        lo[i] = mid[i];
                    }
                }
                AxisBox { lo, hi }
            })
            .collect()
    }
}

/// Relation between a closed cell and an open set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    /// The closed cell is contained in the set.
    Inside,
    /// The closed cell does not meet the set.
    Outside,
    /// Neither could be established.
    Uncertain,
}

/// Membership oracle backing an implicit domain.
pub trait Membership: Send + Sync {
    fn contains(&self, x: &[f64]) -> bool;

    /// Sound cell classification, when the oracle can provide one.
    fn classify_box(&self, _cell: &AxisBox) -> Option<CellClass> {
        None
    }

    /// Exact volume, when known.
    fn volume(&self) -> Option<f64> {
        None
    }
}

struct FnMembership<F>(F);

impl<F> Membership for FnMembership<F>
where
    F: Fn(&[f64]) -> bool + Send + Sync,
{
    fn contains(&self, x: &[f64]) -> bool {
        (self.0)(x)
    }
}

/// Simple polygon with holes in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    outer: Vec<[f64; 2]>,
    holes: Vec<Vec<[f64; 2]>>,
}

fn signed_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], dd: f64| {
        dd == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(p1, p2, q1, d1) || on(p1, p2, q2, d2) || on(q1, q2, p1, d3) || on(q1, q2, p2, d4)
}

fn point_segment_distance(x: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    let e = sub(q, p);
    let len2 = e[0] * e[0] + e[1] * e[1];
    let t = if len2 > 0.0 {
        ((x[0] - p[0]) * e[0] + (x[1] - p[1]) * e[1]) / len2
    } else {
        0.0
    }
    .clamp(0.0, 1.0);
    let c = [p[0] + t * e[0] - x[0], p[1] + t * e[1] - x[1]];
    (c[0] * c[0] + c[1] * c[1]).sqrt()
}

impl Polygon {
    /// Builds a polygon from an outer ring and hole rings. Rings are
    /// reoriented (outer counterclockwise, holes clockwise); every ring must
    /// be simple and rings must not cross each other.
    pub fn new(outer: Vec<[f64; 2]>, holes: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let mut rings = vec![outer];
        rings.extend(holes);
        for (k, ring) in rings.iter_mut().enumerate() {
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() < 3 {
                return Err(param("polygon rings need at least 3 vertices"));
            }
            if ring.iter().flatten().any(|v| !v.is_finite()) {
                return Err(param("polygon vertices must be finite"));
            }
            let area = signed_area(ring);
            if area == 0.0 {
                return Err(param("degenerate polygon ring"));
            }
            if (k == 0) != (area > 0.0) {
                ring.reverse();
            }
        }
        let edges: Vec<(usize, usize, [f64; 2], [f64; 2])> = rings
            .iter()
            .enumerate()
            .flat_map(|(r, ring)| {
                let n = ring.len();
                (0..n).map(move |i| (r, i, ring[i], ring[(i + 1) % n]))
            })
            .collect();
        for (a, &(ra, ia, p1, p2)) in edges.iter().enumerate() {
            for &(rb, ib, q1, q2) in &edges[a + 1..] {
                if ra == rb {
                    let n = rings[ra].len();
                    if (ia + 1) % n == ib || (ib + 1) % n == ia {
                        continue;
                    }
                }
                if segments_intersect(p1, p2, q1, q2) {
                    return Err(param(format!(
                        "polygon edges intersect (ring {ra} edge {ia}, ring {rb} edge {ib})"
                    )));
                }
            }
        }
        let outer = rings.remove(0);
        Ok(Self { outer, holes: rings })
    }

    pub fn outer(&self) -> &[[f64; 2]] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<[f64; 2]>] {
        &self.holes
    }

    fn rings(&self) -> impl Iterator<Item = &[[f64; 2]]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.rings().flat_map(|ring| {
            let n = ring.len();
            (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
        })
    }

    fn boundary_distance(&self, x: [f64; 2]) -> f64 {
        self.edges()
            .map(|(p, q)| point_segment_distance(x, p, q))
            .fold(f64::INFINITY, f64::min)
    }

    fn contains(&self, x: [f64; 2]) -> bool {
        let mut inside = false;
        for (p, q) in self.edges() {
            let c = cross(sub(q, p), sub(x, p));
            if c == 0.0
                && x[0] >= p[0].min(q[0])
                && x[0] <= p[0].max(q[0])
                && x[1] >= p[1].min(q[1])
                && x[1] <= p[1].max(q[1])
            {
                return false;
            }
            if (p[1] > x[1]) != (q[1] > x[1]) {
                let xc = p[0] + (x[1] - p[1]) * (q[0] - p[0]) / (q[1] - p[1]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn area(&self) -> f64 {
        self.rings().map(signed_area).sum::<f64>()
    }

    fn ray_distance(&self, x: [f64; 2], w: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        for (p, q) in self.edges() {
            let e = sub(q, p);
            let px = sub(p, x);
            let denom = cross(w, e);
            if denom != 0.0 {
                let s = cross(px, e) / denom;
                let u = cross(px, w) / denom;
                if (0.0..=1.0).contains(&u) {
                    best = best.min(s.abs());
                }
            } else if cross(px, w) == 0.0 {
                for v in [p, q] {
                    let s = (v[0] - x[0]) * w[0] + (v[1] - x[1]) * w[1];
                    best = best.min(s.abs());
                }
            }
        }
        best
    }
}

/// Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(param("ball center must be a finite nonempty vector"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(param(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }
}

/// Domain given only by a membership oracle, a bounding box and a ray
/// marching step.
#[derive(Clone)]
pub struct Implicit {
    oracle: Arc<dyn Membership>,
    bbox: AxisBox,
    step: f64,
}

impl Implicit {
    pub fn new(oracle: Arc<dyn Membership>, bbox: AxisBox, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(param(format!("implicit step must be positive, got {step}")));
        }
        Ok(Self { oracle, bbox, step })
    }

    pub fn from_fn<F>(f: F, bbox: AxisBox, step: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnMembership(f)), bbox, step)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn oracle(&self) -> &Arc<dyn Membership> {
        &self.oracle
    }
}

impl fmt::Debug for Implicit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Implicit")
            .field("bbox", &self.bbox)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

/// An open set in `R^d`.
#[derive(Debug, Clone)]
pub enum Domain {
    Polygon(Polygon),
    BoxUnion(Vec<AxisBox>),
    Ball(Ball),
    Implicit(Implicit),
}

/// Number of bisection steps refining an implicit-domain boundary crossing.
const BISECTION_STEPS: usize = 40;

impl Domain {
    pub fn polygon(outer: Vec<[f64; 2]>, holes: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        Polygon::new(outer, holes).map(Domain::Polygon)
    }

    pub fn box_union(boxes: Vec<AxisBox>) -> Result<Self> {
        let d = boxes.first().ok_or_else(|| param("box union needs a box"))?.dim();
        if boxes.iter().any(|b| b.dim() != d) {
            return Err(param("boxes of a union must share a dimension"));
        }
        Ok(Domain::BoxUnion(boxes))
    }

    /// The open box `(lo, hi)`.
    pub fn open_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Domain::BoxUnion(vec![AxisBox::new(lo, hi)?]))
    }

    /// The open cube `(0, side)^d`.
    pub fn cube(d: usize, side: f64) -> Result<Self> {
        Self::open_box(vec![0.0; d], vec![side; d])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Ball::new(center, radius).map(Domain::Ball)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Polygon(_) => 2,
            Domain::BoxUnion(b) => b[0].dim(),
            Domain::Ball(b) => b.center.len(),
            Domain::Implicit(i) => i.bbox.dim(),
        }
    }

    pub fn bounding_box(&self) -> AxisBox {
        match self {
            Domain::Polygon(p) => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in &p.outer {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                AxisBox { lo, hi }
            }
            Domain::BoxUnion(boxes) => {
                let d = boxes[0].dim();
                let lo = (0..d).map(|i| boxes.iter().map(|b| b.lo[i]).fold(f64::INFINITY, f64::min));
                let hi = (0..d).map(|i| boxes.iter().map(|b| b.hi[i]).fold(f64::NEG_INFINITY, f64::max));
                AxisBox { lo: lo.collect(), hi: hi.collect() }
            }
            Domain::Ball(b) => AxisBox::around(&b.center, b.radius),
            Domain::Implicit(i) => i.bbox.clone(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(param(format!("point has dimension {}, domain has {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(param("point coordinates must be finite"));
        }
        Ok(())
    }

    /// Strict membership; boundary points are outside.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Domain::Polygon(p) => p.contains([x[0], x[1]]),
            Domain::BoxUnion(boxes) => boxes.iter().any(|b| b.contains_open(x)),
            Domain::Ball(b) => {
                let r2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 < b.radius * b.radius
            }
            Domain::Implicit(i) => i.bbox.contains_open(x) && i.oracle.contains(x),
        }
    }

    /// `inf{ |s| : x + s w ∉ Ω }`, `f64::INFINITY` when the whole line is in Ω.
    ///
    /// Exact for polygons, box unions and balls. Implicit domains march with
    /// their step and then bisect, so the result is within one step of the
    /// true value.
    pub fn ray_distance(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if w.len() != x.len() {
            return Err(param("direction dimension mismatch"));
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() < 1e-9) {
            return Err(param(format!("direction must be a unit vector, |w| = {norm}")));
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(match self {
            Domain::Polygon(p) => p.ray_distance([x[0], x[1]], [w[0], w[1]]),
            Domain::Ball(b) => {
                let y: Vec<f64> = x.iter().zip(&b.center).map(|(a, c)| a - c).collect();
                let bw: f64 = y.iter().zip(w).map(|(a, c)| a * c).sum();
                let c = y.iter().map(|v| v * v).sum::<f64>() - b.radius * b.radius;
                let disc = (bw * bw - c).max(0.0).sqrt();
                (bw + disc).abs().min((-bw + disc).abs())
            }
            Domain::BoxUnion(boxes) => box_union_ray(boxes, x, w),
            Domain::Implicit(i) => implicit_ray(i, x, w),
        })
    }

    /// Exact `dist(x, Ω^c)` where available (not for implicit domains).
    pub fn distance_to_complement(&self, x: &[f64]) -> Option<f64> {
        if !self.contains(x) {
            return Some(0.0);
        }
        match self {
            Domain::Polygon(p) => Some(p.boundary_distance([x[0], x[1]])),
            Domain::Ball(b) => {
                let r: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                Some(b.radius - r)
            }
            Domain::BoxUnion(boxes) => Some(box_union_complement_distance(boxes, x)),
            Domain::Implicit(_) => None,
        }
    }

    /// Sound classification of a closed cell against Ω.
    pub fn classify_box(&self, cell: &AxisBox) -> CellClass {
        match self {
            Domain::BoxUnion(boxes) => {
                if boxes.iter().any(|b| cell.inside_open(b)) {
                    CellClass::Inside
                } else if boxes.iter().any(|b| cell.meets_open(b)) {
                    CellClass::Uncertain
                } else {
                    CellClass::Outside
                }
            }
            Domain::Ball(b) => {
                if cell.distance_to(&b.center) >= b.radius {
                    CellClass::Outside
                } else if cell.farthest_distance(&b.center) < b.radius {
                    CellClass::Inside
                } else {
                    CellClass::Uncertain
                }
            }
            Domain::Polygon(p) => {
                let c = cell.center();
                let c = [c[0], c[1]];
                let dist = p.boundary_distance(c);
                if dist > cell.half_diagonal() {
                    if p.contains(c) {
                        CellClass::Inside
                    } else {
                        CellClass::Outside
                    }
                } else {
                    CellClass::Uncertain
                }
            }
            Domain::Implicit(i) => {
                if !cell.meets_open(&i.bbox) {
                    CellClass::Outside
                } else {
                    i.oracle.classify_box(cell).unwrap_or(CellClass::Uncertain)
                }
            }
        }
    }

    /// Whether `classify_box` can ever answer something other than
    /// `Uncertain` for cells meeting the domain.
    pub(crate) fn classifies_cells(&self) -> bool {
        match self {
            Domain::Implicit(i) => {
                i.oracle.classify_box(&i.bbox).is_some()
            }
            _ => true,
        }
    }

    /// Exact Lebesgue measure, when available.
    pub fn volume(&self) -> Option<f64> {
        match self {
            Domain::Polygon(p) => Some(p.area()),
            Domain::Ball(b) => Some(super::unit_ball_volume(b.center.len()) * b.radius.powi(b.center.len() as i32)),
            Domain::BoxUnion(boxes) => Some(box_union_volume(boxes)),
            Domain::Implicit(i) => i.oracle.volume(),
        }
    }

    /// Whether every geometric query on this domain is exact.
    pub fn is_analytic(&self) -> bool {
        !matches!(self, Domain::Implicit(_))
    }

    /// The image of the domain under `x ↦ t x`.
    pub fn scaled(&self, t: f64) -> Result<Domain> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(param("scale factor must be positive"));
        }
        Ok(match self {
            Domain::Polygon(p) => Domain::Polygon(Polygon {
                outer: p.outer.iter().map(|v| [v[0] * t, v[1] * t]).collect(),
                holes: p.holes.iter().map(|h| h.iter().map(|v| [v[0] * t, v[1] * t]).collect()).collect(),
            }),
            Domain::BoxUnion(boxes) => Domain::BoxUnion(
                boxes
                    .iter()
                    .map(|b| AxisBox {
                        lo: b.lo.iter().map(|v| v * t).collect(),
                        hi: b.hi.iter().map(|v| v * t).collect(),
                    })
                    .collect(),
            ),
            Domain::Ball(b) => Domain::Ball(Ball {
                center: b.center.iter().map(|v| v * t).collect(),
                radius: b.radius * t,
            }),
            Domain::Implicit(i) => {
                let inner = self.clone();
                let bbox = AxisBox {
                    lo: i.bbox.lo.iter().map(|v| v * t).collect(),
                    hi: i.bbox.hi.iter().map(|v| v * t).collect(),
                };
                Domain::Implicit(Implicit::from_fn(
                    move |x: &[f64]| {
                        let y: Vec<f64> = x.iter().map(|v| v / t).collect();
                        inner.contains(&y)
                    },
                    bbox,
                    i.step * t,
                )?)
            }
        })
    }
}

fn box_union_ray(boxes: &[AxisBox], x: &[f64], w: &[f64]) -> f64 {
    // Open parameter interval of the line inside each box.
    let intervals: Vec<(f64, f64)> = boxes
        .iter()
        .filter_map(|b| {
            let (mut a, mut z) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..x.len() {
                if w[i] == 0.0 {
                    if !(b.lo[i] < x[i] && x[i] < b.hi[i]) {
                        return None;
                    }
                } else {
                    let s1 = (b.lo[i] - x[i]) / w[i];
                    let s2 = (b.hi[i] - x[i]) / w[i];
                    a = a.max(s1.min(s2));
                    z = z.min(s1.max(s2));
                }
            }
            (a < z).then_some((a, z))
        })
        .collect();
    let mut hi = 0.0_f64;
    let mut lo = 0.0_f64;
    loop {
        let next = intervals
            .iter()
            .filter(|(a, z)| *a < hi && hi < *z)
            .map(|(_, z)| *z)
            .fold(hi, f64::max);
        if next <= hi {
            break;
        }
        hi = next;
    }
    loop {
        let next = intervals
            .iter()
            .filter(|(a, z)| *a < lo && lo < *z)
            .map(|(a, _)| *a)
            .fold(lo, f64::min);
        if next >= lo {
            break;
        }
        lo = next;
    }
    hi.min(-lo)
}

fn box_union_complement_distance(boxes: &[AxisBox], x: &[f64]) -> f64 {
    // The complement of a union of open boxes is a union of closed
    // (possibly unbounded) boxes, one per choice of an exterior half-space
    // for every box. Depth-first search over the choices with pruning.
    fn search(boxes: &[AxisBox], x: &[f64], lo: &mut Vec<f64>, hi: &mut Vec<f64>, best: &mut f64) {
        let dist = {
            let region = AxisBox { lo: lo.clone(), hi: hi.clone() };
            region.distance_to(x)
        };
        if dist >= *best {
            return;
        }
        let Some((b, rest)) = boxes.split_first() else {
            *best = dist;
            return;
        };
        for i in 0..x.len() {
            for upper in [false, true] {
                let (old_lo, old_hi) = (lo[i], hi[i]);
                if upper {
                    lo[i] = lo[i].max(b.hi[i]);
                } else {
                    hi[i] = hi[i].min(b.lo[i]);
                }
                if lo[i] <= hi[i] {
                    search(rest, x, lo, hi, best);
                }
                lo[i] = old_lo;
                hi[i] = old_hi;
            }
        }
    }
    let d = x.len();
    let mut best = f64::INFINITY;
    search(boxes, x, &mut vec![f64::NEG_INFINITY; d], &mut vec![f64::INFINITY; d], &mut best);
    best
}

fn box_union_volume(boxes: &[AxisBox]) -> f64 {
    let d = boxes[0].dim();
    let coords: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut c: Vec<f64> = boxes.iter().flat_map(|b| [b.lo[i], b.hi[i]]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let counts: Vec<usize> = coords.iter().map(|c| c.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut volume = 0.0;
    let mut mid = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        let mut cell = 1.0;
        for i in 0..d {
            let k = rem % counts[i];
            rem /= counts[i];
            mid[i] = 0.5 * (coords[i][k] + coords[i][k + 1]);
            cell *= coords[i][k + 1] - coords[i][k];
        }
        if boxes.iter().any(|b| b.contains_open(&mid)) {
            volume += cell;
        }
    }
    volume
}

fn implicit_ray(imp: &Implicit, x: &[f64], w: &[f64]) -> f64 {
    let reach = 2.0 * imp.bbox.half_diagonal() + imp.step;
    let member = |s: f64| {
        let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + s * b).collect();
        imp.bbox.contains_open(&y) && imp.oracle.contains(&y)
    };
    let exit = |sign: f64| {
        let mut inside = 0.0;
        let mut s = imp.step;
        while s <= reach + imp.step {
            if !member(sign * s) {
                let mut outside = s;
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (inside + outside);
                    if member(sign * mid) {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
                return outside;
            }
            inside = s;
            s += imp.step;
        }
        f64::INFINITY
    };
    exit(1.0).min(exit(-1.0))
}
