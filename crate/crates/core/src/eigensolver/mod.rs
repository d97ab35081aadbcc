//! Finite-difference reference eigenvalues: Dirichlet and Robin Laplacians,
//! the clamped bilaplacian and the Heisenberg sub-Laplacian.

mod solver;
mod sparse;

use serde::{Deserialize, Serialize};

pub use solver::SolverOptions;
pub use sparse::Csr;

use crate::error::{param, Error, Result};
use crate::geometry::{AxisBox, Domain};
use crate::heisenberg::HDomain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    DirichletLaplace,
    RobinLaplace { sigma: f64 },
    BilaplaceClamped,
    HeisenbergSublaplace {
        #[serde(rename = "N")]
        n: usize,
    },
}

/// Uniform grid with a numbering of the unknown nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub h: f64,
    /// Nodes per axis; node `i` on axis `a` sits at `origin[a] + i·h`.
    pub shape: Vec<usize>,
    /// Flat index (first axis fastest) of each unknown.
    pub nodes: Vec<usize>,
}

impl Grid {
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rest = flat;
        self.shape
            .iter()
            .zip(&self.origin)
            .map(|(&s, &o)| {
                let i = rest % s;
                rest /= s;
                o + i as f64 * self.h
            })
            .collect()
    }

    fn multi(&self, mut flat: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&s| {
                let i = flat % s;
                flat /= s;
                i
            })
            .collect()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).rev().fold(0, |acc, (&i, &s)| acc * s + i)
    }

    fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

/// A discretized operator `A` whose smallest eigenvalue approximates the
/// continuous one.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub kind: OperatorKind,
    pub grid: Grid,
    pub matrix: Csr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub value: f64,
    /// `‖Av - λv‖` for the unit eigenvector.
    pub residual: f64,
    pub h: f64,
    pub iterations: usize,
    pub unknowns: usize,
    /// Richardson value from this grid and the next coarser one.
    pub extrapolated: Option<f64>,
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(param(format!("grid spacing must be positive, got {h}")));
    }
    Ok(())
}

/// Number of cells of size `h` across `extent`, requiring a near-exact fit.
fn cells_across(extent: f64, h: f64) -> Result<usize> {
    let n = (extent / h).round();
    if n < 2.0 || ((n * h - extent).abs() > 1e-9 * extent) {
        return Err(param(format!("h = {h} must divide the box side {extent} into at least 2 cells")));
    }
    Ok(n as usize)
}

fn single_box(domain: &Domain, what: &str) -> Result<AxisBox> {
    match domain {
        Domain::BoxUnion(b) if b.len() == 1 => Ok(b[0].clone()),
        _ => Err(Error::Unsupported(format!("{what} is implemented for a single axis-aligned box only"))),
    }
}

/// Nodes strictly inside the bounding box, unknowns where the domain holds.
fn mask_grid(domain: &Domain, h: f64) -> Result<Grid> {
    let bbox = domain.bounding_box();
    let shape: Vec<usize> = (0..bbox.dim())
        .map(|a| {
            let n = ((bbox.hi[a] - bbox.lo[a]) / h - 1e-9).ceil() as usize;
            n.saturating_sub(1)
        })
        .collect();
    if shape.iter().any(|&s| s < 2) {
        return Err(param(format!("h = {h} leaves fewer than 2 nodes along some axis")));
    }
    let origin: Vec<f64> = bbox.lo.iter().map(|l| l + h).collect();
    let mut grid = Grid { origin, h, shape, nodes: Vec::new() };
    grid.nodes = (0..grid.len()).filter(|&f| domain.contains(&grid.point(f))).collect();
    if grid.nodes.is_empty() {
        return Err(param("no grid node falls inside the domain"));
    }
    Ok(grid)
}

/// Map from flat grid index to unknown number.
fn numbering(grid: &Grid) -> Vec<Option<usize>> {
    let mut map = vec![None; grid.len()];
    for (k, &f) in grid.nodes.iter().enumerate() {
        map[f] = Some(k);
    }
    map
}

/// Neighbour of `idx` along axis `a` in direction `dir`, if inside the grid.
fn step(grid: &Grid, idx: &[usize], a: usize, dir: isize) -> Option<usize> {
    let i = idx[a] as isize + dir;
    if i < 0 || i >= grid.shape[a] as isize {
        return None;
    }
    let mut j = idx.to_vec();
    j[a] = i as usize;
    Some(grid.flat(&j))
}

fn dirichlet_matrix(grid: &Grid) -> Csr {
    let map = numbering(grid);
    let d = grid.shape.len();
    let s = 1.0 / (grid.h * grid.h);
    let mut trips = Vec::with_capacity(grid.nodes.len() * (2 * d + 1));
    for (k, &f) in grid.nodes.iter().enumerate() {
        let idx = grid.multi(f);
        trips.push((k, k, 2.0 * d as f64 * s));
        for a in 0..d {
            for dir in [-1, 1] {
                if let Some(j) = step(grid, &idx, a, dir).and_then(|g| map[g]) {
                    trips.push((k, j, -s));
                }
            }
        }
    }
    Csr::from_triplets(grid.nodes.len(), grid.nodes.len(), trips)
}

impl GridOperator {
    pub fn assemble(domain: &Domain, kind: OperatorKind, h: f64) -> Result<Self> {
        match kind {
            OperatorKind::DirichletLaplace => Self::dirichlet(domain, h),
            OperatorKind::RobinLaplace { sigma } => Self::robin(domain, sigma, h),
            OperatorKind::BilaplaceClamped => Self::bilaplace_clamped(domain, h),
            OperatorKind::HeisenbergSublaplace { n } => Self::heisenberg(&HDomain::new(domain.clone(), n)?, h),
        }
    }

    /// Standard `(2d+1)`-point Laplacian with zero values off the mask.
    pub fn dirichlet(domain: &Domain, h: f64) -> Result<Self> {
        check_h(h)?;
        let grid = mask_grid(domain, h)?;
        let matrix = dirichlet_matrix(&grid);
        Ok(Self { kind: OperatorKind::DirichletLaplace, grid, matrix })
    }

    /// Robin Laplacian on a box, boundary nodes included. The ghost value
    /// from `∂u/∂ν + σu = 0` is eliminated, boundary rows are halved per
    /// boundary face to restore symmetry (mass `M`), and the matrix stored
    /// is `M^{-1/2} K M^{-1/2}`.
    pub fn robin(domain: &Domain, sigma: f64, h: f64) -> Result<Self> {
        check_h(h)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(param(format!("sigma must be positive, got {sigma}")));
        }
        let bx = single_box(domain, "the Robin discretization")?;
        let d = bx.dim();
        let cells: Vec<usize> = (0..d).map(|a| cells_across(bx.hi[a] - bx.lo[a], h)).collect::<Result<_>>()?;
        let shape: Vec<usize> = cells.iter().map(|c| c + 1).collect();
        let mut grid = Grid { origin: bx.lo.clone(), h, shape, nodes: Vec::new() };
        grid.nodes = (0..grid.len()).collect();
        let s = 1.0 / (h * h);
        // 1D pieces
        let m1 = |a: usize, i: usize| if i == 0 || i == cells[a] { 0.5 } else { 1.0 };
        let k1_diag = |a: usize, i: usize| if i == 0 || i == cells[a] { (1.0 + h * sigma) * s } else { 2.0 * s };
        let mass = |idx: &[usize]| (0..d).map(|a| m1(a, idx[a])).product::<f64>();
        let mut trips = Vec::with_capacity(grid.len() * (2 * d + 1));
        for f in 0..grid.len() {
            let idx = grid.multi(f);
            let mf = mass(&idx);
            let mut diag = 0.0;
            for a in 0..d {
                let others = mf / m1(a, idx[a]);
                diag += k1_diag(a, idx[a]) * others;
                for dir in [-1, 1] {
                    if let Some(g) = step(&grid, &idx, a, dir) {
                        let mg = mass(&grid.multi(g));
                        trips.push((f, g, -s * others / (mf * mg).sqrt()));
                    }
                }
            }
            trips.push((f, f, diag / mf));
        }
        let n = grid.len();
        Ok(Self { kind: OperatorKind::RobinLaplace { sigma }, grid, matrix: Csr::from_triplets(n, n, trips) })
    }

    /// Clamped bilaplacian on a box: `L²` for the Dirichlet Laplacian `L`
    /// plus the reflected ghost `u_{-1} = u_1`, which adds `2/h⁴` to the
    /// diagonal for each boundary face a node is adjacent to.
    pub fn bilaplace_clamped(domain: &Domain, h: f64) -> Result<Self> {
        check_h(h)?;
        let bx = single_box(domain, "the clamped bilaplacian")?;
        let d = bx.dim();
        for a in 0..d {
            cells_across(bx.hi[a] - bx.lo[a], h)?;
        }
        let grid = mask_grid(domain, h)?;
        let l = dirichlet_matrix(&grid);
        let mut trips = Vec::new();
        for i in 0..l.rows() {
            for (k, v) in l.row(i) {
                for (j, w) in l.row(k) {
                    trips.push((i, j, v * w));
                }
            }
        }
        let h4 = h.powi(4);
        for (k, &f) in grid.nodes.iter().enumerate() {
            let idx = grid.multi(f);
            let faces = (0..d).map(|a| (idx[a] == 0) as usize + (idx[a] + 1 == grid.shape[a]) as usize).sum::<usize>();
            if faces > 0 {
                trips.push((k, k, 2.0 * faces as f64 / h4));
            }
        }
        let n = grid.nodes.len();
        Ok(Self { kind: OperatorKind::BilaplaceClamped, grid, matrix: Csr::from_triplets(n, n, trips) })
    }

    /// `Σ_n D_nᵀ D_n` with `D_n u(p) = [u(p+he_n) - u(p)]/h - ½(e_n·Jz)[u(p+he_t) - u(p)]/h`
    /// over every grid point whose stencil touches an unknown.
    pub fn heisenberg(hd: &HDomain, h: f64) -> Result<Self> {
        check_h(h)?;
        let n_h = hd.n();
        let m = 2 * n_h;
        let inner = mask_grid(hd.domain(), h)?;
        // extended grid with one extra layer on each side
        let shape: Vec<usize> = inner.shape.iter().map(|s| s + 2).collect();
        let origin: Vec<f64> = inner.origin.iter().map(|o| o - h).collect();
        let mut grid = Grid { origin, h, shape, nodes: Vec::new() };
        grid.nodes = inner
            .nodes
            .iter()
            .map(|&f| {
                let idx: Vec<usize> = inner.multi(f).iter().map(|i| i + 1).collect();
                grid.flat(&idx)
            })
            .collect();
        let map = numbering(&grid);
        let unknowns = grid.nodes.len();
        let mut parts = Vec::with_capacity(m);
        for a in 0..m {
            let mut trips = Vec::new();
            let mut row = 0;
            for f in 0..grid.len() {
                let idx = grid.multi(f);
                let (Some(fa), Some(ft)) = (step(&grid, &idx, a, 1), step(&grid, &idx, m, 1)) else {
                    continue;
                };
                let (u0, ua, ut) = (map[f], map[fa], map[ft]);
                if u0.is_none() && ua.is_none() && ut.is_none() {
                    continue;
                }
                let z = grid.point(f);
                // (Jz)_a: z_{N+a} for a < N, -z_{a-N} otherwise
                let c = 0.5 * if a < n_h { z[n_h + a] } else { -z[a - n_h] };
                if let Some(k) = ua {
                    trips.push((row, k, 1.0 / h));
                }
                if let Some(k) = ut {
                    trips.push((row, k, -c / h));
                }
                if let Some(k) = u0 {
                    trips.push((row, k, (c - 1.0) / h));
                }
                row += 1;
            }
            parts.push(Csr::from_triplets(row, unknowns, trips));
        }
        let matrix = Csr::gram(&parts);
        Ok(Self { kind: OperatorKind::HeisenbergSublaplace { n: n_h }, grid, matrix })
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.rows()
    }
}

/// Smallest eigenvalue of `op`.
pub fn smallest_eigenvalue(op: &GridOperator, opts: &SolverOptions) -> Result<EigenResult> {
    smallest_eigenpair(op, opts).map(|(e, _)| e)
}

/// Smallest eigenvalue with its unit eigenvector (ordered like `op.grid.nodes`).
pub fn smallest_eigenpair(op: &GridOperator, opts: &SolverOptions) -> Result<(EigenResult, Vec<f64>)> {
    let pair = solver::lobpcg(&op.matrix, opts)?;
    if pair.value < -1e-9 * pair.value.abs().max(1.0) {
        return Err(Error::Numeric(format!("negative Ritz value {} for a nonnegative operator", pair.value)));
    }
    let result = EigenResult {
        value: pair.value,
        residual: pair.residual,
        h: op.grid.h,
        iterations: pair.iterations,
        unknowns: op.unknowns(),
        extrapolated: None,
    };
    Ok((result, pair.vector))
}

/// `(4λ_{h/2} - λ_h)/3` for a second-order scheme.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Solves at `h` and `h/2` and extrapolates; returns the fine result.
pub fn extrapolated_eigenvalue(domain: &Domain, kind: OperatorKind, h: f64, opts: &SolverOptions) -> Result<EigenResult> {
    let coarse = smallest_eigenvalue(&GridOperator::assemble(domain, kind, h)?, opts)?;
    let mut fine = smallest_eigenvalue(&GridOperator::assemble(domain, kind, h / 2.0)?, opts)?;
    fine.extrapolated = Some(richardson(coarse.value, fine.value));
    Ok(fine)
}

/// Smallest Robin eigenvalue of `-u''` on `(0, L)`: `k²` with `k tan(kL/2) = σ`.
pub fn robin_reference_interval(length: f64, sigma: f64) -> Result<f64> {
    if !(length > 0.0 && length.is_finite()) || !(sigma > 0.0) {
        return Err(param("interval length and sigma must be positive"));
    }
    if sigma.is_infinite() {
        return Ok((std::f64::consts::PI / length).powi(2));
    }
    let g = |k: f64| k * (k * length / 2.0).tan() - sigma;
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI / length);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).powi(2))
}

/// Robin reference on a box: sum of the one-dimensional values.
pub fn robin_reference_box(sides: &[f64], sigma: f64) -> Result<f64> {
    sides.iter().map(|&l| robin_reference_interval(l, sigma)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn solve(op: &GridOperator) -> EigenResult {
        smallest_eigenvalue(op, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn interval_stencil() {
        let dom = Domain::open_box(vec![0.0], vec![1.0]).unwrap();
        let op = GridOperator::dirichlet(&dom, 1.0 / 8.0).unwrap();
        assert_eq!(op.unknowns(), 7);
        for i in 0..7 {
            assert_eq!(op.matrix.get(i, i), 128.0);
            if i + 1 < 7 {
                assert_eq!(op.matrix.get(i, i + 1), -64.0);
                assert_eq!(op.matrix.get(i + 1, i), -64.0);
            }
        }
        assert_eq!(op.matrix.nnz(), 7 + 12);
        let e = solve(&op);
        let exact = 4.0 / (1.0 / 64.0) * (PI / 16.0).sin().powi(2);
        assert!((e.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn symmetric_on_masks() {
        let poly = Domain::polygon(vec![[0.0, 0.0], [1.0, 0.1], [0.7, 0.9], [0.2, 0.6]], vec![]).unwrap();
        assert_eq!(GridOperator::dirichlet(&poly, 0.05).unwrap().matrix.asymmetry(), 0.0);
        let sq = Domain::cube(2, 1.0).unwrap();
        assert!(GridOperator::robin(&sq, 1.3, 0.1).unwrap().matrix.asymmetry() < 1e-12);
        assert!(GridOperator::bilaplace_clamped(&sq, 0.1).unwrap().matrix.asymmetry() < 1e-12);
        let cube = HDomain::new(Domain::open_box(vec![-1.0; 3], vec![1.0; 3]).unwrap(), 1).unwrap();
        assert!(GridOperator::heisenberg(&cube, 0.25).unwrap().matrix.asymmetry() < 1e-12);
    }

    #[test]
    fn bilaplace_diagonal() {
        let sq = Domain::cube(2, 1.0).unwrap();
        let op = GridOperator::bilaplace_clamped(&sq, 0.125).unwrap();
        let h4 = 0.125f64.powi(4);
        let at = |i: usize, j: usize| op.grid.nodes.iter().position(|&f| f == op.grid.flat(&[i, j])).unwrap();
        assert!((op.matrix.get(at(3, 3), at(3, 3)) * h4 - 20.0).abs() < 1e-9);
        assert!((op.matrix.get(at(0, 3), at(0, 3)) * h4 - 21.0).abs() < 1e-9);
        assert!((op.matrix.get(at(0, 0), at(0, 0)) * h4 - 22.0).abs() < 1e-9);
    }

    #[test]
    fn square_convergence_ratio() {
        let sq = Domain::cube(2, 1.0).unwrap();
        let exact = 2.0 * PI * PI;
        let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&h| (solve(&GridOperator::dirichlet(&sq, h).unwrap()).value - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
        let e = extrapolated_eigenvalue(&sq, OperatorKind::DirichletLaplace, 1.0 / 32.0, &SolverOptions::default()).unwrap();
        assert!((e.extrapolated.unwrap() - exact).abs() < 1e-3 * exact);
        assert!(e.residual <= 1e-8 * e.value);
    }

    #[test]
    fn domain_monotonicity() {
        let big = Domain::open_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let small = Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 1.0]], vec![]).unwrap();
        let h = 1.0 / 32.0;
        let lb = solve(&GridOperator::dirichlet(&big, h).unwrap()).value;
        let ls = solve(&GridOperator::dirichlet(&small, h).unwrap()).value;
        assert!(ls >= lb);
    }

    #[test]
    fn robin_references() {
        // independent values from Brent's method on k tan(k/2) = σ
        assert!((robin_reference_interval(1.0, 1.0).unwrap() - 1.707_052_975_550_981).abs() < 1e-12);
        assert!((robin_reference_interval(1.0, 1.0).unwrap().sqrt() - 1.3065).abs() < 1e-4);
        assert!((robin_reference_box(&[1.0, 1.0], 0.5).unwrap() - 1.843_925_347_179_462).abs() < 1e-12);
        assert!((robin_reference_box(&[1.0, 1.0], 2.0).unwrap() - 5.921_391_075_159_736).abs() < 1e-12);
        assert!((robin_reference_box(&[1.0, 1.0], 1.0).unwrap() - 3.4138).abs() < 1e-3);
        assert!((robin_reference_interval(1.0, 1e12).unwrap() - PI * PI).abs() < 1e-9);
        assert_eq!(robin_reference_interval(2.0, f64::INFINITY).unwrap(), PI * PI / 4.0);
        assert!(robin_reference_interval(0.0, 1.0).is_err());
    }

    #[test]
    fn robin_against_reference() {
        let sq = Domain::cube(2, 1.0).unwrap();
        for sigma in [0.5, 1.0, 2.0] {
            let e = solve(&GridOperator::robin(&sq, sigma, 1.0 / 32.0).unwrap());
            let exact = robin_reference_box(&[1.0, 1.0], sigma).unwrap();
            assert!((e.value - exact).abs() < 1e-2 * exact, "sigma {sigma}: {} vs {exact}", e.value);
        }
    }

    #[test]
    fn clamped_plate() {
        let sq = Domain::cube(2, 1.0).unwrap();
        let e = extrapolated_eigenvalue(&sq, OperatorKind::BilaplaceClamped, 1.0 / 16.0, &SolverOptions::default()).unwrap();
        let x = e.extrapolated.unwrap();
        assert!((x - 1294.93).abs() < 0.02 * 1294.93, "{x}");
    }

    #[test]
    fn heisenberg_rows_at_zero_tilt() {
        let cube = HDomain::new(Domain::open_box(vec![-1.0; 3], vec![1.0; 3]).unwrap(), 1).unwrap();
        let op = GridOperator::heisenberg(&cube, 0.25).unwrap();
        let e = solve(&op);
        // dominates the Dirichlet value in z alone: π²/4 per horizontal direction
        assert!(e.value > PI * PI / 4.0 && e.value.is_finite());
    }

    #[test]
    fn unsupported_and_bad_inputs() {
        let disk = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(GridOperator::robin(&disk, 1.0, 0.1), Err(Error::Unsupported(_))));
        assert!(matches!(GridOperator::bilaplace_clamped(&disk, 0.1), Err(Error::Unsupported(_))));
        let sq = Domain::cube(2, 1.0).unwrap();
        assert!(GridOperator::robin(&sq, 1.0, 0.3).is_err());
        assert!(GridOperator::dirichlet(&sq, 0.0).is_err());
        assert!(GridOperator::assemble(&sq, OperatorKind::HeisenbergSublaplace { n: 1 }, 0.1).is_err());
    }
}
