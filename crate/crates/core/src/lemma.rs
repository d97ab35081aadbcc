//! Pointwise lower bounds for angular averages of `δ_ω^{-α}` in terms of
//! the ball fraction `ψ_r`, the one-dimensional inequalities behind them,
//! and the constants used by the polyharmonic bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::geometry::{ball_fraction, Budget, DirectionSet, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaParams {
    pub alpha: f64,
    pub d: usize,
    pub r: f64,
    pub ell: f64,
}

impl LemmaParams {
    pub fn new(alpha: f64, d: usize, r: f64, ell: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(param(format!("alpha must be positive, got {alpha}")));
        }
        if d < 2 {
            return Err(param(format!("dimension must be at least 2, got {d}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(param(format!("radius must be positive, got {r}")));
        }
        if !(ell >= 0.0) {
            return Err(param(format!("shift must be nonnegative, got {ell}")));
        }
        Ok(Self { alpha, d, r, ell })
    }

    /// `((d+α)/α)^{α/d} (d+α)/d`.
    pub fn linear_factor(&self) -> f64 {
        let (a, d) = (self.alpha, self.d as f64);
        ((d + a) / a).powf(a / d) * (d + a) / d
    }
}

fn check_fraction(psi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(param(format!("fraction must lie in [0, 1], got {psi}")));
    }
    Ok(())
}

/// `r^{-α}(ψ^{-α/d} - 1)`; `+∞` at `ψ = 0`.
pub fn lemma_rhs1(p: &LemmaParams, psi: f64) -> Result<f64> {
    check_fraction(psi)?;
    if psi == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(p.r.powf(-p.alpha) * (psi.powf(-p.alpha / p.d as f64) - 1.0))
}

pub fn lemma_rhs2(p: &LemmaParams, psi: f64) -> Result<f64> {
    check_fraction(psi)?;
    Ok(p.r.powf(-p.alpha) * p.linear_factor() * (1.0 - psi))
}

/// `(r+ℓ)^{-α}(1-ψ)`, a lower bound for the average of `(δ_ω+ℓ)^{-α}`.
pub fn lemma_rhs3(p: &LemmaParams, psi: f64) -> Result<f64> {
    check_fraction(psi)?;
    Ok((p.r + p.ell).powf(-p.alpha) * (1.0 - psi))
}

/// Both sides of `(1-X)_+ <= β^β/(β+1)^{β+1} X^{-β}`.
pub fn elementary_bound(x: f64, beta: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !(beta > 0.0) {
        return Err(param("elementary inequality needs X > 0 and beta > 0"));
    }
    let lhs = (1.0 - x).max(0.0);
    let rhs = beta.powf(beta) / (beta + 1.0).powf(beta + 1.0) * x.powf(-beta);
    Ok((lhs, rhs))
}

/// Piecewise constant `s: (0, ∞) -> [0, 1]`, equal to `values[i]` on
/// `(breaks[i-1], breaks[i])` (with `breaks[-1] = 0`) and zero after the
/// last break.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() {
            return Err(param("step function needs one value per break"));
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if !(b > prev && b.is_finite()) {
                return Err(param("breaks must be finite and strictly increasing from 0"));
            }
            prev = b;
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(param("step values must lie in [0, 1]"));
        }
        Ok(Self { breaks, values })
    }

    pub fn zero() -> Self {
        Self { breaks: Vec::new(), values: Vec::new() }
    }

    /// `𝟙(1 < t < (M+1)^{1/α})`, the extremizer for a prescribed `M`.
    pub fn bathtub(m: f64, alpha: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) || !(alpha > 0.0) {
            return Err(param("bathtub needs M >= 0 and alpha > 0"));
        }
        if m == 0.0 {
            return Ok(Self::zero());
        }
        Self::new(vec![1.0, (m + 1.0).powf(1.0 / alpha)], vec![0.0, 1.0])
    }

    /// Random step function with `pieces` pieces and support in `(0, cutoff)`.
    pub fn random<R: Rng>(rng: &mut R, pieces: usize, cutoff: f64) -> Result<Self> {
        if pieces == 0 || !(cutoff > 0.0) {
            return Err(param("random step function needs pieces >= 1 and cutoff > 0"));
        }
        let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.random::<f64>() * cutoff).collect();
        cuts.push(cutoff);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.retain(|&c| c > 0.0);
        let values = cuts
            .iter()
            .map(|_| if rng.random_bool(0.2) { rng.random_range(0..2) as f64 } else { rng.random::<f64>() })
            .collect();
        Self::new(cuts, values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.breaks.iter().position(|&b| t < b) {
            Some(i) => self.values[i],
            None => 0.0,
        }
    }

    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let starts = std::iter::once(0.0).chain(self.breaks.iter().copied());
        starts.zip(&self.breaks).zip(&self.values).map(|((a, &b), &v)| (a, b, v))
    }

    /// `α ∫_a^∞ s(t) t^{α-1} dt`, exact.
    pub fn power_moment(&self, alpha: f64, from: f64) -> f64 {
        self.pieces()
            .map(|(a, b, v)| {
                let (a, b) = (a.max(from), b.max(from));
                v * (b.powf(alpha) - a.powf(alpha))
            })
            .sum()
    }

    /// `d ∫_1^∞ s(t) t^{-d-1} dt`, exact.
    pub fn tail_moment(&self, d: f64) -> f64 {
        self.pieces()
            .map(|(a, b, v)| {
                let (a, b) = (a.max(1.0), b.max(1.0));
                v * (a.powf(-d) - b.powf(-d))
            })
            .sum()
    }
}

/// Both sides of `α∫_0^∞ s t^{α-1} dt >= (1 - d∫_1^∞ s t^{-d-1} dt)^{-α/d} - 1`.
pub fn distribution_inequality(s: &StepFunction, alpha: f64, d: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) || !(d > 0.0) {
        return Err(param("distribution inequality needs alpha > 0 and d > 0"));
    }
    let lhs = s.power_moment(alpha, 0.0);
    let tail = s.tail_moment(d);
    let rhs = (1.0 - tail).powf(-alpha / d) - 1.0;
    Ok((lhs, rhs))
}

/// Exact rational `C_{m,d} = (d+2m-2)(d+2m-4)···d · (2m-1)!! / 4^m` as
/// (numerator, denominator).
pub fn owen_constant_exact(m: usize, d: usize) -> Result<(u128, u128)> {
    if m == 0 || d < 2 {
        return Err(param(format!("constant needs m >= 1 and d >= 2, got m = {m}, d = {d}")));
    }
    let overflow = || Error::Numeric(format!("C_(m,d) overflows for m = {m}, d = {d}"));
    let mut num: u128 = 1;
    for k in 0..m {
        num = num.checked_mul((d + 2 * k) as u128).ok_or_else(overflow)?;
        num = num.checked_mul((2 * k + 1) as u128).ok_or_else(overflow)?;
    }
    let den = 4u128.checked_pow(m as u32).ok_or_else(overflow)?;
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn owen_constant(m: usize, d: usize) -> Result<f64> {
    let (n, q) = owen_constant_exact(m, d)?;
    Ok(n as f64 / q as f64)
}

/// `c_{m,d} = ((d+2m)/(2m))^{2m/d} (d+2m)/d`.
pub fn polyharmonic_constant(m: usize, d: usize) -> Result<f64> {
    if m == 0 || d < 2 {
        return Err(param(format!("constant needs m >= 1 and d >= 2, got m = {m}, d = {d}")));
    }
    let (a, d) = (2.0 * m as f64, d as f64);
    Ok(((d + a) / a).powf(a / d) * (d + a) / d)
}

/// Outcome of one randomized oracle family.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OracleOutcome {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Smallest observed `lhs - rhs` (negative means a violation).
    pub worst_margin: f64,
}

impl OracleOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: &'static str,
    trials: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, trials: 0, failures: 0, worst: f64::INFINITY }
    }

    fn record(&mut self, lhs: f64, rhs: f64, tol: f64) {
        self.trials += 1;
        let margin = lhs - rhs;
        if margin < -tol || margin.is_nan() {
            self.failures += 1;
        }
        self.worst = self.worst.min(margin);
    }

    fn finish(self) -> OracleOutcome {
        OracleOutcome { name: self.name.into(), trials: self.trials, failures: self.failures, worst_margin: self.worst }
    }
}

/// Trial counts for [`oracle_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub distribution_trials: usize,
    pub elementary_trials: usize,
    pub seed: u64,
}

impl OracleConfig {
    /// `trials` step functions and ten times as many elementary draws.
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { distribution_trials: trials, elementary_trials: 10 * trials, seed }
    }
}

/// Randomized checks of the elementary and distribution inequalities, the
/// bathtub equality case and the elementary tangency point.
pub fn oracle_suite(cfg: &OracleConfig) -> Result<Vec<OracleOutcome>> {
    if cfg.distribution_trials == 0 || cfg.elementary_trials == 0 {
        return Err(param("trial counts must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut elem = Tally::new("elementary");
    for _ in 0..cfg.elementary_trials {
        let beta = rng.random_range(0.05..8.0);
        let x = (rng.random_range(-6.0..3.0f64)).exp();
        let (lhs, rhs) = elementary_bound(x, beta)?;
        // lhs <= rhs, so record rhs - lhs as the margin
        elem.record(rhs, lhs, 1e-12);
    }

    let mut tangent = Tally::new("elementary_tangency");
    for k in 0..cfg.elementary_trials.min(1000) {
        let beta = match k {
            0 => 0.5,
            1 => 1.0,
            2 => 2.0,
            _ => rng.random_range(0.05..8.0),
        };
        let (lhs, rhs) = elementary_bound(beta / (beta + 1.0), beta)?;
        tangent.record(-(lhs - rhs).abs(), 0.0, 1e-12);
    }

    let alphas = [2.0, 4.0, 6.0];
    let dims = [2.0, 3.0];
    let mut dist = Tally::new("distribution");
    for k in 0..cfg.distribution_trials {
        let alpha = alphas[k % 3];
        let d = dims[(k / 3) % 2];
        let cutoff = rng.random_range(0.5..4.0);
        let s = StepFunction::random(&mut rng, 50, cutoff)?;
        let (lhs, rhs) = distribution_inequality(&s, alpha, d)?;
        dist.record(lhs, rhs, 1e-12 * (1.0 + lhs.abs()));
    }

    let mut bath = Tally::new("bathtub_equality");
    for k in 0..cfg.distribution_trials {
        let alpha = alphas[k % 3];
        let d = dims[(k / 3) % 2];
        let m = rng.random_range(0.0..3.0);
        let s = StepFunction::bathtub(m, alpha)?;
        let (lhs, rhs) = distribution_inequality(&s, alpha, d)?;
        bath.record(-(lhs - rhs).abs(), 0.0, 1e-12 * (1.0 + m));
    }

    Ok(vec![elem.finish(), tangent.finish(), dist.finish(), bath.finish()])
}

/// Pointwise comparison at `x`: angular averages of `δ_ω^{-α}` and
/// `(δ_ω+ℓ)^{-α}` against the three right-hand sides evaluated at a
/// fraction estimate.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PointwiseCheck {
    pub average: f64,
    pub shifted_average: f64,
    pub psi: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub rhs3: f64,
}

impl PointwiseCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.average >= self.rhs1 - tol && self.average >= self.rhs2 - tol && self.shifted_average >= self.rhs3 - tol
    }
}

pub fn pointwise_check(
    domain: &Domain,
    x: &[f64],
    params: &LemmaParams,
    dirs: &DirectionSet,
    budget: Budget,
) -> Result<PointwiseCheck> {
    if domain.dim() != params.d || dirs.dim() != params.d {
        return Err(param("dimension mismatch between domain, directions and parameters"));
    }
    let mut average = 0.0;
    let mut shifted_average = 0.0;
    for (w, wt) in dirs.iter() {
        let delta = domain.ray_distance(x, w)?;
        average += wt * delta.powf(-params.alpha);
        shifted_average += wt * (delta + params.ell).powf(-params.alpha);
    }
    let psi = ball_fraction(domain, x, params.r, budget)?.value.clamp(0.0, 1.0);
    Ok(PointwiseCheck {
        average,
        shifted_average,
        psi,
        rhs1: lemma_rhs1(params, psi)?,
        rhs2: lemma_rhs2(params, psi)?,
        rhs3: lemma_rhs3(params, psi)?,
    })
}
