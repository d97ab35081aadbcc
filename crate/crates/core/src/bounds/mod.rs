//! Eigenvalue lower bounds from Hardy weights and ball fractions, and the
//! classical baselines they are compared against.

mod bessel;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_first_zero, bessel_series};

use crate::error::{param, Error, Result};
use crate::geometry::{sup_ball_fraction, unit_ball_volume, DirectionSet, Domain, FractionEstimate, Inradius, SupConfig};
use crate::heisenberg::{sup_hyperplane_fraction, HDomain};
use crate::lemma::{owen_constant, polyharmonic_constant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    RobinThmMain,
    PolyEq1,
    PolyEq2,
    HeisenbergEq1,
    HeisenbergEq2,
    Lieb,
    DaviesLieb1,
    DaviesLieb2,
    RfkVolume,
    HerschProtter,
    Kovarik,
    AppendixMeanconvex,
    AppendixConvex,
}

impl BoundId {
    pub const ALL: [BoundId; 13] = [
        BoundId::RobinThmMain,
        BoundId::PolyEq1,
        BoundId::PolyEq2,
        BoundId::HeisenbergEq1,
        BoundId::HeisenbergEq2,
        BoundId::Lieb,
        BoundId::DaviesLieb1,
        BoundId::DaviesLieb2,
        BoundId::RfkVolume,
        BoundId::HerschProtter,
        BoundId::Kovarik,
        BoundId::AppendixMeanconvex,
        BoundId::AppendixConvex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::RobinThmMain => "robin_thm_main",
            BoundId::PolyEq1 => "poly_eq1",
            BoundId::PolyEq2 => "poly_eq2",
            BoundId::HeisenbergEq1 => "heisenberg_eq1",
            BoundId::HeisenbergEq2 => "heisenberg_eq2",
            BoundId::Lieb => "lieb",
            BoundId::DaviesLieb1 => "davies_lieb1",
            BoundId::DaviesLieb2 => "davies_lieb2",
            BoundId::RfkVolume => "rfk_volume",
            BoundId::HerschProtter => "hersch_protter",
            BoundId::Kovarik => "kovarik",
            BoundId::AppendixMeanconvex => "appendix_meanconvex",
            BoundId::AppendixConvex => "appendix_convex",
        }
    }

    /// Whether the value depends on the free radius `r`.
    pub fn uses_radius(self) -> bool {
        matches!(
            self,
            BoundId::RobinThmMain
                | BoundId::PolyEq1
                | BoundId::PolyEq2
                | BoundId::HeisenbergEq1
                | BoundId::HeisenbergEq2
                | BoundId::Lieb
                | BoundId::DaviesLieb1
                | BoundId::DaviesLieb2
        )
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| param(format!("unknown bound id {s:?}")))
    }
}

/// Inputs a bound was evaluated with; unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub d: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub inradius: Option<f64>,
    pub volume: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub inputs: BoundInputs,
    pub fraction: Option<FractionEstimate>,
    /// Lower bound on the eigenvalue; always finite and nonnegative.
    pub value: f64,
    /// The inequality `λ >= value` is guaranteed for the true domain.
    pub valid: bool,
    /// The underlying formula was infinite or its fraction exceeded 1.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(bound_id: BoundId, inputs: BoundInputs) -> Self {
        Self { bound_id, inputs, fraction: None, value: 0.0, valid: false, degenerate: false, notes: Vec::new() }
    }

    /// Fills value/valid/degenerate from a formula in the fraction `Ψ`.
    fn from_fraction(bound_id: BoundId, inputs: BoundInputs, psi: &FractionEstimate, f: impl Fn(f64) -> f64) -> Self {
        let mut rep = Self::new(bound_id, inputs);
        rep.fraction = Some(*psi);
        rep.valid = psi.is_certified();
        if !rep.valid {
            rep.notes.push("fraction is an estimate, not an upper enclosure".into());
        }
        if psi.value > 1.0 {
            rep.degenerate = true;
            rep.notes.push(format!("fraction {} exceeds 1; clamped", psi.value));
            rep.value = 0.0;
            return rep;
        }
        let v = f(psi.value.max(0.0));
        if v.is_finite() {
            rep.value = v.max(0.0);
        } else {
            rep.degenerate = true;
            rep.notes.push("formula is infinite at zero fraction; reported as 0".into());
        }
        rep
    }
}

/// Pointwise value of a Hardy weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyWeightSample {
    pub point: Vec<f64>,
    pub value: f64,
    pub directions: usize,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(param(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_dirs(domain: &Domain, dirs: &DirectionSet) -> Result<()> {
    if dirs.dim() != domain.dim() {
        return Err(param("direction set dimension differs from the domain"));
    }
    Ok(())
}

/// `μ_σ(x) = d Σ_i w_i (δ_{ω_i}(x) + 1/(2σ))^{-2}`.
pub fn mu_sigma(domain: &Domain, sigma: f64, x: &[f64], dirs: &DirectionSet) -> Result<HardyWeightSample> {
    check_positive("sigma", sigma)?;
    check_dirs(domain, dirs)?;
    let shift = 0.5 / sigma;
    let mut sum = 0.0;
    for (w, wt) in dirs.iter() {
        sum += wt * (domain.ray_distance(x, w)? + shift).powi(-2);
    }
    Ok(HardyWeightSample { point: x.to_vec(), value: domain.dim() as f64 * sum, directions: dirs.len() })
}

/// `M^{(m)}(x) = Σ_i w_i δ_{ω_i}(x)^{-2m}`.
pub fn owen_weight(domain: &Domain, m: usize, x: &[f64], dirs: &DirectionSet) -> Result<HardyWeightSample> {
    if m == 0 {
        return Err(param("m must be at least 1"));
    }
    check_dirs(domain, dirs)?;
    let mut sum = 0.0;
    for (w, wt) in dirs.iter() {
        sum += wt * domain.ray_distance(x, w)?.powi(-2 * m as i32);
    }
    Ok(HardyWeightSample { point: x.to_vec(), value: sum, directions: dirs.len() })
}

const LIPSCHITZ_NOTE: &str = "assumes a uniformly Lipschitz boundary (asserted, not verified)";

/// `d σ² (1+2σr)^{-2} (1 - Ψ_r)`.
pub fn robin_bound(d: usize, sigma: f64, r: f64, psi: &FractionEstimate) -> Result<BoundReport> {
    check_positive("sigma", sigma)?;
    check_positive("r", r)?;
    if d < 2 {
        return Err(param("dimension must be at least 2"));
    }
    let inputs = BoundInputs { d: Some(d), sigma: Some(sigma), r: Some(r), ..Default::default() };
    let coef = d as f64 * sigma * sigma / (1.0 + 2.0 * sigma * r).powi(2);
    let mut rep = BoundReport::from_fraction(BoundId::RobinThmMain, inputs, psi, |p| coef * (1.0 - p));
    rep.notes.push(LIPSCHITZ_NOTE.into());
    Ok(rep)
}

/// First Dirichlet eigenvalue of the unit ball, `j²_{(d-2)/2,1}`.
pub fn unit_ball_dirichlet(d: usize) -> Result<f64> {
    if !(2..=22).contains(&d) {
        return Err(param(format!("dimension must lie in [2, 22], got {d}")));
    }
    Ok(bessel_first_zero((d as f64 - 2.0) / 2.0)?.powi(2))
}

/// Both polyharmonic bounds; for `m = 1` these are the two Dirichlet bounds
/// and Lieb's bound is appended.
pub fn polyharmonic_bounds(d: usize, m: usize, r: f64, psi: &FractionEstimate) -> Result<Vec<BoundReport>> {
    check_positive("r", r)?;
    let big_c = owen_constant(m, d)?;
    let small_c = polyharmonic_constant(m, d)?;
    let inputs = BoundInputs { d: Some(d), m: Some(m), r: Some(r), ..Default::default() };
    let scale = r.powi(-2 * m as i32);
    let expo = -2.0 * m as f64 / d as f64;
    let (id1, id2) = if m == 1 { (BoundId::DaviesLieb1, BoundId::DaviesLieb2) } else { (BoundId::PolyEq1, BoundId::PolyEq2) };
    let mut out = vec![
        BoundReport::from_fraction(id1, inputs.clone(), psi, |p| big_c * scale * (p.powf(expo) - 1.0)),
        BoundReport::from_fraction(id2, inputs.clone(), psi, |p| small_c * big_c * scale * (1.0 - p)),
    ];
    if m == 1 {
        let lb = unit_ball_dirichlet(d)?;
        out.push(BoundReport::from_fraction(BoundId::Lieb, inputs, psi, |p| lb * scale * (p.powf(expo) - 1.0)));
    }
    Ok(out)
}

/// `(N/2) r^{-2} (Ψ̃^{-1/N} - 1)` and `((N+1)^{(N+1)/N}/2) r^{-2} (1 - Ψ̃)`.
pub fn heisenberg_bounds(n: usize, r: f64, psi: &FractionEstimate) -> Result<Vec<BoundReport>> {
    if n == 0 {
        return Err(param("N must be at least 1"));
    }
    check_positive("r", r)?;
    let nf = n as f64;
    let inputs = BoundInputs { n: Some(n), r: Some(r), ..Default::default() };
    let scale = r.powi(-2);
    let c2 = (nf + 1.0).powf((nf + 1.0) / nf) / 2.0;
    Ok(vec![
        BoundReport::from_fraction(BoundId::HeisenbergEq1, inputs.clone(), psi, |p| {
            nf / 2.0 * scale * (p.powf(-1.0 / nf) - 1.0)
        }),
        BoundReport::from_fraction(BoundId::HeisenbergEq2, inputs, psi, |p| c2 * scale * (1.0 - p)),
    ])
}

/// Geometric data for the classical bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineInputs {
    pub d: usize,
    /// `|Ω|` and whether it is exact.
    pub volume: Option<(f64, bool)>,
    pub inradius: Option<Inradius>,
    /// User-asserted hypotheses; never inferred.
    pub convex: bool,
    pub mean_convex: bool,
    /// Robin parameter; the Robin baselines are skipped without it.
    pub sigma: Option<f64>,
}

impl BaselineInputs {
    pub fn from_domain(domain: &Domain, inradius: Inradius, convex: bool, mean_convex: bool, sigma: Option<f64>) -> Self {
        Self {
            d: domain.dim(),
            volume: domain.volume().map(|v| (v, true)),
            inradius: Some(inradius),
            convex,
            mean_convex,
            sigma,
        }
    }
}

/// Rayleigh–Faber–Krahn, Hersch–Protter and the three Robin inradius bounds.
pub fn baseline_bounds(inp: &BaselineInputs) -> Result<Vec<BoundReport>> {
    if inp.d < 2 {
        return Err(param("dimension must be at least 2"));
    }
    let d = inp.d;
    let mut out = Vec::new();

    let (vol, vol_exact) = inp.volume.ok_or_else(|| param("volume is required"))?;
    check_positive("volume", vol)?;
    let lb = unit_ball_dirichlet(d)?;
    let c_d = lb * unit_ball_volume(d).powf(2.0 / d as f64);
    let mut rfk = BoundReport::new(BoundId::RfkVolume, BoundInputs { d: Some(d), volume: Some(vol), ..Default::default() });
    rfk.value = c_d * vol.powf(-2.0 / d as f64);
    rfk.valid = vol_exact;
    if !vol_exact {
        rfk.notes.push("volume is approximate".into());
    }
    out.push(rfk);

    let inr = inp.inradius.ok_or_else(|| param("inradius is required"))?;
    // every inradius bound decreases in R, so an upper bound on R keeps them valid
    let (big_r, r_certified) = match inr.upper {
        Some(u) => (u, true),
        None => (inr.value, false),
    };
    check_positive("inradius", big_r)?;
    let base = BoundInputs { d: Some(d), inradius: Some(big_r), ..Default::default() };
    let r_note = |rep: &mut BoundReport| {
        if !r_certified {
            rep.notes.push("inradius is an estimate, not an upper bound".into());
        }
    };
    let hyp_note = |rep: &mut BoundReport, held: bool, what: &str| {
        if !held {
            rep.notes.push(format!("requires {what}; not asserted"));
        }
    };

    let mut hp = BoundReport::new(BoundId::HerschProtter, base.clone());
    hp.value = PI * PI / (4.0 * big_r * big_r);
    let held = inp.convex || inp.mean_convex;
    hp.valid = held && r_certified;
    hyp_note(&mut hp, held, "a convex or mean-convex domain");
    r_note(&mut hp);
    out.push(hp);

    if let Some(sigma) = inp.sigma {
        check_positive("sigma", sigma)?;
        let inputs = BoundInputs { sigma: Some(sigma), ..base };
        let kov = sigma / (4.0 * big_r * (1.0 + sigma * big_r));
        let conv = 2.0 * sigma * sigma / (1.0 + 2.0 * sigma * big_r).powi(2);
        for (id, value, held, what) in [
            (BoundId::Kovarik, kov, inp.convex, "a convex domain"),
            (BoundId::AppendixMeanconvex, kov, inp.mean_convex, "a C2 boundary with nonnegative mean curvature"),
            (BoundId::AppendixConvex, conv, inp.convex, "a convex domain"),
        ] {
            let mut rep = BoundReport::new(id, inputs.clone());
            rep.value = value;
            rep.valid = held && r_certified;
            hyp_note(&mut rep, held, what);
            r_note(&mut rep);
            out.push(rep);
        }
    }
    Ok(out)
}

/// Which operator a sweep targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    Dirichlet,
    Robin { sigma: f64 },
    Polyharmonic { m: usize },
}

/// All `r`-dependent bounds for `problem` at every radius, computing
/// `Ψ_r` once per radius.
pub fn sweep_bounds(domain: &Domain, problem: Problem, radii: &[f64], sup: &SupConfig) -> Result<Vec<BoundReport>> {
    if radii.is_empty() {
        return Err(param("radius grid is empty"));
    }
    let d = domain.dim();
    let mut out = Vec::new();
    for &r in radii {
        check_positive("r", r)?;
        let psi = sup_ball_fraction(domain, r, sup)?;
        match problem {
            Problem::Dirichlet => out.extend(polyharmonic_bounds(d, 1, r, &psi)?),
            Problem::Polyharmonic { m } => out.extend(polyharmonic_bounds(d, m, r, &psi)?),
            Problem::Robin { sigma } => out.push(robin_bound(d, sigma, r, &psi)?),
        }
    }
    Ok(out)
}

pub fn sweep_heisenberg(hd: &HDomain, radii: &[f64], sup: &SupConfig) -> Result<Vec<BoundReport>> {
    if radii.is_empty() {
        return Err(param("radius grid is empty"));
    }
    let mut out = Vec::new();
    for &r in radii {
        check_positive("r", r)?;
        let psi = sup_hyperplane_fraction(hd, r, sup)?;
        out.extend(heisenberg_bounds(hd.n(), r, &psi)?);
    }
    Ok(out)
}

/// Largest report with the given id; ties go to the smaller radius. If no
/// report has a positive value, the result has value 0 and is flagged
/// degenerate.
pub fn best_bound(reports: &[BoundReport], id: BoundId) -> Result<BoundReport> {
    let mut best: Option<&BoundReport> = None;
    for rep in reports.iter().filter(|r| r.bound_id == id) {
        best = match best {
            None => Some(rep),
            Some(b) => {
                let (rb, rr) = (b.inputs.r.unwrap_or(0.0), rep.inputs.r.unwrap_or(0.0));
                if rep.value > b.value || (rep.value == b.value && rr < rb) {
                    Some(rep)
                } else {
                    Some(b)
                }
            }
        };
    }
    let mut best = best.cloned().ok_or_else(|| param(format!("no reports for {id}")))?;
    if best.value <= 0.0 {
        best.degenerate = true;
        best.notes.push("no radius gives a positive bound".into());
    }
    Ok(best)
}
