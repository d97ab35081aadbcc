use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use eigenbound::bounds::{
    baseline_bounds, best_bound, sweep_bounds, sweep_heisenberg, BaselineInputs, BoundId, BoundReport, Problem,
};
use eigenbound::eigensolver::{
    richardson, smallest_eigenvalue, EigenResult, GridOperator, OperatorKind, SolverOptions,
};
use eigenbound::geometry::{inradius, Domain, DomainSpec, SupConfig};
use eigenbound::heisenberg::HDomain;
use eigenbound::lemma::{oracle_suite, OracleConfig};
use eigenbound::report::{CheckRow, EigenRow, Report};

use crate::{Kind, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmd {
    Bound,
    Eig,
    Validate,
    Sweep,
    Oracle,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Cmd,
    pub domain: Option<PathBuf>,
    pub kind: Kind,
    pub sigma: f64,
    pub m: usize,
    pub n: Option<usize>,
    pub radii: Vec<f64>,
    pub h: Option<f64>,
    pub cover_h: Option<f64>,
    pub cell: Option<f64>,
    pub samples: usize,
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub richardson: bool,
    pub convex: bool,
    pub mean_convex: bool,
}

/// Margin in `bound <= λ (1 + margin)`; the sub-Laplacian grid is coarser.
const MARGIN: f64 = 0.02;
const MARGIN_HEISENBERG: f64 = 0.05;

struct Loaded {
    label: String,
    spec: DomainSpec,
    domain: Domain,
}

fn load(cfg: &RunConfig) -> Result<Loaded> {
    let path = cfg.domain.as_ref().ok_or_else(|| anyhow!("--domain is required"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = DomainSpec::from_json(&text)?;
    let domain = spec.build()?;
    let label = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Loaded { label, spec, domain })
}

fn longest_side(domain: &Domain) -> f64 {
    let b = domain.bounding_box();
    b.lo.iter().zip(&b.hi).map(|(l, h)| h - l).fold(0.0, f64::max)
}

fn sup_config(cfg: &RunConfig, domain: &Domain) -> SupConfig {
    let h = cfg.cover_h.unwrap_or(longest_side(domain) / 20.0);
    let mut sup = match cfg.mode {
        Mode::Estimate => SupConfig::estimate(h),
        Mode::Certify => SupConfig::enclosure(h),
    };
    sup.samples = cfg.samples;
    sup.seed = cfg.seed;
    if let Some(c) = cfg.cell {
        sup.cell = c;
    }
    sup
}

fn fd_spacing(cfg: &RunConfig, domain: &Domain) -> f64 {
    let per_side = if domain.dim() <= 2 { 64.0 } else { 32.0 };
    cfg.h.unwrap_or(longest_side(domain) / per_side)
}

fn hdomain(cfg: &RunConfig, loaded: &Loaded) -> Result<HDomain> {
    Ok(match cfg.n {
        Some(n) => HDomain::new(loaded.domain.clone(), n)?,
        None => HDomain::from_spec(&loaded.spec)?,
    })
}

fn problem(cfg: &RunConfig) -> Problem {
    match cfg.kind {
        Kind::Dirichlet => Problem::Dirichlet,
        Kind::Robin => Problem::Robin { sigma: cfg.sigma },
        Kind::Poly if cfg.m == 1 => Problem::Dirichlet,
        Kind::Poly => Problem::Polyharmonic { m: cfg.m },
        Kind::Heisenberg => unreachable!("Heisenberg sweeps go through sweep_heisenberg"),
    }
}

fn all_bounds(cfg: &RunConfig, loaded: &Loaded) -> Result<Vec<BoundReport>> {
    let domain = &loaded.domain;
    let sup = sup_config(cfg, domain);
    if cfg.kind == Kind::Heisenberg {
        return Ok(sweep_heisenberg(&hdomain(cfg, loaded)?, &cfg.radii, &sup)?);
    }
    let mut out = sweep_bounds(domain, problem(cfg), &cfg.radii, &sup)?;
    let second_order = matches!(problem(cfg), Problem::Dirichlet | Problem::Robin { .. });
    if second_order && domain.volume().is_some() {
        let inr = inradius(domain, sup.h)?;
        let sigma = (cfg.kind == Kind::Robin).then_some(cfg.sigma);
        let convex = cfg.convex || loaded.spec.convex;
        let mean_convex = cfg.mean_convex || loaded.spec.mean_convex;
        let inputs = BaselineInputs::from_domain(domain, inr, convex, mean_convex, sigma);
        let mut base = baseline_bounds(&inputs)?;
        if cfg.kind == Kind::Robin {
            // the volume and Hersch bounds are Dirichlet bounds
            base.retain(|b| !matches!(b.bound_id, BoundId::RfkVolume | BoundId::HerschProtter));
        }
        out.extend(base);
    }
    Ok(out)
}

fn operator_kind(cfg: &RunConfig, n: Option<usize>) -> Result<OperatorKind> {
    Ok(match cfg.kind {
        Kind::Dirichlet => OperatorKind::DirichletLaplace,
        Kind::Robin => OperatorKind::RobinLaplace { sigma: cfg.sigma },
        Kind::Poly => match cfg.m {
            1 => OperatorKind::DirichletLaplace,
            2 => OperatorKind::BilaplaceClamped,
            m => bail!("no finite-difference operator for m = {m}; only m = 1 and m = 2 are discretized"),
        },
        Kind::Heisenberg => OperatorKind::HeisenbergSublaplace { n: n.expect("N resolved before assembly") },
    })
}

fn eigen(cfg: &RunConfig, loaded: &Loaded, extrapolate: bool) -> Result<EigenRow> {
    let h = fd_spacing(cfg, &loaded.domain);
    let opts = SolverOptions::default();
    let (kind, assemble): (OperatorKind, Box<dyn Fn(f64) -> eigenbound::Result<GridOperator>>) =
        if cfg.kind == Kind::Heisenberg {
            let hd = hdomain(cfg, loaded)?;
            let kind = operator_kind(cfg, Some(hd.n()))?;
            (kind, Box::new(move |h| GridOperator::heisenberg(&hd, h)))
        } else {
            let kind = operator_kind(cfg, None)?;
            let domain = loaded.domain.clone();
            (kind, Box::new(move |h| GridOperator::assemble(&domain, kind, h)))
        };
    let mut result: EigenResult = smallest_eigenvalue(&assemble(h)?, &opts)?;
    if extrapolate {
        let coarse = smallest_eigenvalue(&assemble(2.0 * h)?, &opts)?;
        result.extrapolated = Some(richardson(coarse.value, result.value));
    }
    Ok(EigenRow { label: loaded.label.clone(), operator: kind, result })
}

fn check_name(b: &BoundReport) -> String {
    match b.inputs.r {
        Some(r) => format!("{}@r={r}", b.bound_id),
        None => b.bound_id.to_string(),
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    if cfg.command == Cmd::Oracle {
        let label = cfg.domain.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into());
        let mut report = Report::new(label, cfg.seed);
        report.oracles = oracle_suite(&OracleConfig::new(cfg.trials, cfg.seed))?;
        return Ok(report);
    }
    let loaded = load(cfg)?;
    let mut report = Report::new(loaded.label.clone(), cfg.seed);
    match cfg.command {
        Cmd::Bound => report.bounds = all_bounds(cfg, &loaded)?,
        Cmd::Sweep => {
            let all = all_bounds(cfg, &loaded)?;
            for id in BoundId::ALL {
                if all.iter().any(|b| b.bound_id == id) {
                    report.bounds.push(best_bound(&all, id)?);
                }
            }
        }
        Cmd::Eig => report.eigenvalues.push(eigen(cfg, &loaded, cfg.richardson)?),
        Cmd::Validate => {
            report.bounds = all_bounds(cfg, &loaded)?;
            let row = eigen(cfg, &loaded, true)?;
            // the smaller of the fine and extrapolated values keeps the check conservative
            let lambda = row.result.extrapolated.map_or(row.result.value, |x| x.min(row.result.value));
            let margin = if cfg.kind == Kind::Heisenberg { MARGIN_HEISENBERG } else { MARGIN };
            report.checks = report
                .bounds
                .iter()
                .filter(|b| b.valid && !b.degenerate)
                .map(|b| CheckRow::upper(check_name(b), b.value, lambda, margin))
                .collect();
            report.eigenvalues.push(row);
        }
        Cmd::Oracle => unreachable!(),
    }
    Ok(report)
}
