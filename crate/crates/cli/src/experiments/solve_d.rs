use dec_green::dec::{build_flat_bundle, BoundaryCondition, BundleSpec, Cochain, FlatBundle};
use dec_green::hodge::{HodgeSolver, SolveReport};
use dec_green::SimplicialMesh;

use super::{fmt, stability_checks, within_factor, Stability};
use crate::config::{Config, SolveInput, SolveSection};
use crate::error::{error_kind, CliError, CliResult};
use crate::report::{Outcome, Table};

pub const TAG: &str = "Thm1.6";

#[derive(Clone, Debug)]
pub struct SolveLevel {
    /// Per sample: the report, or the name and message of the error raised.
    pub samples: Vec<Result<SolveReport, (String, String)>>,
    /// `min |f|_k / |u|_q` over the successful samples.
    pub delta_hat: f64,
}

impl SolveLevel {
    pub fn max_residual(&self) -> f64 {
        self.samples.iter().flatten().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn errors(&self) -> impl Iterator<Item = &(String, String)> {
        self.samples.iter().filter_map(|s| s.as_ref().err())
    }
}

fn solve_all(solver: &HodgeSolver, forms: &[Cochain], s: &SolveSection) -> SolveLevel {
    let samples: Vec<_> = forms
        .iter()
        .map(|f| {
            solver
                .solve_d_equation(f, s.q, s.k)
                .map(|(_, r)| r)
                .map_err(|e| (error_kind(&e), e.to_string()))
        })
        .collect();
    let delta_hat = samples
        .iter()
        .flatten()
        .filter(|r| r.norm_ratio > 0.0)
        .map(|r| 1.0 / r.norm_ratio)
        .fold(f64::INFINITY, f64::min);
    SolveLevel { samples, delta_hat }
}

/// Solves `du = f` for random exact `f`; the potentials span `modes · rank` eigenmodes.
pub fn exact_level(mesh: &SimplicialMesh, bundle: &FlatBundle, s: &SolveSection, seed: u64) -> CliResult<SolveLevel> {
    let solver = HodgeSolver::new(mesh, s.degree, bundle)?;
    let forms = solver.random_exact_forms(s.samples, s.modes * bundle.rank(), seed)?;
    Ok(solve_all(&solver, &forms, s))
}

/// Tries to solve `du = h` for each basis form of the Neumann harmonic space.
pub fn harmonic_level(mesh: &SimplicialMesh, bundle: &FlatBundle, s: &SolveSection) -> CliResult<SolveLevel> {
    let solver = HodgeSolver::new(mesh, s.degree, bundle)?;
    let space = solver.harmonic_space(BoundaryCondition::Neumann);
    let forms: Vec<Cochain> = space
        .basis
        .iter()
        .map(|h| Cochain {
            degree: s.degree,
            rank: bundle.rank(),
            values: h.clone(),
        })
        .collect();
    Ok(solve_all(&solver, &forms, s))
}

pub fn run(cfg: &Config) -> CliResult<Outcome> {
    let s = &cfg.solve_d;
    let levels = cfg.mesh_levels()?;
    let n = levels[0].1.dim();
    if s.degree == 0 || s.degree > n {
        return Err(CliError::ConfigParse(format!("solve_d.degree must be in 1..={n}")));
    }
    let label = cfg.mesh.label();
    let mut out = Outcome::default();
    let mut table = Table::new(
        "solve-d",
        &[
            "tag", "shape", "resolution", "bundle", "rank", "input", "sample", "status", "residual", "q", "k",
            "norm_ratio", "obstruction_norm",
        ],
    );
    let input = match s.input {
        SolveInput::RandomExact => "random_exact",
        SolveInput::HarmonicGenerator => "harmonic_generator",
    };
    let mut primary = Vec::new();
    for (res, mesh) in &levels {
        let mut bundles = vec![(format!("{:?}", cfg.bundle.kind).to_lowercase(), cfg.bundle(mesh)?)];
        if s.compare_gauge && s.input == SolveInput::RandomExact {
            let gauge = build_flat_bundle(mesh, 2, &BundleSpec::RandomFlat(cfg.run.seed))?;
            bundles.push(("pure_gauge".into(), gauge));
        }
        let mut deltas = Vec::new();
        for (name, bundle) in &bundles {
            let level = match s.input {
                SolveInput::RandomExact => exact_level(mesh, bundle, s, cfg.run.seed)?,
                SolveInput::HarmonicGenerator => harmonic_level(mesh, bundle, s)?,
            };
            for (i, sample) in level.samples.iter().enumerate() {
                let mut row = vec![
                    TAG.into(),
                    label.clone(),
                    res.to_string(),
                    name.clone(),
                    bundle.rank().to_string(),
                    input.into(),
                    i.to_string(),
                ];
                match sample {
                    Ok(r) => row.extend([
                        "ok".into(),
                        fmt(r.residual),
                        fmt(r.q),
                        fmt(r.k),
                        fmt(r.norm_ratio),
                        fmt(r.obstruction_norm),
                    ]),
                    Err((kind, _)) => {
                        row.push(kind.clone());
                        row.extend(std::iter::repeat_n(String::new(), 5));
                    }
                }
                table.push(row);
            }
            match s.input {
                SolveInput::RandomExact => {
                    let worst = level.max_residual();
                    out.check(
                        format!("{name} residual r={res}"),
                        worst <= s.residual_tol,
                        format!("max |du - f|/|f| = {} <= {}", fmt(worst), s.residual_tol),
                    );
                }
                SolveInput::HarmonicGenerator if level.samples.is_empty() => {
                    out.check(format!("{name} harmonic generator r={res}"), false, "harmonic space is trivial");
                }
                SolveInput::HarmonicGenerator => {}
            }
            for (kind, msg) in level.errors() {
                out.check(format!("{name} solve r={res}"), false, format!("{kind}: {msg}"));
            }
            deltas.push(level.delta_hat);
        }
        if deltas.len() == 2 {
            out.check(
                format!("gauge independence r={res}"),
                within_factor(deltas[0], deltas[1], s.gauge_factor),
                format!("delta_hat {} vs {} (factor {})", fmt(deltas[0]), fmt(deltas[1]), s.gauge_factor),
            );
        }
        primary.push((*res, deltas[0]));
    }
    if s.input == SolveInput::RandomExact {
        stability_checks(&mut out, "delta_hat", &primary, s.stability_factor, Stability::Symmetric);
    }
    out.tables.push(table);
    Ok(out)
}
