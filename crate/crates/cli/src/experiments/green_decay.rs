use dec_green::dec::{BoundaryCondition, FlatBundle, LaplaceSolver};
use dec_green::green::{
    decay_report, green_columns, select_sources, DecayMode, DecayOptions, DecayReport, DistanceCache,
};
use dec_green::{distance_field, SimplicialMesh};

use super::{fmt, opt, stability_checks, Stability};
use crate::config::{Config, GreenSection};
use crate::error::{CliError, CliResult};
use crate::report::{LogLogPlot, Outcome, Table};

pub const MODES: [DecayMode; 3] = [DecayMode::Kernel, DecayMode::KernelBoundaryWeighted, DecayMode::Derivative];

pub fn tag(mode: DecayMode) -> &'static str {
    match mode {
        DecayMode::Kernel => "Thm1.1.i",
        DecayMode::KernelBoundaryWeighted => "Thm1.1.ii",
        DecayMode::Derivative => "Thm1.1.iv",
    }
}

pub fn options(g: &GreenSection) -> DecayOptions {
    DecayOptions {
        cutoff_widths: g.cutoff_widths,
        fit_delta_ratio: (g.fit_delta_ratio > 0.0).then_some(g.fit_delta_ratio),
    }
}

/// Decay reports of the Dirichlet kernel in degree `p`, one per entry of [`MODES`].
pub fn decay_level(mesh: &SimplicialMesh, bundle: &FlatBundle, p: usize, g: &GreenSection) -> CliResult<Vec<DecayReport>> {
    let solver = LaplaceSolver::assemble(mesh, p, bundle, BoundaryCondition::Dirichlet)?;
    let lap = solver.laplacian();
    let boundary = distance_field(mesh, &mesh.boundary_vertices())?;
    let sources = select_sources(mesh, lap, &boundary, g.sources, g.cutoff_widths * mesh.mesh_width());
    let kernel = green_columns(&solver, &sources, !solver.harmonic().is_empty())?;
    let cache = DistanceCache::new(mesh, &kernel)?;
    let opts = options(g);
    MODES
        .iter()
        .map(|&m| Ok(decay_report(mesh, bundle, lap, &kernel, &cache, m, &opts)?))
        .collect()
}

pub const HEADER: [&str; 13] = [
    "tag",
    "shape",
    "resolution",
    "mesh_width",
    "degree",
    "rank",
    "mode",
    "pairs_sampled",
    "pairs_fitted",
    "fitted_slope",
    "empirical_constant",
    "d_constant",
    "codiff_constant",
];

pub fn run(cfg: &Config) -> CliResult<Outcome> {
    let g = &cfg.green;
    let levels = cfg.mesh_levels()?;
    let n = levels[0].1.dim();
    for &p in &g.degrees {
        if p >= n {
            return Err(CliError::ConfigParse(format!("green.degrees: {p} is not below the dimension {n}")));
        }
    }
    if !levels[0].1.has_boundary() {
        return Err(CliError::ConfigParse("green-decay needs a mesh with boundary".into()));
    }
    let label = cfg.mesh.label();
    let mut out = Outcome::default();
    let mut table = Table::new("green-decay", &HEADER);
    // per degree: (resolution, reports) across levels
    let mut series: Vec<Vec<(usize, Vec<DecayReport>)>> = vec![Vec::new(); g.degrees.len()];
    for (res, mesh) in &levels {
        let bundle = cfg.bundle(mesh)?;
        for (i, &p) in g.degrees.iter().enumerate() {
            let reports = decay_level(mesh, &bundle, p, g)?;
            for r in &reports {
                table.push(vec![
                    tag(r.mode).into(),
                    label.clone(),
                    res.to_string(),
                    fmt(r.mesh_width),
                    p.to_string(),
                    bundle.rank().to_string(),
                    r.mode.name().into(),
                    r.pairs_sampled.to_string(),
                    r.pairs_fitted.to_string(),
                    fmt(r.fitted_slope),
                    fmt(r.empirical_constant),
                    opt(r.d_constant),
                    opt(r.codiff_constant),
                ]);
            }
            series[i].push((*res, reports));
        }
    }

    for (i, &p) in g.degrees.iter().enumerate() {
        let s = &series[i];
        if n == 3 {
            for (res, reps) in s {
                let slope = reps[0].fitted_slope;
                out.check(
                    format!("p={p} slope in range r={res}"),
                    (g.slope_min..=g.slope_max).contains(&slope),
                    format!("{} in [{}, {}]", fmt(slope), g.slope_min, g.slope_max),
                );
            }
            for w in s.windows(2) {
                let (a, b) = (w[0].1[0].fitted_slope, w[1].1[0].fitted_slope);
                out.check(
                    format!("p={p} slope moves toward -1 {}->{}", w[0].0, w[1].0),
                    (b + 1.0).abs() <= (a + 1.0).abs(),
                    format!("{} -> {}", fmt(a), fmt(b)),
                );
            }
        }
        let constant = |pick: &dyn Fn(&[DecayReport]) -> Option<f64>| -> Vec<(usize, f64)> {
            s.iter().filter_map(|(r, reps)| pick(reps).map(|c| (*r, c))).collect()
        };
        let named: [(&str, Box<dyn Fn(&[DecayReport]) -> Option<f64>>); 3] = [
            ("boundary-weighted constant", Box::new(|r| Some(r[1].empirical_constant))),
            ("d constant", Box::new(|r| r[2].d_constant)),
            ("codiff constant", Box::new(|r| r[2].codiff_constant)),
        ];
        for (name, pick) in named.iter() {
            let c = constant(pick.as_ref());
            stability_checks(&mut out, &format!("p={p} {name}"), &c, g.constant_factor, Stability::Symmetric);
        }
        if g.plot {
            let (res, reps) = s.last().expect("at least one level");
            let k = &reps[0];
            let fit = (n == 3).then(|| {
                let c = k.envelope.iter().map(|(d, v)| v.ln() - k.fitted_slope * d.ln()).sum::<f64>()
                    / k.envelope.len().max(1) as f64;
                (k.fitted_slope, c)
            });
            out.plots.push(LogLogPlot {
                name: format!("green-decay_p{p}"),
                title: format!("{label} r={res} p={p}: binned max |G| against distance"),
                x_label: "d(x, y)".into(),
                y_label: "|G(x, y)|".into(),
                points: k.envelope.clone(),
                fit,
            });
        }
    }
    out.tables.push(table);
    Ok(out)
}
