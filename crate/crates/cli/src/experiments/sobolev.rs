use dec_green::inequalities::{sobolev_check, Ensemble, EnsembleConfig, ExponentTuple, SobolevMode, SobolevReport};
use dec_green::{Error, SimplicialMesh};
use dec_green::dec::FlatBundle;

use super::{fmt, stability_checks, Stability};
use crate::config::{Config, SobolevSection};
use crate::error::{error_kind, CliError, CliResult};
use crate::report::{Outcome, Table};

pub fn tag(mode: SobolevMode) -> &'static str {
    match mode {
        SobolevMode::Laplace => "Cor1.4",
        SobolevMode::Gradient => "Cor1.5",
        SobolevMode::MaxLaplace => "Prop4.1.i",
        SobolevMode::MaxGradient => "Prop4.1.ii",
        SobolevMode::HarmonicMax => "Prop4.1",
    }
}

#[derive(Clone, Debug)]
pub enum CellResult {
    Report(SobolevReport),
    Inadmissible,
    Failed(String, String),
}

/// One `(mode, exponents)` cell; exponents are absent for harmonic_max.
#[derive(Clone, Debug)]
pub struct Cell {
    pub mode: SobolevMode,
    pub exponents: Option<[f64; 4]>,
    pub result: CellResult,
}

pub fn cells(modes: &[SobolevMode], exponents: &[[f64; 4]]) -> Vec<(SobolevMode, Option<[f64; 4]>)> {
    let mut out = Vec::new();
    for &m in modes {
        if m == SobolevMode::HarmonicMax {
            out.push((m, None));
        } else {
            out.extend(exponents.iter().map(|e| (m, Some(*e))));
        }
    }
    out
}

pub fn sobolev_level(
    mesh: &SimplicialMesh,
    bundle: &FlatBundle,
    s: &SobolevSection,
    seed: u64,
) -> CliResult<(f64, Vec<Cell>)> {
    let config = EnsembleConfig {
        degree: s.degree,
        size: s.samples,
        seed,
        interior_modes: s.interior_modes,
        boundary_modes: s.boundary_modes,
        ..EnsembleConfig::default()
    };
    let ensemble = Ensemble::build(mesh, bundle, &config)?;
    let n = mesh.dim();
    let mut out = Vec::new();
    for (mode, e) in cells(&s.parsed_modes()?, &s.exponents) {
        let t = e.map(|[q, k, r, s]| ExponentTuple::new(q, k, r, s, n));
        let result = match sobolev_check(&ensemble, mode, t, s.normalize_volume) {
            Ok(r) => CellResult::Report(r),
            Err(Error::InadmissibleExponents(_)) => CellResult::Inadmissible,
            Err(e) => CellResult::Failed(error_kind(&e), e.to_string()),
        };
        out.push(Cell {
            mode,
            exponents: e,
            result,
        });
    }
    Ok((mesh.mesh_width(), out))
}

pub fn run(cfg: &Config) -> CliResult<Outcome> {
    let s = &cfg.sobolev;
    let levels = cfg.mesh_levels()?;
    let n = levels[0].1.dim();
    if s.degree > n {
        return Err(CliError::ConfigParse(format!("sobolev.degree must be at most {n}")));
    }
    let label = cfg.mesh.label();
    let mut out = Outcome::default();
    let mut table = Table::new(
        "sobolev",
        &[
            "tag", "shape", "resolution", "mesh_width", "degree", "mode", "q", "k", "r", "s", "ensemble_size", "delta_hat",
            "status",
        ],
    );
    let mut results = Vec::new();
    for (res, mesh) in &levels {
        let bundle = cfg.bundle(mesh)?;
        let (h, cells) = sobolev_level(mesh, &bundle, s, cfg.run.seed)?;
        for c in &cells {
            let exps: Vec<String> = match c.exponents {
                Some(e) => e.iter().map(|x| fmt(*x)).collect(),
                None => vec![String::new(); 4],
            };
            let (size, delta, status) = match &c.result {
                CellResult::Report(r) => (r.ensemble_size.to_string(), fmt(r.delta_hat), "ok".to_string()),
                CellResult::Inadmissible => (String::new(), String::new(), "inadmissible".into()),
                CellResult::Failed(kind, _) => (String::new(), String::new(), kind.clone()),
            };
            table.push(
                [
                    vec![tag(c.mode).into(), label.clone(), res.to_string(), fmt(h), s.degree.to_string(), c.mode.name().into()],
                    exps,
                    vec![size, delta, status],
                ]
                .concat(),
            );
            let cell = cell_label(c);
            match &c.result {
                CellResult::Report(r) if c.mode == SobolevMode::HarmonicMax => {
                    if s.degree == 0 {
                        out.check(
                            format!("{cell} r={res}"),
                            r.delta_hat <= 1.0 + s.harmonic_max_slack,
                            format!("sup ratio {} <= 1 + {}", fmt(r.delta_hat), s.harmonic_max_slack),
                        );
                    }
                }
                CellResult::Report(r) => {
                    out.check(format!("{cell} positive r={res}"), r.delta_hat > 0.0, format!("delta_hat = {}", fmt(r.delta_hat)));
                }
                CellResult::Inadmissible => {}
                CellResult::Failed(kind, msg) => out.check(format!("{cell} r={res}"), false, format!("{kind}: {msg}")),
            }
        }
        results.push((*res, cells));
    }
    // refinement stability per cell
    if let Some((_, first)) = results.first() {
        for (i, c) in first.iter().enumerate() {
            if c.mode == SobolevMode::HarmonicMax {
                continue;
            }
            let series: Vec<(usize, f64)> = results
                .iter()
                .filter_map(|(res, cells)| match &cells[i].result {
                    CellResult::Report(r) => Some((*res, r.delta_hat)),
                    _ => None,
                })
                .collect();
            let kind = if c.mode.is_lower_bound() { Stability::ShrinksAtMost } else { Stability::GrowsAtMost };
            stability_checks(&mut out, &cell_label(c), &series, s.stability_factor, kind);
        }
    }
    out.tables.push(table);
    Ok(out)
}

fn cell_label(c: &Cell) -> String {
    match c.exponents {
        Some([q, k, r, s]) => format!("{} (q,k,r,s)=({q},{k},{r},{s})", c.mode.name()),
        None => c.mode.name().to_string(),
    }
}
