//! One module per subcommand. Each exposes the per-level computation used by
//! the acceptance suite and a `run` that turns a config into an [`Outcome`].

pub mod dbar;
pub mod green_decay;
pub mod mesh_gen;
pub mod representation;
pub mod solve_d;
pub mod sobolev;

use clap::ValueEnum;

use crate::config::Config;
use crate::error::CliResult;
use crate::report::Outcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    MeshGen,
    GreenDecay,
    Representation,
    SolveD,
    Sobolev,
    Dbar,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::MeshGen => "mesh-gen",
            Experiment::GreenDecay => "green-decay",
            Experiment::Representation => "representation",
            Experiment::SolveD => "solve-d",
            Experiment::Sobolev => "sobolev",
            Experiment::Dbar => "dbar",
        }
    }

    pub fn run(self, cfg: &Config) -> CliResult<Outcome> {
        match self {
            Experiment::MeshGen => mesh_gen::run(cfg),
            Experiment::GreenDecay => green_decay::run(cfg),
            Experiment::Representation => representation::run(cfg),
            Experiment::SolveD => solve_d::run(cfg),
            Experiment::Sobolev => sobolev::run(cfg),
            Experiment::Dbar => dbar::run(cfg),
        }
    }
}

/// `a` and `b` are positive and within a factor `f` of each other.
pub fn within_factor(a: f64, b: f64, f: f64) -> bool {
    a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && (a / b).max(b / a) <= f
}

/// Checks a per-level series for refinement stability and appends one check per step.
pub(crate) fn stability_checks(out: &mut Outcome, label: &str, series: &[(usize, f64)], factor: f64, kind: Stability) {
    for w in series.windows(2) {
        let (l0, a) = w[0];
        let (l1, b) = w[1];
        let ok = match kind {
            Stability::Symmetric => within_factor(a, b, factor),
            Stability::ShrinksAtMost => b > 0.0 && b * factor >= a,
            Stability::GrowsAtMost => b.is_finite() && b <= a * factor,
        };
        out.check(
            format!("{label} stable {l0}->{l1}"),
            ok,
            format!("{} -> {} (factor {factor})", fmt(a), fmt(b)),
        );
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stability {
    Symmetric,
    ShrinksAtMost,
    GrowsAtMost,
}

pub(crate) fn fmt(x: f64) -> String {
    crate::report::fmt_f64(x)
}

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}
