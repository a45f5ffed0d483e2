//! Run configuration.
//!
//! A config is a TOML file with one table per concern and only scalar or
//! flat-array values. Every key is optional; missing keys take the defaults
//! below. Unknown keys are rejected.
//!
//! ```toml
//! [run]
//! seed = 7
//! out_dir = "out"          # overridden by DEC_GREEN_OUT_DIR and --out-dir
//! refinements = 2          # levels; each doubles the resolution (halves h)
//!
//! [mesh]
//! shape = "box3d"          # disk | annulus | box3d | torus2d
//! resolution = 12
//! side = 1.0               # box3d, torus2d
//! radius = 1.0             # disk
//! r_in = 0.5               # annulus
//! r_out = 1.0
//! file = "meshes/a.mesh"   # optional; replaces the generator, single level
//!
//! [bundle]
//! kind = "trivial"         # trivial | rotation | random_flat
//! rank = 1
//! angles = [1.0]           # rotation only
//!
//! [green]
//! degrees = [0, 1]
//! sources = 16
//!
//! [solve_d]
//! input = "random_exact"   # random_exact | harmonic_generator
//!
//! [sobolev]
//! exponents = [[2.0, 2.0, 2.0, 2.0]]   # (q, k, r, s) tuples
//!
//! [dbar]
//! cells = 48               # h = 1 / cells
//! ```

use std::path::{Path, PathBuf};

use dec_green::dec::{build_flat_bundle, BundleSpec, FlatBundle};
use dec_green::inequalities::SobolevMode;
use dec_green::mesh::read_mesh;
use dec_green::{generate_mesh, MeshShape, SimplicialMesh};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    pub mesh: MeshSection,
    pub bundle: BundleSection,
    pub green: GreenSection,
    pub representation: RepresentationSection,
    pub solve_d: SolveSection,
    pub sobolev: SobolevSection,
    pub dbar: DbarSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub refinements: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            out_dir: None,
            refinements: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Disk,
    Annulus,
    Box3d,
    Torus2d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub shape: ShapeName,
    pub resolution: usize,
    pub radius: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub side: f64,
    pub file: Option<PathBuf>,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            shape: ShapeName::Disk,
            resolution: 16,
            radius: 1.0,
            r_in: 0.5,
            r_out: 1.0,
            side: 1.0,
            file: None,
        }
    }
}

impl MeshSection {
    pub fn shape(&self) -> MeshShape {
        match self.shape {
            ShapeName::Disk => MeshShape::Disk { radius: self.radius },
            ShapeName::Annulus => MeshShape::Annulus {
                r_in: self.r_in,
                r_out: self.r_out,
            },
            ShapeName::Box3d => MeshShape::Box3d { side: self.side },
            ShapeName::Torus2d => MeshShape::Torus2d { side: self.side },
        }
    }

    pub fn label(&self) -> String {
        match &self.file {
            Some(f) => f.file_stem().map_or_else(|| "mesh".into(), |s| s.to_string_lossy().into_owned()),
            None => format!("{:?}", self.shape).to_lowercase(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleKind {
    Trivial,
    Rotation,
    RandomFlat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BundleSection {
    pub kind: BundleKind,
    pub rank: usize,
    pub angles: Vec<f64>,
}

impl Default for BundleSection {
    fn default() -> Self {
        BundleSection {
            kind: BundleKind::Trivial,
            rank: 1,
            angles: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenSection {
    pub degrees: Vec<usize>,
    pub sources: usize,
    pub cutoff_widths: f64,
    /// Fit window `d <= ratio * min(δ(x), δ(y))`; 0 disables the window.
    pub fit_delta_ratio: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    /// Allowed change of the empirical constants per refinement.
    pub constant_factor: f64,
    pub plot: bool,
}

impl Default for GreenSection {
    fn default() -> Self {
        GreenSection {
            degrees: vec![0],
            sources: 16,
            cutoff_widths: 2.0,
            fit_delta_ratio: 0.75,
            slope_min: -1.3,
            slope_max: -0.75,
            constant_factor: 2.0,
            plot: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepresentationSection {
    pub sources: usize,
    pub compact_tol: f64,
    pub full_tol: f64,
}

impl Default for RepresentationSection {
    fn default() -> Self {
        RepresentationSection {
            sources: 16,
            compact_tol: 1e-8,
            full_tol: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveInput {
    RandomExact,
    HarmonicGenerator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub degree: usize,
    pub input: SolveInput,
    pub samples: usize,
    /// Eigenmodes per fiber dimension spanning the random potentials.
    pub modes: usize,
    pub q: f64,
    pub k: f64,
    pub residual_tol: f64,
    /// Also run a pure-gauge bundle of rank 2 and compare δ̂.
    pub compare_gauge: bool,
    pub gauge_factor: f64,
    pub stability_factor: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            degree: 1,
            input: SolveInput::RandomExact,
            samples: 50,
            modes: 10,
            q: 2.0,
            k: 2.0,
            residual_tol: 1e-8,
            compare_gauge: false,
            gauge_factor: 1.5,
            stability_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevSection {
    pub degree: usize,
    pub samples: usize,
    pub interior_modes: usize,
    pub boundary_modes: usize,
    pub modes: Vec<String>,
    pub exponents: Vec<[f64; 4]>,
    pub normalize_volume: bool,
    pub stability_factor: f64,
    /// Allowed discrete violation of the harmonic maximum principle (p = 0 only).
    pub harmonic_max_slack: f64,
}

impl Default for SobolevSection {
    fn default() -> Self {
        SobolevSection {
            degree: 0,
            samples: 50,
            interior_modes: 20,
            boundary_modes: 10,
            modes: ALL_SOBOLEV_MODES.iter().map(|m| m.name().to_string()).collect(),
            exponents: vec![[2.0, 2.0, 2.0, 2.0], [4.0, 2.0, 2.0, 2.0], [6.0, 4.0, 4.0, 4.0]],
            normalize_volume: false,
            stability_factor: 2.0,
            harmonic_max_slack: 0.05,
        }
    }
}

pub const ALL_SOBOLEV_MODES: [SobolevMode; 5] = [
    SobolevMode::Laplace,
    SobolevMode::Gradient,
    SobolevMode::MaxLaplace,
    SobolevMode::MaxGradient,
    SobolevMode::HarmonicMax,
];

impl SobolevSection {
    pub fn parsed_modes(&self) -> CliResult<Vec<SobolevMode>> {
        self.modes
            .iter()
            .map(|name| {
                ALL_SOBOLEV_MODES
                    .iter()
                    .copied()
                    .find(|m| m.name() == name)
                    .ok_or_else(|| CliError::ConfigParse(format!("unknown sobolev mode {name:?}")))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbarSection {
    /// Grid cells per unit length at the coarsest level.
    pub cells: usize,
    /// `φ = weight_scale · |z|^2`.
    pub weight_scale: f64,
    pub samples: usize,
    pub max_freq: i32,
    pub stability_factor: f64,
    pub adjoint_tol: f64,
    pub adjoint_pairs: usize,
    /// Also rerun with the weight doubled and report the change of δ̂.
    pub monotonicity: bool,
}

impl Default for DbarSection {
    fn default() -> Self {
        DbarSection {
            cells: 48,
            weight_scale: 1.0,
            samples: 30,
            max_freq: 3,
            stability_factor: 2.0,
            adjoint_tol: 1e-10,
            adjoint_pairs: 100,
            monotonicity: true,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> CliResult<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        Config::from_toml(&text)
    }

    /// Canonical serialization; the manifest hashes this text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::ConfigParse(msg));
        if self.run.refinements == 0 {
            return bad("run.refinements must be at least 1".into());
        }
        if self.mesh.resolution < 2 {
            return bad("mesh.resolution must be at least 2".into());
        }
        if self.bundle.rank == 0 {
            return bad("bundle.rank must be positive".into());
        }
        if self.bundle.kind == BundleKind::Rotation && self.bundle.rank < 2 {
            return bad("rotation bundles need rank >= 2".into());
        }
        if self.green.sources == 0 || self.representation.sources == 0 {
            return bad("source counts must be positive".into());
        }
        if self.solve_d.samples == 0 || self.sobolev.samples == 0 || self.dbar.samples == 0 {
            return bad("ensemble sizes must be positive".into());
        }
        if self.dbar.cells < 4 {
            return bad("dbar.cells must be at least 4".into());
        }
        if self.dbar.weight_scale <= 0.0 {
            return bad("dbar.weight_scale must be positive".into());
        }
        self.sobolev.parsed_modes()?;
        Ok(())
    }

    /// Meshes for every refinement level as `(resolution, mesh)`.
    pub fn mesh_levels(&self) -> CliResult<Vec<(usize, SimplicialMesh)>> {
        if let Some(path) = &self.mesh.file {
            if self.run.refinements > 1 {
                return Err(CliError::ConfigParse("mesh.file runs a single level; set run.refinements = 1".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::MissingInput(format!("mesh file {}: {e}", path.display())))?;
            return Ok(vec![(0, read_mesh(&text)?)]);
        }
        let shape = self.mesh.shape();
        (0..self.run.refinements)
            .map(|l| {
                let res = self.mesh.resolution << l;
                Ok((res, generate_mesh(&shape, res)?))
            })
            .collect()
    }

    pub fn bundle_spec(&self) -> BundleSpec {
        match self.bundle.kind {
            BundleKind::Trivial => BundleSpec::Trivial,
            BundleKind::Rotation => BundleSpec::RotationAngle(self.bundle.angles.clone()),
            BundleKind::RandomFlat => BundleSpec::RandomFlat(self.run.seed),
        }
    }

    pub fn bundle(&self, mesh: &SimplicialMesh) -> CliResult<FlatBundle> {
        Ok(build_flat_bundle(mesh, self.bundle.rank, &self.bundle_spec())?)
    }
}
