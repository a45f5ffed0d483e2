//! Reconstruction of functions from the Dirichlet kernel, compared with the
//! closed-form Green function of the disk.

use dec_green::dec::{BoundaryCondition, Cochain, FlatBundle, LaplaceSolver};
use dec_green::green::{green_columns, integral_representation_check, select_sources};
use dec_green::{distance_field, SimplicialMesh};

use super::fmt;
use crate::config::{BundleKind, Config, ShapeName};
use crate::error::{CliError, CliResult};
use crate::report::{Outcome, Table};

/// Test function `e^x cos y + |x|^2`; its (positive) Laplacian is `-4`.
pub fn smooth_f(x: f64, y: f64) -> f64 {
    x.exp() * y.cos() + x * x + y * y
}

/// `(1 - |x|^2/a^2)^3` inside radius `a`, zero outside.
pub fn bump(x: f64, y: f64, a: f64) -> f64 {
    let t = 1.0 - (x * x + y * y) / (a * a);
    if t > 0.0 {
        t.powi(3)
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct RepresentationLevel {
    pub mesh_width: f64,
    pub sources: usize,
    /// Max error of the volume-term identity for a compactly supported function.
    pub compact_error: f64,
    /// Relative error of the volume plus boundary reconstruction of [`smooth_f`].
    pub full_error: f64,
    /// Volume and boundary terms against their closed forms on the disk of radius `R`:
    /// `-(R^2 - |x|^2)` and `f(x) + R^2 - |x|^2`.
    pub volume_oracle_error: f64,
    pub boundary_oracle_error: f64,
}

pub fn representation_level(mesh: &SimplicialMesh, radius: f64, sources: usize) -> CliResult<RepresentationLevel> {
    let bundle = FlatBundle::trivial(mesh, 1);
    let solver = LaplaceSolver::assemble(mesh, 0, &bundle, BoundaryCondition::Dirichlet)?;
    let lap = solver.laplacian();
    let boundary = distance_field(mesh, &mesh.boundary_vertices())?;
    let src = select_sources(mesh, lap, &boundary, sources, 2.0 * mesh.mesh_width());
    let kernel = green_columns(&solver, &src, false)?;
    let nodal = |f: &dyn Fn(f64, f64) -> f64| -> CliResult<Cochain> {
        let v = mesh.vertices().iter().map(|p| f(p[0], p[1])).collect();
        Ok(Cochain::from_values(mesh, 0, 1, v)?)
    };

    let compact = nodal(&|x, y| bump(x, y, 0.6 * radius))?;
    let rc = integral_representation_check(mesh, &bundle, lap, &kernel, &compact, None)?;

    let f = nodal(&smooth_f)?;
    let lf = nodal(&|_, _| -4.0)?;
    let rf = integral_representation_check(mesh, &bundle, lap, &kernel, &f, Some(&lf))?;
    let mut vol_err = 0.0;
    let mut bnd_err = 0.0;
    let mut f_norm = 0.0;
    for (i, &s) in kernel.sources.iter().enumerate() {
        let p = mesh.vertex(s);
        let w = radius * radius - p[0] * p[0] - p[1] * p[1];
        let fx = smooth_f(p[0], p[1]);
        vol_err += (rf.volume_term[i] + w).powi(2);
        bnd_err += (rf.boundary_term[i] - fx - w).powi(2);
        f_norm += fx * fx;
    }
    Ok(RepresentationLevel {
        mesh_width: mesh.mesh_width(),
        sources: kernel.sources.len(),
        compact_error: rc.relative_error,
        full_error: rf.relative_error,
        volume_oracle_error: (vol_err / f_norm).sqrt(),
        boundary_oracle_error: (bnd_err / f_norm).sqrt(),
    })
}

pub fn run(cfg: &Config) -> CliResult<Outcome> {
    if cfg.mesh.file.is_some() || cfg.mesh.shape != ShapeName::Disk {
        return Err(CliError::ConfigParse("representation runs on the generated disk (closed-form oracle)".into()));
    }
    if cfg.bundle.kind != BundleKind::Trivial || cfg.bundle.rank != 1 {
        return Err(CliError::ConfigParse("representation uses the trivial rank-1 bundle".into()));
    }
    let rep = &cfg.representation;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "representation",
        &[
            "tag",
            "shape",
            "resolution",
            "mesh_width",
            "sources",
            "compact_error",
            "full_error",
            "volume_oracle_error",
            "boundary_oracle_error",
        ],
    );
    let mut levels = Vec::new();
    for (res, mesh) in cfg.mesh_levels()? {
        let l = representation_level(&mesh, cfg.mesh.radius, rep.sources)?;
        table.push(vec![
            "Thm1.3.i".into(),
            cfg.mesh.label(),
            res.to_string(),
            fmt(l.mesh_width),
            l.sources.to_string(),
            fmt(l.compact_error),
            fmt(l.full_error),
            fmt(l.volume_oracle_error),
            fmt(l.boundary_oracle_error),
        ]);
        out.check(
            format!("compact identity r={res}"),
            l.compact_error <= rep.compact_tol,
            format!("{} <= {}", fmt(l.compact_error), rep.compact_tol),
        );
        levels.push((res, l));
    }
    let (res, last) = levels.last().expect("at least one level");
    out.check(
        format!("full reconstruction r={res}"),
        last.full_error <= rep.full_tol,
        format!("{} <= {}", fmt(last.full_error), rep.full_tol),
    );
    for w in levels.windows(2) {
        let ((r0, a), (r1, b)) = (&w[0], &w[1]);
        for (name, x, y) in [
            ("full error", a.full_error, b.full_error),
            ("volume oracle error", a.volume_oracle_error, b.volume_oracle_error),
            ("boundary oracle error", a.boundary_oracle_error, b.boundary_oracle_error),
        ] {
            out.check(format!("{name} decreases {r0}->{r1}"), y < x, format!("{} -> {}", fmt(x), fmt(y)));
        }
    }
    out.tables.push(table);
    Ok(out)
}
