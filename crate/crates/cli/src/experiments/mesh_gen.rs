use dec_green::mesh::{write_mesh, MAX_ASPECT_RATIO};

use super::fmt;
use crate::config::Config;
use crate::error::CliResult;
use crate::report::{Outcome, Table};

/// Writes each refinement level in the text mesh format and tabulates its statistics.
pub fn run(cfg: &Config) -> CliResult<Outcome> {
    let mut out = Outcome::default();
    let label = cfg.mesh.label();
    let mut table = Table::new(
        "mesh-gen",
        &[
            "tag", "shape", "resolution", "n0", "n1", "n2", "n3", "euler", "volume", "boundary_volume", "mesh_width",
            "max_aspect",
        ],
    );
    let exact = cfg.mesh.file.is_none().then(|| cfg.mesh.shape().volume());
    let mut volumes = Vec::new();
    for (res, mesh) in cfg.mesh_levels()? {
        let n = mesh.dim();
        let counts: Vec<String> = (0..=3)
            .map(|k| if k <= n { mesh.n_simplices(k).to_string() } else { String::new() })
            .collect();
        let aspect = mesh.max_aspect_ratio();
        table.push(
            [
                vec!["-".into(), label.clone(), res.to_string()],
                counts,
                vec![
                    mesh.euler_characteristic().to_string(),
                    fmt(mesh.total_volume()),
                    fmt(mesh.boundary_volume()),
                    fmt(mesh.mesh_width()),
                    fmt(aspect),
                ],
            ]
            .concat(),
        );
        out.check(
            format!("aspect ratio r={res}"),
            aspect <= MAX_ASPECT_RATIO,
            format!("{} <= {MAX_ASPECT_RATIO}", fmt(aspect)),
        );
        volumes.push((res, mesh.total_volume()));
        let stem = if cfg.mesh.file.is_some() { label.clone() } else { format!("{label}_r{res}") };
        out.files.push((format!("{stem}.mesh"), write_mesh(&mesh)));
    }
    for w in volumes.windows(2) {
        let ((r0, v0), (r1, v1)) = (w[0], w[1]);
        let change = (v1 - v0).abs() / v0;
        out.check(
            format!("volume converges {r0}->{r1}"),
            change < 0.02,
            format!("relative change {} < 0.02", fmt(change)),
        );
    }
    if let (Some(v), Some(&(res, got))) = (exact, volumes.last()) {
        let err = (got - v).abs() / v;
        out.check(format!("volume r={res}"), err < 0.02, format!("relative error {} < 0.02", fmt(err)));
    }
    out.tables.push(table);
    Ok(out)
}
