//! Builds backends from a configuration and drives the subcommands.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::config::{DomainSpec, SimulationConfig};
use super::formats::{self, FileSink};
use crate::backend::Backend;
use crate::diagnostics::{self, BcComparison};
use crate::error::{Error, Result};
use crate::fem::{generate_mesh, FemBackend};
use crate::fields::{self, BoundaryCondition, Domain, ScalarField};
use crate::spectral::SpectralWorkspace;
use crate::timestepper::{self, MemorySink, RunSettings, RunSink, RunSummary, SimClock};

/// Materialises the configured domain (generating or reading a mesh).
pub fn build_domain(cfg: &SimulationConfig) -> Result<Domain> {
    Ok(match &cfg.domain {
        DomainSpec::Rect(r) => Domain::Rect(r.with_bc(cfg.bc)),
        DomainSpec::Shape { shape, h } => Domain::Mesh(Arc::new(generate_mesh(*shape, *h)?)),
        DomainSpec::MeshFile(p) => Domain::Mesh(Arc::new(formats::read_mesh(p)?)),
    })
}

pub fn build_backend(cfg: &SimulationConfig, domain: &Domain) -> Result<Box<dyn Backend>> {
    Ok(match domain {
        Domain::Rect(r) => Box::new(SpectralWorkspace::new(*r, cfg.dealias)),
        Domain::Mesh(m) => {
            let mut fem = FemBackend::new(m.clone())?;
            fem.set_advection(cfg.advection);
            Box::new(fem)
        }
    })
}

pub fn run_settings(cfg: &SimulationConfig) -> Result<RunSettings> {
    Ok(RunSettings {
        clock: SimClock::new(cfg.macro_dt, cfg.cfl, cfg.t_end)?,
        constraint: cfg.constraint,
        substep_cap: cfg.substep_cap,
        snapshot_times: cfg.snapshot_times.clone(),
    })
}

/// Runs one simulation into `sink`.
pub fn run_with_sink(cfg: &SimulationConfig, sink: &mut dyn RunSink) -> Result<RunSummary> {
    let domain = build_domain(cfg)?;
    let mut backend = build_backend(cfg, &domain)?;
    let theta0 = cfg.ic.evaluate(&domain)?;
    timestepper::run_simulation(backend.as_mut(), &theta0, &run_settings(cfg)?, sink)
}

/// Runs a simulation writing `diagnostics.csv`, snapshots and
/// `provenance.txt` into the configured output directory.
pub fn simulate(cfg: &SimulationConfig) -> Result<RunSummary> {
    let mut sink = FileSink::create(&cfg.output_dir)?;
    write_provenance(cfg, &cfg.output_dir)?;
    run_with_sink(cfg, &mut sink)
}

fn write_provenance(cfg: &SimulationConfig, dir: &Path) -> Result<()> {
    let mut text = format!("ic = {}\n", cfg.ic.label());
    for line in &cfg.provenance {
        text.push_str(line);
        text.push('\n');
    }
    std::fs::write(dir.join("provenance.txt"), text)?;
    Ok(())
}

/// Smallest nonzero Laplacian eigenvalue of the configured domain.
#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    pub domain: String,
    pub lambda1: f64,
    pub residual: f64,
    pub iterations: usize,
    pub vertices: usize,
    pub seconds: f64,
}

pub fn eigen(cfg: &SimulationConfig) -> Result<EigenReport> {
    let start = Instant::now();
    let name = domain_label(cfg);
    match build_domain(cfg)? {
        Domain::Rect(r) => Ok(EigenReport {
            domain: name,
            lambda1: r.lambda1(),
            residual: 0.0,
            iterations: 0,
            vertices: r.dofs(),
            seconds: start.elapsed().as_secs_f64(),
        }),
        Domain::Mesh(m) => {
            let fem = FemBackend::new(m.clone())?;
            let e = fem.eigenpair()?;
            Ok(EigenReport {
                domain: name,
                lambda1: e.lambda_1,
                residual: e.residual,
                iterations: e.iterations,
                vertices: m.n_vertices(),
                seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}

fn domain_label(cfg: &SimulationConfig) -> String {
    match &cfg.domain {
        DomainSpec::Rect(r) => format!(
            "rectangle [{}, {}] x [{}, {}], {} x {} points, {}",
            r.x_min, r.x_max, r.y_min, r.y_max, r.nx, r.ny, cfg.bc.name()
        ),
        DomainSpec::Shape { shape, h } => format!("{} mesh, h = {h}", shape.name()),
        DomainSpec::MeshFile(p) => format!("mesh {}", p.display()),
    }
}

/// Norms of the configured initial condition.
#[derive(Clone, Debug, Serialize)]
pub struct NormsReport {
    pub ic: String,
    pub mix_norm: f64,
    pub l2: f64,
    pub linf: f64,
    /// `mix_norm / l2`.
    pub l0: f64,
    /// `U |Omega|^(1/2) ||theta||_inf / ||theta||_m`.
    pub energy_bound_coefficient: f64,
}

pub fn norms(cfg: &SimulationConfig) -> Result<NormsReport> {
    let domain = build_domain(cfg)?;
    let mut b = build_backend(cfg, &domain)?;
    let theta = cfg.ic.evaluate(&domain)?;
    norms_of(b.as_mut(), &theta, cfg)
}

fn norms_of(b: &mut dyn Backend, theta: &ScalarField, cfg: &SimulationConfig) -> Result<NormsReport> {
    let mix = b.mix_norm(theta)?;
    let l2 = fields::l2_norm(theta)?;
    let linf = fields::linf_norm(theta)?;
    let u = match cfg.constraint {
        fields::Constraint::Energy { u_rms } => u_rms,
        fields::Constraint::Enstrophy { .. } => 1.0,
    };
    Ok(NormsReport {
        ic: cfg.ic.label().to_string(),
        mix_norm: mix,
        l2,
        linf,
        l0: diagnostics::characteristic_length(b, theta)?,
        energy_bound_coefficient: u * theta.domain().area().sqrt() * linf / mix,
    })
}

/// Runs the configuration under both boundary conditions and compares the
/// mix-norm histories. Both diagnostics files are written when `out` is set.
pub fn compare_bc(cfg: &SimulationConfig, out: Option<&Path>) -> Result<BcComparison> {
    if !cfg.domain.is_rect() {
        return Err(Error::param("shape", "boundary-condition comparison needs a rectangle"));
    }
    let mut runs = Vec::new();
    for bc in [BoundaryCondition::Periodic, BoundaryCondition::NoFlux] {
        let mut c = cfg.clone();
        c.bc = bc;
        let mut sink = MemorySink::default();
        let summary = run_with_sink(&c, &mut sink)?;
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            formats::write_diagnostics(&dir.join(format!("diagnostics_{}.csv", bc.name())), &summary.records)?;
        }
        runs.push(summary.records);
    }
    let cmp = diagnostics::compare_runs(&runs[0], &runs[1])?;
    if let Some(dir) = out {
        std::fs::write(dir.join("comparison.json"), serde_json::to_string_pretty(&cmp)?)?;
    }
    Ok(cmp)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let json = format!(
            r#"{{"shape": "square", "resolution": 32, "constraint": "energy", "U": 1,
                "ic": "preset_eq31", "t_end": 0.03, "snapshot_times": [0, 0.03],
                "output_dir": {:?}}}"#,
            dir.path().to_str().unwrap()
        );
        let cfg = SimulationConfig::from_json(&json).unwrap();
        let s = simulate(&cfg).unwrap();
        let recs = formats::read_diagnostics(&dir.path().join("diagnostics.csv")).unwrap();
        assert_eq!(recs, s.records);
        assert_eq!(recs.len(), 4);
        assert_eq!(std::fs::read_dir(dir.path().join("snapshots")).unwrap().count(), 2);
        let prov = std::fs::read_to_string(dir.path().join("provenance.txt")).unwrap();
        assert!(prov.contains("cfl = 0.5 (default)"));

        // Same configuration, same numbers.
        let again = run_with_sink(&cfg, &mut MemorySink::default()).unwrap();
        for (a, b) in again.records.iter().zip(&s.records) {
            assert_eq!(a.values().map(f64::to_bits), b.values().map(f64::to_bits));
        }
    }

    #[test]
    fn norms_of_square_preset() {
        let cfg = SimulationConfig::from_json(
            r#"{"shape": "square", "resolution": 128, "constraint": "energy", "U": 1, "ic": "preset_table2_no1"}"#,
        )
        .unwrap();
        let n = norms(&cfg).unwrap();
        assert!((n.l0 - 0.0637).abs() < 5e-4, "{}", n.l0);
    }

    #[test]
    fn compare_requires_rectangle() {
        let cfg = SimulationConfig::from_json(
            r#"{"shape": "circle", "resolution": 8, "constraint": "energy", "U": 1, "ic": "x"}"#,
        )
        .unwrap();
        assert!(compare_bc(&cfg, None).is_err());
    }
}
