//! Frozen-flow macro stepping: optimise, advect, record.

use crate::backend::Backend;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::fields::{self, Constraint, ScalarField};
use crate::stirring::{self, EnergyBound};

/// Time grid of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimClock {
    pub t: f64,
    /// Interval between flow refreshes.
    pub macro_dt: f64,
    pub cfl: f64,
    pub t_end: f64,
}

impl SimClock {
    pub fn new(macro_dt: f64, cfl: f64, t_end: f64) -> Result<Self> {
        if !(macro_dt > 0.0 && macro_dt.is_finite()) {
            return Err(Error::param("macro_dt", "must be positive"));
        }
        if !(t_end.is_finite() && macro_dt <= t_end * (1.0 + 1e-12)) {
            return Err(Error::param("t_end", "must be at least macro_dt"));
        }
        if !(cfl > 0.0 && cfl <= 0.9) {
            return Err(Error::param("cfl", "must lie in (0, 0.9]"));
        }
        Ok(SimClock {
            t: 0.0,
            macro_dt,
            cfl,
            t_end,
        })
    }

    /// Number of macro steps, the last one possibly shortened.
    pub fn steps(&self) -> usize {
        let n = self.t_end / self.macro_dt;
        let r = n.round();
        if (n - r).abs() < 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }

    /// Time after `k` macro steps.
    pub fn time_at(&self, k: usize) -> f64 {
        if k >= self.steps() {
            self.t_end
        } else {
            k as f64 * self.macro_dt
        }
    }
}

/// Everything a run needs besides the backend and the initial field.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub clock: SimClock,
    pub constraint: Constraint,
    /// Upper limit on inner substeps per macro step.
    pub substep_cap: usize,
    /// Times at which the scalar is handed to the sink.
    pub snapshot_times: Vec<f64>,
}

/// Receives records in time order and snapshots as they become due.
pub trait RunSink {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()>;

    fn snapshot(&mut self, t: f64, theta: &ScalarField) -> Result<()> {
        let _ = (t, theta);
        Ok(())
    }
}

/// Collects everything in memory.
#[derive(Default)]
pub struct MemorySink {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, ScalarField)>,
}

impl RunSink for MemorySink {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }

    fn snapshot(&mut self, t: f64, theta: &ScalarField) -> Result<()> {
        self.snapshots.push((t, theta.clone()));
        Ok(())
    }
}

/// Outcome of a run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub final_theta: ScalarField,
    pub total_substeps: usize,
    /// Initial mean that was removed before stepping.
    pub removed_mean: f64,
}

fn at_time(t: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::AtTime { .. } => e,
        e => Error::AtTime {
            t,
            source: Box::new(e),
        },
    }
}

/// Runs the optimise-advect loop from `theta0` until `t_end`.
///
/// The mean of `theta0` is removed first and again after every macro step.
/// A record is produced at `t = 0` and after every macro step; the flow of
/// each record is the one that is frozen over the following interval (the
/// final record carries the flow that would be used next).
pub fn run_simulation(
    backend: &mut dyn Backend,
    theta0: &ScalarField,
    settings: &RunSettings,
    sink: &mut dyn RunSink,
) -> Result<RunSummary> {
    let clock = settings.clock;
    let area = backend.domain().area();
    let removed_mean = theta0.mean();
    let mut theta = fields::subtract_mean(theta0);
    let mix0 = backend.mix_norm(&theta).map_err(at_time(0.0))?;
    if !(mix0 > 0.0) {
        return Err(Error::param("initial_condition", "mix norm of the initial field is zero"));
    }
    let energy_bound = match settings.constraint {
        Constraint::Energy { u_rms } => Some(EnergyBound {
            mix0,
            linf0: fields::linf_norm(&theta)?,
            u_rms,
            area,
        }),
        Constraint::Enstrophy { .. } => None,
    };

    let mut snapshots: Vec<f64> = settings.snapshot_times.clone();
    snapshots.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;

    let mut records = Vec::new();
    let mut gamma: Vec<(f64, f64)> = Vec::new();
    let mut total_substeps = 0;
    let steps = clock.steps();
    for k in 0..=steps {
        let t = clock.time_at(k);
        let wrap = at_time(t);
        let flow = stirring::optimal_flow(backend, &theta, settings.constraint).map_err(&wrap)?;
        if flow.stagnated && k == 0 {
            return Err(Error::Stagnation { t });
        }
        let mix = backend.mix_norm(&theta).map_err(&wrap)?;
        let g = backend.gradient_sup(&flow.u).map_err(&wrap)?;
        gamma.push((t, g));
        let lower_bound = match energy_bound {
            Some(b) => b.at(t),
            None => stirring::lower_bound_enstrophy(mix0, &gamma, t)?,
        };
        let rec = DiagnosticsRecord {
            t,
            mix_norm: mix,
            mix_norm_normalized: mix / mix0,
            l2: fields::l2_norm(&theta)?,
            linf: fields::linf_norm(&theta)?,
            energy: backend.energy(&flow.u),
            enstrophy: backend.enstrophy(&flow.u).map_err(&wrap)?,
            instantaneous_rate: stirring::decay_rate(&flow)?,
            lower_bound,
            gamma: g,
        };
        sink.record(&rec)?;
        records.push(rec);
        while next_snapshot < snapshots.len() && snapshots[next_snapshot] <= t + 1e-9 * clock.macro_dt {
            sink.snapshot(t, &theta)?;
            next_snapshot += 1;
        }
        if k == steps {
            break;
        }
        let dt = clock.time_at(k + 1) - t;
        let (next, n) = backend
            .advance(&theta, &flow.u, dt, clock.cfl, settings.substep_cap)
            .map_err(&wrap)?;
        total_substeps += n;
        theta = fields::subtract_mean(&next);
    }
    Ok(RunSummary {
        records,
        final_theta: theta,
        total_substeps,
        removed_mean,
    })
}
