//! Mix-norm measurements, decay-rate fits and run comparisons.

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::fields::{self, Domain, RectDomain, ScalarField};

/// One row of a run's time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mix_norm: f64,
    pub mix_norm_normalized: f64,
    pub l2: f64,
    pub linf: f64,
    pub energy: f64,
    pub enstrophy: f64,
    /// `d/dt integral(|grad phi|^2)` under the recorded flow.
    pub instantaneous_rate: f64,
    pub lower_bound: f64,
    /// `||grad u||_inf` estimate.
    pub gamma: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 10] = [
        "t",
        "mix_norm",
        "mix_norm_normalized",
        "l2",
        "linf",
        "energy",
        "enstrophy",
        "instantaneous_rate",
        "lower_bound",
        "gamma",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.mix_norm,
            self.mix_norm_normalized,
            self.l2,
            self.linf,
            self.energy,
            self.enstrophy,
            self.instantaneous_rate,
            self.lower_bound,
            self.gamma,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            mix_norm: v[1],
            mix_norm_normalized: v[2],
            l2: v[3],
            linf: v[4],
            energy: v[5],
            enstrophy: v[6],
            instantaneous_rate: v[7],
            lower_bound: v[8],
            gamma: v[9],
        }
    }
}

/// Least-squares fit of `log(m) = a t + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub a: f64,
    pub b: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
}

/// `||grad(Laplace^-1 theta)||` (area-normalised).
pub fn mix_norm(b: &mut dyn Backend, theta: &ScalarField) -> Result<f64> {
    b.mix_norm(theta)
}

/// `l0 = ||theta0||_m / ||theta0||`.
pub fn characteristic_length(b: &mut dyn Backend, theta0: &ScalarField) -> Result<f64> {
    let l2 = fields::l2_norm(theta0)?;
    if l2 == 0.0 {
        return Err(Error::param("initial_condition", "field is identically zero"));
    }
    Ok(b.mix_norm(theta0)? / l2)
}

/// Default fit window: the last quarter of the sampled time span.
pub fn default_window(series: &[(f64, f64)]) -> Option<[f64; 2]> {
    let (t0, t1) = (series.first()?.0, series.last()?.0);
    Some([t0 + 0.75 * (t1 - t0), t1])
}

/// Fits `exp(a t + b)` to the `(t, m)` samples inside `window`
/// (the last quarter of the run when `None`).
pub fn fit_decay_rate(series: &[(f64, f64)], window: Option<[f64; 2]>) -> Result<RateFit> {
    let window = match window {
        Some(w) => w,
        None => default_window(series).ok_or_else(|| Error::InvalidSeries("empty series".into()))?,
    };
    let tol = 1e-9 * (window[1] - window[0]).abs().max(1e-300);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window[0] - tol && t <= window[1] + tol)
        .collect();
    if pts.len() < 5 {
        return Err(Error::InvalidSeries(format!(
            "{} samples in [{}, {}], at least 5 needed",
            pts.len(),
            window[0],
            window[1]
        )));
    }
    if let Some(&(t, m)) = pts.iter().find(|(_, m)| !(*m > 0.0)) {
        return Err(Error::InvalidSeries(format!("nonpositive value {m} at t = {t}")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, m) in &pts {
        let (dx, dy) = (t - mt, m.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidSeries("all samples share one time".into()));
    }
    let a = sxy / sxx;
    let b = my - a * mt;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit {
        a,
        b,
        window,
        r_squared,
    })
}

/// Cosine-mode estimate of the `H^-1` and mix norms on a rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralNorms {
    pub h_minus_one: f64,
    pub mix: f64,
    /// Fraction of `||theta||^2` not captured by the retained modes.
    pub tail_fraction: f64,
    /// Set when the tail exceeds 1%.
    pub truncated: bool,
}

/// Expands `theta` in the Neumann eigenfunctions
/// `cos(m pi (x - x0)/Lx) cos(n pi (y - y0)/Ly)`, `m, n < n_modes`, and sums
/// `|c|^2 / (1 + lambda)` (the `H^-1` norm) and `|c|^2 / lambda` (the mix norm).
pub fn h_minus_one_norm_oracle(theta: &ScalarField, n_modes: usize) -> Result<SpectralNorms> {
    let r: RectDomain = match theta.domain() {
        Domain::Rect(r) => *r,
        Domain::Mesh(_) => {
            return Err(Error::DomainMismatch("the cosine oracle needs a rectangle".into()))
        }
    };
    let (nx, ny) = (r.nx, r.ny);
    let weights = |n: usize, h: f64| -> Vec<f64> {
        let mut w = vec![h; n];
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        w
    };
    let (wx, wy) = (weights(nx, r.hx()), weights(ny, r.hy()));
    let v = theta.values();
    let cx: Vec<Vec<f64>> = (0..n_modes)
        .map(|m| (0..nx).map(|i| (m as f64 * std::f64::consts::PI * (r.x(i) - r.x_min) / r.lx()).cos()).collect())
        .collect();
    let cy: Vec<Vec<f64>> = (0..n_modes)
        .map(|n| (0..ny).map(|j| (n as f64 * std::f64::consts::PI * (r.y(j) - r.y_min) / r.ly()).cos()).collect())
        .collect();
    // a[m][j] = sum_i wx_i theta_ij cos_m(x_i)
    let a: Vec<Vec<f64>> = crate::par::map_range(n_modes, |m| {
        (0..ny)
            .map(|j| (0..nx).map(|i| wx[i] * v[j * nx + i] * cx[m][i]).sum())
            .collect()
    });
    let area = r.area();
    let total = fields::inner_product(theta, theta)?;
    let (mut hm1, mut mix, mut captured) = (0.0, 0.0, 0.0);
    for m in 0..n_modes {
        for n in 0..n_modes {
            let proj: f64 = (0..ny).map(|j| wy[j] * a[m][j] * cy[n][j]).sum::<f64>() / area;
            // Normalised squared norm of the mode.
            let norm2 = if m == 0 { 1.0 } else { 0.5 } * if n == 0 { 1.0 } else { 0.5 };
            let energy = proj * proj / norm2;
            captured += energy;
            if m == 0 && n == 0 {
                continue;
            }
            let km = m as f64 * std::f64::consts::PI / r.lx();
            let kn = n as f64 * std::f64::consts::PI / r.ly();
            let lambda = km * km + kn * kn;
            hm1 += energy / (1.0 + lambda);
            mix += energy / lambda;
        }
    }
    let tail_fraction = if total > 0.0 { ((total - captured) / total).max(0.0) } else { 0.0 };
    let truncated = tail_fraction > 0.01;
    if truncated {
        log::warn!("cosine oracle tail holds {:.2}% of the L2 mass", 100.0 * tail_fraction);
    }
    Ok(SpectralNorms {
        h_minus_one: hm1.sqrt(),
        mix: mix.sqrt(),
        tail_fraction,
        truncated,
    })
}

/// Side-by-side mix norms of a periodic and a no-flux run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcComparison {
    pub times: Vec<f64>,
    pub periodic: Vec<f64>,
    pub no_flux: Vec<f64>,
    /// `max |m_p - m_n| / m_n` over all times.
    pub max_relative_difference: f64,
    /// Sign of `m_p - m_n` at the final time (-1, 0 or 1).
    pub final_sign: i8,
}

pub fn compare_runs(periodic: &[DiagnosticsRecord], no_flux: &[DiagnosticsRecord]) -> Result<BcComparison> {
    if periodic.len() != no_flux.len() || periodic.is_empty() {
        return Err(Error::InvalidSeries(format!(
            "time grids differ ({} vs {} samples)",
            periodic.len(),
            no_flux.len()
        )));
    }
    let mut max_rel: f64 = 0.0;
    for (p, n) in periodic.iter().zip(no_flux) {
        if (p.t - n.t).abs() > 1e-12 * p.t.abs().max(1.0) {
            return Err(Error::InvalidSeries(format!("time {} vs {}", p.t, n.t)));
        }
        max_rel = max_rel.max((p.mix_norm_normalized - n.mix_norm_normalized).abs() / n.mix_norm_normalized);
    }
    let (p, n) = (periodic.last().unwrap(), no_flux.last().unwrap());
    let d = p.mix_norm_normalized - n.mix_norm_normalized;
    Ok(BcComparison {
        times: periodic.iter().map(|r| r.t).collect(),
        periodic: periodic.iter().map(|r| r.mix_norm_normalized).collect(),
        no_flux: no_flux.iter().map(|r| r.mix_norm_normalized).collect(),
        max_relative_difference: max_rel,
        final_sign: if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        },
    })
}
