//! JSON run configuration, defaults and initial-condition presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::error::{Error, Result};
use crate::fem::{Advection, MeshShape};
use crate::fields::{self, BoundaryCondition, Constraint, Domain, RectDomain, ScalarField};
use crate::spectral::DealiasRule;

pub const DEFAULT_MACRO_DT_RECT: f64 = 0.01;
pub const DEFAULT_MACRO_DT_MESH: f64 = 0.025;
pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_RESOLUTION_RECT: usize = 256;
pub const DEFAULT_RESOLUTION_MESH: usize = 128;
pub const DEFAULT_SUBSTEP_CAP: usize = 10_000;

/// Named initial conditions: `(name, aliases, expression)`.
const PRESETS: [(&str, &[&str], &str); 10] = [
    ("two-sines", &["preset_eq31"], "0.5*sin(pi*x) + 0.25*sin(2*pi*y)"),
    ("even", &["preset_even"], "cos(2*pi*x)*cos(pi*y) + 0.5*cos(2*pi*y)"),
    ("short-1", &["preset_table2_no1"], "cos(4*pi*x) + 1.357*cos(6*pi*y)"),
    (
        "short-2",
        &["preset_table2_no2"],
        "0.566*cos(4*pi*x) + cos(6*pi*y) + cos(2*pi*x)*cos(4*pi*y)",
    ),
    (
        "short-3",
        &["preset_table2_no3"],
        "0.3*cos(4*pi*x) + cos(6*pi*x) + 0.896*cos(6*pi*y) + 2*cos(2*pi*x)*cos(4*pi*y)",
    ),
    ("short-4", &["preset_table2_no4"], "sin(10*pi*y) + 0.2496*(x-0.5)*(x+0.5)"),
    ("long-1", &["preset_table2_no5"], "cos(pi*x) + 0.3*cos(2*pi*y)"),
    (
        "long-2",
        &["preset_table2_no6"],
        "2*cos(pi*x) + 0.3*cos(2*pi*y) + 0.92*cos(pi*x)*cos(pi*y)",
    ),
    (
        "long-3",
        &["preset_table2_no7"],
        "3*cos(pi*x) + 0.7*cos(2*pi*y) + cos(pi*x)*cos(pi*y)",
    ),
    ("long-4", &["preset_table2_no8"], "x^4 + 0.273*y*(y-0.4)"),
];

/// Canonical preset names with their expressions.
pub fn presets() -> impl Iterator<Item = (&'static str, &'static str)> {
    PRESETS.iter().map(|(n, _, e)| (*n, *e))
}

/// Initial scalar: a named preset or a free expression.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    /// Preset name, if any.
    pub preset: Option<&'static str>,
    pub expr: Expr,
}

impl InitialCondition {
    /// Resolves a preset name or alias, otherwise parses `spec` as an expression.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let key = s.strip_prefix("preset:").unwrap_or(s);
        for (name, aliases, src) in PRESETS {
            if key == name || aliases.contains(&key) {
                return Ok(InitialCondition {
                    preset: Some(name),
                    expr: Expr::parse(src)?,
                });
            }
        }
        if s.starts_with("preset") {
            return Err(Error::param("ic", format!("unknown preset `{s}`")));
        }
        Ok(InitialCondition {
            preset: None,
            expr: Expr::parse(s)?,
        })
    }

    pub fn label(&self) -> &str {
        self.preset.unwrap_or(self.expr.source())
    }

    /// Samples at every degree of freedom and removes the mean.
    pub fn evaluate(&self, domain: &Domain) -> Result<ScalarField> {
        evaluate_ic(&self.expr, domain)
    }
}

/// Samples `expr` on `domain`, rejecting non-finite values and fields that
/// vanish once their mean is removed.
pub fn evaluate_ic(expr: &Expr, domain: &Domain) -> Result<ScalarField> {
    let values: Vec<f64> = (0..domain.dofs())
        .map(|k| {
            let [x, y] = domain.point(k);
            expr.eval(x, y)
        })
        .collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        let [x, y] = domain.point(k);
        return Err(Error::param(
            "ic",
            format!("`{}` is not finite at ({x}, {y})", expr.source()),
        ));
    }
    let raw = ScalarField::new(domain.clone(), values)?;
    let scale = fields::linf_norm(&raw)?.max(1.0);
    let f = fields::subtract_mean(&raw);
    if fields::l2_norm(&f)? <= 1e-13 * scale {
        return Err(Error::param(
            "ic",
            format!("`{}` is constant, so nothing is left after removing the mean", expr.source()),
        ));
    }
    Ok(f)
}

/// Configuration as written in JSON; every key is optional here and
/// command-line flags are merged on top before validation.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// `[x_min, x_max, y_min, y_max]` of a rectangle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<String>,
    #[serde(rename = "U", alias = "u_rms", skip_serializing_if = "Option::is_none")]
    pub u_rms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv_tau: Option<f64>,
    #[serde(alias = "initial_condition", skip_serializing_if = "Option::is_none")]
    pub ic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dealias: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substep_cap: Option<usize>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse(format!("{}: {j}", path.display())),
            e => e,
        })
    }

    /// Values set in `over` replace those in `self`.
    pub fn merge(mut self, over: RawConfig) -> Self {
        merge_fields!(self, over; shape, resolution, mesh, bounds, bc, constraint, u_rms, inv_tau,
            ic, macro_dt, cfl, t_end, snapshot_times, output_dir, dealias, advection, seed, substep_cap);
        self
    }
}

/// Where the run takes place.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Rect(RectDomain),
    Shape { shape: MeshShape, h: f64 },
    MeshFile(PathBuf),
}

impl DomainSpec {
    pub fn is_rect(&self) -> bool {
        matches!(self, DomainSpec::Rect(_))
    }
}

/// Validated configuration with all defaults filled in.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub domain: DomainSpec,
    pub bc: BoundaryCondition,
    pub constraint: Constraint,
    pub ic: InitialCondition,
    pub macro_dt: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub dealias: DealiasRule,
    pub advection: Advection,
    pub seed: u64,
    pub substep_cap: usize,
    /// One line per default that was applied.
    pub provenance: Vec<String>,
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(key, format!("must be finite and positive, got {v}")))
    }
}

impl SimulationConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        RawConfig::from_file(path)?.resolve()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        RawConfig::from_json(text)?.resolve()
    }
}

impl RawConfig {
    /// Validates every key and fills defaults, recording each one applied.
    pub fn resolve(self) -> Result<SimulationConfig> {
        let mut prov = Vec::new();
        let mut default = |key: &str, value: String| {
            log::debug!("default {key} = {value}");
            prov.push(format!("{key} = {value} (default)"));
        };

        let bc = match &self.bc {
            Some(s) => s.parse()?,
            None => {
                default("bc", "no-flux".into());
                BoundaryCondition::NoFlux
            }
        };

        let shape_name = match (&self.shape, &self.mesh) {
            (Some(s), _) => s.to_ascii_lowercase(),
            (None, Some(_)) => "mesh".to_string(),
            (None, None) => {
                default("shape", "square".into());
                "square".to_string()
            }
        };
        if self.mesh.is_some() && shape_name != "mesh" {
            return Err(Error::param("mesh", format!("given together with shape `{shape_name}`")));
        }
        let domain = match shape_name.as_str() {
            "square" | "rectangle" | "rect" => {
                let res = match self.resolution {
                    Some(r) => r,
                    None => {
                        default("resolution", DEFAULT_RESOLUTION_RECT.to_string());
                        DEFAULT_RESOLUTION_RECT
                    }
                };
                if res < 7 {
                    return Err(Error::param("resolution", format!("{res} is below the minimum of 7")));
                }
                let b = match (shape_name.as_str(), self.bounds) {
                    ("square", Some(_)) => {
                        return Err(Error::param("bounds", "only allowed with shape `rectangle`"))
                    }
                    ("square", None) => [-1.0, 1.0, -1.0, 1.0],
                    (_, Some(b)) => b,
                    (_, None) => return Err(Error::param("bounds", "required for shape `rectangle`")),
                };
                let r = RectDomain::new(b[0], b[1], b[2], b[3], res + 1, res + 1, bc)
                    .map_err(|e| Error::param("bounds", e.to_string()))?;
                DomainSpec::Rect(r)
            }
            "mesh" => {
                let Some(p) = self.mesh.clone() else {
                    return Err(Error::param("mesh", "shape `mesh` needs a mesh path"));
                };
                DomainSpec::MeshFile(p)
            }
            other => {
                let shape: MeshShape = other.parse().map_err(|_| {
                    Error::param("shape", format!("unknown shape `{other}`"))
                })?;
                if self.bounds.is_some() {
                    return Err(Error::param("bounds", "only allowed with shape `rectangle`"));
                }
                let res = match self.resolution {
                    Some(r) => r,
                    None => {
                        default("resolution", DEFAULT_RESOLUTION_MESH.to_string());
                        DEFAULT_RESOLUTION_MESH
                    }
                };
                if res < 2 {
                    return Err(Error::param("resolution", "must be at least 2"));
                }
                DomainSpec::Shape {
                    shape,
                    h: 2.0 / res as f64,
                }
            }
        };
        if !domain.is_rect() && bc == BoundaryCondition::Periodic {
            return Err(Error::param("bc", "periodic boundaries need a rectangle"));
        }
        if !domain.is_rect() && self.dealias.is_some() {
            return Err(Error::param("dealias", "only meaningful on rectangles"));
        }

        let constraint = match self.constraint.as_deref() {
            Some("energy") => {
                if self.inv_tau.is_some() {
                    return Err(Error::param("inv_tau", "given with an energy constraint"));
                }
                let u = self.u_rms.ok_or_else(|| Error::param("U", "required for the energy constraint"))?;
                Constraint::energy(u)?
            }
            Some("enstrophy") => {
                if self.u_rms.is_some() {
                    return Err(Error::param("U", "given with an enstrophy constraint"));
                }
                let it = self
                    .inv_tau
                    .ok_or_else(|| Error::param("inv_tau", "required for the enstrophy constraint"))?;
                Constraint::enstrophy(it)?
            }
            Some(other) => {
                return Err(Error::param("constraint", format!("expected energy or enstrophy, got `{other}`")))
            }
            None => return Err(Error::param("constraint", "missing")),
        };

        let ic = match &self.ic {
            Some(s) => InitialCondition::parse(s)?,
            None => return Err(Error::param("ic", "missing")),
        };

        let macro_dt = match self.macro_dt {
            Some(v) => positive("macro_dt", v)?,
            None => {
                let v = if domain.is_rect() { DEFAULT_MACRO_DT_RECT } else { DEFAULT_MACRO_DT_MESH };
                default("macro_dt", v.to_string());
                v
            }
        };
        let cfl = match self.cfl {
            Some(v) if v > 0.0 && v <= 0.9 => v,
            Some(v) => return Err(Error::param("cfl", format!("must lie in (0, 0.9], got {v}"))),
            None => {
                default("cfl", DEFAULT_CFL.to_string());
                DEFAULT_CFL
            }
        };
        let t_end = match self.t_end {
            Some(v) => positive("t_end", v)?,
            None => {
                default("t_end", DEFAULT_T_END.to_string());
                DEFAULT_T_END
            }
        };
        if macro_dt > t_end * (1.0 + 1e-12) {
            return Err(Error::param("macro_dt", format!("{macro_dt} exceeds t_end = {t_end}")));
        }
        let snapshot_times = self.snapshot_times.clone().unwrap_or_default();
        if let Some(&t) = snapshot_times.iter().find(|&&t| !(t >= 0.0 && t <= t_end * (1.0 + 1e-12))) {
            return Err(Error::param("snapshot_times", format!("{t} is outside [0, {t_end}]")));
        }
        let output_dir = match &self.output_dir {
            Some(p) => p.clone(),
            None => {
                default("output_dir", "output".into());
                PathBuf::from("output")
            }
        };
        let dealias = match self.dealias.as_deref() {
            Some(s) => s.parse()?,
            None => {
                let r = match constraint {
                    Constraint::Energy { .. } => DealiasRule::Half,
                    Constraint::Enstrophy { .. } => DealiasRule::TwoThirds,
                };
                if domain.is_rect() {
                    default("dealias", r.name().into());
                }
                r
            }
        };
        let advection = match self.advection.as_deref() {
            Some(s) => {
                if domain.is_rect() {
                    return Err(Error::param("advection", "only meaningful on meshes"));
                }
                s.parse()?
            }
            None => {
                if !domain.is_rect() {
                    default("advection", "compensated".into());
                }
                Advection::Compensated
            }
        };
        let seed = self.seed.unwrap_or(0);
        let substep_cap = match self.substep_cap {
            Some(0) => return Err(Error::param("substep_cap", "must be positive")),
            Some(c) => c,
            None => {
                default("substep_cap", DEFAULT_SUBSTEP_CAP.to_string());
                DEFAULT_SUBSTEP_CAP
            }
        };

        Ok(SimulationConfig {
            domain,
            bc,
            constraint,
            ic,
            macro_dt,
            cfl,
            t_end,
            snapshot_times,
            output_dir,
            dealias,
            advection,
            seed,
            substep_cap,
            provenance: prov,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let c = SimulationConfig::from_json(
            r#"{"shape": "square", "constraint": "energy", "U": 1, "ic": "preset_eq31"}"#,
        )
        .unwrap();
        assert_eq!(c.macro_dt, 0.01);
        assert_eq!(c.cfl, 0.5);
        assert_eq!(c.dealias, DealiasRule::Half);
        assert_eq!(c.ic.preset, Some("two-sines"));
        assert!(c.provenance.iter().any(|l| l.starts_with("macro_dt = 0.01")));
        assert!(c.provenance.iter().any(|l| l.starts_with("cfl = 0.5")));
        match c.domain {
            DomainSpec::Rect(r) => assert_eq!((r.nx, r.ny), (257, 257)),
            _ => panic!(),
        }
        let m = SimulationConfig::from_json(
            r#"{"shape": "circle", "constraint": "enstrophy", "inv_tau": 15, "ic": "x"}"#,
        )
        .unwrap();
        assert_eq!(m.macro_dt, 0.025);
        assert_eq!(m.advection, Advection::Compensated);
        assert_eq!(m.domain, DomainSpec::Shape { shape: MeshShape::Circle, h: 2.0 / 128.0 });
    }

    fn key_of(json: &str) -> String {
        match SimulationConfig::from_json(json) {
            Err(Error::InvalidParameter { key, .. }) => key,
            Err(Error::Json(e)) => format!("json: {e}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(r#"{"constraint": "energy", "U": -1, "ic": "x"}"#), "U");
        assert_eq!(key_of(r#"{"constraint": "energy", "U": 1, "ic": "x", "cfl": 2}"#), "cfl");
        assert_eq!(key_of(r#"{"shape": "circle", "bc": "periodic", "constraint": "energy", "U": 1, "ic": "x"}"#), "bc");
        assert_eq!(key_of(r#"{"constraint": "energy", "U": 1, "ic": "x", "t_end": 0}"#), "t_end");
        assert_eq!(key_of(r#"{"constraint": "energy", "ic": "x"}"#), "U");
        assert!(key_of(r#"{"constraint": "energy", "U": 1, "ic": "x", "colour": 3}"#).contains("colour"));
        assert!(matches!(
            SimulationConfig::from_json(r#"{"constraint": "energy", "U": 1, "ic": "sin(x"}"#),
            Err(Error::Expression { .. })
        ));
    }

    #[test]
    fn merge_prefers_overrides() {
        let base = RawConfig::from_json(r#"{"constraint": "energy", "U": 1, "ic": "x", "t_end": 0.5}"#).unwrap();
        let over = RawConfig {
            t_end: Some(0.2),
            ..Default::default()
        };
        let c = base.merge(over).resolve().unwrap();
        assert_eq!(c.t_end, 0.2);
        assert_eq!(c.constraint, Constraint::Energy { u_rms: 1.0 });
    }

    #[test]
    fn ic_evaluation() {
        let d: Domain = RectDomain::square(65, BoundaryCondition::NoFlux).unwrap().into();
        let ic = InitialCondition::parse("preset_eq31").unwrap();
        let f = ic.evaluate(&d).unwrap();
        assert!((fields::linf_norm(&f).unwrap() - 0.75).abs() < 1e-12);
        let zero = InitialCondition::parse("0").unwrap();
        assert!(matches!(zero.evaluate(&d), Err(Error::InvalidParameter { .. })));
        let inf = InitialCondition::parse("1/(x-x)").unwrap();
        assert!(inf.evaluate(&d).is_err());
        let no8 = InitialCondition::parse("x^4+0.273*y*(y-0.4)").unwrap().evaluate(&d).unwrap();
        let p8 = InitialCondition::parse("preset_table2_no8").unwrap().evaluate(&d).unwrap();
        assert_eq!(no8.values(), p8.values());
        assert!(no8.mean().abs() < 1e-14);
        assert!(InitialCondition::parse("preset_nope").is_err());
    }
}
