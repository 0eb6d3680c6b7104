//! Run configuration: a JSON file with the keys `curve`, `grid`,
//! `tolerances`, `transform` and `output`.

use std::fmt;
use std::path::{Path, PathBuf};

use ddvv_core::catalog::builtin_components;
use ddvv_core::transforms::MapKind;
use ddvv_core::{AmbientMap, Domain, GridSpec, HolomorphicCurve, Tolerances};
use serde::Deserialize;

/// A configuration problem, located in the file when possible.
#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path.display(), line, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    curve: RawCurve,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    transform: Vec<RawTransform>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCurve {
    Builtin(BuiltinCurve),
    Explicit(ExplicitCurve),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuiltinCurve {
    builtin: String,
    #[serde(default)]
    domain: Option<RawDomain>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitCurve {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    n: Option<usize>,
    components: Vec<String>,
    #[serde(default)]
    domain: RawDomain,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawDomain {
    #[default]
    Plane,
    Disk(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawGrid {
    u: [f64; 2],
    v: [f64; 2],
    nu: usize,
    nv: usize,
    n_theta: usize,
    jitter: f64,
    seed: u64,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self { u: [-1.0, 1.0], v: [-1.0, 1.0], nu: 10, nv: 10, n_theta: 8, jitter: 0.0, seed: 0 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    eps_div: Option<f64>,
    eps_rank: Option<f64>,
    eps_hn: Option<f64>,
    eps_a: Option<f64>,
    eps_reg: Option<f64>,
    eps_min: Option<f64>,
    tol_eq: Option<f64>,
    tol_canonical: Option<f64>,
    tol_quadric: Option<f64>,
    tol_isotropy: Option<f64>,
    tol_shape_law: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTransform {
    EuclideanInversion {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        sign: Option<f64>,
    },
    LorentzInversion {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        sign: Option<f64>,
    },
    StereoPlaneToSphere {
        #[serde(default = "one")]
        d: f64,
    },
    StereoBallToHyp {
        #[serde(default = "one")]
        d: f64,
    },
    StereoSphereToPlane {
        #[serde(default = "one")]
        d: f64,
    },
    StereoHypToBall {
        #[serde(default = "one")]
        d: f64,
    },
    /// `T_d G = d^2 G / <<G, G>>`; only its radius is used.
    HolomorphicInversion {
        #[serde(default = "one")]
        d: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    samples: Option<PathBuf>,
    report: Option<PathBuf>,
    curve: Option<PathBuf>,
    obj: Option<PathBuf>,
    #[serde(default)]
    obj_theta: Vec<f64>,
    #[serde(default)]
    obj_axes: Option<[usize; 3]>,
}

/// Extra thresholds that only the command line checks use.
#[derive(Debug, Clone, Copy)]
pub struct CliTolerances {
    pub core: Tolerances,
    /// `max |<<G', G'>>| / |G'|^2`.
    pub isotropy: f64,
    /// Relative shape-law residual.
    pub shape_law: f64,
}

#[derive(Debug, Clone)]
pub struct Output {
    pub samples: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub curve: Option<PathBuf>,
    pub obj: Option<PathBuf>,
    pub obj_theta: Vec<f64>,
    pub obj_axes: [usize; 3],
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub curve: HolomorphicCurve,
    pub grid: GridSpec,
    pub tol: CliTolerances,
    /// Ambient map for `transform`.
    pub map: Option<AmbientMap>,
    /// Radius of the holomorphic inversion.
    pub holo_d: f64,
    pub output: Output,
    text: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_text(path, text)
    }

    pub fn from_text(path: &Path, text: String) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(&text).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        let err =
            |key: &str, message: String| ConfigError { path: path.to_path_buf(), line: line_of(&text, key), message };

        let domain_of = |d: RawDomain| match d {
            RawDomain::Plane => Ok(Domain::Plane),
            RawDomain::Disk(r) if r > 0.0 => Ok(Domain::Disk { radius: r }),
            RawDomain::Disk(r) => Err(err("disk", format!("disk radius must be positive, got {r}"))),
        };
        let curve = match raw.curve {
            RawCurve::Builtin(BuiltinCurve { builtin, domain }) => {
                if builtin_components(&builtin).is_none() {
                    return Err(err("builtin", format!("unknown built-in curve {builtin:?}")));
                }
                let mut c = ddvv_core::builtin(&builtin).map_err(|e| err("builtin", e.to_string()))?;
                if let Some(d) = domain {
                    c.domain = domain_of(d)?;
                }
                c
            }
            RawCurve::Explicit(ExplicitCurve { name, n, components, domain }) => {
                let domain = domain_of(domain)?;
                let mut exprs = Vec::with_capacity(components.len());
                for comp in &components {
                    let e = ddvv_core::parse(comp).map_err(|e| ConfigError {
                        path: path.to_path_buf(),
                        line: line_of_value(&text, comp),
                        message: format!("component {comp:?}: {e}"),
                    })?;
                    exprs.push(e);
                }
                let c = HolomorphicCurve::new(name.unwrap_or_else(|| "curve".into()), exprs, domain)
                    .map_err(|e| err("components", e.to_string()))?;
                if let Some(n) = n {
                    if n != c.n() {
                        return Err(err("n", format!("n = {n} but {} components give n = {}", c.ambient_dim(), c.n())));
                    }
                }
                c
            }
        };

        let g = raw.grid;
        if g.nu == 0 || g.nv == 0 {
            return Err(err("grid", "grid counts nu and nv must be positive".into()));
        }
        if g.n_theta == 0 && curve.n() > 2 {
            return Err(err("n_theta", "n_theta must be positive".into()));
        }
        if !(g.u[0] <= g.u[1] && g.v[0] <= g.v[1]) {
            return Err(err("grid", "grid ranges must be increasing".into()));
        }
        if !(0.0..=1.0).contains(&g.jitter) {
            return Err(err("jitter", format!("jitter must lie in [0, 1], got {}", g.jitter)));
        }
        let mut grid = GridSpec::new(curve.n(), (g.u[0], g.u[1]), (g.v[0], g.v[1]), g.nu, g.nv, g.n_theta);
        grid.jitter = g.jitter;
        grid.seed = g.seed;

        let t = raw.tolerances;
        let mut core = Tolerances::default();
        let overrides = [
            (&mut core.eps_div, t.eps_div),
            (&mut core.eps_rank, t.eps_rank),
            (&mut core.eps_hn, t.eps_hn),
            (&mut core.eps_a, t.eps_a),
            (&mut core.eps_reg, t.eps_reg),
            (&mut core.eps_min, t.eps_min),
            (&mut core.tol_eq, t.tol_eq),
            (&mut core.tol_canonical, t.tol_canonical),
            (&mut core.tol_quadric, t.tol_quadric),
        ];
        for (slot, value) in overrides {
            if let Some(v) = value {
                *slot = v;
            }
        }
        let tol = CliTolerances {
            core,
            isotropy: t.tol_isotropy.unwrap_or(1e-9),
            shape_law: t.tol_shape_law.unwrap_or(1e-8),
        };
        let all = [
            core.eps_div,
            core.eps_rank,
            core.eps_hn,
            core.eps_a,
            core.eps_reg,
            core.eps_min,
            core.tol_eq,
            core.tol_canonical,
            core.tol_quadric,
            tol.isotropy,
            tol.shape_law,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(err("tolerances", "tolerances must be finite and non-negative".into()));
        }

        let mut map = None;
        let mut holo_d = None;
        let amb = curve.ambient_dim();
        for tr in raw.transform {
            let built = match tr {
                RawTransform::HolomorphicInversion { d } => {
                    if holo_d.replace(d).is_some() {
                        return Err(err("holomorphic_inversion", "at most one holomorphic inversion per run".into()));
                    }
                    if d <= 0.0 {
                        return Err(err("holomorphic_inversion", format!("radius must be positive, got {d}")));
                    }
                    continue;
                }
                RawTransform::EuclideanInversion { center, radius, sign } => {
                    inversion(center, radius, sign, amb, false).map_err(|m| err("euclidean_inversion", m))?
                }
                RawTransform::LorentzInversion { center, radius, sign } => {
                    inversion(center, radius, sign, amb, true).map_err(|m| err("lorentz_inversion", m))?
                }
                RawTransform::StereoPlaneToSphere { d } => stereo(MapKind::StereoPlaneToSphere { d }, d, amb + 1)
                    .map_err(|m| err("stereo_plane_to_sphere", m))?,
                RawTransform::StereoBallToHyp { d } => {
                    stereo(MapKind::StereoBallToHyp { d }, d, amb + 1).map_err(|m| err("stereo_ball_to_hyp", m))?
                }
                RawTransform::StereoSphereToPlane { d } => {
                    stereo(MapKind::StereoSphereToPlane { d }, d, amb).map_err(|m| err("stereo_sphere_to_plane", m))?
                }
                RawTransform::StereoHypToBall { d } => {
                    stereo(MapKind::StereoHypToBall { d }, d, amb).map_err(|m| err("stereo_hyp_to_ball", m))?
                }
            };
            if map.replace(built).is_some() {
                return Err(err("transform", "at most one ambient map per run".into()));
            }
        }

        let o = raw.output;
        let obj_axes = o.obj_axes.unwrap_or([0, 1, 2]);
        if obj_axes.iter().any(|&a| a >= amb) {
            return Err(err("obj_axes", format!("OBJ axes must be below the ambient dimension {amb}")));
        }
        Ok(Self {
            path: path.to_path_buf(),
            curve,
            grid,
            tol,
            map,
            holo_d: holo_d.unwrap_or(1.0),
            output: Output {
                samples: o.samples,
                report: o.report,
                curve: o.curve,
                obj: o.obj,
                obj_theta: o.obj_theta,
                obj_axes,
            },
            text,
        })
    }

    /// An error attributed to `key` in this file.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { path: self.path.clone(), line: line_of(&self.text, key), message: message.into() }
    }
}

fn inversion(
    center: Option<Vec<f64>>,
    radius: f64,
    sign: Option<f64>,
    dim: usize,
    lorentz: bool,
) -> Result<AmbientMap, String> {
    let center = center.unwrap_or_else(|| vec![0.0; dim]);
    if center.len() != dim {
        return Err(format!("centre has {} coordinates, ambient space has {dim}", center.len()));
    }
    if radius <= 0.0 {
        return Err(format!("radius must be positive, got {radius}"));
    }
    let mut m = if lorentz {
        AmbientMap::lorentz_inversion(center, radius)
    } else {
        AmbientMap::euclidean_inversion(center, radius)
    }
    .map_err(|e| e.to_string())?;
    m.sign_override = sign;
    Ok(m)
}

fn stereo(kind: MapKind, d: f64, dim: usize) -> Result<AmbientMap, String> {
    if d <= 0.0 {
        return Err(format!("d must be positive, got {d}"));
    }
    AmbientMap::new(kind, dim).map_err(|e| e.to_string())
}

/// 1-based line of the first occurrence of the JSON key `"key"` (or of a
/// `"kind": "key"` tag).
fn line_of(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

fn line_of_value(text: &str, value: &str) -> Option<usize> {
    let quoted = serde_json::to_string(value).ok()?;
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}
