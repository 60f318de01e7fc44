//! Typed scenario description, read from TOML.

use std::path::PathBuf;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::antiplane_reference_at;
use crate::material::{Material, Mode};
use crate::mesh::{ComponentMask, PlanarDomain, Point, StripPattern};
use crate::system::{field, Field};

/// A configuration problem, located by a dotted field path.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Free text: unit set, provenance of the parameters.
    #[serde(default)]
    pub notes: String,
    pub mesh: MeshSpec,
    pub material: MaterialSpec,
    #[serde(default)]
    pub boundary: Vec<BoundarySpec>,
    /// Crack mouth first, tip last.
    #[serde(default)]
    pub initial_crack: Vec<[f64; 2]>,
    #[serde(default)]
    pub loading: LoadingSpec,
    #[serde(default)]
    pub crack: CrackSpec,
    #[serde(default = "default_beta")]
    pub stabilization: f64,
    #[serde(default)]
    pub reaction: Option<ReactionSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

fn default_beta() -> f64 {
    2.0
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    Strip,
    SlitDisk,
    Unstructured,
    Gmsh,
    Dump,
}

/// Mesh source. Which fields are required depends on `kind`:
/// `strip` needs `length`, `height`, `h`; `slit-disk` needs `radius`,
/// `rings`; `unstructured` needs `domain`, `h`; `gmsh` and `dump` need
/// `path`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub kind: MeshKind,
    pub length: Option<f64>,
    pub height: Option<f64>,
    pub h: Option<f64>,
    #[serde(default)]
    pub pattern: StripPattern,
    pub radius: Option<f64>,
    pub rings: Option<usize>,
    pub domain: Option<PlanarDomain>,
    #[serde(default)]
    pub seed: u64,
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub retag: Vec<RetagSpec>,
}

impl MeshSpec {
    pub fn of_kind(kind: MeshKind) -> Self {
        MeshSpec {
            kind,
            length: None,
            height: None,
            h: None,
            pattern: StripPattern::default(),
            radius: None,
            rings: None,
            domain: None,
            seed: 0,
            path: None,
            retag: Vec::new(),
        }
    }
}

/// Moves boundary facets tagged `from` whose barycenter lies in the box
/// `[min, max]` to the tag `to`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RetagSpec {
    pub from: String,
    pub to: String,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default)]
    pub mode: Mode,
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    /// Shear modulus, antiplane only.
    pub shear: Option<f64>,
    /// Critical energy release rate `G_c`; `inf` disables cracking.
    pub toughness: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    #[default]
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    #[default]
    Upper,
    Lower,
}

/// Boundary value as a function of position and load parameter `t`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ValueSpec {
    Constant { value: [f64; 2] },
    /// `direction · t`.
    Ramp { direction: [f64; 2] },
    /// Near-tip mode III displacement. On the slit `y = 0` the angle is
    /// taken as `+π` on the upper branch and `−π` on the lower one.
    AntiplaneReference {
        tau: f64,
        a: f64,
        mu: f64,
        #[serde(default)]
        branch: Branch,
    },
}

impl ValueSpec {
    pub fn to_field(&self) -> Field {
        match *self {
            ValueSpec::Constant { value } => field(move |_, _| Vector2::new(value[0], value[1])),
            ValueSpec::Ramp { direction } => field(move |_, t| Vector2::new(direction[0], direction[1]) * t),
            ValueSpec::AntiplaneReference { tau, a, mu, branch } => field(move |x: &Point, _| {
                let y = if x.y == 0.0 && branch == Branch::Lower { -0.0 } else { x.y };
                antiplane_reference_at(&Point::new(x.x, y), tau, a, mu).0
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub tag: String,
    #[serde(default)]
    pub kind: BoundaryKind,
    pub value: ValueSpec,
    /// Prescribed components for Dirichlet data; all by default.
    pub components: Option<[bool; 2]>,
}

impl BoundarySpec {
    pub fn mask(&self) -> ComponentMask {
        ComponentMask(self.components.unwrap_or([true, true]))
    }
}

/// Load steps `t_k = k · increment` up to `final`.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LoadingSpec {
    pub increment: Option<f64>,
    #[serde(rename = "final")]
    pub final_load: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CrackSpec {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub seed: u64,
    /// Restricts breaking to facets on a horizontal line.
    pub path_filter: Option<LineFilterSpec>,
}

fn default_window() -> usize {
    6
}

impl Default for CrackSpec {
    fn default() -> Self {
        CrackSpec { window: default_window(), seed: 0, path_filter: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LineFilterSpec {
    pub y: f64,
    pub tol: f64,
}

/// Boundary whose reaction is recorded, projected on `direction` in the
/// load-displacement curve.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    pub tag: String,
    pub direction: [f64; 2],
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps; 0 keeps only the last.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Analytical crack speed for the speed-error report.
    pub crack_speed_reference: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalysisSpec {
    #[default]
    QuasiStatic,
    /// Static solves at each refinement level against the mode III
    /// reference. `levels` are ring counts for a slit disk and mesh sizes
    /// otherwise.
    Convergence { levels: Vec<f64>, tau: f64, a: f64, mu: f64 },
}

/// Command-line adjustments applied on top of a scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub h: Option<f64>,
    pub du: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(h) = self.h {
            match s.mesh.kind {
                MeshKind::SlitDisk => {
                    let r = s.mesh.radius.unwrap_or(1.0);
                    s.mesh.rings = Some(((r / h).round() as usize).max(1));
                }
                _ => s.mesh.h = Some(h),
            }
        }
        if let Some(du) = self.du {
            s.loading.increment = Some(du);
        }
        if let Some(seed) = self.seed {
            s.crack.seed = seed;
        }
        if let Some(out) = &self.out {
            s.output.dir = Some(out.clone());
        }
    }
}

fn positive(path: &str, v: Option<f64>) -> Result<f64, ValidationError> {
    match v {
        None => Err(ValidationError::new(path, "missing")),
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(ValidationError::new(path, format!("must be positive and finite, got {x}"))),
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let path = msg
                .strip_prefix("missing field `")
                .and_then(|r| r.split('`').next())
                .unwrap_or("<config>")
                .to_string();
            ValidationError::new(path, msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn material(&self) -> Result<Material, ValidationError> {
        let m = &self.material;
        let toughness = match m.toughness {
            None => return Err(ValidationError::new("material.toughness", "missing critical energy release rate")),
            Some(g) if g > 0.0 => g,
            Some(g) => return Err(ValidationError::new("material.toughness", format!("must be positive, got {g}"))),
        };
        match m.mode {
            Mode::PlaneStrain => {
                let e = positive("material.young", m.young)?;
                let nu = m.poisson.ok_or_else(|| ValidationError::new("material.poisson", "missing"))?;
                Material::from_young_poisson(e, nu, toughness, Mode::PlaneStrain)
                    .map_err(|err| ValidationError::new("material.poisson", err.to_string()))
            }
            Mode::Antiplane => {
                let mu = positive("material.shear", m.shear)?;
                Material::antiplane(mu, toughness).map_err(|err| ValidationError::new("material.shear", err.to_string()))
            }
        }
    }

    /// `(increment, number of steps)`.
    pub fn schedule(&self) -> Result<(f64, usize), ValidationError> {
        let du = positive("loading.increment", self.loading.increment)?;
        let last = positive("loading.final", self.loading.final_load)?;
        if last < du {
            return Err(ValidationError::new("loading.final", format!("final load {last} is below the increment {du}")));
        }
        Ok((du, (last / du * (1.0 + 1e-12)).floor() as usize))
    }

    /// Checks everything that does not need the mesh.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let m = &self.mesh;
        match m.kind {
            MeshKind::Strip => {
                positive("mesh.length", m.length)?;
                positive("mesh.height", m.height)?;
                positive("mesh.h", m.h)?;
            }
            MeshKind::SlitDisk => {
                positive("mesh.radius", m.radius)?;
                if m.rings.unwrap_or(0) == 0 {
                    return Err(ValidationError::new("mesh.rings", "missing or zero"));
                }
            }
            MeshKind::Unstructured => {
                if m.domain.is_none() {
                    return Err(ValidationError::new("mesh.domain", "missing"));
                }
                positive("mesh.h", m.h)?;
            }
            MeshKind::Gmsh | MeshKind::Dump => {
                if m.path.is_none() {
                    return Err(ValidationError::new("mesh.path", "missing"));
                }
            }
        }
        self.material()?;
        if !(self.stabilization > 0.0 && self.stabilization.is_finite()) {
            return Err(ValidationError::new("stabilization", "must be positive"));
        }
        if self.initial_crack.len() == 1 {
            return Err(ValidationError::new("initial_crack", "needs at least two points"));
        }
        for (i, b) in self.boundary.iter().enumerate() {
            if b.tag.is_empty() {
                return Err(ValidationError::new(format!("boundary[{i}].tag"), "empty"));
            }
            if let Some(c) = b.components {
                if c == [false, false] {
                    return Err(ValidationError::new(format!("boundary[{i}].components"), "no component selected"));
                }
            }
        }
        match &self.analysis {
            AnalysisSpec::QuasiStatic => {
                self.schedule()?;
                if self.crack.window == 0 {
                    return Err(ValidationError::new("crack.window", "must be at least 1"));
                }
            }
            AnalysisSpec::Convergence { levels, mu, .. } => {
                if levels.len() < 2 {
                    return Err(ValidationError::new("analysis.levels", "need at least two levels"));
                }
                if levels.iter().any(|&l| !(l > 0.0)) {
                    return Err(ValidationError::new("analysis.levels", "levels must be positive"));
                }
                positive("analysis.mu", Some(*mu))?;
            }
        }
        Ok(())
    }
}
