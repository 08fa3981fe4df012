//! Command-line configuration.
//!
//! [`RunConfig`] is everything that can change a report: it is echoed into
//! every report and parses back to an equal value. Output location and
//! thread count live in [`ExecOptions`] and are kept out of reports so the
//! bytes do not depend on them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sflab_core::experiments::{build_helicoid_member, HelicoidParams};
use sflab_core::mesh::{generate_ellipsoid, generate_icosphere, generate_torus};
use sflab_core::TriangleMesh;

use crate::error::RunError;

#[derive(Debug, Parser)]
#[command(name = "sflab", version, about = "Discrete checks for closed surfaces in space forms")]
pub struct Cli {
    #[command(flatten)]
    pub exec: ExecOptions,
    /// Seed for frequency sampling and optimizer restarts.
    #[arg(long, env = "SFLAB_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn config(&self) -> RunConfig {
        RunConfig { seed: self.seed, command: self.command.clone() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExecOptions {
    /// Directory receiving the report, side files and timings.
    #[arg(long, env = "SFLAB_OUT", default_value = "sflab-out", global = true)]
    pub out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "SFLAB_THREADS", default_value_t = 0, global = true)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Curvature and constraint residuals of a mesh.
    Check(CheckArgs),
    /// Conformal map onto the unit sphere, optionally normalized by three marks.
    Uniformize(UniformizeArgs),
    /// Kernel of the frozen-coefficient boundary symbol at sampled frequencies.
    Symbol(SymbolArgs),
    /// Helicoid-wrapping family with growing area and bounded mean curvature.
    Helicoid(HelicoidArgs),
    /// Blow-up rescaling and roundness diagnostics.
    Rigidity(RigidityArgs),
    /// Inward normal chords and their Frankel quantity.
    Chords(ChordsArgs),
    /// Preimages of the scalar fold map.
    Fold(FoldArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Uniformize(_) => "uniformize",
            Command::Symbol(_) => "symbol",
            Command::Helicoid(_) => "helicoid",
            Command::Rigidity(_) => "rigidity",
            Command::Chords(_) => "chords",
            Command::Fold(_) => "fold",
        }
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("value must be finite".into())
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err("value must be positive".into())
    }
}

/// Inline mesh generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GenSpec {
    Icosphere { level: u32, radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64, level: u32 },
    Torus { major: f64, minor: f64, n_u: usize, n_v: usize },
    /// Default helicoid family member with the given number of half-turns.
    Helicoid { wraps: u32 },
}

impl GenSpec {
    pub fn build(&self) -> Result<TriangleMesh, RunError> {
        Ok(match *self {
            GenSpec::Icosphere { level, radius } => generate_icosphere(level, radius)?,
            GenSpec::Ellipsoid { a, b, c, level } => generate_ellipsoid(a, b, c, level)?,
            GenSpec::Torus { major, minor, n_u, n_v } => generate_torus(major, minor, n_u, n_v)?,
            GenSpec::Helicoid { wraps } => {
                build_helicoid_member(&HelicoidParams::default().with_wraps(wraps))
                    .map_err(|e| RunError::Experiments(e.to_string()))?
                    .mesh
            }
        })
    }
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64, String> { positive(parts[i]) };
        let int = |i: usize| -> Result<usize, String> {
            parts[i].parse().map_err(|_| format!("{:?} is not a non-negative integer", parts[i]))
        };
        let arity = |n: usize| -> Result<(), String> {
            if parts.len() == n + 1 {
                Ok(())
            } else {
                Err(format!("{} takes {n} fields, got {}", parts[0], parts.len() - 1))
            }
        };
        let level = |i: usize| -> Result<u32, String> {
            let l = int(i)?;
            if l > 8 {
                Err(format!("level {l} is above the supported maximum 8"))
            } else {
                Ok(l as u32)
            }
        };
        match parts[0] {
            "icosphere" => {
                arity(2)?;
                Ok(GenSpec::Icosphere { level: level(1)?, radius: num(2)? })
            }
            "ellipsoid" => {
                arity(4)?;
                Ok(GenSpec::Ellipsoid { a: num(1)?, b: num(2)?, c: num(3)?, level: level(4)? })
            }
            "torus" => {
                arity(4)?;
                Ok(GenSpec::Torus { major: num(1)?, minor: num(2)?, n_u: int(3)?, n_v: int(4)? })
            }
            "helicoid" => {
                arity(1)?;
                Ok(GenSpec::Helicoid { wraps: int(1)? as u32 })
            }
            other => Err(format!(
                "unknown generator {other:?}; expected icosphere:L:R, ellipsoid:A:B:C:L, torus:R:r:NU:NV or helicoid:WRAPS"
            )),
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::Icosphere { level, radius } => write!(f, "icosphere:{level}:{radius}"),
            GenSpec::Ellipsoid { a, b, c, level } => write!(f, "ellipsoid:{a}:{b}:{c}:{level}"),
            GenSpec::Torus { major, minor, n_u, n_v } => write!(f, "torus:{major}:{minor}:{n_u}:{n_v}"),
            GenSpec::Helicoid { wraps } => write!(f, "helicoid:{wraps}"),
        }
    }
}

impl TryFrom<String> for GenSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GenSpec> for String {
    fn from(g: GenSpec) -> String {
        g.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct MeshSource {
    /// OFF or OBJ triangle mesh.
    #[arg(long, env = "SFLAB_MESH")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// Generator: icosphere:L:R, ellipsoid:A:B:C:L, torus:R:r:NU:NV or helicoid:WRAPS.
    #[arg(long = "gen", env = "SFLAB_GEN")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenSpec>,
}

impl MeshSource {
    pub fn load(&self) -> Result<TriangleMesh, RunError> {
        match (&self.mesh, &self.generator) {
            (Some(path), None) => Ok(crate::mesh_io::read_mesh(path)?),
            (None, Some(g)) => g.build(),
            _ => Err(RunError::Config("give exactly one of --mesh and --gen".into())),
        }
    }

    /// Identifier echoed into reports.
    pub fn id(&self) -> String {
        match (&self.mesh, &self.generator) {
            (Some(p), _) => p.display().to_string(),
            (None, Some(g)) => g.to_string(),
            (None, None) => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: MeshSource,
    /// Ambient sectional curvature.
    #[arg(long, env = "SFLAB_KAPPA", default_value_t = 0.0, allow_negative_numbers = true, value_parser = finite)]
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct UniformizeArgs {
    #[command(flatten)]
    pub source: MeshSource,
    /// Three vertex indices to place at pairwise spherical distance pi/2.
    #[arg(long, env = "SFLAB_MARKS", value_name = "I,J,K")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<Marks>,
    /// Flow time step, in units of the unit-area surface.
    #[arg(long, env = "SFLAB_TIME_STEP", value_parser = positive)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[arg(long, env = "SFLAB_MAX_STEPS")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Stop when the largest vertex motion of a step falls below this.
    #[arg(long, env = "SFLAB_TOLERANCE", value_parser = positive)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Also write the sphere image as sphere.off.
    #[arg(long)]
    #[serde(default)]
    pub write_off: bool,
}

/// Three distinct vertex indices written `i,j,k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Marks(pub [usize; 3]);

impl FromStr for Marks {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| format!("{t:?} is not a vertex index")))
            .collect::<Result<_, _>>()?;
        let m: [usize; 3] = v.try_into().map_err(|v: Vec<usize>| format!("expected three indices, got {}", v.len()))?;
        if m[0] == m[1] || m[1] == m[2] || m[0] == m[2] {
            return Err("marks must be distinct".into());
        }
        Ok(Marks(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    ConformalMean,
    Dirichlet,
    Immersion,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SymbolArgs {
    /// Which symbol to analyse.
    #[arg(long, env = "SFLAB_BC", value_enum, default_value_t = BoundaryKind::ConformalMean)]
    pub bc: BoundaryKind,
    /// Number of sampled frequencies.
    #[arg(long, env = "SFLAB_SAMPLES", default_value_t = 100)]
    pub samples: usize,
    /// Frequency magnitudes are log-uniform in [1/R, R].
    #[arg(long, env = "SFLAB_RADIUS_SPAN", default_value_t = 10.0, value_parser = positive)]
    pub radius_span: f64,
}

fn helicoid_defaults() -> HelicoidParams {
    HelicoidParams::default()
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HelicoidArgs {
    /// Half-turn counts of the family members, strictly increasing.
    #[arg(long, env = "SFLAB_WRAPS", value_delimiter = ',', default_value = "2,4,8")]
    pub wraps: Vec<u32>,
    /// Twist rate in radians per unit length.
    #[arg(long, default_value_t = helicoid_defaults().pitch, value_parser = positive)]
    pub pitch: f64,
    #[arg(long, default_value_t = helicoid_defaults().radius, value_parser = positive)]
    pub radius: f64,
    /// Semi-minor axis of the cross-section; must stay below the radius.
    #[arg(long, default_value_t = helicoid_defaults().half_thickness, value_parser = positive)]
    pub half_thickness: f64,
    #[arg(long, default_value_t = helicoid_defaults().cap_length, value_parser = positive)]
    pub cap_length: f64,
    /// Points around each cross-section.
    #[arg(long, default_value_t = helicoid_defaults().resolution)]
    pub resolution: usize,
    #[arg(long, default_value_t = helicoid_defaults().cap_rows)]
    pub cap_rows: usize,
    /// Lower end of the mean-curvature band enforced by smoothing.
    #[arg(long, default_value_t = helicoid_defaults().h_min, value_parser = positive)]
    pub h_min: f64,
    #[arg(long, default_value_t = helicoid_defaults().max_smoothing_iterations)]
    pub max_smoothing_iterations: usize,
}

impl HelicoidArgs {
    pub fn params(&self) -> HelicoidParams {
        HelicoidParams {
            wraps: self.wraps.first().copied().unwrap_or(1),
            pitch: self.pitch,
            radius: self.radius,
            half_thickness: self.half_thickness,
            cap_length: self.cap_length,
            resolution: self.resolution,
            cap_rows: self.cap_rows,
            h_min: self.h_min,
            max_smoothing_iterations: self.max_smoothing_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RigidityArgs {
    #[command(flatten)]
    pub source: MeshSource,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ChordsArgs {
    #[command(flatten)]
    pub source: MeshSource,
    /// Ambient curvature entering the Frankel quantity.
    #[arg(long, env = "SFLAB_KAPPA", default_value_t = 0.0, allow_negative_numbers = true, value_parser = finite)]
    pub kappa: f64,
    /// Both end angles below this many degrees flag a chord as near-orthogonal.
    #[arg(long, env = "SFLAB_THRESHOLD_DEG", default_value_t = 5.0, value_parser = positive)]
    pub threshold_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FoldArgs {
    /// Target values c of beta(a) = c.
    #[arg(long = "c", env = "SFLAB_FOLD_C", value_delimiter = ',', default_value = "10", allow_negative_numbers = true, value_parser = finite)]
    pub values: Vec<f64>,
    /// Points on the sampled beta curve written to fold.dat.
    #[arg(long, env = "SFLAB_SAMPLES", default_value_t = 200)]
    pub samples: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn generator_specs_round_trip() {
        for s in ["icosphere:4:1", "ellipsoid:1.5:1:0.8:3", "torus:2:0.5:32:16", "helicoid:8"] {
            let g: GenSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        for bad in ["icosphere:4", "cube:1", "ellipsoid:1:1:-1:3", "icosphere:12:1", "torus:2:nan:3:3"] {
            assert!(bad.parse::<GenSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cli = Cli::try_parse_from([
            "sflab", "--seed", "7", "uniformize", "--gen", "ellipsoid:2:1:1:3", "--marks", "0,5,9", "--tolerance", "1e-8",
        ])
        .unwrap();
        let config = cli.config();
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), config);
        let Command::Uniformize(u) = &config.command else { panic!() };
        assert_eq!(u.marks, Some(Marks([0, 5, 9])));
        assert!(Cli::try_parse_from(["sflab", "uniformize", "--gen", "icosphere:1:1", "--marks", "0,5"]).is_err());
        assert!(Cli::try_parse_from(["sflab", "uniformize", "--gen", "icosphere:1:1", "--marks", "0,5,5"]).is_err());
    }

    #[test]
    fn mesh_source_is_exclusive_and_required() {
        assert!(Cli::try_parse_from(["sflab", "check"]).is_err());
        assert!(Cli::try_parse_from(["sflab", "check", "--gen", "icosphere:1:1", "--mesh", "a.off"]).is_err());
        let cli = Cli::try_parse_from(["sflab", "check", "--gen", "icosphere:1:1", "--kappa", "-1"]).unwrap();
        let Command::Check(c) = cli.command else { panic!() };
        assert_eq!(c.kappa, -1.0);
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["sflab", "helicoid"]).unwrap();
        let Command::Helicoid(h) = cli.command else { panic!() };
        assert_eq!(h.wraps, [2, 4, 8]);
        assert_eq!(HelicoidParams { wraps: 2, ..h.params() }, HelicoidParams::default());
        let cli = Cli::try_parse_from(["sflab", "symbol", "--bc", "dirichlet"]).unwrap();
        assert_eq!(cli.exec.threads, 0);
        assert!(matches!(cli.command, Command::Symbol(SymbolArgs { bc: BoundaryKind::Dirichlet, samples: 100, .. })));
    }
}
