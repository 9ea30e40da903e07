use clap::{Args, Parser, Subcommand, ValueEnum};
use geolab::lab::GridConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "geolab", version, about = "Geodesic X-ray and boundary-rigidity experiments on the unit disk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Convexity, non-trapping and conjugate-point checks
    Certify,
    /// Boundary distance between seeded random boundary pairs
    Distance,
    /// Scattering relation on the incoming fan
    Scatter,
    /// X-ray transform of a bump, with the adjointness check
    Xray,
    /// Normal operator I*I of a bump
    Normal,
    /// Dirichlet-to-Neumann map on boundary modes
    Dn,
    /// Refinement study of one of the identities
    Identity {
        #[arg(value_enum)]
        kind: IdentityKind,
    },
    /// Boundary data w with I*w equal to a bump
    Surjectivity,
    /// Euclidean filtered backprojection
    Fbp,
    /// Metric and its pullback: boundary gauge and scattering comparison
    Thm1,
    /// Metric and its pullback: DN maps through the conjugate-function chain
    Thm3,
    /// Repeat the run echoed in an earlier report.json
    Rerun { report: PathBuf },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityKind {
    Transport,
    Hilbert,
    Conjugate,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// metric: inline `kind:conformal,c=0.1`, a JSON object, or a JSON file
    #[arg(long, global = true, default_value = "kind:euclidean")]
    pub metric: String,
    #[arg(long, global = true)]
    pub nr: Option<usize>,
    #[arg(long, global = true)]
    pub ntheta: Option<usize>,
    #[arg(long, global = true)]
    pub nbeta: Option<usize>,
    #[arg(long, global = true)]
    pub nalpha: Option<usize>,
    #[arg(long, global = true)]
    pub nphi: Option<usize>,
    #[arg(long, global = true)]
    pub guard: Option<f64>,
    /// ODE step for the operators
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// output directory; OUT_DIR overrides the default `out`
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// grid coarsenings in refinement tables
    #[arg(long, global = true)]
    pub refine: Option<u32>,
    /// boundary-fixing diffeomorphism for thm1/thm3, e.g. `radial,amp=0.05`
    #[arg(long, global = true, default_value = "radial,amp=0.05")]
    pub psi: String,
    /// boundary modes (dn, thm3) or the mode index (identity conjugate)
    #[arg(long, global = true)]
    pub modes: Option<u32>,
    /// number of boundary pairs (distance, thm1, thm3)
    #[arg(long, global = true, default_value_t = 20)]
    pub pairs: usize,
    /// write SVG plots next to the CSVs
    #[arg(long, global = true)]
    pub plots: bool,
}

/// Everything needed to reproduce a run; echoed into report.json.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub metric: String,
    pub grid: GridConfig,
    pub seed: u64,
    pub refine: Option<u32>,
    pub psi: String,
    pub modes: Option<u32>,
    pub pairs: usize,
    pub plots: bool,
}

impl RunConfig {
    pub fn from_cli(command: Command, o: &Opts) -> Self {
        let d = GridConfig::default();
        let grid = GridConfig {
            nr: o.nr.unwrap_or(d.nr),
            ntheta: o.ntheta.unwrap_or(d.ntheta),
            nbeta: o.nbeta.unwrap_or(d.nbeta),
            nalpha: o.nalpha.unwrap_or(d.nalpha),
            nphi: o.nphi.unwrap_or(d.nphi),
            guard: o.guard.unwrap_or(d.guard),
            h: o.step.unwrap_or(d.h),
        };
        RunConfig {
            command,
            metric: o.metric.clone(),
            grid,
            seed: o.seed,
            refine: o.refine,
            psi: o.psi.clone(),
            modes: o.modes,
            pairs: o.pairs,
            plots: o.plots,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grid;
        if g.nr < 8 || g.ntheta < 16 || g.nbeta < 8 || g.nalpha < 4 || g.nphi < 8 {
            return Err("grid too small: need nr ≥ 8, ntheta ≥ 16, nbeta ≥ 8, nalpha ≥ 4, nphi ≥ 8".into());
        }
        if !g.ntheta.is_multiple_of(2) || !g.nphi.is_multiple_of(2) {
            return Err("ntheta and nphi must be even".into());
        }
        if !(g.guard > 0.0 && g.guard < 0.5) {
            return Err(format!("guard {} outside (0, 0.5)", g.guard));
        }
        if !(g.h > 0.0 && g.h <= 0.1) {
            return Err(format!("step {} outside (0, 0.1]", g.h));
        }
        if self.pairs == 0 {
            return Err("pairs must be positive".into());
        }
        Ok(())
    }
}
