use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "slekit",
    version,
    about = "SLE, loop-erased walk, spanning tree and percolation experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with `seed`, `threads`, `out` and a `params` object.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a driving function and write the Loewner trace.
    Trace(TraceArgs),
    /// Final tips of independent chordal SLE traces.
    SleSample(SleSampleArgs),
    /// Which side of the real line the SLE hull swallows first.
    SideHit(SideHitArgs),
    /// Radial boundary-hitting diffusion against its exact martingale.
    RadialSurvival(RadialSurvivalArgs),
    /// Loop-erased random walk in a lattice domain.
    Lerw(LerwArgs),
    /// Uniform spanning tree of a grid by Wilson's algorithm.
    Ust(UstArgs),
    /// Peano contour of a spanning tree wired along the bottom row.
    Peano(PeanoArgs),
    /// Left-right crossing of a percolation rhombus.
    PercoCross(PercoCrossArgs),
    /// Crossing probabilities in the equilateral triangle.
    Cardy(CardyArgs),
    /// Arm events in annuli and the fitted exponent.
    Arms(ArmsArgs),
    /// Hitting law of the reflected walk in the 60 degree wedge.
    Wedge(WedgeArgs),
    /// Brownian excursion avoiding a vertical slit.
    Excursion(ExcursionArgs),
    /// Random-walk disconnection exponent.
    Disconnect(DisconnectArgs),
    /// Two-walk non-intersection exponent.
    Nonintersect(NonintersectArgs),
    /// Table of exact exponents.
    Exponents(ExponentsArgs),
    /// Closed-form probabilities.
    Formulas(FormulasArgs),
    /// Removal map of a slit along an SLE path and the restriction martingale.
    RemovalMap(RemovalMapArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace(_) => "trace",
            Command::SleSample(_) => "sle-sample",
            Command::SideHit(_) => "side-hit",
            Command::RadialSurvival(_) => "radial-survival",
            Command::Lerw(_) => "lerw",
            Command::Ust(_) => "ust",
            Command::Peano(_) => "peano",
            Command::PercoCross(_) => "perco-cross",
            Command::Cardy(_) => "cardy",
            Command::Arms(_) => "arms",
            Command::Wedge(_) => "wedge",
            Command::Excursion(_) => "excursion",
            Command::Disconnect(_) => "disconnect",
            Command::Nonintersect(_) => "nonintersect",
            Command::Exponents(_) => "exponents",
            Command::Formulas(_) => "formulas",
            Command::RemovalMap(_) => "removal-map",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Chordal,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    Disc,
    Square,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeArg {
    Square,
    Triangular,
}

/// Declares a parameter struct whose fields are all optional flags; the
/// same keys are accepted in the config file's `params` object.
macro_rules! params {
    ($name:ident { $($(#[$m:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $(
                $(#[$m])*
                #[arg(long)]
                pub $field: Option<$ty>,
            )*
        }
    };
}

/// Like `params!` for comma-separated list flags.
macro_rules! list_params {
    ($name:ident { $($(#[$m:meta])* $field:ident : $ty:ty),* $(,)? } lists { $($(#[$lm:meta])* $lfield:ident : $lty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $(
                $(#[$m])*
                #[arg(long)]
                pub $field: Option<$ty>,
            )*
            $(
                $(#[$lm])*
                #[arg(long, value_delimiter = ',', num_args = 1..)]
                pub $lfield: Option<Vec<$lty>>,
            )*
        }
    };
}

params!(TraceArgs {
    /// SLE parameter (required).
    kappa: f64,
    /// Time horizon.
    t: f64,
    dt: f64,
    kind: TraceKind,
});

params!(SleSampleArgs {
    /// SLE parameter (required).
    kappa: f64,
    t: f64,
    dt: f64,
    samples: u64,
});

params!(SideHitArgs {
    /// SLE parameter, above 4 (required).
    kappa: f64,
    /// Left boundary point, negative.
    a: f64,
    /// Right boundary point, positive.
    c: f64,
    /// Horizon after which a run is inconclusive.
    t: f64,
    dt: f64,
    trials: u64,
});

list_params!(RadialSurvivalArgs {
    /// SLE parameter, above 4 (required).
    kappa: f64,
    /// Starting angle in (0, 2 pi).
    x: f64,
    /// Weight exponent of the derivative.
    b: f64,
    trials: u64,
} lists {
    times: f64,
});

params!(LerwArgs {
    shape: ShapeArg,
    /// Radius, half side or side length of the shape.
    size: f64,
    mesh: f64,
    lattice: LatticeArg,
    samples: u64,
});

params!(UstArgs {
    width: usize,
    height: usize,
});

params!(PeanoArgs {
    width: usize,
    height: usize,
});

params!(PercoCrossArgs {
    /// Rhombus side in cells.
    n: usize,
    p: f64,
    trials: u64,
});

list_params!(CardyArgs {
    /// Triangle side in cells.
    n: usize,
    p: f64,
    trials: u64,
} lists {
    /// Values of |CX| / |CA|.
    s: f64,
});

list_params!(ArmsArgs {
    /// Radius of the excluded inner disc.
    r0: f64,
    arms: usize,
    p: f64,
    trials: u64,
} lists {
    radii: f64,
});

params!(WedgeArgs {
    /// Far segment index.
    n: u32,
    trials: u64,
});

params!(ExcursionArgs {
    foot: f64,
    height: f64,
    horizon: f64,
    dt: f64,
    trials: u64,
});

list_params!(DisconnectArgs {
    /// Inner radius in lattice units.
    m: u32,
    trials: u64,
} lists {
    /// Outer radius as a multiple of the inner one.
    radii: u32,
});

list_params!(NonintersectArgs {
    trials: u64,
} lists {
    /// Walk lengths.
    ns: usize,
});

params!(ExponentsArgs {
    /// SLE parameter (required).
    kappa: f64,
    b: f64,
    /// Number of walks for the intersection exponents.
    k: u32,
    /// Number of percolation arms.
    n: u32,
});

params!(FormulasArgs {
    /// SLE parameter (required).
    kappa: f64,
    /// Argument of the hitting distribution.
    z: f64,
    a: f64,
    c: f64,
    /// Slit foot and height for the avoidance formulas.
    foot: f64,
    height: f64,
});

params!(RemovalMapArgs {
    kappa: f64,
    foot: f64,
    height: f64,
    /// Horizon of the recorded trajectory and of the martingale check.
    t: f64,
    dt: f64,
    trials: u64,
    /// Trials of the full avoidance experiment (0 skips it).
    avoid_trials: u64,
});
