//! Experiment configuration (TOML). Every section is optional and every field
//! has a default; unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;

use nilflow::analysis::{Regime, Sampling};
use nilflow::moduli::{named_frame, rotation_frame};
use nilflow::spectral::{ComponentSpec, Observable, ObservableSpec};
use nilflow::{Frame, Lattice};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    WeylSum,
    L2Identity,
    LineModel,
    LimitDist,
    Sublevel,
    Valency,
    Correlation,
    RenormTrack,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::WeylSum,
        Kind::L2Identity,
        Kind::LineModel,
        Kind::LimitDist,
        Kind::Sublevel,
        Kind::Valency,
        Kind::Correlation,
        Kind::RenormTrack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::WeylSum => "weyl-sum",
            Kind::L2Identity => "l2-identity",
            Kind::LineModel => "line-model",
            Kind::LimitDist => "limit-dist",
            Kind::Sublevel => "sublevel",
            Kind::Valency => "valency",
            Kind::Correlation => "correlation",
            Kind::RenormTrack => "renorm-track",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    pub kind: Option<Kind>,
    pub seed: u64,
    /// Output directory; the `--out` flag and `NILFLOW_OUT` take precedence.
    pub out: Option<PathBuf>,
    pub frame: FrameSpec,
    pub observable: ObservableSpec,
    pub weyl_sum: WeylSumParams,
    pub l2_identity: L2IdentityParams,
    pub line_model: LineModelParams,
    pub limit_dist: LimitDistParams,
    pub sublevel: SublevelParams,
    pub valency: ValencyParams,
    pub correlation: CorrelationParams,
    pub renorm_track: RenormTrackParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            seed: 1,
            out: None,
            frame: FrameSpec::named("golden"),
            observable: ObservableSpec {
                k: 1,
                bump_cells: nilflow::spectral::DEFAULT_CELLS,
                components: vec![ComponentSpec { m: 0, n: 1, re: 1.0, im: 0.0 }],
            },
            weyl_sum: WeylSumParams::default(),
            l2_identity: L2IdentityParams::default(),
            line_model: LineModelParams::default(),
            limit_dist: LimitDistParams::default(),
            sublevel: SublevelParams::default(),
            valency: ValencyParams::default(),
            correlation: CorrelationParams::default(),
            renorm_track: RenormTrackParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        Ok(Lattice::new(self.observable.k)?)
    }

    pub fn build_frame(&self) -> Result<Frame, CliError> {
        self.frame.build(self.lattice()?)
    }

    pub fn build_observable(&self) -> Result<Observable, CliError> {
        if self.observable.components.is_empty() {
            return Err(CliError::Config("observable: `components` must not be empty".into()));
        }
        Ok(self.observable.build()?)
    }
}

/// One of: a named frame (`"golden"`, `"sqrt2"`, `"rational:p/q"`), the
/// matrix entries `[a, b, c, d]` with central parts `v, w`, or a return-map
/// rotation `rho` with translation `sigma`. Without a `[frame]` table the
/// golden frame is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    pub name: Option<String>,
    pub matrix: Option<[f64; 4]>,
    pub v: Option<f64>,
    pub w: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
}

impl FrameSpec {
    pub fn named(name: &str) -> Self {
        FrameSpec { name: Some(name.into()), ..FrameSpec::default() }
    }
}

impl FrameSpec {
    pub fn build(&self, lattice: Lattice) -> Result<Frame, CliError> {
        let given = [self.name.is_some(), self.matrix.is_some(), self.rho.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            if self.sigma.is_some() && self.rho.is_none() {
                return Err(CliError::Config("frame: `sigma` given but required field `rho` is missing".into()));
            }
            return Err(CliError::Config("frame: give exactly one of `name`, `matrix` or `rho`".into()));
        }
        if self.matrix.is_none() && (self.v.is_some() || self.w.is_some()) {
            return Err(CliError::Config("frame: `v`/`w` only apply together with `matrix`".into()));
        }
        if self.rho.is_none() && self.sigma.is_some() {
            return Err(CliError::Config("frame: `sigma` only applies together with `rho`".into()));
        }
        if let Some(name) = &self.name {
            return Ok(named_frame(name, lattice)?);
        }
        if let Some([a, b, c, d]) = self.matrix {
            return Ok(Frame::new(a, b, c, d, self.v.unwrap_or(0.0), self.w.unwrap_or(0.0), lattice)?);
        }
        let rho = self.rho.expect("one source is present");
        Ok(rotation_frame(rho, self.sigma.unwrap_or(0.0), lattice))
    }
}

macro_rules! defaults {
    ($ty:ident { $($field:ident : $val:expr),* $(,)? }) => {
        impl Default for $ty {
            fn default() -> Self {
                $ty { $($field: $val),* }
            }
        }
    };
}

/// Character sum of the first observable component along the return map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylSumParams {
    pub terms: u64,
    pub y: f64,
    pub z: f64,
    /// Spacing of the recorded partial sums.
    pub stride: u64,
    /// Length of the prefix compared against term-by-term evaluation.
    pub check_terms: u64,
    pub tolerance: f64,
}
defaults!(WeylSumParams { terms: 1_000_000, y: 0.123, z: 0.37, stride: 1000, check_terms: 1_000_000, tolerance: 1e-9 });

/// Grid L² norm and mean over `y` of `S_J`; the grid is `2^⌈log₂ 4KnJ⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L2IdentityParams {
    pub terms: Vec<u64>,
    pub z: f64,
    pub tolerance: f64,
}
defaults!(L2IdentityParams { terms: vec![10, 100, 1000], z: 0.37, tolerance: 1e-9 });

/// Gaussian `e^{−2u²}` on `2^grid_log2` points over `[−half_width, half_width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineModelParams {
    pub grid_log2: u32,
    pub half_width: f64,
    pub times: Vec<f64>,
}
defaults!(LineModelParams { grid_log2: 20, half_width: 1024.0, times: vec![4.0, 16.0, 64.0, 256.0] });

/// Distribution of `T^{−1/2} I_T` at `base_time` and at `scales − 1` further
/// renormalization periods (periodic frames), or at explicit `times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitDistParams {
    pub base_time: f64,
    pub scales: usize,
    pub times: Option<Vec<f64>>,
    pub samples: usize,
    pub sampling: Sampling,
    /// Quantile levels written per time.
    pub quantiles: usize,
}
defaults!(LimitDistParams {
    base_time: 1e3,
    scales: 3,
    times: None,
    samples: 10_000,
    sampling: Sampling::Volume,
    quantiles: 99,
});

/// `Leb{|I_T| ≤ ε T^{1/2}·scale}` on `points` log-spaced ε in `[eps_lo, eps_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SublevelParams {
    pub time: f64,
    pub samples: usize,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub points: usize,
    pub regime: Regime,
}
defaults!(SublevelParams {
    time: 1e4,
    samples: 100_000,
    eps_lo: 1e-3,
    eps_hi: 1e-1,
    points: 8,
    regime: Regime::Compact
});

/// Leaf functions of the holomorphic extension through random points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValencyParams {
    pub time: f64,
    pub leaves: usize,
    pub r: f64,
    pub t: f64,
    /// Largest log growth allowed on the leaf disc `|ζ| ≤ r`.
    pub log_budget: f64,
    /// Real samples on `[−r, r]` for the Chebyshev degree.
    pub degree_samples: usize,
}
defaults!(ValencyParams { time: 1e3, leaves: 100, r: 10.0, t: 1.25, log_budget: 8.0, degree_samples: 2048 });

/// Time change `α = 1 + amplitude·Re f` (lifted by the bump): stretch band and
/// self-correlation of the observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationParams {
    pub amplitude: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
    pub samples: usize,
    pub stretch_times: Vec<f64>,
    pub stretch_samples: usize,
}
defaults!(CorrelationParams {
    amplitude: 0.25,
    t_lo: 1.0,
    t_hi: 1e3,
    points: 12,
    samples: 100_000,
    stretch_times: vec![1e2, 1e3, 1e4],
    stretch_samples: 1000,
});

/// Cusp excursion `δ_M` along `g_t`, and `E|T^{−1/2} I_T|²` at
/// `T = base_time·e^t` for `moment_points` of the same `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormTrackParams {
    pub horizon: f64,
    pub points: usize,
    pub base_time: f64,
    pub moment_points: usize,
    pub samples: usize,
    pub sampling: Sampling,
}
defaults!(RenormTrackParams {
    horizon: 8.0,
    points: 256,
    base_time: 1e2,
    moment_points: 8,
    samples: 2000,
    sampling: Sampling::Volume,
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::parse("bogus = 1"), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("[weyl_sum]\nterm = 5"), Err(CliError::Config(_))));
    }

    #[test]
    fn frame_sources() {
        let k = Lattice::UNIT;
        let c = ExperimentConfig::parse("[frame]\nrho = 0.25\nsigma = 0.1").unwrap();
        assert!((c.frame.build(k).unwrap().return_params().unwrap().rho - 0.25).abs() < 1e-12);
        let c = ExperimentConfig::parse("[frame]\nname = \"rational:1/3\"").unwrap();
        assert!(c.frame.build(k).is_ok());
        let c = ExperimentConfig::parse("[frame]\nmatrix = [1.0, 0.5, 0.0, 1.0]").unwrap();
        assert!(c.frame.build(k).is_ok());
        let c = ExperimentConfig::parse("[frame]\nsigma = 0.1").unwrap();
        match c.frame.build(k) {
            Err(CliError::Config(m)) => assert!(m.contains("rho"), "{m}"),
            other => panic!("{other:?}"),
        }
        let c = ExperimentConfig::parse("[frame]\nname = \"golden\"\nrho = 0.3").unwrap();
        assert!(c.frame.build(k).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }
}
