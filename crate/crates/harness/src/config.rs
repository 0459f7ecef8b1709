use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qbc_core::adversary::{Direction, OptimizerConfig};
use qbc_core::channels::MAX_EXACT_AVERAGING_DIM;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Largest dimension the CLI accepts.
pub const MAX_D: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Hiding,
    Structure,
    Bounds,
    Nogo,
    Attack,
    Lemma,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Hiding, Suite::Structure, Suite::Bounds, Suite::Nogo, Suite::Attack, Suite::Lemma];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hiding => "hiding",
            Suite::Structure => "structure",
            Suite::Bounds => "bounds",
            Suite::Nogo => "nogo",
            Suite::Attack => "attack",
            Suite::Lemma => "lemma",
        }
    }

    /// Stream id for the suite's random number generator.
    pub(crate) fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            let known: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
            HarnessError::Usage(format!("unknown suite `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(HarnessError::Usage(format!("unknown format `{other}` (expected json or csv)"))),
        }
    }
}

/// Parses `0to1`, `1to0` or `both`.
pub fn parse_directions(s: &str) -> Result<Vec<Direction>> {
    match s {
        "both" => Ok(Direction::BOTH.to_vec()),
        other => other
            .parse::<Direction>()
            .map(|d| vec![d])
            .map_err(|_| HarnessError::Usage(format!("unknown direction `{other}` (expected 0to1, 1to0 or both)"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    pub seed: u64,
    pub suites: Vec<Suite>,
    /// Directions searched by the attack suite.
    pub directions: Vec<Direction>,
    pub optimizer: OptimizerConfig,
    /// Permutations drawn when `d > 4`.
    pub permutation_samples: usize,
    /// Random density matrices pushed through the averaged channels.
    pub random_states: usize,
    /// Random instance/channel pairs in the bounds suite.
    pub bound_samples: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Record wall-clock time per suite. Off by default since it breaks
    /// byte-identical reports.
    pub timings: bool,
}

impl RunConfig {
    pub fn new(d: usize, seed: u64, suites: Vec<Suite>) -> Self {
        Self {
            d,
            seed,
            suites,
            directions: Direction::BOTH.to_vec(),
            optimizer: OptimizerConfig::default(),
            permutation_samples: 64,
            random_states: 50,
            bound_samples: 1000,
            output: None,
            format: OutputFormat::Json,
            timings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_D).contains(&self.d) {
            return Err(HarnessError::Usage(format!("--d must be in 2..={MAX_D}, got {}", self.d)));
        }
        if self.suites.contains(&Suite::Hiding) && self.d > MAX_EXACT_AVERAGING_DIM {
            return Err(HarnessError::Usage(format!(
                "the hiding suite averages exactly over all permutations and needs d <= {MAX_EXACT_AVERAGING_DIM}"
            )));
        }
        if self.directions.is_empty() {
            return Err(HarnessError::Usage("no attack direction selected".into()));
        }
        let opt = &self.optimizer;
        if opt.restarts == 0 || opt.kraus_rank == 0 || opt.trace_stride == 0 {
            return Err(HarnessError::Usage("--restarts and --kraus-rank must be at least 1".into()));
        }
        if self.permutation_samples == 0 {
            return Err(HarnessError::Usage("permutation sample count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Subcommand-independent parse of a comma list such as `hiding,structure`.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let suite: Suite = part.parse()?;
        if !out.contains(&suite) {
            out.push(suite);
        }
    }
    Ok(out)
}
