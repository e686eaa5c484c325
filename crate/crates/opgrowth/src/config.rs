//! Plain-text key-value experiment configuration.
//!
//! Format: one `key = value` per line, `#` starts a comment, blank lines
//! ignored. Lists are comma-separated. Unknown keys are rejected by name so a
//! typo cannot silently fall back to a default.

use crate::circuit::Geometry;
use crate::error::{Error, Result};
use crate::lattice::FillingConvention;
use crate::syk::Variant;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Otoc,
    Autocorr,
    Butterfly,
    ExactBound,
    SykTheory,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Otoc => "otoc",
            ExperimentKind::Autocorr => "autocorr",
            ExperimentKind::Butterfly => "butterfly",
            ExperimentKind::ExactBound => "exact-bound",
            ExperimentKind::SykTheory => "syk-theory",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "otoc" => Ok(ExperimentKind::Otoc),
            "autocorr" => Ok(ExperimentKind::Autocorr),
            "butterfly" => Ok(ExperimentKind::Butterfly),
            "exact-bound" => Ok(ExperimentKind::ExactBound),
            "syk-theory" => Ok(ExperimentKind::SykTheory),
            other => Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        }
    }
}

/// Front-extraction method selector for butterfly runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontKind {
    Threshold,
    Collapse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// All-to-all size N (otoc / autocorr).
    pub n_sites: usize,
    /// Chain length L (butterfly).
    pub l_sites: usize,
    pub k: usize,
    pub f: f64,
    /// Densities n̄ to sweep.
    pub nbar: Vec<f64>,
    pub filling: FillingConvention,
    pub t_max: usize,
    pub samples: usize,
    /// Recording times for butterfly profiles (circuit steps).
    pub profile_times: Vec<usize>,
    pub front: FrontKind,
    pub theta: f64,
    // exact-bound parameters
    pub exact_n: usize,
    pub exact_cap: usize,
    pub n_hamiltonians: usize,
    pub s_row: usize,
    pub s_col: usize,
    pub mu: Vec<f64>,
    pub exact_times: Vec<f64>,
    // theory parameters
    pub variant: Variant,
    pub q: usize,
    pub j: f64,
    pub b: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n_sites: 2000,
            l_sites: 300,
            k: 3,
            f: 0.5,
            nbar: vec![0.1],
            filling: FillingConvention::UpFraction,
            t_max: 60,
            samples: 2000,
            profile_times: vec![20, 40, 60, 80, 100],
            front: FrontKind::Threshold,
            theta: 0.5,
            exact_n: 4,
            exact_cap: 6,
            n_hamiltonians: 5,
            s_row: 1,
            s_col: 3,
            mu: vec![0.0, 1.0, 2.0],
            exact_times: vec![0.0, 0.5, 1.0, 2.0],
            variant: Variant::Brownian,
            q: 4,
            j: 1.0,
            b: 0.25,
            seed: 1,
        }
    }

    /// Parse `key = value` text against the defaults for `kind`.
    pub fn parse(kind: ExperimentKind, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(kind);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_file(kind: ExperimentKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(kind, &text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("key `{key}`: invalid {what} `{value}`"));
        match key {
            "kind" => {
                let k = ExperimentKind::parse(value)?;
                if k != self.kind {
                    return Err(Error::Config(format!(
                        "config kind `{value}` does not match subcommand `{}`",
                        self.kind.as_str()
                    )));
                }
            }
            "n" => self.n_sites = value.parse().map_err(|_| bad("integer"))?,
            "l" => self.l_sites = value.parse().map_err(|_| bad("integer"))?,
            "k" => self.k = value.parse().map_err(|_| bad("integer"))?,
            "f" => self.f = value.parse().map_err(|_| bad("number"))?,
            "nbar" => self.nbar = parse_list(value).map_err(|_| bad("number list"))?,
            "filling" => {
                self.filling = match value {
                    "up" => FillingConvention::UpFraction,
                    "down" => FillingConvention::DownFraction,
                    _ => return Err(bad("filling (up|down)")),
                }
            }
            "t_max" => self.t_max = value.parse().map_err(|_| bad("integer"))?,
            "samples" => self.samples = value.parse().map_err(|_| bad("integer"))?,
            "profile_times" => {
                self.profile_times = parse_list_usize(value).map_err(|_| bad("integer list"))?
            }
            "front" => {
                self.front = match value {
                    "threshold" => FrontKind::Threshold,
                    "collapse" => FrontKind::Collapse,
                    _ => return Err(bad("front (threshold|collapse)")),
                }
            }
            "theta" => self.theta = value.parse().map_err(|_| bad("number"))?,
            "exact_n" => self.exact_n = value.parse().map_err(|_| bad("integer"))?,
            "exact_cap" => self.exact_cap = value.parse().map_err(|_| bad("integer"))?,
            "n_hamiltonians" => {
                self.n_hamiltonians = value.parse().map_err(|_| bad("integer"))?
            }
            "s_row" => self.s_row = value.parse().map_err(|_| bad("integer"))?,
            "s_col" => self.s_col = value.parse().map_err(|_| bad("integer"))?,
            "mu" => self.mu = parse_list(value).map_err(|_| bad("number list"))?,
            "exact_times" => {
                self.exact_times = parse_list(value).map_err(|_| bad("number list"))?
            }
            "variant" => {
                self.variant = match value {
                    "regular" => Variant::Regular,
                    "brownian" => Variant::Brownian,
                    _ => return Err(bad("variant (regular|brownian)")),
                }
            }
            "q" => self.q = value.parse().map_err(|_| bad("integer"))?,
            "j" => self.j = value.parse().map_err(|_| bad("number"))?,
            "b" => self.b = value.parse().map_err(|_| bad("number"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 3 || self.k % 2 == 0 {
            return Err(Error::Config(format!("k must be odd and >= 3, got {}", self.k)));
        }
        if self.q % 2 != 0 || self.q < 4 {
            return Err(Error::Config(format!(
                "q must be even and >= 4 (note q must be even), got {}",
                self.q
            )));
        }
        for &n in &self.nbar {
            if !(n > 0.0 && n < 1.0) {
                return Err(Error::Config(format!("nbar must lie in (0,1), got {n}")));
            }
        }
        if !(0.0..=1.0).contains(&self.f) {
            return Err(Error::Config(format!("f must lie in [0,1], got {}", self.f)));
        }
        if !(0.0..=0.5).contains(&self.b) {
            return Err(Error::Config(format!("b must lie in [0, 1/2], got {}", self.b)));
        }
        if self.j <= 0.0 {
            return Err(Error::Config(format!("j must be positive, got {}", self.j)));
        }
        if !(0.0..1.0).contains(&self.theta) || self.theta <= 0.0 {
            return Err(Error::Config(format!("theta must lie in (0,1), got {}", self.theta)));
        }
        if self.exact_cap > 8 {
            return Err(Error::ResourceCap(format!(
                "exact_cap {} exceeds the hard limit 8",
                self.exact_cap
            )));
        }
        if self.nbar.is_empty() {
            return Err(Error::Config("nbar list is empty".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        match self.kind {
            ExperimentKind::Butterfly => Geometry::Chain { l_sites: self.l_sites },
            _ => Geometry::AllToAll { n_sites: self.n_sites },
        }
    }

    /// Lossless serialization: `parse(kind, cfg.to_text())` reproduces `cfg`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind.as_str());
        let _ = writeln!(s, "n = {}", self.n_sites);
        let _ = writeln!(s, "l = {}", self.l_sites);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "f = {:e}", self.f);
        let _ = writeln!(s, "nbar = {}", join(&self.nbar));
        let _ = writeln!(
            s,
            "filling = {}",
            match self.filling {
                FillingConvention::UpFraction => "up",
                FillingConvention::DownFraction => "down",
            }
        );
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(
            s,
            "profile_times = {}",
            self.profile_times.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(
            s,
            "front = {}",
            match self.front {
                FrontKind::Threshold => "threshold",
                FrontKind::Collapse => "collapse",
            }
        );
        let _ = writeln!(s, "theta = {:e}", self.theta);
        let _ = writeln!(s, "exact_n = {}", self.exact_n);
        let _ = writeln!(s, "exact_cap = {}", self.exact_cap);
        let _ = writeln!(s, "n_hamiltonians = {}", self.n_hamiltonians);
        let _ = writeln!(s, "s_row = {}", self.s_row);
        let _ = writeln!(s, "s_col = {}", self.s_col);
        let _ = writeln!(s, "mu = {}", join(&self.mu));
        let _ = writeln!(s, "exact_times = {}", join(&self.exact_times));
        let _ = writeln!(
            s,
            "variant = {}",
            match self.variant {
                Variant::Regular => "regular",
                Variant::Brownian => "brownian",
            }
        );
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "j = {:e}", self.j);
        let _ = writeln!(s, "b = {:e}", self.b);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

fn join(vals: &[f64]) -> String {
    vals.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',').map(|p| p.trim().parse()).collect()
}

fn parse_list_usize(s: &str) -> std::result::Result<Vec<usize>, std::num::ParseIntError> {
    s.split(',').map(|p| p.trim().parse()).collect()
}
