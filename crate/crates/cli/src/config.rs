//! Run configuration: defaults, an optional `key = value` file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};

use quasient::analysis::{Sweep, CLASSIFY_THRESHOLD};
use quasient::ed::LanczosOptions;
use quasient::model::{Boundary, ModelKind, DEFAULT_MAX_SITES};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Single-quasiparticle excess entropy of the open XY chain.
    #[command(allow_negative_numbers = true)]
    XyScan,
    /// Three-quasiparticle sweep with two fixed modes.
    #[command(allow_negative_numbers = true)]
    ThreeScan,
    /// Labelled excess entropies of the lowest ED eigenstates.
    #[command(allow_negative_numbers = true)]
    EdExcess,
    /// Free-fermion entropies checked against ED, state by state.
    #[command(allow_negative_numbers = true)]
    EdCompare,
    /// Random uniform MPS draws checked against the log 2 identity.
    #[command(allow_negative_numbers = true)]
    MpsCheck,
    /// Power-law fit of the log 2 deficit of one mode across sizes.
    #[command(allow_negative_numbers = true)]
    Scaling,
    /// Ground-state correlation length.
    #[command(allow_negative_numbers = true)]
    Xi,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::XyScan => "xy-scan",
            Command::ThreeScan => "three-scan",
            Command::EdExcess => "ed-excess",
            Command::EdCompare => "ed-compare",
            Command::MpsCheck => "mps-check",
            Command::Scaling => "scaling",
            Command::Xi => "xi",
        }
    }

    fn uses_ed(self) -> bool {
        matches!(self, Command::EdExcess | Command::EdCompare)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One entry of a mode selector, resolved per chain length.
#[derive(Clone, Debug, PartialEq)]
pub enum ModeItem {
    All,
    /// The quasiparticle vacuum.
    Ground,
    Index(usize),
    /// `n/2 + offset`.
    Middle(i64),
    /// Mode with the nearest momentum label.
    Momentum(f64),
}

impl ModeItem {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "all" => return Ok(ModeItem::All),
            "ground" => return Ok(ModeItem::Ground),
            "mid" => return Ok(ModeItem::Middle(0)),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("mid") {
            let offset = rest.strip_prefix('+').unwrap_or(rest);
            return offset.parse().map(ModeItem::Middle).map_err(|_| format!("bad middle offset in '{s}'"));
        }
        if let Some(q) = s.strip_prefix("momentum:") {
            let q: f64 = q.parse().map_err(|_| format!("bad momentum in '{s}'"))?;
            if !q.is_finite() {
                return Err(format!("momentum must be finite, got '{s}'"));
            }
            return Ok(ModeItem::Momentum(q));
        }
        s.parse()
            .map(ModeItem::Index)
            .map_err(|_| format!("mode '{s}' is not all, ground, mid[+-k], momentum:<q> or an index"))
    }

    fn render(&self) -> String {
        match self {
            ModeItem::All => "all".into(),
            ModeItem::Ground => "ground".into(),
            ModeItem::Index(k) => k.to_string(),
            ModeItem::Middle(0) => "mid".into(),
            ModeItem::Middle(o) if *o > 0 => format!("mid+{o}"),
            ModeItem::Middle(o) => format!("mid{o}"),
            ModeItem::Momentum(q) => format!("momentum:{}", real_text(*q)),
        }
    }
}

/// A fully resolved and validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    pub boundary: Boundary,
    pub sizes: Vec<usize>,
    pub modes: Vec<ModeItem>,
    pub sweep: Sweep,
    /// ED states per size.
    pub states: usize,
    pub bond_dim: usize,
    pub draws: usize,
    /// Momentum of the MPS excitation ansatz.
    pub kappa: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub threshold: f64,
    /// Pass bound for `ed-compare` and `mps-check`.
    pub tolerance: f64,
    pub lanczos_tol: f64,
    pub max_sites: usize,
}

/// Every key accepted in a config file or as a flag.
pub const KEYS: &[&str] = &[
    "model",
    "gamma",
    "h",
    "coupling",
    "hz",
    "hx",
    "boundary",
    "sizes",
    "n",
    "modes",
    "sweep",
    "states",
    "bond-dim",
    "draws",
    "kappa",
    "output",
    "format",
    "seed",
    "threshold",
    "tolerance",
    "lanczos-tol",
    "max-sites",
];

fn canonical_key(key: &str) -> Result<&'static str, String> {
    let k = key.trim().replace('_', "-");
    let k = if k == "n" { "sizes".to_string() } else { k };
    KEYS.iter()
        .copied()
        .find(|&known| known == k)
        .ok_or_else(|| format!("unknown key '{}'", key.trim()))
}

fn defaults(command: Command) -> Vec<(&'static str, String)> {
    let (gamma, h, sizes, modes) = match command {
        Command::XyScan => ("0.5", "0.9", "128,256,512", "all"),
        Command::Scaling => ("0.5", "0.9", "128,256,512,1024", "1"),
        Command::ThreeScan | Command::Xi => ("1", "2", "256", "all"),
        Command::EdExcess | Command::EdCompare => ("1", "2", "10", "all"),
        Command::MpsCheck => ("0.5", "0.9", "128", "all"),
    };
    let tolerance = if command == Command::MpsCheck { 1e-8 } else { 1e-9 };
    vec![
        ("model", "xy".into()),
        ("gamma", gamma.into()),
        ("h", h.into()),
        ("coupling", "1".into()),
        ("hz", "1".into()),
        ("hx", "1".into()),
        ("boundary", "open".into()),
        ("sizes", sizes.into()),
        ("modes", modes.into()),
        ("sweep", "all".into()),
        ("states", "8".into()),
        ("bond-dim", "4".into()),
        ("draws", "20".into()),
        ("kappa", "0".into()),
        ("format", "csv".into()),
        ("seed", "7".into()),
        ("threshold", CLASSIFY_THRESHOLD.to_string()),
        ("tolerance", real_text(tolerance)),
        ("lanczos-tol", real_text(LanczosOptions::default().tol)),
        ("max-sites", DEFAULT_MAX_SITES.to_string()),
    ]
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let key = canonical_key(key).map_err(|e| CliError::Config(format!("config line {}: {e}", i + 1)))?;
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

struct Values(Vec<(&'static str, String)>);

impl Values {
    fn set(&mut self, key: &str, value: String) -> Result<(), CliError> {
        let key = canonical_key(key).map_err(CliError::Config)?;
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key, value)),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    fn req(&self, key: &str) -> &str {
        self.get(key).expect("every key has a default")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.req(key);
        v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
    }

    fn real(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.parse(key)?;
        if !x.is_finite() {
            return Err(CliError::Config(format!("{key} must be finite")));
        }
        Ok(x)
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.real(key)?;
        if x <= 0.0 {
            return Err(CliError::Config(format!("{key} must be positive, got {x}")));
        }
        Ok(x)
    }
}

/// Shortest text that parses back to `x`, in exponent form when small or large.
fn real_text(x: f64) -> String {
    if x != 0.0 && !(1e-3..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

impl RunConfig {
    /// Defaults, then `file`, then `flags`; later layers win.
    pub fn resolve(command: Command, file: Option<&Path>, flags: &[(String, String)]) -> Result<Self, CliError> {
        let mut values = Values(defaults(command));
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                values.set(&k, v)?;
            }
        }
        for (k, v) in flags {
            values.set(k, v.clone())?;
        }
        Self::from_values(command, &values)
    }

    fn from_values(command: Command, v: &Values) -> Result<Self, CliError> {
        let model = match v.req("model").replace('_', "-").as_str() {
            "xy" => ModelKind::Xy {
                gamma: v.real("gamma")?,
                h: v.real("h")?,
            },
            "tilted-ising" => ModelKind::TiltedIsing {
                coupling: v.real("coupling")?,
                hz: v.real("hz")?,
                hx: v.real("hx")?,
            },
            other => return Err(CliError::Config(format!("model must be xy or tilted-ising, got '{other}'"))),
        };
        let boundary = match v.req("boundary") {
            "open" => Boundary::Open,
            "periodic" => Boundary::Periodic,
            other => return Err(CliError::Config(format!("boundary must be open or periodic, got '{other}'"))),
        };

        let sizes = list(v.req("sizes"))
            .map(|s| s.parse::<usize>().map_err(|_| CliError::Config(format!("sizes: cannot parse '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        if sizes.is_empty() {
            return Err(CliError::Config("sizes: need at least one chain length".into()));
        }
        if let Some(&n) = sizes.iter().find(|&&n| n < 4 || n % 2 != 0) {
            return Err(CliError::Config(format!("sizes: half-chain cuts need even n >= 4, got {n}")));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("sizes must be strictly increasing".into()));
        }

        let modes = match v.req("modes").trim() {
            "none" | "" => Vec::new(),
            s => list(s).map(ModeItem::parse).collect::<Result<_, _>>().map_err(CliError::Config)?,
        };
        let sweep = match v.req("sweep").trim() {
            "all" => Sweep::All,
            s => Sweep::Indices(
                list(s)
                    .map(|x| x.parse().map_err(|_| CliError::Config(format!("sweep: cannot parse '{x}'"))))
                    .collect::<Result<_, _>>()?,
            ),
        };

        let format = match v.req("format") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(CliError::Config(format!("format must be csv or json, got '{other}'"))),
        };
        let threshold = v.positive("threshold")?;
        if threshold > 0.5 {
            return Err(CliError::Config(format!("threshold must lie in (0, 0.5], got {threshold}")));
        }

        let cfg = RunConfig {
            command,
            model,
            boundary,
            sizes,
            modes,
            sweep,
            states: v.parse("states")?,
            bond_dim: v.parse("bond-dim")?,
            draws: v.parse("draws")?,
            kappa: v.real("kappa")?,
            output: v.get("output").filter(|s| !s.is_empty() && *s != "-").map(PathBuf::from),
            format,
            seed: v.parse("seed")?,
            threshold,
            tolerance: v.positive("tolerance")?,
            lanczos_tol: v.positive("lanczos-tol")?,
            max_sites: v.parse("max-sites")?,
        };
        if cfg.states == 0 || cfg.bond_dim == 0 || cfg.draws == 0 {
            return Err(CliError::Config("states, bond-dim and draws must be at least 1".into()));
        }
        if command.uses_ed() {
            if let Some(&n) = cfg.sizes.iter().find(|&&n| n > cfg.max_sites) {
                return Err(CliError::SizeCap(format!("{n} sites exceeds the cap of {}", cfg.max_sites)));
            }
        }
        Ok(cfg)
    }

    /// Every setting that affects the output, in flag form.
    pub fn canonical(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match self.model {
            ModelKind::Xy { gamma, h } => {
                out.push(("model", "xy".to_string()));
                out.push(("gamma", real_text(gamma)));
                out.push(("h", real_text(h)));
            }
            ModelKind::TiltedIsing { coupling, hz, hx } => {
                out.push(("model", "tilted-ising".to_string()));
                out.push(("coupling", real_text(coupling)));
                out.push(("hz", real_text(hz)));
                out.push(("hx", real_text(hx)));
            }
        }
        let join = |v: Vec<String>| v.join(",");
        out.push(("boundary", self.boundary.as_str().to_string()));
        out.push(("sizes", join(self.sizes.iter().map(|n| n.to_string()).collect())));
        let modes = if self.modes.is_empty() {
            "none".to_string()
        } else {
            join(self.modes.iter().map(ModeItem::render).collect())
        };
        out.push(("modes", modes));
        let sweep = match &self.sweep {
            Sweep::All => "all".to_string(),
            Sweep::Indices(v) => join(v.iter().map(|i| i.to_string()).collect()),
        };
        out.push(("sweep", sweep));
        out.push(("states", self.states.to_string()));
        out.push(("bond-dim", self.bond_dim.to_string()));
        out.push(("draws", self.draws.to_string()));
        out.push(("kappa", real_text(self.kappa)));
        out.push(("format", self.format.as_str().to_string()));
        out.push(("seed", self.seed.to_string()));
        out.push(("threshold", real_text(self.threshold)));
        out.push(("tolerance", real_text(self.tolerance)));
        out.push(("lanczos-tol", real_text(self.lanczos_tol)));
        out.push(("max-sites", self.max_sites.to_string()));
        out
    }

    /// Command line that repeats this run, writing to standard output.
    pub fn rerun_line(&self) -> String {
        let mut s = format!("quasient {}", self.command);
        for (k, v) in self.canonical() {
            s.push_str(&format!(" --{k} {v}"));
        }
        s
    }
}
