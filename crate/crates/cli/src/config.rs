//! Flag and config-file resolution.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use lmg_core::dynamics::Frame;
use lmg_core::landscape::AxisParam;
use lmg_core::{IntegratorSettings, ModelParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Quasienergies,
    PhaseDiagram,
    Landscape,
    Minima,
    Evolve,
    Stability,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Quasienergies => "quasienergies",
            Command::PhaseDiagram => "phase-diagram",
            Command::Landscape => "landscape",
            Command::Minima => "minima",
            Command::Evolve => "evolve",
            Command::Stability => "stability",
        }
    }
}

/// Driven LMG simulator: quasienergies, landscapes, phase diagrams and
/// coherent-state dynamics as CSV or JSON.
#[derive(Debug, Parser)]
#[command(name = "lmg", version)]
pub struct Cli {
    pub command: Command,

    /// Flat key=value file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Number of particles N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gx0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gx1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gy: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Resonance index of the rotating frame.
    #[arg(long)]
    pub m: Option<u32>,
    /// Landscape grid points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// name:lo:hi:steps, with name one of h, gx0, gx1, gy, omega. Up to two.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Vec<String>,
    /// Initial coherent state polar angle.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Start at the k-th lowest landscape minimum (0 = global).
    #[arg(long)]
    pub minimum: Option<usize>,
    #[arg(long)]
    pub periods: Option<usize>,
    /// Samples per drive period for lab, rotating and effective frames.
    #[arg(long)]
    pub samples: Option<usize>,
    /// lab | rotating | stroboscopic | effective
    #[arg(long)]
    pub frame: Option<String>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    H,
    Gamma0x,
    Gamma1x,
    Gammay,
    Omega,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::H => "h",
            SweepParam::Gamma0x => "gx0",
            SweepParam::Gamma1x => "gx1",
            SweepParam::Gammay => "gy",
            SweepParam::Omega => "omega",
        }
    }

    pub fn apply(&self, params: &mut ModelParams, value: f64) {
        match self {
            SweepParam::H => params.h = value,
            SweepParam::Gamma0x => params.gamma0x = value,
            SweepParam::Gamma1x => params.gamma1x = value,
            SweepParam::Gammay => params.gammay = value,
            SweepParam::Omega => params.omega = value,
        }
    }

    pub fn axis(&self) -> Result<AxisParam, CliError> {
        match self {
            SweepParam::Gamma0x => Ok(AxisParam::Gamma0x),
            SweepParam::Gamma1x => Ok(AxisParam::Gamma1x),
            SweepParam::Gammay => Ok(AxisParam::Gammay),
            other => Err(CliError::Usage(format!(
                "phase-diagram axes must be gx0, gx1 or gy, got {}",
                other.name()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Sweep {
    /// `steps` evenly spaced values from `lo` to `hi` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Usage(format!("bad sweep {s:?}: {why} (expected name:lo:hi:steps)"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(bad("need four fields"));
        }
        let param = match parts[0] {
            "h" => SweepParam::H,
            "gx0" => SweepParam::Gamma0x,
            "gx1" => SweepParam::Gamma1x,
            "gy" => SweepParam::Gammay,
            "omega" => SweepParam::Omega,
            _ => return Err(bad("unknown parameter")),
        };
        let lo: f64 = parts[1].parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = parts[2].parse().map_err(|_| bad("hi is not a number"))?;
        let steps: usize = parts[3].parse().map_err(|_| bad("steps is not a count"))?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if steps == 0 {
            return Err(bad("steps must be at least 1"));
        }
        Ok(Sweep { param, lo, hi, steps })
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}:{:?}:{}", self.param.name(), self.lo, self.hi, self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    Angles { theta: f64, phi: f64 },
    Minimum(usize),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub grid: usize,
    pub sweeps: Vec<Sweep>,
    pub initial: Option<Initial>,
    pub periods: usize,
    pub samples: usize,
    pub frame: Frame,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub settings: IntegratorSettings,
}

const KEYS: [&str; 20] = [
    "n", "h", "gx0", "gx1", "gy", "omega", "m", "grid", "sweep", "theta", "phi", "minimum", "periods",
    "samples", "frame", "format", "out", "workers", "rtol", "atol",
];

/// Parse a flat `key = value` file. `#` starts a comment line; `sweep` may
/// repeat.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::Usage(format!("config line {}: unknown key {k:?}", lineno + 1)));
        }
        let entry = map.entry(k.to_string()).or_default();
        if k != "sweep" && !entry.is_empty() {
            return Err(CliError::Usage(format!("config line {}: duplicate key {k:?}", lineno + 1)));
        }
        entry.push(v.to_string());
    }
    Ok(map)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {raw:?} for {key}")))
}

struct Layered<'a> {
    file: &'a BTreeMap<String, Vec<String>>,
}

impl Layered<'_> {
    fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => parse_value(key, &v[0]).map(Some),
            None => Ok(None),
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
        let file = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let l = Layered { file: &file };
        let base = ModelParams::default();
        let params = ModelParams {
            h: l.get("h", cli.h)?.unwrap_or(base.h),
            gamma0x: l.get("gx0", cli.gx0)?.unwrap_or(base.gamma0x),
            gamma1x: l.get("gx1", cli.gx1)?.unwrap_or(base.gamma1x),
            gammay: l.get("gy", cli.gy)?.unwrap_or(base.gammay),
            omega: l.get("omega", cli.omega)?.unwrap_or(base.omega),
            m: l.get("m", cli.m)?.unwrap_or(base.m),
            n_particles: l.get("n", cli.n)?.unwrap_or(base.n_particles),
        };
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;

        let sweep_src: Vec<String> = if cli.sweep.is_empty() {
            file.get("sweep").cloned().unwrap_or_default()
        } else {
            cli.sweep.clone()
        };
        let sweeps = sweep_src
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Sweep>, _>>()?;
        if sweeps.len() > 2 {
            return Err(CliError::Usage("at most two --sweep axes".into()));
        }

        let theta: Option<f64> = l.get("theta", cli.theta)?;
        let phi: Option<f64> = l.get("phi", cli.phi)?;
        let minimum: Option<usize> = l.get("minimum", cli.minimum)?;
        let initial = match (theta, phi, minimum) {
            (None, None, None) => None,
            (Some(theta), phi, None) => Some(Initial::Angles {
                theta,
                phi: phi.unwrap_or(0.0),
            }),
            (None, None, Some(k)) => Some(Initial::Minimum(k)),
            (None, Some(_), None) => return Err(CliError::Usage("--phi needs --theta".into())),
            _ => return Err(CliError::Usage("give either --theta/--phi or --minimum, not both".into())),
        };

        let frame_name: Option<String> = l.get("frame", cli.frame.clone())?;
        let frame = match frame_name {
            Some(f) => Frame::parse(&f).map_err(|e| CliError::Usage(e.to_string()))?,
            None => Frame::Lab,
        };
        let format: Format = match l.get::<String>("format", cli.format.clone())? {
            Some(f) => f.parse()?,
            None => Format::Csv,
        };
        let workers = l.get("workers", cli.workers)?.unwrap_or_else(default_workers);
        if workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        let defaults = IntegratorSettings::default();
        let settings = IntegratorSettings {
            rtol: l.get("rtol", cli.rtol)?.unwrap_or(defaults.rtol),
            atol: l.get("atol", cli.atol)?.unwrap_or(defaults.atol),
            ..defaults
        };
        settings.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let periods = l.get("periods", cli.periods)?.unwrap_or(10);
        let samples = l.get("samples", cli.samples)?.unwrap_or(16);
        if samples == 0 {
            return Err(CliError::Usage("samples must be at least 1".into()));
        }
        let out: Option<PathBuf> = match cli.out {
            Some(p) => Some(p),
            None => file.get("out").map(|v| PathBuf::from(&v[0])),
        };

        Ok(RunConfig {
            command: cli.command,
            params,
            grid: l.get("grid", cli.grid)?.unwrap_or(201),
            sweeps,
            initial,
            periods,
            samples,
            frame,
            format,
            out,
            workers,
            settings,
        })
    }

    /// `(key, value)` pairs for the output header, in a fixed order.
    /// Worker count and output path are left out so that they do not change
    /// the bytes of the result.
    pub fn header_entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let mut v = vec![
            ("n", p.n_particles.to_string()),
            ("h", format!("{:?}", p.h)),
            ("gx0", format!("{:?}", p.gamma0x)),
            ("gx1", format!("{:?}", p.gamma1x)),
            ("gy", format!("{:?}", p.gammay)),
            ("omega", format!("{:?}", p.omega)),
            ("m", p.m.to_string()),
            ("grid", self.grid.to_string()),
        ];
        for s in &self.sweeps {
            v.push(("sweep", s.to_string()));
        }
        match self.initial {
            Some(Initial::Angles { theta, phi }) => {
                v.push(("theta", format!("{theta:?}")));
                v.push(("phi", format!("{phi:?}")));
            }
            Some(Initial::Minimum(k)) => v.push(("minimum", k.to_string())),
            None => {}
        }
        v.extend([
            ("periods", self.periods.to_string()),
            ("samples", self.samples.to_string()),
            ("frame", self.frame.as_str().to_string()),
            ("format", self.format.to_string()),
            ("rtol", format!("{:?}", self.settings.rtol)),
            ("atol", format!("{:?}", self.settings.atol)),
        ]);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("lmg").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "gx1:0:300:4".parse().unwrap();
        assert_eq!(s.param, SweepParam::Gamma1x);
        assert_eq!(s.values(), vec![0.0, 100.0, 200.0, 300.0]);
        let single: Sweep = "omega:30:30:1".parse().unwrap();
        assert_eq!(single.values(), vec![30.0]);
        assert!("gx1:0:300".parse::<Sweep>().is_err());
        assert!("zz:0:1:2".parse::<Sweep>().is_err());
        assert!("gy:0:1:0".parse::<Sweep>().is_err());
        assert!("gy:0:inf:3".parse::<Sweep>().is_err());
    }

    #[test]
    fn omega_grid_has_46_points() {
        let s: Sweep = "omega:30:120:46".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 46);
        assert_eq!(v[1], 32.0);
        assert_eq!(v[45], 120.0);
    }

    #[test]
    fn config_file_parsing() {
        let map = parse_config_file("# comment\nn = 12\n gy=2\nsweep = gy:0:3:4\nsweep=gx1:0:300:3\n").unwrap();
        assert_eq!(map["n"], vec!["12"]);
        assert_eq!(map["gy"], vec!["2"]);
        assert_eq!(map["sweep"].len(), 2);
        assert!(parse_config_file("bogus = 1").is_err());
        assert!(parse_config_file("n 12").is_err());
        assert!(parse_config_file("n = 1\nn = 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "n = 12\ngy = 2\nformat = json\n").unwrap();
        let c = cli(&["minima", "--config", path.to_str().unwrap(), "--gy", "1.5", "--h=-2"]);
        let cfg = RunConfig::resolve(c).unwrap();
        assert_eq!(cfg.params.n_particles, 12);
        assert_eq!(cfg.params.gammay, 1.5);
        assert_eq!(cfg.params.h, -2.0);
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn negative_values_parse_as_values() {
        let cfg = RunConfig::resolve(cli(&["landscape", "--gx0", "-1", "--sweep", "gx0:-1:1:3"])).unwrap();
        assert_eq!(cfg.params.gamma0x, -1.0);
        assert_eq!(cfg.sweeps[0].lo, -1.0);
    }

    #[test]
    fn conflicting_initial_state_is_a_usage_error() {
        let c = cli(&["evolve", "--theta", "1", "--minimum", "0"]);
        assert!(matches!(RunConfig::resolve(c), Err(CliError::Usage(_))));
        let c = cli(&["evolve", "--phi", "1"]);
        assert!(matches!(RunConfig::resolve(c), Err(CliError::Usage(_))));
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for args in [
            &["minima", "--workers", "0"][..],
            &["minima", "--format", "xml"][..],
            &["minima", "--frame", "sideways"][..],
            &["minima", "--omega", "0"][..],
            &["minima", "--rtol", "0"][..],
            &["minima", "--sweep", "gy:0:1:2", "--sweep", "gx0:0:1:2", "--sweep", "gx1:0:1:2"][..],
        ] {
            assert!(matches!(RunConfig::resolve(cli(args)), Err(CliError::Usage(_))), "{args:?}");
        }
    }

    #[test]
    fn header_is_independent_of_workers_and_destination() {
        let a = RunConfig::resolve(cli(&["minima", "--workers", "1"])).unwrap();
        let b = RunConfig::resolve(cli(&["minima", "--workers", "3", "--out", "x.csv"])).unwrap();
        assert_eq!(a.header_entries(), b.header_entries());
    }
}
