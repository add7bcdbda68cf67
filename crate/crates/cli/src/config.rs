//! Flat INI-style run configuration: `[section]` headers over `key = value`
//! lines, `#` or `;` comments, every key optional with defaults matching
//! the reference setup (carrier 2 pi, width 0.5, unit mass and action).

use std::fmt;

use superband::synthesis::SynthesisParams;

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub times: Vec<f64>,
    pub floor: f64,
    pub dt: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    /// Optional override of the two flux planes; `None` places them at the
    /// t = 3 sub/super extremum positions.
    pub flux_planes: Option<(f64, f64)>,
    /// Flux time window.
    pub flux_window: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub state: SynthesisParams,
    pub run: RunConfig,
    pub output: OutputConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig {
                x_min: -512.0,
                x_max: 512.0,
                n_points: 1 << 18,
            },
            state: SynthesisParams::default(),
            run: RunConfig {
                times: vec![1.0, 2.0, 3.0, 4.0],
                floor: 1e-7,
                dt: 0.01,
                seed: 7,
                n_trajectories: 40,
                flux_planes: None,
                flux_window: (2.8, 3.2),
            },
            output: OutputConfig {
                directory: "out".into(),
                format: OutputFormat::Both,
            },
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}': '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}': '{value}' is not a count")))
}

pub fn parse_times(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|tok| parse_f64(key, tok.trim()))
        .collect()
}

fn parse_pair(key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    let parts = parse_times(key, value)?;
    if parts.len() != 2 {
        return err(format!("key '{key}' needs exactly two comma-separated values"));
    }
    Ok((parts[0], parts[1]))
}

impl SimConfig {
    /// Parses the INI text over the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_lowercase();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected 'key = value'", lineno + 1));
            };
            let key = key.trim().to_lowercase();
            let value = value.trim();
            match (section.as_str(), key.as_str()) {
                ("grid", "x_min") => cfg.grid.x_min = parse_f64(&key, value)?,
                ("grid", "x_max") => cfg.grid.x_max = parse_f64(&key, value)?,
                ("grid", "n_points") => cfg.grid.n_points = parse_usize(&key, value)?,
                ("state", "kappa0") => cfg.state.kappa0 = parse_f64(&key, value)?,
                ("state", "delta_kappa") => cfg.state.delta_kappa = parse_f64(&key, value)?,
                ("state", "alpha") => cfg.state.alpha = parse_f64(&key, value)?,
                ("state", "mass") => cfg.state.mass = parse_f64(&key, value)?,
                ("state", "hbar") => cfg.state.hbar = parse_f64(&key, value)?,
                ("state", "gamma") => cfg.state.gamma = Some(parse_f64(&key, value)?),
                ("run", "times") => cfg.run.times = parse_times(&key, value)?,
                ("run", "floor") => cfg.run.floor = parse_f64(&key, value)?,
                ("run", "dt") => cfg.run.dt = parse_f64(&key, value)?,
                ("run", "seed") => {
                    cfg.run.seed = value
                        .parse()
                        .map_err(|_| ConfigError(format!("key 'seed': '{value}' is not an integer")))?
                }
                ("run", "n_trajectories") => cfg.run.n_trajectories = parse_usize(&key, value)?,
                ("run", "flux_planes") => cfg.run.flux_planes = Some(parse_pair(&key, value)?),
                ("run", "flux_window") => cfg.run.flux_window = parse_pair(&key, value)?,
                ("output", "directory") => cfg.output.directory = value.to_string(),
                ("output", "formats") | ("output", "format") => {
                    cfg.output.format = match value.to_lowercase().as_str() {
                        "csv" => OutputFormat::Csv,
                        "json" => OutputFormat::Json,
                        "both" => OutputFormat::Both,
                        other => return err(format!("unknown output format '{other}'")),
                    }
                }
                _ => return err(format!("unknown key '[{section}] {key}'")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-validates everything the modules would reject, so bad configs
    /// fail before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.grid.x_max > self.grid.x_min) {
            return err("grid: x_max must exceed x_min");
        }
        if self.grid.n_points < 2 || !self.grid.n_points.is_power_of_two() {
            return err("grid: n_points must be a power of two (>= 2)");
        }
        self.state
            .validate()
            .map_err(|e| ConfigError(format!("state: {e}")))?;
        let dx = (self.grid.x_max - self.grid.x_min) / self.grid.n_points as f64;
        let nyquist = std::f64::consts::PI / dx;
        let required = 8.0 * (self.state.kappa0 + 4.0 * self.state.delta_kappa);
        if nyquist < required {
            return err(format!(
                "grid: Nyquist wavenumber {nyquist:.2} below the required headroom {required:.2}"
            ));
        }
        if !(self.run.floor > 0.0 && self.run.floor <= 1e-3) {
            return err("run: floor must lie in (0, 1e-3]");
        }
        if !(self.run.dt > 0.0 && self.run.dt <= 1e-2) {
            return err("run: dt must lie in (0, 1e-2]");
        }
        if self.run.times.iter().any(|t| !t.is_finite() || t.abs() > 50.0) {
            return err("run: times must be finite and within [-50, 50]");
        }
        if self.run.n_trajectories == 0 {
            return err("run: n_trajectories must be positive");
        }
        if let Some((l, r)) = self.run.flux_planes {
            if !(l < r) {
                return err("run: flux_planes must be ordered left < right");
            }
        }
        if !(self.run.flux_window.0 <= self.run.flux_window.1) {
            return err("run: flux_window must be ordered");
        }
        Ok(())
    }

    /// Canonical key = value echo; identical configurations always render
    /// to identical text (this string is what gets hashed).
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        s.push_str("[grid]\n");
        s.push_str(&format!("x_min = {:e}\n", self.grid.x_min));
        s.push_str(&format!("x_max = {:e}\n", self.grid.x_max));
        s.push_str(&format!("n_points = {}\n", self.grid.n_points));
        s.push_str("[state]\n");
        s.push_str(&format!("kappa0 = {:e}\n", self.state.kappa0));
        s.push_str(&format!("delta_kappa = {:e}\n", self.state.delta_kappa));
        s.push_str(&format!("alpha = {:e}\n", self.state.alpha));
        s.push_str(&format!("mass = {:e}\n", self.state.mass));
        s.push_str(&format!("hbar = {:e}\n", self.state.hbar));
        if let Some(g) = self.state.gamma {
            s.push_str(&format!("gamma = {g:e}\n"));
        }
        s.push_str("[run]\n");
        let times: Vec<String> = self.run.times.iter().map(|t| format!("{t:e}")).collect();
        s.push_str(&format!("times = {}\n", times.join(",")));
        s.push_str(&format!("floor = {:e}\n", self.run.floor));
        s.push_str(&format!("dt = {:e}\n", self.run.dt));
        s.push_str(&format!("seed = {}\n", self.run.seed));
        s.push_str(&format!("n_trajectories = {}\n", self.run.n_trajectories));
        if let Some((l, r)) = self.run.flux_planes {
            s.push_str(&format!("flux_planes = {l:e},{r:e}\n"));
        }
        s.push_str(&format!(
            "flux_window = {:e},{:e}\n",
            self.run.flux_window.0, self.run.flux_window.1
        ));
        s
    }
}
