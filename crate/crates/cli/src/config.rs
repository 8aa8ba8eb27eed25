//! Run configuration: a flat, sectioned key-value text file.
//!
//! Sections hold scalar keys (`key = value`) or repeated mode entries.
//! Scalar fields are lists of `mode = k1 k2 cos_amp sin_amp`; vector fields
//! are lists of `mode = k1 k2 cos1 sin1 cos2 sin2` (per-component
//! amplitudes of `cos(k·x)` and `sin(k·x)`). Unknown sections or keys are
//! errors, never warnings; every message carries the offending line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use ecnv_core::dynamics::SimParams;
use ecnv_core::field::TrigMode;
use ecnv_core::forcing::ForcingBank;
use ecnv_core::measure::Observable;
use ecnv_core::{Grid64, SimState64, SpectralScalar64, SpectralVector64};

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn cfg_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config(format!("line {line}: {}", msg.into()))
}

/// One scalar-field trigonometric mode from the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarModeSpec {
    pub k1: i32,
    pub k2: i32,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// One vector-field mode; amplitudes per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorModeSpec {
    pub k1: i32,
    pub k2: i32,
    pub cos_amp: [f64; 2],
    pub sin_amp: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    HClipped { clip: f64 },
    ModeRe { k1: i32, k2: i32 },
    ModeIm { k1: i32, k2: i32 },
    TanhMode { k1: i32, k2: i32 },
}

impl ObservableSpec {
    pub fn build(&self) -> Observable<f64> {
        match *self {
            ObservableSpec::HClipped { clip } => Observable::script_h_clipped(clip),
            ObservableSpec::ModeRe { k1, k2 } => Observable::mode_re(k1, k2),
            ObservableSpec::ModeIm { k1, k2 } => Observable::mode_im(k1, k2),
            ObservableSpec::TanhMode { k1, k2 } => Observable::tanh_mode(k1, k2),
        }
    }

    fn canonical(&self) -> String {
        match *self {
            ObservableSpec::HClipped { clip } => format!("h_clipped {clip}"),
            ObservableSpec::ModeRe { k1, k2 } => format!("mode_re {k1} {k2}"),
            ObservableSpec::ModeIm { k1, k2 } => format!("mode_im {k1} {k2}"),
            ObservableSpec::TanhMode { k1, k2 } => format!("tanh_mode {k1} {k2}"),
        }
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub alpha: f64,
    pub eps: f64,
    pub zero_potential: bool,
    pub linear: bool,
    pub dt: f64,
    pub t_end: f64,
    pub paths: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sample_every: u32,
    pub snapshot_every: u32,
    pub budget_l2_q: bool,
    pub budget_l4_q: bool,
    pub budget_h1_u: bool,
    pub burn_frac: f64,
    pub kernel_paths: usize,
    pub observables: Vec<ObservableSpec>,
    pub phi_modes: Vec<ScalarModeSpec>,
    pub f_modes: Vec<VectorModeSpec>,
    pub g_tilde_modes: Vec<Vec<ScalarModeSpec>>,
    pub g_modes: Vec<Vec<VectorModeSpec>>,
    pub initial_q: Vec<ScalarModeSpec>,
    pub initial_u: Vec<VectorModeSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 32,
            alpha: 1.0,
            eps: 0.0,
            zero_potential: false,
            linear: false,
            dt: 0.01,
            t_end: 1.0,
            paths: 1,
            seed: 0,
            out_dir: PathBuf::from("out"),
            sample_every: 1,
            snapshot_every: 0,
            budget_l2_q: true,
            budget_l4_q: true,
            budget_h1_u: true,
            burn_frac: 0.1,
            kernel_paths: 64,
            observables: vec![
                ObservableSpec::TanhMode { k1: 1, k2: 0 },
                ObservableSpec::HClipped { clip: 100.0 },
            ],
            phi_modes: Vec::new(),
            f_modes: Vec::new(),
            g_tilde_modes: Vec::new(),
            g_modes: Vec::new(),
            initial_q: Vec::new(),
            initial_u: Vec::new(),
        }
    }
}

struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

struct RawSection {
    name: String,
    line: usize,
    entries: Vec<RawEntry>,
}

fn tokenize_sections(text: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(cfg_err(line_no, "empty section name"));
            }
            sections.push(RawSection {
                name,
                line: line_no,
                entries: Vec::new(),
            });
        } else if let Some(eq) = line.find('=') {
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() {
                return Err(cfg_err(line_no, "missing key before '='"));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| cfg_err(line_no, "key outside any [section]"))?;
            section.entries.push(RawEntry {
                key,
                value,
                line: line_no,
            });
        } else {
            return Err(cfg_err(line_no, format!("cannot parse '{line}'")));
        }
    }
    Ok(sections)
}

/// Scalar-key extractor that tracks consumption and rejects duplicates.
struct KeyedSection<'a> {
    section: &'a RawSection,
    used: Vec<bool>,
}

impl<'a> KeyedSection<'a> {
    fn new(section: &'a RawSection) -> Self {
        Self {
            used: vec![false; section.entries.len()],
            section,
        }
    }

    fn take(&mut self, key: &str) -> Result<Option<(&'a str, usize)>> {
        let mut found: Option<(&'a str, usize)> = None;
        for (i, entry) in self.section.entries.iter().enumerate() {
            if entry.key == key {
                if found.is_some() {
                    return Err(cfg_err(entry.line, format!("duplicate key '{key}'")));
                }
                self.used[i] = true;
                found = Some((&entry.value, entry.line));
            }
        }
        Ok(found)
    }

    fn take_all(&mut self, key: &str) -> Vec<(&'a str, usize)> {
        let mut out = Vec::new();
        for (i, entry) in self.section.entries.iter().enumerate() {
            if entry.key == key {
                self.used[i] = true;
                out.push((entry.value.as_str(), entry.line));
            }
        }
        out
    }

    fn finish(self) -> Result<()> {
        for (i, entry) in self.section.entries.iter().enumerate() {
            if !self.used[i] {
                return Err(cfg_err(
                    entry.line,
                    format!(
                        "unknown key '{}' in section [{}]",
                        entry.key, self.section.name
                    ),
                ));
            }
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| cfg_err(line, format!("cannot parse '{value}' as {what}")))
}

fn parse_bool(value: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(line, format!("cannot parse '{value}' as boolean"))),
    }
}

fn parse_numbers(value: &str, line: usize, count: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != count {
        return Err(cfg_err(
            line,
            format!("expected {count} whitespace-separated numbers, got {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| parse_value::<f64>(p, line, "a number"))
        .collect()
}

fn parse_scalar_mode(value: &str, line: usize) -> Result<(ScalarModeSpec, usize)> {
    let v = parse_numbers(value, line, 4)?;
    let k1 = v[0] as i32;
    let k2 = v[1] as i32;
    if v[0].fract() != 0.0 || v[1].fract() != 0.0 {
        return Err(cfg_err(line, "wavenumbers must be integers"));
    }
    Ok((
        ScalarModeSpec {
            k1,
            k2,
            cos_amp: v[2],
            sin_amp: v[3],
        },
        line,
    ))
}

fn parse_vector_mode(value: &str, line: usize) -> Result<(VectorModeSpec, usize)> {
    let v = parse_numbers(value, line, 6)?;
    if v[0].fract() != 0.0 || v[1].fract() != 0.0 {
        return Err(cfg_err(line, "wavenumbers must be integers"));
    }
    Ok((
        VectorModeSpec {
            k1: v[0] as i32,
            k2: v[1] as i32,
            cos_amp: [v[2], v[4]],
            sin_amp: [v[3], v[5]],
        },
        line,
    ))
}

fn parse_observable(value: &str, line: usize) -> Result<ObservableSpec> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let arg = |i: usize| -> Result<&str> {
        parts
            .get(i)
            .copied()
            .ok_or_else(|| cfg_err(line, "missing observable argument"))
    };
    match *parts.first().ok_or_else(|| cfg_err(line, "empty observable"))? {
        "h_clipped" => Ok(ObservableSpec::HClipped {
            clip: parse_value(arg(1)?, line, "a number")?,
        }),
        "mode_re" => Ok(ObservableSpec::ModeRe {
            k1: parse_value(arg(1)?, line, "an integer")?,
            k2: parse_value(arg(2)?, line, "an integer")?,
        }),
        "mode_im" => Ok(ObservableSpec::ModeIm {
            k1: parse_value(arg(1)?, line, "an integer")?,
            k2: parse_value(arg(2)?, line, "an integer")?,
        }),
        "tanh_mode" => Ok(ObservableSpec::TanhMode {
            k1: parse_value(arg(1)?, line, "an integer")?,
            k2: parse_value(arg(2)?, line, "an integer")?,
        }),
        other => Err(cfg_err(
            line,
            format!("unknown observable kind '{other}' (h_clipped | mode_re | mode_im | tanh_mode)"),
        )),
    }
}

impl RunConfig {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let sections = tokenize_sections(text)?;
        let mut cfg = RunConfig::default();
        let mut have_observables = false;
        let mut noise_ids: Vec<(usize, usize)> = Vec::new(); // (id, section index)
        let mut seen: BTreeSet<String> = BTreeSet::new();

        let mut scalar_mode_lines: Vec<(ScalarModeSpec, usize)> = Vec::new();
        let mut vector_mode_lines: Vec<(VectorModeSpec, usize)> = Vec::new();

        for (si, section) in sections.iter().enumerate() {
            if !section.name.starts_with("noise.") && !seen.insert(section.name.clone()) {
                return Err(cfg_err(
                    section.line,
                    format!("duplicate section [{}]", section.name),
                ));
            }
            let mut keys = KeyedSection::new(section);
            match section.name.as_str() {
                "grid" => {
                    if let Some((v, l)) = keys.take("n")? {
                        cfg.n = parse_value(v, l, "an integer")?;
                    }
                }
                "physics" => {
                    if let Some((v, l)) = keys.take("alpha")? {
                        cfg.alpha = parse_value(v, l, "a number")?;
                    }
                    if let Some((v, l)) = keys.take("eps")? {
                        cfg.eps = parse_value(v, l, "a number")?;
                    }
                    if let Some((v, l)) = keys.take("zero_potential")? {
                        cfg.zero_potential = parse_bool(v, l)?;
                    }
                    if let Some((v, l)) = keys.take("linear")? {
                        cfg.linear = parse_bool(v, l)?;
                    }
                }
                "time" => {
                    if let Some((v, l)) = keys.take("dt")? {
                        cfg.dt = parse_value(v, l, "a number")?;
                    }
                    if let Some((v, l)) = keys.take("t_end")? {
                        cfg.t_end = parse_value(v, l, "a number")?;
                    }
                }
                "ensemble" => {
                    if let Some((v, l)) = keys.take("paths")? {
                        cfg.paths = parse_value(v, l, "an integer")?;
                    }
                }
                "rng" => {
                    if let Some((v, l)) = keys.take("seed")? {
                        cfg.seed = parse_value(v, l, "an unsigned integer")?;
                    }
                }
                "output" => {
                    if let Some((v, _)) = keys.take("dir")? {
                        cfg.out_dir = PathBuf::from(v);
                    }
                    if let Some((v, l)) = keys.take("sample_every")? {
                        cfg.sample_every = parse_value(v, l, "an integer")?;
                    }
                    if let Some((v, l)) = keys.take("snapshot_every")? {
                        cfg.snapshot_every = parse_value(v, l, "an integer")?;
                    }
                }
                "diagnostics" => {
                    if let Some((v, l)) = keys.take("l2_q")? {
                        cfg.budget_l2_q = parse_bool(v, l)?;
                    }
                    if let Some((v, l)) = keys.take("l4_q")? {
                        cfg.budget_l4_q = parse_bool(v, l)?;
                    }
                    if let Some((v, l)) = keys.take("h1_u")? {
                        cfg.budget_h1_u = parse_bool(v, l)?;
                    }
                }
                "measure" => {
                    if let Some((v, l)) = keys.take("burn_frac")? {
                        cfg.burn_frac = parse_value(v, l, "a number")?;
                    }
                    if let Some((v, l)) = keys.take("kernel_paths")? {
                        cfg.kernel_paths = parse_value(v, l, "an integer")?;
                    }
                    let obs = keys.take_all("observable");
                    if !obs.is_empty() {
                        have_observables = true;
                        cfg.observables.clear();
                        for (v, l) in obs {
                            cfg.observables.push(parse_observable(v, l)?);
                        }
                    }
                }
                "forcing.phi" => {
                    for (v, l) in keys.take_all("mode") {
                        scalar_mode_lines.push(parse_scalar_mode(v, l)?);
                        cfg.phi_modes.push(scalar_mode_lines.last().unwrap().0);
                    }
                }
                "forcing.f" => {
                    for (v, l) in keys.take_all("mode") {
                        vector_mode_lines.push(parse_vector_mode(v, l)?);
                        cfg.f_modes.push(vector_mode_lines.last().unwrap().0);
                    }
                }
                "initial" => {
                    for (v, l) in keys.take_all("q") {
                        scalar_mode_lines.push(parse_scalar_mode(v, l)?);
                        cfg.initial_q.push(scalar_mode_lines.last().unwrap().0);
                    }
                    for (v, l) in keys.take_all("u") {
                        vector_mode_lines.push(parse_vector_mode(v, l)?);
                        cfg.initial_u.push(vector_mode_lines.last().unwrap().0);
                    }
                }
                name if name.starts_with("noise.") => {
                    let id: usize = name["noise.".len()..]
                        .parse()
                        .map_err(|_| cfg_err(section.line, format!("bad noise section [{name}]")))?;
                    if noise_ids.iter().any(|&(j, _)| j == id) {
                        return Err(cfg_err(section.line, format!("duplicate section [{name}]")));
                    }
                    noise_ids.push((id, si));
                    let mut g_tilde = Vec::new();
                    let mut g = Vec::new();
                    for (v, l) in keys.take_all("g_tilde") {
                        scalar_mode_lines.push(parse_scalar_mode(v, l)?);
                        g_tilde.push(scalar_mode_lines.last().unwrap().0);
                    }
                    for (v, l) in keys.take_all("g") {
                        vector_mode_lines.push(parse_vector_mode(v, l)?);
                        g.push(vector_mode_lines.last().unwrap().0);
                    }
                    cfg.g_tilde_modes.push(g_tilde);
                    cfg.g_modes.push(g);
                }
                other => {
                    return Err(cfg_err(section.line, format!("unknown section [{other}]")));
                }
            }
            keys.finish()?;
        }
        let _ = have_observables;

        // noise sections must be numbered 1..=n in order of appearance
        for (pos, &(id, si)) in noise_ids.iter().enumerate() {
            if id != pos + 1 {
                return Err(cfg_err(
                    sections[si].line,
                    format!(
                        "noise sections must be numbered contiguously from 1; found [noise.{id}] in position {}",
                        pos + 1
                    ),
                ));
            }
        }

        cfg.validate(&scalar_mode_lines, &vector_mode_lines)?;
        Ok(cfg)
    }

    fn validate(
        &self,
        scalar_modes: &[(ScalarModeSpec, usize)],
        vector_modes: &[(VectorModeSpec, usize)],
    ) -> Result<()> {
        let invalid = |msg: String| CliError::Config(msg);
        if self.n < 8 || !self.n.is_multiple_of(2) {
            return Err(invalid(format!("grid.n must be even and at least 8, got {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(invalid(format!("time.dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if self.t_end <= 0.0 {
            return Err(invalid("time.t_end must be positive".into()));
        }
        if self.paths < 1 {
            return Err(invalid("ensemble.paths must be at least 1".into()));
        }
        if self.alpha < 1.0 {
            return Err(invalid(format!("physics.alpha must be at least 1, got {}", self.alpha)));
        }
        if self.eps < 0.0 {
            return Err(invalid("physics.eps must be nonnegative".into()));
        }
        if self.sample_every == 0 {
            return Err(invalid("output.sample_every must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_frac) {
            return Err(invalid("measure.burn_frac must lie in [0, 1)".into()));
        }
        if self.kernel_paths < 2 {
            return Err(invalid("measure.kernel_paths must be at least 2".into()));
        }

        let cutoff = (self.n / 3) as i32;
        for &(m, line) in scalar_modes {
            if m.k1 == 0 && m.k2 == 0 {
                return Err(cfg_err(line, "the (0, 0) mode is not allowed (fields are mean-zero)"));
            }
            if m.k1.abs() > cutoff || m.k2.abs() > cutoff {
                return Err(cfg_err(
                    line,
                    format!(
                        "mode ({}, {}) lies outside the dealias band |k_i| <= {cutoff} of an n = {} grid",
                        m.k1, m.k2, self.n
                    ),
                ));
            }
        }
        for &(m, line) in vector_modes {
            if m.k1 == 0 && m.k2 == 0 {
                return Err(cfg_err(line, "the (0, 0) mode is not allowed (fields are mean-zero)"));
            }
            if m.k1.abs() > cutoff || m.k2.abs() > cutoff {
                return Err(cfg_err(
                    line,
                    format!(
                        "mode ({}, {}) lies outside the dealias band |k_i| <= {cutoff} of an n = {} grid",
                        m.k1, m.k2, self.n
                    ),
                ));
            }
            let scale = m.cos_amp[0]
                .abs()
                .max(m.cos_amp[1].abs())
                .max(m.sin_amp[0].abs())
                .max(m.sin_amp[1].abs())
                .max(1e-300);
            let dot_cos = m.k1 as f64 * m.cos_amp[0] + m.k2 as f64 * m.cos_amp[1];
            let dot_sin = m.k1 as f64 * m.sin_amp[0] + m.k2 as f64 * m.sin_amp[1];
            if dot_cos.abs() > 1e-12 * scale || dot_sin.abs() > 1e-12 * scale {
                return Err(cfg_err(
                    line,
                    format!(
                        "vector mode ({}, {}) is not divergence-free: k·amp = ({dot_cos:e}, {dot_sin:e})",
                        m.k1, m.k2
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid64> {
        Ok(Grid64::new(self.n)?)
    }

    pub fn sim_params(&self) -> SimParams<f64> {
        let mut p = SimParams::new(self.alpha, self.eps, self.dt, self.t_end);
        p.zero_potential = self.zero_potential;
        p.linear = self.linear;
        p
    }

    fn build_scalar(&self, grid: &Grid64, modes: &[ScalarModeSpec]) -> Result<SpectralScalar64> {
        let trig: Vec<TrigMode<f64>> = modes
            .iter()
            .map(|m| TrigMode {
                k1: m.k1,
                k2: m.k2,
                cos_amp: m.cos_amp,
                sin_amp: m.sin_amp,
            })
            .collect();
        Ok(SpectralScalar64::from_modes(grid, &trig)?)
    }

    fn build_vector(&self, grid: &Grid64, modes: &[VectorModeSpec]) -> Result<SpectralVector64> {
        let comp = |c: usize| -> Vec<TrigMode<f64>> {
            modes
                .iter()
                .map(|m| TrigMode {
                    k1: m.k1,
                    k2: m.k2,
                    cos_amp: m.cos_amp[c],
                    sin_amp: m.sin_amp[c],
                })
                .collect()
        };
        let c1 = SpectralScalar64::from_modes(grid, &comp(0))?;
        let c2 = SpectralScalar64::from_modes(grid, &comp(1))?;
        Ok(SpectralVector64::from_components(grid, c1, c2, true)?)
    }

    pub fn build_bank(&self, grid: &Grid64) -> Result<ForcingBank<f64>> {
        let phi = self.build_scalar(grid, &self.phi_modes)?;
        let f = self.build_vector(grid, &self.f_modes)?;
        let g_tilde = self
            .g_tilde_modes
            .iter()
            .map(|m| self.build_scalar(grid, m))
            .collect::<Result<Vec<_>>>()?;
        let g = self
            .g_modes
            .iter()
            .map(|m| self.build_vector(grid, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(ForcingBank::new(grid, phi, f, g_tilde, g)?)
    }

    pub fn initial_state(&self, grid: &Grid64) -> Result<SimState64> {
        let q = self.build_scalar(grid, &self.initial_q)?;
        let u = self.build_vector(grid, &self.initial_u)?;
        Ok(SimState64::new(grid, q, u, 0.0)?)
    }

    /// Canonical serialization of every field, hashed; pins a parsed config
    /// in tests and logs.
    pub fn fingerprint(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "eps={}", self.eps);
        let _ = writeln!(s, "zero_potential={}", self.zero_potential);
        let _ = writeln!(s, "linear={}", self.linear);
        let _ = writeln!(s, "dt={}", self.dt);
        let _ = writeln!(s, "t_end={}", self.t_end);
        let _ = writeln!(s, "paths={}", self.paths);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "out_dir={}", self.out_dir.display());
        let _ = writeln!(s, "sample_every={}", self.sample_every);
        let _ = writeln!(s, "snapshot_every={}", self.snapshot_every);
        let _ = writeln!(
            s,
            "budgets={},{},{}",
            self.budget_l2_q, self.budget_l4_q, self.budget_h1_u
        );
        let _ = writeln!(s, "burn_frac={}", self.burn_frac);
        let _ = writeln!(s, "kernel_paths={}", self.kernel_paths);
        for o in &self.observables {
            let _ = writeln!(s, "observable={}", o.canonical());
        }
        let scalar_line = |m: &ScalarModeSpec| format!("{} {} {} {}", m.k1, m.k2, m.cos_amp, m.sin_amp);
        let vector_line = |m: &VectorModeSpec| {
            format!(
                "{} {} {} {} {} {}",
                m.k1, m.k2, m.cos_amp[0], m.sin_amp[0], m.cos_amp[1], m.sin_amp[1]
            )
        };
        for m in &self.phi_modes {
            let _ = writeln!(s, "phi={}", scalar_line(m));
        }
        for m in &self.f_modes {
            let _ = writeln!(s, "f={}", vector_line(m));
        }
        for (l, (gt, g)) in self.g_tilde_modes.iter().zip(&self.g_modes).enumerate() {
            for m in gt {
                let _ = writeln!(s, "noise.{}.g_tilde={}", l + 1, scalar_line(m));
            }
            for m in g {
                let _ = writeln!(s, "noise.{}.g={}", l + 1, vector_line(m));
            }
        }
        for m in &self.initial_q {
            let _ = writeln!(s, "initial.q={}", scalar_line(m));
        }
        for m in &self.initial_u {
            let _ = writeln!(s, "initial.u={}", vector_line(m));
        }
        let mut hasher = Sha256::new();
        hasher.update(s.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Number of Wiener processes.
    pub fn n_noise(&self) -> usize {
        self.g_tilde_modes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[grid]
n = 16

[time]
dt = 0.01
t_end = 0.5
";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse_str(MINIMAL).unwrap();
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.paths, 1);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.alpha, 1.0);
        assert!(!cfg.zero_potential);
        assert_eq!(cfg.observables.len(), 2);
        assert_eq!(cfg.n_noise(), 0);
    }

    #[test]
    fn unknown_keys_and_sections_are_line_precise_errors() {
        let bad_key = "
[grid]
n = 16
m = 3

[time]
dt = 0.01
t_end = 1
";
        let err = RunConfig::parse_str(bad_key).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        assert!(err.to_string().contains("unknown key 'm'"), "{err}");

        let bad_section = "
[gird]
n = 16
";
        let err = RunConfig::parse_str(bad_section).unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{err}");
    }

    #[test]
    fn non_div_free_velocity_noise_is_rejected_naming_the_mode() {
        let text = "
[grid]
n = 16

[time]
dt = 0.01
t_end = 1

[noise.1]
g_tilde = 1 0 1.0 0.0
g = 1 0 1.0 0.0 0.0 0.0
";
        let err = RunConfig::parse_str(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not divergence-free"), "{msg}");
        assert!(msg.contains("(1, 0)"), "{msg}");
        assert!(msg.contains("line 11"), "{msg}");
    }

    #[test]
    fn out_of_band_modes_are_rejected() {
        let text = "
[grid]
n = 16

[time]
dt = 0.01
t_end = 1

[forcing.phi]
mode = 6 0 1.0 0.0
";
        let err = RunConfig::parse_str(text).unwrap_err();
        assert!(err.to_string().contains("dealias band"), "{err}");
    }

    #[test]
    fn noise_sections_must_be_contiguous() {
        let text = "
[grid]
n = 16

[time]
dt = 0.01
t_end = 1

[noise.2]
g_tilde = 1 0 1.0 0.0
g = 0 1 1.0 0.0 0.0 0.0
";
        let err = RunConfig::parse_str(text).unwrap_err();
        assert!(err.to_string().contains("numbered contiguously"), "{err}");
    }

    #[test]
    fn fingerprint_is_stable_under_reparse() {
        let text = "
[grid]
n = 32

[time]
dt = 0.005
t_end = 2.0

[noise.1]
g_tilde = 1 0 0.5 0.0
g = 0 1 0.5 0.0 0.0 0.0
";
        let a = RunConfig::parse_str(text).unwrap().fingerprint();
        let b = RunConfig::parse_str(text).unwrap().fingerprint();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn bank_and_state_build_from_modes() {
        let text = "
[grid]
n = 16

[time]
dt = 0.01
t_end = 1

[forcing.phi]
mode = 1 0 1.0 0.0

[forcing.f]
mode = 0 2 0.25 0.0 0.0 0.0

[noise.1]
g_tilde = 1 1 0.5 0.5
g = 2 0 0.0 0.0 0.0 0.5

[initial]
q = 1 0 0.1 0.0
u = 0 1 0.1 0.0 0.0 0.0
";
        let cfg = RunConfig::parse_str(text).unwrap();
        let grid = cfg.grid().unwrap();
        let bank = cfg.build_bank(&grid).unwrap();
        assert_eq!(bank.n_noise(), 1);
        assert!(bank.has_potential());
        let state = cfg.initial_state(&grid).unwrap();
        assert!(state.q.mean_zero());
        assert!(state.u.div_free());
    }
}
