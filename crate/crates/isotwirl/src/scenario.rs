//! Scenario files: a plain-text, sectioned key-value format.
//!
//! ```text
//! # comment
//! [run]
//! name = toric_loschmidt
//! seed = 7
//!
//! [model]
//! kind = toric            # cb | toric | raw
//! n = 2
//! j = 1.0
//!
//! [twirl]
//! ensembles = haar, clifford, doped(4, 0.7853981633974483)
//! probes = loschmidt2
//!
//! [time]
//! t_min = 0.01
//! t_max = 100
//! points = 200
//! spacing = log           # log | linear
//! ```
//!
//! Sections and keys are listed in the README. Every error names the file,
//! the line (when there is one) and the section and key involved.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};

use isotwirl_core::probes::ProbeKind;
use isotwirl_core::twirl_engine::is_clifford_angle;

/// A schema or value error with its location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioError {
    pub file: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": {field}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Clone, Debug, PartialEq)]
pub enum Frequencies {
    Explicit(Vec<f64>),
    /// `qubits` frequencies drawn uniformly from `[0, 1)`; the seed falls
    /// back to the run seed.
    Random { qubits: usize, seed: Option<u64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Cb(Frequencies),
    Toric { n: u32, j: f64 },
    Raw { path: PathBuf, energies: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralAverage {
    None,
    Gde { d: u64 },
    Gue { d: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnsembleSpec {
    Haar,
    Clifford,
    Doped { k: u64, theta: f64 },
}

impl EnsembleSpec {
    /// File-name tag, e.g. `haar` or `doped_k4_th0.785398`.
    pub fn tag(&self) -> String {
        match self {
            EnsembleSpec::Haar => "haar".into(),
            EnsembleSpec::Clifford => "clifford".into(),
            EnsembleSpec::Doped { k, theta } => format!("doped_k{k}_th{theta:.6}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => isotwirl_core::spectral::log_grid(self.t_min, self.t_max, self.points),
            Spacing::Linear => isotwirl_core::spectral::linear_grid(self.t_min, self.t_max, self.points),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSpec {
    pub enabled: bool,
    pub qubits: u32,
    pub samples: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: Option<u64>,
    pub model: Option<Model>,
    pub spectral: SpectralAverage,
    pub ensembles: Vec<EnsembleSpec>,
    pub probes: Vec<ProbeKind>,
    pub time: TimeGrid,
    pub oracle: Option<OracleSpec>,
    pub gnuplot: bool,
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

type Sections = BTreeMap<String, (usize, BTreeMap<String, Entry>)>;

const SCHEMA: [(&str, &[&str]); 7] = [
    ("run", &["name", "seed"]),
    ("model", &["kind", "omegas", "qubits", "random_seed", "n", "j", "file"]),
    ("spectral", &["average", "d"]),
    ("twirl", &["ensembles", "probes"]),
    ("time", &["t_min", "t_max", "points", "spacing"]),
    ("oracle", &["enabled", "qubits", "samples", "seed"]),
    ("output", &["gnuplot"]),
];

struct Parser {
    file: String,
    sections: Sections,
}

impl Parser {
    fn err(&self, line: Option<usize>, field: Option<String>, message: impl Into<String>) -> ScenarioError {
        ScenarioError { file: self.file.clone(), line, field, message: message.into() }
    }

    fn lex(file: &str, text: &str) -> Result<Parser, ScenarioError> {
        let mut p = Parser { file: file.to_string(), sections: BTreeMap::new() };
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| p.err(Some(line), None, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    let known: Vec<&str> = SCHEMA.iter().map(|(s, _)| *s).collect();
                    return Err(p.err(Some(line), Some(format!("[{name}]")), format!("unknown section (expected one of {})", known.join(", "))));
                }
                if p.sections.contains_key(&name) {
                    return Err(p.err(Some(line), Some(format!("[{name}]")), "duplicate section"));
                }
                p.sections.insert(name.clone(), (line, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let section = current.clone().ok_or_else(|| p.err(Some(line), None, "key-value line before any [section]"))?;
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| p.err(Some(line), Some(format!("[{section}]")), "expected `key = value`"))?;
            let key = k.trim().to_ascii_lowercase();
            let allowed = SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, keys)| *keys).unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                return Err(p.err(
                    Some(line),
                    Some(format!("[{section}] {key}")),
                    format!("unknown key (expected one of {})", allowed.join(", ")),
                ));
            }
            let entries = &mut p.sections.get_mut(&section).expect("inserted").1;
            if entries.contains_key(&key) {
                return Err(p.err(Some(line), Some(format!("[{section}] {key}")), "duplicate key"));
            }
            entries.insert(key, Entry { line, value: v.trim().to_string(), used: false });
        }
        Ok(p)
    }

    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let e = self.sections.get_mut(section)?.1.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn get<T>(
        &mut self,
        section: &str,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ScenarioError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => parse(&v)
                .map(Some)
                .ok_or_else(|| self.err(Some(line), Some(format!("[{section}] {key}")), format!("expected {what}, got `{v}`"))),
        }
    }

    fn require<T>(
        &mut self,
        section: &str,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<T, ScenarioError> {
        let line = self.sections.get(section).map(|s| s.0);
        self.get(section, key, what, parse)?
            .ok_or_else(|| self.err(line, Some(format!("[{section}] {key}")), "missing required field"))
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section).and_then(|s| s.1.get(key).map(|e| e.line).or(Some(s.0)))
    }

    fn field_err(&self, section: &str, key: &str, message: impl Into<String>) -> ScenarioError {
        self.err(self.line_of(section, key), Some(format!("[{section}] {key}")), message)
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_u64(s: &str) -> Option<u64> {
    s.replace('_', "").parse().ok()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Split on commas that are not inside parentheses.
fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_ensemble(s: &str) -> Result<EnsembleSpec, String> {
    let lower = s.to_ascii_lowercase();
    match lower.as_str() {
        "haar" | "unitary" => return Ok(EnsembleSpec::Haar),
        "clifford" => return Ok(EnsembleSpec::Clifford),
        _ => {}
    }
    let args = lower
        .strip_prefix("doped")
        .map(str::trim)
        .and_then(|r| r.strip_prefix('('))
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("unknown ensemble `{s}` (expected haar, clifford or doped(k, theta))"))?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("`{s}`: doped takes two arguments (k, theta)"));
    }
    let k = parse_u64(parts[0]).ok_or_else(|| format!("`{s}`: k must be a non-negative integer"))?;
    let theta = parse_f64(parts[1]).ok_or_else(|| format!("`{s}`: theta must be a finite number"))?;
    if is_clifford_angle(theta) {
        return Err(format!("`{s}`: theta = {theta} is a multiple of π/2 = {FRAC_PI_2}, the gate would be Clifford"));
    }
    Ok(EnsembleSpec::Doped { k, theta })
}

fn parse_energies(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for tok in content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            out.push(parse_f64(tok).ok_or_else(|| format!("line {}: `{tok}` is not a number", i + 1))?);
        }
    }
    if out.is_empty() {
        return Err("no energies found".into());
    }
    Ok(out)
}

impl Scenario {
    /// Parse a scenario file; relative `file =` paths resolve against its
    /// directory.
    pub fn from_file(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            file: path.display().to_string(),
            line: None,
            field: None,
            message: format!("cannot read: {e}"),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::parse(&path.display().to_string(), &text, base)
    }

    /// Parse scenario text. `file` is used in diagnostics only.
    pub fn parse(file: &str, text: &str, base: &Path) -> Result<Scenario, ScenarioError> {
        let mut p = Parser::lex(file, text)?;

        let name = p.get("run", "name", "a name", |s| Some(s.to_string()))?.unwrap_or_else(|| {
            Path::new(file).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
        });
        let seed = p.get("run", "seed", "an unsigned integer", parse_u64)?;

        let model = if p.has("model") {
            let kind = p.require("model", "kind", "cb, toric or raw", |s| Some(s.to_ascii_lowercase()))?;
            Some(match kind.as_str() {
                "cb" => {
                    let omegas = p.get("model", "omegas", "a comma-separated list of numbers", |s| {
                        s.split(',').map(|x| parse_f64(x.trim())).collect::<Option<Vec<f64>>>()
                    })?;
                    let qubits = p.get("model", "qubits", "a positive integer", |s| parse_u64(s).map(|x| x as usize))?;
                    let rseed = p.get("model", "random_seed", "an unsigned integer", parse_u64)?;
                    match (omegas, qubits) {
                        (Some(w), q) => {
                            if rseed.is_some() {
                                return Err(p.field_err("model", "random_seed", "give either omegas or random_seed, not both"));
                            }
                            if q.is_some_and(|q| q != w.len()) {
                                return Err(p.field_err("model", "qubits", format!("{} omegas given for {} qubits", w.len(), q.unwrap_or(0))));
                            }
                            if w.is_empty() || w.len() > isotwirl_core::hamiltonians::MAX_CB_QUBITS {
                                return Err(p.field_err("model", "omegas", "between 1 and 24 frequencies required"));
                            }
                            Model::Cb(Frequencies::Explicit(w))
                        }
                        (None, Some(q)) => {
                            if q == 0 || q > isotwirl_core::hamiltonians::MAX_CB_QUBITS {
                                return Err(p.field_err("model", "qubits", "between 1 and 24 qubits required"));
                            }
                            Model::Cb(Frequencies::Random { qubits: q, seed: rseed })
                        }
                        (None, None) => return Err(p.field_err("model", "omegas", "cb model needs omegas or qubits")),
                    }
                }
                "toric" => {
                    let n = p.require("model", "n", "an integer between 2 and 5", |s| parse_u64(s).filter(|&n| (2..=5).contains(&n)))? as u32;
                    let j = p.get("model", "j", "a number", parse_f64)?.unwrap_or(1.0);
                    Model::Toric { n, j }
                }
                "raw" => {
                    let f = p.require("model", "file", "a path", |s| Some(PathBuf::from(s)))?;
                    let full = if f.is_absolute() { f.clone() } else { base.join(&f) };
                    let text = std::fs::read_to_string(&full)
                        .map_err(|e| p.field_err("model", "file", format!("cannot read {}: {e}", full.display())))?;
                    let energies = parse_energies(&text).map_err(|e| p.field_err("model", "file", format!("{}: {e}", f.display())))?;
                    Model::Raw { path: f, energies }
                }
                other => return Err(p.field_err("model", "kind", format!("unknown model `{other}` (expected cb, toric or raw)"))),
            })
        } else {
            None
        };

        let average = p.get("spectral", "average", "none, gde or gue", |s| Some(s.to_ascii_lowercase()))?;
        let avg_d = p.get("spectral", "d", "a power of two ≥ 4", |s| parse_u64(s).filter(|d| d.is_power_of_two() && *d >= 4))?;
        let spectral = match average.as_deref() {
            None | Some("none") => {
                if avg_d.is_some() {
                    return Err(p.field_err("spectral", "d", "d is only used with average = gde or gue"));
                }
                SpectralAverage::None
            }
            Some(a @ ("gde" | "gue")) => {
                if model.is_some() {
                    return Err(p.field_err(
                        "spectral",
                        "average",
                        "spectral averaging and an explicit [model] are mutually exclusive",
                    ));
                }
                let d = avg_d.ok_or_else(|| p.field_err("spectral", "d", "missing required field"))?;
                if a == "gde" {
                    SpectralAverage::Gde { d }
                } else {
                    SpectralAverage::Gue { d }
                }
            }
            Some(other) => return Err(p.field_err("spectral", "average", format!("unknown average `{other}` (expected none, gde or gue)"))),
        };
        if model.is_none() && spectral == SpectralAverage::None {
            return Err(p.err(None, Some("[model]".into()), "a [model] section or [spectral] average = gde|gue is required"));
        }

        let ensembles = match p.raw("twirl", "ensembles") {
            None => vec![EnsembleSpec::Haar, EnsembleSpec::Clifford],
            Some((line, v)) => split_top(&v)
                .iter()
                .map(|s| parse_ensemble(s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| p.err(Some(line), Some("[twirl] ensembles".into()), m))?,
        };
        let probes = match p.raw("twirl", "probes") {
            None => Vec::new(),
            Some((line, v)) => split_top(&v)
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| ProbeKind::parse(s).ok_or_else(|| format!("unknown probe `{s}`")))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| p.err(Some(line), Some("[twirl] probes".into()), m))?,
        };

        if !p.has("time") {
            return Err(p.err(None, Some("[time]".into()), "missing required section"));
        }
        let t_min = p.require("time", "t_min", "a number ≥ 0", |s| parse_f64(s).filter(|x| *x >= 0.0))?;
        let t_max = p.require("time", "t_max", "a number", parse_f64)?;
        let points = p.require("time", "points", "an integer ≥ 1", |s| parse_u64(s).filter(|&n| n >= 1).map(|n| n as usize))?;
        let spacing = p
            .get("time", "spacing", "log or linear", |s| match s.to_ascii_lowercase().as_str() {
                "log" => Some(Spacing::Log),
                "linear" | "lin" => Some(Spacing::Linear),
                _ => None,
            })?
            .unwrap_or(Spacing::Log);
        if t_max < t_min {
            return Err(p.field_err("time", "t_max", "t_max must be ≥ t_min"));
        }
        if spacing == Spacing::Log && t_min <= 0.0 {
            return Err(p.field_err("time", "t_min", "log spacing needs t_min > 0"));
        }

        let oracle = if p.has("oracle") {
            let enabled = p.get("oracle", "enabled", "true or false", parse_bool)?.unwrap_or(true);
            let qubits = p
                .get("oracle", "qubits", "2 or 3", |s| parse_u64(s).filter(|n| (2..=3).contains(n)))?
                .unwrap_or(2) as u32;
            let samples = p
                .get("oracle", "samples", "an integer ≥ 1000", |s| parse_u64(s).filter(|&n| n >= 1000).map(|n| n as usize))?
                .unwrap_or(10_000);
            let seed = p.get("oracle", "seed", "an unsigned integer", parse_u64)?;
            Some(OracleSpec { enabled, qubits, samples, seed })
        } else {
            None
        };
        let gnuplot = p.get("output", "gnuplot", "true or false", parse_bool)?.unwrap_or(false);

        for (section, (_, entries)) in &p.sections {
            for (key, e) in entries {
                if !e.used {
                    return Err(p.err(Some(e.line), Some(format!("[{section}] {key}")), "key does not apply to this model"));
                }
            }
        }

        Ok(Scenario {
            name,
            seed,
            model,
            spectral,
            ensembles,
            probes,
            time: TimeGrid { t_min, t_max, points, spacing },
            oracle,
            gnuplot,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        Scenario::parse("s.txt", text, Path::new("."))
    }

    const TIME: &str = "[time]\nt_min = 0.1\nt_max = 10\npoints = 5\n";

    #[test]
    fn toric_scenario() {
        let s = parse(&format!(
            "[model]\nkind = toric\nn = 2\n[twirl]\nensembles = haar, clifford, doped(3, 0.7)\nprobes = l2, otoc\n{TIME}"
        ))
        .unwrap();
        assert_eq!(s.model, Some(Model::Toric { n: 2, j: 1.0 }));
        assert_eq!(s.ensembles.len(), 3);
        assert_eq!(s.ensembles[2], EnsembleSpec::Doped { k: 3, theta: 0.7 });
        assert_eq!(s.probes, vec![ProbeKind::Loschmidt2, ProbeKind::Otoc4]);
        assert_eq!(s.time.times().len(), 5);
        assert_eq!(s.name, "s");
    }

    #[test]
    fn empty_probe_list_is_allowed() {
        let s = parse(&format!("[spectral]\naverage = gue\nd = 64\n[twirl]\nprobes =\n{TIME}")).unwrap();
        assert!(s.probes.is_empty());
        assert_eq!(s.spectral, SpectralAverage::Gue { d: 64 });
    }

    #[test]
    fn diagnostics_carry_line_and_field() {
        let e = parse(&format!("[model]\nkind = cb\nomegas = 0.1, x\n{TIME}")).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.field.as_deref(), Some("[model] omegas"));
        assert!(e.to_string().starts_with("s.txt:3: [model] omegas"));

        let e = parse("[model]\nkind = cb\nomegas = 0.1\n").unwrap_err();
        assert_eq!(e.field.as_deref(), Some("[time]"));

        let e = parse(&format!("[model]\nkind = cb\nqubits = 2\nbogus = 1\n{TIME}")).unwrap_err();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn invariants_are_enforced() {
        let clifford_angle = format!("[model]\nkind = cb\nqubits = 2\n[twirl]\nensembles = doped(1, 3.141592653589793)\n{TIME}");
        assert!(parse(&clifford_angle).unwrap_err().message.contains("Clifford"));
        let both = format!("[model]\nkind = cb\nqubits = 2\n[spectral]\naverage = gde\nd = 16\n{TIME}");
        assert!(parse(&both).unwrap_err().message.contains("mutually exclusive"));
        let unused = format!("[model]\nkind = toric\nn = 2\nomegas = 1\n{TIME}");
        assert!(parse(&unused).unwrap_err().message.contains("does not apply"));
    }

    #[test]
    fn top_level_split_respects_parentheses() {
        assert_eq!(split_top("haar, doped(2, 0.3), clifford"), vec!["haar", "doped(2, 0.3)", "clifford"]);
        assert!(split_top("").is_empty());
    }

    #[test]
    fn energies_file_format() {
        assert_eq!(parse_energies("# E\n1.0 2.0\n-3e-1, 4\n").unwrap(), vec![1.0, 2.0, -0.3, 4.0]);
        assert!(parse_energies("1.0 nope").is_err());
    }
}
