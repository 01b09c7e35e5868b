//! Run configuration: flat `key = value` files merged with command-line
//! flags, flags taking precedence.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::Serialize;
use uccvqe::AnsatzKind;

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// FCIDUMP integral file.
    #[arg(long, value_name = "PATH")]
    pub fcidump: Option<PathBuf>,
    /// Built-in model instead of an FCIDUMP file.
    #[arg(long, value_parser = ["hubbard"])]
    pub model: Option<String>,
    #[arg(long, value_name = "S")]
    pub sites: Option<usize>,
    /// Hopping amplitude (Hartree).
    #[arg(long, value_name = "T")]
    pub t: Option<f64>,
    /// On-site repulsion (Hartree).
    #[arg(long, value_name = "U")]
    pub u: Option<f64>,
    /// Alpha electrons; defaults from NELEC and MS2.
    #[arg(long)]
    pub n_alpha: Option<usize>,
    /// Beta electrons; defaults from NELEC and MS2.
    #[arg(long)]
    pub n_beta: Option<usize>,
    #[arg(long, value_parser = parse_kind)]
    pub ansatz: Option<AnsatzKind>,
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    #[arg(long, value_name = "R")]
    pub restarts: Option<usize>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "X")]
    pub init_scale: Option<f64>,
    /// Level shift of the overlap penalty; defaults to -E0.
    #[arg(long, value_name = "MU", allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Spatial promotions of the excited reference, e.g. "1>2;0>3".
    #[arg(long, value_name = "PROMOTIONS")]
    pub reference: Option<String>,
    /// Output path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "J")]
    pub jobs: Option<usize>,
}

pub fn parse_kind(s: &str) -> std::result::Result<AnsatzKind, String> {
    s.parse::<AnsatzKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Source {
    Fcidump { path: PathBuf },
    Hubbard { sites: usize, t: f64, u: f64 },
}

impl Source {
    pub fn describe(&self) -> String {
        match self {
            Source::Fcidump { path } => path.display().to_string(),
            Source::Hubbard { sites, t, u } => format!("hubbard:{sites},{t},{u}"),
        }
    }

    /// `hubbard:S,T,U` or a file path relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        if let Some(params) = text.strip_prefix("hubbard:") {
            let parts: Vec<&str> = params.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                bail!("expected hubbard:SITES,T,U, got {text:?}");
            }
            return Ok(Source::Hubbard {
                sites: parts[0].parse().with_context(|| format!("sites in {text:?}"))?,
                t: parts[1].parse().with_context(|| format!("t in {text:?}"))?,
                u: parts[2].parse().with_context(|| format!("u in {text:?}"))?,
            });
        }
        Ok(Source::Fcidump { path: base.join(text) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Absent for scans, whose points carry their own sources.
    pub source: Option<Source>,
    pub n_alpha: Option<usize>,
    pub n_beta: Option<usize>,
    pub ansatz: AnsatzKind,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub excited: bool,
    pub mu: Option<f64>,
    pub reference: Option<Vec<(usize, usize)>>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub jobs: usize,
}

pub const CONFIG_KEYS: [&str; 18] = [
    "fcidump", "model", "sites", "t", "u", "n_alpha", "n_beta", "ansatz", "k", "restarts", "seed", "init_scale",
    "excited", "mu", "reference", "out", "jobs", "point",
];

/// A `point` value with its line number.
pub type RawPoint = (String, usize);

/// Parses `"i>a;j>b"` into spatial promotions.
pub fn parse_promotions(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (i, a) = part
            .split_once('>')
            .ok_or_else(|| anyhow!("promotion {part:?} is not of the form i>a"))?;
        out.push((
            i.trim().parse().with_context(|| format!("promotion {part:?}"))?,
            a.trim().parse().with_context(|| format!("promotion {part:?}"))?,
        ));
    }
    if out.is_empty() {
        bail!("empty reference specification");
    }
    Ok(out)
}

/// `(key, value, line)` entries of a flat config file. `#` starts a comment.
pub fn read_entries(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", n + 1);
        }
        entries.push((key, value.trim().to_string(), n + 1));
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("line {line}: bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("line {line}: bad value {value:?} for {key}: expected true or false"),
    }
}

/// Overlays file entries under the flags in `args`. Paths in the file are
/// taken relative to `base`. `point` entries are returned untouched.
pub fn merge_file(
    args: &RunArgs,
    entries: &[(String, String, usize)],
    base: &Path,
    excited: &mut Option<bool>,
) -> Result<(RunArgs, Vec<RawPoint>)> {
    let mut merged = RunArgs::default();
    let mut points = Vec::new();
    for (key, value, line) in entries {
        let (key, value, line) = (key.as_str(), value.as_str(), *line);
        match key {
            "fcidump" => merged.fcidump = Some(base.join(value)),
            "model" => merged.model = Some(value.to_string()),
            "sites" => merged.sites = Some(parse_value(key, value, line)?),
            "t" => merged.t = Some(parse_value(key, value, line)?),
            "u" => merged.u = Some(parse_value(key, value, line)?),
            "n_alpha" => merged.n_alpha = Some(parse_value(key, value, line)?),
            "n_beta" => merged.n_beta = Some(parse_value(key, value, line)?),
            "ansatz" => merged.ansatz = Some(parse_value(key, value, line)?),
            "k" => merged.k = Some(parse_value(key, value, line)?),
            "restarts" => merged.restarts = Some(parse_value(key, value, line)?),
            "seed" => merged.seed = Some(parse_value(key, value, line)?),
            "init_scale" => merged.init_scale = Some(parse_value(key, value, line)?),
            "excited" => {
                if excited.is_none() {
                    *excited = Some(parse_bool(key, value, line)?);
                }
            }
            "mu" => merged.mu = Some(parse_value(key, value, line)?),
            "reference" => merged.reference = Some(value.to_string()),
            "out" => merged.out = Some(base.join(value)),
            "jobs" => merged.jobs = Some(parse_value(key, value, line)?),
            "point" => points.push((value.to_string(), line)),
            _ => unreachable!("keys are checked when read"),
        }
    }
    // Flags win over file values.
    let flags = args.clone();
    let from_flags_source = flags.fcidump.is_some() || flags.model.is_some();
    Ok((
        RunArgs {
            config: None,
            fcidump: if from_flags_source { flags.fcidump } else { merged.fcidump },
            model: if from_flags_source { flags.model } else { merged.model },
            sites: flags.sites.or(merged.sites),
            t: flags.t.or(merged.t),
            u: flags.u.or(merged.u),
            n_alpha: flags.n_alpha.or(merged.n_alpha),
            n_beta: flags.n_beta.or(merged.n_beta),
            ansatz: flags.ansatz.or(merged.ansatz),
            k: flags.k.or(merged.k),
            restarts: flags.restarts.or(merged.restarts),
            seed: flags.seed.or(merged.seed),
            init_scale: flags.init_scale.or(merged.init_scale),
            mu: flags.mu.or(merged.mu),
            reference: flags.reference.or(merged.reference),
            out: flags.out.or(merged.out),
            jobs: flags.jobs.or(merged.jobs),
        },
        points,
    ))
}

impl RunConfig {
    pub fn from_args(args: &RunArgs, excited: bool, require_source: bool) -> Result<Self> {
        let source = match (&args.fcidump, &args.model) {
            (Some(_), Some(_)) => bail!("give either an FCIDUMP file or a built-in model, not both"),
            (Some(path), None) => Some(Source::Fcidump { path: path.clone() }),
            (None, Some(model)) => {
                if model != "hubbard" {
                    bail!("unknown model {model:?}");
                }
                Some(Source::Hubbard {
                    sites: args.sites.ok_or_else(|| anyhow!("--model hubbard needs --sites"))?,
                    t: args.t.unwrap_or(1.0),
                    u: args.u.unwrap_or(4.0),
                })
            }
            (None, None) if require_source => bail!("no Hamiltonian source: pass --fcidump or --model"),
            (None, None) => None,
        };
        let k = args.k.unwrap_or(1);
        let restarts = args.restarts.unwrap_or(50);
        if k == 0 {
            bail!("k must be positive");
        }
        if restarts == 0 {
            bail!("restarts must be positive");
        }
        let init_scale = args.init_scale.unwrap_or(0.1);
        if !(init_scale.is_finite() && init_scale >= 0.0) {
            bail!("init_scale must be a finite non-negative number");
        }
        Ok(Self {
            source,
            n_alpha: args.n_alpha,
            n_beta: args.n_beta,
            ansatz: args.ansatz.unwrap_or(AnsatzKind::Uccsd),
            k,
            restarts,
            seed: args.seed.unwrap_or(0),
            init_scale,
            excited,
            mu: args.mu,
            reference: args.reference.as_deref().map(parse_promotions).transpose()?,
            out: args.out.clone(),
            jobs: args.jobs.unwrap_or(0),
        })
    }
}

/// Resolves `args` against its `--config` file, if any.
pub fn load(args: &RunArgs, excited_flag: bool) -> Result<(RunArgs, bool, Vec<RawPoint>)> {
    let mut excited = excited_flag.then_some(true);
    let Some(path) = &args.config else {
        return Ok((args.clone(), excited_flag, Vec::new()));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let entries = read_entries(&text).with_context(|| format!("in config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (merged, points) = merge_file(args, &entries, base, &mut excited)?;
    Ok((merged, excited.unwrap_or(false), points))
}
