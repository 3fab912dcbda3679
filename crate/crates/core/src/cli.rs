//! Command-line front end.
//!
//! Every subcommand reads one [`RunConfig`], assembled from an optional flat
//! `key=value` file (`--config`) overridden by command-line flags. Numbers
//! are written with 17 significant digits so identical configurations give
//! byte-identical output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::classical_geometric::{
    delta_collapse_diagnostics, entanglement_phase_identity, resolve_m, DEFAULT_LOOP_POINTS,
};
use crate::coherent_states::{husimi_q, CoherentPoint, SphereQuadrature};
use crate::parametric_rep::{
    bloch_distribution, conditional_up, expectation, p_density, p_distribution, theta_map,
    uniform_grid, Endpoints, DEFAULT_GRID_POINTS,
};
use crate::ring_spectrum::{critical_ratios, diagonalize_ring, RingConfig};
use crate::star_model::{eigenstate, StarEigenstate, StarModel};
use crate::{Branch, Error, HalfInt, Result};

#[derive(Parser, Debug)]
#[command(
    name = "spinstar",
    version,
    about = "Qubit in a frustrated spin-star environment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    PhaseDiagram,
    Distributions,
    Crossover,
    Berry,
    Selftest,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Critical k/g ratios and ground-state ring spin of an N-site ring.
    PhaseDiagram(Flags),
    /// p(theta), pi(Theta) and the conditional distributions, one file per S.
    Distributions(Flags),
    /// Mode, width and shift of p(theta) along a sequence of S at fixed M/S~.
    Crossover(Flags),
    /// Pancharatnam phases at vartheta_M and the entanglement identity.
    Berry(Flags),
    /// Quick end-to-end consistency checks.
    Selftest(Flags),
}

impl Command {
    fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::PhaseDiagram(f) => (CommandKind::PhaseDiagram, f),
            Command::Distributions(f) => (CommandKind::Distributions, f),
            Command::Crossover(f) => (CommandKind::Crossover, f),
            Command::Berry(f) => (CommandKind::Berry, f),
            Command::Selftest(f) => (CommandKind::Selftest, f),
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Number of ring sites.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Ring spin, or a comma-separated list of ring spins.
    #[arg(long = "S")]
    pub s: Option<String>,
    /// Total S^z projection, e.g. 9/2 or -4.5.
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    /// Target M/S~, e.g. 9/11; resolved to the nearest admissible M.
    #[arg(long = "M-ratio", allow_hyphen_values = true)]
    pub m_ratio: Option<String>,
    /// plus or minus.
    #[arg(long)]
    pub branch: Option<String>,
    /// Ring coupling.
    #[arg(long)]
    pub k: Option<String>,
    /// Star coupling.
    #[arg(long)]
    pub g: Option<String>,
    /// Points of the uniform theta grid.
    #[arg(long)]
    pub grid: Option<String>,
    /// Gauss-Legendre order in theta for sphere quadratures.
    #[arg(long = "quad-order")]
    pub quad_order: Option<String>,
    /// Points on the Pancharatnam loop.
    #[arg(long = "K")]
    pub loop_points: Option<String>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Output file, or output directory for distributions.
    #[arg(long)]
    pub out: Option<String>,
    /// Flat key=value configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "kg-min")]
    pub kg_min: Option<String>,
    #[arg(long = "kg-max")]
    pub kg_max: Option<String>,
    /// Number of k/g samples in the phase diagram.
    #[arg(long = "kg-steps")]
    pub kg_steps: Option<String>,
    /// Seed for the randomized selftest points.
    #[arg(long)]
    pub seed: Option<String>,
}

/// Keys accepted in configuration files, named like the flags.
pub const CONFIG_KEYS: &[&str] = &[
    "N",
    "S",
    "M",
    "M-ratio",
    "branch",
    "k",
    "g",
    "grid",
    "quad-order",
    "K",
    "format",
    "out",
    "kg-min",
    "kg-max",
    "kg-steps",
    "seed",
];

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("N", &self.n),
            ("S", &self.s),
            ("M", &self.m),
            ("M-ratio", &self.m_ratio),
            ("branch", &self.branch),
            ("k", &self.k),
            ("g", &self.g),
            ("grid", &self.grid),
            ("quad-order", &self.quad_order),
            ("K", &self.loop_points),
            ("format", &self.format),
            ("out", &self.out),
            ("kg-min", &self.kg_min),
            ("kg-max", &self.kg_max),
            ("kg-steps", &self.kg_steps),
            ("seed", &self.seed),
        ]
    }
}

/// Parses a flat `key=value` document. Blank lines and `#` comments are
/// skipped; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::InvalidConfig(format!(
                "config line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!(
                "format must be csv or json, got '{other}'"
            ))),
        }
    }
}

/// Validated parameters of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sites: Option<usize>,
    pub spins: Vec<HalfInt>,
    pub m: Option<HalfInt>,
    pub m_ratio: Option<f64>,
    pub branch: Branch,
    pub k: f64,
    pub g: f64,
    pub grid: usize,
    pub quad_order: Option<usize>,
    pub loop_points: usize,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub kg_min: f64,
    pub kg_max: Option<f64>,
    pub kg_steps: usize,
    pub seed: u64,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse {key} = '{value}'")))
}

/// `"9/11"` or a decimal.
pub fn parse_ratio(value: &str) -> Result<f64> {
    let bad = || Error::InvalidConfig(format!("cannot parse M-ratio = '{value}'"));
    let x = match value.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => value.trim().parse().map_err(|_| bad())?,
    };
    if !x.is_finite() {
        return Err(bad());
    }
    Ok(x)
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidConfig(format!(
            "{key} must be positive, got {x}"
        )))
    }
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| map.get(key).map(String::as_str);
        let spins = match get("S") {
            Some(list) => list
                .split(',')
                .map(|s| parse_value::<HalfInt>("S", s.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        if let Some(bad) = spins.iter().find(|s| s.twice() <= 0) {
            return Err(Error::InvalidConfig(format!(
                "S must be positive, got {bad}"
            )));
        }
        let m = get("M")
            .map(|v| parse_value::<HalfInt>("M", v))
            .transpose()?;
        let m_ratio = get("M-ratio").map(parse_ratio).transpose()?;
        if m.is_some() && m_ratio.is_some() {
            return Err(Error::InvalidConfig(
                "give either M or M-ratio, not both".into(),
            ));
        }
        let branch = match get("branch") {
            Some(v) => v.parse::<Branch>().map_err(Error::InvalidConfig)?,
            None => Branch::Minus,
        };
        let k = positive(
            "k",
            get("k")
                .map(|v| parse_value("k", v))
                .transpose()?
                .unwrap_or(1.0),
        )?;
        let g = positive(
            "g",
            get("g")
                .map(|v| parse_value("g", v))
                .transpose()?
                .unwrap_or(1.0),
        )?;
        let grid = get("grid")
            .map(|v| parse_value("grid", v))
            .transpose()?
            .unwrap_or(DEFAULT_GRID_POINTS);
        if grid < 3 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 3 points, got {grid}"
            )));
        }
        let quad_order = get("quad-order")
            .map(|v| parse_value::<usize>("quad-order", v))
            .transpose()?;
        if quad_order == Some(0) {
            return Err(Error::InvalidConfig("quad-order must be positive".into()));
        }
        let loop_points = get("K")
            .map(|v| parse_value("K", v))
            .transpose()?
            .unwrap_or(DEFAULT_LOOP_POINTS);
        if loop_points < 3 {
            return Err(Error::InvalidConfig(format!(
                "K must be at least 3, got {loop_points}"
            )));
        }
        let kg_min: f64 = get("kg-min")
            .map(|v| parse_value("kg-min", v))
            .transpose()?
            .unwrap_or(0.0);
        let kg_max: Option<f64> = get("kg-max")
            .map(|v| parse_value("kg-max", v))
            .transpose()?;
        if !(kg_min >= 0.0 && kg_min.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kg-min must be non-negative, got {kg_min}"
            )));
        }
        if let Some(max) = kg_max {
            if !(max > kg_min && max.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "kg-max = {max} must exceed kg-min = {kg_min}"
                )));
            }
        }
        let kg_steps = get("kg-steps")
            .map(|v| parse_value("kg-steps", v))
            .transpose()?
            .unwrap_or(101);
        if kg_steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "kg-steps must be at least 2, got {kg_steps}"
            )));
        }
        Ok(RunConfig {
            sites: get("N").map(|v| parse_value("N", v)).transpose()?,
            spins,
            m,
            m_ratio,
            branch,
            k,
            g,
            grid,
            quad_order,
            loop_points,
            format: get("format").map(str::parse).transpose()?,
            out: get("out").map(PathBuf::from),
            kg_min,
            kg_max,
            kg_steps,
            seed: get("seed")
                .map(|v| parse_value("seed", v))
                .transpose()?
                .unwrap_or(0),
        })
    }

    /// Config file first, then flags on top.
    pub fn from_flags(flags: &Flags) -> Result<Self> {
        let mut map = match &flags.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        for (key, value) in flags.pairs() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Self::from_map(&map)
    }

    fn single_spin(&self) -> Result<HalfInt> {
        match self.spins.as_slice() {
            [s] => Ok(*s),
            [] => Err(Error::Usage("missing --S".into())),
            _ => Err(Error::Usage("this command takes a single --S".into())),
        }
    }

    fn sector_m(&self, spin: HalfInt) -> Result<HalfInt> {
        match (self.m, self.m_ratio) {
            (Some(m), _) => Ok(m),
            (None, Some(r)) => resolve_m(spin, r, self.branch),
            (None, None) => Err(Error::Usage("missing --M or --M-ratio".into())),
        }
    }
}

/// `{:.16e}`: 17 significant digits, round-trip exact.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f(x).parse().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// One piece of output: a file, or stdout when `path` is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub contents: String,
}

fn single(cfg: &RunConfig, contents: String) -> Vec<Output> {
    vec![Output {
        path: cfg.out.clone(),
        contents,
    }]
}

pub fn phase_diagram(cfg: &RunConfig) -> Result<Vec<Output>> {
    let sites = cfg
        .sites
        .ok_or_else(|| Error::Usage("phase-diagram needs --N".into()))?;
    let spectrum = diagonalize_ring(&RingConfig::new(sites, cfg.k)?)?;
    let diagram = critical_ratios(&spectrum)?;
    let alphas = diagram.alphas();
    let kg_max = cfg.kg_max.unwrap_or_else(|| {
        1.5 * alphas
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .max(cfg.kg_min + 1.0 / 1.5)
    });
    let samples: Vec<(f64, usize)> = (0..cfg.kg_steps)
        .map(|i| {
            let t = i as f64 / (cfg.kg_steps - 1) as f64;
            let kg = if i + 1 == cfg.kg_steps {
                kg_max
            } else {
                cfg.kg_min + t * (kg_max - cfg.kg_min)
            };
            (kg, diagram.ground_spin(kg))
        })
        .collect();
    let half = sites / 2;
    let contents = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::new();
            writeln!(s, "# phase-diagram").unwrap();
            writeln!(s, "# N={sites}").unwrap();
            for m in spectrum.multiplets() {
                writeln!(s, "# E_B(S={})={}", m.spin(), fmt_f(m.energy())).unwrap();
            }
            let coincident: Vec<String> = diagram
                .coincident_crossings()
                .iter()
                .map(|i| i.to_string())
                .collect();
            writeln!(s, "# coincident={}", coincident.join(";")).unwrap();
            writeln!(s, "kind,index,k_over_g,ground_S").unwrap();
            for (i, a) in alphas.iter().enumerate() {
                writeln!(s, "alpha,{i},{},{}", fmt_f(*a), half - i - 1).unwrap();
            }
            for (i, (kg, spin)) in samples.iter().enumerate() {
                writeln!(s, "sample,{i},{},{spin}", fmt_f(*kg)).unwrap();
            }
            s
        }
        Format::Json => to_json(&json!({
            "N": sites,
            "energies": spectrum.multiplets().iter()
                .map(|m| json!({"S": m.spin(), "E_B": num(m.energy())}))
                .collect::<Vec<_>>(),
            "alphas": alphas.iter().map(|a| num(*a)).collect::<Vec<_>>(),
            "coincident": diagram.coincident_crossings(),
            "samples": samples.iter()
                .map(|(kg, spin)| json!({"k_over_g": num(*kg), "ground_S": spin}))
                .collect::<Vec<_>>(),
        })),
    };
    Ok(single(cfg, contents))
}

fn file_stem(state: &StarEigenstate) -> String {
    format!(
        "p_S{}_M{}_{}",
        state.spin().value(),
        state.m().value(),
        state.branch()
    )
}

pub fn distributions(cfg: &RunConfig) -> Result<Vec<Output>> {
    if cfg.spins.is_empty() {
        return Err(Error::Usage("distributions needs --S".into()));
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let format = cfg.format.unwrap_or(Format::Csv);
    let grid = uniform_grid(cfg.grid);
    let mut outputs = Vec::new();
    for &spin in &cfg.spins {
        let state = eigenstate(spin, cfg.sector_m(spin)?, cfg.branch)?;
        let dist = p_distribution(&state, &grid)?;
        let big: Vec<f64> = grid
            .iter()
            .map(|&t| theta_map(&state, t, Endpoints::Limit))
            .collect::<Result<_>>()?;
        let pi_vals = bloch_distribution(&state, &grid)?;
        let cond = conditional_up(&state, &grid)?;
        let meta = [
            ("S", spin.to_string()),
            ("M", state.m().to_string()),
            ("M_over_Stilde", fmt_f(state.cos_vartheta())),
            ("vartheta", fmt_f(state.vartheta())),
            ("branch", state.branch().to_string()),
            ("integral", fmt_f(dist.integral)),
            ("mean", fmt_f(dist.mean)),
            ("mode", fmt_f(dist.mode)),
            ("std", fmt_f(dist.std)),
        ];
        let (ext, contents) = match format {
            Format::Csv => {
                let mut s = String::from("# distributions\n");
                for (k, v) in &meta {
                    writeln!(s, "# {k}={v}").unwrap();
                }
                writeln!(s, "# pi is sampled at Theta equal to the theta column").unwrap();
                writeln!(s, "theta,p,Theta,pi,y_up,y_down").unwrap();
                for i in 0..grid.len() {
                    let row = [
                        grid[i],
                        dist.values[i],
                        big[i],
                        pi_vals[i],
                        cond.up[i],
                        cond.down[i],
                    ];
                    let cells: Vec<String> = row.iter().map(|x| fmt_f(*x)).collect();
                    writeln!(s, "{}", cells.join(",")).unwrap();
                }
                ("csv", s)
            }
            Format::Json => {
                let mut obj = serde_json::Map::new();
                for (k, v) in &meta {
                    obj.insert(k.to_string(), Value::String(v.clone()));
                }
                let col = |xs: &[f64]| Value::Array(xs.iter().map(|x| num(*x)).collect());
                obj.insert("theta".into(), col(&grid));
                obj.insert("p".into(), col(&dist.values));
                obj.insert("Theta".into(), col(&big));
                obj.insert("pi".into(), col(&pi_vals));
                obj.insert("y_up".into(), col(&cond.up));
                obj.insert("y_down".into(), col(&cond.down));
                ("json", to_json(&Value::Object(obj)))
            }
        };
        outputs.push(Output {
            path: Some(dir.join(format!("{}.{ext}", file_stem(&state)))),
            contents,
        });
    }
    Ok(outputs)
}

/// Spins used by `crossover` when `--S` is absent.
pub const DEFAULT_CROSSOVER_SPINS: [i32; 5] = [5, 16, 27, 38, 49];

pub fn crossover(cfg: &RunConfig) -> Result<Vec<Output>> {
    let ratio = cfg
        .m_ratio
        .ok_or_else(|| Error::Usage("crossover needs --M-ratio".into()))?;
    let spins: Vec<HalfInt> = if cfg.spins.is_empty() {
        DEFAULT_CROSSOVER_SPINS
            .iter()
            .map(|&s| HalfInt::from_int(s))
            .collect()
    } else {
        cfg.spins.clone()
    };
    let table = delta_collapse_diagnostics(&spins, ratio, cfg.branch, cfg.grid)?;
    let classical = ratio.acos();
    let contents = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("# crossover\n");
            writeln!(s, "# target_M_over_Stilde={}", fmt_f(ratio)).unwrap();
            writeln!(s, "# branch={}", cfg.branch).unwrap();
            writeln!(s, "# grid={}", cfg.grid).unwrap();
            writeln!(s, "S,M,M_over_Stilde,vartheta,mode,std,shift").unwrap();
            for r in &table.rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.spin,
                    r.m,
                    fmt_f(r.ratio),
                    fmt_f(r.vartheta),
                    fmt_f(r.mode),
                    fmt_f(r.std),
                    fmt_f(r.shift)
                )
                .unwrap();
            }
            writeln!(
                s,
                "inf,,{},{},{},{},{}",
                fmt_f(ratio),
                fmt_f(classical),
                fmt_f(classical),
                fmt_f(0.0),
                fmt_f(0.0)
            )
            .unwrap();
            s
        }
        Format::Json => to_json(&json!({
            "target_M_over_Stilde": num(ratio),
            "branch": cfg.branch.label(),
            "rows": table.rows.iter().map(|r| json!({
                "S": r.spin.to_string(),
                "M": r.m.to_string(),
                "M_over_Stilde": num(r.ratio),
                "vartheta": num(r.vartheta),
                "mode": num(r.mode),
                "std": num(r.std),
                "shift": num(r.shift),
            })).collect::<Vec<_>>(),
            "classical": {"vartheta": num(classical), "mode": num(classical), "std": num(0.0), "shift": num(0.0)},
        })),
    };
    Ok(single(cfg, contents))
}

pub fn berry(cfg: &RunConfig) -> Result<Vec<Output>> {
    let spin = cfg.single_spin()?;
    let m = match (cfg.m, cfg.m_ratio) {
        (Some(m), _) => m,
        // both latitude phases are reported, so resolve on the wider branch
        (None, Some(r)) => resolve_m(spin, r, Branch::Plus)?,
        (None, None) => return Err(Error::Usage("missing --M or --M-ratio".into())),
    };
    let id = entanglement_phase_identity(spin, m, cfg.loop_points)?;
    let contents = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&json!({
            "gamma_plus": num(id.gamma_plus),
            "gamma_minus": num(id.gamma_minus),
            "entanglement": num(id.entanglement),
            "residual": num(id.residual),
            "K": id.points,
        })),
        Format::Csv => format!(
            "# berry\n# S={spin}\n# M={m}\ngamma_plus,gamma_minus,entanglement,residual,K\n{},{},{},{},{}\n",
            fmt_f(id.gamma_plus),
            fmt_f(id.gamma_minus),
            fmt_f(id.entanglement),
            fmt_f(id.residual),
            id.points
        ),
    };
    Ok(single(cfg, contents))
}

fn check(report: &mut String, failures: &mut Vec<(f64, f64)>, name: &str, residual: f64, tol: f64) {
    let ok = residual <= tol;
    writeln!(
        report,
        "{} {name} residual={} tol={}",
        if ok { "ok" } else { "FAIL" },
        fmt_f(residual),
        fmt_f(tol)
    )
    .unwrap();
    if !ok {
        failures.push((residual, tol));
    }
}

/// Small ring, dense oracle, Husimi identity, normalization and the phase
/// identity. Fails with a numerical error if any check misses.
pub fn selftest(cfg: &RunConfig) -> Result<Vec<Output>> {
    let sites = cfg.sites.unwrap_or(4);
    let model = StarModel::new(RingConfig::new(sites, cfg.k)?, cfg.g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = String::new();
    let mut failures = Vec::new();

    let diagram = critical_ratios(model.spectrum())?;
    let alpha0 = if sites >= 4 {
        (diagram.alphas()[0] - 0.25).abs()
    } else {
        0.0
    };
    check(&mut report, &mut failures, "alpha_0", alpha0, 1e-10);

    let mut worst_residual: f64 = 0.0;
    let mut worst_husimi: f64 = 0.0;
    for spin in 1..=sites / 2 {
        let spin_h = HalfInt::from_int(spin as i32);
        let ladder = model.ring_ladder(spin)?;
        for m_twice in (-(2 * spin as i32) - 1..=2 * spin as i32 + 1).step_by(2) {
            for branch in [Branch::Plus, Branch::Minus] {
                let Ok(state) = eigenstate(spin_h, HalfInt::from_twice(m_twice), branch) else {
                    continue;
                };
                let dense = match model.build_dense_eigenstate(&state) {
                    Ok(d) => d,
                    Err(Error::OracleMismatch { residual, .. }) => {
                        worst_residual = worst_residual.max(residual);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                worst_residual = worst_residual.max(model.residual(&dense, model.energy(&state)?));
                let rho = dense.reduced_ring(&ladder);
                let theta = rng.random_range(0.0..std::f64::consts::PI);
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let q = husimi_q(&rho, &CoherentPoint::new(spin_h, theta, phi)?)?;
                let lhs = state.s_tilde() * theta.sin() * q;
                worst_husimi = worst_husimi.max((lhs - p_density(&state, theta)).abs());
            }
        }
    }
    check(
        &mut report,
        &mut failures,
        "eigenstate_oracle",
        worst_residual,
        1e-8,
    );
    check(
        &mut report,
        &mut failures,
        "husimi_identity",
        worst_husimi,
        1e-10,
    );

    let spin = HalfInt::from_int(5);
    let state = eigenstate(
        spin,
        resolve_m(spin, 9.0 / 11.0, Branch::Minus)?,
        Branch::Minus,
    )?;
    let dist = p_distribution(&state, &uniform_grid(cfg.grid))?;
    check(
        &mut report,
        &mut failures,
        "normalization",
        (dist.integral - 1.0).abs(),
        1e-8,
    );

    let quad = match cfg.quad_order {
        Some(order) => {
            SphereQuadrature::new(spin, order, SphereQuadrature::default_orders(spin).1)?
        }
        None => SphereQuadrature::for_spin(spin),
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let sigma_z = Matrix2::new(one, zero, zero, -one);
    let sz = expectation(&state, &sigma_z, &quad)?;
    check(
        &mut report,
        &mut failures,
        "sigma_z",
        (sz - (state.a().powi(2) - state.b().powi(2))).abs(),
        1e-10,
    );

    let id = entanglement_phase_identity(spin, HalfInt::from_twice(9), cfg.loop_points)?;
    check(
        &mut report,
        &mut failures,
        "phase_identity",
        id.residual,
        1e-6,
    );

    let outputs = single(cfg, report);
    match failures.into_iter().next() {
        None => Ok(outputs),
        Some((residual, tol)) => {
            emit(&outputs)?;
            Err(Error::OracleMismatch { residual, tol })
        }
    }
}

pub fn execute(kind: CommandKind, cfg: &RunConfig) -> Result<Vec<Output>> {
    match kind {
        CommandKind::PhaseDiagram => phase_diagram(cfg),
        CommandKind::Distributions => distributions(cfg),
        CommandKind::Crossover => crossover(cfg),
        CommandKind::Berry => berry(cfg),
        CommandKind::Selftest => selftest(cfg),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Writes files, prints the rest to stdout.
pub fn emit(outputs: &[Output]) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for out in outputs {
        match &out.path {
            Some(path) => write_file(path, &out.contents)?,
            None => lock.write_all(out.contents.as_bytes())?,
        }
    }
    lock.flush()?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let (kind, flags) = cli.command.split();
    let cfg = RunConfig::from_flags(&flags)?;
    let outputs = execute(kind, &cfg)?;
    emit(&outputs)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args`, runs, and returns the process exit code. Diagnostics go to
/// stderr as a single `error[kind]: message` line.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!(
                "error[usage]: {}",
                one_line(first.trim_start_matches("error: "))
            );
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
