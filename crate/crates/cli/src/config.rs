//! Flat `key = value` run configuration, validated against a per-command schema.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Lemmas,
    Resonance,
    Growth,
    Solve,
    Crosscheck,
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lemmas => "lemmas",
            Command::Resonance => "resonance",
            Command::Growth => "growth",
            Command::Solve => "solve",
            Command::Crosscheck => "crosscheck",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Float,
    Int,
    Text,
    FloatList,
    /// `a..b` (exponents of two) or an explicit list of `N`.
    Ladder,
    OneOf(&'static [&'static str]),
}

#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Key {
    Key { name, kind, default, help }
}

const SEED: Key = key("seed", Kind::Int, "42", "RNG seed");

const LEMMAS: &[Key] = &[
    SEED,
    key("lemmas", Kind::Text, "all", "comma list of lemma names, or all"),
    key("samples", Kind::Int, "200", "draws per exponent"),
    key("rho", Kind::Text, "default", "comma list of exponents, or default"),
];

const RESONANCE: &[Key] = &[
    SEED,
    key("alpha", Kind::Float, "4", "must be 4"),
    key("beta", Kind::Float, "-3", "first-order coefficient"),
    key("n", Kind::Float, "4096", "frequency scale N"),
    key("eta1_band", Kind::FloatList, "1,2", "eta1 range in units of N"),
    key("eta2_mode", Kind::OneOf(&["absolute", "strip"]), "strip", "second axis: eta2 or z = 2 eta2 + eta1"),
    key("eta2_band", Kind::FloatList, "-4,4", "second-axis range"),
    key("samples", Kind::FloatList, "256,1025", "cells per axis"),
    key("thresholds", Kind::FloatList, "10", "sublevel thresholds K"),
];

const GROWTH: &[Key] = &[
    SEED,
    key("construction", Kind::OneOf(&["beta-positive", "beta-negative", "beta-zero", "general-alpha"]), "beta-positive", "bump construction"),
    key("alpha", Kind::Text, "auto", "dispersion ratio, or auto"),
    key("beta", Kind::Text, "auto", "first-order coefficient, or auto"),
    key("s", Kind::FloatList, "0", "Sobolev exponents"),
    key("t", Kind::Float, "0.05", "time of the iterate"),
    key("ladder", Kind::Ladder, "8..16", "N ladder"),
    key("npb", Kind::Int, "64", "quadrature nodes per bump width"),
];

const SOLVER_KEYS: [Key; 13] = [
    SEED,
    key("alpha", Kind::Float, "4", "v dispersion coefficient"),
    key("beta", Kind::Float, "3", "v first-order coefficient"),
    key("beta1", Kind::Float, "0", "u first-order coefficient"),
    key("l", Kind::Float, "64pi", "period (a trailing pi multiplies by pi)"),
    key("m", Kind::Int, "256", "grid points"),
    key("dt", Kind::Float, "0.001", "time step"),
    key("u_amp", Kind::Float, "1", "u Gaussian amplitude"),
    key("u_center", Kind::Float, "0", "u Gaussian centre"),
    key("u_width", Kind::Float, "8", "u Gaussian: exp(-(x-c)^2/width)"),
    key("v_amp", Kind::Float, "0.8", "v Gaussian amplitude"),
    key("v_center", Kind::Float, "3", "v Gaussian centre"),
    key("v_width", Kind::Float, "8", "v Gaussian width"),
];

fn solve_keys() -> Vec<Key> {
    let mut v = SOLVER_KEYS.to_vec();
    v.push(key("v_k", Kind::Float, "0", "v modulation wavenumber"));
    v.push(key("t_final", Kind::Float, "1", "final time"));
    v.push(key("samples", Kind::Int, "10", "diagnostic samples after t = 0"));
    v
}

fn crosscheck_keys() -> Vec<Key> {
    let mut v = SOLVER_KEYS.to_vec();
    v.push(key("v_k", Kind::Float, "0.7", "v modulation wavenumber"));
    v.push(key("t", Kind::Float, "0.5", "comparison time"));
    v.push(key("deltas", Kind::FloatList, "0.1,0.03,0.01,0.003,0.001", "amplitude ladder"));
    v
}

const REPORT: &[Key] = &[SEED, key("runs", Kind::Text, "", "directory holding growth runs")];

pub fn schema(c: Command) -> Vec<Key> {
    match c {
        Command::Lemmas => LEMMAS.to_vec(),
        Command::Resonance => RESONANCE.to_vec(),
        Command::Growth => GROWTH.to_vec(),
        Command::Solve => solve_keys(),
        Command::Crosscheck => crosscheck_keys(),
        Command::Report => REPORT.to_vec(),
    }
}

/// Parses a float, accepting a trailing `pi`.
pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.strip_suffix("pi") {
        Some("") => PI,
        Some(m) => m.trim().parse::<f64>().ok()? * PI,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(parse_float).collect()
}

pub fn parse_ladder(s: &str) -> Option<Vec<f64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (i32, i32) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        if a > b || a < 1 || b > 30 {
            return None;
        }
        return Some((a..=b).map(|k| 2f64.powi(k)).collect());
    }
    parse_list(s)
}

fn check(k: &Key, v: &str) -> Result<(), String> {
    let ok = match k.kind {
        Kind::Float => parse_float(v).is_some(),
        Kind::Int => v.trim().parse::<u64>().is_ok(),
        Kind::Text => true,
        Kind::FloatList => parse_list(v).is_some(),
        Kind::Ladder => parse_ladder(v).is_some(),
        Kind::OneOf(opts) => opts.contains(&v),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("invalid value for key '{}': '{v}' ({})", k.name, k.help))
    }
}

/// Resolved configuration: every schema key with its value.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub parameters: BTreeMap<String, String>,
}

fn parse_pair(line: &str) -> Result<(String, String), String> {
    let (k, v) = line.split_once('=').ok_or_else(|| format!("expected key=value, got '{line}'"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty key in '{line}'"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Merges file text, then `--set` overrides, then `--seed`, and
    /// validates the result.
    pub fn build(command: Command, text: &str, sets: &[String], seed: Option<u64>) -> Result<RunConfig, String> {
        let keys = schema(command);
        let mut given: BTreeMap<String, String> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = parse_pair(line).map_err(|e| format!("line {}: {e}", no + 1))?;
            if given.insert(k.clone(), v).is_some() {
                return Err(format!("line {}: duplicate key '{k}'", no + 1));
            }
        }
        for s in sets {
            let (k, v) = parse_pair(s)?;
            given.insert(k, v);
        }
        if let Some(s) = seed {
            given.insert("seed".into(), s.to_string());
        }
        let unknown: Vec<&String> = given.keys().filter(|k| !keys.iter().any(|s| s.name == k.as_str())).collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(format!("unknown key(s) for {}: {}", command.name(), names.join(", ")));
        }
        let mut parameters = BTreeMap::new();
        for k in &keys {
            let v = given.remove(k.name).unwrap_or_else(|| k.default.to_string());
            check(k, &v)?;
            parameters.insert(k.name.to_string(), v);
        }
        Ok(RunConfig { command, parameters })
    }

    fn raw(&self, k: &str) -> &str {
        self.parameters.get(k).map(String::as_str).unwrap_or_else(|| panic!("key '{k}' not in schema"))
    }

    pub fn text(&self, k: &str) -> &str {
        self.raw(k)
    }

    pub fn float(&self, k: &str) -> f64 {
        parse_float(self.raw(k)).expect("validated")
    }

    pub fn int(&self, k: &str) -> u64 {
        self.raw(k).trim().parse().expect("validated")
    }

    pub fn list(&self, k: &str) -> Vec<f64> {
        parse_list(self.raw(k)).expect("validated")
    }

    pub fn ladder(&self, k: &str) -> Vec<f64> {
        parse_ladder(self.raw(k)).expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }
}
