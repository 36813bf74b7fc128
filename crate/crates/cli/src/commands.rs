//! One function per command. Each returns its files and the names of the
//! pass criteria that failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mb_lab::constants::{c_emp, CALIBRATION_SAMPLES, CALIBRATION_SEED, C_EMP_HEADROOM};
use mb_lab::fit::{linear_fit, zero_crossing};
use mb_lab::oscillatory::{ratio_scan, Lemma};
use mb_lab::picard::{growth_fit, predicted_exponent, Construction, ConstructionId};
use mb_lab::resonance::{beta_zero_strip_measure, trichotomy_scan, Eta2Band, RegionSpec};
use mb_lab::solver::{integrate, picard_crosscheck, GridSpec, SolverParams, SpectralState};
use mb_lab::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::output::{csv, num};
use crate::svg::{render, Chart};

pub const THRESHOLD_TOL: f64 = 0.05;
const MASS_TOL: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-6;
const HAMILTONIAN_TOL: f64 = 1e-5;
const PSI2_ZERO_TOL: f64 = 1e-12;
const CROSSCHECK_SLOPE_TOL: f64 = 0.3;

#[derive(Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn file(&mut self, name: &str, data: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), data.into()));
    }

    fn json(&mut self, name: &str, v: &impl Serialize) {
        let mut t = serde_json::to_vec_pretty(v).expect("serializable");
        t.push(b'\n');
        self.file(name, t);
    }

    fn criterion(&mut self, name: String, ok: bool) {
        if !ok {
            self.failures.push(name);
        }
    }
}

pub enum Failure {
    /// Bad parameters; exit status 2.
    Usage(String),
    /// Numerical failure inside the named criterion; exit status 1.
    Numeric { criterion: String, message: String },
}

fn numeric(criterion: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Precondition(m) => Failure::Usage(m),
        e => Failure::Numeric { criterion: criterion.to_string(), message: e.to_string() },
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, Failure> {
    match cfg.command {
        Command::Lemmas => lemmas(cfg),
        Command::Resonance => resonance(cfg),
        Command::Growth => growth(cfg),
        Command::Solve => solve(cfg),
        Command::Crosscheck => crosscheck(cfg),
        Command::Report => report(cfg),
    }
}

fn lemmas(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let names = cfg.text("lemmas");
    let list: Vec<Lemma> = if names == "all" {
        Lemma::ALL.to_vec()
    } else {
        names
            .split(',')
            .map(|n| Lemma::parse(n.trim()).ok_or_else(|| Failure::Usage(format!("unknown lemma '{n}'"))))
            .collect::<Result<_, _>>()?
    };
    let rho_override = match cfg.text("rho") {
        "default" => None,
        r => Some(crate::config::parse_list(r).ok_or_else(|| Failure::Usage(format!("invalid rho list '{r}'")))?),
    };
    let seed = cfg.seed();
    let samples = cfg.int("samples") as usize;
    let calibration = seed == CALIBRATION_SEED && samples == CALIBRATION_SAMPLES;
    let cap = if calibration { 1.0 } else { C_EMP_HEADROOM };
    let mut out = Outcome::default();
    let mut rows = vec![];
    let mut summary = vec![];
    let mut json_rows = vec![];
    for l in list {
        let grid = rho_override.clone().unwrap_or_else(|| l.default_rho_grid().to_vec());
        let scans = ratio_scan(l, &grid, samples, seed).map_err(numeric("lemma-oracle"))?;
        for sc in scans {
            for r in &sc.rows {
                rows.push(vec![
                    l.name().into(),
                    num(sc.rho),
                    r.index.to_string(),
                    num(r.report.integral),
                    num(r.report.bound),
                    num(r.report.ratio),
                ]);
            }
            let frozen = c_emp(l, sc.rho);
            let limit = frozen.map(|c| c * cap);
            let pass = limit.is_none_or(|c| sc.max.report.ratio <= c);
            if limit.is_some() {
                out.criterion(format!("lemma-oracle:{}:rho={}", l.name(), sc.rho), pass);
            }
            summary.push(vec![
                l.name().into(),
                num(sc.rho),
                num(sc.max.report.ratio),
                num(sc.refined.report.ratio),
                num(frozen.unwrap_or(f64::NAN)),
                num(limit.unwrap_or(f64::NAN)),
                (pass as u8).to_string(),
            ]);
            json_rows.push(json!({
                "lemma": l.name(), "rho": sc.rho, "max": sc.max, "refined": sc.refined,
                "c_emp": frozen, "cap": limit, "pass": pass,
            }));
        }
    }
    out.file("lemmas.csv", csv(&["lemma", "rho", "draw", "integral", "bound", "ratio"], rows));
    out.file(
        "lemmas_summary.csv",
        csv(&["lemma", "rho", "max_ratio", "refined_ratio", "c_emp", "cap", "pass"], summary),
    );
    out.json("lemmas.json", &json!({ "seed": seed, "samples": samples, "scans": json_rows }));
    Ok(out)
}

fn pair(cfg: &RunConfig, k: &str) -> Result<(f64, f64), Failure> {
    match cfg.list(k)[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Failure::Usage(format!("key '{k}' needs exactly two values"))),
    }
}

fn resonance(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let p = mb_lab::dispersion::PhaseParams::new(cfg.float("alpha"), cfg.float("beta")).map_err(numeric("resonance"))?;
    let n = cfg.float("n");
    let (lo, hi) = pair(cfg, "eta2_band")?;
    let (s1, s2) = pair(cfg, "samples")?;
    if s1.fract() != 0.0 || s2.fract() != 0.0 || s1 < 1.0 || s2 < 1.0 {
        return Err(Failure::Usage("samples must be positive integers".into()));
    }
    let region = RegionSpec {
        n,
        eta1_band: pair(cfg, "eta1_band")?,
        eta2_band: if cfg.text("eta2_mode") == "strip" { Eta2Band::StripOffset { lo, hi } } else { Eta2Band::Absolute { lo, hi } },
        samples: (s1 as usize, s2 as usize),
    };
    let ks = cfg.list("thresholds");
    let r = trichotomy_scan(&p, &region, &ks).map_err(numeric("resonance"))?;
    let mut out = Outcome::default();
    let reference: Vec<f64> = ks.iter().map(|&k| beta_zero_strip_measure(n, k)).collect();
    let checks = if p.beta < 0.0 {
        let floor = 1.0 + p.beta.abs() * n;
        out.criterion("trichotomy-negative:min".into(), r.min_bracket_g >= floor);
        json!({ "floor": floor, "min": r.min_bracket_g })
    } else if p.beta == 0.0 {
        for ((k, m), want) in r.measure_below.iter().zip(&reference) {
            out.criterion(format!("trichotomy-zero:K={k}"), *m <= 2.0 * want && *m >= want / 2.0);
        }
        json!({ "strip_measure": reference })
    } else {
        out.criterion("trichotomy-positive:both-small".into(), r.both_factors_small == 0);
        json!({ "both_factors_small": r.both_factors_small })
    };
    let rows = r.measure_below.iter().zip(&reference).map(|((k, m), s)| vec![num(*k), num(*m), num(*s)]);
    out.file("resonance.csv", csv(&["threshold", "measure", "strip_measure"], rows));
    out.json("resonance.json", &json!({ "region": region, "scan": r, "checks": checks }));
    Ok(out)
}

fn auto(cfg: &RunConfig, k: &str, default: f64) -> Result<f64, Failure> {
    match cfg.text(k) {
        "auto" => Ok(default),
        v => crate::config::parse_float(v).ok_or_else(|| Failure::Usage(format!("invalid value for key '{k}': '{v}'"))),
    }
}

/// Root of the predicted exponent in `s`.
pub fn predicted_threshold(kind: Construction) -> f64 {
    let (a, b) = (predicted_exponent(kind, 0.0), predicted_exponent(kind, 1.0));
    a / (a - b)
}

fn growth(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let kind = Construction::parse(cfg.text("construction")).expect("validated");
    let (a0, b0) = match kind {
        Construction::BetaPositive => (4.0, 3.0),
        Construction::BetaNegative => (4.0, -3.0),
        Construction::BetaZero => (4.0, 0.0),
        Construction::GeneralAlpha => (2.0, 1.0),
    };
    let (alpha, beta) = (auto(cfg, "alpha", a0)?, auto(cfg, "beta", b0)?);
    let ss = cfg.list("s");
    let t = cfg.float("t");
    let ladder = cfg.ladder("ladder");
    let npb = cfg.int("npb") as usize;
    let fits = ss
        .par_iter()
        .map(|&s| {
            let c = ConstructionId::new(kind, alpha, beta, s, ladder[0])?;
            growth_fit(&c, t, &ladder, npb)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(numeric("growth"))?;
    let mut out = Outcome::default();
    let mut rows = vec![];
    let mut fit_rows = vec![];
    for f in &fits {
        let s = f.construction.s;
        out.criterion(format!("growth-slope:{}:s={s}", kind.name()), f.pass);
        for p in &f.ladder {
            rows.push(vec![num(s), num(p.n), num(p.norm), num(p.max_node_spacing)]);
        }
        fit_rows.push(vec![num(s), num(f.slope), num(f.intercept), num(f.residual), num(f.predicted), (f.pass as u8).to_string()]);
    }
    let threshold = if ss.len() >= 2 {
        let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
        let line = linear_fit(&ss, &slopes).map_err(numeric("threshold"))?;
        let star = zero_crossing(&line);
        let want = predicted_threshold(kind);
        out.criterion(format!("threshold:{}", kind.name()), star.is_some_and(|x| (x - want).abs() <= THRESHOLD_TOL));
        Some(json!({ "s_star": star, "predicted": want }))
    } else {
        None
    };
    let data = csv(&["s", "n", "norm", "max_node_spacing"], rows);
    let reference = (ss.len() == 1).then(|| predicted_exponent(kind, ss[0]));
    let title = format!("{} windowed iterate norm", kind.name());
    let chart = Chart { title: &title, x: "n", y: &["norm"], group: Some("s"), reference };
    let svg = render(&data, &chart).map_err(|m| Failure::Numeric { criterion: "growth-plot".into(), message: m })?;
    out.file("growth.csv", data);
    out.file("growth_fit.csv", csv(&["s", "slope", "intercept", "residual", "predicted", "pass"], fit_rows));
    out.file("growth.svg", svg);
    out.json("growth.json", &json!({ "fits": fits, "threshold": threshold }));
    Ok(out)
}

fn solver_setup(cfg: &RunConfig, t_final: f64) -> Result<(GridSpec, SolverParams, SpectralState), Failure> {
    let grid = GridSpec::new(cfg.float("l"), cfg.int("m") as usize).map_err(numeric("grid"))?;
    let params = SolverParams::new(cfg.float("beta1"), cfg.float("alpha"), cfg.float("beta"), cfg.float("dt"), t_final)
        .map_err(numeric("solver"))?;
    params.check(&grid).map_err(numeric("stability"))?;
    let g = |a: f64, c: f64, w: f64| move |x: f64| a * (-(x - c).powi(2) / w).exp();
    let u = g(cfg.float("u_amp"), cfg.float("u_center"), cfg.float("u_width"));
    let v = g(cfg.float("v_amp"), cfg.float("v_center"), cfg.float("v_width"));
    let k = cfg.float("v_k");
    let s0 = SpectralState::from_fn(&grid, u, |x| v(x) * (k * x).cos()).map_err(numeric("initial-data"))?;
    Ok((grid, params, s0))
}

fn rel(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        (b - a).abs()
    } else {
        ((b - a) / a).abs()
    }
}

fn solve(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let t_final = cfg.float("t_final");
    let (grid, params, s0) = solver_setup(cfg, t_final)?;
    let steps = (t_final / params.dt).round() as u64;
    let samples = cfg.int("samples").max(1);
    let mut times = vec![0.0];
    for i in 1..=samples {
        times.push((steps * i / samples) as f64 * params.dt);
    }
    times.dedup();
    let tr = integrate(&grid, &s0, &params, &times).map_err(numeric("solve"))?;
    let d = &tr.diagnostics;
    let (first, last) = (d[0], d[d.len() - 1]);
    let mass = rel(first.mass_u, last.mass_u).max(rel(first.mass_v, last.mass_v));
    let energy = rel(first.l2_energy, last.l2_energy);
    let ham = rel(first.hamiltonian, last.hamiltonian);
    let mut out = Outcome::default();
    out.criterion("mass-conservation".into(), mass <= MASS_TOL);
    out.criterion("energy-drift".into(), energy <= ENERGY_TOL);
    out.criterion("hamiltonian-drift".into(), ham <= HAMILTONIAN_TOL);
    let rows = d.iter().map(|x| vec![num(x.time), num(x.mass_u), num(x.mass_v), num(x.l2_energy), num(x.hamiltonian)]);
    out.file("diagnostics.csv", csv(&["time", "mass_u", "mass_v", "l2_energy", "hamiltonian"], rows));
    let (u, v) = tr.states.last().expect("samples").to_fields(&grid);
    let rows = grid.x().into_iter().zip(u).zip(v).map(|((x, u), v)| vec![num(x), num(u), num(v)]);
    out.file("fields.csv", csv(&["x", "u", "v"], rows));
    out.json(
        "solve.json",
        &json!({
            "grid": grid, "params": params, "steps": steps,
            "stability_number": params.stability_number(&grid),
            "drift": { "mass": mass, "l2_energy": energy, "hamiltonian": ham },
            "initial": first, "final": last,
        }),
    );
    Ok(out)
}

fn crosscheck(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let t = cfg.float("t");
    let (grid, params, s0) = solver_setup(cfg, t)?;
    let deltas = cfg.list("deltas");
    let r = picard_crosscheck(&grid, &s0, &params, &deltas, t).map_err(numeric("duhamel-consistency"))?;
    let mut out = Outcome::default();
    if cfg.float("u_amp") == 0.0 {
        out.criterion("psi2-vanishes".into(), r.psi2_max <= PSI2_ZERO_TOL);
        out.criterion("duhamel-slope-v".into(), (r.slope_v - 3.0).abs() <= CROSSCHECK_SLOPE_TOL);
    } else {
        out.criterion("duhamel-slope".into(), r.pass);
    }
    let rows = (0..deltas.len()).map(|i| vec![num(r.deltas[i]), num(r.residual_u[i]), num(r.residual_v[i])]);
    let data = csv(&["delta", "residual_u", "residual_v"], rows);
    let chart = Chart { title: "Duhamel residuals", x: "delta", y: &["residual_u", "residual_v"], group: None, reference: Some(3.0) };
    let svg = render(&data, &chart).map_err(|m| Failure::Numeric { criterion: "crosscheck-plot".into(), message: m })?;
    out.file("crosscheck.csv", data);
    out.file("crosscheck.svg", svg);
    out.json("crosscheck.json", &r);
    Ok(out)
}

/// `(kind, alpha, beta)` to `(s, slope)` pairs.
type SlopeTable = BTreeMap<(String, String, String), Vec<(f64, f64)>>;

/// Slopes from every growth.json under `dir`.
fn collect_growth(dir: &Path) -> Result<SlopeTable, Failure> {
    let mut found = BTreeMap::new();
    let mut dirs = vec![dir.to_path_buf()];
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Failure::Usage(format!("cannot read runs directory {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    dirs.extend(entries);
    for d in dirs {
        let path = d.join("growth.json");
        let Ok(text) = fs::read_to_string(&path) else { continue };
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Numeric { criterion: "report".into(), message: format!("{}: {e}", path.display()) })?;
        for f in v["fits"].as_array().into_iter().flatten() {
            let c = &f["construction"];
            let (Some(kind), Some(a), Some(b), Some(s), Some(m)) =
                (c["kind"].as_str(), c["alpha"].as_f64(), c["beta"].as_f64(), c["s"].as_f64(), f["slope"].as_f64())
            else {
                return Err(Failure::Numeric { criterion: "report".into(), message: format!("{}: malformed fit", path.display()) });
            };
            found.entry((kind.to_string(), a.to_string(), b.to_string())).or_insert_with(Vec::new).push((s, m));
        }
    }
    Ok(found)
}

fn report(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let runs = cfg.text("runs");
    if runs.is_empty() {
        return Err(Failure::Usage("report needs key 'runs'".into()));
    }
    let groups = collect_growth(Path::new(runs))?;
    if groups.is_empty() {
        return Err(Failure::Usage(format!("no growth.json found under {runs}")));
    }
    let mut out = Outcome::default();
    let mut rows = vec![];
    let mut items = vec![];
    for ((kind, a, b), mut pts) in groups {
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        pts.dedup_by(|x, y| x.0 == y.0);
        let want = Construction::parse(&kind).map(predicted_threshold);
        let ss: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ms: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let star = if pts.len() >= 2 { linear_fit(&ss, &ms).ok().and_then(|l| zero_crossing(&l)) } else { None };
        let pass = match (star, want) {
            (Some(x), Some(w)) => {
                let ok = (x - w).abs() <= THRESHOLD_TOL;
                out.criterion(format!("threshold:{kind}:alpha={a}:beta={b}"), ok);
                Some(ok)
            }
            _ => None,
        };
        rows.push(vec![
            kind.clone(),
            a.clone(),
            b.clone(),
            pts.len().to_string(),
            num(star.unwrap_or(f64::NAN)),
            num(want.unwrap_or(f64::NAN)),
            pass.map_or("".into(), |p| (p as u8).to_string()),
        ]);
        items.push(json!({
            "construction": kind, "alpha": a.parse::<f64>().ok(), "beta": b.parse::<f64>().ok(),
            "points": pts, "s_star": star, "predicted": want, "pass": pass,
        }));
    }
    out.file("report.csv", csv(&["construction", "alpha", "beta", "n_s", "s_star", "predicted_s_star", "pass"], rows));
    out.json("report.json", &json!({ "thresholds": items }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_thresholds() {
        assert_eq!(predicted_threshold(Construction::BetaPositive), 0.5);
        assert_eq!(predicted_threshold(Construction::BetaNegative), 0.25);
        assert_eq!(predicted_threshold(Construction::BetaZero), 0.75);
        assert_eq!(predicted_threshold(Construction::GeneralAlpha), 0.0);
    }
}
