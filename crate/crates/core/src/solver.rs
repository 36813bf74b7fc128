//! Integrating-factor RK4 pseudospectral solver for
//!
//! ```text
//! u_t + u_xxx + b1 u_x = -v v_x
//! v_t + a v_xxx + b  v_x = -(u v)_x
//! ```
//!
//! on a periodic box. Coefficients are stored as `FFT(f) / M`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dispersion::PhaseParams;
use crate::error::{pre, Error, Result};
use crate::fit::loglog_fit;
use crate::quadrature::gauss_legendre;

/// Largest `dt * max |phi'|` accepted over the retained band.
pub const STABILITY_LIMIT: f64 = 2.8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub l: f64,
    pub m: usize,
}

impl GridSpec {
    pub fn new(l: f64, m: usize) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return pre("box length must be positive");
        }
        if m < 64 || !m.is_power_of_two() {
            return pre("mode count must be a power of two, at least 64");
        }
        Ok(GridSpec { l, m })
    }

    /// Signed mode index of FFT slot `i`.
    #[inline]
    pub fn index(&self, i: usize) -> i64 {
        if i < self.m / 2 {
            i as i64
        } else {
            i as i64 - self.m as i64
        }
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.m).map(|i| 2.0 * PI * self.index(i) as f64 / self.l).collect()
    }

    pub fn x(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.l * i as f64 / self.m as f64 - self.l / 2.0).collect()
    }

    /// Retained by the 2/3 rule.
    #[inline]
    pub fn kept(&self, i: usize) -> bool {
        3 * self.index(i).unsigned_abs() < self.m as u64
    }

    /// Largest retained wavenumber.
    pub fn k_max(&self) -> f64 {
        let j = (self.m as f64 / 3.0).ceil() - 1.0;
        2.0 * PI * j / self.l
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralState {
    pub u_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
    pub time: f64,
}

impl SpectralState {
    pub fn zeros(grid: &GridSpec) -> Self {
        SpectralState { u_hat: vec![ZERO; grid.m], v_hat: vec![ZERO; grid.m], time: 0.0 }
    }

    /// From real samples on `grid.x()`; projected onto the retained band.
    pub fn from_fields(grid: &GridSpec, u: &[f64], v: &[f64]) -> Result<Self> {
        if u.len() != grid.m || v.len() != grid.m {
            return pre("field length must equal the mode count");
        }
        let tr = Transform::new(grid);
        let mut s = SpectralState { u_hat: tr.forward_real(u), v_hat: tr.forward_real(v), time: 0.0 };
        s.project(grid);
        Ok(s)
    }

    pub fn from_fn(grid: &GridSpec, u: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> Result<Self> {
        let x = grid.x();
        let uu: Vec<f64> = x.iter().map(|&x| u(x)).collect();
        let vv: Vec<f64> = x.iter().map(|&x| v(x)).collect();
        SpectralState::from_fields(grid, &uu, &vv)
    }

    pub fn to_fields(&self, grid: &GridSpec) -> (Vec<f64>, Vec<f64>) {
        let tr = Transform::new(grid);
        (tr.inverse_real(&self.u_hat), tr.inverse_real(&self.v_hat))
    }

    pub fn scaled(&self, c: f64) -> Self {
        SpectralState {
            u_hat: self.u_hat.iter().map(|z| z * c).collect(),
            v_hat: self.v_hat.iter().map(|z| z * c).collect(),
            time: self.time,
        }
    }

    /// Zeroes the dealiased band and restores Hermitian symmetry.
    pub fn project(&mut self, grid: &GridSpec) {
        for a in [&mut self.u_hat, &mut self.v_hat] {
            hermitian(grid, a);
        }
    }

    pub fn is_hermitian(&self, grid: &GridSpec) -> bool {
        let m = grid.m;
        [&self.u_hat, &self.v_hat].iter().all(|a| {
            a[0].im == 0.0 && (1..m).all(|i| a[i] == a[m - i].conj()) && (0..m).all(|i| grid.kept(i) || a[i] == ZERO)
        })
    }

    /// `max |u - u'|, |v - v'|` over coefficients.
    pub fn max_coeff_diff(&self, o: &SpectralState) -> f64 {
        self.u_hat
            .iter()
            .zip(&o.u_hat)
            .chain(self.v_hat.iter().zip(&o.v_hat))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn hermitian(grid: &GridSpec, a: &mut [Complex64]) {
    let m = grid.m;
    a[0].im = 0.0;
    for i in 1..m / 2 {
        if grid.kept(i) {
            let z = (a[i] + a[m - i].conj()) * 0.5;
            a[i] = z;
            a[m - i] = z.conj();
        } else {
            a[i] = ZERO;
            a[m - i] = ZERO;
        }
    }
    a[m / 2] = ZERO;
}

struct Transform {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transform {
    fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Transform { m: grid.m, fwd: planner.plan_fft_forward(grid.m), inv: planner.plan_fft_inverse(grid.m) }
    }

    fn forward_real(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.m as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    fn inverse_real(&self, c: &[Complex64]) -> Vec<f64> {
        let mut buf = c.to_vec();
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverParams {
    pub p1: PhaseParams,
    pub p2: PhaseParams,
    pub dt: f64,
    pub t_final: f64,
}

impl SolverParams {
    pub fn new(beta1: f64, alpha: f64, beta: f64, dt: f64, t_final: f64) -> Result<Self> {
        let s = SolverParams { p1: PhaseParams::new(1.0, beta1)?, p2: PhaseParams::new(alpha, beta)?, dt, t_final };
        if !(dt > 0.0) || !(t_final >= 0.0) || !dt.is_finite() || !t_final.is_finite() {
            return pre("dt must be positive and the final time nonnegative");
        }
        Ok(s)
    }

    pub fn stability_number(&self, grid: &GridSpec) -> f64 {
        let k = grid.k_max();
        let g = |p: &PhaseParams| p.group(k).abs().max(p.beta.abs());
        self.dt * g(&self.p1).max(g(&self.p2))
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        let c = self.stability_number(grid);
        if c > STABILITY_LIMIT {
            return pre(format!("dt * max|phi'| = {c:.3} exceeds {STABILITY_LIMIT}"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub time: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub l2_energy: f64,
    /// `1/2 int (u_x^2 + a v_x^2 - b1 u^2 - b v^2 - u v^2)`.
    pub hamiltonian: f64,
}

pub fn diagnostics(grid: &GridSpec, s: &SpectralState, params: &SolverParams) -> Diagnostics {
    let k = grid.wavenumbers();
    let l = grid.l;
    let sq = |a: &[Complex64], w: &dyn Fn(usize) -> f64| a.iter().enumerate().map(|(i, z)| w(i) * z.norm_sqr()).sum::<f64>();
    let u2 = sq(&s.u_hat, &|_| 1.0);
    let v2 = sq(&s.v_hat, &|_| 1.0);
    let ux2 = sq(&s.u_hat, &|i| k[i] * k[i]);
    let vx2 = sq(&s.v_hat, &|i| k[i] * k[i]);
    let (u, v) = s.to_fields(grid);
    let cubic: f64 = u.iter().zip(&v).map(|(a, b)| a * b * b).sum::<f64>() * l / grid.m as f64;
    Diagnostics {
        time: s.time,
        mass_u: l * s.u_hat[0].re,
        mass_v: l * s.v_hat[0].re,
        l2_energy: l * (u2 + v2),
        hamiltonian: 0.5 * (l * (ux2 + params.p2.alpha * vx2 - params.p1.beta * u2 - params.p2.beta * v2) - cubic),
    }
}

/// Exact linear flow over `dt` (negative `dt` runs backwards).
pub fn linear_propagate(grid: &GridSpec, s: &SpectralState, p1: &PhaseParams, p2: &PhaseParams, dt: f64) -> SpectralState {
    let k = grid.wavenumbers();
    let e = |p: &PhaseParams, k: f64| Complex64::from_polar(1.0, p.phase(k) * dt);
    SpectralState {
        u_hat: s.u_hat.iter().zip(&k).map(|(z, &k)| z * e(p1, k)).collect(),
        v_hat: s.v_hat.iter().zip(&k).map(|(z, &k)| z * e(p2, k)).collect(),
        time: s.time + dt,
    }
}

/// Stepping workspace: transforms, wavenumbers and linear multipliers.
pub struct Stepper {
    grid: GridSpec,
    params: SolverParams,
    tr: Transform,
    k: Vec<f64>,
    e1: [Vec<Complex64>; 2],
    e2: [Vec<Complex64>; 2],
}

impl Stepper {
    pub fn new(grid: &GridSpec, params: &SolverParams) -> Result<Self> {
        params.check(grid)?;
        let k = grid.wavenumbers();
        let mult = |p: &PhaseParams, h: f64| k.iter().map(|&k| Complex64::from_polar(1.0, p.phase(k) * h)).collect();
        let dt = params.dt;
        Ok(Stepper {
            grid: *grid,
            params: *params,
            tr: Transform::new(grid),
            e1: [mult(&params.p1, dt), mult(&params.p2, dt)],
            e2: [mult(&params.p1, dt / 2.0), mult(&params.p2, dt / 2.0)],
            k,
        })
    }

    /// Dealiased nonlinear terms `(-(ik/2) (v^2)^, -ik (uv)^)`.
    pub fn nonlinear(&self, u_hat: &[Complex64], v_hat: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let u = self.tr.inverse_real(u_hat);
        let v = self.tr.inverse_real(v_hat);
        let vv: Vec<f64> = v.iter().map(|x| x * x).collect();
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        let mut a = self.tr.forward_real(&vv);
        let mut b = self.tr.forward_real(&uv);
        for i in 0..self.grid.m {
            if self.grid.kept(i) {
                let ik = Complex64::new(0.0, self.k[i]);
                a[i] *= -ik * 0.5;
                b[i] *= -ik;
            } else {
                a[i] = ZERO;
                b[i] = ZERO;
            }
        }
        (a, b)
    }

    /// One Lawson RK4 step.
    pub fn step(&self, s: &SpectralState, index: usize) -> Result<SpectralState> {
        let dt = self.params.dt;
        let m = self.grid.m;
        let comb = |x: &[Complex64], e: &[Complex64], y: &[Complex64], c: f64| -> Vec<Complex64> {
            (0..m).map(|i| e[i] * x[i] + y[i] * c).collect()
        };
        let mul = |e: &[Complex64], x: &[Complex64]| -> Vec<Complex64> { (0..m).map(|i| e[i] * x[i]).collect() };
        let (u, v) = (&s.u_hat, &s.v_hat);
        let (k1u, k1v) = self.nonlinear(u, v);
        // u2 = E2 (u + dt/2 k1)
        let u2: Vec<Complex64> = (0..m).map(|i| self.e2[0][i] * (u[i] + k1u[i] * (dt / 2.0))).collect();
        let v2: Vec<Complex64> = (0..m).map(|i| self.e2[1][i] * (v[i] + k1v[i] * (dt / 2.0))).collect();
        let (k2u, k2v) = self.nonlinear(&u2, &v2);
        let u3 = comb(u, &self.e2[0], &k2u, dt / 2.0);
        let v3 = comb(v, &self.e2[1], &k2v, dt / 2.0);
        let (k3u, k3v) = self.nonlinear(&u3, &v3);
        let u4 = comb(u, &self.e1[0], &mul(&self.e2[0], &k3u), dt);
        let v4 = comb(v, &self.e1[1], &mul(&self.e2[1], &k3v), dt);
        let (k4u, k4v) = self.nonlinear(&u4, &v4);
        let fin = |x: &[Complex64], e1: &[Complex64], e2: &[Complex64], k1: &[Complex64], k2: &[Complex64], k3: &[Complex64], k4: &[Complex64]| {
            (0..m)
                .map(|i| e1[i] * x[i] + (e1[i] * k1[i] + e2[i] * (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
                .collect::<Vec<_>>()
        };
        let mut out = SpectralState {
            u_hat: fin(u, &self.e1[0], &self.e2[0], &k1u, &k2u, &k3u, &k4u),
            v_hat: fin(v, &self.e1[1], &self.e2[1], &k1v, &k2v, &k3v, &k4v),
            time: s.time + dt,
        };
        out.project(&self.grid);
        if !out.u_hat.iter().chain(&out.v_hat).all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite { step: index });
        }
        Ok(out)
    }
}

/// One step; builds a fresh workspace.
pub fn step(grid: &GridSpec, s: &SpectralState, params: &SolverParams) -> Result<SpectralState> {
    Stepper::new(grid, params)?.step(s, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<SpectralState>,
    pub diagnostics: Vec<Diagnostics>,
}

/// Integrates to each of `sample_times` (nondecreasing, reached by whole
/// steps) and records states and diagnostics there.
pub fn integrate(grid: &GridSpec, s0: &SpectralState, params: &SolverParams, sample_times: &[f64]) -> Result<Trajectory> {
    let st = Stepper::new(grid, params)?;
    let mut s = s0.clone();
    s.project(grid);
    let mut states = vec![];
    let mut diags = vec![];
    let mut n = 0usize;
    let t0 = s.time;
    for &ts in sample_times {
        let target = ((ts - t0) / params.dt).round();
        if target < n as f64 || ((target * params.dt) - (ts - t0)).abs() > 1e-9 * params.dt.max(ts.abs()) {
            return pre(format!("sample time {ts} is not a forward multiple of dt"));
        }
        while (n as f64) < target {
            s = st.step(&s, n)?;
            n += 1;
            s.time = t0 + n as f64 * params.dt;
        }
        diags.push(diagnostics(grid, &s, params));
        states.push(s.clone());
    }
    Ok(Trajectory { states, diagnostics: diags })
}

/// State at `params.t_final`.
pub fn evolve(grid: &GridSpec, s0: &SpectralState, params: &SolverParams) -> Result<SpectralState> {
    let steps = (params.t_final / params.dt).round();
    let t = s0.time + steps * params.dt;
    Ok(integrate(grid, s0, params, &[t])?.states.pop().expect("one sample"))
}

/// `sqrt(L sum |c|^2)`.
pub fn l2(grid: &GridSpec, c: &[Complex64]) -> f64 {
    (grid.l * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub t: f64,
    pub deltas: Vec<f64>,
    pub residual_u: Vec<f64>,
    pub residual_v: Vec<f64>,
    pub slope_u: f64,
    pub slope_v: f64,
    /// `max |psi2_hat|`.
    pub psi2_max: f64,
    pub pass: bool,
}

/// Duhamel iterates at time `t` on the grid: `(phi1, psi1, phi2, psi2)`.
pub fn duhamel_iterates(
    grid: &GridSpec,
    data: &SpectralState,
    params: &SolverParams,
    t: f64,
    panels: usize,
) -> Result<[Vec<Complex64>; 4]> {
    let st = Stepper::new(grid, &SolverParams { t_final: t, ..*params })?;
    let mut d = data.clone();
    d.project(grid);
    let k = grid.wavenumbers();
    let (p1, p2) = (params.p1, params.p2);
    let gl = gauss_legendre(16);
    let h = t / panels as f64;
    let mut taus = vec![];
    for p in 0..panels {
        for (x, w) in gl.0.iter().zip(&gl.1) {
            taus.push((h * (p as f64 + (x + 1.0) / 2.0), w * h / 2.0));
        }
    }
    let m = grid.m;
    let parts: Vec<(Vec<Complex64>, Vec<Complex64>)> = taus
        .par_iter()
        .map(|&(tau, w)| {
            let lin = linear_propagate(grid, &d, &p1, &p2, tau);
            // (psi1^2, 2 phi1 psi1) feed the two second-order terms.
            let (a, b) = st.nonlinear(&lin.u_hat, &lin.v_hat);
            let back = |p: &PhaseParams, i: usize| Complex64::from_polar(1.0, p.phase(k[i]) * (t - tau)) * w;
            let fa: Vec<Complex64> = (0..m).map(|i| a[i] * 2.0 * back(&p1, i)).collect();
            let fb: Vec<Complex64> = (0..m).map(|i| b[i] * 2.0 * back(&p2, i)).collect();
            (fa, fb)
        })
        .collect();
    let mut phi2 = vec![ZERO; m];
    let mut psi2 = vec![ZERO; m];
    for (a, b) in parts {
        for i in 0..m {
            phi2[i] += a[i];
            psi2[i] += b[i];
        }
    }
    let lin = linear_propagate(grid, &d, &p1, &p2, t);
    Ok([lin.u_hat, lin.v_hat, phi2, psi2])
}

/// Residuals of the second-order Duhamel expansion against the solver
/// along a ladder of amplitudes.
pub fn picard_crosscheck(
    grid: &GridSpec,
    data: &SpectralState,
    params: &SolverParams,
    deltas: &[f64],
    t: f64,
) -> Result<CrosscheckReport> {
    if deltas.len() < 3 || deltas.iter().any(|&d| !(d > 0.0)) {
        return pre("delta ladder needs at least three positive amplitudes");
    }
    let steps = (t / params.dt).round();
    if !(steps >= 1.0) || (steps * params.dt - t).abs() > 1e-9 * t {
        return pre("t must be a positive multiple of dt");
    }
    let panels = (t * 64.0).ceil().max(8.0) as usize;
    let [phi1, psi1, phi2, psi2] = duhamel_iterates(grid, data, params, t, panels)?;
    let p = SolverParams { t_final: t, ..*params };
    let rows = deltas
        .par_iter()
        .map(|&d| {
            let s = evolve(grid, &data.scaled(d), &p)?;
            let ru: Vec<Complex64> = (0..grid.m).map(|i| s.u_hat[i] - phi1[i] * d - phi2[i] * (d * d / 2.0)).collect();
            let rv: Vec<Complex64> = (0..grid.m).map(|i| s.v_hat[i] - psi1[i] * d - psi2[i] * (d * d / 2.0)).collect();
            Ok((l2(grid, &ru), l2(grid, &rv)))
        })
        .collect::<Result<Vec<_>>>()?;
    let ru: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rv: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let slope_u = loglog_fit(deltas, &ru)?.slope;
    let slope_v = loglog_fit(deltas, &rv)?.slope;
    Ok(CrosscheckReport {
        t,
        deltas: deltas.to_vec(),
        residual_u: ru,
        residual_v: rv,
        slope_u,
        slope_v,
        psi2_max: psi2.iter().map(|z| z.norm()).fold(0.0, f64::max),
        pass: (slope_u - 3.0).abs() <= 0.3 && (slope_v - 3.0).abs() <= 0.3,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub max_abs: f64,
    /// `max_abs` over the sup norm of the unscaled solution.
    pub max_rel: f64,
}

/// Fraction of coefficient mass in the outer fifth of the retained band.
fn edge_fraction(grid: &GridSpec, s: &SpectralState) -> f64 {
    let jmax = (grid.m as f64 / 3.0).ceil() - 1.0;
    let mut edge = 0.0;
    let mut all = 0.0;
    for i in 0..grid.m {
        let w = s.u_hat[i].norm_sqr() + s.v_hat[i].norm_sqr();
        all += w;
        if grid.index(i).unsigned_abs() as f64 > 0.8 * jmax {
            edge += w;
        }
    }
    if all == 0.0 {
        0.0
    } else {
        (edge / all).sqrt()
    }
}

/// Evolves `s0` to `T`, rescales by `lambda`, and compares with the run of
/// the rescaled data under `(alpha, beta / lambda^2)` on the `lambda L` box
/// to `lambda^3 T`. With `refine` the second run uses twice the modes.
pub fn scaling_covariance_check(
    grid: &GridSpec,
    s0: &SpectralState,
    params: &SolverParams,
    lambda: f64,
    t: f64,
    refine: bool,
) -> Result<ScalingReport> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return pre("scaling needs lambda >= 1");
    }
    let frac = edge_fraction(grid, s0);
    if frac > 1e-8 {
        return Err(Error::Resolution(format!("data has relative mass {frac:e} near the band edge")));
    }
    let base = evolve(grid, s0, &SolverParams { t_final: t, ..*params })?;
    let m2 = if refine { grid.m * 2 } else { grid.m };
    let g2 = GridSpec::new(grid.l * lambda, m2)?;
    let l2c = lambda * lambda;
    let sp = SolverParams {
        p1: PhaseParams::new(params.p1.alpha, params.p1.beta / l2c)?,
        p2: PhaseParams::new(params.p2.alpha, params.p2.beta / l2c)?,
        dt: params.dt * lambda.powi(3),
        t_final: t * lambda.powi(3),
    };
    // Same mode index j carries wavenumber k / lambda; amplitudes scale by lambda^-2.
    let mut s2 = SpectralState::zeros(&g2);
    for i in 0..grid.m {
        let j = grid.index(i);
        let slot = if j >= 0 { j as usize } else { (m2 as i64 + j) as usize };
        s2.u_hat[slot] = s0.u_hat[i] / l2c;
        s2.v_hat[slot] = s0.v_hat[i] / l2c;
    }
    s2.project(&g2);
    let scaled = evolve(&g2, &s2, &sp)?;
    let (u, v) = base.to_fields(grid);
    let (u2, v2) = scaled.to_fields(&g2);
    let stride = m2 / grid.m;
    let mut dev: f64 = 0.0;
    for i in 0..grid.m {
        dev = dev.max((u2[i * stride] * l2c - u[i]).abs()).max((v2[i * stride] * l2c - v[i]).abs());
    }
    let sup = u.iter().chain(&v).fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(ScalingReport { lambda, max_abs: dev, max_rel: if sup > 0.0 { dev / sup } else { dev } })
}
