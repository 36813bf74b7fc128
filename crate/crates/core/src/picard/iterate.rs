use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{BumpProfile, Interval};
use crate::dd::Dd;
use crate::dispersion::{g0_dd, g1_dd, g2_dd, PhaseParams};
use crate::error::{pre, Error, Result};
use crate::quadrature::gauss_legendre;

pub const GL_ORDER: usize = 16;
pub const MIN_NODES_PER_BUMP: usize = 64;

const TWO_PI: Dd = Dd { hi: std::f64::consts::TAU, lo: 2.4492935982947064e-16 };
const SERIES_CUTOFF: f64 = 1e-6;
/// Relative size of the top two Legendre coefficients accepted on a panel.
const TAIL_TOL: f64 = 1e-11;
/// Phase span below which a panel is integrated directly.
const DIRECT_SPAN: f64 = 6.0;
/// Half phase span above which the Filon rule is used.
const FILON_MIN_HALF_SPAN: f64 = 32.0;
const MAX_DEPTH: usize = 64;
const MAX_PANELS: usize = 200_000;

/// `exp(i z)` with `z` reduced modulo `2 pi` in double-double; also returns
/// the reduced argument.
pub fn expi_dd(z: Dd) -> (Complex64, f64) {
    let k = (z.hi / TWO_PI.hi).round();
    let r = (z - TWO_PI * k).to_f64();
    (Complex64::new(r.cos(), r.sin()), r)
}

/// `(exp(i G t) - 1) / G`.
pub fn kernel(g: f64, t: f64) -> Complex64 {
    kernel_dd(Dd::new(g), t)
}

pub(crate) fn kernel_dd(g: Dd, t: f64) -> Complex64 {
    let z = g * t;
    let zf = z.to_f64();
    if zf.abs() < SERIES_CUTOFF {
        return Complex64::new(-zf / 2.0, 1.0 - zf * zf / 6.0) * t;
    }
    let (_, r) = expi_dd(z);
    let h = (r / 2.0).sin();
    let gf = g.to_f64();
    Complex64::new(-2.0 * h * h / gf, r.sin() / gf)
}

fn legendre_table(u: f64, out: &mut [f64; GL_ORDER]) {
    out[0] = 1.0;
    out[1] = u;
    for k in 1..GL_ORDER - 1 {
        out[k + 1] = ((2 * k + 1) as f64 * u * out[k] - k as f64 * out[k - 1]) / (k + 1) as f64;
    }
}

/// Legendre coefficients of the degree-15 interpolant through GL samples.
fn legendre_coeffs(samples: &[Complex64]) -> [Complex64; GL_ORDER] {
    let gl = gauss_legendre(GL_ORDER);
    let mut c = [Complex64::new(0.0, 0.0); GL_ORDER];
    let mut p = [0.0; GL_ORDER];
    for ((&u, &w), &f) in gl.0.iter().zip(&gl.1).zip(samples) {
        legendre_table(u, &mut p);
        for k in 0..GL_ORDER {
            c[k] += f * (w * p[k]);
        }
    }
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= (2 * k + 1) as f64 / 2.0;
    }
    c
}

fn tail_ok(c: &[Complex64; GL_ORDER]) -> bool {
    let big = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    big == 0.0 || c[GL_ORDER - 1].norm() + c[GL_ORDER - 2].norm() <= TAIL_TOL * big
}

/// Spherical Bessel `j_0..j_15` by upward recurrence; needs `w >= 16`.
fn spherical_bessel(w: f64) -> [f64; GL_ORDER] {
    let mut j = [0.0; GL_ORDER];
    let (s, c) = w.sin_cos();
    j[0] = s / w;
    j[1] = s / (w * w) - c / w;
    for k in 1..GL_ORDER - 1 {
        j[k + 1] = (2 * k + 1) as f64 / w * j[k] - j[k - 1];
    }
    j
}

/// `int_{-1}^{1} P_k(u) exp(i w u) du = 2 i^k j_k(w)`, signed `w`.
fn legendre_fourier_moments(w: f64) -> [Complex64; GL_ORDER] {
    let j = spherical_bessel(w.abs());
    let mut m = [Complex64::new(0.0, 0.0); GL_ORDER];
    let mut ik = Complex64::new(1.0, 0.0);
    for k in 0..GL_ORDER {
        let sign = if w < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        m[k] = ik * (2.0 * j[k] * sign);
        ik *= Complex64::new(0.0, 1.0);
    }
    m
}

#[derive(Clone, Copy)]
struct Panel {
    lo: Dd,
    hi: Dd,
    depth: usize,
}

impl Panel {
    fn len(&self) -> f64 {
        (self.hi - self.lo).to_f64()
    }
    fn at(&self, frac: f64) -> Dd {
        self.lo + frac * self.len()
    }
    fn halves(&self) -> [Panel; 2] {
        let mid = self.at(0.5);
        [Panel { lo: self.lo, hi: mid, depth: self.depth + 1 }, Panel { lo: mid, hi: self.hi, depth: self.depth + 1 }]
    }
}

fn gl_nodes(p: &Panel) -> impl Iterator<Item = (Dd, f64)> + '_ {
    let gl = gauss_legendre(GL_ORDER);
    let h = p.len() / 2.0;
    (0..GL_ORDER).map(move |k| (p.at((gl.0[k] + 1.0) / 2.0), gl.1[k] * h))
}

/// Panel rule on GL nodes with a Legendre-tail acceptance test.
fn direct_panel(p: &Panel, f: &impl Fn(Dd) -> Complex64) -> Option<Complex64> {
    let mut samples = [Complex64::new(0.0, 0.0); GL_ORDER];
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, (x, w)) in gl_nodes(p).enumerate() {
        samples[k] = f(x);
        sum += samples[k] * w;
    }
    if !samples.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return None;
    }
    tail_ok(&legendre_coeffs(&samples)).then_some(sum)
}

fn run_panels(
    lo: Dd,
    hi: Dd,
    what: &str,
    mut step: impl FnMut(&Panel) -> Option<Complex64>,
) -> Result<Complex64> {
    if !(hi > lo) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut stack = vec![Panel { lo, hi, depth: 0 }];
    let mut total = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    while let Some(p) = stack.pop() {
        count += 1;
        if count > MAX_PANELS {
            return Err(Error::Resolution(format!("{what}: panel budget exhausted")));
        }
        match step(&p) {
            Some(v) => total += v,
            None => {
                if p.depth >= MAX_DEPTH {
                    return Err(Error::Resolution(format!("{what}: panel at {:e} not resolved", p.lo.to_f64())));
                }
                stack.extend(p.halves());
            }
        }
    }
    Ok(total)
}

/// Adaptive integral of a smooth complex integrand over `[lo, hi]`.
pub(crate) fn smooth_integral(lo: Dd, hi: Dd, f: impl Fn(Dd) -> Complex64) -> Result<Complex64> {
    run_panels(lo, hi, "smooth integral", |p| direct_panel(p, &f))
}

/// Resonance function along a line: value and derivative.
pub(crate) trait Resonance {
    fn eval(&self, x: Dd) -> (Dd, f64);
}

impl<F: Fn(Dd) -> (Dd, f64)> Resonance for F {
    fn eval(&self, x: Dd) -> (Dd, f64) {
        self(x)
    }
}

/// `int a(x) (exp(i G(x) t) - 1) / G(x) dx` over `[lo, hi]`, with a Filon
/// rule in the phase variable on panels where `G t` is large and monotone.
pub(crate) fn kernel_integral(lo: Dd, hi: Dd, t: f64, a: impl Fn(Dd) -> f64, g: impl Resonance) -> Result<Complex64> {
    let direct = |x: Dd| a(x) * kernel_dd(g.eval(x).0, t);
    run_panels(lo, hi, "kernel integral", |p| {
        let mid = p.at(0.5);
        let zc = g.eval(mid).0 * t;
        let mut zmin = f64::INFINITY;
        let mut zmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let mut gmax = f64::NEG_INFINITY;
        let mut dsign = 0i8;
        let mut mono = true;
        let gl = gauss_legendre(GL_ORDER);
        let probe = [0.0, 0.5].into_iter().chain(gl.0.iter().map(|u| (u + 1.0) / 2.0)).chain([1.0]);
        let mut ends = [0.0f64; 2];
        for frac in probe {
            let (gx, dg) = g.eval(p.at(frac));
            let zeta = (gx * t - zc).to_f64();
            if frac == 0.0 {
                ends[0] = zeta;
            }
            if frac == 1.0 {
                ends[1] = zeta;
            }
            zmin = zmin.min(zeta);
            zmax = zmax.max(zeta);
            let gf = gx.to_f64();
            gmin = gmin.min(gf);
            gmax = gmax.max(gf);
            let sg = if dg > 0.0 { 1 } else if dg < 0.0 { -1 } else { 0 };
            if sg == 0 || (dsign != 0 && sg != dsign) {
                mono = false;
            }
            dsign = sg;
        }
        if zmax - zmin <= DIRECT_SPAN {
            return direct_panel(p, &direct);
        }
        let half = (ends[1] - ends[0]) / 2.0;
        let sep = gmin > 0.0 || gmax < 0.0;
        let ratio = if sep { gmax.abs().max(gmin.abs()) / gmax.abs().min(gmin.abs()) } else { f64::INFINITY };
        if !(mono && sep && ratio <= 2.0 && half.abs() >= FILON_MIN_HALF_SPAN) {
            return None;
        }
        filon_panel(p, t, zc, ends, &a, &g)
    })
}

fn filon_panel(p: &Panel, t: f64, zc: Dd, ends: [f64; 2], a: &impl Fn(Dd) -> f64, g: &impl Resonance) -> Option<Complex64> {
    let len = p.len();
    let gl = gauss_legendre(GL_ORDER);
    // Non-oscillatory part.
    let mut samples = [Complex64::new(0.0, 0.0); GL_ORDER];
    let mut plain = 0.0;
    for (k, (x, w)) in gl_nodes(p).enumerate() {
        let v = a(x) / g.eval(x).0.to_f64();
        samples[k] = v.into();
        plain += v * w;
    }
    if !tail_ok(&legendre_coeffs(&samples)) {
        return None;
    }
    // Oscillatory part in the phase variable zeta = G t - zc.
    let zm = (ends[0] + ends[1]) / 2.0;
    let om = (ends[1] - ends[0]) / 2.0;
    for (k, &u) in gl.0.iter().enumerate() {
        let target = zm + om * u;
        let (mut flo, mut fhi) = (0.0f64, 1.0f64);
        let mut f = ((target - ends[0]) / (ends[1] - ends[0])).clamp(0.0, 1.0);
        let mut found = None;
        for _ in 0..100 {
            let x = p.at(f);
            let (gx, dg) = g.eval(x);
            let r = (gx * t - zc).to_f64() - target;
            let slope = dg * t * len;
            if (r > 0.0) == (om > 0.0) {
                fhi = f;
            } else {
                flo = f;
            }
            let mut next = f - r / slope;
            if !(next > flo && next < fhi) {
                next = 0.5 * (flo + fhi);
            }
            if (next - f).abs() <= 4.0 * f64::EPSILON || fhi - flo <= 4.0 * f64::EPSILON {
                found = Some(p.at(next));
                break;
            }
            f = next;
        }
        let x = found?;
        let (gx, dg) = g.eval(x);
        samples[k] = (a(x) / (gx.to_f64() * dg * t)).into();
    }
    let c = legendre_coeffs(&samples);
    if !tail_ok(&c) {
        return None;
    }
    let m = legendre_fourier_moments(om);
    let osc: Complex64 = c.iter().zip(&m).map(|(ck, mk)| ck * mk).sum();
    let (ec, _) = expi_dd(zc);
    let em = Complex64::new(zm.cos(), zm.sin());
    Some(ec * em * osc * om - plain)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSegment {
    pub interval: Interval,
    #[serde(skip)]
    pub nodes: Vec<Dd>,
    pub xi: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Per-block pieces of the third iterate; `i`, `j` index the bumps holding
/// `xi1` and `xi2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockValues {
    pub i: usize,
    pub j: usize,
    pub i1: Vec<Complex64>,
    pub i2: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterateField {
    pub order: usize,
    pub t: f64,
    pub segments: Vec<FieldSegment>,
    /// Samples of the transformed iterate, segment by segment.
    pub values: Vec<Complex64>,
    pub blocks: Vec<BlockValues>,
    pub nodes_per_bump: usize,
    pub min_bump_width: f64,
    pub max_node_spacing: f64,
}

impl IterateField {
    pub fn xi(&self) -> Vec<f64> {
        self.segments.iter().flat_map(|s| s.xi.iter().copied()).collect()
    }

    pub fn nodes(&self) -> Vec<Dd> {
        self.segments.iter().flat_map(|s| s.nodes.iter().copied()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.segments.iter().flat_map(|s| s.weights.iter().copied()).collect()
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&BlockValues> {
        self.blocks.iter().find(|b| b.i == i && b.j == j)
    }

    pub fn covers(&self) -> Vec<Interval> {
        self.segments.iter().map(|s| s.interval).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Interval(Interval),
    Full,
}

/// `( int_window <xi>^{2s} |F|^2 dxi )^{1/2}`.
pub fn windowed_norm(f: &IterateField, s: f64, window: &Window) -> Result<f64> {
    let mut total = 0.0;
    let mut off = 0;
    let mut covered = 0.0;
    for seg in &f.segments {
        let n = seg.xi.len();
        let take = match window {
            Window::Full => true,
            Window::Interval(w) => !(seg.interval.lo < w.lo) && !(seg.interval.hi > w.hi),
        };
        if take {
            covered += seg.interval.len();
            for k in 0..n {
                total += seg.weights[k] * super::sobolev_weight(seg.xi[k], 2.0 * s) * f.values[off + k].norm_sqr();
            }
        }
        off += n;
    }
    if let Window::Interval(w) = window {
        if (covered - w.len()).abs() > 1e-9 * w.len() {
            return Err(Error::OutOfRange(format!(
                "window [{:e}, {:e}] is not a union of sampled segments",
                w.lo.to_f64(),
                w.hi.to_f64()
            )));
        }
    }
    Ok(total.sqrt())
}

fn sort_dedup(mut v: Vec<Dd>) -> Vec<Dd> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| !(*a > *b) && !(*a < *b));
    v
}

/// Merged union of intervals.
fn union(mut v: Vec<Interval>) -> Vec<Interval> {
    v.retain(|i| !i.is_empty());
    v.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut out: Vec<Interval> = vec![];
    for i in v {
        match out.last_mut() {
            Some(last) if !(i.lo > last.hi) => {
                if i.hi > last.hi {
                    last.hi = i.hi;
                }
            }
            _ => out.push(i),
        }
    }
    out
}

/// Sampling layout: `region` split at `cuts`, GL panels of length at most
/// `10 w / npb`.
fn layout(region: &[Interval], cuts: &[Dd], w: f64, npb: usize) -> Result<(Vec<FieldSegment>, f64)> {
    if npb < MIN_NODES_PER_BUMP {
        return Err(Error::Resolution(format!("nodes_per_bump = {npb} is below {MIN_NODES_PER_BUMP}")));
    }
    let gl = gauss_legendre(GL_ORDER);
    let mut segs = vec![];
    for r in region {
        let mut pts = vec![r.lo, r.hi];
        pts.extend(cuts.iter().copied().filter(|c| *c > r.lo && *c < r.hi));
        let pts = sort_dedup(pts);
        for pair in pts.windows(2) {
            let iv = Interval::new(pair[0], pair[1]);
            let len = iv.len();
            if !(len > 0.0) {
                continue;
            }
            let panels = ((len * npb as f64) / (10.0 * w)).ceil().max(1.0) as usize;
            let h = len / panels as f64;
            let mut nodes = Vec::with_capacity(panels * GL_ORDER);
            let mut weights = Vec::with_capacity(panels * GL_ORDER);
            for p in 0..panels {
                for k in 0..GL_ORDER {
                    let off = (p as f64 + (gl.0[k] + 1.0) / 2.0) * h;
                    nodes.push(iv.lo + off);
                    weights.push(gl.1[k] * h / 2.0);
                }
            }
            let xi = nodes.iter().map(|x| x.to_f64()).collect();
            segs.push(FieldSegment { interval: iv, nodes, xi, weights });
        }
    }
    // Largest gap between neighbouring nodes or a node and a segment end.
    let mut spacing: f64 = 0.0;
    for s in &segs {
        let mut prev = s.interval.lo;
        for &x in &s.nodes {
            spacing = spacing.max((x - prev).to_f64());
            prev = x;
        }
        spacing = spacing.max((s.interval.hi - prev).to_f64());
    }
    if spacing > w / MIN_NODES_PER_BUMP as f64 {
        return Err(Error::Resolution(format!("node spacing {spacing:e} exceeds bump width / {MIN_NODES_PER_BUMP}")));
    }
    Ok((segs, spacing))
}

fn min_width(bumps: &[&[BumpProfile]]) -> f64 {
    bumps.iter().flat_map(|b| b.iter()).map(|b| b.width()).fold(f64::INFINITY, f64::min)
}

/// Minkowski sum endpoints of two bump unions.
fn pair_breaks(a: &[BumpProfile], b: &[BumpProfile]) -> Vec<Dd> {
    let mut v = vec![];
    for x in a {
        for y in b {
            for ex in [x.interval.lo, x.interval.hi] {
                for ey in [y.interval.lo, y.interval.hi] {
                    v.push(ex + ey);
                }
            }
        }
    }
    v
}

fn triple_breaks(a: &[BumpProfile]) -> Vec<Dd> {
    let two = pair_breaks(a, a);
    let mut v = vec![];
    for s in two {
        for y in a {
            v.push(s + y.interval.lo);
            v.push(s + y.interval.hi);
        }
    }
    v
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return pre("iterate time must be positive");
    }
    Ok(())
}

fn resolve_region(window: &Window, support: Vec<Interval>) -> Result<Vec<Interval>> {
    match window {
        Window::Full => Ok(support),
        Window::Interval(w) => {
            if w.is_empty() {
                return pre("window must have lo < hi");
            }
            Ok(vec![*w])
        }
    }
}

fn prefactor(p: &PhaseParams, xi: Dd, t: f64) -> Complex64 {
    expi_dd(p.phase_dd(xi) * t).0 * xi.to_f64()
}

/// Transformed second iterate on `window`.
pub fn second_iterate(
    phi: &[BumpProfile],
    psi: &[BumpProfile],
    p: &PhaseParams,
    t: f64,
    window: &Window,
    nodes_per_bump: usize,
) -> Result<IterateField> {
    second_iterate_on(phi, psi, p, t, window, &[], nodes_per_bump)
}

/// As [`second_iterate`], with extra split points so that sub-windows can
/// be normed separately.
pub fn second_iterate_on(
    phi: &[BumpProfile],
    psi: &[BumpProfile],
    p: &PhaseParams,
    t: f64,
    window: &Window,
    cuts: &[Dd],
    nodes_per_bump: usize,
) -> Result<IterateField> {
    check_t(t)?;
    let w = min_width(&[phi, psi]);
    let support = union(
        phi.iter()
            .flat_map(|a| psi.iter().map(move |b| Interval::new(a.interval.lo + b.interval.lo, a.interval.hi + b.interval.hi)))
            .collect(),
    );
    let region = resolve_region(window, support)?;
    let mut breaks = pair_breaks(phi, psi);
    breaks.extend_from_slice(cuts);
    let (segments, spacing) = if w.is_finite() {
        layout(&region, &breaks, w, nodes_per_bump)?
    } else {
        layout(&region, &breaks, region.iter().map(|r| r.len()).fold(f64::INFINITY, f64::min), nodes_per_bump)?
    };
    let nodes: Vec<Dd> = segments.iter().flat_map(|s| s.nodes.iter().copied()).collect();
    let values = nodes
        .par_iter()
        .map(|&xi| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in phi {
                for b in psi {
                    let dom = a.interval.intersect(&Interval::new(xi - b.interval.hi, xi - b.interval.lo));
                    if dom.is_empty() {
                        continue;
                    }
                    let g = |x1: Dd| {
                        let x2 = xi - x1;
                        let d = Dd::new(3.0) * x1.square() - x2.square() * (3.0 * p.alpha) + p.beta;
                        (g0_dd(p, x1, x2), d.to_f64())
                    };
                    acc += kernel_integral(dom.lo, dom.hi, t, |_| 1.0, g)? * (a.amplitude * b.amplitude);
                }
            }
            Ok(Complex64::new(0.0, 2.0) * prefactor(p, xi, t) * acc)
        })
        .collect::<Result<Vec<_>>>()?;
    finish(2, t, segments, values, vec![], nodes_per_bump, w, spacing)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    order: usize,
    t: f64,
    segments: Vec<FieldSegment>,
    values: Vec<Complex64>,
    blocks: Vec<BlockValues>,
    nodes_per_bump: usize,
    w: f64,
    spacing: f64,
) -> Result<IterateField> {
    if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Resolution("non-finite iterate value".into()));
    }
    Ok(IterateField { order, t, segments, values, blocks, nodes_per_bump, min_bump_width: w, max_node_spacing: spacing })
}

/// `(xi - xi1) / G1(xi2, xi - xi1 - xi2, xi1 - xi)` with the vanishing
/// factor cancelled.
#[inline]
fn g1_ratio(p: &PhaseParams, e1: Dd, e2: Dd) -> f64 {
    let s = e1 + e2;
    let q = e1.square() - e1 * e2 + e2.square();
    (q * p.alpha - p.beta - s.square()).to_f64().recip()
}

/// `xi2` range for fixed `xi, xi1` with `xi2 in bj`, `xi - xi1 - xi2 in bk`.
#[inline]
fn xi2_domain(xi: Dd, x1: Dd, bj: &BumpProfile, bk: &BumpProfile) -> Interval {
    let r = xi - x1;
    bj.interval.intersect(&Interval::new(r - bk.interval.hi, r - bk.interval.lo))
}

/// Transformed third iterate for data with vanishing `phi`, with the
/// per-block pieces of `I1` and `I2`.
pub fn third_iterate(psi: &[BumpProfile], p: &PhaseParams, t: f64, window: &Window, nodes_per_bump: usize) -> Result<IterateField> {
    third_iterate_on(psi, p, t, window, &[], nodes_per_bump)
}

pub fn third_iterate_on(
    psi: &[BumpProfile],
    p: &PhaseParams,
    t: f64,
    window: &Window,
    cuts: &[Dd],
    nodes_per_bump: usize,
) -> Result<IterateField> {
    check_t(t)?;
    if psi.is_empty() {
        return pre("third iterate needs nonempty psi");
    }
    let w = min_width(&[psi]);
    let mut sup = vec![];
    for a in psi {
        for b in psi {
            for c in psi {
                sup.push(Interval::new(
                    a.interval.lo + b.interval.lo + c.interval.lo,
                    a.interval.hi + b.interval.hi + c.interval.hi,
                ));
            }
        }
    }
    let region = resolve_region(window, union(sup))?;
    let mut breaks = triple_breaks(psi);
    breaks.extend_from_slice(cuts);
    let (segments, spacing) = layout(&region, &breaks, w, nodes_per_bump)?;
    let nodes: Vec<Dd> = segments.iter().flat_map(|s| s.nodes.iter().copied()).collect();
    let nb = psi.len();
    let per_node = nodes
        .par_iter()
        .map(|&xi| {
            let pre = prefactor(p, xi, t);
            let mut out = Vec::with_capacity(nb * nb);
            for i in 0..nb {
                for j in 0..nb {
                    let (i1, i2) = third_block(psi, p, t, xi, i, j)?;
                    out.push((pre * i1, pre * i2));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut blocks = vec![];
    for i in 0..nb {
        for j in 0..nb {
            let k = i * nb + j;
            blocks.push(BlockValues {
                i,
                j,
                i1: per_node.iter().map(|v| v[k].0).collect(),
                i2: per_node.iter().map(|v| v[k].1).collect(),
            });
        }
    }
    let values = per_node
        .iter()
        .map(|v| {
            let s: Complex64 = v.iter().map(|(a, b)| a - b).sum();
            Complex64::new(0.0, -3.0) * s
        })
        .collect();
    finish(3, t, segments, values, blocks, nodes_per_bump, w, spacing)
}

/// Block `(i, j)` of the two double integrals at one `xi`, without the
/// `xi exp(i phi(xi) t)` prefactor.
fn third_block(psi: &[BumpProfile], p: &PhaseParams, t: f64, xi: Dd, i: usize, j: usize) -> Result<(Complex64, Complex64)> {
    let bi = &psi[i];
    let bj = &psi[j];
    // Split xi1 where the xi2-domain changes shape.
    let mut pts = vec![bi.interval.lo, bi.interval.hi];
    for bk in psi {
        for ej in [bj.interval.lo, bj.interval.hi] {
            for ek in [bk.interval.lo, bk.interval.hi] {
                let x = xi - ej - ek;
                if x > bi.interval.lo && x < bi.interval.hi {
                    pts.push(x);
                }
            }
        }
    }
    let pts = sort_dedup(pts);
    let amp_i = bi.amplitude * bj.amplitude;
    let mut i1 = Complex64::new(0.0, 0.0);
    let mut i2 = Complex64::new(0.0, 0.0);
    for pair in pts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        // Skip pieces with an empty xi2-domain.
        let mid = lo + 0.5 * (hi - lo).to_f64();
        if psi.iter().all(|bk| xi2_domain(xi, mid, bj, bk).is_empty()) {
            continue;
        }
        let inner1 = |x1: Dd| -> Result<Complex64> {
            let mut acc = Complex64::new(0.0, 0.0);
            for bk in psi {
                let dom = xi2_domain(xi, x1, bj, bk);
                if dom.is_empty() {
                    continue;
                }
                let r = xi - x1;
                let g = |x2: Dd| {
                    let x3 = r - x2;
                    let d = (r - x2 - x2) * r * (-3.0 * p.alpha);
                    (g2_dd(p.alpha, x1, x2, x3), d.to_f64())
                };
                let a = |x2: Dd| g1_ratio(p, x2, r - x2);
                acc += kernel_integral(dom.lo, dom.hi, t, a, g)? * bk.amplitude;
            }
            Ok(acc)
        };
        let h = |x1: Dd| -> Result<f64> {
            let mut acc = 0.0;
            for bk in psi {
                let dom = xi2_domain(xi, x1, bj, bk);
                if dom.is_empty() {
                    continue;
                }
                let r = xi - x1;
                acc += smooth_integral(dom.lo, dom.hi, |x2| g1_ratio(p, x2, r - x2).into())?.re * bk.amplitude;
            }
            Ok(acc)
        };
        let err = std::cell::RefCell::new(None);
        let trap = |e: Error| {
            err.borrow_mut().get_or_insert(e);
        };
        let v1 = smooth_integral(lo, hi, |x1| inner1(x1).unwrap_or_else(|e| {
            trap(e);
            Complex64::new(0.0, 0.0)
        }))?;
        let g1x = |x1: Dd| {
            let d = Dd::new(3.0 * p.alpha) * x1.square() - p.beta - (xi - x1).square() * 3.0;
            (g1_dd(p, x1, -xi), d.to_f64())
        };
        let v2 = kernel_integral(lo, hi, t, |x1| h(x1).unwrap_or_else(|e| {
            trap(e);
            0.0
        }), g1x)?;
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        i1 += v1 * amp_i;
        i2 += v2 * amp_i;
    }
    Ok((i1, i2))
}
