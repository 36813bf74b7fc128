//! Second and third Picard iterates for frequency-bump data, windowed
//! Sobolev norms and growth-exponent fits over dyadic `N` ladders.

mod growth;
mod iterate;

pub use growth::{
    block_ladder, block_point, growth_fit, predicted_exponent, window_norm, BlockLadder, BlockPoint, GrowthFit, LadderPoint,
    MAX_LADDER_N, SLOPE_TOL,
};
pub use iterate::{
    expi_dd, kernel, second_iterate, second_iterate_on, third_iterate, third_iterate_on, windowed_norm, BlockValues,
    FieldSegment, IterateField, Window, GL_ORDER, MIN_NODES_PER_BUMP,
};

use serde::Serialize;

use crate::dd::Dd;
use crate::dispersion::{bracket, g0_dd, lambda_shift_dd, roots_dd, PhaseParams};
use crate::error::{pre, Result};

/// Closed frequency interval with double-double endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: Dd,
    pub hi: Dd,
}

impl Interval {
    pub fn new(lo: Dd, hi: Dd) -> Self {
        Interval { lo, hi }
    }
    pub fn from_f64(lo: f64, hi: f64) -> Self {
        Interval { lo: Dd::new(lo), hi: Dd::new(hi) }
    }
    pub fn len(&self) -> f64 {
        (self.hi - self.lo).to_f64()
    }
    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }
    pub fn intersect(&self, o: &Interval) -> Interval {
        let lo = if self.lo > o.lo { self.lo } else { o.lo };
        let hi = if self.hi < o.hi { self.hi } else { o.hi };
        Interval { lo, hi }
    }
    pub fn reflect(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
    pub fn bounds(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.bounds().serialize(s)
    }
}

/// `amplitude * 1_[lo, hi](xi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BumpProfile {
    pub amplitude: f64,
    pub interval: Interval,
}

impl BumpProfile {
    pub fn new(amplitude: f64, interval: Interval) -> Result<Self> {
        if !(amplitude > 0.0) || interval.is_empty() {
            return pre("bump needs positive amplitude and lo < hi");
        }
        Ok(BumpProfile { amplitude, interval })
    }
    pub fn eval(&self, xi: f64) -> f64 {
        let (l, r) = self.interval.bounds();
        if xi >= l && xi <= r {
            self.amplitude
        } else {
            0.0
        }
    }
    pub fn width(&self) -> f64 {
        self.interval.len()
    }
    pub fn reflect(&self) -> BumpProfile {
        BumpProfile { amplitude: self.amplitude, interval: self.interval.reflect() }
    }
}

/// `H^s` norm of a union of disjoint bumps. Nodes are placed relative to
/// each bump's left end so that widths far below `ulp(l)` still integrate.
pub fn bump_sobolev_norm(bumps: &[BumpProfile], s: f64) -> f64 {
    let gl = crate::quadrature::gauss_legendre(16);
    let mut total = 0.0;
    for b in bumps {
        let len = b.interval.len();
        let l = b.interval.lo;
        let mean: f64 =
            gl.0.iter().zip(&gl.1).map(|(u, w)| w / 2.0 * bracket((l + len * (u + 1.0) / 2.0).to_f64()).powf(2.0 * s)).sum();
        total += b.amplitude * b.amplitude * len * mean;
    }
    total.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    BetaPositive,
    BetaNegative,
    BetaZero,
    GeneralAlpha,
}

impl Construction {
    pub const ALL: [Construction; 4] =
        [Construction::BetaPositive, Construction::BetaNegative, Construction::BetaZero, Construction::GeneralAlpha];

    pub fn name(&self) -> &'static str {
        match self {
            Construction::BetaPositive => "beta-positive",
            Construction::BetaNegative => "beta-negative",
            Construction::BetaZero => "beta-zero",
            Construction::GeneralAlpha => "general-alpha",
        }
    }

    pub fn parse(s: &str) -> Option<Construction> {
        Construction::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Picard order whose growth the construction exhibits.
    pub fn order(&self) -> usize {
        match self {
            Construction::BetaNegative => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstructionId {
    pub kind: Construction,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub n: f64,
}

impl ConstructionId {
    pub fn new(kind: Construction, alpha: f64, beta: f64, s: f64, n: f64) -> Result<Self> {
        let ok = match kind {
            Construction::BetaPositive => alpha == 4.0 && beta > 0.0,
            Construction::BetaNegative => alpha == 4.0 && beta < 0.0,
            Construction::BetaZero => alpha == 4.0 && beta == 0.0,
            Construction::GeneralAlpha => alpha > 0.0 && alpha < 4.0 && alpha != 1.0,
        };
        if !ok {
            return pre(format!("{} does not admit alpha = {alpha}, beta = {beta}", kind.name()));
        }
        if !(n > 1.0) || !s.is_finite() {
            return pre("construction needs N > 1 and finite s");
        }
        Ok(ConstructionId { kind, alpha, beta, s, n })
    }

    pub fn phase(&self) -> PhaseParams {
        PhaseParams { alpha: self.alpha, beta: self.beta }
    }

    pub fn with_n(&self, n: f64) -> Result<Self> {
        ConstructionId::new(self.kind, self.alpha, self.beta, self.s, n)
    }
}

/// Initial data `(phi_hat, psi_hat)` and the window where the iterate is
/// bounded below.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Data {
    pub id: ConstructionId,
    pub phi: Vec<BumpProfile>,
    pub psi: Vec<BumpProfile>,
    pub window: Interval,
    pub gamma: f64,
}

impl Data {
    pub fn order(&self) -> usize {
        self.id.kind.order()
    }

    /// Narrowest bump width, the resolution unit for the quadrature.
    pub fn min_width(&self) -> f64 {
        self.phi.iter().chain(&self.psi).map(|b| b.width()).fold(f64::INFINITY, f64::min)
    }

    /// Hull of the iterate's frequency support.
    pub fn support(&self) -> Interval {
        let sum = |a: &[BumpProfile], b: &[BumpProfile], c: &[BumpProfile]| {
            let min = |v: &[BumpProfile]| v.iter().map(|x| x.interval.lo).fold(Dd::new(f64::INFINITY), |m, x| if x < m { x } else { m });
            let max = |v: &[BumpProfile]| v.iter().map(|x| x.interval.hi).fold(Dd::new(f64::NEG_INFINITY), |m, x| if x > m { x } else { m });
            let mut lo = min(a) + min(b);
            let mut hi = max(a) + max(b);
            if !c.is_empty() {
                lo = lo + min(c);
                hi = hi + max(c);
            }
            Interval { lo, hi }
        };
        if self.order() == 2 {
            sum(&self.phi, &self.psi, &[])
        } else {
            sum(&self.psi, &self.psi, &self.psi)
        }
    }

    /// The iterate of the construction's order on `window`.
    pub fn iterate(&self, t: f64, window: &Window, nodes_per_bump: usize) -> Result<IterateField> {
        let p = self.id.phase();
        if self.order() == 2 {
            second_iterate(&self.phi, &self.psi, &p, t, window, nodes_per_bump)
        } else {
            third_iterate(&self.psi, &p, t, window, nodes_per_bump)
        }
    }

    /// The iterate on its whole support, split at the window ends.
    pub fn iterate_full(&self, t: f64, nodes_per_bump: usize) -> Result<IterateField> {
        let p = self.id.phase();
        let cuts = [self.window.lo, self.window.hi];
        if self.order() == 2 {
            second_iterate_on(&self.phi, &self.psi, &p, t, &Window::Full, &cuts, nodes_per_bump)
        } else {
            third_iterate_on(&self.psi, &p, t, &Window::Full, &cuts, nodes_per_bump)
        }
    }
}

/// Builds the bump data of a construction.
pub fn build_data(c: &ConstructionId) -> Result<Data> {
    let c = ConstructionId::new(c.kind, c.alpha, c.beta, c.s, c.n)?;
    let n = c.n;
    let nd = Dd::new(n);
    let bump = |amp: f64, lo: Dd, hi: Dd| BumpProfile::new(amp, Interval::new(lo, hi));
    let data = match c.kind {
        Construction::BetaPositive | Construction::BetaZero => {
            let (b1, g) = if c.kind == Construction::BetaPositive {
                ((c.beta / 3.0).sqrt(), 1.0 / n)
            } else {
                (0.0, n.powf(-0.5))
            };
            let amp = g.powf(-0.5) * n.powf(-c.s);
            let a = nd * 2.0 + b1;
            let phi = vec![bump(amp, a, a + g)?];
            let psi = vec![bump(amp, -nd + g, -nd + 2.0 * g)?];
            let w = nd + b1;
            let window = Interval::new(w + 1.75 * g, w + 2.25 * g);
            Data { id: c, phi, psi, window, gamma: g }
        }
        Construction::BetaNegative => {
            let g = n.powf(-0.5);
            let amp = g.powf(-0.5) * n.powf(-c.s);
            let psi = vec![bump(amp, nd, nd + 4.0 * g)?, bump(amp, -nd - 9.0 * g, -nd - 5.0 * g)?];
            let window = Interval::new(-nd - 12.0 * g, -nd - 11.0 * g);
            Data { id: c, phi: vec![], psi, window, gamma: g }
        }
        Construction::GeneralAlpha => {
            let g = n.powi(-2);
            let amp = g.powf(-0.5) * n.powf(-c.s);
            let (c1, _) = roots_dd(c.alpha);
            let lam = lambda_shift_dd(c.alpha, c.beta)?;
            let shift = lam.div(nd);
            let centre = -(nd + nd * c1) + shift;
            let phi = vec![bump(amp, nd, nd + g)?];
            let psi = vec![bump(amp, centre - g, centre + g)?];
            let wlo = -(nd * c1) + shift;
            let window = Interval::new(wlo, wlo + g);
            Data { id: c, phi, psi, window, gamma: g }
        }
    };
    for (name, b) in [("phi", &data.phi), ("psi", &data.psi)] {
        if b.is_empty() {
            continue;
        }
        let v = bump_sobolev_norm(b, c.s);
        if !(0.25..=4.0).contains(&v) {
            return pre(format!("{name} has H^s norm {v} outside [1/4, 4]"));
        }
    }
    Ok(data)
}

/// Measure of `A_xi`, the set of `xi1` with `phi_hat(xi1) psi_hat(xi - xi1) != 0`.
pub fn overlap_measure(data: &Data, xi: Dd) -> f64 {
    let mut m = 0.0;
    for a in &data.phi {
        for b in &data.psi {
            let shifted = Interval::new(xi - b.interval.hi, xi - b.interval.lo);
            let i = a.interval.intersect(&shifted);
            if !i.is_empty() {
                m += i.len();
            }
        }
    }
    m
}

/// Largest `|G0(xi1, xi - xi1, -xi)|` over a `k x k` grid of
/// `xi in window`, `xi1 in A_xi`.
pub fn max_resonance_on_window(data: &Data, k: usize) -> f64 {
    let p = data.id.phase();
    let w = data.window;
    let mut worst = 0.0f64;
    for i in 0..k {
        let xi = w.lo + w.len() * (i as f64 + 0.5) / k as f64;
        for a in &data.phi {
            for b in &data.psi {
                let dom = a.interval.intersect(&Interval::new(xi - b.interval.hi, xi - b.interval.lo));
                if dom.is_empty() {
                    continue;
                }
                for j in 0..k {
                    let x1 = dom.lo + dom.len() * (j as f64 + 0.5) / k as f64;
                    worst = worst.max(g0_dd(&p, x1, xi - x1).to_f64().abs());
                }
            }
        }
    }
    worst
}

/// `<xi>^s` weight used by the windowed norms.
#[inline]
pub(crate) fn sobolev_weight(xi: f64, s: f64) -> f64 {
    bracket(xi).powf(s)
}
