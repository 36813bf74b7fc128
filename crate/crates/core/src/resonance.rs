//! Near-resonant set probes: sublevel sets of `<G0>` at `alpha = 4`, the `G1`
//! magnitude law off `[0, 4]`, the `alpha = 1` denominator ratio, and a
//! discretized weighted-convolution functional.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dd::Dd;
use crate::dispersion::{bracket, g0_alpha4_factored, g1, m_alpha, FreqTriple, PhaseParams};
use crate::error::{pre, Error, Result};

/// Second-axis band of a scan region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Eta2Band {
    /// `eta2` in `[lo, hi]`.
    Absolute { lo: f64, hi: f64 },
    /// `z = 2 eta2 + eta1` in `[lo, hi]`; cells are uniform in `z`.
    StripOffset { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSpec {
    pub n: f64,
    /// `eta1` in `[lo * N, hi * N]`.
    pub eta1_band: (f64, f64),
    pub eta2_band: Eta2Band,
    pub samples: (usize, usize),
}

impl RegionSpec {
    pub fn validated(self) -> Result<Self> {
        let (a, b) = self.eta1_band;
        let (lo, hi) = match self.eta2_band {
            Eta2Band::Absolute { lo, hi } | Eta2Band::StripOffset { lo, hi } => (lo, hi),
        };
        if !(self.n > 10.0) {
            return pre(format!("region needs N > 10, got {}", self.n));
        }
        if !(b > a) || !(hi > lo) {
            return pre("region bands must be nonempty");
        }
        if self.samples.0 < 16 || self.samples.1 < 16 {
            return pre("region needs at least 16 samples per axis");
        }
        Ok(self)
    }

    fn eta1_range(&self) -> (f64, f64) {
        (self.eta1_band.0 * self.n, self.eta1_band.1 * self.n)
    }

    /// Area of one cell in the `(eta1, eta2)` plane.
    pub fn cell_area(&self) -> f64 {
        let (a, b) = self.eta1_range();
        let h1 = (b - a) / self.samples.0 as f64;
        match self.eta2_band {
            Eta2Band::Absolute { lo, hi } => h1 * (hi - lo) / self.samples.1 as f64,
            Eta2Band::StripOffset { lo, hi } => 0.5 * h1 * (hi - lo) / self.samples.1 as f64,
        }
    }

    /// Cell centre `(eta1, eta2)` of cell `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, b) = self.eta1_range();
        let e1 = a + (i as f64 + 0.5) * (b - a) / self.samples.0 as f64;
        match self.eta2_band {
            Eta2Band::Absolute { lo, hi } => (e1, lo + (j as f64 + 0.5) * (hi - lo) / self.samples.1 as f64),
            Eta2Band::StripOffset { lo, hi } => {
                let z = lo + (j as f64 + 0.5) * (hi - lo) / self.samples.1 as f64;
                (e1, 0.5 * (z - e1))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub min_bracket_g: f64,
    pub argmin: (f64, f64),
    /// `(K, measure of {<G0> <= K})`.
    pub measure_below: Vec<(f64, f64)>,
    /// Cells where both linear factors `|z +- beta1|` are below `beta1` (beta > 0 only).
    pub both_factors_small: u64,
    pub cells: u64,
    pub cell_area: f64,
}

#[derive(Default, Clone)]
struct Partial {
    min: f64,
    arg: (f64, f64),
    counts: Vec<u64>,
    both: u64,
}

/// Scans `<G0>` over the region at `alpha = 4`.
pub fn trichotomy_scan(p: &PhaseParams, region: &RegionSpec, thresholds: &[f64]) -> Result<ScanResult> {
    if p.alpha != 4.0 {
        return pre(format!("trichotomy scan needs alpha = 4, got {}", p.alpha));
    }
    let region = region.validated()?;
    let beta1 = if p.beta > 0.0 { Some(p.beta1()?) } else { None };
    let (n1, n2) = region.samples;
    let slabs: Vec<Partial> = (0..n1)
        .into_par_iter()
        .map(|i| {
            let mut part = Partial { min: f64::INFINITY, arg: (0.0, 0.0), counts: vec![0; thresholds.len()], both: 0 };
            for j in 0..n2 {
                let (e1, e2) = region.cell(i, j);
                let g = bracket(g0_alpha4_factored(p.beta, FreqTriple::new(e1, e2)));
                if g < part.min {
                    part.min = g;
                    part.arg = (e1, e2);
                }
                for (c, &k) in part.counts.iter_mut().zip(thresholds) {
                    if g <= k {
                        *c += 1;
                    }
                }
                if let Some(b1) = beta1 {
                    let z = 2.0 * e2 + e1;
                    if (z + b1).abs() < b1 && (z - b1).abs() < b1 {
                        part.both += 1;
                    }
                }
            }
            part
        })
        .collect();
    let mut min = f64::INFINITY;
    let mut arg = (0.0, 0.0);
    let mut counts = vec![0u64; thresholds.len()];
    let mut both = 0;
    for s in &slabs {
        if s.min < min {
            min = s.min;
            arg = s.arg;
        }
        for (c, x) in counts.iter_mut().zip(&s.counts) {
            *c += x;
        }
        both += s.both;
    }
    let area = region.cell_area();
    Ok(ScanResult {
        min_bracket_g: min,
        argmin: arg,
        measure_below: thresholds.iter().zip(&counts).map(|(&k, &c)| (k, c as f64 * area)).collect(),
        both_factors_small: both,
        cells: (n1 * n2) as u64,
        cell_area: area,
    })
}

/// Cell centres and `G0` values, row-major; refuses more than `max_cells`.
pub fn scan_cells(p: &PhaseParams, region: &RegionSpec, max_cells: u64) -> Result<Vec<(f64, f64, f64)>> {
    let region = region.validated()?;
    let cells = (region.samples.0 * region.samples.1) as u64;
    if cells > max_cells {
        return Err(Error::GridGuard { cells, limit: max_cells });
    }
    let mut out = Vec::with_capacity(cells as usize);
    for i in 0..region.samples.0 {
        for j in 0..region.samples.1 {
            let (e1, e2) = region.cell(i, j);
            out.push((e1, e2, crate::dispersion::g0(p, FreqTriple::new(e1, e2))));
        }
    }
    Ok(out)
}

/// Measure of `{<G0> <= K}` over `eta1 in [N, 2N]` at `alpha = 4, beta = 0`.
pub fn beta_zero_strip_measure(n: f64, k: f64) -> f64 {
    2.0 * ((k - 1.0) / 3.0).sqrt() * ((2.0 * n).sqrt() - n.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MagnitudeReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub samples: usize,
    pub rejected: usize,
    pub pass: bool,
}

/// `|G1| / (|eta3| sum eta_i^2)` over random zero-sum triples with
/// `max |eta_i|` log-uniform in `[1e2, 1e6]`, excluding `|eta3| < 1`.
pub fn g1_magnitude_check(p: &PhaseParams, n_samples: usize, seed: u64) -> Result<MagnitudeReport> {
    let m = m_alpha(p.alpha);
    if !(p.alpha > 4.0 || p.alpha < 0.0) || !(m > 0.0) {
        return pre(format!("g1 magnitude check needs alpha > 4 or alpha < 0, got {}", p.alpha));
    }
    if n_samples == 0 {
        return pre("g1 magnitude check needs samples");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut rejected = 0;
    let mut used = 0;
    while used < n_samples {
        let big = 10f64.powf(rng.random_range(2.0..6.0));
        let u1: f64 = rng.random_range(-1.0..1.0);
        let u2: f64 = rng.random_range(-1.0..1.0);
        let u3 = -(u1 + u2);
        let scale = big / u1.abs().max(u2.abs()).max(u3.abs());
        let t = FreqTriple::new(u1 * scale, u2 * scale);
        let e3 = t.eta3();
        if e3.abs() < 1.0 {
            rejected += 1;
            continue;
        }
        let sq: f64 = t.components().iter().map(|x| x * x).sum();
        let r = g1(p, t).abs() / (e3.abs() * sq);
        lo = lo.min(r);
        hi = hi.max(r);
        used += 1;
    }
    let a = p.alpha.abs();
    let lower_bound = (3.0 * a * m).min(1.0) / 4.0;
    let upper_bound = 48.0 * a;
    Ok(MagnitudeReport {
        min_ratio: lo,
        max_ratio: hi,
        lower_bound,
        upper_bound,
        samples: used,
        rejected,
        pass: lo.is_finite() && lo >= lower_bound && hi <= upper_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaOneReport {
    /// Extremes of `N^2 |xi1 - xi| / |G1(xi2, xi - xi1 - xi2, xi1 - xi)|`.
    pub min_scaled: f64,
    pub max_scaled: f64,
    pub samples: usize,
    pub rejected: usize,
}

/// `N^2 |xi1 - xi| / |G1|` at `alpha = 1`, with `xi1, xi2, xi - xi1 - xi2`
/// of size `[N/2, 2N]` and random signs, `N` log-uniform in `[1e2, 1e6]`.
pub fn alpha1_ratio_check(beta: f64, n_samples: usize, seed: u64) -> Result<AlphaOneReport> {
    if n_samples == 0 {
        return pre("alpha-1 check needs samples");
    }
    let p = PhaseParams::new(1.0, beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let (mut used, mut rejected) = (0, 0);
    let signed = |rng: &mut ChaCha8Rng, n: f64| {
        let m: f64 = n * 2f64.powf(rng.random_range(-1.0..1.0));
        if rng.random::<bool>() {
            m
        } else {
            -m
        }
    };
    while used < n_samples {
        let n = 10f64.powf(rng.random_range(2.0..6.0));
        let x1 = signed(&mut rng, n);
        let x2 = signed(&mut rng, n);
        let x3 = signed(&mut rng, n);
        let xi = x1 + x2 + x3;
        if (x1 - xi).abs() < 1.0 {
            rejected += 1;
            continue;
        }
        let g = g1(&p, FreqTriple::new(x2, x3));
        let r = n * n * (x1 - xi).abs() / g.abs();
        lo = lo.min(r);
        hi = hi.max(r);
        used += 1;
    }
    Ok(AlphaOneReport { min_scaled: lo, max_scaled: hi, samples: used, rejected })
}

/// Frequency bump times a modulation shell of thickness `thickness` around
/// `tau = phi(xi) + gauge + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellFunction {
    pub amplitude: f64,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub offset: f64,
    pub thickness: f64,
}

impl ShellFunction {
    pub fn l2_norm(&self) -> f64 {
        self.amplitude * ((self.xi_hi - self.xi_lo) * self.thickness).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvolutionProbeSpec {
    pub f: [ShellFunction; 3],
    pub phases: [PhaseParams; 3],
    /// Constants added to each slot's phase together with its shell; a
    /// gauge when they sum to zero.
    pub gauge: [f64; 3],
    pub s: f64,
    pub b: f64,
    /// Cells per slot along `xi` and along the shell coordinate (slots 1, 2).
    pub n_xi: usize,
    pub n_tau: usize,
}

pub const MAX_PROBE_CELLS: u64 = 100_000_000;

/// Discretized weighted-convolution functional divided by `prod ||f_i||`.
///
/// Slots 1 and 2 are integrated over `(xi_i, tau_i)`; slot 3 sits at
/// `(xi3, tau3) = -(xi1 + xi2, tau1 + tau2)`. The `xi3` factor enters as
/// `|xi3|`.
pub fn weighted_convolution_ratio(spec: &ConvolutionProbeSpec) -> Result<f64> {
    if !(spec.b > 0.5 && spec.b < 1.0) {
        return pre(format!("probe needs b in (1/2, 1), got {}", spec.b));
    }
    let cells = (spec.n_xi as u64).pow(2) * (spec.n_tau as u64).pow(2);
    if cells > MAX_PROBE_CELLS {
        return Err(Error::GridGuard { cells, limit: MAX_PROBE_CELLS });
    }
    if spec.n_xi == 0 || spec.n_tau == 0 {
        return pre("probe needs at least one cell per axis");
    }
    let [f1, f2, f3] = spec.f;
    let [p1, p2, p3] = spec.phases;
    let [g1, g2, g3] = spec.gauge;
    let (s, b) = (spec.s, spec.b);
    let h1 = (f1.xi_hi - f1.xi_lo) / spec.n_xi as f64;
    let h2 = (f2.xi_hi - f2.xi_lo) / spec.n_xi as f64;
    let k1 = f1.thickness / spec.n_tau as f64;
    let k2 = f2.thickness / spec.n_tau as f64;
    let sig = |k: f64, w: f64, j: usize| -0.5 * w + (j as f64 + 0.5) * k;

    let total: f64 = (0..spec.n_xi)
        .into_par_iter()
        .map(|i1| {
            let x1 = Dd::new(f1.xi_lo) + (i1 as f64 + 0.5) * h1;
            let ph1 = p1.phase_dd(x1);
            let w1 = bracket(x1.to_f64()).powf(-s);
            let mut acc = 0.0;
            for i2 in 0..spec.n_xi {
                let x2 = Dd::new(f2.xi_lo) + (i2 as f64 + 0.5) * h2;
                let x3 = -(x1 + x2);
                let x3f = x3.to_f64();
                if !(x3f >= f3.xi_lo && x3f <= f3.xi_hi) {
                    continue;
                }
                // tau1 + tau2 + tau3 = 0 with tau_i = phi_i + g_i + c_i + sigma_i
                let h = -(ph1 + p2.phase_dd(x2) + p3.phase_dd(x3));
                let base = (h - (g1 + g2 + g3)).to_f64() - f1.offset - f2.offset;
                let wx = x3f.abs() * bracket(x3f).powf(s) * w1 * bracket(x2.to_f64()).powf(-s);
                for j1 in 0..spec.n_tau {
                    let l1 = f1.offset + sig(k1, f1.thickness, j1);
                    let wl1 = bracket(l1).powf(-b);
                    for j2 in 0..spec.n_tau {
                        let sg2 = sig(k2, f2.thickness, j2);
                        let l2 = f2.offset + sg2;
                        let l3 = base - sig(k1, f1.thickness, j1) - sg2;
                        if (l3 - f3.offset).abs() > 0.5 * f3.thickness {
                            continue;
                        }
                        acc += wx * wl1 * bracket(l2).powf(-b) * bracket(l3).powf(b - 1.0);
                    }
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    let lhs = total * f1.amplitude * f2.amplitude * f3.amplitude * h1 * h2 * k1 * k2;
    Ok(lhs / (f1.l2_norm() * f2.l2_norm() * f3.l2_norm()))
}

/// The probe family built on the beta-positive bumps: slot 1 carries the
/// `u` data, slot 2 the `v` data, slot 3 the output window.
pub fn beta_positive_probe(n: f64, s: f64, b: f64, beta: f64, n_xi: usize, n_tau: usize) -> Result<ConvolutionProbeSpec> {
    let p = PhaseParams::new(4.0, beta)?;
    let b1 = p.beta1()?;
    let g = 1.0 / n;
    let amp = |w: f64| g.powf(-0.5) * n.powf(-s) / w.sqrt();
    let unit = 1.0;
    let wide = 64.0;
    Ok(ConvolutionProbeSpec {
        f: [
            ShellFunction { amplitude: amp(unit), xi_lo: 2.0 * n + b1, xi_hi: 2.0 * n + b1 + g, offset: 0.0, thickness: unit },
            ShellFunction { amplitude: amp(unit), xi_lo: -n + g, xi_hi: -n + 2.0 * g, offset: 0.0, thickness: unit },
            ShellFunction {
                amplitude: amp(wide),
                xi_lo: -(n + b1 + 3.0 * g),
                xi_hi: -(n + b1 + g),
                // L3 = -G0 ~ 42 beta1 on this support
                offset: 42.0 * b1,
                thickness: wide,
            },
        ],
        phases: [PhaseParams::new(1.0, 0.0)?, p, p],
        gauge: [0.0; 3],
        s,
        b,
        n_xi,
        n_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4(beta: f64) -> PhaseParams {
        PhaseParams::new(4.0, beta).unwrap()
    }

    #[test]
    fn negative_beta_minimum() {
        let n = 4096.0;
        let r = RegionSpec {
            n,
            eta1_band: (1.0, 2.0),
            eta2_band: Eta2Band::Absolute { lo: -2.0 * n, hi: n },
            samples: (64, 64),
        };
        let res = trichotomy_scan(&p4(-3.0), &r, &[10.0]).unwrap();
        assert!(res.min_bracket_g >= 1.0 + 3.0 * n);
        assert_eq!(res.measure_below[0].1, 0.0);
    }

    #[test]
    fn positive_beta_factors_never_both_small() {
        let n = 4096.0;
        let r = RegionSpec {
            n,
            eta1_band: (1.0, 2.0),
            eta2_band: Eta2Band::StripOffset { lo: -4.0, hi: 4.0 },
            samples: (64, 257),
        };
        let res = trichotomy_scan(&p4(3.0), &r, &[10.0]).unwrap();
        assert_eq!(res.both_factors_small, 0);
    }

    #[test]
    fn zero_beta_strip_measure() {
        let n = 4096.0;
        let r = RegionSpec {
            n,
            eta1_band: (1.0, 2.0),
            eta2_band: Eta2Band::StripOffset { lo: -0.1, hi: 0.1 },
            samples: (256, 2001),
        };
        let res = trichotomy_scan(&p4(0.0), &r, &[10.0]).unwrap();
        let want = beta_zero_strip_measure(n, 10.0);
        let got = res.measure_below[0].1;
        assert!((got / want - 1.0).abs() < 0.02, "{got} {want}");
    }

    #[test]
    fn alpha_other_than_four_rejected() {
        let r = RegionSpec { n: 100.0, eta1_band: (1.0, 2.0), eta2_band: Eta2Band::Absolute { lo: 0.0, hi: 1.0 }, samples: (16, 16) };
        assert!(trichotomy_scan(&PhaseParams::new(2.0, 0.0).unwrap(), &r, &[1.0]).is_err());
    }

    #[test]
    fn g1_example_alpha8() {
        let p = PhaseParams::new(8.0, 5.0).unwrap();
        let m = 1e4;
        let t = FreqTriple::new(m, -m / 2.0);
        let e3 = t.eta3();
        let e1 = t.eta1;
        let closed = -3.0 * p.alpha * e3 * ((e1 + e3 / 2.0).powi(2) + m_alpha(p.alpha) * e3 * e3) + p.beta * e3;
        let direct = g1(&p, t);
        assert!((closed - direct).abs() <= 1e-12 * direct.abs());
        let beta_part = (p.beta * e3).abs() / direct.abs();
        assert!(beta_part <= 1e-7);
    }

    #[test]
    fn g1_check_needs_positive_m() {
        assert!(g1_magnitude_check(&PhaseParams::new(2.0, 0.0).unwrap(), 10, 1).is_err());
        let r = g1_magnitude_check(&PhaseParams::new(-2.0, 1.0).unwrap(), 500, 1).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn alpha1_examples() {
        let n: f64 = 1e4;
        let p = PhaseParams::new(1.0, 0.0).unwrap();
        // xi2 = N, xi - xi1 - xi2 = -N - 1, xi1 - xi = 1 => ratio 1/|3 N (N+1)|
        let g = g1(&p, FreqTriple::new(n, -n - 1.0));
        let r = 1.0 / g.abs();
        assert!((r * 3.0 * n * (n + 1.0) - 1.0).abs() < 1e-12);
        let g2n = g1(&p, FreqTriple::new(2.0 * n, -2.0 * n - 1.0));
        assert!(((1.0 / g2n.abs()) / r - 0.25).abs() < 1e-3);
    }

    #[test]
    fn probe_empty_sumset_is_zero() {
        let mut spec = beta_positive_probe(256.0, 0.0, 0.6, 3.0, 8, 4).unwrap();
        spec.f[2].xi_lo = 10.0;
        spec.f[2].xi_hi = 11.0;
        assert_eq!(weighted_convolution_ratio(&spec).unwrap(), 0.0);
    }

    #[test]
    fn probe_is_homogeneous() {
        let spec = beta_positive_probe(256.0, 0.0, 0.6, 3.0, 16, 4).unwrap();
        let a = weighted_convolution_ratio(&spec).unwrap();
        assert!(a > 0.0);
        let mut scaled = spec;
        for f in scaled.f.iter_mut() {
            f.amplitude *= 7.5;
        }
        let b = weighted_convolution_ratio(&scaled).unwrap();
        assert!((a / b - 1.0).abs() < 1e-13);
    }

    #[test]
    fn probe_guards() {
        let mut spec = beta_positive_probe(256.0, 0.0, 0.6, 3.0, 200, 100).unwrap();
        assert!(matches!(weighted_convolution_ratio(&spec), Err(Error::GridGuard { .. })));
        spec.n_xi = 8;
        spec.n_tau = 4;
        spec.b = 0.5;
        assert!(weighted_convolution_ratio(&spec).is_err());
    }
}
