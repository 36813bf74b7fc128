//! Phase and resonance polynomials, their roots, the scaling map and
//! discrete Sobolev / `X^{s,b}` norms.

use num_complex::Complex64;
use serde::Serialize;

use crate::dd::Dd;
use crate::error::{pre, Error, Result};
use crate::quadrature;

/// Japanese bracket, `1 + |x|`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    1.0 + x.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PhaseParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return pre(format!("alpha must be finite and nonzero, beta finite (got {alpha}, {beta})"));
        }
        Ok(PhaseParams { alpha, beta })
    }

    /// `sqrt(beta/3)`, defined for `beta >= 0`.
    pub fn beta1(&self) -> Result<f64> {
        if self.beta < 0.0 {
            return pre("beta1 needs beta >= 0");
        }
        Ok((self.beta / 3.0).sqrt())
    }

    /// `sqrt(-beta/3)`, defined for `beta <= 0`.
    pub fn beta2(&self) -> Result<f64> {
        if self.beta > 0.0 {
            return pre("beta2 needs beta <= 0");
        }
        Ok((-self.beta / 3.0).sqrt())
    }

    #[inline]
    pub fn phase(&self, xi: f64) -> f64 {
        self.alpha * xi * xi * xi - self.beta * xi
    }

    #[inline]
    pub fn phase_dd(&self, xi: Dd) -> Dd {
        xi.cube() * self.alpha - xi * self.beta
    }

    /// `phi'(xi)`.
    #[inline]
    pub fn group(&self, xi: f64) -> f64 {
        3.0 * self.alpha * xi * xi - self.beta
    }
}

pub fn phase(p: &PhaseParams, xi: f64) -> f64 {
    p.phase(xi)
}

/// Zero-sum triple; the third component is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FreqTriple {
    pub eta1: f64,
    pub eta2: f64,
}

impl FreqTriple {
    pub fn new(eta1: f64, eta2: f64) -> Self {
        FreqTriple { eta1, eta2 }
    }
    #[inline]
    pub fn eta3(&self) -> f64 {
        -(self.eta1 + self.eta2)
    }
    pub fn components(&self) -> [f64; 3] {
        [self.eta1, self.eta2, self.eta3()]
    }
}

/// Zero-sum quadruple; the fourth component is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FreqQuad {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl FreqQuad {
    pub fn new(eta1: f64, eta2: f64, eta3: f64) -> Self {
        FreqQuad { eta1, eta2, eta3 }
    }
    #[inline]
    pub fn eta4(&self) -> f64 {
        -(self.eta1 + self.eta2 + self.eta3)
    }
}

/// `eta1^3 + phi(eta2) + phi(eta3)`.
pub fn g0(p: &PhaseParams, t: FreqTriple) -> f64 {
    let e1 = t.eta1;
    e1 * e1 * e1 + p.phase(t.eta2) + p.phase(t.eta3())
}

/// `-3 alpha eta1^3 f(eta3/eta1) + beta eta1`; `None` when `eta1 = 0`.
pub fn g0_closed_form(p: &PhaseParams, t: FreqTriple) -> Option<f64> {
    let e1 = t.eta1;
    if e1 == 0.0 {
        return None;
    }
    Some(-3.0 * p.alpha * e1 * e1 * e1 * f_quadratic(p.alpha, t.eta3() / e1) + p.beta * e1)
}

/// The `alpha = 4` factorization `-3 eta1 [(2 eta2 + eta1)^2 - beta/3]`.
pub fn g0_alpha4_factored(beta: f64, t: FreqTriple) -> f64 {
    let z = 2.0 * t.eta2 + t.eta1;
    -3.0 * t.eta1 * (z * z - beta / 3.0)
}

/// `phi(eta1) + phi(eta2) + eta3^3`.
pub fn g1(p: &PhaseParams, t: FreqTriple) -> f64 {
    let e3 = t.eta3();
    p.phase(t.eta1) + p.phase(t.eta2) + e3 * e3 * e3
}

/// Sum of four phases over a zero-sum quadruple.
pub fn g2(p: &PhaseParams, q: FreqQuad) -> f64 {
    p.phase(q.eta1) + p.phase(q.eta2) + p.phase(q.eta3) + p.phase(q.eta4())
}

/// `-3 alpha (eta1+eta2)(eta1+eta3)(eta2+eta3)`.
pub fn g2_product(alpha: f64, q: FreqQuad) -> f64 {
    -3.0 * alpha * (q.eta1 + q.eta2) * (q.eta1 + q.eta3) * (q.eta2 + q.eta3)
}

/// `G0(e1, e2, -(e1+e2))` in double-double.
#[inline]
pub fn g0_dd(p: &PhaseParams, e1: Dd, e2: Dd) -> Dd {
    let e3 = -(e1 + e2);
    e1.cube() + p.phase_dd(e2) + p.phase_dd(e3)
}

/// `G1(e1, e2, -(e1+e2))` in double-double.
#[inline]
pub fn g1_dd(p: &PhaseParams, e1: Dd, e2: Dd) -> Dd {
    let e3 = -(e1 + e2);
    p.phase_dd(e1) + p.phase_dd(e2) + e3.cube()
}

/// `G2(e1, e2, e3, -(e1+e2+e3))` in product form, double-double.
#[inline]
pub fn g2_dd(alpha: f64, e1: Dd, e2: Dd, e3: Dd) -> Dd {
    (e1 + e2) * (e1 + e3) * (e2 + e3) * (-3.0 * alpha)
}

pub fn f_quadratic(alpha: f64, x: f64) -> f64 {
    x * x + x + (alpha - 1.0) / (3.0 * alpha)
}

/// `f(-1/2) = (alpha - 4) / (12 alpha)`.
pub fn m_alpha(alpha: f64) -> f64 {
    (alpha - 4.0) / (12.0 * alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootKind {
    TwoReal,
    DoubleRoot,
    ComplexPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootInfo {
    pub kind: RootKind,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

pub fn roots_of_f(alpha: f64) -> Result<RootInfo> {
    if alpha == 0.0 || !alpha.is_finite() {
        return pre("alpha must be finite and nonzero");
    }
    if alpha == 4.0 {
        return Ok(RootInfo { kind: RootKind::DoubleRoot, c1: Some(-0.5), c2: Some(-0.5) });
    }
    if !(0.0..=4.0).contains(&alpha) {
        return Ok(RootInfo { kind: RootKind::ComplexPair, c1: None, c2: None });
    }
    let (c1, c2) = roots_dd(alpha);
    Ok(RootInfo { kind: RootKind::TwoReal, c1: Some(c1.to_f64()), c2: Some(c2.to_f64()) })
}

/// Real roots `C1 < C2` in double-double, for `alpha in (0, 4]`.
pub fn roots_dd(alpha: f64) -> (Dd, Dd) {
    let r = (Dd::new(4.0 - alpha).div(Dd::new(3.0 * alpha))).sqrt() * 0.5;
    (Dd::new(-0.5) - r, Dd::new(-0.5) + r)
}

pub fn lambda_shift(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 4.0) {
        return pre(format!("lambda shift needs alpha in (0,4), got {alpha}"));
    }
    Ok(beta / (3.0 * alpha * (4.0 - alpha)).sqrt())
}

pub fn lambda_shift_dd(alpha: f64, beta: f64) -> Result<Dd> {
    if !(alpha > 0.0 && alpha < 4.0) {
        return pre(format!("lambda shift needs alpha in (0,4), got {alpha}"));
    }
    Ok(Dd::new(beta).div((Dd::new(3.0 * alpha) * (4.0 - alpha)).sqrt()))
}

pub fn scale_system(p: &PhaseParams, lambda: f64) -> Result<PhaseParams> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return pre(format!("scaling needs lambda >= 1, got {lambda}"));
    }
    Ok(PhaseParams { alpha: p.alpha, beta: p.beta / (lambda * lambda) })
}

/// The field map `u -> lambda^-2 u(x/lambda, t/lambda^3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldScaling {
    pub lambda: f64,
}

impl FieldScaling {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return pre(format!("scaling needs lambda >= 1, got {lambda}"));
        }
        Ok(FieldScaling { lambda })
    }
    pub fn amplitude(&self) -> f64 {
        self.lambda.powi(-2)
    }
    /// Point of the original field sampled by the scaled field at `(x, t)`.
    pub fn source_point(&self, x: f64, t: f64) -> (f64, f64) {
        (x / self.lambda, t / self.lambda.powi(3))
    }
    pub fn apply(&self, u: impl Fn(f64, f64) -> f64, x: f64, t: f64) -> f64 {
        let (xs, ts) = self.source_point(x, t);
        self.amplitude() * u(xs, ts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// Node weights supplied by a composite Gauss-Legendre rule.
    GaussLegendre,
    /// Trapezoid weights on the given node set.
    Trapezoid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledSpectrum {
    xi: Vec<f64>,
    values: Vec<Complex64>,
    weights: Vec<f64>,
    rule: WeightRule,
}

impl SampledSpectrum {
    /// Trapezoid weights on strictly increasing nodes.
    pub fn trapezoid(xi: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        check_nodes(&xi, &values)?;
        let n = xi.len();
        let mut w = vec![0.0; n];
        for i in 0..n.saturating_sub(1) {
            let h = 0.5 * (xi[i + 1] - xi[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        Ok(SampledSpectrum { xi, values, weights: w, rule: WeightRule::Trapezoid })
    }

    /// Samples `g` on a composite Gauss-Legendre rule over each interval.
    pub fn gauss_legendre(
        intervals: &[(f64, f64)],
        panels: usize,
        order: usize,
        g: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let mut xi = Vec::new();
        let mut weights = Vec::new();
        let mut sorted = intervals.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(l, r) in &sorted {
            let (x, w) = quadrature::composite_gl(l, r, panels, order);
            xi.extend(x);
            weights.extend(w);
        }
        let values: Vec<Complex64> = xi.iter().map(|&x| g(x)).collect();
        check_nodes(&xi, &values)?;
        Ok(SampledSpectrum { xi, values, weights, rule: WeightRule::GaussLegendre })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn rule(&self) -> WeightRule {
        self.rule
    }
}

fn check_nodes(xi: &[f64], values: &[Complex64]) -> Result<()> {
    if xi.is_empty() {
        return Err(Error::Empty("spectrum has no nodes"));
    }
    if xi.len() != values.len() {
        return pre("node and value counts differ");
    }
    if xi.windows(2).any(|w| !(w[1] > w[0])) {
        return pre("spectrum nodes must be strictly increasing");
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return pre("spectrum values must be finite");
    }
    Ok(())
}

/// `(int <xi>^{2s} |g(xi)|^2 dxi)^{1/2}` by the spectrum's weights.
pub fn sobolev_norm(spec: &SampledSpectrum, s: f64) -> Result<f64> {
    if spec.xi.is_empty() {
        return Err(Error::Empty("spectrum has no nodes"));
    }
    let sum: f64 = spec
        .xi
        .iter()
        .zip(&spec.values)
        .zip(&spec.weights)
        .map(|((&x, v), &w)| w * bracket(x).powf(2.0 * s) * v.norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormSpec {
    pub s: f64,
    pub b: f64,
}

/// Cell-centred samples of `w(xi, tau)` on a tensor grid, row-major in `xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeGrid {
    pub xi: Vec<f64>,
    pub tau: Vec<f64>,
    pub dxi: f64,
    pub dtau: f64,
    pub values: Vec<Complex64>,
}

impl SpaceTimeGrid {
    pub fn new(xi: Vec<f64>, tau: Vec<f64>, dxi: f64, dtau: f64, values: Vec<Complex64>) -> Result<Self> {
        if xi.is_empty() || tau.is_empty() {
            return Err(Error::Empty("space-time grid"));
        }
        if values.len() != xi.len() * tau.len() {
            return pre("grid value count must be |xi|*|tau|");
        }
        Ok(SpaceTimeGrid { xi, tau, dxi, dtau, values })
    }
}

pub fn xsb_norm(w: &SpaceTimeGrid, spec: NormSpec, p: &PhaseParams) -> Result<f64> {
    if w.values.is_empty() {
        return Err(Error::Empty("space-time grid"));
    }
    let nt = w.tau.len();
    let mut sum = 0.0;
    for (i, &x) in w.xi.iter().enumerate() {
        let ws = bracket(x).powf(2.0 * spec.s);
        let ph = p.phase(x);
        for (j, &t) in w.tau.iter().enumerate() {
            let v = w.values[i * nt + j];
            sum += ws * bracket(t - ph).powf(2.0 * spec.b) * v.norm_sqr();
        }
    }
    Ok((sum * w.dxi * w.dtau).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(a: f64, b: f64) -> PhaseParams {
        PhaseParams::new(a, b).unwrap()
    }

    #[test]
    fn phase_examples() {
        assert_eq!(phase(&pp(1.0, 0.0), 2.0), 8.0);
        assert_eq!(phase(&pp(4.0, 3.0), 1.0), 1.0);
        assert_eq!(phase(&pp(4.0, 0.0), -1.0), -4.0);
    }

    #[test]
    fn zero_alpha_rejected() {
        assert!(PhaseParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn g0_examples() {
        assert_eq!(g0(&pp(4.0, 0.0), FreqTriple::new(1.0, -0.5)), 0.0);
        assert_eq!(g0(&pp(4.0, 3.0), FreqTriple::new(1.0, 0.0)), 0.0);
        let t = FreqTriple::new(2.0, 1.0);
        assert_eq!(t.eta3(), -3.0);
        assert_eq!(g0(&pp(4.0, 0.0), t), -96.0);
        assert_eq!(g0_alpha4_factored(0.0, t), -96.0);
    }

    #[test]
    fn g1_examples() {
        assert_eq!(g1(&pp(1.0, 5.0), FreqTriple::new(1.0, 1.0)), -16.0);
        assert_eq!(g1(&pp(4.0, 0.0), FreqTriple::new(1.0, -1.0)), 0.0);
    }

    #[test]
    fn g2_examples() {
        let p = pp(4.0, 7.0);
        let q = FreqQuad::new(3.0, 1.0, -1.0);
        assert_eq!(q.eta4(), -3.0);
        assert_eq!(g2(&p, q), 0.0);
        let q = FreqQuad::new(3.0, 1.0, -2.0);
        assert_eq!(g2_product(4.0, q), 48.0);
        assert_eq!(g2(&p, q), 48.0);
        assert_eq!(g2(&pp(4.0, 0.0), FreqQuad::new(2.0, 1.0, -1.0)), 0.0);
        assert_eq!(g2(&pp(4.0, 2.0), FreqQuad::new(1.0, 1.0, -1.0)), 0.0);
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_quadratic(1.0, 0.0), 0.0);
        assert_eq!(f_quadratic(1.0, -1.0), 0.0);
        assert_eq!(f_quadratic(4.0, -0.5), 0.0);
        assert!((f_quadratic(8.0, -0.5) - 1.0 / 24.0).abs() < 1e-16);
        assert!((m_alpha(8.0) - 1.0 / 24.0).abs() < 1e-16);
        assert!((m_alpha(-2.0) - 0.25).abs() < 1e-16);
        assert!((f_quadratic(-2.0, -0.5) - 0.25).abs() < 1e-16);
    }

    #[test]
    fn roots_examples() {
        let r = roots_of_f(4.0).unwrap();
        assert_eq!(r.kind, RootKind::DoubleRoot);
        assert_eq!((r.c1, r.c2), (Some(-0.5), Some(-0.5)));
        let r = roots_of_f(1.0).unwrap();
        assert_eq!(r.kind, RootKind::TwoReal);
        assert_eq!((r.c1, r.c2), (Some(-1.0), Some(0.0)));
        let r = roots_of_f(2.0).unwrap();
        let h = 0.5 * (1.0f64 / 3.0).sqrt();
        assert!((r.c1.unwrap() - (-0.5 - h)).abs() < 1e-15);
        assert!((r.c2.unwrap() - (-0.5 + h)).abs() < 1e-15);
        assert!(f_quadratic(2.0, r.c1.unwrap()).abs() < 1e-15);
        assert_eq!(roots_of_f(8.0).unwrap().kind, RootKind::ComplexPair);
        assert_eq!(roots_of_f(-1.0).unwrap().kind, RootKind::ComplexPair);
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_shift(1.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambda_shift(3.0, 0.0).unwrap(), 0.0);
        assert!((lambda_shift(2.0, 2.0).unwrap() - 2.0 / 12f64.sqrt()).abs() < 1e-15);
        assert!(lambda_shift(4.0, 1.0).is_err());
        assert!(lambda_shift(-1.0, 1.0).is_err());
        for &(a, b) in &[(0.5, 1.0), (2.0, 1.0), (3.5, -2.0)] {
            let (c1, c2) = roots_dd(a);
            let l = lambda_shift_dd(a, b).unwrap();
            let res = l * (c2 - c1) * (-3.0 * a) + b;
            assert!(res.to_f64().abs() < 1e-28, "{a} {b} {}", res.to_f64());
        }
    }

    #[test]
    fn scaling_examples() {
        let p = pp(4.0, 3.0);
        assert_eq!(scale_system(&p, 1.0).unwrap(), p);
        let q = scale_system(&pp(4.0, -3.0), 10.0).unwrap();
        assert!((q.beta + 0.03).abs() < 1e-17);
        assert!(scale_system(&p, 0.5).is_err());
        let a = scale_system(&scale_system(&p, 2.0).unwrap(), 3.0).unwrap();
        let b = scale_system(&p, 6.0).unwrap();
        assert!((a.beta - b.beta).abs() < 1e-16);
        let fs = FieldScaling::new(2.0).unwrap();
        assert_eq!(fs.apply(|x, t| x + t, 4.0, 8.0), 0.25 * (2.0 + 1.0));
    }

    #[test]
    fn beta_accessors() {
        assert_eq!(pp(4.0, 3.0).beta1().unwrap(), 1.0);
        assert_eq!(pp(4.0, -3.0).beta2().unwrap(), 1.0);
        assert!(pp(4.0, -3.0).beta1().is_err());
        assert!(pp(4.0, 3.0).beta2().is_err());
    }

    #[test]
    fn sobolev_bump_at_s0() {
        let (l, r, a) = (2.0, 3.5, 1.7);
        let sp = SampledSpectrum::gauss_legendre(&[(l, r)], 2, 16, |_| Complex64::new(a, 0.0)).unwrap();
        let n = sobolev_norm(&sp, 0.0).unwrap();
        assert!((n * n - a * a * (r - l)).abs() < 1e-12);
        // s = 1 closed form: a^2 ((1+r)^3 - (1+l)^3)/3
        let n1 = sobolev_norm(&sp, 1.0).unwrap();
        let want = a * a * ((1.0 + r).powi(3) - (1.0 + l).powi(3)) / 3.0;
        assert!((n1 * n1 - want).abs() < 1e-11 * want);
    }

    #[test]
    fn sobolev_trapezoid_converges() {
        let f = |x: f64| Complex64::new(x * x, 0.0);
        let grid = |m: usize| {
            let xi: Vec<f64> = (0..=m).map(|i| 1.0 + i as f64 / m as f64).collect();
            let v = xi.iter().map(|&x| f(x)).collect();
            SampledSpectrum::trapezoid(xi, v).unwrap()
        };
        let a = sobolev_norm(&grid(4000), 0.5).unwrap();
        let b = sobolev_norm(&grid(8000), 0.5).unwrap();
        assert!(((a - b) / b).abs() < 1e-6);
    }

    #[test]
    fn beta_positive_data_norm_is_order_one() {
        for &n in &[256.0f64, 4096.0, 65536.0] {
            for &s in &[0.0, 0.25, 0.5] {
                let g = 1.0 / n;
                let l = 2.0 * n + 1.0;
                let amp = g.powf(-0.5) * n.powf(-s);
                let sp = SampledSpectrum::gauss_legendre(&[(l, l + g)], 1, 8, |_| amp.into()).unwrap();
                let v = sobolev_norm(&sp, s).unwrap();
                assert!(v > 0.25 && v < 4.0, "{n} {s} {v}");
            }
        }
    }

    #[test]
    fn empty_spectrum_rejected() {
        assert!(SampledSpectrum::trapezoid(vec![], vec![]).is_err());
        assert!(SampledSpectrum::trapezoid(vec![1.0, 1.0], vec![0.0.into(); 2]).is_err());
    }

    #[test]
    fn xsb_examples() {
        let p = pp(4.0, 3.0);
        let xi = vec![0.5, 1.5];
        let tau = vec![-1.0, 0.0, 1.0];
        let vals: Vec<Complex64> = (0..6).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let g = SpaceTimeGrid::new(xi.clone(), tau.clone(), 1.0, 0.5, vals.clone()).unwrap();
        let l2 = (vals.iter().map(|v| v.norm_sqr()).sum::<f64>() * 0.5).sqrt();
        assert!((xsb_norm(&g, NormSpec { s: 0.0, b: 0.0 }, &p).unwrap() - l2).abs() < 1e-14);

        // one cell on the characteristic surface
        let x0 = 1.25;
        let g = SpaceTimeGrid::new(vec![x0], vec![p.phase(x0)], 1.0, 1.0, vec![2.0.into()]).unwrap();
        let v = xsb_norm(&g, NormSpec { s: 1.0, b: 0.7 }, &p).unwrap();
        assert!((v - 2.0 * bracket(x0)).abs() < 1e-14);

        // shell at distance M - 1, so <tau - phi> = M
        let m = 9.0;
        let g = SpaceTimeGrid::new(vec![x0], vec![p.phase(x0) + m - 1.0], 1.0, 1.0, vec![1.0.into()]).unwrap();
        let a = xsb_norm(&g, NormSpec { s: 0.3, b: 0.2 }, &p).unwrap();
        let b = xsb_norm(&g, NormSpec { s: 0.3, b: 1.2 }, &p).unwrap();
        assert!((b / a - m).abs() < 1e-12);
    }
}
