//! Gauss-Legendre rules, adaptive Gauss-Kronrod and small polynomial root finders.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let r = Arc::new(compute_gl(n));
    cache.lock().unwrap().insert(n, r.clone());
    r
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

/// Composite rule: `panels` equal panels of an `order`-point rule on `[a, b]`.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let l = a + p as f64 * h;
        for (x, w) in gl.0.iter().zip(&gl.1) {
            xs.push(l + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel; returns `(kronrod, |kronrod - gauss|)`.
pub fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

struct Panel {
    l: f64,
    r: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive Gauss-Kronrod on `[a, b]`, bisecting the worst panel.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_panels: usize) -> Integral {
    let mut heap = std::collections::BinaryHeap::new();
    let (v, e) = gk15(&mut f, a, b);
    heap.push(Panel { l: a, r: b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    let mut evals = 15;
    while err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_panels {
        let w = heap.pop().unwrap();
        let m = 0.5 * (w.l + w.r);
        if !(m > w.l && m < w.r) {
            heap.push(w);
            break;
        }
        let (v1, e1) = gk15(&mut f, w.l, m);
        let (v2, e2) = gk15(&mut f, m, w.r);
        evals += 30;
        total += v1 + v2 - w.value;
        err += e1 + e2 - w.error;
        heap.push(Panel { l: w.l, r: m, value: v1, error: e1 });
        heap.push(Panel { l: m, r: w.r, value: v2, error: e2 });
    }
    // re-sum to shed drift from the running updates
    let total = heap.iter().map(|p| p.value).sum();
    let err = heap.iter().map(|p| p.error).sum();
    Integral { value: total, error: err, evals }
}

/// Real roots of `a x^2 + b x + c`, ascending. Degrades to the linear case.
pub fn real_roots_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut r = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    r.sort_by(f64::total_cmp);
    r
}

/// Real roots of `a x^3 + b x^2 + c x + d`, ascending, Newton-polished.
pub fn real_roots_cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a == 0.0 {
        return real_roots_quadratic(b, c, d);
    }
    let (p2, p1, p0) = (b / a, c / a, d / a);
    let q = (p2 * p2 - 3.0 * p1) / 9.0;
    let r = (2.0 * p2.powi(3) - 9.0 * p2 * p1 + 27.0 * p0) / 54.0;
    let mut roots = if r * r < q.powi(3) {
        let th = (r / q.powi(3).sqrt()).clamp(-1.0, 1.0).acos();
        let m = -2.0 * q.sqrt();
        let tp = 2.0 * std::f64::consts::PI;
        vec![
            m * (th / 3.0).cos() - p2 / 3.0,
            m * ((th + tp) / 3.0).cos() - p2 / 3.0,
            m * ((th - tp) / 3.0).cos() - p2 / 3.0,
        ]
    } else {
        let aa = -r.signum() * (r.abs() + (r * r - q.powi(3)).sqrt()).cbrt();
        let bb = if aa == 0.0 { 0.0 } else { q / aa };
        vec![aa + bb - p2 / 3.0]
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let fx = ((*x + p2) * *x + p1) * *x + p0;
            let dfx = (3.0 * *x + 2.0 * p2) * *x + p1;
            if dfx == 0.0 {
                break;
            }
            let nx = *x - fx / dfx;
            if !nx.is_finite() {
                break;
            }
            *x = nx;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64] {
            let g = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let s: f64 = g.0.iter().zip(&g.1).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - want).abs() < 1e-13, "n={n} deg={deg} {s} {want}");
            }
        }
    }

    #[test]
    fn composite_rule_sums_length() {
        let (x, w) = composite_gl(1.0, 4.0, 3, 7);
        assert_eq!(x.len(), 21);
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let r = adaptive(|x| 1.0 / (1.0 + x * x), -50.0, 50.0, 0.0, 1e-12, 1000);
        assert!((r.value - 2.0 * 50f64.atan()).abs() < 1e-11);
        let r = adaptive(|x| x.abs().sqrt(), -1.0, 1.0, 0.0, 1e-10, 2000);
        assert!((r.value - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_roots() {
        assert_eq!(real_roots_quadratic(1.0, -3.0, 2.0), vec![1.0, 2.0]);
        assert!(real_roots_quadratic(1.0, 0.0, 1.0).is_empty());
        assert_eq!(real_roots_quadratic(0.0, 2.0, -4.0), vec![2.0]);
    }

    #[test]
    fn cubic_roots() {
        let r = real_roots_cubic(1.0, -6.0, 11.0, -6.0);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = real_roots_cubic(2.0, 0.0, 2.0, -4.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-14);
    }
}
