use mb_lab::picard::{
    build_data, overlap_measure, second_iterate, third_iterate, window_norm, BumpProfile, Construction, ConstructionId,
    IterateField, Window,
};

const T: f64 = 0.05;

fn id(kind: Construction, s: f64, n: f64) -> ConstructionId {
    let (alpha, beta) = match kind {
        Construction::BetaPositive => (4.0, 3.0),
        Construction::BetaNegative => (4.0, -3.0),
        Construction::BetaZero => (4.0, 0.0),
        Construction::GeneralAlpha => (2.0, 1.0),
    };
    ConstructionId::new(kind, alpha, beta, s, n).unwrap()
}

fn reflect(b: &[BumpProfile]) -> Vec<BumpProfile> {
    b.iter().map(|x| x.reflect()).collect()
}

fn assert_parity(f: &IterateField, r: &IterateField) {
    let (xf, xr) = (f.xi(), r.xi());
    let n = xf.len();
    assert_eq!(n, xr.len());
    let scale = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (i, (x, v)) in xf.iter().zip(&f.values).enumerate() {
        let j = n - 1 - i;
        assert!((x + xr[j]).abs() <= 1e-12 * x.abs());
        assert!((r.values[j] + v.conj()).norm() <= 1e-10 * scale, "{v} vs {}", r.values[j]);
    }
}

#[test]
fn second_iterate_reflection_parity() {
    let d = build_data(&id(Construction::BetaPositive, 0.0, 256.0)).unwrap();
    let p = d.id.phase();
    let f = second_iterate(&d.phi, &d.psi, &p, T, &Window::Interval(d.window), 64).unwrap();
    let r = second_iterate(&reflect(&d.phi), &reflect(&d.psi), &p, T, &Window::Interval(d.window.reflect()), 64).unwrap();
    assert_parity(&f, &r);
}

#[test]
fn third_iterate_reflection_parity() {
    let d = build_data(&id(Construction::BetaNegative, 0.0, 256.0)).unwrap();
    let p = d.id.phase();
    let f = third_iterate(&d.psi, &p, T, &Window::Interval(d.window), 64).unwrap();
    let r = third_iterate(&reflect(&d.psi), &p, T, &Window::Interval(d.window.reflect()), 64).unwrap();
    assert_parity(&f, &r);
}

#[test]
fn norm_increases_with_time() {
    let c = id(Construction::BetaPositive, 0.0, 1024.0);
    let norms: Vec<f64> = [0.02, 0.04, 0.06].iter().map(|&t| window_norm(&c, t, 64).unwrap().norm).collect();
    assert!(norms.windows(2).all(|w| w[1] > w[0]), "{norms:?}");
}

#[test]
fn doubling_nodes_per_bump_is_converged() {
    for kind in [Construction::BetaPositive, Construction::BetaZero, Construction::GeneralAlpha] {
        let c = id(kind, 0.0, 4096.0);
        let a = window_norm(&c, T, 64).unwrap().norm;
        let b = window_norm(&c, T, 128).unwrap().norm;
        assert!((a / b - 1.0).abs() < 1e-8, "{} {a} {b}", kind.name());
    }
}

#[test]
fn pointwise_lower_bound_on_window() {
    for n in [256.0, 1024.0, 4096.0] {
        let d = build_data(&id(Construction::BetaPositive, 0.0, n)).unwrap();
        let f = d.iterate(T, &Window::Interval(d.window), 64).unwrap();
        let amp2 = d.phi[0].amplitude * d.psi[0].amplitude;
        for (x, v) in f.nodes().iter().zip(&f.values) {
            let floor = amp2 * x.to_f64().abs() * T * overlap_measure(&d, *x);
            assert!(v.norm() >= floor, "N={n} xi={} |F|={} floor={floor}", x.to_f64(), v.norm());
        }
    }
}

#[test]
fn window_norm_grows_like_root_n() {
    for n in [256.0, 1024.0, 4096.0] {
        let v = window_norm(&id(Construction::BetaPositive, 0.0, n), T, 64).unwrap().norm;
        assert!(v >= 0.5 * T / 8f64.sqrt() * n.sqrt(), "N={n} norm {v}");
    }
}

#[test]
fn full_support_dominates_window() {
    let d = build_data(&id(Construction::BetaPositive, 0.0, 1024.0)).unwrap();
    let full = d.iterate_full(T, 64).unwrap();
    let win = d.iterate(T, &Window::Interval(d.window), 64).unwrap();
    let nf = mb_lab::picard::windowed_norm(&full, 0.0, &Window::Full).unwrap();
    let nw = mb_lab::picard::windowed_norm(&win, 0.0, &Window::Interval(d.window)).unwrap();
    assert!(nf >= nw);
    let restricted = mb_lab::picard::windowed_norm(&full, 0.0, &Window::Interval(d.window)).unwrap();
    assert!((restricted / nw - 1.0).abs() < 1e-8);
}

#[test]
fn growth_fit_rejects_bad_ladders() {
    let c = id(Construction::BetaPositive, 0.0, 256.0);
    assert!(mb_lab::picard::growth_fit(&c, T, &[256.0, 512.0, 1024.0], 64).is_err());
    assert!(mb_lab::picard::growth_fit(&c, T, &[256.0, 512.0, 1000.0, 2048.0, 4096.0], 64).is_err());
}
