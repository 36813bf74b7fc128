"""Smoke test for the mblab extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/mblab-*.whl
"""

import math

import mblab


def check(name, ok):
    print(f"{'ok  ' if ok else 'FAIL'} {name}")
    return ok


def main():
    results = []

    p = mblab.PhaseParams(4.0, 3.0)
    e1, e2 = 1.7, -0.4
    e3 = -(e1 + e2)
    results.append(check("g1 exchange", abs(p.g1(e1, e2) - p.g0(e3, e1)) < 1e-12))
    b1 = math.sqrt(1.0)
    z = 2 * e2 + e1
    results.append(check("g0 factorization", abs(p.g0(e1, e2) + 3 * e1 * (z + b1) * (z - b1)) < 1e-12))
    results.append(check("double root at alpha=4", p.roots() == (-0.5, -0.5)))
    results.append(check("complex roots off [0,4]", mblab.PhaseParams(5.0, 1.0).roots() is None))
    results.append(check("kernel at G=0", abs(mblab.kernel(0.0, 0.5) - 0.5j) < 1e-15))

    fit = mblab.growth_fit("beta-positive", 0.0, ladder=[2.0**k for k in range(8, 13)])
    print(" ", fit)
    results.append(check("growth slope 1/2", fit.passed and abs(fit.slope - 0.5) < 0.1))

    scans = mblab.lemma_scan("tau-pair", rho=[2.0], samples=20, seed=1)
    results.append(check("tau-pair ratios below 1.2 C_emp", max(scans[0]["ratios"]) <= 1.2 * scans[0]["c_emp"]))

    r = mblab.trichotomy_scan(-3.0, 4096.0)
    results.append(check("negative-beta floor", r["min_bracket_g"] >= 1 + 3 * 4096))

    sim = mblab.Simulation(64 * math.pi, 256, 4.0, 3.0, dt=1e-3)
    x = sim.x()
    sim.set_fields([math.exp(-t * t / 8) for t in x], [0.8 * math.exp(-((t - 3) ** 2) / 8) for t in x])
    d0 = sim.diagnostics()
    sim.advance(0.5)
    d1 = sim.diagnostics()
    results.append(check("time advanced", abs(sim.time - 0.5) < 1e-12))
    results.append(check("energy conserved", abs(d1["l2_energy"] / d0["l2_energy"] - 1) < 1e-6))

    try:
        mblab.Simulation(64 * math.pi, 100, 4.0, 3.0)
        results.append(check("bad grid rejected", False))
    except ValueError:
        results.append(check("bad grid rejected", True))

    print(f"{sum(results)}/{len(results)} passed (registry {mblab.REGISTRY_VERSION})")
    raise SystemExit(0 if all(results) else 1)


if __name__ == "__main__":
    main()
