"""Smoke test for the `skewlab` extension module.

Build and place the module next to this script first:

    cargo build --release -p skewlab-py --features extension-module
    cp target/release/libskewlab_py.so python/skewlab.so
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import skewlab  # noqa: E402


def check(name, ok, detail=""):
    print(("PASS " if ok else "FAIL ") + name + (": " + detail if detail else ""))
    return ok


def main():
    results = []

    levels = skewlab.level_distribution(100)
    exact = math.comb(200, 100) / 4**100
    results.append(check("level mass at 0", math.isclose(levels[0], exact, rel_tol=1e-12), f"{levels[0]!r}"))
    results.append(check("levels sum to one", math.isclose(sum(levels.values()), 1.0, rel_tol=1e-12)))

    h = skewlab.Growth("poly:n^5")
    results.append(check("growth eval", h(6208) == 6208**5))
    results.append(check("remark gap", skewlab.Growth("remarkcex").gap(4, 1) == 2))

    y = skewlab.BasePoint(seed=1, id=3)
    steps = y.steps(0, 64)
    f = y.birkhoff([10, 64])
    results.append(check("birkhoff sums", f == [sum(steps[:10]), sum(steps)], f"{f}"))
    results.append(check("shift", y.shifted(5).steps(0, 10) == steps[5:15]))

    w = skewlab.Omega(9, 0)
    results.append(check("omega shift", w.read_shifted(4, 3) == w.read(7)))
    results.append(check("cylinder", w.in_cylinder("0:" + ("1" if w.read(0) else "0"))))

    cfg = skewlab.Config(m=2, horizon=8, samples=24, omega_per_point=8, seed=5)
    rep = skewlab.triple(cfg, 2, 9)
    d = rep.to_dict()
    results.append(check("triple report", rep.experiment == "triple" and len(d["rows"]) == 8, repr(rep)))
    results.append(check("zero branch", rep.column("hits")[0] >= 0))
    with tempfile.TemporaryDirectory() as tmp:
        rep.write(tmp)
        results.append(check("report files", os.path.exists(os.path.join(tmp, "triple.csv"))))

    series = skewlab.series("poly:n^5", 100, 100)
    partial = series.to_dict()["summary"]["partial_sum"]
    results.append(check("series partial sum", math.isclose(partial, 1.1963866090863673, rel_tol=1e-14), f"{partial!r}"))

    results.append(check("selftest", skewlab.selftest(cfg).all_passed))

    try:
        skewlab.e_measure(skewlab.Config(), [200])
        results.append(check("budget error", False, "no exception"))
    except skewlab.BudgetError:
        results.append(check("budget error", True))

    try:
        skewlab.Config(p1="n^4")
        results.append(check("degree check", False, "no exception"))
    except ValueError as e:
        results.append(check("degree check", "degree" in str(e)))

    print(f"smoke: {sum(results)} passed, {len(results) - sum(results)} failed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
