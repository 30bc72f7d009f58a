"""Smoke test for the `dcp` extension module.

Build and install it first, e.g.

    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install target/wheels/dcp-*.whl
"""

import math
import random

import dcp


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok   {msg}")


def gaussian_record(rng, i):
    x = rng.random()
    mu, sigma = math.sin(2 * math.pi * x), 0.1 + 0.4 * x
    draws = [rng.gauss(mu, sigma) for _ in range(100)]
    return {"id": f"r{i}", "y": rng.gauss(mu, sigma), "draws": draws}


def main():
    dv = dcp.DrawVector([0.0, 1.0, 2.0, 3.0, 4.0])
    check(len(dv) == 5 and dv.mean == 2.0 and dv.median == 2.0, "draw summaries")

    check(dcp.threshold([float(i) for i in range(1, 11)], 0.1) == 10.0, "threshold is the 10th of 10")
    try:
        dcp.threshold([1.0, 2.0], 0.1)
    except dcp.InsufficientCalibration:
        check(True, "too few scores raise InsufficientCalibration")
    else:
        check(False, "too few scores raise InsufficientCalibration")

    w = dcp.CalibrationWindow([1.0, 2.0, 3.0], alpha=0.5)
    check(w.qhat == 2.0 and w.update(0.5) == 2.0 and w.scores == [2.0, 3.0, 0.5], "window update")

    cfg = dcp.Config(score="residual")
    dv = dcp.DrawVector([-1.0, 0.0, 1.0])
    low, up, status = dcp.interval(dv, 1.0, cfg)
    check(abs(low + 1) < 1e-8 and abs(up - 1) < 1e-8 and status == "two_sided", "residual interval")
    a = dcp.interval(dv, 1.0, cfg, analytic=True)
    check(abs(a[0] - low) < 1e-8 and abs(a[1] - up) < 1e-8, "analytic inverse agrees")
    check(dcp.score(3.0, dv, cfg) == 3.0, "residual score")
    check(dcp.Config.from_json(cfg.to_json()).score == "residual", "config JSON round trip")

    report = dcp.metrics([0.5, 1.5, 3.1], [0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    check(report["n"] == 3 and abs(report["picp"] - 2 / 3) < 1e-12, "metric report")

    rng = random.Random(7)
    calib = [gaussian_record(rng, i) for i in range(500)]
    test = [gaussian_record(rng, i) for i in range(1000)]
    for family in ["residual", "z", "qis", "hdi", "knn"]:
        out = dcp.run(calib, test, dcp.Config(score=family))
        cov = out["report"]["picp"]
        check(len(out["rows"]) == 1000 and cov > 0.85, f"{family} run covers {cov:.3f}")

    data = dcp.synth("aleatoric", seed=1)
    out = dcp.run(data["calib"], data["test"], dcp.Config(score="z"))
    r = out["report"]
    check(r["picp"] >= r["c_a"], f"aleatoric z coverage {r['picp']:.3f} >= {r['c_a']:.3f}")
    print("all checks passed")


if __name__ == "__main__":
    main()
