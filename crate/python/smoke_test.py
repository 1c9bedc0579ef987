"""Smoke test for the riskmon extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install` of a wheel from `maturin build`.
"""

import math
import random

import riskmon


def test_tracker_closed_form():
    tr = riskmon.Tracker("wealth_mult", epsilon=0.1, delta=0.1, strategy="fixed:0.5", burn_in=0)
    tr.step([1.0])
    tr.step([1.0])
    assert math.isclose(math.exp(tr.value), 2.1025, rel_tol=1e-12)
    for _ in range(5):
        tr.step([1.0])
    assert tr.stopped and tr.stop_time == 7


def test_agra_rate_is_predictable():
    tr = riskmon.Tracker("wealth_mult")
    assert tr.next_rate() == 0.0
    tr.step([0.9])
    assert tr.next_rate() > 0.0


def test_monitor_with_truth():
    rng = random.Random(0)
    thresholds, horizon = 3, 600
    means = [0.02, 0.2, 0.5]
    losses = [[[float(rng.random() < means[k])] for k in range(thresholds)] for _ in range(horizon)]
    risk = [means[:] for _ in range(horizon)]
    res = riskmon.monitor(losses, kind="wealth_mult", risk=risk)
    assert res.tracker == "wealth_mult"
    assert len(res.cs_sizes) == horizon
    assert all(a >= b for a, b in zip(res.cs_sizes, res.cs_sizes[1:]))
    assert res.tau_star == [None, 1, 1]
    assert res.tau[0] is None and res.tau[2] is not None
    assert not any(res.false_alarm)


def test_sweep_and_hash():
    cfg = "\n".join([
        "trials = 3",
        "horizon = 200",
        'windows = ["none", 20]',
        "batches = [1]",
        "[grid]",
        "lo = 0.0",
        "hi = 1.0",
        "points = 5",
    ])
    rows = riskmon.sweep(cfg)
    assert len(rows) == 2 * 4
    assert {r.tracker for r in rows} == {"running_risk", "wealth_mult", "wealth_sum", "wealth_eb"}
    assert riskmon.config_hash(cfg) == riskmon.config_hash(cfg + "\n")
    try:
        riskmon.sweep("epsilon = 3.0")
    except ValueError as e:
        assert "epsilon" in str(e)
    else:
        raise AssertionError("invalid config accepted")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
