#!/usr/bin/env python3
"""Smoke test for the erft_py extension module.

Build the module first, then run this script from the repository root:

    cargo build -p erft-py --release
    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_erft_py():
    candidates = [
        REPO / "target" / "release" / "liberft_py.so",
        REPO / "target" / "release" / "erft_py.so",
        REPO / "target" / "debug" / "liberft_py.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("liberft_py.so not found; run: cargo build -p erft-py --release")
    stage = Path(tempfile.mkdtemp(prefix="erft_py_"))
    shutil.copy2(built, stage / "erft_py.so")
    sys.path.insert(0, str(stage))
    import erft_py

    return erft_py


def approx_equal(d, expected, tol=1e-9):
    if set(d) != set(expected):
        return False
    return all(abs(d[k] - expected[k]) <= tol for k in d)


def main():
    erft_py = import_erft_py()
    scenarios = REPO / "scenarios"

    # interference: exact point mass on the input-port detector
    mz = erft_py.Circuit.from_file(str(scenarios / "mz_phi0.ifc"))
    assert mz.validate() == []
    assert mz.run_exact() == {"D_a": "1/1"}
    assert mz.run_exact() == mz.run_exact_enumerated()
    assert approx_equal(mz.run_quantum(), {"D_a": 1.0})
    verdict, max_diff = mz.compare()
    assert verdict == "pass" and max_diff <= 1e-9, (verdict, max_diff)

    # a pi shift flips the port
    pi_variant = erft_py.parse(mz.serialize().replace("phase a 0;", "phase a pi;"))
    assert pi_variant.run_exact() == {"D_b": "1/1"}

    # which-path measurement: four equal quarters, and conditioning on the
    # empty arm still gives 50/50 detectors in both engines
    measured = erft_py.Circuit.from_file(str(scenarios / "mz_measure_nd_b.ifc"))
    quarters = measured.run_exact()
    assert set(quarters.values()) == {"1/4"} and len(quarters) == 4, quarters
    toy_cond = measured.run_exact_conditioned([(0, "b=0")])
    assert toy_cond == {"b=0,D_a": "1/2", "b=0,D_b": "1/2"}, toy_cond
    q_cond = measured.run_quantum_conditioned([(0, "b=0")])
    assert approx_equal(q_cond, {"b=0,D_a": 0.5, "b=0,D_b": 0.5})

    # blocked arm: interaction-free signature, toy vs quantum
    blocked = erft_py.Circuit.from_file(str(scenarios / "mz_block.ifc"))
    assert blocked.run_exact() == {
        "absorbed@b,none": "1/2",
        "b=0,D_a": "1/4",
        "b=0,D_b": "1/4",
    }
    verdict, _ = blocked.compare()
    assert verdict == "pass"

    # sampling is reproducible and close to exact
    freq_one = measured.run_ensemble(20000, seed=11)
    freq_two = measured.run_ensemble(20000, seed=11)
    assert freq_one == freq_two
    exact = measured.run_exact_float()
    tv = 0.5 * sum(
        abs(freq_one.get(k, 0.0) - exact.get(k, 0.0))
        for k in set(freq_one) | set(exact)
    )
    assert tv < 0.02, tv

    # trial records are deterministic and carry trajectories
    transcript, trajectory = measured.run_trial(3, seed=11)
    again, _ = measured.run_trial(3, seed=11)
    assert transcript == again
    assert len(trajectory) == 7  # initial state plus one snapshot per element

    # locality audit: no off-mode accesses, all probes exactly zero
    findings, probes, max_dev = measured.audit(trials=300, seed=5)
    assert findings == [] and probes > 0 and max_dev == "0/1", (findings, probes, max_dev)

    # convergence ladder shrinks
    counts, tvs = measured.converge([100, 1000, 10000], seed=5)
    assert counts == [100, 1000, 10000]
    assert tvs[-1] <= 3.0 * math.sqrt(4.0 / 10000.0)

    # the unsupported phase is a clean error, not a crash
    try:
        erft_py.parse(
            "circuit bad { modes a,b; source excite a; bs a b; phase a pi/2; bs a b; detect a,b; }"
        )
    except ValueError as err:
        assert "unsupported phase" in str(err)
    else:
        sys.exit("expected a ValueError for the unsupported phase")

    print("smoke test ok:", erft_py.__version__)


if __name__ == "__main__":
    main()
