import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cusickwalk import kernels

ROOT = Path(__file__).resolve().parents[1]


def _backend(env_value):
    env = dict(os.environ)
    env.pop("CUSICKWALK_KERNEL", None)
    if env_value is not None:
        env["CUSICKWALK_KERNEL"] = env_value
    code = "from cusickwalk import kernels; print(kernels.BACKEND)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                          text=True, check=True).stdout.strip()


def test_fallback_forced_by_env():
    assert _backend("python") == "python"
    assert _backend(None) in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="extension not built")
@pytest.mark.parametrize("dtype", [np.int32, np.int64])
def test_backends_agree_on_random_pairs(dtype):
    rng = np.random.default_rng(0)
    rows, W, c = 37, 15, 7
    A = rng.integers(0, 1000, size=(rows, W)).astype(dtype)
    B = rng.integers(0, 1000, size=(rows, W)).astype(dtype)
    A[:, 0] = B[:, -1] = 0
    outs = []
    for fn in (kernels.python_advance, kernels.advance):
        V, var, mean = (np.empty(rows, np.int64) for _ in range(3))
        An = np.empty((2 * rows, W), dtype)
        Bn = np.empty((2 * rows, W), dtype)
        fn(A, B, V, var, mean, rows, c, An, Bn)
        outs.append((V, var, mean, An, Bn))
    for a, b in zip(*outs):
        assert np.array_equal(a, b)


def test_benchmark_script_runs():
    proc = subprocess.run(
        [sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"),
         "--max", "20001", "--level", "8", "--repeat", "1"],
        capture_output=True, text=True, check=True,
    )
    report = json.loads(proc.stdout)
    assert report["scan"]["K"] == 20001 and "python" in report["advance"]["seconds"]
