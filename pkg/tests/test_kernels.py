import json
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import special

from hwl import kernels

needs_numba = pytest.mark.skipif(not kernels.USE_NUMBA, reason="numba path disabled")


def test_j1_against_scipy():
    x = np.concatenate([np.linspace(0, 30, 301), np.geomspace(30, 1e5, 50)])
    assert np.allclose(kernels.j1(x), special.j1(x), rtol=1e-10, atol=1e-13)
    assert kernels.j1(0.0) == 0.0


@needs_numba
def test_j1_backends_agree():
    x = np.linspace(0, 200, 2001)
    assert np.allclose(kernels._nb_j1_array(x), kernels._np_j1(x), rtol=1e-14, atol=1e-15)


@needs_numba
def test_pair_power_backends_agree():
    rng = np.random.default_rng(1)
    x, y = rng.random((1000, 2)), rng.random((1000, 2))
    a = kernels._nb_pair_power_sums(x, y, 1.0)
    b = kernels._np_pair_power_sums(x, y, 1.0)
    assert np.allclose(a, b, rtol=1e-12)


@needs_numba
def test_shell_pair_backends_agree():
    rng = np.random.default_rng(2)
    ang = rng.uniform(0, 2 * np.pi, (2, 500))
    yx = np.column_stack([np.cos(ang[0]), np.sin(ang[0])])
    yy = np.column_stack([np.cos(ang[1]), np.sin(ang[1])])
    ux, uy = rng.random(500), rng.random(500)
    args = (yx, ux, 0.3, 0.2, yy, uy, 0.3, 0.2, 0.5, 1.0)
    assert np.allclose(kernels._nb_shell_pair_powers(*args), kernels._np_shell_pair_powers(*args), rtol=1e-13)


@needs_numba
@pytest.mark.parametrize("name,args", [
    ("disk_block_sums", (0.5, 0.7, 1.0, 200, 0.5)),
    ("square_block_sums", (0.5, 0.7, 1.0, 200, 0.5)),
    ("line_block_sums", (0, 0.1, 0.0, 0.6, 5000, 0.05)),
    ("line_block_sums", (1, 0.4, 0.5, 0.6, 5000, 0.05)),
])
def test_block_sum_backends_agree(name, args):
    a = getattr(kernels, "_nb_" + name)(*args)
    b = getattr(kernels, "_np_" + name)(*args)
    assert np.allclose(np.sum(a, axis=0), np.sum(b, axis=0), rtol=1e-11)


def test_disable_flag_selects_numpy():
    code = ("import json; from hwl import kernels; from hwl.geometry import parse_window, shell;"
            "from hwl.riesz import mean_riesz; e = mean_riesz(shell(parse_window('disk'), 0.2, 0.3), 1.0, 100000, 3);"
            "print(json.dumps([kernels.backend(), e.value, e.stderr]))")
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, HWL_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[flag] = json.loads(res.stdout)
    assert out["1"][0] == "numpy"
    # same random draws, so the two backends agree to rounding
    assert out["1"][1] == pytest.approx(out["0"][1], rel=1e-10)
