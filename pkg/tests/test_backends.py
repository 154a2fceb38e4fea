"""Compiled core vs pure-Python fallback: identical semantics, same floats."""

import math
import subprocess
import sys

import numpy as np

from selftrap._backend import _core, pure  # type: ignore[attr-defined]
from selftrap import standard_params

P = standard_params()
ARGS = (P.Omega, P.A, P.B)


def test_backend_names():
    assert _core.BACKEND_NAME == "compiled"
    assert pure.BACKEND_NAME == "pure"


def test_bloch_traj_bitwise_identical():
    common = (*ARGS, P.delta0, 0.0, 0.0, 1e-3, 5000, 7, 0.2, 2.7, 0.4, 1e-12)
    dc, tc, sc, nc = _core.bloch_traj(*common)
    dp, tp, sp, np_ = pure.bloch_traj(*common)
    assert (sc, nc) == (sp, np_)
    assert np.array_equal(dc, dp)
    assert np.array_equal(tc, tp)


def test_bloch_noise_traj_bitwise_identical():
    rng = np.random.default_rng(3)
    xi = 0.1 * rng.standard_normal(200)
    common = (*ARGS, 0.1, 0.5, 0.0, 1e-3, 10, xi, 5, 1e-12, 1)
    dc, tc, sc, nc = _core.bloch_noise_traj(*common)
    dp, tp, sp, np_ = pure.bloch_noise_traj(*common)
    assert (sc, nc) == (sp, np_)
    assert np.array_equal(dc, dp)
    assert np.array_equal(tc, tp)


def test_detect_crossing_identical():
    common = (*ARGS, P.e_sep, 0.019, P.delta0, 0.0, 0.0, 1e-3, 60000,
              0.2, 2.6, 0.0, 1e-12)
    assert _core.bloch_detect_crossing(*common) == \
        pure.bloch_detect_crossing(*common)


def test_duffing_identical():
    common = (0.1, 1.0, 0.0, 0.0, 0.0, 1e-3, 4000, 4)
    xc, vc = _core.duffing_traj(*common)
    xp, vp = pure.duffing_traj(*common)
    assert np.array_equal(xc, xp)
    assert np.array_equal(vc, vp)
    esc = (0.2, 1.0, 0.0, 0.0, 0.0, 1e-3, 20000)
    assert _core.duffing_escape(*esc) == pure.duffing_escape(*esc)


def test_slowflow_identical():
    common = (0.07, -0.05, 3.0 / 32.0, 0.0, math.pi, 0.0, 1e-3, 3000, 3)
    ac, pc = _core.slowflow_traj(*common)
    ap, pp = pure.slowflow_traj(*common)
    assert np.array_equal(ac, ap)
    assert np.array_equal(pc, pp)
    m = (0.07, 0.0, 3.0 / 32.0, 0.0, math.pi, 1e-3, 100000,
         -math.pi / 2, 3 * math.pi / 2)
    assert _core.slowflow_max_amp(*m) == pure.slowflow_max_amp(*m)


def test_fp_step_identical():
    rng = np.random.default_rng(1)
    nw, nu = 8, 12
    om_w = rng.uniform(0.5, 3.0, nw)
    om_u = rng.uniform(0.5, 3.0, nu)
    dfw = rng.uniform(0.1, 1.0, nw - 1)
    dfu = rng.uniform(0.1, 1.0, nu - 1)
    w0 = [rng.uniform(0.0, 1.0, n) for n in (nw, nw, nu)]
    outs = []
    for mod in (_core, pure):
        wl, wr, wu = (w.copy() for w in w0)
        clip = mod.fp_evolve_steps(wl, wr, wu, om_w, om_u, dfw, dfu,
                                   0.4, 0.8, 0.01, 0.05, 1e-6, 50)
        outs.append((wl, wr, wu, clip))
    for a, b in zip(outs[0][:3], outs[1][:3]):
        assert np.array_equal(a, b)
    assert outs[0][3] == outs[1][3]


def test_env_var_selects_pure_backend():
    code = ("import selftrap; "
            "print(selftrap.BACKEND)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"SELFTRAP_BACKEND": "pure", "PATH": "/usr/bin:/bin"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "pure"
