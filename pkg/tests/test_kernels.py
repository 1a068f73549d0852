import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from riccilab import _backend, _pykernels

try:
    from riccilab import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


def _random_space(rng, n):
    p = rng.normal(size=(n, 2))
    return np.linalg.norm(p[:, None] - p[None], axis=2)


@pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_reaction_closed_form(k):
    grid = np.linspace(0, 0.225, 46)
    n, st, status, _, _ = k.integrate_reaction((2, 2, 2), grid, 1e-10, 1e8, 1e-14)
    assert n == 46 and status == k.STATUS_OK
    exact = 2 / (1 - 4 * grid)
    assert np.max(np.abs(st[:, 0] - exact) / exact) < 1e-8


@needs_c
@pytest.mark.parametrize("y0", [(2, 2, 2), (-1, 0, 3), (-0.4, 0.2, 1.1), (0, 0, 0),
                                (-1, -1, 2)])
def test_reaction_backends_agree(y0):
    grid = np.linspace(0, 0.3, 31)
    a = _pykernels.integrate_reaction(y0, grid, 1e-10, 1e8, 1e-14)
    b = _ckernels.integrate_reaction(y0, grid, 1e-10, 1e8, 1e-14)
    assert a[0] == b[0] and a[2] == b[2]
    np.testing.assert_allclose(a[1][:a[0]], b[1][:b[0]], rtol=1e-13, atol=1e-300)
    assert a[3] == pytest.approx(b[3], rel=1e-13)


@needs_c
def test_triangle_violations_agree():
    rng = np.random.default_rng(0)
    d = rng.uniform(0.1, 2.0, size=(9, 9))
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0)
    a = _pykernels.triangle_violations(d, 1e-12)
    b = _ckernels.triangle_violations(d, 1e-12)
    assert [x[:3] for x in a] == [x[:3] for x in b]
    np.testing.assert_allclose([x[3] for x in a], [x[3] for x in b])


@needs_c
def test_happrox_backends_agree():
    rng = np.random.default_rng(5)
    for _ in range(30):
        nx, ny = rng.integers(1, 6, size=2)
        dx, dy = _random_space(rng, nx), _random_space(rng, ny)
        a = _pykernels.exhaustive_happrox(dx, dy)
        b = _ckernels.exhaustive_happrox(dx, dy)
        assert a[3] == b[3]
        assert a[:3] == pytest.approx(b[:3], rel=1e-15)
        img = list(a[3])
        assert _pykernels.map_nu(dx, dy, img) == pytest.approx(
            _ckernels.map_nu(dx, dy, img), rel=1e-15)


def test_pure_flag_selects_python():
    code = "from riccilab import _backend; print(_backend.NAME)"
    env = dict(os.environ, RICCILAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_name():
    assert _backend.NAME in ("cython", "python")
