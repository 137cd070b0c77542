import os
import subprocess
import sys

import numpy as np
import pytest

from graphtrf import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def _problem(seed=0, m=37, d=11):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, d))
    Y = (rng.random((m, 8)) < 0.3).astype(float)
    W = rng.normal(scale=0.5, size=(8, d))
    b = rng.normal(scale=0.5, size=8)
    return X, Y, W, b


@needs_numba
def test_loss_grad_agree():
    X, Y, W, b = _problem()
    ln, gWn, gbn = kernels.bce_loss_grad_np(X, Y, W, b)
    lb, gWb, gbb = kernels.bce_loss_grad_nb(X, Y, W, b)
    assert abs(ln - lb) < 1e-12
    np.testing.assert_allclose(gWn, gWb, atol=1e-13)
    np.testing.assert_allclose(gbn, gbb, atol=1e-13)


@needs_numba
def test_sgd_epoch_agree():
    X, Y, W, b = _problem(1)
    order = np.random.default_rng(2).permutation(X.shape[0])
    Wn, bn, Wb, bb = W.copy(), b.copy(), W.copy(), b.copy()
    for _ in range(10):
        kernels.sgd_epoch_np(X, Y, Wn, bn, order, 8, 0.3, 1e-3)
        kernels.sgd_epoch_nb(X, Y, Wb, bb, order, 8, 0.3, 1e-3)
    np.testing.assert_allclose(Wn, Wb, atol=1e-11)
    np.testing.assert_allclose(bn, bb, atol=1e-11)


def test_extreme_logits_stay_finite():
    X = np.array([[1000.0], [-1000.0]])
    Y = np.array([[0.0] * 8, [1.0] * 8])
    loss, gW, gb = kernels.bce_loss_grad(X, Y, np.ones((8, 1)), np.zeros(8))
    assert np.isfinite(loss) and np.isfinite(gW).all() and np.isfinite(gb).all()
    assert loss == pytest.approx(8 * 1000.0)


def _backend_in_subprocess(flag):
    env = dict(os.environ)
    env.pop("GRAPHTRF_DISABLE_NUMBA", None)
    if flag is not None:
        env["GRAPHTRF_DISABLE_NUMBA"] = flag
    out = subprocess.run([sys.executable, "-c", "from graphtrf import kernels; print(kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_env_flag_selects_numpy():
    assert _backend_in_subprocess("1") == "numpy"
    assert _backend_in_subprocess("0") == ("numba" if kernels.HAVE_NUMBA else "numpy")
    assert _backend_in_subprocess(None) == ("numba" if kernels.HAVE_NUMBA else "numpy")


def test_large_batches_use_numpy():
    assert kernels.backend(kernels.NUMBA_MAX_BATCH + 1) == "numpy"
    assert kernels.backend(1) == kernels.backend()


def _train_in_subprocess(flag, tmp_path):
    env = dict(os.environ, GRAPHTRF_DISABLE_NUMBA=flag)
    out = tmp_path / f"w{flag}.npy"
    code = (
        "import numpy as np; from graphtrf import kernels\n"
        "rng = np.random.default_rng(0); X = rng.normal(size=(60, 9)) / 3; Y = (rng.random((60, 8)) < .3) * 1.0\n"
        "W = np.zeros((8, 9)); b = np.zeros(8)\n"
        "for e in range(30): kernels.sgd_epoch(X, Y, W, b, np.random.default_rng(e).permutation(60), 4, .5, 1e-4)\n"
        f"np.save({str(out)!r}, np.concatenate([W.ravel(), b]))\n"
    )
    subprocess.run([sys.executable, "-c", code], env=env, check=True)
    return np.load(out)


@needs_numba
def test_backends_train_alike(tmp_path):
    np.testing.assert_allclose(_train_in_subprocess("0", tmp_path), _train_in_subprocess("1", tmp_path), atol=1e-12)
