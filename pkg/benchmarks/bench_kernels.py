"""Time router training kernels: numba loops vs vectorised numpy.

Usage: python benchmarks/bench_kernels.py [--examples 7000] [--epochs 20]

Both backends live in the same module, so this calls them directly rather
than toggling GRAPHTRF_DISABLE_NUMBA.
"""
import argparse
import time

import numpy as np

from graphtrf import kernels
from graphtrf.features import FEATURE_DIM

# unit-normal features have norm ~16, so the router's default step would be
# unstable here and amplify round-off between the backends
LR = 0.02


def make_problem(m, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, FEATURE_DIM))
    Y = (rng.random((m, 8)) < 0.25).astype(np.float64)
    return X, Y


def time_epochs(fn, X, Y, epochs, batch, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        W = np.zeros((8, X.shape[1]))
        b = np.zeros(8)
        rng = np.random.default_rng(0)
        t0 = time.perf_counter()
        for _ in range(epochs):
            fn(X, Y, W, b, rng.permutation(X.shape[0]), batch, LR, 1e-4)
        best = min(best, time.perf_counter() - t0)
    return best, W, b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--examples", type=int, default=7000)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--batch", type=int, default=64)
    args = ap.parse_args()

    X, Y = make_problem(args.examples)
    print(f"{args.examples} examples x {FEATURE_DIM} features, {args.epochs} epochs, batch {args.batch}")

    t_np, W_np, b_np = time_epochs(kernels.sgd_epoch_np, X, Y, args.epochs, args.batch)
    print(f"numpy  sgd: {t_np:.3f}s")
    if not kernels.HAVE_NUMBA:
        print("numba not installed, skipping")
        return
    # compile outside the timed region
    kernels.sgd_epoch_nb(X[:2], Y[:2], np.zeros((8, X.shape[1])), np.zeros(8), np.arange(2), 2, 0.1, 0.0)
    t_nb, W_nb, b_nb = time_epochs(kernels.sgd_epoch_nb, X, Y, args.epochs, args.batch)
    print(f"numba  sgd: {t_nb:.3f}s  ({t_np / t_nb:.2f}x)")
    print(f"max |W_np - W_nb| = {np.abs(W_np - W_nb).max():.2e} (max |W| {np.abs(W_np).max():.2f})")

    kernels.bce_loss_grad_nb(X[:2], Y[:2], W_nb, b_nb)
    for name, fn in (("numpy", kernels.bce_loss_grad_np), ("numba", kernels.bce_loss_grad_nb)):
        t0 = time.perf_counter()
        for _ in range(10):
            fn(X, Y, W_nb, b_nb)
        print(f"{name}  full loss+grad x10: {time.perf_counter() - t0:.3f}s")


if __name__ == "__main__":
    main()
