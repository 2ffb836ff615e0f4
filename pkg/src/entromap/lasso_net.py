"""Per-stock LASSO regressions and the directed adjacency they imply.

Each stock's centred returns are regressed on every other stock's centred
returns with an L1 penalty; stock ``i`` links to stock ``j`` when ``i`` keeps
a nonzero coefficient in ``j``'s regression.

The solver works on Gram matrices.  For a whole panel the per-fold Gram of
all stocks is computed once and every regression reads its slice by
skipping its own coordinate, so the network costs ``K+1`` matrix products
rather than ``N(K+1)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

TOL_COEF = 1e-9
TOL_OBJ = 1e-10
MAX_SWEEPS = 10_000
N_LAMBDA = 100
LAMBDA_RATIO = 1e-3
DEFAULT_FOLDS = 10


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LassoFit:
    """Selected model for one target stock.

    ``predictors`` lists the other stocks' indices (never ``target``) and
    ``coefficients`` is aligned with it.
    """

    target: int
    predictors: np.ndarray
    coefficients: np.ndarray
    lam: float
    cv_curve: tuple[tuple[float, float], ...]

    @property
    def support(self) -> np.ndarray:
        return self.predictors[np.abs(self.coefficients) > TOL_COEF]


@dataclass(frozen=True)
class DirectedAdjacency:
    n: int
    entries: frozenset[tuple[int, int]]

    def __post_init__(self):
        entries = frozenset((int(i), int(j)) for i, j in self.entries)
        for i, j in entries:
            if i == j:
                raise ValueError(f"self-loop ({i}, {i})")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "DirectedAdjacency":
        a = np.asarray(a)
        src, dst = np.nonzero(a)
        return cls(a.shape[0], frozenset(zip(src.tolist(), dst.tolist())))

    def to_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.entries:
            a[i, j] = 1
        return a

    def __len__(self) -> int:
        return len(self.entries)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite values in regression inputs")


def _check_grid(lambda_grid) -> np.ndarray:
    grid = np.asarray(lambda_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise ValueError("empty lambda grid")
    if np.any(grid < 0) or np.any(np.diff(grid) >= 0):
        raise ValueError("lambda grid must be strictly descending and non-negative")
    return grid


def lambda_max(y: np.ndarray, X: np.ndarray) -> float:
    """Smallest penalty at which the all-zero model satisfies the KKT conditions."""
    T = X.shape[0]
    return float(np.max(np.abs(X.T @ y)) / T) if X.shape[1] else 0.0


def default_lambda_grid(lmax: float, n: int = N_LAMBDA, ratio: float = LAMBDA_RATIO) -> np.ndarray:
    if lmax <= 0:
        return np.array([0.0])
    return np.geomspace(lmax, lmax * ratio, n)


def _path_from_gram(G, c, grid, skip=-1, beta0=None):
    p = c.shape[0]
    if beta0 is None:
        beta0 = np.zeros(p)
    B, _, status = kernels.lasso_path_gram(G, c, grid, beta0, skip, TOL_COEF, 10 * TOL_OBJ, MAX_SWEEPS)
    if status != 0:
        raise ConvergenceError(f"coordinate descent did not converge within {MAX_SWEEPS} sweeps")
    return B


def solve_lasso_path(y, X, lambda_grid, beta0=None) -> np.ndarray:
    """Coefficients minimising ``(1/2T)||y - Xb||^2 + lam |b|_1`` for each penalty.

    Parameters
    ----------
    y : (T,) array
    X : (T, p) array
        ``X`` and ``y`` are expected to be column-centred.
    lambda_grid : strictly descending penalties
    beta0 : optional warm start for the first penalty

    Returns
    -------
    (len(lambda_grid), p) array, warm-started along the grid.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    _check_finite(y, X)
    grid = _check_grid(lambda_grid)
    T = X.shape[0]
    if T < 2:
        raise ValueError("need at least 2 observations")
    G = X.T @ X / T
    c = X.T @ y / T
    return _path_from_gram(np.ascontiguousarray(G), c, grid, -1, beta0)


def lasso_objective(y, X, beta, lam) -> float:
    r = y - X @ beta
    return float(r @ r / (2 * len(y)) + lam * np.abs(beta).sum())


def fold_indices(T: int, folds: int, seed: int) -> list[np.ndarray]:
    """Contiguous blocks of one seeded shuffle of ``range(T)``."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if T < folds:
        raise ValueError(f"{T} rows cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(T)
    return [np.sort(b) for b in np.array_split(perm, folds)]


class _FoldGrams:
    """Centred cross-products of a (T, N) matrix for every CV fold and the full sample."""

    def __init__(self, Z: np.ndarray, folds: int, seed: int):
        self.T = Z.shape[0]
        self.blocks = fold_indices(self.T, folds, seed)
        self.Z = Z
        mu = Z.mean(axis=0)
        Zc = Z - mu
        self.full = np.ascontiguousarray(Zc.T @ Zc / self.T)
        self.train = []
        self.test = []
        for block in self.blocks:
            mask = np.ones(self.T, dtype=bool)
            mask[block] = False
            if not mask.any() or block.size < 1:
                raise ValueError("fold with no rows")
            tr = Z[mask]
            mu_tr = tr.mean(axis=0)
            tc = tr - mu_tr
            self.train.append(np.ascontiguousarray(tc.T @ tc / tr.shape[0]))
            self.test.append(Z[block] - mu_tr)


def _cv_one(grams: _FoldGrams, target: int, grid: np.ndarray) -> LassoFit:
    n = grams.full.shape[0]
    sse = np.zeros(grid.size)
    for S, test in zip(grams.train, grams.test):
        B = _path_from_gram(S, np.ascontiguousarray(S[:, target]), grid, target)
        resid = test[:, target][:, None] - test @ B.T
        sse += np.einsum("tl,tl->l", resid, resid)
    loss = sse / grams.T
    best = int(np.argmin(loss))  # first minimum on a descending grid = largest lambda
    B = _path_from_gram(grams.full, np.ascontiguousarray(grams.full[:, target]), grid[: best + 1], target)
    beta = B[-1]
    others = np.delete(np.arange(n), target)
    curve = tuple((float(l), float(e)) for l, e in zip(grid, loss))
    return LassoFit(target, others, beta[others], float(grid[best]), curve)


def cross_validate_lambda(y, X, folds: int = DEFAULT_FOLDS, lambda_grid=None, seed: int = 0) -> LassoFit:
    """K-fold CV over the penalty grid, then refit on all rows.

    The reported ``target`` is ``-1`` and ``predictors`` index the columns of
    ``X``.  The default grid runs from ``lambda_max`` down to
    ``1e-3 * lambda_max`` in 100 log steps.  Ties in CV loss go to the
    larger penalty.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    _check_finite(y, X)
    T, p = X.shape
    Z = np.column_stack([X, y])
    grams = _FoldGrams(Z, folds, seed)
    if lambda_grid is None:
        # same Gram the solver sees, so the top of the grid gives exact zeros
        lambda_grid = default_lambda_grid(float(np.max(np.abs(grams.full[:p, p]))) if p else 0.0)
    grid = _check_grid(lambda_grid)
    fit = _cv_one(grams, p, grid)
    return LassoFit(-1, fit.predictors, fit.coefficients, fit.lam, fit.cv_curve)


def fit_network(returns: np.ndarray, folds: int = DEFAULT_FOLDS, seed: int = 0,
                n_lambda: int = N_LAMBDA, ratio: float = LAMBDA_RATIO) -> list[LassoFit]:
    """One cross-validated LASSO fit per column of a complete (T, N) return panel.

    Every regression uses the same fold assignment (same seed), so results
    match :func:`cross_validate_lambda` called per stock.
    """
    R = np.asarray(returns, dtype=np.float64)
    _check_finite(R)
    T, n = R.shape
    grams = _FoldGrams(R, folds, seed)
    fits = []
    for i in range(n):
        c = np.delete(grams.full[:, i], i)
        grid = default_lambda_grid(float(np.max(np.abs(c))) if c.size else 0.0, n_lambda, ratio)
        fits.append(_cv_one(grams, i, grid))
        log.debug("stock %d: lambda=%.3g support=%d", i, fits[-1].lam, fits[-1].support.size)
    return fits


def build_adjacency(fits: Iterable[LassoFit], n: int) -> DirectedAdjacency:
    """Edge ``(i, j)`` iff stock ``i`` has a nonzero coefficient in stock ``j``'s fit."""
    fits = list(fits)
    targets = [f.target for f in fits]
    if sorted(targets) != list(range(n)):
        raise ValueError(f"need exactly one fit per target 0..{n - 1}, got {sorted(targets)}")
    entries = set()
    for f in fits:
        for i in f.support.tolist():
            if i != f.target:
                entries.add((int(i), f.target))
    return DirectedAdjacency(n, frozenset(entries))


def write_edge_list(adj: DirectedAdjacency, tickers: Sequence[str]) -> str:
    pairs = sorted((tickers[i], tickers[j]) for i, j in adj.entries)
    return "".join(f"{a}\t{b}\n" for a, b in pairs)


def read_edge_list(text: str, tickers: Sequence[str]) -> DirectedAdjacency:
    index = {t: k for k, t in enumerate(tickers)}
    entries = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected src<TAB>dst")
        entries.add((index[parts[0]], index[parts[1]]))
    return DirectedAdjacency(len(tickers), frozenset(entries))
