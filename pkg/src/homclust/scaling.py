"""Homogeneity analysis with an ordinal rank-one restriction, solved by ALS.

Observations coded on J categorical variables are placed, together with the
variable categories, in a p-dimensional Euclidean space by minimizing

    J^-1 sum_j tr[(X - G_j Y_j)' (X - G_j Y_j)]

over the object scores X and the category quantifications Y_j, subject to
X'X = N*I_p and 1'X = 0. Ordinal (categorized) variables additionally carry
the rank-one restriction Y_j = o_j b_j' with o_j a single monotone
quantification vector, enforced through weighted pool-adjacent-violators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, DegeneracyError
from .ingest import CodedMatrix
from .seeds import DEFAULT_SEED, derive_rng

_TINY = 1e-24


@dataclass
class IndicatorExpansion:
    """Per-variable indicator matrices in coded-column form.

    ``codes0`` holds zero-based category codes; ``counts[j]`` is the diagonal
    of D_j = G_j' G_j, i.e. the category occurrence counts.
    """

    codes0: np.ndarray
    level_counts: tuple[int, ...]
    counts: list[np.ndarray]

    @property
    def n_rows(self) -> int:
        return self.codes0.shape[0]

    @property
    def n_variables(self) -> int:
        return self.codes0.shape[1]


def expand_indicators(coded: CodedMatrix) -> IndicatorExpansion:
    """Build the indicator expansion and category frequency weights."""
    coded.validate()
    codes0 = coded.codes.astype(np.intp) - 1
    counts = []
    for j, k in enumerate(coded.level_counts):
        c = np.bincount(codes0[:, j], minlength=k)
        if np.any(c == 0):
            raise ContractError(
                f"variable {coded.variables[j]!r} has a zero-frequency level; "
                "ingest should have pruned it"
            )
        counts.append(c.astype(float))
    return IndicatorExpansion(
        codes0=codes0,
        level_counts=tuple(coded.level_counts),
        counts=counts,
    )


def indicator_matrix(expansion: IndicatorExpansion, j: int) -> np.ndarray:
    """Dense N x k_j indicator matrix G_j (one 1 per row)."""
    k = expansion.level_counts[j]
    G = np.zeros((expansion.n_rows, k))
    G[np.arange(expansion.n_rows), expansion.codes0[:, j]] = 1.0
    return G


def loss(
    X: np.ndarray,
    quantifications: Sequence[np.ndarray],
    expansion: IndicatorExpansion,
) -> float:
    """Average squared distance between object scores and category scores.

    Zero exactly when X = G_j Y_j for every variable.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != expansion.n_rows:
        raise ContractError("object scores have the wrong shape")
    if len(quantifications) != expansion.n_variables:
        raise ContractError("one quantification matrix per variable is required")
    total = 0.0
    for j, Y in enumerate(quantifications):
        Y = np.asarray(Y, dtype=float)
        if Y.shape != (expansion.level_counts[j], X.shape[1]):
            raise ContractError(f"quantification {j} has the wrong shape")
        diff = X - Y[expansion.codes0[:, j]]
        total += float(np.einsum("ij,ij->", diff, diff))
    return total / expansion.n_variables


def pava(values: Sequence[float], weights: Sequence[float]) -> np.ndarray:
    """Weighted pool-adjacent-violators: the non-decreasing least-squares fit.

    Returns the minimizer of sum_i w_i (v_i - f_i)^2 over non-decreasing f;
    the fit is block-constant, each block carrying the weighted mean of its
    pooled targets, and it preserves the overall weighted mean.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ContractError("pava requires a non-empty 1-d target vector")
    if w.shape != v.shape:
        raise ContractError("pava weights must match the target length")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w)) and np.all(w > 0)):
        raise ContractError("pava weights must be finite and strictly positive")

    # blocks kept as (weighted sum, weight, run length); merged while violating
    sums: list[float] = []
    wts: list[float] = []
    lens: list[int] = []
    for vi, wi in zip(v, w):
        sums.append(vi * wi)
        wts.append(wi)
        lens.append(1)
        while len(sums) > 1 and sums[-2] * wts[-1] > sums[-1] * wts[-2]:
            s, t, n = sums.pop(), wts.pop(), lens.pop()
            sums[-1] += s
            wts[-1] += t
            lens[-1] += n
    out = np.empty_like(v)
    pos = 0
    for s, t, n in zip(sums, wts, lens):
        out[pos : pos + n] = s / t
        pos += n
    return np.maximum.accumulate(out)


def orthonormalize(X_raw: np.ndarray) -> np.ndarray:
    """Center columns, then orthonormalize to X'X = N*I_p via the polar factor.

    Preserves the centered column span; among all matrices satisfying both
    restrictions with that span it maximizes tr(X'Z), which is what the ALS
    score step requires. An input already satisfying the restrictions is
    returned unchanged up to rounding.
    """
    X = np.asarray(X_raw, dtype=float)
    if X.ndim != 2:
        raise ContractError("scores must be a 2-d array")
    n, p = X.shape
    if n <= p:
        raise ContractError("orthonormalization needs more rows than columns")
    Xc = X - X.mean(axis=0)
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    if s[0] <= 0 or s[-1] <= n * np.finfo(float).eps * s[0]:
        raise DegeneracyError(
            f"centered scores have rank below {p}; reduce the dimension count or reseed"
        )
    return np.sqrt(n) * (U @ Vt)


@dataclass
class ScalingSolution:
    """Object scores, category quantifications and the fit trajectory."""

    X: np.ndarray
    variables: list[str]
    kinds: list[str]
    level_labels: list[list[str]]
    quantifications: list[np.ndarray]
    ordinal_quantifications: list[np.ndarray | None]
    loadings: list[np.ndarray | None]
    loss_history: list[float]
    converged: bool
    p: int
    seed: int

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


def _category_means(X: np.ndarray, codes: np.ndarray, k: int, counts: np.ndarray) -> np.ndarray:
    out = np.empty((k, X.shape[1]))
    for d in range(X.shape[1]):
        out[:, d] = np.bincount(codes, weights=X[:, d], minlength=k)
    out /= counts[:, None]
    return out


def _rank_one_fit(
    Ytil: np.ndarray,
    d: np.ndarray,
    o: np.ndarray,
    n_rows: int,
    inner_iterations: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Monotone rank-one approximation of the centroid map in the D_j metric.

    Alternates the exact loading update b = Ytil' D o / (o' D o) with the
    exact monotone update o = pava(Ytil b / b'b, D), then fixes the gauge
    (o' D o = N, 1' D o = 0) and recomputes the loading so Y_j = o b' is
    unchanged by the normalization.
    """
    beta = np.zeros(Ytil.shape[1])
    for _ in range(inner_iterations):
        denom = float(d * o @ o)
        if denom <= _TINY:
            return o, np.zeros(Ytil.shape[1])
        beta = Ytil.T @ (d * o) / denom
        bb = float(beta @ beta)
        if bb <= _TINY:
            return o, np.zeros(Ytil.shape[1])
        o = pava(Ytil @ beta / bb, d)
    o = o - float(d @ o) / n_rows
    ssq = float(d * o @ o)
    if ssq <= _TINY * n_rows:
        return o, np.zeros(Ytil.shape[1])
    o = o * np.sqrt(n_rows / ssq)
    beta = Ytil.T @ (d * o) / n_rows
    return o, beta


def _initial_quantification(k: int, d: np.ndarray, n_rows: int) -> np.ndarray:
    o = np.arange(1, k + 1, dtype=float)
    o -= float(d @ o) / n_rows
    ssq = float(d * o @ o)
    return o * np.sqrt(n_rows / ssq)


def _als_run(
    expansion: IndicatorExpansion,
    kinds: Sequence[str],
    p: int,
    rng: np.random.Generator,
    tol: float,
    max_iter: int,
    inner_iterations: int,
) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray | None], list[np.ndarray | None], list[float], bool]:
    n, J = expansion.n_rows, expansion.n_variables
    X = orthonormalize(rng.standard_normal((n, p)))
    o_vecs: list[np.ndarray | None] = [
        _initial_quantification(expansion.level_counts[j], expansion.counts[j], n)
        if kinds[j] == "ordinal"
        else None
        for j in range(J)
    ]
    betas: list[np.ndarray | None] = [None] * J
    Y: list[np.ndarray] = [np.zeros((expansion.level_counts[j], p)) for j in range(J)]

    history: list[float] = []
    converged = False
    prev = np.inf
    for _ in range(max_iter):
        Z = np.zeros((n, p))
        for j in range(J):
            codes = expansion.codes0[:, j]
            Ytil = _category_means(X, codes, expansion.level_counts[j], expansion.counts[j])
            if kinds[j] == "ordinal":
                o, beta = _rank_one_fit(
                    Ytil, expansion.counts[j], o_vecs[j], n, inner_iterations
                )
                o_vecs[j], betas[j] = o, beta
                Y[j] = np.outer(o, beta)
            else:
                Y[j] = Ytil
            Z += Y[j][codes]
        X = orthonormalize(Z / J)
        current = loss(X, Y, expansion)
        history.append(current)
        if prev - current < tol:
            converged = True
            break
        prev = current
    return X, Y, o_vecs, betas, history, converged


def _apply_sign_convention(
    X: np.ndarray,
    Y: list[np.ndarray],
    o_vecs: list[np.ndarray | None],
    betas: list[np.ndarray | None],
    kinds: Sequence[str],
) -> None:
    """Flip each dimension so the largest-magnitude loading is positive.

    Ordinal loadings take priority; with no ordinal variables the nominal
    category quantifications decide. Makes independently seeded runs
    comparable. Mutates in place.
    """
    p = X.shape[1]
    ordinal_idx = [j for j, k in enumerate(kinds) if k == "ordinal"]
    for dim in range(p):
        if ordinal_idx:
            pool = np.array([betas[j][dim] for j in ordinal_idx])
        else:
            pool = np.concatenate([Yj[:, dim] for Yj in Y])
        lead = pool[np.argmax(np.abs(pool))]
        if lead < 0:
            X[:, dim] *= -1
            for j in range(len(Y)):
                Y[j][:, dim] *= -1
                if betas[j] is not None:
                    betas[j][dim] *= -1


def homals_fit(
    coded: CodedMatrix,
    p: int = 2,
    *,
    tol: float = 1e-8,
    max_iter: int = 1000,
    restarts: int = 5,
    seed: int = DEFAULT_SEED,
    inner_iterations: int = 2,
) -> ScalingSolution:
    """Fit the restricted homogeneity analysis by alternating least squares.

    Parameters
    ----------
    coded : CodedMatrix
        Integer category codes with per-variable kinds.
    p : int
        Dimension count of the reduced space.
    tol : float
        Stop when the loss decrease of a full sweep falls below this value.
    max_iter : int
        Sweep cap; hitting it returns the solution with ``converged=False``.
    restarts : int
        Independently seeded runs; the best final loss is kept (first wins
        ties, so any restart schedule gives identical output).
    seed : int
        Base seed; restart r uses a child stream derived from (seed, r).
    inner_iterations : int
        Alternations of the (loading, quantification) pair per sweep for each
        ordinal variable.
    """
    expansion = expand_indicators(coded)
    n = expansion.n_rows
    free = sum(k - 1 for k in expansion.level_counts)
    if p < 1:
        raise ContractError("dimension count must be at least 1")
    if p > free:
        raise ContractError(f"dimension count {p} exceeds the {free} free categories")
    if n <= p:
        raise ContractError("more observations than dimensions are required")
    if restarts < 1:
        raise ContractError("at least one restart is required")

    best = None
    for r in range(restarts):
        rng = derive_rng(seed, "homals-restart", r)
        result = _als_run(expansion, coded.kinds, p, rng, tol, max_iter, inner_iterations)
        if best is None or result[4][-1] < best[4][-1]:
            best = result
    X, Y, o_vecs, betas, history, converged = best
    _apply_sign_convention(X, Y, o_vecs, betas, coded.kinds)

    return ScalingSolution(
        X=X,
        variables=list(coded.variables),
        kinds=list(coded.kinds),
        level_labels=[list(l) for l in coded.level_labels],
        quantifications=Y,
        ordinal_quantifications=[o if coded.kinds[j] == "ordinal" else None for j, o in enumerate(o_vecs)],
        loadings=[b if coded.kinds[j] == "ordinal" else None for j, b in enumerate(betas)],
        loss_history=history,
        converged=converged,
        p=p,
        seed=seed,
    )


@dataclass(frozen=True)
class CategoryPoint:
    """Map coordinates of one category level."""

    variable: str
    level: int
    label: str
    coords: tuple[float, ...]
    ordinal: bool


def category_points(solution: ScalingSolution, *, allow_unconverged: bool = False) -> list[CategoryPoint]:
    """Category quantifications as joint-map points.

    Ordinal variables are flagged so exporters can draw the increasing
    direction (level 1 toward level k_j) as an arrow.
    """
    if not solution.converged and not allow_unconverged:
        raise ContractError("solution did not converge; pass allow_unconverged=True to export anyway")
    points = []
    for j, name in enumerate(solution.variables):
        Yj = solution.quantifications[j]
        ordinal = solution.kinds[j] == "ordinal"
        for lvl in range(Yj.shape[0]):
            points.append(
                CategoryPoint(
                    variable=name,
                    level=lvl + 1,
                    label=solution.level_labels[j][lvl],
                    coords=tuple(float(x) for x in Yj[lvl]),
                    ordinal=ordinal,
                )
            )
    return points
