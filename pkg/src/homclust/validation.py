"""Silhouette width and the two-step (method, then cluster count) selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import clustering
from .clustering import PartitionResult, dissimilarity
from .errors import ContractError, SelectionError
from .seeds import DEFAULT_SEED, derive_rng

METHOD_ORDER = ("kmeans", "pam", "clara", "fanny")


@dataclass
class SilhouetteReport:
    """Per-observation widths s(i), per-cluster means, and the overall average."""

    values: np.ndarray
    cluster_means: dict[int, float]
    overall: float


def silhouette(D: np.ndarray, labels: Sequence[int]) -> SilhouetteReport:
    """Silhouette widths [b(i) - a(i)] / max[a(i), b(i)] from a distance matrix.

    a(i) averages dissimilarity to the other members of i's cluster; b(i) is
    the smallest average dissimilarity to any other cluster. Singletons get
    s(i) = 0 by convention, as does the degenerate a = b = 0 case.
    """
    D = np.asarray(D, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise ContractError("dissimilarity matrix must be square")
    if labels.shape != (n,):
        raise ContractError("labels must align with the dissimilarity matrix")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ContractError("silhouette needs at least 2 clusters")
    expected = np.arange(1, uniq.size + 1)
    if not np.array_equal(uniq, expected):
        raise ContractError("labels must use every cluster 1..k at least once")

    k = uniq.size
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels - 1] = 1.0
    sums = D @ onehot
    sizes = onehot.sum(axis=0)

    own = labels - 1
    own_sum = sums[np.arange(n), own]
    own_size = sizes[own]
    singleton = own_size <= 1

    a = np.zeros(n)
    np.divide(own_sum, own_size - 1, out=a, where=~singleton)
    means = sums / sizes[None, :]
    means[np.arange(n), own] = np.inf
    b = means.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(n)
    ok = (~singleton) & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]

    cluster_means = {int(c): float(s[labels == c].mean()) for c in expected}
    return SilhouetteReport(values=s, cluster_means=cluster_means, overall=float(s.mean()))


@dataclass
class GridEntry:
    """One (method, k) cell of the model-selection grid."""

    method: str
    k: int
    avg_silhouette: float | None
    converged: bool
    objective: float
    iterations: int
    labels: np.ndarray | None = None


@dataclass
class ModelSelectionGrid:
    """Sweep results plus the chosen (method, k) pair."""

    entries: list[GridEntry]
    chosen: tuple[str, int]
    seed: int

    def entry(self, method: str, k: int) -> GridEntry:
        for e in self.entries:
            if e.method == method and e.k == k:
                return e
        raise KeyError((method, k))

    @property
    def chosen_entry(self) -> GridEntry:
        return self.entry(*self.chosen)


def fit_partition(
    X: np.ndarray,
    method: str,
    k: int,
    *,
    seed: int = DEFAULT_SEED,
    D: np.ndarray | None = None,
    method_options: Mapping[str, Mapping] | None = None,
) -> PartitionResult:
    """Fit one method at one k with the sweep's per-cell seed derivation.

    Standalone fits and sweep cells share this entry point, so a standalone
    re-fit of a grid cell reproduces it bit for bit.
    """
    opts = dict((method_options or {}).get(method, {}))
    cell_seed = _cell_seed(seed, method, k)
    if method == "kmeans":
        return clustering.kmeans(X, k, seed=cell_seed, **opts)
    if method == "pam":
        if D is None:
            D = dissimilarity(X)
        return clustering.pam(D, k, seed=cell_seed, **opts)
    if method == "clara":
        return clustering.clara(X, k, seed=cell_seed, **opts)
    if method == "fanny":
        if D is None:
            D = dissimilarity(X)
        return clustering.fanny(D, k, seed=cell_seed, **opts)
    raise ContractError(f"unknown partitioning method {method!r}")


def _cell_seed(base: int, method: str, k: int) -> int:
    return int(derive_rng(base, "sweep-cell", method, k).integers(2**63))


def sweep(
    X: np.ndarray,
    methods: Sequence[str] = METHOD_ORDER,
    k_range: Sequence[int] = tuple(range(2, 9)),
    *,
    seed: int = DEFAULT_SEED,
    method_options: Mapping[str, Mapping] | None = None,
) -> ModelSelectionGrid:
    """Fit every (method, k) cell and score converged fits by average silhouette.

    Non-converged fits keep a marker (no silhouette) and are excluded from
    selection; if nothing converges the selection error propagates from
    :func:`pick_best`.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    for m in methods:
        if m not in METHOD_ORDER:
            raise ContractError(f"unknown partitioning method {m!r}")
    if not k_range:
        raise ContractError("empty cluster-count range")
    if min(k_range) < 2 or max(k_range) > n - 1:
        raise ContractError(f"cluster-count range must lie within [2, {n - 1}]")

    # silhouette always needs the distance matrix, so compute it once and share
    D = dissimilarity(X)

    entries: list[GridEntry] = []
    for method in methods:
        for k in k_range:
            result = fit_partition(
                X, method, k, seed=seed, D=D, method_options=method_options
            )
            avg = None
            if result.converged:
                avg = silhouette(D, result.labels).overall
            entries.append(
                GridEntry(
                    method=method,
                    k=int(k),
                    avg_silhouette=avg,
                    converged=result.converged,
                    objective=result.objective,
                    iterations=result.iterations,
                    labels=result.labels,
                )
            )
    grid = ModelSelectionGrid(entries=entries, chosen=("", 0), seed=seed)
    grid.chosen = pick_best(grid)
    return grid


def pick_best(grid: ModelSelectionGrid) -> tuple[str, int]:
    """Argmax of average silhouette among converged cells.

    Ties prefer the smaller k, then the method order kmeans, pam, clara,
    fanny. Invariant to the grid's insertion order.
    """
    if not grid.entries:
        raise ContractError("model-selection grid is empty")
    candidates = [e for e in grid.entries if e.converged and e.avg_silhouette is not None]
    if not candidates:
        raise SelectionError("no converged grid entry to select from")
    best = min(
        candidates,
        key=lambda e: (-e.avg_silhouette, e.k, METHOD_ORDER.index(e.method)),
    )
    return (best.method, best.k)
