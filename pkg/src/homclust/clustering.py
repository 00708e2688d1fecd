"""Partitioning techniques on the object-score map: k-means, PAM, CLARA, FANNY."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .seeds import DEFAULT_SEED, derive_rng

KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 300
CLARA_SAMPLES = 5
FANNY_EXPONENT = 2.0
FANNY_TOL = 1e-9
FANNY_MAX_ITER = 500
_PAM_SCAN_CAP = 4096


@dataclass
class PartitionResult:
    """A fitted partition with canonicalized labels (1..k)."""

    method: str
    k: int
    labels: np.ndarray
    objective: float
    converged: bool
    iterations: int
    seed: int | None = None
    centers: np.ndarray | None = None
    medoid_indices: np.ndarray | None = None
    memberships: np.ndarray | None = None
    objective_history: list[float] | None = None


def dissimilarity(X: np.ndarray, *, block: int = 256) -> np.ndarray:
    """Euclidean distance matrix between score rows.

    Computed from coordinate differences (no Gram-matrix cancellation), in
    row blocks to bound memory; exactly symmetric with an exactly zero
    diagonal.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ContractError("dissimilarity needs a 2-d array with at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise ContractError("scores contain non-finite values")
    n = X.shape[0]
    D = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = X[start:stop, None, :] - X[None, :, :]
        np.sqrt(np.einsum("ijk,ijk->ij", diff, diff), out=D[start:stop])
    np.fill_diagonal(D, 0.0)
    return D


def _canonical_order(labels0: np.ndarray, k: int) -> np.ndarray:
    """Cluster order: descending size, ties broken by smallest member index."""
    sizes = np.bincount(labels0, minlength=k)
    first = np.full(k, labels0.size)
    np.minimum.at(first, labels0, np.arange(labels0.size))
    return np.array(sorted(range(k), key=lambda c: (-sizes[c], first[c])))


def _canonicalize(result: PartitionResult) -> PartitionResult:
    labels0 = result.labels - 1
    order = _canonical_order(labels0, result.k)
    remap = np.empty(result.k, dtype=int)
    remap[order] = np.arange(result.k)
    result.labels = remap[labels0] + 1
    if result.centers is not None:
        result.centers = result.centers[order]
    if result.medoid_indices is not None:
        result.medoid_indices = result.medoid_indices[order]
    if result.memberships is not None:
        result.memberships = result.memberships[:, order]
    return result


def _check_k(k: int, n: int) -> None:
    if not 2 <= k <= n:
        raise ContractError(f"cluster count {k} outside [2, {n}]")


def _squared_distances_to(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _diversity_seed(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-proportional seeding: next center drawn with weight d_min^2."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = X[rng.integers(n)]
            continue
        target = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), target))
        idx = min(idx, n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(
    X: np.ndarray, centers: np.ndarray, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float, bool, int, list[float]]:
    n, k = X.shape[0], centers.shape[0]
    labels = np.full(n, -1)
    converged = False
    iterations = 0
    history: list[float] = []
    for it in range(max_iter):
        iterations = it + 1
        d2 = _squared_distances_to(X, centers)
        new_labels = np.argmin(d2, axis=1)
        # repair empty clusters with the globally farthest point, one each
        own = d2[np.arange(n), new_labels]
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(np.argmax(own))
                new_labels[far] = c
                own[far] = -1.0
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
        d2 = _squared_distances_to(X, centers)
        history.append(float(d2[np.arange(n), labels].sum()))
    objective = history[-1] if history else float(
        _squared_distances_to(X, centers)[np.arange(n), labels].sum()
    )
    return labels, centers, objective, converged, iterations, history


def kmeans(
    X: np.ndarray,
    k: int,
    *,
    seed: int = DEFAULT_SEED,
    restarts: int = KMEANS_RESTARTS,
    max_iter: int = KMEANS_MAX_ITER,
) -> PartitionResult:
    """Lloyd iterations from diversity-seeded centers, best of ``restarts``.

    The objective is the within-cluster sum of squared distances; an empty
    cluster is repaired by reassigning the farthest point.
    """
    X = np.asarray(X, dtype=float)
    _check_k(k, X.shape[0])
    best = None
    for r in range(restarts):
        rng = derive_rng(seed, "kmeans-restart", r)
        centers = _diversity_seed(X, k, rng)
        fit = _lloyd(X, centers.copy(), max_iter)
        if best is None or fit[2] < best[2]:
            best = fit
    labels, centers, objective, converged, iterations, history = best
    return _canonicalize(
        PartitionResult(
            method="kmeans",
            k=k,
            labels=labels + 1,
            objective=objective,
            converged=converged,
            iterations=iterations,
            seed=seed,
            centers=centers,
            objective_history=history,
        )
    )


def _check_dissimilarity(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ContractError("dissimilarity matrix must be square")
    if not np.all(np.isfinite(D)):
        raise ContractError("dissimilarity matrix contains non-finite values")
    return D


def _nearest_two(D: np.ndarray, medoids: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sub = D[medoids]
    nearest_pos = np.argmin(sub, axis=0)
    order = np.sort(sub, axis=0)
    return nearest_pos, order[0], order[1]


def _pam_build(D: np.ndarray, k: int) -> np.ndarray:
    n = D.shape[0]
    first = int(np.argmin(D.sum(axis=1)))
    medoids = [first]
    d1 = D[first].copy()
    for _ in range(1, k):
        gain = np.maximum(d1[None, :] - D, 0.0).sum(axis=1)
        gain[medoids] = -np.inf
        nxt = int(np.argmax(gain))
        medoids.append(nxt)
        d1 = np.minimum(d1, D[nxt])
    return np.array(sorted(medoids))


def _medoid_labels(D: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    labels = np.argmin(D[medoids], axis=0)
    # a medoid always belongs to its own cluster, even under duplicate points
    labels[medoids] = np.arange(len(medoids))
    return labels


def pam(D: np.ndarray, k: int, *, seed: int | None = None) -> PartitionResult:
    """Partitioning around medoids: greedy BUILD then steepest-descent SWAP.

    Each scan evaluates every (medoid, non-medoid) exchange and applies the
    single best strictly-improving one; termination therefore certifies a
    swap-local optimum. Deterministic; ``seed`` is recorded only.
    """
    D = _check_dissimilarity(D)
    n = D.shape[0]
    _check_k(k, n)
    medoids = _pam_build(D, k)
    buf = np.empty_like(D)
    onehot = np.zeros((n, k))
    converged = False
    scans = 0
    while scans < _PAM_SCAN_CAP:
        scans += 1
        nearest_pos, d1, d2 = _nearest_two(D, medoids)
        onehot[:] = 0.0
        onehot[np.arange(n), nearest_pos] = 1.0
        # extra cost borne by the removed medoid's members only:
        # max(min(d(i,h), d2_i) - d1_i, 0), grouped by current medoid
        np.minimum(D, d2[:, None], out=buf)
        buf -= d1[:, None]
        np.maximum(buf, 0.0, out=buf)
        S = onehot.T @ buf
        # gain of switching i to candidate h regardless of which medoid leaves
        np.subtract(D, d1[:, None], out=buf)
        np.minimum(buf, 0.0, out=buf)
        T = buf.sum(axis=0)
        delta = S + T[None, :]
        delta[:, medoids] = np.inf
        m_pos, h = np.unravel_index(np.argmin(delta), delta.shape)
        if delta[m_pos, h] < -1e-12:
            medoids = medoids.copy()
            medoids[m_pos] = h
            medoids = np.sort(medoids)
        else:
            converged = True
            break
    nearest_pos, d1, _ = _nearest_two(D, medoids)
    labels = _medoid_labels(D, medoids)
    objective = float(D[np.arange(n), medoids[labels]].sum())
    return _canonicalize(
        PartitionResult(
            method="pam",
            k=k,
            labels=labels + 1,
            objective=objective,
            converged=converged,
            iterations=scans,
            seed=seed,
            medoid_indices=medoids,
        )
    )


def clara(
    X: np.ndarray,
    k: int,
    *,
    seed: int = DEFAULT_SEED,
    samples: int = CLARA_SAMPLES,
    sample_size: int | None = None,
) -> PartitionResult:
    """PAM on random subsamples, scored by the full-data objective.

    Draws ``samples`` subsets of size min(N, 40 + 2k), runs PAM on each, and
    keeps the medoid set whose nearest-medoid distance sum over all N points
    is smallest. Degenerates to plain PAM when the sample covers the data.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    _check_k(k, n)
    if sample_size is None:
        sample_size = 40 + 2 * k
    if sample_size >= n:
        result = pam(dissimilarity(X), k, seed=seed)
        result.method = "clara"
        result.seed = seed
        result.centers = X[result.medoid_indices]
        return result

    best: tuple[float, np.ndarray, PartitionResult] | None = None
    for s in range(samples):
        rng = derive_rng(seed, "clara-sample", s)
        idx = np.sort(rng.choice(n, size=sample_size, replace=False))
        sub = pam(dissimilarity(X[idx]), k)
        medoids = idx[sub.medoid_indices]
        d = np.sqrt(_squared_distances_to(X, X[medoids]))
        objective = float(np.min(d, axis=1).sum())
        if best is None or objective < best[0]:
            best = (objective, medoids, sub)
    objective, medoids, sub = best
    d = np.sqrt(_squared_distances_to(X, X[medoids]))
    labels = np.argmin(d, axis=1)
    labels[medoids] = np.arange(k)
    return _canonicalize(
        PartitionResult(
            method="clara",
            k=k,
            labels=labels + 1,
            objective=objective,
            converged=sub.converged,
            iterations=samples,
            seed=seed,
            centers=X[medoids],
            medoid_indices=medoids,
        )
    )


def _fanny_stats(D: np.ndarray, U: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    W = U**r
    S = W.sum(axis=0)
    T = D @ W
    Q = np.einsum("ij,ij->j", W, T)
    F = float((Q / (2.0 * S)).sum())
    return W, S, T, F


def fanny(
    D: np.ndarray,
    k: int,
    *,
    seed: int = DEFAULT_SEED,
    exponent: float = FANNY_EXPONENT,
    tol: float = FANNY_TOL,
    max_iter: int = FANNY_MAX_ITER,
) -> PartitionResult:
    """Fuzzy clustering of a dissimilarity matrix.

    Minimizes sum_v [sum_ij u_iv^r u_jv^r d_ij] / [2 sum_j u_jv^r] by
    membership updates, with step halving toward the previous memberships
    whenever a full update would increase the objective (so the recorded
    objective never increases). Hitting the iteration cap before the
    decrease falls below ``tol`` (relative to max(1, objective)) returns
    ``converged=False`` with the result still usable.
    """
    D = _check_dissimilarity(D)
    n = D.shape[0]
    _check_k(k, n)
    if exponent <= 1:
        raise ContractError("membership exponent must exceed 1")
    rng = derive_rng(seed, "fanny-init")
    U = rng.random((n, k)) + 0.1
    U /= U.sum(axis=1, keepdims=True)

    converged = False
    prev_F = np.inf
    prev_U = U
    iterations = 0
    history: list[float] = []
    for it in range(max_iter):
        iterations = it + 1
        W, S, T, F = _fanny_stats(D, U, exponent)
        if F > prev_F:
            for _ in range(40):
                U = 0.5 * (U + prev_U)
                W, S, T, F = _fanny_stats(D, U, exponent)
                if F <= prev_F:
                    break
            else:
                U, F = prev_U, prev_F
                history.append(F)
                converged = True
                break
        history.append(F)
        if prev_F - F <= tol * max(1.0, abs(F)):
            converged = True
            break
        prev_F, prev_U = F, U
        # relational distance of each object to each implicit cluster center
        E = T / S - (np.einsum("ij,ij->j", W, T) / (2.0 * S**2))
        E = np.maximum(E, 0.0)
        zero_rows = E.min(axis=1) <= 1e-300
        with np.errstate(divide="ignore"):
            U = E ** (-1.0 / (exponent - 1.0))
        if np.any(zero_rows):
            crisp = np.argmin(E[zero_rows], axis=1)
            U[zero_rows] = 0.0
            U[zero_rows, crisp] = 1.0
        U /= U.sum(axis=1, keepdims=True)
    else:
        W, S, T, F = _fanny_stats(D, U, exponent)
        if F > prev_F:
            U, F = prev_U, prev_F
        elif prev_F - F <= tol * max(1.0, abs(F)):
            converged = True
        history.append(F)

    labels = np.argmax(U, axis=1)
    labels = _repair_empty_hard(U, labels, k)
    return _canonicalize(
        PartitionResult(
            method="fanny",
            k=k,
            labels=labels + 1,
            objective=F,
            converged=converged,
            iterations=iterations,
            seed=seed,
            memberships=U,
            objective_history=history,
        )
    )


def _repair_empty_hard(U: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Move the strongest candidate from a donor cluster into each empty one."""
    labels = labels.copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        candidates = np.where(sizes[labels] >= 2)[0]
        best = candidates[np.argmax(U[candidates, c])]
        labels[best] = c
    return labels
