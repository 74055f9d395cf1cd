"""Error-invariance group actions.

Samplers for the three invariance families (exchangeable errors, sign
symmetric errors, cluster exchangeable errors), application of an
action to a vector, and the cross-moment |X'GX/n|_inf used by the
debiasing-row selection objective.

Exchange actions are built as perfect matchings between two random
halves of [n]: the minimal construction satisfying the two-sided swap
structure, and an involution by construction.  Cluster actions apply an
independent Exchange-style draw inside each declared cluster.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EXCHANGE = "exchange"
SIGN = "sign"
CLUSTER = "cluster"

#: switch to column-tiled accumulation above this dense-product size
_DENSE_LIMIT = 10_000_000


@dataclass(frozen=True)
class GroupAction:
    """One error-invariance map G.

    For permutation kinds (exchange, cluster) ``perm`` holds g with
    (Gv)_i = v[g[i]].  For the sign kind ``signs`` holds the +/-1
    diagonal.
    """

    kind: str
    perm: np.ndarray | None = None
    signs: np.ndarray | None = None

    @property
    def n(self) -> int:
        payload = self.perm if self.perm is not None else self.signs
        return len(payload)


@dataclass(frozen=True)
class GroupActionSet:
    """A sampled collection of actions, all of one kind."""

    actions: tuple[GroupAction, ...]
    seed: int | None = None
    clusters: tuple[tuple[int, ...], ...] | None = field(default=None)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def kind(self) -> str:
        return self.actions[0].kind


def _require_even(n: int) -> None:
    if n % 2 != 0:
        raise ValueError(
            f"n must be even (got {n}); drop one observation before "
            "sampling group actions")


def _matching_perm(rng: np.random.Generator, indices: np.ndarray) -> np.ndarray:
    """Pair-swap permutation of the given indices (within [n] labels).

    Draws a uniform random equal split of the indices and a uniform
    bijection between the halves, returning the partial map as pairs.
    """
    shuffled = rng.permutation(indices)
    half = len(indices) // 2
    first, second = shuffled[:half], shuffled[half:]
    return first, second


def sample_exchange(n: int, count: int, seed=None) -> GroupActionSet:
    """Sample pair-swap permutations of [n] (with replacement)."""
    _require_even(n)
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    idx = np.arange(n)
    actions = []
    for _ in range(count):
        perm = np.arange(n)
        first, second = _matching_perm(rng, idx)
        perm[first] = second
        perm[second] = first
        actions.append(GroupAction(kind=EXCHANGE, perm=perm))
    return GroupActionSet(actions=tuple(actions), seed=seed)


def sample_sign(n: int, count: int, seed=None) -> GroupActionSet:
    """Sample balanced +/-1 diagonal actions (with replacement)."""
    _require_even(n)
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    actions = []
    for _ in range(count):
        signs = -np.ones(n)
        plus = rng.permutation(n)[: n // 2]
        signs[plus] = 1.0
        actions.append(GroupAction(kind=SIGN, signs=signs))
    return GroupActionSet(actions=tuple(actions), seed=seed)


def sample_cluster(clusters, count: int, seed=None) -> GroupActionSet:
    """Sample within-cluster pair-swap permutations.

    ``clusters`` is a sequence of index sequences partitioning [n].
    Every cluster must have even size strictly greater than 2.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    clusters = [np.asarray(c, dtype=int) for c in clusters]
    if not clusters:
        raise ValueError("at least one cluster required")
    all_idx = np.concatenate(clusters)
    n = len(all_idx)
    if len(np.unique(all_idx)) != n or set(all_idx) != set(range(n)):
        raise ValueError("clusters must be disjoint and cover 0..n-1")
    for k, c in enumerate(clusters):
        if len(c) <= 2 or len(c) % 2 != 0:
            raise ValueError(
                f"cluster {k} has size {len(c)}; cluster sizes must be "
                "even and greater than 2")
    rng = np.random.default_rng(seed)
    actions = []
    for _ in range(count):
        perm = np.arange(n)
        for c in clusters:
            first, second = _matching_perm(rng, c)
            perm[first] = second
            perm[second] = first
        actions.append(GroupAction(kind=CLUSTER, perm=perm))
    return GroupActionSet(actions=tuple(actions), seed=seed,
                          clusters=tuple(tuple(int(i) for i in c)
                                         for c in clusters))


def apply(action: GroupAction, v: np.ndarray) -> np.ndarray:
    """Apply G to a vector: (Gv)_i = v[g(i)] or s_i v_i."""
    v = np.asarray(v, dtype=float)
    if v.shape != (action.n,):
        raise ValueError(f"vector length {v.shape} does not match action "
                         f"size {action.n}")
    if action.kind == SIGN:
        return action.signs * v
    return v[action.perm]


def cross_moment(X: np.ndarray, action: GroupAction) -> float:
    """Max absolute entry of X'GX/n.

    Dense product for small problems; column-tiled accumulation when
    n * p^2 would be large.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if action.n != n:
        raise ValueError("action size does not match number of rows of X")
    GX = apply_matrix(action, X)
    if n * p * p <= _DENSE_LIMIT:
        return float(np.max(np.abs(X.T @ GX))) / n
    best = 0.0
    step = max(1, _DENSE_LIMIT // (n * p))
    for start in range(0, p, step):
        block = X[:, start:start + step].T @ GX
        best = max(best, float(np.max(np.abs(block))))
    return best / n


def apply_matrix(action: GroupAction, X: np.ndarray) -> np.ndarray:
    """Apply G to every column of X at once."""
    if action.kind == SIGN:
        return action.signs[:, None] * X
    return X[action.perm]


def mean_cross_moment(X: np.ndarray, actions: GroupActionSet) -> float:
    """(1/|G|) sum_G |X'GX/n|_inf over the sampled set."""
    return float(np.mean([cross_moment(X, g) for g in actions.actions]))


def transformed_matrix(actions: GroupActionSet, v: np.ndarray) -> np.ndarray:
    """Stack Gv for every action into a (|G|, n) matrix."""
    v = np.asarray(v, dtype=float)
    if actions.kind == SIGN:
        signs = np.stack([g.signs for g in actions.actions])
        return signs * v
    perms = np.stack([g.perm for g in actions.actions])
    return v[perms]
