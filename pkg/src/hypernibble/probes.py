"""Polynomial concentration statistics, tail probes, textbook tail bounds and
a small exact chromatic-number oracle."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .hypergraph import Hypergraph, covered_pairs
from .rng import stream


@dataclass(frozen=True)
class PolySystem:
    """Ground set W, family F (a multiset of subsets of W) and a success
    probability per ground element.  Z counts the members of F all of whose
    elements succeed."""

    ground: tuple
    family: tuple[frozenset, ...]
    probs: dict = field(hash=False, compare=False)

    def __post_init__(self):
        W = set(self.ground)
        for f in self.family:
            if not f <= W:
                raise ValueError(f"family member {sorted(f)} is not inside the ground set")
        for w in self.ground:
            if not 0 <= self.probs[w] <= 1:
                raise ValueError(f"probability of {w} outside [0, 1]")

    @property
    def rank(self) -> int:
        return max((len(f) for f in self.family), default=0)

    @classmethod
    def uniform(cls, family, p) -> "PolySystem":
        family = tuple(frozenset(f) for f in family)
        ground = tuple(sorted(set().union(*family))) if family else ()
        return cls(ground, family, {w: p for w in ground})


def covered_pair_polysystem(H: Hypergraph, v: int, m: int) -> PolySystem:
    """One set S = T_v(x) | T_v(y) | (g - {x, y}) per covered pair {x, y} at v.

    With a uniform random part in [m] per vertex, S "succeeds" when all its
    vertices land in v's part, probability 1/m each.
    """
    H.require_simple()
    if not 0 <= v < H.n:
        raise ValueError(f"vertex {v} out of range")
    if m < 1:
        raise ValueError("m must be >= 1")
    rep = covered_pairs(H, v)
    family = []
    for x, y, w in rep.pairs:
        T = set(H.edges[w]) - {x, y}
        family.append(frozenset(rep.link[x]) | frozenset(rep.link[y]) | T)
    return PolySystem.uniform(family, Fraction(1, m))


@dataclass
class KimVuStats:
    expectation: object
    m_table: dict
    m0: object
    m1: object
    rank: int

    def bound_shape(self, lam: float) -> float:
        """lambda^s sqrt(M0 M1); the unknown constant a_s stays symbolic."""
        return lam ** self.rank * math.sqrt(float(self.m0) * float(self.m1))


def _prod(ps, one):
    out = one
    for x in ps:
        out = out * x
    return out


def _m_a(sys: PolySystem, A: frozenset, one):
    return sum((_prod((sys.probs[i] for i in f - A), one) for f in sys.family if A <= f), 0 * one)


def kimvu_stats(sys: PolySystem, queries=()) -> KimVuStats:
    """E(Z), M_A for the queried sets and M_0, M_1.

    M_j is the maximum of M_A over |A| >= j with |A| below the rank; any A
    outside every member of F has M_A = 0, so only subsets of members are
    enumerated.  Arithmetic follows the probability type (Fraction stays exact).
    """
    one = next(iter(sys.probs.values()), 1) ** 0 if sys.probs else 1
    s = sys.rank
    table = {frozenset(A): _m_a(sys, frozenset(A), one) for A in queries}
    expectation = _m_a(sys, frozenset(), one)
    cands = set()
    for f in sys.family:
        items = sorted(f)
        for r in range(1, s):
            cands.update(frozenset(c) for c in itertools.combinations(items, r))
    m1 = max((_m_a(sys, A, one) for A in sorted(cands, key=sorted)), default=0 * one)
    m0 = max(expectation, m1)
    return KimVuStats(expectation, table, m0, m1, s)


# -- Monte-Carlo tails -------------------------------------------------------


@dataclass
class TailTable:
    rows: list[dict]
    trials: int
    mean: float
    stderr: float
    exact_mean: float

    @property
    def monotone(self) -> bool:
        tails = [r["empirical_tail"] for r in self.rows]
        return all(a >= b for a, b in zip(tails, tails[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["lambda", "threshold", "empirical_tail", "trials"],
                           lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({key: repr(v) if isinstance(v, float) else v for key, v in r.items()})
        return buf.getvalue()


def sample_z(sys: PolySystem, trials: int, seed: int = 0, chunk: int = 20000) -> np.ndarray:
    W = list(sys.ground)
    idx = {w: j for j, w in enumerate(W)}
    F = np.zeros((len(sys.family), len(W)), dtype=np.int64)
    for r, f in enumerate(sys.family):
        for w in f:
            F[r, idx[w]] = 1
    sizes = F.sum(axis=1)
    p = np.array([float(sys.probs[w]) for w in W])
    rng = stream(seed, "kimvu-tail")
    out = []
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        z = (rng.random((b, len(W))) < p).astype(np.int64)
        out.append(((z @ F.T) == sizes).sum(axis=1))
        done += b
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def empirical_tail(sys: PolySystem, trials: int, lambdas, seed: int = 0) -> TailTable:
    """Empirical P(|Z - E Z| >= lambda^s sqrt(M0 M1)) over a lambda grid."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    st = kimvu_stats(sys)
    mu = float(st.expectation)
    Z = sample_z(sys, trials, seed)
    dev = np.abs(Z - mu)
    rows = []
    for lam in sorted(lambdas):
        tau = st.bound_shape(lam)
        rows.append({"lambda": float(lam), "threshold": tau,
                     "empirical_tail": float((dev >= tau).mean()), "trials": trials})
    sd = float(Z.std(ddof=1)) if trials > 1 else 0.0
    return TailTable(rows, trials, float(Z.mean()), sd / math.sqrt(trials), mu)


# -- closed-form bounds ------------------------------------------------------


def hoeffding_bound(t: float, a) -> float:
    """exp(-2 t^2 / sum a_i^2) for a sum of independent variables of ranges a_i."""
    a = list(a)
    if t <= 0:
        raise ValueError("deviation t must be positive")
    s = sum(x * x for x in a)
    if not a or s <= 0:
        raise ValueError("need at least one positive range")
    return math.exp(-2 * t * t / s)


def hoeffding_mult(L: float, alpha: float) -> float:
    """(3/alpha)^L; valid for P(X >= L) when L >= alpha E(X) (caller's duty)."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if L < 0:
        raise ValueError("L must be non-negative")
    return (3 / alpha) ** L


def chernoff_half(n: int, p: float) -> float:
    """exp(-np/3), bounding P(Bin(n, p) >= 2np)."""
    if n < 0 or not 0 <= p <= 1:
        raise ValueError("need n >= 0 and p in [0, 1]")
    return math.exp(-n * p / 3)


def binomial_tail_mc(n: int, p: float, threshold: int, trials: int, seed: int = 0) -> float:
    draws = stream(seed, "binomial-tail").binomial(n, p, size=trials)
    return float((draws >= threshold).mean())


# -- exact chromatic number ---------------------------------------------------


class BudgetExceeded(RuntimeError):
    pass


def _colorable(H: Hypergraph, c: int, budget: list[int]) -> bool:
    order = sorted(range(H.n), key=lambda v: (-len(H.incidence[v]), v))
    pos = {v: i for i, v in enumerate(order)}
    # edges checked when their last vertex (in search order) is assigned
    closing = [[] for _ in range(H.n)]
    for e in H.edges:
        closing[max(e, key=pos.__getitem__)].append(e)
    col = [-1] * H.n

    def go(i, used):
        if i == len(order):
            return True
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("exact_chromatic node budget exhausted")
        v = order[i]
        for x in range(min(used + 1, c)):  # new colours only in canonical order
            col[v] = x
            if all(any(col[u] != x for u in e) for e in closing[v]):
                if go(i + 1, max(used, x + 1)):
                    return True
        col[v] = -1
        return False

    return go(0, 0)


def exact_chromatic(H: Hypergraph, max_colors: int = 6, node_budget: int = 2_000_000):
    """Least number of colours with no monochromatic edge, or None when it
    exceeds ``max_colors``.  Raises BudgetExceeded if the search is cut off."""
    if H.n == 0:
        return 0
    if H.m == 0:
        return 1
    budget = [node_budget]
    for c in range(2, max_colors + 1):
        if _colorable(H, c, budget):
            return c
    return None
