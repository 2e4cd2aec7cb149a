"""Semi-random ("nibble") colouring of simple triangle-free k-graphs.

Each round every uncoloured vertex u tentatively activates colour c with
probability theta * p_u(c).  A colour is lost at u when activating it there
could complete a monochromatic edge, either an all-uncoloured edge of the
current hypergraph or a restriction edge (the uncoloured remainder of an edge
whose coloured vertices already share that colour).  u keeps the smallest
activated colour that is neither lost nor capped, and the probability vectors
of the survivors are rescaled so that E[p'] = p.

All randomness for round t is drawn from streams keyed by (seed, t) and
indexed by (vertex, colour), so a run is a pure function of its inputs.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .hypergraph import UNCOLORED, Hypergraph, HypergraphError, find_triangles
from .rng import stream

log = logging.getLogger(__name__)


class EngineError(RuntimeError):
    pass


class SoundnessError(EngineError):
    """A fully coloured edge came out monochromatic (must never happen)."""


@dataclass(frozen=True)
class EngineParams:
    k: int
    delta: int
    eps: float
    omega: float
    theta: float
    q: int
    p_hat: float
    t0: int
    mode: str = "practical"
    seed: int = 0
    handoff_exponent: float | None = 0.5
    resample_on_breach: bool = False
    max_round_retries: int = 3

    @property
    def degenerate(self) -> bool:
        return self.omega < 1 or not self.theta * self.p_hat < 1

    @property
    def handoff_degree(self) -> float | None:
        if self.handoff_exponent is None:
            return None
        return float(self.delta) ** self.handoff_exponent

    def validate(self):
        if self.k < 2:
            raise EngineError("k must be >= 2")
        if self.q < 1:
            raise EngineError("q must be >= 1")
        if self.t0 < 0:
            raise EngineError("t0 must be >= 0")
        if not (self.theta > 0 and self.p_hat > 0 and self.theta * self.p_hat < 1):
            raise EngineError(f"need 0 < theta*p_hat < 1, got theta={self.theta}, p_hat={self.p_hat}")
        if self.p_hat > 1:
            raise EngineError("p_hat must be <= 1")
        return self

    def to_dict(self):
        return asdict(self)


def params_from(k: int, delta: int, eps: float, mode: str = "practical", **overrides) -> EngineParams:
    """Engine parameters for a k-graph of maximum degree ``delta``.

    theory: the asymptotic choices (omega = eps^2 ln D / (100 k^(2k+1)),
    theta = eps/omega, q = ceil((D/omega)^(1/(k-1))), p_hat = D^(eps - 1/(k-1)),
    t0 = ceil(ln D ln ln D / eps)).  These are degenerate at any desk-scale D;
    the result is flagged and a warning logged, and ``init_state`` refuses
    to run it while theta*p_hat >= 1.

    practical (default): q = ceil(q_scale (D/ln D)^(1/(k-1))), theta = 0.5,
    p_hat = min(1, p_hat_scale/q), t0 = ceil(k ln D / theta), omega = D/q^(k-1)
    so that the initial edge weight is omega/D.  Any field may be overridden.
    """
    if not 0 < eps < 1:
        raise EngineError(f"eps must lie in (0, 1), got {eps}")
    if mode not in ("theory", "practical"):
        raise EngineError(f"unknown mode {mode!r}")
    q_scale = overrides.pop("q_scale", 2.0)
    p_hat_scale = overrides.pop("p_hat_scale", 4.0)
    if mode == "theory":
        if delta < 2:
            raise EngineError("theory mode needs delta >= 2")
        L = math.log(delta)
        omega = eps * eps * L / (100 * k ** (2 * k + 1))
        theta = eps / omega
        q = math.ceil((delta / omega) ** (1 / (k - 1)))
        p_hat = delta ** (eps - 1 / (k - 1))
        t0 = math.ceil(L * math.log(L) / eps) if L > 1 else 1
        vals = dict(omega=omega, theta=theta, q=q, p_hat=p_hat, t0=max(t0, 0))
    else:
        if delta < 1:
            raise EngineError("delta must be >= 1")
        D = max(delta, 3)
        q = overrides.get("q") or math.ceil(q_scale * (D / math.log(D)) ** (1 / (k - 1)))
        theta = overrides.get("theta", 0.5)
        p_hat = overrides.get("p_hat") or min(1.0, p_hat_scale / q)
        t0 = math.ceil(k * math.log(D) / theta)
        vals = dict(omega=delta / q ** (k - 1), theta=theta, q=q, p_hat=p_hat, t0=t0)
    vals.update(overrides)
    params = EngineParams(k=k, delta=delta, eps=eps, mode=mode, **vals)
    if mode == "theory":
        if params.degenerate:
            log.warning("theory-mode parameters are degenerate at delta=%d (omega=%.3g, theta*p_hat=%.3g)",
                        delta, params.omega, params.theta * params.p_hat)
    else:
        params.validate()
    return params


# -- state -------------------------------------------------------------------


@dataclass
class RoundScratch:
    gamma: np.ndarray  # (n, q) tentative activations
    lost: np.ndarray  # (n, q) L(u) for this round
    usable: np.ndarray  # (n, q) Psi(u)
    eta: np.ndarray  # (n, q) Case-B coins
    q_u: np.ndarray  # (n, q)

    def activated(self, u: int) -> set[int]:
        return set(np.flatnonzero(self.gamma[u]).tolist())


@dataclass
class Structure:
    """Edges of the current uncoloured hypergraph and the restriction graphs."""

    h_edges: np.ndarray  # (m0, k) vertex ids, all uncoloured
    restr: dict[int, tuple[np.ndarray, np.ndarray]]  # i -> ((m_i, i) vertices, (m_i,) colour index)
    dead: int
    full: np.ndarray  # edge ids with every vertex coloured
    singles: tuple[np.ndarray, np.ndarray]  # (vertex, colour) with one uncoloured vertex left


@dataclass
class ColoringState:
    H: Hypergraph
    params: EngineParams
    t: int
    p: np.ndarray  # (n, |C|) float64
    kappa: np.ndarray  # (n,) colour index or -1
    lost: np.ndarray  # (n, |C|) bool, the sets A(u)
    palette: np.ndarray  # colour index -> colour label
    h0: np.ndarray  # (n,) initial entropies
    list_mode: bool = False
    lists: list[list[int]] | None = None
    last_scratch: RoundScratch | None = field(default=None, repr=False)
    _edges: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def ncolors(self) -> int:
        return self.p.shape[1]

    @property
    def edge_array(self) -> np.ndarray:
        if self._edges is None:
            self._edges = np.asarray(self.H.edges, dtype=np.int64).reshape(-1, self.H.k)
        return self._edges

    @property
    def uncolored(self) -> np.ndarray:
        return self.kappa == UNCOLORED

    @property
    def U(self) -> np.ndarray:
        return np.flatnonzero(self.uncolored)

    @property
    def bad(self) -> np.ndarray:
        """B(u): colours held at the cap (only meaningful for u in U)."""
        return self.p == self.params.p_hat

    def colors(self) -> list[int]:
        """Colour labels per vertex, -1 for uncoloured."""
        out = np.full(self.n, UNCOLORED, dtype=np.int64)
        done = self.kappa >= 0
        out[done] = self.palette[self.kappa[done]]
        return out.tolist()

    def copy(self) -> "ColoringState":
        return replace(self, p=self.p.copy(), kappa=self.kappa.copy(), lost=self.lost.copy(),
                       last_scratch=None)

    def structure(self) -> Structure:
        E = self.edge_array
        k = self.H.k
        if len(E) == 0:
            empty = np.zeros((0, k), dtype=np.int64)
            return Structure(empty, {}, 0, np.zeros(0, dtype=np.int64),
                             (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)))
        K = self.kappa[E]
        unc = K < 0
        n_unc = unc.sum(axis=1)
        big = np.iinfo(np.int64).max
        kmin = np.where(unc, big, K).min(axis=1)
        kmax = np.where(unc, -1, K).max(axis=1)
        mono = (kmin == kmax) & (n_unc < k)
        restr = {}
        # stable sort puts the uncoloured positions first, in vertex order
        order = np.argsort(~unc, axis=1, kind="stable")
        for i in range(2, k):
            sel = (n_unc == i) & mono
            if sel.any():
                verts = np.take_along_axis(E[sel], order[sel], axis=1)[:, :i]
                restr[i] = (verts, kmin[sel])
        one = (n_unc == 1) & mono
        single_v = np.take_along_axis(E[one], order[one], axis=1)[:, 0]
        dead = int(((n_unc >= 1) & (n_unc < k) & ~mono).sum())
        return Structure(E[n_unc == k], restr, dead, np.flatnonzero(n_unc == 0),
                         (single_v, kmin[one]))


def _check_input(H: Hypergraph, check: bool):
    if not check:
        return
    if not H.is_simple:
        raise HypergraphError("nibble engine needs a simple hypergraph")
    if find_triangles(H, limit=1):
        raise HypergraphError("nibble engine needs a triangle-free hypergraph")


def init_state(H: Hypergraph, params: EngineParams, check: bool = True) -> ColoringState:
    """Uniform start: p_u = (1/q, ..., 1/q) over the palette [q]."""
    params.validate()
    if params.k != H.k:
        raise EngineError(f"params are for k={params.k}, hypergraph has k={H.k}")
    if 1.0 / params.q > params.p_hat:
        raise EngineError(f"p_hat={params.p_hat} is below the initial probability 1/q={1 / params.q}")
    _check_input(H, check)
    n, q = H.n, params.q
    p = np.full((n, q), 1.0 / q)
    return ColoringState(H, params, 0, p, np.full(n, UNCOLORED, dtype=np.int64),
                         np.zeros((n, q), dtype=bool), np.arange(q), np.full(n, math.log(q)))


def init_state_list(H: Hypergraph, params: EngineParams, lists, check: bool = True) -> ColoringState:
    """List-colouring start.

    Each vertex v brings 2q admissible colour labels A_v; the q smallest form
    B_v, the nibble palette is the union of the B_v and p_v is uniform on B_v.
    The rest of each list is kept for the finisher.
    """
    params.validate()
    q = params.q
    if len(lists) != H.n:
        raise EngineError("need one colour list per vertex")
    if 1.0 / q > params.p_hat:
        raise EngineError(f"p_hat={params.p_hat} is below the initial probability 1/q={1 / q}")
    _check_input(H, check)
    norm = []
    for v, lst in enumerate(lists):
        s = sorted(set(int(c) for c in lst))
        if len(s) < 2 * q:
            raise EngineError(f"vertex {v} has {len(s)} colours, needs 2q={2 * q}")
        norm.append(s)
    palette = np.array(sorted({c for s in norm for c in s[:q]}), dtype=np.int64)
    index = {int(c): j for j, c in enumerate(palette)}
    p = np.zeros((H.n, len(palette)))
    for v, s in enumerate(norm):
        p[v, [index[c] for c in s[:q]]] = 1.0 / q
    return ColoringState(H, params, 0, p, np.full(H.n, UNCOLORED, dtype=np.int64),
                         np.zeros(p.shape, dtype=bool), palette, np.full(H.n, math.log(q)),
                         list_mode=True, lists=norm)


def state_from(H: Hypergraph, params: EngineParams, p, kappa, lost=None, t: int = 0,
               check: bool = True) -> ColoringState:
    """Assemble a state from explicit arrays (fixtures, replays)."""
    params.validate()
    _check_input(H, check)
    p = np.array(p, dtype=np.float64)
    kappa = np.array(kappa, dtype=np.int64)
    if p.shape != (H.n, params.q) or kappa.shape != (H.n,):
        raise EngineError("array shapes do not match (n, q)")
    if (p < 0).any() or (p > params.p_hat).any():
        raise EngineError("probabilities must lie in [0, p_hat]")
    lost = np.zeros(p.shape, dtype=bool) if lost is None else np.array(lost, dtype=bool)
    return ColoringState(H, params, t, p, kappa, lost, np.arange(params.q),
                         np.full(H.n, math.log(params.q)))


def state_jsonl(state: ColoringState) -> str:
    """One record per vertex: colour label (or -1), sum of p, |A(u)|, |B(u)|."""
    labels = state.colors()
    sums = state.p.sum(axis=1)
    lost = state.lost.sum(axis=1)
    bad = state.bad.sum(axis=1)
    lines = []
    for v in range(state.n):
        rec = {"v": v, "colored": labels[v] != UNCOLORED, "color": labels[v], "sum_p": float(sums[v]),
               "lost": int(lost[v]), "bad": int(bad[v])}
        lines.append(json.dumps(rec))
    return "\n".join(lines) + ("\n" if lines else "")


# -- one round ---------------------------------------------------------------


def _loss(gamma: np.ndarray, st: Structure, k: int) -> np.ndarray:
    """L(u) for a batch of activation patterns; gamma has shape (T, n, C)."""
    T, n, C = gamma.shape
    L = np.zeros((T, n, C), dtype=bool)
    He = st.h_edges
    if len(He):
        act = gamma[:, He, :]  # (T, m0, k, C)
        cnt = act.sum(axis=2, dtype=np.int16)
        for j in range(k):
            # every other vertex of the edge activated the colour
            tt, ee, cc = np.nonzero((cnt - act[:, :, j, :]) == k - 1)
            L[tt, He[ee, j], cc] = True
    for i, (R, col) in st.restr.items():
        act = gamma[:, R, col[:, None]]  # (T, m_i, i)
        cnt = act.sum(axis=2, dtype=np.int16)
        for j in range(i):
            tt, ee = np.nonzero((cnt - act[:, :, j]) == i - 1)
            L[tt, R[ee, j], col[ee]] = True
    return L


def _keep_prob(p: np.ndarray, st: Structure, theta: float, k: int) -> np.ndarray:
    """q_u(c) for every vertex and colour."""
    n, C = p.shape
    logq = np.zeros((n, C))
    He = st.h_edges
    if len(He):
        P = p[He]  # (m0, k, C)
        for j in range(k):
            others = np.prod(np.delete(P, j, axis=1), axis=1)
            np.add.at(logq, He[:, j], np.log1p(-(theta ** (k - 1)) * others))
    for i, (R, col) in st.restr.items():
        P = p[R, col[:, None]]  # (m_i, i)
        for j in range(i):
            others = np.prod(np.delete(P, j, axis=1), axis=1)
            np.add.at(logq, (R[:, j], col), np.log1p(-(theta ** (i - 1)) * others))
    return np.exp(logq)


def q_u(state: ColoringState, u: int, c: int) -> float:
    """Probability that colour index c survives this round at u."""
    return float(_keep_prob(state.p, state.structure(), state.params.theta, state.H.k)[u, c])


def q_u_lower_bound(state: ColoringState, u: int, c: int) -> float:
    """1 - theta^(k-1) Xi_u(c) - sum_i theta^(i-1) Phi_{u,i}(c)."""
    from .telemetry import vertex_color_sums

    k, theta = state.H.k, state.params.theta
    xi, phi = vertex_color_sums(state, u, c)
    return 1.0 - theta ** (k - 1) * xi - sum(theta ** (i - 1) * phi[i] for i in phi)


def _update(p, prev_lost, L, qk, eta, p_hat):
    """Case A / Case B update; arrays broadcast over a leading batch axis."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p > 0, p / qk, 0.0)
    case_a = ratio < p_hat
    new = np.where(case_a, np.where(L, 0.0, ratio), np.where(eta, p_hat, 0.0))
    return np.where(prev_lost, p, new)


def _draws(state: ColoringState, attempt: int = 0):
    seed, t = state.params.seed, state.t
    shape = state.p.shape
    ug = stream(seed, "gamma", t, attempt).random(shape)
    ue = stream(seed, "eta", t, attempt).random(shape)
    return ug, ue


def simulate_round(state: ColoringState, trials: int, seed: int, chunk: int = 5000):
    """Independent replays of one round's random experiment.

    Yields ``(lost, p_new)`` arrays of shape (chunk, n, C) built with the same
    loss and update code as ``run_round``; used to check the survival
    probability and martingale contracts by Monte Carlo.
    """
    st = state.structure()
    prm = state.params
    k = state.H.k
    qk = _keep_prob(state.p, st, prm.theta, k)
    rng = stream(seed, "simulate")
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_p = np.where(state.p > 0, state.p / prm.p_hat, 0.0)
    done = 0
    while done < trials:
        T = min(chunk, trials - done)
        gamma = rng.random((T,) + state.p.shape) < prm.theta * state.p
        L = _loss(gamma, st, k)
        eta = rng.random((T,) + state.p.shape) < eta_p
        yield L, _update(state.p, state.lost, L, qk, eta, prm.p_hat)
        done += T


def _soundness(state: ColoringState, st: Structure):
    E = state.edge_array
    if len(st.full):
        K = state.kappa[E[st.full]]
        mono = (K == K[:, :1]).all(axis=1)
        if mono.any():
            bad = st.full[mono].tolist()
            raise SoundnessError(f"round {state.t}: monochromatic edges {bad[:10]}")
    sv, sc = st.singles
    if len(sv) and not state.lost[sv, sc].all():
        j = int(np.flatnonzero(~state.lost[sv, sc])[0])
        raise SoundnessError(f"round {state.t}: vertex {int(sv[j])} can still take the colour "
                             f"{int(sc[j])} of its otherwise monochromatic edge")
    for i, (R, _) in st.restr.items():
        if len(np.unique(R, axis=0)) != len(R):
            raise SoundnessError(f"restriction {i}-graph has an ambiguously coloured edge")


def run_round(state: ColoringState, rng=None, attempt: int = 0):
    """Advance one round; returns (new_state, snapshot).

    ``rng`` may supply a ``numpy.random.Generator`` to replace the keyed
    streams (used by tests); by default draws are keyed by (seed, t).
    """
    from .telemetry import snapshot

    prm = state.params
    k = state.H.k
    if state.t >= prm.t0:
        raise EngineError(f"round {state.t} is past t0={prm.t0}")
    st = state.structure()
    if rng is None:
        ug, ue = _draws(state, attempt)
    else:
        ug, ue = rng.random(state.p.shape), rng.random(state.p.shape)
    unc = state.uncolored
    gamma = (ug < prm.theta * state.p) & unc[:, None]
    L = _loss(gamma[None], st, k)[0] & unc[:, None]
    qk = _keep_prob(state.p, st, prm.theta, k)
    if (qk[unc] <= 0).any():
        raise EngineError("a survival probability q_u(c) vanished")
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = ue < np.where(state.p > 0, state.p / prm.p_hat, 0.0)

    new = state.copy()
    new_lost = state.lost | L
    usable = gamma & ~new_lost & ~state.bad
    has = usable.any(axis=1) & unc
    first = np.argmax(usable, axis=1)
    new.kappa[has] = first[has]
    p_next = _update(state.p, state.lost, L, qk, eta, prm.p_hat)
    new.p[unc] = p_next[unc]
    new.lost[unc] = new_lost[unc]
    new.t = state.t + 1
    new.last_scratch = RoundScratch(gamma, L, usable, eta, qk)

    _soundness(new, new.structure())
    return new, snapshot(new)


def _breach(snap, state) -> bool:
    from .telemetry import invariant_flags

    flags = invariant_flags(snap, state)
    return not (flags["A"] and flags["D"])


@dataclass
class RunResult:
    state: ColoringState
    telemetry: list  # TelemetrySnapshot per round, starting at t=0
    stop_reason: str
    retries: int = 0


def run(state: ColoringState) -> RunResult:
    """Rounds until t0, until U is empty, or until the hand-off degree is reached."""
    from .telemetry import snapshot

    prm = state.params
    series = [snapshot(state)]
    retries = 0
    reason = "t0"
    while state.t < prm.t0:
        snap = series[-1]
        if snap.uncolored == 0:
            reason = "all-colored"
            break
        if prm.handoff_degree is not None and snap.max_d <= prm.handoff_degree:
            reason = "handoff"
            break
        nxt, snap = run_round(state)
        if prm.resample_on_breach:
            attempt = 0
            while _breach(snap, nxt) and attempt < prm.max_round_retries:
                attempt += 1
                retries += 1
                nxt, snap = run_round(state, attempt=attempt)
        state = nxt
        series.append(snap)
    else:
        if series[-1].uncolored == 0:
            reason = "all-colored"
    return RunResult(state, series, reason, retries)
