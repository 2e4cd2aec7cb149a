"""Per-round telemetry of the nibble engine and invariant monitors.

``snapshot`` is the fast (numpy) path used during runs.  ``naive_snapshot``
recomputes the same quantities straight from the definitions with plain
Python loops over the hypergraph; ``telemetry_check`` compares the two and
evaluates the invariant inequalities as pass/fail flags.  Every quantity is
taken over the currently uncoloured vertices only.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import UNCOLORED


@dataclass
class TelemetrySnapshot:
    t: int
    uncolored: int
    max_xi_e: float
    max_xi_u: float
    max_xi_uc: float
    min_h: float
    max_d_H: int
    max_d: int
    max_sum_dev: float
    max_p_bad: float
    max_phi: dict[int, float] = field(default_factory=dict)
    max_phi_c: dict[int, float] = field(default_factory=dict)
    max_d_i: dict[int, int] = field(default_factory=dict)
    max_d_ic: dict[int, int] = field(default_factory=dict)

    COUNT_FIELDS = ("t", "uncolored", "max_d_H", "max_d")
    FLOAT_FIELDS = ("max_xi_e", "max_xi_u", "max_xi_uc", "min_h", "max_sum_dev", "max_p_bad")

    def row(self) -> dict:
        r = {"t": self.t, "uncolored": self.uncolored, "max_xi_e": self.max_xi_e}
        for i in sorted(self.max_phi):
            r[f"max_phi_{i}"] = self.max_phi[i]
        r.update(min_h=self.min_h, max_d=self.max_d, max_sum_dev=self.max_sum_dev,
                 max_p_bad=self.max_p_bad, max_xi_u=self.max_xi_u, max_xi_uc=self.max_xi_uc)
        for i in sorted(self.max_phi_c):
            r[f"max_phi_c_{i}"] = self.max_phi_c[i]
        r["max_d_H"] = self.max_d_H
        for i in sorted(self.max_d_i):
            r[f"max_d_{i}"] = self.max_d_i[i]
        for i in sorted(self.max_d_ic):
            r[f"max_d_c_{i}"] = self.max_d_ic[i]
        return r

    def compare(self, other: "TelemetrySnapshot", rtol: float = 1e-9) -> list[str]:
        """Names of fields that disagree (counts exactly, floats to rtol)."""
        a, b = self.row(), other.row()
        if a.keys() != b.keys():
            return ["<columns>"]
        bad = []
        for key, x in a.items():
            y = b[key]
            if isinstance(x, (int, np.integer)) and isinstance(y, (int, np.integer)):
                if x != y:
                    bad.append(key)
            elif not math.isclose(x, y, rel_tol=rtol, abs_tol=1e-300):
                bad.append(key)
        return bad


def _max(a, default=0.0):
    return float(a.max()) if a.size else default


def snapshot(state) -> TelemetrySnapshot:
    k = state.H.k
    p = state.p
    n, C = p.shape
    unc = state.uncolored
    st = state.structure()

    xi_u = np.zeros(n)
    xi_uc = np.zeros((n, C))
    d_H = np.zeros(n, dtype=np.int64)
    max_xi_e = 0.0
    He = st.h_edges
    if len(He):
        P = p[He]
        max_xi_e = float(P.prod(axis=1).sum(axis=1).max())
        xi_e = P.prod(axis=1).sum(axis=1)
        for j in range(k):
            np.add.at(xi_u, He[:, j], xi_e)
            np.add.at(xi_uc, He[:, j], np.prod(np.delete(P, j, axis=1), axis=1))
            np.add.at(d_H, He[:, j], 1)

    max_phi, max_phi_c, max_d_i, max_d_ic = {}, {}, {}, {}
    d = d_H.copy()
    for i in range(2, k):
        phi = np.zeros(n)
        phi_c = np.zeros((n, C))
        d_ic = np.zeros((n, C), dtype=np.int64)
        if i in st.restr:
            R, col = st.restr[i]
            P = p[R, col[:, None]]
            full = P.prod(axis=1)
            for j in range(i):
                np.add.at(phi, R[:, j], full)
                np.add.at(phi_c, (R[:, j], col), np.prod(np.delete(P, j, axis=1), axis=1))
                np.add.at(d_ic, (R[:, j], col), 1)
        d_i = d_ic.sum(axis=1)
        d += d_i
        max_phi[i] = _max(phi[unc])
        max_phi_c[i] = _max(phi_c[unc])
        max_d_i[i] = int(_max(d_i[unc], 0))
        max_d_ic[i] = int(_max(d_ic[unc], 0))

    pu = p[unc]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(pu > 0, pu * np.log(np.where(pu > 0, pu, 1.0)), 0.0).sum(axis=1)
    p_bad = np.where(pu == state.params.p_hat, pu, 0.0).sum(axis=1)
    return TelemetrySnapshot(
        t=state.t,
        uncolored=int(unc.sum()),
        max_xi_e=max_xi_e,
        max_xi_u=_max(xi_u[unc]),
        max_xi_uc=_max(xi_uc[unc]),
        min_h=float(h.min()) if h.size else 0.0,
        max_d_H=int(_max(d_H[unc], 0)),
        max_d=int(_max(d[unc], 0)),
        max_sum_dev=_max(np.abs(1.0 - pu.sum(axis=1))),
        max_p_bad=_max(p_bad),
        max_phi=max_phi, max_phi_c=max_phi_c, max_d_i=max_d_i, max_d_ic=max_d_ic,
    )


# -- naive recomputation ----------------------------------------------------


def _restriction_edges(state):
    """(uncoloured part, colour) for every restriction edge, straight from the definition."""
    kappa = state.kappa.tolist()
    k = state.H.k
    h_edges, restr = [], []
    for e in state.H.edges:
        U_part = [v for v in e if kappa[v] == UNCOLORED]
        W_cols = {kappa[v] for v in e if kappa[v] != UNCOLORED}
        if len(U_part) == k:
            h_edges.append(e)
        elif 2 <= len(U_part) <= k - 1 and len(W_cols) == 1:
            restr.append((tuple(U_part), W_cols.pop()))
    return h_edges, restr


def naive_snapshot(state) -> TelemetrySnapshot:
    k = state.H.k
    p = state.p.tolist()
    C = state.p.shape[1]
    kappa = state.kappa.tolist()
    U = [u for u in range(state.n) if kappa[u] == UNCOLORED]
    p_hat = state.params.p_hat
    h_edges, restr = _restriction_edges(state)

    xi_e = [sum(math.prod(p[v][c] for v in e) for c in range(C)) for e in h_edges]
    through = {u: [] for u in U}
    for e, x in zip(h_edges, xi_e):
        for u in e:
            through[u].append((e, x))

    def rmax(vals, default=0.0):
        vals = list(vals)
        return max(vals) if vals else default

    xi_u = {u: sum(x for _, x in through[u]) for u in U}
    xi_uc = {(u, c): sum(math.prod(p[w][c] for w in e if w != u) for e, _ in through[u])
             for u in U for c in range(C)}
    d_H = {u: len(through[u]) for u in U}
    d = dict(d_H)
    max_phi, max_phi_c, max_d_i, max_d_ic = {}, {}, {}, {}
    for i in range(2, k):
        mine = [(S, c) for S, c in restr if len(S) == i]
        phi, phi_c, dic, di = {}, {}, {}, {}
        for u in U:
            di[u] = 0
            phi[u] = 0.0
            for c in range(C):
                es = [S for S, col in mine if col == c and u in S]
                dic[(u, c)] = len(es)
                di[u] += len(es)
                phi_c[(u, c)] = sum(math.prod(p[w][c] for w in S if w != u) for S in es)
                phi[u] += sum(math.prod(p[w][c] for w in S) for S in es)
            d[u] += di[u]
        max_phi[i] = rmax(phi.values())
        max_phi_c[i] = rmax(phi_c.values())
        max_d_i[i] = rmax(di.values(), 0)
        max_d_ic[i] = rmax(dic.values(), 0)

    def entropy(u):
        return -sum(x * math.log(x) for x in p[u] if x > 0)

    return TelemetrySnapshot(
        t=state.t,
        uncolored=len(U),
        max_xi_e=rmax(xi_e),
        max_xi_u=rmax(xi_u.values()),
        max_xi_uc=rmax(xi_uc.values()),
        min_h=min((entropy(u) for u in U), default=0.0),
        max_d_H=rmax(d_H.values(), 0),
        max_d=rmax(d.values(), 0),
        max_sum_dev=rmax(abs(1.0 - sum(p[u])) for u in U),
        max_p_bad=rmax(sum(x for x in p[u] if x == p_hat) for u in U),
        max_phi=max_phi, max_phi_c=max_phi_c, max_d_i=max_d_i, max_d_ic=max_d_ic,
    )


def vertex_color_sums(state, u: int, c: int):
    """Xi_u(c) and Phi_{u,i}(c) for one vertex and colour index."""
    p = state.p
    h_edges, restr = _restriction_edges(state)
    xi = sum(math.prod(p[w, c] for w in e if w != u) for e in h_edges if u in e)
    phi = {i: 0.0 for i in range(2, state.H.k)}
    for S, col in restr:
        if col == c and u in S:
            phi[len(S)] += math.prod(p[w, c] for w in S if w != u)
    return xi, phi


# -- invariant monitors ------------------------------------------------------

_SLACK = 1e-12


def invariant_bounds(state, t: int | None = None) -> dict:
    """Right-hand sides of the tracked inequalities at round t."""
    prm = state.params
    k, D, eps, theta, omega = state.H.k, max(prm.delta, 1), prm.eps, prm.theta, prm.omega
    t = state.t if t is None else t
    decay = 1 - theta / (3 * k)
    out = {
        "A": t * D ** (-eps),
        "B": prm.q ** (1 - k) + t / D ** (1 + eps),
        "C": math.log(prm.q) - k ** (2 * k) * eps * sum(decay ** s for s in range(t + 1)),
        "D": (1 - theta / (2 * k)) ** t * D,
        "star": eps / 10,
    }
    for i in range(2, k):
        out[f"Ca_{i}"] = k ** (2 * k - 2 * i) * omega * decay ** t
        out[f"Dc_{i}"] = (1 + 2 * k * theta) ** t * D * prm.p_hat ** (k - i)
    return out


def invariant_flags(snap: TelemetrySnapshot, state) -> dict[str, bool]:
    b = invariant_bounds(state, snap.t)
    flags = {
        "A": snap.max_sum_dev <= b["A"] + _SLACK,
        "B": snap.max_xi_e <= b["B"] + _SLACK,
        "C": snap.min_h >= b["C"] - _SLACK or snap.uncolored == 0,
        "D": snap.max_d <= b["D"] + _SLACK,
        "star": snap.max_p_bad <= b["star"] + _SLACK,
    }
    for i in snap.max_phi:
        flags[f"Ca_{i}"] = snap.max_phi[i] <= b[f"Ca_{i}"] + _SLACK
        flags[f"Dc_{i}"] = snap.max_d_ic[i] <= b[f"Dc_{i}"] + _SLACK
    return flags


def telemetry_check(state) -> dict:
    """Naive recomputation, agreement with the fast path, and invariant flags.

    Violations are reported, never raised: the inequalities are asymptotic.
    """
    fast = snapshot(state)
    slow = naive_snapshot(state)
    return {
        "snapshot": slow,
        "mismatches": fast.compare(slow),
        "flags": invariant_flags(slow, state),
        "bounds": invariant_bounds(state),
    }


def telemetry_csv(series) -> str:
    buf = io.StringIO()
    rows = [s.row() for s in series]
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({key: (repr(v) if isinstance(v, float) else v) for key, v in r.items()})
    return buf.getvalue()
