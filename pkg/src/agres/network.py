"""Finite resistance forms as weighted graphs.

A form is a symmetric nonnegative conductance map on a connected vertex
set; its energy is sum over unordered pairs of c * (f(x) - f(y))^2.  The
operations here are the classical electrical-network toolkit: Schur
complement traces, harmonic extension, effective resistances (two point
and point-to-set), energy comparison factors, and resolvent kernels with
respect to a probability measure on the vertices.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (BadMeasure, BadTarget, ConditionWarning, Disconnected,
                     DomainError, MismatchedVertexSets, NegativeConductance,
                     SingularInterior)

VertexId = Hashable
DUST = 1e-13           # magnitude below which a negative Schur by-product is numerical dust
DENSE_LIMIT = 1600     # interior larger than this switches to sparse elimination
PIVOT_RATIO_WARN = 1e12


def _pair(x: VertexId, y: VertexId) -> tuple[VertexId, VertexId]:
    """Canonical unordered pair key."""
    try:
        return (x, y) if x < y else (y, x)
    except TypeError:
        return (x, y) if repr(x) < repr(y) else (y, x)


class FiniteForm:
    """A resistance form on a finite vertex set, stored as sparse conductances."""

    def __init__(self, vertices: Sequence[VertexId],
                 conductances: Mapping[tuple[VertexId, VertexId], float]):
        self.vertices = list(vertices)
        self._pos = {v: i for i, v in enumerate(self.vertices)}
        if len(self._pos) != len(self.vertices):
            raise DomainError("duplicate vertex ids")
        self.conductances: dict[tuple[VertexId, VertexId], float] = {}
        for (x, y), c in conductances.items():
            if x == y:
                raise DomainError("self-loops are not allowed")
            if x not in self._pos or y not in self._pos:
                raise DomainError(f"edge ({x!r},{y!r}) references unknown vertex")
            c = float(c)
            if c < 0:
                raise DomainError(f"negative conductance on ({x!r},{y!r})")
            if c == 0.0:
                continue
            key = _pair(x, y)
            self.conductances[key] = self.conductances.get(key, 0.0) + c

    # -- basic queries ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    def conductance(self, x: VertexId, y: VertexId) -> float:
        return self.conductances.get(_pair(x, y), 0.0)

    def energy(self, f: Union[Mapping[VertexId, float], Sequence[float], np.ndarray]) -> float:
        vals = self._as_array(f)
        total = 0.0
        for (x, y), c in self.conductances.items():
            d = vals[self._pos[x]] - vals[self._pos[y]]
            total += c * d * d
        return total

    def _as_array(self, f) -> np.ndarray:
        if isinstance(f, Mapping):
            return np.array([float(f[v]) for v in self.vertices])
        arr = np.asarray(f, dtype=float)
        if arr.shape != (self.n,):
            raise DomainError(f"function has shape {arr.shape}, expected ({self.n},)")
        return arr

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        adj: dict[VertexId, list[VertexId]] = {v: [] for v in self.vertices}
        for (x, y) in self.conductances:
            adj[x].append(y)
            adj[y].append(x)
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def require_connected(self) -> None:
        if not self.is_connected():
            raise Disconnected("support graph is disconnected")

    def scaled(self, a: float) -> "FiniteForm":
        return FiniteForm(self.vertices, {k: a * c for k, c in self.conductances.items()})

    def laplacian_dense(self, order: Sequence[VertexId] | None = None) -> np.ndarray:
        order = list(order) if order is not None else self.vertices
        pos = {v: i for i, v in enumerate(order)}
        L = np.zeros((len(order), len(order)))
        for (x, y), c in self.conductances.items():
            i, j = pos[x], pos[y]
            L[i, j] -= c
            L[j, i] -= c
            L[i, i] += c
            L[j, j] += c
        return L

    def laplacian_sparse(self, order: Sequence[VertexId] | None = None) -> sp.csc_matrix:
        order = list(order) if order is not None else self.vertices
        pos = {v: i for i, v in enumerate(order)}
        rows, cols, vals = [], [], []
        for (x, y), c in self.conductances.items():
            i, j = pos[x], pos[y]
            rows += [i, j, i, j]
            cols += [j, i, i, j]
            vals += [-c, -c, c, c]
        return sp.csc_matrix((vals, (rows, cols)), shape=(len(order), len(order)))

    # -- serialization -----------------------------------------------------------

    def to_csv(self) -> str:
        lines = ["x_id,y_id,conductance"]
        for (x, y) in sorted(self.conductances, key=lambda k: (repr(k[0]), repr(k[1]))):
            lines.append(f"{x},{y},{self.conductances[(x, y)]:.17g}")
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        return {
            "vertices": [repr(v) if not isinstance(v, (int, str)) else v for v in self.vertices],
            "edges": [
                {"x": x if isinstance(x, (int, str)) else repr(x),
                 "y": y if isinstance(y, (int, str)) else repr(y),
                 "c": self.conductances[(x, y)]}
                for (x, y) in sorted(self.conductances, key=lambda k: (repr(k[0]), repr(k[1])))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    def __repr__(self) -> str:
        return f"FiniteForm({self.n} vertices, {len(self.conductances)} conductances)"


def _schur_dense(L: np.ndarray, nk: int) -> np.ndarray:
    """Schur complement of the trailing interior block onto the first nk indices."""
    L_kk = L[:nk, :nk]
    L_ki = L[:nk, nk:]
    L_ii = L[nk:, nk:]
    if L_ii.shape[0] == 0:
        return L_kk.copy()
    try:
        cho = sla.cho_factor(L_ii, check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularInterior(f"interior block factorization failed: {exc}") from exc
    d = np.diag(cho[0])
    ratio = (d.max() / d.min()) ** 2 if d.min() > 0 else np.inf
    if ratio > PIVOT_RATIO_WARN:
        warnings.warn(f"interior pivot ratio {ratio:.3g} exceeds {PIVOT_RATIO_WARN:g}",
                      ConditionWarning, stacklevel=3)
    X = sla.cho_solve(cho, L_ki.T, check_finite=False)
    return L_kk - L_ki @ X


def _schur_sparse(form: FiniteForm, keep: list, interior: list) -> np.ndarray:
    order = keep + interior
    L = form.laplacian_sparse(order)
    nk = len(keep)
    L_kk = L[:nk, :nk].toarray()
    L_ki = L[:nk, nk:].tocsc()
    L_ii = L[nk:, nk:].tocsc()
    try:
        solver = spla.splu(L_ii)
    except RuntimeError as exc:
        raise SingularInterior(f"interior block factorization failed: {exc}") from exc
    S = L_kk
    block = 512
    rhs = L_ki.T.toarray() if L_ki.nnz else None
    if rhs is not None:
        for start in range(0, nk, block):
            stop = min(nk, start + block)
            X = solver.solve(rhs[:, start:stop])
            S[:, start:stop] -= L_ki @ X
    return S


def _conductances_from_schur(S: np.ndarray, keep: list) -> dict:
    nk = len(keep)
    scale = max(1.0, float(np.abs(S).max()) if S.size else 1.0)
    out = {}
    for i in range(nk):
        for j in range(i + 1, nk):
            c = -0.5 * (S[i, j] + S[j, i])
            if c < -DUST * scale:
                raise NegativeConductance(
                    f"reduction produced conductance {c:.3e} on ({keep[i]!r},{keep[j]!r})")
            if c > DUST * scale:
                out[_pair(keep[i], keep[j])] = c
    return out


def trace(form: FiniteForm, keep: Iterable[VertexId]) -> FiniteForm:
    """Form induced on a vertex subset by minimizing energy over extensions.

    This is the Schur complement of the interior block of the weighted
    Laplacian; it preserves effective resistances between kept vertices
    and is again a resistance form.
    """
    keep = list(dict.fromkeys(keep))
    if not keep:
        raise DomainError("keep set must be nonempty")
    missing = [v for v in keep if v not in form._pos]
    if missing:
        raise DomainError(f"keep set contains unknown vertices: {missing[:3]}")
    form.require_connected()
    keepset = set(keep)
    interior = [v for v in form.vertices if v not in keepset]
    if not interior:
        return FiniteForm(keep, dict(form.conductances))
    if len(interior) > DENSE_LIMIT:
        S = _schur_sparse(form, keep, interior)
    else:
        L = form.laplacian_dense(keep + interior)
        S = _schur_dense(L, len(keep))
    return FiniteForm(keep, _conductances_from_schur(S, keep))


def harmonic_extension(form: FiniteForm, boundary: Mapping[VertexId, float]) -> dict[VertexId, float]:
    """The unique energy-minimizing extension of boundary data to all vertices."""
    if not boundary:
        raise DomainError("boundary data must be nonempty")
    missing = [v for v in boundary if v not in form._pos]
    if missing:
        raise DomainError(f"boundary contains unknown vertices: {missing[:3]}")
    form.require_connected()
    bset = set(boundary)
    interior = [v for v in form.vertices if v not in bset]
    out = {v: float(boundary[v]) for v in boundary}
    if not interior:
        return out
    blist = list(boundary)
    order = interior + blist
    fb = np.array([out[v] for v in blist])
    ni = len(interior)
    if ni > DENSE_LIMIT:
        L = form.laplacian_sparse(order)
        L_ii = L[:ni, :ni].tocsc()
        L_ib = L[:ni, ni:]
        try:
            h = spla.splu(L_ii).solve(-L_ib @ fb)
        except RuntimeError as exc:
            raise SingularInterior(str(exc)) from exc
        resid = np.abs(L_ii @ h + L_ib @ fb).max()
    else:
        L = form.laplacian_dense(order)
        L_ii = L[:ni, :ni]
        L_ib = L[:ni, ni:]
        try:
            h = np.linalg.solve(L_ii, -L_ib @ fb)
        except np.linalg.LinAlgError as exc:
            raise SingularInterior(str(exc)) from exc
        resid = np.abs(L_ii @ h + L_ib @ fb).max()
    scale = max(1.0, np.abs(fb).max()) * max(1.0, max(form.conductances.values()))
    if resid > 1e-12 * scale * max(1.0, ni):
        warnings.warn(f"harmonic system residual {resid:.3e}", ConditionWarning, stacklevel=2)
    for v, val in zip(interior, h):
        out[v] = float(val)
    return out


class _MergedNode:
    __slots__ = ()

    def __repr__(self) -> str:
        return "<merged-target>"


def _merged_for_target(form: FiniteForm, target: set) -> tuple[FiniteForm, VertexId]:
    """Collapse a vertex set to a single node, combining parallel conductances."""
    sentinel = _MergedNode()
    verts = [v for v in form.vertices if v not in target] + [sentinel]
    cond: dict = {}
    for (x, y), c in form.conductances.items():
        xx = sentinel if x in target else x
        yy = sentinel if y in target else y
        if xx == yy:
            continue
        key = _pair(xx, yy)
        cond[key] = cond.get(key, 0.0) + c
    return FiniteForm(verts, cond), sentinel


def effective_resistance(form: FiniteForm, x: VertexId,
                         target: Union[VertexId, Iterable[VertexId]]) -> float:
    """Effective resistance from a vertex to a vertex or to a grounded set."""
    if x not in form._pos:
        raise DomainError(f"unknown vertex {x!r}")
    if isinstance(target, (list, set, frozenset)):
        tset = set(target)
    else:
        tset = {target}
    missing = [v for v in tset if v not in form._pos]
    if missing:
        raise DomainError(f"unknown target vertices: {missing[:3]}")
    if x in tset:
        raise BadTarget("source vertex lies in the target set")
    form.require_connected()
    if len(tset) > 1:
        form, ground = _merged_for_target(form, tset)
    else:
        ground = next(iter(tset))
    order = [v for v in form.vertices if v != ground]
    pos = {v: i for i, v in enumerate(order)}
    n = len(order)
    e = np.zeros(n)
    e[pos[x]] = 1.0
    if n > DENSE_LIMIT:
        L = form.laplacian_sparse(order + [ground])[:n, :n].tocsc()
        try:
            u = spla.splu(L).solve(e)
        except RuntimeError as exc:
            raise SingularInterior(str(exc)) from exc
    else:
        L = form.laplacian_dense(order + [ground])[:n, :n]
        try:
            u = np.linalg.solve(L, e)
        except np.linalg.LinAlgError as exc:
            raise SingularInterior(str(exc)) from exc
    return float(u[pos[x]])


def resistance_matrix(form: FiniteForm) -> np.ndarray:
    """All-pairs effective resistances via the grounded inverse (one factorization)."""
    form.require_connected()
    n = form.n
    if n == 1:
        return np.zeros((1, 1))
    L = form.laplacian_dense()
    G = np.linalg.inv(L[:-1, :-1])  # grounded at the last vertex
    R = np.zeros((n, n))
    d = np.diag(G)
    R[:-1, :-1] = d[:, None] + d[None, :] - 2 * G
    R[-1, :-1] = R[:-1, -1] = d
    return R


def form_comparison(form1: FiniteForm, form2: FiniteForm) -> tuple[float, float]:
    """Two-sided energy comparison factors from the extreme resistance ratios.

    Returns (lower, upper) with lower * E1(f) <= E2(f) <= upper * E1(f):
    lower = 2/(N(N-1)) * min R1/R2 and upper = N(N-1)/2 * max R1/R2 over
    distinct vertex pairs.
    """
    if list(form1.vertices) != list(form2.vertices):
        if set(form1.vertices) != set(form2.vertices):
            raise MismatchedVertexSets("forms are defined on different vertex sets")
    n = form1.n
    if n < 2:
        raise DomainError("need at least two vertices")
    form1.require_connected()
    form2.require_connected()
    ratios = []
    for i, x in enumerate(form1.vertices):
        for y in form1.vertices[i + 1:]:
            r1 = effective_resistance(form1, x, y)
            r2 = effective_resistance(form2, x, y)
            ratios.append(r1 / r2)
    pairs = n * (n - 1) / 2
    return (min(ratios) / pairs, max(ratios) * pairs)


@dataclass
class ResolventKernel:
    """Symmetric kernel of (L + alpha * M)^-1 with masses M summing to one."""
    alpha: float
    vertices: list
    masses: np.ndarray
    matrix: np.ndarray

    def value(self, x: VertexId, y: VertexId) -> float:
        i = self.vertices.index(x)
        j = self.vertices.index(y)
        return float(self.matrix[i, j])

    def row_mass_error(self) -> float:
        """Max deviation of sum_y u(x,y) m_y from 1/alpha."""
        rows = self.matrix @ self.masses
        return float(np.abs(rows - 1.0 / self.alpha).max())

    def symmetry_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.T).max())

    def to_csv(self, labels: Sequence[str] | None = None) -> str:
        labels = labels if labels is not None else [str(v) for v in self.vertices]
        lines = ["x,y," + "u"]
        for i, lx in enumerate(labels):
            for j, ly in enumerate(labels):
                lines.append(f"{lx},{ly},{self.matrix[i, j]:.17g}")
        return "\n".join(lines) + "\n"


def resolvent(form: FiniteForm, masses: Union[Mapping[VertexId, float], Sequence[float]],
              alpha: float) -> ResolventKernel:
    """Resolvent kernel for the form and a probability measure on the vertices.

    Column x solves (L + alpha * diag(m)) u = e_x, so the kernel reproduces
    point evaluations in the alpha-shifted energy inner product.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    form.require_connected()
    m = form._as_array(masses)
    if (m <= 0).any():
        raise BadMeasure("vertex masses must be positive")
    if abs(m.sum() - 1.0) > 1e-12:
        raise BadMeasure(f"vertex masses must sum to 1, got {m.sum()!r}")
    L = form.laplacian_dense()
    A = L + alpha * np.diag(m)
    try:
        U = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularInterior(str(exc)) from exc
    asym = np.abs(U - U.T).max()
    if asym > 1e-10 * max(1.0, np.abs(U).max()):
        warnings.warn(f"resolvent asymmetry {asym:.3e}", ConditionWarning, stacklevel=2)
    U = 0.5 * (U + U.T)
    return ResolventKernel(float(alpha), list(form.vertices), m, U)


def triangle_form(c: float = 1.0, ids: Sequence[VertexId] = (0, 1, 2)) -> FiniteForm:
    """Unit (or scaled) conductances on the three pairs of a triangle."""
    a, b, d = ids
    return FiniteForm(list(ids), {_pair(a, b): c, _pair(b, d): c, _pair(a, d): c})
