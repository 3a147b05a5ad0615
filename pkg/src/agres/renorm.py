"""Renormalization of boundary forms under one subdivision step.

One application of the subdivision operator glues weighted copies of a
boundary form along the cell contact points (one copy per map, copy i
scaled by 1/r_i) and reduces back to the boundary set by a Schur trace.
A self-similar form corresponds to a fixed point; at unit corner weights
the operator has a one-dimensional fixed ray whose scale factor C depends
monotonically on the added-cell weight, which is what the bisection in
``solve_r`` exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (BracketFailure, DegenerateLimit, Disconnected, DomainError,
                     GuardExceeded, IdentificationMismatch, NegativeConductance,
                     NoConvergence, SingularInterior)
from .geometry import (CORNERS, IFS, BoundarySet, Label, boundary_set,
                       edge_point, _VertexTable, _iter_word_maps)
from .network import FiniteForm

EIGEN_TOL = 1e-12
EIGEN_MAX_ITERS = 10_000
BISECT_TOL = 1e-10
BRACKET_EXPANSIONS = 60
RELATION_GUARD = 12
_DUST = 1e-13


def corner_only_boundary() -> BoundarySet:
    """Degenerate boundary set holding just the three corners."""
    return BoundarySet(list(CORNERS), [Label("corner", corner=i) for i in (1, 2, 3)])


@dataclass
class BoundaryForm:
    """A resistance form on a boundary set, with a rotation-symmetry certificate."""
    bset: BoundarySet
    form: FiniteForm
    symmetric: bool = False

    @property
    def n(self) -> int:
        return self.bset.size

    def vector(self, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
        return np.array([self.form.conductance(i, j) for i, j in pairs])

    def g_asymmetry(self) -> float:
        """Max conductance deviation across rotation orbits of vertex pairs."""
        perm = self.bset.g_permutation
        worst = 0.0
        for (i, j), c in self.form.conductances.items():
            c1 = self.form.conductance(perm[i], perm[j])
            c2 = self.form.conductance(perm[perm[i]], perm[perm[j]])
            worst = max(worst, abs(c - c1), abs(c - c2))
        return worst

    def symmetrized(self) -> "BoundaryForm":
        perm = self.bset.g_permutation
        done: set[tuple[int, int]] = set()
        cond: dict[tuple[int, int], float] = {}
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if (i, j) in done:
                    continue
                orbit = {(i, j)}
                a, b = i, j
                for _ in range(2):
                    a, b = perm[a], perm[b]
                    orbit.add((min(a, b), max(a, b)))
                avg = sum(self.form.conductance(a, b) for a, b in orbit) / len(orbit)
                for key in orbit:
                    done.add(key)
                    if avg > 0:
                        cond[key] = avg
        return BoundaryForm(self.bset, FiniteForm(list(range(self.n)), cond), symmetric=True)

    def scaled(self, a: float) -> "BoundaryForm":
        return BoundaryForm(self.bset, self.form.scaled(a), self.symmetric)


def symmetric_start(bset: BoundarySet, rng: Optional[np.random.Generator] = None) -> BoundaryForm:
    """A connected rotation-symmetric initial form: unit (or randomized) complete graph."""
    n = bset.size
    cond = {}
    for i in range(n):
        for j in range(i + 1, n):
            cond[(i, j)] = 1.0
    bf = BoundaryForm(bset, FiniteForm(list(range(n)), cond), symmetric=True)
    if rng is None:
        return bf
    noisy = {k: float(rng.uniform(0.2, 5.0)) for k in bf.form.conductances}
    return BoundaryForm(bset, FiniteForm(list(range(n)), noisy)).symmetrized()


class GlueContext:
    """Precomputed gluing pattern of per-cell copies of a boundary set.

    Copy i places the boundary set inside cell i; contact points coincide
    exactly and are deduplicated.  The original boundary points are seeded
    first, so they keep ids 0..N-1 inside the glued vertex set.
    """

    def __init__(self, ifs: IFS, bset: BoundarySet, include_added: bool):
        self.ifs = ifs
        self.bset = bset
        self.include_added = include_added
        n = bset.size
        self.N = n
        self.pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        self.pair_index = {p: k for k, p in enumerate(self.pairs)}
        self.copies = (0, 1, 2, 3) if include_added else (0, 1, 2)

        table = _VertexTable()
        for p in bset.points:
            table.add(p)
        self.vmap: list[np.ndarray] = []
        for ci in self.copies:
            fmap = ifs.maps[ci]
            self.vmap.append(np.array([table.add(fmap.apply(p)) for p in bset.points],
                                      dtype=np.int64))
        self.points = table.points
        self.n_glued = len(table)

        covered = set()
        for arr in self.vmap:
            covered.update(int(g) for g in arr)
        if not set(range(n)).issubset(covered):
            missing = sorted(set(range(n)) - covered)
            raise IdentificationMismatch(
                f"boundary points {missing} are not images of any subdivision copy")

        merges = len(self.copies) * n - self.n_glued
        expected = self._expected_merges()
        if merges != expected:
            raise IdentificationMismatch(
                f"expected {expected} single-point identifications, found {merges}")
        self.merge_count = merges

        # glued pair index and scatter arrays for fast assembly
        gpairs: dict[tuple[int, int], int] = {}
        scatter = []
        for arr in self.vmap:
            idx = np.empty(len(self.pairs), dtype=np.int64)
            for k, (i, j) in enumerate(self.pairs):
                a, b = int(arr[i]), int(arr[j])
                if a > b:
                    a, b = b, a
                if a == b:
                    raise IdentificationMismatch("a copy collapsed a conductance pair")
                key = (a, b)
                g = gpairs.get(key)
                if g is None:
                    g = len(gpairs)
                    gpairs[key] = g
                idx[k] = g
            scatter.append(idx)
        self.scatter = scatter
        self.gpair_a = np.array([a for a, _ in gpairs], dtype=np.int64)
        self.gpair_b = np.array([b for _, b in gpairs], dtype=np.int64)
        self.n_gpairs = len(gpairs)

    def _expected_merges(self) -> int:
        count = 3  # the three corner-cell midpoints
        if self.include_added:
            t = 2 * self.ifs.lam
            for e in range(3):
                q = edge_point(e, t)
                if self.bset._index.get(q.key()) is not None:
                    count += 1
        return count

    # -- numeric application ------------------------------------------------------

    def glued_vector(self, cvec: np.ndarray, weights: Sequence[float]) -> np.ndarray:
        gvec = np.zeros(self.n_gpairs)
        for arr, ci in zip(self.scatter, self.copies):
            w = float(weights[ci])
            if w <= 0:
                raise DomainError("weights must be positive")
            np.add.at(gvec, arr, cvec / w)
        return gvec

    def glued_laplacian(self, gvec: np.ndarray) -> np.ndarray:
        n = self.n_glued
        L = np.zeros((n, n))
        a, b = self.gpair_a, self.gpair_b
        L[a, b] -= gvec
        L[b, a] -= gvec
        np.add.at(L, (a, a), gvec)
        np.add.at(L, (b, b), gvec)
        return L

    def trace_to_boundary(self, gvec: np.ndarray) -> np.ndarray:
        """Schur-complement the interior glued vertices; returns boundary pair vector."""
        n, nb = self.n_glued, self.N
        L = self.glued_laplacian(gvec)
        L_bb = L[:nb, :nb]
        L_bi = L[:nb, nb:]
        L_ii = L[nb:, nb:]
        try:
            X = np.linalg.solve(L_ii, L_bi.T)
        except np.linalg.LinAlgError as exc:
            if not self._glued_connected(gvec):
                raise Disconnected("glued network is disconnected") from exc
            raise SingularInterior(str(exc)) from exc
        S = L_bb - L_bi @ X
        out = np.empty(len(self.pairs))
        for k, (i, j) in enumerate(self.pairs):
            out[k] = -0.5 * (S[i, j] + S[j, i])
        scale = max(1.0, float(np.abs(S).max()))
        bad = out < -_DUST * scale
        if bad.any():
            k = int(np.nonzero(bad)[0][0])
            raise NegativeConductance(
                f"trace produced conductance {out[k]:.3e} on pair {self.pairs[k]}")
        np.clip(out, 0.0, None, out=out)
        return out

    def _glued_connected(self, gvec: np.ndarray) -> bool:
        parent = list(range(self.n_glued))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for k in range(self.n_gpairs):
            if gvec[k] > 0:
                parent[find(int(self.gpair_a[k]))] = find(int(self.gpair_b[k]))
        return len({find(i) for i in range(self.n_glued)}) == 1

    def apply(self, cvec: np.ndarray, weights: Sequence[float]) -> np.ndarray:
        return self.trace_to_boundary(self.glued_vector(cvec, weights))

    def resistance_p1p2(self, cvec: np.ndarray) -> float:
        """Two-point resistance between the first two boundary vertices (corners 1, 2)."""
        n = self.N
        L = np.zeros((n, n))
        for k, (i, j) in enumerate(self.pairs):
            c = cvec[k]
            L[i, j] -= c
            L[j, i] -= c
            L[i, i] += c
            L[j, j] += c
        keep = [i for i in range(n) if i != 1]
        Lg = L[np.ix_(keep, keep)]
        e = np.zeros(n - 1)
        e[0] = 1.0  # vertex 0 keeps position 0 after dropping vertex 1
        try:
            u = np.linalg.solve(Lg, e)
        except np.linalg.LinAlgError as exc:
            raise SingularInterior(str(exc)) from exc
        return float(u[0])

    def energy_at_p1_indicator(self, cvec: np.ndarray) -> float:
        """Energy of the indicator of corner 1: the sum of conductances touching vertex 0."""
        total = 0.0
        for k, (i, j) in enumerate(self.pairs):
            if i == 0 or j == 0:
                total += cvec[k]
        return total

    def connected(self, cvec: np.ndarray, rel_floor: float = 1e-12) -> bool:
        n = self.N
        thresh = rel_floor * max(cvec.max(), 1e-300)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for k, (i, j) in enumerate(self.pairs):
            if cvec[k] > thresh:
                parent[find(i)] = find(j)
        return len({find(i) for i in range(n)}) == 1

    def g_pair_orbits(self) -> list[tuple[int, ...]]:
        perm = self.bset.g_permutation
        orbits = []
        seen = set()
        for k, (i, j) in enumerate(self.pairs):
            if k in seen:
                continue
            orb = [k]
            a, b = i, j
            for _ in range(2):
                a, b = perm[a], perm[b]
                kk = self.pair_index[(min(a, b), max(a, b))]
                if kk not in orb:
                    orb.append(kk)
            seen.update(orb)
            orbits.append(tuple(orb))
        return orbits

    def symmetrize_vector(self, cvec: np.ndarray) -> np.ndarray:
        out = cvec.copy()
        for orb in self._orbit_cache():
            out[list(orb)] = cvec[list(orb)].mean()
        return out

    def _orbit_cache(self):
        if not hasattr(self, "_orbits"):
            self._orbits = self.g_pair_orbits()
        return self._orbits


def _glue_context(ifs: IFS, bset: BoundarySet, include_added: bool) -> GlueContext:
    key = ("glue", tuple(p.key() for p in bset.points), include_added)
    ctx = ifs._caches.get(key)
    if ctx is None:
        ctx = GlueContext(ifs, bset, include_added)
        ifs._caches[key] = ctx
    return ctx


def _normalize_weights(weights) -> tuple[tuple[float, ...], bool]:
    """Return per-map weights and whether the added copy participates."""
    ws = list(weights)
    if len(ws) == 3:
        ws.append(math.inf)
    if len(ws) != 4:
        raise DomainError("weights must have 3 or 4 entries")
    include_added = not (ws[3] is None or math.isinf(float(ws[3])))
    vals = tuple(float(w) for w in ws[:3]) + ((float(ws[3]),) if include_added else (math.inf,))
    if any(w <= 0 for w in vals[:3]) or (include_added and vals[3] <= 0):
        raise DomainError("weights must be positive")
    return vals, include_added


def glue_level_one(ifs: IFS, D: BoundaryForm, weights) -> FiniteForm:
    """Sum of weighted per-cell copies of D on the once-subdivided contact set.

    Copy i carries multiplier 1/r_i; identified points (three corner-cell
    midpoints plus, when the added copy participates and the contact
    parameter belongs to the set, three added-cell contacts) accumulate
    conductances.  The original boundary points keep ids 0..N-1.
    """
    ws, include_added = _normalize_weights(weights)
    ctx = _glue_context(ifs, D.bset, include_added)
    cvec = D.vector(ctx.pairs)
    gvec = ctx.glued_vector(cvec, ws)
    cond = {}
    for k in range(ctx.n_gpairs):
        if gvec[k] != 0.0:
            cond[(int(ctx.gpair_a[k]), int(ctx.gpair_b[k]))] = float(gvec[k])
    return FiniteForm(list(range(ctx.n_glued)), cond)


def renorm_map(ifs: IFS, D: BoundaryForm, weights) -> BoundaryForm:
    """One subdivide-glue-trace step applied to a boundary form."""
    ws, include_added = _normalize_weights(weights)
    ctx = _glue_context(ifs, D.bset, include_added)
    cvec = D.vector(ctx.pairs)
    out = ctx.apply(cvec, ws)
    if D.symmetric:
        out = ctx.symmetrize_vector(out)
    cond = {ctx.pairs[k]: float(out[k]) for k in range(len(ctx.pairs)) if out[k] > 0}
    form = FiniteForm(list(range(ctx.N)), cond)
    if not form.is_connected():
        raise Disconnected("renormalized form is disconnected")
    return BoundaryForm(D.bset, form, symmetric=D.symmetric)


@dataclass
class EigenResult:
    """Fixed ray of the unit-corner-weight subdivision map at one added weight."""
    rtilde4: float
    C: float
    D: BoundaryForm
    iterations: int
    delta: float          # last per-conductance relative change
    residual: float       # max relative deviation of apply(D) from C * D


def _rel_delta(new: np.ndarray, old: np.ndarray) -> float:
    """Max per-conductance relative change, with an absolute floor for near-zero entries."""
    floor = 1e-15 * max(1.0, float(old.max()) if old.size else 1.0)
    denom = np.maximum(np.abs(old), floor)
    return float(np.max(np.abs(new - old) / denom))


def eigen_solve(ifs: IFS, rtilde4: float, tol: float = EIGEN_TOL,
                max_iters: int = EIGEN_MAX_ITERS,
                initial: Optional[BoundaryForm] = None,
                bset: Optional[BoundarySet] = None) -> EigenResult:
    """Fixed conductance profile of the subdivision map at unit corner weights.

    Iterates D <- normalize(apply(D)) from a rotation-symmetric start until
    the max relative conductance change drops below ``tol``; normalization
    rescales so the resistance between corners 1 and 2 is 2/3.  The scale
    factor C is the energy ratio of one application at the limit; it lies
    in [3/5, 1).  ``rtilde4 = inf`` omits the added copy (open circuit).
    """
    if rtilde4 is not None and not math.isinf(rtilde4) and rtilde4 <= 0:
        raise DomainError("rtilde4 must be positive or inf")
    bset = bset if bset is not None else boundary_set(ifs)
    ws, include_added = _normalize_weights((1.0, 1.0, 1.0, rtilde4))
    ctx = _glue_context(ifs, bset, include_added)

    if initial is not None:
        if initial.n != ctx.N:
            raise DomainError("initial form lives on a different boundary set")
        c = initial.vector(ctx.pairs)
    else:
        c = np.ones(len(ctx.pairs))
    c = ctx.symmetrize_vector(c)
    c *= 1.5 * ctx.resistance_p1p2(c)

    delta = math.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        raw = ctx.apply(c, ws)
        raw = ctx.symmetrize_vector(raw)
        new = raw * (1.5 * ctx.resistance_p1p2(raw))
        delta = _rel_delta(new, c)
        c = new
        if delta < tol:
            break
    else:
        raise NoConvergence(f"no fixed profile after {max_iters} iterations (delta={delta:.3e})")

    if not ctx.connected(c):
        raise DegenerateLimit("limit form is disconnected")

    raw = ctx.apply(c, ws)
    C = ctx.energy_at_p1_indicator(raw) / ctx.energy_at_p1_indicator(c)
    floor = 1e-15 * max(1.0, float(c.max()))
    residual = float(np.max(np.abs(raw - C * c) / np.maximum(np.abs(C * c), floor)))
    if not (0.6 - 1e-9 <= C < 1.0):
        raise DegenerateLimit(f"scale factor {C!r} escapes [3/5, 1)")

    cond = {ctx.pairs[k]: float(c[k]) for k in range(len(ctx.pairs)) if c[k] > 0}
    D = BoundaryForm(bset, FiniteForm(list(range(ctx.N)), cond), symmetric=True)
    return EigenResult(float(rtilde4), float(C), D, iters, delta, residual)


@dataclass
class Solution:
    """Solved renormalization data for one (lambda, s) pair."""
    lam: Fraction
    s: float
    r: float
    C: float
    rtilde4: float
    theta: float
    residual: float
    D: BoundaryForm
    experimental: bool = False
    eigen_iterations: int = 0

    def to_json_obj(self) -> dict:
        return {
            "lambda": f"{self.lam.numerator}/{self.lam.denominator}",
            "s": self.s,
            "r": self.r,
            "C": self.C,
            "rtilde4": self.rtilde4,
            "theta": self.theta,
            "residual": self.residual,
            "experimental": self.experimental,
            "boundary_form": self.D.form.to_json_obj(),
        }


def solve_r(ifs: IFS, s: float, eigen_tol: float = EIGEN_TOL,
            bisect_tol: float = BISECT_TOL, max_iters: int = EIGEN_MAX_ITERS) -> Solution:
    """Solve for the corner weight making a self-similar fixed point exist.

    Bisects the nondecreasing map x -> x * C(x) to hit the added-cell
    weight s; the bracket [s, s/0.6] is guaranteed by 3/5 <= C < 1.  The
    returned r equals C at the solving abscissa, the fixed form D is
    normalized to corner resistance 2/3, and the residual measures how far
    D is from being fixed under weights (r, r, r, s).
    """
    s = float(s)
    if not (0.0 < s < 1.0):
        raise DomainError(f"s must lie in (0, 1), got {s}")
    bset = boundary_set(ifs)
    warm: Optional[BoundaryForm] = None
    evals = 0

    def value(x: float) -> tuple[float, EigenResult]:
        nonlocal warm, evals
        res = eigen_solve(ifs, x, tol=eigen_tol, max_iters=max_iters, initial=warm, bset=bset)
        warm = res.D
        evals += 1
        return x * res.C - s, res

    lo, hi = s, s / 0.58
    glo, _ = value(lo)
    for _ in range(BRACKET_EXPANSIONS):
        if glo <= 0:
            break
        lo *= 0.5
        glo, _ = value(lo)
    else:
        raise BracketFailure("could not bracket from below")
    ghi, res_hi = value(hi)
    for _ in range(BRACKET_EXPANSIONS):
        if ghi >= 0:
            break
        hi *= 2.0
        ghi, res_hi = value(hi)
    else:
        raise BracketFailure("could not bracket from above")

    mid, res_mid = hi, res_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gmid, res_mid = value(mid)
        if abs(gmid) <= bisect_tol:
            break
        if gmid < 0:
            lo = mid
        else:
            hi = mid
    else:
        raise NoConvergence("bisection did not reach tolerance")

    r = res_mid.C
    D = res_mid.D
    ctx = _glue_context(ifs, bset, include_added=True)
    cvec = D.vector(ctx.pairs)
    raw = ctx.apply(cvec, (r, r, r, s))
    floor = 1e-15 * max(1.0, float(cvec.max()))
    residual = float(np.max(np.abs(raw - cvec) / np.maximum(np.abs(cvec), floor)))
    theta = -math.log(r) / math.log(2.0)
    return Solution(ifs.lam, s, r, res_mid.C, mid, theta, residual, D,
                    experimental=not ifs.is_dyadic(),
                    eigen_iterations=evals)


def uniqueness_scan(ifs: IFS, s: float, sol: Solution, r_values: Sequence[float],
                    steps: int = 200) -> list[tuple[float, float]]:
    """Per-step energy scale factor of the normalized map at off-solution corner weights.

    At the solved r the factor tends to 1; away from it the factor stays
    bounded away from 1 (energies contract for larger weights, expand for
    smaller), which is the numerical face of uniqueness.
    """
    bset = sol.D.bset
    ctx = _glue_context(ifs, bset, include_added=True)
    out = []
    for rp in r_values:
        if rp <= 0:
            raise DomainError("corner weights must be positive")
        c = sol.D.vector(ctx.pairs).copy()
        factor = math.nan
        tail: list[float] = []
        for _ in range(steps):
            raw = ctx.apply(c, (rp, rp, rp, s))
            factor = ctx.energy_at_p1_indicator(raw) / ctx.energy_at_p1_indicator(c)
            tail.append(factor)
            raw = ctx.symmetrize_vector(raw)
            c = raw * (1.5 * ctx.resistance_p1p2(raw))
        factor = float(np.mean(tail[-5:]))
        out.append((float(rp), factor))
    return out


# -- preserved relations -----------------------------------------------------------


@dataclass(frozen=True)
class Relation:
    """A partition of the boundary set with symmetry and preservation flags."""
    blocks: tuple[tuple[int, ...], ...]
    g_invariant: bool
    preserved: bool

    @property
    def is_full(self) -> bool:
        return len(self.blocks) == 1

    @property
    def is_empty(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    @property
    def is_trivial(self) -> bool:
        return self.is_full or self.is_empty


def _canonical_partition(parent: list[int]) -> tuple[int, ...]:
    """Signature: block id per element, numbered by first occurrence."""
    n = len(parent)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    roots = [find(i) for i in range(n)]
    remap: dict[int, int] = {}
    sig = []
    for r in roots:
        if r not in remap:
            remap[r] = len(remap)
        sig.append(remap[r])
    return tuple(sig)


def _sig_blocks(sig: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    blocks: dict[int, list[int]] = {}
    for i, b in enumerate(sig):
        blocks.setdefault(b, []).append(i)
    return tuple(tuple(v) for _, v in sorted(blocks.items()))


def _close_with_group(sig: tuple[int, ...], extra: tuple[int, int],
                      perm: tuple[int, ...]) -> tuple[int, ...]:
    """Smallest group-invariant equivalence relation containing sig and the extra pair."""
    n = len(sig)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for i in range(n):
        for j in range(i + 1, n):
            if sig[i] == sig[j]:
                union(i, j)
    x, y = extra
    for _ in range(3):
        union(x, y)
        x, y = perm[x], perm[y]
    return _canonical_partition(parent)


def _tilde_level_maps(ifs: IFS, bset: BoundarySet, k: int) -> tuple[int, list[np.ndarray]]:
    """Glued ids of every depth-k copy of the boundary set (boundary seeded first)."""
    key = ("tilde", tuple(p.key() for p in bset.points), k)
    cached = ifs._caches.get(key)
    if cached is not None:
        return cached
    table = _VertexTable()
    for p in bset.points:
        table.add(p)
    copies = []
    for _, fw in _iter_word_maps(ifs, k):
        copies.append(np.array([table.add(fw.apply(p)) for p in bset.points], dtype=np.int64))
    result = (len(table), copies)
    ifs._caches[key] = result
    return result


def _restricted_relation(ifs: IFS, bset: BoundarySet, sig: tuple[int, ...],
                         k: int) -> tuple[int, ...]:
    """Relation induced on the boundary set by depth-k copies of the relation graph."""
    n_glued, copies = _tilde_level_maps(ifs, bset, k)
    parent = list(range(n_glued))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    n = bset.size
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if sig[i] == sig[j]]
    for arr in copies:
        for i, j in pairs:
            union(int(arr[i]), int(arr[j]))
    # canonical partition of the boundary ids only
    roots = [find(i) for i in range(n)]
    remap: dict[int, int] = {}
    out = []
    for r in roots:
        if r not in remap:
            remap[r] = len(remap)
        out.append(remap[r])
    return tuple(out)


def enumerate_preserved_relations(ifs: IFS, k: int = 1,
                                  guard: int = RELATION_GUARD) -> list[Relation]:
    """All rotation-invariant equivalence relations reproduced by one subdivision step.

    Enumerates the lattice of rotation-invariant partitions of the boundary
    set by closing pair merges under the rotation action, then keeps the
    partitions whose depth-1 copy graph induces exactly the same relation
    back on the boundary set.  ``k > 1`` re-checks survivors at deeper
    subdivisions (they must persist).
    """
    bset = boundary_set(ifs)
    n = bset.size
    if n > guard:
        raise GuardExceeded(f"boundary set has {n} points, guard is {guard}")
    perm = bset.g_permutation

    discrete = tuple(range(n))
    seen = {discrete}
    queue = [discrete]
    while queue:
        sig = queue.pop()
        for i in range(n):
            for j in range(i + 1, n):
                if sig[i] == sig[j]:
                    continue
                new = _close_with_group(sig, (i, j), perm)
                if new not in seen:
                    seen.add(new)
                    queue.append(new)

    preserved = []
    for sig in sorted(seen):
        if _restricted_relation(ifs, bset, sig, 1) != sig:
            continue
        ok = all(_restricted_relation(ifs, bset, sig, kk) == sig for kk in range(2, k + 1))
        if not ok:
            continue
        preserved.append(Relation(_sig_blocks(sig), g_invariant=True, preserved=True))
    preserved.sort(key=lambda rel: (len(rel.blocks), rel.blocks))
    return preserved
