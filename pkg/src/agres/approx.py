"""Level realizations of a solved self-similar form and the resistance estimates.

The level-m form on the graph vertices decomposes into one traced copy of
the solved boundary form per length-m cell, weighted by the inverse word
weight.  Cells meet only at graph vertices, so the decomposition is exact
and no global elimination is ever needed; resistances between boundary
edge points at fine scales come from a nested trace tower that refines the
bottom edge only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (BadWeights, CapExceeded, DomainError, IdentificationMismatch,
                     InsufficientScales, UnknownVertex)
from .exact import Point, Scalar
from .geometry import CORNERS, IFS, Word, boundary_set, _VertexTable, _iter_word_maps
from .network import FiniteForm, effective_resistance, harmonic_extension, resolvent, trace
from .renorm import BoundaryForm, Solution

LEVEL_CAP = 8
TOWER_CAP = 12


class LevelGeometry:
    """Vertex table and per-cell combinatorics of one subdivision level.

    For every length-m cell this records which boundary-set points map to
    graph vertices (the cell's kept set), the global vertex ids of those
    images, the three corner ids, and the letter counts that determine the
    cell's weight and measure.
    """

    def __init__(self, ifs: IFS, m: int):
        self.ifs = ifs
        self.m = m
        bset = boundary_set(ifs)
        self.bset = bset
        table = _VertexTable()
        leaf_maps = []
        words = []
        for word, fw in _iter_word_maps(ifs, m):
            words.append(word)
            leaf_maps.append(fw)
        corner_ids = np.empty((len(leaf_maps), 3), dtype=np.int64)
        for li, fw in enumerate(leaf_maps):
            for ci, c in enumerate(CORNERS):
                corner_ids[li, ci] = table.add(fw.apply(c))
        self.points = table.points
        self.table = table
        self.leaf_corners = corner_ids

        letter_counts = np.zeros((len(leaf_maps), 4), dtype=np.int16)
        for li, word in enumerate(words):
            for c in word:
                letter_counts[li, c - 1] += 1
        self.letter_counts = letter_counts

        kept_types: dict[tuple[int, ...], int] = {}
        self.cell_type: list[int] = []
        self.cell_gids: list[np.ndarray] = []
        self.types: list[tuple[int, ...]] = []
        for fw in leaf_maps:
            kept_local = []
            gids = []
            for bi, p in enumerate(bset.points):
                g = table.get(fw.apply(p))
                if g is not None:
                    kept_local.append(bi)
                    gids.append(g)
            key = tuple(kept_local)
            ti = kept_types.get(key)
            if ti is None:
                ti = len(kept_types)
                kept_types[key] = ti
                self.types.append(key)
            self.cell_type.append(ti)
            self.cell_gids.append(np.array(gids, dtype=np.int64))

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    def leaf_index(self, word: Word) -> int:
        if len(word) != self.m:
            raise UnknownVertex(f"word {word} has length {len(word)}, level is {self.m}")
        idx = 0
        for c in word:
            if c not in (1, 2, 3, 4):
                raise UnknownVertex(f"bad letter in word {word}")
            idx = idx * 4 + (c - 1)
        return idx

    def vid_of_address(self, word: Word, corner: int) -> int:
        """Vertex id of F_w(p_corner); the word is padded with the corner's own letter."""
        if corner not in (1, 2, 3):
            raise UnknownVertex("corner index must be 1, 2 or 3")
        if len(word) > self.m:
            raise UnknownVertex(f"word longer than level {self.m}")
        padded = tuple(word) + (corner,) * (self.m - len(word))
        return int(self.leaf_corners[self.leaf_index(padded), corner - 1])

    def vid_of_point(self, p: Point) -> int:
        g = self.table.get(p)
        if g is None:
            raise UnknownVertex("point is not a vertex at this level")
        return g


def _level_geometry(ifs: IFS, m: int) -> LevelGeometry:
    key = ("levelgeom", m)
    geom = ifs._caches.get(key)
    if geom is None:
        geom = LevelGeometry(ifs, m)
        ifs._caches[key] = geom
    return geom


@dataclass
class LevelForm:
    """The solved form traced onto the level-m graph vertices."""
    m: int
    form: FiniteForm
    geometry: LevelGeometry
    solution: Solution

    @property
    def points(self) -> list[Point]:
        return self.geometry.points

    def vid_of_address(self, word: Word, corner: int) -> int:
        return self.geometry.vid_of_address(word, corner)


def _traced_tables(D: BoundaryForm, geom: LevelGeometry) -> list[list[tuple[int, int, float]]]:
    """Per cell-type traced conductances of the boundary form, in local kept order."""
    tables = []
    for kept in geom.types:
        if len(kept) == D.n:
            sub = D.form
            local = {v: i for i, v in enumerate(kept)}
        else:
            sub = trace(D.form, list(kept))
            local = {v: i for i, v in enumerate(kept)}
        entries = []
        for (x, y), c in sub.conductances.items():
            entries.append((local[x], local[y], float(c)))
        tables.append(entries)
    return tables


def level_form(ifs: IFS, sol: Solution, m: int, cap: int = LEVEL_CAP) -> LevelForm:
    """Trace of the solved self-similar form onto the level-m vertex set.

    Exact decomposition: one copy of the boundary form per cell, traced to
    the cell's kept vertices and weighted by the inverse word weight.
    """
    if m < 0:
        raise DomainError("level must be nonnegative")
    if m > cap:
        raise CapExceeded(f"level {m} exceeds cap {cap}")
    geom = _level_geometry(ifs, m)
    tables = _traced_tables(sol.D, geom)
    r, s = sol.r, sol.s
    rinv_pow = [r ** -k for k in range(m + 1)]
    sinv_pow = [s ** -k for k in range(m + 1)]
    cond: dict[tuple[int, int], float] = {}
    counts = geom.letter_counts
    for li in range(len(geom.cell_type)):
        n4 = int(counts[li, 3])
        w = rinv_pow[m - n4] * sinv_pow[n4]
        gids = geom.cell_gids[li]
        for (a, b, c) in tables[geom.cell_type[li]]:
            ga, gb = int(gids[a]), int(gids[b])
            if ga > gb:
                ga, gb = gb, ga
            key = (ga, gb)
            cond[key] = cond.get(key, 0.0) + w * c
    form = FiniteForm(list(range(geom.n_vertices)), cond)
    return LevelForm(m, form, geom, sol)


# -- measures -------------------------------------------------------------------


@dataclass
class MeasureSpec:
    """Self-similar measure weights for the four cells, with optional dimension."""
    scheme: str
    weights: tuple[float, float, float, float]
    dimension: Optional[float] = None

    def to_json_obj(self) -> dict:
        return {"scheme": self.scheme, "weights": list(self.weights),
                "dimension": self.dimension}


def measure_weights(ifs: IFS, scheme: Literal["hausdorff", "uniform", "custom"] = "hausdorff",
                    custom: Optional[Sequence[float]] = None) -> MeasureSpec:
    """Cell measure weights: dimension-matched, uniform, or caller supplied.

    The dimension-matched scheme solves 3*(1/2)^d + rho^d = 1 by bisection
    (rho is the added map's contraction ratio) and assigns each cell the
    d-th power of its ratio, which is the natural normalized volume.
    """
    if scheme == "uniform":
        return MeasureSpec("uniform", (0.25, 0.25, 0.25, 0.25))
    if scheme == "custom":
        if custom is None or len(custom) != 4:
            raise BadWeights("custom scheme needs four weights")
        w = tuple(float(x) for x in custom)
        if any(x <= 0 for x in w):
            raise BadWeights("custom weights must be positive")
        total = sum(w)
        if abs(total - 1.0) > 1e-12:
            w = tuple(x / total for x in w)
        return MeasureSpec("custom", w)
    if scheme != "hausdorff":
        raise BadWeights(f"unknown measure scheme {scheme!r}")
    rho = ifs.added_ratio

    def g(d: float) -> float:
        return 3.0 * 0.5 ** d + rho ** d - 1.0

    lo, hi = 1.0, 4.0
    while g(lo) < 0:
        lo *= 0.5
    while g(hi) > 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    d = 0.5 * (lo + hi)
    if abs(g(d)) > 1e-12:
        raise BadWeights(f"dimension equation residual {g(d):.3e}")
    w = (0.5 ** d, 0.5 ** d, 0.5 ** d, rho ** d)
    total = sum(w)
    return MeasureSpec("hausdorff", tuple(x / total for x in w), dimension=d)


def vertex_masses(ifs: IFS, mspec: MeasureSpec, m: int) -> np.ndarray:
    """Level-m vertex masses: each cell spreads its measure equally on its three corners."""
    geom = _level_geometry(ifs, m)
    counts = geom.letter_counts.astype(float)
    logw = counts @ np.log(np.array(mspec.weights))
    mu_w = np.exp(logw)
    masses = np.zeros(geom.n_vertices)
    np.add.at(masses, geom.leaf_corners.reshape(-1),
              np.repeat(mu_w / 3.0, 3))
    total = masses.sum()
    return masses / total


# -- resistances and estimates -----------------------------------------------------

Address = tuple[Word, int]


def resistance_metric(ifs: IFS, sol: Solution, m: int,
                      pairs: Sequence[tuple[Address, Address]],
                      level: Optional[LevelForm] = None) -> list[tuple[tuple[Address, Address], float]]:
    """Effective resistances between addressed vertices in the level-m trace.

    Traces preserve resistances, so values are level independent for
    shared vertices (up to the solver residual).
    """
    lf = level if level is not None else level_form(ifs, sol, m)
    out = []
    for (a1, a2) in pairs:
        v1 = lf.vid_of_address(tuple(a1[0]), a1[1])
        v2 = lf.vid_of_address(tuple(a2[0]), a2[1])
        if v1 == v2:
            out.append(((a1, a2), 0.0))
        else:
            out.append(((a1, a2), effective_resistance(lf.form, v1, v2)))
    return out


def bottom_edge_vids(geom: LevelGeometry) -> list[int]:
    zero = Scalar()
    return [i for i, p in enumerate(geom.points) if p.y == zero]


def boundary_resistance_check(ifs: IFS, sol: Solution, m: int,
                              level: Optional[LevelForm] = None) -> tuple[float, float, bool]:
    """Resistance from the top corner to the grounded bottom edge versus its lower bound.

    The bound (1/2) * s * r / (s + r) reflects that current must leave the
    top cell through its own copy and through the added cell.
    """
    if m < 1:
        raise DomainError("level must be at least 1")
    lf = level if level is not None else level_form(ifs, sol, m)
    bottom = bottom_edge_vids(lf.geometry)
    top = lf.vid_of_address((), 1)
    value = effective_resistance(lf.form, top, set(bottom))
    r, s = sol.r, sol.s
    bound = 0.5 * s * r / (s + r)
    return value, bound, value >= bound - 1e-12


@dataclass
class ResistanceEnvelope:
    """Fitted two-sided power-law envelope for resistance against distance."""
    theta: float
    eta_star: float     # the larger exponent (lower bound side)
    eta_sub: float      # the smaller exponent (upper bound side)
    c1: float
    c2: float
    basis: str          # 'theta' for boundary fits, 'eta' for whole-attractor checks

    @property
    def spread(self) -> float:
        return self.c2 / self.c1


class EdgeTraceTower:
    """Nested traces keeping the boundary set plus dyadic bottom-edge points.

    Step K holds the exact trace of the solved form onto the contact set
    union the bottom-edge dyadics at scale 2^-K; one refinement step glues
    two copies of the current state into the two bottom cells and one copy
    of the boundary form into each remaining cell, then reduces.
    """

    def __init__(self, ifs: IFS, sol: Solution):
        self.ifs = ifs
        self.sol = sol
        self.bset = sol.D.bset
        self.K = 0
        self.points: list[Point] = list(self.bset.points)
        self.form: FiniteForm = sol.D.form

    def refine(self) -> None:
        ifs, sol = self.ifs, self.sol
        next_k = self.K + 1
        keep_points = list(self.bset.points)
        keep_keys = {p.key() for p in keep_points}
        for j in range(1, 2 ** next_k):
            t = Fraction(j, 2 ** next_k)
            p = Point(Scalar(t), Scalar())
            if p.key() not in keep_keys:
                keep_points.append(p)
                keep_keys.add(p.key())
        table = _VertexTable()
        for p in keep_points:
            table.add(p)
        n_keep = len(keep_points)
        cond: dict[tuple[int, int], float] = {}

        def add_copy(fmap, pts, form, w):
            gids = [table.add(fmap.apply(p)) for p in pts]
            for (i, j), c in form.conductances.items():
                a, b = gids[i], gids[j]
                if a == b:
                    raise IdentificationMismatch("copy collapsed a conductance pair")
                key = (a, b) if a < b else (b, a)
                cond[key] = cond.get(key, 0.0) + c / w
            return gids

        r, s = sol.r, sol.s
        add_copy(ifs.maps[0], self.bset.points, sol.D.form, r)
        add_copy(ifs.maps[1], self.points, self.form, r)
        add_copy(ifs.maps[2], self.points, self.form, r)
        add_copy(ifs.maps[3], self.bset.points, sol.D.form, s)
        glued = FiniteForm(list(range(len(table))), cond)
        traced = trace(glued, list(range(n_keep)))
        self.K = next_k
        self.points = keep_points
        self.form = traced

    def refine_to(self, K: int) -> None:
        if K > TOWER_CAP:
            raise CapExceeded(f"tower depth {K} exceeds cap {TOWER_CAP}")
        while self.K < K:
            self.refine()

    def bottom_resistances(self, pairs: Sequence[tuple[Fraction, Fraction]]) -> list[float]:
        """Resistances between bottom-edge parameters, one factorization for all pairs."""
        index = {p.key(): i for i, p in enumerate(self.points)}

        def vid(t: Fraction) -> int:
            p = Point(Scalar(t), Scalar())
            g = index.get(p.key())
            if g is None:
                raise UnknownVertex(f"bottom parameter {t} not in tower at depth {self.K}")
            return g

        L = self.form.laplacian_dense()
        n = self.form.n
        keep = list(range(1, n))  # ground at vertex 0 = top corner
        Lg = L[np.ix_(keep, keep)]
        cho = sla.cho_factor(Lg, check_finite=False)
        out = []
        for (t1, t2) in pairs:
            v1, v2 = vid(t1), vid(t2)
            e = np.zeros(n - 1)
            e[v1 - 1] += 1.0
            e[v2 - 1] -= 1.0
            u = sla.cho_solve(cho, e, check_finite=False)
            out.append(float(e @ u))
        return out


def scaling_exponent(ifs: IFS, sol: Solution, levels: Sequence[int],
                     pairs_per_level: int = 8) -> tuple[float, float, ResistanceEnvelope]:
    """Fit the resistance-distance exponent on the bottom edge across dyadic scales.

    Uses adjacent dyadic pairs at each requested scale; the model exponent
    is theta = -log(r)/log(2) and the envelope constants are the extreme
    ratios R / d^theta over all sampled pairs.
    """
    levels = sorted(set(int(k) for k in levels))
    if len(levels) < 4:
        raise InsufficientScales("need at least 4 distinct dyadic scales")
    if levels[0] < 1:
        raise DomainError("levels must be >= 1")
    tower = EdgeTraceTower(ifs, sol)
    tower.refine_to(max(levels))

    all_pairs: list[tuple[Fraction, Fraction]] = []
    dists: list[float] = []
    for k in levels:
        nmax = 2 ** k - 1
        count = min(pairs_per_level, nmax + 1)
        js = sorted({round(i * nmax / max(1, count - 1)) for i in range(count)})
        for j in js:
            t1 = Fraction(j, 2 ** k)
            t2 = Fraction(j + 1, 2 ** k)
            all_pairs.append((t1, t2))
            dists.append(2.0 ** -k)
    rs = tower.bottom_resistances(all_pairs)

    logd = np.log(np.array(dists))
    logr = np.log(np.array(rs))
    slope, _ = np.polyfit(logd, logr, 1)
    theta = sol.theta
    ratios = np.array(rs) / np.array(dists) ** theta
    rho = ifs.added_ratio
    eta_s = math.log(sol.s) / math.log(rho)
    env = ResistanceEnvelope(theta=theta, eta_star=max(eta_s, theta),
                             eta_sub=min(eta_s, theta),
                             c1=float(ratios.min()), c2=float(ratios.max()),
                             basis="theta")
    return float(slope), theta, env


def envelope_check(ifs: IFS, sol: Solution, m: int = 4, n_pairs: int = 200,
                   seed: int = 7) -> ResistanceEnvelope:
    """Whole-attractor envelope: sampled resistances against the two-exponent bounds."""
    from .network import resistance_matrix

    lf = level_form(ifs, sol, m)
    n = lf.form.n
    R = resistance_matrix(lf.form)
    rng = np.random.default_rng(seed)
    theta = sol.theta
    rho = ifs.added_ratio
    eta_s = math.log(sol.s) / math.log(rho)
    eta_star, eta_sub = max(eta_s, theta), min(eta_s, theta)
    coords = np.array([p.float_xy() for p in lf.points])
    lo, hi = math.inf, 0.0
    for _ in range(n_pairs):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        if i == j:
            continue
        d = float(np.hypot(*(coords[i] - coords[j])))
        lo = min(lo, R[i, j] / d ** eta_star)
        hi = max(hi, R[i, j] / d ** eta_sub)
    return ResistanceEnvelope(theta, eta_star, eta_sub, float(lo), float(hi), basis="eta")


def resolvent_kernel(ifs: IFS, sol: Solution, m: int, alpha: float,
                     measure: Optional[MeasureSpec] = None,
                     level: Optional[LevelForm] = None):
    """Resolvent kernel of the level-m trace with the level's vertex masses."""
    mspec = measure if measure is not None else measure_weights(ifs)
    lf = level if level is not None else level_form(ifs, sol, m)
    masses = vertex_masses(ifs, mspec, m)
    return resolvent(lf.form, masses, alpha), lf, mspec


@dataclass
class DecimationReport:
    """Both sides of the one-step energy decomposition for a harmonic extension.

    ``rhs`` evaluates each cell's energy on the cell's full kept vertex
    set; ``rhs_plain`` uses the bare level-(m-1) form, which drops contact
    vertices that only appear above the parameter's contact depth (the two
    agree whenever no such vertices exist).
    """
    m: int
    lhs: float
    rhs: float
    rhs_plain: float

    @property
    def relative_gap(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs), 1e-300)
        return abs(self.lhs - self.rhs) / scale

    @property
    def plain_gap(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs_plain), 1e-300)
        return abs(self.lhs - self.rhs_plain) / scale

    @property
    def used_cell_sets(self) -> bool:
        return self.plain_gap > 1e-12


def _celled_energy(ifs: IFS, D: BoundaryForm, r: float, s: float, depth: int,
                   value_of_point) -> float:
    """Energy of per-cell traced copies at one depth, keeping exactly the points
    where ``value_of_point`` yields a value.

    Independent evaluation path used to cross-check the level-form
    assembly: fresh word maps, fresh kept-set discovery, fresh traces.
    """
    total = 0.0
    memo: dict[tuple[int, ...], list[tuple[int, int, float]]] = {}
    for word, fw in _iter_word_maps(ifs, depth):
        kept: list[int] = []
        vals: list[float] = []
        for bi, b in enumerate(D.bset.points):
            v = value_of_point(fw.apply(b))
            if v is not None:
                kept.append(bi)
                vals.append(v)
        key = tuple(kept)
        tab = memo.get(key)
        if tab is None:
            sub = trace(D.form, kept) if len(kept) < D.n else D.form
            local = {b: i for i, b in enumerate(kept)}
            tab = [(local[x], local[y], float(c)) for (x, y), c in sub.conductances.items()]
            memo[key] = tab
        n4 = sum(1 for ch in word if ch == 4)
        w = r ** -(depth - n4) * s ** -n4
        for (a, b, c) in tab:
            d = vals[a] - vals[b]
            total += w * c * d * d
    return total


def decimation_identity(ifs: IFS, sol: Solution, m: int,
                        f_corners: Sequence[float]) -> DecimationReport:
    """Check E(h) = sum_i r_i^{-1} E(h o F_i) for the level-m harmonic extension of corner data.

    The left side is the energy in the level-m form.  On the right, each
    cell's energy is evaluated at depth m-1 on the cell's own kept vertex
    set (every point whose image under the cell map is a level-m vertex);
    a plain evaluation against the bare level-(m-1) form is reported too.
    """
    if m < 1:
        raise DomainError("level must be >= 1")
    lf = level_form(ifs, sol, m)
    geom = lf.geometry
    boundary = {geom.vid_of_address((), i + 1): float(f_corners[i]) for i in range(3)}
    h = harmonic_extension(lf.form, boundary)
    hvec = np.array([h[v] for v in range(geom.n_vertices)])
    lhs = lf.form.energy(hvec)

    r, s = sol.r, sol.s
    weights = (r, r, r, s)
    rhs = 0.0
    for i in range(4):
        fi = ifs.maps[i]

        def value_of_point(x: Point, _fi=fi):
            g = geom.table.get(_fi.apply(x))
            return None if g is None else float(hvec[g])

        rhs += _celled_energy(ifs, sol.D, r, s, m - 1, value_of_point) / weights[i]

    sub_lf = level_form(ifs, sol, m - 1)
    sub_geom = sub_lf.geometry
    rhs_plain = 0.0
    for i in range(4):
        fi = ifs.maps[i]
        vals = np.empty(sub_geom.n_vertices)
        for u, q in enumerate(sub_geom.points):
            g = geom.table.get(fi.apply(q))
            if g is None:
                raise UnknownVertex("level nesting violated")
            vals[u] = hvec[g]
        rhs_plain += sub_lf.form.energy(vals) / weights[i]
    return DecimationReport(m, float(lhs), float(rhs), float(rhs_plain))
