"""Geometry of the gasket-with-added-triangle family.

For a rational shape parameter lam in (0, 1/2) the family is generated by
four contractions of the closed unit-side equilateral triangle: the three
corner halvings and a fourth scaled rotation whose image triangle sits in
the central hole, touching each corner cell at a single point.  Everything
here is computed in exact Q[sqrt(3)] coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Literal, Optional

import numpy as np

from .errors import CapExceeded, DepthExceeded, DomainError, OrbitOverflow
from .exact import (Point, RationalLike, Scalar, Similarity, as_fraction,
                    compose_word, point_decimal_str, point_exact_str)

# corners of the reference triangle: top, lower left, lower right
P1 = Point(Scalar(Fraction(1, 2)), Scalar.sqrt3_times(Fraction(1, 2)))
P2 = Point.rational(0, 0)
P3 = Point.rational(1, 0)
CORNERS = (P1, P2, P3)
CENTROID = Point(Scalar(Fraction(1, 2)), Scalar.sqrt3_times(Fraction(1, 6)))

GRAPH_LEVEL_CAP = 10
MEMBERSHIP_CAP = 64
ORBIT_GUARD = 64

Word = tuple[int, ...]


def word_weight(word: Word, r: float, s: float) -> float:
    """Product of per-letter factors, r for corner letters and s for the added letter."""
    n4 = sum(1 for c in word if c == 4)
    return r ** (len(word) - n4) * s ** n4


def _corner_map(i: int) -> Similarity:
    """x -> x/2 + p_i/2."""
    half = Fraction(1, 2)
    p = CORNERS[i - 1]
    return Similarity(Scalar(half), Scalar(), Scalar(), Scalar(half),
                      p.x.scale(half), p.y.scale(half))


def _added_map(lam: Fraction) -> Similarity:
    """The scaled rotation placing the added triangle, pinned by its corner images."""
    q = lam - Fraction(1, 4)
    return Similarity(
        Scalar(Fraction(1, 4)), Scalar.sqrt3_times(q),
        Scalar.sqrt3_times(-q), Scalar(Fraction(1, 4)),
        Scalar(Fraction(1, 2) - lam / 2), Scalar.sqrt3_times(lam / 2),
    )


def _rotation() -> Similarity:
    """Rotation by 120 degrees about the centroid; sends p1->p2->p3->p1."""
    h = Fraction(1, 2)
    return Similarity(Scalar(-h), Scalar.sqrt3_times(-h),
                      Scalar.sqrt3_times(h), Scalar(-h),
                      Scalar(1), Scalar())


class IFS:
    """The four-map system at one rational parameter, plus the order-3 rotation group."""

    def __init__(self, lam: Fraction):
        self.lam = lam
        self.maps: tuple[Similarity, ...] = (
            _corner_map(1), _corner_map(2), _corner_map(3), _added_map(lam))
        self.inverses = tuple(f.inverse() for f in self.maps)
        rot = _rotation()
        self.rotations = (rot, rot.compose(rot))
        # caches keyed by this instance; all results are immutable
        self._membership: dict[tuple, bool] = {}
        self._boundary_fast = None
        self._caches: dict = {}

    @property
    def added_ratio_sq(self) -> Fraction:
        rs = self.maps[3].ratio_sq
        return rs.a  # rational by construction

    @property
    def added_ratio(self) -> float:
        return self.maps[3].ratio

    def is_dyadic(self) -> bool:
        d = self.lam.denominator
        return d & (d - 1) == 0

    def word_map(self, word: Word) -> Similarity:
        return compose_word(self.maps[c - 1] for c in word)

    def __repr__(self) -> str:
        return f"IFS(lambda={self.lam})"


def make_ifs(lam: RationalLike) -> IFS:
    """Build the exact iterated function system for a rational lam in (0, 1/2)."""
    if isinstance(lam, float):
        raise DomainError("lambda must be given exactly (int, Fraction or 'p/q'), not float")
    frac = as_fraction(lam, "lambda")
    if not (0 < frac < Fraction(1, 2)):
        raise DomainError(f"lambda must lie in (0, 1/2), got {frac}")
    return IFS(frac)


# -- membership of exact points in the attractor --------------------------------

_SQ3 = Scalar.sqrt3_times(1)
_ONE = Scalar(1)


def point_in_triangle(p: Point) -> bool:
    """Exact containment in the closed reference triangle."""
    if p.y.sign() < 0:
        return False
    if (_SQ3 * p.x - p.y).sign() < 0:          # left edge: y <= sqrt3 * x
        return False
    return (_SQ3 * (_ONE - p.x) - p.y).sign() >= 0  # right edge: y <= sqrt3 * (1 - x)


def point_on_triangle_boundary(p: Point) -> bool:
    """Exact containment in the boundary of the reference triangle."""
    zero = Scalar()
    if p.y == zero:
        return p.x.sign() >= 0 and (_ONE - p.x).sign() >= 0
    if p.y.sign() < 0:
        return False
    if p.y == _SQ3 * p.x:
        return (Scalar(Fraction(1, 2)) - p.x).sign() >= 0 and p.x.sign() >= 0
    if p.y == _SQ3 * (_ONE - p.x):
        return (p.x - Scalar(Fraction(1, 2))).sign() >= 0 and (_ONE - p.x).sign() >= 0
    return False


def point_in_attractor(ifs: IFS, p: Point, cap: int = MEMBERSHIP_CAP) -> bool:
    """Exact attractor membership by recursive pullback.

    A point belongs to the attractor iff some infinite pullback path stays
    inside the reference triangle.  The triangle boundary is absorbed early
    (it lies in the corner subsystem's attractor), and a revisited pullback
    on the current path closes a cycle, which certifies an infinite path.
    Rational parameters make vertex orbits eventually periodic, so the cap
    only guards pathological inputs.
    """
    memo = ifs._membership
    on_path: set[tuple] = set()

    def descend(q: Point) -> bool:
        k = q.key()
        cached = memo.get(k)
        if cached is not None:
            return cached
        if not point_in_triangle(q):
            memo[k] = False
            return False
        if point_on_triangle_boundary(q):
            memo[k] = True
            return True
        if k in on_path:
            return True  # periodic pullback: infinite address exists
        if len(on_path) >= cap:
            raise DepthExceeded(
                f"no resolution after {cap} distinct pullbacks; orbit may not be eventually periodic")
        on_path.add(k)
        res = False
        for inv in ifs.inverses:
            if descend(inv.apply(q)):
                res = True
                break
        on_path.discard(k)
        memo[k] = res
        return res

    return descend(p)


# -- the cell-boundary set ------------------------------------------------------

EDGE_NAMES = ("bottom", "right", "left")


@dataclass(frozen=True)
class Label:
    """Vertex label: a corner index, or an edge index with an interior parameter."""
    kind: Literal["corner", "edge"]
    corner: Optional[int] = None      # 1..3
    edge: Optional[int] = None        # 0 bottom, 1 right, 2 left
    t: Optional[Fraction] = None      # parameter in (0, 1) along the directed edge

    def describe(self) -> str:
        if self.kind == "corner":
            return f"corner {self.corner}"
        return f"{EDGE_NAMES[self.edge]} edge t={self.t}"


def edge_point(edge: int, t: Fraction) -> Point:
    """Point at parameter t on a directed boundary edge (bottom p2->p3, right p3->p1, left p1->p2)."""
    if edge == 0:
        return Point(Scalar(t), Scalar())
    if edge == 1:
        return Point(Scalar(1 - t / 2), Scalar.sqrt3_times(t / 2))
    if edge == 2:
        return Point(Scalar((1 - t) / 2), Scalar.sqrt3_times((1 - t) / 2))
    raise ValueError(f"edge index {edge}")


def classify_boundary_point(p: Point) -> Label:
    """Exact classification of a point of the triangle boundary."""
    for i, c in enumerate(CORNERS):
        if p == c:
            return Label("corner", corner=i + 1)
    zero = Scalar()
    if p.y == zero:
        return Label("edge", edge=0, t=p.x.a)
    if p.y == _SQ3 * (_ONE - p.x):
        t = (Fraction(1) - p.x.a) * 2
        if 0 < t < 1:
            return Label("edge", edge=1, t=t)
    if p.y == _SQ3 * p.x:
        t = 1 - 2 * p.x.a
        if 0 < t < 1:
            return Label("edge", edge=2, t=t)
    raise DomainError("point does not lie on the triangle boundary")


def doubling_orbit(t0: Fraction, guard: int = ORBIT_GUARD) -> list[Fraction]:
    """Forward orbit of an edge parameter under t -> 2t (t<1/2), 2t-1 (t>1/2); 1/2 is terminal."""
    orbit: list[Fraction] = []
    seen: set[Fraction] = set()
    t = t0
    while t not in seen:
        if len(orbit) >= guard:
            raise OrbitOverflow(f"doubling orbit of {t0} exceeds {guard} states")
        seen.add(t)
        orbit.append(t)
        if t == Fraction(1, 2):
            break  # next images are the edge endpoints, absorbed into corners
        t = 2 * t if t < Fraction(1, 2) else 2 * t - 1
        if t == 0 or t == 1:
            break
    return orbit


@dataclass
class BoundarySet:
    """The cell-contact set: the three corners plus three symmetric copies of a parameter set."""
    points: list[Point]
    labels: list[Label]

    @property
    def size(self) -> int:
        return len(self.points)

    def index_of(self, p: Point) -> int:
        return self._index[p.key()]

    def __post_init__(self):
        self._index = {p.key(): i for i, p in enumerate(self.points)}

    @property
    def g_permutation(self) -> tuple[int, ...]:
        """Index permutation induced by the 120-degree rotation."""
        perm = []
        for lab in self.labels:
            if lab.kind == "corner":
                img = Label("corner", corner=lab.corner % 3 + 1)
            else:
                img = Label("edge", edge=(lab.edge + 1) % 3, t=lab.t)
            perm.append(self._label_index(img))
        return tuple(perm)

    def _label_index(self, lab: Label) -> int:
        return self.labels.index(lab)

    def orbits(self) -> list[tuple[int, ...]]:
        """Vertex orbits under the rotation group, each of size 3."""
        perm = self.g_permutation
        seen = set()
        out = []
        for i in range(len(self.points)):
            if i in seen:
                continue
            orb = (i, perm[i], perm[perm[i]])
            seen.update(orb)
            out.append(orb)
        return out

    def parameter_set(self) -> list[Fraction]:
        return sorted({lab.t for lab in self.labels if lab.kind == "edge"})


def _boundary_from_parameters(ts: Iterable[Fraction]) -> BoundarySet:
    points = list(CORNERS)
    labels = [Label("corner", corner=i) for i in (1, 2, 3)]
    for t in sorted(set(ts)):
        for e in range(3):
            points.append(edge_point(e, t))
            labels.append(Label("edge", edge=e, t=t))
    return BoundarySet(points, labels)


def boundary_set(ifs: IFS, mode: Literal["fast", "oracle"] = "fast",
                 depth: Optional[int] = None, guard: int = ORBIT_GUARD) -> BoundarySet:
    """The set of points where distinct cells can touch, pulled back to the reference cell.

    Fast mode uses the doubling-orbit characterization of the contact
    parameters (the added cell touches the bottom edge's mirror point at
    parameter 2*lam, and pullbacks double the parameter).  Oracle mode
    evaluates the defining union directly down to ``depth`` subdivisions:
    enumerate level vertices, test cell membership exactly, and pull back.
    The two must agree; tests enforce it.
    """
    if mode == "fast":
        if ifs._boundary_fast is None:
            ifs._boundary_fast = _boundary_from_parameters(doubling_orbit(2 * ifs.lam, guard))
        return ifs._boundary_fast
    if mode != "oracle":
        raise DomainError(f"mode must be 'fast' or 'oracle', got {mode!r}")
    if depth is None:
        depth = len(doubling_orbit(2 * ifs.lam, guard)) + 2
    return _boundary_set_oracle(ifs, depth)


def _boundary_set_oracle(ifs: IFS, depth: int) -> BoundarySet:
    """Evaluate the defining union directly.

    For every level m <= depth and every level-m vertex, walk down the cell
    tree keeping only branches whose (closed) triangle contains the vertex;
    cells whose triangle excludes it cannot contain it.  Each surviving
    length-m pullback is tested for attractor membership exactly.
    """
    inv_floats = [inv.linear_floats() for inv in ifs.inverses]
    sq3 = math.sqrt(3.0)
    margin = 1e-9

    def surely_outside(x: float, y: float) -> bool:
        return (y < -margin or y > sq3 * x + margin or y > sq3 * (1.0 - x) + margin)

    found: dict[tuple, Point] = {}
    for m in range(depth + 1):
        verts: dict[tuple, Point] = {}
        for _, fw in _iter_word_maps(ifs, m):
            for c in CORNERS:
                p = fw.apply(c)
                verts.setdefault(p.key(), p)
        for v in verts.values():
            frontier = {v.key(): (v, float(v.x), float(v.y))}
            for _ in range(m):
                nxt: dict[tuple, tuple] = {}
                for q, fx, fy in frontier.values():
                    for inv, (a00, a01, a10, a11, tx, ty) in zip(ifs.inverses, inv_floats):
                        # cheap float screen; exact confirmation for the rest
                        gx = a00 * fx + a01 * fy + tx
                        gy = a10 * fx + a11 * fy + ty
                        if surely_outside(gx, gy):
                            continue
                        qq = inv.apply(q)
                        if point_in_triangle(qq):
                            nxt.setdefault(qq.key(), (qq, float(qq.x), float(qq.y)))
                frontier = nxt
            for q, _, _ in frontier.values():
                if q.key() not in found and point_in_attractor(ifs, q):
                    found[q.key()] = q
    ts: set[Fraction] = set()
    for p in found.values():
        lab = classify_boundary_point(p)  # raises if a contact leaves the edge skeleton
        if lab.kind == "edge":
            ts.add(lab.t)
    return _boundary_from_parameters(ts)


# -- approximating graphs --------------------------------------------------------

def _iter_word_maps(ifs: IFS, m: int) -> Iterator[tuple[Word, Similarity]]:
    """All (word, composed map) pairs of length m, in lexicographic order."""
    ident = compose_word(())
    if m == 0:
        yield (), ident
        return

    def rec(word: Word, fw: Similarity) -> Iterator[tuple[Word, Similarity]]:
        if len(word) == m:
            yield word, fw
            return
        for c in (1, 2, 3, 4):
            yield from rec(word + (c,), fw.compose(ifs.maps[c - 1]))

    yield from rec((), ident)


class _VertexTable:
    """Deduplicating registry of exact points with dense integer ids."""

    __slots__ = ("index", "points")

    def __init__(self):
        self.index: dict[tuple, int] = {}
        self.points: list[Point] = []

    def add(self, p: Point) -> int:
        k = p.key()
        i = self.index.get(k)
        if i is None:
            i = len(self.points)
            self.index[k] = i
            self.points.append(p)
        return i

    def get(self, p: Point) -> Optional[int]:
        return self.index.get(p.key())

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class GraphApprox:
    """Level-m approximating graph: deduplicated vertices, common-cell edges, cell membership."""
    m: int
    points: list[Point]
    edges: set[tuple[int, int]]
    cells: dict[Word, tuple[int, ...]]

    @property
    def vertex_count(self) -> int:
        return len(self.points)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        n = len(self.points)
        if n == 0:
            return False
        adj: dict[int, list[int]] = {i: [] for i in range(n)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n

    def edge_list_csv(self) -> str:
        lines = ["vertex_id_1,vertex_id_2"]
        for a, b in sorted(self.edges):
            lines.append(f"{a},{b}")
        return "\n".join(lines) + "\n"

    def vertex_csv(self) -> str:
        lines = ["vertex_id,x,y,x_exact,y_exact"]
        for i, p in enumerate(self.points):
            dx, dy = point_decimal_str(p)
            ex, ey = point_exact_str(p)
            lines.append(f'{i},{dx},{dy},"{ex}","{ey}"')
        return "\n".join(lines) + "\n"


def approximation_graph(ifs: IFS, m: int, method: Literal["fast", "direct"] = "fast",
                        cap: int = GRAPH_LEVEL_CAP) -> GraphApprox:
    """Level-m graph: vertices are corner images of all length-m words, edges join
    vertices sharing a cell.

    The fast method locates each cell's vertices through the cell-contact
    set (a vertex lies in a cell iff it is the image of a contact point);
    the direct method tests membership with exact pullbacks and is used to
    validate the fast one on small levels.
    """
    if m < 0:
        raise DomainError("level must be nonnegative")
    if m > cap:
        raise CapExceeded(f"level {m} exceeds cap {cap}")
    table = _VertexTable()
    word_maps = list(_iter_word_maps(ifs, m))
    for _, fw in word_maps:
        for c in CORNERS:
            table.add(fw.apply(c))

    cells: dict[Word, tuple[int, ...]] = {}
    edges: set[tuple[int, int]] = set()
    if method == "fast":
        bset = boundary_set(ifs, "fast")
        for word, fw in word_maps:
            ids = []
            for p in bset.points:
                vid = table.get(fw.apply(p))
                if vid is not None:
                    ids.append(vid)
            ids = tuple(sorted(set(ids)))
            cells[word] = ids
            for a, b in itertools.combinations(ids, 2):
                edges.add((a, b))
    elif method == "direct":
        coords = np.array([p.float_xy() for p in table.points])
        for word, fw in word_maps:
            cell_corners = np.array([fw.apply(c).float_xy() for c in CORNERS])
            lo = cell_corners.min(axis=0) - 1e-9
            hi = cell_corners.max(axis=0) + 1e-9
            inside = np.nonzero((coords >= lo).all(axis=1) & (coords <= hi).all(axis=1))[0]
            inv = fw.inverse()
            ids = []
            for idx in inside:
                q = inv.apply(table.points[idx])
                if point_in_triangle(q) and point_in_attractor(ifs, q):
                    ids.append(int(idx))
            ids = tuple(sorted(ids))
            cells[word] = ids
            for a, b in itertools.combinations(ids, 2):
                edges.add((a, b))
    else:
        raise DomainError(f"unknown method {method!r}")

    g = GraphApprox(m, table.points, edges, cells)
    if not g.is_connected():
        raise DomainError("approximating graph is unexpectedly disconnected")
    return g


# -- Hausdorff distance between attractors ---------------------------------------

def _corner_cloud(ifs: IFS, depth: int) -> np.ndarray:
    """All depth-k cell corner images as a float array (within 2^-k of the attractor)."""
    pts = np.array([c.float_xy() for c in CORNERS])
    mats = []
    for f in ifs.maps:
        m00, m01, m10, m11, tx, ty = f.linear_floats()
        mats.append((np.array([[m00, m01], [m10, m11]]), np.array([tx, ty])))
    for _ in range(depth):
        pts = np.concatenate([pts @ A.T + b for A, b in mats], axis=0)
    return pts


def hausdorff_distance(ifs1: IFS, ifs2: IFS, depth: int = 8,
                       cap: int = GRAPH_LEVEL_CAP) -> tuple[float, float]:
    """Hausdorff distance estimate between two attractors plus the Lipschitz bound.

    The estimate is the Hausdorff distance between depth-k corner clouds;
    it is within 2*2^-k of the true value.  The bound is 2*|lam1 - lam2|,
    sharp for this family.
    """
    if depth > cap:
        raise CapExceeded(f"depth {depth} exceeds cap {cap}")
    from scipy.spatial import cKDTree

    c1 = _corner_cloud(ifs1, depth)
    c2 = _corner_cloud(ifs2, depth)
    d12 = cKDTree(c2).query(c1, k=1)[0].max()
    d21 = cKDTree(c1).query(c2, k=1)[0].max()
    estimate = float(max(d12, d21))
    bound = 2.0 * abs(float(ifs1.lam) - float(ifs2.lam))
    return estimate, bound


def track_point(word: Word, corner: int, lam1: RationalLike,
                lam2: RationalLike) -> tuple[Point, Point, float]:
    """Track one addressed vertex across two parameters; the distance obeys 2|lam1-lam2|."""
    if corner not in (1, 2, 3):
        raise DomainError("corner index must be 1, 2 or 3")
    if any(c not in (1, 2, 3, 4) for c in word):
        raise DomainError("word letters must be in {1,2,3,4}")
    ifs1, ifs2 = make_ifs(lam1), make_ifs(lam2)
    p = ifs1.word_map(word).apply(CORNERS[corner - 1])
    q = ifs2.word_map(word).apply(CORNERS[corner - 1])
    dist = p.distance(q)
    gap = 2 * abs(ifs1.lam - ifs2.lam)
    # exact form of the tracked-point bound
    bound_sq = Scalar(4 * (ifs1.lam - ifs2.lam) ** 2)
    assert (bound_sq - p.distance_sq(q)).sign() >= 0, "tracked-point bound violated"
    assert dist <= float(gap) + 1e-12
    return p, q, dist


def point_of_address(ifs: IFS, word: Word, corner: int) -> Point:
    """Exact coordinates of the vertex addressed by (word, corner)."""
    if corner not in (1, 2, 3):
        raise DomainError("corner index must be 1, 2 or 3")
    return ifs.word_map(word).apply(CORNERS[corner - 1])
