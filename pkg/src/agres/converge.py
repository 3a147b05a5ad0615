"""Dyadic approximation schedules and empirical convergence diagnostics.

An irrational shape parameter is never instantiated directly; it is
approached through its dyadic roundings lambda_n = round(2^n t)/2^n, each
of which admits an exact solve.  The diagnostics track the solved weight,
resistances and resolvent entries at addressed vertices along the
schedule and test for a Cauchy trend, since the underlying theory gives
convergence without a rate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .approx import level_form, measure_weights, resolvent_kernel
from .errors import DomainError, TrackingError
from .geometry import Word, hausdorff_distance, make_ifs
from .network import effective_resistance, harmonic_extension
from .renorm import solve_r

DIFF_THRESHOLD = 1e-2
TREND_SLACK = 1e-12

Address = tuple[Word, int]
TrackedPair = tuple[Address, Address]


class Target:
    """A real in (0, 1/2): an exact rational or an inverse square root.

    Comparisons against rationals are exact in both cases, which makes the
    dyadic rounding below reproducible.
    """

    def __init__(self, kind: str, value):
        self.kind = kind      # 'rational' | 'inv_sqrt'
        self.value = value    # Fraction | int N (for 1/sqrt(N))

    @classmethod
    def parse(cls, text) -> "Target":
        if isinstance(text, Target):
            return text
        if isinstance(text, Fraction):
            return cls("rational", text)
        if isinstance(text, float):
            raise DomainError("give targets exactly: 'p/q', a decimal string, or '1/sqrtN'")
        if isinstance(text, int):
            return cls("rational", Fraction(text))
        s = str(text).strip().lower().replace(" ", "")
        if s.startswith("1/sqrt"):
            try:
                n = int(s[len("1/sqrt"):])
            except ValueError as exc:
                raise DomainError(f"malformed inverse square root {text!r}") from exc
            if n <= 0:
                raise DomainError("square root argument must be positive")
            root = math.isqrt(n)
            if root * root == n:
                return cls("rational", Fraction(1, root))
            return cls("inv_sqrt", n)
        try:
            return cls("rational", Fraction(s))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse target {text!r}") from exc

    def compare(self, q: Fraction) -> int:
        """Exact sign of (target - q)."""
        if self.kind == "rational":
            d = self.value - q
            return (d > 0) - (d < 0)
        if q <= 0:
            return 1
        d = 1 - q * q * self.value
        return (d > 0) - (d < 0)

    def __float__(self) -> float:
        if self.kind == "rational":
            return float(self.value)
        return 1.0 / math.sqrt(self.value)

    def in_open_interval(self) -> bool:
        return self.compare(Fraction(0)) > 0 and self.compare(Fraction(1, 2)) < 0

    def describe(self) -> str:
        if self.kind == "rational":
            return f"{self.value.numerator}/{self.value.denominator}"
        return f"1/sqrt{self.value}"


@dataclass
class DyadicSchedule:
    """Entries (n, lambda_n) with lambda_n the dyadic rounding of the target at scale n."""
    target: Target
    entries: list[tuple[int, Fraction]]

    def lambdas(self) -> list[Fraction]:
        return [lam for _, lam in self.entries]


def dyadic_round(target: Target, n: int) -> Fraction:
    """round(2^n t) / 2^n with exact comparisons; half rounds up."""
    k = round(2 ** n * float(target))
    # exact adjustment of the float guess
    while target.compare(Fraction(2 * k + 1, 2 ** (n + 1))) > 0:
        k += 1
    while target.compare(Fraction(2 * k - 1, 2 ** (n + 1))) < 0:
        k -= 1
    if target.compare(Fraction(2 * k + 1, 2 ** (n + 1))) == 0:
        k += 1
    return Fraction(k, 2 ** n)


def dyadic_schedule(target, n_range: Sequence[int]) -> DyadicSchedule:
    """Dyadic roundings of the target for each n, clamped to stay in (0, 1/2)."""
    tgt = Target.parse(target)
    if not tgt.in_open_interval():
        raise DomainError("target must lie in (0, 1/2)")
    ns = sorted(set(int(n) for n in n_range))
    if not ns:
        raise DomainError("schedule range is empty")
    entries = []
    for n in ns:
        lam = dyadic_round(tgt, n)
        if not (0 < lam < Fraction(1, 2)):
            raise DomainError(f"rounding at n={n} leaves (0, 1/2): {lam}")
        entries.append((n, lam))
    return DyadicSchedule(tgt, entries)


def _parse_address(addr) -> Address:
    word, corner = addr
    word = tuple(int(c) for c in word)
    corner = int(corner)
    if corner not in (1, 2, 3) or any(c not in (1, 2, 3, 4) for c in word):
        raise DomainError(f"bad address {(word, corner)}")
    return (word, corner)


@dataclass
class ReportRow:
    n: int
    lam: Fraction
    r: float
    resistances: list[float]
    resolvents: list[float]


@dataclass
class ConvergenceReport:
    """Per-schedule-entry solved weight, tracked resistances and resolvent entries."""
    target: Target
    s: float
    m: int
    alpha: Optional[float]
    pairs: list[TrackedPair]
    rows: list[ReportRow]
    diff_threshold: float = DIFF_THRESHOLD
    verdicts: dict = field(default_factory=dict)

    def quantity_columns(self) -> dict[str, list[float]]:
        cols: dict[str, list[float]] = {"r": [row.r for row in self.rows]}
        for k in range(len(self.pairs)):
            cols[f"R_{k}"] = [row.resistances[k] for row in self.rows]
        if self.alpha is not None:
            for k in range(len(self.pairs)):
                cols[f"u_{k}"] = [row.resolvents[k] for row in self.rows]
        return cols

    def diffs(self) -> dict[str, list[float]]:
        return {name: [abs(col[i + 1] - col[i]) for i in range(len(col) - 1)]
                for name, col in self.quantity_columns().items()}

    def compute_verdicts(self, window_rows: int = 3) -> dict:
        """Trend over the trailing window of rows: the successive differences
        computed from the last ``window_rows`` entries must be nonincreasing,
        and the final difference must clear the threshold."""
        out = {}
        nd = max(0, window_rows - 1)
        for name, d in self.diffs().items():
            tail = d[-nd:] if nd else []
            trend = all(tail[i] >= tail[i + 1] - TREND_SLACK for i in range(len(tail) - 1))
            out[name] = {
                "trend_nonincreasing": bool(trend) if len(d) >= nd else None,
                "final_gap": d[-1] if d else 0.0,
                "final_gap_ok": bool(d[-1] <= self.diff_threshold) if d else True,
            }
        self.verdicts = out
        return out

    def to_csv(self) -> str:
        names = list(self.quantity_columns())
        header = ["n", "lambda_num", "lambda_den", "r"]
        header += [f"R_{k}" for k in range(len(self.pairs))]
        if self.alpha is not None:
            header += [f"u_{k}" for k in range(len(self.pairs))]
        header += [f"diff_{nm}" for nm in names]
        header += [f"verdict_{nm}" for nm in names]
        if not self.verdicts:
            self.compute_verdicts()
        diffs = self.diffs()
        lines = [",".join(header)]
        for i, row in enumerate(self.rows):
            cells = [str(row.n), str(row.lam.numerator), str(row.lam.denominator),
                     f"{row.r:.17g}"]
            cells += [f"{v:.17g}" for v in row.resistances]
            if self.alpha is not None:
                cells += [f"{v:.17g}" for v in row.resolvents]
            for nm in names:
                cells.append("" if i == 0 else f"{diffs[nm][i - 1]:.17g}")
            for nm in names:
                v = self.verdicts[nm]
                ok = bool(v["final_gap_ok"]) and (v["trend_nonincreasing"] is not False)
                cells.append("1" if ok else "0")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        if not self.verdicts:
            self.compute_verdicts()
        return {
            "target": self.target.describe(),
            "s": self.s,
            "level": self.m,
            "alpha": self.alpha,
            "pairs": [[[list(a[0]), a[1]], [list(b[0]), b[1]]] for a, b in self.pairs],
            "rows": [
                {"n": row.n,
                 "lambda": f"{row.lam.numerator}/{row.lam.denominator}",
                 "r": row.r,
                 "R": row.resistances,
                 "u": row.resolvents}
                for row in self.rows
            ],
            "diffs": self.diffs(),
            "verdicts": self.verdicts,
        }


def _report_row(n: int, lam: Fraction, s: float, pairs: list[TrackedPair],
                alpha: Optional[float], m: int, measure_scheme: str,
                eigen_tol: float, bisect_tol: float) -> ReportRow:
    ifs = make_ifs(lam)
    sol = solve_r(ifs, s, eigen_tol=eigen_tol, bisect_tol=bisect_tol)
    lf = level_form(ifs, sol, m)
    res = []
    for (a1, a2) in pairs:
        v1 = lf.vid_of_address(a1[0], a1[1])
        v2 = lf.vid_of_address(a2[0], a2[1])
        if v1 == v2:
            res.append(0.0)
        else:
            res.append(effective_resistance(lf.form, v1, v2))
    us: list[float] = []
    if alpha is not None:
        mspec = measure_weights(ifs, measure_scheme)
        kernel, _, _ = resolvent_kernel(ifs, sol, m, alpha, mspec, level=lf)
        for (a1, a2) in pairs:
            v1 = lf.vid_of_address(a1[0], a1[1])
            v2 = lf.vid_of_address(a2[0], a2[1])
            us.append(float(kernel.matrix[v1, v2]))
    return ReportRow(n, lam, sol.r, res, us)


def convergence_report(target, s: float, n_range: Sequence[int],
                       tracked: Sequence[TrackedPair],
                       alpha: Optional[float] = None, m: int = 3,
                       measure_scheme: str = "hausdorff",
                       eigen_tol: float = 1e-12, bisect_tol: float = 1e-10,
                       diff_threshold: float = DIFF_THRESHOLD,
                       threads: int = 1) -> ConvergenceReport:
    """Solve along a dyadic schedule and track quantities at addressed vertices.

    Tracked points are (word, corner) addresses, so they exist canonically
    at every schedule entry; coordinate-specified points are rejected by
    construction of the interface.
    """
    sched = dyadic_schedule(target, n_range)
    pairs = [(_parse_address(a), _parse_address(b)) for a, b in tracked]
    for (a, b) in pairs:
        for addr in (a, b):
            if len(addr[0]) > m:
                raise TrackingError(
                    f"address word {addr[0]} longer than level {m}")
    args = [(n, lam, s, pairs, alpha, m, measure_scheme, eigen_tol, bisect_tol)
            for n, lam in sched.entries]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda a: _report_row(*a), args))
    else:
        rows = [_report_row(*a) for a in args]
    report = ConvergenceReport(sched.target, float(s), m, alpha, pairs, rows,
                               diff_threshold=diff_threshold)
    report.compute_verdicts()
    return report


def hausdorff_check(lam1, lam2, depth: int = 8) -> tuple[float, float, bool]:
    """Cloud estimate of the attractor distance against the 2|dl| bound plus slack."""
    ifs1, ifs2 = make_ifs(lam1), make_ifs(lam2)
    estimate, bound = hausdorff_distance(ifs1, ifs2, depth)
    slack = 2.0 * 2.0 ** -depth
    return estimate, bound, estimate <= bound + slack + 1e-12


@dataclass
class GammaRow:
    n: int
    lam: Fraction
    harmonic_energy: float
    transplant_energy: float
    minimality_ok: bool


@dataclass
class GammaTable:
    """Harmonic energies along a schedule plus transplanted-competitor energies.

    The transplant carries the finest solution's vertex values to each
    coarser parameter by matching (word, corner) addresses; it is a
    legitimate competitor there, so its energy can never undercut the
    harmonic one.  A finite-level proxy for variational convergence, not a
    proof.
    """
    target: Target
    s: float
    m: int
    f_corners: tuple[float, float, float]
    rows: list[GammaRow]

    def diffs(self) -> dict[str, list[float]]:
        h = [r.harmonic_energy for r in self.rows]
        t = [r.transplant_energy for r in self.rows]
        return {
            "harmonic": [abs(h[i + 1] - h[i]) for i in range(len(h) - 1)],
            "transplant": [abs(t[i + 1] - t[i]) for i in range(len(t) - 1)],
        }

    def to_csv(self) -> str:
        lines = ["n,lambda_num,lambda_den,harmonic_energy,transplant_energy,minimality_ok"]
        for r in self.rows:
            lines.append(f"{r.n},{r.lam.numerator},{r.lam.denominator},"
                         f"{r.harmonic_energy:.17g},{r.transplant_energy:.17g},"
                         f"{int(r.minimality_ok)}")
        return "\n".join(lines) + "\n"


def gamma_diagnostic(target, s: float, n_range: Sequence[int],
                     f_corners: Sequence[float], m: int = 3,
                     eigen_tol: float = 1e-12, bisect_tol: float = 1e-10) -> GammaTable:
    """Energies of harmonic extensions of fixed corner data along a schedule,
    with the finest solution transplanted back as a competitor at every entry."""
    if len(f_corners) != 3:
        raise DomainError("corner data must have three values")
    sched = dyadic_schedule(target, n_range)
    solved = []
    for n, lam in sched.entries:
        ifs = make_ifs(lam)
        sol = solve_r(ifs, s, eigen_tol=eigen_tol, bisect_tol=bisect_tol)
        lf = level_form(ifs, sol, m)
        boundary = {lf.vid_of_address((), i + 1): float(f_corners[i]) for i in range(3)}
        h = harmonic_extension(lf.form, boundary)
        hvec = np.array([h[v] for v in range(lf.form.n)])
        solved.append((n, lam, lf, hvec))

    # canonical address per vertex of the finest entry: first (leaf, corner) hit
    _, _, lf_fin, h_fin = solved[-1]

    def canonical_addresses(geom):
        addr = {}
        lc = geom.leaf_corners
        for li in range(lc.shape[0]):
            for ci in range(3):
                vid = int(lc[li, ci])
                if vid not in addr:
                    addr[vid] = (li, ci)
        return addr

    rows = []
    for (n, lam, lf, hvec) in solved:
        addr = canonical_addresses(lf.geometry)
        comp = np.empty(lf.form.n)
        fin_lc = lf_fin.geometry.leaf_corners
        for vid, (li, ci) in addr.items():
            comp[vid] = h_fin[int(fin_lc[li, ci])]
        e_h = lf.form.energy(hvec)
        e_t = lf.form.energy(comp)
        rows.append(GammaRow(n, lam, float(e_h), float(e_t),
                             bool(e_t >= e_h - 1e-12)))
    return GammaTable(sched.target, float(s), m,
                      tuple(float(x) for x in f_corners), rows)
