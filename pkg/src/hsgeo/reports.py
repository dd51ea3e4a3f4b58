"""Closed-form versus oracle reports and the verification matrix."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from hsgeo.algebra import Family, TruncatedAlgebra
from hsgeo.curvature import CLOSED_FORMS
from hsgeo.oracle import oracle_ricci
from hsgeo.scaling import ScalingSequence

CSV_FIELDS = ("family", "scaling", "N", "i", "j", "closed_form", "oracle", "residual")
DEFAULT_SCALINGS = ("const:1", "power:1", "geometric:2^-0.5")
DEFAULT_NS = (6, 8, 10, 12)


def fmt(value: float) -> str:
    """17 significant digits, enough to round-trip binary64."""
    return f"{value:.17g}"


@dataclass(frozen=True)
class ReportEntry:
    family: str
    scaling: str
    N: int
    i: int
    j: int
    closed_form: float
    oracle: float
    residual: float

    def passes(self, tol: float) -> bool:
        return self.residual <= tol * (1.0 + abs(self.closed_form))

    def csv_row(self) -> str:
        return ",".join([self.family, self.scaling, str(self.N), str(self.i), str(self.j),
                         fmt(self.closed_form), fmt(self.oracle), fmt(self.residual)])


@dataclass
class CurvatureReport:
    entries: list[ReportEntry] = field(default_factory=list)
    formula: str = "published"
    tol: float = 1e-9

    def add(self, entry: ReportEntry) -> None:
        self.entries.append(entry)

    @property
    def max_relative_residual(self) -> float:
        return max((e.residual / (1.0 + abs(e.closed_form)) for e in self.entries), default=0.0)

    def failures(self) -> list[ReportEntry]:
        return [e for e in self.entries if not e.passes(self.tol)]

    def ok(self) -> bool:
        return not self.failures()

    def to_csv(self) -> str:
        # scaling descriptors contain no commas except explicit lists, which get quoted
        rows = [",".join(CSV_FIELDS)]
        for e in self.entries:
            if "," in e.scaling:
                e = ReportEntry(**{**asdict(e), "scaling": f'"{e.scaling}"'})
            rows.append(e.csv_row())
        return "\n".join(rows) + "\n"

    def to_json(self, extra: dict | None = None) -> str:
        doc = {"formula": self.formula, "tol": self.tol, "ok": self.ok(),
               "entries": [asdict(e) for e in self.entries]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2) + "\n"

    def render(self, fmt_name: str, extra: dict | None = None) -> str:
        if fmt_name == "csv":
            return self.to_csv()
        if fmt_name == "json":
            return self.to_json(extra)
        raise ValueError(f"unknown output format {fmt_name!r}")


def base_pairs(alg: TruncatedAlgebra, limit: int) -> list[tuple[int, int]]:
    return [p for p in alg.basis_indices() if max(p) <= limit]


def _block(family: Family, scaling: str, N: int, formula: str,
           pairs: Sequence[tuple[int, int]] | None) -> list[ReportEntry]:
    lam = ScalingSequence.parse(scaling)
    alg = TruncatedAlgebra(family, lam, N)
    picks = base_pairs(alg, min(4, N - 2)) if pairs is None else list(pairs)
    closed = CLOSED_FORMS[formula]
    out = []
    for i, j in picks:
        cf = closed(family, i, j, N, lam)
        orc = oracle_ricci(alg.xi(i, j), alg)
        out.append(ReportEntry(family.value, lam.descriptor, N, i, j, cf, orc, abs(cf - orc)))
    return out


def verification_matrix(families: Iterable[Family] = tuple(Family),
                        scalings: Iterable[str] = DEFAULT_SCALINGS,
                        Ns: Iterable[int] = DEFAULT_NS,
                        formula: str = "published",
                        tol: float = 1e-9,
                        pairs: Sequence[tuple[int, int]] | None = None,
                        jobs: int = 1,
                        perturb: float = 0.0) -> CurvatureReport:
    """Closed form against the oracle for every (family, scaling, N) block.

    Blocks run on ``jobs`` threads; entries are always collected in the
    loop order below, so output does not depend on the thread count.
    ``perturb`` is added to the first closed form only, to check that
    the harness notices a fault.
    """
    if formula not in CLOSED_FORMS:
        raise ValueError(f"unknown formula {formula!r}")
    blocks = [(f, s, n) for f in families for s in scalings for n in Ns]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda b: _block(*b, formula, pairs), blocks))
    else:
        results = [_block(*b, formula, pairs) for b in blocks]
    report = CurvatureReport(formula=formula, tol=tol)
    for chunk in results:
        for e in chunk:
            report.add(e)
    if perturb and report.entries:
        e = report.entries[0]
        cf = e.closed_form + perturb
        report.entries[0] = ReportEntry(e.family, e.scaling, e.N, e.i, e.j, cf, e.oracle, abs(cf - e.oracle))
    return report
