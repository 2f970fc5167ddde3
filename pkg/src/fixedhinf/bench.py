"""Benchmark suite: case registry, runner, and report rendering.

Each case names a plant data file, the controller orders to synthesize, and
published reference norms with their table tags.  Plant matrices are shipped
as external JSON files (they originate from the COMPLeib collection and the
papers cited there, and some are not redistributable from memory); a case
whose data file is absent is reported with status "data-unavailable" and
never fails the suite.

The canonical JSON report is a pure function of (suite data, options, seed):
it deliberately excludes wall-clock timing, which lives only in the
human-readable rendering.
"""

from __future__ import annotations

import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FixedHinfError
from .fileio import load_controller, load_plant
from .synthesis import (
    SynthesisOptions,
    SynthesisStatus,
    certify_controller,
    synthesize,
)

__all__ = [
    "Reference",
    "BenchmarkCase",
    "BenchOptions",
    "OrderEntry",
    "CaseReport",
    "BenchReport",
    "BUILTIN_CASES",
    "case_names",
    "run_benchmark",
    "run_suite",
]

QUICK = "quick"
LARGE = "large"


@dataclass(frozen=True)
class Reference:
    """One published value: (table tag, controller order, reported norm)."""

    source: str
    order: int
    norm: float


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    plant_file: str
    orders: tuple[int, ...]
    references: tuple[Reference, ...] = ()
    tolerance_policy: float = 0.05
    tier: str = QUICK
    warm_start_file: str | None = None
    notes: str = ""

    def __post_init__(self):
        if any(ref.norm < 0 for ref in self.references):
            raise ValueError(f"{self.name}: reference norms must be nonnegative")
        if any(o < 0 for o in self.orders):
            raise ValueError(f"{self.name}: orders must be nonnegative")
        if self.tolerance_policy <= 0:
            raise ValueError(f"{self.name}: tolerance_policy must be positive")


def _refs(tag: str, pairs) -> tuple[Reference, ...]:
    return tuple(Reference(tag, order, norm) for order, norm in pairs)


# Reference norms are transcribed from the published comparison tables; each
# carries its table tag.  Cases with no audited value ship without references
# and report achieved norms only.
BUILTIN_CASES: dict[str, BenchmarkCase] = {
    case.name: case
    for case in [
        BenchmarkCase(
            "AC8", "AC8.json", (0,), _refs("table-1", [(0, 2.005)]), tier=QUICK
        ),
        BenchmarkCase(
            "HE1", "HE1.json", (0,), _refs("table-1", [(0, 0.154)]), tier=QUICK
        ),
        BenchmarkCase(
            "REA2", "REA2.json", (0,), _refs("table-1", [(0, 1.149)]), tier=QUICK
        ),
        BenchmarkCase(
            "AC10",
            "AC10.json",
            (0,),
            (),
            tier=LARGE,
            warm_start_file="AC10_warm.json",
            notes="requires a stabilizing warm start; no audited reference norm",
        ),
        BenchmarkCase(
            "BDT2", "BDT2.json", (0,), _refs("table-1", [(0, 0.6515)]), tier=LARGE
        ),
        BenchmarkCase(
            "HF1", "HF1.json", (0,), _refs("table-1", [(0, 0.447)]), tier=LARGE
        ),
        BenchmarkCase(
            "CM4", "CM4.json", (0,), _refs("table-1", [(0, 0.816)]), tier=LARGE
        ),
        BenchmarkCase(
            "VTOL", "VTOL.json", (0,), _refs("table-2", [(0, 0.154)]), tier=QUICK
        ),
        BenchmarkCase(
            "CR", "CR.json", (0,), _refs("table-2", [(0, 1.168)]), tier=QUICK
        ),
        BenchmarkCase(
            "PA", "PA.json", (0,), _refs("table-2", [(0, 1.18e-4)]), tier=QUICK
        ),
        BenchmarkCase(
            "Enns",
            "Enns.json",
            (7, 6, 5, 4, 3, 2, 1),
            _refs(
                "table-3",
                [
                    (7, 1.1655),
                    (6, 1.1447),
                    (5, 1.1508),
                    (4, 1.1923),
                    (3, 1.1921),
                    (2, 1.2438),
                    (1, 1.4256),
                ],
            ),
            tier=QUICK,
        ),
        BenchmarkCase(
            "HIMAT",
            "HIMAT.json",
            (7, 6),
            _refs("table-4", [(7, 1.06), (6, 1.07)]),
            tier=QUICK,
        ),
        BenchmarkCase(
            "VSC", "VSC.json", (0,), _refs("table-5", [(0, 3.975)]), tier=QUICK
        ),
        BenchmarkCase(
            "Wang",
            "Wang.json",
            (2, 1, 0),
            _refs("table-6", [(2, 50.642), (1, 50.645), (0, 50.879)]),
            tier=QUICK,
        ),
        BenchmarkCase(
            "AUV",
            "AUV.json",
            (0, 1, 2),
            (),
            tier=QUICK,
            notes="no audited reference norm",
        ),
    ]
}


def case_names(tier: str = "all") -> list[str]:
    """Registry case names, optionally filtered by tier."""
    return [
        name
        for name, case in BUILTIN_CASES.items()
        if tier == "all" or case.tier == tier
    ]


@dataclass(frozen=True)
class BenchOptions:
    suite_dir: str
    runs: int = 10
    cpumax_seconds: float = 300.0
    seed: int = 0
    norm_rel_tol: float = 1e-7
    tolerance: float | None = None  # overrides each case's tolerance_policy


@dataclass(frozen=True)
class OrderEntry:
    """Result for one controller order of one case."""

    order: int
    achieved: float | None
    certified: bool
    passed: bool | None  # None when the case has no reference for this order
    references: tuple[Reference, ...]
    seeds: tuple[int, ...]
    stage2_norms: tuple[float, ...]
    elapsed_seconds: float


@dataclass(frozen=True)
class CaseReport:
    name: str
    status: str  # "ok" | "data-unavailable" | "load-error"
    detail: str = ""
    entries: tuple[OrderEntry, ...] = ()


@dataclass(frozen=True)
class BenchReport:
    options: BenchOptions
    cases: tuple[CaseReport, ...]

    @property
    def all_passed(self) -> bool:
        """True when no executed comparison failed (skips do not fail)."""
        return not any(
            entry.passed is False
            for case in self.cases
            for entry in case.entries
        )

    def to_json(self) -> str:
        """Canonical machine-readable report; excludes timing on purpose so
        repeated invocations with the same inputs are byte-identical."""
        obj = {
            "version": 1,
            "options": {
                "runs": self.options.runs,
                "cpumax_seconds": self.options.cpumax_seconds,
                "seed": self.options.seed,
                "norm_rel_tol": self.options.norm_rel_tol,
                "tolerance": self.options.tolerance,
            },
            "cases": [
                {
                    "name": case.name,
                    "status": case.status,
                    "detail": case.detail,
                    "orders": [
                        {
                            "order": entry.order,
                            "achieved": entry.achieved,
                            "certified": entry.certified,
                            "passed": entry.passed,
                            "references": [
                                {
                                    "source": ref.source,
                                    "order": ref.order,
                                    "norm": ref.norm,
                                }
                                for ref in entry.references
                            ],
                            "seeds": list(entry.seeds),
                            "per_run_norms": [
                                None if not np.isfinite(v) else v
                                for v in entry.stage2_norms
                            ],
                        }
                        for entry in case.entries
                    ],
                }
                for case in self.cases
            ],
        }
        return json.dumps(obj, sort_keys=True, indent=1) + "\n"

    def to_text(self) -> str:
        lines = [
            f"{'case':8s} {'order':>5s} {'reference':>12s} {'achieved':>14s} "
            f"{'status':>10s} {'elapsed':>9s}"
        ]
        for case in self.cases:
            if case.status != "ok":
                lines.append(f"{case.name:8s} {'-':>5s} {'-':>12s} {'-':>14s} "
                             f"{case.status:>10s} {'-':>9s}")
                continue
            for entry in case.entries:
                ref = next(
                    (r.norm for r in entry.references if r.order == entry.order),
                    None,
                )
                ref_s = f"{ref:.6g}" if ref is not None else "-"
                ach_s = f"{entry.achieved:.8g}" if entry.achieved is not None else "failed"
                if entry.passed is None:
                    stat = "no-ref"
                else:
                    stat = "pass" if entry.passed else "FAIL"
                lines.append(
                    f"{case.name:8s} {entry.order:5d} {ref_s:>12s} {ach_s:>14s} "
                    f"{stat:>10s} {entry.elapsed_seconds:8.1f}s"
                )
        return "\n".join(lines) + "\n"


def _case_seed(root: int, case_name: str, order: int) -> int:
    """Stable per-(case, order) seed so cases can run in any order."""
    tag = zlib.crc32(case_name.encode())
    ss = np.random.SeedSequence((root, tag, order))
    return int(ss.generate_state(1, np.uint64)[0])


def run_benchmark(case: BenchmarkCase, opts: BenchOptions) -> CaseReport:
    """Run one case: synthesize at every declared order and compare.

    Synthesis failures are recorded per order, never raised; a missing data
    file (or missing mandatory warm start) yields status "data-unavailable".
    """
    suite = Path(opts.suite_dir)
    plant_path = suite / case.plant_file
    if not plant_path.exists():
        return CaseReport(case.name, "data-unavailable", f"missing {case.plant_file}")
    warm = None
    if case.warm_start_file is not None:
        warm_path = suite / case.warm_start_file
        if not warm_path.exists():
            return CaseReport(
                case.name,
                "data-unavailable",
                f"missing mandatory warm start {case.warm_start_file}",
            )
        try:
            warm = load_controller(warm_path)
        except FixedHinfError as exc:
            return CaseReport(case.name, "load-error", str(exc))
    try:
        plant = load_plant(plant_path)
    except FixedHinfError as exc:
        return CaseReport(case.name, "load-error", str(exc))

    tol = opts.tolerance if opts.tolerance is not None else case.tolerance_policy
    entries = []
    for order in case.orders:
        if order > plant.n:
            entries.append(
                OrderEntry(order, None, False, False, (), (), (), 0.0)
            )
            continue
        t0 = time.perf_counter()
        sopts = SynthesisOptions(
            order=order,
            runs=opts.runs,
            cpumax_seconds=opts.cpumax_seconds,
            norm_rel_tol=opts.norm_rel_tol,
            rng_seed=_case_seed(opts.seed, case.name, order),
            warm_start=warm if (warm is not None and warm.order == order) else None,
        )
        result = synthesize(plant, sopts)
        elapsed = time.perf_counter() - t0
        refs = tuple(r for r in case.references if r.order == order)
        seeds = tuple(rr.seed for rr in result.per_run)
        norms = tuple(rr.stage2_norm for rr in result.per_run)
        if result.status is not SynthesisStatus.SUCCESS:
            entries.append(
                OrderEntry(
                    order, None, False, False if refs else None, refs, seeds, norms, elapsed
                )
            )
            continue
        # independent re-check before reporting
        try:
            _, cert = certify_controller(plant, result.controller)
            achieved = cert.gamma
            certified = abs(achieved - result.norm) <= 1e-6 * (1.0 + abs(achieved))
        except FixedHinfError:
            achieved = result.norm
            certified = False
        passed = (
            all(achieved <= ref.norm * (1.0 + tol) for ref in refs) if refs else None
        )
        entries.append(
            OrderEntry(order, achieved, certified, passed, refs, seeds, norms, elapsed)
        )
    return CaseReport(case.name, "ok", "", tuple(entries))


def run_suite(names, opts: BenchOptions) -> BenchReport:
    """Run the named cases in the given order; unknown names raise KeyError."""
    reports = []
    for name in names:
        if name not in BUILTIN_CASES:
            raise KeyError(
                f"unknown case '{name}'; known: {', '.join(sorted(BUILTIN_CASES))}"
            )
        reports.append(run_benchmark(BUILTIN_CASES[name], opts))
    return BenchReport(opts, tuple(reports))
