"""Reference scenarios, expected-value entries, and the validation harness.

The shipped reference set encodes the target values this simulator is
validated against, grouped by opaque table ids (II through VII plus FIG6).
Each entry names a frozen scenario, a KPI, an expected value with its
tolerance, and the frozen seed list that produces the measurement. Deep
tail entries (99.99th percentiles) carry seed lists long enough to pool
at least 100 000 successes of the class being measured.

Four entries are known to fail against a faithful implementation of the
documented contention mechanics; they are kept as honest gates rather
than being tuned around. See the validation section of the README for
the behavior-level analysis of each. `run_validation` therefore exits
red on the full suite by design, while the group-II collision and delay
rows (among many others) pass.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import (
    Scenario,
    TopologyConfig,
    scenario_with,
)
from .engine import run
from .kpi import KpiReport, build_report, merge
from .timebase import Numerology

SEEDS_10 = tuple(range(1, 11))
SEEDS_20 = tuple(range(1, 21))
SEEDS_21 = tuple(range(1, 22))
# 405 x ~250 priority successes per run pools >= 1e5 samples for the
# deep-percentile gate, with margin for the rare failed device.
SEEDS_DEEP = tuple(range(1, 406))
GRID_SEEDS = (1, 2, 3)

TABLES = ("II", "FIG6", "III", "IV", "V", "VI", "VII")

_SINGLE_MACRO = TopologyConfig(n_macro_cells=1)
# Dense small-cell overlay: three macro cells with enough wide femtos that
# essentially every device has a secondary gNB. Used by the deep-tail
# scenarios, where full dual coverage and burst-splitting across macros
# are both load-bearing.
_DENSE_OVERLAY = TopologyConfig(
    n_macro_cells=3, n_femto_cells=75, femto_radius_m=49.0
)


def _femto_sweep_topology(n_femto: int) -> TopologyConfig:
    return TopologyConfig(
        n_macro_cells=1, n_femto_cells=n_femto, femto_radius_m=10.0
    )


def _base(**kw) -> Scenario:
    kw.setdefault("n_devices", 5000)
    kw.setdefault("urllc_fraction", 1.0)
    kw.setdefault("topology", _SINGLE_MACRO)
    kw.setdefault("seed", 1)
    return Scenario(**kw)


def _build_scenarios() -> dict[str, Scenario]:
    out: dict[str, Scenario] = {
        "baseline-5k": _base(),
        "baseline-10k": _base(n_devices=10000),
        "edt-5k": _base(enhancements=frozenset({"edt"})),
        "edt-pp": _base(
            enhancements=frozenset({"edt", "pp"}), topology=_DENSE_OVERLAY
        ),
        "edt-pp-ebf": _base(
            enhancements=frozenset({"edt", "pp", "ebf"}),
            topology=_DENSE_OVERLAY,
        ),
        "baseline-mixed": _base(
            urllc_fraction=0.05, topology=TopologyConfig(n_macro_cells=3)
        ),
        "drp-mixed": _base(
            urllc_fraction=0.05,
            enhancements=frozenset({"edt", "drp", "ebf", "pp"}),
            reserved_r="dynamic",
            topology=_DENSE_OVERLAY,
        ),
        "rp5-mixed-dense": _base(
            urllc_fraction=0.05,
            enhancements=frozenset({"edt", "rp", "ebf", "pp"}),
            reserved_r=5,
            topology=_DENSE_OVERLAY,
        ),
    }
    for n_femto in (0, 5, 8, 10, 12):
        out[f"pp-femto-{n_femto}"] = _base(
            enhancements=frozenset({"pp"}),
            topology=_femto_sweep_topology(n_femto),
        )
    for r in (1, 2, 3, 4, 5):
        out[f"rp-r{r}"] = _base(
            urllc_fraction=0.05,
            enhancements=frozenset({"rp"}),
            reserved_r=r,
        )
    for scs in (15, 30, 60, 120):
        for sym in (7, 4, 2):
            out[f"numerology-{scs}-{sym}"] = _base(
                numerology=Numerology(scs, sym)
            )
    return out


REFERENCE_SCENARIOS: dict[str, Scenario] = _build_scenarios()


@dataclass(frozen=True)
class EntryResult:
    entry_id: str
    table: str
    gate: bool
    passed: bool
    measured: str
    expected: str
    description: str

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        kind = "" if self.gate else " (info)"
        return (
            f"{verdict}{kind:7s} {self.entry_id:<28s} "
            f"measured {self.measured:<14s} expected {self.expected}"
        )


# -- replication machinery ------------------------------------------------


def _report_for(args: tuple[str, int]) -> KpiReport:
    name, seed = args
    scenario = scenario_with(REFERENCE_SCENARIOS[name], seed=seed)
    return build_report(run(scenario))


_POOL_CACHE: dict[tuple[str, tuple[int, ...]], KpiReport] = {}


def clear_cache() -> None:
    _POOL_CACHE.clear()


def pooled_report(
    name: str,
    seeds: tuple[int, ...],
    jobs: int | None = None,
    log=None,
) -> KpiReport:
    """Run `name` once per seed and merge; memoized per (name, seeds).

    Replications are independent, so they may fan out over a process
    pool; reports are merged in seed order either way, keeping pooled
    output identical for any job count.
    """
    key = (name, tuple(seeds))
    if key in _POOL_CACHE:
        return _POOL_CACHE[key]
    if log:
        log(f"running {name} over {len(seeds)} seed(s)")
    jobs = jobs if jobs and jobs > 0 else (os.cpu_count() or 1)
    work = [(name, s) for s in seeds]
    if jobs == 1 or len(work) == 1:
        reports = [_report_for(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
            reports = list(pool.map(_report_for, work, chunksize=4))
    out = merge(reports)
    _POOL_CACHE[key] = out
    return out


# -- entry helpers ---------------------------------------------------------


def _pct(x: float | None) -> str:
    return "absent" if x is None else f"{x * 100:.4g}%"


def _ms(x: float | None) -> str:
    return "absent" if x is None else f"{x:.4g} ms"


def _approx(
    entry_id: str,
    table: str,
    desc: str,
    measured: float | None,
    expected: float,
    *,
    tol_abs: float | None = None,
    tol_rel: float | None = None,
    fmt=_ms,
    gate: bool = True,
) -> EntryResult:
    tol = tol_abs if tol_abs is not None else abs(expected) * (tol_rel or 0)
    ok = measured is not None and abs(measured - expected) <= tol
    shown = (
        f"{fmt(expected)} +-{tol_rel * 100:.0f}%"
        if tol_rel is not None
        else f"{fmt(expected)} +-{fmt(tol_abs)}"
    )
    return EntryResult(entry_id, table, gate, ok, fmt(measured), shown, desc)


def _bound(
    entry_id: str,
    table: str,
    desc: str,
    measured: float | None,
    limit: float,
    *,
    at_most: bool,
    fmt=_ms,
    gate: bool = True,
) -> EntryResult:
    if measured is None:
        ok = False
    else:
        ok = measured <= limit if at_most else measured >= limit
    rel = "<=" if at_most else ">="
    return EntryResult(
        entry_id, table, gate, ok, fmt(measured), f"{rel} {fmt(limit)}", desc
    )


def _monotone(values: list[float], eps: float = 1e-12) -> bool:
    return all(b <= a + eps for a, b in zip(values, values[1:]))


def _res_priority_util(rep: KpiReport) -> float | None:
    return rep.preamble_utilization()["reserved_priority"]


def _p9999(rep: KpiReport, klass: str = "all") -> float | None:
    return rep.delay_percentiles(klass)[99.99]


# -- per-table evaluators ---------------------------------------------------


def _table_ii(seeds, jobs, log) -> list[EntryResult]:
    seeds = seeds or SEEDS_10
    out = []
    for tag, name, coll, coll_tol, msg1, delay in (
        ("5k", "baseline-5k", 0.0048, 0.0015, 1.4, 28.98),
        ("10k", "baseline-10k", 0.0195, 0.003, 1.42, 33.62),
    ):
        rep = pooled_report(name, seeds, jobs, log)
        out.append(
            _approx(
                f"II/{tag}/collision",
                "II",
                f"{tag} baseline collision probability",
                rep.collision_probability(),
                coll,
                tol_abs=coll_tol,
                fmt=_pct,
            )
        )
        out.append(
            _approx(
                f"II/{tag}/mean-msg1",
                "II",
                f"{tag} baseline mean preamble transmissions",
                rep.mean_msg1_count,
                msg1,
                tol_abs=0.15,
                fmt=lambda v: "absent" if v is None else f"{v:.4g}",
            )
        )
        out.append(
            _approx(
                f"II/{tag}/mean-delay",
                "II",
                f"{tag} baseline mean access delay",
                rep.mean_access_delay_ms(),
                delay,
                tol_rel=0.15,
            )
        )
    return out


def _fig6(seeds, jobs, log) -> list[EntryResult]:
    seeds = seeds or SEEDS_10
    base = pooled_report("baseline-5k", seeds, jobs, log)
    edt = pooled_report("edt-5k", seeds, jobs, log)
    out = [
        _approx(
            "FIG6/median-baseline",
            "FIG6",
            "baseline median access delay",
            base.delay_percentile_ms(50),
            29.0,
            tol_abs=1.5,
        ),
        _approx(
            "FIG6/median-edt",
            "FIG6",
            "early-data median access delay",
            edt.delay_percentile_ms(50),
            6.0,
            tol_abs=1.5,
        ),
        _bound(
            "FIG6/collision-equal",
            "FIG6",
            "early-data collision matches baseline (same seeds)",
            abs(
                edt.collision_probability() - base.collision_probability()
            ),
            0.001,
            at_most=True,
            fmt=_pct,
        ),
    ]
    return out


_FEMTO_SWEEP = (0, 5, 8, 10, 12)
_FEMTO_EXPECTED = (0.0048, 0.0042, 0.0034, 0.0026, 0.0022)


def _table_iii(seeds, jobs, log) -> list[EntryResult]:
    seeds = seeds or SEEDS_20
    colls = []
    out = []
    for n_femto, expected in zip(_FEMTO_SWEEP, _FEMTO_EXPECTED):
        rep = pooled_report(f"pp-femto-{n_femto}", seeds, jobs, log)
        c = rep.collision_probability()
        colls.append(c)
        out.append(
            _approx(
                f"III/femto-{n_femto}/collision",
                "III",
                f"collision at {n_femto} femto cells (absolute)",
                c,
                expected,
                tol_abs=0.0015,
                fmt=_pct,
                gate=False,
            )
        )
    out.append(
        EntryResult(
            "III/monotone",
            "III",
            True,
            _monotone(colls),
            " -> ".join(_pct(c) for c in colls),
            "non-increasing in femto count",
            "collision probability falls as femto cells are added",
        )
    )
    reduction = (colls[0] - colls[3]) / colls[0] if colls[0] else 0.0
    out.append(
        _bound(
            "III/reduction-at-10",
            "III",
            "relative collision reduction with 10 femto cells",
            reduction,
            0.40,
            at_most=False,
            fmt=lambda v: "absent" if v is None else f"{v * 100:.1f}%",
        )
    )
    return out


def _table_iv(seeds, jobs, log) -> list[EntryResult]:
    seeds = seeds or SEEDS_21
    pp = pooled_report("edt-pp", seeds, jobs, log)
    ppe = pooled_report("edt-pp-ebf", seeds, jobs, log)
    return [
        _approx(
            "IV/edt-pp/mean-delay",
            "IV",
            "early-data + parallel mean delay",
            pp.mean_access_delay_ms(),
            5.8,
            tol_rel=0.20,
        ),
        _approx(
            "IV/edt-pp-ebf/mean-delay",
            "IV",
            "early-data + parallel + fast-retry mean delay",
            ppe.mean_access_delay_ms(),
            4.47,
            tol_rel=0.20,
        ),
        _approx(
            "IV/edt-pp/collision",
            "IV",
            "early-data + parallel collision probability",
            pp.collision_probability(),
            0.0004,
            tol_abs=0.0005,
            fmt=_pct,
        ),
        _approx(
            "IV/edt-pp-ebf/collision",
            "IV",
            "early-data + parallel + fast-retry collision probability",
            ppe.collision_probability(),
            0.0001,
            tol_abs=0.0005,
            fmt=_pct,
        ),
        _bound(
            "IV/edt-pp-ebf/p9999",
            "IV",
            "pooled 99.99th percentile delay, all enhancements",
            _p9999(ppe),
            10.0,
            at_most=True,
        ),
        _bound(
            "IV/edt-pp/p9999",
            "IV",
            "pooled 99.99th percentile delay without fast retry",
            _p9999(pp),
            25.0,
            at_most=False,
        ),
    ]


_GRID_CELLS = tuple(
    (scs, sym) for scs in (15, 30, 60, 120) for sym in (7, 4, 2)
)


def _table_v(seeds, jobs, log) -> list[EntryResult]:
    named_seeds = seeds or SEEDS_10
    grid_seeds = seeds or GRID_SEEDS
    rep_60_7 = pooled_report("numerology-60-7", named_seeds, jobs, log)
    rep_15_2 = pooled_report("numerology-15-2", named_seeds, jobs, log)
    out = [
        _approx(
            "V/delay-60khz-7sym",
            "V",
            "mean delay at 60 kHz, 7-symbol slots",
            rep_60_7.mean_access_delay_ms(),
            6.0,
            tol_rel=0.20,
        ),
        _approx(
            "V/delay-15khz-2sym",
            "V",
            "mean delay at 15 kHz, 2-symbol slots",
            rep_15_2.mean_access_delay_ms(),
            6.9,
            tol_rel=0.20,
        ),
    ]
    base = pooled_report("numerology-15-7", grid_seeds, jobs, log)
    base_coll = base.collision_probability()
    grid_mean: dict[tuple[int, int], float] = {}
    max_delta = 0.0
    for scs, sym in _GRID_CELLS:
        rep = pooled_report(f"numerology-{scs}-{sym}", grid_seeds, jobs, log)
        grid_mean[(scs, sym)] = rep.mean_access_delay_ms()
        max_delta = max(
            max_delta, abs(rep.collision_probability() - base_coll)
        )
    out.append(
        _bound(
            "V/collision-invariance",
            "V",
            "collision probability identical across the numerology grid",
            max_delta,
            0.001,
            at_most=True,
            fmt=_pct,
        )
    )
    strict = True
    for sym in (7, 4, 2):
        row = [grid_mean[(scs, sym)] for scs in (15, 30, 60, 120)]
        strict &= all(b < a for a, b in zip(row, row[1:]))
    for scs in (15, 30, 60, 120):
        col = [grid_mean[(scs, sym)] for sym in (7, 4, 2)]
        strict &= all(b < a for a, b in zip(col, col[1:]))
    out.append(
        EntryResult(
            "V/delay-monotone",
            "V",
            True,
            strict,
            "strict" if strict else "violated",
            "strict decrease along rows and columns",
            "mean delay falls with wider spacing and shorter slots",
        )
    )
    return out


def _table_vi(seeds, jobs, log) -> list[EntryResult]:
    seeds = seeds or SEEDS_10
    reps = {
        r: pooled_report(f"rp-r{r}", seeds, jobs, log) for r in (1, 2, 3, 4, 5)
    }
    colls = {r: reps[r].collision_probability("urllc") for r in reps}
    utils = {r: _res_priority_util(reps[r]) for r in reps}
    out = [
        _approx(
            "VI/r1/collision-urllc",
            "VI",
            "priority-class collision with 1 reserved preamble",
            colls[1],
            0.33,
            tol_abs=0.05,
            fmt=_pct,
        ),
        _approx(
            "VI/r1/utilization",
            "VI",
            "reserved-pool utilization with 1 reserved preamble",
            utils[1],
            0.83,
            tol_abs=0.05,
            fmt=_pct,
        ),
        _approx(
            "VI/r3/collision-urllc",
            "VI",
            "priority-class collision with 3 reserved preambles",
            colls[3],
            0.0,
            tol_abs=0.05,
            fmt=_pct,
        ),
        _approx(
            "VI/r3/utilization",
            "VI",
            "reserved-pool utilization with 3 reserved preambles",
            utils[3],
            0.38,
            tol_abs=0.05,
            fmt=_pct,
        ),
    ]
    for r, expected in ((2, 0.57), (4, 0.29), (5, 0.23)):
        out.append(
            _approx(
                f"VI/r{r}/utilization",
                "VI",
                f"reserved-pool utilization with {r} reserved preambles",
                utils[r],
                expected,
                tol_abs=0.05,
                fmt=_pct,
                gate=False,
            )
        )
    coll_seq = [colls[r] for r in (1, 2, 3, 4, 5)]
    util_seq = [utils[r] for r in (1, 2, 3, 4, 5)]
    out.append(
        EntryResult(
            "VI/monotone-collision",
            "VI",
            True,
            _monotone(coll_seq),
            " -> ".join(_pct(c) for c in coll_seq),
            "non-increasing in reservation size",
            "priority collision falls as the reserved pool grows",
        )
    )
    out.append(
        EntryResult(
            "VI/monotone-utilization",
            "VI",
            True,
            all(v is not None for v in util_seq)
            and _monotone([v for v in util_seq if v is not None]),
            " -> ".join(_pct(u) for u in util_seq),
            "non-increasing in reservation size",
            "reserved-pool utilization falls as the pool grows",
        )
    )
    return out


def _table_vii(seeds, jobs, log) -> list[EntryResult]:
    deep_seeds = seeds or SEEDS_DEEP
    side_seeds = seeds or SEEDS_10
    rep = pooled_report("drp-mixed", deep_seeds, jobs, log)
    rp5 = pooled_report("rp5-mixed-dense", side_seeds, jobs, log)
    base = pooled_report("baseline-mixed", side_seeds, jobs, log)
    return [
        _approx(
            "VII/mean-delay",
            "VII",
            "mixed-traffic overall mean delay, all enhancements",
            rep.mean_access_delay_ms(),
            4.5,
            tol_rel=0.20,
        ),
        _approx(
            "VII/mean-delay-baseline",
            "VII",
            "mixed-traffic overall mean delay, no enhancements",
            base.mean_access_delay_ms(),
            26.0,
            tol_rel=0.20,
        ),
        _bound(
            "VII/collision-urllc",
            "VII",
            "priority-class collision, all enhancements",
            rep.collision_probability("urllc"),
            0.0002,
            at_most=True,
            fmt=_pct,
        ),
        _bound(
            "VII/collision-non-urllc",
            "VII",
            "background-class collision, all enhancements",
            rep.collision_probability("non_urllc"),
            0.0002,
            at_most=True,
            fmt=_pct,
        ),
        _approx(
            "VII/utilization-dynamic",
            "VII",
            "reserved-pool utilization under the dynamic pool",
            _res_priority_util(rep),
            0.57,
            tol_abs=0.08,
            fmt=_pct,
        ),
        _approx(
            "VII/utilization-static-r5",
            "VII",
            "reserved-pool utilization under a static 5-preamble pool",
            _res_priority_util(rp5),
            0.23,
            tol_abs=0.08,
            fmt=_pct,
        ),
        _bound(
            "VII/p9999-urllc",
            "VII",
            "pooled priority-class 99.99th percentile delay",
            _p9999(rep, "urllc"),
            10.0,
            at_most=True,
        ),
        _bound(
            "VII/p9999-overall",
            "VII",
            "pooled overall 99.99th percentile delay",
            _p9999(rep),
            16.0,
            at_most=True,
        ),
    ]


_EVALUATORS = {
    "II": _table_ii,
    "FIG6": _fig6,
    "III": _table_iii,
    "IV": _table_iv,
    "V": _table_v,
    "VI": _table_vi,
    "VII": _table_vii,
}


def run_validation(
    tables=None,
    seeds: tuple[int, ...] | None = None,
    jobs: int | None = None,
    log=None,
) -> list[EntryResult]:
    """Evaluate the reference entries; `seeds` overrides every entry list.

    With overridden (short) seed lists the deep-percentile entries report
    insufficient samples and fail; that is intended for smoke runs only.
    """
    chosen = list(tables) if tables else list(TABLES)
    results: list[EntryResult] = []
    for table in chosen:
        key = table.upper()
        if key not in _EVALUATORS:
            raise ValueError(
                f"unknown reference table {table!r}; "
                f"choose from {', '.join(TABLES)}"
            )
        results.extend(_EVALUATORS[key](seeds, jobs, log))
    return results


def gates_passed(results) -> bool:
    return all(r.passed for r in results if r.gate)
