"""The contention engine: per-opportunity random access with enhancements.

All scheduling happens on the reference tick lattice (integer 56ths of a
baseline ms) and never consults the numerology; reported times are scaled
afterwards by the exact rational factor. Two consequences worth knowing:
contention dynamics (and thus collision statistics) are identical across
numerologies at a given seed, and every reported delay is an exact multiple
of the scale factor.

Attempt flow per RA opportunity: eligible devices draw preambles (one copy
to the serving macro, plus one to the covering femto under the parallel
scheme while transmission budget remains), cells with two or more copies
collide, sole copies are detected with probability 1 - exp(-i) where i is
the device's cumulative transmission count, detected devices receive RAR
grants subject to per-subframe capacity, and grant holders either finish
immediately (early-data mode) or run the Msg3/Msg4 HARQ exchange under the
contention-resolution deadline. Every failure path goes through the same
backoff formula and returns at a later opportunity until the transmission
budget runs out.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import DYNAMIC, Scenario
from .rng import RandomSource
from .timebase import ms_to_ticks, time_scale_fraction
from .topology import (
    CellLayout,
    DevicePlacement,
    build_layout,
    path_loss_db,
    place_devices,
    ramped_tx_power_dbm,
    sinr_db,
)
from .traffic import assign_classes, generate_arrivals


@dataclass(frozen=True)
class AccessRecord:
    """Outcome of one device's access procedure (times in reference ticks)."""

    device_id: int
    urllc: bool
    success: bool
    msg1_count: int
    attempt_count: int
    arrival_ticks: int
    first_attempt_ticks: int
    completion_ticks: int | None
    wait_ticks: int | None   # arrival -> start of the successful Msg1
    msg1_ticks: int | None
    msg2_ticks: int | None   # Msg1 end -> RAR delivery
    msg3_ticks: int | None   # RAR -> Msg3 delivered, HARQ repeats included
    msg4_ticks: int | None   # None for early-data successes

    @property
    def total_ticks(self) -> int | None:
        """Arrival-anchored total; equals the component sum for successes."""
        if self.completion_ticks is None:
            return None
        return self.completion_ticks - self.arrival_ticks

    @property
    def delay_ticks(self) -> int | None:
        """The KPI delay: first RA attempt to completion."""
        if self.completion_ticks is None:
            return None
        return self.completion_ticks - self.first_attempt_ticks


@dataclass
class OpportunityLog:
    """Aggregated contention statistics for KPI computation."""

    n_preambles: int
    n_gnbs: int
    n_macro: int
    n_raos: int = 0
    used_cells: int = 0
    collided_cells: int = 0
    used_reserved: int = 0
    used_contention: int = 0
    collided_reserved: int = 0
    used_urllc: int = 0
    used_non_urllc: int = 0
    collided_urllc: int = 0
    collided_non_urllc: int = 0
    used_reserved_urllc: int = 0
    used_reserved_non_urllc: int = 0
    used_contention_urllc: int = 0
    used_contention_non_urllc: int = 0
    sum_r: int = 0
    sum_pool_urllc: int = 0
    sum_pool_non_urllc: int = 0
    prio_macro_r_sum: int = 0
    used_reserved_at_prio_macro: int = 0
    total_msg1_tx: int = 0
    r_max: int = 0


@dataclass
class RunResult:
    records: list[AccessRecord]
    log: OpportunityLog
    scenario: Scenario
    layout: CellLayout
    placement: DevicePlacement
    trace: list[tuple] | None = None

    @property
    def time_scale(self) -> Fraction:
        return time_scale_fraction(self.scenario.numerology)

    @property
    def ms_per_tick(self) -> float:
        return float(self.time_scale / 56)

    def ticks_to_ms(self, ticks: int | None) -> float | None:
        if ticks is None:
            return None
        return float(Fraction(ticks) * self.time_scale / 56)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def run(
    scenario: Scenario,
    *,
    source: RandomSource | None = None,
    placement: DevicePlacement | None = None,
    arrivals: np.ndarray | None = None,
    collect_trace: bool = False,
) -> RunResult:
    """Simulate every device to resolution; deterministic under the seed.

    `source`, `placement` and `arrivals` are injection points for
    deterministic experiments; by default everything derives from the
    scenario seed.
    """
    enh = scenario.enhancements
    edt = "edt" in enh
    ebf = "ebf" in enh
    pp = "pp" in enh
    drp = "drp" in enh
    timing = scenario.timing
    n_pre = scenario.n_preambles
    max_tx = scenario.max_preamble_tx
    max_harq = scenario.max_harq
    harq_fail = scenario.harq_fail_prob

    src = source or RandomSource.from_seed(scenario.seed)
    layout = build_layout(scenario.topology, src.placement)
    n = scenario.n_devices
    if placement is None:
        placement = place_devices(n, layout, src.placement)
    if len(placement) != n:
        raise ValueError("placement size does not match n_devices")
    is_ur = assign_classes(n, scenario.urllc_fraction)
    if arrivals is None:
        arrivals = generate_arrivals(is_ur, scenario.traffic, src.arrivals)
    arrivals = np.asarray(arrivals, dtype=np.int64)
    if arrivals.shape != (n,):
        raise ValueError("arrivals size does not match n_devices")

    ra = ms_to_ticks(timing.ra_period_ms)
    t1 = ms_to_ticks(timing.t_msg1_ms)
    t2 = ms_to_ticks(timing.t_msg2_ms)
    t3 = ms_to_ticks(timing.t_msg3_ms)
    t4 = ms_to_ticks(timing.t_msg4_ms)
    subframe = ms_to_ticks(1.0)
    rar_window = 0 if ebf else ms_to_ticks(timing.rar_window_ms)
    n_slots = max(1, rar_window // subframe) if rar_window else 1
    cr_timer = ms_to_ticks(timing.contention_resolution_timer_ms)
    bi_default = ms_to_ticks(timing.bi_max_ms)
    bi_urllc = 0 if ebf else bi_default
    bi_non = ms_to_ticks(10.0) if ebf else bi_default
    grants_per_sf = (scenario.cce_total // scenario.cce_per_pdcch) * (
        scenario.rar_grants_per_msg
    )
    sib2_samples = max(1, round(timing.sib2_period_ms / timing.ra_period_ms))
    r_static = scenario.reserved_r if scenario.reserved_r != DYNAMIC else 0
    rp_mode = "rp" in enh

    log = OpportunityLog(
        n_preambles=n_pre, n_gnbs=layout.n_gnbs, n_macro=layout.n_macro
    )
    trace: list[tuple] | None = [] if collect_trace else None

    serving = placement.serving_cell
    femto = placement.femto_cell

    tx_count = np.zeros(n, dtype=np.int64)
    attempts = np.zeros(n, dtype=np.int64)
    first_attempt = np.full(n, -1, dtype=np.int64)
    completion = np.full(n, -1, dtype=np.int64)
    failed = np.zeros(n, dtype=bool)
    comp_wait = np.full(n, -1, dtype=np.int64)
    comp_msg2 = np.full(n, -1, dtype=np.int64)
    comp_msg3 = np.full(n, -1, dtype=np.int64)
    comp_msg4 = np.full(n, -1, dtype=np.int64)

    buckets: dict[int, list[int]] = defaultdict(list)
    if n:
        start = np.array([_ceil_div(int(a), ra) for a in arrivals])
        for d in np.argsort(start, kind="stable"):
            buckets[int(start[d])].append(int(d))
        first_rao = int(start.min())
        last_arrival_rao = int(start.max())
    else:
        first_rao = 0
        last_arrival_rao = -1

    drp_window: deque[int] = deque(maxlen=sib2_samples)
    last_resolution = 0

    sinr_gate = scenario.topology.sinr_threshold_db

    def detection_ok(i_val: int, dev: int, gnb: int) -> bool:
        p_detect = 1.0 - math.exp(-float(i_val))
        ok = src.detection.random() < p_detect
        if ok and sinr_gate is not None and gnb < layout.n_macro:
            # Optional gate, off by default; a failed gate behaves exactly
            # like a detection miss.
            pl = path_loss_db(
                max(float(placement.serving_dist[dev]), 1e-9),
                scenario.topology,
            )
            power = ramped_tx_power_dbm(
                pl, int(attempts[dev]), scenario.topology
            )
            ok = sinr_db(power - pl, [], scenario.topology) >= sinr_gate
        return ok

    # The loop covers the whole observation period: first arrival through
    # the last device resolution, in whole RA periods. Trailing opportunity
    # subframes (after the final Msg 1) still count toward KPI denominators
    # and still advance the dynamic-pool window.
    rao_index = first_rao
    while n:
        if not buckets and rao_index > max(
            last_arrival_rao, _ceil_div(last_resolution, ra)
        ):
            break
        devs_list = buckets.pop(rao_index, [])
        t = rao_index * ra
        log.n_raos += 1

        # Reserved-pool size for this opportunity: broadcast value derived
        # from the prior window, never from the current sample.
        if drp:
            if drp_window:
                mean = sum(drp_window) / len(drp_window)
                r_use = min(int(math.floor(mean + 0.5)), n_pre - 1)
            else:
                r_use = 0
        elif rp_mode:
            r_use = r_static
        else:
            r_use = 0
        log.sum_r += r_use
        log.r_max = max(log.r_max, r_use)
        log.sum_pool_urllc += r_use if r_use > 0 else n_pre
        log.sum_pool_non_urllc += (n_pre - r_use) if r_use > 0 else n_pre

        if not devs_list:
            if drp:
                drp_window.append(0)
            rao_index += 1
            continue

        devs = np.array(devs_list, dtype=np.int64)
        newly = first_attempt[devs] < 0
        first_attempt[devs[newly]] = t

        d_ur = is_ur[devs]
        d_retry = attempts[devs] > 0
        if drp:
            prio = d_ur | d_retry
        elif rp_mode:
            prio = d_ur.copy()
        else:
            prio = np.zeros(len(devs), dtype=bool)
        if drp:
            drp_window.append(int(prio.sum()))

        def draw_preambles(mask: np.ndarray) -> np.ndarray:
            out = np.empty(mask.size, dtype=np.int64)
            if r_use > 0:
                n_prio = int(mask.sum())
                if n_prio:
                    out[mask] = src.preamble.integers(0, r_use, n_prio)
                n_rest = mask.size - n_prio
                if n_rest:
                    out[~mask] = src.preamble.integers(r_use, n_pre, n_rest)
            else:
                out[:] = src.preamble.integers(0, n_pre, mask.size)
            return out

        budget = max_tx - tx_count[devs]
        dual = (
            (femto[devs] >= 0) & (budget >= 2)
            if pp
            else np.zeros(len(devs), dtype=bool)
        )

        pre1 = draw_preambles(prio)
        branches: list[tuple[np.ndarray, np.ndarray, np.ndarray, int]] = [
            (np.arange(len(devs)), serving[devs], pre1, 1)
        ]
        if dual.any():
            idx2 = np.nonzero(dual)[0]
            pre2 = draw_preambles(prio[idx2])
            gnb2 = layout.n_macro + femto[devs[idx2]]
            branches.append((idx2, gnb2, pre2, 2))

        base_tx = tx_count[devs].copy()
        n_copies = np.where(dual, 2, 1)
        tx_count[devs] += n_copies
        attempts[devs] += 1
        log.total_msg1_tx += int(n_copies.sum())

        prio_macros = {int(c) for c in serving[devs[prio]]}
        if r_use > 0:
            log.prio_macro_r_sum += r_use * len(prio_macros)

        cellmap: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(
            list
        )
        for idx, gnbs, pres, offset in branches:
            for j in range(idx.size):
                local = int(idx[j])
                cellmap[(int(gnbs[j]), int(pres[j]))].append(
                    (local, int(base_tx[local]) + offset)
                )
            if trace is not None:
                for j in range(idx.size):
                    trace.append(
                        (
                            t,
                            int(devs[idx[j]]),
                            "msg1",
                            int(pres[j]),
                            int(gnbs[j]),
                            int(attempts[devs[idx[j]]]),
                        )
                    )

        # Contention outcome per (gnb, preamble) cell, deterministic order.
        per_gnb_detected: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for (gnb, pre), members in sorted(cellmap.items()):
            in_res = pre < r_use
            any_ur = any(is_ur[devs[m]] for m, _ in members)
            any_non = any(not is_ur[devs[m]] for m, _ in members)
            log.used_cells += 1
            if in_res:
                log.used_reserved += 1
                if gnb in prio_macros:
                    log.used_reserved_at_prio_macro += 1
                if any_ur:
                    log.used_reserved_urllc += 1
                if any_non:
                    log.used_reserved_non_urllc += 1
            else:
                log.used_contention += 1
                if any_ur:
                    log.used_contention_urllc += 1
                if any_non:
                    log.used_contention_non_urllc += 1
            if any_ur:
                log.used_urllc += 1
            if any_non:
                log.used_non_urllc += 1
            if len(members) >= 2:
                log.collided_cells += 1
                if in_res:
                    log.collided_reserved += 1
                if any_ur:
                    log.collided_urllc += 1
                if any_non:
                    log.collided_non_urllc += 1
            else:
                local, i_val = members[0]
                if detection_ok(i_val, int(devs[local]), gnb):
                    per_gnb_detected[gnb].append((pre, local))

        # RAR grants: per gNB, capacity-limited response subframes inside
        # the window; earliest grant wins for dual transmitters, macro on
        # an exact tie (macro gNB indices sort first).
        rar_at: dict[int, tuple[int, int]] = {}
        msg1_end = t + t1
        for gnb in sorted(per_gnb_detected):
            entries = sorted(per_gnb_detected[gnb])
            for rank, (pre, local) in enumerate(entries):
                slot = rank // grants_per_sf
                if slot >= n_slots:
                    continue  # window exhausted: behaves as undetected
                rar_time = msg1_end + t2 + slot * subframe
                key = (rar_time, gnb)
                if local not in rar_at or key < rar_at[local]:
                    rar_at[local] = key

        # Resolve each device: success path or failure path with backoff.
        for local, dev in enumerate(devs):
            dev = int(dev)
            if local in rar_at:
                rar_time, gnb = rar_at[local]
                if trace is not None:
                    trace.append((rar_time, dev, "rar", -1, gnb, 0))
                if edt:
                    completion[dev] = rar_time
                    comp_wait[dev] = t - arrivals[dev]
                    comp_msg2[dev] = rar_time - msg1_end
                    last_resolution = max(last_resolution, rar_time)
                    if trace is not None:
                        trace.append((rar_time, dev, "connected", -1, gnb, 0))
                    continue
                k3 = _harq_transmissions(src.harq, harq_fail, max_harq)
                k4 = (
                    _harq_transmissions(src.harq, harq_fail, max_harq)
                    if k3
                    else 0
                )
                if k3 and k4 and k3 * t3 + k4 * t4 <= cr_timer:
                    done = rar_time + k3 * t3 + k4 * t4
                    completion[dev] = done
                    comp_wait[dev] = t - arrivals[dev]
                    comp_msg2[dev] = rar_time - msg1_end
                    comp_msg3[dev] = k3 * t3
                    comp_msg4[dev] = k4 * t4
                    last_resolution = max(last_resolution, done)
                    if trace is not None:
                        trace.append((done, dev, "connected", -1, gnb, 0))
                    continue
                if not k3:
                    fail_base = rar_time + max_harq * t3
                elif not k4:
                    fail_base = rar_time + k3 * t3 + max_harq * t4
                else:
                    fail_base = rar_time + cr_timer
            else:
                fail_base = msg1_end

            if tx_count[dev] >= max_tx:
                failed[dev] = True
                last_resolution = max(last_resolution, fail_base)
                if trace is not None:
                    trace.append((fail_base, dev, "failed", -1, -1, 0))
                continue
            bi_max = bi_urllc if is_ur[dev] else bi_non
            bi = (
                int(src.backoff.integers(0, bi_max + 1)) if bi_max > 0 else 0
            )
            next_eligible = fail_base + t2 + rar_window + bi
            next_rao = max(_ceil_div(next_eligible, ra), rao_index + 1)
            buckets[next_rao].append(dev)
            if trace is not None:
                trace.append((next_eligible, dev, "backoff", -1, -1, 0))

        rao_index += 1

    records = []
    for dev in range(n):
        success = completion[dev] >= 0
        records.append(
            AccessRecord(
                device_id=dev,
                urllc=bool(is_ur[dev]),
                success=bool(success),
                msg1_count=int(tx_count[dev]),
                attempt_count=int(attempts[dev]),
                arrival_ticks=int(arrivals[dev]),
                first_attempt_ticks=int(first_attempt[dev]),
                completion_ticks=int(completion[dev]) if success else None,
                wait_ticks=int(comp_wait[dev]) if success else None,
                msg1_ticks=t1 if success else None,
                msg2_ticks=int(comp_msg2[dev]) if success else None,
                msg3_ticks=int(comp_msg3[dev])
                if success and comp_msg3[dev] >= 0
                else None,
                msg4_ticks=int(comp_msg4[dev])
                if success and comp_msg4[dev] >= 0
                else None,
            )
        )
    return RunResult(
        records=records,
        log=log,
        scenario=scenario,
        layout=layout,
        placement=placement,
        trace=trace,
    )


def _harq_transmissions(
    rng, fail_prob: float, max_harq: int
) -> int:
    """Transmissions until first delivery, or 0 when the budget exhausts."""
    for k in range(1, max_harq + 1):
        if rng.random() >= fail_prob:
            return k
    return 0
