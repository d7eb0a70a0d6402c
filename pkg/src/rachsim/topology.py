"""Cell layout, device placement, and the radio abstraction.

Three macro cells sit at the corners of an equilateral triangle with side
2 R cos(30 deg) so neighboring coverage discs meet the way a hexagonal grid
does; small cells are scattered uniformly over the union of the macro discs.
Path loss follows the log-distance model; transmit power ramps per attempt
up to a cap. SINR is a diagnostic: it is computed on request and can
optionally gate detection, but does not by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import TopologyConfig


@dataclass(frozen=True)
class CellLayout:
    macro_centers: np.ndarray  # (n_macro, 2) meters
    femto_centers: np.ndarray  # (n_femto, 2) meters
    cell_radius_m: float
    femto_radius_m: float

    @property
    def n_macro(self) -> int:
        return len(self.macro_centers)

    @property
    def n_femto(self) -> int:
        return len(self.femto_centers)

    @property
    def n_gnbs(self) -> int:
        """Base stations able to receive preambles: macros then femtos."""
        return self.n_macro + self.n_femto


@dataclass(frozen=True)
class DevicePlacement:
    positions: np.ndarray      # (n, 2) meters
    serving_cell: np.ndarray   # (n,) macro index, nearest center
    femto_cell: np.ndarray     # (n,) femto index or -1 when uncovered
    serving_dist: np.ndarray   # (n,) meters to serving center

    def __len__(self) -> int:
        return len(self.positions)


def _macro_centers(cfg: TopologyConfig) -> np.ndarray:
    spacing = 2.0 * cfg.cell_radius_m * math.cos(math.pi / 6)
    pts = [(0.0, 0.0)]
    if cfg.n_macro_cells >= 2:
        pts.append((spacing, 0.0))
    if cfg.n_macro_cells >= 3:
        pts.append((spacing / 2.0, spacing * math.sin(math.pi / 3)))
    if cfg.n_macro_cells > 3:
        # Extend along the first row; the reference scenarios use <= 3.
        for k in range(3, cfg.n_macro_cells):
            pts.append((spacing * (k - 1), 0.0))
    return np.array(pts[: cfg.n_macro_cells], dtype=float)


def build_layout(cfg: TopologyConfig, rng: np.random.Generator) -> CellLayout:
    """Place macro centers deterministically and femtos uniformly in range.

    Femto centers are rejection-sampled over the union of macro discs, so
    density is uniform regardless of disc overlap.
    """
    centers = _macro_centers(cfg)
    femtos = np.empty((0, 2), dtype=float)
    if cfg.n_femto_cells > 0:
        lo = centers.min(axis=0) - cfg.cell_radius_m
        hi = centers.max(axis=0) + cfg.cell_radius_m
        out = []
        while len(out) < cfg.n_femto_cells:
            cand = rng.uniform(lo, hi, size=(4 * cfg.n_femto_cells, 2))
            d2 = ((cand[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            inside = (d2 <= cfg.cell_radius_m**2).any(axis=1)
            out.extend(cand[inside])
        femtos = np.array(out[: cfg.n_femto_cells], dtype=float)
    return CellLayout(
        macro_centers=centers,
        femto_centers=femtos,
        cell_radius_m=cfg.cell_radius_m,
        femto_radius_m=cfg.femto_radius_m,
    )


def place_devices(
    n: int, layout: CellLayout, rng: np.random.Generator
) -> DevicePlacement:
    """Uniform placement in a uniformly chosen macro disc.

    Serving cell is the nearest macro center (which near disc overlap can
    differ from the disc a device was dropped into); femto coverage is the
    nearest femto within its radius, -1 otherwise.
    """
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return DevicePlacement(
            positions=np.empty((0, 2)),
            serving_cell=empty,
            femto_cell=empty.copy(),
            serving_dist=np.empty(0),
        )
    home = rng.integers(0, layout.n_macro, size=n)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    radius = layout.cell_radius_m * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    offsets = np.stack(
        [radius * np.cos(theta), radius * np.sin(theta)], axis=1
    )
    positions = layout.macro_centers[home] + offsets

    d_macro = np.linalg.norm(
        positions[:, None, :] - layout.macro_centers[None, :, :], axis=2
    )
    serving = d_macro.argmin(axis=1)
    serving_dist = d_macro[np.arange(n), serving]

    femto = np.full(n, -1, dtype=np.int64)
    if layout.n_femto > 0:
        d_femto = np.linalg.norm(
            positions[:, None, :] - layout.femto_centers[None, :, :], axis=2
        )
        nearest = d_femto.argmin(axis=1)
        within = d_femto[np.arange(n), nearest] <= layout.femto_radius_m
        femto[within] = nearest[within]
    return DevicePlacement(
        positions=positions,
        serving_cell=serving.astype(np.int64),
        femto_cell=femto,
        serving_dist=serving_dist,
    )


def path_loss_db(d_m: float, cfg: TopologyConfig) -> float:
    """Log-distance path loss; distances below the reference are clamped."""
    if d_m <= 0:
        raise ValueError("distance must be positive")
    d_eff = max(d_m, cfg.pl_ref_dist_m)
    return cfg.pl_ref_db + 10.0 * cfg.pl_exponent * math.log10(
        d_eff / cfg.pl_ref_dist_m
    )


def ramped_tx_power_dbm(pl_db: float, attempt: int, cfg: TopologyConfig) -> float:
    """Open-loop power target with per-attempt ramping, capped at p_max."""
    if attempt < 1:
        raise ValueError("attempt count starts at 1")
    return min(
        cfg.p_max_dbm,
        pl_db + cfg.p_init_target_dbm + (attempt - 1) * cfg.ramp_step_db,
    )


def sinr_db(
    rx_power_dbm: float,
    interferer_rx_dbm: list[float],
    cfg: TopologyConfig,
) -> float:
    """SINR at a receiver given received signal and interferer powers.

    Interference adds linearly in mW; same-cell transmitters are excluded
    by the caller (orthogonal signatures within a cell).
    """
    noise_mw = 10.0 ** (cfg.noise_power_dbm / 10.0)
    interference_mw = sum(10.0 ** (p / 10.0) for p in interferer_rx_dbm)
    signal_mw = 10.0 ** (rx_power_dbm / 10.0)
    return 10.0 * math.log10(signal_mw / (noise_mw + interference_mw))


def received_power_dbm(
    tx_power_dbm: float, distance_m: float, cfg: TopologyConfig
) -> float:
    return tx_power_dbm - path_loss_db(distance_m, cfg)


def sinr_for_device(
    device_idx: int,
    tx_power_dbm: float,
    concurrent: list[tuple[int, float]],
    placement: DevicePlacement,
    layout: CellLayout,
    cfg: TopologyConfig,
) -> float:
    """Uplink SINR of one device at its serving station.

    `concurrent` lists (device index, tx power) transmitting in the same
    subframe; only devices served by other cells interfere (same-cell
    signatures are orthogonal).
    """
    serving = int(placement.serving_cell[device_idx])
    center = layout.macro_centers[serving]
    rx = tx_power_dbm - path_loss_db(
        float(placement.serving_dist[device_idx]), cfg
    )
    interferer_rx = []
    for other, power in concurrent:
        if other == device_idx:
            continue
        if int(placement.serving_cell[other]) == serving:
            continue
        d = float(np.linalg.norm(placement.positions[other] - center))
        interferer_rx.append(power - path_loss_db(max(d, 1e-9), cfg))
    return sinr_db(rx, interferer_rx, cfg)


def femto_coverage_fraction(placement: DevicePlacement) -> float:
    """Measured fraction of devices with a usable secondary station."""
    if len(placement) == 0:
        return 0.0
    return float((placement.femto_cell >= 0).mean())
