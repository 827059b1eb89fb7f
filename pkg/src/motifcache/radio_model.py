"""Link-level radio model: path loss, Rayleigh fading, SINR and data rate.

All quantities are linear (watts, Hz, unitless SINR); dB / dBm conversion
happens only at the configuration boundary.  The base station transmitter is
identified by :data:`BS_ID`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

BS_ID = -1

__all__ = [
    "BS_ID",
    "ChannelParams",
    "FadingDraw",
    "LinkState",
    "GainTable",
    "dbm_to_watt",
    "watt_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "channel_gain",
    "rate",
    "sinr_v2v",
    "sinr_bs",
    "feasibility",
    "default_proximity_cutoff",
]


def dbm_to_watt(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt / 1e-3)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


@dataclass(frozen=True)
class ChannelParams:
    """Radio parameters, all linear.

    Defaults correspond to: path-loss exponent 3, noise -94 dBm, bandwidth
    75 MHz, vehicle transmit power 20 dBm, base-station power 20 W, SINR
    target 10 dB, Rayleigh fading on.
    """

    alpha: float = 3.0
    sigma2: float = dbm_to_watt(-94.0)
    omega: float = 75e6
    p_max: float = dbm_to_watt(20.0)
    p_bs: float = 20.0
    gamma_bar: float = db_to_linear(10.0)
    rayleigh: bool = True
    #: Reference distance in meters below which path loss stops growing; keeps
    #: the far-field d**-alpha law from diverging for near-coincident antennas.
    d_ref: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError(f"path-loss exponent must be positive, got {self.alpha}")
        for name in ("sigma2", "omega", "p_max", "p_bs", "gamma_bar", "d_ref"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class FadingDraw:
    """A small-scale fading realization: unit-mean exponential power gain."""

    eta: float = 1.0

    def __post_init__(self) -> None:
        if self.eta < 0:
            raise ValueError(f"fading power gain must be non-negative, got {self.eta}")

    @classmethod
    def sample(cls, rng: np.random.Generator, rayleigh: bool = True) -> "FadingDraw":
        return cls(float(rng.exponential(1.0))) if rayleigh else cls(1.0)


UNIT_FADING = FadingDraw(1.0)


def channel_gain(d: float, params: ChannelParams, fading: FadingDraw = UNIT_FADING) -> float:
    """Linear channel power gain ``eta * max(d, d_ref)**-alpha`` for ``d`` meters.

    Co-located transceivers (``d <= 0``) are invalid input; separations below
    the reference distance are clamped to it rather than extrapolating the
    far-field law.
    """
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return fading.eta * max(d, params.d_ref) ** (-params.alpha)


def rate(gamma: float, omega: float) -> float:
    """Achievable rate in bit/s for SINR ``gamma`` over bandwidth ``omega`` Hz."""
    if gamma < 0:
        raise ValueError(f"SINR must be non-negative, got {gamma}")
    return omega * math.log2(1.0 + gamma)


@dataclass(frozen=True)
class LinkState:
    """One transmitter-receiver pair in an evaluation epoch.

    ``gain`` is the link's own channel gain; ``active`` marks whether the
    link transmits (and therefore interferes with others).
    """

    tx: int
    rx: int
    power: float
    gain: float
    active: bool = True

    def __post_init__(self) -> None:
        if self.power <= 0:
            raise ValueError(f"transmit power must be positive, got {self.power}")
        if self.gain < 0:
            raise ValueError(f"channel gain must be non-negative, got {self.gain}")
        if self.tx == self.rx:
            raise ValueError(f"link cannot loop back to its transmitter ({self.tx})")


class GainTable:
    """Frozen pairwise channel gains for one evaluation epoch.

    Holds the gain from every transmitter (vehicles and the base station) to
    every vehicle, with one independent fading draw per ordered pair.  Both
    placement strategies of a paired comparison must share one table so they
    see identical fading.
    """

    def __init__(self, gains: Mapping[tuple[int, int], float]):
        self._gains = dict(gains)

    def gain(self, tx: int, rx: int) -> float:
        try:
            return self._gains[(tx, rx)]
        except KeyError:
            raise KeyError(f"no gain recorded for link {tx} -> {rx}")

    @classmethod
    def from_positions(
        cls,
        positions: Mapping[int, tuple[float, float]],
        bs_position: tuple[float, float],
        params: ChannelParams,
        seed: int | Sequence[int],
        ring_length: float | None = None,
    ) -> "GainTable":
        """Build gains from 2-D positions.

        Fading is one vectorized unit-exponential draw over the (1 + n) x n
        matrix of transmitters (base station first, then vehicles in id
        order) by receivers in id order, so the table is reproducible from
        the seed alone.  ``ring_length`` treats the x axis as circular for
        vehicle-to-vehicle separations (wrap-around road); base-station
        distances are always planar.
        """
        rng = np.random.default_rng(seed)
        vids = sorted(positions)
        n = len(vids)
        xy = np.array([positions[v] for v in vids], dtype=float)
        bs = np.asarray(bs_position, dtype=float)
        d_bs = np.hypot(*(xy - bs).T)
        diff = xy[:, None, :] - xy[None, :, :]
        dx = np.abs(diff[..., 0])
        if ring_length is not None:
            dx = np.minimum(dx, ring_length - dx)
        d_v2v = np.hypot(dx, diff[..., 1])
        dist = np.vstack([d_bs[None, :], d_v2v])
        if params.rayleigh:
            eta = rng.exponential(1.0, size=dist.shape)
        else:
            eta = np.ones_like(dist)
        table = eta * np.maximum(dist, params.d_ref) ** (-params.alpha)
        gains: dict[tuple[int, int], float] = {}
        for j, rx in enumerate(vids):
            gains[(BS_ID, rx)] = float(table[0, j])
        for i, tx in enumerate(vids):
            for j, rx in enumerate(vids):
                if tx != rx:
                    gains[(tx, rx)] = float(table[i + 1, j])
        return cls(gains)


def _bs_interference(rx: int, bs_links: Sequence[LinkState], gains: GainTable) -> float:
    """Base-station power landing on ``rx`` from downlinks serving other vehicles."""
    total = 0.0
    for l in bs_links:
        if l.active and l.rx != rx:
            total += l.power * gains.gain(BS_ID, rx)
    return total


def _v2v_interference(rx: int, v2v_links: Sequence[LinkState], gains: GainTable) -> float:
    """Vehicle transmit power landing on ``rx`` from links serving other vehicles."""
    total = 0.0
    for l in v2v_links:
        if l.active and l.rx != rx:
            total += l.power * gains.gain(l.tx, rx)
    return total


def sinr_v2v(
    link: LinkState,
    bs_links: Sequence[LinkState],
    v2v_links: Sequence[LinkState],
    params: ChannelParams,
    gains: GainTable,
) -> float:
    """SINR at a vehicle served by another vehicle.

    Interference comes from active base-station downlinks to other vehicles
    and from active vehicle-to-vehicle links toward other receivers; the
    link's own transmission is excluded via the receiver check.
    """
    i_bs = _bs_interference(link.rx, bs_links, gains)
    i_v2v = _v2v_interference(link.rx, v2v_links, gains)
    return link.power * link.gain / (i_bs + i_v2v + params.sigma2)


def sinr_bs(
    link: LinkState,
    v2v_links: Sequence[LinkState],
    params: ChannelParams,
    gains: GainTable,
) -> float:
    """SINR of a base-station downlink; only vehicle links interfere with it."""
    i_v2v = _v2v_interference(link.rx, v2v_links, gains)
    return link.power * link.gain / (i_v2v + params.sigma2)


def _link_sinr(
    link: LinkState,
    bs_links: Sequence[LinkState],
    v2v_links: Sequence[LinkState],
    params: ChannelParams,
    gains: GainTable,
) -> float:
    if link.tx == BS_ID:
        return sinr_bs(link, v2v_links, params, gains)
    return sinr_v2v(link, bs_links, v2v_links, params, gains)


def feasibility(
    links: Sequence[LinkState],
    params: ChannelParams,
    gains: GainTable,
) -> list[LinkState]:
    """Resolve which links stay active, in two passes.

    Pass 1 keeps links whose interference-free SNR meets the target; pass 2
    recomputes every surviving link's SINR against the pass-1 interferer set
    and clears those that fall below the target.  A link never comes back
    once cleared.  Vehicle transmit power above the cap is rejected.
    """
    for l in links:
        if l.tx != BS_ID and l.power > params.p_max * (1 + 1e-12):
            raise ValueError(
                f"vehicle link {l.tx} -> {l.rx} exceeds the power cap "
                f"({l.power} > {params.p_max} W)"
            )
    pass1 = [
        replace(l, active=(l.power * l.gain / params.sigma2 >= params.gamma_bar))
        for l in links
    ]
    bs1 = [l for l in pass1 if l.tx == BS_ID]
    v2v1 = [l for l in pass1 if l.tx != BS_ID]
    final = []
    for l in pass1:
        if not l.active:
            final.append(l)
            continue
        gamma = _link_sinr(l, bs1, v2v1, params, gains)
        final.append(replace(l, active=gamma >= params.gamma_bar))
    return final


def default_proximity_cutoff(params: ChannelParams) -> float:
    """Distance at which the interference-free median-fading SNR hits the target.

    Used as the default radius inside which vehicle pairs exchange data.
    """
    eta_med = math.log(2.0) if params.rayleigh else 1.0
    return (params.p_max * eta_med / (params.sigma2 * params.gamma_bar)) ** (
        1.0 / params.alpha
    )
