"""Behavioral models of the three photonic devices.

* ``MrrGateConfig`` / ``gate_eval``: the polymorphic MRR logic gate. Each
  asserted input operand blue-shifts the resonance by ``shift_nm``; the
  programmed resonance ``kappa_nm`` decides which operand count lands on the
  input wavelength, and therefore which gate appears at the drop/through port.
* ``PcaConfig`` / ``PcaState``: the two-capacitor photo-charge accumulator.
* ``NonlinearMrrConfig`` / ``nonlinear_node_step``: single-mode cavity with
  two-photon-absorption loss, used as the reservoir node.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from polyeo.errors import (
    BusyError,
    IndeterminateLevelError,
    InputError,
    RangeError,
    SaturationError,
    StepSizeError,
)
from polyeo.unary import Gate, gate_truth


class Port(enum.Enum):
    DROP = "drop"
    THROUGH = "through"


# gate -> (operand count that must sit on resonance, output port)
_PROGRAM = {
    Gate.NOR: (0, Port.DROP),
    Gate.OR: (0, Port.THROUGH),
    Gate.XOR: (1, Port.DROP),
    Gate.XNOR: (1, Port.THROUGH),
    Gate.AND: (2, Port.DROP),
    Gate.NAND: (2, Port.THROUGH),
}


@dataclass(frozen=True)
class MrrGateConfig:
    """Spectral parameters of the polymorphic gate (all wavelengths in nm)."""

    lambda_in: float = 1550.0
    eta: float = 1549.8
    kappa: float | None = None
    shift_nm: float = 0.4
    fwhm: float = 0.05
    t_hi: float = 0.5
    t_lo: float = 0.2
    il_drop: float = 0.1
    gate: Gate | None = None
    port: Port | None = None

    def __post_init__(self):
        if not 0 < self.t_lo < self.t_hi < 1:
            raise InputError(f"thresholds must satisfy 0 < t_lo < t_hi < 1, got {self.t_lo}, {self.t_hi}")
        if self.fwhm <= 0 or self.shift_nm <= 2 * self.fwhm:
            raise InputError("resonance shift must exceed twice the linewidth")
        if not 0 <= self.il_drop < 1:
            raise InputError("il_drop must be in [0, 1)")


def program_gate(g: Gate, base: MrrGateConfig | None = None) -> MrrGateConfig:
    """Return ``base`` with kappa placed so the designated port realizes ``g``."""
    base = base or MrrGateConfig()
    n_on, port = _PROGRAM[g]
    return replace(base, kappa=base.lambda_in + n_on * base.shift_nm, gate=g, port=port)


def resonance_position(cfg: MrrGateConfig, x, w):
    if cfg.kappa is None:
        raise InputError("gate is not programmed")
    return cfg.kappa - (np.asarray(x, dtype=float) + np.asarray(w, dtype=float)) * cfg.shift_nm


def port_transmission(cfg: MrrGateConfig, lambda_r, lambda_probe=None):
    """Lorentzian drop response and its lossless through-port complement."""
    probe = cfg.lambda_in if lambda_probe is None else lambda_probe
    detune = 2.0 * (np.asarray(probe) - np.asarray(lambda_r)) / cfg.fwhm
    t_drop = (1.0 - cfg.il_drop) / (1.0 + detune**2)
    return t_drop, 1.0 - t_drop


def gate_eval(cfg: MrrGateConfig, g: Gate, x, w):
    """Threshold the programmed port. Works element-wise on bit arrays.

    Raises
    ------
    IndeterminateLevelError
        If any transmission falls strictly between ``t_lo`` and ``t_hi``.
    """
    if cfg.gate is not g:
        raise InputError(f"config is programmed for {cfg.gate}, not {g}")
    t_drop, t_through = port_transmission(cfg, resonance_position(cfg, x, w))
    t = t_drop if cfg.port is Port.DROP else t_through
    hi = t >= cfg.t_hi
    lo = t <= cfg.t_lo
    if not np.all(hi | lo):
        raise IndeterminateLevelError(
            f"{g.name} transmission inside ({cfg.t_lo}, {cfg.t_hi}); spectral parameters unresolvable")
    if np.ndim(hi) == 0:
        return int(hi)
    return hi


def truth_table_check(cfg: MrrGateConfig) -> list[tuple[int, int, int, int]]:
    """Rows ``(x, w, modeled, expected)`` for all four operand pairs."""
    rows = []
    for x in (0, 1):
        for w in (0, 1):
            rows.append((x, w, gate_eval(cfg, cfg.gate, x, w), int(gate_truth(cfg.gate, x, w))))
    return rows


def spectral_sweep(cfg: MrrGateConfig, span_nm: float = 1.2, points: int = 241):
    """Rows ``(x, w, lambda_nm, t_drop, t_through)`` around the input wavelength."""
    grid = np.linspace(cfg.lambda_in - span_nm / 2, cfg.lambda_in + span_nm / 2, points)
    rows = []
    for x in (0, 1):
        for w in (0, 1):
            lam_r = resonance_position(cfg, x, w)
            t_drop, t_through = port_transmission(cfg, lam_r, grid)
            rows.extend(zip([x] * points, [w] * points, grid, t_drop, t_through))
    return rows


def write_spectral_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["x", "w", "lambda_nm", "t_drop", "t_through"])
    for x, w, lam, td, tt in rows:
        writer.writerow([x, w, f"{lam:.6f}", f"{td:.9f}", f"{tt:.9f}"])


# --- photo-charge accumulator ------------------------------------------------

GAMMA_TABLE = (
    (3.0, 39682),
    (5.0, 29761),
    (10.0, 19841),
    (20.0, 14880),
    (30.0, 10822),
    (40.0, 9920),
    (50.0, 8503),
)


def gamma_for_symbol_rate(sr_gsps: float) -> int:
    """Accumulation capacity at a symbol rate in GS/s.

    Tabulated rates return the table entry; rates in between are linearly
    interpolated and floored, so capacity is never overstated.
    """
    rates = [r for r, _ in GAMMA_TABLE]
    if not rates[0] <= sr_gsps <= rates[-1]:
        raise RangeError(f"symbol rate {sr_gsps} GS/s outside [{rates[0]}, {rates[-1]}]")
    for r, g in GAMMA_TABLE:
        if sr_gsps == r:
            return g
    return int(math.floor(np.interp(sr_gsps, rates, [g for _, g in GAMMA_TABLE])))


@dataclass(frozen=True)
class PcaConfig:
    symbol_rate: float = 50.0
    gamma: int = 8503
    volts_per_pulse: float = 1.0
    discharge_intervals: int = 100

    def __post_init__(self):
        if self.gamma < 1:
            raise InputError("gamma must be >= 1")
        if self.discharge_intervals < 0:
            raise InputError("discharge_intervals must be >= 0")

    @classmethod
    def from_symbol_rate(cls, sr_gsps: float, **kw) -> "PcaConfig":
        return cls(symbol_rate=sr_gsps, gamma=gamma_for_symbol_rate(sr_gsps), **kw)


@dataclass
class PcaState:
    active: int = 0
    acc: list = field(default_factory=lambda: [0.0, 0.0])
    used: list = field(default_factory=lambda: [0, 0])
    discharging: int | None = None
    discharge_left: int = 0

    @property
    def other(self) -> int:
        return 1 - self.active


def _tick_discharge(state: PcaState, n: int) -> None:
    if state.discharging is None:
        return
    state.discharge_left -= n
    if state.discharge_left <= 0:
        state.discharging = None
        state.discharge_left = 0


def pca_accumulate(state: PcaState, cfg: PcaConfig, pulse_power_sum: float) -> PcaState:
    """Add one interval's summed pulse power to the active capacitor (in place)."""
    if state.used[state.active] >= cfg.gamma:
        raise SaturationError(f"capacitor C{state.active + 1} saturated after {cfg.gamma} intervals")
    state.acc[state.active] += float(pulse_power_sum)
    state.used[state.active] += 1
    _tick_discharge(state, 1)
    return state


def pca_accumulate_many(state: PcaState, cfg: PcaConfig, interval_powers) -> PcaState:
    """Accumulate a run of intervals at once; same semantics as repeated single steps."""
    p = np.asarray(interval_powers, dtype=float).ravel()
    room = cfg.gamma - state.used[state.active]
    if p.size > room:
        raise SaturationError(
            f"capacitor C{state.active + 1} saturates: {p.size} intervals requested, {room} left")
    state.acc[state.active] += float(p.sum())
    state.used[state.active] += int(p.size)
    _tick_discharge(state, int(p.size))
    return state


def pca_read_and_swap(state: PcaState, cfg: PcaConfig) -> float:
    """Read the active capacitor, start its discharge and switch to the other one."""
    if state.discharging is not None:
        raise BusyError(f"C{state.discharging + 1} still discharging ({state.discharge_left} intervals left)")
    value = state.acc[state.active] * cfg.volts_per_pulse
    old = state.active
    state.active = state.other
    state.acc[state.active] = 0.0
    state.used[state.active] = 0
    if cfg.discharge_intervals > 0:
        state.discharging = old
        state.discharge_left = cfg.discharge_intervals
    else:
        state.acc[old] = 0.0
        state.used[old] = 0
    return value


# --- nonlinear reservoir node ---------------------------------------------

@dataclass(frozen=True)
class NonlinearMrrConfig:
    """Cavity amplitude model ``da/dt = -(1/(2 tau) + alpha |a|^2 + i detune) a + kappa_c u``.

    Times in ps. ``alpha_tpa = 0`` reduces the node to a linear leaky
    integrator with unity DC gain when ``kappa_c = 1/(2 tau)``.
    """

    tau_ph: float = 8.0
    alpha_tpa: float = 0.0625
    kappa_c: float = 0.0625
    detune: float = 0.0

    def __post_init__(self):
        if self.tau_ph <= 0:
            raise InputError("tau_ph must be positive")
        if self.alpha_tpa < 0:
            raise InputError("alpha_tpa must be non-negative")

    @property
    def q_factor(self) -> float:
        return q_from_lifetime(self.tau_ph)

    @classmethod
    def from_q(cls, q: float, wavelength_nm: float = 1550.0, **kw) -> "NonlinearMrrConfig":
        return cls(tau_ph=lifetime_from_q(q, wavelength_nm), **kw)


_C_NM_PER_PS = 299792.458


def lifetime_from_q(q: float, wavelength_nm: float = 1550.0) -> float:
    """Photon lifetime in ps, ``tau = Q / omega``."""
    omega = 2 * math.pi * _C_NM_PER_PS / wavelength_nm
    return q / omega


def q_from_lifetime(tau_ps: float, wavelength_nm: float = 1550.0) -> float:
    return tau_ps * 2 * math.pi * _C_NM_PER_PS / wavelength_nm


def nonlinear_node_step(a, u, dt: float, cfg: NonlinearMrrConfig):
    """One explicit-Euler step. Returns ``(a_next, |a_next|**2)``."""
    if not 0 < dt <= cfg.tau_ph / 4:
        raise StepSizeError(f"dt={dt} ps outside (0, tau_ph/4 = {cfg.tau_ph / 4}]")
    loss = 1.0 / (2.0 * cfg.tau_ph) + cfg.alpha_tpa * np.abs(a) ** 2
    if cfg.detune:
        loss = loss + 1j * cfg.detune
    a_next = a + dt * (-loss * a + cfg.kappa_c * u)
    return a_next, np.abs(a_next) ** 2
