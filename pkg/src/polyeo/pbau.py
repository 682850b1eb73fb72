"""Polymorphic binary arithmetic unit.

B-to-S encoding (``polyeo.unary``) feeds the programmed MRR gate
(``polyeo.device``); the gate output pulses are integrated by the PCA, whose
reading is the unary result. ADD/SUB/MUL bind to OR/XOR/AND.

Latency and energy come from a ``CostModel`` seeded with the measured 6- and
8-bit figures. Widths outside the table fall back to the stream-length
latency model and an energy scaled per stream bit from the nearest
tabulated width.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from polyeo import device
from polyeo.errors import InputError, RangeError
from polyeo.unary import (
    Endianness,
    Gate,
    OperandPrecision,
    even_spread_bits,
    prepare_add,
    prepare_mul,
    prepare_sub,
    thermometer_bits,
)


class PbauMode(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    LOGIC = "logic"
    MODULATOR = "modulator"

    @classmethod
    def parse(cls, name: str) -> "PbauMode":
        try:
            return cls(name.lower())
        except ValueError:
            raise InputError(f"unknown PBAU mode {name!r}") from None


ARITH_GATE = {PbauMode.ADD: Gate.OR, PbauMode.SUB: Gate.XOR, PbauMode.MUL: Gate.AND}

# (mode, B) -> (latency_ns, energy_pJ)
TABLE = {
    (PbauMode.ADD, 6): (5.32, 16.1),
    (PbauMode.SUB, 6): (2.74, 6.8),
    (PbauMode.MUL, 6): (2.76, 10.2),
    (PbauMode.ADD, 8): (20.51, 60.1),
    (PbauMode.SUB, 8): (10.27, 23.6),
    (PbauMode.MUL, 8): (10.29, 36.2),
}

PBAU_AREA_MM2 = 0.0012
PBAU_ENERGY_8BIT_PJ = 36.2


def stream_length(mode: PbauMode, p: OperandPrecision) -> int:
    if mode is PbauMode.ADD:
        return p.add_length
    if mode in (PbauMode.SUB, PbauMode.MUL):
        return p.sub_length
    raise InputError(f"{mode.name} has no unary stream length")


@dataclass(frozen=True)
class CostModel:
    table: dict = field(default_factory=lambda: dict(TABLE))
    area_mm2: float = PBAU_AREA_MM2
    sr_stream_gsps: float = 25.0
    t_ro_ns: float = 0.03

    def model_latency(self, mode: PbauMode, p: OperandPrecision) -> float:
        return stream_length(mode, p) / self.sr_stream_gsps + self.t_ro_ns

    def latency(self, mode: PbauMode, p: OperandPrecision) -> float:
        hit = self.table.get((mode, p.bits))
        return hit[0] if hit else self.model_latency(mode, p)

    def energy(self, mode: PbauMode, p: OperandPrecision) -> float:
        hit = self.table.get((mode, p.bits))
        if hit:
            return hit[1]
        widths = sorted(b for m, b in self.table if m is mode)
        if not widths:
            raise InputError(f"no energy calibration for {mode.name}")
        nearest = min(widths, key=lambda b: (abs(b - p.bits), b))
        per_bit = self.table[(mode, nearest)][1] / stream_length(mode, OperandPrecision(nearest))
        return per_bit * stream_length(mode, p)


def latency_model(mode: PbauMode, p: OperandPrecision, sr_stream_gsps: float = 25.0,
                  t_ro_ns: float = 0.03) -> float:
    return CostModel(sr_stream_gsps=sr_stream_gsps, t_ro_ns=t_ro_ns).model_latency(mode, p)


@dataclass(frozen=True)
class PbauReport:
    result: int
    latency_ns: float
    energy_pJ: float


class Pbau:
    """One PBAU: a gate config reprogrammed per operation plus its PCA."""

    def __init__(self, base: device.MrrGateConfig | None = None,
                 pca: device.PcaConfig | None = None, cost: CostModel | None = None):
        self.base = base or device.MrrGateConfig()
        self.cost = cost or CostModel()
        self.pca_cfg = pca or device.PcaConfig.from_symbol_rate(self.cost.sr_stream_gsps)
        self._programs = {g: device.program_gate(g, self.base) for g in Gate}

    def gate_output(self, g: Gate, a_bits, b_bits):
        return device.gate_eval(self._programs[g], g, a_bits, b_bits)

    def execute(self, mode: PbauMode, x: int, w: int, p: OperandPrecision) -> PbauReport:
        if mode not in ARITH_GATE:
            raise InputError(f"execute supports ADD/SUB/MUL, got {mode.name}")
        prep = {PbauMode.ADD: prepare_add, PbauMode.SUB: prepare_sub, PbauMode.MUL: prepare_mul}[mode]
        a, b = prep(x, w, p)
        out = self.gate_output(ARITH_GATE[mode], a.bits, b.bits)
        # regenerated output pulses are unit power; one symbol per PCA interval
        state = device.PcaState()
        device.pca_accumulate_many(state, self.pca_cfg, out.astype(float))
        reading = device.pca_read_and_swap(state, self.pca_cfg)
        result = int(round(reading / self.pca_cfg.volts_per_pulse))
        return PbauReport(result, self.cost.latency(mode, p), self.cost.energy(mode, p))

    def execute_batch(self, mode: PbauMode, xs, ws, p: OperandPrecision) -> np.ndarray:
        """Vectorized results for operand arrays (PCA readout is the popcount)."""
        a, b = prepared_bits(mode, xs, ws, p)
        return self.gate_output(ARITH_GATE[mode], a, b).sum(axis=-1)


def pbau_execute(mode: PbauMode, x: int, w: int, p: OperandPrecision,
                 unit: Pbau | None = None) -> PbauReport:
    return (unit or Pbau()).execute(mode, x, w, p)


def prepared_bits(mode: PbauMode, xs, ws, p: OperandPrecision):
    xs = np.asarray(xs)
    ws = np.asarray(ws)
    if np.any(xs < 0) or np.any(xs >= p.levels) or np.any(ws < 0) or np.any(ws >= p.levels):
        raise RangeError(f"operands must lie in [0, {p.levels})")
    if mode is PbauMode.ADD:
        L = p.add_length
        return thermometer_bits(xs, L, Endianness.LEFT), thermometer_bits(ws, L, Endianness.RIGHT)
    if mode is PbauMode.SUB:
        L = p.sub_length
        return thermometer_bits(xs, L, Endianness.RIGHT), thermometer_bits(ws, L, Endianness.RIGHT)
    if mode is PbauMode.MUL:
        L = p.mul_length
        return thermometer_bits(xs, L, Endianness.RIGHT), even_spread_bits(ws, L)
    raise InputError(f"no operand preparation for {mode.name}")


def exact_result(mode: PbauMode, xs, ws, p: OperandPrecision) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ws = np.asarray(ws, dtype=float)
    if mode is PbauMode.ADD:
        return xs + ws
    if mode is PbauMode.SUB:
        return np.abs(xs - ws)
    return xs * ws / p.levels


@dataclass(frozen=True)
class SweepResult:
    mode: PbauMode
    bits: int
    mae: float
    max_err: float
    latency_ns: float
    energy_pJ: float


def mae_sweep(mode: PbauMode, p: OperandPrecision, unit: Pbau | None = None,
              chunk: int = 4096) -> SweepResult:
    """Exhaustive error over all ``(x, w)`` pairs.

    ``mae`` is in stream-normalized units (error divided by ``2**B``);
    ``max_err`` is the worst per-pair error in counts.
    """
    if p.bits > 10:
        raise RangeError("exhaustive sweep limited to B <= 10")
    unit = unit or Pbau()
    n = p.levels
    total = 0.0
    worst = 0.0
    flat = np.arange(n * n)
    for start in range(0, flat.size, chunk):
        idx = flat[start:start + chunk]
        xs, ws = idx // n, idx % n
        err = np.abs(unit.execute_batch(mode, xs, ws, p) - exact_result(mode, xs, ws, p))
        total += err.sum()
        worst = max(worst, float(err.max()))
    mae = total / (n * n) / n
    return SweepResult(mode, p.bits, mae, worst, unit.cost.latency(mode, p), unit.cost.energy(mode, p))


SWEEP_COLUMNS = ["mode", "B", "MAE", "max_err", "latency_ns", "energy_pJ"]


def write_sweep_csv(results, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in results:
        writer.writerow([r.mode.value, r.bits, f"{r.mae:.6g}", f"{r.max_err:.6g}",
                         f"{r.latency_ns:.4g}", f"{r.energy_pJ:.4g}"])


def relative_latency_gap(cost: CostModel | None = None) -> dict:
    """Relative difference between the lookup and the stream-length model per table cell."""
    cost = cost or CostModel()
    out = {}
    for (mode, bits), (lat, _) in cost.table.items():
        model = cost.model_latency(mode, OperandPrecision(bits))
        out[(mode, bits)] = abs(model - lat) / lat
    return out

