"""CEONA accelerator: CoPU/CoPE functional model and analytical performance.

A CoPU has ``M`` CoPEs, each holding ``N`` wavelength-parallel PBAUs that
feed one PCA (two for signed integer mode). Mapping is output-stationary:
every CoPE produces one output value per pass, consuming
``ceil(S_dot / N)`` accumulation intervals.

* BNN mode: PBAUs are XNOR gates; the PCA count ``P`` gives the bipolar dot
  product ``2P - S_dot``.
* INT(B) mode: PBAUs are AND gates on unary streams; per-element sign
  products steer each count into a positive or a negative PCA.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from polyeo import device, link_budget
from polyeo.errors import CapacityError, FormatError, InputError, RangeError, ShapeError
from polyeo.pbau import CostModel, Pbau, PbauMode
from polyeo.unary import Gate, OperandPrecision

BNN = "bnn"

# per-PBAU energy of one binary symbol: 8-bit MUL energy spread over its stream
BNN_SYMBOL_ENERGY_PJ = 36.2 / 256


@dataclass(frozen=True)
class CopuConfig:
    n: int = 64
    m: int = 64
    sr_gsps: float = 50.0
    mode: str = BNN
    bits: int = 8
    gamma: int | None = None
    readout_intervals: int = 1
    peripheral_area_mm2: float = 1.0
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InputError("N and M must be >= 1")
        if self.mode not in (BNN, "int"):
            raise InputError(f"mode must be 'bnn' or 'int', got {self.mode!r}")
        if self.sr_gsps <= 0:
            raise InputError("symbol rate must be positive")
        if self.gamma is None:
            object.__setattr__(self, "gamma", device.gamma_for_symbol_rate(self.sr_gsps))
        if self.gamma < 1:
            raise InputError("gamma must be >= 1")

    @property
    def precision(self) -> OperandPrecision:
        return OperandPrecision(self.bits)

    @property
    def interval_ns(self) -> float:
        if self.mode == BNN:
            return 1.0 / self.sr_gsps
        return 2**self.bits / self.sr_gsps

    @property
    def pca(self) -> device.PcaConfig:
        return device.PcaConfig(symbol_rate=self.sr_gsps, gamma=self.gamma)


def _check_capacity(s_dot: int, cfg: CopuConfig, where: str = "dot product") -> int:
    intervals = -(-s_dot // cfg.n)
    if intervals > cfg.gamma:
        raise CapacityError(
            f"{where}: {intervals} intervals (S_dot={s_dot}, N={cfg.n}) exceed PCA capacity {cfg.gamma}")
    return intervals


def _interval_sums(values: np.ndarray, n: int) -> np.ndarray:
    pad = (-values.size) % n
    return np.pad(values.astype(float), (0, pad)).reshape(-1, n).sum(axis=1)


# --- CEONA-B -------------------------------------------------------------------

def ceona_b_dot(i_bits, w_bits, cfg: CopuConfig, unit: Pbau | None = None) -> tuple[int, int]:
    """XNOR-bitcount on one CoPE. Returns ``(bitcount, bipolar_dot)``."""
    i_bits = np.asarray(i_bits, dtype=bool).ravel()
    w_bits = np.asarray(w_bits, dtype=bool).ravel()
    if i_bits.size != w_bits.size:
        raise ShapeError(f"length mismatch: {i_bits.size} vs {w_bits.size}")
    s_dot = i_bits.size
    _check_capacity(s_dot, cfg)
    unit = unit or Pbau()
    xnor = unit.gate_output(Gate.XNOR, i_bits, w_bits)
    state = device.PcaState()
    pca = cfg.pca
    device.pca_accumulate_many(state, pca, _interval_sums(xnor, cfg.n))
    count = int(round(device.pca_read_and_swap(state, pca) / pca.volts_per_pulse))
    return count, 2 * count - s_dot


def ceona_b_dot_batch(i_bits, w_bits, cfg: CopuConfig, unit: Pbau | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``ceona_b_dot`` for 2-D bit arrays of shape ``(rows, S_dot)``."""
    i_bits = np.asarray(i_bits, dtype=bool)
    w_bits = np.asarray(w_bits, dtype=bool)
    if i_bits.shape != w_bits.shape or i_bits.ndim != 2:
        raise ShapeError(f"expected matching 2-D arrays, got {i_bits.shape} and {w_bits.shape}")
    s_dot = i_bits.shape[1]
    _check_capacity(s_dot, cfg)
    xnor = (unit or Pbau()).gate_output(Gate.XNOR, i_bits, w_bits)
    counts = xnor.sum(axis=1)
    return counts, 2 * counts - s_dot


# --- CEONA-I -------------------------------------------------------------------

@dataclass(frozen=True)
class SignedOperand:
    sign: int
    magnitude: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InputError("sign must be +1 or -1")
        if self.magnitude < 0:
            raise RangeError("magnitude must be non-negative")
        if self.magnitude == 0 and self.sign == -1:
            object.__setattr__(self, "sign", 1)

    @classmethod
    def from_int(cls, v: int) -> "SignedOperand":
        return cls(-1 if v < 0 else 1, abs(int(v)))

    def __int__(self):
        return self.sign * self.magnitude


def _as_signed_array(values) -> np.ndarray:
    return np.array([int(v) for v in values], dtype=np.int64)


def ceona_i_dot(x, w, bits: int, cfg: CopuConfig, unit: Pbau | None = None,
                detail: bool = False):
    """Signed unary dot product on one CoPE.

    ``x`` and ``w`` are sequences of ints or ``SignedOperand``. Each
    magnitude product is the AND-gate count ``ceil(|x||w| / 2**B)``; its sign
    selects the positive or the negative PCA. Returns ``pos - neg`` (or
    ``(result, pos, neg)`` with ``detail=True``).
    """
    xs = _as_signed_array(x)
    ws = _as_signed_array(w)
    if xs.size != ws.size:
        raise ShapeError(f"length mismatch: {xs.size} vs {ws.size}")
    p = OperandPrecision(bits)
    _check_capacity(xs.size, cfg)
    unit = unit or Pbau()
    counts = unit.execute_batch(PbauMode.MUL, np.abs(xs), np.abs(ws), p)
    negative = (xs < 0) != (ws < 0)
    pca = cfg.pca
    pos_state, neg_state = device.PcaState(), device.PcaState()
    # sign-controlled filters route each wavelength to exactly one PCA per window
    device.pca_accumulate_many(pos_state, pca, _interval_sums(np.where(negative, 0, counts), cfg.n))
    device.pca_accumulate_many(neg_state, pca, _interval_sums(np.where(negative, counts, 0), cfg.n))
    pos = int(round(device.pca_read_and_swap(pos_state, pca) / pca.volts_per_pulse))
    neg = int(round(device.pca_read_and_swap(neg_state, pca) / pca.volts_per_pulse))
    if detail:
        return pos - neg, pos, neg
    return pos - neg


def ceona_i_dot_batch(x, w, bits: int, cfg: CopuConfig, unit: Pbau | None = None) -> np.ndarray:
    """Row-wise ``ceona_i_dot`` for signed integer arrays of shape ``(rows, S_dot)``."""
    xs = np.asarray(x, dtype=np.int64)
    ws = np.asarray(w, dtype=np.int64)
    if xs.shape != ws.shape or xs.ndim != 2:
        raise ShapeError(f"expected matching 2-D arrays, got {xs.shape} and {ws.shape}")
    p = OperandPrecision(bits)
    _check_capacity(xs.shape[1], cfg)
    counts = (unit or Pbau()).execute_batch(PbauMode.MUL, np.abs(xs), np.abs(ws), p)
    negative = (xs < 0) != (ws < 0)
    return np.where(negative, 0, counts).sum(axis=1) - np.where(negative, counts, 0).sum(axis=1)


def exact_scaled_dot(x, w, bits: int) -> float:
    xs = _as_signed_array(x).astype(float)
    ws = _as_signed_array(w).astype(float)
    return float(np.dot(xs, ws) / 2**bits)


# --- workload mapping ---------------------------------------------------------

@dataclass(frozen=True)
class LayerWorkload:
    kind: str
    dims: tuple
    name: str = ""

    def __post_init__(self):
        expected = {"conv": 6, "fc": 2}
        if self.kind not in expected:
            raise FormatError(f"unknown layer kind {self.kind!r}")
        if len(self.dims) != expected[self.kind]:
            raise FormatError(f"{self.kind} needs {expected[self.kind]} dimensions, got {len(self.dims)}")
        if any(int(d) < 1 for d in self.dims):
            raise RangeError(f"layer dimensions must be >= 1: {self.dims}")

    @classmethod
    def conv(cls, k, c, r, s, h_out, w_out, name=""):
        return cls("conv", (k, c, r, s, h_out, w_out), name)

    @classmethod
    def fc(cls, n_in, n_out, name=""):
        return cls("fc", (n_in, n_out), name)

    @property
    def s_dot(self) -> int:
        if self.kind == "conv":
            _, c, r, s, _, _ = self.dims
            return c * r * s
        return self.dims[0]

    @property
    def outputs(self) -> int:
        if self.kind == "conv":
            k, _, _, _, h, w = self.dims
            return k * h * w
        return self.dims[1]


@dataclass(frozen=True)
class Schedule:
    outputs_total: int
    intervals_per_output: int
    passes: int
    interval_ns: float


def map_layer(layer: LayerWorkload, cfg: CopuConfig) -> Schedule:
    intervals = _check_capacity(layer.s_dot, cfg, layer.name or layer.kind)
    return Schedule(layer.outputs, intervals, -(-layer.outputs // cfg.m), cfg.interval_ns)


def parse_network(text: str) -> list[LayerWorkload]:
    """Parse ``conv K C R S H_out W_out`` / ``fc IN OUT`` lines; ``#`` starts a comment."""
    layers = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *rest = line.split()
        try:
            dims = tuple(int(v) for v in rest)
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer dimension in {line!r}") from None
        try:
            layers.append(LayerWorkload(kind.lower(), dims, f"L{len(layers) + 1}_{kind.lower()}"))
        except (FormatError, RangeError) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    if not layers:
        raise FormatError("network description has no layers")
    return layers


def load_network(path: str) -> list[LayerWorkload]:
    try:
        with open(path) as fh:
            return parse_network(fh.read())
    except OSError as exc:
        raise FormatError(f"cannot read network file {path}: {exc}") from None


# --- performance --------------------------------------------------------------

@dataclass(frozen=True)
class LayerReport:
    name: str
    s_dot: int
    passes: int
    intervals: int
    latency_ns: float
    energy_mJ: float


@dataclass(frozen=True)
class PerformanceReport:
    layers: list
    latency_ns: float
    energy_mJ: float
    laser_w: float
    power_w: float
    area_mm2: float

    @property
    def fps(self) -> float:
        return 1e9 / self.latency_ns

    @property
    def fps_per_w(self) -> float:
        return self.fps / self.power_w

    @property
    def fps_per_w_per_mm2(self) -> float:
        return self.fps_per_w / self.area_mm2


def interval_energy_pj(cfg: CopuConfig) -> float:
    """Energy of one PBAU over one accumulation interval."""
    if cfg.mode == BNN:
        return BNN_SYMBOL_ENERGY_PJ
    return cfg.cost.energy(PbauMode.MUL, cfg.precision)


def estimate_performance(network, cfg: CopuConfig,
                         params: link_budget.LinkBudgetParams) -> PerformanceReport:
    """Latency, power and area of one inference.

    ``energy_mJ`` counts PBAU switching energy only, which depends on total
    active PBAU-intervals and not on how outputs are spread over CoPEs.
    Laser power enters the power figure as a static term.
    """
    if cfg.n > params.wdm_cap:
        raise CapacityError(f"N={cfg.n} exceeds the WDM cap {params.wdm_cap}")
    e_int = interval_energy_pj(cfg)
    reports = []
    for layer in network:
        sched = map_layer(layer, cfg)
        latency = sched.passes * (sched.intervals_per_output + cfg.readout_intervals) * sched.interval_ns
        energy_pj = sched.outputs_total * sched.intervals_per_output * cfg.n * e_int
        reports.append(LayerReport(layer.name or layer.kind, layer.s_dot, sched.passes,
                                   sched.intervals_per_output, latency, energy_pj * 1e-9))
    latency_ns = sum(r.latency_ns for r in reports)
    energy_mj = sum(r.energy_mJ for r in reports)
    if cfg.mode == BNN:
        dr = cfg.sr_gsps * 1e9
    else:
        dr = link_budget.ArchRule(link_budget.Arch.CEONA_I).data_rate_hz(cfg.sr_gsps, cfg.bits)
    p_pd = link_budget.required_pd_power(params, 1.0, dr)
    laser = link_budget.laser_power(params, cfg.n, cfg.m, p_pd, allow_non_pow2=True)
    power = laser + energy_mj * 1e-3 / (latency_ns * 1e-9)
    area = cfg.m * cfg.n * cfg.cost.area_mm2 + cfg.peripheral_area_mm2
    return PerformanceReport(reports, latency_ns, energy_mj, laser, power, area)


RESULT_COLUMNS = ["layer", "S_dot", "passes", "intervals", "latency_ns", "energy_mJ",
                  "FPS", "FPS_per_W", "FPS_per_W_per_mm2"]


def write_report_csv(report: PerformanceReport, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for r in report.layers:
        writer.writerow([r.name, r.s_dot, r.passes, r.intervals, f"{r.latency_ns:.6g}",
                         f"{r.energy_mJ:.6g}", "", "", ""])
    writer.writerow(["total", sum(r.s_dot for r in report.layers), sum(r.passes for r in report.layers),
                     sum(r.intervals for r in report.layers), f"{report.latency_ns:.6g}",
                     f"{report.energy_mJ:.6g}", f"{report.fps:.6g}", f"{report.fps_per_w:.6g}",
                     f"{report.fps_per_w_per_mm2:.6g}"])

