"""Photonic link budget: detector noise, achievable bit resolution, laser power
and the largest WDM size ``N`` (with ``M = N``) a laser budget supports.

Resolution of a detected signal::

    n = (20*log10(R*P / (beta*sqrt(DR/sqrt(2)))) - 1.76) / 6.02
    beta = sqrt(2q(R*P + I_d) + 4kT/R_L + R^2 P^2 RIN)

Laser power for an ``N``-wavelength, ``M``-waveguide unit::

    P_laser = 10^(wg_db_per_cm * N * d_elem / 10) * M / (eta_smf * eta_ec * il_ip)
              * P_pd / (eta_wpe * il_mrr)
              / (obl_osm^(N-1) * el_split^log2(M) * obl_mrr^(N-1) * il_penalty)

Losses are stored as linear transmission fractions in ``LinkBudgetParams``;
the parameter file carries them in dB.
"""

from __future__ import annotations

import configparser
import csv
import enum
import math
import os
from dataclasses import dataclass, fields, replace
from importlib import resources

from scipy import constants, optimize

from polyeo.errors import FormatError, InfeasibleError, InputError, MappingError

Q_E = constants.e
K_B = constants.k

PARAMS_ENV = "POLYEO_PARAMS"


class Arch(enum.Enum):
    CEONA_I = "ceona_i"
    AMW = "amw"
    MAW = "maw"

    @classmethod
    def parse(cls, name: str) -> "Arch":
        key = name.lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise InputError(f"unknown architecture {name!r}") from None


@dataclass(frozen=True)
class LinkBudgetParams:
    responsivity: float = 1.2          # A/W
    dark_current: float = 35e-9        # A
    load_resistance: float = 50.0      # ohm
    temperature: float = 300.0         # K
    rin: float = 1e-14                 # 1/Hz
    wg_loss_db_per_cm: float = 1.0
    element_length_cm: float = 0.002
    eta_smf: float = 1.0
    eta_ec: float = 1.0
    eta_wpe: float = 1.0
    il_ip_osm: float = 1.0
    il_mrr: float = 1.0
    il_penalty: float = 1.0
    obl_osm: float = 1.0
    obl_mrr: float = 1.0
    el_splitter: float = 1.0
    fsr_nm: float = 50.0
    spacing_nm: float = 0.25
    laser_max_w: float = 1.0

    def __post_init__(self):
        for name in ("eta_smf", "eta_ec", "eta_wpe", "il_ip_osm", "il_mrr",
                     "il_penalty", "obl_osm", "obl_mrr", "el_splitter"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise InputError(f"{name} must be a fraction in (0, 1], got {v}")
        if not self.fsr_nm > self.spacing_nm > 0:
            raise InputError("need fsr_nm > spacing_nm > 0")
        if self.responsivity <= 0 or self.load_resistance <= 0 or self.temperature <= 0:
            raise InputError("responsivity, load resistance and temperature must be positive")
        if self.dark_current < 0 or self.rin < 0 or self.wg_loss_db_per_cm < 0 or self.element_length_cm < 0:
            raise InputError("noise and waveguide-loss terms must be non-negative")
        if self.laser_max_w <= 0:
            raise InputError("laser_max_w must be positive")

    @property
    def wdm_cap(self) -> int:
        return int(math.floor(self.fsr_nm / self.spacing_nm + 1e-9))


@dataclass(frozen=True)
class ArchRule:
    arch: Arch

    def data_rate_hz(self, sr_gsps: float, bits: int) -> float:
        if self.arch is Arch.CEONA_I:
            return sr_gsps * 1e9 / 2**bits
        return sr_gsps * 1e9

    def n_required(self, bits: int) -> float:
        return 1.0 if self.arch is Arch.CEONA_I else float(bits)


# --- noise and resolution ----------------------------------------------------

def noise_beta(params: LinkBudgetParams, p_pd: float) -> float:
    """Noise current spectral density in A/sqrt(Hz)."""
    R = params.responsivity
    shot = 2 * Q_E * (R * p_pd + params.dark_current)
    thermal = 4 * K_B * params.temperature / params.load_resistance
    rin = R**2 * p_pd**2 * params.rin
    return math.sqrt(shot + thermal + rin)


def achievable_bits(params: LinkBudgetParams, p_pd: float, dr_hz: float) -> float:
    if p_pd <= 0 or dr_hz <= 0:
        raise InfeasibleError(f"no detectable signal at P_pd={p_pd} W, DR={dr_hz} Hz")
    ratio = params.responsivity * p_pd / (noise_beta(params, p_pd) * math.sqrt(dr_hz / math.sqrt(2)))
    return (20 * math.log10(ratio) - 1.76) / 6.02


def required_pd_power(params: LinkBudgetParams, n_target: float, dr_hz: float,
                      lo: float = 1e-9, hi: float = 1.0, rtol: float = 1e-3) -> float:
    """Smallest detector power reaching ``n_target`` bits, by bisection in log-power."""
    if achievable_bits(params, hi, dr_hz) < n_target:
        raise InfeasibleError(f"{n_target} bits unreachable at DR={dr_hz:.4g} Hz within {hi} W")
    if achievable_bits(params, lo, dr_hz) >= n_target:
        return lo
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if achievable_bits(params, mid, dr_hz) >= n_target:
            hi = mid
        else:
            lo = mid
    return hi


# --- laser power ------------------------------------------------------------

def laser_power(params: LinkBudgetParams, n: int, m: int, p_pd: float,
                allow_non_pow2: bool = False) -> float:
    """Laser wall-plug power for ``n`` wavelengths split into ``m`` waveguides.

    ``m`` must be a power of two (a binary splitter tree) unless
    ``allow_non_pow2`` is set, in which case ``log2(m)`` is used as is.
    """
    if n < 1 or m < 1:
        raise MappingError("n and m must be >= 1")
    if not allow_non_pow2 and m & (m - 1):
        raise MappingError(f"m={m} is not a power of two")
    wg = 10 ** (params.wg_loss_db_per_cm * n * params.element_length_cm / 10)
    coupling = wg * m / (params.eta_smf * params.eta_ec * params.il_ip_osm)
    detector = p_pd / (params.eta_wpe * params.il_mrr)
    oob = (params.obl_osm ** (n - 1) * params.el_splitter ** math.log2(m)
           * params.obl_mrr ** (n - 1) * params.il_penalty)
    return coupling * detector / oob


# --- max-N search -----------------------------------------------------------

@dataclass(frozen=True)
class ScalabilityPoint:
    arch: Arch
    bits: int
    sr_gsps: float
    n: int
    p_pd_w: float
    p_laser_w: float
    capped: bool
    feasible: bool


def max_supported_n(rule: ArchRule, bits: int, sr_gsps: float, params: LinkBudgetParams) -> ScalabilityPoint:
    """Largest ``N`` (``M = N``) under the laser budget, clamped to FSR/spacing."""
    cap = params.wdm_cap
    dr = rule.data_rate_hz(sr_gsps, bits)
    try:
        p_pd = required_pd_power(params, rule.n_required(bits), dr)
    except InfeasibleError:
        return ScalabilityPoint(rule.arch, bits, sr_gsps, 0, math.nan, math.nan, False, False)
    best = 0
    for n in range(1, cap + 1):
        if laser_power(params, n, n, p_pd, allow_non_pow2=True) > params.laser_max_w:
            break
        best = n
    else:
        # cap reached; report whether the budget alone would allow more
        capped = laser_power(params, cap + 1, cap + 1, p_pd, allow_non_pow2=True) <= params.laser_max_w
        return ScalabilityPoint(rule.arch, bits, sr_gsps, cap, p_pd,
                                laser_power(params, cap, cap, p_pd, allow_non_pow2=True), capped, True)
    p_laser = laser_power(params, best, best, p_pd, allow_non_pow2=True) if best else math.nan
    return ScalabilityPoint(rule.arch, bits, sr_gsps, best, p_pd, p_laser, False, best > 0)


# --- parameter files --------------------------------------------------------

# file key -> (field, converter)
def _db_to_frac(v: float) -> float:
    return 10 ** (-v / 10)


_KEYS = {
    "responsivity_a_per_w": ("responsivity", float),
    "dark_current_a": ("dark_current", float),
    "load_resistance_ohm": ("load_resistance", float),
    "temperature_k": ("temperature", float),
    "rin_db_per_hz": ("rin", lambda v: 10 ** (v / 10)),
    "waveguide_loss_db_per_cm": ("wg_loss_db_per_cm", float),
    "element_length_cm": ("element_length_cm", float),
    "smf_loss_db": ("eta_smf", _db_to_frac),
    "coupler_loss_db": ("eta_ec", _db_to_frac),
    "wall_plug_efficiency": ("eta_wpe", float),
    "il_input_osm_db": ("il_ip_osm", _db_to_frac),
    "il_mrr_db": ("il_mrr", _db_to_frac),
    "il_penalty_db": ("il_penalty", _db_to_frac),
    "obl_osm_db": ("obl_osm", _db_to_frac),
    "obl_mrr_db": ("obl_mrr", _db_to_frac),
    "splitter_excess_db": ("el_splitter", _db_to_frac),
    "fsr_nm": ("fsr_nm", float),
    "spacing_nm": ("spacing_nm", float),
    "max_power_w": ("laser_max_w", float),
}

_SECTIONS = ("noise", "losses", "wdm", "laser")


@dataclass(frozen=True)
class ParamSet:
    base: LinkBudgetParams
    overrides: dict

    def for_arch(self, arch: Arch) -> LinkBudgetParams:
        return replace(self.base, **self.overrides.get(arch, {}))


def default_params_path() -> str:
    env = os.environ.get(PARAMS_ENV)
    if env:
        return env
    return str(resources.files("polyeo") / "data" / "link_budget.ini")


def _convert(section: str, items) -> dict:
    out = {}
    for key, raw in items:
        if key not in _KEYS:
            raise FormatError(f"[{section}] unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            out[name] = conv(float(raw))
        except ValueError:
            raise FormatError(f"[{section}] {key} = {raw!r} is not numeric") from None
    return out


def load_params(path: str | None = None) -> ParamSet:
    path = path or default_params_path()
    if not os.path.isfile(path):
        raise FormatError(f"parameter file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise FormatError(f"cannot parse {path}: {exc}") from None
    values = {}
    overrides = {}
    for section in cp.sections():
        conv = _convert(section, cp.items(section))
        if section.startswith("arch."):
            overrides[Arch.parse(section[5:])] = conv
        elif section in _SECTIONS:
            values.update(conv)
        else:
            raise FormatError(f"unknown section [{section}] in {path}")
    known = {f.name for f in fields(LinkBudgetParams)}
    base = LinkBudgetParams(**{k: v for k, v in values.items() if k in known})
    ps = ParamSet(base, overrides)
    for arch in overrides:
        ps.for_arch(arch)  # validates merged values
    return ps


# --- calibration --------------------------------------------------------------

def calibrate(params: ParamSet, targets: dict | None = None, bits: int = 4,
              sr_gsps: float = 1.0) -> ParamSet:
    """Fit the laser budget and loss terms to anchor ``N`` values.

    ``targets`` maps ``Arch`` to the desired ``N`` at (``bits``, ``sr_gsps``).
    The shared per-element ``obl_mrr`` is chosen so the CEONA-I and AMW
    anchors need the same laser budget, which becomes ``laser_max_w``; MAW
    then gets its own ``il_penalty`` override to meet its anchor.
    """
    targets = targets or {Arch.CEONA_I: 192, Arch.AMW: 31, Arch.MAW: 44}

    def budget_for(arch, ps, n):
        prm = ps.for_arch(arch)
        rule = ArchRule(arch)
        pd = required_pd_power(prm, rule.n_required(bits), rule.data_rate_hz(sr_gsps, bits))
        lo = laser_power(prm, n, n, pd, allow_non_pow2=True)
        hi = laser_power(prm, n + 1, n + 1, pd, allow_non_pow2=True)
        return math.sqrt(lo * hi)

    def with_value(ps, name, frac, arch=None):
        if arch is None:
            ov = {a: {k: v for k, v in o.items() if k != name} for a, o in ps.overrides.items()}
            return ParamSet(replace(ps.base, **{name: frac}), ov)
        ov = dict(ps.overrides)
        ov[arch] = {**ov.get(arch, {}), name: frac}
        return ParamSet(ps.base, ov)

    def mismatch(db):
        ps = with_value(params, "obl_mrr", _db_to_frac(db))
        return math.log(budget_for(Arch.CEONA_I, ps, targets[Arch.CEONA_I])
                        / budget_for(Arch.AMW, ps, targets[Arch.AMW]))

    db = optimize.brentq(mismatch, 1e-6, 1.0, xtol=1e-9)
    ps = with_value(params, "obl_mrr", _db_to_frac(db))
    budget = budget_for(Arch.CEONA_I, ps, targets[Arch.CEONA_I])
    ps = ParamSet(replace(ps.base, laser_max_w=budget), ps.overrides)
    if Arch.MAW in targets:
        def maw_gap(pen_db):
            trial = with_value(ps, "il_penalty", _db_to_frac(pen_db), Arch.MAW)
            return math.log(budget_for(Arch.MAW, trial, targets[Arch.MAW]) / budget)
        pen_db = optimize.brentq(maw_gap, 0.0, 30.0, xtol=1e-9)
        ps = with_value(ps, "il_penalty", _db_to_frac(pen_db), Arch.MAW)
    return ps


# --- sweeps -------------------------------------------------------------------

SWEEP_COLUMNS = ["arch", "B", "SR_GSps", "N", "P_pd_W", "P_laser_W", "capped"]


def sweep(params: ParamSet, archs, bits_list, sr_list, executor=None) -> list[ScalabilityPoint]:
    """Grid of max-N points in (arch, B, SR) order regardless of completion order."""
    jobs = [(a, b, s) for a in archs for b in bits_list for s in sr_list]

    def run(job):
        a, b, s = job
        return max_supported_n(ArchRule(a), b, s, params.for_arch(a))

    if executor is None:
        return [run(j) for j in jobs]
    return list(executor.map(run, jobs))


def write_sweep_csv(points, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for p in points:
        writer.writerow([p.arch.value, p.bits, f"{p.sr_gsps:g}", p.n,
                         f"{p.p_pd_w:.6e}", f"{p.p_laser_w:.6e}", str(p.capped).lower()])
