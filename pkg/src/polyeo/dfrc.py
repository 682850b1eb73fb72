"""Delay-feedback reservoir computing with MRR nonlinear nodes.

Each input sample ``u(t)`` is held for one delay period ``T = Nv * theta``
and multiplied by the mask; virtual node ``i`` sees the drive

    drive_i(t) = gamma_in * mask_i * u(t) + bias + eta_fb * s_i(t-1)

where ``s_i(t-1)`` comes back from the delay loop. With ``loop_shift = k``
the loop is ``k`` slots longer than ``Nv * theta`` and node ``i`` receives
``s_{i-k}(t-1)`` instead, which chains the virtual nodes into a ring. With the MRR-TPA node the
drive is integrated through the cavity ODE for one ``theta`` slot and the
node state is the output power; the cavity amplitude carries over from slot
to slot, which couples neighbouring virtual nodes. The Mackey-Glass node is
the memoryless map ``eta_mg * a / (1 + |a|**p)``.

``bias`` is the modulator operating point. The MRR node responds to power,
which is even in the field, so without a bias a sign flip of the masked
input would be invisible to the readout.

The readout is ridge regression on the state matrix plus a bias column.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import linalg

from polyeo.device import NonlinearMrrConfig
from polyeo.errors import FormatError, InputError, ShapeError, StabilityError

SYMBOLS = np.array([-3.0, -1.0, 1.0, 3.0])


@dataclass(frozen=True)
class MrrTpa:
    node: NonlinearMrrConfig = field(default_factory=NonlinearMrrConfig)
    theta_ps: float | None = None
    dt_ps: float | None = None

    @property
    def theta(self) -> float:
        return self.theta_ps if self.theta_ps is not None else 4.0 * self.node.tau_ph

    @property
    def substeps(self) -> int:
        dt = self.dt_ps if self.dt_ps is not None else self.node.tau_ph / 8.0
        if not 0 < dt <= self.node.tau_ph / 4:
            raise InputError(f"dt={dt} ps outside (0, tau_ph/4]")
        return max(1, int(round(self.theta / dt)))

    @property
    def dt(self) -> float:
        return self.theta / self.substeps


@dataclass(frozen=True)
class MackeyGlass:
    eta_mg: float = 0.8
    p: float = 1.0


@dataclass(frozen=True)
class ReservoirConfig:
    nv: int = 400
    gamma_in: float = 1.0
    eta_fb: float = 0.5
    bias: float = 0.0
    loop_shift: int = 0
    nonlinearity: MrrTpa | MackeyGlass = field(default_factory=MrrTpa)
    mask_kind: str = "binary"
    seed: int = 1234
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.nv < 1:
            raise InputError("nv must be >= 1")
        if not abs(self.eta_fb) < 1:
            raise InputError("|eta_fb| must be < 1")
        if self.mask_kind not in ("binary", "uniform"):
            raise InputError(f"mask_kind must be 'binary' or 'uniform', got {self.mask_kind!r}")
        if self.mask is None:
            object.__setattr__(self, "mask", make_mask(self.nv, self.mask_kind, self.seed))
        mask = np.asarray(self.mask, dtype=float)
        if mask.shape != (self.nv,):
            raise ShapeError(f"mask must have length {self.nv}")
        if np.any(np.abs(mask) > 1):
            raise InputError("mask entries must lie in [-1, 1]")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def delay_ps(self) -> float | None:
        if isinstance(self.nonlinearity, MrrTpa):
            return self.nv * self.nonlinearity.theta
        return None


def make_mask(nv: int, kind: str, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if kind == "binary":
        return rng.choice([-1.0, 1.0], size=nv)
    return rng.uniform(-1.0, 1.0, size=nv)


@dataclass
class ReservoirState:
    s: np.ndarray
    cavity: complex = 0j

    @classmethod
    def zeros(cls, nv: int) -> "ReservoirState":
        return cls(np.zeros(nv))


@numba.njit(cache=True, nogil=True)
def _mrr_kernel(u, mask, gamma_in, bias, eta_fb, shift, s0, a0, substeps, dt, inv2tau, alpha, kappa_c, detune):
    n_t = u.shape[0]
    nv = mask.shape[0]
    out = np.empty((n_t, nv))
    prev = s0.copy()
    a = a0
    loss_lin = inv2tau + 1j * detune
    for t in range(n_t):
        for i in range(nv):
            drive = gamma_in * mask[i] * u[t] + bias + eta_fb * prev[(i - shift) % nv]
            for _ in range(substeps):
                a = a + dt * (-(loss_lin + alpha * (a.real * a.real + a.imag * a.imag)) * a + kappa_c * drive)
            out[t, i] = a.real * a.real + a.imag * a.imag
        for i in range(nv):
            prev[i] = out[t, i]
    return out, a


def reservoir_run(u, cfg: ReservoirConfig, state: ReservoirState | None = None,
                  return_state: bool = False):
    """State matrix of shape ``(len(u), nv)``; optionally also the final state."""
    u = np.asarray(u, dtype=float).ravel()
    if not np.all(np.isfinite(u)):
        raise InputError("input series contains non-finite values")
    state = state or ReservoirState.zeros(cfg.nv)
    if state.s.shape != (cfg.nv,):
        raise ShapeError(f"state buffer must have length {cfg.nv}")
    nl = cfg.nonlinearity
    if isinstance(nl, MrrTpa):
        node = nl.node
        states, a_end = _mrr_kernel(u, cfg.mask, cfg.gamma_in, cfg.bias, cfg.eta_fb, cfg.loop_shift, state.s.astype(float),
                                    complex(state.cavity), nl.substeps, nl.dt, 1.0 / (2.0 * node.tau_ph),
                                    node.alpha_tpa, node.kappa_c, node.detune)
    else:
        states = np.empty((u.size, cfg.nv))
        prev = state.s.astype(float)
        for t in range(u.size):
            drive = cfg.gamma_in * cfg.mask * u[t] + cfg.bias + cfg.eta_fb * np.roll(prev, cfg.loop_shift)
            prev = nl.eta_mg * drive / (1.0 + np.abs(drive) ** nl.p)
            states[t] = prev
        a_end = 0j
    bad = ~np.all(np.isfinite(states), axis=1)
    if bad.any():
        raise StabilityError(f"reservoir state diverged at step {int(np.argmax(bad))}")
    if return_state:
        return states, ReservoirState(states[-1].copy() if u.size else state.s.copy(), a_end)
    return states


# --- readout ----------------------------------------------------------------

@dataclass(frozen=True)
class ReadoutModel:
    w_out: np.ndarray
    lambda_reg: float

    def predict(self, states) -> np.ndarray:
        return with_bias(states) @ self.w_out


def with_bias(states) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    return np.hstack([states, np.ones((states.shape[0], 1))])


def train_readout(states, y, lambda_reg: float = 1e-6) -> ReadoutModel:
    """Closed-form ridge regression ``(S'S + lambda I)^-1 S'y`` with a bias column."""
    states = np.asarray(states, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if states.ndim != 2 or states.shape[0] != y.size:
        raise ShapeError(f"states {states.shape} and targets ({y.size},) disagree")
    if lambda_reg <= 0:
        raise InputError("lambda_reg must be positive")
    S = with_bias(states)
    gram = S.T @ S + lambda_reg * np.eye(S.shape[1])
    with warnings.catch_warnings():
        # lambda_reg regularizes near-singular Gram matrices by design
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        w = linalg.solve(gram, S.T @ y, assume_a="pos", check_finite=False)
    return ReadoutModel(w, lambda_reg)


def ridge_objective(model: ReadoutModel, states, y, w=None) -> float:
    w = model.w_out if w is None else w
    r = np.asarray(y, dtype=float).ravel() - with_bias(states) @ w
    return float(r @ r + model.lambda_reg * (w @ w))


def nrmse(y_hat, y) -> float:
    y = np.asarray(y, dtype=float)
    return float(np.sqrt(np.mean((np.asarray(y_hat) - y) ** 2)) / np.std(y))


def evaluate_nrmse(model: ReadoutModel, states, y) -> float:
    return nrmse(model.predict(states), y)


def decide_symbols(y_hat) -> np.ndarray:
    y_hat = np.asarray(y_hat, dtype=float)
    return SYMBOLS[np.argmin(np.abs(y_hat[:, None] - SYMBOLS[None, :]), axis=1)]


def symbol_error_rate(y_hat, d) -> float:
    return float(np.mean(decide_symbols(y_hat) != np.asarray(d)))


def evaluate_ser(model: ReadoutModel, states, d) -> float:
    return symbol_error_rate(model.predict(states), d)


# --- task generators -----------------------------------------------------------

def narma10_generate(length: int, seed: int, max_tries: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Tenth-order NARMA series with ``u ~ U[0, 0.5]``.

    ``y[0] = 0`` and ``y[k+1]`` follows from ``y[k-9..k]`` and
    ``u[k-9], u[k]``; history before index 0 is zero. A run whose output
    exceeds 10 in magnitude is redrawn from the same generator.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        u = rng.uniform(0.0, 0.5, length)
        y = narma10_response(u)
        if np.all(np.abs(y) <= 10):
            return u, y
    raise StabilityError(f"NARMA10 diverged {max_tries} times for seed {seed}")


def narma10_response(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    y = np.zeros(u.size)
    for k in range(u.size - 1):
        window = y[max(0, k - 9):k + 1].sum()
        u_lag = u[k - 9] if k >= 9 else 0.0
        y[k + 1] = 0.3 * y[k] + 0.05 * y[k] * window + 1.5 * u_lag * u[k] + 0.1
        if not math.isfinite(y[k + 1]) or abs(y[k + 1]) > 1e6:
            y[k + 1:] = np.inf
            break
    return y


CHANNEL_TAPS = {2: 0.08, 1: -0.12, 0: 1.0, -1: 0.18, -2: -0.1, -3: 0.091,
                -4: -0.05, -5: 0.04, -6: 0.03, -7: 0.01}


def channel_output(d) -> np.ndarray:
    """Noiseless channel for a symbol sequence; ``d`` carries 7 leading and 2
    trailing guard symbols, so the result is ``len(d) - 9`` long."""
    d = np.asarray(d, dtype=float)
    n = d.size - 9
    q = np.zeros(n)
    for lag, coef in CHANNEL_TAPS.items():
        q += coef * d[7 + lag:7 + lag + n]
    return q + 0.036 * q**2 - 0.011 * q**3


def channel_eq_generate(length: int, snr_db: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Received signal ``u`` and transmitted symbols ``d`` (aligned, ``len == length``).

    Symbol and noise draws use separate streams from ``seed``, so runs at
    different SNRs share the same symbols and the same noise shape.
    """
    sym_rng, noise_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    d_full = sym_rng.choice(SYMBOLS, size=length + 9)
    clean = channel_output(d_full)
    d = d_full[7:7 + length]
    noise = noise_rng.standard_normal(length)
    if math.isinf(snr_db):
        return clean, d
    sigma = math.sqrt(np.mean(clean**2) / 10 ** (snr_db / 10))
    return clean + sigma * noise, d


def santafe_load(path: str) -> np.ndarray:
    """One value per line, normalized to zero mean and unit variance."""
    values = []
    try:
        fh = open(path)
    except OSError as exc:
        raise FormatError(f"cannot open {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not a number: {text!r}") from None
    if not values:
        raise FormatError(f"{path}: no data")
    x = np.array(values)
    std = x.std()
    return (x - x.mean()) / (std if std > 0 else 1.0)


def santafe_write(series, path: str) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(series, dtype=float):
            fh.write(f"{float(v)!r}\n")


# --- task runners -------------------------------------------------------------

WASHOUT = 200


@dataclass(frozen=True)
class TaskResult:
    task: str
    nv: int
    seed: int
    snr_db: float | None
    train_len: int
    test_len: int
    metric: str
    value: float
    wall_time_ms: float


def default_config(task: str, nv: int = 400, seed: int = 1234) -> ReservoirConfig:
    """Task-tuned reservoir settings (ring loop, modulator bias 0.5)."""
    if task == "chaneq":
        return ReservoirConfig(nv=nv, gamma_in=0.2, bias=0.5, eta_fb=0.6, loop_shift=1, seed=seed)
    return ReservoirConfig(nv=nv, gamma_in=1.0, bias=0.5, eta_fb=0.9, loop_shift=1, seed=seed)


def _fit_and_score(states, target, train_len, lambda_reg):
    tr = slice(WASHOUT, WASHOUT + train_len)
    te = slice(WASHOUT + train_len, None)
    model = train_readout(states[tr], target[tr], lambda_reg)
    return model, model.predict(states[te]), target[te]


def run_narma10(nv: int = 400, train_len: int = 4000, test_len: int = 1000, seed: int = 1234,
                cfg: ReservoirConfig | None = None, lambda_reg: float = 1e-6) -> TaskResult:
    t0 = time.perf_counter()
    cfg = cfg or default_config("narma10", nv, seed)
    u, y = narma10_generate(WASHOUT + train_len + test_len + 1, seed)
    states = reservoir_run(u[:-1], cfg)
    _, y_hat, y_te = _fit_and_score(states, y[1:], train_len, lambda_reg)
    return TaskResult("narma10", cfg.nv, seed, None, train_len, test_len, "NRMSE",
                      nrmse(y_hat, y_te), (time.perf_counter() - t0) * 1e3)


def run_santafe(series, nv: int = 400, train_len: int = 3000, test_len: int = 1000, seed: int = 1234,
                cfg: ReservoirConfig | None = None, lambda_reg: float = 1e-6) -> TaskResult:
    t0 = time.perf_counter()
    series = np.asarray(series, dtype=float)
    need = WASHOUT + train_len + test_len + 1
    if series.size < need:
        raise InputError(f"Santa Fe series has {series.size} points, need {need}")
    cfg = cfg or default_config("santafe", nv, seed)
    # inputs rescaled to roughly [0, 1]
    u = (series[:need] - series.min()) / (np.ptp(series) or 1.0)
    states = reservoir_run(u[:-1], cfg)
    _, y_hat, y_te = _fit_and_score(states, series[1:need], train_len, lambda_reg)
    return TaskResult("santafe", cfg.nv, seed, None, train_len, test_len, "NRMSE",
                      nrmse(y_hat, y_te), (time.perf_counter() - t0) * 1e3)


def run_chaneq(snr_db: float, nv: int = 400, train_len: int = 4000, test_len: int = 10000,
               seed: int = 1234, cfg: ReservoirConfig | None = None, lambda_reg: float = 1e-6,
               delay: int = 2) -> TaskResult:
    """Equalize the channel: from ``u`` up to time ``k`` recover ``d[k - delay]``."""
    t0 = time.perf_counter()
    cfg = cfg or default_config("chaneq", nv, seed)
    n = WASHOUT + train_len + test_len + delay
    u, d = channel_eq_generate(n, snr_db, seed)
    states = reservoir_run(u[delay:] / 3.0, cfg)
    _, y_hat, d_te = _fit_and_score(states, d[:n - delay], train_len, lambda_reg)
    return TaskResult("chaneq", cfg.nv, seed, snr_db, train_len, test_len, "SER",
                      symbol_error_rate(y_hat, d_te), (time.perf_counter() - t0) * 1e3)


RESULT_COLUMNS = ["task", "Nv", "seed", "snr_db", "train_len", "test_len", "NRMSE", "SER", "wall_time_ms"]


def write_results_csv(results, fh, timing: bool = False) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for r in results:
        writer.writerow([r.task, r.nv, r.seed, "" if r.snr_db is None else f"{r.snr_db:g}",
                         r.train_len, r.test_len,
                         f"{r.value:.6g}" if r.metric == "NRMSE" else "",
                         f"{r.value:.6g}" if r.metric == "SER" else "",
                         f"{r.wall_time_ms:.1f}" if timing else ""])
