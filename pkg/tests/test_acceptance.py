"""Acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (collected into the ``acceptance``
section of the pytest summary) and then asserts on the same condition.
"""

import filecmp
import itertools
import time

import numpy as np

from polyeo import ceona, cli, device, dfrc, link_budget, pbau
from polyeo.ceona import CopuConfig, LayerWorkload
from polyeo.device import PcaConfig, PcaState
from polyeo.errors import SaturationError
from polyeo.pbau import PbauMode
from polyeo.unary import Gate, OperandPrecision

UNIT = pbau.Pbau()


def test_ac01_exact_add_sub(report):
    t0 = time.perf_counter()
    maes = {(m.value, b): pbau.mae_sweep(m, OperandPrecision(b), UNIT).mae
            for m in (PbauMode.ADD, PbauMode.SUB) for b in (4, 6, 8)}
    elapsed = time.perf_counter() - t0
    ok = all(v == 0.0 for v in maes.values()) and elapsed < 10
    report("AC1 exact ADD/SUB", ok, f"max MAE {max(maes.values())}, {elapsed:.2f} s")
    assert ok


def test_ac02_mul_error(report):
    details = []
    ok = True
    for b in (6, 8):
        t0 = time.perf_counter()
        r = pbau.mae_sweep(PbauMode.MUL, OperandPrecision(b), UNIT)
        elapsed = time.perf_counter() - t0
        ok &= r.max_err <= 1 and r.mae <= 0.05 and elapsed < 60
        details.append(f"B={b} MAE {r.mae:.4f} max {r.max_err:.3f} ({elapsed:.2f} s)")
    report("AC2 MUL error", ok, "; ".join(details))
    assert ok


def test_ac03_gate_polymorphism(report):
    passed = 0
    for g in Gate:
        for _, _, got, want in device.truth_table_check(device.program_gate(g)):
            passed += got == want
    ok = passed == 24
    report("AC3 gate truth tables", ok, f"{passed}/24")
    assert ok


def test_ac04_pca_capacity(report):
    table = {3: 39682, 5: 29761, 10: 19841, 20: 14880, 30: 10822, 40: 9920, 50: 8503}
    lookup_ok = all(device.gamma_for_symbol_rate(sr) == g for sr, g in table.items())

    cfg = PcaConfig.from_symbol_rate(50)
    s = PcaState()
    for _ in range(cfg.gamma):
        device.pca_accumulate(s, cfg, 1.0)
    try:
        device.pca_accumulate(s, cfg, 1.0)
        sat_ok = False
    except SaturationError:
        sat_ok = s.acc[s.active] == cfg.gamma

    # 1e5 unit pulses streamed through alternating capacitors
    rng = np.random.default_rng(0)
    cfg = PcaConfig(gamma=997, discharge_intervals=50)
    s = PcaState()
    sent = read = 0
    while sent < 100_000:
        n = int(min(rng.integers(cfg.discharge_intervals, cfg.gamma + 1), 100_000 - sent))
        device.pca_accumulate_many(s, cfg, np.ones(n))
        sent += n
        read += device.pca_read_and_swap(s, cfg)
    cons_ok = read == sent == 100_000
    ok = lookup_ok and sat_ok and cons_ok
    report("AC4 PCA capacity", ok, f"table {lookup_ok}, saturation at gamma+1 {sat_ok}, "
           f"conserved {int(read)}/{sent}")
    assert ok


def test_ac05_latency_calibration(report):
    gaps = pbau.relative_latency_gap()
    rep = UNIT.execute(PbauMode.ADD, 200, 13, OperandPrecision(8))
    ok = len(gaps) == 6 and max(gaps.values()) <= 0.10 and rep.latency_ns == 20.51
    report("AC5 latency calibration", ok, f"max gap {max(gaps.values()):.3%}, ADD8 {rep.latency_ns} ns")
    assert ok


def test_ac06_scalability(report):
    params = link_budget.load_params()
    t0 = time.perf_counter()
    points = link_budget.sweep(params, list(link_budget.Arch), [2, 4, 6, 8, 10], [0.5, 1, 3, 5])
    elapsed = time.perf_counter() - t0
    by = {(p.arch, p.bits, p.sr_gsps): p.n for p in points}
    bits = [2, 4, 6, 8, 10]
    srs = [0.5, 1, 3, 5]
    props = len(points) == 60
    for arch in link_budget.Arch:
        cap = 200 if arch is link_budget.Arch.CEONA_I else 62
        props &= all(by[(arch, b, s)] <= cap for b in bits for s in srs)
        for s in srs:
            seq = [by[(arch, b, s)] for b in bits]
            if arch is link_budget.Arch.CEONA_I:
                props &= all(y >= x or x == cap for x, y in zip(seq, seq[1:]))
            else:
                props &= all(y <= x for x, y in zip(seq, seq[1:]))
        for b in bits:
            seq = [by[(arch, b, s)] for s in srs]
            props &= all(y <= x for x, y in zip(seq, seq[1:]))
    targets = {link_budget.Arch.CEONA_I: 192, link_budget.Arch.AMW: 31, link_budget.Arch.MAW: 44}
    got = {a: by[(a, 4, 1)] for a in targets}
    anchors = all(abs(got[a] - t) <= 0.15 * t for a, t in targets.items())
    ok = props and anchors and elapsed < 5
    report("AC6 scalability", ok, f"properties {props}, N(B=4,1GS/s) "
           f"{'/'.join(str(got[a]) for a in targets)}, grid {elapsed * 1e3:.1f} ms")
    assert ok


def test_ac07_ceona_b(report):
    cfg = CopuConfig(n=64)
    rng = np.random.default_rng(2024)
    random_ok = True
    for _ in range(10_000):
        s = int(rng.integers(1, 4097))
        i, w = rng.integers(0, 2, (2, s)).astype(bool)
        p, bip = ceona.ceona_b_dot(i, w, cfg)
        random_ok &= p == int(np.count_nonzero(i == w)) and bip == 2 * p - s
    exhaustive_ok = True
    for s in range(1, 13):
        bits = (np.arange(2**s)[:, None] >> np.arange(s)) & 1
        rows_per = max(1, 2**20 // 2**s)
        for start in range(0, 2**s, rows_per):
            blk = bits[start:start + rows_per]
            i = np.repeat(blk, 2**s, axis=0).astype(bool)
            w = np.tile(bits, (blk.shape[0], 1)).astype(bool)
            p, bip = ceona.ceona_b_dot_batch(i, w, cfg)
            ref = np.count_nonzero(i == w, axis=1)
            exhaustive_ok &= bool(np.array_equal(p, ref) and np.array_equal(bip, 2 * ref - s))
    ok = random_ok and exhaustive_ok
    report("AC7 CEONA-B XNOR-popcount", ok, f"1e4 random {random_ok}, exhaustive S<=12 {exhaustive_ok}")
    assert ok


def test_ac08_ceona_i(report):
    cfg = CopuConfig(n=64)
    vals = np.arange(-15, 16)
    worst = 0.0
    # S_dot = 1 through the two-PCA path
    for x, w in itertools.product(vals, repeat=2):
        err = abs(ceona.ceona_i_dot([x], [w], 4, cfg) - ceona.exact_scaled_dot([x], [w], 4))
        worst = max(worst, err)
    # S_dot = 2, every (x1, x2, w1, w2) combination
    grid = np.array(np.meshgrid(vals, vals, vals, vals, indexing="ij")).reshape(4, -1).T
    x, w = grid[:, :2], grid[:, 2:]
    got = ceona.ceona_i_dot_batch(x, w, 4, cfg)
    worst = max(worst, float(np.max(np.abs(got - (x * w).sum(axis=1) / 16))) / 2)
    sample = np.random.default_rng(1).choice(len(grid), 300, replace=False)
    batch_ok = all(ceona.ceona_i_dot(x[k], w[k], 4, cfg) == got[k] for k in sample)
    rng = np.random.default_rng(8)
    errs = []
    for _ in range(200):
        x = rng.integers(-255, 256, 1024)
        w = rng.integers(-255, 256, 1024)
        errs.append(abs(ceona.ceona_i_dot(x, w, 8, cfg) - ceona.exact_scaled_dot(x, w, 8)))
    mean_err = float(np.mean(errs))
    ok = batch_ok and worst <= 1 and mean_err <= 0.02 * 1024
    report("AC8 CEONA-I", ok, f"worst |err|/S_dot {worst:.3f} (B=4), mean |err| {mean_err:.2f} "
           f"<= {0.02 * 1024:.2f} (S_dot=1024, B=8)")
    assert ok


def test_ac09_bnn_fps_ratio(report):
    params = link_budget.load_params().for_arch(link_budget.Arch.CEONA_I)
    net = [LayerWorkload.conv(128, 64, 3, 3, 32, 32), LayerWorkload.conv(256, 128, 3, 3, 16, 16),
           LayerWorkload.fc(4096, 1000)]
    fast = ceona.estimate_performance(net, CopuConfig(sr_gsps=50), params)
    slow = ceona.estimate_performance(net, CopuConfig(sr_gsps=5), params)
    ratio = fast.fps / slow.fps
    ok = abs(ratio - 10) <= 0.1
    report("AC9 BNN FPS 50 vs 5 GS/s", ok, f"ratio {ratio:.4f}")
    assert ok


def ridge_fd_check(states, target, lambda_reg, h=1e-4, trials=50):
    model = dfrc.train_readout(states, target, lambda_reg)
    St = dfrc.with_bias(states)
    gram = St.T @ St + lambda_reg * np.eye(St.shape[1])
    j0 = dfrc.ridge_objective(model, states, target)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(trials):
        d = rng.standard_normal(St.shape[1])
        d /= np.linalg.norm(d)
        jp = dfrc.ridge_objective(model, states, target, model.w_out + h * d)
        jm = dfrc.ridge_objective(model, states, target, model.w_out - h * d)
        if not (jp > j0 and jm > j0):
            return False, np.inf
        # first-order term relative to curvature; zero at the exact optimum
        worst = max(worst, abs(jp - jm) / (2 * h) / (h * d @ gram @ d))
    return worst <= 1e-3, worst


def test_ac10_dfrc(report):
    t0 = time.perf_counter()
    nar = dfrc.run_narma10(nv=400, train_len=4000, test_len=1000, seed=1234)
    snrs = [12, 16, 20, 24, 28, 32]
    ser = [dfrc.run_chaneq(s, nv=400, seed=1234).value for s in snrs]

    cfg = dfrc.default_config("narma10", 400, 1234)
    u, y = dfrc.narma10_generate(4201, 1234)
    states = dfrc.reservoir_run(u[:-1], cfg)
    fd_ok, fd_ratio = ridge_fd_check(states[dfrc.WASHOUT:], y[1:][dfrc.WASHOUT:], 1e-6)
    elapsed = time.perf_counter() - t0

    narma_ok = nar.value <= 0.4
    mono_ok = all(b <= a for a, b in zip(ser, ser[1:])) and ser[-1] <= ser[0] / 10
    ok = narma_ok and mono_ok and fd_ok and elapsed < 120
    report("AC10 DFRC", ok, f"NARMA10 NRMSE {nar.value:.3f}; SER {', '.join(f'{v:.4g}' for v in ser)}; "
           f"ridge FD ratio {fd_ratio:.1e}; {elapsed:.1f} s")
    assert ok


def test_ac11_cli_determinism(report, tmp_path):
    net = tmp_path / "net.txt"
    net.write_text("conv 64 16 3 3 16 16\nconv 64 64 3 3 8 8\nfc 1024 10\n")
    experiments = {
        "gate": ["gate", "--gate", "xnor", "--sweep"],
        "pbau": ["pbau", "--op", "add,sub,mul", "--bits", "4,6", "--exhaustive"],
        "scalability": ["scalability"],
        "ceona": ["ceona", "--model", str(net), "--mode", "int", "--bits", "4", "--sr", "10"],
        "narma10": ["dfrc", "--task", "narma10", "--nv", "50", "--train", "500", "--test", "200"],
        "chaneq": ["dfrc", "--task", "chaneq", "--nv", "50", "--train", "500", "--test", "500",
                   "--snr", "12,20,32"],
    }
    same = {}
    for name, argv in experiments.items():
        outs = []
        for run, jobs in enumerate(("1", "4")):
            path = tmp_path / f"{name}_{run}.csv"
            code = cli.main(["--seed", "7", "--jobs", jobs, *argv, "--out", str(path)])
            outs.append((code, path))
        same[name] = all(c == 0 for c, _ in outs) and filecmp.cmp(outs[0][1], outs[1][1], shallow=False)
    ok = all(same.values())
    report("AC11 CLI determinism", ok, ", ".join(f"{k} {'same' if v else 'DIFF'}" for k, v in same.items()))
    assert ok
