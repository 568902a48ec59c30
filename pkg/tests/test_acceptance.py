"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, printed in the terminal summary
under "acceptance criteria".
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from statreg.cli import main
from statreg.decision import LossMatrix, bayes, minimax, regularity_criterion, verify_proposition3
from statreg.empirics import (
    average_trajectory,
    estimate_limit_set,
    net_trajectory,
    prefix_trajectory,
    s_equivalent,
    step_bound_violations,
    tail_path_connected,
)
from statreg.errors import PreconditionError
from statreg.measures import (
    Alphabet,
    Regularity,
    TestFunction,
    hausdorff,
    image,
    make_measure,
    point_set_hausdorff,
    stochastic_subalgebra,
    tv_distance,
)
from statreg.realization import (
    RealizationSchedule,
    SymbolSequence,
    iid_generate,
    net_realize,
    sequence_realize,
)

AB = Alphabet(("a", "b"))
ABC = Alphabet(("a", "b", "c"))

# 8 rounds, eps0 = 0.5, D0 = 16; each round's targets repeated 8 times so
# that even a singleton regularity yields enough points for 5 tail windows
SCHEDULE = RealizationSchedule(8, eps0=0.5, d0=16, sweeps=8)

RECOVERY_CASES = {
    "singleton": Regularity.from_weights(AB, [[0.3, 0.7]]),
    "two diracs": Regularity.from_weights(AB, [[1, 0], [0, 1]]),
    "two points": Regularity.from_weights(AB, [[0.7, 0.3], [0.2, 0.8]]),
    "three points": Regularity.from_weights(ABC, [[0.6, 0.3, 0.1], [0.1, 0.6, 0.3], [0.3, 0.1, 0.6]]),
}


def record(number, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


@contextmanager
def stopwatch():
    box = {}
    t0 = time.perf_counter()
    yield box
    box["seconds"] = time.perf_counter() - t0


@pytest.fixture(scope="module")
def nets():
    return {name: net_realize(P, SCHEDULE) for name, P in RECOVERY_CASES.items()}


def test_criterion_1_regularity_recovery():
    worst, slowest = 0.0, 0.0
    for P in RECOVERY_CASES.values():
        with stopwatch() as sw:
            net = net_realize(P, SCHEDULE)
            est = estimate_limit_set(net_trajectory(net), epsilon=0.02, windows=5, tail_fraction=0.5)
            dist = hausdorff(est.to_regularity(), P)
        worst, slowest = max(worst, dist), max(slowest, sw["seconds"])
    record(1, worst <= 0.03 and slowest <= 5.0,
           f"regularity recovery, worst hausdorff {worst:.5f} <= 0.03, slowest case {slowest:.2f}s <= 5s")


def test_criterion_2_averages_of_test_functions(nets):
    rng = np.random.default_rng(20240601)
    worst_ratio = 0.0
    with stopwatch() as sw:
        for _ in range(20):
            m = int(rng.integers(1, 4))
            for name, P in RECOVERY_CASES.items():
                gamma = TestFunction(P.alphabet, rng.uniform(-1, 1, size=(m, len(P.alphabet))))
                est = estimate_limit_set(average_trajectory(nets[name], gamma))
                dist = point_set_hausdorff(est.centers, image(P, gamma))
                worst_ratio = max(worst_ratio, dist / (0.03 * m))
    record(2, worst_ratio <= 1.0 and sw["seconds"] <= 10.0,
           f"limit set of averages matches the image, worst distance / (0.03 m) = {worst_ratio:.3f} <= 1, "
           f"{sw['seconds']:.2f}s <= 10s")


def test_criterion_3_iid_singleton():
    mu = make_measure(ABC, [0.5, 0.3, 0.2])
    with stopwatch() as sw:
        seq = iid_generate(mu, 100_000, seed=42)
        est = estimate_limit_set(prefix_trajectory(seq))
        single = est.to_regularity()
        structure = stochastic_subalgebra(single)
    dist = tv_distance(single.points[0], mu) if len(single.points) == 1 else float("inf")
    full = len(structure.agreed) == 8 and len(structure.atoms) == 3
    record(3, len(est) == 1 and dist <= 0.01 and full and sw["seconds"] <= 2.0,
           f"iid stream, {len(est)} center at tv {dist:.5f} <= 0.01, "
           f"{len(structure.agreed)} agreed events of 8, {sw['seconds']:.2f}s <= 2s")


def _band_sequence(n, low=0.45, high=0.55):
    codes = np.empty(n, dtype=np.int64)
    count_a, symbol = 0, 0
    for i in range(n):
        codes[i] = symbol
        count_a += symbol == 0
        freq = count_a / (i + 1)
        if symbol == 0 and freq >= high:
            symbol = 1
        elif symbol == 1 and freq <= low:
            symbol = 0
    return codes


def test_criterion_4_sequence_connectedness(tmp_path):
    sequences = {
        "iid": (iid_generate(make_measure(ABC, [0.2, 0.5, 0.3]), 50_000, seed=3), 1, 0.02),
        "steered singleton": (sequence_realize(Regularity.from_weights(AB, [[0.8, 0.2]]), 50_000, 0.05), 1, 0.02),
        "steered hull": (sequence_realize(Regularity.from_weights(AB, [[0.7, 0.3], [0.3, 0.7]], convex=True),
                                          200_000, 0.05), 10, 0.02),
        "band": (SymbolSequence(AB, _band_sequence(200_000)), 10, 0.01),
    }
    problems = []
    for name, (seq, stride, eps) in sequences.items():
        traj = prefix_trajectory(seq, stride)
        est = estimate_limit_set(traj, epsilon=eps)
        if len(step_bound_violations(traj)) or not tail_path_connected(traj, est):
            problems.append(name)
    try:
        sequence_realize(RECOVERY_CASES["two diracs"], 1000, 0.1)
        rejected = False
    except PreconditionError:
        rejected = True
    (tmp_path / "P.json").write_text(json.dumps({"alphabet": ["a", "b"], "measures": [[1, 0], [0, 1]]}))
    (tmp_path / "cfg.json").write_text(json.dumps(
        {"mode": "sequence", "regularity": "P.json", "total_length": 1000}))
    code = main(["generate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "out")])
    record(4, not problems and rejected and code == 4,
           f"prefix trajectories obey the step bound and connect their centers "
           f"({len(sequences) - len(problems)}/{len(sequences)}), disconnected target exits {code} (want 4)")


def _random_loss(rng):
    k, n = rng.integers(1, 7, size=2)
    theta = tuple(f"t{i}" for i in range(k))
    return LossMatrix(theta, tuple(f"u{j}" for j in range(n)), rng.uniform(-10, 10, size=(k, n)))


def test_criterion_5_degenerations():
    rng = np.random.default_rng(5)
    bad = 0
    with stopwatch() as sw:
        for _ in range(100):
            L = _random_loss(rng)
            theta = L.theta
            k = len(theta)
            mu = make_measure(theta, rng.dirichlet(np.ones(k)))
            singleton = regularity_criterion(L, Regularity(theta, (mu,)))
            diracs = regularity_criterion(L, Regularity.from_weights(theta, np.eye(k)))
            others = rng.dirichlet(np.ones(k), size=int(rng.integers(0, 4)))
            P = Regularity.from_weights(theta, np.vstack([mu.weights, *others]), dedupe=True)
            mid = regularity_criterion(L, P).values
            lo, hi = bayes(L, mu).values, minimax(L).values
            ok = (np.max(np.abs(singleton.values - lo)) <= 1e-12
                  and np.max(np.abs(diracs.values - hi)) <= 1e-12
                  and np.all(lo <= mid + 1e-12) and np.all(mid <= hi + 1e-12))
            bad += not ok
    record(5, bad == 0 and sw["seconds"] <= 1.0,
           f"criterion degenerations and sandwich hold on {100 - bad}/100 matrices, {sw['seconds']:.2f}s <= 1s")


def test_criterion_6_vertex_sufficiency():
    rng = np.random.default_rng(6)
    exceed, gap = 0.0, 0.0
    with stopwatch() as sw:
        for _ in range(20):
            L = _random_loss(rng)
            k = len(L.theta_labels)
            vertices = rng.dirichlet(np.ones(k), size=int(rng.integers(1, 5)))
            P = Regularity.from_weights(L.theta, vertices, convex=True, dedupe=True)
            values = regularity_criterion(L, P).values
            # 10^4 hull mixtures; the degenerate ones at the vertices come first
            v = len(P.points)
            weights = np.vstack([np.eye(v), rng.dirichlet(np.ones(v), size=10_000 - v)])
            brute = (weights @ P.matrix @ L.values).max(axis=0)
            exceed = max(exceed, float(np.max(brute - values)))
            gap = max(gap, float(np.max(np.abs(brute - values))))
    record(6, exceed <= 1e-6 and gap <= 1e-6 and sw["seconds"] <= 5.0,
           f"vertex maximum matches 10^4 hull mixtures within {gap:.1e} <= 1e-6 "
           f"(largest excess {exceed:.1e}), {sw['seconds']:.2f}s <= 5s")


def test_criterion_7_running_average_straddles_criterion():
    P = RECOVERY_CASES["two points"]
    theta = Alphabet(("t1", "t2"))
    P = Regularity(theta, tuple(make_measure(theta, p.weights) for p in P.points))
    L = LossMatrix(("t1", "t2"), ("u1", "u2"), [[0, 1], [1, 0]])
    with stopwatch() as sw:
        net = net_realize(P, SCHEDULE)
        target = regularity_criterion(L, P).value("u2")
        low = verify_proposition3(net, L, "u2", r1=0.6, r2=0.8)
        high = verify_proposition3(net, L, "u2", r1=0.75, r2=0.8)
    limsup = low.empirical_limsup
    ok = (abs(target - 0.7) <= 1e-12 and abs(limsup - 0.7) <= 0.02 and low.r1_exceeded_cofinally
          and low.r2_respected_eventually and not high.r1_exceeded_cofinally and sw["seconds"] <= 5.0)
    record(7, ok, f"empirical limsup {limsup:.4f} within 0.02 of 0.7, (a) at r1=0.6 "
           f"{low.r1_exceeded_cofinally}, (b) at r2=0.8 {low.r2_respected_eventually}, "
           f"(a) at r1=0.75 {high.r1_exceeded_cofinally}, {sw['seconds']:.2f}s <= 5s")


def test_criterion_8_s_equivalence():
    P = RECOVERY_CASES["two points"]
    with stopwatch() as sw:
        first = net_realize(P, SCHEDULE, seed=1)
        second = net_realize(P, RealizationSchedule(8, eps0=0.5, d0=32, sweeps=8), seed=2)
        same = s_equivalent(first, second, epsilon=0.02)
        da = net_realize(Regularity.from_weights(AB, [[1, 0]]), SCHEDULE, seed=1)
        db = net_realize(Regularity.from_weights(AB, [[0, 1]]), SCHEDULE, seed=2)
        apart = s_equivalent(da, db, epsilon=0.02)
    sep = apart.witness.separation if apart.witness else 0.0
    record(8, same.equivalent and not apart.equivalent and sep >= 0.9 and sw["seconds"] <= 5.0,
           f"same regularity equivalent ({same.equivalent}, distance {same.distance:.4f}), Dirac a vs b "
           f"distinct ({not apart.equivalent}) with witness separation {sep:.3f} >= 0.9, {sw['seconds']:.2f}s <= 5s")


REPLAY_CONFIGS = [
    ("generate", {"mode": "net", "regularity": "P.json", "schedule": {"rounds": 6, "sweeps": 8}, "seed": 3,
                  "output": "net.jsonl"}),
    ("generate", {"mode": "sequence", "regularity": "hull.json", "total_length": 5000, "epsilon": 0.1,
                  "output": "seq.json"}),
    ("generate", {"mode": "iid", "measure": {"alphabet": ["t1", "t2"], "weights": [0.4, 0.6]}, "n": 5000,
                  "seed": 9, "output": "iid.json"}),
    ("estimate", {"stream": "{out}/net.jsonl"}),
    ("estimate", {"stream": "{out}/iid.json", "stride": 5, "test_function": [[1, -1]]}),
    ("equiv", {"streams": ["{out}/net.jsonl", "{out}/iid.json"], "battery": 3, "seed": 4}),
    ("decide", {"loss": "loss.csv", "regularity": "P.json"}),
    ("verify", {"stream": "{out}/net.jsonl", "loss": "loss.csv", "decision": "u2", "r1": 0.6, "r2": 0.8}),
]


def _replay(root, out, capsys):
    codes, stdout = [], []
    for i, (command, cfg) in enumerate(REPLAY_CONFIGS):
        text = json.dumps(cfg).replace("{out}", str(out))
        (root / f"{command}{i}.json").write_text(text)
        codes.append(main([command, "--config", str(root / f"{command}{i}.json"),
                           "--out", str(out), "--plot"]))
        stdout.append(capsys.readouterr().out)
    files = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    return codes, stdout, files


def test_criterion_9_replay(tmp_path, capsys):
    (tmp_path / "P.json").write_text(json.dumps(
        {"alphabet": ["t1", "t2"], "measures": [[0.7, 0.3], [0.2, 0.8]]}))
    (tmp_path / "hull.json").write_text(json.dumps(
        {"alphabet": ["t1", "t2"], "convex": True, "measures": [[0.7, 0.3], [0.2, 0.8]]}))
    (tmp_path / "loss.csv").write_text(",u1,u2\nt1,0,1\nt2,1,0\n")
    codes1, out1, files1 = _replay(tmp_path, tmp_path / "run1", capsys)
    codes2, out2, files2 = _replay(tmp_path, tmp_path / "run2", capsys)
    differing = sorted(n for n in files1 if files1[n] != files2.get(n))
    out_same = [a.replace(str(tmp_path / "run1"), "") == b.replace(str(tmp_path / "run2"), "")
                for a, b in zip(out1, out2)]
    ok = (all(c == 0 for c in codes1) and codes1 == codes2 and files1.keys() == files2.keys()
          and not differing and all(out_same))
    record(9, ok, f"{len(REPLAY_CONFIGS)} CLI runs exit {sorted(set(codes1))}, {len(files1)} output files "
           f"byte-identical across two runs (differing: {differing or 'none'})")
