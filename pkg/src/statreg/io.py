"""File formats.

* regularity JSON: ``{"alphabet": [...], "convex": bool, "measures": [[...], ...]}``
* measure JSON: ``{"alphabet": [...], "weights": [...]}``
* sampling net JSON lines: a header ``{"alphabet": [...], "meta": {...}}``
  followed by one ``{"lambda", "round", "target", "tuple"}`` record per index
* symbol sequence JSON: ``{"alphabet": [...], "symbols": [...], "meta": {...}}``
* trajectory CSV: ``index,dim0,dim1,...``
* limit-set estimate JSON: ``{"epsilon", "windows", "centers", "visits"}``
* loss matrix CSV: first row decision labels, first column parameter labels

All writers go through :func:`atomic_write` and produce byte-identical
output for identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from statreg.decision import LossMatrix
from statreg.empirics import LimitSetEstimate, Trajectory
from statreg.errors import DataError
from statreg.measures import Alphabet, Measure, Regularity, make_measure
from statreg.realization import SamplingNet, SymbolSequence


def atomic_write(path, data: str | bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def _alphabet(doc, where) -> Alphabet:
    if not isinstance(doc, dict) or not isinstance(doc.get("alphabet"), list):
        raise DataError(f"{where}: missing 'alphabet' list")
    return Alphabet(tuple(doc["alphabet"]))


# regularities and measures

def regularity_to_doc(P: Regularity) -> dict:
    return {"alphabet": list(P.alphabet), "convex": P.convex,
            "measures": [p.weights.tolist() for p in P.points]}


def regularity_from_doc(doc, where="regularity") -> Regularity:
    alphabet = _alphabet(doc, where)
    unknown = set(doc) - {"alphabet", "convex", "measures"}
    if unknown:
        raise DataError(f"{where}: unknown keys {sorted(unknown)}")
    measures = doc.get("measures")
    if not isinstance(measures, list) or not measures:
        raise DataError(f"{where}: 'measures' must be a nonempty list")
    return Regularity.from_weights(alphabet, measures, convex=bool(doc.get("convex", False)),
                                   normalize=False)


def load_regularity(path) -> Regularity:
    return regularity_from_doc(_read_json(path), str(path))


def save_regularity(P: Regularity, path) -> None:
    atomic_write(path, dumps(regularity_to_doc(P)))


def measure_from_doc(doc, where="measure") -> Measure:
    alphabet = _alphabet(doc, where)
    if "weights" not in doc:
        raise DataError(f"{where}: missing 'weights'")
    return make_measure(alphabet, doc["weights"], normalize=False)


def load_measure(path) -> Measure:
    return measure_from_doc(_read_json(path), str(path))


# streams

def net_to_jsonl(net: SamplingNet) -> str:
    out = io.StringIO()
    out.write(json.dumps({"alphabet": list(net.alphabet), "meta": net.meta}) + "\n")
    for n, (item, r, j) in enumerate(zip(net.items, net.rounds, net.targets)):
        record = {"lambda": n, "round": int(r), "target": int(j),
                  "tuple": net.alphabet.decode(item)}
        out.write(json.dumps(record) + "\n")
    return out.getvalue()


def save_net(net: SamplingNet, path) -> None:
    atomic_write(path, net_to_jsonl(net))


def net_from_lines(lines, alphabet: Alphabet | None = None, where="net") -> SamplingNet:
    meta: dict = {}
    items, rounds, targets = [], [], []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{where}:{lineno}: invalid JSON ({exc})") from None
        if not isinstance(record, dict):
            raise DataError(f"{where}:{lineno}: expected an object")
        if "tuple" not in record:
            if items or "alphabet" not in record:
                raise DataError(f"{where}:{lineno}: expected a net record")
            alphabet = Alphabet(tuple(record["alphabet"]))
            meta = record.get("meta", {})
            continue
        if alphabet is None:
            raise DataError(f"{where}: no alphabet header and none supplied")
        if record.get("lambda") != len(items):
            raise DataError(f"{where}:{lineno}: lambda {record.get('lambda')!r} out of sequence")
        items.append(alphabet.encode(record["tuple"]))
        rounds.append(int(record.get("round", 0)))
        targets.append(int(record.get("target", len(targets))))
    if not items:
        raise DataError(f"{where}: no net records")
    return SamplingNet(alphabet, tuple(items), tuple(rounds), tuple(targets), meta)


def sequence_to_doc(seq: SymbolSequence) -> dict:
    return {"alphabet": list(seq.alphabet), "symbols": seq.symbols, "meta": seq.meta}


def save_sequence(seq: SymbolSequence, path) -> None:
    atomic_write(path, json.dumps(sequence_to_doc(seq)) + "\n")


def sequence_from_doc(doc, where="sequence") -> SymbolSequence:
    alphabet = _alphabet(doc, where)
    symbols = doc.get("symbols")
    if not isinstance(symbols, list) or not symbols:
        raise DataError(f"{where}: 'symbols' must be a nonempty list")
    return SymbolSequence(alphabet, alphabet.encode(symbols), doc.get("meta", {}))


def load_stream(path, alphabet: Alphabet | None = None) -> SamplingNet | SymbolSequence:
    """Read either stream format, telling them apart by content."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    if not text.strip():
        raise DataError(f"{path}: empty stream file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "symbols" in doc:
        return sequence_from_doc(doc, str(path))
    return net_from_lines(text.splitlines(), alphabet, str(path))


# trajectories and estimates

def trajectory_to_csv(traj: Trajectory) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index"] + [f"dim{i}" for i in range(traj.points.shape[1])])
    for n, row in zip(traj.indices, traj.points):
        writer.writerow([int(n)] + [repr(float(v)) for v in row])
    return out.getvalue()


def save_trajectory(traj: Trajectory, path) -> None:
    atomic_write(path, trajectory_to_csv(traj))


def load_trajectory(path, kind: str = "vector") -> Trajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "index":
        raise DataError(f"{path}: missing 'index,dim0,...' header")
    body = np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(rows[0]))
    return Trajectory(body[:, 0].astype(np.int64), body[:, 1:], kind)


def estimate_to_doc(est: LimitSetEstimate) -> dict:
    return {"epsilon": est.epsilon, "windows": est.windows,
            "centers": est.centers.tolist(), "visits": est.visits.tolist()}


def save_estimate(est: LimitSetEstimate, path) -> None:
    atomic_write(path, dumps(estimate_to_doc(est)))


# loss matrices

def loss_to_csv(L: LossMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([""] + list(L.decision_labels))
    for theta, row in zip(L.theta_labels, L.values):
        writer.writerow([theta] + [repr(float(v)) for v in row])
    return out.getvalue()


def save_loss(L: LossMatrix, path) -> None:
    atomic_write(path, loss_to_csv(L))


def load_loss(path) -> LossMatrix:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    if len(rows) < 2 or len(rows[0]) < 2:
        raise DataError(f"{path}: loss CSV needs a header row and at least one parameter row")
    decisions = [c.strip() for c in rows[0][1:]]
    theta, values = [], []
    for r in rows[1:]:
        if len(r) != len(rows[0]):
            raise DataError(f"{path}: ragged row {r!r}")
        theta.append(r[0].strip())
        try:
            values.append([float(c) for c in r[1:]])
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
    return LossMatrix(tuple(theta), tuple(decisions), np.array(values))
