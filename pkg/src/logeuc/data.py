"""Skeleton sequences: synthetic generation, file ingestion, hip-relative
preprocessing and the covariance-log descriptor pipeline.

File formats (UTF-8, ``.`` decimal separator):

* CSV: header ``seq_id,frame,label,j0x,j0y,j0z,j1x,...``; one row per frame,
  rows of a sequence contiguous and ordered by ``frame``; ``label`` is an
  integer or empty.
* JSONL: one object per line,
  ``{"seq_id": ..., "label": int|null, "subject_id": ..., "coords": [[[x, y, z], ...], ...]}``
  with ``coords`` indexed ``[frame][joint][axis]``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import (IndexOutOfRange, InconsistentJointCount, InvalidRange, LogEucError,
                     ParseError)
from .spd import LogDescriptor, covariance_descriptor, matrix_log, normalize_log

DESCRIPTOR_FORMAT = "logeuc-descriptors"
DESCRIPTOR_VERSION = 1


@dataclass(eq=False)
class SkeletonSequence:
    coords: np.ndarray  # (T, J, 3), meters
    label: int | None = None
    subject_id: int | None = None
    seq_id: str = ""

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 3 or self.coords.shape[2] != 3:
            raise ValueError(f"coords must have shape (T, J, 3), got {self.coords.shape}")
        t, j, _ = self.coords.shape
        if t < 2 or j < 2:
            raise ValueError(f"need T >= 2 frames and J >= 2 joints, got T={t}, J={j}")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("coords contain NaN or Inf")

    @property
    def frames(self) -> int:
        return self.coords.shape[0]

    @property
    def joints(self) -> int:
        return self.coords.shape[1]

    def __eq__(self, other):
        return (isinstance(other, SkeletonSequence) and self.label == other.label
                and self.subject_id == other.subject_id and self.seq_id == other.seq_id
                and self.coords.shape == other.coords.shape
                and bool(np.array_equal(self.coords, other.coords)))


@dataclass
class DescriptorSet:
    descriptors: list
    labels: np.ndarray
    indices: np.ndarray  # source sequence index of every descriptor
    seq_ids: list = field(default_factory=list)
    rejected: dict = field(default_factory=dict)  # sequence index -> reason

    @property
    def dim(self) -> int:
        return self.descriptors[0].dim if self.descriptors else 0

    def vectors(self) -> np.ndarray:
        return np.array([d.vector for d in self.descriptors])


# --- synthetic generation ---------------------------------------------------

def _random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def generate_synthetic(classes=5, per_class=20, joints=15, frames_range=(80, 160), seed=0,
                       gain=1.0, noise=0.3, scale_spread=1.0, ar_coef=0.9):
    """Sequences whose classes differ in the second-order statistics of
    their joint offsets.

    Class ``k`` owns a random orthogonal mixing ``Q_k`` and log-normal axis
    scales ``s_k``. A sequence runs a stationary AR(1) latent process
    ``z_t`` and places non-hip joints at
    ``hip_t + base + gain * Q_k diag(s_k) z_t + noise * eta_t`` while the
    hip itself drifts as a random walk.
    """
    if classes < 2 or per_class < 2 or joints < 3:
        raise InvalidRange("need classes >= 2, per_class >= 2 and joints >= 3")
    lo, hi = (int(v) for v in frames_range)
    if lo < 2 or hi < lo:
        raise InvalidRange(f"invalid frames range {frames_range}")
    f = 3 * (joints - 1)
    base = substream(seed, 0).normal(0.0, 0.3, size=f)
    mixings = []
    for k in range(classes):
        rng = substream(seed, 1, k)
        q = _random_orthogonal(rng, f)
        mixings.append(q * np.exp(rng.normal(0.0, scale_spread, size=f)))
    seqs = []
    for k in range(classes):
        for i in range(per_class):
            rng = substream(seed, 2, k, i)
            t = int(rng.integers(lo, hi + 1))
            eps = rng.standard_normal((t, f))
            z = np.empty((t, f))
            z[0] = eps[0]
            innov = math.sqrt(1.0 - ar_coef**2)
            for s in range(1, t):
                z[s] = ar_coef * z[s - 1] + innov * eps[s]
            offsets = base + gain * z @ mixings[k].T + noise * rng.standard_normal((t, f))
            hip = rng.normal(0.0, 1.0, size=3) + np.cumsum(rng.normal(0.0, 0.01, size=(t, 3)), axis=0)
            coords = np.empty((t, joints, 3))
            coords[:, 0] = hip
            coords[:, 1:] = hip[:, None, :] + offsets.reshape(t, joints - 1, 3)
            seqs.append(SkeletonSequence(coords, label=k, subject_id=i, seq_id=f"c{k}s{i}"))
    return seqs


# --- preprocessing ------------------------------------------------------------

def preprocess(seq: SkeletonSequence, hip_index: int = 0) -> np.ndarray:
    """Per-frame offsets of every non-hip joint from the hip, flattened
    joint-major to shape (T, 3 (J - 1))."""
    coords = seq.coords if isinstance(seq, SkeletonSequence) else np.asarray(seq, dtype=np.float64)
    t, j, _ = coords.shape
    if not 0 <= hip_index < j:
        raise IndexOutOfRange(f"hip index {hip_index} out of range for {j} joints")
    others = [i for i in range(j) if i != hip_index]
    rel = coords[:, others, :] - coords[:, hip_index:hip_index + 1, :]
    return rel.reshape(t, 3 * (j - 1))


def sequence_descriptor(seq, hip_index=0, ridge=1e-4, relative_ridge=True) -> LogDescriptor:
    x = preprocess(seq, hip_index)
    cov = covariance_descriptor(x, 0.0)
    eff = ridge
    if relative_ridge:
        mean_diag = float(np.mean(np.diag(cov)))
        eff = ridge * mean_diag if mean_diag > 0 else ridge
    cov[np.diag_indices_from(cov)] += eff
    return normalize_log(matrix_log(cov))


def descriptor_pipeline(seqs, hip_index=0, ridge=1e-4, relative_ridge=True) -> DescriptorSet:
    """preprocess -> covariance + ridge -> matrix log -> unit normalization.

    With ``relative_ridge`` the ridge is scaled by the mean covariance
    diagonal (falling back to the absolute value for an all-zero
    covariance). Failing sequences are recorded in ``rejected`` and skipped.
    """
    seqs = list(seqs)
    joint_counts = {s.joints for s in seqs}
    if len(joint_counts) > 1:
        raise InconsistentJointCount(f"sequences have differing joint counts {sorted(joint_counts)}")
    descs, labels, kept, ids, rejected = [], [], [], [], {}
    for i, seq in enumerate(seqs):
        try:
            d = sequence_descriptor(seq, hip_index, ridge, relative_ridge)
        except (IndexOutOfRange, InconsistentJointCount):
            raise
        except LogEucError as exc:
            rejected[i] = f"{type(exc).__name__}: {exc}"
            continue
        descs.append(d)
        labels.append(-1 if seq.label is None else seq.label)
        kept.append(i)
        ids.append(seq.seq_id)
    return DescriptorSet(descs, np.array(labels, dtype=np.int64), np.array(kept, dtype=np.int64),
                         ids, rejected)


# --- file I/O -----------------------------------------------------------------

def _csv_header(joints):
    return ["seq_id", "frame", "label"] + [f"j{j}{a}" for j in range(joints) for a in "xyz"]


def save_sequences(seqs, path, format="csv") -> None:
    seqs = list(seqs)
    if format == "csv":
        joints = seqs[0].joints if seqs else 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if seqs:
                w.writerow(_csv_header(joints))
            for n, s in enumerate(seqs):
                sid = s.seq_id or str(n)
                label = "" if s.label is None else str(s.label)
                for t in range(s.frames):
                    w.writerow([sid, t, label] + [repr(float(v)) for v in s.coords[t].ravel()])
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for n, s in enumerate(seqs):
                fh.write(json.dumps({"seq_id": s.seq_id or str(n), "label": s.label,
                                     "subject_id": s.subject_id,
                                     "coords": s.coords.tolist()}) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def _parse_label(text, where):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"label {text!r} is not an integer", where) from None


def _load_csv(path):
    seqs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if header[:3] != ["seq_id", "frame", "label"] or (len(header) - 3) % 3 or len(header) < 9:
            raise ParseError("header must be seq_id,frame,label,j0x,j0y,j0z,...", f"{path}:1")
        joints = (len(header) - 3) // 3
        current, frames, label = None, [], None

        def flush():
            if current is not None:
                try:
                    seqs.append(SkeletonSequence(np.array(frames).reshape(len(frames), joints, 3),
                                                 label=label, seq_id=current))
                except ValueError as exc:
                    raise ParseError(str(exc), f"{path}: sequence {current!r}") from None

        for row in reader:
            where = f"{path}:{reader.line_num}"
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} columns, got {len(row)}", where)
            sid = row[0]
            try:
                values = [float(v) for v in row[3:]]
            except ValueError:
                raise ParseError("non-numeric coordinate", where) from None
            if sid != current:
                if any(s.seq_id == sid for s in seqs):
                    raise ParseError(f"rows of sequence {sid!r} are not contiguous", where)
                flush()
                current, frames, label = sid, [], _parse_label(row[2], where)
            frames.append(values)
        flush()
    return seqs


def _load_jsonl(path):
    seqs, joints = [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
                coords = np.asarray(obj["coords"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad record ({type(exc).__name__}: {exc})", where) from None
            if coords.ndim != 3 or coords.shape[2] != 3:
                raise ParseError(f"coords must be [frame][joint][xyz], got shape {coords.shape}", where)
            if joints is not None and coords.shape[1] != joints:
                raise InconsistentJointCount(f"{where}: {coords.shape[1]} joints, expected {joints}")
            joints = coords.shape[1]
            label = obj.get("label")
            if label is not None and not isinstance(label, int):
                raise ParseError(f"label {label!r} is not an integer", where)
            try:
                seqs.append(SkeletonSequence(coords, label=label, subject_id=obj.get("subject_id"),
                                             seq_id=str(obj.get("seq_id", len(seqs)))))
            except ValueError as exc:
                raise ParseError(str(exc), where) from None
    return seqs


def load_sequences(path, format=None):
    """Read skeleton sequences from CSV or JSONL (format inferred from the
    file suffix when omitted)."""
    if format is None:
        format = "jsonl" if str(path).endswith((".jsonl", ".json")) else "csv"
    if format == "csv":
        return _load_csv(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise ValueError(f"unknown format {format!r}")


def save_descriptors(dset: DescriptorSet, path, params=None) -> None:
    doc = {
        "format": DESCRIPTOR_FORMAT, "version": DESCRIPTOR_VERSION, "dim": dset.dim,
        "params": params or {}, "labels": dset.labels.tolist(), "indices": dset.indices.tolist(),
        "seq_ids": list(dset.seq_ids),
        "rejected": {str(k): v for k, v in sorted(dset.rejected.items())},
        "descriptors": [d.vector.tolist() for d in dset.descriptors],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_descriptors(path) -> DescriptorSet:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), f"{path}:{exc.lineno}") from None
    if doc.get("format") != DESCRIPTOR_FORMAT or doc.get("version") != DESCRIPTOR_VERSION:
        raise ParseError(f"not a version-{DESCRIPTOR_VERSION} descriptor container", str(path))
    descs = [LogDescriptor.from_vector(np.array(row, dtype=np.float64)) for row in doc["descriptors"]]
    return DescriptorSet(descs, np.array(doc["labels"], dtype=np.int64),
                         np.array(doc["indices"], dtype=np.int64), doc.get("seq_ids", []),
                         {int(k): v for k, v in doc.get("rejected", {}).items()})
