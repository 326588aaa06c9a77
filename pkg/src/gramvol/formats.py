"""File formats: embedding files, key=value configs, traces, checkpoints.

Embedding files are line-delimited JSON: a header record carrying the
dimension and a format version, then one record per (id, modality) with
the raw vector.  Floats are written with shortest-round-trip decimals, so
a write/read cycle reproduces 64-bit values exactly.  All writers go
through a temp file plus rename, so partially written outputs never
appear under the target name.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmbeddingParseError, InvalidConfigError
from .synth import SyntheticSpec
from .train import TRACE_COLUMNS, TraceRow, TrainConfig, TrainingTrace

EMBED_FORMAT_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1


def _atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: str | Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# Embedding files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    modality: str
    vec: np.ndarray


@dataclass
class EmbeddingFile:
    """Parsed embedding file: dimension plus records in file order."""

    n: int
    records: list[EmbeddingRecord]

    def modalities(self) -> list[str]:
        seen: list[str] = []
        for r in self.records:
            if r.modality not in seen:
                seen.append(r.modality)
        return seen

    def single_modality(self) -> str:
        mods = self.modalities()
        if len(mods) != 1:
            raise EmbeddingParseError(
                f"expected exactly one modality per file, found {mods}"
            )
        return mods[0]

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def by_id(self) -> dict[str, np.ndarray]:
        return {r.id: r.vec for r in self.records}


def write_embeddings(
    path: str | Path,
    dim: int,
    records: Iterable[tuple[str, str, Sequence[float]]],
) -> None:
    """Write (id, modality, vector) triples under a dimension header."""
    lines = [json.dumps({"format_version": EMBED_FORMAT_VERSION, "n": int(dim)})]
    for rec_id, modality, vec in records:
        arr = np.asarray(vec, dtype=np.float64)
        lines.append(json.dumps(
            {"id": str(rec_id), "modality": str(modality), "vec": arr.tolist()}
        ))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_embeddings(path: str | Path) -> EmbeddingFile:
    """Parse an embedding file, reporting the line number of any defect."""
    header = None
    records: list[EmbeddingRecord] = []
    seen: set[tuple[str, str]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbeddingParseError(f"invalid JSON: {exc}", line_no) from exc
            if header is None:
                if obj.get("format_version") != EMBED_FORMAT_VERSION or "n" not in obj:
                    raise EmbeddingParseError(
                        "first record must be a header with format_version=1 and n",
                        line_no,
                    )
                header = int(obj["n"])
                if header < 1:
                    raise EmbeddingParseError(f"header n must be >= 1, got {header}", line_no)
                continue
            try:
                rec_id = str(obj["id"])
                modality = str(obj["modality"])
                vec = np.asarray(obj["vec"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as exc:
                raise EmbeddingParseError(f"bad record: {exc}", line_no) from exc
            if vec.ndim != 1 or vec.shape[0] != header:
                raise EmbeddingParseError(
                    f"vector length {vec.shape} does not match header n={header}",
                    line_no,
                )
            key = (rec_id, modality)
            if key in seen:
                raise EmbeddingParseError(f"duplicate (id, modality) {key}", line_no)
            seen.add(key)
            records.append(EmbeddingRecord(id=rec_id, modality=modality, vec=vec))
    if header is None:
        raise EmbeddingParseError("file has no header record", 1)
    return EmbeddingFile(n=header, records=records)


# ---------------------------------------------------------------------------
# key=value configs
# ---------------------------------------------------------------------------

_SPEC_KEYS = {
    "latent_dim": int,
    "embed_dim": int,
    "modalities": int,
    "num_classes": int,
    "samples": int,
    "data_seed": int,
    "paired_dims": int,
}

_TRAIN_KEYS = {
    "batch_size": int,
    "epochs": int,
    "lr": float,
    "beta1": float,
    "beta2": float,
    "adam_eps": float,
    "weight_decay": float,
    "lambda": float,
    "tau_init": float,
    "seed": int,
    "loss": str,
    "eval_max_samples": int,
    "holdout_fraction": float,
}


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blanks skipped."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {line_no}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise InvalidConfigError(f"line {line_no}: empty key or value in {raw!r}")
        if key in out:
            raise InvalidConfigError(f"line {line_no}: duplicate key {key!r}")
        out[key] = value
    return out


def build_train_setup(kv: dict[str, str]) -> tuple[SyntheticSpec, TrainConfig]:
    """Typed (SyntheticSpec, TrainConfig) from parsed key=value pairs.

    ``seed`` drives training and, unless ``data_seed`` is given, data
    generation as well.  ``noise_sigma`` accepts a single float or a
    comma-separated list (one value per modality).
    """
    spec_kwargs: dict = {}
    train_kwargs: dict = {}
    for key, value in kv.items():
        try:
            if key == "noise_sigma":
                parts = [float(p) for p in value.split(",")]
                spec_kwargs["noise_sigma"] = parts[0] if len(parts) == 1 else tuple(parts)
            elif key in _SPEC_KEYS:
                name = "seed" if key == "data_seed" else key
                spec_kwargs[name] = _SPEC_KEYS[key](value)
            elif key in _TRAIN_KEYS:
                name = "lam" if key == "lambda" else key
                train_kwargs[name] = _TRAIN_KEYS[key](value)
            else:
                raise InvalidConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise InvalidConfigError(f"bad value for {key!r}: {value!r}") from exc
    if "seed" in train_kwargs and "seed" not in spec_kwargs:
        spec_kwargs["seed"] = train_kwargs["seed"]
    return SyntheticSpec(**spec_kwargs), TrainConfig(**train_kwargs)


def read_train_setup(path: str | Path) -> tuple[SyntheticSpec, TrainConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        return build_train_setup(parse_key_values(fh.read()))


# ---------------------------------------------------------------------------
# Training traces
# ---------------------------------------------------------------------------

def trace_to_csv(trace: TrainingTrace) -> str:
    lines = [",".join(TRACE_COLUMNS)]
    for row in trace.rows:
        cells = [str(row.epoch)]
        cells += [repr(getattr(row, c)) for c in TRACE_COLUMNS[1:]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_trace_csv(path: str | Path, trace: TrainingTrace) -> None:
    _atomic_write_text(path, trace_to_csv(trace))


def read_trace_csv(path: str | Path) -> TrainingTrace:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != ",".join(TRACE_COLUMNS):
        raise InvalidConfigError(f"unexpected trace header in {path}")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        rows.append(TraceRow(
            epoch=int(cells[0]),
            **{c: float(v) for c, v in zip(TRACE_COLUMNS[1:], cells[1:])},
        ))
    return TrainingTrace(rows=rows)


# ---------------------------------------------------------------------------
# Checkpoints: flat little-endian float64 binary + JSON shape sidecar
# ---------------------------------------------------------------------------

def write_checkpoint(
    bin_path: str | Path,
    json_path: str | Path,
    params: dict[str, np.ndarray],
) -> None:
    blobs = []
    tensors = []
    for name, arr in params.items():
        arr = np.asarray(arr, dtype="<f8")
        blobs.append(arr.tobytes(order="C"))
        tensors.append({"name": name, "shape": list(arr.shape)})
    sidecar = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dtype": "<f8",
        "tensors": tensors,
    }
    _atomic_write_bytes(bin_path, b"".join(blobs))
    _atomic_write_text(json_path, json.dumps(sidecar, indent=2) + "\n")


def read_checkpoint(bin_path: str | Path, json_path: str | Path) -> dict[str, np.ndarray]:
    with open(json_path, "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    if sidecar.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise InvalidConfigError(f"unsupported checkpoint version in {json_path}")
    flat = np.fromfile(bin_path, dtype="<f8")
    out: dict[str, np.ndarray] = {}
    offset = 0
    for tensor in sidecar["tensors"]:
        shape = tuple(tensor["shape"])
        size = int(np.prod(shape)) if shape else 1
        out[tensor["name"]] = flat[offset:offset + size].reshape(shape).astype(np.float64)
        offset += size
    if offset != flat.size:
        raise InvalidConfigError("checkpoint binary size does not match sidecar shapes")
    return out
