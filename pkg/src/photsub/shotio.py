"""Shot-file formats.

JSON lines
    First line is a header object ``{"format": "photsub-shots", "version": 1,
    "config": {...}}``; each following line holds one record with keys
    ``n, s_r, s_t, m_r, m_t, v_r, v_t``.

Binary (all little-endian)
    ``b"PHSB"`` magic, ``u16`` version, ``u32`` header length, UTF-8 JSON
    header (same object as above), ``u64`` record count, then fixed-width
    records of 36 bytes: five ``u32`` counts ``n, s_r, s_t, m_r, m_t`` and
    two ``f64`` voltages ``v_r, v_t``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ShotFileError
from .lab import ExperimentConfig, ShotBatch

FORMAT = "photsub-shots"
VERSION = 1
MAGIC = b"PHSB"
RECORD_DTYPE = np.dtype([
    ("n", "<u4"), ("s_r", "<u4"), ("s_t", "<u4"), ("m_r", "<u4"), ("m_t", "<u4"),
    ("v_r", "<f8"), ("v_t", "<f8"),
])
_KEYS = ("n", "s_r", "s_t", "m_r", "m_t", "v_r", "v_t")


def _header(cfg: ExperimentConfig) -> dict:
    return {"format": FORMAT, "version": VERSION, "config": cfg.to_dict()}


def _parse_header(obj, where: str) -> ExperimentConfig:
    if not isinstance(obj, dict) or obj.get("format") != FORMAT:
        raise ShotFileError(f"{where}: not a {FORMAT} header")
    if obj.get("version") != VERSION:
        raise ShotFileError(f"{where}: unsupported version {obj.get('version')!r}")
    try:
        return ExperimentConfig.from_dict(obj["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ShotFileError(f"{where}: bad config ({exc})") from exc


def write_jsonl(path, cfg: ExperimentConfig, batch: ShotBatch) -> None:
    cols = [getattr(batch, f).tolist() for f in ShotBatch.FIELDS]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_header(cfg), sort_keys=True) + "\n")
        for row in zip(*cols):
            fh.write(json.dumps(dict(zip(_KEYS, row))) + "\n")


def read_jsonl(path) -> tuple[ExperimentConfig, ShotBatch]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        try:
            cfg = _parse_header(json.loads(first), f"{path}:1")
        except json.JSONDecodeError as exc:
            raise ShotFileError(f"{path}:1: malformed header ({exc.msg})") from exc
        for lineno, line in enumerate(fh, start=2):
            if not line.endswith("\n"):
                raise ShotFileError(f"{path}:{lineno}: truncated record")
            try:
                obj = json.loads(line)
                rows.append(tuple(obj[k] for k in _KEYS))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ShotFileError(f"{path}:{lineno}: malformed record ({exc})") from exc
    if len(rows) != cfg.shots:
        raise ShotFileError(
            f"{path}:{len(rows) + 2}: expected {cfg.shots} records, found {len(rows)}")
    arr = np.array(rows, dtype=float)
    ints = arr[:, :5]
    if np.any(ints != np.round(ints)) or np.any(ints < 0):
        raise ShotFileError(f"{path}: counts must be non-negative integers")
    ints = ints.astype(np.int64)
    return cfg, ShotBatch(*(ints[:, i] for i in range(5)), arr[:, 5].copy(), arr[:, 6].copy())


def write_binary(path, cfg: ExperimentConfig, batch: ShotBatch) -> None:
    header = json.dumps(_header(cfg), sort_keys=True).encode("utf-8")
    rec = np.empty(len(batch), dtype=RECORD_DTYPE)
    for key, field in zip(_KEYS, ShotBatch.FIELDS):
        rec[key] = getattr(batch, field)
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<HI", VERSION, len(header)) + header)
        fh.write(struct.pack("<Q", len(batch)))
        fh.write(rec.tobytes())


def read_binary(path) -> tuple[ExperimentConfig, ShotBatch]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ShotFileError(f"{path}: byte 0: bad magic")
    if len(data) < 10:
        raise ShotFileError(f"{path}: byte {len(data)}: truncated preamble")
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise ShotFileError(f"{path}: byte 4: unsupported version {version}")
    off = 10
    if len(data) < off + hlen + 8:
        raise ShotFileError(f"{path}: byte {len(data)}: truncated header")
    try:
        header = json.loads(data[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ShotFileError(f"{path}: byte {off}: malformed header") from exc
    cfg = _parse_header(header, f"{path}: byte {off}")
    off += hlen
    (count,) = struct.unpack_from("<Q", data, off)
    off += 8
    need = count * RECORD_DTYPE.itemsize
    if len(data) - off != need:
        raise ShotFileError(
            f"{path}: byte {len(data)}: expected {count} records ending at byte {off + need}")
    rec = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=off)
    ints = [rec[k].astype(np.int64) for k in _KEYS[:5]]
    return cfg, ShotBatch(*ints, rec["v_r"].astype(float), rec["v_t"].astype(float))


def is_binary(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == MAGIC


def write_shots(path, cfg: ExperimentConfig, batch: ShotBatch, binary: bool = False) -> None:
    (write_binary if binary else write_jsonl)(path, cfg, batch)


def read_shots(path) -> tuple[ExperimentConfig, ShotBatch]:
    return read_binary(path) if is_binary(path) else read_jsonl(path)
