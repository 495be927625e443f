"""Binary model bundle: scorer, gates, grammar and training config in one file.

Byte layout (all integers little-endian)::

    magic      4 bytes  b"CBND"
    version    u16
    count      u32      number of sections
    section*   name_len u16, name utf-8, kind u8, payload_len u64, payload
    crc32      u32      over every preceding byte

Section kinds: 0 = UTF-8 text (JSON or grammar rules), 1 = float64 array
stored as ``ndim u8``, ``ndim`` x ``u32`` dims, then row-major data.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..gatekeepers import GateModel
from ..grammar.pcfg import Pcfg, loads_pcfg
from ..scorer.model import ScorerModel

MAGIC = b"CBND"
FORMAT_VERSION = 1
KIND_TEXT = 0
KIND_ARRAY = 1
GATE_NAMES = ("coord", "np")


class BundleError(ValueError):
    pass


class BundleVersionError(BundleError):
    pass


class BundleCorruptError(BundleError):
    pass


@dataclass
class ModelBundle:
    scorer: ScorerModel
    pcfg: Pcfg
    gates: dict[str, GateModel] = field(default_factory=dict)
    train_config: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def grammar_hash(self) -> str:
        return self.pcfg.fingerprint()


def _text(name: str, text: str):
    return name, KIND_TEXT, text.encode("utf-8")


def _array(name: str, arr: np.ndarray):
    arr = np.ascontiguousarray(arr, dtype="<f8")
    head = struct.pack("<B", arr.ndim) + b"".join(struct.pack("<I", d) for d in arr.shape)
    return name, KIND_ARRAY, head + arr.tobytes()


def _sections(bundle: ModelBundle):
    gates = {k: g for k, g in bundle.gates.items() if g is not None}
    unknown = set(gates) - set(GATE_NAMES)
    if unknown:
        raise BundleError(f"unknown gate names {sorted(unknown)}")
    scorer_state = bundle.scorer.state()
    meta = {
        "grammar_hash": bundle.grammar_hash,
        "train_config": bundle.train_config,
        "scorer": {"config": scorer_state["config"], "vocab": scorer_state["vocab"],
                   "params": list(scorer_state["params"])},
        "gates": {},
    }
    yield _text("grammar", bundle.pcfg.dumps())
    for name, arr in scorer_state["params"].items():
        yield _array(f"scorer/{name}", arr)
    for gname in sorted(gates):
        st = gates[gname].state()
        meta["gates"][gname] = {"config": st["config"], "vocab": st["vocab"], "singletons": st["singletons"],
                                "params": list(st["params"])}
        for name, arr in st["params"].items():
            yield _array(f"gate.{gname}/{name}", arr)
    yield _text("meta", json.dumps(meta, sort_keys=True))


def dumps_bundle(bundle: ModelBundle) -> bytes:
    sections = list(_sections(bundle))
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HI", bundle.version, len(sections)))
    for name, kind, payload in sections:
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<BQ", kind, len(payload)))
        buf.write(payload)
    body = buf.getvalue()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_bundle(bundle: ModelBundle, path) -> None:
    data = dumps_bundle(bundle)
    with open(path, "wb") as f:
        f.write(data)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise BundleCorruptError("bundle is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _decode_array(payload: bytes) -> np.ndarray:
    r = _Reader(payload)
    (ndim,) = r.unpack("<B")
    shape = r.unpack(f"<{ndim}I") if ndim else ()
    size = int(np.prod(shape)) if ndim else 1
    raw = r.take(8 * size)
    if r.pos != len(payload):
        raise BundleCorruptError("array section has trailing bytes")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)


def loads_bundle(data: bytes) -> ModelBundle:
    if len(data) < len(MAGIC) + 10:
        raise BundleCorruptError("bundle is truncated")
    if data[:4] != MAGIC:
        raise BundleCorruptError("not a model bundle (bad magic)")
    (version,) = struct.unpack("<H", data[4:6])
    if version != FORMAT_VERSION:
        raise BundleVersionError(f"bundle format version {version}, this build reads version {FORMAT_VERSION}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise BundleCorruptError("checksum mismatch (file damaged or truncated)")
    r = _Reader(body)
    r.take(6)
    (count,) = r.unpack("<I")
    texts, arrays = {}, {}
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode("utf-8")
        kind, plen = r.unpack("<BQ")
        payload = r.take(plen)
        if kind == KIND_TEXT:
            texts[name] = payload.decode("utf-8")
        elif kind == KIND_ARRAY:
            arrays[name] = _decode_array(payload)
        else:
            raise BundleCorruptError(f"unknown section kind {kind} for {name!r}")
    if r.pos != len(body):
        raise BundleCorruptError("trailing bytes after the last section")
    try:
        meta = json.loads(texts["meta"])
        pcfg = loads_pcfg(texts["grammar"])
    except KeyError as e:
        raise BundleCorruptError(f"missing section {e}") from e
    if pcfg.fingerprint() != meta["grammar_hash"]:
        raise BundleCorruptError("grammar does not match the recorded hash")
    sm = meta["scorer"]
    scorer = ScorerModel.from_state({"config": sm["config"], "vocab": sm["vocab"],
                                     "params": {k: _need(arrays, f"scorer/{k}") for k in sm["params"]}})
    gates = {}
    for gname, gm in meta["gates"].items():
        gates[gname] = GateModel.from_state({"config": gm["config"], "vocab": gm["vocab"],
                                             "singletons": gm["singletons"],
                                             "params": {k: _need(arrays, f"gate.{gname}/{k}") for k in gm["params"]}})
    return ModelBundle(scorer, pcfg, gates, meta["train_config"], version)


def _need(arrays: dict, name: str) -> np.ndarray:
    if name not in arrays:
        raise BundleCorruptError(f"missing array section {name!r}")
    return arrays[name]


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as f:
        return loads_bundle(f.read())
