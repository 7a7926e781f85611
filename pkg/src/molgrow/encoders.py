"""Embedding contracts: protein (1280-dim) and molecule (768-dim) encoders.

Two adapters are provided. The stub encoder is a pure function of
(encoder_id, input string): a seeded pseudorandom projection of a SHA-256
hash into the target dimension, L2-normalized and stored as float32 so it is
bit-exact across sessions. The file-protocol adapter shells out to an
external model service through request/response text files (one input per
line in, one whitespace-separated vector per line out).

All encoders sit behind a persistent binary cache keyed by
sha256(encoder_id | input); a warm cache returns the identical bytes a cold
encode produced.
"""

from __future__ import annotations

import hashlib
import os
import struct
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Molecule
from .errors import DimensionMismatchError, EncoderUnavailableError

PROTEIN_DIM = 1280
MOLECULE_DIM = 768

AMINO_ACIDS = set("ACDEFGHIKLMNPQRSTVWYX")


@dataclass(frozen=True)
class Embedding:
    vector: np.ndarray
    dim: int
    encoder_id: str

    def __post_init__(self) -> None:
        if self.vector.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector length {self.vector.shape} != dim {self.dim}"
            )
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("embedding contains non-finite entries")


@dataclass(frozen=True)
class EncoderSpec:
    encoder_id: str
    modality: str  # "protein" | "molecule"
    dim: int = 0

    def __post_init__(self) -> None:
        if self.modality not in ("protein", "molecule"):
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.dim <= 0:
            default = PROTEIN_DIM if self.modality == "protein" else MOLECULE_DIM
            object.__setattr__(self, "dim", default)


def cache_key(encoder_id: str, text: str) -> str:
    return hashlib.sha256(f"{encoder_id}|{text}".encode()).hexdigest()


class EmbeddingCache:
    """Append-only binary store: records of (64-hex key, uint32 dim, payload
    of dim little-endian float32)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._mem: dict[str, np.ndarray] = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        data = self.path.read_bytes()
        off = 0
        while off < len(data):
            key = data[off : off + 64].decode("ascii")
            (dim,) = struct.unpack_from("<I", data, off + 64)
            off += 68
            vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).copy()
            off += 4 * dim
            self._mem[key] = vec

    def get(self, key: str) -> np.ndarray | None:
        return self._mem.get(key)

    def put(self, key: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype="<f4")
        self._mem[key] = vec
        if self.path:
            with open(self.path, "ab") as fh:
                fh.write(key.encode("ascii"))
                fh.write(struct.pack("<I", vec.shape[0]))
                fh.write(vec.tobytes())

    def __len__(self) -> int:
        return len(self._mem)


class StubEncoder:
    """Deterministic hash-projection encoder used for tests and CI runs."""

    def __init__(self, spec: EncoderSpec):
        self.spec = spec

    def encode_batch(self, texts: list[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            digest = hashlib.sha256(f"{self.spec.encoder_id}|{text}".encode()).digest()
            seed = int.from_bytes(digest[:8], "little")
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.spec.dim)
            vec /= np.linalg.norm(vec)
            out.append(vec.astype("<f4"))
        return out


@dataclass
class FileProtocolEncoder:
    """Adapter for an external model runtime driven through files.

    The command is invoked as ``cmd <request_file> <response_file>``; the
    request holds one input per line, the response one whitespace-separated
    vector per line in the same order.
    """

    spec: EncoderSpec
    command: list[str] = field(default_factory=list)

    def encode_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not self.command:
            raise EncoderUnavailableError("no encoder command configured")
        with tempfile.TemporaryDirectory() as tmp:
            req = os.path.join(tmp, "request.txt")
            resp = os.path.join(tmp, "response.txt")
            with open(req, "w") as fh:
                for t in texts:
                    fh.write(t + "\n")
            try:
                proc = subprocess.run(
                    [*self.command, req, resp], capture_output=True, text=True
                )
            except FileNotFoundError as exc:
                raise EncoderUnavailableError(str(exc)) from exc
            if proc.returncode != 0:
                raise EncoderUnavailableError(
                    f"encoder command failed ({proc.returncode}): {proc.stderr.strip()}"
                )
            out = []
            with open(resp) as fh:
                for line in fh:
                    vec = np.array([float(x) for x in line.split()], dtype="<f4")
                    if vec.shape[0] != self.spec.dim:
                        raise DimensionMismatchError(
                            f"response vector has dim {vec.shape[0]},"
                            f" expected {self.spec.dim}"
                        )
                    out.append(vec)
        if len(out) != len(texts):
            raise EncoderUnavailableError(
                f"{len(out)} response vectors for {len(texts)} inputs"
            )
        return out


def _encode(text: str, spec: EncoderSpec, cache: EmbeddingCache, encoder) -> Embedding:
    key = cache_key(spec.encoder_id, text)
    vec = cache.get(key)
    if vec is None:
        vec = encoder.encode_batch([text])[0]
        cache.put(key, vec)
    return Embedding(vector=vec.astype(np.float64), dim=spec.dim, encoder_id=spec.encoder_id)


def encode_protein(
    sequence: str, spec: EncoderSpec, cache: EmbeddingCache, encoder=None
) -> Embedding:
    if spec.modality != "protein":
        raise ValueError("protein encoder spec required")
    bad = set(sequence) - AMINO_ACIDS
    if not sequence or bad:
        raise ValueError(f"invalid amino-acid sequence (bad letters: {sorted(bad)})")
    encoder = encoder or StubEncoder(spec)
    return _encode(sequence, spec, cache, encoder)


def encode_molecule(
    m: Molecule, spec: EncoderSpec, cache: EmbeddingCache, encoder=None
) -> Embedding:
    if spec.modality != "molecule":
        raise ValueError("molecule encoder spec required")
    encoder = encoder or StubEncoder(spec)
    return _encode(m.smiles, spec, cache, encoder)


def encode_molecules(
    ms: list[Molecule], spec: EncoderSpec, cache: EmbeddingCache, encoder=None
) -> list[Embedding]:
    """Batch variant preserving input order."""
    encoder = encoder or StubEncoder(spec)
    missing = [m.smiles for m in ms if cache.get(cache_key(spec.encoder_id, m.smiles)) is None]
    if missing:
        for text, vec in zip(missing, encoder.encode_batch(missing)):
            cache.put(cache_key(spec.encoder_id, text), vec)
    return [
        Embedding(
            vector=cache.get(cache_key(spec.encoder_id, m.smiles)).astype(np.float64),
            dim=spec.dim,
            encoder_id=spec.encoder_id,
        )
        for m in ms
    ]
