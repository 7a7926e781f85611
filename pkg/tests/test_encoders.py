"""Embedding adapters and the persistent binary cache."""

import sys

import numpy as np
import pytest

from molgrow.core import parse_molecule
from molgrow.encoders import (
    MOLECULE_DIM,
    PROTEIN_DIM,
    Embedding,
    EmbeddingCache,
    EncoderSpec,
    FileProtocolEncoder,
    StubEncoder,
    cache_key,
    encode_molecule,
    encode_molecules,
    encode_protein,
)
from molgrow.errors import DimensionMismatchError, EncoderUnavailableError

PROTEIN_SPEC = EncoderSpec("stub-protein", "protein")
MOLECULE_SPEC = EncoderSpec("stub-molecule", "molecule")


def test_spec_default_dimensions():
    assert PROTEIN_SPEC.dim == PROTEIN_DIM == 1280
    assert MOLECULE_SPEC.dim == MOLECULE_DIM == 768
    with pytest.raises(ValueError):
        EncoderSpec("x", "image")


def test_embedding_validation():
    with pytest.raises(DimensionMismatchError):
        Embedding(vector=np.zeros(3), dim=4, encoder_id="x")
    with pytest.raises(ValueError):
        Embedding(vector=np.array([1.0, np.nan]), dim=2, encoder_id="x")


def test_stub_encoder_deterministic_and_normalized():
    enc = StubEncoder(MOLECULE_SPEC)
    a, b = enc.encode_batch(["CCO"])[0], enc.encode_batch(["CCO"])[0]
    assert a.tobytes() == b.tobytes()
    assert a.dtype == np.dtype("<f4")
    assert np.linalg.norm(a.astype(np.float64)) == pytest.approx(1.0, abs=1e-6)
    c = enc.encode_batch(["CCN"])[0]
    assert a.tobytes() != c.tobytes()


def test_cache_key_is_sha256_hex():
    key = cache_key("enc", "CCO")
    assert len(key) == 64
    assert set(key) <= set("0123456789abcdef")
    assert key != cache_key("enc2", "CCO")


def test_cache_roundtrip_on_disk(tmp_path):
    path = tmp_path / "emb.bin"
    cache = EmbeddingCache(path)
    vec = StubEncoder(MOLECULE_SPEC).encode_batch(["CCO"])[0]
    cache.put(cache_key("stub-molecule", "CCO"), vec)
    reloaded = EmbeddingCache(path)
    assert len(reloaded) == 1
    got = reloaded.get(cache_key("stub-molecule", "CCO"))
    assert got.tobytes() == vec.tobytes()


def test_warm_cache_returns_identical_bytes(tmp_path):
    cache = EmbeddingCache(tmp_path / "emb.bin")
    m = parse_molecule("CCO")
    cold = encode_molecule(m, MOLECULE_SPEC, cache)
    warm = encode_molecule(m, MOLECULE_SPEC, cache)
    assert cold.vector.tobytes() == warm.vector.tobytes()


def test_encode_protein_validates_sequence():
    cache = EmbeddingCache()
    emb = encode_protein("MKTAYIAK", PROTEIN_SPEC, cache)
    assert emb.dim == PROTEIN_DIM
    with pytest.raises(ValueError):
        encode_protein("MKTA1", PROTEIN_SPEC, cache)
    with pytest.raises(ValueError):
        encode_protein("", PROTEIN_SPEC, cache)
    with pytest.raises(ValueError):
        encode_protein("MKTA", MOLECULE_SPEC, cache)


def test_encode_molecules_preserves_order():
    cache = EmbeddingCache()
    mols = [parse_molecule(s) for s in ("CCO", "CCN", "CCC")]
    batch = encode_molecules(mols, MOLECULE_SPEC, cache)
    singles = [encode_molecule(m, MOLECULE_SPEC, EmbeddingCache()) for m in mols]
    for a, b in zip(batch, singles):
        assert a.vector.tobytes() == b.vector.tobytes()


ECHO_ENCODER = """\
import sys
with open(sys.argv[1]) as fh:
    lines = fh.read().splitlines()
with open(sys.argv[2], "w") as out:
    for line in lines:
        out.write(" ".join(str(float(len(line) + i)) for i in range(4)) + "\\n")
"""


def test_file_protocol_encoder(tmp_path):
    script = tmp_path / "encoder.py"
    script.write_text(ECHO_ENCODER)
    spec = EncoderSpec("external", "molecule", dim=4)
    enc = FileProtocolEncoder(spec=spec, command=[sys.executable, str(script)])
    vecs = enc.encode_batch(["CCO", "CCCC"])
    assert [v.shape for v in vecs] == [(4,), (4,)]
    assert vecs[0][0] == 3.0 and vecs[1][0] == 4.0


def test_file_protocol_encoder_failures(tmp_path):
    spec = EncoderSpec("external", "molecule", dim=4)
    with pytest.raises(EncoderUnavailableError):
        FileProtocolEncoder(spec=spec, command=[]).encode_batch(["C"])
    with pytest.raises(EncoderUnavailableError):
        FileProtocolEncoder(
            spec=spec, command=["/nonexistent/encoder-binary"]
        ).encode_batch(["C"])
    bad = tmp_path / "bad.py"
    bad.write_text("import sys; open(sys.argv[2],'w').write('1.0 2.0\\n')")
    with pytest.raises(DimensionMismatchError):
        FileProtocolEncoder(
            spec=spec, command=[sys.executable, str(bad)]
        ).encode_batch(["C"])
