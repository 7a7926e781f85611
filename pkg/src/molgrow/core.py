"""Molecule value type, descriptor computation, and Lipinski checks.

A Molecule can only be built through parse_molecule, which canonicalizes and
sanitizes via the engine; anything that fails is rejected with ParseError,
never repaired. That construction rule is what makes generated sets score
validity 1.0 downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chem.engine import PurePythonEngine, default_engine
from .errors import ParseError

_DESCRIPTOR_CACHE: dict[tuple[str, str], "DescriptorSet"] = {}


@dataclass(frozen=True)
class DescriptorSet:
    mw: float
    hbd: int
    hba: int
    qed: float
    sa: float

    def __post_init__(self) -> None:
        if self.mw <= 0:
            raise ValueError(f"mw must be positive, got {self.mw}")
        if not 0.0 <= self.qed <= 1.0:
            raise ValueError(f"qed out of [0,1]: {self.qed}")
        if not 1.0 <= self.sa <= 10.0:
            raise ValueError(f"sa out of [1,10]: {self.sa}")
        if self.hbd < 0 or self.hba < 0:
            raise ValueError("hbd/hba must be non-negative")


@dataclass(frozen=True)
class Molecule:
    smiles: str
    heavy_atom_count: int

    def __post_init__(self) -> None:
        if self.heavy_atom_count < 1:
            raise ValueError("molecule must have at least one heavy atom")


def parse_molecule(raw: str, engine: PurePythonEngine | None = None) -> Molecule:
    """Parse and sanitize a line-notation string into a canonical Molecule.

    Raises ParseError for unparseable or unsanitizable input; the caller
    must discard such candidates.
    """
    if not raw or not raw.strip():
        raise ParseError("empty input")
    engine = engine or default_engine()
    canonical = engine.canonical_smiles(raw)
    return Molecule(smiles=canonical, heavy_atom_count=engine.heavy_atom_count(canonical))


def compute_descriptors(
    m: Molecule, engine: PurePythonEngine | None = None
) -> DescriptorSet:
    """Descriptors for a molecule, memoized per (engine_id, canonical smiles)."""
    engine = engine or default_engine()
    key = (engine.engine_id, m.smiles)
    cached = _DESCRIPTOR_CACHE.get(key)
    if cached is not None:
        return cached
    raw = engine.descriptors(m.smiles)
    d = DescriptorSet(mw=raw.mw, hbd=raw.hbd, hba=raw.hba, qed=raw.qed, sa=raw.sa)
    _DESCRIPTOR_CACHE[key] = d
    return d


def lipinski_report(d: DescriptorSet) -> dict[str, bool]:
    """Rule-of-five flags: MW strictly below 500 Da, HBD at most 5, HBA at
    most 10."""
    return {"mw_ok": d.mw < 500.0, "hbd_ok": d.hbd <= 5, "hba_ok": d.hba <= 10}
