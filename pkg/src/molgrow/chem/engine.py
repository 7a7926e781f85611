"""Cheminformatics engine adapter.

All external-toolkit-style functionality lives behind this adapter so the
rest of the framework never touches graph internals. The bundled
PurePythonEngine implements the reduced engine shipped with the package;
an alternative toolkit can substitute by implementing the same surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import EngineError, ParseError
from . import fragment as _fragment
from . import graph as _graph
from . import react as _react

CAPABILITIES = frozenset(
    {"parse", "canonicalize", "descriptors", "fragment", "apply_reaction"}
)


@dataclass(frozen=True)
class RawDescriptors:
    mw: float
    hbd: int
    hba: int
    qed: float
    sa: float


class PurePythonEngine:
    """Reduced pure-Python engine; deterministic and dependency-free.

    Descriptor definitions: MW sums standard atomic weights including
    hydrogens; HBD counts N/O atoms bearing at least one hydrogen; HBA
    counts N/O atoms. QED is a geometric mean of Gaussian desirability
    curves over simple physicochemical properties (bounded in (0, 1]); SA
    is a size/ring/branching complexity score clipped to [1, 10].
    """

    engine_id = "purepython-1"
    capabilities = CAPABILITIES

    def __init__(self) -> None:
        # memoization; all cached values are pure functions of the input text
        self._canon_cache: dict[str, str] = {}
        self._hac_cache: dict[str, int] = {}
        self._reaction_cache: dict[str, _react.ReactionPattern] = {}

    # -- parsing / canonical form ----------------------------------------

    def parse(self, raw: str) -> _graph.MolGraph:
        return _graph.parse_and_sanitize(raw)

    def canonical_smiles(self, raw: str) -> str:
        cached = self._canon_cache.get(raw)
        if cached is None:
            cached = _graph.canonical_smiles(self.parse(raw))
            self._canon_cache[raw] = cached
            self._canon_cache[cached] = cached
        return cached

    def heavy_atom_count(self, raw: str) -> int:
        cached = self._hac_cache.get(raw)
        if cached is None:
            cached = self.parse(raw).heavy_atom_count()
            self._hac_cache[raw] = cached
        return cached

    def is_valid(self, raw: str) -> bool:
        try:
            self.parse(raw)
            return True
        except ParseError:
            return False

    # -- descriptors -------------------------------------------------------

    def descriptors(self, raw: str) -> RawDescriptors:
        mol = self.parse(raw)
        mw = mol.molecular_weight()
        hbd = sum(
            1
            for a in mol.atoms
            if a.symbol in ("N", "O") and a.total_h >= 1
        )
        hba = sum(1 for a in mol.atoms if a.symbol in ("N", "O"))
        heavy = mol.heavy_atom_count()
        rings = mol.ring_count
        aromatic_rings = self._aromatic_ring_estimate(mol)
        rot = self._rotatable_bonds(mol)
        qed = self._qed(mw, hbd, hba, aromatic_rings, rot)
        sa = self._sa(heavy, rings, mol)
        return RawDescriptors(mw=mw, hbd=hbd, hba=hba, qed=qed, sa=sa)

    @staticmethod
    def _rotatable_bonds(mol: _graph.MolGraph) -> int:
        count = 0
        for i in mol.adj:
            for j, order in mol.adj[i].items():
                if i < j and order == 1.0 and not mol.bond_in_ring(i, j):
                    if mol.degree(i) >= 2 and mol.degree(j) >= 2:
                        count += 1
        return count

    @staticmethod
    def _aromatic_ring_estimate(mol: _graph.MolGraph) -> float:
        arom_ring_atoms = sum(
            1 for i, a in enumerate(mol.atoms) if a.aromatic and mol.atom_in_ring(i)
        )
        return arom_ring_atoms / 6.0

    @staticmethod
    def _gauss(x: float, mu: float, sigma: float) -> float:
        return math.exp(-((x - mu) ** 2) / (2.0 * sigma * sigma))

    def _qed(self, mw: float, hbd: int, hba: int, arom: float, rot: int) -> float:
        terms = [
            self._gauss(mw, 300.0, 160.0),
            self._gauss(hbd, 1.0, 2.0),
            self._gauss(hba, 3.0, 3.0),
            self._gauss(arom, 1.5, 1.5),
            self._gauss(rot, 4.0, 5.0),
        ]
        qed = math.exp(sum(math.log(max(t, 1e-12)) for t in terms) / len(terms))
        return min(1.0, max(0.0, qed))

    def _sa(self, heavy: int, rings: int, mol: _graph.MolGraph) -> float:
        branch = sum(1 for i in mol.adj if mol.degree(i) >= 3)
        hetero = len({a.symbol for a in mol.atoms if a.symbol not in ("C", "H")})
        charge = sum(1 for a in mol.atoms if a.charge != 0)
        score = (
            1.0
            + 0.04 * heavy
            + 0.35 * rings
            + 0.10 * branch
            + 0.15 * hetero
            + 0.50 * charge
        )
        return min(10.0, max(1.0, score))

    # -- fragmentation and reactions ---------------------------------------

    def fragment(self, raw: str) -> list[str]:
        try:
            return _fragment.decompose(self.parse(raw))
        except ParseError:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            raise EngineError(f"fragmentation failed for {raw!r}: {exc}") from exc

    def parse_reaction(self, smarts: str) -> _react.ReactionPattern:
        cached = self._reaction_cache.get(smarts)
        if cached is None:
            cached = _react.parse_reaction(smarts)
            self._reaction_cache[smarts] = cached
        return cached

    def apply_reaction(self, raw: str, rxn: _react.ReactionPattern) -> list[str]:
        try:
            return _react.apply_reaction(self.parse(raw), rxn)
        except ParseError:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            raise EngineError(f"reaction application failed: {exc}") from exc


_DEFAULT_ENGINE: PurePythonEngine | None = None


def default_engine() -> PurePythonEngine:
    global _DEFAULT_ENGINE
    if _DEFAULT_ENGINE is None:
        _DEFAULT_ENGINE = PurePythonEngine()
    return _DEFAULT_ENGINE
