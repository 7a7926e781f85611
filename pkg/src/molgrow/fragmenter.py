"""Fragment pool construction from retrieved ligands and start-state sampling.

Fragments come from the engine's retrosynthetic decomposition with open
valences hydrogen-capped, deduplicated by canonical smiles, filtered by a
heavy-atom floor, and recorded with per-fragment provenance. Episode starts
are drawn uniformly from the pool with a caller-seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chem.engine import PurePythonEngine, default_engine
from .core import Molecule, parse_molecule
from .errors import EmptyPoolError

DEFAULT_MIN_FRAGMENT_ATOMS = 4


@dataclass
class FragmentPool:
    fragments: list[Molecule]
    provenance: dict[str, set[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.fragments)


def fragment_ligands(
    ligands: set[Molecule] | list[Molecule],
    engine: PurePythonEngine | None = None,
    min_fragment_atoms: int = DEFAULT_MIN_FRAGMENT_ATOMS,
    provenance_ids: dict[str, set[str]] | None = None,
) -> FragmentPool:
    """Decompose every ligand and pool the surviving fragments.

    ``provenance_ids`` optionally maps ligand smiles to parent pdb_ids; the
    pool's provenance then records which parents contributed each fragment.
    Raises EmptyPoolError when nothing survives the size floor.
    """
    if not ligands:
        raise EmptyPoolError("no ligands supplied")
    engine = engine or default_engine()
    pool: dict[str, Molecule] = {}
    provenance: dict[str, set[str]] = {}
    for ligand in sorted(ligands, key=lambda m: m.smiles):
        parents = (provenance_ids or {}).get(ligand.smiles, set())
        for frag_smiles in engine.fragment(ligand.smiles):
            mol = parse_molecule(frag_smiles, engine)
            if mol.heavy_atom_count < min_fragment_atoms:
                continue
            pool.setdefault(mol.smiles, mol)
            provenance.setdefault(mol.smiles, set()).update(parents)
    if not pool:
        raise EmptyPoolError(
            f"all fragments below {min_fragment_atoms} heavy atoms;"
            " widen the ligand set or lower the size floor"
        )
    fragments = [pool[s] for s in sorted(pool)]
    return FragmentPool(fragments=fragments, provenance=provenance)


def sample_start(pool: FragmentPool, rng: int | np.random.Generator) -> Molecule:
    """Uniform draw from the pool; deterministic for a given seed."""
    if not pool.fragments:
        raise EmptyPoolError("empty fragment pool")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return pool.fragments[int(rng.integers(len(pool.fragments)))]


def export_pool(pool: FragmentPool, path: str | Path) -> None:
    """Write one canonical smiles per line plus a sidecar provenance table."""
    path = Path(path)
    path.write_text("".join(m.smiles + "\n" for m in pool.fragments))
    sidecar = path.with_suffix(path.suffix + ".provenance.tsv")
    lines = ["fragment\tparents\n"]
    for m in pool.fragments:
        parents = ",".join(sorted(pool.provenance.get(m.smiles, set())))
        lines.append(f"{m.smiles}\t{parents}\n")
    sidecar.write_text("".join(lines))


def load_pool(path: str | Path) -> FragmentPool:
    path = Path(path)
    fragments = [parse_molecule(line) for line in path.read_text().splitlines() if line]
    provenance: dict[str, set[str]] = {}
    sidecar = path.with_suffix(path.suffix + ".provenance.tsv")
    if sidecar.exists():
        for line in sidecar.read_text().splitlines()[1:]:
            frag, parents = line.split("\t")
            provenance[frag] = set(p for p in parents.split(",") if p)
    return FragmentPool(fragments=fragments, provenance=provenance)
