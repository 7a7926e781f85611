"""Protein-ligand knowledge base: ingestion, persistence, ligand retrieval.

Inputs are two tab-separated files. The index file (`pdb_id\\tsequence`)
holds one protein per line; the ligand table (`pdb_id\\tsmiles\\taffinity`)
holds any number of ligand rows per protein, affinity optional. The store is
a single versioned JSON file that round-trips losslessly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import Molecule, parse_molecule
from .encoders import AMINO_ACIDS
from .errors import EmptyBaseError, FormatError, ParseError, UnknownIdError

STORE_VERSION = "1"


@dataclass(frozen=True)
class ProteinRecord:
    pdb_id: str
    sequence: str
    ligand_smiles: tuple[str, ...] = ()
    affinity_value: float | None = None

    def __post_init__(self) -> None:
        if not self.sequence or set(self.sequence) - AMINO_ACIDS:
            raise ValueError(f"invalid sequence for {self.pdb_id}")


@dataclass
class KnowledgeBase:
    records: dict[str, ProteinRecord] = field(default_factory=dict)
    version: str = STORE_VERSION
    skipped_ligands: int = 0


def ingest(index_file: str | Path, ligand_table: str | Path) -> KnowledgeBase:
    """Build a KnowledgeBase from the two tab-separated files.

    Unparseable ligand rows are counted in ``skipped_ligands`` and dropped;
    duplicate pdb_ids or malformed headers raise FormatError with the line
    number; an ingest yielding zero valid records raises EmptyBaseError.
    """
    index_file, ligand_table = Path(index_file), Path(ligand_table)
    sequences: dict[str, str] = {}
    with open(index_file) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split("\t") != ["pdb_id", "sequence"]:
        raise FormatError("index header must be 'pdb_id\\tsequence'", 1)
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"expected 2 columns, got {len(parts)}", no)
        pdb_id, seq = parts
        if len(pdb_id) != 4:
            raise FormatError(f"pdb_id must be 4 characters: {pdb_id!r}", no)
        if pdb_id in sequences:
            raise FormatError(f"duplicate pdb_id {pdb_id!r}", no)
        if not seq or set(seq) - AMINO_ACIDS:
            raise FormatError(f"invalid sequence for {pdb_id!r}", no)
        sequences[pdb_id] = seq

    ligands: dict[str, list[str]] = {k: [] for k in sequences}
    affinities: dict[str, float] = {}
    skipped = 0
    with open(ligand_table) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split("\t") != ["pdb_id", "smiles", "affinity"]:
        raise FormatError("ligand header must be 'pdb_id\\tsmiles\\taffinity'", 1)
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"expected 3 columns, got {len(parts)}", no)
        pdb_id, smiles, affinity = parts
        if pdb_id not in sequences:
            raise FormatError(f"ligand row for unknown pdb_id {pdb_id!r}", no)
        try:
            mol = parse_molecule(smiles)
        except ParseError:
            skipped += 1
            continue
        ligands[pdb_id].append(mol.smiles)
        if affinity.strip():
            try:
                affinities[pdb_id] = float(affinity)
            except ValueError as exc:
                raise FormatError(f"bad affinity {affinity!r}", no) from exc

    records = {
        pdb_id: ProteinRecord(
            pdb_id=pdb_id,
            sequence=seq,
            ligand_smiles=tuple(dict.fromkeys(ligands[pdb_id])),
            affinity_value=affinities.get(pdb_id),
        )
        for pdb_id, seq in sequences.items()
    }
    if not records:
        raise EmptyBaseError("ingestion produced zero valid records")
    return KnowledgeBase(records=records, skipped_ligands=skipped)


def collect_ligands(kb: KnowledgeBase, ids: list[str]) -> set[Molecule]:
    """Deduplicated union of the ligand sets of the given records."""
    out: dict[str, Molecule] = {}
    for pdb_id in ids:
        rec = kb.records.get(pdb_id)
        if rec is None:
            raise UnknownIdError(f"unknown pdb_id {pdb_id!r}")
        for smi in rec.ligand_smiles:
            if smi not in out:
                out[smi] = Molecule(smiles=smi, heavy_atom_count=_hac(smi))
    return set(out.values())


def _hac(smiles: str) -> int:
    from .chem import default_engine

    return default_engine().heavy_atom_count(smiles)


def save(kb: KnowledgeBase, path: str | Path) -> None:
    doc = {
        "version": kb.version,
        "skipped_ligands": kb.skipped_ligands,
        "records": [
            {
                "pdb_id": r.pdb_id,
                "sequence": r.sequence,
                "ligand_smiles": list(r.ligand_smiles),
                "affinity_value": r.affinity_value,
            }
            for r in sorted(kb.records.values(), key=lambda r: r.pdb_id)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load(path: str | Path) -> KnowledgeBase:
    doc = json.loads(Path(path).read_text())
    records = {
        r["pdb_id"]: ProteinRecord(
            pdb_id=r["pdb_id"],
            sequence=r["sequence"],
            ligand_smiles=tuple(r["ligand_smiles"]),
            affinity_value=r["affinity_value"],
        )
        for r in doc["records"]
    }
    return KnowledgeBase(
        records=records,
        version=doc["version"],
        skipped_ligands=doc.get("skipped_ligands", 0),
    )
