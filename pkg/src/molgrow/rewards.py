"""Reward components and scalarization.

Four components feed the weighted objective: docked binding affinity
(sign-flipped so stronger binding increases reward), drug-likeness (QED),
synthetic accessibility (subtracted), and binary novelty against a reference
set. Default weights are (1.0, 0.1, 0.1, 0.35).

The docking oracle is an external-engine adapter (subprocess + score cache);
a deterministic surrogate replaces it for tests and CI runs.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .core import Molecule
from .errors import ConversionError, DockingFailure, ToolNotFoundError

DEFAULT_WEIGHTS = (1.0, 0.1, 0.1, 0.35)
DEFAULT_EXHAUSTIVENESS = 8
SURROGATE_FLOOR = -12.0


@dataclass(frozen=True)
class RewardWeights:
    w1: float = DEFAULT_WEIGHTS[0]
    w2: float = DEFAULT_WEIGHTS[1]
    w3: float = DEFAULT_WEIGHTS[2]
    w4: float = DEFAULT_WEIGHTS[3]

    def __post_init__(self) -> None:
        if min(self.w1, self.w2, self.w3, self.w4) < 0:
            raise ValueError("weights must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    affinity_component: float
    qed_component: float
    sa_component: float
    novelty_component: float
    total: float


@dataclass(frozen=True)
class ProteinTarget:
    pdb_path: str
    sequence: str
    box_center: tuple[float, float, float]
    box_size: tuple[float, float, float]
    target_id: str = ""
    prepared_receptor: str | None = None

    def __post_init__(self) -> None:
        if min(self.box_size) <= 0:
            raise ValueError("box dimensions must be strictly positive")
        if not self.target_id:
            object.__setattr__(self, "target_id", Path(self.pdb_path).stem)


@dataclass(frozen=True)
class DockingTask:
    target: ProteinTarget
    ligand: Molecule
    exhaustiveness: int = DEFAULT_EXHAUSTIVENESS

    def __post_init__(self) -> None:
        if self.exhaustiveness < 1:
            raise ValueError("exhaustiveness must be positive")


def scalarize(
    affinity_component: float,
    qed_component: float,
    sa_component: float,
    novelty_component: float,
    w: RewardWeights | None = None,
) -> RewardBreakdown:
    """Weighted objective: w1*affinity + w2*qed - w3*sa + w4*novelty.

    ``affinity_component`` is the negated docked score (stronger binding,
    i.e. a more negative docked score, increases reward).
    """
    w = w or RewardWeights()
    total = (
        w.w1 * affinity_component
        + w.w2 * qed_component
        - w.w3 * sa_component
        + w.w4 * novelty_component
    )
    return RewardBreakdown(
        affinity_component=affinity_component,
        qed_component=qed_component,
        sa_component=sa_component,
        novelty_component=novelty_component,
        total=total,
    )


def novelty(m: Molecule, reference: set[str]) -> float:
    """1.0 iff the canonical smiles is absent from the reference set."""
    return 0.0 if m.smiles in reference else 1.0


def load_reference_set(path: str | Path) -> set[str]:
    """Reference smiles file: one canonical smiles per line."""
    return {line.strip() for line in Path(path).read_text().splitlines() if line.strip()}


# -- deterministic surrogate oracle -----------------------------------------


def surrogate_dock(m: Molecule, target_seed: int) -> float:
    """Deterministic docking stand-in, bounded in [-12, 0].

    Smooth (Gaussian) in heavy-atom count with a target-seeded optimum, plus
    a small smiles-keyed offset so distinct molecules of equal size remain
    distinguishable. Gives the agent a learnable size signal without the
    physics engine.
    """
    opt = 14 + (target_seed % 16)  # optimum heavy-atom count in [14, 29]
    width = 22.0
    depth = -12.0 * math.exp(-((m.heavy_atom_count - opt) ** 2) / (2 * width * width))
    jitter = int.from_bytes(
        hashlib.sha256(m.smiles.encode()).digest()[:4], "little"
    ) / 2**32
    score = depth + 0.6 * jitter
    return min(0.0, max(SURROGATE_FLOOR, score))


# -- external docking adapter -------------------------------------------------


class ScoreCache:
    """Single-file JSON score cache keyed by (target id, smiles hash,
    exhaustiveness)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._mem: dict[str, float] = {}
        if self.path and self.path.exists():
            self._mem = json.loads(self.path.read_text())

    @staticmethod
    def key(task: DockingTask) -> str:
        smiles_hash = hashlib.sha256(task.ligand.smiles.encode()).hexdigest()[:16]
        return f"{task.target.target_id}:{smiles_hash}:{task.exhaustiveness}"

    def get(self, task: DockingTask) -> float | None:
        return self._mem.get(self.key(task))

    def put(self, task: DockingTask, score: float) -> None:
        self._mem[self.key(task)] = score
        if self.path:
            self.path.write_text(json.dumps(self._mem, indent=1, sort_keys=True))


def prepare_receptor(
    target: ProteinTarget, converter: list[str] | None = None
) -> ProteinTarget:
    """Convert the target PDB into the docking engine's receptor format.

    Idempotent: skipped when the output artifact is newer than the input.
    ``converter`` is the conversion command; the receptor path is appended
    as ``<input> <output>``.
    """
    pdb = Path(target.pdb_path)
    if not pdb.exists():
        raise ToolNotFoundError(f"target structure not found: {pdb}")
    out = pdb.with_suffix(".pdbqt")
    if out.exists() and out.stat().st_mtime >= pdb.stat().st_mtime:
        return _with_receptor(target, out)
    if not converter:
        raise ToolNotFoundError("no receptor converter configured")
    try:
        proc = subprocess.run(
            [*converter, str(pdb), str(out)], capture_output=True, text=True
        )
    except FileNotFoundError as exc:
        raise ToolNotFoundError(f"converter binary missing: {converter[0]}") from exc
    if proc.returncode != 0:
        raise ConversionError(
            f"converter exited {proc.returncode}: {proc.stderr.strip()}"
        )
    if not out.exists():
        raise ConversionError("converter produced no output file")
    return _with_receptor(target, out)


def _with_receptor(target: ProteinTarget, out: Path) -> ProteinTarget:
    return ProteinTarget(
        pdb_path=target.pdb_path,
        sequence=target.sequence,
        box_center=target.box_center,
        box_size=target.box_size,
        target_id=target.target_id,
        prepared_receptor=str(out),
    )


_SCORE_RE = re.compile(r"REMARK VINA RESULT:\s*(-?\d+(?:\.\d+)?)")
_TABLE_RE = re.compile(r"^\s*1\s+(-?\d+(?:\.\d+)?)", re.MULTILINE)


def parse_engine_score(output: str) -> float:
    """Top-ranked pose score from the docking engine's output."""
    m = _SCORE_RE.search(output) or _TABLE_RE.search(output)
    if m is None:
        raise DockingFailure("no pose score found in engine output")
    return float(m.group(1))


def dock(
    task: DockingTask,
    cache: ScoreCache,
    engine_command: list[str] | None = None,
) -> float:
    """Docked affinity (kcal/mol, more negative = stronger), cached.

    The engine command is invoked with receptor/ligand files and box flags;
    stdout is parsed for the top pose. Raises DockingFailure on tool
    failure; callers map that to worst-case affinity instead of aborting.
    """
    cached = cache.get(task)
    if cached is not None:
        return cached
    if task.target.prepared_receptor is None:
        raise DockingFailure("receptor not prepared")
    if not engine_command:
        raise DockingFailure("no docking engine configured")
    cx, cy, cz = task.target.box_center
    sx, sy, sz = task.target.box_size
    with tempfile.TemporaryDirectory() as tmp:
        ligand_file = Path(tmp) / "ligand.smi"
        ligand_file.write_text(task.ligand.smiles + "\n")
        cmd = [
            *engine_command,
            "--receptor", task.target.prepared_receptor,
            "--ligand", str(ligand_file),
            "--center_x", str(cx), "--center_y", str(cy), "--center_z", str(cz),
            "--size_x", str(sx), "--size_y", str(sy), "--size_z", str(sz),
            "--exhaustiveness", str(task.exhaustiveness),
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True)
        except FileNotFoundError as exc:
            raise DockingFailure(f"docking engine missing: {engine_command[0]}") from exc
    if proc.returncode != 0:
        raise DockingFailure(f"docking engine exited {proc.returncode}")
    score = parse_engine_score(proc.stdout)
    cache.put(task, score)
    return score
