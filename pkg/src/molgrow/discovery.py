"""Discovery collection, ranking, and benchmark-style metric reports.

A discovery is any generated molecule whose docked score and QED clear the
configured thresholds. The collector deduplicates by canonical smiles,
keeping the better-scoring copy, and can emit its contents as a ranked list
or aggregate metrics row (validity, novelty, property means, affinity
summary) in both JSON and aligned-text form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .chem.engine import PurePythonEngine, default_engine
from .core import Molecule, compute_descriptors
from .errors import ParseError
from .rewards import RewardBreakdown, novelty as novelty_fn

DEFAULT_AFFINITY_MAX = -7.0
DEFAULT_QED_MIN = 0.2

REPORT_COLUMNS = (
    "valid", "novelty", "mw", "hbd", "hba", "qed", "sa", "mean_affinity", "best_affinity",
)


@dataclass(frozen=True)
class Discovery:
    molecule: Molecule
    breakdown: RewardBreakdown
    docked_score: float
    episode_id: int
    step_found: int


@dataclass
class Thresholds:
    affinity_max: float = DEFAULT_AFFINITY_MAX
    qed_min: float = DEFAULT_QED_MIN


@dataclass
class DiscoveryCollector:
    thresholds: Thresholds = field(default_factory=Thresholds)
    _by_smiles: dict[str, Discovery] = field(default_factory=dict)

    def admit(
        self,
        candidate: Molecule,
        breakdown: RewardBreakdown,
        docked_score: float,
        episode_id: int = 0,
        step_found: int = 0,
    ) -> Discovery | None:
        """Admit iff docked_score <= affinity_max and qed >= qed_min.

        Duplicates keep the better (lower) docked score. Returns the stored
        Discovery on admission, None on rejection.
        """
        if docked_score > self.thresholds.affinity_max:
            return None
        if breakdown.qed_component < self.thresholds.qed_min:
            return None
        d = Discovery(
            molecule=candidate,
            breakdown=breakdown,
            docked_score=docked_score,
            episode_id=episode_id,
            step_found=step_found,
        )
        existing = self._by_smiles.get(candidate.smiles)
        if existing is None or d.docked_score < existing.docked_score:
            self._by_smiles[candidate.smiles] = d
        return self._by_smiles[candidate.smiles]

    def discoveries(self) -> list[Discovery]:
        return list(self._by_smiles.values())


def rank(discoveries: list[Discovery]) -> list[Discovery]:
    """Strongest binding first; ties by descending QED, then smiles."""
    return sorted(
        discoveries,
        key=lambda d: (d.docked_score, -d.breakdown.qed_component, d.molecule.smiles),
    )


@dataclass
class MetricsRow:
    valid: float
    novelty: float
    mw: float
    hbd: float
    hba: float
    qed: float
    sa: float
    mean_affinity: float | None = None
    best_affinity: float | None = None
    empty: bool = False
    n: int = 0


def compute_metrics(
    generated: list[Molecule],
    reference: set[str],
    engine: PurePythonEngine | None = None,
    affinities: list[float] | None = None,
) -> MetricsRow:
    """Aggregate metrics over a generated batch.

    Validity is the fraction of molecules passing re-sanitization; all other
    statistics are computed over the valid subset. An empty batch returns a
    row flagged empty with zeroed fields (no NaNs).
    """
    engine = engine or default_engine()
    if not generated:
        return MetricsRow(
            valid=0.0, novelty=0.0, mw=0.0, hbd=0.0, hba=0.0, qed=0.0, sa=0.0,
            empty=True,
        )
    valid_mols = []
    for m in generated:
        try:
            engine.parse(m.smiles)
            valid_mols.append(m)
        except ParseError:
            continue
    validity = len(valid_mols) / len(generated)
    if not valid_mols:
        return MetricsRow(
            valid=validity, novelty=0.0, mw=0.0, hbd=0.0, hba=0.0, qed=0.0, sa=0.0,
            empty=True, n=len(generated),
        )
    descs = [compute_descriptors(m, engine) for m in valid_mols]
    k = len(valid_mols)
    row = MetricsRow(
        valid=validity,
        novelty=sum(novelty_fn(m, reference) for m in valid_mols) / k,
        mw=sum(d.mw for d in descs) / k,
        hbd=sum(d.hbd for d in descs) / k,
        hba=sum(d.hba for d in descs) / k,
        qed=sum(d.qed for d in descs) / k,
        sa=sum(d.sa for d in descs) / k,
        n=len(generated),
    )
    if affinities:
        row.mean_affinity = sum(affinities) / len(affinities)
        row.best_affinity = min(affinities)
    return row


# -- serialization ------------------------------------------------------------


def write_discoveries(discoveries: list[Discovery], path: str | Path) -> None:
    """One JSON record per line: smiles, score, breakdown, episode, step."""
    lines = []
    for d in rank(discoveries):
        lines.append(
            json.dumps(
                {
                    "smiles": d.molecule.smiles,
                    "docked_score": d.docked_score,
                    "breakdown": asdict(d.breakdown),
                    "episode": d.episode_id,
                    "step": d.step_found,
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_discoveries(path: str | Path) -> list[dict]:
    return [
        json.loads(line)
        for line in Path(path).read_text().splitlines()
        if line.strip()
    ]


def report_json(row: MetricsRow) -> str:
    return json.dumps(asdict(row), sort_keys=True, indent=1)


def report_table(row: MetricsRow) -> str:
    """Delimiter-separated table with the fixed column names."""
    def fmt(x):
        return "" if x is None else f"{x:.4f}"

    values = [
        fmt(row.valid), fmt(row.novelty), fmt(row.mw), fmt(row.hbd), fmt(row.hba),
        fmt(row.qed), fmt(row.sa), fmt(row.mean_affinity), fmt(row.best_affinity),
    ]
    return ",".join(REPORT_COLUMNS) + "\n" + ",".join(values) + "\n"
