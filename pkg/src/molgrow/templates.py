"""Reaction-template library: rule-dump parsing, drug-relevance filtering,
library construction, and dynamic action enumeration.

The matched-molecular-pair database itself is built by an external tool;
this module consumes its rule dump, a tab-separated file with columns
``lhs_smarts  rhs_smarts  frequency  var_lhs  var_rhs  core_atoms
parent_atoms``. A rule survives filtering iff:

  * neither variable fragment exceeds 10 heavy atoms,
  * the larger variable fragment is at most 50% of the parent molecule,
  * the molecular core has at least 6 heavy atoms,
  * the rule occurred at least once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import json

from .core import Molecule, parse_molecule
from .chem.engine import PurePythonEngine, default_engine
from .errors import EmptyLibraryError, FormatError, ParseError

MAX_VARIABLE_ATOMS = 10
MAX_VARIABLE_FRACTION = 0.5
MIN_CORE_ATOMS = 6
MIN_FREQUENCY = 1
DEFAULT_MAX_ACTIONS = 128
LIBRARY_VERSION = "1"


@dataclass(frozen=True)
class MmpRule:
    lhs: str
    rhs: str
    frequency: int
    variable_atoms_lhs: int
    variable_atoms_rhs: int
    core_atoms: int
    parent_atoms: int

    def __post_init__(self) -> None:
        if self.frequency < 1:
            raise ValueError("frequency must be >= 1")
        for name in ("variable_atoms_lhs", "variable_atoms_rhs", "core_atoms", "parent_atoms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class ReactionTemplate:
    reaction_smarts: str
    frequency: int
    template_id: int

    def __post_init__(self) -> None:
        if self.reaction_smarts.count(">>") != 1:
            raise ValueError("reaction smarts must contain exactly one '>>'")


@dataclass
class FilterConfig:
    max_variable_atoms: int = MAX_VARIABLE_ATOMS
    max_variable_fraction: float = MAX_VARIABLE_FRACTION
    min_core_atoms: int = MIN_CORE_ATOMS
    min_frequency: int = MIN_FREQUENCY


@dataclass
class TemplateLibrary:
    templates: list[ReactionTemplate]
    filter_config: FilterConfig = field(default_factory=FilterConfig)


@dataclass(frozen=True)
class Action:
    template_id: int
    product: Molecule


def parse_rule_dump(path: str | Path) -> list[MmpRule]:
    """Read a rule dump, merging duplicate (lhs, rhs) pairs by summing
    frequency. Order of first appearance is preserved."""
    merged: dict[tuple[str, str], dict] = {}
    with open(path) as fh:
        for no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 7:
                raise FormatError(f"expected 7 columns, got {len(parts)}", no)
            lhs, rhs = parts[0], parts[1]
            try:
                freq, vl, vr, core, parent = (int(x) for x in parts[2:])
            except ValueError as exc:
                raise FormatError(f"non-integer numeric column: {exc}", no) from exc
            key = (lhs, rhs)
            if key in merged:
                merged[key]["frequency"] += freq
            else:
                merged[key] = {
                    "lhs": lhs,
                    "rhs": rhs,
                    "frequency": freq,
                    "variable_atoms_lhs": vl,
                    "variable_atoms_rhs": vr,
                    "core_atoms": core,
                    "parent_atoms": parent,
                }
    return [MmpRule(**vals) for vals in merged.values()]


def rule_passes(rule: MmpRule, cfg: FilterConfig | None = None) -> bool:
    cfg = cfg or FilterConfig()
    max_var = max(rule.variable_atoms_lhs, rule.variable_atoms_rhs)
    return (
        max_var <= cfg.max_variable_atoms
        and max_var <= cfg.max_variable_fraction * rule.parent_atoms
        and rule.core_atoms >= cfg.min_core_atoms
        and rule.frequency >= cfg.min_frequency
    )


def filter_rules(rules: list[MmpRule], cfg: FilterConfig | None = None) -> list[MmpRule]:
    cfg = cfg or FilterConfig()
    return [r for r in rules if rule_passes(r, cfg)]


def build_library(
    rules: list[MmpRule], cfg: FilterConfig | None = None
) -> TemplateLibrary:
    """One template per (already filtered) rule, ordered by frequency
    descending with stable ids assigned in that order."""
    if not rules:
        raise EmptyLibraryError("no rules survived filtering")
    ordered = sorted(rules, key=lambda r: (-r.frequency, f"{r.lhs}>>{r.rhs}"))
    templates = [
        ReactionTemplate(
            reaction_smarts=f"{r.lhs}>>{r.rhs}", frequency=r.frequency, template_id=i
        )
        for i, r in enumerate(ordered)
    ]
    return TemplateLibrary(templates=templates, filter_config=cfg or FilterConfig())


def enumerate_actions(
    m: Molecule,
    lib: TemplateLibrary,
    engine: PurePythonEngine | None = None,
    max_actions: int = DEFAULT_MAX_ACTIONS,
) -> list[Action]:
    """All (template_id, product) pairs applicable to the molecule,
    deduplicated by product canonical smiles and truncated to max_actions in
    library (frequency) order. An empty list is a legal outcome."""
    if max_actions < 1:
        raise ValueError("max_actions must be >= 1")
    engine = engine or default_engine()
    seen: set[str] = set()
    actions: list[Action] = []
    for template in lib.templates:
        try:
            rxn = engine.parse_reaction(template.reaction_smarts)
            products = engine.apply_reaction(m.smiles, rxn)
        except ParseError:
            continue
        for smiles in products:
            if smiles in seen or smiles == m.smiles:
                continue
            seen.add(smiles)
            actions.append(
                Action(template_id=template.template_id, product=parse_molecule(smiles, engine))
            )
            if len(actions) >= max_actions:
                return actions
    return actions


def save_library(lib: TemplateLibrary, path: str | Path) -> None:
    doc = {
        "version": LIBRARY_VERSION,
        "filter_config": vars(lib.filter_config),
        "templates": [
            {
                "template_id": t.template_id,
                "reaction_smarts": t.reaction_smarts,
                "frequency": t.frequency,
            }
            for t in lib.templates
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_library(path: str | Path) -> TemplateLibrary:
    doc = json.loads(Path(path).read_text())
    templates = [
        ReactionTemplate(
            reaction_smarts=t["reaction_smarts"],
            frequency=t["frequency"],
            template_id=t["template_id"],
        )
        for t in doc["templates"]
    ]
    return TemplateLibrary(templates=templates, filter_config=FilterConfig(**doc["filter_config"]))
