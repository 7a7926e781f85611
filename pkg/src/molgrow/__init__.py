"""molgrow: target-agnostic fragment-growing molecular design.

Grows drug candidates from knowledge-base-derived fragments by applying
matched-pair reaction templates chosen by a PPO agent over a dynamic action
space, optimizing a weighted multi-objective reward (binding affinity,
drug-likeness, synthetic accessibility, novelty).
"""

from .core import DescriptorSet, Molecule, compute_descriptors, lipinski_report, parse_molecule

__all__ = [
    "DescriptorSet",
    "Molecule",
    "compute_descriptors",
    "lipinski_report",
    "parse_molecule",
]

__version__ = "0.1.0"
