"""Retrosynthetic-style fragmentation of ligands.

Two decomposition modes mirror the usual fragmenter pairing: an all-cuts
mode that severs every cleavable bond at once (components of the remaining
graph) and a single-cut mode that splits on each cleavable bond in turn.
Cleavable bonds are acyclic single bonds that either leave a ring system
(exocyclic) or join carbon to a heteroatom (amide/ester/amine/ether-like
linkages). Open valences are capped with hydrogen by implicit-H recount, so
every fragment is a plain, valid molecule with no attachment placeholders.
"""

from __future__ import annotations

import networkx as nx

from .graph import MolGraph, canonical_smiles, sanitize


def cleavable_bonds(mol: MolGraph) -> list[tuple[int, int]]:
    out = []
    for i in mol.adj:
        for j, order in mol.adj[i].items():
            if i >= j or order != 1.0 or mol.bond_in_ring(i, j):
                continue
            a, b = mol.atoms[i], mol.atoms[j]
            if a.symbol == "H" or b.symbol == "H":
                continue
            exocyclic = mol.atom_in_ring(i) != mol.atom_in_ring(j)
            hetero_link = {a.symbol, b.symbol} in ({"C", "N"}, {"C", "O"}, {"C", "S"})
            if exocyclic or hetero_link:
                out.append((i, j))
    return out


def _component_smiles(mol: MolGraph, cuts: list[tuple[int, int]]) -> list[str]:
    work = mol.copy()
    for i, j in cuts:
        work.remove_bond(i, j)
    g = work.to_nx()
    frags = []
    for comp in nx.connected_components(g):
        sub = MolGraph()
        remap = {}
        for old in sorted(comp):
            a = work.atoms[old]
            from .graph import Atom

            remap[old] = sub.add_atom(Atom(a.symbol, a.aromatic, a.charge, a.explicit_h))
        for old in sorted(comp):
            for nbr, order in work.adj[old].items():
                if nbr in remap and remap[old] < remap[nbr]:
                    sub.add_bond(remap[old], remap[nbr], order)
        sanitize(sub)
        frags.append(canonical_smiles(sub))
    return frags


def decompose(mol: MolGraph) -> list[str]:
    """All fragments from the all-cuts and single-cut passes, deduplicated
    and sorted.

    A molecule with no cleavable bonds yields itself.
    """
    cuts = cleavable_bonds(mol)
    if not cuts:
        return [canonical_smiles(mol)]
    seen: set[str] = set(_component_smiles(mol, cuts))
    for cut in cuts:
        seen.update(_component_smiles(mol, [cut]))
    return sorted(seen)
