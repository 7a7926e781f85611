"""Fragment-pattern matching and reaction-template application.

Templates are ``LHS>>RHS`` strings where both sides are fragment patterns in
the engine's line notation: mapped wildcard anchors (``[*:1]``) mark atoms the
transformation preserves, explicit ``[H]`` nodes consume a hydrogen on their
neighbor, and unmapped heavy atoms are the variable part that is removed
(LHS) or attached (RHS). This covers the matched-molecular-pair transform
vocabulary (e.g. ``[*:1][H]>>[*:1]F``).
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
from networkx.algorithms import isomorphism

from ..errors import ParseError
from .graph import MolGraph, canonical_smiles, parse_and_sanitize, sanitize


@dataclass
class Pattern:
    """A parsed fragment pattern with explicit-H requirements folded into
    per-atom hydrogen demands."""

    graph: MolGraph
    h_required: dict[int, int]  # atom index -> number of H consumed

    @property
    def mapped(self) -> dict[int, int]:
        return {i: a.map_num for i, a in enumerate(self.graph.atoms) if a.map_num}


def parse_pattern(text: str) -> Pattern:
    mol = parse_and_sanitize(text, pattern=True)
    h_required: dict[int, int] = {}
    h_nodes: set[int] = set()
    for i, atom in enumerate(mol.atoms):
        if atom.symbol == "H" and not atom.map_num:
            nbrs = list(mol.adj[i])
            if len(nbrs) != 1:
                raise ParseError("pattern [H] must have exactly one neighbor")
            h_required[nbrs[0]] = h_required.get(nbrs[0], 0) + 1
            h_nodes.add(i)
    if h_nodes:
        remap = mol.remove_atoms(h_nodes)
        h_required = {remap[k]: v for k, v in h_required.items()}
    if not mol.atoms:
        raise ParseError("pattern has no heavy atoms")
    return Pattern(mol, h_required)


@dataclass
class ReactionPattern:
    lhs: Pattern
    rhs: Pattern
    smarts: str


def parse_reaction(smarts: str) -> ReactionPattern:
    if smarts.count(">>") != 1:
        raise ParseError(f"reaction must contain exactly one '>>': {smarts!r}")
    lhs_text, rhs_text = (s.strip() for s in smarts.split(">>"))
    lhs = parse_pattern(lhs_text)
    rhs = parse_pattern(rhs_text)
    lhs_maps = set(lhs.mapped.values())
    rhs_maps = set(rhs.mapped.values())
    if len(lhs_maps) != len(lhs.mapped) or len(rhs_maps) != len(rhs.mapped):
        raise ParseError(f"duplicate atom map on one reaction side: {smarts!r}")
    if not lhs_maps:
        raise ParseError(f"reaction LHS has no mapped anchor atoms: {smarts!r}")
    if rhs_maps != lhs_maps:
        raise ParseError(f"atom maps differ between reaction sides: {smarts!r}")
    return ReactionPattern(lhs, rhs, smarts)


def _atom_match(pattern_atom, mol_atom) -> bool:
    if pattern_atom.is_wildcard:
        return True
    return (
        pattern_atom.symbol == mol_atom.symbol
        and pattern_atom.aromatic == mol_atom.aromatic
        and pattern_atom.charge == mol_atom.charge
    )


def find_matches(pattern: Pattern, mol: MolGraph) -> list[dict[int, int]]:
    """All embeddings of the pattern into the molecule (pattern idx -> mol idx).

    Unmapped (variable) pattern atoms must be fully closed: their molecule
    image may have no bonds outside the match, so removing them detaches the
    exact variable fragment. Anchors may carry arbitrary context.
    """
    pg = pattern.graph.to_nx()
    mg = mol.to_nx()

    def node_match(mol_attrs, pat_attrs):
        return _atom_match(pat_attrs["atom"], mol_attrs["atom"])

    def edge_match(mol_attrs, pat_attrs):
        return mol_attrs["order"] == pat_attrs["order"]

    gm = isomorphism.GraphMatcher(mg, pg, node_match=node_match, edge_match=edge_match)
    out: list[dict[int, int]] = []
    seen: set[tuple[tuple[int, int], ...]] = set()
    for mapping in gm.subgraph_monomorphisms_iter():
        emb = {p: m for m, p in mapping.items()}
        ok = True
        for p_idx, m_idx in emb.items():
            need = pattern.h_required.get(p_idx, 0)
            if need and mol.atoms[m_idx].total_h < need:
                ok = False
                break
            if not pattern.graph.atoms[p_idx].map_num:
                if mol.degree(m_idx) != pattern.graph.degree(p_idx):
                    ok = False
                    break
        if ok:
            key = tuple(sorted(emb.items()))
            if key not in seen:
                seen.add(key)
                out.append(emb)
    return out


def apply_reaction(mol: MolGraph, rxn: ReactionPattern) -> list[str]:
    """Apply a reaction template at every matching site.

    Returns the deduplicated, sorted canonical smiles of all products that
    sanitize and stay connected. An empty list means the template does not
    apply to this molecule.
    """
    products: set[str] = set()
    lhs, rhs = rxn.lhs, rxn.rhs
    rhs_by_map = {m: i for i, m in rhs.mapped.items()}
    for emb in find_matches(lhs, mol):
        prod = mol.copy()
        anchor_of: dict[int, int] = {}  # map number -> product atom index
        for p_idx, m_idx in emb.items():
            map_num = lhs.graph.atoms[p_idx].map_num
            if map_num:
                anchor_of[map_num] = m_idx
        # consume hydrogens demanded by the LHS on anchors
        valid = True
        for p_idx, need in lhs.h_required.items():
            m_idx = emb[p_idx]
            atom = prod.atoms[m_idx]
            if atom.explicit_h is not None:
                if atom.explicit_h < need:
                    valid = False
                    break
                atom.explicit_h -= need
        if not valid:
            continue
        # remove variable LHS atoms
        to_remove = {emb[p] for p in range(len(lhs.graph.atoms)) if not lhs.graph.atoms[p].map_num}
        remap = prod.remove_atoms(to_remove)
        if any(a not in remap for a in anchor_of.values()):
            continue
        anchor_of = {m: remap[i] for m, i in anchor_of.items()}
        # instantiate RHS: new atoms for unmapped, anchors for mapped
        rhs_to_prod: dict[int, int] = {}
        for r_idx, atom in enumerate(rhs.graph.atoms):
            if atom.map_num:
                rhs_to_prod[r_idx] = anchor_of[atom.map_num]
            else:
                from .graph import Atom

                rhs_to_prod[r_idx] = prod.add_atom(
                    Atom(atom.symbol, atom.aromatic, atom.charge, atom.explicit_h)
                )
        for i in rhs.graph.adj:
            for j, order in rhs.graph.adj[i].items():
                if i < j:
                    pi, pj = rhs_to_prod[i], rhs_to_prod[j]
                    if pj in prod.adj[pi]:
                        prod.adj[pi][pj] = order
                        prod.adj[pj][pi] = order
                    else:
                        prod.add_bond(pi, pj, order)
        # reset hydrogen bookkeeping on organic-subset atoms so sanitize
        # recomputes implicit counts for the new topology
        for atom in prod.atoms:
            atom.implicit_h = 0
        try:
            sanitize_product(prod)
        except ParseError:
            continue
        g = prod.to_nx()
        if prod.atoms and not nx.is_connected(g):
            continue
        products.add(canonical_smiles(prod))
    return sorted(products)


def sanitize_product(prod: MolGraph) -> None:
    sanitize(prod, pattern=False)
