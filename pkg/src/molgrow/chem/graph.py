"""Reduced molecular-graph engine: SMILES parsing, sanitization, canonical
output, and descriptor primitives.

This is a deliberately small, pure-Python cheminformatics core covering the
organic subset (B, C, N, O, P, S, halogens), aromatic lowercase notation,
bracket atoms with charge/H-count/atom maps, ring closures, and branches.
Aromaticity is input-declared and validated against ring membership rather
than perceived by electron counting; canonical SMILES is produced by
Morgan-style refinement with exhaustive tie-breaking (lexicographic minimum),
so canonicalization is idempotent and isomorphism-invariant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import networkx as nx

from ..errors import ParseError

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s"}

# Allowed valences before charge adjustment.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
    "H": (1,),
}

ATOMIC_MASS = {
    "H": 1.008,
    "B": 10.811,
    "C": 12.011,
    "N": 14.007,
    "O": 15.999,
    "F": 18.998,
    "P": 30.974,
    "S": 32.066,
    "Cl": 35.453,
    "Br": 79.904,
    "I": 126.904,
}

AROMATIC_BOND = 1.5  # sentinel order for aromatic bonds

_BRACKET_RE = re.compile(
    r"\[(\d+)?(\*|[A-Z][a-z]?|[a-z])(@{1,2})?(H\d*)?(\+\d+|-\d+|\++|-+)?(?::(\d+))?\]"
)


@dataclass(slots=True)
class Atom:
    symbol: str  # element symbol, always capitalized; "*" for wildcard
    aromatic: bool = False
    charge: int = 0
    explicit_h: int | None = None  # bracket-specified H count
    map_num: int = 0
    implicit_h: int = 0

    @property
    def is_wildcard(self) -> bool:
        return self.symbol == "*"

    @property
    def total_h(self) -> int:
        return (self.explicit_h or 0) + self.implicit_h


class MolGraph:
    """Mutable molecular graph; sanitize() must be called before use."""

    def __init__(self) -> None:
        self.atoms: list[Atom] = []
        self.adj: dict[int, dict[int, float]] = {}
        self.ring_bonds: set[frozenset[int]] = set()
        self.ring_count: int = 0

    # -- construction -----------------------------------------------------

    def add_atom(self, atom: Atom) -> int:
        idx = len(self.atoms)
        self.atoms.append(atom)
        self.adj[idx] = {}
        return idx

    def add_bond(self, a: int, b: int, order: float) -> None:
        if a == b or b in self.adj[a]:
            raise ParseError(f"duplicate or self bond {a}-{b}")
        self.adj[a][b] = order
        self.adj[b][a] = order

    def remove_bond(self, a: int, b: int) -> None:
        del self.adj[a][b]
        del self.adj[b][a]

    def copy(self) -> "MolGraph":
        m = MolGraph()
        for at in self.atoms:
            m.atoms.append(
                Atom(at.symbol, at.aromatic, at.charge, at.explicit_h, at.map_num, at.implicit_h)
            )
        m.adj = {i: dict(nbrs) for i, nbrs in self.adj.items()}
        m.ring_bonds = set(self.ring_bonds)
        m.ring_count = self.ring_count
        return m

    def remove_atoms(self, indices: set[int]) -> dict[int, int]:
        """Delete atoms, compacting indices. Returns old->new index map."""
        keep = [i for i in range(len(self.atoms)) if i not in indices]
        remap = {old: new for new, old in enumerate(keep)}
        self.atoms = [self.atoms[i] for i in keep]
        new_adj: dict[int, dict[int, float]] = {remap[i]: {} for i in keep}
        for i in keep:
            for j, order in self.adj[i].items():
                if j in remap:
                    new_adj[remap[i]][remap[j]] = order
        self.adj = new_adj
        self.ring_bonds = set()
        return remap

    # -- queries ----------------------------------------------------------

    def degree(self, i: int) -> int:
        return len(self.adj[i])

    def bond_order_sum(self, i: int) -> float:
        return sum(self.adj[i].values())

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.symbol not in ("H", "*"))

    def bond_in_ring(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.ring_bonds

    def atom_in_ring(self, i: int) -> bool:
        return any(self.bond_in_ring(i, j) for j in self.adj[i])

    def to_nx(self) -> nx.Graph:
        g = nx.Graph()
        for i, atom in enumerate(self.atoms):
            g.add_node(i, atom=atom)
        for i, nbrs in self.adj.items():
            for j, order in nbrs.items():
                if i < j:
                    g.add_edge(i, j, order=order)
        return g

    def molecular_weight(self) -> float:
        mw = 0.0
        for atom in self.atoms:
            mw += ATOMIC_MASS.get(atom.symbol, 0.0)
            mw += atom.total_h * ATOMIC_MASS["H"]
        return mw


# -- parsing ---------------------------------------------------------------


def _parse_bracket(token: str) -> Atom:
    m = _BRACKET_RE.fullmatch(token)
    if m is None:
        raise ParseError(f"malformed bracket atom {token!r}")
    _isotope, sym, _chir, hpart, chpart, mappart = m.groups()
    aromatic = sym.islower() and sym != "*"
    if aromatic and sym not in AROMATIC_SYMBOLS:
        raise ParseError(f"unknown aromatic symbol {sym!r}")
    symbol = sym.capitalize() if aromatic else sym
    if symbol != "*" and symbol not in VALENCES:
        raise ParseError(f"unsupported element {sym!r}")
    h = 0
    if hpart:
        h = int(hpart[1:]) if len(hpart) > 1 else 1
    charge = 0
    if chpart:
        if chpart[0] == "+":
            charge = int(chpart[1:]) if chpart[1:].isdigit() else len(chpart)
        else:
            charge = -(int(chpart[1:]) if chpart[1:].isdigit() else len(chpart))
    map_num = int(mappart) if mappart else 0
    return Atom(symbol, aromatic=aromatic, charge=charge, explicit_h=h, map_num=map_num)


_BOND_CHARS = {"-": 1.0, "=": 2.0, "#": 3.0, ":": AROMATIC_BOND, "/": 1.0, "\\": 1.0}


def parse_smiles(text: str, pattern: bool = False) -> MolGraph:
    """Parse a SMILES (or fragment-pattern) string into an unsanitized graph.

    Pattern mode additionally keeps wildcard ``[*]`` atoms and explicit
    ``[H]`` nodes for substructure use.
    """
    if not text or not text.strip():
        raise ParseError("empty input")
    text = text.strip()
    mol = MolGraph()
    prev: int | None = None
    pending: float | None = None  # None = default bond
    pending_explicit = False
    stack: list[int | None] = []
    rings: dict[str, tuple[int, float | None, bool]] = {}
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "(":
            stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if not stack:
                raise ParseError("unbalanced ')'")
            prev = stack.pop()
            i += 1
            continue
        if ch in _BOND_CHARS:
            if pending_explicit:
                raise ParseError(f"doubled bond symbol at position {i}")
            pending = _BOND_CHARS[ch]
            pending_explicit = True
            i += 1
            continue
        if ch == ".":
            prev = None
            pending = None
            pending_explicit = False
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if ch == "%":
                if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                    raise ParseError("malformed %nn ring closure")
                label = text[i + 1 : i + 3]
                i += 3
            else:
                label = ch
                i += 1
            if prev is None:
                raise ParseError("ring closure before any atom")
            if label in rings:
                other, other_order, other_explicit = rings.pop(label)
                order = pending if pending_explicit else other_order
                if pending_explicit and other_explicit and pending != other_order:
                    raise ParseError(f"conflicting ring-bond orders for {label}")
                mol.add_bond(prev, other, order if order is not None else -1.0)
            else:
                rings[label] = (prev, pending, pending_explicit)
            pending = None
            pending_explicit = False
            continue
        # atom token
        if ch == "[":
            end = text.find("]", i)
            if end < 0:
                raise ParseError("unterminated bracket atom")
            atom = _parse_bracket(text[i : end + 1])
            i = end + 1
        elif text[i : i + 2] in ("Cl", "Br"):
            atom = Atom(text[i : i + 2])
            i += 2
        elif ch in "BCNOPSFI":
            atom = Atom(ch)
            i += 1
        elif ch in AROMATIC_SYMBOLS:
            atom = Atom(ch.upper(), aromatic=True)
            i += 1
        elif ch == "*":
            atom = Atom("*")
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r} at position {i}")
        idx = mol.add_atom(atom)
        if prev is not None:
            mol.add_bond(prev, idx, pending if pending is not None else -1.0)
        prev = idx
        pending = None
        pending_explicit = False
    if pending_explicit:
        raise ParseError("dangling bond symbol at end of input")
    if rings:
        raise ParseError(f"unclosed ring closure(s): {sorted(rings)}")
    if stack:
        raise ParseError("unbalanced '('")
    if not pattern:
        for atom in mol.atoms:
            if atom.is_wildcard:
                raise ParseError("wildcard atom outside pattern context")
    return mol


# -- sanitization ------------------------------------------------------------


def _allowed_valences(symbol: str, charge: int) -> list[int]:
    base = VALENCES[symbol]
    if symbol == "C":
        return [max(0, v - abs(charge)) for v in base]
    return [max(0, v + charge) for v in base]


def implied_h(symbol: str, aromatic: bool, charge: int, bsum: float, degree: int) -> int:
    """Implicit hydrogens a plain (organic-subset) atom token receives."""
    if aromatic:
        if symbol in ("C", "B"):
            return max(0, 3 - degree)
        return 0
    best = None
    for v in sorted(_allowed_valences(symbol, charge)):
        if v >= bsum:
            best = v
            break
    if best is None:
        return 0
    return int(best - bsum)


def sanitize(mol: MolGraph, pattern: bool = False) -> MolGraph:
    """Validate valences and aromatic placement; resolve default bonds and
    compute implicit hydrogens. Raises ParseError on chemically unsound input.
    """
    # merge explicit [H] nodes into their neighbor (molecule mode only)
    if not pattern:
        h_nodes = {i for i, a in enumerate(mol.atoms) if a.symbol == "H"}
        for i in h_nodes:
            nbrs = list(mol.adj[i].items())
            if len(nbrs) != 1 or nbrs[0][1] not in (1.0, -1.0):
                raise ParseError("explicit hydrogen must have one single bond")
            j = nbrs[0][0]
            other = mol.atoms[j]
            other.explicit_h = (other.explicit_h or 0) + 1 + (mol.atoms[i].explicit_h or 0)
        if h_nodes:
            mol.remove_atoms(h_nodes)

    # ring perception: a bond is in a ring iff it is not a bridge
    g = mol.to_nx()
    bridges = {frozenset(e) for e in nx.bridges(g)}
    mol.ring_bonds = {
        frozenset((i, j))
        for i in mol.adj
        for j in mol.adj[i]
        if i < j and frozenset((i, j)) not in bridges
    }
    mol.ring_count = len(nx.cycle_basis(g))

    # resolve default bonds
    for i in mol.adj:
        for j, order in list(mol.adj[i].items()):
            if i < j and order == -1.0:
                a, b = mol.atoms[i], mol.atoms[j]
                if a.aromatic and b.aromatic and mol.bond_in_ring(i, j):
                    resolved = AROMATIC_BOND
                else:
                    resolved = 1.0
                mol.adj[i][j] = resolved
                mol.adj[j][i] = resolved

    for i, atom in enumerate(mol.atoms):
        if atom.is_wildcard or (pattern and atom.symbol == "H"):
            continue
        arom_bonds = sum(1 for o in mol.adj[i].values() if o == AROMATIC_BOND)
        if not atom.aromatic and arom_bonds:
            raise ParseError(f"aromatic bond on non-aromatic atom {i}")
        if atom.aromatic:
            if atom.symbol not in ("B", "C", "N", "O", "P", "S"):
                raise ParseError(f"{atom.symbol} cannot be aromatic")
            if not pattern:
                if not mol.atom_in_ring(i) or arom_bonds < 2:
                    raise ParseError(f"aromatic atom {i} not in an aromatic ring")
            cap = 2 if atom.symbol in ("O", "S") else 3
            conn = mol.degree(i) + (atom.explicit_h or 0)
            if conn > cap and not pattern:
                raise ParseError(
                    f"aromatic {atom.symbol} has {conn} connections (max {cap})"
                )
            if atom.explicit_h is None:
                atom.implicit_h = implied_h(
                    atom.symbol, True, atom.charge, 0, mol.degree(i)
                )
            else:
                atom.implicit_h = 0
        else:
            bsum = mol.bond_order_sum(i)
            allowed = _allowed_valences(atom.symbol, atom.charge)
            if atom.explicit_h is not None:
                atom.implicit_h = 0
                if not pattern and bsum + atom.explicit_h > max(allowed):
                    raise ParseError(
                        f"valence {bsum + atom.explicit_h} exceeds"
                        f" {max(allowed)} on atom {i} ({atom.symbol})"
                    )
            else:
                if bsum > max(allowed):
                    raise ParseError(
                        f"valence {bsum} exceeds {max(allowed)}"
                        f" on atom {i} ({atom.symbol})"
                    )
                atom.implicit_h = implied_h(
                    atom.symbol, False, atom.charge, bsum, mol.degree(i)
                )
    return mol


def parse_and_sanitize(text: str, pattern: bool = False) -> MolGraph:
    return sanitize(parse_smiles(text, pattern=pattern), pattern=pattern)


# -- canonicalization --------------------------------------------------------


def _dense_ranks(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(mol: MolGraph, nodes: list[int], ranks: dict[int, int]) -> dict[int, int]:
    while True:
        keys = []
        for i in nodes:
            nbr = sorted((ranks[j], mol.adj[i][j]) for j in mol.adj[i] if j in ranks)
            keys.append((ranks[i], tuple(nbr)))
        new = _dense_ranks(keys)
        new_ranks = {i: r for i, r in zip(nodes, new)}
        if len(set(new_ranks.values())) == len(set(ranks.values())):
            return new_ranks
        ranks = new_ranks


def _initial_ranks(mol: MolGraph, nodes: list[int]) -> dict[int, int]:
    keys = []
    for i in nodes:
        a = mol.atoms[i]
        keys.append(
            (
                a.symbol,
                a.aromatic,
                a.charge,
                a.total_h,
                mol.degree(i),
                round(mol.bond_order_sum(i), 1),
                a.map_num,
            )
        )
    ranks = _dense_ranks(keys)
    return {i: r for i, r in zip(nodes, ranks)}


def _atom_token(mol: MolGraph, i: int) -> str:
    a = mol.atoms[i]
    sym = a.symbol.lower() if a.aromatic else a.symbol
    plain_ok = (
        a.symbol in ORGANIC_SUBSET
        and a.charge == 0
        and a.map_num == 0
        and not a.is_wildcard
        and a.total_h
        == implied_h(a.symbol, a.aromatic, 0, mol.bond_order_sum(i), mol.degree(i))
    )
    if plain_ok:
        return sym
    if a.is_wildcard:
        sym = "*"
    parts = ["[", sym]
    if a.total_h == 1:
        parts.append("H")
    elif a.total_h > 1:
        parts.append(f"H{a.total_h}")
    if a.charge > 0:
        parts.append("+" if a.charge == 1 else f"+{a.charge}")
    elif a.charge < 0:
        parts.append("-" if a.charge == -1 else f"-{-a.charge}")
    if a.map_num:
        parts.append(f":{a.map_num}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol: MolGraph, i: int, j: int) -> str:
    order = mol.adj[i][j]
    a, b = mol.atoms[i], mol.atoms[j]
    if order == 1.0:
        return "-" if (a.aromatic and b.aromatic) else ""
    if order == 2.0:
        return "="
    if order == 3.0:
        return "#"
    if order == AROMATIC_BOND:
        return "" if (a.aromatic and b.aromatic) else ":"
    raise ValueError(f"unwritable bond order {order}")


def _write_component(mol: MolGraph, nodes: list[int], ranks: dict[int, int]) -> str:
    root = min(nodes, key=lambda i: ranks[i])
    visited: set[int] = set()
    used_edges: set[frozenset[int]] = set()
    back_edges: list[tuple[int, int]] = []
    tree_children: dict[int, list[int]] = {i: [] for i in nodes}

    stack = [root]
    visited.add(root)
    # iterative DFS honoring rank order; collect tree and back edges
    def dfs(u: int) -> None:
        for v in sorted(mol.adj[u], key=lambda x: ranks[x]):
            e = frozenset((u, v))
            if e in used_edges:
                continue
            if v in visited:
                used_edges.add(e)
                back_edges.append((u, v))
            else:
                used_edges.add(e)
                visited.add(v)
                tree_children[u].append(v)
                dfs(v)

    dfs(root)

    ring_digit: dict[frozenset[int], str] = {}
    for k, (u, v) in enumerate(back_edges, start=1):
        ring_digit[frozenset((u, v))] = str(k) if k <= 9 else f"%{k:02d}"

    out: list[str] = []

    def emit(u: int, parent: int | None) -> None:
        if parent is not None:
            out.append(_bond_token(mol, parent, u))
        out.append(_atom_token(mol, u))
        # ring-closure digits at this atom, in allocation order
        for (a, b) in back_edges:
            e = frozenset((a, b))
            if u in (a, b):
                if u == a:
                    out.append(_bond_token(mol, a, b))
                out.append(ring_digit[e])
        children = tree_children[u]
        for child in children[:-1]:
            out.append("(")
            emit(child, u)
            out.append(")")
        if children:
            emit(children[-1], u)

    emit(root, None)
    return "".join(out)


def _resolve_and_write(mol: MolGraph, nodes: list[int], ranks: dict[int, int]) -> str:
    # find lowest rank value held by more than one atom
    by_rank: dict[int, list[int]] = {}
    for i in nodes:
        by_rank.setdefault(ranks[i], []).append(i)
    tied = [r for r, members in sorted(by_rank.items()) if len(members) > 1]
    if not tied:
        return _write_component(mol, nodes, ranks)
    members = by_rank[tied[0]]
    # Branch over one representative per refinement-outcome signature:
    # automorphic picks refine to structurally identical partitions, so
    # exploring duplicates cannot change the lexicographic minimum.
    best: str | None = None
    seen_sigs: set = set()
    for pick in members:
        # distinguish the pick on a doubled scale so no other class collides
        keys = [(ranks[i] * 2 - (1 if i == pick else 0),) for i in nodes]
        dense = _dense_ranks(keys)
        trial = {i: r for i, r in zip(nodes, dense)}
        refined = _refine(mol, nodes, trial)
        sig = _partition_signature(mol, nodes, refined)
        if sig in seen_sigs:
            continue
        seen_sigs.add(sig)
        s = _resolve_and_write(mol, nodes, refined)
        if best is None or s < best:
            best = s
    assert best is not None
    return best


def _partition_signature(mol: MolGraph, nodes: list[int], ranks: dict[int, int]):
    rows = []
    for i in nodes:
        a = mol.atoms[i]
        nbr = tuple(sorted((ranks[j], mol.adj[i][j]) for j in mol.adj[i] if j in ranks))
        rows.append((ranks[i], a.symbol, a.aromatic, a.charge, a.total_h, nbr))
    return tuple(sorted(rows))


def canonical_smiles(mol: MolGraph) -> str:
    """Canonical SMILES of a sanitized graph; '.'-joined sorted components."""
    g = mol.to_nx()
    parts = []
    for comp in nx.connected_components(g):
        nodes = sorted(comp)
        ranks = _refine(mol, nodes, _initial_ranks(mol, nodes))
        parts.append(_resolve_and_write(mol, nodes, ranks))
    return ".".join(sorted(parts))
