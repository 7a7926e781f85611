"""Parsing, sanitization, and canonicalization of the reduced engine."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molgrow.chem.graph import canonical_smiles, parse_and_sanitize
from molgrow.errors import ParseError

VALID_SMILES = [
    "C",
    "CC",
    "CCO",
    "OCC",
    "C=C",
    "C#N",
    "CC(=O)O",
    "c1ccccc1",
    "Cc1ccccc1",
    "c1ccccc1C",
    "CC(=O)Oc1ccccc1C(=O)O",
    "O=C(O)c1ccccc1OC(C)=O",
    "CC(C)Cc1ccc(C(C)C(=O)O)cc1",
    "NS(=O)(=O)c1ccc(N)cc1",
    "C1CCCCC1",
    "C1CC1",
    "FC(F)(F)c1ccccc1",
    "ClCCBr",
    "c1ccc2ccccc2c1",
    "CN(C)CCc1ccccc1",
    "[NH4+]",
    "CC[N+](C)(C)C",
    "c1cc[nH]c1",
    "O=S(=O)(N)c1ccccc1",
]

# pairs of different notations for the same molecular graph
ISOMORPHIC_PAIRS = [
    ("CCO", "OCC"),
    ("Cc1ccccc1", "c1ccccc1C"),
    ("CC(=O)Oc1ccccc1C(=O)O", "O=C(O)c1ccccc1OC(C)=O"),
    ("C1CCCCC1", "C2CCCCC2"),
    ("c1ccc2ccccc2c1", "c1ccc2c(c1)cccc2"),
    ("N#CC", "CC#N"),
    ("ClC(Cl)Cl", "C(Cl)(Cl)Cl"),
    ("CC(C)C", "C(C)(C)C"),
]

INVALID_SMILES = [
    "",
    "   ",
    "C(",
    "C)",
    "C1CC",  # unclosed ring
    "X",  # unknown element
    "C=",
    "C##C",
    "C(C)(C)(C)(C)C",  # pentavalent carbon
    "O=C=O=C",  # tetravalent oxygen
    "[Zz]",
    "cc",  # aromatic atoms outside any ring
]


@pytest.mark.parametrize("smiles", VALID_SMILES)
def test_roundtrip_idempotent(smiles):
    canon = canonical_smiles(parse_and_sanitize(smiles))
    again = canonical_smiles(parse_and_sanitize(canon))
    assert canon == again


@pytest.mark.parametrize("a,b", ISOMORPHIC_PAIRS)
def test_isomorphic_inputs_share_canonical_form(a, b):
    assert canonical_smiles(parse_and_sanitize(a)) == canonical_smiles(
        parse_and_sanitize(b)
    )


@pytest.mark.parametrize("bad", INVALID_SMILES)
def test_invalid_inputs_rejected(bad):
    with pytest.raises(ParseError):
        parse_and_sanitize(bad)


@given(st.sampled_from(VALID_SMILES))
@settings(max_examples=50, deadline=None)
def test_canonicalization_is_a_projection(smiles):
    # one application reaches the fixed point
    c1 = canonical_smiles(parse_and_sanitize(smiles))
    c2 = canonical_smiles(parse_and_sanitize(c1))
    c3 = canonical_smiles(parse_and_sanitize(c2))
    assert c1 == c2 == c3


def test_heavy_atom_count():
    assert parse_and_sanitize("CCO").heavy_atom_count() == 3
    assert parse_and_sanitize("c1ccccc1").heavy_atom_count() == 6
    assert parse_and_sanitize("CC(=O)Oc1ccccc1C(=O)O").heavy_atom_count() == 13


def test_molecular_weight_matches_hand_computed_formula():
    # aspirin C9H8O4: 9*12.011 + 8*1.008 + 4*15.999 = 180.159
    mol = parse_and_sanitize("CC(=O)Oc1ccccc1C(=O)O")
    assert mol.molecular_weight() == pytest.approx(180.159, abs=1e-9)
    # ethanol C2H6O: 2*12.011 + 6*1.008 + 15.999 = 46.069
    assert parse_and_sanitize("CCO").molecular_weight() == pytest.approx(
        46.069, abs=1e-9
    )
    # benzene C6H6: 6*12.011 + 6*1.008 = 78.114
    assert parse_and_sanitize("c1ccccc1").molecular_weight() == pytest.approx(
        78.114, abs=1e-9
    )


def test_implicit_hydrogens():
    mol = parse_and_sanitize("CCO")
    hs = [a.total_h for a in mol.atoms]
    assert sorted(hs) == [1, 2, 3]  # CH3, CH2, OH
    benzene = parse_and_sanitize("c1ccccc1")
    assert all(a.total_h == 1 for a in benzene.atoms)


def test_charge_adjusted_valence():
    ammonium = parse_and_sanitize("[NH4+]")
    assert ammonium.atoms[0].total_h == 4
    quat = parse_and_sanitize("CC[N+](C)(C)C")
    n = next(a for a in quat.atoms if a.symbol == "N")
    assert n.total_h == 0


def test_ring_perception():
    mol = parse_and_sanitize("C1CCCCC1CC")
    ring_atoms = sum(1 for i in range(len(mol.atoms)) if mol.atom_in_ring(i))
    assert ring_atoms == 6
    chain = parse_and_sanitize("CCCC")
    assert all(not chain.atom_in_ring(i) for i in range(4))


def test_percent_ring_closure():
    a = canonical_smiles(parse_and_sanitize("C%12CCCCC%12"))
    b = canonical_smiles(parse_and_sanitize("C1CCCCC1"))
    assert a == b
