"""Retrosynthetic decomposition with hydrogen capping."""

from molgrow.chem import default_engine
from molgrow.chem.fragment import decompose
from molgrow.chem.graph import parse_and_sanitize


def test_unfragmentable_molecule_yields_itself():
    eng = default_engine()
    frags = decompose(parse_and_sanitize("CC"))
    assert frags == [eng.canonical_smiles("CC")]
    assert decompose(parse_and_sanitize("c1ccccc1")) == [
        eng.canonical_smiles("c1ccccc1")
    ]


def test_fragments_are_valid_and_capped():
    frags = decompose(parse_and_sanitize("CC(=O)Oc1ccccc1C(=O)O"))
    assert frags
    for f in frags:
        parse_and_sanitize(f)  # every fragment must re-sanitize cleanly
        assert "." not in f


def test_single_cut_fragments_present():
    eng = default_engine()
    frags = set(decompose(parse_and_sanitize("c1ccccc1CCO")))
    # cutting the exocyclic C-C bond must yield benzene and ethanol
    assert eng.canonical_smiles("c1ccccc1") in frags
    assert eng.canonical_smiles("CCO") in frags


def test_ring_bonds_never_cut():
    frags = decompose(parse_and_sanitize("C1CCCCC1"))
    eng = default_engine()
    assert frags == [eng.canonical_smiles("C1CCCCC1")]


def test_deduplicated_and_sorted():
    frags = decompose(parse_and_sanitize("CC(C)Cc1ccc(C(C)C(=O)O)cc1"))
    assert frags == sorted(set(frags))
