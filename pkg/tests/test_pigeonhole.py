"""Pair probes, postselection overlaps, and the arrangement table."""
import numpy as np
import pytest

from qpigeon.pigeonhole import (ArrangementTable, ProbeReport, build_table,
                                classical_enumeration, generalized_qphe,
                                projector_same, qphe_analysis, table_to_csv,
                                table_to_text, uniform_postselection_overlaps)
from qpigeon.circuit import build_mzi, run
from qpigeon.qstate import (StateVector, basis_state, expectation,
                            measure_distribution, tensor, PLUS)

PAIRS = [(1, 2), (1, 3), (2, 3)]


def test_projector_same_structure():
    p = projector_same(1, 2, 3)
    diag = np.real(np.diag(p.matrix))
    for b in range(8):
        bits = format(b, "03b")
        assert diag[b] == (1.0 if bits[0] == bits[1] else 0.0)
    assert np.max(np.abs(p.matrix - np.diag(diag))) == 0.0


@pytest.mark.parametrize("pair", PAIRS)
def test_same_path_expectation_is_half(pair):
    state = tensor(PLUS, PLUS, PLUS)
    p = projector_same(pair[0], pair[1], 3)
    assert abs(expectation(p, state) - 0.5) < 1e-12


@pytest.mark.parametrize("pair", PAIRS)
def test_uniform_postselection_overlaps_vanish(pair):
    minus_i, plus_i = uniform_postselection_overlaps(pair)
    assert abs(minus_i) < 1e-12
    assert abs(plus_i) < 1e-12


@pytest.mark.parametrize("pair", PAIRS)
@pytest.mark.parametrize("post", [format(b, "03b") for b in range(8)])
def test_flip_is_deterministic_for_every_outcome(pair, post):
    rep = qphe_analysis(pair, post)
    assert abs(rep.p_post - 0.125) < 1e-12
    i, j = pair
    expected = 1.0 if post[i - 1] == post[j - 1] else 0.0
    assert abs(rep.p_ancilla_flip_given_post - expected) < 1e-10
    assert rep.flip_tag == ("certain" if expected else "never")


def test_report_fields_round_out():
    rep = qphe_analysis((1, 2), "000")
    assert rep.pair == (1, 2)
    assert rep.postselection == "000"
    assert abs(rep.overlap_same) < 1e-12
    uniform = tensor(PLUS, PLUS, PLUS)
    assert np.max(np.abs(rep.preselected.amplitudes - uniform.amplitudes)) < 1e-15


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_generalized_register_sizes(n):
    pair = (1, n - 1)
    for post in ("0" * n, "1" * n, "0" * (n - 1) + "1"):
        rep = generalized_qphe(n, pair, post_outcome=post)
        assert abs(rep.p_post - 0.5 ** n) < 1e-12
        expected = 1.0 if post[0] == post[n - 2] else 0.0
        assert abs(rep.p_ancilla_flip_given_post - expected) < 1e-10


def test_generalized_rejects_out_of_range():
    with pytest.raises(ValueError):
        generalized_qphe(9, (1, 2))
    with pytest.raises(ValueError):
        generalized_qphe(2, (1, 2))
    with pytest.raises(ValueError):
        generalized_qphe(3, (1, 4))


def test_probe_does_not_change_outcome_marginals():
    """On the standard input, the probe leaves particle statistics untouched.

    This is the noninvasiveness of the pair check: every joint outcome has
    the ancilla in a definite state, so summing it out reproduces the
    unprobed uniform distribution exactly. It is a property of the uniform
    pre-selection; arbitrary entangled inputs do feel the probe.
    """
    rng = np.random.default_rng(909)
    for _ in range(20):
        n = int(rng.integers(3, 7))
        i = int(rng.integers(1, n))
        j = int(rng.integers(i + 1, n + 1))
        bare = run(build_mzi(n), basis_state("0" * n))
        probed = run(build_mzi(n, probe=(i, j)), basis_state("0" * (n + 1)))
        d0 = measure_distribution(bare, list(range(1, n + 1)))
        d1 = measure_distribution(probed, list(range(1, n + 1)))
        for k in d0:
            assert abs(d0[k] - d1[k]) < 1e-12


def test_probe_report_validation():
    with pytest.raises(ValueError):
        ProbeReport(pair=(1, 2), preselected="+++", postselection="000",
                    overlap_same=0.0, p_post=1.5,
                    p_ancilla_flip_given_post=0.0)
    with pytest.raises(ValueError):
        ProbeReport(pair=(1, 2), preselected="+++", postselection="000",
                    overlap_same=1.0, p_post=0.125,
                    p_ancilla_flip_given_post=0.0)


def test_classical_enumeration_three_in_two():
    c = classical_enumeration(3, 2)
    assert c["total"] == 8
    assert c["no_pair_shared"] == 0
    assert c["some_pair_shared"] == 8


def test_classical_enumeration_three_in_three():
    c = classical_enumeration(3, 3)
    assert c["total"] == 27
    assert c["no_pair_shared"] == 6
    assert c["some_pair_shared"] == 21
    assert c["all_shared"] == 3
    assert c["pair_1_2_shared"] == 9


def test_classical_enumeration_guards_size():
    with pytest.raises(ValueError):
        classical_enumeration(30, 10)


def test_table_contrasts_classical_and_quantum():
    table = build_table(3)
    assert isinstance(table, ArrangementTable)
    assert len(table.rows) == 8
    top = table.rows[0]
    assert top.classical_possible == "never"
    assert top.quantum_possible == "certain"
    assert top.postselection in ("000", "111")
    # every same-path row is classically unremarkable but quantum certain
    for row in table.rows[2:5]:
        assert row.classical_possible == "sometimes"
        assert row.quantum_possible == "certain"


def test_table_two_particles_shows_no_contradiction():
    """Two particles fit in two paths, so nothing is classically forbidden."""
    table = build_table(2)
    assert len(table.rows) == 3
    assert all(r.classical_possible == "sometimes" for r in table.rows)


def test_table_text_and_csv_agree_on_rows():
    table = build_table(3)
    text = table_to_text(table)
    csv = table_to_csv(table)
    assert len(text.strip().splitlines()) == 2 + len(table.rows)
    assert len(csv.strip().splitlines()) == 1 + len(table.rows)
    assert csv.splitlines()[0] == "arrangement,postselection,classical,quantum"


def test_table_rejects_bad_size():
    with pytest.raises(ValueError):
        build_table(1)
    with pytest.raises(ValueError):
        build_table(7)
