"""State and operator layer: embedding, expectation, partial trace."""
import numpy as np
import pytest

from qpigeon.qstate import (DensityMatrix, Operator, StateVector, apply,
                            basis_state, expectation, identity_op,
                            measure_distribution, overlap, partial_trace,
                            tensor, KET0, KET1, PLUS, PLUS_I, MINUS_I)

X = Operator(1, np.array([[0, 1], [1, 0]], dtype=complex), kind="unitary")
Z = Operator(1, np.diag([1, -1]).astype(complex), kind="unitary")


def kron_chain(mats):
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def embedded(op_mat, targets, n):
    """Reference embedding for ops on adjacent-or-not target lists.

    Built by permuting the full-register basis so the listed qubits come
    first, applying op (x) identity, and permuting back. Independent of the
    reshape trick used in the library.
    """
    d = 2 ** n
    rest = [q for q in range(1, n + 1) if q not in targets]
    order = list(targets) + rest
    perm = np.zeros((d, d))
    for b in range(d):
        bits = [(b >> (n - q)) & 1 for q in range(1, n + 1)]
        nb = 0
        for q in order:
            nb = (nb << 1) | bits[q - 1]
        perm[nb, b] = 1.0
    full = np.kron(op_mat, np.eye(2 ** (n - len(targets))))
    return perm.T @ full @ perm


def test_basis_state_bit_order():
    s = basis_state("0001")
    assert s.n_qubits == 4
    assert s.amplitudes[1] == 1.0
    assert np.sum(np.abs(s.amplitudes)) == 1.0


def test_qubit_one_is_most_significant():
    s = apply(X, [1], basis_state("0000"))
    assert s.amplitudes[0b1000] == 1.0


def test_qubit_four_is_least_significant():
    s = apply(X, [4], basis_state("0000"))
    assert s.amplitudes[0b0001] == 1.0


@pytest.mark.parametrize("n,targets", [(2, [1]), (2, [2]), (3, [2]),
                                       (3, [1, 3]), (4, [4, 2]),
                                       (4, [3, 1, 4]), (5, [5, 2])])
def test_apply_matches_permutation_oracle(n, targets):
    rng = np.random.default_rng(hash((n, tuple(targets))) % 2 ** 32)
    k = len(targets)
    m = rng.standard_normal((2 ** k, 2 ** k)) + 1j * rng.standard_normal((2 ** k, 2 ** k))
    op = Operator(k, m, kind="general")
    amps = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    state = StateVector(n, amps)
    got = apply(op, targets, state).amplitudes
    want = embedded(m, targets, n) @ amps
    assert np.max(np.abs(got - want)) < 1e-12


def test_apply_density_matrix_conjugation():
    rng = np.random.default_rng(11)
    amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi = StateVector(3, amps).normalize()
    rho = psi.density()
    out_rho = apply(X, [2], rho)
    out_psi = apply(X, [2], psi)
    assert np.max(np.abs(out_rho.matrix - out_psi.density().matrix)) < 1e-12


def test_apply_preserves_unnormalized_states():
    s = StateVector(1, np.array([2.0, 0.0]))
    out = apply(X, [1], s)
    assert out.amplitudes[1] == 2.0


def test_apply_rejects_bad_targets():
    with pytest.raises(ValueError):
        apply(X, [0], basis_state("00"))
    with pytest.raises(ValueError):
        apply(X, [3], basis_state("00"))
    with pytest.raises(ValueError):
        apply(X, [1, 1], basis_state("00"))


def test_tensor_and_constants():
    s = tensor(PLUS, PLUS, PLUS)
    assert s.n_qubits == 3
    assert np.allclose(s.amplitudes, np.full(8, 1 / np.sqrt(8)))
    both = tensor(KET0, KET1)
    assert both.amplitudes[0b01] == 1.0


def test_tensor_operator_kind_preserved():
    xx = tensor(X, X)
    assert xx.kind == "unitary"
    assert xx.n_qubits == 2


def test_expectation_on_subsystem():
    s = tensor(PLUS_I, KET0)
    assert abs(expectation(Z, s, targets=[2]) - 1.0) < 1e-12
    assert abs(expectation(Z, s, targets=[1])) < 1e-12


def test_overlap_plain_and_sandwiched():
    rng = np.random.default_rng(5)
    a = StateVector(2, rng.standard_normal(4) + 1j * rng.standard_normal(4))
    b = StateVector(2, rng.standard_normal(4) + 1j * rng.standard_normal(4))
    direct = np.vdot(a.amplitudes, b.amplitudes)
    assert abs(overlap(a, None, b) - direct) < 1e-12
    sand = overlap(a, X, b, targets=[1])
    want = a.amplitudes.conj() @ embedded(X.matrix, [1], 2) @ b.amplitudes
    assert abs(sand - want) < 1e-12


def test_global_phase_is_kept():
    s = StateVector(1, np.array([1j, 0.0]))
    out = apply(identity_op(1), [1], s)
    assert out.amplitudes[0] == 1j


@pytest.mark.parametrize("keep", [[1], [2], [3], [1, 2], [2, 3], [1, 3],
                                  [3, 1], [2, 1]])
def test_partial_trace_against_einsum(keep):
    rng = np.random.default_rng(sum(keep) * 17)
    amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi = StateVector(3, amps).normalize()
    rho = psi.density()
    got = partial_trace(rho, keep).matrix

    t = rho.matrix.reshape([2] * 6)
    # reference: contract dropped axes with einsum, then reorder kept ones
    letters_row = ["a", "b", "c"]
    letters_col = ["d", "e", "f"]
    spec_row, spec_col, out_row, out_col = [], [], [], []
    for q in range(1, 4):
        if q in keep:
            spec_row.append(letters_row[q - 1])
            spec_col.append(letters_col[q - 1])
        else:
            spec_row.append(letters_row[q - 1])
            spec_col.append(letters_row[q - 1])
    for q in keep:
        out_row.append(letters_row[q - 1])
        out_col.append(letters_col[q - 1])
    sub = "".join(spec_row) + "".join(spec_col) + "->" + "".join(out_row) + "".join(out_col)
    k = len(keep)
    want = np.einsum(sub, t).reshape(2 ** k, 2 ** k)
    assert np.max(np.abs(got - want)) < 1e-12


def test_partial_trace_keeps_deviation_flag():
    dev = DensityMatrix(2, np.diag([0.5, 0.0, 0.0, -0.5]), is_deviation=True)
    red = partial_trace(dev, [1])
    assert red.is_deviation
    assert abs(np.trace(red.matrix)) < 1e-12


def test_measure_distribution_probabilities():
    rng = np.random.default_rng(23)
    amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi = StateVector(3, amps).normalize()
    dist = measure_distribution(psi, [1, 2, 3])
    assert abs(sum(dist.values()) - 1.0) < 1e-12
    for b in range(8):
        assert abs(dist[format(b, "03b")] - abs(psi.amplitudes[b]) ** 2) < 1e-12
    marg = measure_distribution(psi, [2])
    p0 = sum(abs(psi.amplitudes[b]) ** 2 for b in range(8) if not (b >> 1) & 1)
    assert abs(marg["0"] - p0) < 1e-12


def test_operator_kind_validation():
    with pytest.raises(ValueError):
        Operator(1, np.array([[1, 1], [0, 1]]), kind="unitary")
    with pytest.raises(ValueError):
        Operator(1, np.array([[0.5, 0.5], [0.5, 0.6]]), kind="projector")
    with pytest.raises(ValueError):
        Operator(1, np.array([[0, 1j], [1j, 0]]), kind="hermitian")


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[1.5, 0], [0, -0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[0.7, 0], [0, 0.4]]))
    dev = DensityMatrix(1, np.diag([0.5, -0.5]), is_deviation=True)
    assert dev.is_deviation


def test_arrays_are_frozen():
    s = basis_state("01")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 5.0
