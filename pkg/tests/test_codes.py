import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsubver.codes import (
    CodeError,
    LocalProjector,
    ProjectorCode,
    StabilizerCode,
    builtin_code,
    code_projector_dense,
    code_projector_group_sum,
    load_code,
    logical_paulis,
    logical_state,
    projector_code_from_stabilizers,
    rotated_projector_code,
    save_code,
)
from qsubver.pauli import PauliOperator, commutes, multiply
from qsubver.strategies import pauli_decompose

P = PauliOperator.from_label
BUILTINS = ["steane", "five_qubit", "repetition(3)", "repetition(5)", "surface2", "surface3"]


@pytest.mark.parametrize(
    "name,n,k", [("steane", 7, 1), ("five_qubit", 5, 1), ("repetition(3)", 3, 1),
                 ("repetition(5)", 5, 1), ("surface2", 4, 1), ("surface3", 9, 1)]
)
def test_builtin_parameters(name, n, k):
    code = builtin_code(name)
    assert (code.n, code.k, code.m) == (n, k, n - k)


def test_steane_generators_are_weight_four_css():
    code = builtin_code("steane")
    for g in code.generators:
        assert g.weight == 4
        assert g.x == 0 or g.z == 0


def test_repetition3_generators():
    code = builtin_code("repetition(3)")
    assert code.generators == (P("ZZI"), P("IZZ"))


def test_five_qubit_cyclic_and_commuting():
    code = builtin_code("five_qubit")
    labels = [g.letters for g in code.generators]
    base = "XZZXI"
    assert labels == [base[-s:] + base[:-s] for s in range(4)]
    for a, b in itertools.combinations(code.generators, 2):
        assert commutes(a, b)


def test_invalid_codes_rejected():
    with pytest.raises(CodeError):
        StabilizerCode(2, 1, (P("X"),))
    with pytest.raises(CodeError, match="anticommute"):
        StabilizerCode(2, 0, (P("XI"), P("ZI")))
    with pytest.raises(CodeError, match="independent"):
        StabilizerCode(3, 1, (P("ZZI"), P("ZZI")))
    with pytest.raises(CodeError):
        StabilizerCode(2, 1, (P("-II"),))
    with pytest.raises(CodeError):
        builtin_code("toric")
    with pytest.raises(CodeError):
        builtin_code("repetition(13)")


@pytest.mark.parametrize("name", BUILTINS)
def test_code_projector_properties(name):
    code = builtin_code(name)
    proj = code_projector_dense(code)
    assert np.isclose(np.trace(proj).real, 2**code.k)
    assert np.allclose(proj @ proj, proj, atol=1e-10)
    for g in code.generators:
        assert np.allclose(g.to_matrix() @ proj, proj, atol=1e-10)
    logs = logical_paulis(code)
    for op in logs.logicals.values():
        m = op.to_matrix()
        assert np.allclose(m @ proj, proj @ m, atol=1e-10)


@pytest.mark.parametrize("name", ["steane", "five_qubit", "repetition(3)"])
def test_product_and_group_sum_agree(name):
    code = builtin_code(name)
    assert np.abs(code_projector_dense(code) - code_projector_group_sum(code)).max() <= 1e-12


def test_json_round_trip(tmp_path):
    code = builtin_code("five_qubit")
    path = tmp_path / "c.json"
    save_code(code, path)
    assert load_code(path) == code
    pcode = rotated_projector_code(builtin_code("repetition(3)"), [0.2, 0.3, 0.4])
    again = ProjectorCode.from_dict(pcode.to_dict())
    for a, b in zip(pcode.projectors, again.projectors):
        assert a.support == b.support and np.allclose(a.matrix, b.matrix)


def test_repetition_projector_code():
    pcode = projector_code_from_stabilizers(builtin_code("repetition(3)"))
    assert [p.support for p in pcode.projectors] == [(0, 1), (1, 2)]
    zz = np.diag([1, -1, -1, 1])
    for p in pcode.projectors:
        assert np.allclose(p.matrix, (np.eye(4) + zz) / 2)
    assert pcode.sparsity == 2


def test_steane_projector_code():
    code = builtin_code("steane")
    pcode = projector_code_from_stabilizers(code)
    assert pcode.m == 6 and pcode.sparsity == 4
    for p in pcode.projectors:
        assert np.isclose(np.trace(p.matrix).real, 8)
        assert np.allclose(p.matrix @ p.matrix, p.matrix, atol=1e-10)
    assert np.allclose(pcode.dense_projector(), code_projector_dense(code), atol=1e-10)
    # qubit 6 lies in all six supports, above the sparsity
    assert pcode.max_qubit_degree == 6 and not pcode.is_ldpc


def test_five_qubit_projectors_have_unit_a():
    pcode = projector_code_from_stabilizers(builtin_code("five_qubit"))
    assert pcode.m == 4
    for p in pcode.projectors:
        assert np.isclose(pauli_decompose(p).a, 1.0)


def test_rotated_zero_angles_is_identity():
    base = builtin_code("repetition(3)")
    plain = projector_code_from_stabilizers(base)
    rot = rotated_projector_code(base, [0.0, 0.0, 0.0])
    for a, b in zip(plain.projectors, rot.projectors):
        assert np.allclose(a.matrix, b.matrix)


def test_rotated_interior_qubit_commutes_and_has_large_a():
    base = builtin_code("repetition(3)")
    rot = rotated_projector_code(base, [{1: 0.4}, {1: 0.4}])
    a, b = (p.embed(3) for p in rot.projectors)
    assert np.abs(a @ b - b @ a).max() <= 1e-10
    assert max(pauli_decompose(p).a for p in rot.projectors) > 1


def test_rotated_inconsistent_angles_rejected():
    base = builtin_code("repetition(3)")
    with pytest.raises(CodeError, match="commute"):
        rotated_projector_code(base, [{1: 0.4}, {1: 1.1}])


def test_projector_code_validation():
    with pytest.raises(CodeError, match="idempotent"):
        ProjectorCode(1, (LocalProjector((0,), np.array([[1, 0], [0, 0.5]])),))
    x = (np.eye(2) + np.array([[0, 1], [1, 0]])) / 2
    z = np.diag([1.0, 0.0])
    with pytest.raises(CodeError, match="commute"):
        ProjectorCode(1, (LocalProjector((0,), x), LocalProjector((0,), z)))


def test_repetition_logicals():
    logs = logical_paulis(builtin_code("repetition(3)"))
    assert logs.x_bar[0].letters == "XXX"
    assert logs.z_bar[0].weight == 1 and logs.z_bar[0].letters.strip("I") == "Z"
    assert logs.operator("I").is_identity


def test_steane_logicals_weight_three():
    logs = logical_paulis(builtin_code("steane"))
    assert logs.x_bar[0].weight == 3 and logs.z_bar[0].weight == 3


@pytest.mark.parametrize("name", BUILTINS)
def test_logicals_commute_with_stabilizers_and_anticommute_in_pairs(name):
    code = builtin_code(name)
    logs = logical_paulis(code)
    for op in (*logs.x_bar, *logs.z_bar):
        assert all(commutes(op, g) for g in code.generators)
    for j in range(code.k):
        assert not commutes(logs.x_bar[j], logs.z_bar[j])


@settings(deadline=None, max_examples=30)
@given(st.sampled_from(["I", "X", "Y", "Z"]), st.sampled_from(["I", "X", "Y", "Z"]))
def test_logical_labels_homomorphic_up_to_phase(a, b):
    logs = logical_paulis(builtin_code("five_qubit"))
    prod = multiply(logs.operator(a), logs.operator(b))
    table = {("X", "Z"): "Y", ("Z", "X"): "Y", ("X", "Y"): "Z", ("Y", "X"): "Z",
             ("Y", "Z"): "X", ("Z", "Y"): "X"}
    expected = "I" if a == b else (b if a == "I" else a if b == "I" else table[(a, b)])
    assert prod.unsigned() == logs.operator(expected).unsigned()


@pytest.mark.parametrize("name", ["steane", "five_qubit", "surface3"])
def test_logical_states(name):
    code = builtin_code(name)
    proj = code_projector_dense(code)
    logs = logical_paulis(code)
    zero, plus = logical_state(code, "0"), logical_state(code, "+")
    for psi in (zero, plus, logical_state(code, "T")):
        assert np.isclose(np.linalg.norm(psi), 1)
        assert np.allclose(proj @ psi, psi, atol=1e-10)
    rz = np.vdot(zero, logs.z_bar[0].apply(zero)).real
    rx = np.vdot(plus, logs.x_bar[0].apply(plus)).real
    assert np.isclose(rz, 1) and np.isclose(rx, 1)
    with pytest.raises(CodeError):
        logical_state(code, "00")
