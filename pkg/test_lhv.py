"""
Tests for symmetric extensions, LHV decompositions and the lambda_max scan.
"""
import io
import math

import numpy as np
import pytest

from app.core.errors import RangeError, TooManyCopies, UnknownClass
from app.services.hermitian import identity, max_entangled, random_density, tensor
from app.services.lhv import (
    CSV_COLUMNS,
    ExtensionClass,
    NOISY_BELL,
    SYM_EXT_A,
    clifford_group,
    lambda_max_at,
    lhv_decompose,
    noisy_bell_dictionary,
    parse_classes,
    scan_lambda_max,
    state_family,
    sym_ext_feasible,
    trace_out,
    write_csv,
)

NOISY_BELL_LIMIT = 0.6595


def isotropic(p: float) -> np.ndarray:
    return p * max_entangled(2) + (1 - p) * identity(4) / 4


def test_state_family_at_equal_schmidt_coefficients_is_phi_plus():
    point = state_family(1 / math.sqrt(2))
    np.testing.assert_allclose(point.state, max_entangled(2), atol=1e-12)
    np.testing.assert_allclose(point.noise, identity(4) / 4, atol=1e-12)


def test_state_family_is_a_density_operator():
    point = state_family(0.8, (0.3, 1.1, -0.4), lam=0.6)
    assert np.trace(point.state).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(point.state)[0] >= -1e-12


@pytest.mark.parametrize("s, lam", [(0.5, 1.0), (1.2, 1.0), (0.8, 1.5)])
def test_state_family_rejects_out_of_range(s, lam):
    with pytest.raises(RangeError):
        state_family(s, lam=lam)


def test_clifford_group_has_24_elements():
    group = clifford_group()
    assert len(group) == 24
    for u in group:
        np.testing.assert_allclose(u.conj().T @ u, identity(2), atol=1e-12)


def test_noisy_bell_dictionary_contains_the_limit_state():
    elements = noisy_bell_dictionary()
    assert len(elements) == 25
    assert any(np.allclose(e, isotropic(NOISY_BELL_LIMIT)) for e in elements)


def test_trace_out_middle_subsystem(rng):
    a, b, c = (random_density(2, rng) for _ in range(3))
    np.testing.assert_allclose(trace_out(tensor(tensor(a, b), c), [2, 2, 2], 1), tensor(a, c), atol=1e-12)


def test_phi_plus_has_no_two_copy_extension():
    feasible, certificate = sym_ext_feasible(max_entangled(2), copies=2)
    assert not feasible
    assert certificate.separation > 0


def test_product_state_extends(rng):
    state = tensor(random_density(2, rng), random_density(2, rng))
    for side in ("A", "B"):
        assert sym_ext_feasible(state, copies=3, side=side)[0]


@pytest.mark.parametrize("symmetry", ["permutation", "bose"])
def test_isotropic_two_copy_threshold(symmetry):
    # two-copy extendibility of the isotropic qubit state ends at p = 2/3
    assert sym_ext_feasible(isotropic(0.6), copies=2, symmetry=symmetry)[0]
    assert not sym_ext_feasible(isotropic(0.75), copies=2, symmetry=symmetry)[0]


def test_isotropic_extension_reproduces_the_state():
    ext = ExtensionClass("A", 2)
    feasible, certificate = sym_ext_feasible(isotropic(0.6), copies=2, symmetry="permutation", ppt=False)
    assert feasible
    extension = ext.extension(certificate.blocks)
    assert np.linalg.eigvalsh((extension + extension.conj().T) / 2)[0] >= -1e-7
    np.testing.assert_allclose(trace_out(extension, ext.dims, 1), isotropic(0.6), atol=1e-7)
    np.testing.assert_allclose(trace_out(extension, ext.dims, 0), isotropic(0.6), atol=1e-7)


def test_dropping_a_copy_keeps_an_extension():
    ext = ExtensionClass("A", 3)
    feasible, certificate = sym_ext_feasible(isotropic(0.4), copies=3, symmetry="permutation", ppt=False)
    assert feasible
    smaller = ext.drop_copy(ext.extension(certificate.blocks))
    assert smaller.shape == (8, 8)
    np.testing.assert_allclose(trace_out(smaller, [2, 2, 2], 1), isotropic(0.4), atol=1e-7)


def test_ppt_extension_excludes_entangled_states():
    assert not sym_ext_feasible(isotropic(0.6), copies=2, ppt=True)[0]
    assert sym_ext_feasible(isotropic(0.3), copies=2, ppt=True)[0]


def test_extension_class_guards():
    with pytest.raises(RangeError):
        ExtensionClass("A", 1)
    with pytest.raises(RangeError):
        ExtensionClass("C", 2)
    with pytest.raises(TooManyCopies):
        ExtensionClass("B", 12)
    assert ExtensionClass("A", 3).tag == SYM_EXT_A


def test_parse_classes():
    tags = [tag for tag, _ in parse_classes([NOISY_BELL, SYM_EXT_A, "sym_ext_B"], n_bob=3)]
    assert tags == [NOISY_BELL, SYM_EXT_A, "sym_ext_B_2"]
    assert parse_classes(["sym_ext_B_3"])[0][1].copies == 4
    with pytest.raises(UnknownClass):
        parse_classes(["sym_ext_B"])
    with pytest.raises(UnknownClass):
        parse_classes(["bell_local"])
    with pytest.raises(UnknownClass):
        parse_classes(["sym_ext_B_2"], n_bob=5)


def test_noisy_bell_target_decomposes_in_its_class():
    result = lhv_decompose(state_family(1 / math.sqrt(2), lam=0.6), [NOISY_BELL])
    assert result.feasible
    assert sum(result.weights) == pytest.approx(1.0)
    assert [c.tag for c in result.components] == [NOISY_BELL]
    assert result.residual <= 1e-7


def test_noisy_bell_class_alone_stops_at_its_limit():
    result = lhv_decompose(state_family(1 / math.sqrt(2)), [NOISY_BELL], robust=True)
    assert result.lam == pytest.approx(NOISY_BELL_LIMIT, abs=2e-3)
    assert not lhv_decompose(state_family(1 / math.sqrt(2), lam=0.66), [NOISY_BELL]).feasible


def test_full_classes_reconstruct_the_target():
    point = state_family(1 / math.sqrt(2), lam=0.66)
    result = lhv_decompose(point, [NOISY_BELL, SYM_EXT_A, "sym_ext_B"], n_bob=3)
    if result.feasible:
        rebuilt = sum(c.weight * c.operator for c in result.components)
        np.testing.assert_allclose(rebuilt, point.state, atol=1e-7)
        assert sum(result.weights) == pytest.approx(1.0)


def test_lambda_max_methods_agree():
    angles = (0.0, 0.0, 0.0)
    direct = lambda_max_at(1 / math.sqrt(2), angles, [NOISY_BELL])
    bisection = lambda_max_at(1 / math.sqrt(2), angles, [NOISY_BELL], method="bisection")
    assert bisection == pytest.approx(direct, abs=2e-3)


def test_small_scan_and_csv():
    table = scan_lambda_max([1 / math.sqrt(2)], samples=[(0.0, 0.0, 0.0), (0.5, 1.0, 0.2)], jobs=1)
    assert len(table.rows) == 1
    row = table.rows[0]
    assert NOISY_BELL_LIMIT - 2e-3 <= row.lambda_max <= 1.0
    assert table.metadata["n_unitaries"] == 2
    assert "ua_grid" not in table.metadata
    out = io.StringIO()
    write_csv(table, out)
    lines = out.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].endswith(f"{NOISY_BELL}+{SYM_EXT_A}")


@pytest.mark.slow
def test_full_scan_stays_above_three_axis_threshold():
    s_grid = [0.71, 0.75, 0.80, 0.835]
    table = scan_lambda_max(s_grid, classes=[NOISY_BELL, SYM_EXT_A, "sym_ext_B"], n_bob=3)
    values = [row.lambda_max for row in table.rows]
    assert all(v > 1 / math.sqrt(3) for v in values)
    assert all(later <= earlier + 1e-3 for earlier, later in zip(values, values[1:]))


def test_removing_a_class_never_raises_lambda_max():
    s, angles = 0.8, (0.5, 1.0, 0.2)
    both = lambda_max_at(s, angles, [NOISY_BELL, SYM_EXT_A])
    for fewer in ([NOISY_BELL], [SYM_EXT_A]):
        assert lambda_max_at(s, angles, fewer) <= both + 1e-6
