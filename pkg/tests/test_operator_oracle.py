import itertools
import math

import numpy as np
import pytest

from qbayes.errors import ImpossibleConditioningError, OracleCapacityError
from qbayes.operator_oracle import (
    QubitProductState,
    bayes_conditional,
    check_density_operator,
    check_povm_element,
    prior_density_operator,
    product_density,
    single_qubit_projector,
)
from qbayes.spin_bayes import BlochPrior, SpinRecord, conditional_record

SPHERE = BlochPrior.uniform_sphere()
BALL = BlochPrior.uniform_ball()


def test_projector_example():
    assert np.array_equal(single_qubit_projector("x", 1), 0.5 * np.array([[1, 1], [1, 1]]))
    for axis in "xyz":
        p = single_qubit_projector(axis, 1)
        assert np.allclose(p @ p, p)
        assert np.allclose(p + single_qubit_projector(axis, -1), np.eye(2))
        check_povm_element(p)


def test_projector_rejects_bad_input():
    with pytest.raises(ValueError):
        single_qubit_projector("w", 1)
    with pytest.raises(ValueError):
        single_qubit_projector("x", 0)


def test_product_density_example():
    rho = product_density(QubitProductState((0, 0, 1), 2))
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    assert np.allclose(rho, expected)
    check_density_operator(rho)


def test_product_state_validation():
    with pytest.raises(ValueError):
        QubitProductState((1, 1, 0))
    with pytest.raises(ValueError):
        QubitProductState((0, 0))


def test_capacity_cap():
    with pytest.raises(OracleCapacityError):
        product_density(QubitProductState((0, 0, 1), 11))
    with pytest.raises(OracleCapacityError):
        prior_density_operator(SPHERE, 11)


def test_density_checks_reject():
    with pytest.raises(ValueError, match="trace"):
        check_density_operator(np.eye(2))
    with pytest.raises(ValueError, match="Hermitian"):
        check_density_operator(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(ValueError, match="semidefinite"):
        check_density_operator(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError, match="eigenvalues"):
        check_povm_element(2 * np.eye(2))


@pytest.mark.parametrize("prior", [SPHERE, BALL])
@pytest.mark.parametrize("copies", [1, 3])
def test_prior_operator_is_a_state(prior, copies):
    rho = prior_density_operator(prior, copies)
    check_density_operator(rho)
    if copies == 1:
        assert np.allclose(rho, np.eye(2) / 2)


def test_bayes_examples():
    assert bayes_conditional(SPHERE, 1, [], [(0, "x", 1)]) == pytest.approx(0.5, rel=1e-12)
    assert bayes_conditional(SPHERE, 2, [(0, "x", 1)], [(1, "x", 1)]) == pytest.approx(2 / 3, rel=1e-12)
    assert bayes_conditional(SPHERE, 2, [(0, "x", 1)], [(1, "x", -1)]) == pytest.approx(1 / 3, rel=1e-12)


def test_bayes_input_validation():
    with pytest.raises(ValueError, match="at most once"):
        bayes_conditional(SPHERE, 2, [(0, "x", 1)], [(0, "z", 1)])
    with pytest.raises(ValueError, match="out of range"):
        bayes_conditional(SPHERE, 2, [(2, "x", 1)], [])


def test_impossible_conditioning():
    pole = BlochPrior.tabulated([0.0, 1.0], [0.0], [1.0], [[[0.0]], [[1.0]]], normalize=True)
    with pytest.raises(ImpossibleConditioningError):
        bayes_conditional(pole, 2, [(0, "z", -1)], [(1, "x", 1)])


def test_sign_patterns_sum_to_one():
    past = [(0, "x", 1), (1, "z", -1)]
    total = 0.0
    for signs in itertools.product((1, -1), repeat=3):
        future = [(2, "x", signs[0]), (3, "y", signs[1]), (4, "x", signs[2])]
        total += bayes_conditional(BALL, 5, past, future)
    assert total == pytest.approx(1.0, rel=1e-12)


def test_qubit_order_is_irrelevant():
    a = bayes_conditional(SPHERE, 4, [(0, "x", 1), (1, "y", -1)], [(2, "x", 1), (3, "z", 1)])
    b = bayes_conditional(SPHERE, 4, [(3, "x", 1), (0, "y", -1)], [(1, "z", 1), (2, "x", 1)])
    assert a == pytest.approx(b, rel=1e-12)


def _events(record, start):
    out, q = [], start
    for axis, (plus, minus) in zip("xyz", (record.x, record.y, record.z)):
        for sign, count in ((1, plus), (-1, minus)):
            for _ in range(count):
                out.append((q, axis, sign))
                q += 1
    return out


@pytest.mark.parametrize("prior", [SPHERE, BALL])
@pytest.mark.parametrize(
    "past,future",
    [
        (SpinRecord(x=(2, 1)), SpinRecord(x=(1, 1))),
        (SpinRecord(x=(1, 0), y=(0, 1)), SpinRecord(x=(1, 0), z=(1, 0))),
        (SpinRecord(z=(3, 0)), SpinRecord(y=(2, 0), z=(0, 1))),
        (SpinRecord(), SpinRecord(x=(1, 0), y=(1, 0), z=(1, 0))),
    ],
)
def test_matches_integral_path_on_mixed_axes(prior, past, future):
    copies = past.total + future.total
    ordered = bayes_conditional(prior, copies, _events(past, 0), _events(future, past.total))
    unordered = conditional_record(future, past, prior)
    assert ordered * math.exp(future.log_multiplicity()) == pytest.approx(unordered, rel=1e-10)
