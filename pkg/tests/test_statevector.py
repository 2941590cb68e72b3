"""Tests for the gate-level simulator: single gates against their matrices,
transform identities, and the estimation circuits against the analytic laws."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from upea.counting import CountingInstance
from upea.phase_math import pea_kernel
from upea.statevector import (
    MeasurementPmf,
    StateVector,
    analytic_counting_pmf,
    apply_controlled_phase,
    apply_h,
    apply_rz,
    apply_swap,
    basis_state,
    grover_operator,
    grover_pea_pmf,
    inverse_qft,
    measurement_pmf,
    pea_circuit_pmf,
    qft,
    zero_state,
)


def _random_state(nq: int, seed: int) -> StateVector:
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << nq) + 1j * rng.normal(size=1 << nq)
    return StateVector(nq, amps / np.linalg.norm(amps))


# ---------------------------------------------------------------------------
# single gates


def test_state_constructor_checks_norm() -> None:
    with pytest.raises(ValueError):
        StateVector(1, np.array([1.0, 1.0]))


def test_basis_state_indexing_is_little_endian() -> None:
    st5 = basis_state(3, 5)  # |101>: qubits 0 and 2 set
    assert st5.amplitudes[5] == 1.0
    probs = measurement_pmf(st5, [0]).probs
    assert probs[1] == pytest.approx(1.0)  # qubit 0 is the LSB
    probs = measurement_pmf(st5, [1]).probs
    assert probs[0] == pytest.approx(1.0)


def test_h_matches_matrix_on_single_qubit() -> None:
    got = apply_h(basis_state(1, 0), 0).amplitudes
    assert np.allclose(got, [1 / np.sqrt(2), 1 / np.sqrt(2)])
    got = apply_h(basis_state(1, 1), 0).amplitudes
    assert np.allclose(got, [1 / np.sqrt(2), -1 / np.sqrt(2)])


def test_rz_applies_relative_phase_on_one() -> None:
    alpha = 0.7
    st0 = apply_rz(basis_state(1, 0), 0, alpha)
    st1 = apply_rz(basis_state(1, 1), 0, alpha)
    # global phase convention: diag(e^{-ia/2}, e^{+ia/2})
    assert st0.amplitudes[0] == pytest.approx(np.exp(-0.5j * alpha))
    assert st1.amplitudes[1] == pytest.approx(np.exp(+0.5j * alpha))


def test_controlled_phase_acts_only_on_both_ones() -> None:
    alpha = 1.1
    for idx in range(4):
        got = apply_controlled_phase(basis_state(2, idx), 0, 1, alpha).amplitudes
        expect = np.zeros(4, dtype=complex)
        expect[idx] = np.exp(1j * alpha) if idx == 3 else 1.0
        assert np.allclose(got, expect)


def test_controlled_phase_is_symmetric_in_its_qubits() -> None:
    st0 = _random_state(3, 11)
    a = apply_controlled_phase(st0, 0, 2, 0.87).amplitudes
    b = apply_controlled_phase(st0, 2, 0, 0.87).amplitudes
    assert np.allclose(a, b)


def test_swap_exchanges_qubits() -> None:
    got = apply_swap(basis_state(2, 1), 0, 1).amplitudes
    assert got[2] == pytest.approx(1.0)
    st0 = _random_state(4, 3)
    twice = apply_swap(apply_swap(st0, 1, 3), 1, 3).amplitudes
    assert np.allclose(twice, st0.amplitudes)


@given(st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=999))
@settings(max_examples=25)
def test_gates_preserve_norm(q: int, seed: int) -> None:
    st0 = _random_state(4, seed)
    for out in (
        apply_h(st0, q),
        apply_rz(st0, q, 0.3),
        apply_swap(st0, q, (q + 1) % 4),
        apply_controlled_phase(st0, q, (q + 1) % 4, 0.9),
    ):
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)


def test_gate_qubit_validation() -> None:
    st0 = zero_state(2)
    with pytest.raises(ValueError):
        apply_h(st0, 2)
    with pytest.raises(ValueError):
        apply_swap(st0, 1, 1)
    with pytest.raises(ValueError):
        apply_controlled_phase(st0, 0, 0, 0.5)


# ---------------------------------------------------------------------------
# transforms


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_qft_matches_dft_matrix(n: int) -> None:
    N = 1 << n
    qubits = list(range(n))
    for x in range(N):
        got = qft(basis_state(n, x), qubits).amplitudes
        expect = np.exp(2j * np.pi * x * np.arange(N) / N) / np.sqrt(N)
        assert np.allclose(got, expect, atol=1e-12)


def test_inverse_qft_round_trip() -> None:
    st0 = _random_state(5, 21)
    qubits = [0, 1, 2, 3, 4]
    back = inverse_qft(qft(st0, qubits), qubits).amplitudes
    assert np.allclose(back, st0.amplitudes, atol=1e-12)


def test_qft_on_register_subset_leaves_rest_alone() -> None:
    # transform the low 2 qubits of |q2=1, q1q0=00>
    st0 = basis_state(3, 4)
    out = qft(st0, [0, 1]).amplitudes
    expect = np.zeros(8, dtype=complex)
    expect[4:8] = 0.5  # uniform over the transformed low register, q2 stays 1
    assert np.allclose(out, expect)


def test_measurement_pmf_marginalizes() -> None:
    st0 = apply_h(zero_state(2), 0)
    pmf = measurement_pmf(st0, [0])
    assert np.allclose(pmf.probs, [0.5, 0.5])
    pmf = measurement_pmf(st0, [1])
    assert np.allclose(pmf.probs, [1.0, 0.0])
    assert abs(pmf.probs.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# search operator


@pytest.mark.parametrize("n,marked", [(2, {0}), (3, {1, 5}), (3, set())])
def test_grover_operator_is_orthogonal(n: int, marked: set) -> None:
    g = grover_operator(CountingInstance(n=n, marked=frozenset(marked)))
    assert np.allclose(g @ g.T, np.eye(1 << n), atol=1e-12)


def test_grover_operator_eigenphase_matches_count_fraction() -> None:
    inst = CountingInstance(n=3, marked={0, 2, 6})
    g = grover_operator(inst)
    eig = np.angle(np.linalg.eigvals(g)) / (2 * np.pi)
    phi = inst.phi
    # rotation eigenphases come in a +-phi pair
    assert min(abs(e - phi) for e in eig) < 1e-12
    assert min(abs(e + phi) for e in eig) < 1e-12


# ---------------------------------------------------------------------------
# estimation circuits vs analytic laws


@pytest.mark.parametrize("t", [1, 2, 4])
def test_pea_circuit_matches_kernel(t: int) -> None:
    T = 1 << t
    for phi, theta in [(0.0, 0.0), (0.3, 0.0), (0.77, 0.21), (0.5, 0.9)]:
        pmf = pea_circuit_pmf(t, phi, theta).probs
        expect = pea_kernel(T, np.arange(T) / T - (phi + theta))
        assert np.allclose(pmf, expect, atol=1e-12)
        assert abs(pmf.sum() - 1.0) < 1e-12


def test_pea_circuit_rejects_out_of_range_t() -> None:
    with pytest.raises(ValueError):
        pea_circuit_pmf(0, 0.3)
    with pytest.raises(ValueError):
        pea_circuit_pmf(13, 0.3)


@pytest.mark.parametrize("t,n", [(1, 1), (3, 2), (4, 3)])
def test_grover_circuit_matches_mixture(t: int, n: int) -> None:
    N = 1 << n
    theta = 0.13
    for M in range(N + 1):
        inst = CountingInstance(n=n, M=M)
        pmf = grover_pea_pmf(t, inst, theta).probs
        expect = analytic_counting_pmf(t, M / N, theta)
        assert np.allclose(pmf, expect, atol=1e-12)


def test_grover_circuit_rejects_out_of_range_dims() -> None:
    inst = CountingInstance(n=2, M=1)
    with pytest.raises(ValueError):
        grover_pea_pmf(9, inst)
    with pytest.raises(ValueError):
        grover_pea_pmf(3, CountingInstance(n=7, M=1))


def test_analytic_counting_pmf_is_half_half_mixture() -> None:
    t, m, theta = 4, 0.3, 0.05
    from upea.counting import phi_from_m

    T = 1 << t
    phi = phi_from_m(m)
    s = np.arange(T) / T
    expect = 0.5 * pea_kernel(T, s - phi - theta) + 0.5 * pea_kernel(T, s + phi - theta)
    assert np.allclose(analytic_counting_pmf(t, m, theta), expect, atol=1e-15)


def test_measurement_pmf_validation() -> None:
    with pytest.raises(ValueError):
        MeasurementPmf(register_qubits=(0,), probs=np.array([0.7, 0.7]))
