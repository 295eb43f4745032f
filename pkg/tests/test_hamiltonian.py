import json
import math

import numpy as np
import pytest

from sihsim.hamiltonian import (Coefficient, SpecFormatError, SpecValidationError,
                                DimensionCapError, parse_spec)

from conftest import (random_hamiltonian, sigma_x_hamiltonian, sigma_z_hamiltonian,
                      worked_example_hamiltonian)

EQ2_SPEC = json.dumps({
    "n_qubits": 2, "d": 1,
    "entries": [{"row": 0, "col": 1, "re": {"c": 1.0}},
                {"row": 2, "col": 3, "re": {"c": 0.5}}],
})


def test_coefficient_value_and_derivative():
    c = Coefficient(constant=0.5, linear=2.0, sin_amplitude=0.3,
                    sin_frequency=4.0, sin_phase=0.1)
    ts = np.linspace(0.0, 2.0, 11)
    expect = 0.5 + 2.0 * ts + 0.3 * np.sin(4.0 * ts + 0.1)
    assert np.allclose(c.value(ts), expect, atol=0, rtol=1e-15)
    # derivative against central differences
    h = 1e-6
    fd = (c.value(ts + h) - c.value(ts - h)) / (2 * h)
    assert np.allclose(c.derivative(ts), fd, atol=1e-7)


def test_parse_sigma_x_pattern():
    H = parse_spec('{"n_qubits": 1, "d": 1, '
                   '"entries": [{"row": 0, "col": 1, "re": {"c": 1.0}}]}')
    assert H.d == 1
    assert np.array_equal(H.dense(0.3), np.array([[0, 1], [1, 0]], dtype=complex))


def test_parse_rejects_imaginary_diagonal():
    doc = '{"n_qubits": 1, "d": 1, "diag": [{"index": 0, "re": {"c": 1.0}, "im": {"c": 1.0}}]}'
    with pytest.raises(SpecValidationError, match="real"):
        parse_spec(doc)


def test_parse_worked_example_spec():
    H = parse_spec(EQ2_SPEC)
    assert H.d == 1
    rep = H.norms(1.0, samples=3)
    assert rep.entry_norm_max == 1.0
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 1] = expected[1, 0] = 1.0
    expected[2, 3] = expected[3, 2] = 0.5
    assert np.array_equal(H.dense(0.0), expected)


def test_parse_rejects_row_budget_violation():
    doc = json.dumps({"n_qubits": 2, "d": 1,
                      "entries": [{"row": 0, "col": 1, "re": {"c": 1.0}},
                                  {"row": 0, "col": 2, "re": {"c": 1.0}}]})
    with pytest.raises(SpecValidationError, match="exceeding d"):
        parse_spec(doc)


def test_parse_rejects_bad_json_with_location():
    with pytest.raises(SpecFormatError, match="line"):
        parse_spec('{"n_qubits": 1,')


def test_parse_rejects_identically_zero_entry():
    doc = json.dumps({"n_qubits": 1, "d": 1,
                      "entries": [{"row": 0, "col": 1, "re": {}, "im": {}}]})
    with pytest.raises(SpecValidationError, match="identically zero"):
        parse_spec(doc)


def test_parse_rejects_row_ge_col():
    doc = json.dumps({"n_qubits": 1, "d": 1,
                      "entries": [{"row": 1, "col": 0, "re": {"c": 1.0}}]})
    with pytest.raises(SpecValidationError, match="row < col"):
        parse_spec(doc)


def test_oracle_sigma_x():
    H = sigma_x_hamiltonian()
    assert H.oracle_query(0, 1, 0.0) == (1, 1.0 + 0j)
    assert H.oracle_query(1, 1, 0.5) == (0, 1.0 - 0j)


def test_oracle_worked_example_column3():
    H = worked_example_hamiltonian()
    assert H.oracle_query(3, 1, 0.0) == (2, 0.5 + 0j)


def test_oracle_empty_column():
    H = parse_spec('{"n_qubits": 2, "d": 1, '
                   '"entries": [{"row": 0, "col": 1, "re": {"c": 1.0}}]}')
    assert H.oracle_query(2, 1, 0.0) is None


def test_oracle_out_of_range():
    H = sigma_x_hamiltonian()
    with pytest.raises(IndexError):
        H.oracle_query(2, 1, 0.0)
    with pytest.raises(IndexError):
        H.oracle_query(0, 2, 0.0)


def test_oracle_matches_dense_on_random_instances(rng):
    for _ in range(5):
        H = random_hamiltonian(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        for tp in rng.uniform(0.0, 2.0, size=20):
            dense = H.dense(float(tp))
            rebuilt = np.zeros_like(dense)
            for col in range(H.dim):
                for slot in range(1, H.d + 1):
                    hit = H.oracle_query(col, slot, float(tp))
                    if hit is None:
                        break
                    row, val = hit
                    rebuilt[row, col] = val
            assert np.array_equal(rebuilt, dense)
            assert np.array_equal(dense, dense.conj().T)


def test_row_counts_never_exceed_d(rng):
    for _ in range(10):
        H = random_hamiltonian(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        assert max(H.row_nonzero_counts().values()) <= H.d


def test_dense_ramp_is_zero_at_origin():
    H = parse_spec('{"n_qubits": 1, "d": 1, '
                   '"entries": [{"row": 0, "col": 1, "re": {"lin": 1.0}}]}')
    assert np.all(H.dense(0.0) == 0)
    assert H.oracle_query(0, 1, 0.0) == (1, 0.0 + 0j)  # structural nonzero


def test_norms_time_independent_sigma_x():
    rep = sigma_x_hamiltonian().norms(1.0, samples=9)
    assert rep.spectral_norm_max == pytest.approx(1.0, abs=1e-14)
    assert rep.derivative_norm_max == 0.0
    assert rep.entry_norm_max == 1.0


def test_norms_linear_ramp_sigma_z():
    doc = json.dumps({"n_qubits": 1, "d": 1,
                      "diag": [{"index": 0, "re": {"lin": 1.0}},
                               {"index": 1, "re": {"lin": -1.0}}]})
    rep = parse_spec(doc).norms(2.0, samples=33)
    assert rep.spectral_norm_max == pytest.approx(2.0, abs=1e-14)
    assert rep.derivative_norm_max == pytest.approx(1.0, abs=1e-14)


def test_norms_match_eigsolver_on_random_instance(rng):
    H = random_hamiltonian(rng, 3, 2)
    rep = H.norms(1.0, samples=33)
    grid = np.linspace(0.0, 1.0, 33)
    spec = max(float(np.max(np.abs(np.linalg.eigvalsh(H.dense(tp))))) for tp in grid)
    assert rep.spectral_norm_max == pytest.approx(spec, abs=1e-10)
    assert rep.entry_norm_max <= rep.spectral_norm_max + 1e-12
    assert rep.spectral_norm_max <= H.d * rep.entry_norm_max + 1e-12


def test_norms_monotone_under_refinement(rng):
    H = random_hamiltonian(rng, 2, 2)
    coarse = H.norms(1.5, samples=17)
    fine = H.norms(1.5, samples=129)
    assert coarse.spectral_norm_max <= fine.spectral_norm_max + 1e-12


def test_dense_cap_enforced():
    H = sigma_x_hamiltonian()
    with pytest.raises(DimensionCapError):
        H.dense(0.0, cap=0)


def test_json_round_trip(rng):
    H = random_hamiltonian(rng, 2, 3)
    H2 = parse_spec(json.dumps(H.to_json_dict()))
    for tp in (0.0, 0.7, 1.9):
        assert np.array_equal(H.dense(tp), H2.dense(tp))
