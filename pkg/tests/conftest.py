import numpy as np
import pytest

from sihsim.hamiltonian import (Coefficient, DiagonalEntry, MatrixEntry,
                                TimeDependentHamiltonian)
from sihsim.onesparse import (KIND_IMAG_OFFDIAG, KIND_REAL_DIAG, KIND_REAL_OFFDIAG,
                              OneSparseTerm)

ALL_KINDS = (KIND_REAL_OFFDIAG, KIND_REAL_DIAG, KIND_IMAG_OFFDIAG)


def const(x):
    return Coefficient(constant=float(x))


def sigma_x_hamiltonian():
    return TimeDependentHamiltonian(
        n_qubits=1, d=1, entries=[MatrixEntry(0, 1, const(1.0), Coefficient())], diag=[])


def sigma_y_hamiltonian():
    # H[0,1] = i*im with im = -1 gives the -i / +i pair
    return TimeDependentHamiltonian(
        n_qubits=1, d=1, entries=[MatrixEntry(0, 1, Coefficient(), const(-1.0))], diag=[])


def sigma_z_hamiltonian():
    return TimeDependentHamiltonian(
        n_qubits=1, d=1, entries=[],
        diag=[DiagonalEntry(0, const(1.0)), DiagonalEntry(1, const(-1.0))])


def sigma_xz_hamiltonian():
    return TimeDependentHamiltonian(
        n_qubits=1, d=2, entries=[MatrixEntry(0, 1, const(1.0), Coefficient())],
        diag=[DiagonalEntry(0, const(1.0)), DiagonalEntry(1, const(-1.0))])


def worked_example_hamiltonian():
    """4x4 matrix with a unit block on (0,1) and a half block on (2,3)."""
    return TimeDependentHamiltonian(
        n_qubits=2, d=1,
        entries=[MatrixEntry(0, 1, const(1.0), Coefficient()),
                 MatrixEntry(2, 3, const(0.5), Coefficient())],
        diag=[])


def random_coefficient(rng, scale, style=None):
    """Random coefficient; style cycles constant / ramp / sinusoid."""
    if style is None:
        style = rng.integers(0, 3)
    mag = float(rng.uniform(0.3, 1.0) * scale) * (1 if rng.random() < 0.5 else -1)
    if style == 0:
        return Coefficient(constant=mag)
    if style == 1:
        return Coefficient(constant=float(rng.normal() * scale * 0.3), linear=mag)
    return Coefficient(constant=float(rng.normal() * scale * 0.3),
                       sin_amplitude=mag,
                       sin_frequency=float(rng.uniform(0.5, 3.0)),
                       sin_phase=float(rng.uniform(0, 2 * np.pi)))


def random_hamiltonian(rng, n_qubits, d, scale=0.5, max_edges=None, diag_prob=0.5,
                       styles=True):
    """Random valid instance: row budgets respected, mixed coefficient styles."""
    dim = 1 << n_qubits
    counts = {}
    entries = []
    budget = max_edges if max_edges is not None else dim
    candidates = [(a, b) for a in range(dim) for b in range(a + 1, dim)]
    rng.shuffle(candidates)
    for (a, b) in candidates:
        if len(entries) >= budget:
            break
        if counts.get(a, 0) >= d or counts.get(b, 0) >= d:
            continue
        style = int(rng.integers(0, 3)) if styles else 0
        if rng.random() < 0.7:
            re = random_coefficient(rng, scale, style)
            im = (random_coefficient(rng, scale) if rng.random() < 0.4 else Coefficient())
        else:
            re = Coefficient()
            im = random_coefficient(rng, scale, style)
        entries.append(MatrixEntry(a, b, re, im))
        counts[a] = counts.get(a, 0) + 1
        counts[b] = counts.get(b, 0) + 1
    diag = []
    for q in range(dim):
        if counts.get(q, 0) < d and rng.random() < diag_prob:
            diag.append(DiagonalEntry(q, random_coefficient(rng, scale)))
            counts[q] = counts.get(q, 0) + 1
    if not entries and not diag:
        entries.append(MatrixEntry(0, 1, const(scale), Coefficient()))
    return TimeDependentHamiltonian(n_qubits=n_qubits, d=d, entries=entries, diag=diag)


def random_one_sparse_term(rng, n_qubits, kind, scale=1.0):
    dim = 1 << n_qubits
    indices = rng.permutation(dim)
    if kind == KIND_REAL_DIAG:
        count = int(rng.integers(1, dim + 1))
        support = tuple((int(i),) for i in sorted(indices[:count]))
    else:
        count = int(rng.integers(1, dim // 2 + 1))
        pairs = [tuple(sorted((int(indices[2 * i]), int(indices[2 * i + 1]))))
                 for i in range(count)]
        support = tuple(sorted(pairs))
    coeffs = tuple(const(rng.uniform(-scale, scale)) for _ in support)
    return OneSparseTerm(dim=dim, color=0, kind=kind, support=support, coeffs=coeffs)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240817))
