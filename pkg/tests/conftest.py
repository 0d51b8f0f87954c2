import itertools

import numpy as np
import pytest

from biased_cluster.lattice import build_lattice

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
Y = 1j * X @ Z
DENSE = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def dense_cz(num_qubits, a, b):
    dim = 2**num_qubits
    diag = np.ones(dim, dtype=complex)
    for idx in range(dim):
        bits = [(idx >> (num_qubits - 1 - q)) & 1 for q in range(num_qubits)]
        if bits[a] and bits[b]:
            diag[idx] = -1
    return np.diag(diag)


def identify_pauli(op, num_qubits):
    """Pauli string equal to ``op`` up to a global phase."""
    for labels in itertools.product("IXYZ", repeat=num_qubits):
        ref = kron_all([DENSE[l] for l in labels])
        overlap = np.trace(ref.conj().T @ op) / 2**num_qubits
        if abs(abs(overlap) - 1) < 1e-9:
            return "".join(labels)
    raise AssertionError("not a Pauli operator")


@pytest.fixture(scope="session")
def lattices():
    return {d: build_lattice(d) for d in (2, 3, 4)}


@pytest.fixture(scope="session")
def lattices_any():
    cache = {}

    def get(d):
        if d not in cache:
            cache[d] = build_lattice(d)
        return cache[d]

    return get


ACCEPTANCE_LINES: list = []


@pytest.fixture
def criterion():
    """record(number, ok, detail): log one acceptance line, then assert."""

    def record(number, ok, detail=""):
        ACCEPTANCE_LINES.append((number, bool(ok), detail))
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
