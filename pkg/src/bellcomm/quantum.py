"""Two-qubit Born-rule behaviors and the message-assisted quantum protocol."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Behavior, Scenario

__all__ = [
    "I2",
    "X",
    "Y",
    "Z",
    "TOL",
    "QubitPairState",
    "phi_plus",
    "product_state",
    "observable",
    "FloatBehavior",
    "born_behavior",
    "chsh_optimal_behavior",
    "chained_optimal_behavior",
    "ProtocolResult",
    "augmented_protocol_value",
    "binary_entropy",
    "entropy",
    "max_correlator_value",
]

TOL = 1e-12
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def binary_entropy(p: float) -> float:
    p = float(p)
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def entropy(dist) -> float:
    return 0.0 - sum(float(p) * math.log2(float(p)) for p in dist if p > 0)


@dataclass(frozen=True)
class QubitPairState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError("two-qubit density matrix must be 4x4")
        if not np.allclose(rho, rho.conj().T, atol=TOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TOL:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -TOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, psi) -> "QubitPairState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def phi_plus() -> QubitPairState:
    """(|00> + |11>)/sqrt(2)."""
    return QubitPairState.pure([1, 0, 0, 1])


def product_state(a, b) -> QubitPairState:
    return QubitPairState.pure(np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)))


def observable(bloch) -> np.ndarray:
    """n.sigma for a unit Bloch vector n."""
    n = np.asarray(bloch, dtype=float)
    n = n / np.linalg.norm(n)
    O = n[0] * X + n[1] * Y + n[2] * Z
    return O


def _check_dichotomic(O) -> np.ndarray:
    O = np.asarray(O, dtype=complex)
    if O.shape != (2, 2) or not np.allclose(O, O.conj().T, atol=TOL) or not np.allclose(O @ O, I2, atol=1e-10):
        raise ValueError("observable must be a 2x2 Hermitian involution")
    return O


@dataclass(frozen=True)
class FloatBehavior:
    """Floating-point behavior (Born-rule output) with the package's index convention."""

    scenario: Scenario
    probs: np.ndarray

    def __getitem__(self, key) -> float:
        return float(self.probs[self.scenario.index(*key)])

    def correlator(self, x: int, y: int) -> float:
        return self[x, y, 0, 0] - self[x, y, 0, 1] - self[x, y, 1, 0] + self[x, y, 1, 1]

    def max_signalling(self) -> float:
        s = self.scenario
        worst = 0.0
        for x in range(s.n_a):
            for a in range(s.outputs_a[x]):
                ref = sum(self[x, 0, a, b] for b in range(s.outputs_b[0]))
                for y in range(s.n_b):
                    worst = max(worst, abs(sum(self[x, y, a, b] for b in range(s.outputs_b[y])) - ref))
        for y in range(s.n_b):
            for b in range(s.outputs_b[y]):
                ref = sum(self[0, y, a, b] for a in range(s.outputs_a[0]))
                for x in range(s.n_a):
                    worst = max(worst, abs(sum(self[x, y, a, b] for a in range(s.outputs_a[x])) - ref))
        return worst

    def max_normalization_error(self) -> float:
        s = self.scenario
        return max(abs(self.probs[s.block_slice(x, y)].sum() - 1) for x, y in s.blocks)

    def to_behavior(self, max_denominator: int = 10**9) -> Behavior:
        """Continued-fraction rounding, then exact renormalization of each block."""
        return Behavior.from_floats(self.scenario, self.probs, max_denominator)


def born_behavior(state: QubitPairState, A, B, check: bool = True) -> FloatBehavior:
    """p(a,b|x,y) = tr(rho (P^x_a (x) P^y_b)) with P = (1 +- O)/2; output 0 is the +1 eigenvalue."""
    A = [_check_dichotomic(O) for O in A]
    B = [_check_dichotomic(O) for O in B]
    s = Scenario((2,) * len(A), (2,) * len(B))
    probs = np.zeros(s.size)
    for x, Ax in enumerate(A):
        PA = [(I2 + Ax) / 2, (I2 - Ax) / 2]
        for y, By in enumerate(B):
            PB = [(I2 + By) / 2, (I2 - By) / 2]
            for a in range(2):
                for b in range(2):
                    probs[s.index(x, y, a, b)] = np.real(np.trace(state.rho @ np.kron(PA[a], PB[b])))
    fb = FloatBehavior(s, probs)
    if check:
        if fb.max_normalization_error() > 1e-12 or fb.max_signalling() > 1e-12:
            raise AssertionError("Born behavior violates normalization or no-signalling")
        if probs.min() < -1e-12:
            raise AssertionError("negative Born probability")
    return fb


def _xz(angle: float) -> np.ndarray:
    return math.cos(angle) * Z + math.sin(angle) * X


def chsh_optimal_behavior() -> FloatBehavior:
    """Settings with <A0B0> + <A0B1> + <A1B0> - <A1B1> = 2 sqrt 2."""
    return born_behavior(phi_plus(), [Z, X], [(Z + X) / math.sqrt(2), (Z - X) / math.sqrt(2)])


def chained_optimal_behavior(n: int, variant: str = "canonical") -> FloatBehavior:
    """Measurements in the x-z plane on Phi+, where <A(a)B(b)> = cos(a - b).

    Angles a_k = 2k phi, b_k = (2k+1) phi with phi = pi/(2n) give the
    canonical chained sum 2n cos(pi/(2n)). ``cod_valid`` flips Alice's
    observable at odd inputs, matching that functional's relabeling.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    phi = math.pi / (2 * n)
    flip = variant == "cod_valid"
    if variant not in ("canonical", "cod_valid"):
        raise ValueError("variant must be 'canonical' or 'cod_valid'")
    A = [_xz(2 * k * phi + (math.pi if flip and k % 2 else 0.0)) for k in range(n)]
    B = [_xz((2 * k + 1) * phi) for k in range(n)]
    return born_behavior(phi_plus(), A, B)


@dataclass
class ProtocolResult:
    value: float
    branch_values: dict  # message -> partial sum of the functional over inputs sending it
    message_distribution: tuple
    message_entropy: float
    behavior: FloatBehavior


_M332 = ((1, 1, 1), (1, 1, -1), (1, -1, 0))


def augmented_protocol_value() -> ProtocolResult:
    """Quantum correlations plus one message symbol telling Bob whether x = 0.

    Alice measures Z, Z, X on her half of (|00> + |11>)/sqrt 2 and sends
    m = 0 for x = 0, m = 1 otherwise; Bob's observables depend on m.
    """
    A = [Z, Z, X]
    bob = {
        0: [Z, Z, Z],
        1: [(Z + X) / math.sqrt(2), (Z - X) / math.sqrt(2), -Z],
    }
    msg = {0: 0, 1: 1, 2: 1}
    s = Scenario.uniform(3, 2)
    probs = np.zeros(s.size)
    rho = phi_plus()
    for x in range(3):
        fb = born_behavior(rho, [A[x]], bob[msg[x]])
        for y in range(3):
            for a in range(2):
                for b in range(2):
                    probs[s.index(x, y, a, b)] = fb[0, y, a, b]
    beh = FloatBehavior(s, probs)
    branch = {0: 0.0, 1: 0.0}
    for x in range(3):
        for y in range(3):
            branch[msg[x]] += _M332[x][y] * beh.correlator(x, y)
    pm = tuple(sum(1 for x in range(3) if msg[x] == m) / 3 for m in (0, 1))
    return ProtocolResult(branch[0] + branch[1], branch, pm, entropy(pm), beh)


def max_correlator_value(M, restarts: int = 20, seed: int = 0) -> float:
    """Heuristic maximum of sum M_xy <A_x B_y> over two-qubit pure states and
    projective dichotomic measurements (local optimization with restarts).

    A lower bound on the quantum maximum; not a proof of any upper bound.
    """
    from scipy.optimize import minimize

    M = np.asarray(M, dtype=float)
    na, nb = M.shape
    rng = np.random.default_rng(seed)

    def unit(t, p):
        return np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])

    def value(params):
        th = params[0]
        psi = np.array([math.cos(th), 0, 0, math.sin(th)], dtype=complex)
        rho = np.outer(psi, psi.conj())
        angles = params[1:].reshape(-1, 2)
        As = [observable(unit(*angles[i])) for i in range(na)]
        Bs = [observable(unit(*angles[na + j])) for j in range(nb)]
        tot = 0.0
        for x in range(na):
            for y in range(nb):
                if M[x, y]:
                    tot += M[x, y] * np.real(np.trace(rho @ np.kron(As[x], Bs[y])))
        return -tot

    best = -np.inf
    for _ in range(restarts):
        p0 = rng.uniform(0, 2 * math.pi, 1 + 2 * (na + nb))
        res = minimize(value, p0, method="BFGS")
        best = max(best, -res.fun)
    return float(best)
