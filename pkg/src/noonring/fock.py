"""Two-mode bosonic Fock-state algebra for the ring + Mach-Zehnder circuit.

The ring source emits photon pairs into the clockwise (cw) and
counter-clockwise (ccw) circulating modes.  States live in a truncated
photon-number basis |n_cw, n_ccw> with n_cw + n_ccw <= n_max, and mode
transformations (phase shifter, directional coupler) act by substituting
transformed creation operators and expanding binomially.
"""

from dataclasses import dataclass, field
from math import comb, factorial, sqrt

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-12


def _basis_kets(n_max):
    """All (n_cw, n_ccw) with n_cw + n_ccw <= n_max."""
    return [(n, m) for n in range(n_max + 1) for m in range(n_max + 1 - n)]


@dataclass
class TwoModeFockState:
    """Complex amplitudes over the |n_cw, n_ccw> basis, n_cw + n_ccw <= n_max."""

    n_max: int
    amplitudes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        for (n, m) in self.amplitudes:
            if n < 0 or m < 0 or n + m > self.n_max:
                raise ValueError(f"ket ({n},{m}) outside cutoff n_max={self.n_max}")

    def amplitude(self, n_cw, n_ccw):
        return complex(self.amplitudes.get((n_cw, n_ccw), 0.0))

    def norm(self):
        return sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalize(self):
        """Return a copy scaled to unit norm."""
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return TwoModeFockState(
            self.n_max, {k: a / n for k, a in self.amplitudes.items()}
        )

    def prune(self, tol=1e-15):
        """Drop amplitudes with magnitude below tol."""
        return TwoModeFockState(
            self.n_max, {k: a for k, a in self.amplitudes.items() if abs(a) > tol}
        )

    def equals_up_to_global_phase(self, other, tol=1e-10):
        """Max elementwise difference after aligning the phase of the
        largest-magnitude amplitude, compared against tol."""
        kets = set(self.amplitudes) | set(other.amplitudes)
        if not kets:
            return True
        ref = max(kets, key=lambda k: abs(self.amplitude(*k)))
        a_ref, b_ref = self.amplitude(*ref), other.amplitude(*ref)
        if abs(a_ref) < tol and abs(b_ref) < tol:
            phase = 1.0
        elif abs(a_ref) < tol or abs(b_ref) < tol:
            return False
        else:
            phase = (a_ref / abs(a_ref)) / (b_ref / abs(b_ref))
        return all(
            abs(self.amplitude(*k) - phase * other.amplitude(*k)) < tol for k in kets
        )


@dataclass
class ModeUnitary:
    """2x2 complex matrix acting on the creation-operator pair (a_cw^+, a_ccw^+)."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (2, 2):
            raise ValueError("ModeUnitary requires a 2x2 matrix")

    def is_unitary(self, tol=UNITARY_TOL):
        return np.allclose(self.matrix @ self.matrix.conj().T, np.eye(2), atol=tol)

    def __matmul__(self, other):
        return ModeUnitary(self.matrix @ other.matrix)


def build_ring_state(n_max=4):
    """Normalized two-photon state emitted by the bidirectionally pumped ring:
    (|2,0> + |0,2>)/sqrt(2)."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2 to hold the two-photon state")
    s = 1.0 / sqrt(2.0)
    return TwoModeFockState(n_max, {(2, 0): s + 0j, (0, 2): s + 0j})


def phase_shifter(theta):
    """Relative phase on the cw mode: diag(e^{i theta}, 1)."""
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    return ModeUnitary(np.diag([np.exp(1j * theta), 1.0]))


def coupler_50_50():
    """Symmetric 50/50 directional coupler:
    a_cw^+ -> (a_cw^+ + i a_ccw^+)/sqrt(2), a_ccw^+ -> (i a_cw^+ + a_ccw^+)/sqrt(2)."""
    s = 1.0 / sqrt(2.0)
    return ModeUnitary(np.array([[s, 1j * s], [1j * s, s]]))


def coupler_variable(reflectivity):
    """Directional coupler with cross-coupling power ratio `reflectivity`.

    reflectivity=0.5 reproduces coupler_50_50; 0 is the identity and 1 a
    full mode swap (up to phase).
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    t = sqrt(1.0 - reflectivity)
    r = sqrt(reflectivity)
    return ModeUnitary(np.array([[t, 1j * r], [1j * r, t]]))


def apply_mode_transform(state, matrix):
    """Evolve a state under a (possibly sub-unitary) 2x2 creation-operator map.

    Each ket |n,m> = a^+n b^+m / sqrt(n! m!) |vac> is rewritten with
    a^+ -> M00 a^+ + M01 b^+ and b^+ -> M10 a^+ + M11 b^+, expanded
    binomially.  A sub-unitary matrix models loss: the output norm then
    drops below one and |amplitude|^2 are survival probabilities.
    """
    m_ = np.asarray(matrix, dtype=complex)
    out = {}
    for (n, m), c in state.amplitudes.items():
        base = c / sqrt(factorial(n) * factorial(m))
        for j in range(n + 1):
            ca = comb(n, j) * m_[0, 0] ** j * m_[0, 1] ** (n - j)
            for k in range(m + 1):
                cb = comb(m, k) * m_[1, 0] ** k * m_[1, 1] ** (m - k)
                p, q = j + k, (n - j) + (m - k)
                amp = base * ca * cb * sqrt(factorial(p) * factorial(q))
                out[(p, q)] = out.get((p, q), 0.0) + amp
    return TwoModeFockState(state.n_max, out).prune()


def apply_unitary(state, u):
    """Apply a ModeUnitary to a state; rejects non-unitary input."""
    if not u.is_unitary(tol=1e-10):
        raise ValueError("matrix is not unitary within tolerance")
    return apply_mode_transform(state, u.matrix)


def mzi_output_state(theta, n_max=4):
    """Ring state after the heated arm and the output 50/50 coupler.

    The heater delays the cw arm, so its creation operator acquires
    e^{-i theta}; composing with the symmetric coupler reproduces the
    closed-form output of the analysis circuit up to a global phase.
    """
    state = build_ring_state(n_max)
    state = apply_unitary(state, phase_shifter(-theta))
    return apply_unitary(state, coupler_50_50())


def outcome_probability(state, n_cw, n_ccw):
    """Born-rule probability of detecting (n_cw, n_ccw) photons."""
    return abs(state.amplitude(n_cw, n_ccw)) ** 2


def coincidence_probability(theta):
    """Probability of one photon in each output port; analytically cos^2(theta),
    oscillating with period pi (twice the classical fringe frequency)."""
    return outcome_probability(mzi_output_state(theta), 1, 1)
