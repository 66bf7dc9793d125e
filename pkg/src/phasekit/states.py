"""Truncated Fock-basis test states and their exact phase statistics.

Every reconstruction experiment in this package is benchmarked against
states whose exponential phase moments and canonical phase distribution
are known exactly at the truncated level: the density matrix in the
number basis fixes the quadrature distribution p(x, theta), the moments
Psi_k (sums over the k-th subdiagonal), and the phase distribution
P(phi) in closed form.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .specfun import hermite_fn

DEFAULT_N_MAX = 20

# Fraction of the untruncated norm the Fock window must capture.
CAPTURE_TOL = 1.0e-6

HERMITICITY_TOL = 1.0e-10
TRACE_TOL = 1.0e-8
NEGATIVITY_TOL = 1.0e-10

STATE_KINDS = ("vacuum", "fock", "coherent", "squeezed_vacuum",
               "displaced_fock")


@dataclass(frozen=True)
class StateSpec:
    """Recipe for a test state.

    kind         one of vacuum | fock | coherent | squeezed_vacuum |
                 displaced_fock
    alpha        displacement amplitude (coherent, displaced_fock)
    squeeze      squeeze parameter xi = s e^{i theta} (squeezed_vacuum)
    fock_n       photon number (fock, displaced_fock)
    n_max        Fock-space truncation
    """

    kind: str
    alpha: complex = 0.0j
    squeeze: complex = 0.0j
    fock_n: int = 0
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValueError(
                "unknown state kind %r; expected one of %s"
                % (self.kind, ", ".join(STATE_KINDS))
            )
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")
        if self.fock_n < 0:
            raise ValueError("fock_n must be nonnegative")


@dataclass(frozen=True)
class DensityMatrix:
    """Number-basis density matrix on the window 0..n_max.

    Validated at construction: Hermitian, unit trace (after truncation
    renormalization), and positive semidefinite up to numerical noise.
    """

    n_max: int
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        if rho.shape != (self.n_max + 1, self.n_max + 1):
            raise ValueError(
                "elements must be a (n_max+1) square matrix; got %s"
                % (rho.shape,)
            )
        if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
            raise ValueError(
                "density matrix trace %.12f deviates from 1"
                % np.trace(rho).real
            )
        if np.linalg.eigvalsh(rho).min() < -NEGATIVITY_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "elements", rho)

    @classmethod
    def from_pure(cls, coeffs):
        """Density matrix of the pure state with Fock amplitudes coeffs."""
        c = np.asarray(coeffs, dtype=complex)
        norm = np.linalg.norm(c)
        if norm == 0:
            raise ValueError("zero state vector")
        c = c / norm
        return cls(n_max=len(c) - 1, elements=np.outer(c, c.conj()))

    def mean_photon_number(self):
        return float(
            np.sum(np.arange(self.n_max + 1) * np.diag(self.elements).real)
        )

    def to_text(self):
        """Readable dump: one 'm n Re Im' row per nonnegligible element."""
        lines = ["# density matrix, n_max = %d" % self.n_max,
                 "# columns: m n Re(rho_mn) Im(rho_mn)"]
        for m in range(self.n_max + 1):
            for n in range(self.n_max + 1):
                v = self.elements[m, n]
                if abs(v) > 1.0e-14:
                    lines.append(
                        "%d %d %.15e %.15e" % (m, n, v.real, v.imag)
                    )
        return "\n".join(lines) + "\n"


def _extended_amplitudes(spec, n_big):
    """Fock amplitudes of the requested pure state on a window large
    enough to measure truncation leakage."""
    c = np.zeros(n_big + 1, dtype=complex)
    if spec.kind == "vacuum":
        c[0] = 1.0
    elif spec.kind == "fock":
        if spec.fock_n > n_big:
            raise ValueError("fock_n exceeds extended window")
        c[spec.fock_n] = 1.0
    elif spec.kind == "coherent":
        a = complex(spec.alpha)
        # c_n = e^{-|a|^2/2} a^n / sqrt(n!), built by the stable ratio
        log_norm = -0.5 * abs(a) ** 2
        c[0] = math.exp(log_norm)
        for n in range(1, n_big + 1):
            c[n] = c[n - 1] * a / math.sqrt(n)
    elif spec.kind == "squeezed_vacuum":
        xi = complex(spec.squeeze)
        s = abs(xi)
        if s == 0:
            c[0] = 1.0
        else:
            phase = xi / s
            # even levels only: c_{2n} = (-e^{i theta} tanh s)^n
            #                     sqrt((2n)!)/(2^n n!) / sqrt(cosh s)
            factor = -phase * math.tanh(s)
            c[0] = 1.0 / math.sqrt(math.cosh(s))
            for n in range(1, n_big // 2 + 1):
                c[2 * n] = (
                    c[2 * n - 2]
                    * factor
                    * math.sqrt((2 * n) * (2 * n - 1))
                    / (2.0 * n)
                )
    elif spec.kind == "displaced_fock":
        # exp(alpha a^dag - alpha^* a) applied to |n>, generator
        # truncated on the extended window
        a = complex(spec.alpha)
        if spec.fock_n > n_big:
            raise ValueError("fock_n exceeds extended window")
        lower = np.diag(np.sqrt(np.arange(1.0, n_big + 1)), k=1)
        generator = a * lower.conj().T - np.conj(a) * lower
        vec = np.zeros(n_big + 1, dtype=complex)
        vec[spec.fock_n] = 1.0
        c = expm(generator) @ vec
    return c


def build_state(spec, capture_tol=CAPTURE_TOL):
    """Density matrix of the state described by spec.

    Amplitudes are computed on an extended window, the weight inside
    0..n_max is compared with the untruncated norm, and the truncated
    vector is renormalized.  Raises when the window would swallow more
    than capture_tol of the state: silent truncation of a state that
    does not fit would corrupt every downstream comparison.  Tests that
    deliberately study hard-truncated states can widen capture_tol.
    """
    n_big = max(2 * spec.n_max + 20, spec.n_max + 60)
    c = _extended_amplitudes(spec, n_big)
    captured = float(np.sum(np.abs(c[: spec.n_max + 1]) ** 2))
    if captured < 1.0 - capture_tol:
        raise ValueError(
            "truncation at n_max=%d captures only %.8f of the state "
            "(tolerance %.1e); raise n_max or widen capture_tol"
            % (spec.n_max, captured, capture_tol)
        )
    return DensityMatrix.from_pure(c[: spec.n_max + 1])


def quadrature_pdf(rho, x, theta):
    """Quadrature distribution p(x, theta) of the state.

    p(x, theta) = sum_{m,n} psi_m(x) psi_n(x) rho_{mn} e^{i(n-m) theta},
    a Hermitian quadratic form a^dag rho a with a_n = psi_n(x) e^{i n
    theta}, hence nonnegative for any positive semidefinite rho; tiny
    negative round-off is clamped to zero.
    """
    x = np.asarray(x, dtype=float)
    scalar = not x.ndim
    x = np.atleast_1d(x)
    n_dim = rho.n_max + 1
    psi = np.empty((n_dim, x.size))
    p_prev = np.zeros_like(x)
    p = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    psi[0] = p
    for m in range(1, n_dim):
        p_prev, p = p, x * np.sqrt(2.0 / m) * p - np.sqrt(
            (m - 1.0) / m
        ) * p_prev
        psi[m] = p
    phases = np.exp(1j * theta * np.arange(n_dim))
    a = psi * phases[:, None]
    out = np.einsum("mx,mx->x", a.conj(), rho.elements @ a).real
    out[(out < 0) & (out > -1.0e-12)] = 0.0
    return float(out[0]) if scalar else out


def exact_moments(rho, k):
    """Exponential phase moment Psi_k = sum_n rho_{n+k,n} (k >= 1).

    Psi_0 = 1 by normalization and Psi_{-k} = conj(Psi_k).
    """
    k = int(k)
    if k == 0:
        return 1.0 + 0.0j
    if k < 0:
        return np.conj(exact_moments(rho, -k))
    if k > rho.n_max:
        return 0.0j
    return complex(np.trace(rho.elements, offset=-k))


def exact_phase_dist(rho, phi):
    """Canonical phase distribution P(phi).

    P(phi) = (2 pi)^{-1} sum_{m,n} rho_{mn} e^{i(n-m) phi}, the
    expectation of rho in the (unnormalizable) phase state with
    amplitudes e^{i n phi}; real and nonnegative up to truncation
    round-off.
    """
    phi = np.asarray(phi, dtype=float)
    scalar = not phi.ndim
    phi = np.atleast_1d(phi)
    u = np.exp(1j * np.outer(np.arange(rho.n_max + 1), phi))
    out = np.einsum("mp,mn,np->p", u.conj(), rho.elements, u).real / (
        2.0 * np.pi
    )
    return float(out[0]) if scalar else out
