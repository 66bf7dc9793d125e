"""Reconstruction of the canonical phase distribution from moments.

Two routes from a finite set of exponential phase moments to P(phi) on
a uniform grid: direct truncated Fourier synthesis, and weighted
least-squares inversion of the moment equations with an optional
curvature (periodic second-difference) penalty for noisy inputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

METHODS = ("fourier", "least_squares")

NORMALIZATION_TOL = 1.0e-6


@dataclass(frozen=True)
class PhaseDistribution:
    """P(phi) sampled on the uniform grid phi_m = 2 pi m / M."""

    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    method: str
    K_used: int
    reg_lambda: float = 0.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise ValueError("grid and values must be matching 1-d arrays")
        if self.method not in METHODS:
            raise ValueError(
                "method must be one of %s" % (", ".join(METHODS))
            )
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def n_grid(self):
        return self.grid.size

    def norm(self):
        """Riemann sum (2 pi / M) sum_m P(phi_m)."""
        return float(2.0 * np.pi / self.n_grid * np.sum(self.values))

    def total_variation(self):
        """Sum of absolute increments around the periodic grid."""
        return float(np.sum(np.abs(np.diff(
            np.concatenate([self.values, self.values[:1]])
        ))))


def _collect(moments, K):
    by_k = {}
    for m in moments:
        by_k[m.k] = m
    missing = [k for k in range(1, K + 1) if k not in by_k]
    if missing:
        raise ValueError(
            "moments missing for k = %s"
            % ", ".join(str(k) for k in missing)
        )
    return [by_k[k] for k in range(1, K + 1)]


def fourier_reconstruct(moments, K, M):
    """Truncated Fourier synthesis of the phase distribution.

    P(phi_m) = (2 pi)^{-1} [1 + 2 sum_{k=1..K} (Re Psi_k cos k phi_m
                                              + Im Psi_k sin k phi_m)],
    the negative-k half of the series folded in through the conjugation
    symmetry of the moments.  Normalized by construction.
    """
    if M <= 2 * K:
        raise ValueError("need M > 2K grid points to resolve K harmonics")
    chosen = _collect(moments, K)
    grid = 2.0 * np.pi * np.arange(M) / M
    acc = np.ones(M)
    for m in chosen:
        acc += 2.0 * (
            m.value.real * np.cos(m.k * grid)
            + m.value.imag * np.sin(m.k * grid)
        )
    return PhaseDistribution(
        grid=grid, values=acc / (2.0 * np.pi), method="fourier", K_used=K,
    )


def _second_difference(M):
    d = -2.0 * np.eye(M)
    idx = np.arange(M)
    d[idx, (idx + 1) % M] = 1.0
    d[idx, (idx - 1) % M] = 1.0
    return d


def least_squares_reconstruct(moments, K, M, reg_lambda=0.0,
                              normalize=True):
    """Weighted least-squares inversion of the moment sums.

    Minimizes

      chi^2 = sum_k  [Re Psi_k - (2pi/M) sum_m P_m cos(k phi_m)]^2 / s_re,k^2
            +        [Im Psi_k - (2pi/M) sum_m P_m sin(k phi_m)]^2 / s_im,k^2
            + reg_lambda * sum_m [P_{m-1} - 2 P_m + P_{m+1}]^2

    over P on the periodic grid, optionally under the normalization
    constraint (2pi/M) sum_m P_m = 1.

    With reg_lambda = 0 the grid is underdetermined: the 2K moment
    equations plus the constraint are consistent for any input, and the
    minimum-norm solution (which coincides with the Fourier synthesis)
    is returned.  Without the constraint nothing pins the mean level of
    P, so that combination is rejected.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if M < 8 * K:
        raise ValueError(
            "least squares needs M >= 8K grid points (got M=%d, K=%d)"
            % (M, K)
        )
    if reg_lambda < 0.0:
        raise ValueError("reg_lambda must be nonnegative")
    chosen = _collect(moments, K)
    for m in chosen:
        if m.var_re <= 0.0 or m.var_im <= 0.0:
            raise ValueError(
                "moment k=%d carries a nonpositive variance; least "
                "squares needs positive error bars" % m.k
            )
    grid = 2.0 * np.pi * np.arange(M) / M
    base = 2.0 * np.pi / M

    rows = []
    targets = []
    for m in chosen:
        w_re = 1.0 / m.sigma_re
        w_im = 1.0 / m.sigma_im
        rows.append(w_re * base * np.cos(m.k * grid))
        targets.append(w_re * m.value.real)
        rows.append(w_im * base * np.sin(m.k * grid))
        targets.append(w_im * m.value.imag)
    design = np.array(rows)
    target = np.array(targets)

    if reg_lambda == 0.0:
        if not normalize:
            raise ValueError(
                "system is rank-deficient at reg_lambda = 0 without the "
                "normalization constraint; enable normalization or set "
                "reg_lambda > 0"
            )
        stacked = np.vstack([design, base * np.ones((1, M))])
        rhs = np.concatenate([target, [1.0]])
        values = np.linalg.lstsq(stacked, rhs, rcond=None)[0]
    else:
        d2 = _second_difference(M)
        gram = design.T @ design + reg_lambda * (d2.T @ d2)
        rhs = design.T @ target
        if normalize:
            kkt = np.zeros((M + 1, M + 1))
            kkt[:M, :M] = gram
            kkt[:M, M] = base
            kkt[M, :M] = base
            full_rhs = np.concatenate([rhs, [1.0]])
            values = np.linalg.solve(kkt, full_rhs)[:M]
        else:
            values = np.linalg.lstsq(gram, rhs, rcond=None)[0]

    dist = PhaseDistribution(
        grid=grid, values=values, method="least_squares", K_used=K,
        reg_lambda=float(reg_lambda),
    )
    if normalize and abs(dist.norm() - 1.0) > NORMALIZATION_TOL:
        raise ArithmeticError(
            "normalization constraint violated: sum is %.9f" % dist.norm()
        )
    return dist


def chi_squared(dist, moments, K):
    """Moment-fit part of the least-squares objective for a given P."""
    chosen = _collect(moments, K)
    base = 2.0 * np.pi / dist.n_grid
    total = 0.0
    for m in chosen:
        model_re = base * float(np.sum(
            dist.values * np.cos(m.k * dist.grid)
        ))
        model_im = base * float(np.sum(
            dist.values * np.sin(m.k * dist.grid)
        ))
        total += (m.value.real - model_re) ** 2 / m.var_re
        total += (m.value.imag - model_im) ** 2 / m.var_im
    return total


def save_distribution(dist, path, header_lines=()):
    """Two-column text dump (phi, P), directly plottable."""
    lines = ["# canonical phase distribution"]
    lines.extend("# %s" % h for h in header_lines)
    lines.append("# method: %s" % dist.method)
    lines.append("# K: %d" % dist.K_used)
    lines.append("# M: %d" % dist.n_grid)
    lines.append("# reg_lambda: %.15g" % dist.reg_lambda)
    lines.append("# columns: phi P")
    for phi, p in zip(dist.grid, dist.values):
        lines.append("%.15e %.15e" % (phi, p))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_distribution(path):
    """Parse a distribution file written by save_distribution."""
    meta = {}
    grid = []
    values = []
    with open(path) as fh:
        for idx, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    "line %d: expected 'phi P', got %r" % (idx, line)
                )
            try:
                grid.append(float(parts[0]))
                values.append(float(parts[1]))
            except ValueError:
                raise ValueError("line %d: unparsable row %r" % (idx, line))
    for key in ("method", "K", "M", "reg_lambda"):
        if key not in meta:
            raise ValueError("missing '# %s:' header line" % key)
    if int(meta["M"]) != len(grid):
        raise ValueError(
            "header says M=%s but file holds %d rows"
            % (meta["M"], len(grid))
        )
    return PhaseDistribution(
        grid=np.asarray(grid), values=np.asarray(values),
        method=meta["method"], K_used=int(meta["K"]),
        reg_lambda=float(meta["reg_lambda"]),
    )
