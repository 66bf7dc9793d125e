"""Direct estimation of exponential phase moments from homodyne records.

The k-th moment is sampled as a phase-weighted average of the kernel
over the recorded quadratures.  Alongside the point estimate, this
module quantifies the three error sources of the method: statistical
variance of the sample average, systematic bias from measuring at a
finite number of phases (aliasing), and systematic bias from detector
smearing when no compensated kernel is used.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import smear_error_kernel
from .states import exact_moments

QUAD_NODES_PER_PANEL = 40
INNER_PANELS = 16
OUTER_PANELS_PER_UNIT = 2.0


@dataclass(frozen=True)
class MomentEstimate:
    """One estimated moment with its statistical variances.

    value        complex point estimate of Psi_k
    var_re       variance of the real part (inf when some phase holds a
                 single event and contributes an undeterminable spread)
    var_im       variance of the imaginary part
    compensated  True when a smearing-compensated kernel was used
    eta_assumed  efficiency baked into that kernel (1 when plain)
    """

    k: int
    value: complex
    var_re: float
    var_im: float
    n_phases: int
    compensated: bool
    eta_assumed: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("moment order k must be >= 1")
        if self.var_re < 0 or self.var_im < 0:
            raise ValueError("variances must be nonnegative")
        if self.n_phases < 1:
            raise ValueError("n_phases must be positive")

    @property
    def sigma_re(self):
        return math.sqrt(self.var_re)

    @property
    def sigma_im(self):
        return math.sqrt(self.var_im)


def _check_table(ms, k, table):
    if table.spec.k != k:
        raise ValueError(
            "kernel table is built for k=%d, estimate requested for k=%d"
            % (table.spec.k, k)
        )
    compensated = table.spec.eta < 1.0
    if compensated and abs(table.spec.eta - ms.plan.eta) > 1.0e-12:
        raise ValueError(
            "compensated kernel assumes eta=%.6g but the plan ran at "
            "eta=%.6g" % (table.spec.eta, ms.plan.eta)
        )
    return compensated


def _phase_stats(kernel_values):
    """Sample mean and (unbiased) sample variance of kernel values at
    one phase; a single event cannot estimate a spread, so its variance
    is flagged as infinite rather than dropped."""
    n = kernel_values.size
    mean = float(kernel_values.mean())
    var = float(kernel_values.var(ddof=1)) if n > 1 else math.inf
    return mean, var, n


def _assemble(k, phases, stats, compensated, eta_assumed):
    n_phases = len(phases)
    value = 0.0j
    var_re = 0.0
    var_im = 0.0
    for theta, (mean, var, n) in zip(phases, stats):
        c = math.cos(k * theta)
        s = math.sin(k * theta)
        value += complex(c, s) * mean
        if c != 0.0:
            var_re += c * c * var / n
        if s != 0.0:
            var_im += s * s * var / n
    scale = 2.0 * math.pi / n_phases
    return MomentEstimate(
        k=k,
        value=value * scale,
        var_re=var_re * scale * scale,
        var_im=var_im * scale * scale,
        n_phases=n_phases,
        compensated=compensated,
        eta_assumed=float(eta_assumed),
    )


def estimate_moment(ms, k, table):
    """Estimate Psi_k from a MeasurementSet with the given kernel table.

    value  = (2 pi / N) sum_l e^{i k theta_l} mean_r K_k[x_r(theta_l)]
    var_re = (2 pi / N)^2 sum_l cos^2(k theta_l) s_l^2 / n(theta_l)
    and var_im with sin^2, where s_l^2 is the per-phase sample variance
    of the kernel values.
    """
    compensated = _check_table(ms, k, table)
    stats = [_phase_stats(table.evaluate(rec)) for rec in ms.records]
    return _assemble(k, ms.plan.phases, stats, compensated, table.spec.eta)


def estimate_all(ms, k_max, tables):
    """Estimates for k = 1..k_max in one pass over the records.

    tables may be a dict keyed by k or any iterable of kernel tables.
    Results are identical to calling estimate_moment per order.  The
    order cap k_max must stay below the number of phases; beyond it the
    discretization bias can dominate the estimate.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n_phases = ms.plan.n_phases
    if k_max >= n_phases:
        raise ValueError(
            "k_max=%d must be smaller than the number of phases N=%d"
            % (k_max, n_phases)
        )
    if isinstance(tables, dict):
        by_k = dict(tables)
    else:
        by_k = {t.spec.k: t for t in tables}
    missing = [k for k in range(1, k_max + 1) if k not in by_k]
    if missing:
        raise ValueError(
            "no kernel table for k = %s"
            % ", ".join(str(k) for k in missing)
        )
    flags = {
        k: _check_table(ms, k, by_k[k]) for k in range(1, k_max + 1)
    }
    stats = {k: [] for k in range(1, k_max + 1)}
    for rec in ms.records:
        for k in range(1, k_max + 1):
            stats[k].append(_phase_stats(by_k[k].evaluate(rec)))
    return [
        _assemble(k, ms.plan.phases, stats[k], flags[k], by_k[k].spec.eta)
        for k in range(1, k_max + 1)
    ]


class _KernelQuadrature:
    """Composite Gauss-Legendre rule bound to one kernel table.

    Caches node positions, weights, kernel values on the nodes, and the
    oscillator eigenfunctions up to order_max, so matrix elements for
    many index pairs reuse one evaluation sweep.  Panels are split at
    the table edge (where the tail rule takes over) and at the origin
    (where the kernel kinks or has its logarithmic spike).
    """

    def __init__(self, table, order_max):
        x0 = table.spec.x0
        x_max = math.sqrt(2.0 * order_max + 1.0) + 8.0
        if x_max <= x0 + 1.0:
            x_max = x0 + 8.0
        edges_in = np.linspace(0.0, x0, INNER_PANELS + 1)
        n_out = max(16, int(math.ceil(
            OUTER_PANELS_PER_UNIT * (x_max - x0)
        )))
        edges_out = np.linspace(x0, x_max, n_out + 1)
        edges = np.concatenate([edges_in, edges_out[1:]])
        base_x, base_w = np.polynomial.legendre.leggauss(
            QUAD_NODES_PER_PANEL
        )
        xs = []
        ws = []
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            xs.append(a + half * (base_x + 1.0))
            ws.append(half * base_w)
        x_pos = np.concatenate(xs)
        w_pos = np.concatenate(ws)
        self.x = np.concatenate([-x_pos[::-1], x_pos])
        self.w = np.concatenate([w_pos[::-1], w_pos])
        self.kernel = table.evaluate(self.x)
        psi = np.empty((order_max + 1, self.x.size))
        p_prev = np.zeros_like(self.x)
        p = np.pi ** -0.25 * np.exp(-0.5 * self.x * self.x)
        psi[0] = p
        for m in range(1, order_max + 1):
            p_prev, p = p, self.x * math.sqrt(2.0 / m) * p - math.sqrt(
                (m - 1.0) / m
            ) * p_prev
            psi[m] = p
        self.psi = psi

    def q(self, m, n):
        return 2.0 * np.pi * float(
            np.sum(self.w * self.kernel * self.psi[m] * self.psi[n])
        )


def q_matrix_element(k, m, n, table):
    """Kernel matrix element Q_mn = 2 pi Int K_k psi_m psi_n dx.

    Vanishes (to quadrature accuracy) when m + n + k is odd; equals 1
    in the defining case m = n + k.
    """
    if table.spec.k != k:
        raise ValueError(
            "kernel table is built for k=%d, not k=%d" % (table.spec.k, k)
        )
    if m < 0 or n < 0:
        raise ValueError("matrix element indices must be nonnegative")
    quad = _KernelQuadrature(table, max(m, n))
    return quad.q(m, n)


def aliasing_bias(rho, k, N, table):
    """Exact phase-discretization bias of the k-th moment at N phases.

    Measuring at N equidistant phases folds every density-matrix
    element rho_{n+k+sN, n} and rho_{n, n+sN-k} (s >= 1) into the k-th
    moment, weighted by the kernel matrix elements.  The s-sum is
    finite here because the state is truncated: terms whose indices
    exceed n_max vanish identically.
    """
    if N <= k:
        raise ValueError("aliasing analysis assumes N > k")
    quad = None
    bias = 0.0j
    s = 1
    while True:
        gap_hi = k + s * N
        gap_lo = s * N - k
        if gap_hi > rho.n_max and gap_lo > rho.n_max:
            break
        if quad is None:
            quad = _KernelQuadrature(table, rho.n_max)
        for n in range(rho.n_max - gap_hi + 1):
            bias += rho.elements[n + gap_hi, n] * quad.q(n + gap_hi, n)
        for n in range(rho.n_max - gap_lo + 1):
            bias += rho.elements[n, n + gap_lo] * quad.q(n, n + gap_lo)
        s += 1
    return bias


def aliasing_bias_approx(rho, k, N):
    """Higher-moment approximation to the aliasing bias.

    Valid for highly excited states, where the kernel matrix elements
    approach their classical values k/(sN +- k):

      even N:  sum_s (-1)^{Ns/2} [ k/(sN+k) Psi_{k+Ns}
                                 + k/(sN-k) Psi_{k-Ns} ]
      odd  N:  sum_s (-1)^s [ k/(2sN+k) Psi_{k+2Ns}
                            + k/(2sN-k) Psi_{k-2Ns} ]

    (for odd N only even multiples of N couple, which is why doubling
    the phase count is implicit in the odd-N form).  Moments beyond the
    truncation vanish, which terminates the sum.
    """
    if N <= k:
        raise ValueError("aliasing analysis assumes N > k")
    bias = 0.0j
    s = 1
    while True:
        if N % 2 == 0:
            step = s * N
            sign = (-1.0) ** ((N * s) // 2)
        else:
            step = 2 * s * N
            sign = (-1.0) ** s
        if k + step > rho.n_max and abs(k - step) > rho.n_max:
            break
        bias += sign * (
            k / (step + k) * exact_moments(rho, k + step)
            + k / (step - k) * exact_moments(rho, k - step)
        )
        s += 1
    return bias


def smear_bias(rho, k, eta, g_table=None):
    """Systematic moment error from estimating smeared data with the
    plain (eta = 1) kernel.

    The bias is the phase-weighted average of the smearing-error kernel
    g_k over the state.  The angular integral picks out the k-th
    subdiagonal, leaving

        2 pi sum_n rho_{n+k,n} Int g_k(x; eta) psi_{n+k} psi_n dx.

    g_table may supply precomputed g values as a vectorized callable;
    by default the exact convolution difference is evaluated.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    if eta == 1.0:
        return 0.0j
    if k < 1:
        raise ValueError("moment order k must be >= 1")
    if k > rho.n_max:
        return 0.0j
    order_max = rho.n_max
    x_max = math.sqrt(2.0 * order_max + 1.0) + 8.0
    n_panels = max(24, int(math.ceil(2.0 * x_max)))
    edges = np.linspace(0.0, x_max, n_panels + 1)
    base_x, base_w = np.polynomial.legendre.leggauss(QUAD_NODES_PER_PANEL)
    xs = []
    ws = []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        xs.append(a + half * (base_x + 1.0))
        ws.append(half * base_w)
    x_pos = np.concatenate(xs)
    w_pos = np.concatenate(ws)
    x = np.concatenate([-x_pos[::-1], x_pos])
    w = np.concatenate([w_pos[::-1], w_pos])
    if g_table is None:
        g = smear_error_kernel(k, x, eta)
    else:
        g = np.asarray(g_table(x), dtype=float)
    psi = np.empty((order_max + 1, x.size))
    p_prev = np.zeros_like(x)
    p = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    psi[0] = p
    for m in range(1, order_max + 1):
        p_prev, p = p, x * math.sqrt(2.0 / m) * p - math.sqrt(
            (m - 1.0) / m
        ) * p_prev
        psi[m] = p
    bias = 0.0j
    for n in range(rho.n_max - k + 1):
        overlap = float(np.sum(w * g * psi[n + k] * psi[n]))
        bias += rho.elements[n + k, n] * overlap
    return 2.0 * np.pi * bias


def save_moments(estimates, path, header_lines=()):
    """Write moment estimates as text: sigma columns, one row per k."""
    if not estimates:
        raise ValueError("nothing to save")
    n_phases = estimates[0].n_phases
    lines = ["# exponential phase moment estimates"]
    lines.extend("# %s" % h for h in header_lines)
    lines.append("# n_phases: %d" % n_phases)
    lines.append("# columns: k re im sigma_re sigma_im compensated eta")
    for est in sorted(estimates, key=lambda e: e.k):
        lines.append(
            "%d %.15e %.15e %.15e %.15e %d %.15g"
            % (est.k, est.value.real, est.value.imag, est.sigma_re,
               est.sigma_im, int(est.compensated), est.eta_assumed)
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_moments(path):
    """Parse a moments file written by save_moments."""
    n_phases = None
    rows = []
    with open(path) as fh:
        for idx, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("n_phases:"):
                    try:
                        n_phases = int(body.partition(":")[2])
                    except ValueError:
                        raise ValueError(
                            "line %d: bad n_phases header" % idx
                        )
                continue
            parts = line.split()
            if len(parts) != 7:
                raise ValueError(
                    "line %d: expected 7 columns, got %d"
                    % (idx, len(parts))
                )
            try:
                k = int(parts[0])
                re, im, s_re, s_im = (float(p) for p in parts[1:5])
                compensated = bool(int(parts[5]))
                eta = float(parts[6])
            except ValueError:
                raise ValueError("line %d: unparsable moment row" % idx)
            rows.append((k, re, im, s_re, s_im, compensated, eta))
    if n_phases is None:
        raise ValueError("missing '# n_phases:' header line")
    return [
        MomentEstimate(
            k=k, value=complex(re, im), var_re=s_re ** 2, var_im=s_im ** 2,
            n_phases=n_phases, compensated=compensated, eta_assumed=eta,
        )
        for k, re, im, s_re, s_im, compensated, eta in rows
    ]
