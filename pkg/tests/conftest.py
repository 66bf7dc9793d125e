"""Shared fixtures: kernel tables and reference states built once per run."""

import pytest

from phasekit import KernelSpec, StateSpec, build_kernel_table, build_state


@pytest.fixture(scope="session")
def default_tables():
    """Kernel tables for k = 1..8 at the default accuracy settings."""
    return {k: build_kernel_table(KernelSpec(k=k)) for k in range(1, 9)}


@pytest.fixture(scope="session")
def rho_squeezed():
    """Squeezed vacuum, truncated at n_max = 20 (captures 98.8 percent)."""
    spec = StateSpec(kind="squeezed_vacuum", squeeze=-1.31, n_max=20)
    return build_state(spec, capture_tol=0.05)


@pytest.fixture(scope="session")
def rho_displaced_fock():
    """Displaced Fock state with mean photon number 4.25 before truncation."""
    spec = StateSpec(kind="displaced_fock", alpha=-1.5, fock_n=2, n_max=20)
    return build_state(spec)


@pytest.fixture(scope="session")
def rho_coherent_unit():
    return build_state(StateSpec(kind="coherent", alpha=1.0, n_max=25))
