"""Composite Hilbert space of N two-level atoms and one truncated cavity mode.

Conventions used throughout the package:

* hbar = 1; every rate (g, kappa, gamma, Rabi frequencies) is an angular
  frequency, and only rate ratios matter.
* The composite basis is photon-major: ``|n, bits>`` has flat index
  ``n * 2**n_atoms + bits``.  Bit ``n_atoms - i`` of the integer ``bits``
  is 1 iff atom ``i`` (1-based) is excited, so ``format(bits, '0Nb')``
  reads atom 1 ... atom N left to right.
* Operators are dense complex ``numpy`` matrices, states are complex
  vectors of length ``dim``.  Dimensions stay desk-scale by construction
  (guarded in :func:`build_space`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ATOMS = 12
MAX_DIM = 65536


class DeskScaleError(ValueError):
    """Requested space exceeds the desk-scale guard (N > 12 or dim > 65536)."""


@dataclass(frozen=True)
class SystemParams:
    """Atom count, Fock truncation and the three physical rates.

    ``gamma`` and ``kappa`` are amplitude decay rates: populations decay
    at 2*gamma (atoms) and 2*kappa (cavity), matching the anti-Hermitian
    part of the conditional Hamiltonian.  The jump operators consistent
    with that convention are sqrt(2*gamma)*sigma_i and sqrt(2*kappa)*b.
    """

    n_atoms: int
    g: float = 1.0
    kappa: float = 1.0
    gamma: float = 0.0
    n_max: int = 3

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")
        if self.g <= 0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("decay rates kappa, gamma must be >= 0")

    @property
    def dim(self) -> int:
        """Dimension of the composite space, 2**N * (n_max + 1)."""
        return (self.n_max + 1) << self.n_atoms


@dataclass(frozen=True)
class HilbertSpace:
    """Indexable truncated basis; immutable and safe to share between threads."""

    params: SystemParams

    @property
    def n_atoms(self) -> int:
        return self.params.n_atoms

    @property
    def n_max(self) -> int:
        return self.params.n_max

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def n_configs(self) -> int:
        """Number of atomic configurations, 2**N."""
        return 1 << self.n_atoms

    def flat_index(self, photon_number: int, atomic_config: int) -> int:
        """Flat index of ``|photon_number, atomic_config>`` (photon-major)."""
        if not 0 <= photon_number <= self.n_max:
            raise ValueError(f"photon number {photon_number} outside [0, {self.n_max}]")
        if not 0 <= atomic_config < self.n_configs:
            raise ValueError(f"atomic config {atomic_config} outside [0, {self.n_configs})")
        return photon_number * self.n_configs + atomic_config

    def basis_labels(self, flat: int) -> tuple[int, int]:
        """Inverse of :meth:`flat_index`: returns (photon_number, atomic_config)."""
        if not 0 <= flat < self.dim:
            raise ValueError(f"flat index {flat} outside [0, {self.dim})")
        return divmod(flat, self.n_configs)

    def atom_bit(self, i: int) -> int:
        """Bit position of atom ``i`` (1-based) inside the config integer."""
        if not 1 <= i <= self.n_atoms:
            raise ValueError(f"atom index {i} outside [1, {self.n_atoms}]")
        return self.n_atoms - i

    def config_string(self, atomic_config: int) -> str:
        """Bitstring of a configuration, atom 1 leftmost."""
        return format(atomic_config, f"0{self.n_atoms}b")

    def basis_state(self, photon_number: int, atomic_config: int) -> np.ndarray:
        """Unit vector for the basis element ``|n, bits>``."""
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.flat_index(photon_number, atomic_config)] = 1.0
        return vec

    def ground_state(self) -> np.ndarray:
        """Cavity vacuum with all atoms in the ground state."""
        return self.basis_state(0, 0)


def build_space(params: SystemParams) -> HilbertSpace:
    """Construct the composite space, enforcing the desk-scale guard."""
    if params.n_atoms > MAX_ATOMS:
        raise DeskScaleError(f"n_atoms = {params.n_atoms} exceeds guard of {MAX_ATOMS}")
    if params.dim > MAX_DIM:
        raise DeskScaleError(f"dim = {params.dim} exceeds guard of {MAX_DIM}")
    return HilbertSpace(params)


@lru_cache(maxsize=64)
def atomic_lowering(space: HilbertSpace, i: int) -> np.ndarray:
    """Lowering operator sigma_i = |0><1| on atom i, identity elsewhere.

    Treat the cached return value as read-only.
    """
    bit = space.atom_bit(i)
    mask = 1 << bit
    op = np.zeros((space.dim, space.dim), dtype=complex)
    for n in range(space.n_max + 1):
        base = n * space.n_configs
        for bits in range(space.n_configs):
            if bits & mask:
                op[base + (bits & ~mask), base + bits] = 1.0
    return op


@lru_cache(maxsize=32)
def cavity_annihilation(space: HilbertSpace) -> np.ndarray:
    """Bosonic annihilation b with b|n> = sqrt(n)|n-1>, truncated at n_max.

    The truncation only breaks the ladder algebra at the cutoff row:
    b_dag |n_max> = 0.  Treat the cached return value as read-only.
    """
    op = np.zeros((space.dim, space.dim), dtype=complex)
    nc = space.n_configs
    for n in range(1, space.n_max + 1):
        root = np.sqrt(n)
        for bits in range(nc):
            op[(n - 1) * nc + bits, n * nc + bits] = root
    return op


def collective_lowering(space: HilbertSpace) -> np.ndarray:
    """Collective atomic lowering J_minus = sum_i sigma_i."""
    op = np.zeros((space.dim, space.dim), dtype=complex)
    for i in range(1, space.n_atoms + 1):
        op += atomic_lowering(space, i)
    return op


def expectation(op: np.ndarray, state: np.ndarray) -> complex:
    """<psi|A|psi> with the raw (possibly unnormalized) amplitudes."""
    if op.shape != (state.shape[0], state.shape[0]):
        raise ValueError(f"operator shape {op.shape} does not match state length {state.shape[0]}")
    return complex(np.vdot(state, op @ state))
