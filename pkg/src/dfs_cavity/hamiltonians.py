"""Conditional (no-emission) Hamiltonian and laser driving terms.

The conditional Hamiltonian generating the dynamics between emission
events is

    H_cond = i g sum_i (b sigma_i^dag - b^dag sigma_i)
             - i gamma sum_i sigma_i^dag sigma_i  - i kappa b^dag b
             + H_laser,

with the Hermitian drive H_laser = (1/2) sum_i Omega_i sigma_i + h.c.
Its anti-Hermitian part is exactly -i(gamma * sum sigma^dag sigma +
kappa * b^dag b), so the norm of a conditionally evolved state decays at
the instantaneous emission rate.  Rabi frequencies stay fully complex:
their phases are physical and cannot be absorbed into the atomic basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hilbert import HilbertSpace, SystemParams, atomic_lowering, cavity_annihilation

PAIR_LABELS = ("g", "a", "s", "e")


@dataclass(frozen=True)
class Pulse:
    """A rectangular drive segment: one complex Rabi frequency per atom.

    ``duration`` >= 0; an all-zero ``rabi`` vector is a lasers-off
    interval.  Schedules are built from these piecewise-constant
    segments, so the Hamiltonian is time-independent within each one.
    """

    rabi: tuple[complex, ...]
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "rabi", tuple(complex(r) for r in self.rabi))
        if not self.rabi:
            raise ValueError("pulse needs at least one Rabi frequency")
        if self.duration < 0:
            raise ValueError(f"pulse duration must be >= 0, got {self.duration}")

    @classmethod
    def off(cls, n_atoms: int, duration: float) -> "Pulse":
        """Lasers-off interval of the given length."""
        return cls((0.0,) * n_atoms, duration)

    @property
    def n_atoms(self) -> int:
        return len(self.rabi)

    @property
    def is_off(self) -> bool:
        return all(r == 0 for r in self.rabi)

    def in_zeno_regime(self, params: SystemParams) -> bool:
        """Soft diagnostic: drive weak against g, kappa and strong against gamma.

        True iff max|Omega_i| <= 0.1 * min(g, kappa) and
        gamma <= 0.1 * max|Omega_i|.  Never used to block a computation.
        """
        peak = max(abs(r) for r in self.rabi)
        return peak <= 0.1 * min(params.g, params.kappa) and params.gamma <= 0.1 * peak


def _check_pulse(space: HilbertSpace, pulse: Pulse) -> None:
    if pulse.n_atoms != space.n_atoms:
        raise ValueError(
            f"pulse drives {pulse.n_atoms} atoms but the space holds {space.n_atoms}")


def laser_hamiltonian(space: HilbertSpace, pulse: Pulse) -> np.ndarray:
    """Hermitian drive (1/2) sum_i Omega_i sigma_i + h.c."""
    _check_pulse(space, pulse)
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for i, omega in enumerate(pulse.rabi, start=1):
        if omega == 0:
            continue
        s = atomic_lowering(space, i)
        h += 0.5 * omega * s
        h += 0.5 * np.conj(omega) * s.conj().T
    return h


def conditional_hamiltonian(space: HilbertSpace, params: SystemParams,
                            pulse: Pulse | None = None) -> np.ndarray:
    """Non-Hermitian generator of the no-emission evolution.

    ``params`` may carry different rates than the ones the space was
    built with, but must agree on n_atoms and n_max.  ``pulse=None``
    means lasers off.
    """
    if (params.n_atoms, params.n_max) != (space.n_atoms, space.n_max):
        raise ValueError("params disagree with the space on n_atoms/n_max")
    b = cavity_annihilation(space)
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for i in range(1, space.n_atoms + 1):
        s = atomic_lowering(space, i)
        sdag = s.conj().T
        h += 1j * params.g * (b @ sdag - b.conj().T @ s)
        if params.gamma:
            h += -1j * params.gamma * (sdag @ s)
    if params.kappa:
        h += -1j * params.kappa * (b.conj().T @ b)
    if pulse is not None and not pulse.is_off:
        h += laser_hamiltonian(space, pulse)
    return h


def photon_loss_density(space: HilbertSpace, params: SystemParams,
                        state: np.ndarray) -> float:
    """Instantaneous emission probability density of a normalized state.

    Equals 2*kappa*<b^dag b> + 2*gamma*<sum_i sigma_i^dag sigma_i>, the
    decay rate -dP0/dt at t=0; zero exactly on trapped states.
    """
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"state must be normalized, got norm {nrm!r}")
    b = cavity_annihilation(space)
    val = 2.0 * params.kappa * np.vdot(state, b.conj().T @ (b @ state)).real
    for i in range(1, space.n_atoms + 1):
        s = atomic_lowering(space, i)
        val += 2.0 * params.gamma * np.vdot(s @ state, s @ state).real
    return float(val)


@lru_cache(maxsize=16)
def two_atom_pair_basis(space: HilbertSpace) -> np.ndarray:
    """Unitary whose columns are |n g>, |n a>, |n s>, |n e> for n = 0..n_max.

    Column 4*n + k holds the k-th pair state (order g, a, s, e) in the
    photon-n sector, with a/s the antisymmetric/symmetric single
    excitation shared by the two atoms.  Only defined for N = 2.
    """
    if space.n_atoms != 2:
        raise ValueError("pair basis is defined for exactly two atoms")
    w = np.zeros((space.dim, space.dim), dtype=complex)
    rt = 1.0 / np.sqrt(2.0)
    for n in range(space.n_max + 1):
        base = 4 * n
        w[space.flat_index(n, 0b00), base + 0] = 1.0          # g
        w[space.flat_index(n, 0b10), base + 1] = rt           # a
        w[space.flat_index(n, 0b01), base + 1] = -rt
        w[space.flat_index(n, 0b10), base + 2] = rt           # s
        w[space.flat_index(n, 0b01), base + 2] = rt
        w[space.flat_index(n, 0b11), base + 3] = 1.0          # e
    return w


def two_atom_ode_rhs(coeffs: np.ndarray, params: SystemParams,
                     omega_plus: complex, omega_minus: complex) -> np.ndarray:
    """Time derivatives of the pair-basis amplitudes c[n, x] for two atoms.

    ``coeffs`` has shape (n_max + 1, 4) with columns ordered (g, a, s, e).
    The four coupled lines are, per Fock level n (amplitudes outside the
    truncation window are zero):

        dc_ng = -i W- c_na - i W+ c_ns - sqrt(2n) g c_(n-1)s - n kappa c_ng
        dc_na = -i W-* c_ng + i W- c_ne - (gamma + n kappa) c_na
        dc_ns = -i W+* c_ng - i W+ c_ne - sqrt(2n) g c_(n-1)e
                + sqrt(2(n+1)) g c_(n+1)g - (gamma + n kappa) c_ns
        dc_ne = +i W-* c_na - i W+* c_ns + sqrt(2(n+1)) g c_(n+1)s
                - (2 gamma + n kappa) c_ne

    with W+- the symmetric/antisymmetric drive combinations
    (Omega_1 +- Omega_2)/(2 sqrt(2)).  Identical to -i H_cond c after the
    pair-basis change (verified in the test suite).
    """
    if params.n_atoms != 2:
        raise ValueError("the pair-basis amplitude equations require exactly two atoms")
    c = np.asarray(coeffs, dtype=complex)
    if c.shape != (params.n_max + 1, 4):
        raise ValueError(f"coeffs must have shape ({params.n_max + 1}, 4), got {c.shape}")
    g, kap, gam = params.g, params.kappa, params.gamma
    wp, wm = complex(omega_plus), complex(omega_minus)
    cg, ca, cs, ce = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
    n = np.arange(params.n_max + 1)
    sq_dn = np.sqrt(2.0 * n)            # sqrt(2n), pairs with c_(n-1)
    sq_up = np.sqrt(2.0 * (n + 1))      # sqrt(2(n+1)), pairs with c_(n+1)
    cs_dn = np.concatenate(([0.0], cs[:-1]))
    ce_dn = np.concatenate(([0.0], ce[:-1]))
    cg_up = np.concatenate((cg[1:], [0.0]))
    cs_up = np.concatenate((cs[1:], [0.0]))
    out = np.empty_like(c)
    out[:, 0] = -1j * wm * ca - 1j * wp * cs - sq_dn * g * cs_dn - n * kap * cg
    out[:, 1] = -1j * np.conj(wm) * cg + 1j * wm * ce - (gam + n * kap) * ca
    out[:, 2] = (-1j * np.conj(wp) * cg - 1j * wp * ce - sq_dn * g * ce_dn
                 + sq_up * g * cg_up - (gam + n * kap) * cs)
    out[:, 3] = (1j * np.conj(wm) * ca - 1j * np.conj(wp) * cs
                 + sq_up * g * cs_up - (2 * gam + n * kap) * ce)
    return out
