"""Decoherence-free (trapped) subspace construction and bookkeeping.

A state survives the no-emission conditioning forever iff the cavity is
in vacuum and the atomic part is annihilated by the collective lowering
operator J_minus = sum_i sigma_i.  Those atomic states are the minimal-
projection collective-spin states |l, -l>; the sector with excitation
number n corresponds to l = N/2 - n.  The subspace dimension is
binomial(N, floor(N/2)), which for large N grows almost as fast as the
full 2**N.

The basis builder spans each excitation sector with products of singlet
pairs: place n disjoint atom pairs in (|10> - |01>)/sqrt(2) and every
remaining atom in the ground state.  Running over all pairings covers
the sector (for a single pairing it generally does not), and a modified
Gram-Schmidt pass in a fixed enumeration order makes the output
deterministic.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .hamiltonians import Pulse, conditional_hamiltonian
from .hilbert import HilbertSpace, SystemParams

RANK_TOL = 1e-10


def dfs_dimension(n_atoms: int) -> int:
    """Dimension of the trapped subspace: binomial(N, floor(N/2))."""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    return math.comb(n_atoms, n_atoms // 2)


def dicke_degeneracy(n_atoms: int, l: float) -> int:
    """Multiplicity of the collective-spin states |l, -l> for N atoms.

    Valid l run from N/2 down to 0 (N even) or 1/2 (N odd) in integer
    steps; the excitation number of the sector is n = N/2 - l.  The count
    is binomial(N, n) - binomial(N, n - 1), and summing it over all valid
    l recovers :func:`dfs_dimension`.
    """
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    n_float = n_atoms / 2 - l
    n = round(n_float)
    if abs(n_float - n) > 1e-12 or n < 0 or l < 0 or n > n_atoms // 2:
        raise ValueError(f"l = {l} is not a valid sector label for {n_atoms} atoms")
    if n == 0:
        return 1
    return math.comb(n_atoms, n) - math.comb(n_atoms, n - 1)


def _pairings(atoms: tuple[int, ...], n_pairs: int):
    """All ways to pick n_pairs disjoint ordered pairs (i < j), lexicographic.

    Atoms left over stay unpaired, so the leading atom is first matched
    with every later partner and then skipped entirely.
    """
    if n_pairs == 0:
        yield ()
        return
    if len(atoms) < 2 * n_pairs:
        return
    first, rest = atoms[0], atoms[1:]
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for sub in _pairings(remaining, n_pairs - 1):
            yield ((first, partner),) + sub
    yield from _pairings(rest, n_pairs)


def _singlet_product(n_atoms: int, pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Atomic-sector vector: singlets on ``pairs``, all other atoms ground."""
    vec = np.zeros(1 << n_atoms, dtype=complex)
    amp = 2.0 ** (-len(pairs) / 2.0)
    for choice in itertools.product((0, 1), repeat=len(pairs)):
        bits = 0
        sign = 1.0
        for (i, j), c in zip(pairs, choice):
            excited = i if c == 0 else j
            if c == 1:
                sign = -sign
            bits |= 1 << (n_atoms - excited)
        vec[bits] += sign * amp
    return vec


def generating_states(n_atoms: int, n_pairs: int) -> list[np.ndarray]:
    """Singlet-product generators of the excitation-n sector (atomic part only).

    Returns vectors of length 2**N, each annihilated by J_minus; their
    span has dimension ``dicke_degeneracy(N, N/2 - n_pairs)``.
    """
    if not 0 <= n_pairs <= n_atoms // 2:
        raise ValueError(f"n_pairs = {n_pairs} outside [0, {n_atoms // 2}]")
    atoms = tuple(range(1, n_atoms + 1))
    return [_singlet_product(n_atoms, p) for p in _pairings(atoms, n_pairs)]


@dataclass(frozen=True, eq=False)
class DfsBasis:
    """Orthonormal trapped-state basis, all vectors in the cavity-vacuum sector.

    ``vectors[k]`` is the k-th basis vector (length ``space.dim``);
    ``excitations[k]`` is its atomic excitation number n and
    ``dicke_l[k] = N/2 - n`` the collective-spin label.  Vectors are
    grouped by increasing n in deterministic construction order.
    """

    space: HilbertSpace
    vectors: np.ndarray
    excitations: tuple[int, ...]
    dicke_l: tuple[float, ...]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def projector(self) -> np.ndarray:
        """P = sum_k |v_k><v_k| on the composite space."""
        return self.vectors.T @ self.vectors.conj()

    def sector_counts(self) -> dict[int, int]:
        """Number of basis vectors per excitation number."""
        counts: dict[int, int] = {}
        for n in self.excitations:
            counts[n] = counts.get(n, 0) + 1
        return counts


@lru_cache(maxsize=32)
def dfs_basis(space: HilbertSpace) -> DfsBasis:
    """Build the orthonormal trapped-state basis for the given space.

    Generators are orthonormalized sector by sector with modified
    Gram-Schmidt (two passes), dropping any candidate whose residual norm
    falls below 1e-10; the generators are exact rationals over sqrt(2),
    so the tolerance is safe.  The result is cached per space; treat the
    arrays as read-only.
    """
    n_atoms = space.n_atoms
    accepted: list[np.ndarray] = []
    excitations: list[int] = []
    for n in range(n_atoms // 2 + 1):
        for gen in generating_states(n_atoms, n):
            v = gen.copy()
            for _ in range(2):
                for u in accepted:
                    v -= np.vdot(u, v) * u
            nrm = np.linalg.norm(v)
            if nrm < RANK_TOL:
                continue
            accepted.append(v / nrm)
            excitations.append(n)
    count = dfs_dimension(n_atoms)
    if len(accepted) != count:
        raise RuntimeError(
            f"constructed {len(accepted)} trapped states, expected {count}")
    # embed the atomic vectors in the photon-0 block of the composite space
    vectors = np.zeros((count, space.dim), dtype=complex)
    vectors[:, : space.n_configs] = np.array(accepted)
    dicke_l = tuple(n_atoms / 2 - n for n in excitations)
    return DfsBasis(space, vectors, tuple(excitations), dicke_l)


def dfs_projector(space: HilbertSpace) -> np.ndarray:
    """Projector onto the trapped subspace; idempotent and Hermitian."""
    return dfs_basis(space).projector()


def effective_hamiltonian(space: HilbertSpace, pulse: Pulse,
                          params: SystemParams) -> np.ndarray:
    """Zeno-projected generator P H_cond P.

    The continuously monitored leaky cavity confines weak driving to the
    trapped subspace, so the drive acts through its projection.  For
    gamma = 0 the cavity coupling projects to zero exactly and the result
    reduces to P H_laser P, which is Hermitian.
    """
    p = dfs_projector(space)
    h = conditional_hamiltonian(space, params, pulse)
    return p @ h @ p


def export_basis(basis: DfsBasis, csv_path: str | Path, sidecar_path: str | Path) -> None:
    """Write the basis as CSV amplitudes plus a JSON sidecar with sector labels.

    CSV columns: vector_index, flat_basis_index, re_amplitude, im_amplitude
    (every amplitude, in flat-index order, 17 significant digits).
    """
    csv_path, sidecar_path = Path(csv_path), Path(sidecar_path)
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vector_index", "flat_basis_index", "re_amplitude", "im_amplitude"])
        for k in range(len(basis)):
            for flat in range(basis.space.dim):
                amp = basis.vectors[k, flat]
                writer.writerow([k, flat, f"{amp.real:.17g}", f"{amp.imag:.17g}"])
    sidecar = {
        "n_atoms": basis.space.n_atoms,
        "n_max": basis.space.n_max,
        "space_dimension": basis.space.dim,
        "dfs_dimension": len(basis),
        "sectors": [
            {"vector_index": k, "excitation": basis.excitations[k], "dicke_l": basis.dicke_l[k]}
            for k in range(len(basis))
        ],
        "sector_counts": {str(n): c for n, c in sorted(basis.sector_counts().items())},
    }
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
