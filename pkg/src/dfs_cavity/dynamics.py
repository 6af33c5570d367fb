"""No-jump propagation, quantum-jump trajectories, and the Lindblad oracle.

Between emission events the state evolves with U_cond(t) = exp(-i H_cond t),
computed by dense matrix exponential (exact for the piecewise-constant
schedules used here).  The squared norm of the unnormalized state is the
probability that no photon has been emitted, which is what trajectory
sampling inverts: draw r uniform in (0, 1), evolve until the norm falls
to r, then apply a jump operator sqrt(2*gamma)*sigma_i or sqrt(2*kappa)*b
chosen with probability proportional to its emission weight.  That choice
of jump operators makes conditional evolution plus jumps exactly
trace-preserving on average, which the Lindblad integrator here verifies
independently.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .hamiltonians import Pulse, conditional_hamiltonian
from .hilbert import HilbertSpace, SystemParams

NORM_BISECTION_TOL = 1e-10
ME_STEP_FACTOR = 1e-2
ENSEMBLE_CHUNK = 256  # fixed so reductions are identical for any worker count


class TraceDriftError(RuntimeError):
    """Lindblad integration lost more trace than the 1e-6 guard allows."""


@dataclass(frozen=True)
class Schedule:
    """Ordered piecewise-constant drive segments (all-zero rabi = lasers off)."""

    segments: tuple[Pulse, ...]

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if not segments:
            raise ValueError("schedule needs at least one segment")
        n = segments[0].n_atoms
        if any(seg.n_atoms != n for seg in segments):
            raise ValueError("all schedule segments must drive the same atom count")

    @property
    def n_atoms(self) -> int:
        return self.segments[0].n_atoms

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One conditioned realization: jump record and normalized final state."""

    jumps: tuple[tuple[float, str], ...]
    final_state: np.ndarray
    survived: bool


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Seeded trajectory ensemble: survival estimate and averaged state.

    ``rho_perp`` is the average over trajectories that emitted at least
    one photon (None if every sample survived); it is the computed
    post-emission mixture entering the no-detection formula.
    """

    p0_estimate: float
    density_matrix: np.ndarray
    n_samples: int
    seed: int
    rho_perp: np.ndarray | None
    jump_records: tuple[tuple[int, float, str], ...]

    def __post_init__(self):
        rho = self.density_matrix
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("ensemble density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise ValueError("ensemble density matrix trace differs from 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("ensemble density matrix has a negative eigenvalue")

    @property
    def stderr(self) -> float:
        """Binomial standard error of the survival estimate."""
        p = self.p0_estimate
        return float(np.sqrt(p * (1.0 - p) / self.n_samples))


def propagate_conditional(h_cond: np.ndarray, state: np.ndarray, t: float) -> np.ndarray:
    """U_cond(t) applied to the state; the returned vector is unnormalized."""
    if t < 0:
        raise ValueError(f"propagation time must be >= 0, got {t}")
    if h_cond.shape != (state.shape[0], state.shape[0]):
        raise ValueError("Hamiltonian and state dimensions disagree")
    return expm(-1j * t * h_cond) @ state


def no_photon_probability(h_cond: np.ndarray, state: np.ndarray, t: float) -> float:
    """Probability of zero emissions in (0, t) for a normalized initial state."""
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"initial state must be normalized, got norm {nrm!r}")
    evolved = propagate_conditional(h_cond, state, t)
    return float(min(np.vdot(evolved, evolved).real, 1.0))


def conditional_state(h_cond: np.ndarray, state: np.ndarray, t: float) -> np.ndarray:
    """Normalized state given that no photon was emitted up to time t."""
    evolved = propagate_conditional(h_cond, state, t)
    nrm = np.linalg.norm(evolved)
    if nrm < 1e-300:
        raise ValueError("state is incompatible with the no-emission conditioning")
    return evolved / nrm


def jump_operators(space: HilbertSpace,
                   params: SystemParams) -> list[tuple[str, np.ndarray]]:
    """Emission channels: ("cavity", sqrt(2 kappa) b) then ("atom_i", sqrt(2 gamma) sigma_i).

    Channels with zero rate are omitted.  The ordering is part of the
    deterministic RNG contract for trajectory sampling.
    """
    from .hilbert import atomic_lowering, cavity_annihilation

    ops: list[tuple[str, np.ndarray]] = []
    if params.kappa > 0:
        ops.append(("cavity", np.sqrt(2.0 * params.kappa) * cavity_annihilation(space)))
    if params.gamma > 0:
        for i in range(1, space.n_atoms + 1):
            ops.append((f"atom_{i}", np.sqrt(2.0 * params.gamma) * atomic_lowering(space, i)))
    return ops


@lru_cache(maxsize=16)
def _segment_propagators(space: HilbertSpace, params: SystemParams,
                         schedule: Schedule) -> tuple[tuple[np.ndarray, np.ndarray, float], ...]:
    """(H_cond, full-duration propagator, duration) per segment; cached read-only."""
    out = []
    for seg in schedule.segments:
        h = conditional_hamiltonian(space, params, seg)
        out.append((h, expm(-1j * seg.duration * h), seg.duration))
    return tuple(out)


def _draw_threshold(rng: np.random.Generator) -> float:
    r = rng.random()
    while r == 0.0:
        r = rng.random()
    return r


def _bisect_jump(h: np.ndarray, psi: np.ndarray, r: float,
                 t_max: float) -> tuple[float, np.ndarray]:
    """Locate tau in (0, t_max] where ||U(tau) psi||^2 crosses r.

    The norm is non-increasing along the conditional evolution, so plain
    bisection converges; iterate until the norm matches r within 1e-10.
    """
    lo, hi = 0.0, t_max
    mid, cand = t_max, None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        cand = expm(-1j * mid * h) @ psi
        val = np.vdot(cand, cand).real - r
        if abs(val) <= NORM_BISECTION_TOL:
            break
        if val > 0:
            lo = mid
        else:
            hi = mid
    return mid, cand


def sample_trajectory(space: HilbertSpace, params: SystemParams, schedule: Schedule,
                      seed, initial_state: np.ndarray | None = None) -> Trajectory:
    """One quantum-jump realization of the schedule (waiting-time algorithm).

    Identical seeds reproduce identical jump records and final states
    bit-exactly.  ``seed`` may be an int or a numpy SeedSequence.
    """
    if schedule.n_atoms != space.n_atoms:
        raise ValueError("schedule and space disagree on the atom count")
    rng = np.random.default_rng(seed)
    if initial_state is None:
        psi = space.ground_state()
    else:
        nrm = np.linalg.norm(initial_state)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError("initial state must be normalized")
        psi = np.asarray(initial_state, dtype=complex).copy()
    channels = jump_operators(space, params)
    labels = [name for name, _ in channels]
    ops = [op for _, op in channels]
    jumps: list[tuple[float, str]] = []
    r = _draw_threshold(rng)
    t_offset = 0.0
    for h, u_full, duration in _segment_propagators(space, params, schedule):
        elapsed = 0.0
        while True:
            remaining = duration - elapsed
            if remaining <= 0:
                break
            u = u_full if elapsed == 0.0 else expm(-1j * remaining * h)
            candidate = u @ psi
            if np.vdot(candidate, candidate).real > r:
                psi = candidate
                break
            tau, psi_at = _bisect_jump(h, psi, r, remaining)
            weights = np.array([np.vdot(op @ psi_at, op @ psi_at).real for op in ops])
            total = weights.sum()
            if not total > 0:
                raise RuntimeError("norm decayed with no open emission channel")
            pick = min(int(np.searchsorted(np.cumsum(weights) / total, rng.random(),
                                           side="right")), len(ops) - 1)
            jumped = ops[pick] @ psi_at
            psi = jumped / np.linalg.norm(jumped)
            jumps.append((t_offset + elapsed + tau, labels[pick]))
            if len(jumps) > 100_000:
                raise RuntimeError("jump count safeguard exceeded")
            advanced = elapsed + tau
            if advanced <= elapsed:  # guard against a zero-width float step
                advanced = np.nextafter(elapsed, np.inf)
            elapsed = min(advanced, duration)
            r = _draw_threshold(rng)
        t_offset += duration
    nrm = np.linalg.norm(psi)
    return Trajectory(tuple(jumps), psi / nrm, survived=not jumps)


def _ensemble_chunk(args):
    space, params, schedule, child_seeds = args
    dim = space.dim
    outer_sum = np.zeros((dim, dim), dtype=complex)
    perp_sum = np.zeros((dim, dim), dtype=complex)
    survived = 0
    jumped = 0
    records: list[tuple[int, float, str]] = []
    for idx, child in child_seeds:
        traj = sample_trajectory(space, params, schedule, child)
        outer = np.outer(traj.final_state, traj.final_state.conj())
        outer_sum += outer
        if traj.survived:
            survived += 1
        else:
            jumped += 1
            perp_sum += outer
            records.extend((idx, t, chan) for t, chan in traj.jumps)
    return survived, jumped, outer_sum, perp_sum, records


def run_ensemble(space: HilbertSpace, params: SystemParams, schedule: Schedule,
                 n_samples: int, seed: int, workers: int = 1) -> EnsembleResult:
    """Sample n_samples seeded trajectories from the ground state.

    Child seeds are spawned from a SeedSequence over ``seed``; chunked
    reduction uses a fixed chunk size, so the result is identical for any
    worker count.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    children = list(enumerate(np.random.SeedSequence(seed).spawn(n_samples)))
    chunks = [children[i:i + ENSEMBLE_CHUNK] for i in range(0, n_samples, ENSEMBLE_CHUNK)]
    payloads = [(space, params, schedule, chunk) for chunk in chunks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_chunk, payloads))
    else:
        results = [_ensemble_chunk(p) for p in payloads]
    survived = sum(r[0] for r in results)
    jumped = sum(r[1] for r in results)
    outer_sum = sum((r[2] for r in results), start=np.zeros((space.dim, space.dim), complex))
    perp_sum = sum((r[3] for r in results), start=np.zeros((space.dim, space.dim), complex))
    records = tuple(rec for r in results for rec in r[4])
    rho = outer_sum / n_samples
    rho = 0.5 * (rho + rho.conj().T)  # strip accumulation roundoff
    rho_perp = 0.5 * (perp_sum + perp_sum.conj().T) / jumped if jumped else None
    return EnsembleResult(survived / n_samples, rho, n_samples, seed, rho_perp, records)


def _lindblad_rhs(rho: np.ndarray, h_herm: np.ndarray,
                  ops: list[np.ndarray], ops_sq: list[np.ndarray]) -> np.ndarray:
    out = -1j * (h_herm @ rho - rho @ h_herm)
    for c, csq in zip(ops, ops_sq):
        out += c @ rho @ c.conj().T - 0.5 * (csq @ rho + rho @ csq)
    return out


def master_equation_evolve(space: HilbertSpace, params: SystemParams, schedule: Schedule,
                           rho0: np.ndarray, t: float | None = None) -> np.ndarray:
    """Trace-preserving evolution of a density matrix through the schedule.

    H is the Hermitian part of the conditional Hamiltonian and the jump
    operators are the emission channels, so this is the unconditioned
    average of the trajectory unraveling.  Classic fixed-step RK4 with
    step <= 1e-2 / max(g, kappa, ||H||); a trace drift beyond 1e-6 aborts.
    """
    rho = np.asarray(rho0, dtype=complex)
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("rho0 is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("rho0 trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("rho0 has a negative eigenvalue")
    total = schedule.total_duration
    if t is None:
        t = total
    if not 0 <= t <= total + 1e-12:
        raise ValueError(f"t = {t} outside the schedule span [0, {total}]")
    ops = [op for _, op in jump_operators(space, params)]
    ops_sq = [op.conj().T @ op for op in ops]
    remaining = t
    rho = rho.copy()
    for seg in schedule.segments:
        if remaining <= 0:
            break
        span = min(seg.duration, remaining)
        remaining -= span
        if span == 0:
            continue
        h_cond = conditional_hamiltonian(space, params, seg)
        h_herm = 0.5 * (h_cond + h_cond.conj().T)
        scale = max(params.g, params.kappa, np.linalg.norm(h_herm, 2))
        n_steps = max(1, int(np.ceil(span * scale / ME_STEP_FACTOR)))
        dt = span / n_steps
        for _ in range(n_steps):
            k1 = _lindblad_rhs(rho, h_herm, ops, ops_sq)
            k2 = _lindblad_rhs(rho + 0.5 * dt * k1, h_herm, ops, ops_sq)
            k3 = _lindblad_rhs(rho + 0.5 * dt * k2, h_herm, ops, ops_sq)
            k4 = _lindblad_rhs(rho + dt * k3, h_herm, ops, ops_sq)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            drift = abs(np.trace(rho).real - 1.0)
            if drift > 1e-6:
                raise TraceDriftError(
                    f"trace drifted by {drift:.3e} (step {dt:.3e}); "
                    "the integration step guard failed")
    return rho


def no_detection_mixture(p0: float, psi0: np.ndarray, rho_perp: np.ndarray,
                         eta: float) -> tuple[np.ndarray, float]:
    """State prepared when no photon is *detected* with efficiency eta.

    Returns the normalized mixture
    [p0 |psi0><psi0| + (1 - eta)(1 - p0) rho_perp] / tr and the fidelity
    multiplier p0 / (1 - eta (1 - p0)) that converts the conditional
    fidelity into the no-detection fidelity.
    """
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if not 0 <= p0 <= 1:
        raise ValueError(f"p0 must lie in [0, 1], got {p0}")
    nrm = np.linalg.norm(psi0)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    rho_perp = np.asarray(rho_perp, dtype=complex)
    if np.max(np.abs(rho_perp - rho_perp.conj().T)) > 1e-10:
        raise ValueError("rho_perp is not Hermitian")
    if abs(np.trace(rho_perp).real - 1.0) > 1e-10:
        raise ValueError("rho_perp trace differs from 1")
    if np.linalg.eigvalsh(rho_perp).min() < -1e-10:
        raise ValueError("rho_perp has a negative eigenvalue")
    denom = 1.0 - eta * (1.0 - p0)
    if denom <= 0:
        raise ValueError("no-detection conditioning is empty (p0 = 0 with eta = 1)")
    mix = (p0 * np.outer(psi0, psi0.conj()) + (1.0 - eta) * (1.0 - p0) * rho_perp) / denom
    return mix, p0 / denom


def fidelity(rho: np.ndarray, target_state: np.ndarray) -> float:
    """Overlap <target|rho|target> of a density matrix with a pure target."""
    if rho.shape != (target_state.shape[0], target_state.shape[0]):
        raise ValueError("density matrix and target dimensions disagree")
    return float(np.vdot(target_state, rho @ target_state).real)
