"""Independent reference constructions shared by the tests.

Everything here is written out from scratch (explicit matrix elements,
explicit product states, series expansions, black-box ODE integration)
so the package paths are checked against genuinely independent
arithmetic rather than against themselves.
"""

import numpy as np
from scipy.integrate import solve_ivp

from dfs_cavity import SystemParams, omega_pm, two_atom_ode_rhs

PAIR_INDEX = {"g": 0, "a": 1, "s": 2, "e": 3}

# single-pair states over the 2-atom config integer (first atom = MSB)
_PAIR_KET = {
    "g": np.array([1.0, 0.0, 0.0, 0.0], dtype=complex),
    "a": np.array([0.0, -1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0),
    "s": np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0),
    "e": np.array([0.0, 0.0, 0.0, 1.0], dtype=complex),
}


def pair_vector(space, n, x):
    """|n, x> for two atoms, x in 'gase', embedded in the composite space."""
    vec = np.zeros(space.dim, dtype=complex)
    vec[4 * n: 4 * n + 4] = _PAIR_KET[x]
    return vec


def pair_ladder_matrix(n_max, g, kappa, gamma, omega1, omega2):
    """Conditional generator written out rung by rung in the pair basis.

    Index 4n + k with k ordered (g, a, s, e).  The cavity ladder couples
    |n+1 g> <-> |n s| and |n+1 s> <-> |n e| with strength sqrt(2(n+1)) g
    (coupling element -i sqrt(2(n+1)) g on the raising side, +i on the
    lowering side), the drive couples g<->s and s<->e with W+ and g<->a,
    a<->e (with a sign flip) with W-, and the diagonal carries the decay
    rates -i(gamma + n kappa), -i(2 gamma + n kappa), -i n kappa.
    """
    wp = (omega1 + omega2) / (2.0 * np.sqrt(2.0))
    wm = (omega1 - omega2) / (2.0 * np.sqrt(2.0))
    dim = 4 * (n_max + 1)
    h = np.zeros((dim, dim), dtype=complex)

    def idx(n, x):
        return 4 * n + PAIR_INDEX[x]

    for n in range(n_max + 1):
        if n < n_max:
            c = np.sqrt(2.0 * (n + 1)) * g
            h[idx(n + 1, "g"), idx(n, "s")] = -1j * c
            h[idx(n, "s"), idx(n + 1, "g")] = +1j * c
            h[idx(n + 1, "s"), idx(n, "e")] = -1j * c
            h[idx(n, "e"), idx(n + 1, "s")] = +1j * c
        h[idx(n, "g"), idx(n, "s")] += wp
        h[idx(n, "s"), idx(n, "g")] += np.conj(wp)
        h[idx(n, "s"), idx(n, "e")] += wp
        h[idx(n, "e"), idx(n, "s")] += np.conj(wp)
        h[idx(n, "g"), idx(n, "a")] += wm
        h[idx(n, "a"), idx(n, "g")] += np.conj(wm)
        h[idx(n, "a"), idx(n, "e")] += -wm
        h[idx(n, "e"), idx(n, "a")] += -np.conj(wm)
        h[idx(n, "g"), idx(n, "g")] += -1j * n * kappa
        h[idx(n, "a"), idx(n, "a")] += -1j * (gamma + n * kappa)
        h[idx(n, "s"), idx(n, "s")] += -1j * (gamma + n * kappa)
        h[idx(n, "e"), idx(n, "e")] += -1j * (2.0 * gamma + n * kappa)
    return h


def four_atom_state(x12, y34):
    """Product of pair states on atoms (1,2) and (3,4); length-16 config vector."""
    return np.kron(_PAIR_KET[x12], _PAIR_KET[y34])


def four_atom_trapped_states():
    """The six orthonormal trapped configurations of four atoms.

    Order: gg, ga, ag, aa, x1 = (sg - gs)/sqrt(2),
    x2 = (eg + ge - ss)/sqrt(3).
    """
    gg = four_atom_state("g", "g")
    ga = four_atom_state("g", "a")
    ag = four_atom_state("a", "g")
    aa = four_atom_state("a", "a")
    x1 = (four_atom_state("s", "g") - four_atom_state("g", "s")) / np.sqrt(2.0)
    x2 = (four_atom_state("e", "g") + four_atom_state("g", "e")
          - four_atom_state("s", "s")) / np.sqrt(3.0)
    return {"gg": gg, "ga": ga, "ag": ag, "aa": aa, "x1": x1, "x2": x2}


def embed_vacuum(space, atomic_vec):
    """Place an atomic-configuration vector in the photon-0 block."""
    vec = np.zeros(space.dim, dtype=complex)
    vec[: atomic_vec.shape[0]] = atomic_vec
    return vec


def four_atom_effective_matrix(space, rabi):
    """Explicit Zeno-projected drive for four atoms (gamma = 0).

    Three coefficient groups act on the trapped sextet:
    (W1+W2-W3-W4) couples gg<->x1 and x1<->x2 with weights 1/sqrt(2) and
    sqrt(2/3); (W1-W2) couples gg<->ag, ga<->aa and ag<->x2 (weight
    -1/sqrt(3)); (W3-W4) couples gg<->ga, ag<->aa and ga<->x2 (weight
    -1/sqrt(3)); everything scaled by 1/(2 sqrt(2)).
    """
    o1, o2, o3, o4 = rabi
    states = {k: embed_vacuum(space, v) for k, v in four_atom_trapped_states().items()}
    a_coef = o1 + o2 - o3 - o4
    b_coef = o1 - o2
    c_coef = o3 - o4
    terms = [
        (a_coef / np.sqrt(2.0), "gg", "x1"),
        (a_coef * np.sqrt(2.0 / 3.0), "x1", "x2"),
        (b_coef, "gg", "ag"),
        (b_coef, "ga", "aa"),
        (-b_coef / np.sqrt(3.0), "ag", "x2"),
        (c_coef, "gg", "ga"),
        (c_coef, "ag", "aa"),
        (-c_coef / np.sqrt(3.0), "ga", "x2"),
    ]
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for coef, bra, ket in terms:
        h += coef / (2.0 * np.sqrt(2.0)) * np.outer(states[bra], states[ket].conj())
    return h + h.conj().T


def expm_taylor(m, t, terms=20):
    """Plain Taylor series for exp(-m t); valid for small ||m|| t."""
    dim = m.shape[0]
    acc = np.eye(dim, dtype=complex)
    power = np.eye(dim, dtype=complex)
    for k in range(1, terms + 1):
        power = power @ (-m * t) / k
        acc = acc + power
    return acc


def integrate_pair_amplitudes(params: SystemParams, omega1, omega2, duration,
                              rtol=1e-10, atol=1e-12):
    """Black-box DOP853 integration of the pair-basis amplitude equations.

    Starts from the two-atom ground state and returns the (n_max+1, 4)
    complex amplitude array at the end of the pulse.
    """
    wp, wm = omega_pm(omega1, omega2)
    nlev = params.n_max + 1
    c0 = np.zeros((nlev, 4), dtype=complex)
    c0[0, 0] = 1.0

    def rhs(_t, y):
        c = y.view(complex).reshape(nlev, 4)
        return two_atom_ode_rhs(c, params, wp, wm).reshape(-1).view(float)

    sol = solve_ivp(rhs, (0.0, duration), c0.reshape(-1).view(float).copy(),
                    method="DOP853", rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return sol.y[:, -1].copy().view(complex).reshape(nlev, 4)
