"""Command-line front end: `dfs-cavity-sim <mode> --config <path> [...]`.

Config files are flat `key = value` text (INI syntax; a leading section
header is optional and ignored).  All rates are expressed in units of
the atom-cavity coupling g, which is fixed to 1; durations are in units
of 1/g.  Outputs are plain CSV/JSON written with full double precision
so identical (config, seed) pairs produce byte-identical files.

Exit codes: 0 success, 2 config error, 3 numerical-guard abort.
`DFS_SIM_THREADS` caps the worker count for sweeps and ensembles.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import (OverdampedError, build_slow_model, entangling_pulse_duration,
                       p0_closed_form, zeno_timescale_check)
from .dfs import dfs_basis, dicke_degeneracy, export_basis
from .dynamics import (Schedule, TraceDriftError, no_detection_mixture,
                       propagate_conditional, run_ensemble)
from .hamiltonians import Pulse, conditional_hamiltonian
from .hilbert import DeskScaleError, SystemParams, build_space

MODES = ("basis", "evolve", "pulse", "sweep", "trajectories")
GUARD_ERRORS = (DeskScaleError, OverdampedError, TraceDriftError, ArithmeticError)
DEFAULT_OMEGA1_MIN = 1e-3
DEFAULT_OMEGA1_MAX = 0.3
DEFAULT_OMEGA1_POINTS = 40
DEFAULT_GAMMA_LIST = (0.0, 1e-5, 1e-4, 1e-3)


class ConfigError(ValueError):
    """Missing, malformed, or mode-inconsistent configuration."""


@dataclass
class RunConfig:
    mode: str
    params: SystemParams
    seed: int = 1
    eta: float = 0.0
    rabi: tuple[complex, ...] | None = None
    duration: float | str | None = None
    settle: float = 0.0
    samples: int = 10000
    jump_log: bool = False
    evolve_points: int = 200
    omega1_grid: tuple[float, ...] = ()
    gamma_list: tuple[float, ...] = DEFAULT_GAMMA_LIST
    grid_source: str = "default"
    raw: dict[str, str] = field(default_factory=dict)


def _workers() -> int:
    env = os.environ.get("DFS_SIM_THREADS", "")
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ConfigError(f"DFS_SIM_THREADS must be an integer, got {env!r}")


def _parse_flat(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser()
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    flat: dict[str, str] = {}
    for section in parser.sections():
        flat.update(parser[section])
    return flat


def _get_float(raw: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw[key]!r}")


def _get_int(raw: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw[key]!r}")


def _get_bool(raw: dict[str, str], key: str, default: bool) -> bool:
    if key not in raw:
        return default
    val = raw[key].strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {raw[key]!r}")


def _get_list(raw: dict[str, str], key: str) -> tuple[float, ...] | None:
    if key not in raw:
        return None
    try:
        return tuple(float(tok) for tok in raw[key].split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"{key} must be a comma-separated number list, got {raw[key]!r}")


def load_config(path: str | Path, mode: str) -> RunConfig:
    """Read and validate a config file against the requested mode."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = _parse_flat(path.read_text())
    if "mode" in raw and raw["mode"].strip() != mode:
        raise ConfigError(f"config specifies mode {raw['mode']!r} but {mode!r} was requested")
    try:
        params = SystemParams(
            n_atoms=_get_int(raw, "n_atoms"),
            g=1.0,
            kappa=_get_float(raw, "kappa", 1.0),
            gamma=_get_float(raw, "gamma", 0.0),
            n_max=_get_int(raw, "n_max", 3),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(mode=mode, params=params, raw=raw)
    cfg.seed = _get_int(raw, "seed", 1)
    cfg.eta = _get_float(raw, "eta", 0.0)
    if not 0 <= cfg.eta <= 1:
        raise ConfigError(f"eta must lie in [0, 1], got {cfg.eta}")
    cfg.settle = _get_float(raw, "settle", 0.0)
    cfg.samples = _get_int(raw, "samples", 10000)
    cfg.jump_log = _get_bool(raw, "jump_log", False)
    cfg.evolve_points = _get_int(raw, "evolve_points", 200)

    if mode in ("evolve", "pulse", "trajectories"):
        if "rabi" not in raw:
            raise ConfigError(f"mode {mode!r} requires the 'rabi' key")
        try:
            cfg.rabi = tuple(complex(tok.strip()) for tok in raw["rabi"].split(","))
        except ValueError:
            raise ConfigError(f"rabi must be comma-separated complex numbers, got {raw['rabi']!r}")
        if len(cfg.rabi) != params.n_atoms:
            raise ConfigError(
                f"rabi lists {len(cfg.rabi)} drives for {params.n_atoms} atoms")
        dur = raw.get("duration", "").strip()
        if not dur:
            raise ConfigError(f"mode {mode!r} requires the 'duration' key")
        if dur == "auto":
            cfg.duration = "auto"
        else:
            try:
                cfg.duration = float(dur)
            except ValueError:
                raise ConfigError(f"duration must be a number or 'auto', got {dur!r}")
            if cfg.duration < 0:
                raise ConfigError("duration must be >= 0")

    if mode == "sweep":
        if params.n_atoms != 2:
            raise ConfigError("sweep requires exactly two atoms")
        explicit = _get_list(raw, "omega1_list")
        if explicit is not None:
            grid = explicit
            cfg.grid_source = "config"
        else:
            lo = _get_float(raw, "omega1_min", DEFAULT_OMEGA1_MIN)
            hi = _get_float(raw, "omega1_max", DEFAULT_OMEGA1_MAX)
            pts = _get_int(raw, "omega1_points", DEFAULT_OMEGA1_POINTS)
            if lo <= 0 or hi <= lo or pts < 1:
                raise ConfigError("omega1 grid must be positive with max > min")
            grid = tuple(np.geomspace(lo, hi, pts).tolist())
            keys = {"omega1_min", "omega1_max", "omega1_points"}
            cfg.grid_source = "config" if keys & raw.keys() else "default"
        if not grid:
            raise ConfigError("sweep grid is empty")
        if any(o <= 0 for o in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("omega1 grid must be strictly increasing and positive")
        cfg.omega1_grid = grid
        gammas = _get_list(raw, "gamma_list")
        if gammas is not None:
            if any(gm < 0 for gm in gammas):
                raise ConfigError("gamma_list entries must be >= 0")
            cfg.gamma_list = gammas
        elif "gamma" in raw:
            cfg.gamma_list = (params.gamma,)
    return cfg


def _resolve_schedule(cfg: RunConfig) -> tuple[Schedule, float]:
    """Pulse (+ optional settle tail) from the config; returns (schedule, T)."""
    duration = cfg.duration
    if duration == "auto":
        if cfg.params.n_atoms != 2:
            raise ConfigError("duration = auto is only defined for two atoms")
        model = build_slow_model(cfg.params, cfg.rabi[0], cfg.rabi[1])
        duration = entangling_pulse_duration(model)
    segments = [Pulse(cfg.rabi, duration)]
    if cfg.settle > 0:
        segments.append(Pulse.off(cfg.params.n_atoms, cfg.settle))
    return Schedule(tuple(segments)), duration


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _state_as_pairs(state: np.ndarray) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in state]


def cmd_basis(cfg: RunConfig, out: Path) -> None:
    space = build_space(cfg.params)
    basis = dfs_basis(space)
    export_basis(basis, out / "dfs_basis.csv", out / "dfs_basis.json")
    counts = basis.sector_counts()
    print(f"trapped-subspace dimension: {len(basis)} (of {space.dim} total)")
    for n in sorted(counts):
        l = space.n_atoms / 2 - n
        print(f"  excitation n={n} (l={l:g}): {counts[n]} vectors "
              f"(degeneracy {dicke_degeneracy(space.n_atoms, l)})")
    print(f"wrote {out / 'dfs_basis.csv'} and {out / 'dfs_basis.json'}")


def _sweep_point(args) -> tuple[float, ...]:
    omega1, gamma, kappa, n_max, eta = args
    params = SystemParams(2, 1.0, kappa, gamma, n_max)
    space = build_space(params)
    basis = dfs_basis(space)
    model = build_slow_model(params, omega1, -omega1)
    duration = entangling_pulse_duration(model)
    h = conditional_hamiltonian(space, params, Pulse((omega1, -omega1), duration))
    psi = propagate_conditional(h, space.ground_state(), duration)
    c_g = np.vdot(basis.vectors[0], psi)
    c_a = np.vdot(basis.vectors[1], psi)
    # Success probability of the full protocol: no emission during the
    # pulse and the atoms settle into the trapped subspace (the leaked
    # transient amplitude decays right after the pulse ends).
    p0_num = abs(c_g) ** 2 + abs(c_a) ** 2
    p0_ana = p0_closed_form(model, duration)
    fid_cond = abs(c_a) ** 2 / p0_num
    fid_nodet = fid_cond * p0_num / (1.0 - eta * (1.0 - p0_num))
    return (omega1, gamma, duration, p0_num, p0_ana, fid_cond, fid_nodet)


def cmd_sweep(cfg: RunConfig, out: Path) -> None:
    points = [(o, gm, cfg.params.kappa, cfg.params.n_max, cfg.eta)
              for gm in cfg.gamma_list for o in cfg.omega1_grid]
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(p) for p in points]
    csv_path = out / "sweep.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega1_over_g", "gamma_over_g", "T_g", "p0_numeric",
                         "p0_analytic", "fidelity_conditional", "fidelity_no_detection"])
        for row in rows:
            writer.writerow([f"{x:.17g}" for x in row])
    meta = {
        "mode": "sweep",
        "kappa_over_g": cfg.params.kappa,
        "n_max": cfg.params.n_max,
        "eta": cfg.eta,
        "omega1_grid": list(cfg.omega1_grid),
        "gamma_list": list(cfg.gamma_list),
        "grid_source": cfg.grid_source,
        "drive": "omega2 = -omega1",
        "p0_numeric_definition": ("squared norm of the trapped-subspace component of the "
                                  "conditionally evolved state at the end of the pulse"),
    }
    _write_json(out / "sweep.json", meta)
    print(f"wrote {len(rows)} grid points to {csv_path}")


def cmd_pulse(cfg: RunConfig, out: Path) -> None:
    space = build_space(cfg.params)
    basis = dfs_basis(space)
    schedule, duration = _resolve_schedule(cfg)
    psi = space.ground_state()
    for seg in schedule.segments:
        h = conditional_hamiltonian(space, cfg.params, seg)
        psi = propagate_conditional(h, psi, seg.duration)
    p0 = float(np.vdot(psi, psi).real)
    if p0 <= 0:
        raise TraceDriftError("conditional state vanished entirely")
    psi_hat = psi / np.sqrt(p0)
    overlaps = [float(abs(np.vdot(basis.vectors[k], psi_hat)) ** 2)
                for k in range(len(basis))]
    report = zeno_timescale_check(cfg.params, schedule.segments[0])
    payload = {
        "mode": "pulse",
        "n_atoms": cfg.params.n_atoms,
        "kappa_over_g": cfg.params.kappa,
        "gamma_over_g": cfg.params.gamma,
        "n_max": cfg.params.n_max,
        "rabi_over_g": [[r.real, r.imag] for r in cfg.rabi],
        "pulse_duration_g": float(duration),
        "settle_g": cfg.settle,
        "p0": p0,
        "final_state_re_im": _state_as_pairs(psi_hat),
        "dfs_overlaps": [
            {"vector_index": k, "excitation": basis.excitations[k],
             "dicke_l": basis.dicke_l[k], "population": overlaps[k]}
            for k in range(len(basis))
        ],
        "dfs_population": float(sum(overlaps)),
        "zeno_check": {"drive_ratio": report.drive_ratio,
                       "spontaneous_ratio": report.spontaneous_ratio,
                       "passed": report.passed},
    }
    _write_json(out / "pulse.json", payload)
    print(f"p0 = {p0:.6f}, trapped-subspace population = {sum(overlaps):.6f}")
    print(f"wrote {out / 'pulse.json'}")


def cmd_trajectories(cfg: RunConfig, out: Path) -> None:
    if cfg.samples < 1:
        raise ConfigError("samples must be >= 1")
    space = build_space(cfg.params)
    schedule, _ = _resolve_schedule(cfg)
    result = run_ensemble(space, cfg.params, schedule, cfg.samples, cfg.seed,
                          workers=_workers())
    # deterministic no-jump reference state for the mixture
    psi0 = space.ground_state()
    for seg in schedule.segments:
        h = conditional_hamiltonian(space, cfg.params, seg)
        psi0 = propagate_conditional(h, psi0, seg.duration)
    nrm = np.linalg.norm(psi0)
    if nrm < 1e-300:
        raise TraceDriftError("no-jump reference state vanished entirely")
    psi0 = psi0 / nrm
    rho_perp = result.rho_perp
    if rho_perp is None:
        rho_perp = np.outer(psi0, psi0.conj())
    mixture, multiplier = no_detection_mixture(result.p0_estimate, psi0, rho_perp, cfg.eta)
    payload = {
        "mode": "trajectories",
        "p0_estimate": result.p0_estimate,
        "stderr": result.stderr,
        "n_samples": result.n_samples,
        "seed": result.seed,
        "eta": cfg.eta,
        "multiplier": multiplier,
        "n_jumped": result.n_samples - round(result.p0_estimate * result.n_samples),
    }
    if cfg.params.n_atoms == 2:
        basis = dfs_basis(space)
        target = basis.vectors[1]  # antisymmetric trapped state
        fid_cond = float(abs(np.vdot(target, psi0)) ** 2)
        payload["fidelity_conditional"] = fid_cond
        payload["fidelity"] = float(np.vdot(target, mixture @ target).real)
    else:
        payload["fidelity_conditional"] = None
        payload["fidelity"] = None
    _write_json(out / "ensemble.json", payload)
    if cfg.jump_log:
        with (out / "jumps.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trajectory_id", "jump_time", "channel"])
            for traj_id, t, channel in result.jump_records:
                writer.writerow([traj_id, f"{t:.17g}", channel])
        print(f"wrote {out / 'jumps.csv'} ({len(result.jump_records)} jumps)")
    print(f"p0_estimate = {result.p0_estimate:.6f} +- {result.stderr:.6f} "
          f"({result.n_samples} samples)")
    print(f"wrote {out / 'ensemble.json'}")


def cmd_evolve(cfg: RunConfig, out: Path) -> None:
    if cfg.evolve_points < 2:
        raise ConfigError("evolve_points must be >= 2")
    space = build_space(cfg.params)
    basis = dfs_basis(space)
    proj = basis.projector()
    schedule, _ = _resolve_schedule(cfg)
    times = np.linspace(0.0, schedule.total_duration, cfg.evolve_points)
    rows = []
    psi = space.ground_state()
    cursor = 0.0
    seg_iter = iter(schedule.segments)
    seg = next(seg_iter)
    seg_end = seg.duration
    h = conditional_hamiltonian(space, cfg.params, seg)
    for t in times:
        while t > seg_end + 1e-12:
            psi = propagate_conditional(h, psi, seg_end - cursor)
            cursor = seg_end
            seg = next(seg_iter)
            h = conditional_hamiltonian(space, cfg.params, seg)
            seg_end += seg.duration
        psi = propagate_conditional(h, psi, min(t, seg_end) - cursor)
        cursor = t
        p0 = float(np.vdot(psi, psi).real)
        dfs_pop = float(np.vdot(psi, proj @ psi).real / p0) if p0 > 0 else 0.0
        rows.append((float(t), p0, dfs_pop))
    with (out / "evolve.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_g", "p0", "dfs_population"])
        for row in rows:
            writer.writerow([f"{x:.17g}" for x in row])
    final = psi / np.linalg.norm(psi)
    _write_json(out / "evolve.json", {
        "mode": "evolve",
        "total_duration_g": schedule.total_duration,
        "p0_final": rows[-1][1],
        "final_state_re_im": _state_as_pairs(final),
    })
    print(f"wrote {out / 'evolve.csv'} ({len(rows)} samples) and {out / 'evolve.json'}")


COMMANDS = {
    "basis": cmd_basis,
    "evolve": cmd_evolve,
    "pulse": cmd_pulse,
    "sweep": cmd_sweep,
    "trajectories": cmd_trajectories,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dfs-cavity-sim",
        description="Trapped-state (decoherence-free) subspace simulator for "
                    "N two-level atoms in a leaky cavity.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--samples", type=int, default=None,
                        help="override the trajectory sample count")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.mode)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.samples is not None:
            cfg.samples = args.samples
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.mode](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GUARD_ERRORS as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
