"""Command-line front end: analytic sweeps, Monte Carlo campaigns, JSA export.

Exit codes: 0 on success, 2 for configuration errors, 3 for domain or
numerical errors raised by the models.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .adversary import bob_optimal_attack, sweep_alice
from .errors import ConfigError, WcfError
from .montecarlo import (
    empirical,
    false_trigger_abort_share,
    scenario,
    simulate,
    z_scores,
)
from .protocol import (
    OutcomeDistribution,
    apply_channel,
    correctness,
    fairness,
    honest_outcomes,
    honest_reflectivities,
)
from .spdc import (
    central_phase_mismatch,
    compute_jsa,
    export_jsa_csv,
    schmidt_analysis,
    spectral_summaries,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def fmt(value) -> str:
    return f"{float(value):.9g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _out_dir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _efficiencies_at(cfg, distance_km: float):
    return apply_channel(cfg.path_efficiencies(), cfg.channel.model(distance_km))


def cmd_honest(cfg) -> Path:
    rows = []
    for d in cfg.channel.distances_km:
        eff = _efficiencies_at(cfg, d)
        refl = honest_reflectivities(eff, cfg.visibility)
        dist = honest_outcomes(eff, cfg.visibility)
        rows.append((d, refl.x, refl.y, refl.z, *dist.as_tuple(), fairness(dist), correctness(dist)))
    path = _out_dir(cfg) / "honest.csv"
    header = ["L_km", "x_h", "y_h", "z_h", *OutcomeDistribution.field_names(), "fairness", "correctness"]
    _write_csv(path, header, rows)
    return path


def cmd_cheat_bob(cfg) -> Path:
    rows = []
    for d in cfg.channel.distances_km:
        dist = bob_optimal_attack(_efficiencies_at(cfg, d), cfg.visibility)
        rows.append((d, dist.p_bob_wins, dist.p_bob_sanctioned))
    path = _out_dir(cfg) / "cheat_bob.csv"
    _write_csv(path, ["L_km", "p_bob_wins", "p_bob_sanctioned"], rows)
    return path


def cmd_cheat_alice(cfg) -> Path:
    """Sweep Alice's x at the first configured distance; x_h is always a grid point."""
    eff = _efficiencies_at(cfg, cfg.channel.distances_km[0])
    s = cfg.sweep
    xs = np.linspace(s.x_start, s.x_stop, s.x_num)
    x_h = honest_reflectivities(eff, cfg.visibility).x
    if s.x_start <= x_h <= s.x_stop:
        xs = np.unique(np.append(xs, x_h))
    sweep = sweep_alice(eff, cfg.visibility, xs, s.deltas)
    header = ["x", "p_alice_wins", "p_alice_sanctioned", "p_bob_wins"]
    header += [f"interest_delta_{fmt(d)}" for d in sweep.deltas]
    cols = [sweep.x, sweep.p_alice_wins, sweep.p_alice_sanctioned, sweep.p_bob_wins, *sweep.interest]
    path = _out_dir(cfg) / "cheat_alice.csv"
    _write_csv(path, header, zip(*cols))
    return path


def cmd_mc(cfg) -> Path:
    """Sample every configured scenario and compare with its analytic reference.

    Scenario k draws run indices ``k*N .. (k+1)*N - 1`` of the seed's
    stream. When the slow phase walks, only runs with |phase| inside
    ``mc.phase_window`` are kept, mimicking post-selection on a phase lock.
    """
    eff = _efficiencies_at(cfg, cfg.channel.distances_km[0])
    noise = cfg.noise.model()
    n = cfg.mc.runs
    window = cfg.mc.phase_window if noise.phase_walk_std > 0 else None
    out = _out_dir(cfg)
    report = {
        "seed": cfg.seed,
        "runs_per_scenario": n,
        "distance_km": cfg.channel.distances_km[0],
        "visibility": cfg.visibility,
        "phase_window": window,
        "false_herald_fraction": noise.false_herald_fraction(),
        "scenarios": {},
    }
    for k, name in enumerate(cfg.mc.scenarios):
        setup, reference = scenario(name, eff, cfg.visibility, noise, cfg.mc.alice_x)
        batch = simulate(setup, n, seed=cfg.seed, start=k * n)
        emp = empirical(batch, window)
        z = z_scores(emp, reference)
        report["scenarios"][name] = {
            "kept_runs": emp.n,
            "empirical": emp.distribution.as_dict(),
            "stderr": emp.stderr,
            "reference": reference.as_dict(),
            "z": z,
            "max_abs_z": max(abs(v) for v in z.values()),
            "photonless_abort_share": false_trigger_abort_share(batch),
        }
        if cfg.mc.write_run_log:
            with open(out / f"runs_{name}.jsonl", "w") as fh:
                batch.write_jsonl(fh)
    path = out / "mc.json"
    _write_json(path, report)
    return path


def cmd_jsa(cfg) -> Path:
    params = cfg.jsa.params()
    jsa = compute_jsa(params, cfg.jsa.grid_size, cfg.jsa.window)
    schmidt = schmidt_analysis(jsa)
    spectral = spectral_summaries(jsa)
    out = _out_dir(cfg)
    export_jsa_csv(jsa, out / "jsa_grid.csv")
    summary = {
        "preset": cfg.jsa.preset,
        "grid_size": cfg.jsa.grid_size,
        "window_sigmas": cfg.jsa.window,
        "schmidt_number": schmidt.schmidt_number,
        "purity": schmidt.purity,
        "leading_mode_weights": [float(w) for w in schmidt.weights[:5]],
        "signal_fwhm_nm": spectral.signal_fwhm_m * 1e9,
        "coherence_length_mm": spectral.coherence_length_m * 1e3,
        "nominal_phase_mismatch_rad_per_m": central_phase_mismatch(params),
    }
    path = out / "jsa.json"
    _write_json(path, summary)
    return path


COMMANDS = {
    "honest": cmd_honest,
    "cheat-bob": cmd_cheat_bob,
    "cheat-alice": cmd_cheat_alice,
    "mc": cmd_mc,
    "jsa": cmd_jsa,
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _x_grid(text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--x-grid expects start:stop:num, got {text!r}")
    try:
        return {"x_start": float(parts[0]), "x_stop": float(parts[1]), "x_num": int(parts[2])}
    except ValueError:
        raise ConfigError(f"--x-grid expects start:stop:num, got {text!r}") from None


def apply_overrides(cfg, args):
    """Fold command-line overrides into the config and re-validate."""
    data = cfg.to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    if args.distance is not None:
        data["channel"]["distances_km"] = _float_list(args.distance)
    if args.runs is not None:
        data["mc"]["runs"] = args.runs
    if args.x_grid is not None:
        data["sweep"].update(_x_grid(args.x_grid))
    if args.delta is not None:
        data["sweep"]["deltas"] = _float_list(args.delta)
    if getattr(args, "preset", None) is not None:
        data["jsa"]["preset"] = args.preset
    if getattr(args, "grid_size", None) is not None:
        data["jsa"]["grid_size"] = args.grid_size
    if getattr(args, "run_log", False):
        data["mc"]["write_run_log"] = True
    return cfgmod.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcfsim", description="Weak coin flipping simulator: sweeps, Monte Carlo and source model."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=cfgmod.DEFAULTS_NAME,
                       help="JSON config file, or 'defaults' for the built-in preset")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--distance", help="comma-separated distances in km")
        p.add_argument("--runs", type=int, help="Monte Carlo runs per scenario")
        p.add_argument("--x-grid", help="Alice sweep grid as start:stop:num")
        p.add_argument("--delta", help="comma-separated deterrent factors")
        if name == "jsa":
            p.add_argument("--preset", choices=cfgmod.JSA_PRESETS)
            p.add_argument("--grid-size", type=int)
        if name == "mc":
            p.add_argument("--run-log", action="store_true", help="also write runs_<scenario>.jsonl")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(cfgmod.load(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        path = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WcfError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
