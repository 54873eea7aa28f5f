"""Batch front door: validate and run experiment configs, emit CSV tables.

Configs are INI files with sections mirroring the library modules (scene,
grid, bob, budget, channel, test, sweep, run).  A run writes sweep.csv,
calibration.csv, and summary.txt into the output directory; outputs are
deterministic for a fixed seed and locale-independent.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .channel import ChannelParams
from .detect import Regime, TestConfig
from .harness import (
    BOLTZMANN_NOISE_DENSITY,
    LinkBudget,
    SweepAxis,
    noise_variance,
    room_sweep,
    sigma_T_from_bT,
    simulate_error_rates,
)
from . import raytrace
from .numerics import RngStream
from .raytrace import GridSpec, RoomScene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_REGIME_NAMES = {
    "general": Regime.GENERAL_KNOWN_PARAMS,
    "low_bc": Regime.LOW_BC_CLOSED_FORM,
    "high_bc": Regime.HIGH_BC_NUMERICAL,
    "unknown": Regime.UNKNOWN_PARAMS,
    "full_spatial": Regime.FULL_SPATIAL_CORRELATION,
    "time_invariant": Regime.TIME_INVARIANT_BENCHMARK,
}

_SCHEMA = {
    "scene": {
        "dimensions": ("required", "floats3"),
        "wall_reflectivity": ("optional", "complex"),
        "max_order": ("optional", "int"),
        "c": ("optional", "float"),
        "amplitude_scale": ("optional", "float"),
    },
    "grid": {
        "origin": ("required", "floats2"),
        "spacing": ("required", "float"),
        "counts": ("required", "ints2"),
        "height": ("required", "float"),
    },
    "bob": {"position": ("required", "floats3")},
    "budget": {
        "P_T": ("required", "float"),
        "kT": ("optional", "float"),
        "N_F": ("optional", "float"),
        "b": ("optional", "float"),
    },
    "channel": {
        "f0": ("required", "float"),
        "W": ("required", "float"),
        "M": ("required", "int"),
        "a": ("required", "float"),
        "B_c": ("required", "float_or_inf"),
        "b_T": ("required", "float"),
        "T": ("optional", "float"),
    },
    "test": {
        "alpha": ("required", "float"),
        "regime": ("required", "regime"),
        "threshold_override": ("optional", "float"),
    },
    "sweep": {"param": ("required", "sweep_axis"), "values": ("required", "values")},
    "run": {
        "trials": ("optional", "int"),
        "pair_budget": ("optional", "int"),
        "seed": ("optional", "int"),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    scene: RoomScene
    grid: GridSpec
    bob: tuple[float, float, float]
    budget: LinkBudget
    channel: ChannelParams  # sigma_T/sigma_N2 are placeholders until the room is known
    b_T: float
    test: TestConfig
    sweep_param: SweepAxis
    sweep_values: tuple
    trials: int
    pair_budget: int
    seed: int


def _parse_value(kind: str, raw: str):
    if kind == "float":
        return float(raw)
    if kind == "float_or_inf":
        return math.inf if raw.strip().lower() in ("inf", "infinity") else float(raw)
    if kind == "int":
        return int(raw)
    if kind == "complex":
        return complex(raw.replace(" ", ""))
    if kind in ("floats2", "floats3", "ints2"):
        parts = raw.split()
        n = 3 if kind.endswith("3") else 2
        if len(parts) != n:
            raise ValueError(f"expected {n} whitespace-separated values")
        conv = int if kind.startswith("ints") else float
        return tuple(conv(p) for p in parts)
    if kind == "regime":
        if raw not in _REGIME_NAMES:
            raise ValueError(f"unknown regime {raw!r}; choose from {sorted(_REGIME_NAMES)}")
        return _REGIME_NAMES[raw]
    if kind == "sweep_axis":
        try:
            return SweepAxis(raw)
        except ValueError:
            raise ValueError(f"unknown sweep axis {raw!r}; choose from {[a.value for a in SweepAxis]}")
    if kind == "values":
        return raw  # interpreted later, once the axis is known
    raise AssertionError(kind)


def _parse_sweep_values(axis: SweepAxis, raw: str) -> tuple:
    parts = raw.split()
    if not parts:
        raise ValueError("sweep values list is empty")
    if axis is SweepAxis.SPATIAL_MODE:
        allowed = ("independent", "fully_correlated")
        for p in parts:
            if p not in allowed:
                raise ValueError(f"spatial_mode value {p!r} not in {allowed}")
        return tuple(parts)
    if axis is SweepAxis.M:
        return tuple(int(p) for p in parts)
    if axis is SweepAxis.B_C:
        return tuple(math.inf if p.lower() in ("inf", "infinity") else float(p) for p in parts)
    return tuple(float(p) for p in parts)


def load_config(path: str | Path) -> tuple[ExperimentConfig | None, list[str]]:
    """Parse and validate a config file.

    Returns (config, diagnostics); config is None whenever diagnostics is
    nonempty.  Every diagnostic names the offending section/key.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (P_T, N_F, ...)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        return None, [f"cannot read config: {exc}"]
    except configparser.Error as exc:
        return None, [f"config syntax error: {exc}"]

    diags: list[str] = []
    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            diags.append(f"[{section}]: unknown section")
            continue
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                diags.append(f"{section}.{key}: unknown key")
    for section, keys in _SCHEMA.items():
        if section not in parser:
            missing = [k for k, (req, _) in keys.items() if req == "required"]
            if missing:
                diags.append(f"[{section}]: missing section (required keys: {', '.join(missing)})")
            continue
        values[section] = {}
        for key, (req, kind) in keys.items():
            if key not in parser[section]:
                if req == "required":
                    diags.append(f"{section}.{key}: missing required key")
                continue
            try:
                values[section][key] = _parse_value(kind, parser[section][key])
            except ValueError as exc:
                diags.append(f"{section}.{key}: {exc}")
    if diags:
        return None, diags

    try:
        scene = RoomScene(
            dimensions=values["scene"]["dimensions"],
            wall_reflectivity=values["scene"].get("wall_reflectivity", -0.7),
            max_order=values["scene"].get("max_order", 4),
            c=values["scene"].get("c", 2.998e8),
            amplitude_scale=values["scene"].get("amplitude_scale", 1e-5),
        )
    except ValueError as exc:
        diags.append(f"[scene]: {exc}")
    try:
        grid = GridSpec(
            origin=values["grid"]["origin"],
            spacing=values["grid"]["spacing"],
            counts=values["grid"]["counts"],
            height=values["grid"]["height"],
        )
    except ValueError as exc:
        diags.append(f"[grid]: {exc}")
    try:
        budget = LinkBudget(
            P_T=values["budget"]["P_T"],
            kT=values["budget"].get("kT", BOLTZMANN_NOISE_DENSITY),
            N_F=values["budget"].get("N_F", 10.0),
            b=values["budget"].get("b", 0.25e6),
        )
    except ValueError as exc:
        diags.append(f"[budget]: {exc}")
    ch = values["channel"]
    if ch["b_T"] < 0:
        diags.append("channel.b_T: must be nonnegative")
    try:
        params = ChannelParams(
            f0=ch["f0"],
            W=ch["W"],
            M=ch["M"],
            a=ch["a"],
            Bc=ch["B_c"],
            sigma_T=0.0,
            sigma_N2=0.0,
            T=ch.get("T", 0.0),
        )
    except ValueError as exc:
        diags.append(f"[channel]: {exc}")
    tst = values["test"]
    try:
        cfg = TestConfig(
            alpha=tst["alpha"],
            regime=tst["regime"],
            threshold_override=tst.get("threshold_override"),
        )
    except ValueError as exc:
        diags.append(f"test.alpha: {exc}")
    axis = values["sweep"]["param"]
    try:
        sweep_values = _parse_sweep_values(axis, values["sweep"]["values"])
    except ValueError as exc:
        diags.append(f"sweep.values: {exc}")
        sweep_values = ()
    run = values.get("run", {})
    trials = run.get("trials", 10_000)
    pair_budget = run.get("pair_budget", 2000)
    seed = run.get("seed", 0)
    if trials < 1:
        diags.append("run.trials: must be >= 1")
    if pair_budget < 1:
        diags.append("run.pair_budget: must be >= 1")
    if diags:
        return None, diags

    # Cross-field checks that need the assembled objects.
    dims = scene.dimensions
    for name, pos in (("bob.position", values["bob"]["position"]),):
        if not all(0 < p < d for p, d in zip(pos, dims)):
            diags.append(f"{name}: must be strictly inside the room {dims}")
    gx = grid.origin[0] + grid.spacing * (grid.counts[0] - 1)
    gy = grid.origin[1] + grid.spacing * (grid.counts[1] - 1)
    if not (0 < grid.origin[0] and 0 < grid.origin[1] and gx < dims[0] and gy < dims[1] and 0 < grid.height < dims[2]):
        diags.append("[grid]: grid points must lie strictly inside the room")
    if diags:
        return None, diags

    return (
        ExperimentConfig(
            scene=scene,
            grid=grid,
            bob=values["bob"]["position"],
            budget=budget,
            channel=params,
            b_T=ch["b_T"],
            test=cfg,
            sweep_param=axis,
            sweep_values=sweep_values,
            trials=trials,
            pair_budget=pair_budget,
            seed=seed,
        ),
        [],
    )


def validate(config_path: str | Path) -> list[str]:
    """Full validation without execution; an empty list means runnable."""
    _, diags = load_config(config_path)
    return diags


def _fmt(x) -> str:
    """Shortest round-trip decimal representation, locale-independent."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_outputs(out_dir: Path, config: ExperimentConfig, config_path: Path, result, calibration):
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_param", "value", "beta_bar", "std_err", "pair_count", "alpha", "regime"])
        for value, beta, se in zip(result.values, result.beta_bar, result.std_err):
            writer.writerow(
                [
                    result.swept_param,
                    _fmt(value),
                    _fmt(beta),
                    _fmt(se),
                    result.pair_count,
                    _fmt(config.test.alpha),
                    config.test.regime.value,
                ]
            )
    with open(out_dir / "calibration.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["regime", "alpha_target", "alpha_hat", "std_err", "trials"])
        regime, rates = calibration
        writer.writerow([regime.value, _fmt(config.test.alpha), _fmt(rates.alpha_hat), _fmt(rates.alpha_se), rates.trials])
    digest = hashlib.sha256(config_path.read_bytes()).hexdigest()
    with open(out_dir / "summary.txt", "w") as fh:
        fh.write("chanauth sweep summary\n")
        fh.write(f"config: {config_path.name}\n")
        fh.write(f"config_sha256: {digest}\n")
        fh.write(f"seed: {config.seed}\n")
        fh.write(f"regime: {config.test.regime.value}\n")
        fh.write(f"alpha: {_fmt(config.test.alpha)}\n")
        fh.write(f"pair_count: {result.pair_count}\n")
        fh.write(f"trials: {config.trials}\n")
        fh.write(f"empirical_alpha_hat: {_fmt(calibration[1].alpha_hat)}\n")
        fh.write(f"sweep: {result.swept_param} = {' '.join(_fmt(v) for v in result.values)}\n")
        for value, beta, se in zip(result.values, result.beta_bar, result.std_err):
            fh.write(f"  {result.swept_param}={_fmt(value)}: beta_bar={_fmt(beta)} (se={_fmt(se)})\n")


def _calibrate(config: ExperimentConfig, rng: RngStream):
    """Empirical false-alarm rate for the configured regime at mid-grid."""
    from dataclasses import replace as _replace

    grid = config.grid
    positions = raytrace.grid_positions(grid)
    alice = positions[len(positions) // 2]
    eve = positions[0] if len(positions) > 1 else positions[0] + [grid.spacing, 0, 0]
    room_gain = raytrace.room_average_gain(config.scene, grid, config.bob, config.channel)
    params = _replace(
        config.channel,
        sigma_T=sigma_T_from_bT(config.b_T, room_gain),
        sigma_N2=noise_variance(config.budget, config.channel.M),
    )
    hbar_a = raytrace.fixed_response(config.scene, alice, config.bob, params)
    hbar_e = raytrace.fixed_response(config.scene, eve, config.bob, params)
    rates = simulate_error_rates(hbar_a, hbar_e, params, config.test, config.trials, rng)
    return config.test.regime, rates


def run(config_path: str | Path, out_dir: str | Path, seed: int | None = None, threads: int | None = None) -> int:
    """Execute a config and write sweep.csv, calibration.csv, summary.txt.

    Returns the process exit status.  ``threads`` is accepted for interface
    stability; execution is orchestrated deterministically regardless, so
    outputs never depend on it.
    """
    config_path = Path(config_path)
    config, diags = load_config(config_path)
    if config is None:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None:
        from dataclasses import replace as _replace

        config = _replace(config, seed=seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [out_dir / "sweep.csv", out_dir / "calibration.csv", out_dir / "summary.txt"]
    try:
        rng = RngStream(config.seed)
        result = room_sweep(
            config.scene,
            config.grid,
            config.bob,
            config.budget,
            config.channel,
            config.test,
            config.sweep_param,
            config.sweep_values,
            b_T=config.b_T,
            pair_budget=config.pair_budget,
            trials=config.trials,
            rng=rng,
        )
        calibration = _calibrate(config, rng.substream(999))
        _write_outputs(out_dir, config, config_path, result, calibration)
    except Exception as exc:  # pragma: no cover - exercised via CLI tests
        for p in outputs:
            p.unlink(missing_ok=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="chanauth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    if args.command == "validate":
        diags = validate(args.config)
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_OK if not diags else EXIT_CONFIG
    return run(args.config, args.out, seed=args.seed, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
