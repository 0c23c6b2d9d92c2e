"""Batch driver: trace branches, sweep emission rates, run decay and pair
dynamics, and write deterministic CSV outputs plus a run manifest.

Usage:  plasmonwire <command> --config cfg.json --out dir [--threads N]
with command one of dispersion / rates / dynamics / entangle / all.
Identical configs produce byte-identical CSVs regardless of thread count;
the manifest carries the config echo, versions, wall time and warnings.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import RunConfig, parse_config, serialize
from .dispersion import attach_band_edges, curve_to_csv, trace_mode
from .dynamics import DynamicsConfig, config_from_edge, evolve_single, trace_to_csv
from .emission import branch_crossings, rate_sweep, rates_to_csv, se_rate
from .errors import ConfigError, PlasmonWireError
from .media import medium_by_name
from .modefields import DipoleSpec
from .twodot import TwoDotConfig, evolve_two, twodot_to_csv
from ._fmt import sci9

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _media(cfg: RunConfig):
    return (medium_by_name(cfg.wire), medium_by_name(cfg.host))


def _dipole(cfg: RunConfig, beta=None) -> DipoleSpec:
    return DipoleSpec(cfg.dipole_orientation, cfg.d,
                      cfg.dipole_beta if beta is None else beta)


def _trace_all(cfg: RunConfig, orders=None):
    media = _media(cfg)
    K_grid = cfg.k_grid.values()
    orders = cfg.orders if orders is None else orders

    def one(n):
        curve = trace_mode(n, K_grid, media, cfg.R)
        if len(curve.bound_samples()) >= 5:
            attach_band_edges(curve)
        return curve

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            curves = list(pool.map(one, orders))
    else:
        curves = [one(n) for n in orders]
    return curves


def _write(path: str, text: str, outputs: list):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    outputs.append(os.path.basename(path))


def _edges_csv(curves) -> str:
    lines = ["n,K_c,Omega_c,A_n,kind,fit_residual"]
    for c in curves:
        for e in c.edges:
            lines.append(",".join([str(e.n), sci9(e.K_c), sci9(e.Omega_c),
                                   sci9(e.A_n), e.kind, sci9(e.fit_residual)]))
    return "\n".join(lines) + "\n"


def _cmd_dispersion(cfg, curves, out_dir, outputs, warnings):
    for curve in curves:
        _write(os.path.join(out_dir, f"curve_n{curve.n}.csv"),
               curve_to_csv(curve), outputs)
        for K in curve.gaps:
            warnings.append(f"branch n={curve.n} lost at K={K:g}")
    _write(os.path.join(out_dir, "band_edges.csv"), _edges_csv(curves), outputs)


def _cmd_rates(cfg, curves, out_dir, outputs, warnings):
    points = rate_sweep(cfg.omega0_grid.values(), curves, _dipole(cfg),
                        quantization_length_hat=cfg.quantization_length,
                        threads=cfg.threads)
    for p in points:
        if p.error:
            warnings.append(f"rate sweep at omega0={p.omega0:g}: {p.error}")
        elif p.diverged:
            warnings.append(f"rate diverges near omega0={p.omega0:g} (band edge)")
    _write(os.path.join(out_dir, "rates.csv"),
           rates_to_csv(points, orders=cfg.orders), outputs)


def _pick_edge(curves):
    """The band-edge minimum the decay runs detune from: lowest-frequency
    interior minimum among the n >= 1 branches."""
    candidates = [e for c in curves for e in c.edges
                  if c.n >= 1 and e.kind == "minimum"]
    if not candidates:
        raise PlasmonWireError("no band-edge minimum found on the traced "
                               "n >= 1 branches")
    edge = min(candidates, key=lambda e: e.Omega_c)
    curve = next(c for c in curves if c.n == edge.n)
    return curve, edge


def _cmd_dynamics(cfg, curves, out_dir, outputs, warnings, manifest):
    curve, edge = _pick_edge(curves)
    manifest["band_edge"] = {"n": edge.n, "K_c": edge.K_c,
                             "Omega_c": edge.Omega_c, "A_n": edge.A_n,
                             "kind": edge.kind}
    dipole = _dipole(cfg)

    def one(delta):
        run = config_from_edge(
            curve, edge, dipole, delta, gamma=cfg.gamma, t_max=cfg.t_max,
            n_steps=cfg.n_steps, kernel_kind=cfg.kernel,
            curves=tuple(c for c in curves if c.n == edge.n) if cfg.kernel == "full" else (),
            dipole=dipole if cfg.kernel == "full" else None,
            quantization_length_hat=cfg.quantization_length)
        return run, evolve_single(run)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one, cfg.detunings))
    else:
        results = [one(d) for d in cfg.detunings]
    manifest["dynamics_g_c"] = results[0][0].g_c if results else None
    for delta, (_, trace) in zip(cfg.detunings, results):
        tag = f"{delta:g}".replace(".", "p").replace("-", "m")
        _write(os.path.join(out_dir, f"dynamics_delta_{tag}.csv"),
               trace_to_csv(trace), outputs)
        if trace.warning:
            warnings.append(f"dynamics delta={delta:g}: {trace.warning}")


def _cmd_entangle(cfg, curves, out_dir, outputs, warnings, manifest):
    pair_dipole = _dipole(cfg, beta=cfg.twodot_beta)
    use = [c for c in curves if c.n in cfg.twodot_orders]
    n0 = next((c for c in use if c.n == 0), None)
    if n0 is None:
        raise PlasmonWireError("pair dynamics needs the n=0 branch")
    manifest["twodot"] = []
    for om0 in cfg.twodot_omega0:
        crossings = branch_crossings(n0, om0)
        if not crossings:
            warnings.append(f"no n=0 crossing at omega0={om0:g}; skipped")
            continue
        k0 = crossings[0]
        rate = se_rate(om0, use, pair_dipole,
                       quantization_length_hat=cfg.quantization_length)
        gamma_pop = rate.total * cfg.twodot_beta   # population rate, plasma units
        if gamma_pop <= 0:
            warnings.append(f"zero pair decay rate at omega0={om0:g}; skipped")
            continue
        run = TwoDotConfig(omega0=om0, z0_hat=cfg.z0, k0=k0,
                           gamma_sp=0.5 * gamma_pop,
                           t_max=cfg.twodot_t_factor / gamma_pop,
                           n_steps=cfg.twodot_n_steps)
        trace = evolve_two(run, use, pair_dipole,
                           quantization_length_hat=cfg.quantization_length)
        manifest["twodot"].append({"omega0": om0, "k0": k0,
                                   "gamma_sp": run.gamma_sp,
                                   "t_max": run.t_max})
        tag = f"{om0:g}".replace(".", "p")
        _write(os.path.join(out_dir, f"twodot_omega_{tag}.csv"),
               twodot_to_csv(trace), outputs)
        if trace.warning:
            warnings.append(f"twodot omega0={om0:g}: {trace.warning}")


COMMANDS = ("dispersion", "rates", "dynamics", "entangle", "all")


def run(cfg: RunConfig, command: str, out_dir: str | None = None):
    """Execute one batch command; returns (exit_status, manifest_dict)."""
    t0 = time.monotonic()
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    outputs: list[str] = []
    warnings: list[str] = []
    manifest = {
        "tool": "plasmonwire",
        "version": __version__,
        "command": command,
        "config": json.loads(serialize(cfg)),
    }
    status = EXIT_OK
    try:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}; expected {COMMANDS}")
        orders = set(cfg.orders)
        if command in ("entangle", "all"):
            orders |= set(cfg.twodot_orders) | {0}
        curves = _trace_all(cfg, tuple(sorted(orders)))
        by_n = {c.n: c for c in curves}
        base = [by_n[n] for n in cfg.orders if n in by_n]
        if command in ("dispersion", "all"):
            _cmd_dispersion(cfg, base, out_dir, outputs, warnings)
        if command in ("rates", "all"):
            _cmd_rates(cfg, base, out_dir, outputs, warnings)
        if command in ("dynamics", "all"):
            _cmd_dynamics(cfg, base, out_dir, outputs, warnings, manifest)
        if command in ("entangle", "all"):
            pair = [by_n[n] for n in sorted(set(cfg.twodot_orders) | {0})
                    if n in by_n]
            _cmd_entangle(cfg, pair, out_dir, outputs, warnings, manifest)
    except ConfigError as exc:
        warnings.append(f"config error: {exc}")
        status = EXIT_CONFIG
    except PlasmonWireError as exc:
        warnings.append(f"numerical failure: {exc}")
        status = EXIT_NUMERICAL
    manifest["outputs"] = outputs
    manifest["warnings"] = warnings
    manifest["wall_time_s"] = round(time.monotonic() - t0, 3)
    manifest["exit_status"] = status
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status, manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plasmonwire",
        description="Nanowire surface-plasmon / quantum-dot batch computations")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file (defaults apply "
                                         "when omitted)")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("PLASMONWIRE_THREADS", "0")) or None,
                        help="worker threads (default: config value)")
    args = parser.parse_args(argv)
    try:
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        else:
            text = "{}"
        cfg = parse_config(text)
        if args.threads:
            cfg = RunConfig(**{**cfg.__dict__, "threads": args.threads})
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status, manifest = run(cfg, args.command, out_dir=args.out)
    for w in manifest["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{args.command}: wrote {len(manifest['outputs'])} file(s) to "
          f"{args.out or cfg.output_dir} (status {status})")
    return status


if __name__ == "__main__":
    sys.exit(main())
