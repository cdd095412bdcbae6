"""Command-line interface.

Subcommands: spectrum, flatness, classify, cls, evolve, symmetry, oracle.
Exit codes: 0 success, 2 configuration errors (bad flags, invalid parameter
combinations), 3 numerical failures (eigensolver breakdown, amplitude
overflow). All floating-point output is rendered with 17 significant digits
so repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import bands as bands_mod
from . import realspace as rs
from .bloch import chiral_residual, time_reversal_residual
from .models import (Params, build_model, model_from_json, render_json,
                     BUILTIN_MODELS)

_ANGLE_RE = re.compile(r"^([+-]?)(\d+(?:\.\d+)?)?\*?pi(?:/(\d+(?:\.\d+)?))?$",
                       re.IGNORECASE)


def parse_angle(text):
    """Parse '0.7', 'pi', '2pi/3', '-pi/4', '3*pi/4' into a float."""
    text = text.strip()
    m = _ANGLE_RE.match(text.replace(" ", ""))
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        num = float(m.group(2)) if m.group(2) else 1.0
        den = float(m.group(3)) if m.group(3) else 1.0
        return sign * num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"cannot parse angle {text!r}; use a float or a pi fraction like pi/3")


def _fmt(x):
    return format(float(x), ".17g")


def _pair(value):
    return [value.real, value.imag]


MODEL_CHOICES = sorted(name.replace("_", "-") for name in BUILTIN_MODELS)


def _add_model_args(p):
    p.add_argument("--model", choices=MODEL_CHOICES, help="builtin model name")
    p.add_argument("--model-file", help="JSON model description (see README)")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--J", type=float, default=0.0)
    p.add_argument("--phi", type=parse_angle, default=0.0,
                   help="phase; accepts pi fractions like pi/3")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--flatband", action="store_true",
                   help="override gamma with J*sin(phi)")


def _add_output_args(p):
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nhflatband",
        description="Flat bands and exceptional points in three-sublattice "
                    "non-Hermitian lattices")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="band energies over the Brillouin zone")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--grid", type=int, nargs=2, default=(64, 64),
                   metavar=("NX", "NY"))
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--tol-flat", type=float, default=1e-9)

    p = sub.add_parser("flatness", help="flat-band report on a grid")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--grid", type=int, nargs=2, default=(64, 64),
                   metavar=("NX", "NY"))
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--tol-flat", type=float, default=1e-9)

    p = sub.add_parser("classify", help="band-intersection taxonomy")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--grid", type=int, nargs=2, default=(64, 64),
                   metavar=("NX", "NY"))
    p.add_argument("--tol-E", type=float, default=None)
    p.add_argument("--cond-ep", type=float, default=1e3)
    p.add_argument("--level-tol", type=float, default=None)

    p = sub.add_parser("cls", help="compact localized state on a finite lattice")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--cells", type=int, nargs=2, default=(8, 8), metavar=("M", "N"))
    p.add_argument("--boundary", choices=("open", "periodic"), default="open")
    p.add_argument("--three", action="store_true",
                   help="three-cell state (chiral phases only)")
    p.add_argument("--at", type=int, nargs=2, default=(0, 0), metavar=("M", "N"),
                   help="corner cell")

    p = sub.add_parser("evolve", help="time evolution of an initial state")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--cells", type=int, nargs=2, default=(8, 8), metavar=("M", "N"))
    p.add_argument("--boundary", choices=("open", "periodic"), default="open")
    p.add_argument("--init", default="cls-single",
                   help="cls-single | cls-three | file:PATH")
    p.add_argument("--at", type=int, nargs=2, default=(0, 0), metavar=("M", "N"),
                   help="corner cell for cls initial states")
    p.add_argument("--t", type=float, default=10.0, dest="t_end")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--state-out", help="write the final state as JSON")

    p = sub.add_parser("symmetry", help="time-reversal and chiral checks")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oracle", help="Bloch vs real-space consistency check")
    _add_model_args(p)
    _add_output_args(p)
    p.add_argument("--cells", type=int, nargs=2, default=(8, 8), metavar=("M", "N"))
    return parser


def resolve_model(args):
    if (args.model is None) == (args.model_file is None):
        raise ValueError("give exactly one of --model or --model-file")
    if args.model_file is not None:
        model = model_from_json(Path(args.model_file).read_text())
        if args.flatband:
            raise ValueError("--flatband only applies with --model; edit the file instead")
        return model
    gamma = args.J * math.sin(args.phi) if args.flatband else args.gamma
    params = Params(kappa=args.kappa, J=args.J, phi=args.phi, gamma=gamma)
    return build_model(args.model, params)


def _emit(text, args, default_stream=None):
    if args.out:
        Path(args.out).write_text(text)
    else:
        (default_stream or sys.stdout).write(text)


def _flatness_dict(report, grid):
    return {
        "candidate_energy": report.candidate,
        "max_deviation": report.max_deviation,
        "condition_residual": report.condition_residual,
        "is_flat": report.is_flat,
        "tol_flat": report.tol_flat,
        "grid": [grid.nx, grid.ny],
    }


def cmd_spectrum(args):
    model = resolve_model(args)
    grid = bands_mod.BZGrid(*args.grid)
    surfaces = bands_mod.scan(model, grid, workers=args.threads)
    report = bands_mod.flatness(model, surfaces=surfaces, tol_flat=args.tol_flat)
    summary = {"model": model.name, "grid": [grid.nx, grid.ny],
               "flatness": _flatness_dict(report, grid)}

    fmt = args.format or "csv"
    if fmt == "json":
        rows = []
        E = surfaces.energies
        for i in range(grid.nx):
            for j in range(grid.ny):
                for b in range(3):
                    rows.append([float(grid.kx[i]), float(grid.ky[j]), b,
                                 E[i, j, b].real, E[i, j, b].imag])
        summary["bands"] = rows
        _emit(render_json(summary) + "\n", args)
        return 0

    import io
    buf = io.StringIO()
    bands_mod.export_band_csv(surfaces, buf)
    if args.out:
        out = Path(args.out)
        out.write_text(buf.getvalue())
        out.with_suffix(".summary.json").write_text(render_json(summary) + "\n")
    else:
        sys.stdout.write(buf.getvalue())
        sys.stderr.write(render_json(summary) + "\n")
    return 0


def cmd_flatness(args):
    model = resolve_model(args)
    grid = bands_mod.BZGrid(*args.grid)
    surfaces = bands_mod.scan(model, grid, workers=args.threads)
    report = bands_mod.flatness(model, surfaces=surfaces, tol_flat=args.tol_flat)
    _emit(render_json(_flatness_dict(report, grid)) + "\n", args)
    return 0


def cmd_classify(args):
    model = resolve_model(args)
    grid = bands_mod.BZGrid(*args.grid)
    result = bands_mod.classify(model, grid, level_tol=args.level_tol,
                                tol_E=args.tol_E, cond_EP=args.cond_ep)
    _emit(render_json(bands_mod.classification_to_dict(result)) + "\n", args)
    return 0


def cmd_cls(args):
    model = resolve_model(args)
    lattice = rs.assemble(model, args.cells[0], args.cells[1], boundary=args.boundary)
    at = tuple(args.at)
    if args.three:
        cells = (at,) + rs.cls_partner_cells(lattice, at)
        state = rs.make_cls_three(model, cells, lattice)
    else:
        state = rs.make_cls_single(model, at, lattice)
    out = {
        "kind": "three" if args.three else "single",
        "energy": _pair(state.energy),
        "residual": state.residual,
        "cells": [list(c) for c in state.cells],
        "support": list(state.support),
    }
    if args.three:
        ib = lattice.site_index(at[0], at[1], 1)
        out["psi_b1"] = _pair(state.amplitudes[ib])
    out["state"] = [_pair(v) for v in state.amplitudes]
    _emit(render_json(out) + "\n", args)
    return 0


def cmd_evolve(args):
    model = resolve_model(args)
    lattice = rs.assemble(model, args.cells[0], args.cells[1], boundary=args.boundary)
    init = args.init
    if init == "cls-single":
        psi0 = rs.make_cls_single(model, tuple(args.at), lattice).amplitudes
    elif init == "cls-three":
        at = tuple(args.at)
        cells = (at,) + rs.cls_partner_cells(lattice, at)
        psi0 = rs.make_cls_three(model, cells, lattice).amplitudes
    elif init.startswith("file:"):
        psi0 = rs.state_from_json(Path(init[5:]).read_text())
    else:
        raise ValueError(f"unknown --init {init!r}; use cls-single, cls-three or file:PATH")
    trace = rs.evolve(lattice, psi0, args.t_end, dt=args.dt)

    import io
    buf = io.StringIO()
    rs.export_trace_csv(trace, lattice, buf)
    _emit(buf.getvalue(), args)
    if args.state_out:
        Path(args.state_out).write_text(rs.state_to_json(trace.final_state) + "\n")
    return 0


def cmd_symmetry(args):
    model = resolve_model(args)
    rng = np.random.default_rng(args.seed)
    samples = rng.uniform(-math.pi, math.pi, size=(args.samples, 2))
    tr = time_reversal_residual(model, samples)
    ch = chiral_residual(model, samples)
    out = {
        "time_reversal": tr < 1e-12,
        "chiral": ch < 1e-12,
        "time_reversal_residual": tr,
        "chiral_residual": ch,
        "samples": args.samples,
        "seed": args.seed,
    }
    _emit(render_json(out) + "\n", args)
    return 0


def cmd_oracle(args):
    model = resolve_model(args)
    M, N = args.cells
    dist = rs.fourier_consistency(model, M, N)
    out = {"model": model.name, "M": M, "N": N,
           "max_distance": dist, "tolerance": 1e-8, "ok": dist < 1e-8}
    _emit(render_json(out) + "\n", args)
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "flatness": cmd_flatness,
    "classify": cmd_classify,
    "cls": cmd_cls,
    "evolve": cmd_evolve,
    "symmetry": cmd_symmetry,
    "oracle": cmd_oracle,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
