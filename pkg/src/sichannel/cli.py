"""Command-line front end.

Every command writes plot-ready CSV (Hz, ps, ohm, dB; header row) and JSON into
``--out`` (default ``$SICHANNEL_OUT`` or ``./sichannel-out``). Exit status is 0 on
success, 1 on a domain error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, channel, montecarlo, netparams, skewstat, stackup
from ._io import atomic_write_text, csv_text, dumps, write_json
from .schemas import SchemaViolation

OUT_ENV = "SICHANNEL_OUT"

PAIRING_HELP = (
    "4-port pairing 'Pin,Nin:Pout,Nout' (1-based). Default '1,3:2,4' assumes "
    "through-paths 1->2 (P) and 3->4 (N)."
)


class UsageError(Exception):
    pass


def _grid_arg(text):
    try:
        fmin, fmax, step = (float(v) for v in text.split(":"))
        return netparams.linear_grid(fmin, fmax, step)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--grid expects fmin:fmax:step in Hz ({exc})") from None


def _pairing_arg(text):
    try:
        return netparams.parse_pairing(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed_arg(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _read_json(path):
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _out_dir(args):
    out = Path(args.out or os.environ.get(OUT_ENV) or "sichannel-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default_mask():
    doc = json.loads(resources.files("sichannel.data").joinpath("mask_default.json").read_text())
    return analysis.load_mask(doc)


# -- commands --------------------------------------------------------------------


def cmd_analyze(args):
    path = Path(args.touchstone)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    net = netparams.read_touchstone(path)
    if args.grid is not None:
        net = netparams.resample(net, args.grid)
    out = _out_dir(args)
    report = {"source": path.name, "ports": net.ports, "passive": net.is_passive()}

    if net.ports == 4:
        diff = netparams.to_mixed_mode(net, args.pairing).differential()
        report["pairing"] = [list(p) for p in args.pairing]
    elif net.ports in (1, 2):
        diff = net
    else:
        raise ValueError(f"analyze supports 1-, 2- and 4-port files, got {net.ports} ports")

    rl = analysis.return_loss(diff)
    atomic_write_text(out / "rl.csv", rl.to_csv())
    if diff.ports == 2:
        il = analysis.insertion_loss(diff)
        atomic_write_text(out / "il.csv", il.to_csv())
        report["il_db_at_nyquist"] = float(np.interp(analysis.nyquist(args.bitrate), il.axis, il.values))

    try:
        report["brl_db"] = analysis.brl(diff, args.bitrate)
    except ValueError as exc:
        report["brl_db"] = None
        report["brl_skipped"] = str(exc)

    if args.mask and not Path(args.mask).is_file():
        raise UsageError(f"no such file: {args.mask}")
    mask = analysis.load_mask(args.mask) if args.mask else _default_mask()
    try:
        report["mask"] = analysis.mask_check(rl, mask).to_dict()
    except ValueError as exc:
        if args.mask:
            raise
        report["mask"] = None
        report["mask_skipped"] = str(exc)

    try:
        z = analysis.tdr(diff, 1, args.risetime)
        atomic_write_text(out / "tdr.csv", z.to_csv())
    except ValueError as exc:
        report["tdr_skipped"] = str(exc)

    if net.ports == 4:
        try:
            report["skew_ps"] = analysis.skew(net, args.pairing, args.risetime)
            d = analysis.tdr_pn_difference(net, args.pairing, args.risetime)
            atomic_write_text(out / "tdr_pn_difference.csv", d.to_csv())
        except ValueError as exc:
            report["skew_ps"] = None
            report["skew_skipped"] = str(exc)
    write_json(out / "report.json", report)
    print(dumps(report), end="")


def cmd_synth(args):
    spec = channel.channel_spec_from_dict(_read_json(args.spec))
    if args.grid is not None:
        spec.grid = args.grid
    net = channel.synthesize_channel(spec)
    out = _out_dir(args)
    path = atomic_write_text(out / f"{args.name}.s2p", netparams.write_touchstone(net, args.format))
    print(path)


def _write_ensemble(out, tag, result, fmt):
    d = out / tag
    for k, net in enumerate(result.networks):
        atomic_write_text(d / f"case_{k:03d}.s2p", netparams.write_touchstone(net, fmt))
    atomic_write_text(out / f"envelope_{tag}.csv", montecarlo.envelope_csv(result))
    return montecarlo.summary_dict(result)


def cmd_mc(args):
    doc = _read_json(args.config) if args.config else {}
    cfg = montecarlo.config_from_dict(doc)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.grid is not None:
        cfg.grid = args.grid
    out = _out_dir(args)
    summary = {"config": montecarlo.config_to_dict(cfg)}
    summary["config"].pop("grid")
    summary["grid_hz"] = [float(cfg.grid[0]), float(cfg.grid[-1]), int(cfg.grid.size)]
    if args.mode in ("uniform", "both"):
        summary["uniform"] = _write_ensemble(out, "uniform", montecarlo.run_uniform_sweep(cfg), args.format)
    if args.mode in ("segmented", "both"):
        summary["segmented"] = _write_ensemble(out, "segmented", montecarlo.run_segmented(cfg), args.format)
    write_json(out / "summary.json", summary)
    print(out / "summary.json")


def cmd_stackup(args):
    paths = list(args.paths)
    if paths and paths[0] == "report":
        paths.pop(0)
    if len(paths) > 1:
        raise UsageError("stackup takes at most one JSON file")
    if paths and not Path(paths[0]).is_file():
        raise UsageError(f"no such file: {paths[0]}")
    su = stackup.load_stackup(paths[0]) if paths else stackup.bundled_stackup()
    out = _out_dir(args)
    layer_rows = []
    for ly in su.layers:
        d = ly.dielectric_below
        layer_rows.append(
            (
                "" if ly.index is None else ly.index,
                ly.usage,
                ly.copper_thickness,
                d.material if d else "",
                d.thickness if d else 0.0,
                "" if d is None or d.dk is None else d.dk,
            )
        )
    layers = csv_text(
        ["layer", "usage", "copper_mil", "dielectric_below", "dielectric_mil", "dk"], layer_rows
    )
    vias = csv_text(["drill", "exit_layer", "barrel_mil", "stub_mil"], stackup.via_stub_matrix(su))
    total = stackup.total_thickness(su)
    atomic_write_text(out / "layers.csv", layers)
    atomic_write_text(out / "vias.csv", vias)
    write_json(out / "stackup.json", {"name": su.name, "total_thickness_mil": total})
    print(layers, end="")
    print(f"total_thickness_mil,{total!r}")
    print(vias, end="")


def cmd_fws(args):
    model = skewstat.weave_from_dict(_read_json(args.model)) if args.model else skewstat.default_weave()
    if args.rotation is not None:
        model = model.with_rotation(args.rotation)
    seed = 0 if args.seed is None else args.seed
    ens = skewstat.fws_ensemble(model, args.n, seed)
    out = _out_dir(args)
    atomic_write_text(
        out / "fws_samples.csv",
        csv_text(["index", "skew_ps"], [(i, float(s)) for i, s in enumerate(ens.samples)]),
    )
    stats = {
        "model": skewstat.weave_to_dict(model),
        "n": args.n,
        "seed": seed,
        "mean_ps": ens.mean,
        "sigma_ps": ens.sigma,
        "three_sigma_ps": 3 * ens.sigma,
    }
    write_json(out / "fws_stats.json", stats)
    print(dumps(stats), end="")


def cmd_budget(args):
    doc = _read_json(args.budget)
    if args.bitrate_given:
        doc = dict(doc, bitrate_bps=args.bitrate)
    rep = skewstat.budget_report(skewstat.budget_from_dict(doc))
    out = _out_dir(args)
    write_json(out / "budget.json", rep)
    print(dumps(rep), end="")


def cmd_convert(args):
    src = Path(args.input)
    if not src.is_file():
        raise UsageError(f"no such file: {src}")
    net = netparams.read_touchstone(src)
    dst = Path(args.output)
    if dst.suffix.lower() != f".s{net.ports}p":
        raise UsageError(f"output extension must be .s{net.ports}p for a {net.ports}-port network")
    if args.grid is not None:
        net = netparams.resample(net, args.grid)
    atomic_write_text(dst, netparams.write_touchstone(net, args.format))
    print(dst)


# -- parser ---------------------------------------------------------------------


class _BitrateAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.bitrate_given = True


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--out", default=argparse.SUPPRESS, help=f"output directory (env {OUT_ENV})")
    g.add_argument("--seed", type=_seed_arg, default=argparse.SUPPRESS, help="seed for stochastic commands")
    g.add_argument("--grid", type=_grid_arg, default=argparse.SUPPRESS, metavar="FMIN:FMAX:STEP",
                   help="frequency grid in Hz")
    g.add_argument("--bitrate", type=float, action=_BitrateAction, default=argparse.SUPPRESS,
                   help="bit rate in b/s (default 56e9)")
    g.add_argument("--pairing", type=_pairing_arg, default=argparse.SUPPRESS, help=PAIRING_HELP)
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="sichannel",
        description="Signal-integrity channel toolkit for 56 Gb/s NRZ PCB studies.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = dict(choices=["RI", "MA", "DB"], default="RI", type=str.upper, help="Touchstone data format")

    p = sub.add_parser("analyze", parents=[common], help="IL/RL/BRL/mask/TDR/skew from a Touchstone file",
                       description="Analyze a .s1p/.s2p/.s4p file. " + PAIRING_HELP)
    p.add_argument("touchstone")
    p.add_argument("--mask", help="mask JSON ([[freq_hz, limit_db], ...] or {points, scale})")
    p.add_argument("--risetime", type=float, default=analysis.DEFAULT_RISETIME_PS, help="10-90%% edge in ps")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", parents=[common], help="synthesize a channel spec to .s2p")
    p.add_argument("spec")
    p.add_argument("--name", default="channel")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mc", parents=[common], help="Monte-Carlo impedance-tolerance ensembles")
    p.add_argument("config", nargs="?")
    p.add_argument("--mode", choices=["uniform", "segmented", "both"], default="both")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("stackup", parents=[common], help="layer table, thickness and via/stub matrix")
    p.add_argument("paths", nargs="*", metavar="[report] STACKUP",
                   help="stack-up JSON (default: bundled test-board fixture)")
    p.set_defaults(func=cmd_stackup)

    p = sub.add_parser("fws", parents=[common], help="fiber-weave skew ensemble")
    p.add_argument("model", nargs="?", help="weave model JSON (default: calibrated defaults)")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--rotation", type=float, help="override rotation in degrees")
    p.set_defaults(func=cmd_fws)

    p = sub.add_parser("budget", parents=[common], help="channel skew budget check")
    p.add_argument("budget")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("convert", parents=[common], help="Touchstone format conversion")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.out = getattr(args, "out", None)
    args.seed = getattr(args, "seed", None)
    args.grid = getattr(args, "grid", None)
    args.bitrate_given = getattr(args, "bitrate_given", False)
    args.bitrate = getattr(args, "bitrate", 56e9)
    args.pairing = getattr(args, "pairing", netparams.DEFAULT_PAIRING)
    if getattr(args, "n", 2) < 2:
        parser.error("--n must be >= 2")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"sichannel {args.command}: {exc}", file=sys.stderr)
        return 2
    except SchemaViolation as exc:
        print(f"sichannel {args.command}: schema violation at {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, IndexError) as exc:
        print(f"sichannel {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
