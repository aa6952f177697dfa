"""Command-line entry point.

Exit status: 0 when every asserted certificate holds, 1 when one fails (or a
construction fails), 2 for unusable input/configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets
from .errors import DocumentError, UntangleError
from .flows import MAX_STEP
from .geometry import Ball, LabeledDataset, PointCloud, containment_slack
from .io import read_points_csv, write_json, write_points_csv
from .neuralnet import load_fixture, load_network
from .relocation import (
    RelocationProblem,
    apply_to_clouds,
    layout_targets,
    lift_relocate_project,
    relocate_disjoint,
    verify_relocation,
)
from .separability import certify_pairwise, verify_certificate
from .svg import export_svg
from .transport import Path as Polyline

HOPF_TARGETS = (Ball((20.0, 0.0, 0.0), 2.0), Ball((-20.0, 0.0, 0.0), 2.0))


class ConfigError(Exception):
    pass


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _step(args) -> float:
    h = MAX_STEP if args.step_size is None else args.step_size
    if not 0 < h <= MAX_STEP:
        raise ConfigError(f"--step-size must be in (0, {MAX_STEP}]")
    return h


def _apply_net(net, d: LabeledDataset) -> LabeledDataset:
    return LabeledDataset(tuple((lbl, PointCloud(net(c.points))) for lbl, c in d.classes))


def _cert_summary(cert, d) -> dict:
    out = cert.to_dict()
    out["verified"] = verify_certificate(cert, d)
    return out


def _constructive(d: LabeledDataset, targets, args) -> dict:
    t0 = time.perf_counter()
    try:
        pipe, images = lift_relocate_project(d, targets, C=args.lift_height, max_step=_step(args))
    except UntangleError as exc:
        return {"ok": False, "error": str(exc)}, None
    cert = certify_pairwise(images)
    return {
        "ok": cert.all_separable,
        "stages": len(pipe),
        "slack": [containment_slack(t, c) for t, c in zip(targets, images.clouds)],
        "certificate": _cert_summary(cert, images),
        "seconds": time.perf_counter() - t0,
    }, images


def cmd_demo_toy(args) -> int:
    out = _out_dir(args)
    data = datasets.gen_toy_abc(args.count, args.seed)
    net = load_fixture("toy")
    images = _apply_net(net, data)
    fixture_cert = certify_pairwise(images)
    raw_cert = certify_pairwise(data)
    sources = [b for b in data.source_balls if b is not None] + [Ball((0.0, 0.0), 5.0)]
    targets = layout_targets(3, sources, 1.0)
    constructive, lifted_images = _constructive(data, targets, args)
    report = {
        "command": "demo-toy",
        "count": args.count,
        "seed": args.seed,
        "fixture": _cert_summary(fixture_cert, images),
        "raw": _cert_summary(raw_cert, data),
        "constructive": constructive,
    }
    ok = fixture_cert.all_separable and constructive["ok"]
    report["ok"] = ok
    write_points_csv(out / "toy_input.csv", data)
    write_points_csv(out / "toy_fixture_output.csv", images)
    write_json(out / "toy_report.json", report)
    _print_summary(report)
    export_svg(data, out / "toy_input.svg", "input")
    export_svg(images, out / "toy_fixture_output.svg", "toy network output")
    if lifted_images is not None:
        export_svg(lifted_images, out / "toy_constructive_output.svg", "lift / relocate / project")
    return 0 if ok else 1


def cmd_demo_hopf(args) -> int:
    out = _out_dir(args)
    data = datasets.gen_hopf_link(args.count)
    link = datasets.linking_number(*(c.points for c in data.clouds))
    net = load_fixture("hopf")
    images = _apply_net(net, data)
    fixture_cert = certify_pairwise(images)
    constructive, lifted_images = _constructive(data, list(HOPF_TARGETS), args)
    report = {
        "command": "demo-hopf",
        "count": args.count,
        "linking_number": link,
        "fixture": _cert_summary(fixture_cert, images),
        "constructive": constructive,
    }
    ok = fixture_cert.all_separable and constructive["ok"] and round(abs(link)) == 1
    report["ok"] = ok
    write_points_csv(out / "hopf_input.csv", data)
    write_points_csv(out / "hopf_fixture_output.csv", images)
    write_json(out / "hopf_report.json", report)
    _print_summary(report)
    export_svg(data, out / "hopf_input.svg", "Hopf link")
    export_svg(images, out / "hopf_fixture_output.svg", "hopf network output")
    if lifted_images is not None:
        export_svg(lifted_images, out / "hopf_constructive_output.svg", "lift / relocate / project")
    return 0 if ok else 1


def cmd_demo_swiss(args) -> int:
    out = _out_dir(args)
    roll = datasets.gen_swiss_roll(s_grid=args.grid, t_grid=args.grid)
    back = np.array([datasets.unroll_swiss(p) for p in roll.cloud.points])
    err = float(np.abs(back - roll.params).max())
    report = {"command": "demo-swiss", "grid": args.grid, "T0": datasets.SWISS_T0,
              "T1": datasets.SWISS_T1, "roundtrip_max_error": err, "ok": err <= 1e-9}
    np.savetxt(out / "swiss_roll.csv", roll.sidecar_rows(), delimiter=",",
               header="s,t,x,y,z", comments="", fmt="%.17g")
    write_json(out / "swiss_report.json", report)
    _print_summary(report)
    export_svg(LabeledDataset(((0, roll.cloud),)), out / "swiss_roll.svg", "Swiss roll")
    return 0 if report["ok"] else 1


def _load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def cmd_relocate(args) -> int:
    if not args.config:
        raise ConfigError("relocate needs --config FILE")
    cfg = _load_config(args.config)
    base = Path(args.config).parent
    options = cfg.get("options", {})
    try:
        sets = []
        for entry in cfg["sets"]:
            d = read_points_csv(base / entry["csv"], float(entry.get("guard", options.get("guard", 0.0))))
            cloud = PointCloud(np.vstack([c.points for c in d.clouds]), d.clouds[0].guard)
            sets.append((cloud, Ball.from_dict(entry["source"])))
        targets = [Ball.from_dict(t) for t in cfg["targets"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed relocation config: {exc}") from None
    paths = None
    if args.waypoints:
        try:
            raw = json.loads(Path(args.waypoints).read_text())
            paths = {int(k): Polyline(np.array(v, float)) for k, v in raw.items()}
        except (OSError, ValueError, AttributeError) as exc:
            raise ConfigError(f"cannot read waypoints: {exc}") from None
    if args.step_size is None and "step_size" in options:
        args.step_size = float(options["step_size"])
    problem = RelocationProblem(tuple(sets), tuple(targets))
    pipeline = relocate_disjoint(problem, max_step=_step(args), paths=paths, verify=False)
    out = _out_dir(args)
    images = apply_to_clouds(pipeline, [c for c, _ in problem.sets])
    try:
        report = verify_relocation(pipeline, problem, images)
        report["ok"] = True
    except UntangleError as exc:
        report = {"ok": False, "error": str(exc)}
    report["command"] = "relocate"
    report["stages"] = len(pipeline)
    write_json(out / "relocate_report.json", report)
    (out / "pipeline.json").write_text(pipeline.to_json())
    for i, image in enumerate(images):
        write_points_csv(out / f"set_{i}.csv", LabeledDataset(((i, image),)))
    _print_summary(report)
    return 0 if report["ok"] else 1


def cmd_certify(args) -> int:
    if not args.input:
        raise ConfigError("certify needs --input CSV")
    d = read_points_csv(args.input, args.guard)
    cert = certify_pairwise(d)
    report = {"command": "certify", "certificate": _cert_summary(cert, d),
              "ok": cert.all_separable}
    out = _out_dir(args)
    write_json(out / "certificate.json", report)
    _print_summary(report)
    return 0 if cert.all_separable else 1


def cmd_eval_net(args) -> int:
    if not args.input:
        raise ConfigError("eval-net needs --input CSV")
    if args.net in ("toy", "hopf"):
        net = load_fixture(args.net)
    else:
        net = load_network(Path(args.net).read_text())
    d = read_points_csv(args.input)
    images = _apply_net(net, d)
    out = _out_dir(args)
    write_points_csv(out / "network_output.csv", images)
    report = {"command": "eval-net", "net": args.net, "points": sum(len(c) for c in d.clouds),
              "ok": True}
    write_json(out / "eval_report.json", report)
    _print_summary(report)
    return 0


def _print_summary(report: dict) -> None:
    status = "OK" if report.get("ok") else "FAILED"
    print(f"[{status}] {report.get('command', 'relocate')}")
    for key in ("fixture", "raw"):
        if key in report:
            print(f"  {key}: allSeparable={report[key]['allSeparable']}")
    if "constructive" in report:
        print(f"  constructive: ok={report['constructive'].get('ok')}")
    if "linking_number" in report:
        print(f"  linking number: {report['linking_number']:.6f}")
    if "roundtrip_max_error" in report:
        print(f"  roll/unroll max error: {report['roundtrip_max_error']:.3g}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="untangle", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, count=None):
        sp.add_argument("--out", default="untangle-out", help="output directory")
        sp.add_argument("--step-size", type=float, default=None)
        sp.add_argument("--lift-height", type=float, default=None)
        if count is not None:
            sp.add_argument("--count", type=int, default=count)
        return sp

    common(sub.add_parser("demo-toy"), 200).add_argument("--seed", type=int, default=7)
    common(sub.add_parser("demo-hopf"), 256)
    common(sub.add_parser("demo-swiss")).add_argument("--grid", type=int, default=40)
    reloc = common(sub.add_parser("relocate"))
    reloc.add_argument("--config")
    reloc.add_argument("--waypoints")
    cert = common(sub.add_parser("certify"))
    cert.add_argument("--input")
    cert.add_argument("--guard", type=float, default=0.0)
    ev = common(sub.add_parser("eval-net"))
    ev.add_argument("--net", default="toy")
    ev.add_argument("--input")
    return p


COMMANDS = {
    "demo-toy": cmd_demo_toy,
    "demo-hopf": cmd_demo_hopf,
    "demo-swiss": cmd_demo_swiss,
    "relocate": cmd_relocate,
    "certify": cmd_certify,
    "eval-net": cmd_eval_net,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DocumentError, OSError) as exc:
        print(json.dumps({"ok": False, "error": str(exc), "kind": "config"}), file=sys.stderr)
        return 2
    except UntangleError as exc:
        print(json.dumps({"ok": False, "error": str(exc), "kind": type(exc).__name__}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
