"""Command-line front end.

    medialgerm classify --curve example.curve
    medialgerm scan     --curve example.curve --window 0.25 --out out/
    medialgerm trace    --curve example.curve --step 0.002 --out out/
    medialgerm verify   --curve fixture:example --out out/

Exit codes: 0 pass, 1 fail, 2 usage or parse error, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curve import CurveSpecError, PlaneCurveGerm, eval_branch, load_curve
from .fixtures import SPECS, fixture
from .germ import predict_tangent_cone, render_prediction
from .medial import TraceError, region_of, run_grid_scan, trace_conflict_set
from .verify import VerificationConfig, render_csv, render_text, run_verification

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3

CSV_COLUMNS = ["x", "y", "distance", "n_clusters", "branch_ids", "flags"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    curve_path: str
    window: float | None = None         # None: eps / 2
    resolution: int = 512
    step: float | None = None           # None: window / 100
    annuli: int = 8
    windows: int = 10
    tol: float = 1e-12
    tol_deg: float = 2.0
    out: str = "."
    pair: tuple[int, int] | None = None

    def validated(self, curve: PlaneCurveGerm) -> "RunConfig":
        window = curve.epsilon / 2.0 if self.window is None else self.window
        if not 0.0 < window <= curve.epsilon / 2.0:
            raise UsageError(f"--window must lie in (0, eps/2 = {curve.epsilon / 2.0:g}]")
        if self.resolution < 64:
            raise UsageError("--resolution must be >= 64")
        if not (self.tol > 0 and self.tol_deg > 0):
            raise UsageError("tolerances must be positive")
        if self.annuli < 1 or self.windows < 2:
            raise UsageError("--annuli must be >= 1 and --windows >= 2")
        step = window / 100.0 if self.step is None else self.step
        if not 0.0 < step <= window / 50.0:
            raise UsageError("--step must lie in (0, window/50]")
        return RunConfig(self.command, self.curve_path, window, self.resolution, step, self.annuli,
                         self.windows, self.tol, self.tol_deg, self.out, self.pair)


def read_curve(path: str) -> PlaneCurveGerm:
    if path.startswith("fixture:"):
        try:
            return fixture(path.split(":", 1)[1])
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    return load_curve(path)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def samples_csv(samples) -> str:
    """Fixed columns, 17 significant digits, rows sorted by (x, y)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in sorted(samples, key=lambda s: (s.point[0], s.point[1])):
        writer.writerow(["%.17g" % s.point[0], "%.17g" % s.point[1], "%.17g" % s.distance,
                         len(s.clusters), ";".join(str(b) for b in s.branch_ids),
                         ";".join(sorted(s.flags))])
    return buf.getvalue()


def _observed_contributing(curve: PlaneCurveGerm, samples, radius: float) -> dict:
    pts = np.array([s.point for s in samples if s.norm <= radius]).reshape(-1, 2)
    hit = set(region_of(pts, curve)) if len(pts) else set()
    return {pair: pair in hit for pair in curve.regions()}


def scan_svg(curve: PlaneCurveGerm, window: float, samples, fan_angles) -> str:
    """Static SVG 1.1 picture: branches, samples, fan half-lines (y axis up)."""
    r = window
    stroke = r / 300.0
    parts = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="600" height="600" '
             f'viewBox="{-r!r} {-r!r} {2 * r!r} {2 * r!r}">',
             f'<g transform="scale(1,-1)" fill="none" stroke-width="{stroke!r}">',
             f'<circle cx="0" cy="0" r="{r!r}" stroke="#bbbbbb"/>']
    for branch in curve.branches:
        ts = np.concatenate([[0.0], np.geomspace(1e-9 * r, min(branch.domain_length, 2.0 * r), 400)])
        pts = eval_branch(branch, ts)
        path = " ".join(f"{x:.9g},{y:.9g}" for x, y in pts)
        parts.append(f'<polyline points="{path}" stroke="#000000"/>')
    for a in fan_angles:
        parts.append(f'<line x1="0" y1="0" x2="{r * math.cos(a):.9g}" y2="{r * math.sin(a):.9g}" '
                     f'stroke="#2060c0" stroke-dasharray="{4 * stroke!r}"/>')
    parts.append('<g fill="#d03030" stroke="none">')
    for s in sorted(samples, key=lambda s: s.point):
        parts.append(f'<circle cx="{s.point[0]:.9g}" cy="{s.point[1]:.9g}" r="{1.5 * stroke!r}"/>')
    parts += ["</g>", "</g>", "</svg>", ""]
    return "\n".join(parts)


def cmd_classify(cfg: RunConfig, curve: PlaneCurveGerm) -> int:
    sys.stdout.write(render_prediction(curve))
    return EXIT_PASS


def cmd_scan(cfg: RunConfig, curve: PlaneCurveGerm) -> int:
    out = _out_dir(cfg.out)
    scan = run_grid_scan(curve, cfg.window, cfg.resolution, cfg.tol)
    if curve.k == 1:
        fan = predict_tangent_cone(curve)
    else:
        fan = predict_tangent_cone(curve, _observed_contributing(curve, scan.samples, cfg.window / 4))
    (out / "samples.csv").write_text(samples_csv(scan.samples))
    (out / "scan.svg").write_text(scan_svg(curve, cfg.window, scan.samples, fan.angles))
    print(f"{len(scan.samples)} medial samples (window {cfg.window:g}, pitch {scan.pitch:.3g}); "
          f"wrote {out / 'samples.csv'} and {out / 'scan.svg'}")
    return EXIT_PASS


def cmd_trace(cfg: RunConfig, curve: PlaneCurveGerm) -> int:
    out = _out_dir(cfg.out)
    if curve.k < 2:
        raise UsageError("trace needs at least two branches")
    pairs = [cfg.pair] if cfg.pair else curve.regions()
    traced = 0
    for pair in pairs:
        name = f"trace_{pair[0]}_{pair[1]}.csv"
        try:
            trace = trace_conflict_set(curve, pair, cfg.window, cfg.step, cfg.tol)
            samples = trace.polyline
            msg = f"{len(samples)} points"
            traced += 1
        except TraceError as exc:
            samples = exc.trace.polyline if exc.trace else ()
            msg = f"stopped: {exc} ({len(samples)} points kept)"
            traced += bool(samples)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        (out / name).write_text(samples_csv(samples))
        print(f"region {pair}: {msg}; wrote {out / name}")
    # regions without a pairwise conflict are normal (e.g. origin-only feet)
    return EXIT_PASS if traced else EXIT_FAIL


def cmd_verify(cfg: RunConfig, curve: PlaneCurveGerm) -> int:
    out = _out_dir(cfg.out)
    vcfg = VerificationConfig(window=cfg.window, resolution=cfg.resolution, windows=cfg.windows,
                              annuli=cfg.annuli, tol_deg=cfg.tol_deg, tol=cfg.tol)
    report = run_verification(curve, vcfg, curve_id=cfg.curve_path)
    sys.stdout.write(render_text(report))
    (out / "verify.csv").write_text(render_csv(report))
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[report.verdict]


COMMANDS = {"classify": cmd_classify, "scan": cmd_scan, "trace": cmd_trace, "verify": cmd_verify}


def _pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected i,j") from None
    return i, j


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medialgerm", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--curve", required=True,
                       help="curve-spec file, or fixture:<name> (" + ", ".join(sorted(SPECS)) + ")")
        p.add_argument("--window", type=float, default=None, help="window radius (default eps/2)")
        p.add_argument("--resolution", type=int, default=512)
        p.add_argument("--step", type=float, default=None, help="march step (default window/100)")
        p.add_argument("--annuli", type=int, default=8)
        p.add_argument("--windows", type=int, default=10, help="number of halved windows (verify)")
        p.add_argument("--tol", type=float, default=1e-12, help="refinement tolerance")
        p.add_argument("--tol-deg", type=float, default=2.0, help="angular tolerance (verify)")
        p.add_argument("--pair", type=_pair, default=None, help="region i,j to trace")
        p.add_argument("--out", default=".")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.curve, args.window, args.resolution, args.step, args.annuli,
                    args.windows, args.tol, args.tol_deg, args.out, args.pair)
    try:
        curve = read_curve(cfg.curve_path)
        cfg = cfg.validated(curve)
        return COMMANDS[cfg.command](cfg, curve)
    except CurveSpecError as exc:
        print(f"error: {cfg.curve_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
