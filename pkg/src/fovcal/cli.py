"""Command-line interface.

Exit codes: 0 on success; 1 for usage problems, including unreadable or
malformed input files; 2 for semantic failures (solver non-convergence,
domain violations, pose-estimation failure).

With ``--json`` the machine-readable result is the only thing written to
stdout; human-readable tables go to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import CalibrationError, FileFormatError, PoseEstimationError
from .imaging import build_rectify_map, fit_all_focal, read_ppm, remap, write_ppm
from .model import (
    FORMAT_VERSION,
    RadialModel,
    intrinsics_from_spec,
    load_camera_spec,
    load_intrinsics,
    radial_forward,
    save_intrinsics,
)
from .geometry import load_correspondences, save_correspondences
from .refine import RefineConfig, full_calibrate, rms_reprojection, single_shot_sweep
from .synth import generate_correspondences, load_scenario
from .zeroshot import solve_omega


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors instead of exiting with code 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _echo(args: argparse.Namespace, text: str) -> None:
    """Human-readable output: stdout normally, stderr in --json mode."""
    print(text, file=sys.stderr if getattr(args, "json", False) else sys.stdout)


def _emit_json(payload: dict) -> None:
    payload = {"format_version": FORMAT_VERSION, **payload}
    print(json.dumps(payload, indent=2))


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_zeroshot(args: argparse.Namespace) -> int:
    spec = load_camera_spec(args.spec)
    if args.model is not None:
        spec = type(spec)(
            spec.name, spec.width, spec.height, spec.fov_h_deg, spec.fov_v_deg,
            RadialModel(args.model),
        )
    result = solve_omega(spec)
    intr = intrinsics_from_spec(spec, result.f_star, result.omega_star)
    fy = "-" if result.fy_perspective is None else f"{result.fy_perspective:10.4f}"
    _echo(args, f"{'camera':<14}{'fx~':>10}{'fy~':>10}{'omega*':>12}{'f*':>10}"
                f"{'clamped':>9}{'iters':>7}")
    _echo(args, f"{spec.name:<14}{result.fx_perspective:10.4f}{fy:>10}"
                f"{result.omega_star:12.6f}{result.f_star:10.4f}"
                f"{str(result.clamped):>9}{result.iterations:7d}")
    if args.output:
        save_intrinsics(args.output, intr)
        _echo(args, f"wrote intrinsics to {args.output}")
    if args.plot:
        from . import plots

        if spec.fov_v_deg is None:
            plots.save_model_curves(args.plot, result.omega_star, spec.width / 2.0)
        else:
            plots.save_residual_curve(args.plot, spec, result.omega_star or None)
        _echo(args, f"wrote figure to {args.plot}")
    if args.json:
        _emit_json(
            {
                "name": spec.name,
                "fx_perspective": result.fx_perspective,
                "fy_perspective": result.fy_perspective,
                "omega_star": result.omega_star,
                "f_star": result.f_star,
                "clamped": result.clamped,
                "iterations": result.iterations,
                "intrinsics": intr.to_json_dict(),
            }
        )
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    intr = load_intrinsics(args.intrinsics)
    data = load_correspondences(args.dataset)
    if data.width != intr.width or data.height != intr.height:
        raise FileFormatError(
            f"dataset image size {data.width}x{data.height} does not match "
            f"intrinsics {intr.width}x{intr.height}"
        )
    report = rms_reprojection(intr, data, f_gt=args.f_gt)
    _echo(args, f"{'image':<16}{'rms [px]':>12}")
    for name, v in zip(data.names, report.per_image_rms):
        _echo(args, f"{name:<16}{v:12.4f}")
    _echo(args, f"{'overall':<16}{report.rms:12.4f}")
    if report.f_err is not None:
        _echo(args, f"focal deviation vs ground truth: {100.0 * report.f_err:.2f}%")
    if args.csv:
        lines = ["image,rms_px"]
        lines += [f"{n},{v:.9g}" for n, v in zip(data.names, report.per_image_rms)]
        Path(args.csv).write_text("\n".join(lines) + "\n")
        _echo(args, f"wrote per-image CSV to {args.csv}")
    if args.plot:
        from . import plots

        plots.save_per_image_rms(args.plot, data.names, report.per_image_rms,
                                 title=f"RMS = {report.rms:.4f} px")
        _echo(args, f"wrote figure to {args.plot}")
    if args.json:
        _emit_json(report.to_json_dict(names=data.names))
    return 0


def _cmd_refine(args: argparse.Namespace) -> int:
    init = load_intrinsics(args.init)
    data = load_correspondences(args.dataset)
    if args.images is not None:
        if args.images < 1 or args.images > data.n_images:
            raise _UsageError(
                f"--images must lie in [1, {data.n_images}], got {args.images}"
            )
        data = data.subset(range(args.images))
    config = RefineConfig(optimize_principal_point=args.principal_point)
    payload: dict = {}
    if args.sweep:
        if data.n_images < 2:
            raise _UsageError("--sweep requires a dataset with at least 2 images")
        sweep = single_shot_sweep(data, init, config)
        _echo(args, f"{'fold':<8}{'f [px]':>10}{'fit rms':>10}{'gen rms':>10}")
        for k in range(data.n_images):
            _echo(args, f"{k:<8}{sweep.focals[k]:10.2f}{sweep.fit[k]:10.4f}"
                        f"{sweep.gen[k]:10.4f}")
        _echo(args, f"mean fitting rms        : {sweep.eps_fit:.4f} px")
        _echo(args, f"mean generalization rms : {sweep.eps_gen:.4f} px")
        if args.plot:
            from . import plots

            plots.save_sweep(args.plot, sweep.gen, sweep.fit)
            _echo(args, f"wrote figure to {args.plot}")
        if args.json:
            _emit_json({"sweep": sweep.to_json_dict()})
        return 0

    initial = rms_reprojection(init, data)
    report = full_calibrate(data, init, config)
    _echo(args, f"initial rms : {initial.rms:.6f} px")
    _echo(args, f"refined rms : {report.rms:.6f} px "
                f"({'converged' if report.converged else 'stalled'})")
    _echo(args, f"f     : {init.f:.4f} -> {report.intrinsics.f:.4f}")
    _echo(args, f"omega : {init.omega:.6f} -> {report.intrinsics.omega:.6f}")
    if args.output:
        save_intrinsics(args.output, report.intrinsics)
        _echo(args, f"wrote intrinsics to {args.output}")
    if args.plot:
        from . import plots

        plots.save_per_image_rms(args.plot, data.names, report.per_image_rms,
                                 title=f"refined RMS = {report.rms:.4f} px")
        _echo(args, f"wrote figure to {args.plot}")
    if args.json:
        payload = report.to_json_dict(names=data.names)
        payload["initial_rms"] = initial.rms
        _emit_json(payload)
    return 0


def _cmd_rectify(args: argparse.Namespace) -> int:
    intr = load_intrinsics(args.intrinsics)
    src = read_ppm(args.input)
    if src.width != intr.width or src.height != intr.height:
        raise FileFormatError(
            f"input image is {src.width}x{src.height} but intrinsics expect "
            f"{intr.width}x{intr.height}"
        )
    new_f = fit_all_focal(intr) if args.fit_all else args.new_f
    rmap = build_rectify_map(intr, new_f=new_f)
    out = remap(src, rmap)
    write_ppm(args.output, out)
    _echo(args, f"rectified {args.input} -> {args.output} (new_f = {rmap.new_f:.4f})")
    if args.json:
        _emit_json(
            {
                "input": str(args.input),
                "output": str(args.output),
                "new_f": rmap.new_f,
                "width": out.width,
                "height": out.height,
            }
        )
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    data = generate_correspondences(scenario)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_path = out_dir / "correspondences.json"
    intr_path = out_dir / "intrinsics.json"
    save_correspondences(dataset_path, data)
    save_intrinsics(intr_path, scenario.intrinsics)
    _echo(args, f"wrote {data.n_images} images x {data.board.n_corners} corners "
                f"to {dataset_path}")
    _echo(args, f"wrote ground-truth intrinsics to {intr_path}")
    if args.json:
        _emit_json(
            {
                "dataset": str(dataset_path),
                "intrinsics": str(intr_path),
                "n_images": data.n_images,
                "noise_sigma": scenario.noise_sigma,
                "seed": scenario.seed,
            }
        )
    return 0


def _cmd_curves(args: argparse.Namespace) -> int:
    if not args.r_max > 0.0:
        raise _UsageError(f"--r-max must be > 0, got {args.r_max}")
    if args.omega < 0.0:
        raise _UsageError(f"--omega must be >= 0, got {args.omega}")
    n = 1000
    r_u = [args.r_max * i / (n - 1) for i in range(n)]
    models = list(RadialModel)
    columns = {m: radial_forward(m, args.omega, r_u) for m in models}
    lines = ["r_u," + ",".join(m.value for m in models)]
    for i in range(n):
        lines.append(
            f"{r_u[i]:.9g}," + ",".join(f"{columns[m][i]:.9g}" for m in models)
        )
    Path(args.output).write_text("\n".join(lines) + "\n")
    _echo(args, f"wrote {n} samples to {args.output}")
    if args.plot:
        from . import plots

        plots.save_model_curves(args.plot, args.omega, args.r_max)
        _echo(args, f"wrote figure to {args.plot}")
    if args.json:
        _emit_json(
            {
                "csv": str(args.output),
                "omega": args.omega,
                "r_max": args.r_max,
                "samples": n,
            }
        )
    return 0


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fovcal",
        description="Fisheye calibration from manufacturer FOV specs: "
        "zero-shot intrinsics, evaluation, refinement, rectification.",
        epilog="exit codes: 0 success, 1 usage or malformed input, "
        "2 domain or convergence failure",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    model_names = [m.value for m in RadialModel]

    p = sub.add_parser("zeroshot",
                       help="estimate intrinsics from a camera spec alone")
    p.add_argument("--spec", required=True, help="camera spec JSON")
    p.add_argument("--model", choices=model_names, default=None,
                   help="override the radial model from the spec file")
    p.add_argument("-o", "--output", help="write estimated intrinsics JSON here")
    p.add_argument("--plot", help="write a residual-curve figure here")
    p.add_argument("--json", action="store_true", help="JSON result on stdout")
    p.set_defaults(func=_cmd_zeroshot)

    p = sub.add_parser("evaluate",
                       help="score intrinsics against checkerboard correspondences")
    p.add_argument("--intrinsics", required=True, help="intrinsics JSON")
    p.add_argument("--dataset", required=True, help="correspondence set JSON")
    p.add_argument("--f-gt", type=float, default=None,
                   help="ground-truth focal for the deviation column")
    p.add_argument("--csv", help="write per-image RMS as CSV here")
    p.add_argument("--plot", help="write a per-image RMS figure here")
    p.add_argument("--json", action="store_true", help="JSON result on stdout")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("refine",
                       help="jointly refine intrinsics and poses (LM)")
    p.add_argument("--init", required=True, help="initial intrinsics JSON")
    p.add_argument("--dataset", required=True, help="correspondence set JSON")
    p.add_argument("--images", type=int, default=None,
                   help="use only the first K images")
    p.add_argument("--sweep", action="store_true",
                   help="single-shot sweep: calibrate from each image alone")
    p.add_argument("--principal-point", action="store_true",
                   help="also optimize the principal point")
    p.add_argument("-o", "--output", help="write refined intrinsics JSON here")
    p.add_argument("--plot", help="write a figure here")
    p.add_argument("--json", action="store_true", help="JSON result on stdout")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("rectify",
                       help="undistort a PPM image to a pinhole view")
    p.add_argument("--intrinsics", required=True, help="intrinsics JSON")
    p.add_argument("--input", required=True, help="source PPM (P6)")
    p.add_argument("--output", required=True, help="destination PPM (P6)")
    p.add_argument("--new-f", type=float, default=None,
                   help="output focal length (default: keep the source focal)")
    p.add_argument("--fit-all", action="store_true",
                   help="shrink the output focal so the whole frame fits")
    p.add_argument("--json", action="store_true", help="JSON result on stdout")
    p.set_defaults(func=_cmd_rectify)

    p = sub.add_parser("synth",
                       help="generate a synthetic correspondence dataset")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("-o", "--out-dir", required=True,
                   help="directory for correspondences.json and intrinsics.json")
    p.add_argument("--json", action="store_true", help="JSON result on stdout")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("curves",
                       help="tabulate r_d(r_u) for all radial laws as CSV")
    p.add_argument("--omega", type=float, required=True, help="distortion parameter")
    p.add_argument("--r-max", type=float, required=True,
                   help="largest undistorted radius to sample")
    p.add_argument("-o", "--output", required=True, help="CSV destination")
    p.add_argument("--plot", help="write a curves figure here")
    p.add_argument("--json", action="store_true", help="JSON result on stdout")
    p.set_defaults(func=_cmd_curves)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except PoseEstimationError as e:
        name = f" [image {e.image_name}]" if e.image_name else ""
        print(f"error: {e}{name}", file=sys.stderr)
        return 2
    except CalibrationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
