"""Command-line interface: ``burstacc restore|sweep|verify|synth``.

Exit codes: 0 success, 1 failed verification or runtime error, 2 usage or
input error (bad flags, unreadable or inconsistent frames, unsupported method).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .accumulation import DEFAULT_LEVELS, METHODS, SPARSE_METHODS, BurstConfig, run_method
from .core import BurstError, InvalidInputError, UnsupportedVariantError, as_stack
from .image_io import load_image, load_sequence, save_image

log = logging.getLogger("burstacc")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _float_list(text: str) -> list:
    try:
        values = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"cannot parse value list {text!r}") from exc
    if not values:
        raise UsageError("sweep list is empty")
    return values


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="directory holding the burst frames (PNG/PGM)")
    p.add_argument("--pattern", default="*", help="filename glob inside the input directory")
    p.add_argument("--method", default="fba", help=f"one of {', '.join(METHODS)}")
    p.add_argument("--p", type=float, default=11.0, help="weight exponent (default 11)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="soft threshold (default 0.5 for sfba, 0.001 for fr-swba)")
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS, help="framelet levels J (default 4)")
    p.add_argument("--sigma", type=float, default=None, help="weight smoothing width (default min(w,h)/50)")
    p.add_argument("--register", choices=("none", "nonrigid"), default="none")
    p.add_argument("--register-iters", type=int, default=1)
    p.add_argument("--literal-sba", action="store_true",
                   help="sparse methods: plain sum over frames, no 1/M and no spectrum scaling")
    p.add_argument("--scale-spectra", action="store_true",
                   help="sfba: threshold F/sqrt(W*H) instead of the raw DFT")
    p.add_argument("--threshold-lowpass", action="store_true",
                   help="fr-swba: also threshold the lowpass band")
    p.add_argument("--ground-truth", default=None, help="clean image; enables PSNR in reports")


def _config(args, **override) -> BurstConfig:
    kw = dict(
        method=args.method,
        p=args.p,
        lam=args.lam,
        sigma=args.sigma,
        levels=args.levels,
        registration=args.register,
        register_iters=args.register_iters,
        literal_sba=args.literal_sba,
        scale_spectra=args.scale_spectra and not args.literal_sba,
        threshold_lowpass=args.threshold_lowpass,
    )
    kw.update(override)
    return BurstConfig(**kw)


def _load(args):
    frames = as_stack(load_sequence(args.input, args.pattern))
    truth = None
    if args.ground_truth:
        truth = load_image(args.ground_truth)
        if truth.shape != frames.shape[1:]:
            raise InvalidInputError(f"ground truth shape {truth.shape} differs from frames {frames.shape[1:]}")
    log.info("loaded %d frames of %dx%d", frames.shape[0], frames.shape[2], frames.shape[1])
    return frames, truth


def _write_json(obj, path) -> None:
    text = json.dumps(obj, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


def cmd_restore(args) -> int:
    config = _config(args)
    frames, truth = _load(args)
    image, report = run_method(frames, config, truth)
    save_image(image, args.out)
    rec = report.to_dict()
    rec.update(input=str(args.input), frames=int(frames.shape[0]), output=str(args.out))
    _write_json(rec, args.report)
    log.info("wrote %s (%.2f s)", args.out, report.total_seconds)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if (args.p_list is None) == (args.lambda_list is None):
        raise UsageError("give exactly one of --p-list / --lambda-list")
    param = "p" if args.p_list is not None else "lambda"
    values = _float_list(args.p_list if param == "p" else args.lambda_list)
    base = _config(args)
    sparse = base.method in SPARSE_METHODS
    if param == "lambda" and not sparse:
        raise UsageError(f"--lambda-list needs a sparse method ({', '.join(SPARSE_METHODS)})")
    if param == "p" and sparse:
        raise UsageError(f"--p-list needs a weighted method, not {base.method}")
    frames, truth = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for v in values:
        config = _config(args, **({"p": v} if param == "p" else {"lam": v}))
        image, report = run_method(frames, config, truth)
        path = out_dir / f"{base.method}_{param}{v:g}.png"
        save_image(image, path)
        rows.append({
            "value": v,
            "psnr": report.psnr,
            "nonzero_fraction": report.nonzero_fraction,
            "seconds": report.total_seconds,
            "output": str(path),
        })
    print(f"{param:>10} {'psnr':>8} {'nonzero':>9} {'seconds':>8}")
    for r in rows:
        ps = "-" if r["psnr"] is None else f"{r['psnr']:.2f}"
        nz = "-" if r["nonzero_fraction"] is None else f"{r['nonzero_fraction']:.4f}"
        print(f"{r['value']:>10g} {ps:>8} {nz:>9} {r['seconds']:>8.2f}")
    summary = {"method": base.method, "parameter": param, "rows": rows}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .analysis import build_matrix, run_case, select_cases

    cases = select_cases(build_matrix(args.matrix), args.case)
    if not cases:
        raise UsageError(f"no case named {args.case!r} in the {args.matrix} matrix")
    sink = sys.stdout if args.output in (None, "-") else open(args.output, "w")
    failed = []
    try:
        for case in cases:
            rep = run_case(case)
            sink.write(rep.to_json_line() + "\n")
            sink.flush()
            if not rep.tolerance_passed:
                failed.append(case.name)
    finally:
        if sink is not sys.stdout:
            sink.close()
    if failed:
        print(f"verification failed: {failed[0]}" + (f" (+{len(failed) - 1} more)" if len(failed) > 1 else ""),
              file=sys.stderr)
        return EXIT_FAIL
    log.info("%d cases passed", len(cases))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .core import gaussian_kernel
    from .synth import DegradationSpec, bar_chart, generate_burst, save_burst

    clean = bar_chart(args.size, args.size)
    spec = DegradationSpec(
        warp_amplitude=args.amplitude,
        warp_smoothness=args.smoothness,
        blur=gaussian_kernel(args.blur) if args.blur > 0 else None,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    frames, truth = generate_burst(clean, args.frames, spec)
    out = Path(args.out_dir)
    save_burst(out, frames, truth if args.truth else None)
    save_image(clean, out.parent / f"{out.name}_clean.png")
    log.info("wrote %d frames to %s", args.frames, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="burstacc", description="Burst accumulation for turbulent sequences")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restore", help="restore one image from a burst")
    _add_method_flags(p)
    p.add_argument("--out", required=True, help="output image (16-bit PNG)")
    p.add_argument("--report", default="-", help="JSON run report path ('-' = stdout)")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("sweep", help="run a method over a list of p or lambda values")
    _add_method_flags(p)
    p.add_argument("--p-list", default=None, help="comma-separated exponents, e.g. 2,5,11,17,30")
    p.add_argument("--lambda-list", default=None, help="comma-separated thresholds")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the equivalence and synthetic verification suite")
    p.add_argument("--matrix", choices=("small", "full"), default="small")
    p.add_argument("--case", default=None, help="run only this case (exact name or glob)")
    p.add_argument("--output", default="-", help="JSON-lines destination ('-' = stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="write a synthetic turbulent bar-chart burst")
    p.add_argument("out_dir")
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--amplitude", type=float, default=2.0)
    p.add_argument("--smoothness", type=float, default=16.0)
    p.add_argument("--blur", type=float, default=0.5, help="shared Gaussian blur sigma (0 = none)")
    p.add_argument("--noise", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--no-truth", dest="truth", action="store_false", help="skip truth.json")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"burstacc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, UnsupportedVariantError, OSError) as exc:
        print(f"burstacc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BurstError as exc:
        print(f"burstacc: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
