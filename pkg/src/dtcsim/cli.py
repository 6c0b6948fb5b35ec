"""Command line front end: ``dtcsim synth | analyze | selftest``.

Exit status: 0 success, 1 invalid configuration, 2 I/O or file-format
error, 3 an enabled check failed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analyzer import (JitterModel, decode_intervals, expected_pulse_widths,
                       interval_statistics, linearity_from_widths, sequence_period_check, uniformity_test,
                       write_intervals_csv, write_linearity_csv, write_summary_json)
from .config import (ConfigError, build_parameters, code_mapping, load_config_dict,
                     make_config, merge, parse_time)
from .encoder import encode_stream
from .serdes import BitstreamFormatError, LineConfig, read_bitstream, serialize, write_bitstream

log = logging.getLogger("dtcsim")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3


class CheckFailed(Exception):
    pass


def _fail(kind: str, message: str, field: str | None = None) -> None:
    err = {"error": kind, "message": message}
    if field:
        err["field"] = field
    print(json.dumps(err), file=sys.stderr)


# -- synth -------------------------------------------------------------------

SYNTH_FLAGS = {
    # flag: (config path, type)
    "mode": ("mode", str),
    "line_rate": ("line_rate", str),
    "frame_width": ("frame_width", int),
    "high": ("high", str),
    "total": ("total", str),
    "count": ("count", int),
    "max_fixed_count": ("max_fixed_count", int),
    "lut_path": ("lut_path", str),
    "depth_bits": ("accumulator.depth_bits", int),
    "control_word": ("accumulator.control_word", int),
    "phase": ("accumulator.phase", int),
    "sample_rate": ("accumulator.sample_rate_hz", float),
    "high_offset": ("mapping.high_offset", int),
    "high_scale": ("mapping.high_scale", int),
    "low_bits": ("mapping.low_bits", int),
    "total_bits": ("mapping.total_bits", int),
    "jitter_sigma": ("jitter_sigma", str),
    "seed": ("seed", int),
    "min_interval": ("min_interval", str),
    "max_interval": ("max_interval", str),
    "output": ("output", str),
    "manifest": ("manifest", str),
}


def _flag_overrides(args) -> dict:
    out: dict = {}
    for name, (path, _) in SYNTH_FLAGS.items():
        value = getattr(args, name)
        if value is None:
            continue
        node = out
        *parents, leaf = path.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    if args.lut is not None:
        out["lut"] = [int(c, 0) for c in args.lut.split(",") if c.strip()]
    if args.lfsr_seeds is not None:
        out.setdefault("lfsr", {})["seeds"] = [int(s, 0) for s in args.lfsr_seeds.split(",")]
    if args.lfsr_taps is not None:
        out.setdefault("lfsr", {})["taps"] = json.loads(args.lfsr_taps)
    return out


def synth(cfg) -> dict:
    """Write the bitstream and its manifest; return the manifest."""
    params = build_parameters(cfg)
    line = LineConfig(float(cfg.rate), cfg.frame_width)
    log.debug("encoding %d signals at W=%d", len(params), cfg.frame_width)
    frames = encode_stream(params, cfg.frame_width)
    stream = serialize(frames, line)
    out = Path(cfg.output)
    manifest_path = cfg.manifest_path
    effective = cfg.to_dict()
    lut_source = None
    if cfg.mode == "lut-sequence" and cfg.lut_path is not None:
        # inline the table so the manifest replays without the original file
        from .config import load_lut_codes
        effective["lut"] = load_lut_codes(cfg)
        effective["lut_path"] = None
        lut_source = str(cfg.lut_path)
    payload = stream.packed[:-(-stream.n_bits // 8)].tobytes()
    manifest = {
        "dtcsim_version": __version__,
        "config": effective,
        "bitstream": {
            "path": str(out),
            "n_bits": stream.n_bits,
            "frames": int(len(frames)),
            "signals": len(params),
            "payload_bits": int(sum(p.total_bits for p in params)),
            "sha256": hashlib.sha256(payload).hexdigest(),
        },
        "lut_source": lut_source,
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    write_bitstream(out, stream)
    try:
        tmp = manifest_path.with_name(manifest_path.name + ".part")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        tmp.replace(manifest_path)
    except OSError:
        out.unlink(missing_ok=True)
        raise
    return manifest


def cmd_synth(args) -> int:
    try:
        data = load_config_dict(args.config) if args.config else {}
        cfg = make_config(merge(data, _flag_overrides(args)))
        manifest = synth(cfg)
    except ConfigError as exc:
        _fail("config", exc.message, exc.field)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        _fail("io", str(exc))
        return EXIT_IO
    b = manifest["bitstream"]
    print(f"wrote {b['path']}: {b['signals']} signals, {b['frames']} frames, {b['n_bits']} bits")
    return EXIT_OK


# -- analyze -----------------------------------------------------------------

def analyze(stream_path, out_dir, *, manifest=None, uniformity=False, bins=64, alpha=0.01,
            code_offset=None, code_scale=None, cycle_length=None, linearity=False,
            jitter_sigma=None, repeats=10000, seed=0, figures=True) -> dict:
    """Decode a bitstream file and write reports; returns the JSON summary."""
    stream = read_bitstream(stream_path)
    train = decode_intervals(stream)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg = make_config(load_config_dict(manifest)) if manifest else None
    widths = train.widths_bits
    summary: dict = {
        "bitstream": str(stream_path),
        "n_bits": stream.n_bits,
        "line_rate_bps": stream.line_rate_bps,
        "frame_width": stream.frame_width,
        "bit_period_s": stream.bit_period_s,
        "pulses": len(train),
        "open_end": train.open_end,
        "checks": {},
    }
    if len(train):
        summary.update(min_interval_s=float(widths.min()) / stream.line_rate_bps,
                       max_interval_s=float(widths.max()) / stream.line_rate_bps,
                       min_interval_bits=int(widths.min()), max_interval_bits=int(widths.max()))
    checks = summary["checks"]
    write_intervals_csv(out_dir / "intervals.csv", train)

    expected = None
    if cfg is not None:
        expected = build_parameters(cfg)
        want = expected_pulse_widths(expected)
        checks["matches_manifest"] = bool(len(want) == len(widths) and np.array_equal(want, widths))

    mapping = code_mapping(cfg) if cfg is not None else None
    if code_offset is not None or code_scale is not None:
        from .sequence import CodeMapping
        base = mapping or CodeMapping()
        mapping = CodeMapping(code_offset if code_offset is not None else base.high_offset,
                              code_scale if code_scale is not None else base.high_scale,
                              base.low_bits, base.total_bits)

    if uniformity:
        if mapping is None:
            raise ConfigError("uniformity", "needs --manifest or --code-offset to recover codes")
        codes = mapping.code_of(widths)
        res = uniformity_test(codes, bins=bins, alpha=alpha)
        summary["uniformity"] = {"chi_square": res.statistic, "critical": res.critical,
                                 "dof": res.dof, "p_value": res.p_value, "alpha": alpha,
                                 "bins": bins, "samples": int(codes.size)}
        checks["uniformity"] = res.passed
        if figures:
            from .plotting import plot_code_histogram
            plot_code_histogram(codes, out_dir / "code_histogram.png", bins=bins)

    if cycle_length:
        cyc = widths[:cycle_length]
        checks["sequence_period"] = sequence_period_check(widths, cyc)
        summary["cycle_bits"] = cyc.tolist()

    if linearity:
        if expected is None:
            raise ConfigError("linearity", "needs --manifest for the requested codes")
        codes = np.fromiter((p.high_bits for p in expected), dtype=np.int64, count=len(expected))
        if len(codes) != len(widths):
            raise CheckFailed("pulse count does not match the manifest")
        # a sweep may revisit codes; average repeats per code
        uniq, inv = np.unique(codes, return_inverse=True)
        mean_w = np.bincount(inv, weights=widths) / np.bincount(inv)
        report = linearity_from_widths(uniq, mean_w, stream.bit_period_s)
        write_linearity_csv(out_dir / "linearity.csv", report)
        summary["linearity"] = {"max_abs_dnl_lsb": report.max_abs_dnl,
                                "max_abs_inl_lsb": report.max_abs_inl,
                                "dnl_range_lsb": [float(report.dnl_lsb.min(initial=0)),
                                                  float(report.dnl_lsb.max(initial=0))],
                                "inl_range_lsb": [float(report.inl_lsb.min(initial=0)),
                                                  float(report.inl_lsb.max(initial=0))],
                                "note": report.note}
        if figures and report.dnl_lsb.size:
            from .plotting import plot_linearity
            plot_linearity(report, out_dir / "linearity.png")

    sigma = jitter_sigma if jitter_sigma is not None else (
        float(parse_time(cfg.jitter_sigma)) if cfg is not None else 0.0)
    if sigma and len(train):
        model = JitterModel(sigma, seed)
        rng = np.random.default_rng(seed)
        jit = {}
        for label, idx in (("min", int(widths.argmin())), ("max", int(widths.argmax()))):
            w = train[idx].width_s
            samples = model.widths(w, repeats, rng)
            mean, std = interval_statistics(samples)
            jit[label] = {"nominal_s": w, "mean_s": mean, "stddev_s": std}
            if figures and label == "min":
                from .plotting import plot_jitter
                plot_jitter(samples, out_dir / "jitter_min.png", nominal_s=w)
        summary["jitter"] = {"sigma_s": sigma, "repeats": repeats, "seed": seed, **jit}

    if figures:
        from .plotting import plot_waveform, plot_widths
        plot_waveform(stream, out_dir / "waveform.png")
        if len(train):
            plot_widths(train, out_dir / "widths.png")

    summary["passed"] = all(checks.values())
    write_summary_json(out_dir / "summary.json", summary)
    return summary


def cmd_analyze(args) -> int:
    out_dir = args.out_dir or str(Path(args.bitstream).with_suffix("")) + "_report"
    try:
        summary = analyze(
            args.bitstream, out_dir, manifest=args.manifest, uniformity=args.uniformity,
            bins=args.bins, alpha=args.alpha, code_offset=args.code_offset,
            code_scale=args.code_scale, cycle_length=args.cycle_length,
            linearity=args.linearity,
            jitter_sigma=float(parse_time(args.jitter_sigma)) if args.jitter_sigma else None,
            repeats=args.repeats, seed=args.seed, figures=not args.no_figures)
    except ConfigError as exc:
        _fail("config", exc.message, exc.field)
        return EXIT_CONFIG
    except BitstreamFormatError as exc:
        _fail("format", str(exc))
        return EXIT_IO
    except (OSError, json.JSONDecodeError) as exc:
        _fail("io", str(exc))
        return EXIT_IO
    except CheckFailed as exc:
        _fail("check", str(exc))
        return EXIT_CHECK
    except ValueError as exc:
        _fail("analysis", str(exc))
        return EXIT_CONFIG
    print(f"{summary['pulses']} pulses; reports in {out_dir}")
    for name, ok in summary["checks"].items():
        print(f"  {name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if summary["passed"] else EXIT_CHECK


# -- selftest ----------------------------------------------------------------

def cmd_selftest(args) -> int:
    from .selftest import run
    result = run(args.cases, args.seed)
    for f in result.failures[:20]:
        print(f)
    print(f"{result.cases - len(result.failures)}/{result.cases} cases match the reference")
    return EXIT_OK if result.ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtcsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="encode timing parameters into a bitstream file")
    s.add_argument("-c", "--config", help="JSON config file or a previous manifest")
    for name, (path, typ) in SYNTH_FLAGS.items():
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                       help=f"overrides {path}")
    s.add_argument("--lut", help="comma-separated interval codes (inline LUT)")
    s.add_argument("--lfsr-seeds", help="comma-separated seeds, one per LFSR")
    s.add_argument("--lfsr-taps", help='JSON object of degree -> taps, e.g. \'{"3": [3, 2]}\'')
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("analyze", help="decode a bitstream file and write reports")
    a.add_argument("bitstream")
    a.add_argument("-o", "--out-dir")
    a.add_argument("--manifest", help="synth manifest giving the requested parameters")
    a.add_argument("--uniformity", action="store_true", help="chi-square test of interval codes")
    a.add_argument("--bins", type=int, default=64)
    a.add_argument("--alpha", type=float, default=0.01)
    a.add_argument("--code-offset", type=int, help="high bits of code 0")
    a.add_argument("--code-scale", type=int, help="high bits per code step")
    a.add_argument("--cycle-length", type=int, help="check that widths repeat with this period")
    a.add_argument("--linearity", action="store_true", help="DNL/INL against manifest codes")
    a.add_argument("--jitter-sigma", help="per-edge Gaussian jitter, e.g. 1.57ps")
    a.add_argument("--repeats", type=int, default=10000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--no-figures", action="store_true")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("selftest", help="randomised encoder-versus-reference check")
    t.add_argument("--cases", type=int, default=1000)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
