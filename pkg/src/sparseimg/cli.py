"""Command-line front end: encode, decode, and report tabulation.

Exit codes: 0 success, 1 usage/configuration error, 2 I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

from . import baselines, codec
from .dictionary import Dictionary2D, DictionaryKind, assemble_dictionary
from .pursuit import PursuitExhaustedError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

OMP_METHODS = {
    "omp_linear": DictionaryKind.DCT2_LINEAR,
    "omp_cubic": DictionaryKind.DCT2_CUBIC,
}
METHODS = ("omp_linear", "omp_cubic", "dct", "cdf97")

# Maximum 1D atom support per spline family; the block must be able to hold
# the widest untruncated atom.
MAX_SUPPORT = {DictionaryKind.DCT2_LINEAR: 5, DictionaryKind.DCT2_CUBIC: 11}

# Published reference compression ratios at PSNR 40 dB for the classic
# 512x512 grayscale test set, per method column. "film" has no public
# source image and is informational only.
REFERENCE_CR_40DB = {
    "boat": {"omp_linear": 7.05, "omp_cubic": 6.89, "dct": 3.63, "cdf97": 3.65},
    "bridge": {"omp_linear": 4.24, "omp_cubic": 3.97, "dct": 2.06, "cdf97": 2.2},
    "film": {"omp_linear": 9.72, "omp_cubic": 9.26, "dct": 4.53, "cdf97": 4.8},
    "lena": {"omp_linear": 11.78, "omp_cubic": 11.7, "dct": 6.5, "cdf97": 6.97},
    "mandril": {"omp_linear": 3.72, "omp_cubic": 3.5, "dct": 1.91, "cdf97": 1.9},
    "peppers": {"omp_linear": 8.9, "omp_cubic": 8.62, "dct": 4.36, "cdf97": 3.39},
}
_REFERENCE_ALIASES = {"mandrill": "mandril", "baboon": "mandril"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunConfig:
    """Validated encode configuration."""

    inputs: list[Path]
    method: str
    block_size: int = 16
    target_psnr: float = 40.0
    levels: int = 5
    out_dir: Path | None = None
    report: Path | None = None
    workers: int = 1
    trace: bool = False

    def validate(self) -> None:
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}, choose from {METHODS}")
        if not self.target_psnr > 0:
            raise UsageError(f"--psnr must be positive, got {self.target_psnr}")
        if self.block_size < 1:
            raise UsageError(f"--block must be positive, got {self.block_size}")
        kind = OMP_METHODS.get(self.method)
        if kind is not None and self.block_size < MAX_SUPPORT[kind]:
            raise UsageError(
                f"block size {self.block_size} is smaller than the widest "
                f"{self.method} atom support ({MAX_SUPPORT[kind]})"
            )
        if self.workers < 1:
            raise UsageError(f"--workers must be >= 1, got {self.workers}")
        if self.levels < 1:
            raise UsageError(f"--levels must be >= 1, got {self.levels}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparseimg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode PGM images, append sparsity report rows")
    enc.add_argument("inputs", nargs="+", help="binary PGM (P5) input images")
    enc.add_argument("--method", choices=METHODS, default="omp_linear")
    enc.add_argument("--block", type=int, default=16, help="block side (default 16)")
    enc.add_argument("--psnr", type=float, default=40.0, help="PSNR target in dB (default 40)")
    enc.add_argument("--levels", type=int, default=5, help="wavelet decomposition levels")
    enc.add_argument("--workers", type=int, default=1, help="encoder thread count")
    enc.add_argument("--trace", action="store_true", help="write per-iteration pursuit traces")
    enc.add_argument("--out", help="output directory for .sic files (default: input's)")
    enc.add_argument("--report", help="sparsity report CSV to append to")

    dec = sub.add_parser("decode", help="decode a .sic container to PGM")
    dec.add_argument("container", help=".sic input")
    dec.add_argument("--out", help="output PGM path (default: container with .pgm suffix)")
    dec.add_argument("--orig", help="original PGM; prints the achieved PSNR when given")

    tab = sub.add_parser("table", help="merge sparsity reports into one CR table")
    tab.add_argument("reports", nargs="+", help="report CSVs produced by encode")
    tab.add_argument("--csv", help="also write the merged table as CSV")
    tab.add_argument(
        "--reference",
        action="store_true",
        help="compare against the published 40 dB reference ratios",
    )
    return parser


def _encode_one_omp(path: Path, config: RunConfig, dict2d: Dictionary2D):
    img = codec.read_pgm(path)
    trace_rows: list | None = [] if config.trace else None
    enc, report = codec.encode(
        img,
        dict2d,
        config.target_psnr,
        image_name=path.stem,
        workers=config.workers,
        trace=trace_rows,
    )
    out_dir = config.out_dir if config.out_dir is not None else path.parent
    out_path = out_dir / (path.stem + ".sic")
    codec.write_sic(out_path, enc)
    if trace_rows is not None:
        trace_path = out_dir / (path.stem + ".trace.csv")
        with open(trace_path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("block", "k", "i", "j", "abs_corr", "sse"))
            writer.writerows(trace_rows)
    return report, out_path


def _encode_one_baseline(path: Path, config: RunConfig):
    img = codec.read_pgm(path)
    data = img.as_float()
    if config.method == "dct":
        coeffs = baselines.dct2_block_forward(data, config.block_size)
    else:
        coeffs = baselines.cdf97_forward(data, config.levels)
    kept, achieved = baselines.threshold_to_psnr(coeffs, data, config.target_psnr)
    report = codec.SparsityReport(
        image=path.stem,
        dictionary=config.method,
        total_atoms=kept,
        pixel_count=img.width * img.height,
        target_psnr=config.target_psnr,
        achieved_psnr=achieved,
    )
    return report, None


def cmd_encode(config: RunConfig) -> int:
    config.validate()
    dict2d = None
    kind = OMP_METHODS.get(config.method)
    if kind is not None:
        dict2d = Dictionary2D(assemble_dictionary(kind, config.block_size))
    for path in config.inputs:
        try:
            if dict2d is not None:
                report, out_path = _encode_one_omp(path, config, dict2d)
            else:
                report, out_path = _encode_one_baseline(path, config)
        except (OSError, ValueError) as exc:
            print(f"sparseimg: {path}: {exc}", file=sys.stderr)
            return EXIT_IO
        except PursuitExhaustedError as exc:
            print(f"sparseimg: {path}: pursuit exhausted: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        if config.report is not None:
            codec.append_report(config.report, report)
        made = f" -> {out_path}" if out_path is not None else ""
        print(
            f"{path}: {config.method} atoms={report.total_atoms} "
            f"CR={report.compression_ratio:.2f} psnr={report.achieved_psnr:.2f}{made}"
        )
    return EXIT_OK


def cmd_decode(args) -> int:
    container = Path(args.container)
    try:
        enc = codec.read_sic(container)
    except (OSError, ValueError) as exc:
        print(f"sparseimg: {container}: {exc}", file=sys.stderr)
        return EXIT_IO
    dict2d = Dictionary2D(assemble_dictionary(enc.kind, enc.block_size))
    image = codec.decode(enc, dict2d)
    out_path = Path(args.out) if args.out else container.with_suffix(".pgm")
    try:
        codec.write_pgm(out_path, codec.clamp_to_u8(image))
    except OSError as exc:
        print(f"sparseimg: {out_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{container} -> {out_path} ({enc.width}x{enc.height}, {enc.kind.value})")
    if args.orig:
        try:
            original = codec.read_pgm(args.orig)
        except (OSError, ValueError) as exc:
            print(f"sparseimg: {args.orig}: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"psnr={codec.psnr(original, image):.2f}")
    return EXIT_OK


def _merge_reports(paths) -> tuple[list[str], dict[str, dict[str, float]], float]:
    images: list[str] = []
    table: dict[str, dict[str, float]] = {}
    target: float | None = None
    for path in paths:
        for row in codec.read_report(path):
            row_target = float(row["psnr_target"])
            if target is None:
                target = row_target
            elif row_target != target:
                raise UsageError(
                    f"{path}: PSNR target {row_target} differs from {target}; "
                    "reports must share one target"
                )
            name = row["image"]
            if name not in table:
                images.append(name)
                table[name] = {}
            table[name][_method_name(row["dictionary"])] = float(row["cr"])
    return images, table, target if target is not None else 0.0


def _method_name(dictionary: str) -> str:
    if dictionary == DictionaryKind.DCT2_LINEAR.value:
        return "omp_linear"
    if dictionary == DictionaryKind.DCT2_CUBIC.value:
        return "omp_cubic"
    return dictionary


def cmd_table(args) -> int:
    try:
        images, table, target = _merge_reports(args.reports)
    except UsageError as exc:
        print(f"sparseimg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"sparseimg: {exc}", file=sys.stderr)
        return EXIT_IO

    methods = [m for m in METHODS if any(m in row for row in table.values())]
    width = max([len("image")] + [len(name) for name in images])
    header = ["image".ljust(width)] + [m.rjust(10) for m in methods]
    print(f"compression ratios at PSNR {target:g} dB")
    print("  ".join(header))
    for name in images:
        cells = [name.ljust(width)]
        for m in methods:
            value = table[name].get(m)
            cells.append(("-" if value is None else f"{value:.2f}").rjust(10))
        print("  ".join(cells))

    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["image"] + methods)
            for name in images:
                writer.writerow(
                    [name] + [repr(table[name][m]) if m in table[name] else "" for m in methods]
                )

    if args.reference:
        print("\nmeasured / reference at 40 dB")
        for name in images:
            key = _REFERENCE_ALIASES.get(name.lower(), name.lower())
            ref_row = REFERENCE_CR_40DB.get(key)
            if ref_row is None:
                continue
            cells = [name.ljust(width)]
            for m in methods:
                measured, ref = table[name].get(m), ref_row.get(m)
                cells.append(
                    ("-" if measured is None or ref is None else f"{measured / ref:.3f}").rjust(10)
                )
            print("  ".join(cells))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "encode":
            config = RunConfig(
                inputs=[Path(p) for p in args.inputs],
                method=args.method,
                block_size=args.block,
                target_psnr=args.psnr,
                levels=args.levels,
                out_dir=Path(args.out) if args.out else None,
                report=Path(args.report) if args.report else None,
                workers=args.workers,
                trace=args.trace,
            )
            return cmd_encode(config)
        if args.command == "decode":
            return cmd_decode(args)
        return cmd_table(args)
    except UsageError as exc:
        print(f"sparseimg: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
