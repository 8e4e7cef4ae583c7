"""Block image codec driving the pursuit to a global PSNR target.

The image is split into ``L x L`` blocks (dimensions must divide evenly) and
every block is approximated independently until its residual sum of squares
falls below a uniform per-block threshold derived from the PSNR target; if
every block meets the threshold, the whole image meets the target. Blocks
are independent, so they can be encoded by a thread pool without changing
the result.

Container format (".sic", little-endian)::

    magic     4s   b"SIC1"
    version   u16  1
    width     u32
    height    u32
    block     u16  block side L
    dict      u8   dictionary wire code
    n_base    u32  1D atom count (addresses are i * n_base + j)
    target    f64  PSNR target in dB
    blocks    row-major; per block: u16 entry count,
              then entries of (u32 flat address, f64 coefficient)

Coefficients are stored unquantized; the reported compression ratio is the
pure sparsity ratio pixels / retained atoms.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dictionary import Dictionary2D, DictionaryKind
from .pursuit import PursuitExhaustedError, SparseBlock, StoppingRule, run_omp

MAGIC = b"SIC1"
VERSION = 1
_HEADER = struct.Struct("<4sHIIHBId")
_COUNT = struct.Struct("<H")
_ENTRY = struct.Struct("<Id")

PEAK = 255.0


class ContainerError(ValueError):
    """Malformed .sic payload; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class DictionaryMismatchError(ValueError):
    """Container header does not match the dictionary supplied for decoding."""


@dataclass(frozen=True)
class ImageGray8:
    """8-bit grayscale image with row-major pixels."""

    width: int
    height: int
    pixels: np.ndarray

    @classmethod
    def from_array(cls, a: np.ndarray) -> "ImageGray8":
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError(f"expected a 2D grayscale array, got shape {a.shape}")
        if a.dtype != np.uint8:
            if np.issubdtype(a.dtype, np.integer) and a.min() >= 0 and a.max() <= 255:
                a = a.astype(np.uint8)
            else:
                raise ValueError(f"expected 8-bit pixels, got dtype {a.dtype}")
        return cls(width=a.shape[1], height=a.shape[0], pixels=a)

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)


def read_pgm(path) -> ImageGray8:
    """Read a binary (P5) PGM file with maxval 255."""
    data = Path(path).read_bytes()
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file, magic {magic!r}")
    width, height, maxval = (int(token()) for _ in range(3))
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported, maxval {maxval}")
    pos += 1  # single whitespace after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: raster truncated ({len(raster)} of {width * height} bytes)")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()
    return ImageGray8(width=width, height=height, pixels=pixels)


def write_pgm(path, image) -> None:
    """Write ``image`` (ImageGray8 or uint8 array) as binary PGM."""
    if isinstance(image, ImageGray8):
        pixels = image.pixels
    else:
        pixels = np.asarray(image, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(pixels.tobytes())


def clamp_to_u8(image: np.ndarray) -> np.ndarray:
    """Round and clip a real-valued image to 8-bit pixels."""
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


def psnr(original, approx) -> float:
    """Peak signal-to-noise ratio in dB against a peak of 255."""
    a = original.as_float() if isinstance(original, ImageGray8) else np.asarray(original, float)
    b = approx.as_float() if isinstance(approx, ImageGray8) else np.asarray(approx, float)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def psnr_to_block_sse(target_db: float, L: int) -> float:
    """Per-block residual SSE guaranteeing an image PSNR of ``target_db``.

    The image MSE is the mean of the block MSEs, so capping every block's SSE
    at ``L^2 * 255^2 * 10^(-target/10)`` caps the image MSE at the target
    level.
    """
    if not target_db > 0:
        raise ValueError(f"PSNR target must be positive, got {target_db}")
    return L * L * PEAK**2 * 10.0 ** (-target_db / 10.0)


@dataclass
class EncodedImage:
    """Header plus row-major per-block sparse expansions."""

    width: int
    height: int
    block_size: int
    kind: DictionaryKind
    n_base: int
    target_psnr: float
    blocks: list[SparseBlock] = field(default_factory=list)

    @property
    def grid(self) -> tuple[int, int]:
        return (self.height // self.block_size, self.width // self.block_size)


@dataclass
class SparsityReport:
    """Sparsity accounting for one encoded image."""

    image: str
    dictionary: str
    total_atoms: int
    pixel_count: int
    target_psnr: float
    achieved_psnr: float
    block_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def compression_ratio(self) -> float:
        if self.total_atoms == 0:
            return math.inf
        return self.pixel_count / self.total_atoms


REPORT_COLUMNS = ("image", "dictionary", "atoms", "cr", "psnr_target", "psnr_achieved")


def report_row(report: SparsityReport) -> list[str]:
    return [
        report.image,
        report.dictionary,
        str(report.total_atoms),
        repr(round(report.compression_ratio, 6)),
        repr(float(report.target_psnr)),
        repr(round(report.achieved_psnr, 6)),
    ]


def append_report(path, report: SparsityReport) -> None:
    """Append one CSV row, creating the file with a header when needed."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if fresh:
            writer.writerow(REPORT_COLUMNS)
        writer.writerow(report_row(report))


def read_report(path) -> list[dict[str, str]]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        if row.get("image") is None or row.get("cr") is None:
            raise ValueError(f"{path}: not a sparsity report CSV")
    return rows


def _iter_blocks(shape: tuple[int, int], L: int):
    for by in range(shape[0] // L):
        for bx in range(shape[1] // L):
            yield by, bx


def encode(
    img: ImageGray8,
    dict2d: Dictionary2D,
    target_db: float,
    *,
    image_name: str = "",
    workers: int = 1,
    trace: list | None = None,
) -> tuple[EncodedImage, SparsityReport]:
    """Approximate every block of ``img`` to the per-block SSE threshold.

    Returns the encoded image and its sparsity report. With ``workers > 1``
    blocks are encoded by a thread pool; results are identical to the
    sequential run because blocks do not interact. ``trace`` collects
    ``(block_index, k, i, j, abs_corr, sse)`` rows across blocks.
    """
    L = dict2d.base.block_len
    if img.width % L or img.height % L:
        raise ValueError(
            f"image {img.width}x{img.height} is not divisible into {L}x{L} blocks"
        )
    threshold = psnr_to_block_sse(target_db, L)
    rule = StoppingRule(mode="both", sse_threshold=threshold, atom_cap=L * L)
    data = img.as_float()
    grid = list(_iter_blocks(data.shape, L))

    def encode_block(pos):
        by, bx = pos
        block = data[by * L : (by + 1) * L, bx * L : (bx + 1) * L]
        rows: list | None = [] if trace is not None else None
        try:
            sparse, residual_norm = run_omp(block, dict2d, rule, trace=rows)
        except PursuitExhaustedError as exc:
            raise PursuitExhaustedError(f"block ({by}, {bx}): {exc}") from exc
        return sparse, residual_norm, rows

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(encode_block, grid))
    else:
        results = [encode_block(pos) for pos in grid]

    enc = EncodedImage(
        width=img.width,
        height=img.height,
        block_size=L,
        kind=dict2d.base.kind,
        n_base=dict2d.n_base,
        target_psnr=float(target_db),
        blocks=[sparse for sparse, _, _ in results],
    )
    if trace is not None:
        for index, (_, _, rows) in enumerate(results):
            for k, (i, j), corr, sse in rows:
                trace.append((index, k, i, j, corr, sse))

    total_sse = sum(norm**2 for _, norm, _ in results)
    mse = total_sse / (img.width * img.height)
    achieved = math.inf if mse == 0.0 else 10.0 * math.log10(PEAK**2 / mse)
    report = SparsityReport(
        image=image_name,
        dictionary=dict2d.base.kind.value,
        total_atoms=sum(len(sparse) for sparse, _, _ in results),
        pixel_count=img.width * img.height,
        target_psnr=float(target_db),
        achieved_psnr=achieved,
        block_histogram=dict(Counter(len(sparse) for sparse, _, _ in results)),
    )
    return enc, report


def decode(enc: EncodedImage, dict2d: Dictionary2D) -> np.ndarray:
    """Superpose every block's atoms; returns a real-valued image.

    Use :func:`clamp_to_u8` for an 8-bit export; PSNR is evaluated on the
    real-valued output.
    """
    if enc.kind is not dict2d.base.kind:
        raise DictionaryMismatchError(
            f"container was encoded with {enc.kind.value}, got {dict2d.base.kind.value}"
        )
    if enc.n_base != dict2d.n_base or enc.block_size != dict2d.base.block_len:
        raise DictionaryMismatchError(
            f"container expects {enc.n_base} base atoms at block {enc.block_size}, "
            f"dictionary has {dict2d.n_base} at block {dict2d.base.block_len}"
        )
    L = enc.block_size
    out = np.zeros((enc.height, enc.width))
    for (by, bx), sparse in zip(_iter_blocks((enc.height, enc.width), L), enc.blocks):
        out[by * L : (by + 1) * L, bx * L : (bx + 1) * L] = dict2d.reconstruct(sparse.entries)
    return out


def serialize(enc: EncodedImage) -> bytes:
    buf = io.BytesIO()
    buf.write(
        _HEADER.pack(
            MAGIC,
            VERSION,
            enc.width,
            enc.height,
            enc.block_size,
            enc.kind.wire_code,
            enc.n_base,
            enc.target_psnr,
        )
    )
    for sparse in enc.blocks:
        buf.write(_COUNT.pack(len(sparse.entries)))
        for (i, j), coeff in sparse.entries:
            buf.write(_ENTRY.pack(i * enc.n_base + j, coeff))
    return buf.getvalue()


def deserialize(data: bytes) -> EncodedImage:
    if len(data) < _HEADER.size:
        raise ContainerError("header truncated", len(data))
    magic, version, width, height, block, code, n_base, target = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ContainerError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}", 4)
    kind = DictionaryKind.from_wire_code(code)
    if block == 0 or width % block or height % block:
        raise ContainerError(f"block size {block} does not tile {width}x{height}", 14)
    n_blocks = (width // block) * (height // block)

    pos = _HEADER.size
    blocks = []
    for _ in range(n_blocks):
        if pos + _COUNT.size > len(data):
            raise ContainerError("block count truncated", pos)
        (count,) = _COUNT.unpack_from(data, pos)
        pos += _COUNT.size
        entries = []
        for _ in range(count):
            if pos + _ENTRY.size > len(data):
                raise ContainerError("entry truncated", pos)
            flat, coeff = _ENTRY.unpack_from(data, pos)
            pos += _ENTRY.size
            if flat >= n_base * n_base:
                raise ContainerError(f"atom address {flat} out of range", pos - _ENTRY.size)
            entries.append(((flat // n_base, flat % n_base), coeff))
        blocks.append(SparseBlock(entries=entries))
    if pos != len(data):
        raise ContainerError(f"{len(data) - pos} trailing bytes", pos)
    return EncodedImage(
        width=width,
        height=height,
        block_size=block,
        kind=kind,
        n_base=n_base,
        target_psnr=target,
        blocks=blocks,
    )


def write_sic(path, enc: EncodedImage) -> None:
    Path(path).write_bytes(serialize(enc))


def read_sic(path) -> EncodedImage:
    return deserialize(Path(path).read_bytes())
