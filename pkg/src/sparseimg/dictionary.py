"""Mixed discrete-cosine / B-spline dictionary construction.

The 1D dictionary for a block of side ``L`` concatenates a redundancy-2
cosine dictionary (``2L`` atoms) with three spline sub-dictionaries. Each
spline sub-dictionary is generated by sampling a dilated B-spline prototype
at the integer points inside its support and translating the samples one
position at a time. Translates reaching past the block boundary are cut off
and renormalized, so a prototype with ``s`` nonzero samples contributes
``L + s - 1`` atoms. For ``L = 16`` this gives 86 atoms in the linear
variant and 98 in the cubic one, a redundancy of roughly five.

2D atoms are rank-one tensor products of two 1D atoms and are never stored
densely: the correlation of every 2D atom with an ``L x L`` block ``R`` is
obtained separably as ``U^T R U`` where the columns of ``U`` are the 1D
atoms.

Dictionaries are immutable after construction (atom arrays are marked
read-only) and safe to share across worker threads.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

SUPPORTED_ORDERS = (2, 4)
DILATIONS = (1, 2, 3)

COSINE_FAMILY = "cosine"
SPLINE_FAMILY = "spline"


class DictionaryKind(str, enum.Enum):
    """Identifies which spline family is merged with the cosine atoms."""

    DCT2_LINEAR = "dct2_linear"
    DCT2_CUBIC = "dct2_cubic"

    @property
    def spline_order(self) -> int:
        return 2 if self is DictionaryKind.DCT2_LINEAR else 4

    @property
    def wire_code(self) -> int:
        return 1 if self is DictionaryKind.DCT2_LINEAR else 2

    @classmethod
    def from_wire_code(cls, code: int) -> "DictionaryKind":
        for kind in cls:
            if kind.wire_code == code:
                return kind
        raise ValueError(f"unknown dictionary code {code}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def eval_bspline(m: int, x: float) -> float:
    """Evaluate the cardinal B-spline of order ``m`` at ``x``.

    Uses the truncated-power form
    ``sum_i (-1)^i C(m, i) (x - i)_+^(m-1) / (m-1)!``, which is supported on
    ``(0, m)`` and peaks at ``x = m/2``. Only the linear (``m = 2``, the hat)
    and cubic (``m = 4``) orders are supported.
    """
    if m not in SUPPORTED_ORDERS:
        raise ValueError(
            f"unsupported spline order {m}: supported orders are 2 (linear) and 4 (cubic)"
        )
    if not math.isfinite(x):
        raise ValueError(f"spline argument must be finite, got {x}")
    if x <= 0.0 or x >= m:
        return 0.0
    acc = 0.0
    for i in range(m + 1):
        t = x - i
        if t > 0.0:
            acc += (-1) ** i * math.comb(m, i) * t ** (m - 1)
    return acc / math.factorial(m - 1)


@dataclass(frozen=True)
class Prototype:
    """Nonzero integer-point samples of a dilated B-spline.

    ``values[k]`` is the spline of order ``order`` evaluated at
    ``(k + 1) / dilation``; the samples are symmetric, strictly positive and
    ``m * dilation - 1`` of them are nonzero.
    """

    values: np.ndarray
    order: int
    dilation: int

    @property
    def support(self) -> int:
        return len(self.values)


def sample_prototype(m: int, dilation: int) -> Prototype:
    """Sample ``x -> B_m(x / dilation)`` at the integer points of its support.

    ``dilation`` must be 1, 2 or 3; each family uses exactly these three
    dilations, which produce supports 1/3/5 (linear) and 3/7/11 (cubic).
    """
    if m not in SUPPORTED_ORDERS:
        raise ValueError(
            f"unsupported spline order {m}: supported orders are 2 (linear) and 4 (cubic)"
        )
    if dilation not in DILATIONS:
        raise ValueError(
            f"unsupported dilation {dilation}: each spline family uses dilations {DILATIONS}"
        )
    values = np.array(
        [eval_bspline(m, k / dilation) for k in range(1, m * dilation)], dtype=np.float64
    )
    return Prototype(values=_readonly(values), order=m, dilation=dilation)


@dataclass(frozen=True)
class Atom1D:
    """A unit-norm length-``L`` dictionary vector.

    ``sub_dict`` is 0 for cosine atoms and the prototype support for spline
    atoms; ``label`` indexes the atom inside its sub-dictionary. Spline atoms
    are exactly zero outside ``[support_start, support_start + support_len)``.
    """

    values: np.ndarray
    support_start: int
    support_len: int
    family: str
    sub_dict: int
    label: int


def build_spline_subdict(proto: Prototype, L: int) -> list[Atom1D]:
    """Translate ``proto`` one sample at a time across a length-``L`` block.

    Every translate whose nonzero samples intersect the block is kept; samples
    falling outside are cut off and the remainder is renormalized to unit
    norm. The result has ``L + support - 1`` atoms ordered by increasing
    translation.
    """
    s = proto.support
    if L < s:
        raise ValueError(f"block length {L} is smaller than the prototype support {s}")
    atoms = []
    for label, t in enumerate(range(1 - s, L)):
        lo, hi = max(0, t), min(L, t + s)
        vals = np.zeros(L, dtype=np.float64)
        vals[lo:hi] = proto.values[lo - t : hi - t]
        vals /= np.linalg.norm(vals)
        atoms.append(
            Atom1D(
                values=_readonly(vals),
                support_start=lo,
                support_len=hi - lo,
                family=SPLINE_FAMILY,
                sub_dict=s,
                label=label,
            )
        )
    return atoms


def build_cosine_dict(L: int, M: int) -> list[Atom1D]:
    """Build the redundancy-2 cosine dictionary of ``M = 2L`` dense atoms.

    Atom ``i`` (0-based) has entries ``cos(pi * (2j - 1) * i / (4L))`` for
    ``j = 1..L``, rescaled to unit Euclidean norm; atom 0 is the constant
    vector. The odd-frequency half coincides with the orthonormal DCT-II
    basis.
    """
    if L < 1:
        raise ValueError(f"block length must be positive, got {L}")
    if M != 2 * L:
        raise ValueError(f"cosine dictionary has redundancy 2: expected M = {2 * L}, got {M}")
    j = np.arange(1, L + 1, dtype=np.float64)
    atoms = []
    for idx in range(M):
        vals = np.cos(np.pi * (2.0 * j - 1.0) * idx / (4.0 * L))
        vals /= np.linalg.norm(vals)
        atoms.append(
            Atom1D(
                values=_readonly(vals),
                support_start=0,
                support_len=L,
                family=COSINE_FAMILY,
                sub_dict=0,
                label=idx,
            )
        )
    return atoms


@dataclass(frozen=True)
class Dictionary1D:
    """Ordered 1D dictionary: cosine atoms first, then spline sub-dictionaries
    by increasing support, each by increasing translation.

    ``matrix`` stacks the atoms column-wise (``L x n_atoms``) for separable
    correlation.
    """

    kind: DictionaryKind
    block_len: int
    atoms: tuple[Atom1D, ...]
    matrix: np.ndarray

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def redundancy(self) -> float:
        return len(self.atoms) / self.block_len


def assemble_dictionary(kind: DictionaryKind, L: int) -> Dictionary1D:
    """Assemble the full 1D dictionary for ``kind`` at block length ``L``."""
    kind = DictionaryKind(kind)
    m = kind.spline_order
    atoms = build_cosine_dict(L, 2 * L)
    for dilation in DILATIONS:
        atoms.extend(build_spline_subdict(sample_prototype(m, dilation), L))
    matrix = _readonly(np.column_stack([a.values for a in atoms]))
    return Dictionary1D(kind=kind, block_len=L, atoms=tuple(atoms), matrix=matrix)


class Dictionary2D:
    """Separable 2D dictionary over the tensor square of a 1D dictionary.

    The 2D atom at address ``(i, j)`` is the outer product ``u_i v_j^T`` of
    two 1D atoms; it has unit Frobenius norm. Atoms are addressed either by
    the pair ``(i, j)`` or by the row-major flat index ``i * n + j``.
    """

    def __init__(self, base: Dictionary1D):
        self.base = base

    @property
    def n_base(self) -> int:
        return len(self.base)

    @property
    def n_atoms(self) -> int:
        return len(self.base) ** 2

    @property
    def dim(self) -> int:
        return self.base.block_len**2

    @property
    def signal_shape(self) -> tuple[int, int]:
        L = self.base.block_len
        return (L, L)

    def flat_index(self, address: tuple[int, int]) -> int:
        i, j = address
        n = self.n_base
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"atom address {address} out of range for {n} base atoms")
        return i * n + j

    def address_of(self, flat: int) -> tuple[int, int]:
        i, j = divmod(int(flat), self.n_base)
        return (i, j)

    def atom_matrix(self, i: int, j: int) -> np.ndarray:
        U = self.base.matrix
        return np.outer(U[:, i], U[:, j])

    def atom_flat(self, flat: int) -> np.ndarray:
        i, j = self.address_of(flat)
        return self.atom_matrix(i, j).ravel()

    def correlate(self, block: np.ndarray) -> np.ndarray:
        """Inner products of every 2D atom with ``block``, as an ``n x n`` array.

        Entry ``(i, j)`` equals ``u_i^T block v_j``; the row-major flattening
        of the result matches :meth:`flat_index`.
        """
        block = np.asarray(block, dtype=np.float64)
        if block.shape != self.signal_shape:
            raise ValueError(f"expected a {self.signal_shape} block, got {block.shape}")
        U = self.base.matrix
        return U.T @ block @ U

    def reconstruct(self, entries: Iterable[tuple[tuple[int, int], float]]) -> np.ndarray:
        """Sum of ``coeff * u_i v_j^T`` over ``((i, j), coeff)`` entries."""
        out = np.zeros(self.signal_shape)
        U = self.base.matrix
        for (i, j), coeff in entries:
            out += coeff * np.outer(U[:, i], U[:, j])
        return out


def correlate_all(dict2d: Dictionary2D, block: np.ndarray) -> np.ndarray:
    """Separable correlation of ``block`` against every 2D atom."""
    return dict2d.correlate(block)


class MatrixDictionary:
    """Plain column dictionary over 1D signals, mainly for small problems.

    Exposes the same correlate/atom/reconstruct surface as
    :class:`Dictionary2D`, with integer atom addresses.
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("expected a (dim, n_atoms) matrix of atom columns")
        self.matrix = matrix

    @property
    def n_atoms(self) -> int:
        return self.matrix.shape[1]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def signal_shape(self) -> tuple[int]:
        return (self.dim,)

    def flat_index(self, address: int) -> int:
        idx = int(address)
        if not 0 <= idx < self.n_atoms:
            raise IndexError(f"atom index {address} out of range for {self.n_atoms} atoms")
        return idx

    def address_of(self, flat: int) -> int:
        return int(flat)

    def atom_flat(self, flat: int) -> np.ndarray:
        return self.matrix[:, int(flat)].copy()

    def correlate(self, residual: np.ndarray) -> np.ndarray:
        residual = np.asarray(residual, dtype=np.float64)
        if residual.shape != self.signal_shape:
            raise ValueError(f"expected a {self.signal_shape} signal, got {residual.shape}")
        return self.matrix.T @ residual

    def reconstruct(self, entries: Iterable[tuple[int, float]]) -> np.ndarray:
        out = np.zeros(self.dim)
        for idx, coeff in entries:
            out += coeff * self.matrix[:, int(idx)]
        return out


DUMP_COLUMNS = ("family", "sub_dict", "label", "support_start", "support_len")


def dump_csv(dictionary: Dictionary1D, stream: TextIO) -> None:
    """Write the atom table as CSV (one row per atom, values in shortest repr)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DUMP_COLUMNS + tuple(f"v{k}" for k in range(dictionary.block_len)))
    for atom in dictionary.atoms:
        writer.writerow(
            [atom.family, atom.sub_dict, atom.label, atom.support_start, atom.support_len]
            + [repr(float(v)) for v in atom.values]
        )
