"""Orthogonal Matching Pursuit over a separable (or plain) dictionary.

Each iteration selects the atom with the largest absolute correlation
against the current residual, orthogonalizes it against the span of the
previously selected atoms by Gram-Schmidt with a single re-orthogonalization
pass, and maintains a set of biorthogonal dual vectors so that the expansion
coefficients are plain inner products of the duals with the signal. The
residual is always the orthogonal-projection error onto the selected span.

Two projector factorizations are kept side by side: the orthonormal basis
``Q`` (numerical bookkeeping) and the selected-atom / dual-vector pair
``A, B`` (coefficient recovery via ``c_i = <b_i, f>``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative threshold under which a candidate atom is declared linearly
# dependent on the selected span and masked out. Redundant dictionaries make
# such collisions routine, so dependence is not an error.
DEP_TOL = 1e-9

STOP_MODES = ("target_sse", "max_atoms", "both")


class PursuitExhaustedError(RuntimeError):
    """Every dictionary atom is masked but the stopping rule is not satisfied."""


@dataclass(frozen=True)
class StoppingRule:
    """When to stop the pursuit.

    ``target_sse`` stops once the residual sum of squares drops to
    ``sse_threshold``; ``max_atoms`` stops after ``atom_cap`` accepted atoms;
    ``both`` stops at whichever comes first. The cap can never usefully
    exceed the signal dimension.
    """

    mode: str = "both"
    sse_threshold: float = 0.0
    atom_cap: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in STOP_MODES:
            raise ValueError(f"stopping mode must be one of {STOP_MODES}, got {self.mode!r}")
        if not self.sse_threshold >= 0.0:
            raise ValueError(f"sse_threshold must be nonnegative, got {self.sse_threshold}")
        if self.atom_cap is not None and self.atom_cap < 0:
            raise ValueError(f"atom_cap must be nonnegative, got {self.atom_cap}")
        if self.mode in ("max_atoms", "both") and self.atom_cap is None:
            raise ValueError(f"mode {self.mode!r} requires atom_cap")


@dataclass
class SparseBlock:
    """Sparse expansion of one signal: ``((address, coefficient), ...)``.

    Addresses are ``(i, j)`` pairs for separable 2D dictionaries and plain
    integers for matrix dictionaries; they are unique within a block.
    """

    entries: list[tuple[object, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


class PursuitState:
    """Mutable state of one pursuit run.

    Attributes
    ----------
    residual : ndarray
        Current projection error, shaped like the input signal.
    selected : list
        Accepted atom addresses, in selection order.
    masked : set[int]
        Flat indices excluded from selection (linearly dependent atoms).
    k : int
        Number of accepted atoms.
    """

    def __init__(self, signal: np.ndarray, capacity: int):
        signal = np.asarray(signal, dtype=np.float64)
        self.shape = signal.shape
        self.target = signal.ravel().copy()
        dim = self.target.size
        capacity = min(int(capacity), dim)
        self.k = 0
        self.selected: list = []
        self.selected_flat: set[int] = set()
        self.masked: set[int] = set()
        self._residual = self.target.copy()
        # Column stores: orthonormal basis, biorthogonal duals, raw atoms.
        self.Q = np.zeros((dim, capacity))
        self.B = np.zeros((dim, capacity))
        self.A = np.zeros((dim, capacity))
        self._coeffs = np.zeros(capacity)

    @property
    def dim(self) -> int:
        return self.target.size

    @property
    def residual(self) -> np.ndarray:
        return self._residual.reshape(self.shape)

    @property
    def residual_sse(self) -> float:
        return float(self._residual @ self._residual)

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeffs[: self.k].copy()

    @property
    def orthonormal_basis(self) -> np.ndarray:
        return self.Q[:, : self.k]

    @property
    def dual_basis(self) -> np.ndarray:
        return self.B[:, : self.k]


def _argmax_correlation(corr: np.ndarray, excluded: set[int]) -> tuple[int, float]:
    """Flat index of the non-excluded maximum of ``|corr|``; ties go to the
    smallest row-major index. Returns ``(-1, 0.0)`` if everything is excluded."""
    mag = np.abs(corr, dtype=np.float64).ravel()
    if excluded:
        mag[list(excluded)] = -1.0
    flat = int(np.argmax(mag))
    value = float(mag[flat])
    if value < 0.0:
        return -1, 0.0
    return flat, value


def select_atom(state: PursuitState, dictionary) -> object:
    """Address of the candidate atom maximizing ``|<atom, residual>|``.

    Masked atoms and already-accepted atoms are excluded. Raises
    :class:`PursuitExhaustedError` when no candidate remains. With an
    all-zero residual the correlation maximum is zero and the tie rule picks
    the smallest address.
    """
    corr = dictionary.correlate(state.residual)
    flat, _ = _argmax_correlation(corr, state.masked | state.selected_flat)
    if flat < 0:
        raise PursuitExhaustedError("all dictionary atoms are masked")
    return dictionary.address_of(flat)


def orthogonalize_and_update(state: PursuitState, dictionary, address) -> PursuitState:
    """Accept ``address`` into the selected set and refresh the expansion.

    The new atom is orthogonalized against the selected span (Gram-Schmidt
    plus exactly one re-orthogonalization pass). If the orthogonal remainder
    is below ``DEP_TOL`` relative to the atom norm the atom is masked and the
    state is otherwise untouched. On acceptance the dual vectors, the
    coefficients ``c_i = <b_i, f>`` and the residual ``f - A c`` are updated.
    """
    if address in state.selected:
        raise ValueError(f"atom {address} was already selected")
    flat = dictionary.flat_index(address)
    v = dictionary.atom_flat(flat)
    k = state.k
    if k >= state.Q.shape[1]:
        raise ValueError(f"pursuit state is full ({k} atoms)")

    q = v.copy()
    if k:
        Q = state.Q[:, :k]
        q -= Q @ (Q.T @ q)
        q -= Q @ (Q.T @ q)  # one re-orthogonalization pass
    norm_q = float(np.linalg.norm(q))
    if norm_q < DEP_TOL * float(np.linalg.norm(v)):
        state.masked.add(flat)
        return state

    dual = q / norm_q**2
    if k:
        overlaps = state.B[:, :k].T @ v
        state.B[:, :k] -= np.outer(dual, overlaps)
    state.B[:, k] = dual
    state.Q[:, k] = q / norm_q
    state.A[:, k] = v
    state.selected.append(address)
    state.selected_flat.add(flat)
    state.k = k + 1
    state._coeffs[: state.k] = state.B[:, : state.k].T @ state.target
    state._residual = state.target - state.A[:, : state.k] @ state._coeffs[: state.k]
    return state


def run_omp(
    signal: np.ndarray,
    dictionary,
    rule: StoppingRule,
    trace: list | None = None,
) -> tuple[SparseBlock, float]:
    """Greedy pursuit of ``signal`` until the stopping rule fires.

    Returns the sparse expansion and the Euclidean norm of the final
    residual. When ``trace`` is a list, one ``(k, address, abs_corr, sse)``
    tuple is appended per accepted atom.

    Raises :class:`PursuitExhaustedError` only if every atom gets masked
    while the threshold is still unmet and the cap unreached. A selection
    maximum of exactly zero stops the pursuit instead, since no further
    progress is possible.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.shape != dictionary.signal_shape:
        raise ValueError(
            f"signal shape {signal.shape} does not match dictionary {dictionary.signal_shape}"
        )
    dim = signal.size

    use_threshold = rule.mode in ("target_sse", "both")
    use_cap = rule.mode in ("max_atoms", "both")
    threshold = rule.sse_threshold if use_threshold else 0.0
    cap = min(rule.atom_cap, dim) if use_cap else dim
    if use_cap and rule.atom_cap > dim:
        raise ValueError(f"atom_cap {rule.atom_cap} exceeds the signal dimension {dim}")

    state = PursuitState(signal, capacity=cap)
    while True:
        sse = state.residual_sse
        if sse <= threshold or state.k >= cap:
            break
        corr = dictionary.correlate(state.residual)
        flat, value = _argmax_correlation(corr, state.masked | state.selected_flat)
        if flat < 0:
            raise PursuitExhaustedError(
                f"all atoms masked with residual SSE {sse:.6g} above threshold {threshold:.6g}"
            )
        if value == 0.0:
            break  # residual is orthogonal to the whole dictionary
        before = state.k
        orthogonalize_and_update(state, dictionary, dictionary.address_of(flat))
        if state.k > before and trace is not None:
            trace.append((state.k, dictionary.address_of(flat), value, state.residual_sse))

    coeffs = state.coefficients
    block = SparseBlock(entries=[(addr, float(c)) for addr, c in zip(state.selected, coeffs)])
    return block, float(np.sqrt(state.residual_sse))
