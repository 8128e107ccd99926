"""Density matrices, pure states, named families and seeded random ensembles.

Random states come from ``numpy.random.Generator`` driven by an explicit
``PCG64`` bit generator, so a seed fully determines the output.  Complex
Gaussian entries are drawn as ``(x + i y)/sqrt(2)`` where the real block
``x`` is drawn before the imaginary block ``y``, each in row-major order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .qmat import (
    DimensionError,
    SubsystemLayout,
    as_matrix,
    hermitian_asymmetry,
    hermitian_eig,
    partial_trace,
)

STATE_TOL = 1e-10
RANK_TOL = 1e-12


class InvalidStateError(ValueError):
    """Raised when a matrix or vector violates the state invariants."""


def rng_from_seed(seed, *spawn_key: int) -> np.random.Generator:
    """Deterministic generator for ``seed`` (optionally a child stream)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.PCG64(ss))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _coerce_layout(layout) -> SubsystemLayout:
    if isinstance(layout, SubsystemLayout):
        return layout
    return SubsystemLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix bound to a layout."""

    mat: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        layout = _coerce_layout(self.layout)
        object.__setattr__(self, "layout", layout)
        m = as_matrix(self.mat)
        if m.shape != (layout.total, layout.total):
            raise DimensionError(f"matrix shape {m.shape} does not match layout {layout}")
        asym = hermitian_asymmetry(m)
        if asym > STATE_TOL:
            raise InvalidStateError(f"not Hermitian (asymmetry {asym:.3e})")
        m = 0.5 * (m + m.conj().T)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > STATE_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(m)[0])
        if lam_min < -STATE_TOL:
            raise InvalidStateError(f"not positive semidefinite (min eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "mat", _freeze(m))

    @property
    def dim(self) -> int:
        return self.layout.total

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def reduce(self, keep) -> "DensityMatrix":
        """Partial trace onto ``keep`` (a label or an iterable of labels)."""
        if isinstance(keep, str):
            keep = [keep]
        keep = list(keep)
        return DensityMatrix(partial_trace(self.mat, self.layout, keep), self.layout.subset(keep))

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    def rank(self, tol: float = RANK_TOL) -> int:
        return int(np.sum(hermitian_eig(self.mat).eigenvalues > tol))

    def relabel(self, mapping: dict[str, str]) -> "DensityMatrix":
        parts = tuple((mapping.get(label, label), dim) for label, dim in self.layout.parts)
        return DensityMatrix(self.mat, SubsystemLayout(parts))

    def conjugate_by(self, u: np.ndarray) -> "DensityMatrix":
        """``U rho U†`` for a unitary on the full space."""
        return DensityMatrix(u @ self.mat @ u.conj().T, self.layout)

    def __repr__(self):
        return f"DensityMatrix(layout={self.layout}, rank={self.rank()})"


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector bound to a layout.

    The global phase is fixed so that the first non-negligible amplitude
    is real and non-negative.
    """

    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        layout = _coerce_layout(self.layout)
        object.__setattr__(self, "layout", layout)
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape[0] != layout.total:
            raise DimensionError(f"vector length {v.shape[0]} does not match layout {layout}")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > STATE_TOL:
            raise InvalidStateError(f"norm is {norm!r}, expected 1")
        nz = np.flatnonzero(np.abs(v) > RANK_TOL)
        if nz.size:
            first = v[nz[0]]
            v = v * (abs(first) / first)
        object.__setattr__(self, "amplitudes", _freeze(v))

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def density(self) -> DensityMatrix:
        return from_pure(self)


def from_pure(psi: PureState) -> DensityMatrix:
    v = psi.amplitudes
    return DensityMatrix(np.outer(v, v.conj()), psi.layout)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def purify(rho: DensityMatrix, ref_label: str = "R") -> PureState:
    """Canonical purification ``sum_l sqrt(lam_l) |r_l>|l>``.

    The reference factor has dimension equal to the numerical rank of
    ``rho`` and is appended as the last factor of the layout.
    """
    if ref_label in rho.labels:
        raise ValueError(f"reference label {ref_label!r} already present in {rho.labels}")
    eig = hermitian_eig(rho.mat)
    keep = eig.eigenvalues > RANK_TOL
    lam = eig.eigenvalues[keep]
    vecs = eig.eigenvectors[:, keep]
    lam = lam / lam.sum()
    r = lam.size
    # amplitude tensor: [system index, reference index]
    amps = vecs * np.sqrt(lam)
    return PureState(amps.reshape(-1), rho.layout.append(ref_label, r))


_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def qubit_from_bloch(r: Sequence[float]) -> np.ndarray:
    """Single-qubit density matrix ``(I + r.sigma)/2``; requires ``|r| <= 1``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got {r.shape}")
    if np.linalg.norm(r) > 1 + 1e-12:
        raise ValueError(f"Bloch vector {r.tolist()} lies outside the unit ball")
    return 0.5 * (np.eye(2) + r[0] * PAULI_X + r[1] * PAULI_Y + r[2] * PAULI_Z)


def bell(labels=("A", "B")) -> DensityMatrix:
    return from_pure(PureState(_PHI_PLUS, [(labels[0], 2), (labels[1], 2)]))


def werner(p: float, labels=("A", "B")) -> DensityMatrix:
    """``p |Phi+><Phi+| + (1-p) I/4`` for ``p`` in ``[0, 1]``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner parameter must lie in [0, 1], got {p}")
    phi = np.outer(_PHI_PLUS, _PHI_PLUS.conj())
    return DensityMatrix(p * phi + (1 - p) * np.eye(4) / 4, [(labels[0], 2), (labels[1], 2)])


def _check_distribution(p: Sequence[float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability list must be a non-empty 1-D sequence")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"invalid probability list {p.tolist()}")
    return p


def classical_classical(p: Sequence[float], labels=("A", "B")) -> DensityMatrix:
    """``sum_i p_i |ii><ii|`` on ``d ⊗ d`` with ``d = len(p)``."""
    p = _check_distribution(p)
    d = p.size
    m = np.zeros((d * d, d * d), dtype=complex)
    for i, pi in enumerate(p):
        m[i * d + i, i * d + i] = pi
    return DensityMatrix(m, [(labels[0], d), (labels[1], d)])


def classical_quantum(p: Sequence[float], bloch: Sequence[Sequence[float]], labels=("A", "B")) -> DensityMatrix:
    """``sum_i p_i rho_i ⊗ |i><i|``: qubit states on A, classical flag on B.

    Measuring B in its computational basis leaves this state unchanged, so
    its discord with measurement on B is zero.
    """
    p = _check_distribution(p)
    bloch = np.asarray(bloch, dtype=float).reshape(-1, 3)
    if bloch.shape[0] != p.size:
        raise ValueError("need one Bloch vector per probability")
    k = p.size
    m = sum(pi * np.kron(qubit_from_bloch(r), np.outer(ket(i, k), ket(i, k))) for i, (pi, r) in enumerate(zip(p, bloch)))
    return DensityMatrix(m, [(labels[0], 2), (labels[1], k)])


def product_state(rho_a: DensityMatrix, rho_b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(rho_a.mat, rho_b.mat), rho_a.layout.parts + rho_b.layout.parts)


def ghz(n: int = 3, labels=None) -> DensityMatrix:
    if n < 2:
        raise ValueError("GHZ state needs at least two qubits")
    labels = labels or ("A", "B", "C", "D", "E", "F", "G", "H")[:n]
    if len(labels) != n:
        raise ValueError(f"need {n} labels, got {labels}")
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return from_pure(PureState(v, [(label, 2) for label in labels]))


FAMILIES = ("bell", "werner", "classical_classical", "classical_quantum", "product", "ghz")


def named_family(name: str, params: Sequence[float] = (), labels=None) -> DensityMatrix:
    """Construct a state from a family name and a flat real parameter list.

    ``werner``: ``[p]``.  ``classical_classical``: the probabilities.
    ``classical_quantum``: ``k`` probabilities followed by ``3k`` Bloch
    components.  ``product``: two Bloch vectors ``[ax, ay, az, bx, by, bz]``.
    ``ghz``: optional ``[n]`` qubit count (default 3).
    """
    params = [float(x) for x in params]
    kw = {} if labels is None else {"labels": tuple(labels)}
    if name == "bell":
        if params:
            raise ValueError("bell takes no parameters")
        return bell(**kw)
    if name == "werner":
        if len(params) != 1:
            raise ValueError("werner takes exactly one parameter p")
        return werner(params[0], **kw)
    if name == "classical_classical":
        return classical_classical(params, **kw)
    if name == "classical_quantum":
        if len(params) % 4 or not params:
            raise ValueError("classical_quantum takes k probabilities and 3k Bloch components")
        k = len(params) // 4
        return classical_quantum(params[:k], np.reshape(params[k:], (k, 3)), **kw)
    if name == "product":
        if len(params) != 6:
            raise ValueError("product takes two Bloch vectors (6 numbers)")
        la, lb = kw.get("labels", ("A", "B"))
        return product_state(
            DensityMatrix(qubit_from_bloch(params[:3]), [(la, 2)]),
            DensityMatrix(qubit_from_bloch(params[3:]), [(lb, 2)]),
        )
    if name == "ghz":
        if len(params) > 1:
            raise ValueError("ghz takes at most one parameter (qubit count)")
        n = int(params[0]) if params else 3
        return ghz(n, kw.get("labels"))
    raise ValueError(f"unknown state family {name!r}; expected one of {FAMILIES}")


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2)


def random_density(dim: int, rank: int | None = None, seed: int = 0, layout=None) -> DensityMatrix:
    """Ginibre-induced random state ``G G† / tr(G G†)``, ``G`` of shape ``dim × rank``."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    if layout is None:
        layout = SubsystemLayout((("S", dim),))
    layout = _coerce_layout(layout)
    if layout.total != dim:
        raise DimensionError(f"layout {layout} does not have total dimension {dim}")
    g = complex_gaussian(rng_from_seed(seed), (dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, layout)


def random_pure(layout, seed: int = 0) -> PureState:
    """Haar-random pure state on ``layout``."""
    layout = _coerce_layout(layout)
    v = complex_gaussian(rng_from_seed(seed), layout.total)
    return PureState(v / np.linalg.norm(v), layout)


def random_unitary(dim: int, seed: int = 0) -> np.ndarray:
    """Haar-random unitary from the phase-corrected QR of a Ginibre matrix."""
    z = complex_gaussian(rng_from_seed(seed), (dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


# ---------------------------------------------------------------- file format


def _encode_complex(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def state_to_json(state: DensityMatrix | PureState) -> dict:
    doc = {"labels": list(state.layout.labels), "dims": list(state.layout.dims)}
    if isinstance(state, PureState):
        doc["vector"] = _encode_complex(state.amplitudes)
    else:
        doc["matrix"] = _encode_complex(state.mat)
    return doc


def state_from_json(doc: dict) -> DensityMatrix | PureState:
    """Parse the JSON state schema; raises ``InvalidStateError`` on bad input."""
    try:
        labels = [str(x) for x in doc["labels"]]
        dims = [int(x) for x in doc["dims"]]
        if len(labels) != len(dims):
            raise InvalidStateError("labels and dims differ in length")
        layout = SubsystemLayout(tuple(zip(labels, dims)))
        if ("matrix" in doc) == ("vector" in doc):
            raise InvalidStateError("exactly one of 'matrix' or 'vector' is required")
        if "vector" in doc:
            raw = np.asarray(doc["vector"], dtype=float)
            if raw.ndim != 2 or raw.shape[1] != 2:
                raise InvalidStateError("vector entries must be [re, im] pairs")
            return PureState(raw[:, 0] + 1j * raw[:, 1], layout)
        raw = np.asarray(doc["matrix"], dtype=float)
        if raw.ndim != 3 or raw.shape[2] != 2:
            raise InvalidStateError("matrix entries must be [re, im] pairs")
        return DensityMatrix(raw[..., 0] + 1j * raw[..., 1], layout)
    except InvalidStateError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"malformed state document: {exc}") from exc


def load_state(path) -> DensityMatrix | PureState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidStateError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InvalidStateError(f"{path}: top-level JSON value must be an object")
    return state_from_json(doc)


def save_state(state: DensityMatrix | PureState, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(state), indent=1) + "\n")


def as_density(state: DensityMatrix | PureState) -> DensityMatrix:
    return from_pure(state) if isinstance(state, PureState) else state
