"""Dense complex matrix kernel.

Matrices are plain ``numpy`` complex arrays. Tensor factors follow a
row-major, label-ordered convention: the leftmost label of a
:class:`SubsystemLayout` is the slowest-varying index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when matrix shapes do not agree with a layout."""


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""

    def __init__(self, asymmetry: float):
        self.asymmetry = asymmetry
        super().__init__(f"matrix is not Hermitian (max |m - m^dag| = {asymmetry:.3e})")


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered labelled tensor factors, e.g. ``(("A", 2), ("B", 3))``."""

    parts: tuple[tuple[str, int], ...]

    def __post_init__(self):
        parts = tuple((str(label), int(dim)) for label, dim in self.parts)
        object.__setattr__(self, "parts", parts)
        labels = [label for label, _ in parts]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels: {labels}")
        for label, dim in parts:
            if dim < 1:
                raise ValueError(f"subsystem {label!r} has non-positive dimension {dim}")

    @classmethod
    def of(cls, **dims: int) -> "SubsystemLayout":
        """Build a layout from keyword arguments, in call order."""
        return cls(tuple(dims.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.parts)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.parts)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.parts else 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}; layout has {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.parts[self.index(label)][1]

    def subset(self, labels: Iterable[str]) -> "SubsystemLayout":
        """Sub-layout on ``labels``, kept in layout order."""
        wanted = set(labels)
        for label in wanted:
            self.index(label)
        return SubsystemLayout(tuple(p for p in self.parts if p[0] in wanted))

    def append(self, label: str, dim: int) -> "SubsystemLayout":
        return SubsystemLayout(self.parts + ((label, dim),))

    def __str__(self):
        return "⊗".join(f"{label}:{dim}" for label, dim in self.parts)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats: Sequence) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def hermitian_asymmetry(m: np.ndarray) -> float:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix is not square: {m.shape}")
    return float(np.max(np.abs(m - m.conj().T)))


def symmetrize(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(m + m†)/2`` after checking the asymmetry is within ``tol``."""
    m = as_matrix(m)
    asym = hermitian_asymmetry(m)
    if asym > tol:
        raise NotHermitianError(asym)
    return 0.5 * (m + m.conj().T)


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    h = symmetrize(m, tol)
    w, v = np.linalg.eigh(h)
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], v[:, order])


def eigvalsh(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix."""
    return np.linalg.eigvalsh(symmetrize(m, tol))[::-1]


def unitary_from_generator(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """``exp(i h)`` for Hermitian ``h``, via its eigendecomposition."""
    eig = hermitian_eig(h, tol)
    v = eig.eigenvectors
    return (v * np.exp(1j * eig.eigenvalues)) @ v.conj().T


def _check_layout(rho: np.ndarray, layout: SubsystemLayout) -> None:
    if rho.shape != (layout.total, layout.total):
        raise DimensionError(
            f"matrix shape {rho.shape} does not match layout {layout} (total {layout.total})"
        )


def partial_trace(rho, layout: SubsystemLayout, keep: Iterable[str]) -> np.ndarray:
    """Reduced matrix on the ``keep`` factors, returned in layout order."""
    rho = as_matrix(rho)
    _check_layout(rho, layout)
    keep = set(keep)
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    keep_idx = sorted(layout.index(label) for label in keep)
    n = len(layout.dims)
    t = rho.reshape(layout.dims + layout.dims)
    # einsum subscripts: traced factors share a row/column letter
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems")
    rows = list(letters[:n])
    cols = [rows[i] if i not in keep_idx else letters[n + i] for i in range(n)]
    out = "".join(rows[i] for i in keep_idx) + "".join(cols[i] for i in keep_idx)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([layout.dims[i] for i in keep_idx]))
    return reduced.reshape(d, d)


def permute_subsystems(rho, layout: SubsystemLayout, order: Sequence[str]) -> tuple[np.ndarray, SubsystemLayout]:
    """Reorder tensor factors of an operator so they appear as in ``order``."""
    rho = as_matrix(rho)
    _check_layout(rho, layout)
    if sorted(order) != sorted(layout.labels):
        raise ValueError(f"order {tuple(order)} is not a permutation of {layout.labels}")
    perm = [layout.index(label) for label in order]
    n = len(perm)
    t = rho.reshape(layout.dims + layout.dims)
    t = t.transpose(perm + [p + n for p in perm])
    new_layout = SubsystemLayout(tuple(layout.parts[p] for p in perm))
    return t.reshape(layout.total, layout.total), new_layout


def embed_operator(op, layout: SubsystemLayout, label: str) -> np.ndarray:
    """``I ⊗ op ⊗ I`` acting on the ``label`` factor of ``layout``."""
    op = as_matrix(op)
    d = layout.dim(label)
    if op.shape != (d, d):
        raise DimensionError(f"operator shape {op.shape} does not match dim({label}) = {d}")
    mats = [op if lab == label else np.eye(dim) for lab, dim in layout.parts]
    return kron_all(mats)
