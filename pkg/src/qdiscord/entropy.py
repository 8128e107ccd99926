"""Entropic functionals, in bits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmat import symmetrize
from .states import DensityMatrix, InvalidStateError

CLAMP_TOL = 1e-10


def entropy_of_spectrum(eigenvalues) -> float:
    """``-sum lam log2 lam`` with ``0 log 0 = 0``.

    Eigenvalues down to ``-1e-10`` are treated as zero; anything more
    negative means the input was not a state and raises.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size and lam.min() < -CLAMP_TOL:
        raise InvalidStateError(f"eigenvalue {lam.min():.3e} below -{CLAMP_TOL}")
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > 0]
    return float(max(-np.sum(lam * np.log2(lam)), 0.0))


def matrix_entropy(m: np.ndarray) -> float:
    """Von Neumann entropy of a raw (unit-trace, PSD) matrix."""
    return entropy_of_spectrum(np.linalg.eigvalsh(symmetrize(m)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return matrix_entropy(rho.mat)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a probability distribution: {p.tolist()}")
    p = p[p > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def _labels(x) -> tuple[str, ...]:
    return (x,) if isinstance(x, str) else tuple(x)


def subsystem_entropy(rho: DensityMatrix, labels) -> float:
    """``S`` of the reduced state on ``labels`` (all labels: no trace)."""
    labels = _labels(labels)
    if set(labels) == set(rho.labels):
        return von_neumann_entropy(rho)
    return von_neumann_entropy(rho.reduce(labels))


def mutual_information(rho: DensityMatrix, a, b) -> float:
    a, b = _labels(a), _labels(b)
    return subsystem_entropy(rho, a) + subsystem_entropy(rho, b) - subsystem_entropy(rho, a + b)


def conditional_entropy(rho: DensityMatrix, a, b) -> float:
    """``S(a|b) = S(a, b) - S(b)``."""
    a, b = _labels(a), _labels(b)
    return subsystem_entropy(rho, a + b) - subsystem_entropy(rho, b)


@dataclass(frozen=True)
class CorrelationReport:
    s_a: float
    s_b: float
    s_ab: float
    mutual_info: float
    cond_entropy: float
    coherent_info: float


def correlation_report(rho: DensityMatrix, cut=None) -> CorrelationReport:
    """Entropies across a bipartition ``(labels_a, labels_b)`` of ``rho``.

    With no cut, a two-factor layout is split into its two factors.
    """
    if cut is None:
        if len(rho.labels) != 2:
            raise ValueError(f"need an explicit cut for layout {rho.layout}")
        cut = (rho.labels[0], rho.labels[1])
    a, b = _labels(cut[0]), _labels(cut[1])
    if set(a) & set(b) or set(a) | set(b) != set(rho.labels) or not a or not b:
        raise ValueError(f"cut {cut} is not a partition of {rho.labels}")
    s_a = subsystem_entropy(rho, a)
    s_b = subsystem_entropy(rho, b)
    s_ab = von_neumann_entropy(rho)
    cond = s_ab - s_b
    return CorrelationReport(
        s_a=s_a,
        s_b=s_b,
        s_ab=s_ab,
        mutual_info=s_a + s_b - s_ab,
        cond_entropy=cond,
        coherent_info=-cond,
    )


def _three_groups(rho: DensityMatrix, a, b, c) -> tuple[tuple[str, ...], ...]:
    groups = (_labels(a), _labels(b), _labels(c))
    flat = [x for g in groups for x in g]
    if len(set(flat)) != len(flat) or set(flat) != set(rho.labels) or not all(groups):
        raise ValueError(f"groups {groups} do not partition {rho.labels}")
    return groups


def ssa_slack(rho: DensityMatrix, a="A", b="B", c="C") -> float:
    """``S(AB) + S(BC) - S(ABC) - S(B)``; non-negative for every state."""
    a, b, c = _three_groups(rho, a, b, c)
    return (
        subsystem_entropy(rho, a + b)
        + subsystem_entropy(rho, b + c)
        - von_neumann_entropy(rho)
        - subsystem_entropy(rho, b)
    )


def conditioning_gain(rho: DensityMatrix, a="A", b="B", c="C") -> float:
    """``S(A|B) - S(A|BC)``: how much cheaper merging gets when C is kept.

    Algebraically identical to :func:`ssa_slack`, computed here through
    conditional entropies.
    """
    a, b, c = _three_groups(rho, a, b, c)
    return conditional_entropy(rho, a, b) - conditional_entropy(rho, a, b + c)
