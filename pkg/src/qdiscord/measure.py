"""Local measurements on one subsystem, dephasing, and the measuring ancilla.

A measurement always names the subsystem it acts on; the post-measurement
states live on all the remaining factors.  The ancilla construction couples
the measured factor ``B`` to a fresh factor ``C`` through the isometry
``|e_j> -> |e_j>|f_j>`` with ``{f_j}`` the computational basis of ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import (
    conditional_entropy,
    shannon_entropy,
    ssa_slack,
    subsystem_entropy,
    von_neumann_entropy,
)
from .qmat import SubsystemLayout, as_matrix, embed_operator, permute_subsystems
from .states import DensityMatrix

POVM_TOL = 1e-9
PSD_TOL = 1e-10
ZERO_PROB = 1e-12
IDENTITY_TOL = 1e-9


class InvalidPovmError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators on one subsystem that sum to the identity."""

    elements: tuple[np.ndarray, ...]
    subsystem: str
    rank_one: bool = False

    def __post_init__(self):
        elems = tuple(as_matrix(e) for e in self.elements)
        if not elems:
            raise InvalidPovmError("a POVM needs at least one element")
        d = elems[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in elems:
            if e.shape != (d, d):
                raise InvalidPovmError(f"element shape {e.shape} differs from ({d}, {d})")
            if np.max(np.abs(e - e.conj().T)) > PSD_TOL:
                raise InvalidPovmError("element is not Hermitian")
            w = np.linalg.eigvalsh(0.5 * (e + e.conj().T))
            if w[0] < -PSD_TOL:
                raise InvalidPovmError(f"element has negative eigenvalue {w[0]:.3e}")
            if self.rank_one and np.sum(w > PSD_TOL) != 1:
                raise InvalidPovmError("element is not rank one")
            total += e
        dev = float(np.max(np.abs(total - np.eye(d))))
        if dev > POVM_TOL:
            raise InvalidPovmError(f"elements sum to identity only within {dev:.3e}")
        for e in elems:
            e.setflags(write=False)
        object.__setattr__(self, "elements", elems)

    @classmethod
    def from_basis(cls, u, subsystem: str) -> "Povm":
        """Rank-one projectors onto the columns of a unitary ``u``."""
        u = as_matrix(u)
        d = u.shape[0]
        if u.shape != (d, d):
            raise InvalidPovmError(f"basis matrix must be square, got {u.shape}")
        dev = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
        if dev > POVM_TOL:
            raise InvalidPovmError(f"basis vectors are not orthonormal (deviation {dev:.3e})")
        return cls(tuple(np.outer(u[:, j], u[:, j].conj()) for j in range(d)), subsystem, rank_one=True)

    @classmethod
    def computational(cls, dim: int, subsystem: str) -> "Povm":
        return cls.from_basis(np.eye(dim), subsystem)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self):
        return len(self.elements)

    def is_orthogonal_basis(self) -> bool:
        """True for a complete set of ``dim`` mutually orthogonal rank-one projectors."""
        if len(self.elements) != self.dim:
            return False
        for e in self.elements:
            if np.max(np.abs(e @ e - e)) > POVM_TOL or abs(np.trace(e).real - 1) > POVM_TOL:
                return False
        return True

    def basis_vectors(self) -> np.ndarray:
        """Unitary whose columns span the projectors (orthogonal bases only)."""
        if not self.is_orthogonal_basis():
            raise InvalidPovmError("POVM is not a complete rank-one orthogonal basis")
        cols = []
        for e in self.elements:
            w, v = np.linalg.eigh(0.5 * (e + e.conj().T))
            cols.append(v[:, -1])
        return np.column_stack(cols)


@dataclass(frozen=True)
class Outcome:
    prob: float
    post_state: DensityMatrix


@dataclass(frozen=True)
class MeasurementEnsemble:
    outcomes: tuple[Outcome, ...]
    measured: str

    @property
    def probs(self) -> np.ndarray:
        return np.array([o.prob for o in self.outcomes])

    def average_state(self) -> np.ndarray:
        return sum(o.prob * o.post_state.mat for o in self.outcomes)


def measured_last(rho: DensityMatrix, label: str) -> tuple[np.ndarray, SubsystemLayout]:
    """Tensor ``T[a, b, a', b']`` with the ``label`` factor as ``b``.

    Returns the tensor and the layout of the remaining factors.
    """
    if label not in rho.labels:
        raise KeyError(f"subsystem {label!r} not in layout {rho.layout}")
    if len(rho.labels) < 2:
        raise ValueError("measuring the only subsystem leaves nothing to condition")
    rest = [x for x in rho.labels if x != label]
    mat, _ = permute_subsystems(rho.mat, rho.layout, rest + [label])
    d_b = rho.layout.dim(label)
    rest_layout = rho.layout.subset(rest)
    d_r = rest_layout.total
    return mat.reshape(d_r, d_b, d_r, d_b), rest_layout


def unnormalized_conditionals(t: np.ndarray, elements: Sequence[np.ndarray]) -> np.ndarray:
    """``tr_B((I ⊗ Pi_i) rho)`` for every element, stacked on axis 0."""
    pis = np.stack([np.asarray(e) for e in elements])
    return np.einsum("adcb,ibd->iac", t, pis)


def _check_povm(rho: DensityMatrix, povm: Povm) -> None:
    d = rho.layout.dim(povm.subsystem)
    if povm.dim != d:
        raise InvalidPovmError(f"POVM dimension {povm.dim} does not match dim({povm.subsystem}) = {d}")


def povm_outcomes(rho: DensityMatrix, povm: Povm) -> MeasurementEnsemble:
    _check_povm(rho, povm)
    t, rest = measured_last(rho, povm.subsystem)
    blocks = unnormalized_conditionals(t, povm.elements)
    d_r = rest.total
    outcomes = []
    for m in blocks:
        p = float(np.trace(m).real)
        if p < ZERO_PROB:
            outcomes.append(Outcome(0.0, DensityMatrix(np.eye(d_r) / d_r, rest)))
        else:
            outcomes.append(Outcome(p, DensityMatrix(m / p, rest)))
    return MeasurementEnsemble(tuple(outcomes), povm.subsystem)


def measured_conditional_entropy(rho: DensityMatrix, povm: Povm) -> float:
    """Average entropy of the conditional states, ``sum_i p_i S(rho_{A|i})``."""
    ens = povm_outcomes(rho, povm)
    return float(sum(o.prob * von_neumann_entropy(o.post_state) for o in ens.outcomes if o.prob > 0))


def _require_basis(basis: Povm) -> np.ndarray:
    if not basis.is_orthogonal_basis():
        raise InvalidPovmError(
            "a complete rank-one orthogonal basis is required; dilate general POVMs first"
        )
    return basis.basis_vectors()


def dephase(rho: DensityMatrix, basis: Povm) -> DensityMatrix:
    """Measure ``basis.subsystem`` and forget the outcome."""
    _check_povm(rho, basis)
    _require_basis(basis)
    out = np.zeros_like(rho.mat)
    for e in basis.elements:
        big = embed_operator(e, rho.layout, basis.subsystem)
        out += big @ rho.mat @ big
    return DensityMatrix(out, rho.layout)


def ancilla_extension(rho: DensityMatrix, basis: Povm, ancilla_label: str = "C") -> DensityMatrix:
    """Couple the measured factor to a fresh ancilla appended to the layout.

    ``rho'`` is ``(I ⊗ V) rho (I ⊗ V)†`` with ``V = sum_j |e_j>|f_j><e_j|``;
    the rank (and spectrum) of ``rho`` is preserved.
    """
    _check_povm(rho, basis)
    if ancilla_label in rho.labels:
        raise ValueError(f"ancilla label {ancilla_label!r} already in layout")
    u = _require_basis(basis)
    d_b = basis.dim
    # V[b_out, c, b_in]
    v = np.einsum("oj,cj,ij->oci", u, np.eye(d_b), u.conj())
    dims = list(rho.layout.dims)
    n = len(dims)
    k = rho.layout.index(basis.subsystem)
    t = rho.mat.reshape(dims + dims)
    # apply V to the row index of factor k; new C axis goes to the end of the rows
    t = np.tensordot(v, t, axes=([2], [k]))  # (b_out, c, rows without k..., cols...)
    t = np.moveaxis(t, 0, k + 1)  # rows back in order, c still leading
    t = np.moveaxis(t, 0, n)  # c after the n row axes
    # column side: axes n+1 .. 2n, factor k at n + 1 + k
    t = np.tensordot(t, v.conj(), axes=([n + 1 + k], [2]))  # (..., b_out', c')
    t = np.moveaxis(t, -2, n + 1 + k)
    new_layout = rho.layout.append(ancilla_label, d_b)
    d = new_layout.total
    return DensityMatrix(t.reshape(d, d), new_layout)


@dataclass(frozen=True)
class Theorem1Report:
    """Entropies of the ancilla-extended state and the identities they obey.

    ``residuals`` holds signed deviations of each identity; all should be
    zero up to rounding.
    """

    s_rho_ab: float
    s_rho_b: float
    cond_entropy: float
    s_ext_abc: float
    s_ext_ab: float
    s_ext_bc: float
    s_ext_b: float
    s_p: float
    tilde_s: float
    ssa_slack: float
    discord_lower_bound_ok: bool
    residuals: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(abs(v) for v in self.residuals.values())

    def identities_hold(self, tol: float = IDENTITY_TOL) -> bool:
        return self.max_residual <= tol


def theorem1_report(rho_ab: DensityMatrix, basis: Povm, tol: float = IDENTITY_TOL) -> Theorem1Report:
    """Check that the measuring ancilla turns strong subadditivity into
    ``S~(A|B) >= S(A|B)``.

    ``rho_ab`` must be bipartite; ``basis`` acts on one of its factors,
    which plays the role of ``B``.
    """
    if len(rho_ab.labels) != 2:
        raise ValueError(f"expected a bipartite state, got layout {rho_ab.layout}")
    b = basis.subsystem
    a = next(x for x in rho_ab.labels if x != b)
    c = "C" if "C" not in rho_ab.labels else "C'"
    ext = ancilla_extension(rho_ab, basis, c)

    ens = povm_outcomes(rho_ab, basis)
    p = ens.probs
    s_p = shannon_entropy(p / p.sum())
    tilde_s = float(sum(o.prob * von_neumann_entropy(o.post_state) for o in ens.outcomes if o.prob > 0))

    s_rho_ab = von_neumann_entropy(rho_ab)
    s_rho_b = subsystem_entropy(rho_ab, b)
    cond = conditional_entropy(rho_ab, a, b)

    s_ext_abc = von_neumann_entropy(ext)
    s_ext_ab = subsystem_entropy(ext, (a, b))
    s_ext_bc = subsystem_entropy(ext, (b, c))
    s_ext_b = subsystem_entropy(ext, b)
    slack = ssa_slack(ext, a, b, c)

    residuals = {
        "abc_equals_ab": s_ext_abc - s_rho_ab,
        "ab_equals_shannon_plus_average": s_ext_ab - (s_p + tilde_s),
        "bc_equals_b": s_ext_bc - s_rho_b,
        "b_equals_shannon": s_ext_b - s_p,
        "slack_equals_discord_gap": slack - (tilde_s - cond),
    }
    return Theorem1Report(
        s_rho_ab=s_rho_ab,
        s_rho_b=s_rho_b,
        cond_entropy=cond,
        s_ext_abc=s_ext_abc,
        s_ext_ab=s_ext_ab,
        s_ext_bc=s_ext_bc,
        s_ext_b=s_ext_b,
        s_p=s_p,
        tilde_s=tilde_s,
        ssa_slack=slack,
        discord_lower_bound_ok=tilde_s >= cond - tol,
        residuals=residuals,
    )
