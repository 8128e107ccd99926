"""Entropic rate budgets for the mother / FQSW family and its children.

Decoherence at B is modelled by the measuring ancilla: a purification
``|Psi>_ABR`` is extended with ``C`` (see :func:`qdiscord.measure.ancilla_extension`),
giving a pure state on ``A B R C``.  Primed quantities are read off that
state.  The reference ``R`` is untouched by the B-C coupling, so
``I(A':R) = I(A:R)`` is checked numerically; the enlarged purifying system
``R C`` is reported alongside, where ``I(A':RC) - I(A:R)`` equals the
fixed-basis discord.

Sign conventions: ``qubit_channel_rate`` and ``cbit_channel_rate`` are
costs (consumed per copy) unless a budget's ``notes`` say otherwise;
``ebit_rate`` is a yield, negative meaning ebits are consumed.  A negative
merging cost means ebits are distilled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .discord import OptimizerConfig, fixed_basis_discord, minimize_over_bases
from .entropy import matrix_entropy, mutual_information, subsystem_entropy
from .measure import Povm, ancilla_extension, dephase
from .states import DensityMatrix, PureState, from_pure, purify

PURE_TOL = 1e-9


@dataclass(frozen=True)
class ProtocolBudget:
    protocol: str
    qubit_channel_rate: float
    cbit_channel_rate: float
    ebit_rate: float
    notes: str = ""


@dataclass(frozen=True)
class DecoherenceComparison:
    before: ProtocolBudget
    after: ProtocolBudget
    loss: float
    equals_discord_residual: float
    basis: Povm
    fixed_basis_discord: float
    i_ar: float = float("nan")
    i_ar_after: float = float("nan")
    i_a_rc_after: float = float("nan")
    s_a: float = float("nan")
    s_a_after: float = float("nan")

    @property
    def reference_residual(self) -> float:
        """``I(A':R') - I(A:R)``."""
        return self.i_ar_after - self.i_ar

    @property
    def marginal_residual(self) -> float:
        """``S(A') - S(A)``."""
        return self.s_a_after - self.s_a


def _check_pure_abr(psi) -> DensityMatrix:
    rho = from_pure(psi) if isinstance(psi, PureState) else psi
    if sorted(rho.labels) != ["A", "B", "R"]:
        raise ValueError(f"expected a tripartite state on A, B, R; got {rho.labels}")
    if abs(rho.purity() - 1.0) > PURE_TOL:
        raise ValueError(f"state on A, B, R must be pure (purity {rho.purity():.6f})")
    return rho


def _check_bipartite(rho: DensityMatrix) -> None:
    if sorted(rho.labels) != ["A", "B"]:
        raise ValueError(f"expected a bipartite state on A, B; got {rho.labels}")


def mother_budget(psi) -> ProtocolBudget:
    """``<Psi> + I(A:R)/2 [q->q] >= I(A:B)/2 [qq]``."""
    rho = _check_pure_abr(psi)
    return ProtocolBudget(
        "mother",
        qubit_channel_rate=0.5 * mutual_information(rho, "A", "R"),
        cbit_channel_rate=0.0,
        ebit_rate=0.5 * mutual_information(rho, "A", "B"),
    )


def merging_budget(rho_ab: DensityMatrix) -> ProtocolBudget:
    """State merging: qubit cost ``S(A|B)``, classical cost ``I(A:B)``."""
    _check_bipartite(rho_ab)
    s_b = subsystem_entropy(rho_ab, "B")
    s_a = subsystem_entropy(rho_ab, "A")
    s_ab = matrix_entropy(rho_ab.mat)
    return ProtocolBudget(
        "qsm",
        qubit_channel_rate=s_ab - s_b,
        cbit_channel_rate=s_a + s_b - s_ab,
        ebit_rate=0.0,
        notes="negative qubit rate = ebits distilled",
    )


# ------------------------------------------------------- decohered picture


@dataclass(frozen=True)
class _Decohered:
    """Entropies before and after dephasing B, from the extended purification."""

    s_a: float
    s_b: float
    s_ab: float
    s_r: float
    s_ar: float
    s_a_after: float
    s_b_after: float
    s_ab_after: float
    s_ar_after: float
    s_rc_after: float
    s_arc_after: float

    @property
    def i_ab(self):
        return self.s_a + self.s_b - self.s_ab

    @property
    def i_ab_after(self):
        return self.s_a_after + self.s_b_after - self.s_ab_after

    @property
    def i_ar(self):
        return self.s_a + self.s_r - self.s_ar

    @property
    def i_ar_after(self):
        return self.s_a_after + self.s_r - self.s_ar_after

    @property
    def i_a_rc_after(self):
        return self.s_a_after + self.s_rc_after - self.s_arc_after

    @property
    def cond(self):
        return self.s_ab - self.s_b

    @property
    def cond_after(self):
        return self.s_ab_after - self.s_b_after


def _decohere(psi_abr: DensityMatrix, basis: Povm) -> _Decohered:
    ext = ancilla_extension(psi_abr, basis, "C")

    def s(rho, labels):
        return subsystem_entropy(rho, labels)

    # dephased AB computed directly as a cross-check of the extension
    rho_ab = psi_abr.reduce(["A", "B"])
    deph = dephase(rho_ab, basis)
    ext_ab = ext.reduce(["A", "B"])
    gap = float(np.max(np.abs(ext_ab.mat - deph.mat)))
    if gap > 1e-9:
        raise RuntimeError(f"ancilla extension disagrees with dephasing by {gap:.3e}")

    return _Decohered(
        s_a=s(psi_abr, "A"),
        s_b=s(psi_abr, "B"),
        s_ab=s(psi_abr, ("A", "B")),
        s_r=s(psi_abr, "R"),
        s_ar=s(psi_abr, ("A", "R")),
        s_a_after=s(ext, "A"),
        s_b_after=s(ext, "B"),
        s_ab_after=s(ext, ("A", "B")),
        s_ar_after=s(ext, ("A", "R")),
        s_rc_after=s(ext, ("R", "C")),
        s_arc_after=s(ext, ("A", "R", "C")),
    )


def _loss_objective(rho_ab: DensityMatrix, kind: str):
    """Loss as a function of the basis unitary on B, computed by dephasing.

    ``kind`` is ``"mutual"`` for ``I(A:B) - I(A':B')`` or ``"conditional"``
    for ``S(A'|B') - S(A|B)``.
    """
    d_b = rho_ab.layout.dim("B")
    d_a = rho_ab.layout.dim("A")
    m = rho_ab.mat.reshape(d_a, d_b, d_a, d_b)
    s_a = subsystem_entropy(rho_ab, "A")
    s_b = subsystem_entropy(rho_ab, "B")
    s_ab = matrix_entropy(rho_ab.mat)
    i_ab = s_a + s_b - s_ab
    cond = s_ab - s_b

    def loss(u):
        # rotate B into the measurement basis, then keep the diagonal blocks
        r = np.einsum("adce,dj,ek->ajck", m, u.conj(), u)
        jj = np.arange(d_b)
        deph = np.zeros_like(r)
        deph[:, jj, :, jj] = r[:, jj, :, jj]
        deph = deph.reshape(d_a * d_b, d_a * d_b)
        p = np.real(np.einsum("ajaj->j", r))
        s_b_after = -np.sum(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0))
        s_ab_after = matrix_entropy(deph)
        if kind == "mutual":
            return i_ab - (s_a + s_b_after - s_ab_after)
        return (s_ab_after - s_b_after) - cond

    return loss


def _resolve_basis(rho_ab: DensityMatrix, basis, optimize: bool, kind: str, cfg: OptimizerConfig | None) -> Povm:
    if basis is not None and optimize:
        raise ValueError("give either a basis or optimize=True, not both")
    if optimize:
        cfg = cfg or OptimizerConfig()
        if cfg.povm_mode != "projective":
            cfg = replace(cfg, povm_mode="projective")
        _, u, _, _, _ = minimize_over_bases(_loss_objective(rho_ab, kind), rho_ab.layout.dim("B"), cfg)
        return Povm.from_basis(u, "B")
    if basis is None:
        return Povm.computational(rho_ab.layout.dim("B"), "B")
    if basis.subsystem != "B":
        raise ValueError(f"decoherence acts on B; basis is on {basis.subsystem!r}")
    return basis


def _prepare(state, basis, optimize, kind, cfg) -> tuple[DensityMatrix, DensityMatrix, Povm, _Decohered]:
    """Return ``(rho_ab, psi_abr, basis, entropies)`` from a bipartite or ``ABR`` input."""
    if isinstance(state, PureState) or "R" in state.labels:
        psi = _check_pure_abr(state)
        rho_ab = psi.reduce(["A", "B"])
    else:
        _check_bipartite(state)
        rho_ab = state
        psi = from_pure(purify(state, "R"))
    b = _resolve_basis(rho_ab, basis, optimize, kind, cfg)
    return rho_ab, psi, b, _decohere(psi, b)


def _comparison(before, after, loss, rho_ab, basis, e: _Decohered) -> DecoherenceComparison:
    fbd = fixed_basis_discord(rho_ab, basis)
    return DecoherenceComparison(
        before=before,
        after=after,
        loss=loss,
        equals_discord_residual=loss - fbd,
        basis=basis,
        fixed_basis_discord=fbd,
        i_ar=e.i_ar,
        i_ar_after=e.i_ar_after,
        i_a_rc_after=e.i_a_rc_after,
        s_a=e.s_a,
        s_a_after=e.s_a_after,
    )


def fqswd_budget(state, basis: Povm | None = None, optimize: bool = False, cfg: OptimizerConfig | None = None) -> DecoherenceComparison:
    """Mother protocol before and after B is dephased in ``basis``.

    The loss ``I(A:B) - I(A':B')`` is twice the drop in distilled ebits.
    """
    rho_ab, _, b, e = _prepare(state, basis, optimize, "mutual", cfg)
    before = ProtocolBudget("fqsw", 0.5 * e.i_ar, 0.0, 0.5 * e.i_ab)
    after = ProtocolBudget("fqswd", 0.5 * e.i_ar_after, 0.0, 0.5 * e.i_ab_after, notes="B dephased")
    return _comparison(before, after, e.i_ab - e.i_ab_after, rho_ab, b, e)


def merging_markup(state, basis: Povm | None = None, optimize: bool = False, cfg: OptimizerConfig | None = None) -> DecoherenceComparison:
    """Extra merging cost ``S(A'|B') - S(A|B)`` caused by dephasing B."""
    rho_ab, _, b, e = _prepare(state, basis, optimize, "conditional", cfg)
    before = ProtocolBudget("qsm", e.cond, e.i_ab, 0.0, notes="negative qubit rate = ebits distilled")
    after = ProtocolBudget("qsmd", e.cond_after, e.i_ab_after, 0.0, notes="B dephased")
    return _comparison(before, after, e.cond_after - e.cond, rho_ab, b, e)


def dense_coding_loss(state, basis: Povm | None = None, optimize: bool = False, cfg: OptimizerConfig | None = None) -> DecoherenceComparison:
    """Noisy dense coding: qubit cost ``S(A)``, classical yield ``I(A:B)``.

    ``cbit_channel_rate`` holds the classical bits *delivered* here.
    """
    rho_ab, _, b, e = _prepare(state, basis, optimize, "mutual", cfg)
    before = ProtocolBudget("sdc", e.s_a, e.i_ab, 0.0, notes="cbit rate is a yield")
    after = ProtocolBudget("sdcd", e.s_a_after, e.i_ab_after, 0.0, notes="cbit rate is a yield; B dephased")
    return _comparison(before, after, e.i_ab - e.i_ab_after, rho_ab, b, e)


def distillation_loss(state, basis: Povm | None = None, optimize: bool = False, cfg: OptimizerConfig | None = None) -> DecoherenceComparison:
    """One-way distillation: classical cost ``I(A:R)``, ebit yield ``-S(A|B)``."""
    rho_ab, _, b, e = _prepare(state, basis, optimize, "conditional", cfg)
    before = ProtocolBudget("ed", 0.0, e.i_ar, -e.cond)
    after = ProtocolBudget("edd", 0.0, e.i_ar_after, -e.cond_after, notes="B dephased")
    return _comparison(before, after, e.cond_after - e.cond, rho_ab, b, e)


def all_losses(state, basis: Povm) -> dict[str, DecoherenceComparison]:
    """The four decohered comparisons at one common basis."""
    return {
        "fqswd": fqswd_budget(state, basis),
        "merging_markup": merging_markup(state, basis),
        "dense_coding_loss": dense_coding_loss(state, basis),
        "distillation_loss": distillation_loss(state, basis),
    }

