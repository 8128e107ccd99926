"""Quantum discord by minimizing the measured conditional entropy.

The measured subsystem ``B`` is searched over complete rank-one orthogonal
bases ``exp(i H)``, where the Hermitian generator ``H`` is packed into
``dim(B)**2`` real numbers.  Each start runs a Nelder-Mead simplex.  For a
qubit ``B`` an exhaustive Bloch-sphere grid provides an independent check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .entropy import correlation_report
from .measure import (
    Povm,
    measured_conditional_entropy,
    measured_last,
)
from .qmat import unitary_from_generator
from .states import DensityMatrix, rng_from_seed


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 32
    seed: int = 0
    max_iter: int = 2000
    tol: float = 1e-9
    stall_window: int = 50
    povm_mode: str = "projective"  # or "neumark"
    init_scale: float = np.pi / 2

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("need at least one start")
        if self.povm_mode not in ("projective", "neumark"):
            raise ValueError(f"unknown POVM mode {self.povm_mode!r}")


@dataclass(frozen=True)
class OptimizerTrace:
    starts: int
    best_objective_history: tuple[float, ...]
    iterations: tuple[int, ...] = ()


@dataclass(frozen=True)
class DiscordResult:
    discord: float
    classical_corr: float
    optimal_basis: Povm
    tilde_s_min: float
    optimizer_trace: OptimizerTrace
    mutual_info: float
    cond_entropy: float
    s_a: float
    measured: str
    converged: bool = True
    best_start: int = 0


# ------------------------------------------------------------------ params


@lru_cache(maxsize=None)
def _upper(dim: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(dim, 1)


def generator_from_params(params, dim: int) -> np.ndarray:
    """Hermitian matrix from ``dim`` diagonal entries followed by
    ``(re, im)`` pairs for the upper triangle in row-major order."""
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.size != dim * dim:
        raise ValueError(f"expected {dim * dim} parameters for dim {dim}, got {params.size}")
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = params[:dim]
    iu = _upper(dim)
    off = params[dim:].reshape(-1, 2)
    h[iu] = off[:, 0] + 1j * off[:, 1]
    h[(iu[1], iu[0])] = off[:, 0] - 1j * off[:, 1]
    return h


def params_from_generator(h: np.ndarray) -> np.ndarray:
    d = h.shape[0]
    iu = np.triu_indices(d, 1)
    off = np.column_stack([h[iu].real, h[iu].imag]).reshape(-1)
    return np.concatenate([np.diag(h).real, off])


def basis_unitary(params, dim: int) -> np.ndarray:
    return unitary_from_generator(generator_from_params(params, dim))


def _fast_unitary(params, dim: int) -> np.ndarray:
    # generator is Hermitian by construction; skip validation in the hot loop
    w, v = np.linalg.eigh(generator_from_params(params, dim))
    return (v * np.exp(1j * w)) @ v.conj().T


def basis_from_params(params, dim: int, subsystem: str = "B") -> Povm:
    """Projectors onto the columns of ``exp(i H(params))``."""
    return Povm.from_basis(basis_unitary(params, dim), subsystem)


# --------------------------------------------------------------- objective


def _xlogx_sum(x: np.ndarray, axis=None) -> np.ndarray:
    x = np.clip(x, 0.0, None)
    safe = np.where(x > 0, x, 1.0)
    return np.sum(x * np.log2(safe), axis=axis)


def conditional_entropy_for_basis(t: np.ndarray, u: np.ndarray) -> float:
    """``sum_j p_j S(rho_{A|j})`` for projectors onto the columns of ``u``.

    ``t`` is the ``[a, b, a', b']`` tensor from :func:`measured_last`.
    Uses ``p S(M/p) = -tr M log M + p log p`` for ``M = p rho_{A|j}``.
    """
    x = np.tensordot(t, u, axes=([3], [0]))  # [a, d, c, j]
    blocks = np.einsum("adcj,dj->jac", x, u.conj())
    blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))
    lam = np.linalg.eigvalsh(blocks)
    p = np.trace(blocks, axis1=-2, axis2=-1).real
    return float(max(-_xlogx_sum(lam) + _xlogx_sum(p), 0.0))


def _neumark_dilate(rho: DensityMatrix, measured: str) -> DensityMatrix:
    """Append a ``|0>`` ancilla of dimension ``dim(B)`` to the measured factor.

    The result has the measured factor (now of dimension ``dim(B)**2``)
    last; projective measurements there realize rank-one POVMs on ``B``.
    """
    t, rest = measured_last(rho, measured)
    d_r, d_b = t.shape[0], t.shape[1]
    m = t.reshape(d_r * d_b, d_r * d_b)
    zero = np.zeros((d_b, d_b))
    zero[0, 0] = 1.0
    layout = rest.parts + ((measured, d_b * d_b),)
    return DensityMatrix(np.kron(m, zero), layout)


def _compress_povm(u: np.ndarray, d_b: int, subsystem: str) -> Povm:
    """POVM on ``B`` induced by projective measurement ``u`` on ``B ⊗ E`` with ``E`` in ``|0>``."""
    # rows of u indexed by (b, e); keep e = 0
    v = u.reshape(d_b, d_b, -1)[:, 0, :]
    elems = [np.outer(v[:, j], v[:, j].conj()) for j in range(v.shape[1])]
    return Povm(tuple(elems), subsystem)


def _minimize_start(objective, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[float, np.ndarray, bool, int]:
    n = x0.size
    simplex = np.vstack([x0] + [x0 + 0.3 * np.eye(n)[i] for i in range(n)])
    history: list[float] = []
    best = {"f": np.inf, "x": x0}
    stalled = []

    def wrapped(x):
        f = objective(x)
        if f < best["f"]:
            best["f"], best["x"] = f, np.array(x)
        return f

    def callback(xk):
        history.append(best["f"])
        w = cfg.stall_window
        if len(history) > w and history[-w - 1] - history[-1] <= cfg.tol:
            stalled.append(True)
            raise StopIteration

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            wrapped,
            x0,
            method="Nelder-Mead",
            callback=callback,
            options={
                "initial_simplex": simplex,
                "maxiter": cfg.max_iter,
                "maxfev": 4 * cfg.max_iter,
                "xatol": np.inf,
                "fatol": cfg.tol,
            },
        )
    converged = bool(res.success) or bool(stalled)
    return best["f"], best["x"], converged, int(res.nit)


def minimize_over_bases(objective_for_unitary, dim: int, cfg: OptimizerConfig):
    """Multi-start Nelder-Mead over ``exp(i H)`` bases of dimension ``dim``.

    Start 0 is the computational basis; start ``k`` draws its generator
    from the child stream ``(cfg.seed, k)``.  Returns
    ``(best_value, best_unitary, trace, converged, best_start)``; ties go
    to the lowest start index.
    """

    def objective(x):
        return objective_for_unitary(_fast_unitary(x, dim))

    best_f, best_x, best_k, best_conv = np.inf, None, 0, True
    history, iters = [], []
    for k in range(cfg.starts):
        if k == 0:
            x0 = np.zeros(dim * dim)
        else:
            x0 = cfg.init_scale * rng_from_seed(cfg.seed, k).standard_normal(dim * dim)
        f, x, conv, nit = _minimize_start(objective, x0, cfg)
        iters.append(nit)
        if f < best_f - 1e-12:
            best_f, best_x, best_k, best_conv = f, x, k, conv
        history.append(best_f)
    trace = OptimizerTrace(cfg.starts, tuple(history), tuple(iters))
    return best_f, basis_unitary(best_x, dim), trace, best_conv, best_k


# ------------------------------------------------------------------ public


def _bipartite(rho: DensityMatrix, measured: str) -> str:
    if len(rho.labels) != 2:
        raise ValueError(f"discord needs a bipartite layout, got {rho.layout}")
    if measured not in rho.labels:
        raise KeyError(f"measured subsystem {measured!r} not in {rho.labels}")
    return next(x for x in rho.labels if x != measured)


def discord(rho: DensityMatrix, measured: str = "B", cfg: OptimizerConfig | None = None) -> DiscordResult:
    """``D = I(A:B) - J(A:B)`` with the measurement on ``measured``."""
    cfg = cfg or OptimizerConfig()
    other = _bipartite(rho, measured)
    rep = correlation_report(rho, (other, measured))
    d_b = rho.layout.dim(measured)

    if cfg.povm_mode == "neumark":
        work = _neumark_dilate(rho, measured)
    else:
        work = rho
    t, _ = measured_last(work, measured)
    dim = t.shape[1]
    tilde, u, trace, conv, k = minimize_over_bases(lambda u: conditional_entropy_for_basis(t, u), dim, cfg)

    if cfg.povm_mode == "neumark":
        basis = _compress_povm(u, d_b, measured)
    else:
        basis = Povm.from_basis(u, measured)
    j = rep.s_a - tilde
    return DiscordResult(
        discord=rep.mutual_info - j,
        classical_corr=j,
        optimal_basis=basis,
        tilde_s_min=tilde,
        optimizer_trace=trace,
        mutual_info=rep.mutual_info,
        cond_entropy=rep.cond_entropy,
        s_a=rep.s_a,
        measured=measured,
        converged=conv,
        best_start=k,
    )


def fixed_basis_discord(rho: DensityMatrix, basis: Povm, projective_only: bool = True) -> float:
    """Discord evaluated for one given measurement, without optimization."""
    other = _bipartite(rho, basis.subsystem)
    if projective_only and not basis.is_orthogonal_basis():
        raise ValueError("basis must be a complete rank-one orthogonal measurement")
    rep = correlation_report(rho, (other, basis.subsystem))
    tilde = measured_conditional_entropy(rho, basis)
    return rep.mutual_info - (rep.s_a - tilde)


def bloch_grid(resolution: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Polar angles ``i (pi/2) / n_theta`` for ``i = 0..n_theta`` and azimuths
    ``k 2pi / n_phi`` for ``k = 0..n_phi-1``.

    Grids whose sizes divide each other are nested, so refining never loses
    a point.
    """
    n_theta, n_phi = resolution
    if n_theta < 1 or n_phi < 1:
        raise ValueError(f"invalid grid resolution {resolution}")
    theta = np.arange(n_theta + 1) * (np.pi / 2) / n_theta
    phi = np.arange(n_phi) * (2 * np.pi) / n_phi
    return theta, phi


def discord_grid_oracle(rho: DensityMatrix, resolution=(400, 800), measured: str = "B", chunk: int = 20000) -> float:
    """Minimum over a Bloch-angle grid of qubit projective measurements."""
    other = _bipartite(rho, measured)
    if rho.layout.dim(measured) != 2:
        raise ValueError("grid oracle needs a qubit measured subsystem")
    rep = correlation_report(rho, (other, measured))
    t, _ = measured_last(rho, measured)
    theta, phi = bloch_grid(resolution)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    best = np.inf
    for s in range(0, th.size, chunk):
        a, b = th[s : s + chunk], ph[s : s + chunk]
        # |n+> = (cos a/2, e^{ib} sin a/2), |n-> = (-e^{-ib} sin a/2, cos a/2)
        c, sn, e = np.cos(a / 2), np.sin(a / 2), np.exp(1j * b)
        plus = np.stack([c, e * sn], axis=1)
        minus = np.stack([-np.conj(e) * sn, c], axis=1)
        vals = np.zeros(a.size)
        for vec in (plus, minus):
            blocks = np.einsum("adcb,nb,nd->nac", t, vec, vec.conj(), optimize=True)
            blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))
            lam = np.linalg.eigvalsh(blocks)
            p = np.trace(blocks, axis1=-2, axis2=-1).real
            vals += -_xlogx_sum(lam, axis=-1) + _xlogx_sum(p[:, None], axis=-1)
        best = min(best, float(np.min(vals)))
    best = max(best, 0.0)
    return rep.mutual_info - (rep.s_a - best)
