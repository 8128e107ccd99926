"""Command-line front end.

Exit codes: 0 success, 1 property violation, 2 input error, 3 optimizer
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .discord import OptimizerConfig, discord, discord_grid_oracle
from .entropy import ssa_slack
from .measure import InvalidPovmError, Povm, ancilla_extension, theorem1_report
from .protocols import (
    all_losses,
    dense_coding_loss,
    distillation_loss,
    fqswd_budget,
    merging_budget,
    merging_markup,
    mother_budget,
)
from .qmat import DimensionError
from .rescalc import derive_qsm
from .states import (
    DensityMatrix,
    InvalidStateError,
    PureState,
    as_density,
    from_pure,
    load_state,
    named_family,
    purify,
    random_density,
    random_unitary,
)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3

TWO_QUBITS = (("A", 2), ("B", 2))
THREE_QUBITS = (("A", 2), ("B", 2), ("C", 2))

SUITE_TOL = {"ssa": 1e-9, "theorem1": 1e-9, "losses": 1e-5}


class InputError(Exception):
    pass


def _g(x: float) -> str:
    # rounding noise around zero prints as 0
    return f"{0.0 if abs(x) < 1e-13 else x:.9g}"


# ------------------------------------------------------------------- input


def _read_state(path) -> DensityMatrix | PureState:
    try:
        return load_state(path)
    except FileNotFoundError as exc:
        raise InputError(f"{path}: no such file") from exc
    except (InvalidStateError, DimensionError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _read_basis(spec: str | None, dim: int, subsystem: str = "B") -> Povm | None:
    """``computational`` or ``file:<path>`` holding a JSON unitary whose columns are the basis."""
    if spec is None:
        return None
    if spec == "computational":
        return Povm.computational(dim, subsystem)
    if spec.startswith("file:"):
        path = spec[5:]
        try:
            doc = json.loads(Path(path).read_text())
            raw = np.asarray(doc["matrix"], dtype=float)
            u = raw[..., 0] + 1j * raw[..., 1]
            if u.shape != (dim, dim):
                raise InputError(f"{path}: basis must be {dim}x{dim}, got {u.shape}")
            return Povm.from_basis(u, subsystem)
        except InputError:
            raise
        except (OSError, KeyError, ValueError, IndexError, InvalidPovmError) as exc:
            raise InputError(f"{path}: cannot read basis ({exc})") from exc
    raise InputError(f"unknown basis spec {spec!r}; use 'computational' or 'file:<path>'")


def _parse_grid_check(text: str | None):
    if text is None:
        return None
    try:
        n, m = (int(x) for x in text.lower().split("x"))
    except ValueError as exc:
        raise InputError(f"--grid-check expects NxM, got {text!r}") from exc
    return n, m


def _cfg(args) -> OptimizerConfig:
    return OptimizerConfig(
        starts=args.starts,
        seed=args.seed,
        povm_mode="neumark" if getattr(args, "neumark", False) else "projective",
    )


def _format_matrix(m: np.ndarray, indent: str = "    ") -> str:
    rows = []
    for row in m:
        rows.append(indent + "  ".join(f"{z.real:+.6f}{z.imag:+.6f}i" for z in row))
    return "\n".join(rows)


# ----------------------------------------------------------------- discord


def cmd_discord(args) -> int:
    state = as_density(_read_state(args.input))
    if len(state.labels) != 2:
        raise InputError(f"discord needs a bipartite state, got layout {state.layout}")
    if args.measured not in state.labels:
        raise InputError(f"measured subsystem {args.measured!r} not in {state.labels}")
    res = discord(state, args.measured, _cfg(args))
    other = next(x for x in state.labels if x != args.measured)
    print(f"measured subsystem: {args.measured}")
    print(f"discord D({other}:{args.measured}) = {res.discord:.9f}")
    print(f"classical correlation J = {res.classical_corr:.9f}")
    print(f"mutual information I = {res.mutual_info:.9f}")
    print(f"conditional entropy S({other}|{args.measured}) = {res.cond_entropy:.9f}")
    print(f"min measured conditional entropy = {res.tilde_s_min:.9f}")
    print("optimal measurement (one projector per block):")
    for i, e in enumerate(res.optimal_basis.elements):
        print(f"  element {i}:")
        print(_format_matrix(e))
    hist = res.optimizer_trace.best_objective_history
    print(
        f"optimizer: {res.optimizer_trace.starts} starts, best from start {res.best_start}, "
        f"best objective after first/last start {hist[0]:.9f}/{hist[-1]:.9f}, "
        f"converged={res.converged}"
    )
    status = EXIT_OK
    grid = _parse_grid_check(args.grid_check)
    if grid is not None:
        if state.layout.dim(args.measured) != 2:
            raise InputError("--grid-check needs a qubit measured subsystem")
        g = discord_grid_oracle(state, grid, args.measured)
        delta = res.discord - g
        ok = abs(delta) <= 1e-4
        print(f"grid oracle {grid[0]}x{grid[1]}: {g:.9f}  delta = {delta:+.3e}  {'ok' if ok else 'MISMATCH'}")
        if not ok:
            status = EXIT_VIOLATION
    if not res.converged:
        print("optimizer did not converge within the iteration cap", file=sys.stderr)
        return EXIT_NONCONVERGED
    return status


# ------------------------------------------------------------------ verify


def trial_state(seed: int, layout=TWO_QUBITS, rank: int | None = None) -> DensityMatrix:
    dim = int(np.prod([d for _, d in layout]))
    return random_density(dim, rank or dim, seed, layout=layout)


def trial_basis(seed: int, dim: int = 2, subsystem: str = "B") -> Povm:
    # offset keeps the basis stream distinct from the state stream of the same seed
    return Povm.from_basis(random_unitary(dim, seed + 10_000_019), subsystem)


@dataclass
class SuiteOutcome:
    passed: int = 0
    failed: int = 0
    worst: float = 0.0
    worst_seed: int | None = None
    failing_seeds: list | None = None

    def record(self, seed: int, residual: float, ok: bool):
        if residual > self.worst or self.worst_seed is None:
            self.worst, self.worst_seed = residual, seed
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failing_seeds = (self.failing_seeds or []) + [seed]


def run_ssa_suite(trials: int, seed: int, tol: float) -> SuiteOutcome:
    """Worst residual here is the most negative slack, reported as a magnitude."""
    out = SuiteOutcome()
    for i in range(trials):
        s = seed + i
        slack = ssa_slack(trial_state(s, THREE_QUBITS, rank=4), "A", "B", "C")
        out.record(s, max(-slack, 0.0), slack >= -tol)
    return out


def run_theorem1_suite(trials: int, seed: int, tol: float) -> SuiteOutcome:
    out = SuiteOutcome()
    for i in range(trials):
        s = seed + i
        rep = theorem1_report(trial_state(s), trial_basis(s), tol)
        out.record(s, rep.max_residual, rep.identities_hold(tol) and rep.discord_lower_bound_ok)
    return out


def loss_residuals(rho: DensityMatrix, cfg: OptimizerConfig) -> dict[str, float]:
    """Optimize the decohered mother protocol's loss, evaluate all four
    losses at that basis, and compare with an independent discord run."""
    d = discord(rho, "B", cfg)
    opt = fqswd_budget(rho, optimize=True, cfg=cfg)
    losses = all_losses(rho, opt.basis)
    vals = {k: v.loss for k, v in losses.items()}
    spread = max(vals.values()) - min(vals.values())
    return {
        "discord": d.discord,
        **vals,
        "cross_spread": spread,
        "vs_discord": max(abs(v - d.discord) for v in vals.values()),
        "reference": max(abs(c.reference_residual) for c in losses.values()),
        "marginal": max(abs(c.marginal_residual) for c in losses.values()),
    }


def run_losses_suite(trials: int, seed: int, tol: float, starts: int = 32) -> SuiteOutcome:
    out = SuiteOutcome()
    cfg = OptimizerConfig(starts=starts, seed=seed)
    for i in range(trials):
        s = seed + i
        r = loss_residuals(trial_state(s), cfg)
        ok = r["vs_discord"] <= tol and r["cross_spread"] <= 1e-10 and r["reference"] <= 1e-9 and r["marginal"] <= 1e-9
        out.record(s, r["vs_discord"], ok)
    return out


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    tol = args.tol if args.tol is not None else SUITE_TOL[args.suite]
    if args.suite == "ssa":
        out = run_ssa_suite(args.trials, args.seed, tol)
    elif args.suite == "theorem1":
        out = run_theorem1_suite(args.trials, args.seed, tol)
    else:
        out = run_losses_suite(args.trials, args.seed, tol, args.starts)
    print(f"suite {args.suite}: {out.passed} passed, {out.failed} failed (tolerance {tol:g})")
    print(f"worst residual {out.worst:.3e} at seed {out.worst_seed}")
    if out.failed:
        print("offending seeds: " + " ".join(str(s) for s in out.failing_seeds))
        return EXIT_VIOLATION
    return EXIT_OK


# ------------------------------------------------------------------ budget

BUDGET_HEADER = (
    "# rates per copy; qubit/cbit columns are costs unless notes say yield; "
    "ebit column is a yield (negative = consumed); negative merging qubit cost = ebits distilled"
)
BUDGET_FIELDS = ["protocol", "stage", "basis", "qubit_rate", "cbit_rate", "ebit_rate", "loss", "discord_residual", "notes"]


def _bipartite_and_purified(state) -> tuple[DensityMatrix, DensityMatrix]:
    rho = as_density(state)
    labels = sorted(rho.labels)
    if labels == ["A", "B"]:
        return rho, from_pure(purify(rho, "R"))
    if labels == ["A", "B", "R"]:
        if abs(rho.purity() - 1) > 1e-9:
            raise InputError("a state on A, B, R must be pure")
        return rho.reduce(["A", "B"]), rho
    raise InputError(f"budget needs a state on A,B or a pure state on A,B,R; got {rho.labels}")


def cmd_budget(args) -> int:
    state = _read_state(args.input)
    rho_ab, psi = _bipartite_and_purified(state)
    rows = []

    def row(protocol, stage, basis, b, loss="", residual=""):
        rows.append(
            {
                "protocol": protocol,
                "stage": stage,
                "basis": basis,
                "qubit_rate": _g(b.qubit_channel_rate),
                "cbit_rate": _g(b.cbit_channel_rate),
                "ebit_rate": _g(b.ebit_rate),
                "loss": loss if loss == "" else _g(loss),
                "discord_residual": residual if residual == "" else _g(residual),
                "notes": b.notes,
            }
        )

    proto = args.protocol
    if proto == "mother":
        row("mother", "coherent", "", mother_budget(psi))
    elif proto == "qsm":
        row("qsm", "coherent", "", merging_budget(rho_ab))
        d = derive_qsm(psi)
        rows.append(
            {"protocol": "qsm", "stage": "derived", "basis": "", "qubit_rate": _g(d.qubit_cost), "cbit_rate": _g(d.cbit_cost),
             "ebit_rate": _g(0.0), "loss": "", "discord_residual": "", "notes": str(d.result)}
        )
    fn = {"fqswd": fqswd_budget, "qsm": merging_markup, "sdc": dense_coding_loss, "ed": distillation_loss}.get(proto)
    if fn is not None:
        d_b = rho_ab.layout.dim("B")
        fixed = _read_basis(args.basis, d_b) or Povm.computational(d_b, "B")
        name = "computational" if args.basis in (None, "computational") else args.basis
        comps = [(name, fn(psi, fixed))]
        if args.optimize:
            cfg = _cfg(args)
            opt = fn(psi, optimize=True, cfg=cfg)
            disc = discord(rho_ab, "B", cfg).discord
            comps.append(("optimized", opt, disc))
        for entry in comps:
            label, c = entry[0], entry[1]
            residual = c.loss - entry[2] if len(entry) > 2 else c.equals_discord_residual
            if proto != "qsm":
                row(proto, "before", label, c.before)
            row(proto, "after", label, c.after, c.loss, residual)
    print(BUDGET_HEADER)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BUDGET_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.csv:
        try:
            Path(args.csv).write_text(buf.getvalue())
        except OSError as exc:
            raise InputError(f"cannot write {args.csv}: {exc}") from exc
    for r in rows:
        extra = f"  loss={r['loss']}  loss-discord={r['discord_residual']}" if r["loss"] != "" else ""
        print(
            f"{r['protocol']:7s} {r['stage']:9s} {r['basis']:13s} qubit={r['qubit_rate']:>12s} "
            f"cbit={r['cbit_rate']:>12s} ebit={r['ebit_rate']:>12s}{extra}"
        )
    return EXIT_OK


# ------------------------------------------------------------------- sweep

SWEEP_FIELDS = [
    "seed",
    "family",
    "params",
    "discord",
    "merging_markup",
    "dense_coding_loss",
    "distillation_loss",
    "ssa_min_slack",
    "residual_max",
]


@dataclass
class SweepRow:
    seed: int
    family: str
    params: tuple
    discord: float
    merging_markup: float
    dense_coding_loss: float
    distillation_loss: float
    ssa_min_slack: float
    residual_max: float

    def as_csv(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "params":
                out[f.name] = ";".join(_g(x) for x in v)
            elif isinstance(v, float):
                out[f.name] = _g(v)
            else:
                out[f.name] = v
        return out


def sweep_row(rho: DensityMatrix, seed: int, family: str, params, cfg: OptimizerConfig) -> SweepRow:
    d = discord(rho, "B", cfg)
    opt = fqswd_budget(rho, optimize=True, cfg=cfg)
    losses = all_losses(rho, opt.basis)
    ext = ancilla_extension(rho, opt.basis, "C")
    slack = min(ssa_slack(ext, *perm) for perm in (("A", "B", "C"), ("B", "C", "A"), ("C", "A", "B")))
    residual = max(abs(c.loss - d.discord) for c in losses.values())
    return SweepRow(
        seed=seed,
        family=family,
        params=tuple(params),
        discord=d.discord,
        merging_markup=losses["merging_markup"].loss,
        dense_coding_loss=losses["dense_coding_loss"].loss,
        distillation_loss=losses["distillation_loss"].loss,
        ssa_min_slack=slack,
        residual_max=residual,
    )


def _parse_param_grid(text: str | None) -> list[list[float]]:
    """``start:stop:count`` (inclusive linspace) or ``a,b,c``; ``|`` separates
    parameter sets for multi-parameter families."""
    if text is None:
        return [[]]
    try:
        if ":" in text and "|" not in text:
            start, stop, count = text.split(":")
            return [[float(x)] for x in np.linspace(float(start), float(stop), int(count))]
        if "|" in text:
            return [[float(x) for x in part.split(",") if x.strip()] for part in text.split("|")]
        return [[float(x)] for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse parameter grid {text!r}") from exc


def sweep_rows(family: str, grid: str | None, trials: int, seed: int, cfg: OptimizerConfig) -> list[SweepRow]:
    rows = []
    if family == "random":
        for i in range(trials):
            s = seed + i
            rows.append(sweep_row(trial_state(s), s, family, (), cfg))
        return rows
    for params in _parse_param_grid(grid):
        try:
            rho = named_family(family, params)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        if sorted(rho.labels) != ["A", "B"]:
            raise InputError(f"family {family!r} is not bipartite")
        rows.append(sweep_row(rho, seed, family, params, cfg))
    return rows


def write_sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()


def cmd_sweep(args) -> int:
    if args.family == "random" and args.trials < 1:
        raise InputError("--trials must be at least 1")
    rows = sweep_rows(args.family, args.grid, args.trials, args.seed, _cfg(args))
    text = write_sweep_csv(rows)
    out = args.out or args.csv
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
        print(f"wrote {len(rows)} rows to {out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    common.add_argument("--tol", type=float, default=None, help="override the suite tolerance")
    common.add_argument("--starts", type=int, default=32, help="optimizer multi-start count")
    common.add_argument("--csv", default=None, help="write machine-readable CSV here")
    common.add_argument("--grid-check", default=None, metavar="NxM", help="compare with the Bloch grid oracle")
    common.add_argument("--optimize", action="store_true", help="minimize losses over measurement bases")
    common.add_argument("--basis", default=None, help="computational | file:<path>")

    p = argparse.ArgumentParser(prog="qdiscord", description="Quantum discord and decoherence budgets.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discord", parents=[common], help="optimized discord of a state file")
    d.add_argument("input")
    d.add_argument("--measured", default="B")
    d.add_argument("--neumark", action="store_true", help="search rank-one POVMs via Neumark dilation")
    d.set_defaults(func=cmd_discord)

    v = sub.add_parser("verify", parents=[common], help="run a seeded property suite")
    v.add_argument("suite", choices=["ssa", "theorem1", "losses"])
    v.add_argument("--trials", type=int, default=100)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("budget", parents=[common], help="protocol rate budgets")
    b.add_argument("protocol", choices=["mother", "fqswd", "qsm", "sdc", "ed"])
    b.add_argument("input")
    b.set_defaults(func=cmd_budget)

    s = sub.add_parser("sweep", parents=[common], help="seeded sweep to CSV")
    s.add_argument("family", help="random, werner, or another bipartite named family")
    s.add_argument("--grid", default=None, help="start:stop:count, a,b,c, or p1,p2|q1,q2 sets")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.starts < 1:
        print("error: --starts must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
