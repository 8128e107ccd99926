"""Resource inequalities: parsing, printing, composition with cancellation.

Grammar (whitespace-insensitive)::

    inequality := side ('>=!' | '>=') side
    side       := '0' | term ('+' term)*
    term       := [rate] '[' kind ']' | [rate] '<' tag '>'
    kind       := 'q->q' | 'c->c' | 'qq'

``>=!`` marks exact attainability; ``>=`` asymptotic.  Rates are
non-negative decimals; a missing rate means 1.  Rates are plain numbers
bound from a state's entropies, there is no symbolic algebra.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .entropy import mutual_information
from .states import DensityMatrix, PureState, from_pure

QUBIT = "q->q"
CBIT = "c->c"
EBIT = "qq"
STATE = "state"
CHANNEL_KINDS = (QUBIT, CBIT, EBIT)
CANCEL_TOL = 1e-12


class ResourceSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text!r}")


@dataclass(frozen=True)
class ResourceTerm:
    kind: str
    rate: float = 1.0
    tag: str | None = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS + (STATE,):
            raise ValueError(f"unknown resource kind {self.kind!r}")
        if not self.rate >= 0:
            raise ValueError(f"resource rate must be non-negative, got {self.rate}")
        if (self.kind == STATE) != (self.tag is not None):
            raise ValueError("state resources carry a tag; channel and ebit terms do not")

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.kind, self.tag)

    def scaled(self, k: float) -> "ResourceTerm":
        return ResourceTerm(self.kind, self.rate * k, self.tag)

    def __str__(self):
        rate = "" if self.rate == 1.0 and self.kind == STATE else _fmt(self.rate) + " "
        if self.kind == STATE:
            return f"{rate}<{self.tag}>"
        return f"{rate}[{self.kind}]"


def _fmt(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class ResourceInequality:
    lhs: tuple[ResourceTerm, ...] = ()
    rhs: tuple[ResourceTerm, ...] = ()
    exact: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lhs", tuple(self.lhs))
        object.__setattr__(self, "rhs", tuple(self.rhs))

    @property
    def strength(self) -> str:
        return "exact" if self.exact else "asymptotic"

    def net(self, kind: str, tag: str | None = None) -> float:
        """Total rate on the left minus total rate on the right."""
        left = sum(t.rate for t in self.lhs if t.key == (kind, tag))
        right = sum(t.rate for t in self.rhs if t.key == (kind, tag))
        return left - right

    def scaled(self, k: float) -> "ResourceInequality":
        if k < 0:
            raise ValueError(f"scale factor must be non-negative, got {k}")
        return ResourceInequality(
            tuple(t.scaled(k) for t in self.lhs), tuple(t.scaled(k) for t in self.rhs), self.exact
        )

    def __str__(self):
        def side(terms):
            return " + ".join(str(t) for t in terms) if terms else "0"

        rel = ">=!" if self.exact else ">="
        return f"{side(self.lhs)} {rel} {side(self.rhs)}"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|\[(?P<kind>[^\]]*)\]"
    r"|<(?P<tag>[^<>]*)>"
    r"|(?P<rel>>=!|>=)"
    r"|(?P<plus>\+)"
    r"|(?P<minus>-))"
)


def _tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ResourceSyntaxError("unexpected character", text, bad)
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        out.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    return out


def parse_inequality(text: str) -> ResourceInequality:
    toks = _tokens(text)
    rels = [t for t in toks if t[0] == "rel"]
    if len(rels) != 1:
        where = rels[1][2] if rels else len(text)
        raise ResourceSyntaxError("expected exactly one '>=' or '>=!'", text, where)
    split = toks.index(rels[0])
    lhs = _parse_side(toks[:split], text, rels[0][2])
    rhs = _parse_side(toks[split + 1 :], text, len(text))
    return ResourceInequality(lhs, rhs, exact=rels[0][1] == ">=!")


def _parse_side(toks, text: str, end_pos: int) -> tuple[ResourceTerm, ...]:
    if not toks:
        raise ResourceSyntaxError("empty side", text, end_pos)
    if len(toks) == 1 and toks[0][0] == "num" and float(toks[0][1]) == 0.0:
        return ()
    terms = []
    i = 0
    expect_term = True
    while i < len(toks):
        kind, val, pos = toks[i]
        if not expect_term:
            if kind != "plus":
                raise ResourceSyntaxError("expected '+'", text, pos)
            expect_term = True
            i += 1
            continue
        rate = 1.0
        if kind == "minus":
            raise ResourceSyntaxError("negative rate", text, pos)
        if kind == "num":
            rate = float(val)
            i += 1
            if i >= len(toks):
                raise ResourceSyntaxError("rate without a resource", text, pos)
            kind, val, pos = toks[i]
        if kind == "kind":
            k = val.strip().replace(" ", "")
            if k not in CHANNEL_KINDS:
                raise ResourceSyntaxError(f"unknown resource [{val}]", text, pos)
            terms.append(ResourceTerm(k, rate))
        elif kind == "tag":
            if not val.strip():
                raise ResourceSyntaxError("empty state tag", text, pos)
            terms.append(ResourceTerm(STATE, rate, val.strip()))
        else:
            raise ResourceSyntaxError("expected a resource term", text, pos)
        expect_term = False
        i += 1
    if expect_term:
        raise ResourceSyntaxError("dangling '+'", text, toks[-1][2])
    return tuple(terms)


def format_inequality(ineq: ResourceInequality) -> str:
    return str(ineq)


def cancel(lhs, rhs, exact: bool) -> ResourceInequality:
    """Net out equal resources on the two sides.

    Resources match on kind and, for states, on tag.  Whatever remains of
    each resource goes to the side where its net rate is positive.
    """
    order: list[tuple] = []
    net: dict[tuple, float] = {}
    for sign, terms in ((1.0, lhs), (-1.0, rhs)):
        for t in terms:
            if t.key not in net:
                order.append(t.key)
                net[t.key] = 0.0
            net[t.key] += sign * t.rate
    new_l, new_r = [], []
    for key in order:
        r = net[key]
        if abs(r) <= CANCEL_TOL:
            continue
        term = ResourceTerm(key[0], abs(r), key[1])
        (new_l if r > 0 else new_r).append(term)
    return ResourceInequality(tuple(new_l), tuple(new_r), exact)


def compose(a: ResourceInequality, b: ResourceInequality, scale: float = 1.0) -> ResourceInequality:
    """Add ``b`` (times ``scale``) to ``a`` and cancel shared resources.

    The result is exact only when both inputs are exact.
    """
    b = b.scaled(scale)
    return cancel(a.lhs + b.lhs, a.rhs + b.rhs, a.exact and b.exact)


TELEPORTATION = parse_inequality("1 [qq] + 2 [c->c] >=! 1 [q->q]")
STATE_IN = "W_S_AB:Psi"
STATE_OUT = "id_S_Bhat:Psi"


def fqsw_inequality(i_ar: float, i_ab: float) -> ResourceInequality:
    return ResourceInequality(
        (ResourceTerm(STATE, 1.0, STATE_IN), ResourceTerm(QUBIT, 0.5 * i_ar)),
        (ResourceTerm(EBIT, 0.5 * i_ab), ResourceTerm(STATE, 1.0, STATE_OUT)),
        exact=False,
    )


@dataclass(frozen=True)
class MergingDerivation:
    fqsw: ResourceInequality
    teleportation: ResourceInequality
    result: ResourceInequality
    i_ar: float
    i_ab: float

    @property
    def qubit_cost(self) -> float:
        """Net qubits sent; negative means qubit capacity is left over."""
        return self.result.net(QUBIT)

    @property
    def cbit_cost(self) -> float:
        return self.result.net(CBIT)


def derive_qsm(psi) -> MergingDerivation:
    """State merging from FQSW followed by teleporting with every ebit it yields."""
    rho = from_pure(psi) if isinstance(psi, PureState) else psi
    if not isinstance(rho, DensityMatrix) or sorted(rho.labels) != ["A", "B", "R"]:
        raise ValueError("derive_qsm needs a pure state on A, B, R")
    if abs(rho.purity() - 1) > 1e-9:
        raise ValueError("derive_qsm needs a pure state")
    i_ar = mutual_information(rho, "A", "R")
    i_ab = mutual_information(rho, "A", "B")
    fqsw = fqsw_inequality(i_ar, i_ab)
    result = compose(fqsw, TELEPORTATION, scale=0.5 * i_ab)
    return MergingDerivation(fqsw, TELEPORTATION, result, i_ar, i_ab)
