"""Branch germs of plane curves ending at the origin.

A branch is stored in its canonical frame as the graph ``t -> (t, f(t))`` of a
finite power sum ``f(t) = sum a_i t**alpha_i`` with rational exponents > 1,
together with the rotation that carries the canonical frame to the world
frame.  A :class:`PlaneCurveGerm` is a finite union of such branches plus the
counterclockwise cyclic order of their tangent half-lines.

Curve-spec text format (one branch per line)::

    # comment
    epsilon=1
    branch rotate=30deg: 1*t^(3/2) + -2*t^3
    branch rotate=0rad: 0
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Rotations closer than this are treated as a shared tangent half-line.
ANGLE_TIE = 1e-12


class CurveSpecError(ValueError):
    """Raised for malformed curve specs or invalid branch data."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


def normalize_angle(theta: float) -> float:
    """Map an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:
        theta = 0.0
    return theta


@dataclass(frozen=True, order=True)
class PowerTerm:
    exponent: Fraction
    coeff: float

    def __post_init__(self):
        exponent = Fraction(self.exponent)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "coeff", float(self.coeff))
        if exponent <= 1:
            raise CurveSpecError(f"exponent must be > 1, got {exponent}")
        if self.coeff == 0.0 or not math.isfinite(self.coeff):
            raise CurveSpecError(f"coefficient must be finite and nonzero, got {self.coeff}")


@dataclass(frozen=True)
class BranchGerm:
    terms: tuple[PowerTerm, ...] = ()
    rotation: float = 0.0
    domain_length: float = 1.0

    def __post_init__(self):
        terms = tuple(sorted(self.terms, key=lambda term: term.exponent))
        for left, right in zip(terms, terms[1:]):
            if left.exponent == right.exponent:
                raise CurveSpecError(f"repeated exponent {left.exponent}")
        if not (self.domain_length > 0.0 and math.isfinite(self.domain_length)):
            raise CurveSpecError(f"domain length must be positive, got {self.domain_length}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "rotation", normalize_angle(float(self.rotation)))
        object.__setattr__(self, "domain_length", float(self.domain_length))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, Fraction | int | str]], rotation: float = 0.0,
                   domain_length: float = 1.0) -> "BranchGerm":
        """Build a branch from ``(coeff, exponent)`` pairs, e.g. ``[(1, "3/2")]``."""
        terms = [PowerTerm(Fraction(exp), coeff) for coeff, exp in pairs]
        return cls(tuple(terms), rotation, domain_length)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([term.coeff for term in self.terms], dtype=float)

    @property
    def exponents(self) -> np.ndarray:
        return np.array([float(term.exponent) for term in self.terms], dtype=float)

    def f(self, t):
        """Canonical-frame ordinate ``f(t)``; accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term.coeff * np.power(t, float(term.exponent))
        return out if out.ndim else float(out)

    def rotated(self, angle: float) -> "BranchGerm":
        return BranchGerm(self.terms, self.rotation + angle, self.domain_length)

    def lipschitz_bound(self) -> float:
        """Upper bound on ``|d/dt eval_branch(t)|`` over ``[0, eps]``."""
        eps = self.domain_length
        slope = sum(abs(term.coeff) * float(term.exponent) * eps ** (float(term.exponent) - 1.0)
                    for term in self.terms)
        return math.hypot(1.0, slope)


def eval_branch(branch: BranchGerm, t):
    """World-frame point(s) of ``branch`` at parameter ``t``.

    Returns a length-2 array for scalar ``t`` and an ``(..., 2)`` array
    otherwise.  ``t = 0`` maps to the origin exactly.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > branch.domain_length) or np.any(np.isnan(t_arr)):
        raise ValueError(f"parameter outside [0, {branch.domain_length}]")
    y = np.asarray(branch.f(t_arr), dtype=float)
    c, s = math.cos(branch.rotation), math.sin(branch.rotation)
    return np.stack([c * t_arr - s * y, s * t_arr + c * y], axis=-1)


def branch_tangent_direction(branch: BranchGerm) -> np.ndarray:
    return np.array([math.cos(branch.rotation), math.sin(branch.rotation)])


def _tangent_key(branch: BranchGerm) -> float:
    # angle in [-pi, pi) so that e.g. -pi/6 sorts before +pi/6
    theta = branch.rotation
    return theta - TWO_PI if theta >= math.pi else theta


def _same_tangent(a: BranchGerm, b: BranchGerm) -> bool:
    diff = abs(a.rotation - b.rotation)
    return min(diff, TWO_PI - diff) <= ANGLE_TIE


def _ordinate_difference_sign(a: BranchGerm, b: BranchGerm) -> int:
    """Sign of ``f_a - f_b`` for small t > 0 (shared canonical frame)."""
    diff: dict[Fraction, float] = {}
    for term in a.terms:
        diff[term.exponent] = diff.get(term.exponent, 0.0) + term.coeff
    for term in b.terms:
        diff[term.exponent] = diff.get(term.exponent, 0.0) - term.coeff
    for exponent in sorted(diff):
        if diff[exponent] != 0.0:
            return 1 if diff[exponent] > 0.0 else -1
    return 0


def order_branches(branches: Sequence[BranchGerm]) -> tuple[int, ...]:
    """Counterclockwise cyclic order of branch indices by tangent direction.

    Branches sharing a tangent half-line are ordered so that the one lying
    clockwise (below, in the shared canonical frame) comes first.
    """
    if not branches:
        raise CurveSpecError("a curve germ needs at least one branch")

    def compare(i: int, j: int) -> int:
        bi, bj = branches[i], branches[j]
        if _same_tangent(bi, bj):
            sign = _ordinate_difference_sign(bi, bj)
            if sign == 0:
                raise CurveSpecError(f"branches {i} and {j} are indistinguishable")
            return sign
        return -1 if _tangent_key(bi) < _tangent_key(bj) else 1

    # pairwise check catches duplicates that a sort might never compare
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            if _same_tangent(branches[i], branches[j]) and \
                    _ordinate_difference_sign(branches[i], branches[j]) == 0:
                raise CurveSpecError(f"branches {i} and {j} are indistinguishable")
    return tuple(sorted(range(len(branches)), key=cmp_to_key(compare)))


@dataclass(frozen=True)
class PlaneCurveGerm:
    branches: tuple[BranchGerm, ...]
    ordering: tuple[int, ...] = field(default=())

    def __post_init__(self):
        branches = tuple(self.branches)
        object.__setattr__(self, "branches", branches)
        ordering = order_branches(branches)
        if self.ordering and tuple(self.ordering) != ordering:
            raise CurveSpecError("ordering is not the counterclockwise tangent order")
        object.__setattr__(self, "ordering", ordering)

    @property
    def k(self) -> int:
        return len(self.branches)

    @property
    def epsilon(self) -> float:
        return min(b.domain_length for b in self.branches)

    def regions(self) -> list[tuple[int, int]]:
        """Consecutive pairs ``(i, next)`` in cyclic order; empty for k = 1."""
        if self.k < 2:
            return []
        order = self.ordering
        return [(order[m], order[(m + 1) % self.k]) for m in range(self.k)]

    def rotated(self, angle: float) -> "PlaneCurveGerm":
        return PlaneCurveGerm(tuple(b.rotated(angle) for b in self.branches))


# --- curve-spec text format -------------------------------------------------

_NUMBER = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_BRANCH_RE = re.compile(rf"^branch\s+rotate\s*=\s*({_NUMBER})\s*(deg|rad)\s*:(.*)$")
_EPS_RE = re.compile(rf"^epsilon\s*=\s*({_NUMBER})\s*$")
_TERM_RE = re.compile(
    rf"^({_NUMBER}(?:/\d+)?)\s*\*\s*t\s*\^\s*(?:\(\s*(\d+)\s*(?:/\s*(\d+)\s*)?\)|(\d+))$")


def _parse_coeff(text: str) -> float:
    if "/" in text:
        num, den = text.split("/")
        if float(den) == 0.0:
            raise ValueError("zero denominator")
        return float(Fraction(num) / Fraction(den))
    return float(text)


def _split_terms(body: str) -> list[tuple[str, int]]:
    """Split ``a*t^x + b*t^y - c*t^z`` into signed term strings with offsets."""
    pieces: list[tuple[str, int]] = []
    start = 0
    depth = 0
    sign = ""
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0:
            prev = body[:i].rstrip()
            # a sign directly after 'e', '*', '^' or at the start belongs to a number
            if prev and prev[-1] not in "eE*^+-":
                pieces.append((sign + body[start:i].strip(), _first_char(body, start)))
                sign = "-" if ch == "-" else ""
                start = i + 1
        i += 1
    pieces.append((sign + body[start:].strip(), _first_char(body, start)))
    return pieces


def _first_char(body: str, start: int) -> int:
    while start < len(body) and body[start].isspace():
        start += 1
    return start


def _parse_branch_body(body: str, line: int, col0: int) -> list[PowerTerm]:
    stripped = body.strip()
    if stripped in ("0", "(empty)", ""):
        return []
    terms: dict[Fraction, float] = {}
    for text, offset in _split_terms(body):
        signs, rest = re.match(r"^([+-]*)(.*)$", text.replace(" ", "")).groups()
        match = _TERM_RE.match(rest)
        column = col0 + offset + 1
        if not match or not rest:
            raise CurveSpecError(f"cannot parse term {text!r}", line, column)
        try:
            coeff = _parse_coeff(match.group(1))
            if signs.count("-") % 2:
                coeff = -coeff
        except (ValueError, ZeroDivisionError) as exc:
            raise CurveSpecError(f"bad coefficient {match.group(1)!r}", line, column) from exc
        if match.group(4) is not None:
            exponent = Fraction(int(match.group(4)))
        else:
            den = int(match.group(3)) if match.group(3) else 1
            if den == 0:
                raise CurveSpecError("zero denominator in exponent", line, column)
            exponent = Fraction(int(match.group(2)), den)
        if exponent <= 1:
            raise CurveSpecError(f"exponent must be > 1, got {exponent}", line, column)
        terms[exponent] = terms.get(exponent, 0.0) + coeff
    return [PowerTerm(exp, c) for exp, c in sorted(terms.items()) if c != 0.0]


def parse_curve_spec(text: str) -> PlaneCurveGerm:
    """Parse curve-spec text into a validated :class:`PlaneCurveGerm`."""
    epsilon = 1.0
    raw: list[tuple[int, float, list[PowerTerm]]] = []
    for lineno, full in enumerate(text.splitlines(), start=1):
        line = full.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        line = line.strip()
        match = _EPS_RE.match(line)
        if match:
            if raw:
                raise CurveSpecError("epsilon header must precede branches", lineno, indent + 1)
            epsilon = float(match.group(1))
            if not (epsilon > 0.0 and math.isfinite(epsilon)):
                raise CurveSpecError(f"epsilon must be positive, got {epsilon}", lineno, indent + 1)
            continue
        match = _BRANCH_RE.match(line)
        if not match:
            raise CurveSpecError("expected 'branch rotate=<angle><deg|rad>: <terms>' "
                                 "or 'epsilon=<number>'", lineno, indent + 1)
        value = float(match.group(1))
        rotation = math.radians(value) if match.group(2) == "deg" else value
        terms = _parse_branch_body(match.group(3), lineno, indent + match.start(3))
        raw.append((lineno, rotation, terms))
    if not raw:
        raise CurveSpecError("no branches found")
    branches = [BranchGerm(tuple(terms), rotation, epsilon) for _, rotation, terms in raw]
    for i in range(len(branches)):
        for j in range(i):
            if _same_tangent(branches[i], branches[j]) and \
                    _ordinate_difference_sign(branches[i], branches[j]) == 0:
                raise CurveSpecError(f"duplicate branch (same as branch {j})", raw[i][0], 1)
    return PlaneCurveGerm(tuple(branches))


def _format_exponent(exponent: Fraction) -> str:
    if exponent.denominator == 1:
        return f"t^{exponent.numerator}"
    return f"t^({exponent.numerator}/{exponent.denominator})"


def serialize_curve_spec(curve: PlaneCurveGerm) -> str:
    """Canonical text: increasing exponents, rotations in radians."""
    eps_values = {b.domain_length for b in curve.branches}
    if len(eps_values) != 1:
        raise CurveSpecError("curve-spec text needs a single epsilon for all branches")
    lines = [f"epsilon={eps_values.pop()!r}"]
    for branch in curve.branches:
        if branch.is_zero:
            body = "0"
        else:
            body = " + ".join(f"{term.coeff!r}*{_format_exponent(term.exponent)}"
                              for term in branch.terms)
        lines.append(f"branch rotate={branch.rotation!r}rad: {body}")
    return "\n".join(lines) + "\n"


def load_curve(path) -> PlaneCurveGerm:
    with open(path, encoding="utf-8") as fh:
        return parse_curve_spec(fh.read())
