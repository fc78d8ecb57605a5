"""Named curve germs used by the demos, the tests and the CLI (``--curve name:<id>``)."""
from __future__ import annotations

from .curve import PlaneCurveGerm, parse_curve_spec

SPECS: dict[str, str] = {
    # two half-lines y = +-x, meeting at a right angle
    "two-lines": "branch rotate=45deg: 0\nbranch rotate=-45deg: 0\n",
    # a straight line through 0, split into two half-lines
    "full-line": "branch rotate=0deg: 0\nbranch rotate=180deg: 0\n",
    "half-line": "branch rotate=0deg: 0\n",
    # branches tangent to y = x/sqrt(3) and y = -x/sqrt(3), each bending away
    # from the thin region between them
    "example": "branch rotate=30deg: 1*t^(3/2)\nbranch rotate=-30deg: -1*t^(3/2)\n",
    # half-line with a superquadratic branch above it, sharing the tangent
    "cusp": "branch rotate=0deg: 0\nbranch rotate=0deg: 1*t^(3/2)\n",
}


def power_branch(p: int, q: int = 1, coeff: str = "1", rotate_deg: float = 0.0) -> str:
    return f"branch rotate={rotate_deg!r}deg: {coeff}*t^({p}/{q})\n"


for _p, _q in ((5, 4), (13, 10), (3, 2), (7, 4), (9, 5), (2, 1), (9, 4), (3, 1)):
    SPECS[f"power-{_p}/{_q}" if _q != 1 else f"power-{_p}"] = power_branch(_p, _q)


def fixture(name: str) -> PlaneCurveGerm:
    try:
        return parse_curve_spec(SPECS[name])
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(SPECS))}") from None
