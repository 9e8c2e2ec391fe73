"""Step functions, generalized inverses and (g, h) parameter pairs.

A step function with ``n`` segments takes the value ``values[i]`` on
``[i/n, (i+1)/n)`` and a separately stored value at ``y = 1``.  Marginal
ranks live on the grid ``{0, 1/n, ..., 1}`` and are stored as integer
levels (``GridStep``) so that inverses and table lookups stay exact.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

BUDGET_EPS = 1e-9


class Monotonicity(str, Enum):
    NON_INCREASING = "non-increasing"
    NON_DECREASING = "non-decreasing"


def _segment(n: int, y: float) -> int:
    return min(int(y * n), n - 1)


def _check_unit(y: float) -> None:
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"argument {y!r} outside [0, 1]")


@dataclass(frozen=True)
class StepFunction:
    n: int
    values: tuple[float, ...]
    monotonicity: Monotonicity
    extension_at_1: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "monotonicity", Monotonicity(self.monotonicity))
        if self.n < 1 or len(self.values) != self.n:
            raise ValueError("need n >= 1 values")
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            raise ValueError("step values must be finite and non-negative")
        pairs = zip(self.values, self.values[1:])
        if self.monotonicity is Monotonicity.NON_INCREASING:
            ok = all(a >= b for a, b in pairs)
        else:
            ok = all(a <= b for a, b in pairs)
        if not ok:
            raise ValueError(f"values are not {self.monotonicity.value}")

    def __call__(self, y: float) -> float:
        return eval_step(self, y)

    def inverse(self) -> "GeneralizedInverse":
        return inverse(self)


def eval_step(f: StepFunction, y: float) -> float:
    """Value of ``f`` at ``y``; right-continuous, ``extension_at_1`` at 1."""
    _check_unit(y)
    if y == 1.0:
        return f.extension_at_1
    return f.values[_segment(f.n, y)]


@dataclass(frozen=True)
class GeneralizedInverse:
    """Right-continuous inverse of a monotone step function (inf of the empty set is 1)."""

    f: StepFunction

    @property
    def monotonicity(self) -> Monotonicity:
        return self.f.monotonicity

    def __call__(self, y: float) -> float:
        f = self.f
        if f.monotonicity is Monotonicity.NON_INCREASING:
            # inf{x : f(x) <= y}
            for k, v in enumerate(f.values):
                if v <= y:
                    return k / f.n
        else:
            # inf{x : f(x) > y}
            for k, v in enumerate(f.values):
                if v > y:
                    return k / f.n
        return 1.0


def inverse(f: StepFunction) -> GeneralizedInverse:
    return GeneralizedInverse(f)


@dataclass(frozen=True)
class GridStep:
    """Element of S_n: a non-decreasing step function with values levels[i]/n.

    The value at ``y = 1`` is always 1 (level ``n``).
    """

    n: int
    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if self.n < 1 or len(self.levels) != self.n:
            raise ValueError("need n >= 1 levels")
        prev = 0
        for v in self.levels:
            if v < prev or v > self.n:
                raise ValueError(f"levels {self.levels} not non-decreasing in [0, {self.n}]")
            prev = v

    def __call__(self, y: float) -> float:
        _check_unit(y)
        if y == 1.0:
            return 1.0
        return self.levels[_segment(self.n, y)] / self.n

    def inverse_levels(self) -> tuple[int, ...]:
        """Levels of the inverse evaluated at y = j/n, j = 0..n-1.

        inf{x : theta(x) > j/n} is k/n for the first segment k with
        level > j, i.e. the number of segments with level <= j.
        """
        return tuple(sum(1 for v in self.levels if v <= j) for j in range(self.n))

    def to_step_function(self) -> StepFunction:
        return StepFunction(self.n, tuple(v / self.n for v in self.levels),
                            Monotonicity.NON_DECREASING, 1.0)

    def inverse(self) -> GeneralizedInverse:
        return inverse(self.to_step_function())

    @classmethod
    def constant(cls, n: int, level: int) -> "GridStep":
        return cls(n, (level,) * n)


def enumerate_Sn(n: int, start: int = 0, stop: int | None = None) -> Iterator[GridStep]:
    """All non-decreasing level sequences of length n over {0..n}, lexicographically.

    ``start``/``stop`` select a contiguous slice of the lexicographic order
    so that disjoint chunks can be handed to separate consumers.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seqs = itertools.combinations_with_replacement(range(n + 1), n)
    for levels in itertools.islice(seqs, start, stop):
        yield GridStep(n, levels)


def count_Sn(n: int) -> int:
    return math.comb(2 * n, n)


@dataclass(frozen=True)
class GhPair:
    g: StepFunction
    h: StepFunction
    eps: float = field(default=BUDGET_EPS, compare=False)

    def __post_init__(self):
        if self.g.n != self.h.n:
            raise ValueError("g and h must have the same number of segments")
        if self.g.monotonicity is not Monotonicity.NON_INCREASING:
            raise ValueError("g must be non-increasing")
        if self.h.monotonicity is not Monotonicity.NON_DECREASING:
            raise ValueError("h must be non-decreasing")
        if self.g.extension_at_1 != 0.0:
            raise ValueError("g must vanish at y = 1")
        if min(self.g.values) <= 0 or min(self.h.values) <= 0:
            raise ValueError("g and h must be positive on [0, 1)")

    @classmethod
    def from_values(cls, G: Sequence[float], H: Sequence[float],
                    eps: float = BUDGET_EPS) -> "GhPair":
        G, H = tuple(G), tuple(H)
        return cls(StepFunction(len(G), G, Monotonicity.NON_INCREASING, 0.0),
                   StepFunction(len(H), H, Monotonicity.NON_DECREASING, H[-1]),
                   eps)

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def G(self) -> tuple[float, ...]:
        return self.g.values

    @property
    def H(self) -> tuple[float, ...]:
        return self.h.values

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "G": list(self.G), "H": list(self.H)})

    @classmethod
    def from_json(cls, text: str) -> "GhPair":
        d = json.loads(text)
        gh = cls.from_values(d["G"], d["H"])
        if "n" in d and d["n"] != gh.n:
            raise ValueError(f"declared n={d['n']} but {gh.n} values given")
        return gh

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "G_i", "H_i"])
        for i, (g, h) in enumerate(zip(self.G, self.H), 1):
            w.writerow([i, repr(g), repr(h)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GhPair":
        rows = sorted(csv.DictReader(io.StringIO(text)), key=lambda r: int(r["i"]))
        return cls.from_values([float(r["G_i"]) for r in rows],
                               [float(r["H_i"]) for r in rows])


def load_gh(path) -> GhPair:
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".csv"):
        return GhPair.from_csv(text)
    return GhPair.from_json(text)


@dataclass(frozen=True)
class BudgetCheck:
    ok: bool
    max_violation: float
    witness: tuple[int, int]


def check_budget(gh: GhPair) -> BudgetCheck:
    """max over i <= j of H_i G_j + H_j G_i - 1, witness 1-based."""
    G, H = gh.G, gh.H
    worst, arg = -math.inf, (1, 1)
    for i in range(gh.n):
        for j in range(i, gh.n):
            v = H[i] * G[j] + H[j] * G[i] - 1.0
            if v > worst:
                worst, arg = v, (i + 1, j + 1)
    return BudgetCheck(worst <= gh.eps, worst, arg)


@dataclass(frozen=True)
class GeneralFormParams:
    phi: float
    g_values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "g_values", tuple(float(v) for v in self.g_values))
        if not 0.0 <= self.phi <= math.pi / 4 + 1e-15:
            raise ValueError("phi must lie in [0, pi/4]")
        cap = math.cos(self.phi)
        for v in self.g_values:
            if v < 0 or v > cap + 1e-12:
                raise ValueError(f"g value {v} outside [0, cos(phi)={cap}]")
        if any(a < b for a, b in zip(self.g_values, self.g_values[1:])):
            raise ValueError("g values must be non-increasing")


def general_h(phi: float, g: float) -> float:
    """h on the unit-circle arc, or on its tangent line at (sin phi, cos phi)."""
    s, c = math.sin(phi), math.cos(phi)
    if g > c + 1e-12:
        raise ValueError(f"g={g} exceeds cos(phi)={c}")
    if g < s:
        return 1.0 / c - g * math.tan(phi)
    return math.sqrt(max(0.0, 1.0 - g * g))


def general_form(params: GeneralFormParams) -> GhPair:
    H = [general_h(params.phi, g) for g in params.g_values]
    gh = GhPair.from_values(params.g_values, H)
    chk = check_budget(gh)
    if not chk.ok:
        raise ArithmeticError(f"general form violates budget by {chk.max_violation}")
    return gh


def shrink_to_budget(gh: GhPair) -> GhPair:
    """Scale G and H by a common factor so the budget check passes.

    Meant for externally supplied coordinates that were rounded; a pair that
    already passes is returned unchanged.
    """
    chk = check_budget(gh)
    if chk.max_violation <= 0.0:
        return gh
    s = 1.0 / math.sqrt(1.0 + chk.max_violation)
    # one ulp of slack so the rescaled products land at or below 1
    s = math.nextafter(s, 0.0)
    out = GhPair.from_values([g * s for g in gh.G], [h * s for h in gh.H], gh.eps)
    assert check_budget(out).ok
    return out
