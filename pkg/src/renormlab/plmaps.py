"""Exact algebra of strictly increasing continuous piecewise-linear maps.

A map is stored as its graph vertices (x_i, y_i), both coordinates exact
rationals; slopes are derived. Canonical form merges adjacent pieces of
equal slope, so structural equality is semantic equality. All operations
are pure; nothing here ever rounds. A configurable bit-size watchdog
raises ResourceError instead of losing precision silently.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import CompositionError, ConstructionError, ResourceError
from .rational import RatInterval, format_rat, rat

DEFAULT_MAX_BITS = 1_000_000


def _bits(x: Fraction) -> int:
    return max(x.numerator.bit_length(), x.denominator.bit_length())


@dataclass(frozen=True)
class BreakPoint:
    """Interior vertex with distinct one-sided slopes; size = left/right."""

    location: Fraction
    size: Fraction

    def __post_init__(self) -> None:
        if self.size == 1:
            raise ConstructionError("a break point must have size != 1")


@dataclass(frozen=True)
class PLMap:
    """Strictly increasing continuous PL function, canonical vertex list."""

    xs: tuple[Fraction, ...]
    ys: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ConstructionError("a PL map needs matching vertex lists, >= 2 nodes")
        for seq, label in ((self.xs, "nodes"), (self.ys, "values")):
            for u, v in zip(seq, seq[1:]):
                if not u < v:
                    raise ConstructionError(f"PL map {label} must strictly increase")
        for i in range(1, len(self.xs) - 1):
            if self._slope(i - 1) == self._slope(i):
                raise ConstructionError("PL map not canonical: equal adjacent slopes")

    def _slope(self, i: int) -> Fraction:
        return (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])

    @property
    def domain(self) -> RatInterval:
        return RatInterval(self.xs[0], self.xs[-1])

    @property
    def range(self) -> RatInterval:
        return RatInterval(self.ys[0], self.ys[-1])

    def slopes(self) -> tuple[Fraction, ...]:
        return tuple(self._slope(i) for i in range(len(self.xs) - 1))

    def node_count(self) -> int:
        return len(self.xs)

    def bit_size(self) -> int:
        return max(max(_bits(x), _bits(y)) for x, y in zip(self.xs, self.ys))

    def __call__(self, x: Fraction) -> Fraction:
        return evaluate(self, x)

    def to_json(self) -> dict:
        return {
            "xs": [format_rat(x) for x in self.xs],
            "ys": [format_rat(y) for y in self.ys],
        }

    @staticmethod
    def from_json(obj: dict) -> "PLMap":
        return PLMap(
            tuple(rat(s) for s in obj["xs"]),
            tuple(rat(s) for s in obj["ys"]),
        )


def from_nodes(
    points: Iterable[tuple[Fraction, Fraction]],
    max_bits: int | None = DEFAULT_MAX_BITS,
) -> PLMap:
    """Canonicalize a vertex list: drop collinear middles, check watchdog."""
    pts = [(Fraction(x), Fraction(y)) for x, y in points]
    if len(pts) < 2:
        raise ConstructionError("need at least two vertices")
    kept: list[tuple[Fraction, Fraction]] = [pts[0]]
    for x, y in pts[1:]:
        px, py = kept[-1]
        if x == px:
            if y != py:
                raise ConstructionError("vertical jump in vertex list")
            continue  # duplicate vertex
        if len(kept) >= 2:
            ax, ay = kept[-2]
            # collinear middle vertex: same slope on both sides
            if (py - ay) * (x - px) == (y - py) * (px - ax):
                kept.pop()
        kept.append((x, y))
    if max_bits is not None:
        for x, y in kept:
            if _bits(x) > max_bits or _bits(y) > max_bits:
                raise ResourceError(
                    f"vertex coordinates exceed the {max_bits}-bit watchdog"
                )
    return PLMap(tuple(x for x, _ in kept), tuple(y for _, y in kept))


def evaluate(f: PLMap, x: Fraction) -> Fraction:
    x = Fraction(x)
    if not f.xs[0] <= x <= f.xs[-1]:
        raise CompositionError(
            f"point {format_rat(x)} outside domain "
            f"[{format_rat(f.xs[0])}, {format_rat(f.xs[-1])}]"
        )
    i = bisect_right(f.xs, x) - 1
    if i == len(f.xs) - 1:
        return f.ys[-1]
    x0, y0 = f.xs[i], f.ys[i]
    return y0 + (x - x0) * f._slope(i)


def evaluate_inverse(f: PLMap, y: Fraction) -> Fraction:
    y = Fraction(y)
    if not f.ys[0] <= y <= f.ys[-1]:
        raise CompositionError(f"value {format_rat(y)} outside range")
    i = bisect_right(f.ys, y) - 1
    if i == len(f.ys) - 1:
        return f.xs[-1]
    x0, y0 = f.xs[i], f.ys[i]
    return x0 + (y - y0) / f._slope(i)


def identity_map(lo: Fraction, hi: Fraction) -> PLMap:
    return PLMap((Fraction(lo), Fraction(hi)), (Fraction(lo), Fraction(hi)))


def translation_map(lo: Fraction, hi: Fraction, c: Fraction) -> PLMap:
    lo, hi, c = Fraction(lo), Fraction(hi), Fraction(c)
    return PLMap((lo, hi), (lo + c, hi + c))


def compose(
    g: PLMap, f: PLMap, max_bits: int | None = DEFAULT_MAX_BITS
) -> PLMap:
    """g after f. Node set: nodes(f) union f-preimages of nodes(g)."""
    if f.ys[0] < g.xs[0] or f.ys[-1] > g.xs[-1]:
        margin = max(g.xs[0] - f.ys[0], f.ys[-1] - g.xs[-1])
        raise CompositionError(
            f"range of inner map leaves outer domain by {format_rat(margin)}"
        )
    cuts = set(f.xs)
    for u in g.xs:
        if f.ys[0] < u < f.ys[-1]:
            cuts.add(evaluate_inverse(f, u))
    nodes = sorted(cuts)
    return from_nodes(
        ((x, evaluate(g, evaluate(f, x))) for x in nodes), max_bits=max_bits
    )


def invert(f: PLMap) -> PLMap:
    return PLMap(f.ys, f.xs)


def restrict(
    f: PLMap, interval: RatInterval, max_bits: int | None = DEFAULT_MAX_BITS
) -> PLMap:
    lo, hi = interval.lo, interval.hi
    if lo < f.xs[0] or hi > f.xs[-1]:
        raise CompositionError("restriction interval leaves the domain")
    if not lo < hi:
        raise CompositionError("restriction interval must have positive width")
    pts: list[tuple[Fraction, Fraction]] = [(lo, evaluate(f, lo))]
    for x, y in zip(f.xs, f.ys):
        if lo < x < hi:
            pts.append((x, y))
    pts.append((hi, evaluate(f, hi)))
    return from_nodes(pts, max_bits=max_bits)


def iterate_k(
    f: PLMap,
    k: int,
    seed_domain: RatInterval,
    max_bits: int | None = DEFAULT_MAX_BITS,
) -> PLMap:
    """Exact k-fold composition of f restricted to seed_domain."""
    if k < 0:
        raise CompositionError("iteration count must be >= 0")
    result = identity_map(seed_domain.lo, seed_domain.hi)
    for step in range(k):
        if result.ys[0] < f.xs[0] or result.ys[-1] > f.xs[-1]:
            raise CompositionError(f"orbit escapes the domain at step {step}")
        result = compose(f, result, max_bits=max_bits)
    return result


def breaks_of(f: PLMap) -> list[BreakPoint]:
    out: list[BreakPoint] = []
    for i in range(1, len(f.xs) - 1):
        left, right = f._slope(i - 1), f._slope(i)
        if left != right:
            out.append(BreakPoint(f.xs[i], left / right))
    return out


def conjugate_by_translation(f: PLMap, s: Fraction) -> PLMap:
    """x -> f(x+s) - s: the same map in coordinates shifted by s."""
    s = Fraction(s)
    return PLMap(tuple(x - s for x in f.xs), tuple(y - s for y in f.ys))


# --------------------------------------------------------------------------
# circle lifts


@dataclass(frozen=True)
class CircleLift:
    """Lift of a circle homeomorphism: base on [0,1], f(x+1) = f(x)+1."""

    base: PLMap

    def __post_init__(self) -> None:
        if self.base.xs[0] != 0 or self.base.xs[-1] != 1:
            raise ConstructionError("lift base must live on [0, 1]")
        if self.base.ys[-1] - self.base.ys[0] != 1:
            raise ConstructionError("lift must satisfy f(1) = f(0) + 1")
        if not 0 < self.base.ys[0] < 1:
            raise ConstructionError("lift must satisfy 0 < f(0) < 1")

    def lift_value(self, x: Fraction) -> Fraction:
        """Value of the lift at any real point via periodicity."""
        x = Fraction(x)
        shift = x.numerator // x.denominator  # floor
        frac = x - shift
        return evaluate(self.base, frac) + shift

    def apply(self, x: Fraction) -> Fraction:
        """The circle map: T(x) = lift(x) mod 1, result in [0, 1)."""
        y = self.lift_value(x)
        return y - (y.numerator // y.denominator)

    def apply_inverse(self, y: Fraction) -> Fraction:
        """T^(-1)(y) in [0, 1)."""
        y = Fraction(y)
        y -= y.numerator // y.denominator
        # lift maps [0,1] onto [f(0), f(0)+1]; pick the branch containing y
        target = y if y >= self.base.ys[0] else y + 1
        x = evaluate_inverse(self.base, target)
        return x - (x.numerator // x.denominator) if x == 1 else x

    def rotation_offset(self) -> Fraction:
        return self.base.ys[0]

    def breaks(self) -> list[BreakPoint]:
        """Break points of the circle map, including the wrap at 0 == 1."""
        out = list(breaks_of(self.base))
        left_end = self.base._slope(len(self.base.xs) - 2)
        right_start = self.base._slope(0)
        if left_end != right_start:
            out.insert(0, BreakPoint(Fraction(0), left_end / right_start))
        return out

    def marked_at(self, eta: Fraction) -> "CircleLift":
        """The same circle map in coordinates rotated so eta becomes 0."""
        eta = Fraction(eta)
        eta -= eta.numerator // eta.denominator
        if eta == 0:
            return self
        circle_nodes = {Fraction(0)} | {x for x in self.base.xs if 0 < x < 1}
        ts = {Fraction(0), Fraction(1)}
        for x in circle_nodes:
            t = x - eta
            t -= t.numerator // t.denominator
            if 0 < t < 1:
                ts.add(t)
        pts = [(t, self.lift_value(eta + t) - eta) for t in sorted(ts)]
        return CircleLift(from_nodes(pts))

    def to_json(self) -> dict:
        return {"base": self.base.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "CircleLift":
        return CircleLift(PLMap.from_json(obj["base"]))


def rigid_rotation(offset: Fraction) -> CircleLift:
    """Rotation by a rational offset in (0, 1): the degenerate control."""
    offset = Fraction(offset)
    if not 0 < offset < 1:
        raise ConstructionError("rotation offset must lie in (0, 1)")
    return CircleLift(translation_map(Fraction(0), Fraction(1), offset))


def build_f0(sol) -> CircleLift:
    """Level-0 lift on [0,1]: teeth of slope a and 1/a, unit slope between.

    Slope pattern: a on (0, delta_0); 1 on (delta_0, d_0 + a delta_2);
    1/a on (d_0 + a delta_2, d_0 + a delta_2 + a delta_0); 1 up to x = 1.
    The value at 0 is d_0, so the rise over [0,1] is exactly 1.
    """
    a: Fraction = sol.a
    d0: Fraction = sol.d[0]
    delta0: Fraction = sol.delta[0]
    delta2: Fraction = sol.delta[2]
    x1 = delta0
    x2 = d0 + a * delta2
    x3 = d0 + a * delta2 + a * delta0
    if not 0 < x1 < x2 < x3 < 1:
        raise ConstructionError(
            "lift branch ordering failed: solver depth too small or "
            "hypotheses violated"
        )
    y0 = d0
    y1 = d0 + a * delta0
    y2 = y1 + (x2 - x1)
    y3 = y2 + (x3 - x2) / a
    y4 = y3 + (1 - x3)
    lift = CircleLift(
        from_nodes(
            [
                (Fraction(0), y0),
                (x1, y1),
                (x2, y2),
                (x3, y3),
                (Fraction(1), y4),
            ]
        )
    )
    assert lift.base.ys[-1] == 1 + d0, "rise must be exactly 1"
    return lift


def sample_points(f: PLMap, count: int) -> list[Fraction]:
    """Deterministic evenly spread sample points inside the domain."""
    lo, hi = f.xs[0], f.xs[-1]
    return [lo + (hi - lo) * Fraction(i + 1, count + 1) for i in range(count)]
