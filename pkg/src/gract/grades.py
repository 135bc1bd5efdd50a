"""Grade algebras: ordered commutative monoids with a partial subtraction.

A grade measures how much of a resource a program may use: nothing, exactly
once, at most once, without restriction, or at a level drawn from a finite
lattice. Grades form an ordered commutative monoid whose only element below
zero is zero itself. Consumption is modelled by a partial subtraction that,
where defined, is the largest residual: g + h' <= h holds exactly when h - g
is defined and h' <= h - g. Instances where that adjunction law holds are
"subtractive"; the exact-usage naturals ship with the weaker contract (see
NatExact) because no subtraction on that carrier can satisfy the adjunction.

Every shipped instance also satisfies exactness, plus(g, minus(h, g)) == h
whenever the subtraction is defined. The usage-inference checker depends on
this when it cancels a producer against a consumer, so a custom instance
without exactness would surface as spurious mismatch reports, not as
unsoundness.

Grades are plain values (ints, the float infinity, or level names as
strings); each monoid instance owns their interpretation, ordering and
syntax.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Optional, Union

Grade = Union[int, float, str]

INF: float = float("inf")


class GradeParseError(ValueError):
    """A grade literal that the active monoid does not recognise."""


class LatticeError(ValueError):
    """A level declaration that is not a join-semilattice with a bottom."""


class GradeMonoid:
    """Interface shared by all grade algebras.

    Subclasses provide zero, plus, leq, minus and meet over their carrier.
    minus returns None where the subtraction is undefined; it never raises.
    """

    name: str = "?"

    def zero(self) -> Grade:
        raise NotImplementedError

    def plus(self, g: Grade, h: Grade) -> Grade:
        raise NotImplementedError

    def leq(self, g: Grade, h: Grade) -> bool:
        raise NotImplementedError

    def minus(self, total: Grade, used: Grade) -> Optional[Grade]:
        """total - used, or None when the consumption is not covered."""
        raise NotImplementedError

    def meet(self, g: Grade, h: Grade) -> Grade:
        """Greatest lower bound; falls back to zero when none exists."""
        raise NotImplementedError

    def is_discardable(self, g: Grade) -> bool:
        return self.leq(self.zero(), g)

    def carrier_sample(self) -> list[Grade]:
        """Finite slice of the carrier used by law checks and fuzzing."""
        raise NotImplementedError

    def parse(self, text: str) -> Grade:
        raise NotImplementedError

    def format(self, g: Grade) -> str:
        if g == INF:
            return "inf"
        return str(g)


class _NatBase(GradeMonoid):
    """Shared syntax and addition for the extended naturals."""

    def zero(self) -> Grade:
        return 0

    def plus(self, g: Grade, h: Grade) -> Grade:
        if g == INF or h == INF:
            return INF
        return g + h

    def carrier_sample(self) -> list[Grade]:
        return [*range(9), INF]

    def parse(self, text: str) -> Grade:
        if text == "inf":
            return INF
        if text.isdigit():
            return int(text)
        raise GradeParseError(f"not a {self.name} grade: {text!r}")


class NatExact(_NatBase):
    """Extended naturals under the equality order: exact usage tracking.

    Subtraction is defined only when the arguments are equal or the total
    is infinite; an infinite total always has an infinite residual, equal
    finite amounts cancel to zero. The adjunction law fails on this carrier
    no matter how subtraction is chosen, so only the monoid, order and
    plain-subtraction laws apply here.
    """

    name = "natEq"

    def leq(self, g: Grade, h: Grade) -> bool:
        return g == h

    def minus(self, total: Grade, used: Grade) -> Optional[Grade]:
        if total == INF:
            return INF
        if total == used:
            return 0
        return None

    def meet(self, g: Grade, h: Grade) -> Grade:
        return g if g == h else 0


class NatLeq(_NatBase):
    """Extended naturals under the usual order: upper-bound usage tracking."""

    name = "natLeq"

    def leq(self, g: Grade, h: Grade) -> bool:
        return g <= h

    def minus(self, total: Grade, used: Grade) -> Optional[Grade]:
        if used > total:
            return None
        if total == INF:
            return INF
        return total - used

    def meet(self, g: Grade, h: Grade) -> Grade:
        return min(g, h)


class _LinLike(GradeMonoid):
    """Carrier {0, 1, inf}: unused, exactly once, unrestricted.

    1 + 1 = inf (two obligations collapse to unrestricted use), and the
    subtraction table is x - 0 = x, inf - x = inf, 1 - 1 = 0, undefined
    otherwise.
    """

    def zero(self) -> Grade:
        return 0

    def plus(self, g: Grade, h: Grade) -> Grade:
        if g == 0:
            return h
        if h == 0:
            return g
        return INF

    def minus(self, total: Grade, used: Grade) -> Optional[Grade]:
        if used == 0:
            return total
        if total == INF:
            return INF
        if total == 1 and used == 1:
            return 0
        return None

    def carrier_sample(self) -> list[Grade]:
        return [0, 1, INF]

    def parse(self, text: str) -> Grade:
        if text == "inf":
            return INF
        if text in ("0", "1"):
            return int(text)
        raise GradeParseError(f"not a {self.name} grade: {text!r}")


class Lin(_LinLike):
    """Linearity grades: 0 and 1 sit below inf and are mutually unrelated."""

    name = "lin"

    def leq(self, g: Grade, h: Grade) -> bool:
        return g == h or h == INF

    def meet(self, g: Grade, h: Grade) -> Grade:
        if g == h or h == INF:
            return g
        if g == INF:
            return h
        # 0 and 1 share no lower bound here, fall back to zero
        return 0


class Affine(_LinLike):
    """Affinity grades: totally ordered 0 <= 1 <= inf, use at most once."""

    name = "affine"

    def leq(self, g: Grade, h: Grade) -> bool:
        return g <= h

    def meet(self, g: Grade, h: Grade) -> Grade:
        return min(g, h)


class Level(GradeMonoid):
    """A finite join-semilattice of named levels; addition is join.

    The first declared name is the bottom element and plays the role of
    zero. Subtraction total - used is defined exactly when used <= total
    and then equals total. Construction validates that the declared order
    is a partial order, that the first name is a global bottom, and that
    every pair of levels has a join.
    """

    def __init__(self, names: Iterable[str], order: Iterable[tuple[str, str]]):
        self.names: list[str] = list(names)
        if not self.names:
            raise LatticeError("a level declaration needs at least one name")
        if len(set(self.names)) != len(self.names):
            raise LatticeError("duplicate level name")
        self.name = "levels(" + ",".join(self.names) + ")"
        known = set(self.names)
        below: dict[str, set[str]] = {n: {n} for n in self.names}
        for lo, hi in order:
            if lo not in known or hi not in known:
                raise LatticeError(f"order mentions undeclared level: {lo} <= {hi}")
            below[hi].add(lo)
        # transitive closure, then antisymmetry and bottom checks
        changed = True
        while changed:
            changed = False
            for n in self.names:
                extra = set()
                for m in below[n]:
                    extra |= below[m]
                if not extra <= below[n]:
                    below[n] |= extra
                    changed = True
        for g, h in product(self.names, repeat=2):
            if g != h and g in below[h] and h in below[g]:
                raise LatticeError(f"levels {g} and {h} order each other")
        bottom = self.names[0]
        for n in self.names:
            if bottom not in below[n]:
                raise LatticeError(f"first level {bottom} is not below {n}")
        self._below = below
        self._join: dict[tuple[str, str], str] = {}
        for g, h in product(self.names, repeat=2):
            uppers = [u for u in self.names if g in below[u] and h in below[u]]
            least = [u for u in uppers if all(u in below[v] for v in uppers)]
            if not least:
                raise LatticeError(f"levels {g} and {h} have no join")
            self._join[(g, h)] = least[0]

    def zero(self) -> Grade:
        return self.names[0]

    def plus(self, g: Grade, h: Grade) -> Grade:
        return self._join[(g, h)]

    def leq(self, g: Grade, h: Grade) -> bool:
        return g in self._below[h]

    def minus(self, total: Grade, used: Grade) -> Optional[Grade]:
        return total if self.leq(used, total) else None

    def meet(self, g: Grade, h: Grade) -> Grade:
        lowers = [l for l in self.names if self.leq(l, g) and self.leq(l, h)]
        greatest = [l for l in lowers if all(self.leq(m, l) for m in lowers)]
        return greatest[0] if greatest else self.zero()

    def carrier_sample(self) -> list[Grade]:
        return list(self.names)

    def parse(self, text: str) -> Grade:
        if text in self._below:
            return text
        raise GradeParseError(f"unknown level: {text!r}")

    def format(self, g: Grade) -> str:
        return str(g)


def format_grade(g: Grade) -> str:
    """Monoid-independent grade rendering: levels print as their name."""
    if g == INF:
        return "inf"
    return str(g)


BUILTIN_MONOIDS = {
    "natEq": NatExact,
    "natLeq": NatLeq,
    "lin": Lin,
    "affine": Affine,
}


# ---------------------------------------------------------------------------
# Resource environments and actor contexts.
#
# A resource environment maps resource names to grades within one actor; an
# actor context maps actor names to resource environments. Absent entries
# mean grade zero, and all operations normalise zero entries away so that
# structural equality coincides with the intended pointwise equality.

ResourceEnv = dict[str, Grade]
ActorContext = dict[str, ResourceEnv]


def env_norm(m: GradeMonoid, env: ResourceEnv) -> ResourceEnv:
    return {r: g for r, g in env.items() if g != m.zero()}


def env_plus(m: GradeMonoid, a: ResourceEnv, b: ResourceEnv) -> ResourceEnv:
    out = dict(a)
    for r, g in b.items():
        out[r] = m.plus(out[r], g) if r in out else g
    return env_norm(m, out)


def env_leq(m: GradeMonoid, a: ResourceEnv, b: ResourceEnv) -> bool:
    z = m.zero()
    return all(m.leq(a.get(r, z), b.get(r, z)) for r in a.keys() | b.keys())


def env_minus(m: GradeMonoid, total: ResourceEnv, used: ResourceEnv) -> Optional[ResourceEnv]:
    out = dict(total)
    z = m.zero()
    for r, g in used.items():
        left = m.minus(out.get(r, z), g)
        if left is None:
            return None
        out[r] = left
    return env_norm(m, out)


def env_meet(m: GradeMonoid, a: ResourceEnv, b: ResourceEnv) -> ResourceEnv:
    z = m.zero()
    return env_norm(m, {r: m.meet(a.get(r, z), b.get(r, z)) for r in a.keys() | b.keys()})


def env_discardable(m: GradeMonoid, env: ResourceEnv) -> bool:
    return all(m.is_discardable(g) for g in env.values())


def ctx_norm(m: GradeMonoid, ctx: ActorContext) -> ActorContext:
    out = {}
    for actor, env in ctx.items():
        env = env_norm(m, env)
        if env:
            out[actor] = env
    return out


def ctx_plus(m: GradeMonoid, a: ActorContext, b: ActorContext) -> ActorContext:
    out = {actor: dict(env) for actor, env in a.items()}
    for actor, env in b.items():
        out[actor] = env_plus(m, out.get(actor, {}), env)
    return ctx_norm(m, out)


def ctx_sum(m: GradeMonoid, ctxs: Iterable[ActorContext]) -> ActorContext:
    out: ActorContext = {}
    for c in ctxs:
        out = ctx_plus(m, out, c)
    return out


def ctx_leq(m: GradeMonoid, a: ActorContext, b: ActorContext) -> bool:
    return all(env_leq(m, a.get(actor, {}), b.get(actor, {})) for actor in a.keys() | b.keys())


def ctx_minus(m: GradeMonoid, total: ActorContext, used: ActorContext) -> Optional[ActorContext]:
    out = {actor: dict(env) for actor, env in total.items()}
    for actor, env in used.items():
        left = env_minus(m, out.get(actor, {}), env)
        if left is None:
            return None
        out[actor] = left
    return ctx_norm(m, out)


def ctx_meet(m: GradeMonoid, a: ActorContext, b: ActorContext) -> ActorContext:
    out = {}
    for actor in a.keys() | b.keys():
        env = env_meet(m, a.get(actor, {}), b.get(actor, {}))
        if env:
            out[actor] = env
    return out


def ctx_discardable(m: GradeMonoid, ctx: ActorContext) -> bool:
    return all(env_discardable(m, env) for env in ctx.values())


def ctx_eq(m: GradeMonoid, a: ActorContext, b: ActorContext) -> bool:
    return ctx_norm(m, a) == ctx_norm(m, b)
