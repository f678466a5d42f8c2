"""Symbolic manifold calculus.

A small expression language over a catalog of closed manifolds with
known homology, plus the operations the workbench needs: connected
sums, twisted suspensions (surgery on the fibre of a circle bundle),
circle-bundle bookkeeping, and the diffeomorphism-type rewrites the
catalog supports.

Homology tables are exact (``FgAbGroup`` values).  Twisted suspensions
with a nonzero twisting class are only computed for the families whose
Gysin sequence the catalog actually resolves; anything else raises
``Unsupported`` rather than guessing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import fgab
from .errors import DimensionMismatch, DimensionTooSmall, RankTooLarge, Unsupported
from .fgab import TRIVIAL, Z, FgAbGroup, cyclic, direct_sum


# ---------------------------------------------------------------------------
# Twisting classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EulerClass:
    """Symbolic degree-2 integral class, described by its divisibility.

    kind is one of ``zero``, ``primitive``, ``divisibility`` (with k >= 2),
    or ``split`` (one part per connected summand).
    """

    kind: str
    k: int = 0
    parts: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "primitive", "divisibility", "split"):
            raise ValueError(f"unknown euler class kind {self.kind!r}")
        if self.kind == "divisibility" and self.k < 2:
            raise ValueError("divisibility classes require k >= 2; use zero/primitive")
        if self.kind == "split" and not self.parts:
            raise ValueError("split class needs at least one part")

    @staticmethod
    def zero() -> "EulerClass":
        return EulerClass("zero")

    @staticmethod
    def primitive() -> "EulerClass":
        return EulerClass("primitive")

    @staticmethod
    def of_divisibility(k: int) -> "EulerClass":
        k = abs(int(k))
        if k == 0:
            return EulerClass.zero()
        if k == 1:
            return EulerClass.primitive()
        return EulerClass("divisibility", k=k)

    @staticmethod
    def split(parts) -> "EulerClass":
        return EulerClass("split", parts=tuple(parts))

    @property
    def div(self) -> int:
        """Divisibility where it is a single number (zero -> 0, primitive -> 1)."""
        if self.kind == "zero":
            return 0
        if self.kind == "primitive":
            return 1
        if self.kind == "divisibility":
            return self.k
        raise ValueError("split class has no single divisibility")

    def render(self) -> str:
        if self.kind == "zero":
            return "0"
        if self.kind == "primitive":
            return "prim"
        if self.kind == "divisibility":
            return f"div({self.k})"
        return "[" + ",".join(p.render() for p in self.parts) + "]"


ZERO_CLASS = EulerClass.zero()


# ---------------------------------------------------------------------------
# Fundamental group descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pi1:
    kind: str  # trivial | cyclic | binary_icosahedral | unsupported
    order: int = 0  # cyclic order for kind == "cyclic"

    def is_trivial(self) -> bool:
        return self.kind == "trivial"

    def abelianization(self) -> FgAbGroup:
        if self.kind == "trivial":
            return TRIVIAL
        if self.kind == "cyclic":
            return cyclic(self.order)
        if self.kind == "binary_icosahedral":
            return TRIVIAL  # perfect group
        raise Unsupported("abelianization of an unsupported fundamental group")

    def render(self) -> str:
        if self.kind == "cyclic":
            return f"Z/{self.order}"
        return self.kind


PI1_TRIVIAL = Pi1("trivial")


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifoldExpr:
    """Immutable expression tree; attributes are computed lazily."""

    kind: str  # atom | product | connected_sum | twisted_suspension
    atom: str = ""  # for atoms: sphere|cp|lens|smale|wu|poincare|twisted_s2
    params: tuple = ()
    children: tuple = ()
    euler: EulerClass | None = None

    def render(self) -> str:
        return render(self)

    def __str__(self) -> str:
        return render(self)


def sphere(n: int) -> ManifoldExpr:
    if n < 2:
        raise DimensionTooSmall("spheres of dimension >= 2 only")
    return ManifoldExpr("atom", atom="sphere", params=(n,))


def cp(m: int) -> ManifoldExpr:
    if m < 1:
        raise ValueError("complex projective space needs m >= 1")
    return ManifoldExpr("atom", atom="cp", params=(m,))


def lens(k: int, dim: int) -> ManifoldExpr:
    if k < 2:
        raise ValueError("lens spaces need cyclic order k >= 2")
    if dim < 3 or dim % 2 == 0:
        raise ValueError("lens spaces have odd dimension >= 3")
    return ManifoldExpr("atom", atom="lens", params=(k, dim))


def smale(k: int) -> ManifoldExpr:
    """The closed simply-connected spin 5-manifold with H_2 = Z/k + Z/k."""
    if k < 2:
        raise ValueError("use sphere(5) for k = 1")
    return ManifoldExpr("atom", atom="smale", params=(k,))


def wu_manifold() -> ManifoldExpr:
    return ManifoldExpr("atom", atom="wu", params=())


def poincare_sphere() -> ManifoldExpr:
    return ManifoldExpr("atom", atom="poincare", params=())


def sphere_product(p: int, q: int) -> ManifoldExpr:
    if p < 2 or q < 2:
        raise DimensionTooSmall("sphere factors of dimension >= 2 only")
    return ManifoldExpr("product", params=(p, q))


def twisted_s2_bundle(fiber_dim: int) -> ManifoldExpr:
    """Total space of the nontrivial linear S^q-bundle over S^2 (q >= 3)."""
    if fiber_dim < 3:
        raise DimensionTooSmall("twisted bundle fibre dimension >= 3 only")
    return ManifoldExpr("atom", atom="twisted_s2", params=(fiber_dim,))


def connected_sum(summands) -> ManifoldExpr:
    """Connected sum; requires equal dimensions >= 4 and orientability."""
    summands = tuple(summands)
    if not summands:
        raise ValueError("connected sum of nothing")
    if len(summands) == 1:
        return summands[0]
    n = dim(summands[0])
    for x in summands[1:]:
        if dim(x) != n:
            raise DimensionMismatch("connected sum of unequal dimensions")
    if n < 4:
        raise DimensionTooSmall("connected-sum calculus is used for dimension >= 4")
    for x in summands:
        if not orientable(x):
            raise Unsupported("non-orientable summand")
    return ManifoldExpr("connected_sum", children=summands)


def suspend(x: ManifoldExpr, e: EulerClass) -> ManifoldExpr:
    """Twisted suspension of ``x`` by the class ``e``.

    Construction raises only on structural problems (dimension too
    small, split arity); whether the homology of the result is
    computable is decided lazily.
    """
    if dim(x) < 3:
        raise DimensionTooSmall("suspension requires dimension >= 3")
    if e.kind == "split":
        if x.kind != "connected_sum" or len(e.parts) != len(x.children):
            raise DimensionMismatch("split class arity must match the summands")
    return ManifoldExpr("twisted_suspension", children=(x,), euler=e)


def csum_copies(x: ManifoldExpr, copies: int) -> ManifoldExpr:
    return connected_sum([x] * copies) if copies > 1 else x


# ---------------------------------------------------------------------------
# Rendering (the CLI grammar in reverse)
# ---------------------------------------------------------------------------

def render(x: ManifoldExpr) -> str:
    if x.kind == "atom":
        if x.atom == "sphere":
            return f"S({x.params[0]})"
        if x.atom == "cp":
            return f"CP({x.params[0]})"
        if x.atom == "lens":
            return f"lens({x.params[0]},{x.params[1]})"
        if x.atom == "smale":
            return f"N({x.params[0]})"
        if x.atom == "wu":
            return "Wu"
        if x.atom == "poincare":
            return "Poincare"
        if x.atom == "twisted_s2":
            return f"S2~S({x.params[0]})"
    if x.kind == "product":
        return f"S({x.params[0]})xS({x.params[1]})"
    if x.kind == "connected_sum":
        return "csum(" + ",".join(render(c) for c in x.children) + ")"
    if x.kind == "twisted_suspension":
        return f"susp({x.euler.render()},{render(x.children[0])})"
    raise ValueError(f"unrenderable expression {x!r}")


# ---------------------------------------------------------------------------
# Dimension / orientability / pi_1 / spin
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def dim(x: ManifoldExpr) -> int:
    if x.kind == "atom":
        if x.atom == "sphere":
            return x.params[0]
        if x.atom == "cp":
            return 2 * x.params[0]
        if x.atom == "lens":
            return x.params[1]
        if x.atom == "smale":
            return 5
        if x.atom == "wu":
            return 5
        if x.atom == "poincare":
            return 3
        if x.atom == "twisted_s2":
            return x.params[0] + 2
    if x.kind == "product":
        return x.params[0] + x.params[1]
    if x.kind == "connected_sum":
        return dim(x.children[0])
    if x.kind == "twisted_suspension":
        return dim(x.children[0]) + 1
    raise ValueError(f"unknown expression kind {x.kind!r}")


def orientable(x: ManifoldExpr) -> bool:
    # Every catalog atom is orientable and the operations preserve it.
    return True


@lru_cache(maxsize=None)
def pi1(x: ManifoldExpr) -> Pi1:
    if x.kind in ("atom", "product"):
        if x.kind == "atom" and x.atom == "lens":
            return Pi1("cyclic", order=x.params[0])
        if x.kind == "atom" and x.atom == "poincare":
            return Pi1("binary_icosahedral")
        return PI1_TRIVIAL
    if x.kind == "connected_sum":
        nontrivial = [pi1(c) for c in x.children if not pi1(c).is_trivial()]
        if not nontrivial:
            return PI1_TRIVIAL
        if len(nontrivial) == 1:
            return nontrivial[0]
        return Pi1("unsupported")  # free product; not needed downstream
    if x.kind == "twisted_suspension":
        # Preserved by surgery on a fibre circle in dimension > 2.
        return pi1(x.children[0])
    raise ValueError(f"unknown expression kind {x.kind!r}")


def simply_connected(x: ManifoldExpr) -> bool:
    return pi1(x).is_trivial()


@lru_cache(maxsize=None)
def spin(x: ManifoldExpr):
    """Tri-state spin flag: True / False / None (= unknown)."""
    if x.kind == "atom":
        if x.atom == "sphere":
            return True
        if x.atom == "cp":
            return x.params[0] % 2 == 1
        if x.atom == "lens":
            # Odd-order quotients have no 2-torsion in H^2(.; Z/2).
            return True if x.params[0] % 2 == 1 else None
        if x.atom == "smale":
            return True
        if x.atom == "wu":
            return False
        if x.atom == "poincare":
            return True
        if x.atom == "twisted_s2":
            return False
    if x.kind == "product":
        return True
    if x.kind == "connected_sum":
        flags = [spin(c) for c in x.children]
        if any(f is False for f in flags):
            return False
        if any(f is None for f in flags):
            return None
        return True
    if x.kind == "twisted_suspension":
        return _suspension_spin(x.children[0], x.euler)
    raise ValueError(f"unknown expression kind {x.kind!r}")


def _suspension_spin(base: ManifoldExpr, e: EulerClass):
    """Spin of a suspension: spin iff w_2(base) is congruent to e mod 2."""
    if e.kind == "split":
        flags = [_suspension_spin(c, p) for c, p in zip(base.children, e.parts)]
        if any(f is False for f in flags):
            return False
        if any(f is None for f in flags):
            return None
        return True
    s = spin(base)
    if e.div % 2 == 0:
        # e is an even class, so the condition is w_2(base) = 0.
        return s
    # e has odd divisibility.
    if base.kind == "atom" and base.atom == "cp":
        # w_2(CP^m) is (m + 1) times the generator mod 2.
        return (base.params[0] + 1) % 2 == e.div % 2
    if s is True:
        return False  # w_2 = 0 but e is odd
    return None  # w_2 nonzero or unknown; congruence not decidable here


def spin_label(flag) -> str:
    return {True: "yes", False: "no", None: "unknown"}[flag]


# ---------------------------------------------------------------------------
# Homology
# ---------------------------------------------------------------------------

def _table(n: int, groups: dict) -> tuple:
    return tuple(groups.get(i, TRIVIAL) for i in range(n + 1))


def _tensor_with_free(g: FgAbGroup, rank: int) -> FgAbGroup:
    """g (x) Z^rank, enough Kunneth for torsion-free partners."""
    if rank == 0:
        return TRIVIAL
    out = g
    for _ in range(rank - 1):
        out = direct_sum(out, g)
    return out


@lru_cache(maxsize=None)
def homology(x: ManifoldExpr) -> tuple:
    """Integral homology table H_0 .. H_n, or Unsupported."""
    n = dim(x)
    if x.kind == "atom":
        return _atom_homology(x, n)
    if x.kind == "product":
        p, q = x.params
        groups: dict = {}
        for i in (0, p):
            for j in (0, q):
                groups[i + j] = direct_sum(groups.get(i + j, TRIVIAL), Z)
        return _table(n, groups)
    if x.kind == "connected_sum":
        tables = [homology(c) for c in x.children]
        groups = {0: Z, n: Z}
        for i in range(1, n):
            groups[i] = direct_sum(*[t[i] for t in tables])
        return _table(n, groups)
    if x.kind == "twisted_suspension":
        return _suspension_homology(x.children[0], x.euler)
    raise ValueError(f"unknown expression kind {x.kind!r}")


def _atom_homology(x: ManifoldExpr, n: int) -> tuple:
    if x.atom == "sphere":
        return _table(n, {0: Z, n: Z})
    if x.atom == "cp":
        return _table(n, {2 * i: Z for i in range(x.params[0] + 1)})
    if x.atom == "lens":
        k = x.params[0]
        groups = {0: Z, n: Z}
        for i in range(1, n - 1, 2):
            groups[i] = cyclic(k)
        return _table(n, groups)
    if x.atom == "smale":
        k = x.params[0]
        return _table(5, {0: Z, 2: direct_sum(cyclic(k), cyclic(k)), 5: Z})
    if x.atom == "wu":
        return _table(5, {0: Z, 2: cyclic(2), 5: Z})
    if x.atom == "poincare":
        return _table(3, {0: Z, 3: Z})
    if x.atom == "twisted_s2":
        q = x.params[0]
        return _table(q + 2, {0: Z, 2: Z, q: Z, q + 2: Z})
    raise ValueError(f"unknown atom {x.atom!r}")


def _suspension_homology(base: ManifoldExpr, e: EulerClass) -> tuple:
    n = dim(base)
    if e.kind == "zero":
        h = homology(base)
        groups = {0: Z, 1: h[1], n + 1: Z}
        for i in range(2, n):
            groups[i] = direct_sum(h[i], h[i - 1])
        groups[n] = h[n - 1]
        return _table(n + 1, groups)
    if e.kind == "split":
        rewritten = connected_sum(
            [suspend(c, p) for c, p in zip(base.children, e.parts)]
        )
        return homology(rewritten)
    # Nonzero single class: only the resolved Gysin families.
    if base.kind == "atom" and base.atom == "cp":
        m = base.params[0]
        k = e.div
        groups = {0: Z, 2: Z, 2 * m - 1: Z, 2 * m + 1: Z}
        if k >= 2:
            for i in range(3, 2 * m - 2, 2):
                groups[i] = cyclic(k)
        return _table(2 * m + 1, groups)
    if base.kind == "atom" and base.atom == "lens" and e.kind == "primitive":
        # Cohomology vanishes in degrees 3..n-2 and H^{n-1} = Z/k; dual to
        # a table with torsion Z/k in degrees 1 and n-2 and nothing else.
        k = base.params[0]
        m = dim(base) + 1  # even
        return _table(m, {0: Z, 1: cyclic(k), m - 2: cyclic(k), m: Z})
    raise Unsupported(
        f"twisted suspension of {render(base)} by {e.render()} is outside the catalog"
    )


def cohomology(x: ManifoldExpr) -> tuple:
    """Integral cohomology via universal coefficients: H^i = free(H_i) + tors(H_{i-1})."""
    h = homology(x)
    n = dim(x)
    out = []
    for i in range(n + 1):
        f = fgab.free(h[i].free_rank)
        t = fgab.from_divisors(h[i - 1].torsion) if i >= 1 else TRIVIAL
        out.append(direct_sum(f, t))
    return tuple(out)


def betti(x: ManifoldExpr) -> tuple:
    return tuple(g.free_rank for g in homology(x))


def euler_characteristic(x: ManifoldExpr) -> int:
    return sum((-1) ** i * b for i, b in enumerate(betti(x)))


def is_rational_homology_sphere(x: ManifoldExpr) -> bool:
    b = betti(x)
    return all(v == 0 for v in b[1:-1]) and b[0] == 1 and b[-1] == 1


def is_homology_sphere(x: ManifoldExpr) -> bool:
    h = homology(x)
    return (
        h[0] == Z
        and h[-1] == Z
        and all(g.is_trivial() for g in h[1:-1])
    )


# ---------------------------------------------------------------------------
# Rewrites to connected-sum normal form
# ---------------------------------------------------------------------------

def decompose(x: ManifoldExpr) -> ManifoldExpr:
    """Rewrite toward connected-sum normal form.

    Fixpoint application of the catalog's diffeomorphism rules:
    suspensions of sums split summand-wise, suspended spheres collapse,
    generator-twisted projective spaces become sphere bundles over S^2,
    zero-twisted products S^2 x S^{2k} split, and trivial S^2 x S^q
    summands are absorbed by a twisted neighbour.  Homology and spin
    are preserved; input is returned unchanged when no rule fires.
    """
    prev = None
    cur = x
    while cur != prev:
        prev = cur
        cur = _rewrite(cur)
    return cur


def _rewrite(x: ManifoldExpr) -> ManifoldExpr:
    if x.kind == "connected_sum":
        children = []
        for c in x.children:
            c = _rewrite(c)
            if c.kind == "connected_sum":
                children.extend(c.children)
            else:
                children.append(c)
        children = _absorb_trivial_bundles(children)
        if len(children) == 1:
            return children[0]
        return ManifoldExpr("connected_sum", children=tuple(children))
    if x.kind == "twisted_suspension":
        base = _rewrite(x.children[0])
        e = x.euler
        if base.kind == "connected_sum" and dim(base) >= 4:
            if e.kind == "split":
                return _rewrite(
                    connected_sum([suspend(c, p) for c, p in zip(base.children, e.parts)])
                )
            if e.kind == "zero":
                return _rewrite(
                    connected_sum([suspend(c, ZERO_CLASS) for c in base.children])
                )
        if base.kind == "atom" and base.atom == "sphere" and e.kind == "zero":
            return sphere(base.params[0] + 1)
        if base.kind == "atom" and base.atom == "cp" and e.kind == "primitive":
            c = base.params[0]
            if c % 2 == 0:
                return sphere_product(2, 2 * c - 1)
            return twisted_s2_bundle(2 * c - 1)
        if (
            base.kind == "product"
            and base.params[0] == 2
            and base.params[1] % 2 == 0
            and e.kind == "zero"
        ):
            q = base.params[1]
            return connected_sum([sphere_product(2, q + 1), sphere_product(3, q)])
        if base is not x.children[0]:
            return ManifoldExpr("twisted_suspension", children=(base,), euler=e)
        return x
    return x


def _absorb_trivial_bundles(children: list) -> list:
    """Turn S^2 x S^q summands into twisted bundles next to an S2~S^q one."""
    twisted_fibres = {
        c.params[0] for c in children if c.kind == "atom" and c.atom == "twisted_s2"
    }
    if not twisted_fibres:
        return children
    out = []
    for c in children:
        if c.kind == "product" and c.params[0] == 2 and c.params[1] in twisted_fibres:
            out.append(twisted_s2_bundle(c.params[1]))
        else:
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# Torus-bundle bookkeeping
# ---------------------------------------------------------------------------

def torus_bundle_b2(b2_base: int, fiber_rank: int) -> int:
    """Second Betti number of a principal torus bundle with basis-extendable
    Euler classes over a simply-connected base: b2(total) = b2(base) - rank.

    The caller attests the basis-extension hypothesis (see
    ``intlat.extends_to_basis``).
    """
    if fiber_rank < 0 or b2_base < 0:
        raise ValueError("ranks must be nonnegative")
    if fiber_rank > b2_base:
        raise RankTooLarge("fibre rank exceeds the base's second Betti number")
    return b2_base - fiber_rank


def universal_cover_of_space_form_suspension(order: int, n: int) -> ManifoldExpr:
    """Universal cover of a twisted suspension of an n-dim spherical space
    form with group order ``order``: the (order-1)-fold sum of S^2 x S^{n-1},
    read as S^{n+1} when the sum is empty.
    """
    if order < 1:
        raise ValueError("group order must be >= 1")
    if n < 4:
        raise DimensionTooSmall("surgery bookkeeping needs n >= 4")
    if order == 1:
        return sphere(n + 1)
    return connected_sum([sphere_product(2, n - 1)] * (order - 1))
