"""Finite permutation groups by explicit enumeration.

Groups are fully enumerated (configurable order cap, default 10000) and
every element list is kept in a canonical order: lexicographic on image
tuples.  The identity is always element 0, and all derived data (coset
representatives, double cosets, subgroup conjugacy classes) inherit this
determinism.  No Schreier-Sims machinery; desk-scale groups only.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

from .errors import ContainmentError, GreencorrError, ParseError, SizeError

DEFAULT_ORDER_CAP = 10_000


class Perm:
    """Permutation of {0..n-1} stored as an image tuple."""

    __slots__ = ("images",)

    def __init__(self, images: Sequence[int]):
        t = tuple(int(x) for x in images)
        if sorted(t) != list(range(len(t))):
            raise GreencorrError(f"not a bijection: {t}")
        self.images = t

    @staticmethod
    def identity(degree: int) -> "Perm":
        return Perm(range(degree))

    @staticmethod
    def from_cycles(cycles: Sequence[Sequence[int]], degree: int) -> "Perm":
        images = list(range(degree))
        for cyc in cycles:
            for i, pt in enumerate(cyc):
                if pt < 0 or pt >= degree:
                    raise GreencorrError(f"point {pt} out of range for degree {degree}")
                images[pt] = cyc[(i + 1) % len(cyc)]
        return Perm(images)

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, x: int) -> int:
        return self.images[x]

    def __mul__(self, other: "Perm") -> "Perm":
        """Composition self*other: apply other first."""
        if self.degree != other.degree:
            raise GreencorrError("degree mismatch")
        return Perm(tuple(self.images[other.images[x]] for x in range(self.degree)))

    def inverse(self) -> "Perm":
        inv = [0] * self.degree
        for i, j in enumerate(self.images):
            inv[j] = i
        return Perm(inv)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def order(self) -> int:
        n = 1
        cur = self
        while not cur.is_identity():
            cur = cur * self
            n += 1
        return n

    def cycles(self) -> List[Tuple[int, ...]]:
        """Nontrivial cycles, each starting at its least point, sorted."""
        seen = [False] * self.degree
        out = []
        for start in range(self.degree):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            x = self.images[start]
            while x != start:
                cyc.append(x)
                seen[x] = True
                x = self.images[x]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_string(self) -> str:
        cycs = self.cycles()
        if not cycs:
            return "()"
        return "".join("(" + " ".join(str(x) for x in c) + ")" for c in cycs)

    def __eq__(self, other):
        return isinstance(other, Perm) and self.images == other.images

    def __lt__(self, other):
        return self.images < other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Perm{self.cycle_string()}"


def _close_under_products(degree: int, gens: Sequence[Perm], cap: int) -> List[Perm]:
    """BFS closure of the generator set; raises SizeError past the cap."""
    identity = Perm.identity(degree)
    seen = {identity.images: identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                prod = g * s
                if prod.images not in seen:
                    if len(seen) >= cap:
                        raise SizeError(f"group order exceeds cap {cap}")
                    seen[prod.images] = prod
                    nxt.append(prod)
        frontier = nxt
    return sorted(seen.values(), key=lambda g: g.images)


class Group:
    """Fully enumerated permutation group with canonical element order."""

    def __init__(self, degree: int, generators: Sequence[Perm],
                 order_cap: int = DEFAULT_ORDER_CAP):
        self.degree = int(degree)
        gens = []
        for g in generators:
            if g.degree != self.degree:
                raise GreencorrError("generator degree mismatch")
            if not g.is_identity() and g not in gens:
                gens.append(g)
        self.generators: Tuple[Perm, ...] = tuple(gens)
        self.elements: Tuple[Perm, ...] = tuple(
            _close_under_products(self.degree, self.generators, order_cap))
        self._index = {g.images: i for i, g in enumerate(self.elements)}
        self._inverse_table = tuple(
            self._index[g.inverse().images] for g in self.elements)
        self._gen_indices = tuple(self._index[g.images] for g in self.generators)
        self._word_table = self._build_word_table()

    def _build_word_table(self):
        """For each element: (parent_index, generator_position) with
        element = parent * generator, or None for the identity."""
        table: List[Optional[Tuple[int, int]]] = [None] * self.order
        if not self.generators:
            return tuple(table)
        identity_idx = self._index[Perm.identity(self.degree).images]
        visited = {identity_idx}
        frontier = [identity_idx]
        while frontier:
            nxt = []
            for ei in frontier:
                e = self.elements[ei]
                for gpos, s in enumerate(self.generators):
                    pi = self._index[(e * s).images]
                    if pi not in visited:
                        visited.add(pi)
                        table[pi] = (ei, gpos)
                        nxt.append(pi)
            frontier = nxt
        return tuple(table)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> Perm:
        return self.elements[0]

    def index_of(self, g: Perm) -> int:
        try:
            return self._index[g.images]
        except KeyError:
            raise ContainmentError(f"{g} is not in this group") from None

    def __contains__(self, g: Perm) -> bool:
        return isinstance(g, Perm) and g.images in self._index

    def mul(self, i: int, j: int) -> int:
        return self._index[(self.elements[i] * self.elements[j]).images]

    def inv(self, i: int) -> int:
        return self._inverse_table[i]

    def word_table_entry(self, i: int):
        return self._word_table[i]

    def generator_indices(self) -> Tuple[int, ...]:
        return self._gen_indices

    def __len__(self):
        return self.order

    def __eq__(self, other):
        return (isinstance(other, Group) and self.degree == other.degree
                and self.elements == other.elements)

    def __hash__(self):
        return hash((self.degree, self.elements))

    def __repr__(self):
        return f"Group(degree={self.degree}, order={self.order})"

    # -- subgroup handles -------------------------------------------------

    def subgroup(self, elements: Iterable[Perm]) -> "SubgroupHandle":
        idxs = sorted({self.index_of(g) for g in elements})
        return SubgroupHandle(self, tuple(idxs), _checked=False)

    def subgroup_generated(self, gens: Iterable[Perm]) -> "SubgroupHandle":
        elems = _close_under_products(self.degree, list(gens), self.order + 1)
        return self.subgroup(elems)

    def trivial_subgroup(self) -> "SubgroupHandle":
        return SubgroupHandle(self, (0,), _checked=True)

    def full_subgroup(self) -> "SubgroupHandle":
        return SubgroupHandle(self, tuple(range(self.order)), _checked=True)

    def conjugacy_classes(self) -> List[Tuple[int, ...]]:
        """Element conjugacy classes as index tuples, each sorted, ordered
        by least member."""
        seen = set()
        classes = []
        for i in range(self.order):
            if i in seen:
                continue
            orbit = set()
            for g in range(self.order):
                orbit.add(self.mul(self.mul(g, i), self.inv(g)))
            seen |= orbit
            classes.append(tuple(sorted(orbit)))
        classes.sort(key=lambda c: c[0])
        return classes


class SubgroupHandle:
    """Subset of a parent group's element indices, closed under the group
    operations."""

    __slots__ = ("parent", "element_indices", "_elemset")

    def __init__(self, parent: Group, element_indices: Tuple[int, ...],
                 _checked: bool = False):
        self.parent = parent
        self.element_indices = tuple(sorted(element_indices))
        self._elemset = frozenset(self.element_indices)
        if not _checked:
            self._verify()

    def _verify(self):
        if 0 not in self._elemset:
            raise ContainmentError("subgroup must contain the identity")
        for i in self.element_indices:
            if self.parent.inv(i) not in self._elemset:
                raise ContainmentError("subset not closed under inverse")
        for i in self.element_indices:
            for j in self.element_indices:
                if self.parent.mul(i, j) not in self._elemset:
                    raise ContainmentError("subset not closed under products")

    @property
    def order(self) -> int:
        return len(self.element_indices)

    def elements(self) -> List[Perm]:
        return [self.parent.elements[i] for i in self.element_indices]

    def contains_index(self, i: int) -> bool:
        return i in self._elemset

    def contains(self, other: "SubgroupHandle") -> bool:
        self._check_same_parent(other)
        return other._elemset <= self._elemset

    def _check_same_parent(self, other: "SubgroupHandle"):
        if self.parent is not other.parent and self.parent != other.parent:
            raise ContainmentError("handles belong to different groups")

    def __eq__(self, other):
        return (isinstance(other, SubgroupHandle) and self.parent == other.parent
                and self.element_indices == other.element_indices)

    def __hash__(self):
        return hash(self.element_indices)

    def __repr__(self):
        return f"SubgroupHandle(order={self.order} in group of order {self.parent.order})"

    def generating_set(self) -> List[Perm]:
        """Canonical small generating set: greedy in element order."""
        gens: List[Perm] = []
        span = {0}
        for i in self.element_indices:
            if i in span:
                continue
            gens.append(self.parent.elements[i])
            closed = _close_under_products(self.parent.degree, gens,
                                           self.parent.order + 1)
            span = {self.parent.index_of(g) for g in closed}
            if len(span) == self.order:
                break
        return gens

    def as_group(self) -> Group:
        """Standalone Group on the same points with canonical generators."""
        return Group(self.parent.degree, self.generating_set(),
                     order_cap=self.parent.order + 1)

    def is_p_group(self, p: int) -> bool:
        n = self.order
        while n % p == 0:
            n //= p
        return n == 1


class SubgroupCollection:
    """Ordered list of subgroup handles, by convention one per conjugacy
    class when closure_mode is 'classes', or literal members otherwise."""

    def __init__(self, members: Sequence[SubgroupHandle], closure_mode: str = "classes"):
        self.members = tuple(members)
        if closure_mode not in ("classes", "literal"):
            raise GreencorrError(f"bad closure_mode {closure_mode!r}")
        self.closure_mode = closure_mode

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __repr__(self):
        orders = [h.order for h in self.members]
        return f"SubgroupCollection(orders={orders}, mode={self.closure_mode})"


# -- constructors and basic operations -------------------------------------


def group_from_generators(degree: int, gens: Sequence[Perm],
                          order_cap: int = DEFAULT_ORDER_CAP) -> Group:
    return Group(degree, gens, order_cap=order_cap)


def _require_subgroup(G: Group, H: SubgroupHandle):
    if H.parent is not G and H.parent != G:
        raise ContainmentError("subgroup handle has a different parent group")


def left_coset_reps(G: Group, H: SubgroupHandle) -> List[Perm]:
    """Canonically least representative per left coset gH; identity first."""
    _require_subgroup(G, H)
    reps = []
    seen = [False] * G.order
    for i in range(G.order):
        if seen[i]:
            continue
        reps.append(G.elements[i])
        for h in H.element_indices:
            seen[G.mul(i, h)] = True
    return reps


def double_coset_reps(K: SubgroupHandle, G: Group, H: SubgroupHandle) -> List[Perm]:
    """Canonically least representative per K-H double coset, in order of
    appearance of the least element (so the coset of the identity, which is
    KH, always comes first)."""
    _require_subgroup(G, K)
    _require_subgroup(G, H)
    reps = []
    seen = [False] * G.order
    for i in range(G.order):
        if seen[i]:
            continue
        reps.append(G.elements[i])
        for k in K.element_indices:
            ki = G.mul(k, i)
            for h in H.element_indices:
                seen[G.mul(ki, h)] = True
    return reps


def conjugate_subgroup(H: SubgroupHandle, g: Perm) -> SubgroupHandle:
    """gHg^{-1} inside the same parent."""
    G = H.parent
    gi = G.index_of(g)
    ginv = G.inv(gi)
    new = tuple(sorted(G.mul(G.mul(gi, h), ginv) for h in H.element_indices))
    return SubgroupHandle(G, new, _checked=True)


def intersect(H: SubgroupHandle, K: SubgroupHandle) -> SubgroupHandle:
    H._check_same_parent(K)
    common = tuple(sorted(H._elemset & K._elemset))
    return SubgroupHandle(H.parent, common, _checked=True)


def normalizer(G: Group, Q: SubgroupHandle) -> SubgroupHandle:
    _require_subgroup(G, Q)
    qset = Q._elemset
    members = []
    for gi in range(G.order):
        ginv = G.inv(gi)
        if all(G.mul(G.mul(gi, q), ginv) in qset for q in Q.element_indices):
            members.append(gi)
    return SubgroupHandle(G, tuple(members), _checked=True)


def centralizer(G: Group, Q: SubgroupHandle) -> SubgroupHandle:
    _require_subgroup(G, Q)
    members = []
    for gi in range(G.order):
        if all(G.mul(gi, q) == G.mul(q, gi) for q in Q.element_indices):
            members.append(gi)
    return SubgroupHandle(G, tuple(members), _checked=True)


def _p_part(n: int, p: int) -> int:
    out = 1
    while n % p == 0:
        n //= p
        out *= p
    return out


def sylow_p(G: Group, p: int) -> SubgroupHandle:
    """One Sylow p-subgroup, grown by iterated normalizer extensions.

    Deterministic: candidates are always scanned in canonical element
    order.  Returns the trivial subgroup when p does not divide |G|.
    """
    target = _p_part(G.order, p)
    S = G.trivial_subgroup()
    while S.order < target:
        N = normalizer(G, S)
        extended = False
        for ni in N.element_indices:
            if ni in S._elemset:
                continue
            g = G.elements[ni]
            if _p_part(g.order(), p) != g.order():
                continue
            T = G.subgroup_generated(list(S.elements()) + [g])
            if T.order == _p_part(T.order, p):
                S = T
                extended = True
                break
        if not extended:
            raise GreencorrError("sylow extension stalled; this is a bug")
    return S


def _subgroups_of_p_group(G: Group, P: SubgroupHandle, p: int) -> List[SubgroupHandle]:
    """All subgroups of the p-group P, found level by level.

    Every subgroup of order p^k arises as <S, x> for a subgroup S of
    order p^{k-1} it contains, so bottom-up closure generation is complete.
    """
    levels = [[P.parent.trivial_subgroup()]]
    found = {P.parent.trivial_subgroup().element_indices}
    while True:
        cur = levels[-1]
        nxt = []
        for S in cur:
            for xi in P.element_indices:
                if xi in S._elemset:
                    continue
                T = P.parent.subgroup_generated(
                    list(S.elements()) + [P.parent.elements[xi]])
                if T.order == p * S.order and T.element_indices not in found:
                    found.add(T.element_indices)
                    nxt.append(T)
        if not nxt:
            break
        nxt.sort(key=lambda h: h.element_indices)
        levels.append(nxt)
    return [S for level in levels for S in level]


def _fuse_up_to_conjugacy(G: Group, handles: Iterable[SubgroupHandle]) -> List[SubgroupHandle]:
    """One representative per G-conjugacy class; representative is the
    class member with least element_indices tuple."""
    classes = []
    seen = set()
    for H in sorted(handles, key=lambda h: (h.order, h.element_indices)):
        if H.element_indices in seen:
            continue
        orbit = set()
        for gi in range(G.order):
            c = conjugate_subgroup(H, G.elements[gi])
            orbit.add(c.element_indices)
        seen |= orbit
        rep = SubgroupHandle(G, min(orbit), _checked=True)
        classes.append(rep)
    classes.sort(key=lambda h: (h.order, h.element_indices))
    return classes


def p_subgroups_up_to_conjugacy(G: Group, p: int) -> SubgroupCollection:
    """Representatives of conjugacy classes of p-subgroups, including the
    trivial one, sorted by order then canonical tuple."""
    P = sylow_p(G, p)
    subs = _subgroups_of_p_group(G, P, p)
    return SubgroupCollection(_fuse_up_to_conjugacy(G, subs), closure_mode="classes")


def all_subgroups_up_to_conjugacy(G: Group, max_order: Optional[int] = None) -> SubgroupCollection:
    """Representatives of all subgroup conjugacy classes.

    Exhaustive closure-extension search; only for desk-scale orders.
    """
    found = {G.trivial_subgroup().element_indices: G.trivial_subgroup()}
    frontier = [G.trivial_subgroup()]
    while frontier:
        nxt = []
        for S in frontier:
            for xi in range(G.order):
                if xi in S._elemset:
                    continue
                T = G.subgroup_generated(list(S.elements()) + [G.elements[xi]])
                if max_order is not None and T.order > max_order:
                    continue
                if T.element_indices not in found:
                    found[T.element_indices] = T
                    nxt.append(T)
        frontier = nxt
    return SubgroupCollection(_fuse_up_to_conjugacy(G, found.values()),
                              closure_mode="classes")


def is_subconjugate(Q: SubgroupHandle, coll: SubgroupCollection, G: Group) -> bool:
    """True iff some G-conjugate of Q lies inside some member of coll."""
    _require_subgroup(G, Q)
    for member in coll:
        if member.order % Q.order != 0:
            continue
        for gi in range(G.order):
            conj = conjugate_subgroup(Q, G.elements[gi])
            if member.contains(conj):
                return True
    return False


# -- group file format -------------------------------------------------------

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_cycle_notation(text: str, degree: int) -> Perm:
    """Parse disjoint-cycle notation over 0-based points, e.g. (0 1 2)(3 4).

    '()' denotes the identity.  Whitespace and commas both separate points.
    """
    text = text.strip()
    if not text:
        raise ParseError("empty permutation string")
    stripped = text.replace(" ", "")
    if stripped == "()":
        return Perm.identity(degree)
    consumed = "".join(_CYCLE_RE.findall(text))
    rebuilt = "".join("(" + c + ")" for c in _CYCLE_RE.findall(text))
    if re.sub(r"[\s,]", "", rebuilt) != re.sub(r"[\s,]", "", text):
        raise ParseError(f"malformed cycle notation: {text!r}")
    cycles = []
    for body in _CYCLE_RE.findall(text):
        pts = [int(tok) for tok in re.split(r"[\s,]+", body.strip()) if tok]
        if len(pts) != len(set(pts)):
            raise ParseError(f"repeated point in cycle {body!r}")
        if pts:
            cycles.append(pts)
    seen = set()
    for cyc in cycles:
        for pt in cyc:
            if pt in seen:
                raise ParseError(f"cycles are not disjoint in {text!r}")
            seen.add(pt)
    try:
        return Perm.from_cycles(cycles, degree)
    except GreencorrError as exc:
        raise ParseError(str(exc)) from None


def load_group_file(path: str, order_cap: int = DEFAULT_ORDER_CAP):
    """Load the text group format.

    Line 1: ``degree n``.  Optional line ``p <prime>``.  Every other
    non-empty, non-comment line is one generator in cycle notation.
    Returns (Group, p or None).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("degree"):
        raise ParseError(f"{path}: first line must be 'degree n'")
    try:
        degree = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise ParseError(f"{path}: bad degree line {lines[0]!r}") from None
    p = None
    body = lines[1:]
    if body and body[0].startswith("p "):
        try:
            p = int(body[0].split()[1])
        except (IndexError, ValueError):
            raise ParseError(f"{path}: bad prime line {body[0]!r}") from None
        body = body[1:]
    gens = [parse_cycle_notation(ln, degree) for ln in body]
    return Group(degree, gens, order_cap=order_cap), p


def save_group_file(path: str, G: Group, p: Optional[int] = None):
    lines = [f"degree {G.degree}"]
    if p is not None:
        lines.append(f"p {p}")
    for g in G.generators:
        lines.append(g.cycle_string())
    if not G.generators:
        lines.append("()")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# -- stock groups used throughout the tests and demos ------------------------


@lru_cache(maxsize=None)
def cyclic_group(n: int) -> Group:
    return Group(n, [Perm([(i + 1) % n for i in range(n)])])


@lru_cache(maxsize=None)
def symmetric_group(n: int) -> Group:
    if n <= 1:
        return Group(max(n, 1), [])
    cycle = Perm([(i + 1) % n for i in range(n)])
    swap = Perm([1, 0] + list(range(2, n)))
    return Group(n, [swap, cycle])


@lru_cache(maxsize=None)
def alternating_group(n: int) -> Group:
    if n <= 2:
        return Group(max(n, 1), [])
    three = Perm.from_cycles([[0, 1, 2]], n)
    if n % 2 == 1:
        long = Perm([(i + 1) % n for i in range(n)])
    else:
        long = Perm.from_cycles([[i for i in range(1, n)]], n)
    return Group(n, [three, long])


@lru_cache(maxsize=None)
def klein_four_in(degree: int = 4) -> Group:
    a = Perm.from_cycles([[0, 1], [2, 3]], degree)
    b = Perm.from_cycles([[0, 2], [1, 3]], degree)
    return Group(degree, [a, b])
