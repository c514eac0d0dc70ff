"""The Cayley tree of the free group F_n with unit edges, in exact arithmetic.

Words are strings: ``a``, ``b``, ... are generators and ``A``, ``B``, ... their
inverses.  A point lies either on a vertex or in the interior of an edge; the
edge is always stored from its endpoint nearer the identity, so the stored
vertex followed by the edge letter is a reduced word.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

Number = Union[int, Fraction]


def alphabet(rank: int) -> list[str]:
    """Generators then inverses, in the fixed order used for every enumeration."""
    if not 1 <= rank <= 26:
        raise ValueError(f"rank must be in 1..26, got {rank}")
    low = list(string.ascii_lowercase[:rank])
    return low + [c.upper() for c in low]


def inv_letter(c: str) -> str:
    return c.lower() if c.isupper() else c.upper()


def inv_word(w: str) -> str:
    return "".join(inv_letter(c) for c in reversed(w))


def reduce_word(w: str) -> str:
    out: list[str] = []
    for c in w:
        if out and out[-1] == inv_letter(c):
            out.pop()
        else:
            out.append(c)
    return "".join(out)


def is_reduced(w: str) -> bool:
    return all(w[i] != inv_letter(w[i + 1]) for i in range(len(w) - 1))


def mul(u: str, v: str) -> str:
    return reduce_word(u + v)


def check_word(w: str, rank: int) -> None:
    allowed = set(alphabet(rank))
    bad = [c for c in w if c not in allowed]
    if bad:
        raise ValueError(f"word {w!r} uses letters {bad} outside rank {rank}")


def cyclic_reduction(w: str) -> tuple[str, str]:
    """Return ``(c, core)`` with ``w = c core c^-1`` reduced and ``core`` cyclically reduced."""
    w = reduce_word(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == inv_letter(w[j]):
        i += 1
        j -= 1
    return w[:i], w[i:j + 1]


def primitive_root(w: str) -> str:
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d]
    return w


def reduced_words(rank: int, max_len: int) -> Iterator[str]:
    """All reduced words of length <= max_len, shortlex in the alphabet order."""
    letters = alphabet(rank)
    layer = [""]
    yield ""
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for c in letters:
                if w and w[-1] == inv_letter(c):
                    continue
                nxt.append(w + c)
        yield from nxt
        layer = nxt


def common_prefix_length(u: str, v: str) -> int:
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return n


def cyclic_words(rank: int, max_len: int) -> list[str]:
    """Cyclically reduced words, one per cyclic rotation class (not up to inversion)."""
    seen = set()
    out = []
    for w in reduced_words(rank, max_len):
        if not w or w[0] == inv_letter(w[-1]):
            continue
        canon = min(w[i:] + w[:i] for i in range(len(w)))
        if canon in seen:
            continue
        seen.add(canon)
        out.append(canon)
    return out


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class TreePoint:
    vertex: str
    edge: Optional[str] = None
    offset: Fraction = Fraction(0)
    rank: int = 2

    def __post_init__(self):
        off = Fraction(self.offset)
        check_word(self.vertex, self.rank)
        if not is_reduced(self.vertex):
            raise ValueError(f"vertex word {self.vertex!r} is not reduced")
        if not 0 <= off < 1:
            raise ValueError(f"offset {off} outside [0, 1)")
        if off == 0:
            if self.edge is not None:
                raise ValueError("offset 0 must not carry an edge letter")
        else:
            if self.edge is None or len(self.edge) != 1:
                raise ValueError("a positive offset needs a single edge letter")
            check_word(self.edge, self.rank)
            if self.vertex and self.vertex[-1] == inv_letter(self.edge):
                raise ValueError("edge must point away from the identity")
        object.__setattr__(self, "offset", off)

    @property
    def is_vertex(self) -> bool:
        return self.edge is None

    @property
    def depth(self) -> Fraction:
        """Distance to the identity vertex."""
        return len(self.vertex) + self.offset

    def endpoints(self) -> list[tuple[str, Fraction]]:
        """Adjacent vertices with their distances (just the vertex itself for vertex points)."""
        if self.edge is None:
            return [(self.vertex, Fraction(0))]
        return [(self.vertex, self.offset), (self.vertex + self.edge, 1 - self.offset)]

    def to_json(self):
        return {"vertex": self.vertex, "edge": self.edge, "offset": str(self.offset)}


def vertex(w: str, rank: int = 2) -> TreePoint:
    return TreePoint(reduce_word(w), None, Fraction(0), rank)


def point_on_edge(u: str, g: str, s: Number, rank: int = 2) -> TreePoint:
    """Point at distance ``s`` (0 <= s <= 1) from vertex ``u`` along the edge labelled ``g``."""
    s = Fraction(s)
    if not 0 <= s <= 1:
        raise ValueError(f"edge parameter {s} outside [0, 1]")
    u = reduce_word(u)
    if s == 0:
        return TreePoint(u, None, Fraction(0), rank)
    if s == 1:
        return TreePoint(mul(u, g), None, Fraction(0), rank)
    if u and u[-1] == inv_letter(g):
        return TreePoint(u[:-1], u[-1], 1 - s, rank)
    return TreePoint(u, g, s, rank)


def _check_rank(*pts) -> int:
    ranks = {p.rank for p in pts}
    if len(ranks) != 1:
        raise ValueError(f"arity mismatch between tree points: ranks {sorted(ranks)}")
    return ranks.pop()


def _same_edge(a: TreePoint, b: TreePoint) -> bool:
    return (a.edge is not None and b.edge is not None
            and a.vertex == b.vertex and a.edge == b.edge)


def _route(a: TreePoint, b: TreePoint):
    """Best (endpoint of a, its distance, endpoint of b, its distance, vertex path)."""
    best = None
    for u, du in a.endpoints():
        for v, dv in b.endpoints():
            path = mul(inv_word(u), v)
            total = du + len(path) + dv
            if best is None or total < best[0]:
                best = (total, u, du, v, dv, path)
    return best


def tree_distance(a: TreePoint, b: TreePoint) -> Fraction:
    _check_rank(a, b)
    if a == b:
        return Fraction(0)
    if _same_edge(a, b):
        return abs(a.offset - b.offset)
    return _route(a, b)[0]


def point_along(a: TreePoint, b: TreePoint, t: Number) -> TreePoint:
    """Point at distance ``t`` from ``a`` on the segment ``[a, b]``."""
    rank = _check_rank(a, b)
    t = Fraction(t)
    if t <= 0:
        return a
    if _same_edge(a, b):
        d = abs(a.offset - b.offset)
        if t >= d:
            return b
        step = t if b.offset > a.offset else -t
        return point_on_edge(a.vertex, a.edge, a.offset + step, rank)
    total, u, du, v, dv, path = _route(a, b)
    if t >= total:
        return b
    if t <= du:
        if a.edge is None:
            return a
        pos = a.offset - t if u == a.vertex else a.offset + t
        return point_on_edge(a.vertex, a.edge, pos, rank)
    t -= du
    if t <= len(path):
        k = math.floor(t)
        frac = t - k
        w = mul(u, path[:k])
        if frac == 0:
            return vertex(w, rank)
        return point_on_edge(w, path[k], frac, rank)
    t -= len(path)
    # final stretch from the endpoint v into b's edge
    pos = t if v == b.vertex else 1 - t
    return point_on_edge(b.vertex, b.edge, pos, rank)


def tree_midpoint(a: TreePoint, b: TreePoint) -> TreePoint:
    if a == b:
        return a
    return point_along(a, b, tree_distance(a, b) / 2)


# ---------------------------------------------------------------------------
# ends


@dataclass(frozen=True)
class TreeEnd:
    """The end ``prefix . period^infinity`` in canonical (shortest) form."""

    prefix: str
    period: str
    rank: int = 2

    def __post_init__(self):
        if not self.period:
            raise ValueError("period must be nonempty")
        check_word(self.prefix, self.rank)
        check_word(self.period, self.rank)
        p, q = _canonical_end(self.prefix, self.period)
        object.__setattr__(self, "prefix", p)
        object.__setattr__(self, "period", q)

    def letters(self, n: int) -> str:
        """First ``n`` letters of the infinite reduced word."""
        if n <= len(self.prefix):
            return self.prefix[:n]
        k = n - len(self.prefix)
        reps = k // len(self.period) + 1
        return self.prefix + (self.period * reps)[:k]

    def ray_vertex(self, n: int) -> TreePoint:
        return vertex(self.letters(n), self.rank)

    def to_json(self):
        return {"prefix": self.prefix, "period": self.period}


def _canonical_end(prefix: str, period: str) -> tuple[str, str]:
    conj, core = cyclic_reduction(period)
    if not core:
        raise ValueError(f"period {period!r} is trivial in the free group")
    r = reduce_word(prefix + conj)
    # cancel the tail of r against the periodic word core^infinity
    k = 0
    while r and r[-1] == inv_letter(core[k % len(core)]):
        r = r[:-1]
        k += 1
    rho = k % len(core)
    q = primitive_root(core[rho:] + core[:rho])
    while r and r[-1] == q[-1]:
        r = r[:-1]
        q = q[-1] + q[:-1]
    return r, q


def _end_horizon(*ends: TreeEnd) -> int:
    """Two distinct ends differ before this many letters."""
    lcm = 1
    for e in ends:
        lcm = lcm * len(e.period) // math.gcd(lcm, len(e.period))
    return max(len(e.prefix) for e in ends) + lcm


# ---------------------------------------------------------------------------
# isometries


@dataclass(frozen=True)
class TreeIsometry:
    word: str
    rank: int = 2

    def __post_init__(self):
        check_word(self.word, self.rank)
        object.__setattr__(self, "word", reduce_word(self.word))

    def inverse(self) -> "TreeIsometry":
        return TreeIsometry(inv_word(self.word), self.rank)

    def compose(self, other: "TreeIsometry") -> "TreeIsometry":
        """``self o other`` (apply ``other`` first)."""
        return TreeIsometry(mul(self.word, other.word), self.rank)

    def to_json(self):
        return self.word


TreeThing = Union[TreePoint, TreeEnd]


def tree_apply(w: TreeIsometry, x: TreeThing) -> TreeThing:
    if w.rank != x.rank:
        raise ValueError(f"arity mismatch: isometry rank {w.rank}, target rank {x.rank}")
    if isinstance(x, TreeEnd):
        return TreeEnd(w.word + x.prefix, x.period, x.rank)
    if x.edge is None:
        return vertex(w.word + x.vertex, x.rank)
    return point_on_edge(mul(w.word, x.vertex), x.edge, x.offset, x.rank)


def tree_translation_length(w: TreeIsometry | str) -> int:
    word = w.word if isinstance(w, TreeIsometry) else w
    return len(cyclic_reduction(word)[1])


def tree_busemann(end: TreeEnd, base: TreePoint, z: TreePoint) -> Fraction:
    _check_rank(base, z)
    k = math.ceil(max(base.depth, z.depth)) + 2
    far = end.ray_vertex(k)
    return tree_distance(far, z) - tree_distance(far, base)


def tree_gromov_product(x: TreeThing, y: TreeThing, o: TreePoint) -> Fraction | float:
    if isinstance(x, TreePoint) and isinstance(y, TreePoint):
        return (tree_distance(x, o) + tree_distance(y, o) - tree_distance(x, y)) / 2
    if isinstance(x, TreeEnd) and isinstance(y, TreeEnd):
        if x == y:
            return math.inf
        k = _end_horizon(x, y) + math.ceil(o.depth) + 2
        return tree_gromov_product(x.ray_vertex(k), y.ray_vertex(k), o)
    if isinstance(x, TreeEnd):
        x, y = y, x
    return (tree_distance(x, o) - tree_busemann(y, o, x)) / 2


def point_toward_end(x: TreePoint, end: TreeEnd, t: Number) -> TreePoint:
    """Point at distance ``t`` from ``x`` on the ray from ``x`` to ``end``."""
    t = Fraction(t)
    k = math.ceil(x.depth + t) + 2
    return point_along(x, end.ray_vertex(k), t)


def infer_end(word: str, rank: int = 2) -> Optional[TreeEnd]:
    """Shortest eventually periodic end consistent with a long finite reduced word.

    The periodic part must repeat at least twice inside ``word``.  Among the
    candidates the one with the smallest ``|prefix| + |period|`` wins.
    """
    n = len(word)
    best = None
    for i in range(n):
        for L in range(1, (n - i) // 2 + 1):
            if best is not None and i + L >= best[0]:
                break
            tail = word[i:]
            if all(tail[k] == tail[k - L] for k in range(L, len(tail))):
                best = (i + L, i, L)
                break
    if best is None:
        return None
    _, i, L = best
    return TreeEnd(word[:i], word[i:i + L], rank)
