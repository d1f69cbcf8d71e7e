"""Seeded instance generators.

Randomness comes from SplitMix64 so that any implementation can reproduce
an instance bit for bit from its seed:

* ``next_u64``: ``state += 0x9E3779B97F4A7C15``, then
  ``z = (z ^ z>>30) * 0xBF58476D1CE4E5B9``, ``z = (z ^ z>>27) * 0x94D049BB133111EB``,
  return ``z ^ z>>31`` (all mod 2^64).
* ``randint(lo, hi)`` (inclusive): ``lo + (next_u64() * (hi - lo + 1) >> 64)``.
* ``stream(label)``: a fresh generator seeded with the first output of
  ``SplitMix64(seed ^ fnv1a64(label))``.

Coefficients are ``randint(-R, R) / randint(1, 4)`` (re-drawn when zero is
not allowed); strictly positive draws use ``randint(1, R) / randint(1, 4)``.
Each structural ingredient draws from its own labelled stream, so changing
one family does not perturb another.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .pipeline import Bounds
from .poly import Polynomial

_MASK = (1 << 64) - 1
KINDS = ("path-blocks", "tree-backbone", "random-sparse")


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode():
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.state = self.seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError("empty range")
        return lo + ((self.next_u64() * (hi - lo + 1)) >> 64)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def sample(self, seq, k: int) -> list:
        pool = list(seq)
        out = []
        for _ in range(k):
            out.append(pool.pop(self.randint(0, len(pool) - 1)))
        return out

    def stream(self, label: str) -> "SplitMix64":
        return SplitMix64(SplitMix64(self.seed ^ fnv1a64(label)).next_u64())


def coef(rng: SplitMix64, r: int, nonzero: bool = True) -> Fraction:
    while True:
        c = Fraction(rng.randint(-r, r), rng.randint(1, 4))
        if c or not nonzero:
            return c


def positive(rng: SplitMix64, r: int) -> Fraction:
    return Fraction(rng.randint(1, r), rng.randint(1, 4))


def nonpositive(rng: SplitMix64, r: int) -> Fraction:
    return Fraction(-rng.randint(0, r), rng.randint(1, 4))


@dataclass(frozen=True)
class GenSpec:
    kind: str = "path-blocks"
    m: int = 3
    block_size: int = 1
    nbr_size: int = 2
    degree: int = 2
    seed: int = 0
    coef_range: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.nbr_size < 0:
            raise ValueError("nbr_size must be nonnegative")
        if self.degree not in (2, 3):
            raise ValueError("degree must be 2 or 3")
        if self.coef_range < 1:
            raise ValueError("coef_range must be at least 1")

    def bounds(self) -> Bounds:
        """Bounds every instance of this spec satisfies by construction."""
        b, s = self.block_size, self.nbr_size
        if self.kind == "path-blocks":
            return Bounds(tw_max=1 if self.degree == 2 else 2, itw_max=2, block_max=b, nbr_max=2)
        if self.kind == "tree-backbone":
            return Bounds(tw_max=b + s - 1, itw_max=b + s, block_max=b, nbr_max=s)
        n = self.m
        return Bounds(tw_max=n, itw_max=2 * n, block_max=n, nbr_max=n)


class _Builder:
    def __init__(self):
        self.terms: dict = {}
        self.n = 0

    def new_vars(self, k: int) -> list:
        out = list(range(self.n, self.n + k))
        self.n += k
        return out

    def add(self, exps: dict, c: Fraction):
        mono = tuple(sorted(exps.items()))
        s = self.terms.get(mono, 0) + c
        if s:
            self.terms[mono] = s
        else:
            self.terms.pop(mono, None)

    def build(self) -> Polynomial:
        return Polynomial(self.n, self.terms)


def _continuous_self(bld: _Builder, rng: SplitMix64, x: int, spec: GenSpec):
    """Terms in one continuous variable that keep it out of the hidden-binary set."""
    r = spec.coef_range
    a = positive(rng, r)
    bld.add({x: 2}, a)
    bld.add({x: 1}, coef(rng, r, nonzero=False))
    if spec.degree == 3:
        # H_x has constant term -(a + b) < 0 and the x^2 coefficient is positive
        b = Fraction(rng.randint(-r, r), 4)
        while a + b <= 0:
            b += 1
        if b:
            bld.add({x: 3}, b)


def _binary_self(bld: _Builder, rng: SplitMix64, z: int, spec: GenSpec):
    r = spec.coef_range
    bld.add({z: 1}, coef(rng, r, nonzero=False))
    bld.add({z: 2}, nonpositive(rng, r))
    if spec.degree == 3:
        bld.add({z: 3}, nonpositive(rng, r))


def _link(bld: _Builder, rng: SplitMix64, x: int, z: int, spec: GenSpec):
    """Continuous-binary interaction (z stays multilinear)."""
    r = spec.coef_range
    bld.add({x: 1, z: 1}, coef(rng, r))
    if spec.degree == 3 and rng.randint(0, 1):
        bld.add({x: 2, z: 1}, coef(rng, r))


def _couple(bld: _Builder, rng: SplitMix64, x: int, y: int, spec: GenSpec):
    """Continuous-continuous interaction."""
    r = spec.coef_range
    bld.add({x: 1, y: 1}, coef(rng, r))
    if spec.degree == 3 and rng.randint(0, 1):
        bld.add({x: 2, y: 1}, coef(rng, r))


def path_blocks(spec: GenSpec) -> Polynomial:
    """Blocks of continuous variables on a path, consecutive blocks joined by one binary.

    With block_size 1 this is the alternating path p_1 z_1 p_2 ... z_{m-1} p_m.
    """
    root = SplitMix64(spec.seed)
    rng_self, rng_edge = root.stream("self"), root.stream("edges")
    bld = _Builder()
    prev_last = None
    for i in range(spec.m):
        if i:
            z = bld.new_vars(1)[0]
            _binary_self(bld, rng_self, z, spec)
            _link(bld, rng_edge, prev_last, z, spec)
        block = bld.new_vars(spec.block_size)
        for x in block:
            _continuous_self(bld, rng_self, x, spec)
        for a, b in zip(block, block[1:]):
            _couple(bld, rng_edge, a, b, spec)
        if i:
            _link(bld, rng_edge, block[0], z, spec)
        prev_last = block[-1]
    return bld.build()


def tree_backbone(spec: GenSpec) -> Polynomial:
    """Cliques C_r + N_r glued along shared binaries in a random tree.

    Block r picks a parent among earlier blocks and reuses ``nbr_size // 2``
    of the parent's binaries; the rest are fresh. Every block is a clique in
    the interaction graph, so the graph is chordal with treewidth at most
    ``block_size + nbr_size - 1``.
    """
    root = SplitMix64(spec.seed)
    rng_tree, rng_self, rng_edge = root.stream("tree"), root.stream("self"), root.stream("edges")
    b, s = spec.block_size, spec.nbr_size
    bld = _Builder()
    nbrs = []
    for r in range(spec.m):
        if r == 0 or s == 0:
            shared = []
        else:
            parent = rng_tree.randint(0, r - 1)
            shared = sorted(rng_tree.sample(nbrs[parent], min(s // 2, len(nbrs[parent]))))
        fresh = bld.new_vars(s - len(shared))
        for z in fresh:
            _binary_self(bld, rng_self, z, spec)
        nb = sorted(shared + fresh)
        nbrs.append(nb)
        block = bld.new_vars(b)
        for x in block:
            _continuous_self(bld, rng_self, x, spec)
        for x, y in combinations(block, 2):
            _couple(bld, rng_edge, x, y, spec)
        for x in block:
            for z in nb:
                _link(bld, rng_edge, x, z, spec)
        fresh_set = set(fresh)
        for z, w in combinations(nb, 2):
            if z in fresh_set or w in fresh_set:
                bld.add({z: 1, w: 1}, coef(rng_edge, spec.coef_range))
    return bld.build()


def random_sparse(spec: GenSpec) -> Polynomial:
    """``m`` variables, mixed-sign diagonals, each pair coupled with probability 2/(m-1)."""
    root = SplitMix64(spec.seed)
    rng_self, rng_edge = root.stream("self"), root.stream("edges")
    n = spec.m
    r = spec.coef_range
    bld = _Builder()
    bld.new_vars(n)
    for x in range(n):
        bld.add({x: 1}, coef(rng_self, r, nonzero=False))
        bld.add({x: 2}, coef(rng_self, r, nonzero=False))
        if spec.degree == 3:
            bld.add({x: 3}, coef(rng_self, r, nonzero=False))
    p_edge = min(1.0, 2.0 / max(1, n - 1))
    for x, y in combinations(range(n), 2):
        if rng_edge.random() < p_edge:
            bld.add({x: 1, y: 1}, coef(rng_edge, r))
            if spec.degree == 3 and rng_edge.randint(0, 1):
                bld.add({x: 2, y: 1}, coef(rng_edge, r))
    if spec.degree == 3 and n >= 3:
        for _ in range(rng_edge.randint(0, n // 3)):
            x, y, z = rng_edge.sample(range(n), 3)
            bld.add({x: 1, y: 1, z: 1}, coef(rng_edge, r))
    return bld.build()


def generate(spec: GenSpec) -> Polynomial:
    if spec.kind == "path-blocks":
        return path_blocks(spec)
    if spec.kind == "tree-backbone":
        return tree_backbone(spec)
    return random_sparse(spec)
