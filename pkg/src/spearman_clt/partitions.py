"""Set partitions of ``[N] = {1, ..., N}`` and the lattice operations on them."""
from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

N_MAX = 10

FILTERS = (None, "2+", "even", "matching", "four")


@dataclass(frozen=True)
class Partition:
    """A partition of ``{1, ..., N}`` in canonical form.

    Blocks are sorted tuples ordered by their minimum element, so two
    partitions are equal iff they have the same blocks.
    """

    blocks: tuple[tuple[int, ...], ...]
    N: int

    def __init__(self, blocks: Iterable[Iterable[int]], N: int | None = None):
        bl = [tuple(sorted(int(x) for x in b)) for b in blocks]
        if any(len(b) == 0 for b in bl):
            raise ValueError("blocks must be nonempty")
        elems = [x for b in bl for x in b]
        if N is None:
            N = max(elems, default=0)
        if sorted(elems) != list(range(1, N + 1)):
            raise ValueError(f"blocks {bl} do not partition [1..{N}]")
        bl.sort(key=lambda b: b[0])
        object.__setattr__(self, "blocks", tuple(bl))
        object.__setattr__(self, "N", N)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Build from a block label per element (element ``i+1`` gets ``labels[i]``)."""
        groups: dict[int, list[int]] = {}
        for pos, lab in enumerate(labels, 1):
            groups.setdefault(lab, []).append(pos)
        return cls(groups.values(), len(labels))

    @classmethod
    def discrete(cls, N: int) -> "Partition":
        return cls([[i] for i in range(1, N + 1)], N)

    @classmethod
    def single_block(cls, N: int) -> "Partition":
        return cls([range(1, N + 1)], N)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __repr__(self) -> str:
        inner = ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return f"Partition({{{inner}}})"

    def labels(self) -> tuple[int, ...]:
        """Block index (0-based, canonical order) of each element ``1..N``."""
        out = [0] * self.N
        for idx, b in enumerate(self.blocks):
            for x in b:
                out[x - 1] = idx
        return tuple(out)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def refines(self, other: "Partition") -> bool:
        """``self <= other``: every block of ``self`` lies inside a block of ``other``."""
        _same_ground(self, other)
        lab = other.labels()
        return all(len({lab[x - 1] for x in b}) == 1 for b in self.blocks)

    def is_measurable(self, word: Sequence) -> bool:
        """True if ``word`` is constant on every block."""
        if len(word) != self.N:
            raise ValueError("word length differs from the ground set size")
        return all(len({word[x - 1] for x in b}) == 1 for b in self.blocks)

    def __or__(self, other: "Partition") -> "Partition":
        return join(self, other)


def _same_ground(a: Partition, b: Partition) -> None:
    if a.N != b.N:
        raise ValueError(f"partitions of different ground sets ({a.N} vs {b.N})")


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def join(*parts: Partition) -> Partition:
    """Least upper bound of one or more partitions in the refinement order."""
    if not parts:
        raise ValueError("join of no partitions")
    N = parts[0].N
    for q in parts[1:]:
        _same_ground(parts[0], q)
    uf = _UnionFind(N)
    for q in parts:
        for b in q.blocks:
            for x in b[1:]:
                uf.union(b[0] - 1, x - 1)
    return Partition.from_labels([uf.find(i) for i in range(N)])


def n_join_blocks(*parts: Partition) -> int:
    """``#(p1 v p2 v ...)`` without building the canonical partition."""
    N = parts[0].N
    uf = _UnionFind(N)
    for q in parts:
        for b in q.blocks:
            for x in b[1:]:
                uf.union(b[0] - 1, x - 1)
    return len({uf.find(i) for i in range(N)})


def _restricted_growth(N: int) -> Iterator[list[int]]:
    # a[i] <= 1 + max(a[:i]); lexicographic order of the label strings
    a = [0] * N
    m = [0] * N  # m[i] = max(a[:i+1])
    while True:
        yield a
        i = N - 1
        while i > 0 and a[i] > m[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        m[i] = max(m[i - 1], a[i])
        for j in range(i + 1, N):
            a[j] = 0
            m[j] = m[i]


def _keep(sizes: tuple[int, ...], kind: str | None) -> bool:
    if kind is None:
        return True
    if kind == "2+":
        return min(sizes) >= 2
    if kind == "even":
        return all(s % 2 == 0 for s in sizes)
    if kind == "matching":
        return all(s == 2 for s in sizes)
    if kind == "four":
        return sorted(sizes)[-1] == 4 and sorted(sizes)[:-1] == [2] * (len(sizes) - 1)
    raise ValueError(f"unknown filter {kind!r}; choose from {FILTERS}")


def enumerate_partitions(N: int, kind: str | None = None) -> Iterator[Partition]:
    """All partitions of ``[N]`` in canonical (restricted-growth) order.

    ``kind`` restricts to blocks of size >= 2 (``"2+"``), even blocks
    (``"even"``), perfect matchings (``"matching"``) or one 4-block plus pairs
    (``"four"``).
    """
    if not 1 <= N <= N_MAX:
        raise ValueError(f"N={N} outside [1, {N_MAX}]")
    _keep((2,), kind)  # validates the filter name eagerly
    for labels in _restricted_growth(N):
        part = Partition.from_labels(labels)
        if _keep(part.block_sizes(), kind):
            yield part


def bell(N: int) -> int:
    row = [1]
    for _ in range(N):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


@dataclass(frozen=True)
class MatchingPair:
    """The two perfect matchings encoding ``tr S^k1 ... tr S^kr`` on ``[2k]``.

    ``pi0`` pairs the two factors sharing a row index, ``pi1`` pairs the
    factors sharing a column index around each of the ``r`` cycles.
    """

    pi0: Partition
    pi1: Partition
    k_list: tuple[int, ...]

    @classmethod
    def build(cls, k_list: Sequence[int]) -> "MatchingPair":
        ks = tuple(int(k) for k in k_list)
        if not ks or any(k < 1 for k in ks):
            raise ValueError(f"k_list must be positive integers, got {k_list}")
        two_k = 2 * sum(ks)
        pi0 = Partition([(2 * i - 1, 2 * i) for i in range(1, two_k // 2 + 1)], two_k)
        blocks = []
        start = 0
        for k in ks:
            end = start + 2 * k  # this cycle occupies positions start+1 .. end
            for a in range(start + 2, end, 2):
                blocks.append((a, a + 1))
            blocks.append((end, start + 1))
            start = end
        pi1 = Partition(blocks, two_k)
        return cls(pi0, pi1, ks)

    @property
    def k(self) -> int:
        return sum(self.k_list)
