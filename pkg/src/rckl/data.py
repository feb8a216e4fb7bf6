"""Synthetic ground truth, query answering, triplet files, and splits.

Randomness: numpy's default_rng (PCG64 counter-based generator) with the
ziggurat normal transform, so identical seeds reproduce identical data on
any machine.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence, TextIO

import numpy as np

from .core import Query, Triplet
from .errors import CountOverflowError, IndexOutOfRangeError, InvalidDimsError, ParseError


@dataclass(frozen=True)
class PointCloud:
    n: int
    d: int
    coords: np.ndarray  # (n, d)
    seed: int


def gen_points(n: int, d: int, seed: int) -> PointCloud:
    """n i.i.d. standard-normal points in R^d, deterministic per seed."""
    if n < 3 or d < 1:
        raise InvalidDimsError(f"need n >= 3 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    return PointCloud(n, d, rng.standard_normal((n, d)), seed)


def gram_matrix(cloud: PointCloud) -> np.ndarray:
    return cloud.coords @ cloud.coords.T


def oracle_answer(cloud: PointCloud, q: Query) -> Triplet:
    """Answer a query from true squared distances.

    Exact ties go to the lower-indexed option (probability zero for
    continuous clouds, but must be deterministic).
    """
    q.validate(cloud.n)
    x = cloud.coords
    o1, o2 = sorted(q.options)
    d1 = float(np.sum((x[q.head] - x[o1]) ** 2))
    d2 = float(np.sum((x[q.head] - x[o2]) ** 2))
    if d1 <= d2:
        return Triplet(q.head, o1, o2)
    return Triplet(q.head, o2, o1)


def oracle_answer_many(cloud: PointCloud, queries: Sequence[Query]) -> list[Triplet]:
    """Vectorized oracle over many queries."""
    if not queries:
        return []
    arr = np.array([(q.head, *sorted(q.options)) for q in queries], dtype=np.intp)
    x = cloud.coords
    h, o1, o2 = arr[:, 0], arr[:, 1], arr[:, 2]
    d1 = np.sum((x[h] - x[o1]) ** 2, axis=1)
    d2 = np.sum((x[h] - x[o2]) ** 2, axis=1)
    first_closer = d1 <= d2
    b = np.where(first_closer, o1, o2)
    c = np.where(first_closer, o2, o1)
    return [Triplet(int(hh), int(bb), int(cc)) for hh, bb, cc in zip(h, b, c)]


def all_queries(n: int) -> Iterator[Query]:
    """All n*(n-1)*(n-2)/2 queries: each head with each option pair."""
    if n < 3:
        raise InvalidDimsError("need n >= 3")
    for head in range(n):
        others = [i for i in range(n) if i != head]
        for i in range(len(others)):
            for j in range(i + 1, len(others)):
                yield Query(head, (others[i], others[j]))


def query_count(n: int) -> int:
    return n * (n - 1) * (n - 2) // 2


def query_from_index(n: int, idx: int) -> Query:
    """Decode a flat index in [0, query_count(n)) to a query, in the same
    order as all_queries.  Lets large query spaces be sampled without
    materializing them."""
    per_head = (n - 1) * (n - 2) // 2
    head, rest = divmod(idx, per_head)
    if not 0 <= head < n:
        raise IndexOutOfRangeError(f"query index {idx} out of range")
    # rest indexes the pair (i < j) over the n-1 non-head objects
    i = 0
    remaining = rest
    while remaining >= n - 2 - i:
        remaining -= n - 2 - i
        i += 1
    j = i + 1 + remaining
    others = list(range(head)) + list(range(head + 1, n))
    return Query(head, (others[i], others[j]))


def sample_queries(n: int, count: int, seed: int) -> list[Query]:
    """Uniform i.i.d. queries (duplicates allowed), deterministic per seed."""
    if n < 3:
        raise InvalidDimsError("need n >= 3")
    if count < 1:
        raise InvalidDimsError("count must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        head = int(rng.integers(n))
        o1, o2 = rng.choice(n - 1, size=2, replace=False)
        o1, o2 = int(o1), int(o2)
        if o1 >= head:
            o1 += 1
        if o2 >= head:
            o2 += 1
        out.append(Query(head, (o1, o2)))
    return out


def sample_distinct_queries(n: int, count: int, seed: int) -> list[Query]:
    """A seeded permutation prefix of the full query space (no duplicates)."""
    total = query_count(n)
    if count > total:
        raise CountOverflowError(f"requested {count} of {total} queries")
    rng = np.random.default_rng(seed)
    idx = rng.choice(total, size=count, replace=False)
    return [query_from_index(n, int(i)) for i in idx]


# --- triplet files ---
# line 1: n; then rows "a b c" of 0-based indices; '#' starts a comment

@dataclass(frozen=True)
class TripletFile:
    path: str
    n_declared: int
    rows: list[Triplet]


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def load_triplets(path: str | Path) -> TripletFile:
    path = Path(path)
    with open(path) as fh:
        return parse_triplets(fh, str(path))


def parse_triplets(fh: TextIO, name: str = "<stream>") -> TripletFile:
    n_declared: int | None = None
    rows: list[Triplet] = []
    for line_no, raw in enumerate(fh, start=1):
        text = _strip_comment(raw)
        if not text:
            continue
        if n_declared is None:
            try:
                n_declared = int(text)
            except ValueError:
                raise ParseError(line_no, f"expected object count, got {text!r}")
            if n_declared < 3:
                raise ParseError(line_no, f"object count must be >= 3, got {n_declared}")
            continue
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(line_no, f"expected 3 indices, got {len(parts)}")
        try:
            a, b, c = (int(p) for p in parts)
        except ValueError:
            raise ParseError(line_no, f"non-integer index in {text!r}")
        try:
            rows.append(Triplet(a, b, c).validate(n_declared))
        except (ValueError, IndexOutOfRangeError) as exc:
            raise ParseError(line_no, str(exc))
    if n_declared is None:
        raise ParseError(1, "empty file: missing object count")
    return TripletFile(name, n_declared, rows)


def save_triplets(path: str | Path, n: int, rows: Sequence[Triplet]) -> None:
    with open(path, "w") as fh:
        fh.write(f"{n}\n")
        for t in rows:
            fh.write(f"{t.a} {t.b} {t.c}\n")


def split(rows: Sequence, counts: Sequence[int], seed: int) -> tuple[list, ...]:
    """Seeded permutation partition into len(counts) disjoint parts."""
    total = sum(counts)
    if total > len(rows):
        raise CountOverflowError(f"requested {total} rows of {len(rows)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(rows))
    parts = []
    start = 0
    for c in counts:
        parts.append([rows[int(i)] for i in perm[start:start + c]])
        start += c
    return tuple(parts)


def export_cloud_csv(cloud: PointCloud, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(f"d={cloud.d}\n")
        for row in cloud.coords:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def load_cloud_csv(path: str | Path, seed: int = -1) -> PointCloud:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("d="):
            raise ParseError(1, f"expected 'd=<d>' header, got {header!r}")
        d = int(header[2:])
        coords = np.array(
            [[float(x) for x in line.split(",")] for line in fh if line.strip()]
        )
    if coords.shape[1] != d:
        raise ParseError(2, f"rows have {coords.shape[1]} columns, header says {d}")
    return PointCloud(coords.shape[0], d, coords, seed)
