"""Sparse parity-check matrices over GF(2^q).

Codes are built in two steps: a binary Tanner graph from progressive edge
growth (PEG), then a uniformly random nonzero field label on every edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from pathlib import Path

import numba
import numpy as np

from .gf import GaloisField, get_field

FORMAT_MAGIC = "nbrecon-code 1"


class CodeConstructionError(ValueError):
    pass


class CodeFormatError(ValueError):
    """Malformed code file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective variable degree distribution ``lambda(x)``.

    ``coefficients[i]`` is the fraction of edges attached to variable
    nodes of degree ``i``.
    """

    coefficients: dict

    def __post_init__(self):
        coeffs = {int(k): float(v) for k, v in self.coefficients.items() if float(v) != 0.0}
        if not coeffs:
            raise ValueError("empty degree distribution")
        if min(coeffs) < 2:
            raise ValueError("variable degrees must be at least 2")
        if any(v < 0 for v in coeffs.values()):
            raise ValueError("negative coefficient in degree distribution")
        if abs(sum(coeffs.values()) - 1.0) > 1e-9:
            raise ValueError(f"coefficients sum to {sum(coeffs.values())!r}, not 1")
        object.__setattr__(self, "coefficients", dict(sorted(coeffs.items())))

    def node_fractions(self) -> dict:
        """Fraction of variable nodes of each degree, proportional to ``lambda_i / i``."""
        w = {i: c / i for i, c in self.coefficients.items()}
        total = sum(w.values())
        return {i: v / total for i, v in w.items()}

    def mean_degree(self) -> float:
        return 1.0 / sum(c / i for i, c in self.coefficients.items())

    def describe(self) -> str:
        return ",".join(f"{i}={c!r}" for i, c in self.coefficients.items())


@dataclass(frozen=True)
class RegularProfile:
    """Every variable node has degree ``dv``; check degrees are as even as the edge count allows."""

    dv: int = 2

    def __post_init__(self):
        if self.dv < 1:
            raise ValueError("variable degree must be positive")

    def describe(self) -> str:
        return f"regular:dv={self.dv}"


# irregular ensembles: (q, rate, lambda)
PROFILES = {
    "gf16-r085": (4, 0.85, DegreeDistribution({
        2: 0.62755, 6: 0.03896, 10: 0.02497, 11: 0.01158, 14: 0.00598,
        15: 0.03557, 17: 0.20497, 19: 0.05042})),
    "gf32-r09": (5, 0.9, DegreeDistribution({
        2: 0.67173, 6: 0.00164, 7: 0.00481, 8: 0.01342, 14: 0.02081, 16: 0.28759})),
    "gf64-r09": (6, 0.9, DegreeDistribution({
        2: 0.81173, 5: 0.00710, 8: 0.01004, 15: 0.17113})),
}


def profile_string(profile) -> str:
    if isinstance(profile, RegularProfile):
        return profile.describe()
    for name, (_, _, dist) in PROFILES.items():
        if dist == profile:
            return f"irregular:{name}"
    return f"irregular:{profile.describe()}"


def parse_profile(text: str):
    """Inverse of :func:`profile_string`; also accepts a bare Table-style profile name."""
    text = text.strip()
    if text in PROFILES:
        return PROFILES[text][2]
    kind, _, body = text.partition(":")
    if kind == "regular":
        key, _, value = body.partition("=")
        if key != "dv":
            raise ValueError(f"bad regular profile {text!r}")
        return RegularProfile(int(value))
    if kind == "irregular":
        if body in PROFILES:
            return PROFILES[body][2]
        coeffs = {}
        for item in body.split(","):
            deg, _, c = item.partition("=")
            coeffs[int(deg)] = float(c)
        return DegreeDistribution(coeffs)
    raise ValueError(f"unknown profile {text!r}")


def node_degrees_from_lambda(dist: DegreeDistribution, n: int) -> np.ndarray:
    """Per-node degrees (ascending) realizing ``dist`` on ``n`` variable nodes.

    Node counts are ``n * lambda_i / i`` normalized, rounded by the largest
    remainder method so they sum to exactly ``n``.
    """
    fractions = dist.node_fractions()
    degrees = np.array(list(fractions))
    exact = n * np.array(list(fractions.values()))
    counts = np.floor(exact).astype(np.int64)
    short = n - counts.sum()
    if short:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return np.repeat(degrees, counts)


def variable_degrees(profile, n: int) -> np.ndarray:
    if isinstance(profile, RegularProfile):
        return np.full(n, profile.dv, dtype=np.int64)
    return node_degrees_from_lambda(profile, n)


@numba.njit(cache=True)
def _peg_kernel(n, m, var_deg, max_depth, seed):
    np.random.seed(seed)
    total = 0
    for j in range(n):
        total += var_deg[j]
    floor_deg = total // m
    remainder = total - floor_deg * m
    cap = floor_deg + 1 if remainder else floor_deg

    max_dv = 0
    for j in range(n):
        max_dv = max(max_dv, var_deg[j])
    var_adj = np.full((n, max_dv), -1, np.int64)
    chk_adj = np.full((m, cap), -1, np.int64)
    vdeg = np.zeros(n, np.int64)
    cdeg = np.zeros(m, np.int64)
    n_at_cap = 0

    depth = np.zeros(m, np.int64)
    chk_stamp = np.full(m, -1, np.int64)
    var_stamp = np.full(n, -1, np.int64)
    frontier = np.empty(n, np.int64)
    next_frontier = np.empty(n, np.int64)
    candidates = np.empty(m, np.int64)
    unreached = 1 << 40
    stamp = 0

    for v in range(n):
        for _k in range(var_deg[v]):
            stamp += 1
            # breadth-first search over the current graph, recording check depths
            var_stamp[v] = stamp
            nf = 1
            frontier[0] = v
            level = 0
            n_reached = 0
            while nf > 0 and n_reached < m and (max_depth < 0 or level <= max_depth):
                nn = 0
                for t in range(nf):
                    u = frontier[t]
                    for a in range(vdeg[u]):
                        c = var_adj[u, a]
                        if chk_stamp[c] != stamp:
                            chk_stamp[c] = stamp
                            depth[c] = level
                            n_reached += 1
                            for b in range(cdeg[c]):
                                w = chk_adj[c, b]
                                if var_stamp[w] != stamp:
                                    var_stamp[w] = stamp
                                    next_frontier[nn] = w
                                    nn += 1
                for t in range(nn):
                    frontier[t] = next_frontier[t]
                nf = nn
                level += 1

            limit = floor_deg if (remainder and n_at_cap >= remainder) else cap
            best_depth = -1
            best_deg = 1 << 40
            nc = 0
            for c in range(m):
                if cdeg[c] >= limit:
                    continue
                adjacent = False
                for a in range(vdeg[v]):
                    if var_adj[v, a] == c:
                        adjacent = True
                        break
                if adjacent:
                    continue
                d = depth[c] if chk_stamp[c] == stamp else unreached
                if d > best_depth or (d == best_depth and cdeg[c] < best_deg):
                    best_depth = d
                    best_deg = cdeg[c]
                    nc = 0
                if d == best_depth and cdeg[c] == best_deg:
                    candidates[nc] = c
                    nc += 1
            if nc == 0:
                return var_adj, vdeg, False
            c = candidates[np.random.randint(0, nc)]
            var_adj[v, vdeg[v]] = c
            vdeg[v] += 1
            chk_adj[c, cdeg[c]] = v
            cdeg[c] += 1
            if remainder and cdeg[c] == cap:
                n_at_cap += 1
    return var_adj, vdeg, True


@dataclass(eq=False)
class SparseParityCheck:
    """An ``m x n`` sparse parity-check matrix over GF(2^q).

    Entries are stored as parallel arrays sorted by ``(row, col)``. A label
    of 1 everywhere denotes a binary skeleton.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray
    field: GaloisField
    profile: object = dc_field(default_factory=RegularProfile)
    seeds: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not (self.rows.shape == self.cols.shape == self.labels.shape):
            raise ValueError("entry arrays must have equal length")
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < m < n, got m={self.m}, n={self.n}")
        if self.rows.size:
            if self.rows.min() < 0 or self.rows.max() >= self.m:
                raise ValueError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.n:
                raise ValueError("column index out of range")
            if self.labels.min() < 1 or self.labels.max() >= self.field.order:
                raise ValueError("labels must be nonzero field elements")
        order = np.lexsort((self.cols, self.rows))
        self.rows, self.cols, self.labels = self.rows[order], self.cols[order], self.labels[order]
        key = self.rows * self.n + self.cols
        if np.any(key[1:] == key[:-1]):
            raise ValueError("duplicate (row, col) entry")
        for arr in (self.rows, self.cols, self.labels):
            arr.setflags(write=False)

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    @property
    def rate(self) -> float:
        return 1.0 - self.m / self.n

    @property
    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.labels.tolist()))

    def row_degrees(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.m)

    def col_degrees(self) -> np.ndarray:
        return np.bincount(self.cols, minlength=self.n)

    def row_ptr(self) -> np.ndarray:
        ptr = np.zeros(self.m + 1, dtype=np.int64)
        np.cumsum(self.row_degrees(), out=ptr[1:])
        return ptr

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.int64)
        H[self.rows, self.cols] = self.labels
        return H

    def with_labels(self, labels, seeds=None) -> "SparseParityCheck":
        return SparseParityCheck(self.m, self.n, self.rows, self.cols, labels, self.field,
                                 self.profile, dict(self.seeds, **(seeds or {})))

    def syndrome(self, z) -> np.ndarray:
        return syndrome(self, z)

    def __eq__(self, other):
        if not isinstance(other, SparseParityCheck):
            return NotImplemented
        return (self.m == other.m and self.n == other.n and self.field == other.field
                and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols)
                and np.array_equal(self.labels, other.labels)
                and profile_string(self.profile) == profile_string(other.profile)
                and self.seeds == other.seeds)

    def __repr__(self):
        return (f"SparseParityCheck(m={self.m}, n={self.n}, q={self.q}, edges={self.n_edges}, "
                f"profile={profile_string(self.profile)!r})")


def peg_construct(n: int, m: int, profile=None, seed: int = 0, max_depth: int | None = None,
                  field: GaloisField | None = None) -> SparseParityCheck:
    """Binary Tanner graph by progressive edge growth.

    Variables are processed in order of ascending degree (column order). Each
    new edge goes to a check at maximum distance from the variable in the
    current graph (unreachable checks count as farthest), ties broken by
    lowest current check degree and then uniformly at random. Check degrees
    are held to ``floor(E/m)`` or ``floor(E/m) + 1``.

    Parameters
    ----------
    profile : RegularProfile or DegreeDistribution
        Defaults to ``RegularProfile(2)``.
    max_depth : int, optional
        Stop the tree expansion after this many levels.
    field : GaloisField, optional
        Field the skeleton is attached to (labels are all 1). Defaults to GF(2).

    Raises
    ------
    CodeConstructionError
        If the degree sequence cannot be realized without parallel edges.
    """
    profile = RegularProfile() if profile is None else profile
    n, m = int(n), int(m)
    if not 0 < m < n:
        raise CodeConstructionError(f"need 0 < m < n, got m={m}, n={n}")
    var_deg = variable_degrees(profile, n)
    if var_deg.max() > m:
        raise CodeConstructionError(f"variable degree {var_deg.max()} exceeds check count {m}")
    if var_deg.sum() > n * m:
        raise CodeConstructionError("more edges requested than matrix positions")
    var_adj, vdeg, ok = _peg_kernel(n, m, var_deg.astype(np.int64),
                                    -1 if max_depth is None else int(max_depth),
                                    int(seed) % (2**32))
    if not ok:
        raise CodeConstructionError("no admissible check node left; profile not realizable")
    cols = np.repeat(np.arange(n), vdeg)
    rows = np.concatenate([var_adj[j, : vdeg[j]] for j in range(n)])
    field = field or get_field(1)
    return SparseParityCheck(m, n, rows, cols, np.ones_like(rows), field, profile, {"peg": int(seed)})


def assign_labels(skeleton: SparseParityCheck, field: GaloisField, seed: int = 0) -> SparseParityCheck:
    """Replace every entry with a uniform draw from ``{1, ..., 2^q - 1}``."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, field.order, size=skeleton.n_edges)
    return SparseParityCheck(skeleton.m, skeleton.n, skeleton.rows, skeleton.cols, labels, field,
                             skeleton.profile, dict(skeleton.seeds, labels=int(seed)))


def checks_for_rate(n: int, rate: float) -> int:
    if not 0 < rate < 1:
        raise ValueError(f"code rate must be in (0, 1), got {rate}")
    return int(round(n * (1.0 - rate)))


def make_code(q: int, n: int, rate: float | None = None, profile="regular", seed: int = 0,
              dv: int = 2, max_depth: int | None = None) -> SparseParityCheck:
    """Build a labelled code.

    ``profile`` is ``"regular"`` (with variable degree ``dv``), a name from
    :data:`PROFILES` (whose rate is used when ``rate`` is None), or a
    :class:`DegreeDistribution`.
    """
    if isinstance(profile, str):
        if profile == "regular":
            profile = RegularProfile(dv)
        elif profile in PROFILES:
            pq, prate, dist = PROFILES[profile]
            if pq != q:
                raise ValueError(f"profile {profile!r} is designed for q={pq}, not q={q}")
            rate = prate if rate is None else rate
            profile = dist
        else:
            profile = parse_profile(profile)
    if rate is None:
        raise ValueError("code rate required")
    field = get_field(q)
    skeleton = peg_construct(n, checks_for_rate(n, rate), profile, seed, max_depth)
    return assign_labels(skeleton, field, seed + 1)


@lru_cache(maxsize=16)
def cached_code(q, n, rate, profile="regular", seed=0, dv=2):
    return make_code(q, n, rate, profile, seed, dv)


def syndrome(H: SparseParityCheck, z) -> np.ndarray:
    """``z H^T`` over the field; one symbol per check."""
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (H.n,):
        raise ValueError(f"frame must have shape ({H.n},), got {z.shape}")
    if z.size and (z.min() < 0 or z.max() >= H.field.order):
        raise ValueError("frame symbols out of field range")
    prods = H.field.mul_table[H.labels, z[H.cols]]
    out = np.zeros(H.m, dtype=np.int64)
    np.bitwise_xor.at(out, H.rows, prods)
    return out


def dumps(H: SparseParityCheck) -> str:
    seeds = " ".join(f"{k}={v}" for k, v in H.seeds.items()) or "none"
    lines = [
        FORMAT_MAGIC,
        f"q {H.q}",
        f"poly {H.field.primitive_poly:#x}",
        f"n {H.n}",
        f"m {H.m}",
        f"profile {profile_string(H.profile)}",
        f"seed {seeds}",
        "end",
    ]
    ptr = H.row_ptr()
    for i in range(H.m):
        sl = slice(ptr[i], ptr[i + 1])
        lines.append(" ".join(f"{c}:{l}" for c, l in zip(H.cols[sl].tolist(), H.labels[sl].tolist())))
    return "\n".join(lines) + "\n"


def loads(text: str) -> SparseParityCheck:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_MAGIC:
        raise CodeFormatError(f"expected header {FORMAT_MAGIC!r}", 1)
    header = {}
    body_start = None
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if line == "end":
            body_start = lineno
            break
        key, _, value = line.partition(" ")
        if key not in {"q", "poly", "n", "m", "profile", "seed"}:
            raise CodeFormatError(f"unknown header field {key!r}", lineno)
        header[key] = (value.strip(), lineno)
    if body_start is None:
        raise CodeFormatError("missing 'end' of header", len(lines))
    for key in ("q", "poly", "n", "m", "profile", "seed"):
        if key not in header:
            raise CodeFormatError(f"missing header field {key!r}", body_start)

    def _int(key, base=10):
        value, lineno = header[key]
        try:
            return int(value, base)
        except ValueError:
            raise CodeFormatError(f"bad value for {key}: {value!r}", lineno) from None

    q, poly, n, m = _int("q"), _int("poly", 16), _int("n"), _int("m")
    try:
        field = get_field(q, poly)
    except ValueError as exc:
        raise CodeFormatError(str(exc), header["poly"][1]) from None
    try:
        profile = parse_profile(header["profile"][0])
    except ValueError as exc:
        raise CodeFormatError(str(exc), header["profile"][1]) from None
    seeds = {}
    seed_text, seed_line = header["seed"]
    if seed_text != "none":
        for item in seed_text.split():
            k, _, v = item.partition("=")
            try:
                seeds[k] = int(v)
            except ValueError:
                raise CodeFormatError(f"bad seed entry {item!r}", seed_line) from None

    body = lines[body_start:]
    if len(body) != m:
        raise CodeFormatError(f"expected {m} row lines, found {len(body)}", body_start + 1)
    rows, cols, labels = [], [], []
    for i, line in enumerate(body):
        lineno = body_start + 1 + i
        seen = set()
        for pos, item in enumerate(line.split(), start=1):
            c, sep, l = item.partition(":")
            try:
                c, l = int(c), int(l)
            except ValueError:
                raise CodeFormatError(f"entry {pos}: malformed {item!r}", lineno) from None
            if not sep:
                raise CodeFormatError(f"entry {pos}: missing ':' in {item!r}", lineno)
            if not 0 <= c < n:
                raise CodeFormatError(f"entry {pos}: column {c} out of range", lineno)
            if not 1 <= l < field.order:
                raise CodeFormatError(f"entry {pos}: label {l} not a nonzero element of GF({field.order})", lineno)
            if c in seen:
                raise CodeFormatError(f"entry {pos}: duplicate column {c}", lineno)
            seen.add(c)
            rows.append(i)
            cols.append(c)
            labels.append(l)
    return SparseParityCheck(m, n, rows, cols, labels, field, profile, seeds)


def save(H: SparseParityCheck, path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps(H))
    except OSError as exc:
        raise OSError(f"cannot write code file {path}: {exc}") from exc


def load(path) -> SparseParityCheck:
    path = Path(path)
    return loads(path.read_text())
