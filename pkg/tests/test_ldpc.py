import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from nbrecon.gf import get_field
from nbrecon.ldpc import (PROFILES, CodeConstructionError, CodeFormatError, DegreeDistribution, RegularProfile,
                          assign_labels, dumps, load, loads, make_code, node_degrees_from_lambda,
                          peg_construct, save, syndrome)


def girth(H):
    """Shortest cycle of the Tanner graph by BFS from every node (independent of the PEG code)."""
    n, m = H.n, H.m
    adj = [[] for _ in range(n + m)]
    for r, c in zip(H.rows.tolist(), H.cols.tolist()):
        adj[c].append(n + r)
        adj[n + r].append(c)
    best = np.inf
    for s in range(n + m):
        dist = {s: 0}
        parent = {s: -1}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def kernel_basis(H):
    """Null space of a dense matrix over GF(2^q) by Gauss-Jordan elimination."""
    f = H.field
    M, inv = f.mul_table, f.inv_table
    A = H.to_dense().copy()
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i, c]), None)
        if piv is None:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r] = M[inv[A[r, c]], A[r]]
        for i in range(m):
            if i != r and A[i, c]:
                A[i] ^= M[A[i, c], A[r]]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        x = np.zeros(n, dtype=np.int64)
        x[fc] = 1
        for i, pc in enumerate(pivots):
            x[pc] = A[i, fc]  # characteristic 2: -a = a
        basis.append(x)
    return basis


def test_peg_forced_small_case():
    H = peg_construct(4, 2, RegularProfile(2), seed=0)
    assert np.array_equal(H.to_dense(), np.ones((2, 4), dtype=np.int64))
    assert list(H.row_degrees()) == [4, 4]


def test_six_by_three_degree_two_cannot_avoid_four_cycles():
    # each column picks 2 of 3 checks; only 3 distinct pairs exist for 6 columns
    pairs = list(itertools.combinations(range(3), 2))
    assert all(len(set(cols)) < 6 for cols in itertools.product(pairs, repeat=6))


@pytest.mark.parametrize("seed", range(5))
def test_peg_small_graph_spreads_pairs(seed):
    H = peg_construct(6, 3, RegularProfile(2), seed=seed)
    assert girth(H) == 4
    pairs = [tuple(H.rows[H.cols == j]) for j in range(6)]
    assert sorted(pairs.count(p) for p in set(pairs)) == [2, 2, 2]
    assert list(H.row_degrees()) == [4, 4, 4]


@pytest.mark.parametrize("seed", range(5))
def test_peg_girth_six_when_pairs_suffice(seed):
    H = peg_construct(10, 5, RegularProfile(2), seed=seed)
    assert girth(H) >= 6


@pytest.mark.parametrize("n, m", [(15, 6), (50, 15), (120, 40), (200, 60)])
def test_peg_girth_oracle(n, m):
    H = peg_construct(n, m, RegularProfile(2), seed=n)
    assert girth(H) >= 6
    assert np.all(H.col_degrees() == 2)
    assert np.ptp(H.row_degrees()) <= 1


def test_no_four_cycles_n1000():
    H = peg_construct(1000, 300, RegularProfile(2), seed=0)
    B = np.zeros((300, 1000), dtype=np.int64)
    B[H.rows, H.cols] = 1
    overlap = B.T @ B
    np.fill_diagonal(overlap, 0)
    assert overlap.max() <= 1


def test_peg_deterministic_and_seed_dependent():
    a = peg_construct(300, 90, seed=4)
    b = peg_construct(300, 90, seed=4)
    c = peg_construct(300, 90, seed=5)
    assert a == b
    assert not np.array_equal(a.rows, c.rows)


def test_peg_max_depth_still_valid():
    H = peg_construct(200, 60, seed=1, max_depth=1)
    assert np.all(H.col_degrees() == 2) and np.ptp(H.row_degrees()) <= 1


def test_peg_irregular_concentrated_checks():
    dist = PROFILES["gf32-r09"][2]
    H = peg_construct(2000, 200, dist, seed=0)
    assert np.array_equal(np.sort(H.col_degrees()), node_degrees_from_lambda(dist, 2000))
    assert np.ptp(H.row_degrees()) <= 1
    key = H.rows * H.n + H.cols
    assert np.unique(key).size == key.size


def test_peg_errors():
    with pytest.raises(CodeConstructionError):
        peg_construct(10, 10)
    with pytest.raises(CodeConstructionError):
        peg_construct(10, 3, RegularProfile(4))
    assert issubclass(CodeConstructionError, ValueError)


@pytest.mark.parametrize("n, rate", [(1000, 0.5), (1000, 0.7), (997, 0.85), (5000, 0.9)])
def test_design_rate(n, rate):
    H = make_code(4, n, rate)
    assert abs(H.rate - rate) <= 1 / n


def test_labels():
    skel = peg_construct(5000, 1000, seed=0)
    f = get_field(4)
    H = assign_labels(skel, f, seed=9)
    assert H.labels.min() >= 1 and H.labels.max() <= 15
    assert np.array_equal(H.labels, assign_labels(skel, f, seed=9).labels)
    counts = np.bincount(H.labels, minlength=16)[1:]
    assert H.n_edges == 10_000
    assert stats.chisquare(counts).pvalue > 0.01
    assert np.array_equal(H.rows, skel.rows) and np.array_equal(H.cols, skel.cols)


def test_degree_distribution_validation():
    with pytest.raises(ValueError):
        DegreeDistribution({2: 0.5, 3: 0.4})
    with pytest.raises(ValueError):
        DegreeDistribution({1: 1.0})
    with pytest.raises(ValueError):
        DegreeDistribution({2: 1.2, 3: -0.2})


def test_node_degrees_single_degree():
    assert np.all(node_degrees_from_lambda(DegreeDistribution({2: 1.0}), 37) == 2)


def test_node_degrees_table_profile():
    dist = PROFILES["gf32-r09"][2]
    lam = dist.coefficients
    weights = {i: c / i for i, c in lam.items()}
    frac2 = weights[2] / sum(weights.values())
    degs = node_degrees_from_lambda(dist, 10_000)
    assert degs.size == 10_000
    assert np.all(np.diff(degs) >= 0)
    assert abs(np.mean(degs == 2) - frac2) <= 1 / 10_000
    # edge budget is preserved up to rounding of one edge per degree class
    assert abs(degs.sum() - 10_000 * dist.mean_degree()) <= max(lam)


@given(st.dictionaries(st.integers(2, 20), st.floats(0.01, 1), min_size=1, max_size=6), st.integers(1, 5000))
def test_node_degrees_conservation(raw, n):
    total = sum(raw.values())
    dist = DegreeDistribution({k: v / total for k, v in raw.items()} if len(raw) > 1 else {next(iter(raw)): 1.0})
    degs = node_degrees_from_lambda(dist, n)
    assert degs.size == n
    counts = {i: int(np.sum(degs == i)) for i in dist.coefficients}
    fr = dist.node_fractions()
    assert all(abs(counts[i] - n * fr[i]) < 1 for i in fr)


def test_syndrome_examples(rng):
    H = make_code(5, 200, 0.7, seed=3)
    assert np.all(syndrome(H, np.zeros(200, dtype=int)) == 0)
    z = np.zeros(200, dtype=np.int64)
    z[17] = 9
    expected = np.zeros(H.m, dtype=np.int64)
    sel = H.cols == 17
    expected[H.rows[sel]] = H.field.mul_table[H.labels[sel], 9]
    assert np.array_equal(syndrome(H, z), expected)
    with pytest.raises(ValueError):
        syndrome(H, np.zeros(199, dtype=int))
    with pytest.raises(ValueError):
        syndrome(H, np.full(200, 32))


def test_syndrome_linear_and_dense_oracle(rng):
    H = make_code(4, 150, 0.6, seed=2)
    M = H.field.mul_table
    dense = H.to_dense()
    for _ in range(20):
        z1, z2 = rng.integers(0, 16, size=(2, 150))
        s = syndrome(H, z1 ^ z2)
        assert np.array_equal(s, syndrome(H, z1) ^ syndrome(H, z2))
        ref = np.zeros(H.m, dtype=np.int64)
        for j in range(150):
            ref ^= M[dense[:, j], z1[j]]
        assert np.array_equal(syndrome(H, z1), ref)


@pytest.mark.parametrize("q, n, rate", [(3, 30, 0.6), (4, 40, 0.7), (5, 24, 0.5)])
def test_kernel_codewords_have_zero_syndrome(q, n, rate, rng):
    H = make_code(q, n, rate, seed=q)
    basis = kernel_basis(H)
    assert len(basis) >= n - H.m
    M = H.field.mul_table
    for _ in range(30):
        x = np.zeros(n, dtype=np.int64)
        for b in basis:
            x ^= M[rng.integers(0, H.field.order), b]
        assert np.all(syndrome(H, x) == 0)


@pytest.mark.parametrize("profile", ["regular", "gf32-r09"])
def test_serialization_round_trip(profile, tmp_path):
    H = make_code(5, 1200, 0.9, profile=profile, seed=4)
    assert loads(dumps(H)) == H
    save(H, tmp_path / "c.txt")
    assert load(tmp_path / "c.txt") == H
    head = dumps(H).splitlines()[:8]
    assert head[1:7] == ["q 5", "poly 0x25", "n 1200", f"m {H.m}",
                         f"profile {'regular:dv=2' if profile == 'regular' else 'irregular:gf32-r09'}",
                         "seed peg=4 labels=5"]


def test_serialization_custom_distribution():
    dist = DegreeDistribution({2: 0.75, 3: 0.25})
    H = assign_labels(peg_construct(90, 30, dist, seed=1), get_field(3), seed=2)
    H2 = loads(dumps(H))
    assert H2 == H and H2.profile == dist


def _text():
    H = make_code(3, 12, 0.5, seed=0)
    return dumps(H).splitlines()


def _expect_error(lines, lineno, fragment):
    with pytest.raises(CodeFormatError) as info:
        loads("\n".join(lines) + "\n")
    assert info.value.line == lineno
    assert fragment in str(info.value)


def test_parse_rejects_large_label():
    lines = _text()
    col = lines[8].split()[0].split(":")[0]
    lines[8] = lines[8].replace(lines[8].split()[0], f"{col}:8", 1)
    _expect_error(lines, 9, "label 8")


def test_parse_rejects_duplicate_entry():
    lines = _text()
    first = lines[9].split()[0]
    lines[9] = lines[9] + " " + first
    _expect_error(lines, 10, "duplicate")


def test_parse_other_errors():
    lines = _text()
    _expect_error(["garbage"] + lines[1:], 1, "header")
    bad = list(lines)
    bad[1] = "q x"
    _expect_error(bad, 2, "bad value")
    bad = list(lines)
    bad[2] = "poly 0x9"
    _expect_error(bad, 3, "primitive")
    bad = list(lines)
    bad[10] = "3-2"
    _expect_error(bad, 11, "malformed")
    bad = list(lines)
    bad[10] = "99:1"
    _expect_error(bad, 11, "out of range")
    _expect_error(lines[:-1], 9, "row lines")
    _expect_error(lines[:4] + lines[5:], 7, "'m'")
    bad = list(lines)
    bad[5] = "profile wobbly"
    _expect_error(bad, 6, "unknown profile")


def test_make_code_profile_checks():
    with pytest.raises(ValueError):
        make_code(4, 1000, profile="gf32-r09")
    with pytest.raises(ValueError):
        make_code(5, 1000)
    H = make_code(5, 1000, profile="gf32-r09")
    assert H.rate == pytest.approx(0.9)


def test_sparse_matrix_validation():
    f = get_field(3)
    with pytest.raises(ValueError):
        type(make_code(3, 12, 0.5))(2, 4, [0, 0], [1, 1], [1, 2], f)
    with pytest.raises(ValueError):
        type(make_code(3, 12, 0.5))(2, 4, [0], [1], [0], f)
    H = make_code(3, 12, 0.5)
    with pytest.raises(ValueError):
        H.labels[0] = 3
    with pytest.raises(TypeError):
        hash(H)
