import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speciesmix.model import (
    AdmissibilityError,
    PartitionState,
    ep_eppf,
    ep_succession,
    eppf,
    fisher_params,
    gibbs_triple_for,
    identity_residual,
    perturbed_triple,
    recursion_residual,
    restricted_eppf,
    restricted_params,
    succession,
    triple_v,
    v_nk,
    v_nk_factored,
    validate_ewens_pitman,
    validate_gnedin,
)
from speciesmix.verify import exact_eppf

GRID = [(0.5, 0.0), (0.9, 0.0), (1.0, 1.0), (6.0, 9.0), (2.0, 3.0), (0.0, 0.0), (3.0, 2.0), (0.2, 5.0)]

admissible = st.sampled_from(GRID)
compositions = st.lists(st.integers(1, 5), min_size=1, max_size=5)


# --------------------------------------------------------------------------
# parameters


def test_validate_examples():
    assert validate_gnedin(0.5, 0).case == "infinite"
    p = validate_gnedin(6, 9)
    assert p.case == "root_at(3)" and p.k0 == 3
    with pytest.raises(AdmissibilityError):
        validate_gnedin(-1, 0)


def test_validate_root_cases():
    # k^2 - 3k + 2 = (k-1)(k-2): root at k = 1
    assert validate_gnedin(3, 2).k0 == 1
    # k^2 - 5k + 5 is negative at k = 2 with no integer root
    with pytest.raises(AdmissibilityError):
        validate_gnedin(5, 5)
    # near-root outside tolerance is rejected, not rounded
    with pytest.raises(AdmissibilityError):
        validate_gnedin(6, 9 - 1e-6)
    with pytest.raises(AdmissibilityError):
        validate_gnedin(0.5, -1.6)


def test_restricted_range():
    assert restricted_params(1.0, [1, 1]).min_k == 2
    assert restricted_params(-0.5, [2]).gamma == -0.5
    for bad in (2.0, 0.0):
        with pytest.raises(AdmissibilityError):
            restricted_params(bad, [1, 1])


def test_ewens_pitman_validation():
    assert validate_ewens_pitman(-1, 3).kappa == 3
    assert fisher_params(4).theta == 4
    with pytest.raises(AdmissibilityError):
        validate_ewens_pitman(-1, 2.5)
    with pytest.raises(AdmissibilityError):
        validate_ewens_pitman(0.5, -0.6)
    with pytest.raises(AdmissibilityError):
        validate_ewens_pitman(1.0, 1.0)


# --------------------------------------------------------------------------
# partitions


def test_partition_state_roundtrip():
    s = PartitionState.from_labels(["a", "b", "a", "c", "b", "b"])
    assert s.blocks == ((1, 3), (2, 5, 6), (4,))
    assert s.sizes == (2, 3, 1)
    assert PartitionState.from_json(s.to_json()) == s
    assert PartitionState.from_json(json.dumps([[4], [2, 6, 5], [3, 1]])) == s
    assert PartitionState.from_rgs(s.rgs()) == s
    assert s.restrict(4).blocks == ((1, 3), (2,), (4,))
    assert json.loads(s.to_json()) == {"n": 6, "blocks": [[1, 3], [2, 5, 6], [4]]}


def test_partition_state_rejects_bad_blocks():
    with pytest.raises(ValueError):
        PartitionState(3, ((1, 2), (2, 3)))
    with pytest.raises(ValueError):
        PartitionState(3, ((1,), (3,)))


# --------------------------------------------------------------------------
# succession rule


def test_succession_examples():
    one = PartitionState(1, ((1,),))
    _, nu = succession(one, validate_gnedin(0, 0))
    assert nu == 1
    omega, nu = succession(one, validate_gnedin(6, 9))
    assert nu == pytest.approx(0.25) and omega[0] == pytest.approx(0.75)


@settings(max_examples=100, deadline=None)
@given(admissible, st.lists(st.integers(0, 4), min_size=1, max_size=12))
def test_succession_sums_to_one(params, labels):
    p = validate_gnedin(*params)
    s = PartitionState.from_labels(labels)
    if p.k0 is not None and s.k > p.k0:
        return
    omega, nu = succession(s, p)
    assert math.fsum(omega) + nu == pytest.approx(1.0, abs=1e-14)
    if p.k0 is not None and s.k == p.k0:
        assert nu == 0


def test_ep_succession_examples():
    one = PartitionState(1, ((1,),))
    omega, nu = ep_succession(one, validate_ewens_pitman(0, 1))
    assert omega == [0.5] and nu == 0.5
    full = PartitionState.from_rgs([0, 1, 2])
    assert ep_succession(full, fisher_params(3))[1] == 0
    s = PartitionState(6, ((1, 3), (2, 5, 6), (4,)))
    a, t = 0.3, 2.0
    assert ep_succession(s, validate_ewens_pitman(a, t))[1] == pytest.approx((t + 3 * a) / (6 + t))


# --------------------------------------------------------------------------
# EPPF


def test_eppf_small_cases():
    for g, z in GRID:
        p = validate_gnedin(g, z)
        assert float(eppf([1], p)) == 1.0
        p2 = float(eppf([2], p))
        assert p2 == pytest.approx(2 * g / (1 + g + z), abs=1e-15)
        assert p2 + float(eppf([1, 1], p)) == pytest.approx(1.0, abs=1e-15)


def test_eppf_frozen_value():
    # p(2,3,1) at gamma = 1/2, zeta = 0, from exact rational arithmetic
    expected = Fraction(1, 1155)
    assert exact_eppf([2, 3, 1], Fraction(1, 2), 0) == expected
    assert float(eppf([2, 3, 1], validate_gnedin(0.5, 0))) == pytest.approx(float(expected), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(admissible, compositions)
def test_eppf_matches_exact_rational(params, sizes):
    p = validate_gnedin(*params)
    ex = exact_eppf(sizes, Fraction(params[0]), Fraction(params[1]))
    got = float(eppf(sizes, p))
    if ex == 0:
        assert got == 0
    else:
        assert got == pytest.approx(float(ex), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(admissible, st.lists(st.integers(1, 4), min_size=1, max_size=5))
def test_eppf_symmetric(params, sizes):
    p = validate_gnedin(*params)
    ref = float(eppf(sizes, p))
    for perm in itertools.permutations(sizes):
        assert float(eppf(perm, p)) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(admissible, st.lists(st.integers(1, 3), min_size=1, max_size=4))
def test_eppf_addition_rule(params, sizes):
    p = validate_gnedin(*params)
    parts = [float(eppf(sizes[:j] + [sizes[j] + 1] + sizes[j + 1:], p)) for j in range(len(sizes))]
    parts.append(float(eppf(sizes + [1], p)))
    assert math.fsum(parts) == pytest.approx(float(eppf(sizes, p)), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(admissible, st.lists(st.integers(0, 3), min_size=1, max_size=10))
def test_path_product_equals_eppf(params, labels):
    p = validate_gnedin(*params)
    final = PartitionState.from_labels(labels)
    rgs = final.rgs()
    prob = 1.0
    for t in range(1, len(rgs)):
        state = PartitionState.from_rgs(rgs[:t])
        omega, nu = succession(state, p)
        prob *= nu if rgs[t] == state.k else omega[rgs[t]]
    assert prob == pytest.approx(float(eppf(final.sizes, p)), rel=1e-12, abs=1e-300)


def test_ep_eppf_against_direct_formula():
    a, t = 0.3, 1.5
    p = validate_ewens_pitman(a, t)
    sizes = [2, 3, 1]
    num = math.prod(t + i * a for i in range(1, 3))
    den = math.prod(t + i for i in range(1, 6))
    rest = math.prod(math.prod(j - a for j in range(1, s)) for s in sizes)
    assert float(ep_eppf(sizes, p)) == pytest.approx(num * rest / den, rel=1e-13)


# --------------------------------------------------------------------------
# v_{n,k}


def test_v_examples():
    p = validate_gnedin(6, 9)
    assert float(v_nk(1, 1, p)) == 1
    assert v_nk(10, 4, p).is_zero and v_nk(10, 7, p).is_zero


def test_v_forms_agree():
    for g, z in [(0.5, 0.0), (1.0, 1.0), (2.0, 3.0), (0.2, 5.0), (0.9, 0.0)]:
        p = validate_gnedin(g, z)
        triple = gibbs_triple_for(p)
        for n in (1, 2, 7, 40, 200):
            for k in sorted({1, min(2, n), n // 2 + 1, n}):
                a = v_nk(n, k, p)
                assert v_nk_factored(n, k, p).isclose(a, 1e-10)
                if n <= 40:
                    assert triple_v(n, k, triple).isclose(a, 1e-10)


def test_v_recursion_n50():
    assert recursion_residual(gibbs_triple_for(validate_gnedin(0.5, 0)), 50) < 1e-10


# --------------------------------------------------------------------------
# restricted starts


def test_restricted_eppf_identity_and_symmetry():
    assert float(restricted_eppf([1, 1], [1, 1], 1.0)) == pytest.approx(1.0)
    a = float(restricted_eppf([2, 1, 3, 1], [1, 1], 0.5))
    b = float(restricted_eppf([2, 1, 1, 3], [1, 1], 0.5))
    assert a == pytest.approx(b, rel=1e-14)


def test_restricted_eppf_is_conditional_law():
    # for 0 < gamma < 1 the start {1},{2} is an event of positive probability
    p = validate_gnedin(0.5, 0)
    start = float(eppf([1, 1], p))
    for sizes in ([2, 1], [1, 2], [1, 1, 1], [3, 1, 2]):
        cond = float(eppf(sizes, p)) / start
        assert float(restricted_eppf(sizes, [1, 1], 0.5)) == pytest.approx(cond, rel=1e-12)


def test_restricted_eppf_normalizes():
    # sum over all extensions of {1},{2} to {1..5}
    from speciesmix.verify import iter_rgs

    for g in (1.0, 1.5, 0.2):
        total = 0.0
        for r in iter_rgs(5):
            if r[:2] == (0, 1):
                total += float(restricted_eppf(PartitionState.from_rgs(r).sizes, [1, 1], g))
        assert total == pytest.approx(1.0, abs=1e-13)


# --------------------------------------------------------------------------
# Gibbs triples


def test_triple_identity_both_families():
    for g, z in GRID:
        assert identity_residual(gibbs_triple_for(validate_gnedin(g, z)), 100) < 1e-10
    for a, t in [(0.3, 1.0), (0.0, 1.0), (-1.0, 2.0)]:
        assert identity_residual(gibbs_triple_for(validate_ewens_pitman(a, t)), 100) < 1e-10


def test_triple_v_reproduces_ep_eppf():
    p = validate_ewens_pitman(-1, 2)
    triple = gibbs_triple_for(p)
    assert float(triple_v(1, 1, triple)) == 1
    v = float(triple_v(3, 2, triple))
    weight = 2.0 * 1.0          # (1 - alpha)_{1} (1 - alpha)_{0}
    assert v * weight == pytest.approx(float(ep_eppf([2, 1], p)), rel=1e-14)


def test_triple_recursion_and_negative_control():
    for params in (validate_gnedin(2, 3), validate_ewens_pitman(0.3, 1.0)):
        t = gibbs_triple_for(params)
        assert recursion_residual(t, 50) < 1e-10
        bad = perturbed_triple(t, 0.01)
        assert identity_residual(bad, 50) > 1e-6
        assert recursion_residual(bad, 50) > 1e-6
