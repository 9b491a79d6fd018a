import math

import numpy as np
import pytest
from scipy import stats

from chmp.geometry import InputError, build_query
from chmp.instances import (
    InstanceSpec,
    format_instance,
    gen_case_a,
    gen_case_b,
    gen_case_c,
    generate,
    normalize_case,
    parse_instance,
    read_instance,
    sample_unit_ball,
    unit_square_instance,
    write_instance,
)
from chmp.rng import box_muller, make_rng
from chmp.solvers import SolverConfig, solve

from oracles import hull2d_contains


def test_rng_stream_is_frozen():
    # Philox-4x64 keyed by the seed; pins the uniform stream bit for bit
    assert make_rng(0).random(3).tolist() == [0.014067035665647709, 0.2577672456246177, 0.47156538101528966]


def test_case_a_points_are_frozen():
    ps, _ = generate(InstanceSpec("a", 2, 3, 7))
    np.testing.assert_allclose(ps.A, [
        [-0.5387685568595356, 0.46046346677503236, 0.316117867507224],
        [0.2696481837007143, 0.547685901966697, -0.027978994560990463],
    ], rtol=1e-15)


def test_box_muller_identity():
    z = box_muller(np.array([0.5]), np.array([0.25]))
    r = math.sqrt(-2 * math.log(0.5))
    np.testing.assert_allclose(z, [r * math.cos(math.pi / 2), r * math.sin(math.pi / 2)], atol=1e-15)


def test_unit_ball_norms():
    ps = sample_unit_ball(7, 500, make_rng(1))
    assert np.all(np.linalg.norm(ps.A, axis=0) <= 1.0)


def test_unit_ball_radius_uniform_in_1d():
    ps = sample_unit_ball(1, 10_000, make_rng(2))
    r = np.abs(ps.A[0])
    assert stats.kstest(r, "uniform").statistic < 0.05
    assert 0.4 < np.mean(ps.A[0] > 0) < 0.6


def test_unit_ball_radius_distribution_in_3d():
    # P(||v|| <= t) = t^3
    ps = sample_unit_ball(3, 5000, make_rng(3))
    r = np.linalg.norm(ps.A, axis=0)
    assert stats.kstest(r ** 3, "uniform").statistic < 0.05


def test_unit_ball_reproducible():
    a = sample_unit_ball(5, 50, make_rng(4)).A
    b = sample_unit_ball(5, 50, make_rng(4)).A
    np.testing.assert_array_equal(a, b)


def test_case_a_origin_and_R():
    ps, p = gen_case_a(10, 100, make_rng(0))
    assert np.all(p == 0)
    assert build_query(ps, p).R <= 1.0


def test_case_a_planar_membership():
    inside = 0
    for seed in range(10):
        ps, p = generate(InstanceSpec("a", 2, 1000, seed))
        inside += hull2d_contains(ps.A.T, p)
    assert inside >= 9


def test_hull2d_oracle_sanity():
    sq = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float)
    assert hull2d_contains(sq, np.array([0.5, 0.5]))
    assert hull2d_contains(sq, np.array([1.0, 0.5]))
    assert not hull2d_contains(sq, np.array([1.05, 0.5]))


@pytest.mark.parametrize("seed", range(5))
def test_case_b_construction(seed):
    rng = make_rng(seed)
    ps, p = gen_case_b(20, 300, rng, beta=0.9)
    assert ps.n == 301
    orig = ps.A[:, :300]
    order = np.argsort(-orig.sum(axis=0), kind="stable")
    vl, vq = orig[:, order[0]], orig[:, order[1]]
    np.testing.assert_allclose(p, 0.5 * vl + 0.5 * vq)
    vs = ps.A[:, -1]
    gap = np.linalg.norm(vl - vq)
    assert np.linalg.norm(vs - p) == pytest.approx(0.45 * gap, rel=1e-12)
    assert np.linalg.norm(vs - p) < gap / 2
    # v_s is strictly the closest column
    d = np.linalg.norm(orig - p[:, None], axis=0)
    assert np.linalg.norm(vs - p) < d.min()


@pytest.mark.parametrize("seed", range(5))
def test_case_d_vs_closest(seed):
    ps, p = generate(InstanceSpec("d", 20, 300, seed))
    d = np.linalg.norm(ps.A - p[:, None], axis=0)
    assert int(np.argmin(d)) == ps.n - 1 and d[-1] < np.sort(d)[1]


def test_case_c_dilation():
    ps, p = gen_case_c(20, 300, make_rng(0))
    ps_b, p_b = gen_case_b(20, 300, make_rng(0))
    np.testing.assert_allclose(p, 1.5 * p_b)
    assert ps.n == 300


def test_case_c_outside_unit_ball():
    outside = sum(np.linalg.norm(generate(InstanceSpec("c", 100, 500, s))[1]) > 1 for s in range(10))
    assert outside >= 9


def test_case_c_geometry_bands():
    for seed in range(5):
        ps, p = generate(InstanceSpec("c", 100, 2000, seed))
        q = build_query(ps, p)
        delta = solve("PROJ", ps, q).delta
        assert 1.58 <= q.R <= 1.8
        assert 0.32 <= delta <= 0.41


def test_case_d_distance_band():
    deltas = []
    for seed in range(10):
        ps, p = generate(InstanceSpec("d", 100, 1000, seed))
        deltas.append(solve("PROJ", ps, build_query(ps, p), SolverConfig(maxit=10**5)).delta)
    assert 0.007 <= np.mean(deltas) <= 0.008
    assert 0.006 <= min(deltas) and max(deltas) <= 0.009


def test_unit_square_constants():
    ps, p = unit_square_instance("inside")
    q = build_query(ps, p)
    d0 = np.min(np.linalg.norm(ps.A - p[:, None], axis=0))
    assert abs(d0 - 0.40) <= 0.05 and abs(q.R - 1.12) <= 0.05
    assert q.nearest == 4
    assert hull2d_contains(ps.A.T, p)
    ps, p = unit_square_instance("outside")
    d0 = np.min(np.linalg.norm(ps.A - p[:, None], axis=0))
    assert abs(d0 - 0.45) <= 0.05
    assert not hull2d_contains(ps.A.T, p)
    assert solve("PROJ", ps, build_query(ps, p)).delta == pytest.approx(0.05, abs=1e-9)


def test_spec_validation():
    with pytest.raises(ValueError):
        InstanceSpec("e")
    with pytest.raises(ValueError):
        InstanceSpec("b", beta=1.0)
    with pytest.raises(ValueError):
        InstanceSpec("c", dilation=0.5)
    assert normalize_case("UnitSquare_Inside") == "unit-square-inside"


def test_generate_deterministic_bytes():
    a = format_instance(*generate(InstanceSpec("a", 2, 4, 7)))
    b = format_instance(*generate(InstanceSpec("a", 2, 4, 7)))
    assert a == b


def test_file_round_trip(tmp_path):
    ps, p = generate(InstanceSpec("d", 6, 20, 3))
    path = tmp_path / "inst.txt"
    write_instance(path, ps, p)
    ps2, p2 = read_instance(path)
    np.testing.assert_array_equal(ps.A, ps2.A)
    np.testing.assert_array_equal(p, p2)
    assert path.read_text().splitlines()[0] == "CHMP v1 6 21"


@pytest.mark.parametrize("text", [
    "",
    "CHMP v2 2 1\n1 2\np 0 0\n",
    "CHMP v1 2 2\n1 2\np 0 0\n",
    "CHMP v1 2 1\n1 2 3\np 0 0\n",
    "CHMP v1 2 1\n1 2\nq 0 0\n",
])
def test_parse_errors(text):
    with pytest.raises(InputError):
        parse_instance(text)
