import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oswap import tasep
from oswap.tasep import BinaryConfig, SecondClassPair, cutoff, hole_pos, jump, particle_pos, project, pushback, queue_length, second_class_pos


# -- configuration strategies ----------------------------------------------


@st.composite
def finite_configs(draw, min_particles=0):
    width = draw(st.integers(min_particles, 20))
    start = draw(st.integers(-12, 12))
    sites = draw(st.sets(st.integers(start, start + 25), min_size=min_particles, max_size=width + min_particles))
    return BinaryConfig.from_particles(sites)


@st.composite
def any_configs(draw):
    if draw(st.booleans()):
        return draw(finite_configs())
    solid_to = draw(st.integers(-12, 12))
    bits = draw(st.lists(st.integers(0, 1), max_size=18))
    return BinaryConfig(solid_to, solid_to + 1, np.array(bits, dtype=np.int8))


def brute_queue_length(rho, x, depth=80):
    rm = rho.rightmost()
    hi = x if rm is None else max(rm, x)
    return sum(1 for site in range(x + 1, hi + 1) if rho.occupied(site))


# -- representation ----------------------------------------------------------


def test_normalization_absorbs_and_trims():
    c = BinaryConfig(3, 4, np.array([1, 1, 0, 1, 0, 0], dtype=np.int8))
    assert c.solid_to == 5
    assert c.win_start == 6
    assert c.window.tolist() == [0, 1]
    assert c.rightmost() == 7
    f = BinaryConfig(None, 0, np.array([0, 0, 1, 0, 1, 0], dtype=np.int8))
    assert f.win_start == 2
    assert f.window.tolist() == [1, 0, 1]
    assert f.particles() == [2, 4]


def test_step_and_empty():
    s = BinaryConfig.step(5)
    assert s.is_solid and s.rightmost() == 5 and s.occupied(5) and not s.occupied(6)
    e = BinaryConfig.empty()
    assert e.is_empty and e.particle_count() == 0
    assert e.queue_length(-100) == 0


@settings(max_examples=80, deadline=None)
@given(any_configs(), st.integers(-20, 25))
def test_queue_length_matches_brute(rho, x):
    if rho.is_solid and x < rho.solid_to - 60:
        x = rho.solid_to - 60
    assert rho.queue_length(x) == brute_queue_length(rho, x)


@settings(max_examples=60, deadline=None)
@given(any_configs())
def test_particle_pos_inverts_queue_length(rho):
    count = rho.particle_count()
    top = count if count is not None else rho.queue_length(-40)
    for j in range(1, min(top, 12) + 1):
        p = rho.particle_pos(j)
        assert rho.occupied(p)
        assert rho.queue_length(p) == j - 1


def test_positions_examples():
    rho = BinaryConfig.from_particles([2, 5, 7])
    assert queue_length(rho, 4) == 2
    assert particle_pos(rho, 2) == 5
    rho2 = BinaryConfig.from_particles([2, 5])
    assert hole_pos(rho2, 6, 0) == 7
    assert hole_pos(rho2, 6, 1) == 6
    assert hole_pos(rho2, 6, 2) == 4
    assert hole_pos(rho2, 6, 3) == 3
    assert hole_pos(rho2, 6, 4) == 1
    with pytest.raises(ValueError):
        rho2.particle_pos(3)
    with pytest.raises(ValueError):
        rho2.particle_pos(0)
    with pytest.raises(ValueError):
        BinaryConfig.step(4).hole_pos(4, 1)


@settings(max_examples=60, deadline=None)
@given(any_configs(), st.integers(-5, 15), st.integers(0, 10))
def test_hole_pos_brute(rho, n, j):
    holes = [x for x in range(n, n - 60, -1) if not rho.occupied(x)]
    if j == 0:
        assert rho.hole_pos(n, j) == n + 1
    elif rho.is_solid and j > len(holes):
        with pytest.raises(ValueError):
            rho.hole_pos(n, j)
    elif j <= len(holes):
        assert rho.hole_pos(n, j) == holes[j - 1]


# -- operators ------------------------------------------------------------


def test_project_examples():
    assert project([1, 2, 3], 5) == BinaryConfig.from_particles([1, 2, 3])
    assert project([2, 3, 1], 1) == BinaryConfig.from_particles([3])
    full = project([4, 2, 3], 2, start=2, identity_outside=True)
    # sites <= 1 keep identity labels (<= 2 marks sites 1 and below), site 3
    # holds label 2, others above threshold
    assert full.occupied(1) and full.occupied(3)
    assert not full.occupied(2) and not full.occupied(4)
    assert full.solid_to == 1
    assert full.queue_length(-10) == 12  # ray sites -9..1 plus the particle at 3


def test_project_identity_outside_structure():
    cfg = project([7, 6, 5], 5, start=5, identity_outside=True)
    # identity off the interval: solid through 4; site 7 holds label 5 <= 5
    assert cfg.is_solid and cfg.solid_to == 4
    assert not cfg.occupied(5) and not cfg.occupied(6) and cfg.occupied(7)
    # threshold beyond the stored interval extends the marked ray
    cfg2 = project([1], 3, start=1, identity_outside=True)
    assert cfg2 == tasep.BinaryConfig.step(3)


def test_cutoff_examples():
    rho = BinaryConfig.from_particles([1, 2, 5])
    assert cutoff(rho, 2) == BinaryConfig.from_particles([2, 5])
    assert cutoff(rho, 7) == rho
    assert cutoff(rho, 0) == BinaryConfig.empty()
    step = BinaryConfig.step(3)
    assert cutoff(step, 2) == BinaryConfig.from_particles([2, 3])


@settings(max_examples=100, deadline=None)
@given(any_configs(), st.integers(0, 15), st.integers(-20, 25))
def test_cutoff_queue_identity(rho, k, x):
    assert cutoff(rho, k).queue_length(x) == min(rho.queue_length(x), k)


def test_pushback_examples():
    rho = BinaryConfig.from_particles([2, 5, 7])
    assert pushback(rho, 4) == BinaryConfig.from_particles([2, 3, 4])
    assert pushback(rho, 9) == rho
    solid = BinaryConfig(2, 3, np.array([0, 1, 0, 1], dtype=np.int8))  # ray + {4, 6}
    assert pushback(solid, 3) == BinaryConfig.step(3)


@settings(max_examples=100, deadline=None)
@given(any_configs(), st.integers(-8, 18), st.integers(-20, 25))
def test_pushback_queue_identity(rho, n, x):
    assert pushback(rho, n).queue_length(x) == min(rho.queue_length(x), max(n - x, 0))


@settings(max_examples=80, deadline=None)
@given(any_configs(), st.integers(0, 12), st.integers(-8, 18))
def test_cutoff_pushback_commute(rho, k, n):
    assert pushback(cutoff(rho, k), n) == cutoff(pushback(rho, n), k)


def test_jump_examples():
    rho = BinaryConfig.from_particles([2, 5])
    assert jump(rho, 2) == BinaryConfig.from_particles([3, 5])
    assert jump(rho, 1) == rho                                  # no particle at 1
    assert jump(BinaryConfig.from_particles([2, 3]), 2) == \
        BinaryConfig.from_particles([2, 3])                     # blocked
    assert jump(BinaryConfig.from_particles([2, 3]), 3) == \
        BinaryConfig.from_particles([2, 4])


def test_jump_solid_edge():
    step = BinaryConfig.step(0)
    stepped = jump(step, 0)
    assert stepped.solid_to == -1
    assert stepped.occupied(1) and not stepped.occupied(0)
    assert jump(step, -5) == step
    assert jump(step, 3) == step


@settings(max_examples=100, deadline=None)
@given(any_configs(), st.integers(0, 10), st.integers(1, 14), st.data())
def test_jump_interchange_laws(rho, k, n, data):
    # interior bonds commute with cutoff-then-pushback
    if n >= 2:
        m = data.draw(st.integers(1, n - 1))
        lhs = pushback(cutoff(jump(rho, m), k), n)
        rhs = jump(pushback(cutoff(rho, k), n), m)
        assert lhs == rhs
    # bonds at or beyond the right edge do nothing after reduction
    m_hi = data.draw(st.integers(n, n + 6))
    assert pushback(cutoff(jump(rho, m_hi), k), n) == pushback(cutoff(rho, k), n)
    # bonds at or below zero do nothing if the k rightmost stay in [1, inf)
    m_lo = data.draw(st.integers(-8, 0))
    if rho.queue_length(0) >= k:
        assert pushback(cutoff(jump(rho, m_lo), k), n) == pushback(cutoff(rho, k), n)


# -- second-class pairs ----------------------------------------------------


@st.composite
def compatible_pairs(draw, min_particles=1):
    base = draw(finite_configs(min_particles=min_particles))
    lo = base.win_start - draw(st.integers(1, 6))
    hi = (base.rightmost() or lo) + draw(st.integers(1, 6))
    holes = [x for x in range(lo, hi + 1) if not base.occupied(x)]
    site = draw(st.sampled_from(holes))
    upper = BinaryConfig.from_particles(base.particles() + [site])
    return SecondClassPair.create(upper, base)


def test_second_class_pos_examples():
    assert second_class_pos(BinaryConfig.from_particles([1, 3]),
                            BinaryConfig.from_particles([3])) == 1
    with pytest.raises(ValueError):
        second_class_pos(BinaryConfig.from_particles([3]),
                         BinaryConfig.from_particles([1, 3]))
    with pytest.raises(ValueError):
        second_class_pos(BinaryConfig.from_particles([1, 3]),
                         BinaryConfig.from_particles([4]))
    assert second_class_pos(BinaryConfig.step(5), BinaryConfig.step(4)) == 5


@settings(max_examples=100, deadline=None)
@given(compatible_pairs(), st.data())
def test_pair_jump_tracks_discrepancy(pair, data):
    lo = pair.rho_prime.win_start - 3
    hi = (pair.rho.rightmost() or 0) + 3
    for _ in range(6):
        m = data.draw(st.integers(lo, hi))
        pair = pair.apply_jump(m)
        assert pair.validate()


@settings(max_examples=100, deadline=None)
@given(compatible_pairs(min_particles=1), st.data())
def test_pair_cutoff_rule(pair, data):
    k = data.draw(st.integers(1, pair.rho.particle_count()))
    after = pair.apply_cutoff(k)
    assert after.discrepancy == second_class_pos(after.rho, after.rho_prime)
    assert after.discrepancy == max(pair.discrepancy, pair.rho.particle_pos(k))


@settings(max_examples=100, deadline=None)
@given(compatible_pairs(), st.integers(-6, 16))
def test_pair_pushback_rule(pair, n):
    after = pair.apply_pushback(n)
    assert after.discrepancy == second_class_pos(after.rho, after.rho_prime)
    assert after.discrepancy == min(
        pair.discrepancy, pair.rho.hole_pos(n, pair.rho.queue_length(n))
    )


@settings(max_examples=100, deadline=None)
@given(compatible_pairs(min_particles=1), st.data())
def test_pair_combined_rule(pair, data):
    n = data.draw(st.integers(1, 16))
    k = data.draw(st.integers(1, min(n, pair.rho.particle_count())))
    both = pair.apply_cutoff(k).apply_pushback(n)
    want = second_class_pos(both.rho, both.rho_prime)
    cut = cutoff(pair.rho, k)
    formula = min(max(pair.discrepancy, pair.rho.particle_pos(k)),
                  cut.hole_pos(n, cut.queue_length(n)))
    assert both.discrepancy == want == formula


def test_pair_pushback_requires_left_holes():
    pair = SecondClassPair.create(BinaryConfig.step(3), BinaryConfig.step(2))
    with pytest.raises(ValueError):
        pair.apply_pushback(5)


# -- simulation ------------------------------------------------------------


def test_finite_tasep_initial_and_jam():
    path = tasep.simulate_tasep(3, 0.0, 1, interval=(1, 6), snapshot_times=(0.0,))
    assert path.snapshot_at(0.0).tolist() == [1, 1, 1, 0, 0, 0]
    # long horizon: all particles stack at the right edge
    path = tasep.simulate_tasep(3, 500.0, 1, interval=(1, 6))
    assert path.final.tolist() == [0, 0, 0, 1, 1, 1]


def test_infinite_window_matches_wide_finite_interval():
    # identical clocks: the certified window must equal a finite-interval run
    # whose boundaries are far outside the causal cone
    k, horizon = 0, 30.0
    snaps = (10.0, 30.0)
    inf_path = tasep.simulate_tasep(k, horizon, 77, 3, snapshot_times=snaps)
    a, b = inf_path.window_lo - 40, inf_path.window_hi + 40
    fin_path = tasep.simulate_tasep(k, horizon, 77, 3, interval=(a, b),
                                    snapshot_times=snaps)
    lo, hi = inf_path.window_lo, inf_path.window_hi
    for t in snaps:
        wi = inf_path.snapshot_at(t)
        wf = fin_path.snapshot_at(t)[lo - a : hi - a + 1]
        assert np.array_equal(wi, wf)


def test_infinite_queue_length_profile():
    path = tasep.simulate_tasep(0, 40.0, 5, snapshot_times=(40.0,))
    s0 = path.queue_length(40.0, 0)
    # hydrodynamic estimate: S(t, 0) ~ t/4 with sqrt(t) fluctuations
    assert abs(s0 - 10.0) < 12.0
    assert path.queue_length(40.0, path.window_hi) == 0
    lo = path.window_lo
    assert path.queue_length(40.0, lo - 5) == path.queue_length(40.0, lo - 1) + 4


def test_eq6_pathwise_small():
    # finite-interval process == pushback(cutoff(infinite process)) at many times
    n, k = 12, 5
    snaps = tuple(np.linspace(0.5, 48.0, 20))
    inf_path = tasep.simulate_tasep(k, 48.0, 31, 2, snapshot_times=snaps)
    fin_path = tasep.simulate_tasep(k, 48.0, 31, 2, interval=(1, n), snapshot_times=snaps)
    for t in snaps:
        reduced = tasep.pushback(tasep.cutoff(inf_path.config_at(t), k), n)
        assert reduced == fin_path.config_at(t)


def test_second_class_trajectory_start_and_determinism():
    ts, xs, retries = tasep.second_class_trajectory(4, 25.0, 3, 1,
                                                    sample_times=(0.0, 10.0, 25.0))
    assert xs[0] == 4
    assert retries == 0
    ts2, xs2, _ = tasep.second_class_trajectory(4, 25.0, 3, 1,
                                                sample_times=(0.0, 10.0, 25.0))
    assert np.array_equal(xs, xs2)
    ts3, xs3, _ = tasep.second_class_trajectory(0, 25.0, 3, 1,
                                                sample_times=(0.0, 10.0, 25.0))
    assert xs3[0] == 0


def test_window_policy_margin():
    pol = tasep.WindowPolicy()
    assert pol.initial_margin(100.0) == 2 * 100 + 100 + 10
    with pytest.raises(ValueError):
        tasep.simulate_tasep(0, -1.0, 0)
