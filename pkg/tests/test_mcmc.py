import math
import statistics
from collections import Counter

import numpy as np
import pytest

from plandscape.errors import BudgetError, ParameterError
from plandscape.landscape import densest_with_overlap
from plandscape.mcmc import (
    ChainTrace,
    ExactGibbs,
    MCMCConfig,
    WellPartition,
    chain_step,
    conditional_init,
    exact_gibbs,
    free_energy_well_ratio,
    gibbs_log_weight,
    hitting_time,
    reflected_step,
    run_chain,
    transition_matrix,
    well_ratio_lower_bound,
)
from plandscape.model import ModelParams, VertexSubset, edge_count, rng_from_seed, sample_planted

DIP_SEED = 30  # sample_planted(12, 4, 30) has exact d-curve [6, 6, 6, 5, 6]
DESK_PART = WellPartition(a0_max=0, a1_min=1, a1_max=1, a2_min=2)


def dip_instance():
    from plandscape.ogp import dip_witness, overlap_curve

    g = sample_planted(12, 4, DIP_SEED)
    assert dip_witness(overlap_curve(g, 4)) is not None  # verified dip
    return g


def overlap_birth_death(n, k, kbar):
    """Exact overlap transition probabilities of the beta=0 chain (the
    overlap is itself Markov under the uniform swap walk)."""
    up, down = {}, {}
    for z in range(0, min(k, kbar) + 1):
        up[z] = (kbar - z) / kbar * (k - z) / (n - kbar)
        down[z] = z / kbar * ((n - kbar) - (k - z)) / (n - kbar)
    return up, down


def exact_median_escape(n, k, kbar, a1_max, t_cap=100000):
    """Median first time the beta=0 overlap walk exceeds a1_max, started
    from the conditioned hypergeometric law."""
    up, down = overlap_birth_death(n, k, kbar)
    states = list(range(a1_max + 1))
    weights = np.array([math.comb(k, z) * math.comb(n - k, kbar - z) for z in states], float)
    dist = weights / weights.sum()
    q = np.zeros((len(states), len(states)))
    for z in states:
        if z > 0:
            q[z, z - 1] = down[z]
        if z + 1 <= a1_max:
            q[z, z + 1] = up[z]
        q[z, z] = 1.0 - down[z] - up[z]
    surv = dist.copy()
    escaped = 0.0
    for t in range(1, t_cap + 1):
        nxt = surv @ q
        escaped += surv.sum() - nxt.sum()
        surv = nxt
        if escaped >= 0.5:
            return t
    raise AssertionError("median escape beyond cap")


# --- weights and single steps ----------------------------------------------


def test_gibbs_log_weight():
    g = sample_planted(12, 4, 3)
    s = VertexSubset(g.planted)
    assert gibbs_log_weight(g, s, 0.0) == 0.0
    assert gibbs_log_weight(g, s, 2.5) == pytest.approx(2.5 * 6)
    rng = rng_from_seed(1)
    for _ in range(20):
        members = tuple(sorted(int(v) for v in rng.permutation(12)[:4]))
        sub = VertexSubset(members)
        assert gibbs_log_weight(g, sub, 1.7) == pytest.approx(1.7 * edge_count(g, sub))
    with pytest.raises(ParameterError):
        gibbs_log_weight(g, s, 1.0, kbar=5)


def test_chain_step_accepts_nonnegative_delta():
    g = sample_planted(10, 3, 2)
    s = VertexSubset.from_iterable(g.planted)
    rng = rng_from_seed(0)
    # leaving the planted clique always loses edges; find a gaining swap
    # from a random subset instead and force it
    start = VertexSubset.from_iterable([v for v in range(10) if v not in g.planted][:3])
    for u in start.members:
        for v in g.planted:
            delta = (edge_count(g, VertexSubset.from_iterable(
                [w for w in start.members if w != u] + [v]))
                - edge_count(g, start))
            if delta >= 0:
                out = chain_step(g, start, 5.0, rng, proposal=(u, v))
                assert v in out.members and u not in out.members
                return
    pytest.skip("no nonnegative swap at this seed")


def test_chain_step_acceptance_frequency():
    # fixed proposal accepted with probability min(1, e^{beta * delta})
    g = sample_planted(10, 4, 7)
    beta = 1.0
    start = VertexSubset.from_iterable(g.planted)
    u = g.planted[0]
    v = [w for w in range(10) if w not in g.planted][0]
    delta = (edge_count(g, VertexSubset.from_iterable(
        [w for w in start.members if w != u] + [v])) - 6)
    assert delta < 0  # leaving a clique loses edges here
    want = math.exp(beta * delta)
    rng = rng_from_seed(42)
    trials = 10**5
    hits = sum(chain_step(g, start, beta, rng, proposal=(u, v)) != start
               for _ in range(trials))
    sigma = math.sqrt(want * (1 - want) / trials)
    assert abs(hits / trials - want) <= 3.5 * sigma


def test_chain_step_beta_zero_always_moves():
    g = sample_planted(10, 3, 5)
    s = VertexSubset.from_iterable(range(3))
    rng = rng_from_seed(9)
    for _ in range(200):
        s2 = chain_step(g, s, 0.0, rng)
        assert s2 != s  # acceptance probability 1 at infinite temperature
        s = s2
        assert s.size == 3


def test_chain_step_errors():
    g = sample_planted(6, 2, 0)
    with pytest.raises(ParameterError):
        chain_step(g, VertexSubset.from_iterable(range(6)), 1.0, rng_from_seed(0))
    with pytest.raises(ParameterError):
        chain_step(g, VertexSubset.from_iterable(range(3)), 1.0, rng_from_seed(0),
                   proposal=(5, 1))  # u not inside


# --- run_chain ----------------------------------------------------------------


def test_run_chain_zero_steps():
    g = sample_planted(12, 4, 1)
    init = VertexSubset.from_iterable(range(4))
    tr = run_chain(g, MCMCConfig(beta=1.0, kbar=4, t_max=0, seed=0), init)
    assert tr.times == [0]
    assert tr.final_state == init
    assert tr.hit_time is None


def test_run_chain_time_average_overlap_beta_zero():
    # at beta = 0 the stationary law is uniform: mean overlap k*kbar/n
    g = sample_planted(10, 3, 4)
    cfg = MCMCConfig(beta=0.0, kbar=4, t_max=10**5, seed=5, stride=1)
    tr = run_chain(g, cfg, VertexSubset.from_iterable(range(4)))
    avg = sum(tr.overlaps) / len(tr.overlaps)
    assert abs(avg - 3 * 4 / 10) <= 0.05


def test_run_chain_large_beta_clique_is_absorbing():
    # pick a seed where every exit swap strictly loses edges; at beta = 20
    # the escape probability within 1e4 steps is ~1e4 * e^-20 ~ 2e-5
    target = None
    for seed in range(40):
        g = sample_planted(12, 6, seed)
        mask = g.planted_mask
        worst = max(
            (g.rows[v] & (mask ^ (1 << u))).bit_count() - (g.rows[u] & mask).bit_count()
            for u in g.planted for v in range(12) if not (mask >> v & 1))
        if worst < 0:
            target = g
            break
    assert target is not None
    cfg = MCMCConfig(beta=20.0, kbar=6, t_max=10**4, seed=3, stride=100)
    tr = run_chain(target, cfg, VertexSubset(target.planted))
    assert all(ov == 6 for ov in tr.overlaps)
    assert tr.final_state.members == target.planted


def test_run_chain_deterministic():
    g = sample_planted(12, 4, 8)
    cfg = MCMCConfig(beta=0.7, kbar=5, t_max=20000, seed=123, stride=37)
    init = VertexSubset.from_iterable(range(5))
    a = run_chain(g, cfg, init)
    b = run_chain(g, cfg, init)
    assert a.times == b.times and a.overlaps == b.overlaps and a.edges == b.edges
    assert a.final_state == b.final_state


def test_run_chain_edge_bookkeeping():
    # recorded edge counts must match recomputation from scratch
    g = sample_planted(12, 4, 2)
    cfg = MCMCConfig(beta=0.5, kbar=4, t_max=5000, seed=6, stride=5000)
    tr = run_chain(g, cfg, VertexSubset.from_iterable(range(4)))
    assert tr.edges[-1] == edge_count(g, tr.final_state)
    assert tr.overlaps[-1] == len(set(tr.final_state.members) & set(g.planted))


# --- exact Gibbs ---------------------------------------------------------------


def test_exact_gibbs_uniform_at_beta_zero():
    g = sample_planted(10, 3, 1)
    eg = exact_gibbs(g, 3, 0.0)
    p = eg.probs()
    assert len(p) == math.comb(10, 3)
    assert np.allclose(p, 1 / math.comb(10, 3), atol=1e-14)
    assert abs(p.sum() - 1.0) <= 1e-10


def test_exact_gibbs_overlap_marginal_hypergeometric():
    g = sample_planted(12, 4, 11)
    marg = exact_gibbs(g, 4, 0.0).overlap_marginal()
    for z in range(5):
        want = math.comb(4, z) * math.comb(8, 4 - z) / math.comb(12, 4)
        assert marg[z] == pytest.approx(want, abs=1e-12)


def test_exact_gibbs_matches_independent_enumerator():
    # independently coded: itertools + pair loop + mpmath normalization
    from itertools import combinations

    import mpmath as mp

    mp.mp.dps = 30
    g = sample_planted(12, 4, 11)
    beta = 0.5
    eg = exact_gibbs(g, 4, beta)
    weights = {}
    for c in combinations(range(12), 4):
        e = sum(g.has_edge(a, b) for i, a in enumerate(c) for b in c[i + 1 :])
        weights[c] = mp.exp(beta * e)
    z = sum(weights.values())
    worst = 0.0
    for c, w in weights.items():
        mask = sum(1 << v for v in c)
        worst = max(worst, abs(eg.prob_of(mask) - float(w / z)))
    assert worst <= 1e-10


def test_exact_gibbs_budget():
    g = sample_planted(30, 5, 0)
    with pytest.raises(BudgetError):
        exact_gibbs(g, 15, 1.0, budget=1000)


# --- wells ----------------------------------------------------------------------


def test_well_partition_from_params():
    part = WellPartition.from_params(12, 4, 4, 0.25, 0.5)
    assert part == DESK_PART
    assert part.valid
    with pytest.raises(ParameterError):
        WellPartition.from_params(12, 4, 4, 0.5, 0.25)


def test_well_ratio_beta_zero_counts():
    # uniform measure: the ratio is pure hypergeometric band counting
    g = sample_planted(12, 4, DIP_SEED)
    counts = [math.comb(4, z) * math.comb(8, 4 - z) for z in range(5)]
    want = math.log(min(counts[0], sum(counts[2:])) / counts[1])
    got = free_energy_well_ratio(g, 4, 0.0, DESK_PART)
    assert got == pytest.approx(want, abs=1e-10)


def test_well_ratio_monotone_in_beta_on_dip_instance():
    g = dip_instance()
    ratios = [free_energy_well_ratio(g, 4, b, DESK_PART) for b in (0.0, 1.0, 2.0, 4.0)]
    assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(ratios, ratios[1:]))


def test_well_ratio_empty_band_is_inf():
    g = sample_planted(12, 4, 0)
    part = WellPartition(a0_max=0, a1_min=5, a1_max=5, a2_min=2)  # A1 infeasible
    assert free_energy_well_ratio(g, 4, 1.0, part) == math.inf


def test_well_ratio_lower_bound_is_a_bound():
    g = dip_instance()
    d = {z: densest_with_overlap(g, 4, z).value for z in range(5)}
    p = ModelParams(12, 4, 4)
    for beta in (0.5, 1.0, 3.0):
        bound = well_ratio_lower_bound(p, beta, DESK_PART, d)
        exact = free_energy_well_ratio(g, 4, beta, DESK_PART)
        assert bound <= exact + 1e-9


# --- conditional init ------------------------------------------------------------


def test_conditional_init_stays_in_band():
    g = sample_planted(12, 4, DIP_SEED)
    for seed in range(30):
        s = conditional_init(g, 4, 0.5, DESK_PART, seed)
        assert len(set(s.members) & set(g.planted)) <= DESK_PART.a1_max


def test_conditional_init_exact_law():
    g = sample_planted(12, 4, DIP_SEED)
    eg = exact_gibbs(g, 4, 0.5)
    sel = np.nonzero(eg.overlaps <= 1)[0]
    lw = eg.log_weights[sel]
    cond = np.exp(lw - lw.max())
    cond /= cond.sum()
    rng = rng_from_seed(99)
    draws = Counter(eg.sample(rng, size=3 * 10**5, max_overlap=1))
    emp = np.array([draws.get(eg.masks[i], 0) for i in sel], float)
    emp /= emp.sum()
    assert 0.5 * np.abs(emp - cond).sum() <= 0.02


def test_conditional_init_burn_in_mode():
    g = sample_planted(12, 4, DIP_SEED)
    s, info = conditional_init(g, 4, 0.5, DESK_PART, seed=5, budget=10,
                               return_info=True)
    assert info["mode"] == "burnin" and info["burn_in"] > 0
    assert len(set(s.members) & set(g.planted)) <= DESK_PART.a1_max


# --- reflected chain ---------------------------------------------------------------


def test_reflected_step_rejects_band_exit():
    g = sample_planted(12, 4, DIP_SEED)
    # state at the band roof: any overlap-raising proposal is a self-loop
    non_planted = [v for v in range(12) if v not in g.planted]
    s = VertexSubset.from_iterable([g.planted[0]] + non_planted[:3])
    rng = rng_from_seed(1)
    u = non_planted[0]
    v = g.planted[1]
    out = reflected_step(g, s, 0.0, DESK_PART, rng, proposal=(u, v))
    assert out == s


def test_reflected_step_requires_band_state():
    g = sample_planted(12, 4, DIP_SEED)
    with pytest.raises(ParameterError):
        reflected_step(g, VertexSubset(g.planted), 1.0, DESK_PART, rng_from_seed(0))


def test_reflected_full_band_identical_to_plain_step():
    g = sample_planted(12, 4, 3)
    free = WellPartition(a0_max=3, a1_min=4, a1_max=4, a2_min=10)  # roof = k
    s1 = s2 = VertexSubset.from_iterable(range(4))
    r1, r2 = rng_from_seed(17), rng_from_seed(17)
    for _ in range(500):
        s1 = chain_step(g, s1, 0.8, r1)
        s2 = reflected_step(g, s2, 0.8, free, r2)
        assert s1 == s2


def test_reflected_chain_never_exceeds_roof():
    g = sample_planted(12, 4, DIP_SEED)
    cfg = MCMCConfig(beta=1.0, kbar=4, t_max=20000, seed=2, stride=1)
    init = VertexSubset.from_iterable([v for v in range(12) if v not in g.planted][:4])
    tr = run_chain(g, cfg, init, max_overlap=DESK_PART.a1_max)
    assert max(tr.overlaps) <= DESK_PART.a1_max


def test_reflected_longrun_matches_conditional_law():
    g = sample_planted(12, 4, DIP_SEED)
    cfg = MCMCConfig(beta=0.0, kbar=4, t_max=3 * 10**5, seed=4, stride=1)
    init = VertexSubset.from_iterable([v for v in range(12) if v not in g.planted][:4])
    tr = run_chain(g, cfg, init, max_overlap=1, count_visits=True)
    eg = exact_gibbs(g, 4, 0.0)
    sel = np.nonzero(eg.overlaps <= 1)[0]
    lw = eg.log_weights[sel]
    cond = np.exp(lw - lw.max())
    cond /= cond.sum()
    emp = np.array([tr.visits.get(eg.masks[i], 0) for i in sel], float)
    emp /= emp.sum()
    assert 0.5 * np.abs(emp - cond).sum() <= 0.05


def test_reflected_transition_matrix_reversible_for_conditional():
    g = sample_planted(10, 3, 5)
    part = WellPartition(a0_max=0, a1_min=1, a1_max=1, a2_min=1)
    t, states = transition_matrix(g, 3, 1.0, part=part)
    eg = exact_gibbs(g, 3, 1.0)
    pi = np.array([eg.prob_of(m) for m in states])
    pi /= pi.sum()
    worst = np.abs(pi[:, None] * t - (pi[:, None] * t).T).max()
    assert worst <= 1e-12
    assert np.allclose(t.sum(axis=1), 1.0, atol=1e-12)


# --- hitting times ------------------------------------------------------------------


def test_hitting_time_beta_zero_matches_birth_death_projection():
    g = sample_planted(12, 4, DIP_SEED)
    exact_med = exact_median_escape(12, 4, 4, a1_max=1)
    hits = []
    for seed in range(100):
        cfg = MCMCConfig(beta=0.0, kbar=4, t_max=10**5, seed=seed, d1=0.25,
                         d2=0.5, stride=10**5)
        tr = hitting_time(g, cfg)
        assert tr.hit_time is not None
        hits.append(tr.hit_time)
    med = statistics.median(hits)
    assert exact_med / 2 <= med <= exact_med * 2


def test_hitting_time_median_monotone_in_beta():
    g = dip_instance()
    medians = []
    for beta in (0.0, 1.0, 2.0, 4.0):
        hits = []
        for seed in range(60):
            cfg = MCMCConfig(beta=beta, kbar=4, t_max=2 * 10**5, seed=7 * seed + 1,
                             d1=0.25, d2=0.5, stride=2 * 10**5)
            tr = hitting_time(g, cfg)
            hits.append(tr.hit_time if tr.hit_time is not None else cfg.t_max + 1)
        medians.append(statistics.median(hits))
    assert all(m2 >= m1 for m1, m2 in zip(medians, medians[1:]))


def test_hitting_time_records_censoring():
    g = sample_planted(12, 4, DIP_SEED)
    cfg = MCMCConfig(beta=30.0, kbar=4, t_max=50, seed=0, d1=0.25, d2=0.5)
    tr = hitting_time(g, cfg)
    if tr.hit_time is None:
        assert tr.t_max == 50  # censored outcome is legitimate and recorded
    else:
        assert tr.hit_time <= 50


def test_beta_scale_threshold_advisory():
    from plandscape.mcmc import beta_scale_threshold

    want = math.log(12 / 4) ** 1.5
    assert beta_scale_threshold(12, 4) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ParameterError):
        beta_scale_threshold(10, 10)
