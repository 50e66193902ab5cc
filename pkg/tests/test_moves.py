import random
from types import SimpleNamespace

import pytest

from helpers import connected_ids, fig1_instance, fig1_plan, ids_of, idx_of
from tabudistrict.instance import generate_grid
from tabudistrict.moves import (
    best_switch, count_valid_switches, enumerate_candidates, exhaustive_best_switch,
    switch_valid, update_candidates,
)
from tabudistrict.objective import ObjectiveConfig, Scorer
from tabudistrict.plan import Plan, apply_move, apply_switch
from tabudistrict.search import init_plan

A, B, C = 0, 1, 2


def _table(composite, contact="anchor"):
    inst = fig1_instance()
    plan = fig1_plan(inst)
    pool = enumerate_candidates(inst, plan, composite=composite, contact=contact)
    rows = {}
    for x, y in ((A, B), (A, C), (B, C)):
        rows[(x, y)] = (len(pool.moves(x, y)), len(pool.moves(y, x)),
                        count_valid_switches(pool.moves(x, y), pool.moves(y, x)))
    return inst, pool, rows


def test_fig1_totals_with_and_without_composites():
    _, _, with_cm = _table(True)
    _, _, without = _table(False)
    assert sum(sum(v) for v in with_cm.values()) == 53
    assert sum(sum(v) for v in without.values()) == 23
    assert with_cm == {(A, B): (5, 4, 10), (A, C): (2, 2, 1), (B, C): (5, 6, 18)}
    assert without == {(A, B): (3, 2, 4), (A, C): (1, 1, 1), (B, C): (3, 2, 6)}


def test_fig1_member_contact_reading_counts_54():
    # counting a composite toward every district any member touches adds {11, 9, 17} -> C
    _, _, rows = _table(True, contact="members")
    assert sum(sum(v) for v in rows.values()) == 54


def test_fig1_composite_sets():
    inst, pool, _ = _table(True)
    composites = {(m.source, m.dest, frozenset(ids_of(inst, m.members)))
                  for m in pool.all_moves() if m.is_composite}
    sets = {s for _, _, s in composites}
    for want in ({2, 1}, {10, 14}, {11, 9, 17}, {9, 17}, {21, 15, 23}, {16, 13},
                 {19, 13, 16, 20, 24}, {22, 15, 21, 23}):
        assert frozenset(want) in sets


def test_unit_toward_two_districts_gives_two_moves():
    inst, pool, _ = _table(True)
    u14 = frozenset(idx_of(inst, {14}))
    assert any(m.members == u14 for m in pool.moves(A, B))
    assert any(m.members == u14 for m in pool.moves(A, C))


def _find(pool, inst, src, dst, ids):
    target = frozenset(idx_of(inst, ids))
    return next(m for m in pool.moves(src, dst) if m.members == target)


def test_fig1_switch_examples():
    inst, pool, _ = _table(True)
    assert not switch_valid(_find(pool, inst, A, B, {14}), _find(pool, inst, B, A, {17}))
    assert switch_valid(_find(pool, inst, A, B, {2, 1}), _find(pool, inst, B, A, {9, 17}))


def test_switch_subset_rule_and_direction_check():
    m1 = SimpleNamespace(source=0, dest=1, members=frozenset({1}), dest_contacts=frozenset({5}))
    m2 = SimpleNamespace(source=1, dest=0, members=frozenset({5, 6}), dest_contacts=frozenset({1, 2}))
    assert not switch_valid(m1, m2)
    m2.members = frozenset({6})
    assert switch_valid(m1, m2)
    m3 = SimpleNamespace(source=2, dest=0, members=frozenset({6}), dest_contacts=frozenset({1}))
    with pytest.raises(ValueError):
        switch_valid(m1, m3)


def test_pools_sorted_by_population():
    g = generate_grid(7, 7, "lognormal:4,1", seed=1)
    pool = enumerate_candidates(g, init_plan(g, 4, 1))
    for lst in pool.pairs.values():
        pops = [m.pop for m in lst]
        assert pops == sorted(pops)


def _brute_feasible(g, plan):
    """Every (unit set of size 1, dest) that keeps both districts contiguous."""
    out = set()
    for i in range(g.n):
        src = plan.assignment[i]
        rest = plan.members[src] - {i}
        if not rest or not connected_ids(g, rest):
            continue
        for d in {plan.assignment[j] for j in g.neighbors[i]} - {src}:
            out.add((frozenset({i}), src, d))
    return out


def test_two_by_two_split_matches_brute_force():
    g = generate_grid(2, 2)
    plan = Plan(g, [0, 1, 0, 1])
    pool = enumerate_candidates(g, plan, composite=False)
    got = {(m.members, m.source, m.dest) for m in pool.all_moves()}
    assert got == _brute_feasible(g, plan)
    assert len(got) == 4


def test_singleton_district_has_no_outgoing_moves():
    g = generate_grid(1, 3)
    plan = Plan(g, [0, 1, 1])
    pool = enumerate_candidates(g, plan)
    assert pool.moves(0, 1) == []
    assert len(pool.moves(1, 0)) == 1


def test_emitted_moves_preserve_contiguity_and_match_brute_force():
    for seed in range(15):
        g = generate_grid(6, 7, "uniform:1")
        plan = init_plan(g, 4, seed)
        pool = enumerate_candidates(g, plan, composite=False)
        got = {(m.members, m.source, m.dest) for m in pool.all_moves()}
        assert got == _brute_feasible(g, plan)
        for m in enumerate_candidates(g, plan).all_moves():
            src = plan.members[m.source] - m.members
            assert src and connected_ids(g, src)
            assert connected_ids(g, plan.members[m.dest] | m.members)


def test_composites_form_a_superset():
    for seed in range(15):
        g = generate_grid(7, 7)
        plan = init_plan(g, 4, seed)
        plain = {m.key for m in enumerate_candidates(g, plan, composite=False).all_moves()}
        full = {m.key for m in enumerate_candidates(g, plan).all_moves()}
        assert plain <= full


def test_update_matches_fresh_enumeration():
    rng = random.Random(4)
    steps = 0
    for seed in range(5):
        g = generate_grid(7, 8, "lognormal:3,1", seed=seed)
        plan = init_plan(g, 5, seed)
        pool = enumerate_candidates(g, plan)
        for _ in range(100):
            pairs = [p for p, lst in pool.pairs.items() if lst]
            a, b = rng.choice(pairs)
            valid = [(m1, m2) for m1 in pool.moves(a, b) for m2 in pool.moves(b, a)
                     if switch_valid(m1, m2)]
            if valid and rng.random() < 0.3:
                applied = rng.choice(valid)
                apply_switch(plan, *applied)
            else:
                applied = rng.choice(pool.moves(a, b))
                apply_move(plan, applied)
            update_candidates(pool, g, plan, applied)
            assert pool.equivalent(enumerate_candidates(g, plan))
            steps += 1
    assert steps == 500


def test_update_leaves_unrelated_pairs_untouched():
    g = generate_grid(8, 8)
    for seed in range(30):
        plan = init_plan(g, 5, seed)
        pool = enumerate_candidates(g, plan)
        (a, b), lst = next(((p, l) for p, l in sorted(pool.pairs.items()) if l))
        before = {p: id(l) for p, l in pool.pairs.items() if a not in p and b not in p}
        if not before:
            continue
        apply_move(plan, lst[0])
        touched = pool.refresh(plan, (a, b))
        assert all(a in p or b in p for p in touched)
        for p, ident in before.items():
            assert id(pool.pairs[p]) == ident
        return
    pytest.skip("no plan with an unrelated pair")


def test_best_switch_arithmetic_example():
    scorer = Scorer(ObjectiveConfig(1, 0, 2, 200))
    mk = lambda pop, s, d, mem, contacts: SimpleNamespace(
        pop=pop, source=s, dest=d, members=frozenset(mem), dest_contacts=frozenset(contacts),
        area=0.0, perim=0.0, shared_src=0.0, shared_dst=0.0)
    u = mk(20, 0, 1, {1}, {10, 12})
    v = mk(5, 1, 0, {10}, {2})
    other = mk(30, 1, 0, {11}, {3})
    agg_a, agg_b = SimpleNamespace(population=115), SimpleNamespace(population=85)
    score, m1, m2 = best_switch([u], [v, other], scorer, agg_a, agg_b)
    assert (score, m1, m2) == (30, u, v)
    assert best_switch([], [v], scorer, agg_a, agg_b) is None
    assert best_switch([u], [], scorer, agg_a, agg_b) is None


def test_best_switch_equals_exhaustive_under_popdev():
    rng = random.Random(8)
    compared = 0
    for trial in range(200):
        n1, n2 = rng.randint(1, 40), rng.randint(1, 40)
        universe = list(range(200))
        def mk(pop, s, d):
            mem = frozenset(rng.sample(universe, rng.randint(1, 3)))
            contacts = frozenset(rng.sample(universe, rng.randint(1, 3)))
            return SimpleNamespace(pop=pop, source=s, dest=d, members=mem, dest_contacts=contacts,
                                   area=0.0, perim=0.0, shared_src=0.0, shared_dst=0.0)
        ab = sorted((mk(rng.randint(0, 500), 0, 1) for _ in range(n1)), key=lambda m: m.pop)
        ba = sorted((mk(rng.randint(0, 500), 1, 0) for _ in range(n2)), key=lambda m: m.pop)
        total = rng.randint(500, 5000)
        pa = rng.randint(0, total)
        r = rng.randint(2, 6)
        scorer = Scorer(ObjectiveConfig(1, 0, r, total))
        agg_a, agg_b = SimpleNamespace(population=pa), SimpleNamespace(population=total - pa)
        fast = best_switch(ab, ba, scorer, agg_a, agg_b)
        slow = exhaustive_best_switch(ab, ba, scorer, agg_a, agg_b)
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert fast[0] == slow[0]
            assert switch_valid(fast[1], fast[2])
            compared += 1
    assert compared > 150


def test_best_switch_on_real_pools_matches_exhaustive():
    for seed in range(20):
        g = generate_grid(7, 7, "lognormal:5,1", seed=seed)
        plan = init_plan(g, 4, seed)
        pool = enumerate_candidates(g, plan)
        scorer = Scorer(ObjectiveConfig(1, 0, 4, g.total_population))
        for (a, b) in list(pool.pairs):
            if a < b and (b, a) in pool.pairs:
                fast = best_switch(pool.moves(a, b), pool.moves(b, a), scorer,
                                   plan.aggregates[a], plan.aggregates[b])
                slow = exhaustive_best_switch(pool.moves(a, b), pool.moves(b, a), scorer,
                                              plan.aggregates[a], plan.aggregates[b])
                assert (fast is None) == (slow is None)
                if fast:
                    assert fast[0] == slow[0]
