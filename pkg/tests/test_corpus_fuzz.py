"""Random script and context generators, and the fuzzed runs."""
from __future__ import annotations

import random

from asc1.corpus import (default_pool, mutate, random_contexts, random_scripts,
                         template_cases, template_contexts)
from asc1.expr import depth, encode_expr
from asc1.fuzz import (FuzzConfig, alternative_witnesses, check_all, fuzz_run,
                       witness_substitution)
from asc1.semantics import AuthGroup, net_step
from asc1.teal import Unsupported, compile_script
from asc1 import trace as tracefmt

SMALL = FuzzConfig(max_labels=60, max_rounds=12)


def test_generators_are_seeded():
    a = [encode_expr(e) for e in random_scripts(50, seed=3)]
    b = [encode_expr(e) for e in random_scripts(50, seed=3)]
    assert a == b and a != [encode_expr(e) for e in random_scripts(50, seed=4)]
    assert random_contexts(20, seed=3) == random_contexts(20, seed=3)


def test_random_scripts_compile_and_stay_shallow():
    compiled = 0
    for e in random_scripts(200, seed=1):
        assert depth(e) <= 10
        try:
            compile_script(e)
            compiled += 1
        except Unsupported:
            pass
    assert compiled == 200


def test_random_contexts_are_translatable():
    ctxs = random_contexts(200, seed=1)
    assert sum(c.translatable() for c in ctxs) >= 150
    assert all(0 <= c.index < len(c.group) for c in ctxs)


def test_mutations_change_something():
    pool = default_pool()
    rng = random.Random(0)
    case = template_cases()[0]
    name, base = case.valid[0]
    changed = sum(mutate(rng, base, pool, []) != base for _ in range(50))
    assert changed >= 35        # a mutation may redraw the value it replaces
    out = template_contexts(case, 30, rng, pool)
    assert len(out) == 30 and all(c.translatable() for _, c in out)


def test_fuzz_run_is_deterministic_and_clean():
    r1, r2 = fuzz_run(7, SMALL), fuzz_run(7, SMALL)
    assert tracefmt.dumps(r1) == tracefmt.dumps(r2)
    assert tracefmt.dumps(r1) != tracefmt.dumps(fuzz_run(8, SMALL))
    assert all(v.ok for v in check_all(r1).values())
    assert len(r1.labels) <= SMALL.max_labels


def test_witness_substitution():
    run = fuzz_run(2, SMALL)
    tried = 0
    for i, lab in enumerate(run.labels):
        if not isinstance(lab, AuthGroup):
            assert witness_substitution(run, i) is None
            continue
        res = witness_substitution(run, i)
        if res is not None:
            a, b = res
            assert a == b
            tried += 1
            alt = alternative_witnesses(run.states[i], lab)
            assert alt.group == lab.group and alt.witnesses != lab.witnesses
            assert net_step(run.states[i], alt).chain.digest == run.states[i + 1].chain.digest
    assert tried > 0


def test_trace_round_trip():
    run = fuzz_run(5, SMALL)
    text = tracefmt.dumps(run)
    back, recorded = tracefmt.load(text.splitlines())
    assert [s.chain.digest.hex() for s in back.states] == recorded
    assert tracefmt.dumps(back) == text
