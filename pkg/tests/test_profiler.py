from collections import Counter

import pytest
from hypothesis import given, strategies as st

from autopar import corpus
from autopar.compare import outputs_match
from autopar.frontend import parse_program
from autopar.pipeline import PAR, RunConfig, run_program
from autopar.profiler import Counters, Profiler, RunStats, emit, format_table, merge, parse
from oracles import FIB, fib, fib_calls

counters = st.builds(
    Counters,
    worker=st.integers(-1, 3),
    tasks_created=st.integers(0, 1000),
    tasks_inlined=st.integers(0, 1000),
    steals=st.dictionaries(st.sampled_from(["random", "largest", "dependents"]),
                           st.integers(0, 50)).map(Counter),
    dependencies_unfulfilled=st.integers(0, 100),
    executed=st.integers(0, 1000),
    max_local_queue=st.integers(0, 64),
    decider_consultations=st.integers(0, 1000),
)


@given(st.lists(counters, max_size=8), st.randoms())
def test_merge_is_order_independent(cs, rnd):
    shuffled = cs[:]
    rnd.shuffle(shuffled)
    assert merge(cs, 4) == merge(shuffled, 4)


@given(st.lists(counters, max_size=8))
def test_merge_sums(cs):
    stats = merge(cs, 4)
    assert stats.tasks_created == sum(c.tasks_created for c in cs)
    assert sum(stats.per_worker) + stats.external_executed == sum(c.executed for c in cs)
    assert stats.total_steals == sum(sum(c.steals.values()) for c in cs)


@given(st.lists(counters, max_size=8), st.dictionaries(st.text(max_size=5), st.integers()))
def test_emit_parse_round_trip(cs, config):
    stats = merge(cs, 4)
    stats.config = config
    assert parse(emit(stats)) == stats


def test_empty_run_is_all_zero():
    stats = Profiler().stats(2)
    doc = stats.to_dict()
    assert doc["tasksCreated"] == doc["totalSteals"] == doc["deciderConsultations"] == 0
    assert doc["perWorker"] == [0, 0]


def test_disabled_profiler_records_nothing():
    prof = Profiler(enabled=False)
    prof.created()
    prof.stole("random")
    prof.consulted()
    assert prof.stats(1) == RunStats(per_worker=[0])


def test_table_lists_every_counter():
    text = emit(RunStats(tasks_created=3, steals={"random": 2}, per_worker=[1, 2]), "table")
    assert "tasks created" in text and "random=2" in text and "1 2" in text
    assert text == format_table(RunStats(tasks_created=3, steals={"random": 2}, per_worker=[1, 2]))
    with pytest.raises(ValueError):
        emit(RunStats(), "xml")


def test_sequential_run_counts_only_the_root():
    res = run_program(parse_program(FIB), [10], PAR, RunConfig(workers=2, decider="never"))
    assert res.output == [str(fib(10))]
    assert res.stats.tasks_created == 1
    assert res.stats.total_steals == 0


def test_always_spawn_counts_every_call_plus_root():
    res = run_program(parse_program(FIB), [10], PAR, RunConfig(workers=2, decider="always"))
    # every call of f becomes a task (main's call included), plus the root task
    assert res.stats.tasks_created == fib_calls(10) + 1
    assert res.stats.tasks_inlined == 0
    assert res.stats.total_steals <= res.stats.tasks_created


@pytest.mark.parametrize("name", ["fib", "pi", "mergesort", "health"])
def test_profiling_does_not_change_output(name):
    prog = corpus.get(name)
    on = run_program(prog.load(), prog.small_args, PAR, RunConfig(workers=2, profile=True))
    off = run_program(prog.load(), prog.small_args, PAR, RunConfig(workers=2, profile=False))
    # float reductions may combine in another order from run to run
    assert outputs_match(on.output, off.output) if prog.float_result else on.output == off.output
    assert off.stats.tasks_created == 0 and on.stats.tasks_created >= 1
