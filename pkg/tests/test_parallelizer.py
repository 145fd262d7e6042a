import copy

import pytest

from autopar import corpus
from autopar.analysis import extract_signatures
from autopar.errors import PlanError
from autopar.frontend import ast as A, format_program, parse_program
from autopar.parallelizer import (
    DOACROSS, DOALL, FutureCreate, FutureGet, Guard, ParallelLoop, ReductionRegistry,
    clone_method, detect_doacross, detect_doall, lower, parallelizable_functions,
    should_parallelize, verify_plan,
)

SMALL_FUNCS = """
int id(int n) { return n; }

int work(int n) {
    int s = 0;
    for (int i = 0; i < n; i = i + 1) { s = s + i; }
    return s;
}

int wrapper(int n) {
    int x = n + 1;
    int y = work(x);
    return y;
}

int main(int n) {
    print(id(n), wrapper(n));
    return 0;
}
"""


def analyzed(src):
    prog = parse_program(src)
    return prog, extract_signatures(prog)


def planned(src, threshold=10):
    prog, table = analyzed(src)
    return lower(prog, table, threshold)


def nodes_of(fn, cls):
    return [n for n in fn.walk() if isinstance(n, cls)]


# -- granularity ------------------------------------------------------------

def test_should_parallelize_rules(parse, fib_source):
    prog = parse(fib_source)
    assert should_parallelize(prog.function("f"), prog, extract_signatures(prog))

    prog, table = analyzed(SMALL_FUNCS)
    judged = parallelizable_functions(prog, table)
    assert "id" not in judged
    assert "work" in judged  # loop
    assert "wrapper" in judged  # 3 statements, but calls an expensive function


def test_statement_threshold_is_configurable():
    src = "int h(int a) { int b = a; int c = b; return c; }\nint main() { print(h(1)); return 0; }"
    prog, table = analyzed(src)
    assert "h" not in parallelizable_functions(prog, table, threshold=10)
    assert "h" in parallelizable_functions(prog, table, threshold=3)


# -- cloning ----------------------------------------------------------------

def test_clone_fib(parse, fib_source):
    prog = parse(fib_source)
    par, seq = clone_method(prog.function("f"), {"f", "main"})
    guard = par.body.stmts[0]
    assert isinstance(guard, Guard) and guard.seq_name == "f__seq"
    assert seq.name == "f__seq"
    assert {c.name for c in nodes_of(seq, A.Call)} == {"f__seq"}
    assert not nodes_of(seq, Guard)


def test_non_parallelizable_helper_untouched():
    plan = planned(SMALL_FUNCS)
    fp = plan.functions["id"]
    assert not fp.cloned
    assert format_program(A.Program([fp.parallel])) == format_program(
        A.Program([plan.program.function("id")]))


def test_mutual_recursion_clones_call_each_other():
    plan = planned("""
        bool isEven(int n) { if (n == 0) { return true; } return isOdd(n - 1); }
        bool isOdd(int n) { if (n == 0) { return false; } return isEven(n - 1); }
        int main(int n) { print(isEven(n)); return 0; }""")
    for name, other in (("isEven", "isOdd__seq"), ("isOdd", "isEven__seq")):
        seq = plan.functions[name].sequential
        assert [c.name for c in nodes_of(seq, A.Call)] == [other]


def test_sequential_clones_have_no_plan_nodes():
    for name in corpus.names(include_extra=True):
        prog = corpus.get(name).load()
        plan = lower(prog, extract_signatures(prog))
        for fp in plan.functions.values():
            if fp.cloned:
                assert not nodes_of(fp.sequential, (FutureCreate, FutureGet, ParallelLoop, Guard))


# -- future placement -------------------------------------------------------

def test_fib_plan_structure(parse, fib_source):
    prog = parse(fib_source)
    plan = lower(prog, extract_signatures(prog))
    body = plan.functions["f"].parallel.body.stmts
    assert isinstance(body[0], Guard)
    assert isinstance(body[1], A.If)
    assert all(isinstance(s, FutureCreate) for s in body[2:4])
    gets = [n for s in body[4:] for n in s.walk() if isinstance(n, FutureGet)]
    assert {g.create.fid for g in gets} == {body[2].fid, body[3].fid}
    f_places = [p for p in plan.placements if p.function == "f"]
    if_nid = prog.function("f").body.stmts[0].nid
    assert [p.hard_dep for p in f_places] == [if_nid, if_nid]
    assert all(not p.soft_deps for p in f_places)


def test_first_statement_has_no_dependencies():
    plan = planned("""
        int work(int n) { int s = 0; for (int i = 0; i < n; i = i + 1) { s = s + i; } return s; }
        int main(int n) { int y = work(n); print(y); return 0; }""")
    p = next(p for p in plan.placements if p.function == "main")
    assert p.hard_dep is None and not p.soft_deps and p.insertion_point == 0


SOFT_DEP = """
int g(int n) { int s = 0; for (int i = 0; i < n; i = i + 1) { s = s + i; } return s; }
int h(int n) { int s = 1; for (int i = 0; i < n; i = i + 1) { s = s + n; } return s; }
int main(int n) {
    int x = g(n);
    int y = h(x);
    print(y);
    return 0;
}
"""


def test_write_before_read_is_hard_dependency():
    plan = planned(SMALL_FUNCS)
    p = next(p for p in plan.placements if p.function == "wrapper")
    x_decl = plan.program.function("wrapper").body.stmts[0]
    assert (p.hard_dep, p.insertion_point, p.soft_deps) == (x_decl.nid, 1, frozenset())


def test_read_after_write_on_task_is_soft_dependency():
    plan = planned(SOFT_DEP)
    pg, ph = [p for p in plan.placements if p.function == "main"]
    assert ph.soft_deps == {pg.fid}
    main = plan.functions["main"].parallel.body.stmts
    create_h = next(s for s in main if isinstance(s, FutureCreate) and s.fid == ph.fid)
    assert [d.fid for d in create_h.soft_deps] == [pg.fid]


def test_placement_retries_outward_through_bare_blocks():
    plan = planned("""
        int g(int n) { int s = 0; for (int i = 0; i < n; i = i + 1) { s = s + i; } return s; }
        int main(int n) {
            int k = 1;
            {
                int y = g(n);
                print(y);
            }
            return k;
        }""")
    main = plan.functions["main"].parallel.body.stmts
    assert isinstance(main[1], FutureCreate)  # hoisted to the method body, after the guard


def test_placement_never_leaves_an_if_branch():
    plan = planned("""
        int g(int n) { int s = 0; for (int i = 0; i < n; i = i + 1) { s = s + i; } return s; }
        int main(int n) {
            if (n > 3) {
                int y = g(n);
                print(y);
            }
            return 0;
        }""")
    branch = plan.functions["main"].parallel.body.stmts[1].then.stmts
    assert isinstance(branch[0], FutureCreate)


def _blocks_by_nid(prog):
    return {n.nid: n for n in prog.nodes() if isinstance(n, A.Block)}


@pytest.mark.parametrize("name", corpus.names(include_extra=True))
def test_placement_safety(name):
    """Statements between creation and use never conflict unless waited on."""
    prog = corpus.get(name).load()
    table = extract_signatures(prog)
    plan = lower(prog, table)
    blocks = _blocks_by_nid(prog)
    by_node = {p.node: p for p in plan.placements}
    for p in plan.placements:
        if p.block != p.site_block:
            continue
        stmts = blocks[p.block].stmts
        theta = table.sigs[p.node]
        for stmt in stmts[p.insertion_point:p.site_index]:
            if not table[stmt].conflicts_with(theta):
                continue
            inner = [by_node[n.nid] for n in stmt.walk() if n.nid in by_node]
            assert inner and all(q.fid in p.soft_deps for q in inner), (name, p, stmt)


@pytest.mark.parametrize("name", corpus.names(include_extra=True))
def test_planning_is_deterministic(name):
    prog = corpus.get(name).load()
    table = extract_signatures(prog)
    assert lower(prog, table).format() == lower(prog, table).format()


def test_get_before_create_is_rejected(parse, fib_source):
    prog = parse(fib_source)
    plan = lower(prog, extract_signatures(prog))
    body = plan.functions["f"].parallel.body.stmts
    body.append(body.pop(2))  # move the first creation after its get
    with pytest.raises(PlanError, match="before it is created"):
        verify_plan(plan)


def test_straight_line_program_is_unchanged():
    src = "int main(int n) { int a = n + 1; print(a); return a; }"
    plan = planned(src)
    assert plan.placements == [] and plan.loops == []
    assert not plan.functions["main"].cloned
    assert plan.format() == format_program(parse_program(src))


# -- loops --------------------------------------------------------------------

def loop_in(src):
    prog, table = analyzed(src)
    loop = next(n for n in prog.function("main").walk() if isinstance(n, A.LOOP_TYPES))
    return prog, table, loop


def doall(body):
    return f"""
        float main(int n) {{
            float[] a = new float[n + 1];
            for (int i = 0; i < n; i = i + 1) {{ {body} }}
            return a[0];
        }}"""


@pytest.mark.parametrize("body, expected", [
    ("a[i] = a[i] * 2.0;", DOALL),
    ("a[i] = a[i + 1];", None),
    ("", DOALL),
    ("float t = a[i]; a[i] = t + 1.0;", DOALL),
    ("a[0] = a[i];", None),
])
def test_detect_doall(body, expected):
    _, table, loop = loop_in(doall(body))
    found = detect_doall(loop, table)
    assert (found.kind if found else None) == expected


def test_detect_doacross_pi():
    prog = corpus.get("pi").load()
    table = extract_signatures(prog)
    loop = next(n for n in prog.function("main").walk() if isinstance(n, A.For))
    assert detect_doall(loop, table) is None
    plan = detect_doacross(loop, table, ReductionRegistry())
    assert plan.kind == DOACROSS
    [red] = plan.reductions
    assert (red.sym.name, red.op, red.identity) == ("sum", "+", 0.0)


def test_accumulator_used_as_index_is_rejected():
    _, table, loop = loop_in("""
        int main(int n) {
            int[] a = new int[n];
            int acc = 0;
            for (int i = 0; i < n; i = i + 1) { acc = acc + a[acc % n]; }
            return acc;
        }""")
    assert detect_doacross(loop, table, ReductionRegistry()) is None


def test_two_accumulators():
    _, table, loop = loop_in("""
        int main(int n) {
            int sum = 0;
            int m = 0;
            for (int i = 0; i < n; i = i + 1) {
                sum = sum + i * i;
                m = max(m, i % 7);
            }
            print(sum, m);
            return 0;
        }""")
    plan = detect_doacross(loop, table, ReductionRegistry())
    assert {(r.sym.name, r.op) for r in plan.reductions} == {("sum", "+"), ("m", "max")}


def test_minus_is_canonicalised_to_plus():
    _, table, loop = loop_in("""
        int main(int n) {
            int s = 100;
            for (int i = 0; i < n; i = i + 1) { s = s - i; }
            return s;
        }""")
    [red] = detect_doacross(loop, table, ReductionRegistry()).reductions
    assert red.combine == "+" and red.identity == 0


def test_user_reduction_operator():
    src = """
        @reduce(gcd, 0);
        int gcd(int a, int b) { while (b != 0) { int t = a % b; a = b; b = t; } return a; }
        int main(int n) {
            int g = 0;
            for (int i = 1; i < n; i = i + 1) { g = gcd(g, i * 6); }
            return g;
        }"""
    prog, table, loop = loop_in(src)
    assert detect_doacross(loop, table, ReductionRegistry()) is None
    [red] = detect_doacross(loop, table, ReductionRegistry.for_program(prog)).reductions
    assert (red.op, red.identity) == ("gcd", 0)


def test_loop_with_early_exit_stays_sequential():
    _, table, loop = loop_in(doall("if (a[i] > 1.0) { break; } a[i] = 0.0;"))
    assert detect_doall(loop, table) is None


def test_nested_loops_inner_sized_by_threshold():
    prog = corpus.get("nbody").load()
    table = extract_signatures(prog)
    plan = lower(prog, table)
    advance = plan.functions["advance"].parallel
    outer = [n for n in advance.walk() if isinstance(n, ParallelLoop)]
    assert outer, "the outer body loop is lowered"
    for loop in outer:
        inner = [n for n in loop.plan.loop.body.walk() if isinstance(n, ParallelLoop)]
        assert inner == []
    # with a tiny threshold the inner loop qualifies too
    small = lower(prog, table, threshold=1)
    loops = [n for n in small.functions["advance"].parallel.walk() if isinstance(n, ParallelLoop)]
    nested = [n for lp in loops for n in lp.plan.loop.body.walk() if isinstance(n, ParallelLoop)]
    assert nested


def test_lowering_does_not_mutate_the_program(parse, fib_source):
    prog = parse(fib_source)
    before = copy.deepcopy(prog)
    lower(prog, extract_signatures(prog))
    assert prog == before
