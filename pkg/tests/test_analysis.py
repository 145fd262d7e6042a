import pytest

from autopar import corpus
from autopar.analysis import extract_signatures, parse_externals
from autopar.analysis.datagroups import INDEXED, LOCAL, READ, WRITE, Datagroup, Permission
from autopar.analysis.externals import ExternalsFormatError, default_externals
from autopar.errors import MissingExternalSignature
from autopar.frontend import ast as A, parse_program
from autopar.interp import SoundnessChecker, run_sequential

ALIAS_AND_RECURSION = """
int g(int[] x) {
    x[0] = 1;
    return x[1];
}

bool isEven(int n) {
    if (n == 0) { return true; }
    return isOdd(n - 1);
}

bool isOdd(int n) {
    if (n == 0) { return false; }
    return isEven(n - 1);
}

int id(int n) { return n; }

int main(int n) {
    int[] arr = new int[n + 2];
    int i = 0;
    arr[i] = 1;
    for (int k = 1; k < n; k = k + 1) {
        arr[k] = 1;
    }
    int[] b = arr;
    int r = g(b);
    int s = id(3);
    bool e = isEven(4);
    print(r, s, e);
    return 0;
}
"""


def tokens(table, node):
    return table.display[node.nid]


def perms(table, node):
    return {str(p) if p.kind != WRITE or "@" not in p.group.name else "write(return-temp)"
            for p in table[node]}


@pytest.fixture
def sample():
    prog = parse_program(ALIAS_AND_RECURSION)
    return prog, extract_signatures(prog)


def test_fib_annotation_tokens(parse, fib_source):
    prog = parse(fib_source)
    table = extract_signatures(prog)
    if_, decl_a, decl_b, ret = prog.function("f").body.stmts
    assert tokens(table, if_) == ["read(n)", "control(f)"]
    assert tokens(table, decl_a) == ["call(f)", "read(n)", "write(a)"]
    assert tokens(table, decl_b) == ["call(f)", "read(n)", "write(b)"]
    assert tokens(table, ret) == ["read(a)", "read(b)", "control(f)", "write(return)"]
    # the inner return also reads n, which the dynamic check below relies on
    assert set(tokens(table, if_.then.stmts[0])) == {"read(n)", "control(f)", "write(return)"}


def test_if_is_union_of_branches(parse, fib_source):
    prog = parse(fib_source)
    table = extract_signatures(prog)
    if_ = prog.function("f").body.stmts[0]
    assert table[if_] >= table[if_.cond] | table[if_.then]


def test_identity_return(sample):
    prog, table = sample
    ret = prog.function("id").body.stmts[0]
    assert set(tokens(table, ret)) == {"read(n)", "write(return)", "control(id)"}


def test_indexed_inside_loop_widened_outside(sample):
    prog, table = sample
    body = prog.function("main").body.stmts
    outside, loop = body[2], body[3]
    assert set(tokens(table, outside)) == {"write(arr)", "read(i)"}
    assert set(tokens(table, loop.body.stmts[0])) == {"write(arr[k])", "read(k)"}


def test_call_substitutes_arguments(parse, fib_source):
    prog = parse(fib_source)
    table = extract_signatures(prog)
    call = prog.function("f").body.stmts[1].init
    assert perms(table, call) == {"read(n)", "write(return-temp)"}


def test_literal_argument_reads_nothing(sample):
    prog, table = sample
    call = prog.function("main").body.stmts[6].init
    assert all(p.kind != READ for p in table[call])


def test_array_argument_maps_through_alias(sample):
    prog, table = sample
    stmt = prog.function("main").body.stmts[5]  # int r = g(b), b aliases arr
    arr = Datagroup.array("main", "arr")
    assert Permission(WRITE, arr) in table[stmt]
    assert Permission(READ, arr) in table[stmt]


def test_recursive_summaries(parse, fib_source):
    table = extract_signatures(parse(fib_source))
    assert table.summary("f").format() == "read(n), write(return), control(f)"
    assert table.second_pass == ["f"]


def test_mutual_recursion_fixpoint(sample):
    prog, table = sample
    assert table.second_pass == ["isEven", "isOdd"]
    assert table.summary("isEven").format() == "read(n), write(return), control(isEven)"
    assert table.summary("isOdd").format() == "read(n), write(return), control(isOdd)"


def test_non_recursive_program_has_no_second_pass():
    prog = parse_program("int sq(int x) { return x * x; }\nint main() { print(sq(3)); return 0; }")
    assert extract_signatures(prog).second_pass == []


@pytest.mark.parametrize("name", corpus.names(include_extra=True))
def test_idempotent(name):
    prog = corpus.get(name).load()
    first = extract_signatures(prog)
    second = extract_signatures(prog)
    assert first.sigs == second.sigs and first.summaries == second.summaries


def _nodes_outside_loops(node, in_loop=False):
    if not in_loop:
        yield node
    for child in node.children():
        yield from _nodes_outside_loops(child, in_loop or isinstance(node, A.LOOP_TYPES))


@pytest.mark.parametrize("name", corpus.names(include_extra=True))
def test_widening_outside_loops(name):
    prog = corpus.get(name).load()
    table = extract_signatures(prog)
    for fn in prog.functions:
        for stmt in fn.body.stmts:
            for node in _nodes_outside_loops(stmt):
                if isinstance(node, A.LOOP_TYPES):
                    continue
                assert not any(p.group.kind == INDEXED for p in table[node]), node


@pytest.mark.parametrize("name", corpus.names(include_extra=True))
def test_branch_overapproximation(name):
    prog = corpus.get(name).load()
    table = extract_signatures(prog)
    for node in prog.nodes():
        if isinstance(node, A.If):
            parts = table[node.cond] | table[node.then]
            if node.orelse is not None:
                parts = parts | table[node.orelse]
            assert table[node] >= parts


def test_missing_external_signature():
    prog = parse_program("int main() { float x = sqrt(2.0); print(x); return 0; }")
    externals = {k: v for k, v in default_externals().items() if k != "sqrt"}
    with pytest.raises(MissingExternalSignature, match="sqrt"):
        extract_signatures(prog, externals)


def test_externals_file_format():
    table = parse_externals("# comment\nlog: read(arg0) write(global) blocking atomic(io)\n")
    sig = table["log"]
    assert sig.perms == [("read", "arg0"), ("write", "global")]
    assert sig.blocking and sig.atomic == ("io",)
    with pytest.raises(ExternalsFormatError, match="bad permission"):
        parse_externals("log: borrow(x)")
    with pytest.raises(ExternalsFormatError, match="expected"):
        parse_externals("log read(x)")


def test_named_global_regions_separate_io():
    ext = default_externals()
    ext.update(parse_externals("sin: read(arg0) write(return) write(trig)"))
    prog = parse_program("int main() { float x = sin(1.0); print(x); return 0; }")
    table = extract_signatures(prog, ext)
    decl = prog.function("main").body.stmts[0]
    assert "write(trig)" in tokens(table, decl)
    assert "write(global)" not in tokens(table, decl)


def test_blocking_and_atomic_propagate_to_callers():
    ext = default_externals()
    ext.update(parse_externals("print: read(args) write(global) atomic(console)"))
    prog = parse_program("""
        void note(int x) { sleep_ms(0); print(x); }
        int main() { note(1); return 0; }""")
    table = extract_signatures(prog, ext)
    assert "note" in table.blocking
    assert table.atomic["note"] == ("console",)


def test_dynamic_accesses_stay_inside_signatures(sample):
    prog, table = sample
    checker = SoundnessChecker(table)
    run_sequential(prog, [6], checker)
    assert checker.accesses > 0
    assert checker.violations == []


def test_checker_detects_a_missing_permission(parse, fib_source):
    prog = parse(fib_source)
    table = extract_signatures(prog)
    ret = prog.function("f").body.stmts[0].then.stmts[0]
    n = Datagroup.local("f", prog.function("f").params[0].sym.uid)
    table.sigs[ret.nid] = table[ret] - {Permission(READ, n)}
    checker = SoundnessChecker(table)
    run_sequential(prog, [5], checker)
    assert checker.violations
    assert {v.nid for v in checker.violations} == {ret.nid}


def test_local_groups_are_per_function(parse, fib_source):
    table = extract_signatures(parse(fib_source))
    groups = {p.group for s in table.sigs.values() for p in s if p.group.kind == LOCAL}
    assert {g.scope for g in groups} == {"f", "main"}
