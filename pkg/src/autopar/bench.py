"""Speedup sweeps over the corpus.

Each cell (program, decider, workers, split) runs in a forked child so a
runaway configuration can be killed at the timeout without disturbing the
rest of the sweep. Speedup is mean sequential time over mean parallel time.
"""

from __future__ import annotations

import multiprocessing as mp
import statistics
import traceback
from dataclasses import dataclass, field

from autopar.compare import outputs_match
from autopar.engine import run_compiled, run_plan
from autopar.pipeline import RunConfig, plan_program

OK, TIMEOUT, ERROR, MISMATCH = "ok", "timeout", "error", "mismatch"
CUTOFF, SPLIT = "cutoff", "split"

DEFAULT_DECIDERS = (
    "maxlevel:12", "maxtasks", "load", "surplus:3", "atc:12", "maxqueue", "stack:64",
    "sysmon:0.9,0.9", "combo:stack:64+maxtasks",
)
DEFAULT_SPLITS = (("binary", 3), ("lazy", 3), ("lazy", 10))


@dataclass
class BenchProgram:
    name: str
    program: object  # resolved Program
    args: tuple


@dataclass
class BenchSpec:
    programs: list
    workers: tuple = (1, 2, 4)
    deciders: tuple = DEFAULT_DECIDERS
    splits: tuple = DEFAULT_SPLITS  # compared at the largest worker count
    split: tuple = ("lazy", 3)  # used by the cutoff sweep
    reps: int = 7
    timeout: float = 300.0  # per run, seconds
    steal: str = "random"
    seed: int = 0
    threshold: int = 10
    compare_splits: bool = True
    compare_decider: str = "surplus:3"

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("repetitions must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


@dataclass
class BenchResult:
    spec: BenchSpec
    baselines: dict = field(default_factory=dict)  # program -> record
    records: list = field(default_factory=list)

    def cells(self, experiment):
        return [r for r in self.records if r["experiment"] == experiment]


def split_label(mode, pps):
    return "binary" if mode == "binary" else f"lazy{pps}"


def _child(conn, job):
    """Runs in the forked process: one message per repetition, then 'done'."""
    try:
        kind, program, args, config, plan, reps = job
        for _ in range(reps):
            if kind == "seq":
                res = run_compiled(program, args)
                conn.send(("rep", res.seconds, res.output, None))
            else:
                rt = config.runtime()
                try:
                    res = run_plan(plan, args, runtime=rt)
                finally:
                    rt.shutdown()
                res.stats.config = config.to_dict()
                conn.send(("rep", res.seconds, res.output, res.stats.to_dict()))
        conn.send(("done",))
    except BaseException:
        conn.send(("error", traceback.format_exc()))
    finally:
        conn.close()


def run_cell(job, timeout):
    """(status, times, last output, last profile, error text).

    ``job`` is (kind, program, args, config, plan, reps); ``timeout`` bounds
    each repetition.
    """
    ctx = mp.get_context("fork")
    parent, child = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_child, args=(child, job), daemon=True)
    proc.start()
    child.close()
    times, output, profile = [], None, None
    status, error = OK, None
    try:
        while True:
            if not parent.poll(timeout):
                status = TIMEOUT
                break
            try:
                msg = parent.recv()
            except EOFError:
                status, error = ERROR, "worker process exited unexpectedly"
                break
            if msg[0] == "rep":
                times.append(msg[1])
                output, profile = msg[2], msg[3]
            elif msg[0] == "error":
                status, error = ERROR, msg[1]
                break
            else:
                break
    finally:
        if proc.is_alive():
            proc.kill()
        proc.join()
        parent.close()
    return status, times, output, profile, error


def _record(experiment, prog, decider, workers, split, status, times, profile, error, base):
    mean = statistics.fmean(times) if times and status == OK else None
    seq = base.get("mean")
    speedup = seq / mean if (mean and seq and status == OK) else 0.0
    return {
        "experiment": experiment,
        "program": prog.name,
        "args": list(prog.args),
        "decider": decider,
        "workers": workers,
        "split": split,
        "status": status,
        "times": times,
        "mean": mean,
        "seq_mean": seq,
        "speedup": speedup,
        "profile": profile,
        "error": error,
    }


def run_bench(spec: BenchSpec, progress=None) -> BenchResult:
    result = BenchResult(spec)
    say = progress or (lambda msg: None)
    for prog in spec.programs:
        status, times, output, _, error = run_cell(
            ("seq", prog.program, prog.args, None, None, spec.reps), spec.timeout)
        base = {
            "program": prog.name, "status": status, "times": times, "output": output,
            "mean": statistics.fmean(times) if times and status == OK else None, "error": error,
        }
        result.baselines[prog.name] = base
        say(f"{prog.name}: sequential {status} {base['mean']}")
        _, plan = plan_program(prog.program, None, spec.threshold)

        def cell(experiment, decider, workers, mode, pps):
            config = RunConfig(workers=workers, steal=spec.steal, split=mode, pps=pps,
                               decider=decider, seed=spec.seed, threshold=spec.threshold)
            st, ts, out, prof, err = run_cell(
                ("par", prog.program, prog.args, config, plan, spec.reps), spec.timeout)
            if st == OK and base["output"] is not None and not outputs_match(base["output"], out):
                st, err = MISMATCH, f"output {out!r} differs from sequential {base['output']!r}"
            rec = _record(experiment, prog, decider, workers, split_label(mode, pps),
                          st, ts, prof, err, base)
            result.records.append(rec)
            say(f"{prog.name}: {experiment} {decider} w={workers} {rec['split']} "
                f"{st} speedup={rec['speedup']:.2f}")

        for decider in spec.deciders:
            for workers in spec.workers:
                cell(CUTOFF, decider, workers, *spec.split)
        if spec.compare_splits:
            for mode, pps in spec.splits:
                cell(SPLIT, spec.compare_decider, max(spec.workers), mode, pps)
    return result

