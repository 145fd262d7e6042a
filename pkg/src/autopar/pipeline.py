"""Analyze, plan and run a program with one run configuration."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

from autopar.analysis import extract_signatures, load_externals
from autopar.deciders import DEFAULT, parse_decider
from autopar.engine import RunResult, run_compiled, run_plan
from autopar.interp import run_sequential
from autopar.parallelizer import DEFAULT_THRESHOLD, lower
from autopar.runtime import Runtime, SplitConfig, default_workers

SEQ, PAR = "seq", "par"


@dataclass
class RunConfig:
    workers: int = 0  # 0: one per hardware thread
    steal: str = "random"
    split: str = "lazy"
    pps: int = 3
    decider: str = DEFAULT
    seed: int = 0
    atc_invert: bool = False
    threshold: int = DEFAULT_THRESHOLD
    profile: bool = True

    @property
    def effective_workers(self):
        return self.workers or default_workers()

    def split_config(self) -> SplitConfig:
        return SplitConfig(self.split, self.pps)

    def runtime(self) -> Runtime:
        return Runtime(
            workers=self.effective_workers,
            steal=self.steal,
            decider=parse_decider(self.decider, self.atc_invert),
            split=self.split_config(),
            seed=self.seed,
            profile=self.profile,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["workers"] = self.effective_workers
        return d


def plan_program(program, externals=None, threshold=DEFAULT_THRESHOLD):
    """Signature table and parallel plan for ``program``."""
    table = extract_signatures(program, externals)
    return table, lower(program, table, threshold)


def load_externals_file(path, overlay=True):
    return load_externals(path, overlay) if path else None


def run_reference(program, args) -> RunResult:
    t0 = time.perf_counter()
    res = run_sequential(program, list(args))
    return RunResult(res.value, res.output, None, time.perf_counter() - t0)


def run_program(program, args, mode=PAR, config: RunConfig | None = None, externals=None,
                plan=None) -> RunResult:
    """``seq`` runs the reference interpreter, ``par`` the parallel plan."""
    config = config or RunConfig()
    if mode == SEQ:
        return run_reference(program, args)
    if plan is None:
        _, plan = plan_program(program, externals, config.threshold)
    rt = config.runtime()
    try:
        result = run_plan(plan, args, runtime=rt)
    finally:
        rt.shutdown()
    result.stats.config = config.to_dict()
    return result


def time_sequential(program, args) -> RunResult:
    """Baseline timing: the original program through the same compiler, no runtime."""
    return run_compiled(program, args)
