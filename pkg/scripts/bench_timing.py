"""Timing of validate per instance and of the right-witness sweep per dense instance.

Each measurement runs with the garbage collector paused, as timeit does.
Output is CSV on stdout: kind,index,orbits,field,seconds.
"""
import argparse
import csv
import gc
import statistics
import sys
import time
from dataclasses import dataclass

from fnduality.duality_invariants import dual_witness_right
from fnduality.fn_complex import validate
from fnduality.harness_cli import alpha_grid, make_instance, oracle_samples


@dataclass(frozen=True)
class BenchConfig:
    seed: int = 1006
    validate_count: int = 200
    witness_count: int = 20
    max_orbits: int = 20


def timed(fn, *args):
    gc.disable()
    try:
        t0 = time.perf_counter()
        out = fn(*args)
        return out, time.perf_counter() - t0
    finally:
        gc.enable()


def bench_validate(cfg: BenchConfig, w) -> list:
    out = []
    for i in range(cfg.validate_count):
        spec = make_instance(cfg.seed, i, "mixed", "mixed", cfg.max_orbits).spec
        _, dt = timed(validate, spec)
        w.writerow(["validate", i, len(spec.orbits), spec.config.field.p, f"{dt:.6f}"])
        out.append(dt)
    return out


def bench_witness(cfg: BenchConfig, w) -> list:
    out = []
    for i in range(cfg.witness_count):
        inst = make_instance(cfg.seed, i, "dense", "mixed", cfg.max_orbits)
        spec = inst.spec
        right, _ = oracle_samples(spec, inst.oracle, inst.scrambled)
        gc.collect()
        spent = 0.0
        for s in right:
            for a in alpha_grid(spec):
                if s.lo <= a < s.hi:
                    spent += timed(dual_witness_right, spec, a, s.chain)[1]
        w.writerow(["witness_right", i, len(spec.orbits), spec.config.field.p, f"{spent:.6f}"])
        out.append(spent)
    return out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=BenchConfig.seed)
    p.add_argument("--validate-count", type=int, default=BenchConfig.validate_count)
    p.add_argument("--witness-count", type=int, default=BenchConfig.witness_count)
    p.add_argument("--max-orbits", type=int, default=BenchConfig.max_orbits)
    cfg = BenchConfig(**vars(p.parse_args()))
    w = csv.writer(sys.stdout)
    w.writerow(["kind", "index", "orbits", "field", "seconds"])
    for name, xs, budget in [
        ("validate", bench_validate(cfg, w), 0.010),
        ("witness_right", bench_witness(cfg, w), 1.0),
    ]:
        if xs:
            print(
                f"# {name}: median {statistics.median(xs):.4f} s, max {max(xs):.4f} s, budget {budget} s",
                file=sys.stderr,
            )


if __name__ == "__main__":
    main()
