"""Fuzz campaign over profiles and fields; prints one summary row per cell."""
import argparse
import logging
from dataclasses import dataclass, field

from fnduality.harness_cli import fuzz

log = logging.getLogger("run_fuzz")


@dataclass(frozen=True)
class FuzzConfig:
    seed: int = 0
    count: int = 25
    max_orbits: int = 20
    profiles: tuple = ("dense", "discrete")
    fields: tuple = ("q", "gf2")
    out: str = "fuzz-failures"
    checks: tuple = field(default=("axioms", "barcode", "boundary_depth", "spectral", "nondeg"))


def run(cfg: FuzzConfig) -> int:
    failed = 0
    print(f"{'profile':<10}{'field':<6}{'pass':>6}{'fail':>6}{'s/inst':>9}")
    for profile in cfg.profiles:
        for fld in cfg.fields:
            res = fuzz(cfg.seed, cfg.count, profile, fld, cfg.max_orbits, cfg.out, cfg.checks, log=log.debug)
            n = res.passed + res.failed
            print(f"{profile:<10}{fld:<6}{res.passed:>6}{res.failed:>6}{res.seconds / max(n, 1):>9.3f}")
            for b in res.bundles:
                print(f"  failure bundle: {b}")
            failed += res.failed
    return failed


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=FuzzConfig.seed)
    p.add_argument("--count", type=int, default=FuzzConfig.count)
    p.add_argument("--max-orbits", type=int, default=FuzzConfig.max_orbits)
    p.add_argument("--profiles", nargs="+", default=list(FuzzConfig.profiles))
    p.add_argument("--fields", nargs="+", default=list(FuzzConfig.fields))
    p.add_argument("--out", default=FuzzConfig.out)
    p.add_argument("-v", "--verbose", action="store_true")
    a = p.parse_args()
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING, format="%(message)s")
    cfg = FuzzConfig(a.seed, a.count, a.max_orbits, tuple(a.profiles), tuple(a.fields), a.out)
    raise SystemExit(1 if run(cfg) else 0)


if __name__ == "__main__":
    main()
