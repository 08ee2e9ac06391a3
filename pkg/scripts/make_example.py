"""Write a generated complex (and its normal form) as .fnc files."""
import argparse
from dataclasses import dataclass
from pathlib import Path

from fnduality.fn_complex import write_fnc
from fnduality.harness_cli import make_instance


@dataclass(frozen=True)
class ExampleConfig:
    seed: int = 7
    index: int = 6
    profile: str = "dense"
    field: str = "q"
    max_orbits: int = 5
    moves: int = 3
    out: str = "example.fnc"


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(ExampleConfig()).items():
        p.add_argument("--" + name.replace("_", "-"), type=type(default), default=default)
    cfg = ExampleConfig(**vars(p.parse_args()))
    inst = make_instance(cfg.seed, cfg.index, cfg.profile, cfg.field, cfg.max_orbits, cfg.moves)
    out = Path(cfg.out)
    out.write_text(write_fnc(inst.spec), encoding="utf-8")
    normal = out.with_name(out.stem + ".normal.fnc")
    normal.write_text(write_fnc(inst.normal), encoding="utf-8")
    print(f"wrote {out} ({len(inst.spec.orbits)} orbits, {len(inst.scramble.moves)} moves) and {normal}")
    for uid, vid, pair in inst.oracle.pairs:
        print(f"bar degree {pair.degree}: ({pair.birth}, {pair.death})  {uid} -> {vid}")


if __name__ == "__main__":
    main()
