import json
import os

import pytest

from conftest import PAIR, SINGLE, instance
from fnduality.duality_invariants import boundary_depth, spectral_number
from fnduality.fn_complex import Chain, chain_gen, parse_fnc, validate, write_fnc
from fnduality.harness_cli import (
    Move,
    MoveRejected,
    NormalFormPlan,
    Pair,
    PlanError,
    ScramblePlan,
    alpha_grid,
    fuzz,
    gen_normal_form,
    gen_scramble,
    load_bundle,
    main,
    make_instance,
    verify_instance,
    write_bundle,
)
from fnduality.novikov_arith import ExactValue
from fnduality.ortho_linalg import barcode_reduce

T = ExactValue


def pair_plan():
    return NormalFormPlan(1, "dense", "q", (), (Pair(1, T(3), T(1), (0, 0), 1),))


def test_pair_plan_gives_worked_complex(pair):
    spec, oracle = gen_normal_form(pair_plan())
    assert spec.actions(1) == pair.actions(1) and spec.actions(0) == pair.actions(0)
    assert spec.matrix(1) == pair.matrix(1)
    assert oracle.beta_at(0) == 2
    assert barcode_reduce(spec) == oracle.barcode


def test_single_plan(single):
    spec, oracle = gen_normal_form(NormalFormPlan(1, "dense", "q", ((0, T(2)),), ()))
    assert spec.actions(0) == single.actions(0)
    assert oracle.rho == (("s0", 0, T(2)),)
    assert spectral_number(spec, chain_gen(spec, "s0")) == 2


def test_empty_plan():
    spec, oracle = gen_normal_form(NormalFormPlan(1, "discrete", "gf2"))
    assert not spec.orbits and validate(spec).ok
    assert boundary_depth(spec, 0) == 0 == oracle.beta_at(0)
    assert barcode_reduce(spec) == oracle.barcode


def test_plan_errors():
    with pytest.raises(PlanError):
        gen_normal_form(NormalFormPlan(1, "dense", "q", (), (Pair(1, T(1), T(3), (0, 0), 1),)))
    with pytest.raises(PlanError):
        gen_normal_form(NormalFormPlan(1, "discrete", "gf2", (), (Pair(1, T(3), T(1), (0,), 2),)))


def test_plan_json_round_trip():
    inst = instance(1, 0, "dense", "q")
    assert NormalFormPlan.from_json(json.loads(json.dumps(inst.plan.to_json()))) == inst.plan
    assert ScramblePlan.from_json(json.loads(json.dumps(inst.scramble.to_json()))) == inst.scramble


def test_identity_scramble():
    spec, _ = gen_normal_form(pair_plan())
    out = gen_scramble(spec, ScramblePlan(0, ()))
    assert out.spec == spec


def two_pair_spec():
    plan = NormalFormPlan(
        1, "dense", "q", (), (Pair(1, T(3), T(1), (0, 0), 1), Pair(1, T(5), T(2), (0, 0), 1))
    )
    return gen_normal_form(plan)


def test_single_move_keeps_depth():
    spec, oracle = two_pair_spec()
    # u0 (t=3) -> u0 + mu u1 (t=5) needs omega(mu) > 2
    out = gen_scramble(spec, ScramblePlan(0, (Move(1, 0, 1, (3, 0), 1),)))
    assert out.spec != spec
    assert validate(out.spec).ok
    assert barcode_reduce(out.spec) == oracle.barcode
    assert boundary_depth(out.spec, 0) == 3


def test_unfiltered_move_rejected():
    spec, _ = two_pair_spec()
    with pytest.raises(MoveRejected) as e:
        gen_scramble(spec, ScramblePlan(0, (Move(1, 0, 1, (1, 0), 1), Move(1, 0, 1, (2, 0), 1))))
    assert e.value.index == 0
    with pytest.raises(MoveRejected) as e:
        gen_scramble(spec, ScramblePlan(0, (Move(1, 0, 1, (3, 0), 1), Move(1, 0, 0, (3, 0), 1))))
    assert e.value.index == 1


@pytest.mark.parametrize("i", range(6))
def test_scramble_transforms_are_inverse(i):
    inst = instance(2, i, "mixed", "mixed")
    scr = inst.scrambled
    R = inst.spec.ring
    for k, M in scr.T.items():
        n = len(M)
        for a in range(n):
            for b in range(n):
                s = R.zero()
                for c in range(n):
                    s = s + M[a][c] * scr.Tinv[k][c][b]
                assert s == (R.one() if a == b else R.zero())


def test_instances_are_deterministic():
    a = make_instance(5, 3, "mixed", "mixed")
    b = make_instance(5, 3, "mixed", "mixed")
    assert a.plan == b.plan and a.scramble == b.scramble
    assert write_fnc(a.spec) == write_fnc(b.spec)
    assert make_instance(5, 4, "mixed", "mixed").plan != a.plan


def test_alpha_grid_avoids_actions():
    inst = instance(1, 1, "dense", "q")
    grid = alpha_grid(inst.spec)
    assert len(grid) == 16
    for a in grid:
        for o in inst.spec.orbits:
            assert not inst.spec.config.same_class(a, o.action)


def test_bundle_replay(tmp_path):
    inst = instance(1, 2, "discrete", "q")
    rep = verify_instance(inst.spec, inst.oracle, inst.scrambled)
    path = write_bundle(str(tmp_path), inst, rep)
    again = load_bundle(path)
    assert write_fnc(again.spec) == write_fnc(inst.spec)
    rep2 = verify_instance(again.spec, again.oracle, again.scrambled)
    assert rep2.text() == rep.text()
    assert main(["replay", path]) == 0


def test_fuzz_deterministic(tmp_path):
    a = fuzz(11, 3, "discrete", "mixed", 8, str(tmp_path))
    b = fuzz(11, 3, "discrete", "mixed", 8, str(tmp_path))
    assert a.passed == b.passed == 3 and a.failed == 0
    assert [r.text() for r in a.reports] == [r.text() for r in b.reports]


# command line


@pytest.fixture
def files(tmp_path):
    p = tmp_path / "pair.fnc"
    p.write_text(PAIR)
    s = tmp_path / "single.fnc"
    s.write_text(SINGLE)
    return tmp_path


def test_cli_validate(files, capsys):
    assert main(["validate", str(files / "pair.fnc")]) == 0
    bad = files / "bad.fnc"
    bad.write_text(PAIR.replace("action 1 0", "action 4 0"))
    assert main(["validate", str(bad)]) == 1
    assert "filtration" in capsys.readouterr().out
    broken = files / "broken.fnc"
    broken.write_text(PAIR.replace("gen v grading 0", "gen v grading zero"))
    assert main(["validate", str(broken)]) == 2
    assert "line" in capsys.readouterr().err


def test_cli_invariants_pair(files, capsys):
    assert main(["invariants", str(files / "pair.fnc")]) == 0
    out = capsys.readouterr().out
    assert "beta_0 = 2" in out
    assert "bar  degree 1: (3, 1)" in out
    assert main(["invariants", str(files / "pair.fnc"), "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "record,degree,first,second"
    assert "bar,1,3,1" in lines and "beta,0,2," in lines


def test_cli_invariants_single(files, capsys):
    assert main(["invariants", str(files / "single.fnc"), "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "rho,0,0,2" in lines and "infinite,0,2,inf" in lines


def test_cli_barcode_and_opposite(files, capsys):
    assert main(["barcode", str(files / "pair.fnc")]) == 0
    assert "degree 1: (3, 1)" in capsys.readouterr().out
    out = files / "op.fnc"
    assert main(["opposite", str(files / "pair.fnc"), "-o", str(out)]) == 0
    op = parse_fnc(out.read_text())
    assert op.actions(-1) == [T(-3)] and op.actions(0) == [T(-1)]
    assert main(["barcode", str(out)]) == 0
    assert "degree 0: (-1, -3)" in capsys.readouterr().out


def test_cli_verify_single(files, capsys):
    assert main(["verify", str(files / "single.fnc"), "--all"]) == 0
    out = capsys.readouterr().out
    assert "rho = 2, best op = -2, exact True" in out


def test_cli_verify_pair(files, capsys):
    for flag in ["--boundary-depth", "--nondeg", "--spectral-duality"]:
        assert main(["verify", str(files / "pair.fnc"), flag]) == 0


def test_cli_witness(files, capsys):
    ch = files / "p.chain"
    ch.write_text("chain 0 : 1@0 0 * p\n")
    assert main(["witness", str(files / "single.fnc"), "--side", "right", "--alpha", "0", "--chain", str(ch)]) == 0
    out = capsys.readouterr().out
    assert "pairing: 1" in out and "FAIL" not in out
    assert main(["witness", str(files / "single.fnc"), "--side", "left", "--alpha", "1", "--chain", str(ch)]) == 0
    uc = files / "u.chain"
    uc.write_text("chain 1 : 1@0 0 * u\n")
    assert main(["witness", str(files / "pair.fnc"), "--side", "right", "--alpha", "2", "--chain", str(uc)]) == 0
    # class of u is zero above its birth: input error
    assert main(["witness", str(files / "pair.fnc"), "--side", "right", "--alpha", "3", "--chain", str(uc)]) == 2


def test_cli_fuzz(tmp_path, capsys):
    assert main(["fuzz", "--seed", "7", "--count", "2", "--profile", "discrete", "--max-orbits", "8", "--out", str(tmp_path)]) == 0
    assert "2/2 pass" in capsys.readouterr().out
    assert not os.listdir(tmp_path)


def test_cli_missing_file(capsys):
    assert main(["validate", "/nonexistent/x.fnc"]) == 2
