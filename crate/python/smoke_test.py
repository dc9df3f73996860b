#!/usr/bin/env python3
"""Smoke test for the rankcsp_py extension module.

Builds the cdylib if needed, imports it from a scratch directory, and
exercises the bound API end to end. Exits nonzero on the first failure.
"""

import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_extension() -> Path:
    lib = ROOT / "target" / "debug" / "librankcsp_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "rankcsp-py"], cwd=ROOT, check=True
        )
    return lib


def import_module(scratch: Path):
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    target = scratch / f"rankcsp_py{suffix}"
    shutil.copyfile(locate_extension(), target)
    sys.path.insert(0, str(scratch))
    import rankcsp_py

    return rankcsp_py


def main() -> int:
    with tempfile.TemporaryDirectory() as scratch:
        m = import_module(Path(scratch))

        inst = m.Instance.generate("betweenness", 8, noise="0", seed=7)
        assert inst.n == 8 and inst.k == 3 and inst.family == "betweenness"
        assert inst.constraint_count == 56
        assert inst.noise == "0" and inst.noised_count == 0 and inst.seed == 7
        assert inst.fragility() == "fragile"

        planted = inst.planted
        assert sorted(planted) == list(range(8))
        assert inst.cost(planted) == 0

        text = inst.to_json()
        again = m.Instance.from_json(text)
        assert again.to_json() == text, "round trip must be byte stable"
        assert again.planted == planted

        result = inst.solve(eps="1/4", seed=3)
        assert result.best_cost == 0, result
        assert m.kendall_tau_mod_reversal(result.best, planted) == 0
        assert not result.took_additive_branch
        assert result.guesses >= 1

        exact = inst.exact(cap=10)
        assert exact.opt_cost == 0
        assert m.kendall_tau(exact.witness, planted) == 0

        noisy = m.Instance.generate("kfast", 7, k=3, noise="1/5", seed=2)
        assert noisy.fragility() == "fragile"
        assert noisy.noised_count > 0
        opt = noisy.exact(cap=10).opt_cost
        got = noisy.solve(eps="1/4", seed=0, additive="heuristic").best_cost
        assert opt <= got <= noisy.constraint_count

        weak = m.Instance.generate("kbetweenness", 6, seed=1)
        assert weak.fragility() == "weakly_fragile"

        for bad in (
            lambda: m.Instance.generate("nope", 6),
            lambda: inst.cost([0, 1, 2]),
            lambda: inst.solve(eps="7/3"),
            lambda: m.Instance.from_json("{}"),
        ):
            try:
                bad()
            except ValueError:
                pass
            else:
                raise AssertionError(f"{bad} should have raised ValueError")

        print("smoke test passed: generate, price, solve, exact, round trip")
        return 0


if __name__ == "__main__":
    sys.exit(main())
