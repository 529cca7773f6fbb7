#!/usr/bin/env python3
"""Smoke test for the ppop_py extension module.

Builds (or reuses) the cdylib from crates/ppop-py and drives the main
operations end to end on the bundled fixtures:

    cargo build -p ppop-py            # or --release
    python3 python/smoke_test.py
"""
import importlib.util
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libppop_py.so",
        ROOT / "target" / "debug" / "libppop_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        print("building ppop-py ...")
        subprocess.run(["cargo", "build", "-p", "ppop-py"], cwd=ROOT, check=True)
        lib = candidates[1]
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="ppop_py_"))
    target = tmp / "ppop_py.so"
    shutil.copy2(lib, target)
    spec = importlib.util.spec_from_file_location("ppop_py", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def check(name, cond):
    status = "ok" if cond else "FAIL"
    print(f"  [{status}] {name}")
    if not cond:
        sys.exit(1)


def main():
    ppop = load_module()
    print("module loaded:", ppop.__name__)

    # Grid loading and DC flow on the 3-bus fixture.
    tri = ppop.Grid.load("triangle3")
    check("triangle shape", tri.n_buses == 3 and tri.n_lines == 3)
    theta, flows = tri.dc_flow([1.0, 0.0, -1.0])
    check("reference angle pinned", abs(theta[0]) < 1e-12)
    check("direct line carries 2/3", abs(flows[1] - 2.0 / 3.0) < 1e-9)
    check("connected after one outage", tri.connected_without([0]))
    check("islanding detected", not tri.connected_without([0, 1]))

    # Attacker: the healthy triangle has no outage-causing attack.
    params = ppop.Params(alpha=0.25, xi_p=1)
    out = ppop.solve_attacker(tri, params, [], budget_s=120.0)
    check("healthy triangle is safe", out["psi_a"] == 0)
    check("no witness on a safe case", out["witness"] is None)

    # Bundled 30-bus case: structure plus the classic observability number.
    g30 = ppop.Grid.load("ieee30")
    check("ieee30 shape", g30.n_buses == 30 and g30.n_lines == 41)
    check("p0 balances", abs(sum(g30.p0)) < 1e-9)
    obs = ppop.observability_placement(g30)
    check("full observability needs 10 PMUs", len(obs) == 10)
    pinned = ppop.observability_placement(g30, pins=[15, 23])
    check("pins are kept", {15, 23} <= set(pinned))

    # Cascade simulation from the base point: nothing trips.
    casc = g30.cascade(g30.p0, [])
    check("no cascade at the base point", len(casc["rounds"]) == 0)

    # Full attacker MILP on the 30-bus system under two PMUs.
    out = ppop.solve_attacker(
        g30, ppop.Params(alpha=0.25, xi_p=2), [15, 23], budget_s=300.0
    )
    print(f"  ieee30 psi_a under PMUs at 15,23: {out['psi_a']}")
    if out["witness"] is not None:
        check("witness lists its attack", len(out["witness"]["ap"]) >= 1)

    # Placement end to end on the triangle (trivially safe -> empty).
    res = ppop.place(tri, ppop.Params(alpha=0.25, xi_p=1), "aong", budget_s=120.0)
    check("aong verifies", res["verified"])
    print("placement:", res["bus_ids"], "count", res["count"])

    print("smoke test passed")


if __name__ == "__main__":
    main()
