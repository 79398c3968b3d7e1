"""Exit-code, artifact, schema and determinism contract of the orbitpde CLI."""

import argparse
import csv
import filecmp
import json
import math
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

failures = []


def check(cond, what):
    print(("ok    " if cond else "FAIL  ") + what)
    if not cond:
        failures.append(what)


def run(cli, command, configs, *extra):
    args = [cli, command]
    for c in configs:
        args += ["--config", str(c)]
    args += list(extra)
    proc = subprocess.run(args, capture_output=True, text=True)
    return proc.returncode, proc.stdout + proc.stderr


def write_config(path, doc):
    path.write_text(json.dumps(doc, indent=2))
    return path


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schema", required=True)
    ap.add_argument("--configs", required=True)
    args = ap.parse_args()
    cfg = pathlib.Path(args.configs)
    schema = json.loads(pathlib.Path(args.schema).read_text())
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        out = tmp / "a"
        o = ["--out", str(out)]

        rc, log = run(args.cli, "solve", [cfg / "catenoid.json"], "--refine", "4", *o)
        check(rc == 0, f"catenoid solve exits 0 (got {rc})")
        rows = read_csv(out / "catenoid_convergence.csv")
        check(len(rows) == 4, "catenoid order table has four levels")
        check(float(rows[-1]["error"]) <= 1e-4, "catenoid error at N=512 <= 1e-4")
        check(all(float(r["error_order"]) >= 1.9 for r in rows[1:]), "catenoid observed order >= 1.9")

        rc, _ = run(args.cli, "solve", [cfg / "helicoidal_disk.json"], *o)
        check(rc == 0, f"helicoidal disk solve exits 0 (got {rc})")
        rep = json.loads((out / "helicoidal_disk_report.json").read_text())
        check(rep["mean_convexity"]["verdict"] == "holds", "helicoidal disk mean convexity holds")
        rc, _ = run(args.cli, "verify", [cfg / "helicoidal_disk.json"], *o)
        check(rc == 0, f"verify on the saved helicoidal field exits 0 (got {rc})")

        rc, _ = run(args.cli, "solve", [cfg / "p_half_invalid.json"], *o)
        check(rc == 2, f"p = 0.5 exits 2 (got {rc})")

        rc, _ = run(args.cli, "classify", [cfg / "catenoid.json"], *o)
        check(rc == 0, "classify minimal surface exits 0")
        cls = json.loads((out / "catenoid_classify.json").read_text())["classification"]
        check(cls["regular"] and cls["sder"] is not None and cls["cond4"] is not None, "minimal surface is SDER")
        p3 = write_config(tmp / "p3.json", {"name": "p3", "flux": {"builtin": "p_laplace", "p": 3}})
        rc, _ = run(args.cli, "classify", [p3], *o)
        cls = json.loads((out / "p3_classify.json").read_text())["classification"]
        check(rc == 0 and not cls["regular"] and cls["mder"] and cls["cond3"], "p = 3 classifies as MDER")
        bad_table = write_config(tmp / "bad_table.json",
                                 {"name": "bad_table", "flux": {"table": [[0.1, 0.1], [1, 1], [2, 0.5], [4, 3]]}})
        rc, _ = run(args.cli, "classify", [bad_table], *o)
        check(rc == 2, f"tabulated profile with a' < 0 exits 2 (got {rc})")

        rc, _ = run(args.cli, "barrier", [cfg / "hyperbolic_barrier.json"], *o)
        check(rc == 0, f"hyperbolic barrier exits 0 (got {rc})")
        g0 = [float(read_csv(out / f"hyperbolic_barrier_g_{i}.csv")[0]["g"]) for i in range(3)]
        check(g0[0] < g0[1] < g0[2], "g(0) strictly increasing in c")
        rc, _ = run(args.cli, "barrier", [cfg / "flat_disk_laplace.json"], *o)
        bar = json.loads((out / "flat_disk_laplace_barrier.json").read_text())
        check(rc == 0 and bar["supersolution"]["holds"], "flat disk p = 2 supersolution verdict pass")
        bad_geo = write_config(tmp / "bad_geo.json", {"name": "bad_geo", "flux": {"builtin": "minimal_surface"},
                                                      "geometry": {"kind": "helicoidal", "lambda": 1}})
        rc, _ = run(args.cli, "barrier", [bad_geo], *o)
        check(rc == 2, f"malformed geometry block exits 2 (got {rc})")
        bad_expr = write_config(tmp / "bad_expr.json", {
            "name": "bad_expr", "flux": {"builtin": "minimal_surface"},
            "geometry": {"kind": "rotational", "r_in": 1.5, "r_out": 3}, "boundary": {"expression": "r +* 2"}})
        rc, _ = run(args.cli, "solve", [bad_expr], *o)
        check(rc == 2, f"malformed expression exits 2 (got {rc})")
        big = write_config(tmp / "big.json", {
            "name": "big", "flux": {"builtin": "minimal_surface"},
            "geometry": {"kind": "rotational", "r_in": 1.5, "r_out": 3}, "solver": {"grid": {"n1": 5000}}})
        rc, _ = run(args.cli, "solve", [big], *o)
        check(rc == 2, f"grid size above 4096 exits 2 (got {rc})")

        base = strip_comments((cfg / "catenoid.json").read_text())
        gate = dict(base, name="gate", override_gate=False)
        rc, log = run(args.cli, "solve", [write_config(tmp / "gate.json", gate)], *o)
        check(rc == 3, f"catenoid without override exits 3 (got {rc})")
        rc, _ = run(args.cli, "solve", [tmp / "gate.json"], "--override-gate", *o)
        check(rc == 0, f"--override-gate lets it through (got {rc})")
        stall = dict(base, name="stall", solver={"scheme": "energy_descent", "max_iterations": 1})
        rc, _ = run(args.cli, "solve", [write_config(tmp / "stall.json", stall)], *o)
        check(rc == 4, f"max_iterations = 1 exits 4 (got {rc})")

        shifted = strip_comments((cfg / "flat_disk_laplace.json").read_text())
        rc, _ = run(args.cli, "solve", [cfg / "flat_disk_laplace.json"], *o)
        mismatch = dict(shifted, boundary={"expression": "x + 1"},
                        checks={"field": str(out / "flat_disk_laplace_field.csv")})
        rc, _ = run(args.cli, "verify", [write_config(tmp / "flat_disk_laplace.json", mismatch)], *o)
        check(rc == 5, f"verify against different boundary data exits 5 (got {rc})")

        rc, _ = run(args.cli, "convexity", [cfg / "ellipse_convexity.json"], *o)
        ell = json.loads((out / "ellipse_convexity_convexity.json").read_text())
        check(rc == 0 and ell["mean_convexity"]["violations"] > 0, "eccentric ellipse at lambda 2 reports violations")

        for path in sorted(out.glob("*.json")):
            errors = list(validator.iter_errors(json.loads(path.read_text())))
            check(not errors, f"{path.name} validates against the report schema"
                  + (f": {errors[0].message}" if errors else ""))

        # Byte-identical reruns, sequential and with --jobs.
        configs = [cfg / "helicoidal_disk.json", cfg / "catenoid.json", cfg / "p3_annulus.json"]
        first, second = tmp / "r1", tmp / "r2"
        rc1, _ = run(args.cli, "solve", configs, "--out", str(first))
        rc2, _ = run(args.cli, "solve", configs, "--jobs", "3", "--out", str(second))
        check(rc1 == 0 and rc2 == 0, "batch solves exit 0")
        names = sorted(p.name for p in first.iterdir())
        same = names == sorted(p.name for p in second.iterdir()) and all(
            filecmp.cmp(first / n, second / n, shallow=False) for n in names)
        check(same and len(names) > 0, f"{len(names)} artifacts byte-identical across runs and --jobs")
        field = read_csv(first / "catenoid_field.csv")
        check(all(len(v.split("e")[0].replace("-", "").replace(".", "").lstrip("0")) <= 17 for r in field for v in r.values()),
              "CSV floats use at most 17 significant digits")
        check(math.isclose(float(field[0]["value"]), math.acosh(1.5), rel_tol=1e-15), "field CSV round-trips")

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


def strip_comments(text):
    """Parses a config file, dropping whole-line // comments."""
    return json.loads("\n".join(line for line in text.splitlines() if not line.strip().startswith("//")))


if __name__ == "__main__":
    sys.exit(main())
