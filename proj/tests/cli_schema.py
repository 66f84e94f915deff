"""Runs the CLI and validates its JSON output against schema/result.schema.json."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

WORK_STUDY_CFG = """
[model]
name = nonlinear-scalar
[prior]
kind = uniform
lower = 0
upper = 1
[noise]
variance = 1e-3
[design]
xi = 1
[experiment]
repeats = 10
[run]
estimator = dlmcis mcla
tol = 0.5 0.2
replicates = 1
seed = 3
"""

MESH_CFG = """
[model]
name = synthetic-mesh
base = nonlinear-scalar
c_bias = 1
eta = 1
gamma = 1
[prior]
kind = uniform
lower = 0
upper = 1
[noise]
variance = 1e-3
[design]
xi = 1
[experiment]
repeats = 10
[run]
estimator = dlmcis
tol = 0.5
seed = 4
"""


def run(cli, *args):
    proc = subprocess.run([cli, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr}")


def main():
    cli, source = sys.argv[1], Path(sys.argv[2])
    schema = json.loads((source / "schema" / "result.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "work.cfg").write_text(WORK_STUDY_CFG)
        (tmp / "mesh.cfg").write_text(MESH_CFG)
        run(cli, "estimate", "--config", str(source / "configs" / "example1.cfg"), "--out", str(tmp / "e1"))
        run(cli, "estimate", "--config", str(tmp / "mesh.cfg"), "--out", str(tmp / "mesh"))
        run(cli, "tune", "--config", str(source / "configs" / "example2.cfg"), "--out", str(tmp / "t2"))
        run(cli, "work-study", "--config", str(tmp / "work.cfg"), "--out", str(tmp / "ws"))

        documents = [tmp / "e1" / "estimate.json", tmp / "mesh" / "estimate.json", tmp / "t2" / "tune.json",
                     tmp / "ws" / "work_study_slopes.json"]
        failures = 0
        for path in documents:
            doc = json.loads(path.read_text())
            errors = list(validator.iter_errors(doc))
            for e in errors:
                print(f"{path.relative_to(tmp)}: {e.json_path}: {e.message}")
            failures += len(errors)
            print(f"{path.relative_to(tmp)}: {'ok' if not errors else 'INVALID'}")

        mesh = json.loads((tmp / "mesh" / "estimate.json").read_text())
        if not isinstance(mesh["setting"]["h"], float):
            print("meshed estimate has no numeric h")
            failures += 1

        broken = json.loads((tmp / "e1" / "estimate.json").read_text())
        broken["setting"]["kappa"] = 1.5
        if validator.is_valid(broken):
            print("schema accepted kappa = 1.5")
            failures += 1

    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
