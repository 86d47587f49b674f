"""Runs the sgain executable and validates its JSON output against docs/schemas."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

exe, schema_dir = sys.argv[1], Path(sys.argv[2])


def run(*args):
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    if proc.returncode not in (0, 2):
        sys.exit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr}")
    return proc.stdout


def check(name, document):
    jsonschema.validate(document, json.loads((schema_dir / f"{name}.json").read_text()))
    print(f"ok {name}")


for builtin in ("remark4", "example45", "competitive"):
    check("certificate", json.loads(run("check", "--builtin", builtin)))
check("lyapunov", json.loads(run("lyapunov", "--builtin", "example46", "--ensemble", "2", "--horizon", "5", "--dt", "1e-2")))
with tempfile.TemporaryDirectory() as out:
    run("equilibrium", "--builtin", "goodwin", "--ensemble", "2", "--window", "10", "--dt", "1e-2", "--out", out)
    check("equilibrium", json.loads((Path(out) / "equilibrium.json").read_text()))
