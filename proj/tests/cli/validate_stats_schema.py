"""Validates stats.json written by edm-rulex against the published JSON schema.

usage: validate_stats_schema.py <edm-rulex> <schema.json> <work dir>
"""

import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema


def main() -> int:
    binary, schema_path, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    shutil.rmtree(work, ignore_errors=True)
    schema = json.loads(schema_path.read_text())
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    for seed in (1, 7, 42):
        out = work / f"seed{seed}"
        for stage in ("generate", "stats"):
            subprocess.run([binary, stage, "--seed", str(seed), "--out", str(out)], check=True,
                           stderr=subprocess.DEVNULL)
        doc = json.loads((out / "stats.json").read_text())
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        for err in errors:
            print(f"seed {seed}: {'/'.join(map(str, err.path))}: {err.message}")
        failures += len(errors)
        print(f"seed {seed}: {'valid' if not errors else f'{len(errors)} error(s)'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
