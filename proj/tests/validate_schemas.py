"""Runs the CLI on shipped configs and validates outputs against the JSON schemas."""
import json
import pathlib
import subprocess
import sys

import jsonschema


def load(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def main():
    cli, source, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    schemas = {name: load(source / "schemas" / f"{name}.schema.json")
               for name in ("config", "theory-report", "checkpoint")}
    failures = 0

    def check(doc, schema, label):
        nonlocal failures
        try:
            jsonschema.validate(doc, schemas[schema])
            print(f"ok    {label}")
        except jsonschema.ValidationError as e:
            failures += 1
            print(f"FAIL  {label}: {e.message}")

    for cfg in sorted((source / "configs").glob("*.json")):
        if cfg.name != "baseline_costs.json":
            check(load(cfg), "config", f"config {cfg.name}")

    runs = [("theory", "qw2.json", "theory_qw2"),
            ("theory", "identical_theory.json", "theory_identical"),
            ("pipeline", "qw2.json", "pipeline_qw2")]
    for command, cfg, out in runs:
        out_dir = work / out
        subprocess.run([cli, command, "--config", str(source / "configs" / cfg), "--out", str(out_dir)],
                       check=True, stdout=subprocess.DEVNULL)

    for out in ("theory_qw2", "theory_identical"):
        check(load(work / out / "theory_report.json"), "theory-report", f"{out}/theory_report.json")
    for ckpt in sorted((work / "pipeline_qw2" / "experts").glob("*.ckpt")):
        check(load(ckpt), "checkpoint", f"pipeline_qw2/experts/{ckpt.name}")

    # Invalid documents must be rejected too.
    bad = load(source / "configs" / "qw2.json")
    bad["unexpected"] = True
    try:
        jsonschema.validate(bad, schemas["config"])
        failures += 1
        print("FAIL  config schema accepted an unknown key")
    except jsonschema.ValidationError:
        print("ok    config schema rejects unknown keys")

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
