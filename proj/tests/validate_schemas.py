#!/usr/bin/env python3
"""Run the CLI on a small problem and validate its JSON output against schemas/."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def load_schema(root, name):
    return json.loads((root / "schemas" / name).read_text())


def run(cmd, expect):
    p = subprocess.run(cmd, capture_output=True, text=True)
    if p.returncode != expect:
        sys.exit(f"{' '.join(cmd)}: exit {p.returncode}, wanted {expect}\n{p.stderr}")
    return p


def main():
    cli, root = sys.argv[1], pathlib.Path(sys.argv[2])
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        series, truth, fit = tmp / "x.tts", tmp / "truth.json", tmp / "fit.json"
        run([cli, "simulate", "-c", "I", "--dims", "8", "8", "--T", "120", "--seed", "4",
             "--out", str(series), "--truth", str(truth)], 0)
        jsonschema.validate(json.loads(truth.read_text()), load_schema(root, "model.schema.json"))

        for method in ("cPCA", "HOPE", "cOALS", "ALS"):
            run([cli, "fit", "-i", str(series), "--r", "2", "-m", method, "--restarts", "3",
                 "--seed", "1", "--out", str(fit)], 0)
            jsonschema.validate(json.loads(fit.read_text()), load_schema(root, "fit_result.schema.json"))

        spec = {"config": "I", "overrides": {"dims": [8, 8], "T": 100}, "replications": 2,
                "methods": ["cPCA", "HOPE"], "sweep": {"variable": "delta", "values": [0.0, 0.1, 0.2]},
                "seed": 3, "timing": False}
        jsonschema.validate(spec, load_schema(root, "benchmark_spec.schema.json"))
        (tmp / "spec.json").write_text(json.dumps(spec))
        run([cli, "benchmark", "-s", str(tmp / "spec.json"), "-o", str(tmp / "bench")], 0)
        jsonschema.validate(json.loads((tmp / "bench" / "spec.json").read_text()),
                            load_schema(root, "benchmark_spec.schema.json"))

        err_schema = load_schema(root, "error.schema.json")
        for cmd, code in (([cli, "fit", "-i", str(series), "--r", "0"], 2),
                          ([cli, "fit", "-i", str(tmp / "missing.tts"), "--r", "2"], 2),
                          ([cli, "fit", "-i", str(truth), "--format", "tts1", "--r", "2"], 1)):
            p = run(cmd, code)
            last = [line for line in p.stderr.splitlines() if line.startswith("{")][-1]
            doc = json.loads(last)
            jsonschema.validate(doc, err_schema)
            if doc["error"]["exit_code"] != code:
                sys.exit(f"error JSON exit_code {doc['error']['exit_code']} != {code}")
    print("schemas ok")


if __name__ == "__main__":
    main()
