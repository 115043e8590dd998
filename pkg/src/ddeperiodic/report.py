"""Analysis report assembly and JSON emission.

Reports are self-contained: they embed the parsed configuration and the seed,
so re-running with the embedded settings reproduces every value.  Keys are
sorted and floats use repr formatting, which makes byte-identical output for
identical runs (the timestamp field is the one intentional exception).
"""

from __future__ import annotations

import json
import time
from importlib import metadata
from pathlib import Path

import numpy
import scipy

SCHEMA_VERSION = 1


def package_version():
    try:
        return metadata.version("ddeperiodic")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def make_report(command, raw_config, seed, **fragments):
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "provenance": {
            "package_version": package_version(),
            "numpy_version": numpy.__version__,
            "scipy_version": scipy.__version__,
            "seed": int(seed),
            "config": raw_config,
        },
        "status": {"ok": True, "failures": []},
        "files": {"csv": [], "figures": []},
    }
    report.update(fragments)
    return report


def flag_failure(report, message):
    report["status"]["ok"] = False
    report["status"]["failures"].append(message)


def write_report(out_dir, report):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True, allow_nan=True)
        handle.write("\n")
    return path


def schema_path():
    return Path(__file__).resolve().parent / "report_schema.json"


def load_schema():
    with open(schema_path(), "r", encoding="utf-8") as handle:
        return json.load(handle)
