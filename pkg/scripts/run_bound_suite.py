"""Run every theorem of a suite config through the CLI and print the verdicts."""

import argparse
import io
import json

from rgplab.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/default_suite.json")
    ap.add_argument("--out", default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    code = run(args.config, "verify", out=args.out, threads=args.threads, stdout=io.StringIO())
    if code == 1:
        return code
    buf = io.StringIO()
    code = max(code, run(args.config, "report", out=args.out, stdout=buf))
    for row in json.loads(buf.getvalue())["summary"]:
        if row["name"] == "violation_rate":
            print(f"{row['section']:<24} delta={row['index']:<6} violation_rate={row['value']}")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
