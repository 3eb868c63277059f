"""Reference child process for the external objective protocol.

Reads ``{"x": [...]}`` lines on stdin and answers ``{"kwh": value}`` using the
synthetic landscape. Exits when stdin closes. Useful as a template for wrapping
a real building simulator::

    python -m shapebench.synthetic_worker [--params params.json]
"""
import argparse
import json
import sys

from .objectives import SyntheticParams, synthetic_evaluate


def serve(params: SyntheticParams, stdin=sys.stdin, stdout=sys.stdout):
    for line in stdin:
        if not line.strip():
            continue
        try:
            x = json.loads(line)["x"]
            reply = {"kwh": synthetic_evaluate(params, x)}
        except Exception as e:  # report, keep serving
            reply = {"error": f"{type(e).__name__}: {e}"}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python -m shapebench.synthetic_worker")
    ap.add_argument("--params", help="JSON file with SyntheticParams fields")
    args = ap.parse_args(argv)
    params = SyntheticParams()
    if args.params:
        with open(args.params) as fh:
            params = SyntheticParams(**json.load(fh))
    serve(params)


if __name__ == "__main__":
    main()
