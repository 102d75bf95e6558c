"""Command-line reproduction harness.

Every subcommand is a thin client of the HTTP service: by default the app
is driven in-process (no socket); ``--server URL`` points the same calls at
a remote instance, and ``serve`` runs one.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import httpx


class _JsonArgumentParser(argparse.ArgumentParser):
    """argparse that emits machine-readable errors."""

    def error(self, message: str):
        print(json.dumps({"error": {"type": "UsageError", "message": message}}),
              file=sys.stderr)
        raise SystemExit(2)


class CliError(RuntimeError):
    def __init__(self, payload: dict):
        super().__init__(payload.get("error", {}).get("message", "error"))
        self.payload = payload


def _client(server: Optional[str]):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app)


def _post(client, path: str, payload: dict):
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            body = resp.json()
        except ValueError:
            body = {"error": {"type": "HTTPError",
                              "message": "status %d" % resp.status_code}}
        if "error" not in body:  # pydantic validation errors arrive as {"detail": ...}
            body = {"error": {"type": "ValidationError", "message": json.dumps(body)}}
        raise CliError(body)
    return resp


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _problem_config(args) -> dict:
    if args.config:
        with open(args.config) as fh:
            return json.load(fh)
    coarsening = args.coarsening
    if coarsening is None:
        coarsening = "rediscretize" if args.problem == "poisson" else "galerkin"
    return {"problem": args.problem, "n": args.n, "seed": args.seed,
            "relax": {"kind": args.relax, "omega": args.omega},
            "nu1": args.nu1, "nu2": args.nu2, "coarsening": coarsening}


def _bounds_spec(args) -> dict:
    spec = {"source": args.bounds, "assume_b1_zero": args.assume_b1_zero,
            "power_iters": args.power_iters}
    if args.b1 is not None:
        spec["b1"] = args.b1
    if args.bN is not None:
        spec["bN"] = args.bN
    return spec


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="problem config JSON file")
    p.add_argument("--problem", default="poisson",
                   choices=["poisson", "diffusion-lognormal", "diffusion-uniform"])
    p.add_argument("--n", type=int, default=128, help="grid cells per side (power of two)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--relax", choices=["jacobi", "rb-gs", "lex-gs"], default="jacobi")
    p.add_argument("--omega", type=float, default=0.8)
    p.add_argument("--nu1", type=int, default=1)
    p.add_argument("--nu2", type=int, default=1)
    p.add_argument("--coarsening", choices=["rediscretize", "galerkin"], default=None,
                   help="default: rediscretize for poisson, galerkin otherwise")


def _add_bounds_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bounds", choices=["explicit", "smoothing", "analytic", "power"],
                   default="analytic", help="where (b1, bN) come from")
    p.add_argument("--b1", type=float, default=None)
    p.add_argument("--bN", type=float, default=None)
    p.add_argument("--assume-b1-zero", action="store_true")
    p.add_argument("--power-iters", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonArgumentParser(prog="nestersolve")
    parser.add_argument("--server", default=None,
                        help="remote service URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True,
                               parser_class=_JsonArgumentParser)

    p = sub.add_parser("coef",
                       help="optimal momentum coefficient for bounds (b1, bN)")
    p.add_argument("--b1", type=float, required=True)
    p.add_argument("--bN", type=float, required=True)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("region",
                       help="complex-plane robustness region CSV over [-1,1]^2")
    p.add_argument("--b1", type=float, required=True)
    p.add_argument("--bN", type=float, required=True)
    p.add_argument("--grid", type=int, default=401, help="points per axis")
    p.add_argument("--out", required=True, help="output CSV path, - for stdout")

    p = sub.add_parser("damping-sweep",
                       help="predicted vs measured factors across Jacobi damping")
    p.add_argument("--omega-min", type=float, default=0.55)
    p.add_argument("--omega-max", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path, - for stdout")

    p = sub.add_parser("solve",
                       help="run one configured solve")
    _add_problem_args(p)
    _add_bounds_args(p)
    p.add_argument("--accel", choices=["none", "nesterov", "chebyshev", "pcg", "gmres"],
                   default="none")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--trace-out", default=None, help="write trace CSV here")
    p.add_argument("--out", default=None, help="write summary JSON here (default stdout)")
    p.add_argument("--no-timing", action="store_true",
                   help="blank the timing fields for byte-identical reruns")

    p = sub.add_parser("compare",
                       help="race several accelerators on one problem")
    _add_problem_args(p)
    _add_bounds_args(p)
    p.add_argument("--accels", default="none,nesterov,chebyshev,pcg",
                   help="comma-separated accelerator list")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--trace-dir", default=None, help="write per-accelerator trace CSVs here")
    p.add_argument("--out", default=None, help="write summary JSON here (default stdout)")
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("estimate",
                       help="power-method extreme eigenvalue estimates for a config")
    _add_problem_args(p)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--shift", type=float, default=None)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("serve",
                       help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _strip_timing(summary: dict) -> dict:
    summary = dict(summary)
    summary["seconds"] = None
    return summary


def _cmd_coef(client, args) -> int:
    resp = _post(client, "/coef", {"b1": args.b1, "bN": args.bN})
    data = resp.json()
    if args.as_json:
        print(json.dumps(data, indent=2))
    else:
        print("c_star  = %.9g" % data["c_star"])
        print("r_star  = %.9g" % data["r_star"])
        print("regime  = %s%s" % (data["regime"], " (extended)" if data["extended"] else ""))
        print("radius  = %.9g" % data["robustness_radius"])
        if data["acceleration_ratio"] is not None:
            print("AR      = %.9g" % data["acceleration_ratio"])
        else:
            print("AR      = undefined (%s)" % data["acceleration_ratio_note"])
    return 0


def _cmd_region(client, args) -> int:
    resp = _post(client, "/region.csv",
                 {"b1": args.b1, "bN": args.bN, "grid_n": args.grid})
    _write_text(args.out, resp.text)
    return 0


def _cmd_damping_sweep(client, args) -> int:
    from .experiments import render_damping_csv
    from .schemas import DampingSweepRow
    resp = _post(client, "/damping-sweep",
                 {"omega_min": args.omega_min, "omega_max": args.omega_max,
                  "step": args.step, "n": args.n, "seed": args.seed})
    rows = [DampingSweepRow(**r) for r in resp.json()["rows"]]
    _write_text(args.out, render_damping_csv(rows))
    return 0


def _render_solve_outputs(args, result: dict, trace_path: Optional[str]) -> dict:
    from .experiments import render_trace_csv
    from .schemas import TraceRow
    if trace_path:
        rows = [TraceRow(**r) for r in result["trace"]]
        _write_text(trace_path, render_trace_csv(rows, include_timing=not args.no_timing))
    summary = result["summary"]
    if args.no_timing:
        summary = _strip_timing(summary)
    return summary


def _cmd_solve(client, args) -> int:
    payload = {"config": _problem_config(args), "accel": args.accel,
               "bounds": _bounds_spec(args), "tol": args.tol, "max_iter": args.max_iter}
    resp = _post(client, "/solve", payload)
    summary = _render_solve_outputs(args, resp.json(), args.trace_out)
    _write_text(args.out, json.dumps(summary, indent=2) + "\n")
    return 0 if summary["converged"] else 3


def _cmd_compare(client, args) -> int:
    import os
    accels = [a.strip() for a in args.accels.split(",") if a.strip()]
    payload = {"config": _problem_config(args), "accels": accels,
               "bounds": _bounds_spec(args), "tol": args.tol, "max_iter": args.max_iter}
    resp = _post(client, "/compare", payload)
    summaries = []
    for result in resp.json()["results"]:
        trace_path = None
        if args.trace_dir:
            os.makedirs(args.trace_dir, exist_ok=True)
            trace_path = os.path.join(args.trace_dir,
                                      "trace_%s.csv" % result["summary"]["accel"])
        summaries.append(_render_solve_outputs(args, result, trace_path))
    _write_text(args.out, json.dumps({"results": summaries}, indent=2) + "\n")
    return 0


def _cmd_estimate(client, args) -> int:
    payload = {"config": _problem_config(args), "iters": args.iters, "seed": args.seed}
    if args.shift is not None:
        payload["shift"] = args.shift
    resp = _post(client, "/estimate", payload)
    data = resp.json()
    if args.as_json:
        print(json.dumps(data, indent=2))
    else:
        flag = " (complex-dominant: magnitude only)" if data["complex_dominant"] else ""
        print("dominant = %.9g%s" % (data["dominant"], flag))
        print("opposite = %.9g" % data["opposite"])
        if data["smoothing_bN"] is not None:
            print("smoothing analysis: b1 = %.9g, bN = %.9g"
                  % (data["smoothing_b1"], data["smoothing_bN"]))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    handlers = {
        "coef": _cmd_coef,
        "region": _cmd_region,
        "damping-sweep": _cmd_damping_sweep,
        "solve": _cmd_solve,
        "compare": _cmd_compare,
        "estimate": _cmd_estimate,
    }
    client = _client(args.server)
    try:
        return handlers[args.command](client, args)
    except CliError as err:
        print(json.dumps(err.payload), file=sys.stderr)
        return 1
    except OSError as err:
        print(json.dumps({"error": {"type": type(err).__name__, "message": str(err)}}),
              file=sys.stderr)
        return 1
    finally:
        client.close()


if __name__ == "__main__":
    raise SystemExit(main())
