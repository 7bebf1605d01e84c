"""Command-line client for the hydration-site service.

Every verb is a thin HTTP call: by default requests run against an
in-process copy of the service (no socket, no server to start), and
--server points the same calls at a live instance.  File handling stays
on the client side; the service only ever sees inline text.

Exit codes: 0 success, 2 bad config, 3 unparseable input file,
4 empty site grid, 5 solver cap exceeded, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

_EXIT_CODES = {
    "config_error": 2,
    "parse_error": 3,
    "empty_site_grid": 4,
    "solver_cap": 5,
    "internal_error": 1,
}


class ClientError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class ServiceClient:
    """POSTs JSON to the service, in-process unless a server URL is given."""

    def __init__(self, server: str | None = None):
        self._server = server

    def _request(self, path: str, payload: dict) -> httpx.Response:
        if self._server:
            with httpx.Client(base_url=self._server, timeout=None) as client:
                return client.post(path, json=payload)

        import asyncio

        from .service.app import app

        async def go():
            # 500s must come back as JSON bodies, not re-raised tracebacks
            transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://hydrosite",
                                         timeout=None) as client:
                return await client.post(path, json=payload)

        return asyncio.run(go())

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._request(path, payload)
        except httpx.HTTPError as exc:
            raise ClientError("internal_error",
                              f"request to {path} failed: {exc}") from None
        try:
            body = resp.json()
        except ValueError:
            raise ClientError("internal_error",
                              f"{path} returned non-JSON "
                              f"(HTTP {resp.status_code})") from None
        if resp.status_code != 200:
            code = body.get("error_code")
            if code is None:
                # request-shape rejections (422) have no domain code
                code = "config_error" if resp.status_code == 422 else "internal_error"
            message = body.get("message") or json.dumps(body)
            raise ClientError(code, message)
        return body


def _read_text(path, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ClientError("parse_error", f"cannot read {what} {path}: {exc}") from None


def _parse_pocket(text: str):
    if text == "from-waters":
        return text
    parts = text.split(",")
    if len(parts) != 3:
        raise ClientError("config_error",
                          f"pocket must be 'from-waters' or 'x,y,z', got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ClientError("config_error",
                          f"pocket coordinates must be numbers, got {text!r}") from None


def _parse_solver(text: str) -> dict:
    if text.lstrip().startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ClientError("config_error",
                              f"solver JSON is invalid: {exc}") from None
        if not isinstance(spec, dict):
            raise ClientError("config_error", "solver JSON must be an object")
        return spec
    return {"name": text}


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        text = _read_text(args.config, "config")
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ClientError("config_error",
                              f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ClientError("config_error",
                              f"config {args.config} must hold a JSON object")
    overrides = {
        "delta": args.delta, "tau_g": args.tau_g, "sigma2": args.sigma2,
        "side": args.side, "amplitude": args.amplitude,
        "truncation_eps": args.truncation_eps, "radius": args.radius,
        "seed": args.seed, "density_path": args.density, "pdb_path": args.pdb,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    if args.pocket is not None:
        cfg["pocket"] = _parse_pocket(args.pocket)
    if args.solver is not None:
        cfg["solver"] = _parse_solver(args.solver)
    return cfg


def _write_artifacts(artifacts: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in artifacts.items():
        (out / name).write_text(text)
    return out


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _load_inputs(cfg: dict) -> tuple[str, str]:
    density_path = cfg.get("density_path")
    pdb_path = cfg.get("pdb_path")
    if not density_path:
        raise ClientError("config_error",
                          "no density input: set density_path or pass --density")
    if not pdb_path:
        raise ClientError("config_error",
                          "no waters input: set pdb_path or pass --pdb")
    return (_read_text(density_path, "density file"),
            _read_text(pdb_path, "PDB file"))


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out_dir = args.output_dir or cfg.get("output_dir")
    if not out_dir:
        raise ClientError("config_error",
                          "no output directory: pass --output-dir or set "
                          "output_dir in the config")
    cfg["output_dir"] = out_dir
    density_text, pdb_text = _load_inputs(cfg)
    body = ServiceClient(args.server).post(
        "/run", {"config": cfg, "density_text": density_text, "pdb_text": pdb_text})
    out = _write_artifacts(body["artifacts"], out_dir)
    print(f"run: {body['n_vars']} sites, {body['n_couplings']} couplings, "
          f"best cost {body['best_cost']:.6g}")
    metrics = body.get("metrics")
    if metrics and metrics.get("defined"):
        print(f"metrics: C={metrics['C']:.3f} P*={metrics['P_star']:.3f} "
              f"<CS>={metrics['CS_mean']:.3f}")
    elif metrics:
        print(f"metrics: no cluster identified (C={metrics['C']:.3f})")
    else:
        print("metrics: skipped (no reference waters in pocket)")
    print(f"artifacts: {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    axes = {}
    if args.delta_list:
        axes["delta"] = _float_list("delta", args.delta_list)
    if args.tau_g_list:
        axes["tau_g"] = _float_list("tau_g", args.tau_g_list)
    if args.sigma2_list:
        axes["sigma2"] = _float_list("sigma2", args.sigma2_list)
    if args.solver_list:
        axes["solver"] = [s.strip() for s in args.solver_list.split(",") if s.strip()]
    if not axes:
        raise ClientError("config_error",
                          "sweep needs at least one axis (--delta-list, "
                          "--tau-g-list, --sigma2-list, --solver-list)")
    density_text, pdb_text = _load_inputs(cfg)
    payload = {"config": cfg, "axes": axes, "max_workers": args.max_workers,
               "fit_target_n": args.fit_target_n,
               "density_text": density_text, "pdb_text": pdb_text}
    body = ServiceClient(args.server).post("/sweep", payload)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(body["csv_text"])
    if body.get("fit"):
        (out / "scaling_fit.json").write_text(
            json.dumps(body["fit"], sort_keys=True, indent=2) + "\n")
    if args.save_rows:
        for row in body["rows"]:
            if row["artifacts"]:
                _write_artifacts(row["artifacts"], out / f"row_{row['index']:03d}")
    rows = body["rows"]
    n_ok = sum(1 for r in rows if r["status"] == "ok")
    print(f"sweep: {len(rows)} rows ({n_ok} ok, {len(rows) - n_ok} failed) "
          f"-> {out / 'sweep.csv'}")
    for row in rows:
        if row["status"] != "ok":
            print(f"  row {row['index']} [{row['error_code']}]: {row['message']}")
    fit = body.get("fit")
    if fit:
        print(f"fit: a={fit['a']:.4g} b={fit['b']:.4g} c={fit['c']:.4g} "
              f"-> {fit['projected_gates']} gates at N={fit['target_n']}")
    return 0


def _float_list(name: str, text: str) -> list:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ClientError("config_error",
                          f"{name} list must be comma-separated numbers, "
                          f"got {text!r}") from None


def _sidecar_payload(coo_path, sidecar_arg):
    path = Path(sidecar_arg) if sidecar_arg else Path(coo_path).with_suffix(".json")
    if sidecar_arg is None and not path.exists():
        return None
    text = _read_text(path, "QUBO sidecar")
    try:
        sidecar = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ClientError("parse_error",
                          f"sidecar {path} is not valid JSON: {exc}") from None
    if not isinstance(sidecar, dict):
        raise ClientError("parse_error", f"sidecar {path} must hold a JSON object")
    return sidecar


def cmd_solve(args) -> int:
    solver = {"name": args.solver}
    for key in ("num_reads", "sweeps", "layers", "shots", "max_iters"):
        value = getattr(args, key)
        if value is not None:
            solver[key] = value
    for key in ("beta_hot", "beta_cold"):
        value = getattr(args, key)
        if value is not None:
            solver[key] = value
    payload = {"coo_text": _read_text(args.qubo, "QUBO file"),
               "sidecar": _sidecar_payload(args.qubo, args.sidecar),
               "solver": solver, "seed": args.seed}
    body = ServiceClient(args.server).post("/solve", payload)
    result = body["result"]
    _emit(json.dumps(result, sort_keys=True, indent=2) + "\n", args.out)
    if args.out:
        print(f"solve: best cost {result['best']['cost']:.6g} "
              f"({result['solver']}, {result['n']} vars) -> {args.out}")
    return 0


def cmd_score(args) -> int:
    payload = {"crystal_pdb": _read_text(args.crystal, "crystal PDB"),
               "predicted_pdb": _read_text(args.predicted, "predicted PDB"),
               "radius": args.radius}
    body = ServiceClient(args.server).post("/score", payload)
    if args.csv:
        _emit(body["csv_header"] + "\n" + body["csv_row"] + "\n", args.out)
    else:
        _emit(json.dumps(body["metrics"], sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_estimate(args) -> int:
    qubos = []
    for path in args.qubo:
        qubos.append({"coo_text": _read_text(path, "QUBO file"),
                      "sidecar": _sidecar_payload(path, None),
                      "label": Path(path).name})
    payload = {"qubos": qubos, "gates_per_edge": args.gates_per_edge,
               "routing_factor": args.routing_factor, "target_n": args.target_n}
    body = ServiceClient(args.server).post("/estimate", payload)
    out = {"estimates": body["estimates"], "fit": body.get("fit")}
    _emit(json.dumps(out, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("hydrosite.service.app:app", host=args.host, port=args.port,
                log_level="info")
    return 0


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--density", help="density map (OpenDX), overrides density_path")
    p.add_argument("--pdb", help="PDB with crystallographic waters, overrides pdb_path")
    p.add_argument("--pocket", help="'from-waters' or explicit 'x,y,z' center")
    p.add_argument("--side", type=float, help="pocket box side length (angstrom)")
    p.add_argument("--delta", type=float, help="site grid spacing (angstrom)")
    p.add_argument("--tau-g", dest="tau_g", type=float, help="density keep threshold")
    p.add_argument("--sigma2", type=float, help="Gaussian variance (angstrom^2)")
    p.add_argument("--amplitude", type=float, help="Gaussian amplitude A")
    p.add_argument("--truncation-eps", dest="truncation_eps", type=float,
                   help="coupling truncation threshold")
    p.add_argument("--radius", type=float, help="cluster radius for scoring")
    p.add_argument("--solver", help="solver name or JSON spec "
                                    "(exact | sa | greedy | qaoa)")
    p.add_argument("--seed", type=int, help="root seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hydrosite",
        description="Water-site prediction via QUBO over a density map.")
    parser.add_argument("--server",
                        help="service URL; omitted -> run in-process")
    sub = parser.add_subparsers(dest="verb", metavar="verb")

    p = sub.add_parser("run", help="full pipeline: density + waters -> artifacts")
    _add_config_flags(p)
    p.add_argument("--output-dir", dest="output_dir", help="artifact directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="cartesian parameter sweep of full runs")
    _add_config_flags(p)
    p.add_argument("--delta-list", help="comma-separated delta values")
    p.add_argument("--tau-g-list", dest="tau_g_list",
                   help="comma-separated tau_g values")
    p.add_argument("--sigma2-list", help="comma-separated sigma2 values")
    p.add_argument("--solver-list", help="comma-separated solver names")
    p.add_argument("--max-workers", type=int, default=1,
                   help="concurrent sweep rows (default 1)")
    p.add_argument("--fit-target-n", dest="fit_target_n", type=int,
                   help="extrapolate the gate fit to this variable count")
    p.add_argument("--save-rows", action="store_true",
                   help="also write each row's artifacts under row_NNN/")
    p.add_argument("--output-dir", dest="output_dir", required=True,
                   help="where sweep.csv (and row artifacts) go")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve", help="solve a QUBO file, no chemistry involved")
    p.add_argument("qubo", help="COO QUBO file")
    p.add_argument("--sidecar", help="metadata JSON (default: <qubo>.json if present)")
    p.add_argument("--solver", default="sa",
                   choices=["exact", "sa", "greedy", "qaoa"])
    p.add_argument("--num-reads", dest="num_reads", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--beta-hot", dest="beta_hot", type=float)
    p.add_argument("--beta-cold", dest="beta_cold", type=float)
    p.add_argument("--layers", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the result JSON here instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("score", help="score predicted waters against a reference")
    p.add_argument("crystal", help="PDB with reference (crystal) waters")
    p.add_argument("predicted", help="PDB with predicted waters")
    p.add_argument("--radius", type=float, default=3.0)
    p.add_argument("--csv", action="store_true", help="emit the flat CSV row")
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("estimate", help="two-qubit gate estimate for QUBO file(s)")
    p.add_argument("qubo", nargs="+", help="COO QUBO file(s)")
    p.add_argument("--gates-per-edge", dest="gates_per_edge", type=int, default=2)
    p.add_argument("--routing-factor", dest="routing_factor", type=float, default=3.0)
    p.add_argument("--target-n", dest="target_n", type=int,
                   help="also fit + extrapolate to this N (needs >= 3 QUBOs)")
    p.add_argument("--out", help="write the estimate JSON here instead of stdout")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ClientError as err:
        print(f"error [{err.code}]: {err.message}", file=sys.stderr)
        return _EXIT_CODES.get(err.code, 1)


if __name__ == "__main__":
    sys.exit(main())
