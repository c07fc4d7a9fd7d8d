"""Command-line front end.

The CLI is a thin client of the laboratory service: by default it mounts the
service in-process (no network), or talks to a remote instance given
--server URL.  Artifacts returned by the service are written under --out.
"""

from __future__ import annotations

import argparse
import base64
import os
import sys as _sys

import httpx

from .config import RunConfig, load_config, parse_grid
from .errors import ConfigError


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _load(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.grid is not None:
        cfg.grid = parse_grid(args.grid)
    if args.iters is not None:
        cfg.iters = args.iters
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _say(args, *parts):
    if not args.quiet:
        print(*parts)


def _post(client, path, payload):
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            body = resp.json()
            raise ConfigError(f"{body.get('error', 'error')}: {body.get('detail', resp.text)}")
        except ValueError:
            raise ConfigError(f"service error {resp.status_code}: {resp.text[:300]}")
    return resp.json()


def _write_csv(args, cfg, artifact):
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, artifact["name"])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(artifact["text"])
    _say(args, f"wrote {path}")
    return path


def _write_pgm(args, cfg, artifact):
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, artifact["name"])
    with open(path, "wb") as fh:
        fh.write(base64.b64decode(artifact["data_b64"]))
    _say(args, f"wrote {path}")
    return path


def cmd_build(args, client, cfg):
    body = _post(client, "/build", {"config": cfg.to_dict()})
    print(f"lambda = {body['lam']:.12f}")
    print(f"r_star = {body['r_star']:.12g}")
    print(f"t_star = {body['t_star']:.12g}")
    _say(args, f"v_u = {body['v_u']}")
    _say(args, f"v_s = {body['v_s']}")
    _say(args, f"gluing = {body['gluing_kind']}, n = {body['n_exponent']}")
    return 0


def cmd_check(args, client, cfg):
    body = _post(
        client, f"/check/{args.name}", {"config": cfg.to_dict(), "samples": cfg.check_samples}
    )
    state = "ok" if body["passed"] else "FAILED"
    print(
        f"check {body['name']}: {state} (max residual {body['max_residual']:.3e}, "
        f"tol {body['tolerance']:.1e})"
    )
    _say(args, f"worst sample: {body['worst_sample']}")
    _say(args, body["detail"])
    return 0 if body["passed"] else 1


def cmd_iterate(args, client, cfg):
    body = _post(client, "/iterate", {"config": cfg.to_dict(), "steps": cfg.iters})
    _write_csv(args, cfg, body["csv"])
    _say(args, f"orbit of {body['steps']} steps written")
    return 0


def cmd_attractor(args, client, cfg):
    body = _post(
        client,
        "/attractor",
        {"config": cfg.to_dict(), "grid_density": cfg.attractor_density, "iters": cfg.iters},
    )
    _write_csv(args, cfg, body["csv"])
    _write_pgm(args, cfg, body["pgm"])
    print(
        f"attractor cloud: {body['points']} points, z extent {body['z_extent']:.3e}, "
        f"min margin {body['min_margin']:.3e}"
    )
    return 0


def cmd_tangency(args, client, cfg):
    body = _post(
        client,
        "/tangency",
        {"config": cfg.to_dict(), "grid": list(cfg.grid), "tangency_tol": cfg.tangency_tol},
    )
    _write_csv(args, cfg, body["csv"])
    _write_pgm(args, cfg, body["pgm"])
    print(
        f"tangency scan ({cfg.gluing_kind}): {body['loci']} loci of {body['nodes']} nodes; "
        f"in-band loci {body['loci_in_band']} (|y| < {body['band_halfwidth']:.4g}); "
        f"min gap {body['min_gap']:.3e}, refined {body['min_refined_gap']:.3e}"
    )
    return 0


def cmd_energy(args, client, cfg):
    if args.stage == "build":
        body = _post(client, "/energy/build", {"config": cfg.to_dict()})
        _write_csv(args, cfg, body["gamma_csv"])
        _write_csv(args, cfg, body["g_csv"])
        print(f"energy function built (eps3 = {body['eps3']:.6f})")
        return 0
    body = _post(
        client, "/energy/verify", {"config": cfg.to_dict(), "budget": cfg.energy_budget}
    )
    _write_csv(args, cfg, body["margins_csv"])
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "energy_report.txt")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(body["report"])
    _say(args, f"wrote {path}")
    print(body["report"], end="")
    return 0 if body["passed"] else 1


def cmd_serve(args, client, cfg):
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


_FLAG_DEFAULTS = {
    "config": None,
    "out": None,
    "seed": None,
    "grid": None,
    "iters": None,
    "quiet": False,
    "server": None,
}


def _common_flags():
    # flags accepted both before and after the subcommand; SUPPRESS keeps the
    # subparser from clobbering a value parsed by the main parser
    common = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    common.add_argument("--config", metavar="PATH", default=s, help="flat key = value config file")
    common.add_argument("--out", metavar="DIR", default=s, help="artifact output directory")
    common.add_argument("--seed", type=int, metavar="N", default=s, help="override the RNG seed")
    common.add_argument("--grid", metavar="NxMxK", default=s, help="override the scan grid")
    common.add_argument("--iters", type=int, metavar="N", default=s, help="override iteration count")
    common.add_argument("--quiet", action="store_true", default=s, help="suppress informational output")
    common.add_argument("--server", metavar="URL", default=s, help="remote service URL (default: in-process)")
    return common


def make_parser():
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="hyperdyn",
        description="Numerical laboratory for glued surface attractor-repeller dynamics.",
        parents=[_common_flags()],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "build", parents=[common], help="construct the system; print lambda, r_star, t_star"
    )
    p = sub.add_parser("check", parents=[common], help="run a named invariant check")
    p.add_argument("name", choices=["profile", "commutation", "trapping", "theta", "partition"])
    sub.add_parser("iterate", parents=[common], help="write an orbit CSV")
    sub.add_parser(
        "attractor", parents=[common], help="write the attractor cloud CSV and density PGM"
    )
    sub.add_parser(
        "tangency", parents=[common], help="run the transversality scan; write CSV and PGM"
    )
    p = sub.add_parser("energy", parents=[common], help="build or verify the energy function")
    p.add_argument("stage", choices=["build", "verify"])
    p = sub.add_parser("serve", parents=[common], help="run the laboratory as an HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8471)
    return parser


_COMMANDS = {
    "build": cmd_build,
    "check": cmd_check,
    "iterate": cmd_iterate,
    "attractor": cmd_attractor,
    "tangency": cmd_tangency,
    "energy": cmd_energy,
    "serve": cmd_serve,
}


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    for name, default in _FLAG_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    try:
        with _client(args.server) as client:
            return _COMMANDS[args.command](args, client, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
