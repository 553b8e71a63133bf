"""Command-line front end.

Subcommands: ``capacity``, ``lowfreq``, ``mie``, ``raytrace``, ``fig1``,
``compare``.  Outputs are CSV/JSON only; every file carries the artifact
version, a config echo and the direction convention, and reruns with the
same config are byte-identical.

Exit codes: 0 ok, 2 config error, 3 mesh/topology error, 4 solver error,
5 trust-region violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

__version__ = "0.1.0"

_CONVENTION = "incident direction is +z; forward means cos_theta near +1"


class ConfigError(ValueError):
    pass


def _set_thread_budget(threads: int | None) -> None:
    # must run before numpy is first imported to reach the BLAS pools
    if threads is None:
        return
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(threads)


def _parse_body(spec: str):
    from . import geometry

    kind, _, rest = spec.partition(":")
    try:
        params = [float(s) for s in rest.split(",")] if rest else []
    except ValueError:
        raise ConfigError(f"--body: bad numeric parameter in {spec!r}") from None
    try:
        if kind == "sphere" and len(params) == 1:
            return geometry.Sphere(params[0])
        if kind == "ellipsoid" and len(params) == 3:
            return geometry.Ellipsoid(*params)
        if kind == "cylinder" and len(params) == 2:
            return geometry.CappedCylinder(*params)
    except ValueError as exc:
        raise ConfigError(f"--body: {exc}") from None
    raise ConfigError(
        f"--body: expected sphere:R | ellipsoid:A,B,C | cylinder:R,H, got {spec!r}"
    )


def _resolve_mesh(args):
    from . import geometry

    if bool(args.body) == bool(args.mesh):
        raise ConfigError("exactly one of --body and --mesh is required")
    if args.mesh:
        return geometry.load_mesh(args.mesh)
    if not 0 <= args.level <= 6:
        raise ConfigError("--level must be in [0, 6]")
    return geometry.make_body(_parse_body(args.body), args.level)


def _k_grid(args):
    import numpy as np

    if args.k_min <= 0:
        raise ConfigError("--k-min must be positive")
    if args.k_max <= args.k_min:
        raise ConfigError("--k-max must exceed --k-min")
    if args.samples < 2:
        raise ConfigError("--samples must be >= 2")
    if args.log:
        return np.geomspace(args.k_min, args.k_max, args.samples)
    return np.linspace(args.k_min, args.k_max, args.samples)


def _config_echo(args) -> str:
    skip = {"func", "threads"}
    parts = [args.command]
    for key in sorted(vars(args)):
        if key in skip or key == "command":
            continue
        value = getattr(args, key)
        if value is not None and value is not False:
            parts.append(f"{key}={value}")
    return " ".join(parts)


def _body_note(args) -> str | None:
    # capacity/expansion theory assumes a smooth surface; flag bodies with
    # edges or corners in their reports
    body = getattr(args, "body", None)
    if body and body.startswith("cylinder"):
        return "non-smooth body (edges); smooth-surface theory applied as-is"
    return None


def _headers(args) -> list[str]:
    lines = [
        f"hardscatter {__version__}",
        f"config: {_config_echo(args)}",
        f"direction convention: {_CONVENTION}",
    ]
    note = _body_note(args)
    if note:
        lines.append(f"note: {note}")
    return lines


def _meta(args) -> dict:
    meta = {
        "artifact": f"hardscatter {__version__}",
        "config": _config_echo(args),
        "convention": _CONVENTION,
    }
    note = _body_note(args)
    if note:
        meta["note"] = note
    return meta


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sibling(path: str, suffix: str) -> str:
    stem, dot, ext = path.rpartition(".")
    if not dot:
        return path + suffix
    return f"{stem}{suffix}.{ext}" if ext != "json" else f"{stem}{suffix}.csv"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_capacity(args) -> int:
    from . import potential

    mesh = _resolve_mesh(args)
    value = potential.capacity(mesh)
    _write_json(args.out, {"meta": _meta(args), "capacity": value,
                           "triangles": mesh.n_triangles})
    return 0


def _cmd_lowfreq(args) -> int:
    from . import lowfreq

    mesh = _resolve_mesh(args)
    quad = lowfreq.make_quadrature(args.quad_theta, args.quad_phi)
    densities = lowfreq.solve_expansion_densities(mesh)
    fn = lowfreq.functionals(mesh, quad, densities)
    thm = lowfreq.theorem1_check(fn)
    payload = {"meta": _meta(args), **lowfreq.report_dict(fn, thm)}
    _write_json(args.out, payload)
    amp = lowfreq.amplitude_expansion(mesh, quad, densities)
    lowfreq.amplitude_to_csv(amp, _sibling(args.out, "_f12"), _headers(args))
    if args.k_min is not None:
        if args.k_max is None:
            raise ConfigError("--k-max is required when --k-min is given")
        rows = []
        for k in _k_grid(args):
            sigma, sigma_t = lowfreq.cross_sections_lowfreq(amp, float(k))
            rows.append((float(k), sigma, sigma_t))
        with open(_sibling(args.out, "_sigma"), "w", encoding="utf-8") as fh:
            for line in _headers(args):
                fh.write(f"# {line}\n")
            fh.write("k,sigma,sigma_T\n")
            for k, s, st in rows:
                fh.write(f"{k:.17g},{s:.17g},{st:.17g}\n")
    return 0


def _cmd_mie(args) -> int:
    from . import sphere_oracle
    from .geometry import Sphere

    body = _parse_body(args.body)
    if not isinstance(body, Sphere):
        raise ConfigError("--body: mie needs a sphere body")
    sphere_oracle.sweep_to_csv(args.out, body.radius, _k_grid(args), _headers(args))
    return 0


def _cmd_fig1(args) -> int:
    from . import sphere_oracle

    sphere_oracle.fig1_to_csv(args.out, _k_grid(args), header_lines=_headers(args))
    return 0


def _cmd_raytrace(args) -> int:
    from . import classical

    if bool(args.body) == bool(args.mesh):
        raise ConfigError("exactly one of --body and --mesh is required")
    # analytic bodies trace against their exact surfaces
    body = _resolve_mesh(args) if args.mesh else _parse_body(args.body)
    result = classical.trace(body, grid=args.grid)
    classical.trace_to_csv(result, args.out, _headers(args))
    classical.histogram_to_csv(result.histogram, _sibling(args.out, "_histogram"),
                               _headers(args))
    return 0


def _cmd_compare(args) -> int:
    import numpy as np

    from . import classical, lowfreq, sphere_oracle
    from .geometry import Sphere

    if args.mesh or not args.body:
        raise ConfigError("--body: compare needs an analytic sphere (sphere:R)")
    body = _parse_body(args.body)
    if not isinstance(body, Sphere):
        raise ConfigError("--body: compare needs a sphere body")
    mesh = _resolve_mesh(args)
    fn = lowfreq.functionals(mesh)
    oracle = sphere_oracle.low_k_extrapolate(body.radius)
    ka_grid = np.array([50.0, 100.0, 200.0])
    highk = classical.theorem2_check(body.radius, ka_grid, grid=args.grid)
    payload = {
        "meta": _meta(args),
        "d2_bem": fn.d2,
        "d2_oracle": oracle.d2,
        "d2_rel_diff": abs(fn.d2 / oracle.d2 - 1.0),
        "capacity_bem": fn.capacity,
        "capacity_oracle": oracle.capacity,
        "highk": {
            "ka": list(highk.ka),
            "sigma_over_2sigma_cl": list(highk.sigma_ratio),
            "sigmaT_over_Rcl": list(highk.sigma_t_ratio),
            "transport_below_total": highk.transport_below_total,
        },
    }
    _write_json(args.out, payload)
    return 0


# ---------------------------------------------------------------------------


def _add_body_options(p, with_level=True):
    p.add_argument("--body", help="sphere:R | ellipsoid:A,B,C | cylinder:R,H")
    p.add_argument("--mesh", help="path to an OFF mesh")
    if with_level:
        p.add_argument("--level", type=int, default=4,
                       help="refinement level for analytic bodies (0..6)")


def _add_k_options(p, required=False):
    p.add_argument("--k-min", dest="k_min", type=float,
                   default=(0.05 if required else None))
    p.add_argument("--k-max", dest="k_max", type=float,
                   default=(60.0 if required else None))
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--log", action="store_true", help="logarithmic k grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardscatter",
        description="Cross sections of hard bodies: boundary-integral "
        "expansion, exact sphere series, and classical rays.",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="thread budget handed to the linear algebra")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="electrostatic capacity of a body")
    _add_body_options(p)
    p.add_argument("--out", default="capacity.json")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("lowfreq", help="small-k expansion report and checks")
    _add_body_options(p)
    p.add_argument("--quad-theta", dest="quad_theta", type=int, default=64)
    p.add_argument("--quad-phi", dest="quad_phi", type=int, default=128)
    _add_k_options(p)
    p.add_argument("--out", default="lowfreq.json")
    p.set_defaults(func=_cmd_lowfreq)

    p = sub.add_parser("mie", help="exact hard-sphere sweep")
    p.add_argument("--body", required=True, help="sphere:R")
    _add_k_options(p, required=True)
    p.add_argument("--out", default="mie.csv")
    p.set_defaults(func=_cmd_mie)

    p = sub.add_parser("raytrace", help="classical ray tracing")
    _add_body_options(p)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--out", default="raytrace.csv")
    p.set_defaults(func=_cmd_raytrace)

    p = sub.add_parser("fig1", help="oracle sweep at radius 1/sqrt(pi) with "
                                    "classical reference lines")
    _add_k_options(p, required=True)
    p.add_argument("--out", default="fig1.csv")
    p.set_defaults(func=_cmd_fig1)

    p = sub.add_parser("compare", help="expansion vs oracle (sphere), "
                                       "oracle vs classical at high k")
    _add_body_options(p)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--out", default="compare.json")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_thread_budget(args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    # imported only after the thread budget is in the environment
    from .geometry import MeshError
    from .lowfreq import TrustRegionError
    from .potential import SolverError

    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4
    except TrustRegionError as exc:
        print(f"trust-region error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    raise SystemExit(main())
