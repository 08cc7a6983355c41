"""Command-line front end: mesh | solve | sweep | spectrum | verify."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .analysis import (
    condition_sweep_dt, condition_sweep_h, polynomial_spectrum,
    classify_spectrum,
)
from .assembly import QuadratureConfig
from .excitation import PlaneWavePulse, VACUUM
from .formulations import BUILDERS, SolverContext
from .mesh import generate_sphere, generate_torus, load_mesh, save_mesh, \
    barycentric_refinement
from .mot import probe, solve_system, write_trace_csv

EXIT_CONFIG = 2
EXIT_ASSEMBLY = 3
EXIT_SOLVER = 4
EXIT_IO = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _add_common(p):
    p.add_argument("--mesh", help="OFF mesh file; or sphere:R,h / torus:R,r,h")
    p.add_argument("--refine", type=int, default=0,
                   help="barycentric refinement levels applied after loading")
    p.add_argument("--dt", type=float, default=0.333e-9, help="time step [s]")
    p.add_argument("--formulation", choices=sorted(BUILDERS), default="cfie-qhp")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--coupling", type=float, default=None,
                   help="combined-equation coupling; default eta^2")
    p.add_argument("--quad-order-far", type=int, default=4)
    p.add_argument("--quad-order-near", type=int, default=6)
    p.add_argument("--radial-split", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="key=value config file overriding defaults")
    p.add_argument("--threads", type=int, default=0, help="worker budget hint")
    p.add_argument("--out", default="-", help="output path, - for stdout")


def _load_config_file(args):
    if not args.config:
        return
    try:
        with open(args.config) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(f"bad config line: {line!r}", EXIT_CONFIG)
                key, val = (s.strip() for s in line.split("=", 1))
                key = key.replace("-", "_")
                if not hasattr(args, key):
                    raise CliError(f"unknown config key: {key}", EXIT_CONFIG)
                old = getattr(args, key)
                if isinstance(old, bool):
                    setattr(args, key, val.lower() in ("1", "true", "yes"))
                elif isinstance(old, int):
                    setattr(args, key, int(val))
                elif isinstance(old, float) or old is None:
                    setattr(args, key, float(val))
                else:
                    setattr(args, key, val)
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_IO)


def _get_mesh(args):
    spec = args.mesh
    if not spec:
        raise CliError("--mesh is required", EXIT_CONFIG)
    try:
        if spec.startswith("sphere:"):
            r, h = (float(x) for x in spec[7:].split(","))
            mesh = generate_sphere(r, h)
        elif spec.startswith("torus:"):
            rr, r, h = (float(x) for x in spec[6:].split(","))
            mesh = generate_torus(rr, r, h)
        else:
            with open(spec) as f:
                mesh = load_mesh(f)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot build mesh {spec!r}: {exc}", EXIT_CONFIG)
    for _ in range(max(args.refine, 0)):
        mesh, _maps = barycentric_refinement(mesh)
    return mesh


def _quad_config(args):
    return QuadratureConfig(far_order=args.quad_order_far,
                            near_order=args.quad_order_near,
                            radial_split=args.radial_split)


def _pulse(args):
    return PlaneWavePulse(amplitude=getattr(args, "amplitude", 1.0),
                          width=getattr(args, "pulse_width", 26.67),
                          polarization=(1.0, 0.0, 0.0),
                          direction=(0.0, 0.0, 1.0),
                          t0=getattr(args, "pulse_t0", 80e-9))


def _header(args):
    skip = {"func"}
    items = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return [f"tdbem {__version__}", "config " + json.dumps(items, default=str)]


def _open_out(args):
    if args.out == "-":
        return sys.stdout, False
    try:
        return open(args.out, "w"), True
    except OSError as exc:
        raise CliError(f"cannot open output: {exc}", EXIT_IO)


def cmd_mesh(args):
    mesh = _get_mesh(args)
    stream, close = _open_out(args)
    try:
        save_mesh(mesh, stream)
    finally:
        if close:
            stream.close()
    print(f"vertices {mesh.num_vertices} edges {mesh.num_edges} "
          f"triangles {mesh.num_triangles}", file=sys.stderr)
    return 0


def _build_system(args, mesh, with_pulse=True):
    pulse = _pulse(args) if with_pulse else None
    try:
        ctx = SolverContext(mesh, args.dt, pulse=pulse,
                            config=_quad_config(args))
        builder = BUILDERS[args.formulation]
        if args.formulation == "cfie-mixed":
            return ctx, builder(ctx, args.alpha)
        if args.formulation == "cfie-qhp":
            return ctx, builder(ctx, args.coupling)
        return ctx, builder(ctx)
    except (ValueError, FloatingPointError) as exc:
        raise CliError(f"assembly failed: {exc}", EXIT_ASSEMBLY)


def cmd_solve(args):
    mesh = _get_mesh(args)
    ctx, system = _build_system(args, mesh)
    try:
        result = solve_system(system, args.steps)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        raise CliError(f"marching failed: {exc}", EXIT_SOLVER)
    if not args.probe:
        raise CliError("solve requires at least one --probe x,y,z", EXIT_CONFIG)
    for i, probe_spec in enumerate(args.probe):
        point = [float(x) for x in probe_spec.split(",")]
        trace = probe(result.currents, ctx.rwg, point)
        path = args.out if len(args.probe) == 1 else f"{args.out}.{i}"
        if path == "-":
            raise CliError("solve output must be a file path", EXIT_CONFIG)
        write_trace_csv(path, args.dt, trace,
                        _header(args) + [f"probe {probe_spec}"])
    return 0


def cmd_sweep(args):
    mesh = _get_mesh(args)

    def ctx_factory(m, dt):
        return SolverContext(m, dt, pulse=None, config=_quad_config(args))

    builder_map = {}
    for name in args.formulations.split(","):
        name = name.strip()
        if name not in BUILDERS:
            raise CliError(f"unknown formulation {name!r}", EXIT_CONFIG)
        if name == "cfie-mixed":
            builder_map[name] = lambda c, a=args.alpha: BUILDERS["cfie-mixed"](c, a)
        elif name == "cfie-qhp":
            builder_map[name] = lambda c, x=args.coupling: BUILDERS["cfie-qhp"](c, x)
        else:
            builder_map[name] = BUILDERS[name]

    try:
        if args.axis == "dt":
            dts = [float(x) for x in args.values.split(",")]
            sweep = condition_sweep_dt(builder_map, mesh, dts, ctx_factory)
        else:
            meshes = [mesh]
            for _ in range(max(args.refinements, 1)):
                meshes.append(barycentric_refinement(meshes[-1])[0])
            sweep = condition_sweep_h(builder_map, meshes, args.dt, ctx_factory)
    except (ValueError, FloatingPointError) as exc:
        raise CliError(f"sweep failed: {exc}", EXIT_ASSEMBLY)
    if args.out == "-":
        raise CliError("sweep output must be a file path", EXIT_CONFIG)
    sweep.to_csv(args.out, _header(args))
    return 0


def cmd_spectrum(args):
    mesh = _get_mesh(args)
    _, system = _build_system(args, mesh, with_pulse=False)
    try:
        report = polynomial_spectrum(system)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ASSEMBLY)
    summary = classify_spectrum(report, args.tol_dc, args.tol_circle)
    if args.out == "-":
        raise CliError("spectrum output must be a file path", EXIT_CONFIG)
    report.to_json(args.out, summary,
                   {"lines": _header(args), "formulation": args.formulation})
    print(json.dumps(summary), file=sys.stderr)
    return 0


def cmd_verify(args):
    """Fast invariant suite on a small built-in tetrahedron."""
    from .mesh import TriangleMesh, barycentric_refinement
    from .qhz import QhzProjectors
    from .basis import build_rwg, build_bc, assemble_gram_mixed
    from .assembly_fd import assemble_yukawa_efie
    from .excitation import NORMALIZED
    from . import temporal

    rng = np.random.default_rng(args.seed)
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0.4, 1.0, 0], [0.45, 0.35, 0.9]])
    tris = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
    mesh = TriangleMesh(verts, tris)
    failures = []

    p = QhzProjectors(mesh)
    x = rng.standard_normal((mesh.num_edges, 20))
    checks = {}
    checks["projector idempotency"] = np.abs(
        p.project_sigma(p.project_sigma(x)) - p.project_sigma(x)).max()
    checks["projector complementarity"] = np.abs(
        p.project_sigma(x) + p.project_lambda_h(x) - x).max()
    checks["charge of solenoidal combinations"] = np.abs(
        p.sig.T @ p.project_lambda_h(x)).max()

    t = rng.uniform(-3, 3, 1000)
    dt = 1.0
    pou = sum(temporal.hat(t - i, dt) for i in range(-5, 6))
    checks["temporal partition of unity"] = np.abs(pou - 1.0).max()
    checks["derivative compatibility"] = np.abs(
        temporal.quad_deriv(t, dt) - (temporal.hat(t, dt)
                                      - temporal.hat(t - dt, dt)) / dt).max()

    refined, maps = barycentric_refinement(mesh)
    bc = build_bc(mesh, refined, maps)
    rwg = build_rwg(mesh)
    gram = assemble_gram_mixed(bc, rwg)
    checks["mixed Gram invertibility (residual)"] = np.abs(
        gram.solve(gram.matrix) - np.eye(mesh.num_edges)).max()

    _, zh = assemble_yukawa_efie(bc, 1.0, NORMALIZED.eta,
                                 config=_quad_config(args))
    checks["hypersingular annihilation"] = np.abs(
        zh @ p.project_sigma_h(x)).max() / max(np.abs(zh).max(), 1e-300)

    for name, err in checks.items():
        ok = err < 1e-10
        print(f"{'PASS' if ok else 'FAIL'} {name}: {err:.2e}")
        if not ok:
            failures.append(name)
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="tdbem",
        description="transient scattering from closed conducting surfaces",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_mesh = sub.add_parser("mesh", help="generate or convert a mesh")
    _add_common(p_mesh)
    p_mesh.set_defaults(func=cmd_mesh)

    p_solve = sub.add_parser("solve", help="marching solve with probes")
    _add_common(p_solve)
    p_solve.add_argument("--steps", type=int, default=1000)
    p_solve.add_argument("--probe", action="append", default=[],
                         help="x,y,z probe point; repeatable")
    p_solve.add_argument("--amplitude", type=float, default=1.0)
    p_solve.add_argument("--pulse-width", type=float, default=26.67)
    p_solve.add_argument("--pulse-t0", type=float, default=80e-9)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="condition-number sweeps")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=("dt", "h"), required=True)
    p_sweep.add_argument("--values", default="",
                         help="comma-separated dt values for --axis dt")
    p_sweep.add_argument("--refinements", type=int, default=1)
    p_sweep.add_argument("--formulations", default="efie,mfie,cfie-qhp")
    p_sweep.set_defaults(func=cmd_sweep)

    p_spec = sub.add_parser("spectrum", help="companion stability spectrum")
    _add_common(p_spec)
    p_spec.add_argument("--tol-dc", type=float, default=1e-6)
    p_spec.add_argument("--tol-circle", type=float, default=1e-6)
    p_spec.set_defaults(func=cmd_spectrum)

    p_ver = sub.add_parser("verify", help="fast invariant suite")
    _add_common(p_ver)
    p_ver.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        _load_config_file(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
