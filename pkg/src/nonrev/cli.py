"""``nonrev`` command line: JSON reports for every analysis.

Exit codes: 0 on success, 1 on a numerical failure (the error is printed as
``{"error": {"type", "message"}}``), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import fokker_planck as fp
from .chain import ChainSpec, as_density, generator, stationary, validate
from .duality import adjoint_chain, representation
from .errors import NonrevError
from .forces import (
    Dual,
    Flip,
    Move,
    entropy_decomposition,
    entropy_production,
    flux,
    iso_force_family,
    mobility_force,
    psi_star,
)
from .gillespie import (
    empirical_measures,
    entropy_rate_estimate,
    jump_log_ratio_rate,
    resolve_seed,
    simulate,
)
from .solvers import NewtonConfig
from .variational import (
    decompose,
    donsker_varadhan,
    edge_gradient,
    edge_hamiltonian,
    hamiltonian_from_generator,
    recover_psi_star,
)

DEFAULT_TOL = 1e-9


class UsageError(Exception):
    pass


# -- output ----------------------------------------------------------------


def _float(x: float) -> str:
    if math.isfinite(x):
        return format(x, ".17g")
    return "null"


def dumps(obj, indent: int | None = None, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = [(json.dumps(str(k)), v) for k, v in obj.items()]
        parts = [f"{k}: {dumps(v, indent, _level + 1)}" for k, v in items]
        return _wrap("{", "}", parts, indent, _level)
    if isinstance(obj, (list, tuple)):
        parts = [dumps(v, indent, _level + 1) for v in obj]
        return _wrap("[", "]", parts, indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _wrap(open_, close, parts, indent, level):
    if not parts:
        return open_ + close
    if indent is None:
        return open_ + ", ".join(parts) + close
    pad = " " * (indent * (level + 1))
    return open_ + "\n" + ",\n".join(pad + p for p in parts) + "\n" + " " * (indent * level) + close


# -- inputs ----------------------------------------------------------------


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None


def load_chain(path) -> ChainSpec:
    obj = _read_json(path)
    try:
        return ChainSpec.from_json(obj)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"{path}: not a chain file ({exc})") from None


def _vector(token, n, name):
    if token in ("uniform", None):
        return np.full(n, 1.0 / n)
    obj = _read_json(token)
    if isinstance(obj, dict):
        obj = obj.get(name, obj.get("values"))
    try:
        v = np.asarray(obj, dtype=float).ravel()
    except (TypeError, ValueError):
        raise UsageError(f"{token}: expected a list of numbers") from None
    if v.size != n:
        raise UsageError(f"{token}: expected {n} entries, got {v.size}")
    return v


def load_rho(token, spec: ChainSpec) -> np.ndarray:
    if token == "stationary":
        return stationary(spec)
    v = _vector(token, spec.n_states, "rho")
    try:
        return as_density(v, spec.n_states)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cfg(args) -> NewtonConfig:
    return NewtonConfig(grad_tol=min(1e-10, args.tol))


def _iso_selector(args, spec, rho):
    if args.iso == "self":
        return Flip(())
    if args.iso == "flip":
        edges = args.flip_edges if args.flip_edges is not None else range(len(spec.edges()))
        return Flip(tuple(edges))
    if args.iso == "dual":
        return Dual(spec, rho)
    if args.move is None:
        raise UsageError("--iso move needs --move E1 E2 DELTA")
    e1, e2, delta = args.move
    return Move(int(e1), int(e2), float(delta))


# -- commands --------------------------------------------------------------


def cmd_validate(args):
    spec = load_chain(args.chain)
    return validate(spec).to_json()


def cmd_stationary(args):
    spec = load_chain(args.chain)
    pi = stationary(spec)
    return {"pi": pi, "residual": float(np.abs(generator(spec) @ pi).max()), "tol": args.tol}


def cmd_forces(args):
    spec = load_chain(args.chain)
    rho = load_rho(args.rho, spec)
    mob, F = mobility_force(spec, rho)
    j = flux(mob, F)
    direct = rho[mob.edges[:, 0]] * spec.rates[mob.edges[:, 0], mob.edges[:, 1]] \
        - rho[mob.edges[:, 1]] * spec.rates[mob.edges[:, 1], mob.edges[:, 0]]
    return {
        "rho": rho,
        "edges": mob.edges,
        "mobility": mob.values,
        "force": F.values,
        "flux": j.values,
        "entropy_production": entropy_production(j, F),
        "psi_star": psi_star(mob, F),
        "flux_residual": float(np.abs(direct - j.values).max()),
        "tol": args.tol,
    }


def cmd_entropy_split(args):
    spec = load_chain(args.chain)
    rho = load_rho(args.rho, spec)
    mob, F = mobility_force(spec, rho)
    F_iso = iso_force_family(mob, F, _iso_selector(args, spec, rho))
    out = entropy_decomposition(spec, rho, F_iso, level_tol=max(args.tol, 1e-8)).to_json()
    out.update(iso=args.iso, tol=args.tol, within_tol=out["defect"] <= args.tol)
    return out


def cmd_iso_family(args):
    spec = load_chain(args.chain)
    rho = load_rho(args.rho, spec)
    mob, F = mobility_force(spec, rho)
    F_iso = iso_force_family(mob, F, _iso_selector(args, spec, rho))
    level = psi_star(mob, F)
    return {
        "edges": F.edges,
        "force": F.values,
        "iso_force": F_iso.values,
        "psi_star": level,
        "level_set_defect": abs(psi_star(mob, F_iso) - level),
        "iso": args.iso,
        "tol": args.tol,
    }


def cmd_adjoint(args):
    spec = load_chain(args.chain)
    pi = stationary(spec)
    mu = pi if args.mu == "stationary" else _vector(args.mu, spec.n_states, "mu")
    rep = representation(spec, mu, pi)
    star = adjoint_chain(spec, pi)
    back = adjoint_chain(star, pi)
    return {
        "adjoint": star.to_json(),
        "pi": pi,
        "mu": rep.mu,
        "w_plus": rep.w_plus,
        "w_star": rep.w_star,
        "representation_defect": rep.defect,
        "involution_defect": float(np.abs(back.rates - spec.rates).max()),
        "tol": args.tol,
    }


def cmd_hamiltonian(args):
    spec = load_chain(args.chain)
    rho = load_rho(args.rho, spec)
    n = spec.n_states
    xi = np.zeros(n) if args.xi == "zero" else _vector(args.xi, n, "xi")
    H = hamiltonian_from_generator(spec, rho)
    mob, F = mobility_force(spec, rho)
    He = edge_hamiltonian(mob, F)
    dxi = edge_gradient(mob.edges, xi)
    value = H(xi)
    return {
        "value": value,
        "gradient": H.grad(xi),
        "edge_value": He(dxi),
        "contraction_defect": abs(value - He(dxi)),
        "psi_star_recovery_defect": abs(recover_psi_star(He, F, dxi) - psi_star(mob, dxi)),
        "tol": args.tol,
    }


def cmd_dv_rate(args):
    spec = load_chain(args.chain)
    rho = load_rho(args.rho, spec)
    out = donsker_varadhan(spec, rho, check=True, cfg=_cfg(args)).to_json()
    out.update(tol=args.tol, agree=out["two_route_defect"] <= max(args.tol, 1e-8))
    return out


def cmd_decompose(args):
    spec = load_chain(args.chain)
    rho = load_rho(args.rho, spec)
    mob, F = mobility_force(spec, rho)
    m = len(mob.edges)
    mask = np.zeros(m, dtype=bool)
    chosen = args.edges if args.edges is not None else range(0, m, 2)
    mask[list(chosen)] = True
    H1 = edge_hamiltonian(mob, F, mask)
    H2 = edge_hamiltonian(mob, F, ~mask)
    j = flux(mob, F).values if args.j == "physical" else (
        np.zeros(m) if args.j == "zero" else _vector(args.j, m, "j"))
    out = decompose(H1, H2, j, cfg=_cfg(args), tol=args.tol).to_json()
    out.update(edges=mob.edges, h1_edges=np.flatnonzero(mask), tol=args.tol)
    return out


def cmd_fp_demo(args):
    if args.model:
        obj = _read_json(args.model)
        try:
            model = fp.GridModel.from_json(obj)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{args.model}: not a grid model ({exc})") from None
        rho = fp.smooth_bump(model.n_cells, args.amplitude, skew=args.skew)
        return {"check": fp.exL_check(model, rho, _cfg(args)), "tol": args.tol}
    study = fp.refinement_study(args.drift, args.diffusion, tuple(args.n), args.amplitude,
                                args.scheme, _cfg(args), args.skew)
    study["tol"] = args.tol
    return study


def _replica(payload):
    rates, x0, T, seed = payload
    spec = ChainSpec(rates)
    traj = simulate(spec, x0, T, seed)
    rho, j = empirical_measures(traj, spec)
    return {
        "n_jumps": traj.n_jumps,
        "rho_hat": rho,
        "j_hat": j.values,
        "entropy_rate": entropy_rate_estimate(traj, spec),
        "log_ratio_rate": jump_log_ratio_rate(traj, spec),
    }, traj


def cmd_simulate(args):
    spec = load_chain(args.chain)
    seed = resolve_seed(args.seed)
    base = np.random.SeedSequence(seed)
    k = max(1, args.replicas)
    seeds = base.spawn(k) if k > 1 else [base]
    jobs = [(np.asarray(spec.rates), args.x0, args.T, s) for s in seeds]
    if k > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_replica, jobs))
    else:
        results = [_replica(jobs[0])]
    reports = [r for r, _ in results]
    if args.export:
        payload = [t.to_json() for _, t in results]
        Path(args.export).write_text(dumps(payload[0] if k == 1 else payload))
    pi = stationary(spec)
    mob, F = mobility_force(spec, pi)
    j = flux(mob, F)
    est = np.array([r["entropy_rate"] for r in reports])
    return {
        "seed": base.entropy,
        "T": args.T,
        "x0": args.x0,
        "edges": mob.edges,
        "replicas": reports,
        "entropy_rate_mean": float(est.mean()),
        "analytic_entropy_rate": entropy_production(j, F),
        "analytic_flux": j.values,
        "pi": pi,
        "tol": args.tol,
    }


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonrev", description="Flux-force analysis of Markov jump chains.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="report tolerance")
    common.add_argument("--pretty", action="store_true", help="indent the JSON output")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_, chain=True, rho=False):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if chain:
            sp.add_argument("chain", help="chain JSON file")
        if rho:
            sp.add_argument("--rho", default="stationary",
                            help="'stationary', 'uniform' or a JSON density file")
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "check rates and irreducibility")
    add("stationary", cmd_stationary, "invariant density")
    add("forces", cmd_forces, "mobility, force and flux per edge", rho=True)
    for name, fn, help_ in (("entropy-split", cmd_entropy_split, "Bregman split of entropy production"),
                            ("iso-family", cmd_iso_family, "iso-dissipation force")):
        sp = add(name, fn, help_, rho=True)
        sp.add_argument("--iso", choices=("self", "flip", "dual", "move"), default="dual")
        sp.add_argument("--flip-edges", type=int, nargs="*", help="edge indices to flip (default all)")
        sp.add_argument("--move", nargs=3, metavar=("E1", "E2", "DELTA"))
    sp = add("adjoint", cmd_adjoint, "time-reversed chain and its representation")
    sp.add_argument("--mu", default="stationary", help="reference measure: 'stationary', 'uniform' or file")
    sp = add("hamiltonian", cmd_hamiltonian, "evaluate the Hamiltonian at a tilt", rho=True)
    sp.add_argument("--xi", default="zero", help="'zero' or a JSON file with one value per state")
    add("dv-rate", cmd_dv_rate, "Donsker-Varadhan rate of a density", rho=True)
    sp = add("decompose", cmd_decompose, "split the Lagrangian over an edge partition", rho=True)
    sp.add_argument("--edges", type=int, nargs="*", help="edge indices in the first part (default even)")
    sp.add_argument("--j", default="physical", help="'physical', 'zero' or a JSON flux file")
    sp = add("fp-demo", cmd_fp_demo, "periodic drift-diffusion refinement study", chain=False)
    sp.add_argument("--model", help="grid model JSON; runs a single check")
    sp.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    sp.add_argument("--drift", type=float, default=1.0)
    sp.add_argument("--diffusion", type=float, default=1.0)
    sp.add_argument("--scheme", choices=("central", "exponential"), default="central")
    sp.add_argument("--amplitude", type=float, default=0.5)
    sp.add_argument("--skew", type=float, default=0.25, help="second-harmonic term of the test density")
    sp = add("simulate", cmd_simulate, "Gillespie simulation and estimators")
    sp.add_argument("--x0", type=int, default=0)
    sp.add_argument("--T", type=float, default=1e4)
    sp.add_argument("--seed", type=int, default=0, help="overridden by NONREV_SEED")
    sp.add_argument("--replicas", type=int, default=1)
    sp.add_argument("--export", help="write the trajectory JSON here")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    indent = 2 if args.pretty else None
    try:
        report = args.func(args)
    except (UsageError, ValueError, IndexError) as exc:
        print(f"nonrev: {exc}", file=sys.stderr)
        return 2
    except NonrevError as exc:
        print(dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}, indent))
        return 1
    print(dumps(report, indent))
    return 0


if __name__ == "__main__":
    sys.exit(main())
