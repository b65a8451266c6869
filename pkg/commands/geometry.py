# commands/geometry.py

"""
Subcommands working on set geometry: Steiner flow and orbit distance.
"""

import argparse
import logging

import numpy as np
from scipy.linalg import expm

from commands.router import CommandResult, CommandRouter, harmonic_argument, parse_s_range, s_argument
from models.instance import Instance
from services import orbit_service, settuple_service, spectral_service, symflow_service
from services.errors import ArgumentError
from services.rng_service import Purpose, resolve_seed, stream

logger = logging.getLogger("commands.geometry")

router = CommandRouter()


def _flow_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--steps", type=int, default=None, help="number of Steiner steps")
    parser.add_argument("--start", choices=("balls", "translated", "blobs"), default="blobs")


@router.command("flow", help="Steiner flow from a raster tuple towards the balls", arguments=_flow_arguments)
def flow(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    if args.steps is not None and args.steps < 1:
        raise ArgumentError("--steps must be at least 1")
    seed = resolve_seed(args.seed)
    start = symflow_service.flow_start(args.start, fam, spec, seed=seed)
    trajectory = symflow_service.flow_to_balls(fam, start, engine=args.engine, n=args.samples, seed=seed,
                                               steps=args.steps)
    summary = {
        "instance": instance.name,
        "start": args.start,
        "engine": trajectory.engine,
        "seed": trajectory.seed,
        "steps": len(trajectory.steps) - 1,
        "phi_first": trajectory.steps[0].phi,
        "phi_last": trajectory.steps[-1].phi,
        "final_distance": trajectory.final_distance,
        "raster_floor": trajectory.raster_floor,
        "slack": trajectory.slack,
        "monotone": trajectory.monotone,
        "violations": trajectory.violations,
        "stalled": trajectory.stalled,
        "stalled_at": trajectory.stalled_at,
        "converged": trajectory.converged,
    }
    violation = None
    if not trajectory.monotone:
        violation = f"Phi decreased beyond error bars at steps {trajectory.violations}"
    return CommandResult(rows=trajectory.as_rows(), summary=summary, echo=["phi_last", "final_distance", "monotone"],
                         engine=trajectory.engine, fieldnames=["step", "phi", "stderr", "distance"],
                         violation=violation)


def _dist_arguments(parser: argparse.ArgumentParser) -> None:
    harmonic_argument(parser)
    s_argument(parser, default="0.05:0.05:1")
    parser.add_argument("--starts", type=int, default=None, help="Nelder-Mead restarts")


def planted_member(instance: Instance, seed: int):
    """An orbit member with seeded translation and shear, for recovery checks"""
    fam, spec = instance.family, instance.spec
    d = spec.d
    gen = stream(seed, Purpose.RANDOM_TUPLE, 1)
    v = gen.uniform(-0.25, 0.25, size=(fam.m, d)) * spec.r_max
    if d == 1:
        psi = np.eye(1)
    else:
        M = gen.normal(scale=0.15, size=(d, d))
        psi = expm(M - np.trace(M) / d * np.eye(d))
    return orbit_service.orbit_member(fam, spec, v, psi), v, psi


@router.command("dist", help="distance to the orbit of the balls", arguments=_dist_arguments)
def dist(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    seed = resolve_seed(args.seed)
    if args.harmonic is None:
        E, v, psi = planted_member(instance, seed)
        targets = [(None, E)]
        planted = {"v": v, "psi": psi}
    else:
        G = spectral_service.named_harmonic(args.harmonic, fam, spec)
        targets = [(s, settuple_service.radial_from_harmonic(G, s, spec)) for s in parse_s_range(args.s_values)]
        planted = None

    rows, fits = [], []
    for s, E in targets:
        fit = orbit_service.dist_to_orbit(fam, E, spec, starts=args.starts, seed=seed)
        fits.append(fit)
        rows.extend({
            "s": s, "start": o.index, "kind": o.kind, "distance": o.distance,
            "total": o.total, "evaluations": o.evaluations,
        } for o in fit.starts)
    best = fits[-1]
    summary = {
        "instance": instance.name,
        "harmonic": args.harmonic,
        "seed": seed,
        "distance": best.distance,
        "distances": [f.distance for f in fits],
        "upper_bound": best.upper_bound,
        "near_ties": best.near_ties,
        "spread": best.spread,
        "v": best.v,
        "psi": best.psi,
    }
    if planted is not None:
        summary["planted_v"] = planted["v"]
        summary["planted_psi"] = planted["psi"]
    return CommandResult(rows=rows, summary=summary, echo=["distance", "upper_bound"],
                         fieldnames=["s", "start", "kind", "distance", "total", "evaluations"])
