# commands/functional.py

"""
Subcommands evaluating the functional: phi, deficit, report.
"""

import argparse
import logging

from commands.router import CommandResult, CommandRouter, harmonic_argument, parse_s_range, s_argument
from models.instance import Instance
from services import (
    admissibility_service,
    functional_service,
    kernel_service,
    settuple_service,
    spectral_service,
    stability_service,
)
from services.errors import ArgumentError, LabError

logger = logging.getLogger("commands.functional")

router = CommandRouter()


def default_engine(instance: Instance) -> str:
    if instance.family.m == 2 and instance.d == 1:
        return "exact"
    if instance.family.m == 2 and instance.d == 2:
        return "fiber"
    return "mc"


def _phi_arguments(parser: argparse.ArgumentParser) -> None:
    harmonic_argument(parser)
    s_argument(parser)


@router.command("phi", help="Phi of the balls, or of E(s) along a harmonic", arguments=_phi_arguments)
def phi(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    engine = args.engine or default_engine(instance)
    if args.harmonic is None:
        estimate = functional_service.eval_phi(fam, settuple_service.make_ball_tuple(spec), engine=engine,
                                               n=args.samples, seed=args.seed)
        estimates = [(0.0, estimate)]
    else:
        G = spectral_service.named_harmonic(args.harmonic, fam, spec)
        estimates = [
            (s, functional_service.eval_phi(fam, settuple_service.radial_from_harmonic(G, s, spec), engine=engine,
                                            n=args.samples, seed=args.seed))
            for s in parse_s_range(args.s_values)
        ]
    rows = [{"s": s, "phi": e.value, "stderr": e.stderr} for s, e in estimates]
    first = estimates[0][1]
    summary = {
        "instance": instance.name,
        "engine": engine,
        "harmonic": args.harmonic,
        "value": first.value,
        "stderr": first.stderr,
        "n": first.n,
        "seed": first.seed,
    }
    return CommandResult(rows=rows, summary=summary, echo=["value", "stderr"], engine=engine,
                         fieldnames=["s", "phi", "stderr"])


def _deficit_arguments(parser: argparse.ArgumentParser) -> None:
    harmonic_argument(parser)
    s_argument(parser)
    parser.add_argument("--path", choices=stability_service.PATHS, default="radial")
    parser.add_argument("--cross-check", dest="cross_check", action="store_true",
                        help="repeat the ends of the fit window with Monte Carlo")


@router.command("deficit", help="deficit curve along E(s) and its power-law fit", arguments=_deficit_arguments)
def deficit(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    if spec.d not in (2, 3):
        raise ArgumentError("deficit curves use harmonic perturbations in d=2 or d=3")
    G = spectral_service.named_harmonic(args.harmonic or "nu3", fam, spec)
    curve = stability_service.deficit_curve(
        fam, spec, G, parse_s_range(args.s_values), engine=args.engine, path=args.path,
        n=args.samples, seed=args.seed, cross_check=args.cross_check,
    )
    summary = curve.summary()
    summary["instance"] = instance.name
    summary["cross_checks"] = [{"s": c.s, "deficit": c.value, "stderr": c.stderr} for c in curve.cross_checks]
    return CommandResult(rows=curve.as_rows(), summary=summary, echo=["exponent", "indeterminate"],
                         engine=curve.engine, fieldnames=["s", "deficit", "stderr", "engine"])


@router.command("report", help="verdict, Phi of the balls, gamma and spectral gap in one record")
def report(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    certificate = admissibility_service.certify(fam, spec.e, spec.d)
    engine = args.engine or default_engine(instance)
    estimate = functional_service.eval_phi(fam, settuple_service.make_ball_tuple(spec), engine=engine,
                                           n=args.samples, seed=args.seed)
    rows = [
        {"quantity": "verdict", "value": certificate.verdict.value},
        {"quantity": "margin", "value": certificate.margin},
        {"quantity": "phi_star", "value": estimate.value},
        {"quantity": "phi_star_stderr", "value": estimate.stderr},
    ]
    summary = {
        "instance": instance.name,
        "verdict": certificate.verdict.value,
        "margin": certificate.margin,
        "phi_star": estimate.value,
        "phi_star_stderr": estimate.stderr,
        "engine": engine,
        "gap": None,
    }
    if spec.d >= 2:
        for j in range(fam.size):
            value = kernel_service.gamma(fam, spec.e, spec.d, j, samples=args.samples, seed=args.seed).gamma
            rows.append({"quantity": f"gamma_{fam.label(j)}", "value": value})
            summary[f"gamma_{fam.label(j)}"] = value
    if spec.d in (2, 3) and certificate.strictly_admissible:
        try:
            gap = spectral_service.balanced_gap(fam, spec).gap
        except LabError as e:
            logger.warning(f"Spectral gap unavailable: {e}")
        else:
            rows.append({"quantity": "gap", "value": gap})
            summary["gap"] = gap
    return CommandResult(rows=rows, summary=summary, echo=["verdict", "phi_star", "gap"], engine=engine,
                         fieldnames=["quantity", "value"])
