# commands/structure.py

"""
Subcommands about the family itself: admissibility, kernels, spectrum.
"""

import argparse
import logging

from commands.router import CommandResult, CommandRouter
from models.instance import Instance
from services import admissibility_service, kernel_service, spectral_service
from services.errors import ArgumentError

logger = logging.getLogger("commands.structure")

router = CommandRouter()


@router.command("certify", help="admissibility verdict with face witnesses")
def certify(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    certificate = admissibility_service.certify(fam, spec.e, spec.d)
    rows = []
    for witness, derivative in zip(certificate.witnesses, certificate.derivatives):
        rows.append({
            "index": witness.index,
            "label": fam.label(witness.index),
            "sign": witness.sign,
            "point": " ".join(repr(v) for v in witness.point) if witness.point else "",
            "slack": witness.slack,
            "reached": witness.reached,
            "strict": witness.strict,
            "left_derivative": derivative.value,
        })
    summary = {
        "instance": instance.name,
        "verdict": certificate.verdict.value,
        "margin": certificate.margin,
        "bounds": list(certificate.bounds),
        "generic": certificate.genericity.generic if certificate.genericity else None,
    }
    return CommandResult(rows=rows, summary=summary, echo=["verdict", "margin", "generic"])


def _kernel_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--index", type=int, default=None, help="kernel index (0-based); all by default")
    parser.add_argument("--points", type=int, default=65, help="number of sample radii")


@router.command("kernels", help="kernel profiles K_j and boundary derivatives", arguments=_kernel_arguments)
def kernels(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    if args.index is not None and not 0 <= args.index < fam.size:
        raise ArgumentError(f"--index must be in 0..{fam.size - 1}")
    if args.points < 3:
        raise ArgumentError("--points must be at least 3")
    indices = [args.index] if args.index is not None else list(range(fam.size))
    rows, summary = [], {"instance": instance.name, "kernels": {}}
    for j in indices:
        profile = kernel_service.kernel_profile(fam, spec.e, spec.d, j, n_points=args.points,
                                                samples=args.samples, seed=args.seed)
        rows.extend({"index": j, "t": t, "K": value} for t, value in zip(profile.t, profile.values))
        entry = {
            "support": profile.support,
            "K0": float(profile.values[0]),
            "engine": profile.engine,
            "left_derivative": profile.derivative.value if profile.derivative else None,
            "log_concavity_defect": kernel_service.log_concavity_defect(profile),
        }
        if spec.d >= 2:
            entry["gamma"] = kernel_service.gamma(fam, spec.e, spec.d, j, samples=args.samples, seed=args.seed).gamma
        summary["kernels"][fam.label(j)] = entry
    summary["max_log_concavity_defect"] = max(e["log_concavity_defect"] for e in summary["kernels"].values())
    return CommandResult(rows=rows, summary=summary, echo=["max_log_concavity_defect"],
                         fieldnames=["index", "t", "K"])


def _spectrum_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nu-max", dest="nu_max", type=int, default=None, help="largest degree")


@router.command("spectrum", help="per-degree scalars and the balanced gap", arguments=_spectrum_arguments)
def spectrum(args: argparse.Namespace, instance: Instance) -> CommandResult:
    fam, spec = instance.family, instance.spec
    if args.nu_max is not None and args.nu_max < 1:
        raise ArgumentError("--nu-max must be at least 1")
    report = spectral_service.balanced_gap(fam, spec, nu_max=args.nu_max)
    names = [f"lambda_{fam.label(i)}{fam.label(j)}" for i, j in report.pairs]
    rows = []
    for k, nu in enumerate(report.degrees):
        row = {"nu": nu}
        row.update({name: report.scalars[k, p] for p, name in enumerate(names)})
        row.update({"A": report.ratios[k], "A_unbalanced": report.full_ratios[k], "norm": report.operator_norms[k]})
        rows.append(row)
    summary = dict(report.summary())
    summary.update({
        "instance": instance.name,
        "gammas": report.gammas,
        "weights": report.weights,
        "tail_exponent": report.tail_exponent,
        "tail_bound": report.tail_bound,
    })
    return CommandResult(rows=rows, summary=summary, echo=["gap", "margin"],
                         fieldnames=["nu"] + names + ["A", "A_unbalanced", "norm"])
