# debug_tools/compare_engines.py
#!/usr/bin/env python3
"""
Cross-validate the Phi engines on an instance file.

Evaluates the ball tuple (and optionally E(s) for a named harmonic) with
every engine that applies and prints the pairwise differences in units of
the combined error bar.
"""

import argparse
import itertools
import os
import sys

import numpy as np

# Add parent directory to path to import services
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from services import functional_service, settuple_service, spectral_service
from services.errors import LabError
from services.instance_service import load_instance


def applicable_engines(instance):
    engines = ["mc"]
    if instance.family.m == 2 and instance.d == 1:
        engines.append("exact")
    if instance.family.m == 2 and instance.d == 2:
        engines.append("fiber")
    return engines


def compare(instance, E, samples, seed):
    estimates = {}
    for engine in applicable_engines(instance):
        try:
            estimates[engine] = functional_service.eval_phi(instance.family, E, engine=engine, n=samples, seed=seed)
        except LabError as e:
            print(f"  {engine:6s} unavailable: {e}")
    for engine, estimate in estimates.items():
        print(f"  {engine:6s} {estimate.value!r:>24} +/- {estimate.stderr:.3g}")
    ok = True
    for (a, ea), (b, eb) in itertools.combinations(estimates.items(), 2):
        error = float(np.hypot(ea.stderr, eb.stderr))
        gap = abs(ea.value - eb.value)
        sigmas = gap / error if error > 0 else float("inf") if gap > 1e-12 else 0.0
        status = "ok" if sigmas <= 3 else "MISMATCH"
        ok &= status == "ok"
        print(f"  {a} vs {b}: |diff| = {gap:.3g} ({sigmas:.2f} sigma) {status}")
    return ok


def main():
    parser = argparse.ArgumentParser(description="Compare Phi engines on one instance")
    parser.add_argument("instance", help="instance file")
    parser.add_argument("--harmonic", default=None, help="also compare E(s) for this harmonic")
    parser.add_argument("--s", type=float, default=0.05)
    parser.add_argument("--samples", type=int, default=2**20)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    instance = load_instance(args.instance)
    print(f"\nInstance {instance.name}: {instance.family.size} maps, m={instance.family.m}, d={instance.d}")

    print("\nBall tuple:")
    ok = compare(instance, settuple_service.make_ball_tuple(instance.spec), args.samples, args.seed)
    if args.harmonic:
        G = spectral_service.named_harmonic(args.harmonic, instance.family, instance.spec)
        print(f"\nE(s) for {args.harmonic}, s={args.s}:")
        E = settuple_service.radial_from_harmonic(G, args.s, instance.spec)
        ok &= compare(instance, E, args.samples, args.seed)

    print("\nAll engines agree" if ok else "\nEngines disagree beyond 3 sigma")
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
