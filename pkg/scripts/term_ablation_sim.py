#!/usr/bin/env python3
"""Desk-scale loss-term ablation: optimize a noise student against a fixed
teacher under every combination of enabled loss terms, then score each
final student on the full three-term objective.

This is the experiment behind the acceptance choice of the simulation
teacher (seed 14, scale 4): the jointly optimized student should beat any
single-term student on the full objective at equal budget.

  python3 scripts/term_ablation_sim.py                 # built-in teacher
  python3 scripts/term_ablation_sim.py --teacher t.npy --steps 500 --lr 0.05
"""

import argparse
import itertools
import json
import sys

import numpy as np

from crg_distill import Divergence, FeatureMap, load_feature_maps, multi_level_loss
from crg_distill.config import RunConfig
from crg_distill.sim import run_distill_sim


def default_teacher() -> FeatureMap:
    rng = np.random.default_rng(14)
    return FeatureMap(4.0 * rng.standard_normal((4, 4, 4)))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--teacher", default=None, help="NPY path (default: built-in seed-14 teacher)")
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--lr", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    teacher = load_feature_maps(args.teacher)[0] if args.teacher else default_teacher()

    rows = []
    for v, e, s in itertools.product((True, False), repeat=3):
        label = "".join(t for t, on in zip("VES", (v, e, s)) if on) or "-"
        cfg = RunConfig(seed=args.seed, use_vertex=v, use_edge=e, use_spectral=s)
        if not (v or e or s):
            rows.append({"terms": label, "status": "skipped (no objective)"})
            continue
        try:
            res = run_distill_sim(teacher, cfg, args.steps, args.lr)
        except Divergence as exc:
            rows.append({"terms": label, "status": f"diverged: {exc}"})
            continue
        full = multi_level_loss(teacher, res.student)
        rows.append(
            {
                "terms": label,
                "status": "ok",
                "own_final": res.final.multi_level,
                "full_objective_of_final": full.multi_level,
                "initial_full_objective": res.initial.multi_level if (v and e and s) else None,
            }
        )

    for row in rows:
        print(json.dumps(row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
