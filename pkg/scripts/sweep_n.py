#!/usr/bin/env python3
"""Sweep the embedding size N over a teacher/student NPY pair.

For every N in 1..C (or an explicit list) this reports the mean spectral
and multi-level losses over the batch, as JSON lines.  Useful for picking
the N/C operating point of the spectral term.

  python3 scripts/sweep_n.py teacher.npy student.npy
  python3 scripts/sweep_n.py teacher.npy student.npy --n 1 2 4 8 --out sweep.json
"""

import argparse
import json
import sys

from crg_distill import LossWeights, batch_multi_level_loss, load_feature_maps


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("teacher")
    parser.add_argument("student")
    parser.add_argument("--n", type=int, nargs="*", default=None, help="explicit N values (default 1..C)")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--gamma", type=float, default=1.0)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    teacher = load_feature_maps(args.teacher)
    student = load_feature_maps(args.student)
    c = teacher.shape[0]
    ns = args.n if args.n else list(range(1, c + 1))
    weights = LossWeights(args.alpha, args.beta, args.gamma)

    rows = []
    for n in ns:
        rep = batch_multi_level_loss(teacher, student, weights, n)
        count = len(rep.layers)
        rows.append(
            {
                "n": n,
                "n_over_c": n / c,
                "mean_spectral": rep.spectral / count,
                "mean_multi_level": rep.multi_level / count,
            }
        )

    text = "\n".join(json.dumps(r) for r in rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
