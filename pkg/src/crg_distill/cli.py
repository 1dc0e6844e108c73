"""Command-line front end.

Commands
  loss TEACHER STUDENT    batch loss report (per-sample + mean JSON)
  spectrum INPUT          eigenvalues and sign-canonicalized embedding
  check TEACHER STUDENT   analytic-vs-finite-difference certification
  distill-sim TEACHER     gradient descent on a noise student

Exit codes: 0 success, 1 certification failure, 2 input error,
3 divergence.  Output is a single UTF-8 JSON document on stdout (or
``--out PATH``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import RunConfig
from .crg import build_adjacency
from .errors import CrgDistillError, Divergence, IoError
from .gradients import CERTIFICATION_TOLERANCES, check_gradients
from .losses import ChannelAdapter, apply_adapter, batch_multi_level_loss
from .sim import run_distill_sim
from .spectral import spectral_embedding
from .tensor_io import FeatureMapBatch, load_feature_maps, load_matrix


def _parse_n(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--n must be an int count or float fraction, got {text!r}") from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=1.0, help="vertex-loss weight")
    parser.add_argument("--beta", type=float, default=1.0, help="edge-loss weight")
    parser.add_argument("--gamma", type=float, default=1.0, help="spectral-loss weight")
    parser.add_argument(
        "--n",
        type=_parse_n,
        default=0.5,
        help="embedding size: int count or float fraction of C (default 0.5)",
    )
    parser.add_argument("--no-spatial-mask", dest="use_spatial_mask", action="store_false")
    parser.add_argument("--no-channel-mask", dest="use_channel_mask", action="store_false")
    parser.add_argument("--no-relation-mask", dest="use_relation_mask", action="store_false")
    parser.add_argument(
        "--only",
        action="append",
        default=None,
        metavar="TERMS",
        help="enable only these loss terms, e.g. --only V, --only VE, --only '' for none",
    )
    parser.add_argument("--relation-softmax", choices=("global", "row"), default="global")
    parser.add_argument("--eigen", choices=("largest", "smallest"), default="largest")
    parser.add_argument("--spectral-variant", choices=("vector", "value"), default="vector")
    parser.add_argument("--adapter", default=None, metavar="PATH", help="rank-2 NPY channel projection")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=None, metavar="PATH", help="write JSON here instead of stdout")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crg-distill", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_loss = sub.add_parser("loss", help="multi-level loss report for a teacher/student NPY pair")
    p_loss.add_argument("teacher")
    p_loss.add_argument("student")
    _add_common(p_loss)

    p_spec = sub.add_parser("spectrum", help="eigenvalues and spectral embedding of an NPY file")
    p_spec.add_argument("input")
    _add_common(p_spec)

    p_check = sub.add_parser("check", help="certify analytic gradients against finite differences")
    p_check.add_argument("teacher")
    p_check.add_argument("student")
    _add_common(p_check)
    p_check.add_argument(
        "--corrupt-gradient",
        choices=("vertex", "edge", "spectral"),
        default=None,
        help=argparse.SUPPRESS,
    )

    p_sim = sub.add_parser("distill-sim", help="gradient descent on a noise student tensor")
    p_sim.add_argument("teacher")
    _add_common(p_sim)
    p_sim.add_argument("--steps", type=int, default=500)
    p_sim.add_argument("--lr", type=float, default=0.05)
    return parser


def _toggles_from_only(only_args) -> dict[str, bool]:
    if only_args is None:
        return {"use_vertex": True, "use_edge": True, "use_spectral": True}
    letters = set("".join(only_args).upper())
    bad = letters - set("VES")
    if bad:
        raise ValueError(f"--only accepts letters from {{V,E,S}}, got {''.join(sorted(bad))!r}")
    return {
        "use_vertex": "V" in letters,
        "use_edge": "E" in letters,
        "use_spectral": "S" in letters,
    }


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        n=args.n,
        use_spatial_mask=args.use_spatial_mask,
        use_channel_mask=args.use_channel_mask,
        use_relation_mask=args.use_relation_mask,
        relation_softmax=args.relation_softmax,
        eigen_selection=args.eigen,
        spectral_variant=args.spectral_variant,
        adapter=args.adapter,
        seed=args.seed,
        threads=args.threads,
        output=args.out,
        **_toggles_from_only(args.only),
    )


def _load_student(path: str, config: RunConfig) -> FeatureMapBatch:
    batch = load_feature_maps(path)
    if config.adapter is not None:
        adapter = ChannelAdapter(load_matrix(config.adapter))
        batch = FeatureMapBatch(tuple(apply_adapter(m, adapter) for m in batch))
    return batch


def _report_dict(report) -> dict:
    return {
        "vertex": report.vertex,
        "edge": report.edge,
        "spectral": report.spectral,
        "multi_level": report.multi_level,
    }


def _cmd_loss(args, config: RunConfig) -> tuple[dict, int]:
    teacher = load_feature_maps(args.teacher)
    student = _load_student(args.student, config)
    n_eff = config.resolve_n(teacher.shape[0])
    report = batch_multi_level_loss(
        teacher, student, config.weights, n_eff, threads=config.threads, **config.loss_options()
    )
    count = len(report.layers)
    doc = {
        "per_sample": [_report_dict(r) for r in report.layers],
        "mean": {
            "vertex": report.vertex / count,
            "edge": report.edge / count,
            "spectral": report.spectral / count,
            "multi_level": report.multi_level / count,
        },
        "config_echo": config.to_dict(),
    }
    return doc, 0


def _cmd_spectrum(args, config: RunConfig) -> tuple[dict, int]:
    batch = load_feature_maps(args.input)
    n_eff = config.resolve_n(batch.shape[0])
    per_sample = []
    for fmap in batch:
        emb = spectral_embedding(build_adjacency(fmap).adjacency, n_eff, config.eigen_selection)
        per_sample.append(
            {
                "eigenvalues": [float(v) for v in emb.eigenvalues],
                "embedding": [[float(x) for x in row] for row in emb.embedding],
                "degeneracy_flag": bool(emb.degenerate),
            }
        )
    return {"per_sample": per_sample, "config_echo": config.to_dict()}, 0


def _cmd_check(args, config: RunConfig) -> tuple[dict, int]:
    teacher = load_feature_maps(args.teacher)[0]
    student = _load_student(args.student, config)[0]
    n_eff = config.resolve_n(teacher.channels)
    report = check_gradients(
        teacher, student, config.weights, n_eff, corrupt_term=args.corrupt_gradient
    )
    terms = {}
    gradients = {"shape": list(teacher.shape)}
    for name in ("vertex", "edge", "spectral"):
        term = getattr(report, name)
        tol = CERTIFICATION_TOLERANCES[name]
        skipped = term.max_rel_error is None
        terms[name] = {
            "max_rel_error": None if skipped else term.max_rel_error,
            "tolerance": tol,
            "within": None if skipped else bool(term.max_rel_error <= tol),
            "skipped": skipped,
        }
        gradients[name] = None if term.analytic is None else [float(x) for x in term.analytic.values.ravel()]
    passed = report.passed()
    doc = {
        "terms": terms,
        "gradients": gradients,
        "passed": passed,
        "config_echo": config.to_dict(),
    }
    return doc, 0 if passed else 1


def _cmd_distill_sim(args, config: RunConfig) -> tuple[dict, int]:
    teacher = load_feature_maps(args.teacher)[0]
    result = run_distill_sim(teacher, config, args.steps, args.lr)
    doc = {
        "trajectory": result.trajectory,
        "initial": _report_dict(result.initial),
        "final": _report_dict(result.final),
        "steps": args.steps,
        "lr": args.lr,
        "spectral_fd_steps": result.spectral_fd_steps,
        "config_echo": config.to_dict(),
    }
    return doc, 0


def _emit(doc: dict, out_path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out_path is None:
        sys.stdout.write(text)
        return
    try:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {out_path}: {exc}") from exc


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "loss": _cmd_loss,
        "spectrum": _cmd_spectrum,
        "check": _cmd_check,
        "distill-sim": _cmd_distill_sim,
    }
    try:
        config = _config_from_args(args)
        doc, code = handlers[args.command](args, config)
        _emit(doc, config.output)
    except Divergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (CrgDistillError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
