"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 infeasible synthesis,
4 simulation divergence or abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config, matlib
from .regform import RegularFormError, UncontrollablePairError, design_k, to_regular_form
from .simharness import ScenarioError, SimulationError, compare, run
from .synthesis import InfeasibleSynthesisError, check_feasibility, dyn_scale, solve_gh
from .plantlib import NotHurwitzError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4


class _Source(argparse.Action):
    """Collect ``--config``/``--preset`` in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        kind = "preset" if option_string == "--preset" else "config"
        items = list(getattr(namespace, "sources", None) or [])
        items.append((kind, values))
        namespace.sources = items


def write_outputs(out_dir, files: dict[str, str]) -> list[Path]:
    """Write all files or none: stage in a temp dir, then rename into place."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    written = []
    try:
        for name, text in files.items():
            (stage / name).write_text(text)
        for name in files:
            os.replace(stage / name, out / name)
            written.append(out / name)
    finally:
        for leftover in stage.iterdir():
            leftover.unlink()
        stage.rmdir()
    return written


def _fmt(a) -> str:
    return np.array2string(np.asarray(a), precision=10, separator=", ", max_line_width=120)


def synthesis_report(cfg: config.SynthesisConfig) -> tuple[str, dict]:
    """Run feasibility, G/H synthesis and surface design for a config.

    Raises :class:`InfeasibleSynthesisError` with the failed condition.
    """
    sys_, model = cfg.plant, cfg.model
    feas = check_feasibility(sys_)
    if not feas.feasible:
        raise InfeasibleSynthesisError("; ".join(feas.reasons))
    if not model.is_stable():
        raise InfeasibleSynthesisError(
            f"reference model A_r is not Hurwitz (eigenvalue real parts {matlib.eig_real_parts(model.A_r)})"
        )
    syn = solve_gh(sys_, model)
    try:
        rf = to_regular_form(sys_)
        design = design_k(rf, cfg.poles)
    except (RegularFormError, UncontrollablePairError) as exc:
        raise InfeasibleSynthesisError(f"sliding surface design failed: {exc}") from exc
    scale = dyn_scale(model, syn.G)
    audit = {
        "plant": matlib.eig_real_parts(sys_.A).tolist(),
        "reference_model": matlib.eig_real_parts(model.A_r).tolist(),
        "reduced_dynamics": matlib.eig_real_parts(design.reduced_A).tolist() if design.reduced_A.size else [],
    }
    data = {
        "feasibility": {"rank": feas.rank, "required_rank": feas.required_rank, "n": feas.n, "m": feas.m, "p": feas.p},
        "G": syn.G.tolist(),
        "H": syn.H.tolist(),
        "K": design.K.tolist(),
        "T1": rf.T1.tolist(),
        "residual_dyn": syn.residual_dyn,
        "residual_out": syn.residual_out,
        "residual_scale": scale,
        "residual_dyn_ok": syn.residual_dyn <= 1e-6 * scale,
        "residual_out_ok": syn.residual_out <= 1e-9 * (1.0 + matlib.inf_norm(model.C_r)),
        "eigenvalue_real_parts": audit,
    }
    lines = [
        "model-following synthesis",
        f"rank [[A, B], [C, 0]] = {feas.rank} (need {feas.required_rank}), p = {feas.p} <= m = {feas.m}",
        "G =", _fmt(syn.G),
        "H =", _fmt(syn.H),
        "K =", _fmt(design.K),
        "T1 =", _fmt(rf.T1),
        f"residual_dyn = {syn.residual_dyn:.6g} (limit {1e-6 * scale:.6g})",
        f"residual_out = {syn.residual_out:.6g}",
        "eigenvalue real parts:",
    ]
    for k, v in audit.items():
        lines.append(f"  {k}: {_fmt(v)}")
    return "\n".join(lines) + "\n", data


def cmd_synthesize(args) -> int:
    sources = args.sources or [("preset", "maglev")]
    if len(sources) != 1:
        raise config.ConfigError("synthesize takes exactly one --config or --preset")
    kind, val = sources[0]
    try:
        cfg = config.load_synthesis(
            path=val if kind == "config" else None,
            preset=val if kind == "preset" else None,
            overrides=args.set,
        )
        text, data = synthesis_report(cfg)
    except (InfeasibleSynthesisError, NotHurwitzError) as exc:
        print(f"infeasible synthesis: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    write_outputs(args.out, {
        "synthesis.txt": text,
        "synthesis.json": json.dumps(data, indent=2) + "\n",
    })
    print(text, end="")
    return EXIT_OK


def _scenario(args, kind, val):
    return config.load_scenario(
        path=val if kind == "config" else None,
        preset=val if kind == "preset" else None,
        overrides=args.set, dt=args.dt, t_end=args.t_end,
    )


def cmd_simulate(args) -> int:
    if not args.sources or len(args.sources) != 1:
        raise config.ConfigError("simulate takes exactly one --config or --preset")
    scn = _scenario(args, *args.sources[0])
    try:
        tr, metrics = run(scn)
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    write_outputs(args.out, {
        "trajectory.csv": tr.to_csv(),
        "metrics.json": metrics.to_json() + "\n",
        "metrics.txt": metrics.to_text(),
        "scenario.toml": config.scenario_to_toml(scn),
    })
    print(metrics.to_text(), end="")
    return EXIT_OK


def cmd_compare(args) -> int:
    if not args.sources or len(args.sources) != 2:
        raise config.ConfigError("compare takes exactly two scenarios (--config/--preset)")
    a = _scenario(args, *args.sources[0])
    b = _scenario(args, *args.sources[1])
    try:
        report = compare(a, b)
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    write_outputs(args.out, {
        "comparison.txt": report.to_text(),
        "comparison.json": json.dumps(report.to_dict(), indent=2) + "\n",
    })
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in config.SCENARIO_PRESETS:
        print(f"{name:<18} scenario")
    for name in config.SYNTHESIS_PRESETS:
        print(f"{name:<18} synthesis")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtmf", description="Super-twisting model-following toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, outputs=True):
        p.add_argument("--config", action=_Source, dest="sources", metavar="PATH", help="TOML config file")
        p.add_argument("--preset", action=_Source, dest="sources", metavar="NAME", help="shipped preset name")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path override, e.g. gains.lambda1=15 (repeatable)")
        if outputs:
            p.add_argument("--out", default=".", metavar="DIR", help="output directory")

    p = sub.add_parser("synthesize", help="solve for G, H and the surface gain K")
    common(p)
    p.set_defaults(func=cmd_synthesize)

    for name, func, help_ in (
        ("simulate", cmd_simulate, "run one scenario, write CSV and metrics"),
        ("compare", cmd_compare, "run two scenarios and compare metrics"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--dt", type=float, default=None, help="integration step (s)")
        p.add_argument("--t-end", type=float, default=None, dest="t_end", help="horizon (s)")
        p.set_defaults(func=func)

    p = sub.add_parser("presets", help="list shipped presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (config.ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
