"""Command-line front end.

Three commands operate on scenario files:

* ``run``    execute the deployment loop and write an output bundle
             (trajectory.csv, costs.csv, summary.txt, figures, optionally
             messages.log),
* ``probe``  evaluate the potential components at the initial configuration,
* ``verify`` run the factorization, null-space and gradient audits.

Exit status: 0 success, 1 usage or scenario-format error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from importlib.resources import files
from pathlib import Path

import numpy as np
import scipy.linalg

from . import planner
from .errors import DeploymentError, ScenarioFormatError
from .fim import assemble_fim
from .potentials import min_eigenvalue_objective
from .scenario_io import build_scenario, load_scenario, write_output_bundle
from .verification import random_instance, verification_report

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. 'dealign')."""
    return Path(str(files("locdeploy").joinpath("scenarios", f"{name}.yaml")))


def _resolve_scenario(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    fallback = bundled_scenario(arg)
    if fallback.exists():
        return fallback
    names = sorted(p.stem for p in bundled_scenario("x").parent.glob("*.yaml"))
    raise ScenarioFormatError(
        f"scenario {arg!r} not found (no such file; bundled scenarios: {', '.join(names)})"
    )


def _collect_overrides(args) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for item in args.override or []:
        if "=" not in item:
            raise ScenarioFormatError(f"override {item!r} must look like section.field=value")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.steps is not None:
        overrides["run.steps"] = str(args.steps)
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if getattr(args, "gradient_mode", None):
        overrides["run.gradient_mode"] = args.gradient_mode
    return overrides


def _add_scenario_options(sub, with_out: bool):
    sub.add_argument("--scenario", required=True,
                     help="scenario file path or bundled scenario name")
    if with_out:
        sub.add_argument("--out", required=True, help="output directory for the bundle")
    sub.add_argument("--steps", type=int, default=None, help="override run.steps")
    sub.add_argument("--seed", type=int, default=None, help="override run.seed")
    sub.add_argument("--gradient-mode", choices=planner.GRADIENT_MODES, default=None,
                     dest="gradient_mode", help="override run.gradient_mode")
    sub.add_argument("--override", action="append", metavar="KEY=VALUE",
                     help="override any scenario field, e.g. run.gamma0=0.02")


def build_parser() -> _Parser:
    parser = _Parser(prog="locdeploy",
                     description="Localizability-aware deployment of ranging networks.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="execute a deployment scenario")
    _add_scenario_options(run, with_out=True)
    run.add_argument("--messages", action="store_true",
                     help="record the distributed message transcript (distributed mode)")
    run.add_argument("--no-figures", action="store_true",
                     help="skip rendering trajectory.png and costs.png")

    probe = commands.add_parser("probe", help="evaluate the potential at the start")
    _add_scenario_options(probe, with_out=False)

    verify = commands.add_parser("verify", help="run factorization and gradient audits")
    verify.add_argument("--scenario", default=None,
                        help="scenario file path or bundled scenario name")
    verify.add_argument("--random-nodes", type=int, default=None,
                        help="audit a seeded random network of this many nodes instead")
    verify.add_argument("--instances", type=int, default=1,
                        help="number of random instances to audit")
    verify.add_argument("--seed", type=int, default=0, help="seed for random instances")
    verify.add_argument("--corrupt-weight", type=float, default=0.0,
                        help="negative-control hook: perturb one rigidity weight")
    return parser


def _cmd_run(args) -> int:
    overrides = _collect_overrides(args)
    path = _resolve_scenario(args.scenario)
    spec = load_scenario(path, overrides)
    if spec.potential.loc_kind == "E":
        raise ScenarioFormatError(
            "potential.loc_kind: E has no gradient and supports probe/verify only"
        )
    scenario = build_scenario(spec, record_messages=args.messages)
    record = planner.run(scenario)
    written = write_output_bundle(args.out, record, spec, scenario_path=args.scenario,
                                  overrides=overrides)
    if not args.no_figures:
        from .figures import save_cost_figure, save_trajectory_figure

        out = Path(args.out)
        written["trajectory_figure"] = save_trajectory_figure(
            record, scenario.initial.num_mobile, out / "trajectory.png"
        )
        written["cost_figure"] = save_cost_figure(record, out / "costs.png")
    final = record.steps[-1]
    print(f"termination: {record.termination} after {record.num_steps} steps")
    print(f"final f_total: {final.f_total:.6g}  grad_norm: {final.grad_norm:.6g}")
    for name in sorted(written):
        print(f"wrote {written[name]}")
    return 0


def _cmd_probe(args) -> int:
    overrides = _collect_overrides(args)
    path = _resolve_scenario(args.scenario)
    spec = load_scenario(path, overrides)
    scenario = build_scenario(spec)
    evaluation = planner.evaluate(scenario)

    def fmt(value):
        return "(absent)" if value is None else f"{value:.12g}"

    print(f"f_total:   {fmt(evaluation.total)}")
    print(f"f_loc:     {fmt(evaluation.loc)}   (kind: {spec.potential.loc_kind or 'none'})")
    print(f"f_conn:    {fmt(evaluation.conn)}")
    print(f"f_task:    {fmt(evaluation.task)}")
    print(f"grad_norm: {fmt(evaluation.gradient_norm)}")
    eigvals = scipy.linalg.eigvalsh(
        assemble_fim(scenario.initial, scenario.graph, scenario.model).dense()
    )
    print(f"fim_lambda_min: {eigvals[0]:.12g}")
    print(f"fim_lambda_max: {eigvals[-1]:.12g}")
    print(f"min_eigenvalue_objective: "
          f"{min_eigenvalue_objective(assemble_fim(scenario.initial, scenario.graph, scenario.model)):.12g}")
    return 0


def _verify_one(config, graph, model, label, corrupt, task=None, barrier=None) -> bool:
    results = verification_report(config, graph, model, task=task, barrier=barrier,
                                  weight_corruption=corrupt)
    print(f"--- {label} ---")
    print(f"{'check':45s} {'value':>12s} {'tolerance':>10s}  status")
    all_ok = True
    for res in results:
        status = "ok" if res.passed else "FAIL"
        print(f"{res.name:45s} {res.value:12.3e} {res.tolerance:10.1e}  {status}")
        all_ok &= res.passed
    return all_ok


def _cmd_verify(args) -> int:
    overrides: dict[str, str] = {}
    all_ok = True
    if args.scenario is not None:
        path = _resolve_scenario(args.scenario)
        spec = load_scenario(path, overrides)
        scenario = build_scenario(spec)
        all_ok &= _verify_one(scenario.initial, scenario.graph, scenario.model,
                              label=str(args.scenario), corrupt=args.corrupt_weight,
                              task=scenario.task, barrier=scenario.barrier)
    elif args.random_nodes is not None:
        rng = np.random.default_rng(args.seed)
        for k in range(args.instances):
            config, graph, model = random_instance(rng, args.random_nodes)
            all_ok &= _verify_one(config, graph, model,
                                  label=f"random instance {k} (seed {args.seed})",
                                  corrupt=args.corrupt_weight)
    else:
        raise _UsageError("verify needs either --scenario or --random-nodes")
    if all_ok:
        print("all checks passed")
        return 0
    print("some checks FAILED", file=sys.stderr)
    return RUNTIME_ERROR


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "probe":
            return _cmd_probe(args)
        return _cmd_verify(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except ScenarioFormatError as err:
        print(f"scenario error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except DeploymentError as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return RUNTIME_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
