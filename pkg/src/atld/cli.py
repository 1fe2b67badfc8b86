"""Command-line front end.

Every command prints one JSON report line on stdout (or a plain rendering
with ``--format text``) and a short summary on stderr.

Exit codes: 0 success, 1 negative answer (property false at ``--state``,
failed validation, nothing synthesized), 2 input error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from atld.formula import FormulaSyntaxError, parse_formula, parse_update, render_formula, render_update
from atld.mc_perfect import EpistemicConstructError, Stats
from atld.model import ModelError, dump_model, load_model, model_to_dict, validate
from atld.reference import BudgetExceeded

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _digest(path) -> str:
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _state(model, state):
    if state is not None and state not in model.states:
        raise InputError(f"unknown state {state!r}")
    return state


def _sorted_states(model, states) -> list:
    return [s for s in model.states if s in states]


def _stats_dict(stats: Stats) -> dict:
    return {"pre_calls": stats.pre_calls, "models": stats.models, "strategies": stats.strategies}


# commands ------------------------------------------------------------------
# each returns (exit code, result payload, counters, human summary)


def cmd_validate(args):
    model = _model(args.model)
    report = validate(model)
    summary = "valid" if report.ok else "invalid:\n  " + "\n  ".join(report.violations)
    return (EXIT_OK if report.ok else EXIT_FALSE), {"ok": report.ok, "violations": report.violations}, {}, summary


def _evaluate(model, formula, args, stats):
    if args.epistemic:
        from atld.mc_epistemic import check_epistemic
        return check_epistemic(model, formula, semantics=args.semantics, budget=args.budget, stats=stats)
    from atld.mc_perfect import check
    return check(model, formula, stats=stats)


def cmd_check(args):
    model = _model(args.model)
    formula = parse_formula(args.formula)
    state = _state(model, args.state)
    stats = Stats()
    sat = _evaluate(model, formula, args, stats)
    result = {"formula": render_formula(formula), "states": _sorted_states(model, sat)}
    summary = f"{len(sat)}/{len(model.states)} states satisfy the formula"
    code = EXIT_OK
    if state is not None:
        holds = state in sat
        result.update(state=state, holds=holds)
        summary = f"{'holds' if holds else 'fails'} at {state}; " + summary
        code = EXIT_OK if holds else EXIT_FALSE
    return code, result, _stats_dict(stats), summary


def cmd_apply(args):
    from atld.model import apply_epistemic, apply_update
    model = _model(args.model)
    spec = parse_update(args.update)
    stats = Stats()
    evaluate = lambda m, f: _evaluate(m, f, args, stats)
    new = (apply_epistemic if args.epistemic else apply_update)(model, spec, evaluate)
    result = {"update": render_update(spec)}
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(dump_model(new))
        result["output"] = args.output
    else:
        result["model"] = model_to_dict(new)
    return EXIT_OK, result, _stats_dict(stats), f"applied {render_update(spec)}"


def cmd_synth(args):
    from atld.synthesis import CandidatePool, solve_bounded
    model = _model(args.model)
    state = _state(model, args.state)
    goal = parse_formula(args.goal)
    if args.pool:
        try:
            pool = CandidatePool.load(args.pool, model)
        except OSError as exc:
            raise InputError(f"cannot read {args.pool}: {exc.strerror}") from None
        if args.bound is not None:
            pool = CandidatePool(**{**pool.__dict__, "max_length": args.bound})
    else:
        pool = CandidatePool.default(model, tags=args.tags, max_length=1 if args.bound is None else args.bound)
    res = solve_bounded(model, state, goal, pool, epistemic=args.epistemic, semantics=args.semantics,
                        budget=args.budget, jobs=args.jobs)
    result = {
        "found": res.found,
        "sequence": [render_update(s) for s in res.sequence],
        "bound": pool.max_length,
        "complete_relative_to_pool": True,
        "pool_updates": res.pool_updates,
    }
    if res.found:
        summary = "found: " + (" ".join(result["sequence"]) or "(empty sequence)")
    else:
        summary = "no update sequence in the candidate pool achieves the goal"
    return (EXIT_OK if res.found else EXIT_FALSE), result, {"candidates": res.checked}, summary


def cmd_gen3sat(args):
    from atld.synthesis import CnfInstance, canonical_pool, gen_3sat
    try:
        cnf = CnfInstance.load(args.dimacs)
    except OSError as exc:
        raise InputError(f"cannot read {args.dimacs}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"{args.dimacs}: {exc}") from None
    model, goal, start = gen_3sat(cnf)
    os.makedirs(args.outdir, exist_ok=True)
    paths = {k: os.path.join(args.outdir, name) for k, name in
             (("model", "model.json"), ("goal", "goal.txt"), ("pool", "pool.json"))}
    with open(paths["model"], "w") as fh:
        fh.write(dump_model(model))
    with open(paths["goal"], "w") as fh:
        fh.write(render_formula(goal) + "\n")
    pool = canonical_pool(cnf)
    with open(paths["pool"], "w") as fh:
        json.dump({"preconditions": [render_formula(p) for p in pool.preconditions],
                   "actions": list(pool.actions), "coalitions": [sorted(c) for c in pool.coalitions],
                   "signs": list(pool.signs), "max_length": pool.max_length}, fh, indent=2)
        fh.write("\n")
    result = {"start": start, "states": len(model.states), **paths}
    return EXIT_OK, result, {}, f"wrote {len(model.states)}-state model to {paths['model']}"


def cmd_norm(args):
    from atld.normative import (
        AtomicSocialLaw, BehaviouralConstraint, check_effective, eta_to_update, zeta_to_update,
    )
    model = _model(args.model)
    goal = parse_formula(args.goal)
    path = args.eta or args.zeta
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if args.eta:
        law = BehaviouralConstraint.from_dict(data)
        _, spec = eta_to_update(model, law)
    else:
        law = AtomicSocialLaw.from_dict(data)
        spec = zeta_to_update(law)
    sat = check_effective(model, law, goal)
    result = {"update": render_update(spec), "states": _sorted_states(model, sat)}
    code = EXIT_OK
    if args.state is not None:
        _state(model, args.state)
        result.update(state=args.state, holds=args.state in sat)
        code = EXIT_OK if args.state in sat else EXIT_FALSE
    return code, result, {}, f"{len(sat)}/{len(model.states)} states satisfy the goal under the law"


# plumbing --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--budget", type=int, default=10**6, help="strategy / candidate budget")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for synthesis")
    common.add_argument("--epistemic", action="store_true", help="imperfect-information semantics")
    common.add_argument("--semantics", choices=("subjective", "objective"), default="subjective",
                        help="strategic semantics in epistemic mode")

    p = argparse.ArgumentParser(prog="atld", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check model well-formedness")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate, inputs=("model",))

    s = sub.add_parser("check", parents=[common], help="compute the satisfaction set of a formula")
    s.add_argument("model")
    s.add_argument("formula")
    s.add_argument("--state")
    s.set_defaults(func=cmd_check, inputs=("model",))

    s = sub.add_parser("apply", parents=[common], help="apply an update to a model")
    s.add_argument("model")
    s.add_argument("update")
    s.add_argument("-o", "--output", help="write the updated model here")
    s.set_defaults(func=cmd_apply, inputs=("model",))

    s = sub.add_parser("synth", parents=[common], help="search for an update sequence")
    s.add_argument("model")
    s.add_argument("state")
    s.add_argument("goal")
    s.add_argument("--bound", type=int, help="maximum sequence length (default 1)")
    s.add_argument("--pool", help="candidate pool JSON")
    s.add_argument("--tags", action="store_true", help="add per-state propositions to the default pool")
    s.set_defaults(func=cmd_synth, inputs=("model", "pool"))

    s = sub.add_parser("gen3sat", parents=[common], help="build the model and goal for a DIMACS CNF")
    s.add_argument("dimacs")
    s.add_argument("outdir")
    s.set_defaults(func=cmd_gen3sat, inputs=("dimacs",))

    s = sub.add_parser("norm", parents=[common], help="check a goal under a normative constraint")
    s.add_argument("model")
    law = s.add_mutually_exclusive_group(required=True)
    law.add_argument("--eta", help="behavioural constraint JSON (action -> agent -> states)")
    law.add_argument("--zeta", help="social law JSON (action -> agent -> formula)")
    s.add_argument("goal")
    s.add_argument("--state")
    s.set_defaults(func=cmd_norm, inputs=("model", "eta", "zeta"))
    return p


def _render_text(report: dict) -> str:
    lines = [f"command: {report['command'][0]}"]
    for k, v in report["result"].items():
        if k == "model":
            v = json.dumps(v, sort_keys=False)
        elif isinstance(v, list):
            v = ", ".join(map(str, v)) if v else "(none)"
        lines.append(f"{k}: {v}")
    return "\n".join(lines)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    report = {"command": argv, "inputs": {}}
    try:
        for key in args.inputs:
            path = getattr(args, key, None)
            if path and os.path.exists(path):
                report["inputs"][path] = _digest(path)
        code, result, counters, summary = args.func(args)
    except BudgetExceeded as exc:
        code, result, counters, summary = EXIT_BUDGET, {"error": str(exc), "attempted": exc.count}, {}, f"error: {exc}"
    except FormulaSyntaxError as exc:
        code, result, counters, summary = EXIT_INPUT, {"error": str(exc)}, {}, f"error: {exc}"
    except (InputError, ModelError, EpistemicConstructError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        code, result, counters, summary = EXIT_INPUT, {"error": msg}, {}, f"error: {msg}"
    report.update(exit_code=code, result=result, counters=counters,
                  timing={"seconds": round(time.perf_counter() - start, 6)})
    if args.format == "json":
        print(json.dumps(report))
        print(summary, file=sys.stderr)
    else:
        print(_render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
