"""Command-line front end.

Exit codes: 0 success, 1 the model has no answer (for example an
infeasible observation), 2 malformed input.  Output is produced in full
before anything is written, so a failing command prints only an error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence, TextIO

import numpy as np

from invfit import app
from invfit.constrained import (
    CostConstraintSet,
    EpsConstraintSet,
    solve_gio_constrained_cost,
    solve_gio_constrained_eps,
)
from invfit.errors import DomainError, InputError
from invfit.geometry import Norm, classify
from invfit.gof import grid_csv, rho, rho_grid
from invfit.instance import Instance, load_instance
from invfit.inverse import solve_gio

NORMS = [m.value for m in Norm]


def _round(v, digits: int):
    """Round floats to ``digits`` significant digits; ``digits <= 0`` keeps them."""
    if isinstance(v, dict):
        return {k: _round(x, digits) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x, digits) for x in v]
    if isinstance(v, np.ndarray):
        return _round(v.tolist(), digits)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        if v == 0.0:
            return 0.0
        return float(f"{v:.{digits}g}") if digits > 0 else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def dump_json(obj, digits: int) -> str:
    return json.dumps(_round(obj, digits), sort_keys=True, indent=2) + "\n"


def _need_point(inst: Instance):
    if inst.x_hat is None:
        raise InputError("instance has no 'x_hat'")
    return inst.x_hat


def cmd_fit(args, inst: Instance) -> str:
    norm = Norm.parse(args.norm)
    x_hat = _need_point(inst)
    if inst.cost_constraints is not None:
        sol = solve_gio_constrained_cost(inst.poly, x_hat, norm, inst.cost_constraints)
    elif inst.eps_constraints is not None:
        sol = solve_gio_constrained_eps(inst.poly, x_hat, norm, inst.eps_constraints)
    else:
        sol = solve_gio(inst.poly, x_hat, norm)
    return dump_json(sol.to_dict(), args.precision)


def cmd_rho(args, inst: Instance) -> str:
    cons: CostConstraintSet | EpsConstraintSet | None = inst.cost_constraints or inst.eps_constraints
    rep = rho(inst.poly, _need_point(inst), args.norm, cons, args.adjust_denominator)
    return dump_json(rep.to_dict(), args.precision)


def cmd_grid(args, inst: Instance) -> str:
    pts = rho_grid(inst.poly, args.norm, args.resolution)
    return grid_csv(pts, args.precision if args.precision > 0 else None)


def cmd_classify(args, inst: Instance) -> str:
    pos = classify(inst.poly, _need_point(inst))
    return dump_json({"position": pos.value}, args.precision)


def cmd_app_demo(args) -> str:
    if args.seed is None:
        inst, plan = app.load_table4("perturbed")
        source = "shipped observed plan"
    else:
        inst, base = app.load_table4("unperturbed")
        plan = app.perturb_plan(base, inst, args.seed)
        source = f"unperturbed optimum perturbed with seed {args.seed}"
    results = app.run_models(inst, plan)
    d = args.precision if args.precision > 0 else 17
    lines = [f"Inverse production-planning models ({source}); costs scaled to c2 = 21", ""]
    header = f"{'model':<8}  {'constraints on c':<34}  {'c* (scaled)':<48}  rho_a"
    lines += [header, "-" * len(header)]
    for r in results:
        c = "[" + ", ".join(f"{v:.{d}g}" for v in r.scaled_cost) + "]"
        lines.append(f"{r.name:<8}  {r.label:<34}  {c:<48}  {r.rho_a:.{min(d, 6)}g}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invfit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True, norm=True):
        if instance:
            sp.add_argument("--instance", required=True, help="JSON instance file")
        if norm:
            sp.add_argument("--norm", choices=NORMS, default="p2", help="loss variant (default p2)")
        sp.add_argument("--precision", type=int, default=6,
                        help="significant digits in output; 0 prints full precision")
        sp.add_argument("--out", help="write output here instead of stdout")

    common(sub.add_parser("fit", help="impute the cost vector"))
    sp = sub.add_parser("rho", help="goodness-of-fit report")
    common(sp)
    sp.add_argument("--adjust-denominator", action="store_true",
                    help="drop rows whose error is unattainable under the instance constraints")
    sp = sub.add_parser("grid", help="rho and rho_tilde over a grid (2-D only), as CSV")
    common(sp)
    sp.add_argument("--resolution", type=int, default=50)
    common(sub.add_parser("classify", help="interior, boundary or infeasible"), norm=False)
    sp = sub.add_parser("app-demo", help="fit the four production-planning models")
    common(sp, instance=False, norm=False)
    sp.add_argument("--seed", type=int, help="fit a fresh perturbation of the optimal plan")
    return p


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "app-demo":
            text = cmd_app_demo(args)
        else:
            inst = load_instance(args.instance)
            text = {"fit": cmd_fit, "rho": cmd_rho, "grid": cmd_grid,
                    "classify": cmd_classify}[args.command](args, inst)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            out.write(text)
    except DomainError as e:
        err.write(f"error: {type(e).__name__}: {e}\n")
        return 1
    except (InputError, ValueError, OSError) as e:
        err.write(f"error: {type(e).__name__}: {e}\n")
        return 2
    return 0


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
