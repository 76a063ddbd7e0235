"""Command-line front end: classify, simulate, reach and plan.

Specs are JSON files validated against an embedded schema; outputs are JSON
reports (schema-versioned, sorted keys), CSV series, PGM occupancy bitmaps
and timestamp-free SVG phase portraits.  Exit codes: 0 on success, 1 on
input errors, 2 when classification ends Unclassified.
"""

from __future__ import annotations

import json
import os
import sys as _sys
from importlib import metadata, resources

import click
import jsonschema
import numpy as np

from . import covering, plan as plan_mod, reach as reach_mod
from .group import GroupElement, GroupVariant, SIMPLY_CONNECTED
from .kernel2d import ThetaFamily
from .planar import ControlRange, PiecewiseControl, equilibrium, omega_hat
from .system import (
    InvariantField,
    LinearField,
    SystemSpec,
    conjugate_to_planar,
    larc,
    nilrank,
    simulate,
)

SCHEMA_VERSION = "1"

SPEC_SCHEMA = {
    "type": "object",
    "required": ["theta", "A", "xi", "alpha", "eta", "omega"],
    "additionalProperties": False,
    "properties": {
        "theta": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["jordan", "diagonal", "spiral"]},
                "gamma": {"type": "number"},
            },
        },
        "A": {
            "type": "array", "minItems": 2, "maxItems": 2,
            "items": {
                "type": "array", "minItems": 2, "maxItems": 2,
                "items": {"type": "number"},
            },
        },
        "xi": {"type": "array", "minItems": 2, "maxItems": 2,
               "items": {"type": "number"}},
        "alpha": {"type": "number"},
        "eta": {"type": "array", "minItems": 2, "maxItems": 2,
                "items": {"type": "number"}},
        "omega": {"type": "array", "minItems": 2, "maxItems": 2,
                  "items": {"type": "number"}},
        "variant": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["simply_connected", "se2n", "aff_circle"]},
                "n": {"type": "integer", "minimum": 1},
            },
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "budget": {"type": "integer", "minimum": 1},
                "grid": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "box": {
                            "type": "array", "minItems": 2, "maxItems": 2,
                            "items": {
                                "type": "array", "minItems": 2, "maxItems": 2,
                                "items": {"type": "number"},
                            },
                        },
                        "resolution": {"type": "integer", "minimum": 8},
                    },
                },
            },
        },
    },
}

DEFAULT_NUMERICS = {
    "step": 1e-3,
    "seed": 0,
    "horizon": 15.0,
    "budget": 20_000,
    "grid": {"box": [[-10.0, 10.0], [-10.0, 10.0]], "resolution": 64},
}


class InputError(click.ClickException):
    exit_code = 1


def _tool_version() -> str:
    try:
        return metadata.version("solv3d")
    except metadata.PackageNotFoundError:
        return "unknown"


def load_spec(path: str) -> tuple[SystemSpec, dict, dict]:
    """Parse and validate a spec file into (SystemSpec, numerics, raw echo)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    try:
        jsonschema.validate(raw, SPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"{path}: at {exc.json_path}: {exc.message}")

    th = raw["theta"]
    try:
        family = ThetaFamily(th["family"], th.get("gamma"))
        var_raw = raw.get("variant", {"type": "simply_connected"})
        if var_raw["type"] == "simply_connected":
            variant = SIMPLY_CONNECTED
        else:
            variant = GroupVariant(var_raw["type"], var_raw.get("n", 1))
        spec = SystemSpec(
            theta=family,
            drift=LinearField(np.array(raw["A"], dtype=float),
                              np.array(raw["xi"], dtype=float)),
            input=InvariantField(float(raw["alpha"]),
                                 np.array(raw["eta"], dtype=float)),
            omega=ControlRange(float(raw["omega"][0]), float(raw["omega"][1])),
            variant=variant,
        )
    except ValueError as exc:
        raise InputError(f"{path}: {exc}")

    numerics = json.loads(json.dumps(DEFAULT_NUMERICS))
    user = raw.get("numerics", {})
    for key, val in user.items():
        if key == "grid":
            numerics["grid"].update(val)
        else:
            numerics[key] = val
    return spec, numerics, raw


def dump_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _base_report(raw_spec: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "solv3d", "version": _tool_version()},
        "input": raw_spec,
    }


# -- SVG ---------------------------------------------------------------------


def _svg_open(box, size=480) -> list[str]:
    (x0, x1), (y0, y1) = box
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f"<!-- data box x:[{x0},{x1}] y:[{y0},{y1}] -->",
    ]


def _svg_xy(p, box, size=480):
    (x0, x1), (y0, y1) = box
    sx = (p[0] - x0) / (x1 - x0) * size
    sy = size - (p[1] - y0) / (y1 - y0) * size
    return f"{sx:.2f},{sy:.2f}"


def _svg_polyline(points, box, color, width=1.2, size=480) -> str:
    coords = " ".join(_svg_xy(p, box, size) for p in points)
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
        f'points="{coords}"/>'
    )


def _equilibrium_overlay(spec, box) -> str:
    lo, hi = omega_hat(spec).component_of_zero
    us = np.linspace(lo + 1e-6, hi - 1e-6, 200)
    pts = [equilibrium(spec, float(u)) for u in us]
    return _svg_polyline(pts, box, "#cc3333", width=2.0)


def write_svg(path: str, elements: list[str], box) -> None:
    body = _svg_open(box) + elements + ["</svg>"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(body) + "\n")


# -- commands ----------------------------------------------------------------


@click.group()
@click.version_option(version=_tool_version(), prog_name="solv3d")
def main():
    """Linear control systems on the 3D solvable nonnilpotent Lie groups.

    \b
    Exit codes:
      0  success
      1  input error (malformed spec, violated precondition)
      2  classification ended Unclassified
    """


_common = [
    click.option("--out-dir", type=click.Path(file_okay=False), default=".",
                 show_default=True, help="Directory for output artifacts."),
    click.option("--seed", type=int, default=None,
                 help="Override the spec's RNG seed."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@main.command("classify")
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@common_options
@click.option("--budget", type=int, default=None, help="Override sample budget.")
@click.option("--horizon", type=float, default=None, help="Override time horizon.")
@click.option("--verify/--no-verify", default=True, show_default=True,
              help="Run the numerical cross-examination of the verdict.")
def cmd_classify(spec_path, out_dir, seed, budget, horizon, verify):
    """Classify the control-set taxonomy of a system and write report.json."""
    sys_spec, numerics, raw = load_spec(spec_path)
    if seed is not None:
        numerics["seed"] = seed
    if budget is not None:
        numerics["budget"] = budget
    if horizon is not None:
        numerics["horizon"] = horizon
    try:
        report = reach_mod.classify(sys_spec)
    except ValueError as exc:
        raise InputError(str(exc))
    out = _base_report(raw)
    out["classification"] = report.to_dict()
    if verify:
        out["verification"] = reach_mod.verify_classification(
            report, sys_spec,
            budget=numerics["budget"],
            horizon=numerics["horizon"],
            resolution=numerics["grid"]["resolution"],
            seed=numerics["seed"],
            box=tuple(map(tuple, numerics["grid"]["box"])),
        )
    else:
        out["verification"] = {"ok": True, "checks": []}
    if sys_spec.variant.tag != GroupVariant.SIMPLY_CONNECTED:
        out["covering"] = covering.lift_control_set(report, sys_spec)
    os.makedirs(out_dir, exist_ok=True)
    dump_json(out, os.path.join(out_dir, "report.json"))
    click.echo(f"taxonomy: {report.taxonomy} ({report.rule})")
    if report.taxonomy == reach_mod.TAX_UNCLASSIFIED:
        _sys.exit(2)


def _read_control_csv(path: str) -> PiecewiseControl:
    pairs = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line or (i == 0 and line.lower().startswith("duration")):
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise InputError(f"{path}:{i + 1}: expected 'duration,value'")
                pairs.append((float(parts[0]), float(parts[1])))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read control schedule {path}: {exc}")
    if not pairs:
        raise InputError(f"{path}: empty control schedule")
    return PiecewiseControl.from_pairs(pairs)


def _write_control_csv(path: str, ctrl: PiecewiseControl) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("duration,value\n")
        for s, u in ctrl.pairs():
            fh.write(f"{s!r},{u!r}\n")


@main.command("simulate")
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--control", "control_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV schedule with duration,value rows.")
@click.option("--start", default="0,0,0", show_default=True,
              help="Initial state t,v1,v2.")
@click.option("--step", type=float, default=None, help="Integrator step override.")
@click.option("--svg/--no-svg", default=False, show_default=True,
              help="Also write a phase portrait SVG.")
@common_options
def cmd_simulate(spec_path, control_path, start, step, svg, out_dir, seed):
    """Integrate a piecewise-constant control and write trajectory.csv."""
    sys_spec, numerics, _ = load_spec(spec_path)
    ctrl = _read_control_csv(control_path)
    for u in ctrl.values:
        if not sys_spec.omega.contains(float(u)):
            raise InputError(f"control value {u:g} outside the admissible range")
    try:
        t0, v1, v2 = (float(p) for p in start.split(","))
    except ValueError:
        raise InputError(f"--start must be 't,v1,v2', got {start!r}")
    g0 = GroupElement(t0, np.array([v1, v2]))
    traj = simulate(g0, ctrl, sys_spec, step=step or numerics["step"])

    quotient = sys_spec.variant.tag != GroupVariant.SIMPLY_CONNECTED
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trajectory.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        header = "time,t,v1,v2"
        if quotient:
            header += ",t_class,v1_class,v2_class"
        fh.write(header + "\n")
        wrapped = None
        if quotient:
            wrapped = covering.project_trajectory(sys_spec, traj).states
        for i, (tm, st) in enumerate(zip(traj.times, traj.states)):
            row = ",".join(repr(float(x)) for x in (tm, st[0], st[1], st[2]))
            if quotient:
                w = wrapped[i]
                row += "," + ",".join(repr(float(x)) for x in w)
            fh.write(row + "\n")
    click.echo(f"wrote {csv_path} ({len(traj.times)} samples)")

    if svg:
        pts = traj.states[:, 1:]
        pad = 0.1 * max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]), 1.0)
        box = (
            (float(pts[:, 0].min() - pad), float(pts[:, 0].max() + pad)),
            (float(pts[:, 1].min() - pad), float(pts[:, 1].max() + pad)),
        )
        elements = [_svg_polyline(pts, box, "#225599")]
        if nilrank(sys_spec) == 2 and larc(sys_spec).holds:
            try:
                elements.append(
                    _equilibrium_overlay(conjugate_to_planar(sys_spec).planar, box)
                )
            except ValueError:
                pass
        svg_path = os.path.join(out_dir, "trajectory.svg")
        write_svg(svg_path, elements, box)
        click.echo(f"wrote {svg_path}")


@main.command("reach")
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@common_options
@click.option("--budget", type=int, default=None, help="Override sample budget.")
@click.option("--horizon", type=float, default=None, help="Override time horizon.")
@click.option("--grid-res", type=int, default=None, help="Override grid resolution.")
@click.option("--grid-box", default=None,
              help="Override grid box as 'x0,x1,y0,y1'.")
def cmd_reach(spec_path, out_dir, seed, budget, horizon, grid_res, grid_box):
    """Estimate planar reachable sets and the control set; write CSV/PGM/SVG."""
    sys_spec, numerics, raw = load_spec(spec_path)
    if nilrank(sys_spec) < 2 or not larc(sys_spec).holds:
        raise InputError(
            "reach needs an invertible drift matrix and the rank condition "
            "(the planar reduction is undefined otherwise)"
        )
    if seed is not None:
        numerics["seed"] = seed
    if budget is not None:
        numerics["budget"] = budget
    if horizon is not None:
        numerics["horizon"] = horizon
    if grid_res is not None:
        numerics["grid"]["resolution"] = grid_res
    if grid_box is not None:
        try:
            x0, x1, y0, y1 = (float(p) for p in grid_box.split(","))
        except ValueError:
            raise InputError(f"--grid-box must be 'x0,x1,y0,y1', got {grid_box!r}")
        numerics["grid"]["box"] = [[x0, x1], [y0, y1]]

    spec = conjugate_to_planar(sys_spec).planar
    box = tuple(map(tuple, numerics["grid"]["box"]))
    grid = reach_mod.reach_sets(
        spec, np.zeros(2), numerics["horizon"], numerics["budget"],
        box=box, resolution=numerics["grid"]["resolution"], seed=numerics["seed"],
    )
    est = reach_mod.control_set_estimate(grid)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "occupancy.csv"), "w", encoding="utf-8") as fh:
        fh.write(reach_mod.grid_to_csv(grid, est))
    for name, layer in (
        ("forward", grid.forward), ("backward", grid.backward), ("estimate", est.cells)
    ):
        with open(os.path.join(out_dir, f"{name}.pgm"), "w", encoding="utf-8") as fh:
            fh.write(reach_mod.grid_to_pgm(layer))
    out = _base_report(raw)
    out["reach"] = {
        "horizon": numerics["horizon"],
        "budget": numerics["budget"],
        "seed": numerics["seed"],
        "resolution": numerics["grid"]["resolution"],
        "box": numerics["grid"]["box"],
        "diagnostics": est.diagnostics,
    }
    dump_json(out, os.path.join(out_dir, "reach_report.json"))

    xs, ys = grid.cell_centers()
    cells = [
        (float(xs[i]), float(ys[j]))
        for i in range(grid.resolution) for j in range(grid.resolution)
        if est.cells[i, j]
    ]
    elements = []
    w = (box[0][1] - box[0][0]) / grid.resolution
    for cx, cy in cells:
        a = _svg_xy((cx - w / 2, cy + w / 2), box)
        elements.append(
            f'<rect x="{a.split(",")[0]}" y="{a.split(",")[1]}" '
            f'width="{480 * w / (box[0][1] - box[0][0]):.2f}" '
            f'height="{480 * w / (box[1][1] - box[1][0]):.2f}" '
            f'fill="#88aadd" stroke="none"/>'
        )
    elements.append(_equilibrium_overlay(spec, box))
    write_svg(os.path.join(out_dir, "reach.svg"), elements, box)
    click.echo(
        f"forward {est.diagnostics['forward_cells']} cells, "
        f"backward {est.diagnostics['backward_cells']}, "
        f"estimate {est.diagnostics['estimate_cells']}"
    )


@main.command("plan")
@click.argument("planner", type=click.Choice(["circle-hop", "fiber-sync", "staircase"]))
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@common_options
@click.option("--v0", default=None, help="circle-hop start point 'x,y'.")
@click.option("--u0", type=float, default=0.0, show_default=True,
              help="circle-hop target control.")
@click.option("--p1", default=None, help="fiber-sync start 't,x,y'.")
@click.option("--p2", default=None, help="fiber-sync target 't,x,y'.")
@click.option("--u-pair", default=None, help="fiber-sync dwell controls 'u1,u2'.")
@click.option("--x", "x_val", type=float, default=0.0, show_default=True,
              help="staircase start coordinate.")
@click.option("--y", "y_val", type=float, default=1.0, show_default=True,
              help="staircase intermediate coordinate.")
def cmd_plan(planner, spec_path, out_dir, seed, v0, u0, p1, p2, u_pair, x_val, y_val):
    """Run a constructive planner and write control.csv + plan_report.json."""
    sys_spec, numerics, raw = load_spec(spec_path)
    os.makedirs(out_dir, exist_ok=True)

    def parse_vec(text, n, name):
        try:
            parts = [float(p) for p in text.split(",")]
        except (AttributeError, ValueError):
            raise InputError(f"--{name} must be {n} comma-separated numbers")
        if len(parts) != n:
            raise InputError(f"--{name} must be {n} comma-separated numbers")
        return parts

    try:
        if planner == "circle-hop":
            spec = conjugate_to_planar(sys_spec).planar
            start = np.array(parse_vec(v0 or "3,0", 2, "v0"))
            interval = omega_hat(spec).component_of_zero
            result = plan_mod.circle_hop(spec, start, u0, interval)
        elif planner == "fiber-sync":
            spec = conjugate_to_planar(sys_spec).planar
            a = parse_vec(p1 or "0,0,0", 3, "p1")
            b = parse_vec(p2 or "0,0,0", 3, "p2")
            lo, hi = omega_hat(spec).component_of_zero
            if u_pair is not None:
                u1, u2 = parse_vec(u_pair, 2, "u-pair")
            else:
                u1, u2 = 0.5 * lo, 0.5 * hi
            result = plan_mod.fiber_sync(
                spec, (a[0], np.array(a[1:])), (b[0], np.array(b[1:])), u1, u2
            )
        else:
            if sys_spec.theta.tag != "spiral" or sys_spec.theta.gamma == 0.0:
                raise InputError(
                    "staircase needs the spiral family with a nonzero "
                    "scaling part (gamma != 0)"
                )
            th_inv_xi = np.linalg.solve(sys_spec.theta_matrix, sys_spec.xi)
            c = float(th_inv_xi @ th_inv_xi)
            result = plan_mod.staircase(
                sys_spec.theta.gamma, sys_spec.alpha, c, x_val, y_val, sys_spec.omega
            )
    except (ValueError, RuntimeError) as exc:
        raise InputError(f"{planner}: {exc}")

    _write_control_csv(os.path.join(out_dir, "control.csv"), result.control)
    out = _base_report(raw)
    out["plan"] = {
        "planner": planner,
        "predicted": [float(x) for x in np.atleast_1d(result.predicted)],
        "achieved": [float(x) for x in np.atleast_1d(result.achieved)],
        "endpoint_error": float(result.error),
        "legs": len(result.control),
    }
    if result.return_control is not None:
        _write_control_csv(
            os.path.join(out_dir, "control_return.csv"), result.return_control
        )
        out["plan"]["return_legs"] = len(result.return_control)
    dump_json(out, os.path.join(out_dir, "plan_report.json"))
    click.echo(f"endpoint error: {result.error:.3e}")


def report_schema() -> dict:
    """The shipped JSON schema for report files."""
    with resources.files("solv3d").joinpath("report_schema.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


if __name__ == "__main__":
    main()
