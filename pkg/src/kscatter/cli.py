"""Command-line interface.

Subcommands
-----------
validate : separation data and summability report for a configuration
qmat     : Q(lambda + i0) entries
smat     : scattering-matrix data at one energy (kernel samples on the six
           coordinate axis directions, Cayley matrix, determinant,
           condition number, unitarity defect)
dets     : det S over an energy sweep (modulus and phase columns)
xsect    : amplitude and cross sections at one energy and incoming direction
add      : incremental point-addition trace with deviation columns against
           direct assembly
sweep    : per-energy rows of phase, total cross section and unitarity defect

Common flags: --config PATH, --lambda X or A:B:STEP (inclusive), --ntheta,
--nphi, --convention {4pi,1}, --format {json,csv}, --out PATH,
--direction "x,y,z". The environment variable KS_DEFAULT_GRID ("NT" or
"NT,NP") overrides the automatic resolution rule when --ntheta is absent.

Output is deterministic: fixed field order, floats printed with 17
significant digits, rows sorted by energy. Exit codes: 0 success, 2 input
error, 3 numerical singularity. Errors are emitted to stderr as a JSON
object {"error": {"type": ..., "message": ...}}.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import incremental as inc
from .config import (
    CouplingOperator,
    PointConfiguration,
    build_configuration,
    check_summability,
    lattice_line,
)
from .errors import KScatterError, NumericalSingularityError, ParseError
from .greens import SpectralPoint, q_matrix
from .scattering import (
    assemble_s,
    cross_section,
    det_s,
    cayley_on_span,
    kernel_matrix,
    s_kernel,
    unitarity_defect,
)
from .sphere import default_resolution, make_grid

FOUR_PI = 4.0 * np.pi

_AXIS_DIRECTIONS = [
    (1.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, -1.0),
]


# --- deterministic rendering -------------------------------------------------

def _fmt(x: float) -> str:
    if not np.isfinite(x):
        raise ParseError(f"non-finite value {x!r} in output")
    return format(float(x), ".17g")


def _render_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(k)}: {_render_json(v, indent + 1)}' for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise ParseError(f"cannot render {type(obj).__name__} deterministically")


def _render_csv(fieldnames, rows) -> str:
    lines = [",".join(fieldnames)]
    for row in rows:
        cells = []
        for name in fieldnames:
            v = row[name]
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(_fmt(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _cplx(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


# --- configuration loading ----------------------------------------------------

def load_config(path) -> tuple[PointConfiguration, bool]:
    """Parse a JSON configuration document.

    Returns (configuration, generated) where ``generated`` marks families
    expanded from a generator (treated as truncations of infinite families
    by the summability check). Exactly one of "points" and "generator" must
    be present; "coupling" is {"diagonal": [...]} or {"matrix": [[...]]};
    optional "convention" is "4pi" (default) or "1".
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top-level document must be an object")

    has_points = "points" in doc
    has_gen = "generator" in doc
    if has_points == has_gen:
        raise ParseError(f"{path}: provide exactly one of 'points' and 'generator'")

    convention = doc.get("convention", "4pi")
    if convention not in ("4pi", "1"):
        raise ParseError(f"{path}: field 'convention' must be '4pi' or '1', got {convention!r}")
    conv = FOUR_PI if convention == "4pi" else 1.0

    if has_gen:
        gen = doc["generator"]
        if not isinstance(gen, dict) or "lattice_line" not in gen:
            raise ParseError(f"{path}: field 'generator' must contain 'lattice_line'")
        params = gen["lattice_line"]
        try:
            points, weights = lattice_line(
                count=int(params["count"]),
                spacing=float(params.get("spacing", 1.0)),
                weight_law=str(params.get("weight_law", "n^4")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: bad lattice_line generator: {exc}") from exc
        coupling = CouplingOperator.diagonal(weights, conv)
        return build_configuration(points, coupling), True

    points = doc["points"]
    if "coupling" not in doc:
        raise ParseError(f"{path}: missing required field 'coupling'")
    coup = doc["coupling"]
    if not isinstance(coup, dict) or ("diagonal" in coup) == ("matrix" in coup):
        raise ParseError(
            f"{path}: field 'coupling' must contain exactly one of 'diagonal' and 'matrix'"
        )
    try:
        if "diagonal" in coup:
            coupling = CouplingOperator.diagonal(
                np.asarray(coup["diagonal"], dtype=float), conv
            )
        else:
            coupling = CouplingOperator.hermitian(
                np.asarray(coup["matrix"], dtype=float), conv
            )
        return build_configuration(np.asarray(points, dtype=float), coupling), False
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed numeric data: {exc}") from exc


# --- argument handling --------------------------------------------------------

def _parse_lambdas(text: str) -> list[float]:
    if text is None:
        raise ParseError("missing required --lambda")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError(f"bad --lambda range {text!r}; expected A:B:STEP")
        try:
            a, b, step = (float(t) for t in parts)
        except ValueError as exc:
            raise ParseError(f"bad --lambda range {text!r}") from exc
        if step <= 0 or b < a:
            raise ParseError("lambda range requires step > 0 and B >= A")
        count = int(np.floor((b - a) / step + 1e-9)) + 1
        vals = [a + i * step for i in range(count)]
    else:
        try:
            vals = [float(text)]
        except ValueError as exc:
            raise ParseError(f"bad --lambda value {text!r}") from exc
    if not vals or any(v <= 0 for v in vals):
        raise ParseError("lambda values must be positive")
    return vals


def _parse_direction(text: str) -> np.ndarray:
    try:
        parts = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad --direction {text!r}") from exc
    if len(parts) != 3 or not any(parts):
        raise ParseError("--direction must be a nonzero 'x,y,z' triple")
    v = np.asarray(parts)
    return v / np.linalg.norm(v)


def _resolution(args, lam: float, config: PointConfiguration) -> tuple[int, int]:
    if args.ntheta is not None:
        n_theta = args.ntheta
        n_phi = args.nphi if args.nphi is not None else 2 * n_theta
        return n_theta, n_phi
    env = os.environ.get("KS_DEFAULT_GRID")
    if env:
        parts = env.split(",")
        try:
            n_theta = int(parts[0])
            n_phi = int(parts[1]) if len(parts) > 1 else 2 * n_theta
        except ValueError as exc:
            raise ParseError(f"bad KS_DEFAULT_GRID={env!r}") from exc
        return n_theta, n_phi
    return default_resolution(lam, config.diameter)


def _load(args) -> PointConfiguration:
    config, generated = load_config(args.config)
    args._generated = generated
    if args.convention is not None:
        conv = FOUR_PI if args.convention == "4pi" else 1.0
        if config.coupling.is_diagonal:
            coupling = CouplingOperator.diagonal(config.coupling.weights, conv)
        else:
            coupling = CouplingOperator.hermitian(config.coupling.matrix, conv)
        config = build_configuration(config.points, coupling)
    return config


# --- subcommands ---------------------------------------------------------------

def _cmd_validate(args):
    config = _load(args)
    sep = config.separation
    if config.coupling.is_diagonal:
        report = check_summability(
            sep.delta, weights=config.coupling.weights, finite=not args._generated,
            truncation_orders=None,
        )
    else:
        report = check_summability(
            sep.delta,
            b_matrix=config.coupling.abs_inv_sqrt(),
            finite=not args._generated,
            truncation_orders=None,
        )
    doc = {
        "command": "validate",
        "n_points": config.n_points,
        "d": None if sep.d is None else float(sep.d),
        "delta": [float(x) for x in sep.delta],
        "summability": {
            "orders": list(report.orders),
            "sum_b": list(report.sum_b),
            "sum_b_over_delta": None
            if report.sum_b_over_delta is None
            else list(report.sum_b_over_delta),
            "verdict": report.verdict,
            "tail_estimate": report.tail_estimate,
            "detail": report.detail,
        },
    }
    rows = [
        {
            "index": i,
            "delta": float(sep.delta[i]),
            "d": float(sep.d) if sep.d is not None else "",
            "verdict": report.verdict,
        }
        for i in range(config.n_points)
    ]
    return doc, ["index", "delta", "d", "verdict"], rows


def _cmd_qmat(args):
    config = _load(args)
    lam = _parse_lambdas(args.lam)[0]
    z = SpectralPoint.boundary_plus(lam)
    entries = q_matrix(z, config).entries
    doc = {
        "command": "qmat",
        "lambda": lam,
        "n_points": config.n_points,
        "sqrt_z": _cplx(z.sqrt_z),
        "entries": [[_cplx(v) for v in row] for row in entries],
    }
    rows = [
        {"m": m, "n": n, "re": float(entries[m, n].real), "im": float(entries[m, n].imag)}
        for m in range(config.n_points)
        for n in range(config.n_points)
    ]
    return doc, ["m", "n", "re", "im"], rows


def _smat_payload(args, config, lam):
    n_theta, n_phi = _resolution(args, lam, config)
    grid = make_grid(n_theta, n_phi)
    smat = assemble_s(lam, config, grid)
    det = det_s(smat)
    defect = unitarity_defect(smat)
    return grid, smat, det, defect


def _cmd_smat(args):
    config = _load(args)
    lam = _parse_lambdas(args.lam)[0]
    grid, smat, det, defect = _smat_payload(args, config, lam)
    cayley = cayley_on_span(smat)
    samples = []
    rows = []
    for n_dir in _AXIS_DIRECTIONS:
        for np_dir in _AXIS_DIRECTIONS:
            val = s_kernel(smat, n_dir, np_dir)
            samples.append({"n": list(n_dir), "n_prime": list(np_dir), "value": _cplx(val)})
            rows.append(
                {
                    "lambda": lam,
                    "n_x": n_dir[0], "n_y": n_dir[1], "n_z": n_dir[2],
                    "np_x": np_dir[0], "np_y": np_dir[1], "np_z": np_dir[2],
                    "k_re": val.real, "k_im": val.imag,
                    "cond": smat.cond,
                    "unitarity_defect": defect,
                    "det_re": det.real, "det_im": det.imag,
                }
            )
    doc = {
        "command": "smat",
        "lambda": lam,
        "n_points": config.n_points,
        "n_theta": grid.n_theta,
        "n_phi": grid.n_phi,
        "convention": smat.convention,
        "cond": smat.cond,
        "unitarity_defect": defect,
        "det": _cplx(det),
        "cayley": [[_cplx(v) for v in row] for row in cayley],
        "kernel_samples": samples,
    }
    fields = [
        "lambda", "n_x", "n_y", "n_z", "np_x", "np_y", "np_z",
        "k_re", "k_im", "cond", "unitarity_defect", "det_re", "det_im",
    ]
    return doc, fields, rows


def _sweep_one(args, config, lam, direction):
    n_theta, n_phi = _resolution(args, lam, config)
    grid = make_grid(n_theta, n_phi)
    smat = assemble_s(lam, config, grid)
    det = det_s(smat)
    xs = cross_section(lam, config, grid, direction, smat=smat)
    return {
        "lambda": lam,
        "det_phase": float(np.angle(det)),
        "det_mod": abs(det),
        "sigma_total": xs.sigma_total,
        "unitarity_defect": unitarity_defect(smat),
        "cond": smat.cond,
    }


def _cmd_sweep(args):
    config = _load(args)
    lams = _parse_lambdas(args.lam)
    direction = _parse_direction(args.direction)
    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(lambda lam: _sweep_one(args, config, lam, direction), lams))
    rows.sort(key=lambda r: r["lambda"])
    doc = {"command": "sweep", "n_points": config.n_points, "rows": rows}
    fields = ["lambda", "det_phase", "det_mod", "sigma_total", "unitarity_defect", "cond"]
    return doc, fields, rows


def _cmd_dets(args):
    config = _load(args)
    lams = _parse_lambdas(args.lam)

    def one(lam):
        _, smat, det, _ = _smat_payload(args, config, lam)
        return {
            "lambda": lam,
            "det_mod": abs(det),
            "det_phase": float(np.angle(det)),
            "cond": smat.cond,
        }

    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(one, lams))
    rows.sort(key=lambda r: r["lambda"])
    doc = {"command": "dets", "n_points": config.n_points, "rows": rows}
    return doc, ["lambda", "det_mod", "det_phase", "cond"], rows


def _cmd_xsect(args):
    config = _load(args)
    lam = _parse_lambdas(args.lam)[0]
    direction = _parse_direction(args.direction)
    n_theta, n_phi = _resolution(args, lam, config)
    grid = make_grid(n_theta, n_phi)
    xs = cross_section(lam, config, grid, direction)
    doc = {
        "command": "xsect",
        "lambda": lam,
        "direction": [float(v) for v in xs.n_in],
        "n_theta": grid.n_theta,
        "n_phi": grid.n_phi,
        "sigma_total": xs.sigma_total,
        "optical_lhs": xs.optical_lhs,
        "optical_rhs": xs.optical_rhs,
        "forward_amplitude": _cplx(xs.f_forward),
        "cond": xs.cond,
        "amplitude": [
            {
                "n": [float(c) for c in grid.nodes[i]],
                "f": _cplx(xs.f[i]),
                "sigma_diff": float(xs.sigma_diff[i]),
            }
            for i in range(grid.size)
        ],
    }
    rows = [
        {
            "lambda": lam,
            "nin_x": float(xs.n_in[0]),
            "nin_y": float(xs.n_in[1]),
            "nin_z": float(xs.n_in[2]),
            "sigma_total": xs.sigma_total,
            "optical_lhs": xs.optical_lhs,
            "optical_rhs": xs.optical_rhs,
            "cond": xs.cond,
        }
    ]
    fields = [
        "lambda", "nin_x", "nin_y", "nin_z",
        "sigma_total", "optical_lhs", "optical_rhs", "cond",
    ]
    return doc, fields, rows


def _cmd_add(args):
    config = _load(args)
    if not config.coupling.is_diagonal:
        raise ParseError("the add trace requires a diagonal coupling")
    lam = _parse_lambdas(args.lam)[0]
    n_theta, n_phi = _resolution(args, lam, config)
    grid = make_grid(n_theta, n_phi)
    state = inc.IncrementalState.empty(lam, config.coupling.convention)
    det_running = 1.0 + 0.0j
    kernel_running = np.zeros((grid.size, grid.size), dtype=complex)
    rows = []
    for step in range(config.n_points):
        state, _ = inc.add_point(state, config.points[step], config.coupling.weights[step])
        upd = inc.update_data(state, grid)
        part = build_configuration(
            config.points[: step + 1],
            CouplingOperator.diagonal(
                config.coupling.weights[: step + 1], config.coupling.convention
            ),
        )
        smat = assemble_s(lam, part, grid)
        det_direct = det_s(smat)
        det_running = inc.det_recursion(det_running, upd, grid)
        kernel_running = inc.s_rank_one_update(kernel_running, upd)
        dev_coeff = float(np.abs(state.coeff - smat.coeff).max())
        dev_kernel = float(np.abs(kernel_matrix(smat) - kernel_running).max())
        rows.append(
            {
                "n_points": step + 1,
                "d_re": upd.d.real,
                "d_im": upd.d.imag,
                "xi_d_residual": float(abs(upd.xi[-1] * upd.d - 1.0)),
                "dev_coeff": dev_coeff,
                "dev_kernel": dev_kernel,
                "dev_det": float(abs(det_running - det_direct)),
                "cond": smat.cond,
            }
        )
    doc = {
        "command": "add",
        "lambda": lam,
        "n_theta": grid.n_theta,
        "n_phi": grid.n_phi,
        "det_d_exponent": inc.DET_D_EXPONENT,
        "rows": rows,
    }
    fields = [
        "n_points", "d_re", "d_im", "xi_d_residual",
        "dev_coeff", "dev_kernel", "dev_det", "cond",
    ]
    return doc, fields, rows


_COMMANDS = {
    "validate": _cmd_validate,
    "qmat": _cmd_qmat,
    "smat": _cmd_smat,
    "dets": _cmd_dets,
    "xsect": _cmd_xsect,
    "add": _cmd_add,
    "sweep": _cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kscatter",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="path to the JSON configuration")
        p.add_argument(
            "--lambda", dest="lam", default=None,
            help="energy value X or inclusive range A:B:STEP",
        )
        p.add_argument("--ntheta", type=int, default=None, help="polar resolution override")
        p.add_argument("--nphi", type=int, default=None, help="azimuthal resolution override")
        p.add_argument(
            "--convention", choices=("4pi", "1"), default=None,
            help="coupling scale in the Krein denominator (overrides the config file)",
        )
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument(
            "--direction", default="0,0,1",
            help="incoming direction 'x,y,z' for xsect and sweep cross sections",
        )
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _error_payload(exc: Exception) -> str:
    return (
        _render_json({"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n"
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc, fields, rows = _COMMANDS[args.command](args)
        if args.format == "json":
            text = _render_json(doc) + "\n"
        else:
            text = _render_csv(fields, rows)
        _emit(text, args.out)
        return 0
    except NumericalSingularityError as exc:
        sys.stderr.write(_error_payload(exc))
        return 3
    except KScatterError as exc:
        sys.stderr.write(_error_payload(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
