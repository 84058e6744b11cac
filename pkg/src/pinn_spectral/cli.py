"""Command-line experiment driver with schema-validated JSON configs.

Subcommands reproduce the benchmark curves: `toy` (half-line GPR vs
closed-form and grid solutions plus the convergence inset), `heat`
(manufactured-solution residuals, GPR errors, spectral-alignment curves),
`spectral` (eigenvalues, cumulative spectral functions, figures of merit),
and `kernel-check` (Monte-Carlo validation of the closed-form kernels).

Exit codes: 0 success, 1 numerical failure (structured report in
error.json), 2 configuration error. Outputs are byte-stable for identical
configs: floats are printed at 17 significant digits and every file gets a
JSON sidecar echoing the effective config and library version.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np
import threadpoolctl
from jsonschema import Draft202012Validator

from . import __version__, heat, kernels, nie, operators, spectral
from .errors import PinnSpectralError
from .gpr import ProblemData, gpr_predict, sample_collocation

PROG = "pinn-spectral"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- schemas

_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}

KERNEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {
            "enum": [
                "CosineFeature",
                "SineFeature",
                "SquaredExponential",
                "ErfArcsine",
            ]
        },
        "l": _POS_NUM,
        "sigma_a2": {**_POS_NUM, "type": ["number", "null"]},
        "sigma_w2": {**_POS_NUM, "type": ["number", "null"]},
        "bias_var": _POS_NUM,
    },
}

TOY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "toy"},
        "l": _POS_NUM,
        "g0": {"type": "number"},
        "x_max": _POS_NUM,
        "sigma2_bulk": _POS_NUM,
        "sigma2_boundary": {
            "oneOf": [_POS_NUM, {"const": "caption"}],
        },
        "n_bulk_list": {"type": "array", "items": _POS_INT, "minItems": 1},
        "n_boundary": _POS_INT,
        "inset_n_list": {"type": "array", "items": _POS_INT, "minItems": 2},
        "inset_x": _POS_NUM,
        "seed": _SEED,
        "grid_n": {"type": "integer", "minimum": 8},
        "grid_x_max": _POS_NUM,
        "x_star_max": _POS_NUM,
        "x_star_step": _POS_NUM,
        "n_k": {"type": "integer", "minimum": 3},
        "k_max": {"oneOf": [_POS_NUM, {"type": "null"}]},
    },
}

TOY_DEFAULTS = {
    "l": 1.0,
    "g0": 2.5,
    "x_max": 512.0,
    "sigma2_bulk": 0.125,
    "sigma2_boundary": "caption",
    "n_bulk_list": [128, 1024, 8192],
    "n_boundary": 1,
    "inset_n_list": [128, 256, 512, 1024, 2048, 4096, 8192],
    "inset_x": 1.2,
    "seed": 6,
    "grid_n": 2001,
    "grid_x_max": 200.0,
    "x_star_max": 6.0,
    "x_star_step": 0.1,
    "n_k": 20001,
    "k_max": None,
}

HEAT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "heat"},
        "a_list": {"type": "array", "items": _POS_NUM, "minItems": 1},
        "alpha": _POS_NUM,
        "kernel": {"oneOf": [KERNEL_SCHEMA, {"type": "null"}]},
        "nx": {"type": "integer", "minimum": 4},
        "nt": {"type": "integer", "minimum": 4},
        "residual_nx": {"type": "integer", "minimum": 8},
        "residual_nt": {"type": "integer", "minimum": 8},
        "eta_boundary": {"type": "number", "minimum": 0},
        "eta_bulk_ladder": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
            "minItems": 1,
        },
        "n_list": {"type": "array", "items": _POS_INT, "minItems": 1},
        "sigma2_bulk": _POS_NUM,
        "sigma2_boundary": _POS_NUM,
        "seed": _SEED,
        "neg_tol": _POS_NUM,
        "ak_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
}

HEAT_DEFAULTS = {
    "a_list": [0.0625, 0.03125],
    "alpha": 2.0,
    "kernel": None,
    "nx": 64,
    "nt": 32,
    "residual_nx": 201,
    "residual_nt": 101,
    "eta_boundary": 1e4,
    "eta_bulk_ladder": [1.0, 1e2, 1e4, 1e6],
    "n_list": [32, 64, 128, 256],
    "sigma2_bulk": 1e-4,
    "sigma2_boundary": 1e-4,
    "seed": 6,
    "neg_tol": 1e-3,
    "ak_threshold": 0.99,
}

SPECTRAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "spectral"},
        "problem": {"enum": ["toy", "heat"]},
        "realization": {"enum": ["kernel", "grid"]},
        "eta_boundary": {"type": "number", "minimum": 0},
        "eta_bulk_list": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
            "minItems": 1,
        },
        "l": _POS_NUM,
        "g0": {"type": "number"},
        "grid_n": {"type": "integer", "minimum": 8},
        "grid_x_max": _POS_NUM,
        "a": _POS_NUM,
        "alpha": _POS_NUM,
        "kernel": {"oneOf": [KERNEL_SCHEMA, {"type": "null"}]},
        "nx": {"type": "integer", "minimum": 4},
        "nt": {"type": "integer", "minimum": 4},
        "neg_tol": _POS_NUM,
        "accuracy": {"type": "integer", "minimum": 1},
    },
}

SPECTRAL_DEFAULTS = {
    "problem": "toy",
    "realization": "kernel",
    "eta_boundary": 8192.0,
    "eta_bulk_list": [1.0, 10.0, 100.0, 1000.0],
    "l": 1.0,
    "g0": 2.5,
    "grid_n": 257,
    "grid_x_max": 20.0,
    "a": 0.0625,
    "alpha": 2.0,
    "kernel": None,
    "nx": 48,
    "nt": 24,
    "neg_tol": 1e-3,
    "accuracy": 4,
}

KERNEL_CHECK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "kernel-check"},
        "kernel": KERNEL_SCHEMA,
        "C": _POS_INT,
        "n_nets": _POS_INT,
        "n_pairs": _POS_INT,
        "seed": _SEED,
        "pair_low": {"type": "number"},
        "pair_high": {"type": "number"},
    },
}

KERNEL_CHECK_DEFAULTS = {
    "kernel": {"family": "CosineFeature", "l": 1.0},
    "C": 100,
    "n_nets": 10000,
    "n_pairs": 10,
    "seed": 20240,
    "pair_low": 0.0,
    "pair_high": 3.0,
}


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_csv(out_dir, name, columns, rows, meta):
    path = os.path.join(out_dir, name)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_sidecar(path, meta)
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _write_json(out_dir, name, payload, meta=None):
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")
    if meta is not None:
        _write_sidecar(path, meta)
    return path


def _write_sidecar(path, meta):
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def _meta(command, cfg):
    return {"command": command, "config": cfg, "version": __version__}


# ---------------------------------------------------------------- config

def _load_config(path, schema, defaults, command):
    if path is None:
        raw = {}
    else:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    errors = sorted(
        Draft202012Validator(schema).iter_errors(raw), key=lambda e: str(e.path)
    )
    if errors:
        msgs = "; ".join(
            f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
            for e in errors
        )
        raise ConfigError(f"invalid {command} config: {msgs}")
    cfg = dict(defaults)
    cfg.update(raw)
    cfg["experiment"] = command
    return cfg


def _linear_fit(x, y):
    """Least-squares line y = a x + b with the coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


# ---------------------------------------------------------------- toy

def _toy_problem(l, g0):
    spec = kernels.KernelSpec(family="CosineFeature", l=l)
    op = operators.LinearDiffOp(terms=(((1,), 1.0),))
    return ProblemData(
        source=lambda x: 0.0, boundary=lambda x: g0, operator=op, kernel=spec
    )


def _star_indices(grid_n, grid_x_max, x_star_max, x_star_step):
    h = grid_x_max / (grid_n - 1)
    stride = int(round(x_star_step / h))
    if stride < 1 or abs(stride * h - x_star_step) > 1e-9 * max(1.0, x_star_step):
        raise ConfigError(
            "x_star_step must be an integer multiple of the grid spacing "
            f"{h!r} so evaluation points lie on grid nodes"
        )
    count = int(math.floor(x_star_max / (stride * h) + 1e-9)) + 1
    idx = np.arange(count) * stride
    if idx.size == 0 or idx[-1] >= grid_n:
        raise ConfigError("x_star_max exceeds the grid extent")
    return idx


def run_toy(cfg, out_dir):
    """GPR vs closed-form vs grid solutions of the half-line problem."""
    meta = _meta("toy", cfg)
    l, g0, x_max = cfg["l"], cfg["g0"], cfg["x_max"]
    s2_bulk = cfg["sigma2_bulk"]
    problem = _toy_problem(l, g0)
    grid = operators.interval_grid(
        0.0, cfg["grid_x_max"], cfg["grid_n"], boundary_points=(0.0,),
        even_extension=True,
    )
    star_idx = _star_indices(
        cfg["grid_n"], cfg["grid_x_max"], cfg["x_star_max"], cfg["x_star_step"]
    )
    x_star = grid.axes[0][star_idx]
    geometry = operators.IntervalGeometry(0.0, x_max, boundary=(0.0,))

    def s2_boundary(n):
        return 2.0**-6 / n if cfg["sigma2_boundary"] == "caption" else cfg["sigma2_boundary"]

    rows_summary = []
    gaps = []
    for n in cfg["n_bulk_list"]:
        s2b = s2_boundary(n)
        eta_bulk = n / (2.0 * x_max * s2_bulk)
        eta_boundary = cfg["n_boundary"] / s2b
        tcfg = nie.ToyConfig(
            l=l, g0=g0, eta_bulk=eta_bulk, eta_boundary=eta_boundary,
            x_max=x_max, k_max=cfg["k_max"], n_k=cfg["n_k"],
        )
        f_th, delta = nie.toy_predict(tcfg, x_star)
        sol = nie.nie_solve_grid(problem, grid, eta_bulk, eta_boundary)
        f_grid = sol.f0_vals[star_idx]
        colloc = sample_collocation(
            geometry, n, cfg["n_boundary"], cfg["seed"],
            sigma2_bulk=s2_bulk, sigma2_boundary=s2b,
        )
        f_gpr = gpr_predict(problem, colloc, x_star)
        _write_csv(
            out_dir,
            f"curve_n{n}.csv",
            ["x_star", "f_gpr", "f_nie_analytic", "f_nie_grid"],
            zip(x_star, f_gpr, f_th, f_grid),
            meta,
        )
        g00 = nie.greens_function_toy(tcfg, 0.0, 0.0)
        gap = float(np.max(np.abs(f_gpr - f_th)))
        gaps.append(gap)
        rows_summary.append(
            {
                "n_bulk": int(n),
                "n_boundary": int(cfg["n_boundary"]),
                "sigma2_bulk": s2_bulk,
                "sigma2_boundary": s2b,
                "eta_bulk_matched": eta_bulk,
                "eta_boundary": eta_boundary,
                "delta": delta,
                "g00": g00,
                "kappa": tcfg.kappa,
                "max_gap_gpr_vs_analytic": gap,
                "max_gap_gpr_vs_grid": float(np.max(np.abs(f_gpr - f_grid))),
                "max_gap_grid_vs_analytic": float(np.max(np.abs(f_grid - f_th))),
                "nie_residual_norm": sol.residual_norm,
            }
        )

    inset_rows = []
    for n in cfg["inset_n_list"]:
        s2b = s2_boundary(n)
        tcfg = nie.ToyConfig(
            l=l, g0=g0,
            eta_bulk=n / s2_bulk,
            eta_boundary=cfg["n_boundary"] / s2b,
            x_max=x_max, k_max=cfg["k_max"], n_k=cfg["n_k"],
        )
        f_vals, _ = nie.toy_predict(tcfg, [cfg["inset_x"]])
        inset_rows.append((int(n), g0 - float(f_vals[0])))
    _write_csv(
        out_dir, "inset.csv", ["n_bulk", "g0_minus_f"], inset_rows, meta
    )
    slope, intercept, r2 = _linear_fit(
        np.log([r[0] for r in inset_rows]),
        np.log([r[1] for r in inset_rows]),
    )
    summary = {
        "per_n": rows_summary,
        "g0": g0,
        "max_gap_over_g0_final": gaps[-1] / abs(g0) if g0 else None,
        "gap_nonincreasing": bool(
            all(gaps[i + 1] <= gaps[i] + 1e-12 for i in range(len(gaps) - 1))
        ),
        "powerlaw": {
            "slope": slope,
            "intercept": intercept,
            "r2": r2,
            "eta_bulk_rule": "caption n/sigma2_bulk",
        },
        "eta_conventions": {
            "curves": "eta_bulk = n/(2 x_max sigma2_bulk) matching the sampled GPR",
            "inset": "eta_bulk = n/sigma2_bulk (caption rule)",
            "eta_boundary": "n_boundary/sigma2_boundary",
        },
    }
    _write_json(out_dir, "summary.json", summary, meta)


# ---------------------------------------------------------------- heat

def _heat_kernel(cfg):
    if cfg["kernel"] is not None:
        return kernels.KernelSpec.from_dict(cfg["kernel"])
    return kernels.scale_variances(
        kernels.KernelSpec(family="ErfArcsine", l=1.0), cfg["alpha"]
    )


def _a_tag(a):
    return format(float(a), "g").replace(".", "p").replace("-", "m")


def run_heat(cfg, out_dir):
    """Manufactured-solution residuals, GPR errors, and spectral alignment."""
    meta = _meta("heat", cfg)
    spec = _heat_kernel(cfg)
    op = heat.heat_operator()
    grid = heat.slab_grid(nx=cfg["nx"], nt=cfg["nt"])
    fine = heat.slab_grid(nx=cfg["residual_nx"], nt=cfg["residual_nt"])
    geometry = heat.heat_geometry()

    residual_rows = []
    for a in cfg["a_list"]:
        u = heat.exact_solution(a)
        phi = heat.heat_source(a)
        u_vals = np.array([u(p) for p in fine.bulk_pts])
        phi_vals = np.array([phi(p) for p in fine.bulk_pts])
        lu_vals = operators.apply_to_function(op, u_vals, fine)
        fd_residual = float(np.max(np.abs(lu_vals - phi_vals)))
        t_nodes = fine.axes[1]
        side_max = max(
            float(np.max(np.abs([u((x_side, t)) for t in t_nodes])))
            for x_side in (-1.0, 1.0)
        )
        x_nodes = fine.axes[0]
        u0 = heat.boundary_values(a)
        init_mismatch = float(
            np.max(
                np.abs([u((x, 0.0)) - u0((x, 0.0)) for x in x_nodes[1:-1]])
            )
        )
        residual_rows.append(
            {
                "a": a,
                "fd_residual": fd_residual,
                "boundary_max_abs": side_max,
                "initial_mismatch": init_mismatch,
            }
        )

    gpr_rows = []
    eval_pts = heat.slab_grid(nx=17, nt=9).bulk_pts
    for a in cfg["a_list"]:
        problem = heat.heat_problem(a, spec=spec)
        u = heat.exact_solution(a)
        u_eval = np.array([u(p) for p in eval_pts])
        for n in cfg["n_list"]:
            colloc = sample_collocation(
                geometry, n, max(n // 2, 4), cfg["seed"],
                sigma2_bulk=cfg["sigma2_bulk"],
                sigma2_boundary=cfg["sigma2_boundary"],
            )
            pred = gpr_predict(problem, colloc, eval_pts)
            err = pred - u_eval
            gpr_rows.append(
                (
                    a, int(n),
                    float(np.max(np.abs(err))),
                    float(np.sqrt(np.mean(err**2))),
                )
            )
    _write_csv(
        out_dir, "gpr_error.csv", ["a", "n_bulk", "max_err", "rms_err"],
        gpr_rows, meta,
    )

    # alignment diagnostics: kernel basis (identity op) and the
    # operator-filtered basis, shared across a values
    decomp_k = spectral.eig_lkhatl(
        operators.identity_operator(2), spec, grid, 0.0, realization="kernel"
    )
    decomp_l = spectral.eig_lkhatl(
        op, spec, grid, cfg["eta_boundary"], realization="kernel",
        neg_tol=cfg["neg_tol"],
    )
    crossings = {}
    qn_payload = []
    for a in cfg["a_list"]:
        problem = heat.heat_problem(a, spec=spec)
        u = heat.exact_solution(a)
        u_vals = np.array([u(p) for p in grid.bulk_pts])
        phi_hat = spectral.augmented_source(
            problem, grid, cfg["eta_boundary"], realization="kernel"
        )
        tag = _a_tag(a)
        for qname, decomp in (("K", decomp_k), ("LKL", decomp_l)):
            for fname, fvals in (("u", u_vals), ("phihat", phi_hat)):
                ak = spectral.ak_curve(decomp, fvals)
                ks = np.arange(ak.size)
                lam = np.concatenate([[np.nan], decomp.eigvals])
                with np.errstate(divide="ignore", invalid="ignore"):
                    neglog = -np.log(np.where(lam > 0, lam, np.nan))
                _write_csv(
                    out_dir,
                    f"ak_a{tag}_q{qname}_f{fname}.csv",
                    ["k", "lambda", "neg_log_lambda", "a_k"],
                    zip(ks, lam, neglog, ak),
                    meta,
                )
                if qname == "K" and fname == "u":
                    above = np.nonzero(ak >= cfg["ak_threshold"])[0]
                    crossings[tag] = int(above[0]) if above.size else None
        att = spectral.attach_source(decomp_l, phi_hat)
        qn_payload.append(
            {
                "a": a,
                "eta_boundary": cfg["eta_boundary"],
                "qn": {
                    _fmt(e): spectral.figure_of_merit_qn(att, e)
                    for e in cfg["eta_bulk_ladder"]
                },
                "source_residual": att.source_residual,
            }
        )
    _write_json(out_dir, "qn.json", qn_payload, meta)

    summary = {
        "kernel": spec.to_dict(),
        "residuals": residual_rows,
        "ak_threshold": cfg["ak_threshold"],
        "ak_crossing_k_by_a": crossings,
        "n_modes": int(decomp_k.n_modes),
        "n_retained_K": int(decomp_k.n_retained),
        "n_retained_LKL": int(decomp_l.n_retained),
    }
    _write_json(out_dir, "summary.json", summary, meta)


# ---------------------------------------------------------------- spectral

def run_spectral(cfg, out_dir):
    """Eigenvalue spectrum, cumulative spectral curve, and Q_n ladder."""
    meta = _meta("spectral", cfg)
    if cfg["problem"] == "toy":
        problem = _toy_problem(cfg["l"], cfg["g0"])
        grid = operators.interval_grid(
            0.0, cfg["grid_x_max"], cfg["grid_n"], boundary_points=(0.0,),
            even_extension=True,
        )
        u_exact = None
    else:
        problem = heat.heat_problem(cfg["a"], spec=_heat_kernel(cfg))
        grid = heat.slab_grid(nx=cfg["nx"], nt=cfg["nt"])
        u_exact = heat.exact_solution(cfg["a"])
    decomp = spectral.eig_lkhatl(
        problem.operator, problem.kernel, grid, cfg["eta_boundary"],
        realization=cfg["realization"], accuracy=cfg["accuracy"],
        neg_tol=cfg["neg_tol"],
    )
    _write_csv(
        out_dir, "eigenvalues.csv", ["k", "lambda"],
        [(k + 1, lam) for k, lam in enumerate(decomp.eigvals)], meta,
    )
    phi_hat = spectral.augmented_source(
        problem, grid, cfg["eta_boundary"], realization=cfg["realization"],
        accuracy=cfg["accuracy"],
    )
    f_vals = (
        phi_hat
        if u_exact is None
        else np.array([u_exact(p) for p in grid.bulk_pts])
    )
    ak = spectral.ak_curve(decomp, f_vals)
    lam = np.concatenate([[np.nan], decomp.eigvals])
    with np.errstate(divide="ignore", invalid="ignore"):
        neglog = -np.log(np.where(lam > 0, lam, np.nan))
    _write_csv(
        out_dir, "ak.csv", ["k", "lambda", "neg_log_lambda", "a_k"],
        zip(np.arange(ak.size), lam, neglog, ak), meta,
    )
    att = spectral.attach_source(decomp, phi_hat)
    payload = {
        "problem": cfg["problem"],
        "realization": cfg["realization"],
        "eta_boundary": cfg["eta_boundary"],
        "n_modes": int(decomp.n_modes),
        "n_retained": int(decomp.n_retained),
        "source_residual": att.source_residual,
        "qn": {
            _fmt(e): spectral.figure_of_merit_qn(att, e)
            for e in cfg["eta_bulk_list"]
        },
    }
    _write_json(out_dir, "qn.json", payload, meta)


# ---------------------------------------------------------------- kernels

def run_kernel_check(cfg, out_dir):
    """Monte-Carlo network sampling vs the closed-form kernel, with z-scores."""
    meta = _meta("kernel-check", cfg)
    spec = kernels.KernelSpec.from_dict(cfg["kernel"])
    if spec.family == "SquaredExponential":
        raise ConfigError(
            "SquaredExponential has no finite feature map; kernel-check "
            "supports CosineFeature, SineFeature, and ErfArcsine"
        )
    rng = np.random.default_rng(cfg["seed"])
    pairs = rng.uniform(cfg["pair_low"], cfg["pair_high"], size=(cfg["n_pairs"], 2))
    rows = []
    max_z = 0.0
    for i, (x, y) in enumerate(pairs):
        exact = kernels.eval_kernel(spec, x, y)
        est, se = kernels.monte_carlo_kernel(
            spec, x, y, cfg["C"], cfg["n_nets"], cfg["seed"] + 1 + i
        )
        z = (est - exact) / se
        max_z = max(max_z, abs(z))
        rows.append((x, y, exact, est, se, z))
    _write_csv(
        out_dir, "kernel_check.csv",
        ["x", "y", "exact", "estimate", "std_error", "z"],
        rows, meta,
    )
    _write_json(
        out_dir, "kernel_check_stats.json",
        {
            "family": spec.family,
            "kernel": spec.to_dict(),
            "seed": cfg["seed"],
            "width_C": cfg["C"],
            "n_nets": cfg["n_nets"],
            "samples_per_pair": cfg["C"] * cfg["n_nets"],
            "n_pairs": cfg["n_pairs"],
            "max_abs_z": max_z,
            "all_within_3se": bool(max_z <= 3.0),
        },
        meta,
    )


# ---------------------------------------------------------------- driver

_COMMANDS = {
    "toy": (run_toy, TOY_SCHEMA, TOY_DEFAULTS),
    "heat": (run_heat, HEAT_SCHEMA, HEAT_DEFAULTS),
    "spectral": (run_spectral, SPECTRAL_SCHEMA, SPECTRAL_DEFAULTS),
    "kernel-check": (run_kernel_check, KERNEL_CHECK_SCHEMA, KERNEL_CHECK_DEFAULTS),
}


def _thread_limit():
    raw = os.environ.get("PINN_SPECTRAL_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(
            f"PINN_SPECTRAL_THREADS must be a positive integer, got {raw!r}"
        ) from None
    return n


def _build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="PINN prediction, neurally-informed equations, and "
        "spectral-bias diagnostics",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument(
            "--out", default=f"{PROG}-out", help="output directory (created)"
        )
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    runner, schema, defaults = _COMMANDS[args.command]
    try:
        limit = _thread_limit()
        cfg = _load_config(args.config, schema, defaults, args.command)
    except ConfigError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    ctx = (
        threadpoolctl.threadpool_limits(limits=limit)
        if limit is not None
        else contextlib.nullcontext()
    )
    try:
        with ctx:
            runner(cfg, args.out)
    except ConfigError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (PinnSpectralError, np.linalg.LinAlgError) as exc:
        _write_json(
            args.out, "error.json",
            {"error": type(exc).__name__, "message": str(exc)},
        )
        print(f"{PROG}: numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
