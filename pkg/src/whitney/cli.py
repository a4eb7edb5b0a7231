"""Command-line front end: JSON problems in, JSON reports out.

Subcommands cover the five checks (transversality, jet transversality,
regularity, perturbation, prescribed construction), tubular radius
estimation, the five experiments, and problem validation.  Exit codes:
0 clean verdict, 1 negative verdict (still a successful run), 2 input or
convergence error.  The report is written in every case, with sorted keys
and a trailing newline so goldens can be compared byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from fractions import Fraction
from typing import Sequence

import jsonschema
import numpy as np

from .errors import ProblemFormatError, ToolError
from .experiments import (
    ExperimentResult,
    d0_convergence_experiment,
    density_experiment,
    escape_experiment,
    openness_experiment,
    trotman_experiment,
)
from .expr import DefMap, Region, expr_from_dict, is_exact
from .jets import JetSpaceSpec, cylinder_over_codomain
from .linalg import LinearSubspace
from .regularity import (
    Probe,
    ProbeCurve,
    ProjectedProbe,
    whitney_a_stratification,
)
from .strata import (
    Stratification,
    stratification_from_dict,
    stratum_samples,
    validate_stratification,
)
from .transversality import (
    is_transverse_on,
    jet_transverse,
    perturb_to_transverse,
    transverse_with_derivative,
)
from .tubular import estimate_radius

EXPERIMENT_NAMES = ("escape", "d0", "openness", "trotman", "density")
SUBCOMMANDS = (
    "check-transversality",
    "check-jet-transversality",
    "check-regularity",
    "perturb",
    "construct-prescribed",
    "tubular",
    "experiment",
    "validate",
)

# ---------------------------------------------------------------------------
# shipped JSON schemas (also written to fixtures/schema/ by the corpus tool)
# ---------------------------------------------------------------------------

_NUMBER = {"type": ["number", "string"], "pattern": "^-?[0-9]+(/[1-9][0-9]*)?$"}
_POINT = {"type": "array", "items": {"$ref": "#/$defs/number"}}
_POINTS = {"type": "array", "items": _POINT}


def _expr_variant(op: str, extra: dict, required: Sequence[str]) -> dict:
    props = {"op": {"const": op}}
    props.update(extra)
    return {
        "type": "object",
        "properties": props,
        "required": ["op"] + list(required),
        "additionalProperties": False,
    }


_EXPR_REF = {"$ref": "#/$defs/expr"}
_EXPR = {
    "oneOf": [
        _expr_variant("const", {"value": {"$ref": "#/$defs/number"}}, ["value"]),
        _expr_variant("coord", {"index": {"type": "integer", "minimum": 0}}, ["index"]),
        _expr_variant(
            "add", {"args": {"type": "array", "items": _EXPR_REF, "minItems": 1}}, ["args"]
        ),
        _expr_variant(
            "mul", {"args": {"type": "array", "items": _EXPR_REF, "minItems": 1}}, ["args"]
        ),
        _expr_variant(
            "pow",
            {"base": _EXPR_REF, "exponent": {"type": "integer", "minimum": 0}},
            ["base", "exponent"],
        ),
        _expr_variant("exp", {"arg": _EXPR_REF}, ["arg"]),
        _expr_variant(
            "sqrt", {"arg": _EXPR_REF, "guard": {"$ref": "#/$defs/number"}}, ["arg"]
        ),
        _expr_variant(
            "recip", {"arg": _EXPR_REF, "guard": {"$ref": "#/$defs/number"}}, ["arg"]
        ),
        _expr_variant(
            "glue",
            {
                "arg": _EXPR_REF,
                "coeffs": {"type": "array", "items": {"$ref": "#/$defs/number"}},
            },
            ["arg", "coeffs"],
        ),
        _expr_variant(
            "bump",
            {
                "center": _POINT,
                "r_in": {"$ref": "#/$defs/number"},
                "r_out": {"$ref": "#/$defs/number"},
            },
            ["center", "r_in", "r_out"],
        ),
    ]
}

_REGION = {
    "type": "object",
    "properties": {
        "lo": _POINT,
        "hi": _POINT,
        "unbounded_lo": {"type": "array", "items": {"type": "boolean"}},
        "unbounded_hi": {"type": "array", "items": {"type": "boolean"}},
    },
    "required": ["lo", "hi"],
    "additionalProperties": False,
}

_MAP = {
    "type": "object",
    "properties": {
        "domain_dim": {"type": "integer", "minimum": 1},
        "codomain_dim": {"type": "integer", "minimum": 1},
        "components": {"type": "array", "items": _EXPR_REF, "minItems": 1},
        "region": {"oneOf": [{"$ref": "#/$defs/region"}, {"type": "null"}]},
    },
    "required": ["domain_dim", "codomain_dim", "components"],
    "additionalProperties": False,
}

_STRATUM = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "dim": {"type": "integer", "minimum": 0},
        "equations": {"type": "array", "items": _EXPR_REF},
        "inequalities": {"type": "array", "items": _EXPR_REF},
        "chart": {"$ref": "#/$defs/map"},
        "samples": _POINTS,
        "sample_region": {"$ref": "#/$defs/region"},
    },
    "required": ["id", "dim"],
    "additionalProperties": False,
}

_STRATIFICATION = {
    "type": "object",
    "properties": {
        "ambient_dim": {"type": "integer", "minimum": 1},
        "strata": {"type": "array", "items": {"$ref": "#/$defs/stratum"}, "minItems": 1},
        "adjacency": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
    "required": ["ambient_dim", "strata", "adjacency"],
    "additionalProperties": False,
}

_PAIR = {
    "type": "array",
    "items": {"type": "string"},
    "minItems": 2,
    "maxItems": 2,
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "whitney/problem.schema.json",
    "title": "problem file",
    "type": "object",
    "$defs": {
        "number": _NUMBER,
        "expr": _EXPR,
        "region": _REGION,
        "map": _MAP,
        "stratum": _STRATUM,
        "stratification": _STRATIFICATION,
    },
    "properties": {
        "version": {"const": "1"},
        "seed": {"type": "integer", "minimum": 0},
        "maps": {
            "type": "object",
            "additionalProperties": {"$ref": "#/$defs/map"},
        },
        "stratifications": {
            "type": "object",
            "additionalProperties": {"$ref": "#/$defs/stratification"},
        },
        "samples": _POINTS,
        "probes": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "pair": _PAIR,
                    "label": {"type": "string"},
                    "curve": {"$ref": "#/$defs/map"},
                    "points": _POINTS,
                    "landing": _POINT,
                },
                "required": ["pair", "label", "landing"],
                "additionalProperties": False,
            },
        },
        "pinned": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"pair": _PAIR, "points": _POINTS},
                "required": ["pair", "points"],
                "additionalProperties": False,
            },
        },
        "jet": {
            "type": "object",
            "properties": {"k": {"type": "integer", "minimum": 0}},
            "required": ["k"],
            "additionalProperties": False,
        },
        "perturb": {
            "type": "object",
            "properties": {
                "map": {"type": "string"},
                "stratification": {"type": "string"},
                "k": {"type": "integer", "minimum": 0},
                "l": {"type": "integer", "minimum": 0},
                "epsilon": _EXPR_REF,
                "max_draws": {"type": "integer", "minimum": 1},
            },
            "required": ["map", "stratification", "k", "l", "epsilon"],
            "additionalProperties": False,
        },
        "prescribed": {
            "type": "object",
            "properties": {
                "stratification": {"type": "string"},
                "m_dim": {"type": "integer", "minimum": 1},
                "p": _POINT,
                "h_basis": _POINTS,
                "samples": _POINTS,
            },
            "required": ["m_dim", "p", "h_basis", "samples"],
            "additionalProperties": False,
        },
        "tubular": {
            "type": "object",
            "properties": {
                "stratification": {"type": "string"},
                "stratum": {"type": "string"},
                "budget": {"type": "integer", "minimum": 1},
                "cloud_size": {"type": "integer", "minimum": 1},
            },
            "required": ["stratum"],
            "additionalProperties": False,
        },
        "experiment": {
            "type": "object",
            "properties": {"name": {"enum": list(EXPERIMENT_NAMES)}},
            "required": ["name"],
        },
    },
    "required": ["version", "seed"],
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "whitney/report.schema.json",
    "title": "report file",
    "type": "object",
    "properties": {
        "version": {"const": "1"},
        "command": {"type": "string"},
        "problem": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "exit_code": {"enum": [0, 1, 2]},
        "wall_clock_s": {"type": ["number", "null"]},
        "results": {"type": "object"},
        "error": {
            "type": "object",
            "properties": {"type": {"type": "string"}, "message": {"type": "string"}},
            "required": ["type", "message"],
            "additionalProperties": False,
        },
    },
    "required": ["version", "command", "problem", "seed", "exit_code", "wall_clock_s"],
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# report encoding
# ---------------------------------------------------------------------------


def _encode(v):
    """Recursive JSON-safe view of report objects.

    Fractions become p/q strings, non-finite floats become strings (reports
    stay strict JSON), subspaces list their orthonormal basis columns, and
    anything with a to_dict serializes through it.
    """
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, LinearSubspace):
        return {
            "ambient_dim": v.ambient_dim,
            "dim": v.dim,
            "basis_columns": [[float(x) for x in v.basis[:, j]] for j in range(v.dim)],
        }
    if hasattr(v, "to_dict"):
        return v.to_dict()
    if dataclasses.is_dataclass(v) and not isinstance(v, type):
        return {
            f.name: _encode(getattr(v, f.name)) for f in dataclasses.fields(v)
        }
    if isinstance(v, dict):
        return {str(k): _encode(u) for k, u in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_encode(u) for u in v]
    return str(v)


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# problem loading
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class Problem:
    raw: dict
    maps: dict[str, DefMap]
    stratifications: dict[str, Stratification]
    probes: dict[tuple[str, str], list[Probe]]
    pinned: dict[tuple[str, str], list[tuple[float, ...]]]
    samples: list[tuple[float, ...]] | None
    seed: int


def load_problem_text(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(
            f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e
    validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    best = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if best is not None:
        path = "/" + "/".join(str(p) for p in best.absolute_path)
        raise ProblemFormatError(f"schema violation at {path}: {best.message}")
    return raw


def _num(v):
    return Fraction(v) if isinstance(v, str) else v


def _point(p) -> tuple[float, ...]:
    return tuple(float(_num(v)) for v in p)


def build_problem(raw: dict, seed_override: int | None = None) -> Problem:
    maps = {}
    for mid, d in raw.get("maps", {}).items():
        try:
            maps[mid] = DefMap.from_dict(d)
        except ToolError as e:
            raise ProblemFormatError(f"map {mid!r}: {e}") from e
    strats = {}
    for sid, d in raw.get("stratifications", {}).items():
        try:
            strats[sid] = stratification_from_dict(d)
        except ToolError as e:
            raise ProblemFormatError(f"stratification {sid!r}: {e}") from e

    probes: dict[tuple[str, str], list[Probe]] = {}
    for entry in raw.get("probes", []):
        pair = (entry["pair"][0], entry["pair"][1])
        if "curve" in entry:
            probe: Probe = ProbeCurve(
                DefMap.from_dict(entry["curve"]),
                _point(entry["landing"]),
                label=entry["label"],
            )
        elif "points" in entry:
            probe = ProjectedProbe(
                tuple(_point(p) for p in entry["points"]),
                _point(entry["landing"]),
                label=entry["label"],
            )
        else:
            raise ProblemFormatError(
                f"probe {entry['label']!r} needs either a curve or points"
            )
        probes.setdefault(pair, []).append(probe)

    pinned: dict[tuple[str, str], list[tuple[float, ...]]] = {}
    for entry in raw.get("pinned", []):
        pair = (entry["pair"][0], entry["pair"][1])
        pinned.setdefault(pair, []).extend(_point(p) for p in entry["points"])

    samples = [_point(p) for p in raw["samples"]] if "samples" in raw else None
    seed = seed_override if seed_override is not None else int(raw["seed"])
    return Problem(raw, maps, strats, probes, pinned, samples, seed)


def _resolve_map(prob: Problem, mid: str) -> DefMap:
    if mid not in prob.maps:
        raise ProblemFormatError(
            f"unknown map {mid!r}; maps: {sorted(prob.maps) or 'none'}"
        )
    return prob.maps[mid]


def _resolve_strat(prob: Problem, sid: str) -> Stratification:
    if sid not in prob.stratifications:
        raise ProblemFormatError(
            f"unknown stratification {sid!r}; have: "
            f"{sorted(prob.stratifications) or 'none'}"
        )
    return prob.stratifications[sid]


def _job(prob: Problem, key: str) -> dict:
    if key not in prob.raw:
        raise ProblemFormatError(f"problem file has no {key!r} job")
    return prob.raw[key]


def _require_exact(prob: Problem) -> None:
    bad = [mid for mid, f in sorted(prob.maps.items()) if not f.is_exact()]
    for sid, strat in sorted(prob.stratifications.items()):
        for s in strat.strata:
            geo = s.geometry
            exprs = []
            if hasattr(geo, "equations"):
                exprs = list(geo.equations) + list(geo.inequalities)
            if any(not is_exact(e) for e in exprs):
                bad.append(f"{sid}/{s.id}")
    if bad:
        raise ProblemFormatError(
            "--exact requires rational data throughout; non-exact: "
            + ", ".join(bad)
        )


def _scan_kwargs(args) -> dict:
    kw = {}
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.samples is not None:
        kw["grid_per_axis"] = args.samples
    return kw


def _filtered(table: dict, strat: Stratification) -> dict | None:
    ids = {s.id for s in strat.strata}
    sub = {pair: v for pair, v in table.items() if set(pair) <= ids}
    return sub or None


# ---------------------------------------------------------------------------
# subcommand handlers: return (results, exit_code)
# ---------------------------------------------------------------------------


def _run_check_transversality(prob: Problem, args) -> tuple[dict, int]:
    if args.exact:
        _require_exact(prob)
    out = {}
    code = 0
    for mid in sorted(prob.maps):
        f = prob.maps[mid]
        for sid in sorted(prob.stratifications):
            strat = prob.stratifications[sid]
            if f.codomain_dim != strat.ambient_dim:
                continue
            rep = is_transverse_on(f, strat, samples=prob.samples, **_scan_kwargs(args))
            out[f"{mid}|{sid}"] = _encode(rep)
            if not rep.transverse:
                code = 1
    if not out:
        raise ProblemFormatError("no compatible map/stratification pairs to check")
    return {"checks": out}, code


def _run_check_jet(prob: Problem, args) -> tuple[dict, int]:
    if args.exact:
        _require_exact(prob)
    k = int(_job(prob, "jet")["k"])
    out = {}
    code = 0
    for mid in sorted(prob.maps):
        f = prob.maps[mid]
        for sid in sorted(prob.stratifications):
            strat = prob.stratifications[sid]
            if f.codomain_dim != strat.ambient_dim:
                continue
            lifted = cylinder_over_codomain(
                strat, JetSpaceSpec(f.domain_dim, f.codomain_dim, k)
            )
            rep = jet_transverse(f, lifted, samples=prob.samples, **_scan_kwargs(args))
            out[f"{mid}|{sid}"] = _encode(rep)
            if not rep.transverse:
                code = 1
    if not out:
        raise ProblemFormatError("no compatible map/stratification pairs to check")
    return {"jet_order": k, "checks": out}, code


def _run_check_regularity(prob: Problem, args) -> tuple[dict, int]:
    rng = np.random.default_rng(prob.seed)
    out = {}
    code = 0
    for sid in sorted(prob.stratifications):
        strat = prob.stratifications[sid]
        rep = whitney_a_stratification(
            strat,
            rng,
            pinned=_filtered(prob.pinned, strat),
            probes=_filtered(prob.probes, strat),
        )
        out[sid] = _encode(rep)
        if rep.overall != "Regular":
            code = 1
    if not out:
        raise ProblemFormatError("no stratifications to check")
    return {"regularity": out}, code


def _run_perturb(prob: Problem, args) -> tuple[dict, int]:
    job = _job(prob, "perturb")
    f = _resolve_map(prob, job["map"])
    base = _resolve_strat(prob, job["stratification"])
    k, l = int(job["k"]), int(job["l"])
    eps = expr_from_dict(job["epsilon"])
    lifted = cylinder_over_codomain(
        base, JetSpaceSpec(f.domain_dim, f.codomain_dim, k)
    )
    g, s, rep = perturb_to_transverse(
        f,
        lifted,
        k,
        l,
        eps,
        samples=prob.samples,
        rng=np.random.default_rng(prob.seed),
        max_draws=int(job.get("max_draws", 100)),
    )
    results = {
        "perturb": {
            "accepted_draw": rep.accepted_draw,
            "rejections": rep.rejections,
            "jet_transverse": rep.jet_report.transverse,
            "neighborhood_margin": rep.neighborhood_margin,
            "family": _encode(rep.family_summary),
            "near_misses": list(rep.near_misses),
            "s": _encode(s),
            "map": g.to_dict(),
        }
    }
    return results, 0


def _run_prescribed(prob: Problem, args) -> tuple[dict, int]:
    job = _job(prob, "prescribed")
    strat = _resolve_strat(prob, job.get("stratification", "target"))
    h_rows = np.asarray([[float(_num(v)) for v in row] for row in job["h_basis"]])
    h = LinearSubspace.from_spanning(h_rows, strat.ambient_dim)
    f, rep = transverse_with_derivative(
        int(job["m_dim"]),
        strat,
        _point(job["p"]),
        h,
        [_point(p) for p in job["samples"]],
        rng=np.random.default_rng(prob.seed),
    )
    results = dict(_encode(rep))
    results["map"] = f.to_dict()
    return {"prescribed": results}, 0


def _run_tubular(prob: Problem, args) -> tuple[dict, int]:
    job = _job(prob, "tubular")
    strat = _resolve_strat(prob, job.get("stratification", "target"))
    try:
        stratum = strat.stratum(job["stratum"])
    except KeyError as e:
        raise ProblemFormatError(f"unknown stratum {job['stratum']!r}") from e
    rng = np.random.default_rng(prob.seed)
    cloud = tuple(
        tuple(p) for p in stratum_samples(stratum, int(job.get("cloud_size", 48)), rng)
    )
    est = estimate_radius(
        stratum, rng, budget=int(job.get("budget", 12)), cloud=cloud
    )
    return {"tubular": _encode(est)}, 0 if est.verified else 1


def _run_validate(prob: Problem, args) -> tuple[dict, int]:
    rng = np.random.default_rng(prob.seed)
    issues: list[str] = []
    maps_out = {}
    for mid in sorted(prob.maps):
        f = prob.maps[mid]
        maps_out[mid] = {
            "domain_dim": f.domain_dim,
            "codomain_dim": f.codomain_dim,
            "exact": f.is_exact(),
        }
    strats_out = {}
    all_ids: set[str] = set()
    for sid in sorted(prob.stratifications):
        strat = prob.stratifications[sid]
        all_ids.update(s.id for s in strat.strata)
        rep = validate_stratification(strat, rng)
        strats_out[sid] = _encode(rep)
        if not rep.valid:
            issues.append(f"stratification {sid!r} failed validation")
    for pair in sorted(set(prob.probes) | set(prob.pinned)):
        for sid in pair:
            if sid not in all_ids:
                issues.append(f"probe/pinned pair references unknown stratum {sid!r}")
    for key in ("perturb", "prescribed", "tubular", "experiment"):
        job = prob.raw.get(key)
        if not isinstance(job, dict):
            continue
        for field in ("map", "family"):
            if field in job and job[field] not in prob.maps:
                issues.append(f"{key}.{field} references unknown map {job[field]!r}")
        if "stratification" in job and job["stratification"] not in prob.stratifications:
            issues.append(
                f"{key}.stratification references unknown id {job['stratification']!r}"
            )
    ok = not issues
    results = {
        "validate": {
            "ok": ok,
            "maps": maps_out,
            "stratifications": strats_out,
            "issues": issues,
        }
    }
    return results, 0 if ok else 1


def _run_experiment(prob: Problem, args) -> tuple[dict, int]:
    job = _job(prob, "experiment")
    if job["name"] != args.name:
        raise ProblemFormatError(
            f"problem file's experiment is {job['name']!r}, not {args.name!r}"
        )
    rng = np.random.default_rng(prob.seed)
    res: ExperimentResult
    if args.name == "escape":
        res = escape_experiment([_num(c) for c in job["coefficients"]])
    elif args.name == "d0":
        catalog = [
            (entry["label"], expr_from_dict(entry["epsilon"]))
            for entry in job["catalog"]
        ]
        res = d0_convergence_experiment(
            catalog,
            i_max=int(job.get("i_max", 12)),
            samples=[float(_num(v)) for v in job.get("samples", (1.5, 2.0, 4.0, 8.0))],
        )
    elif args.name == "openness":
        strat = _resolve_strat(prob, job["stratification"])
        res = openness_experiment(
            strat,
            _resolve_map(prob, job["map"]),
            scales=[float(v) for v in job.get("scales", (0.1, 0.01, 0.001))],
            rng=rng,
            draws_per_scale=int(job.get("draws_per_scale", 8)),
            probes=_filtered(prob.probes, strat),
            pinned=_filtered(prob.pinned, strat),
            require_regular=bool(job.get("require_regular", True)),
            expect_stable=bool(job.get("expect_stable", True)),
        )
    elif args.name == "trotman":
        strat = _resolve_strat(prob, job.get("stratification", "target"))
        pair = tuple(job["pair"]) if "pair" in job else None
        res = trotman_experiment(
            strat,
            int(job["m_dim"]),
            rng=rng,
            pair=pair,
            base_point=_point(job["base_point"]) if "base_point" in job else None,
            probes=prob.probes.get(pair) if pair else None,
            witness_label=job.get("witness"),
            i_count=int(job.get("i_count", 8)),
            samples=[_point(p) for p in job["samples"]] if "samples" in job else None,
        )
    elif args.name == "density":
        res = density_experiment(
            _resolve_map(prob, job["family"]),
            _resolve_strat(prob, job["stratification"]),
            levels=[int(g) for g in job["levels"]],
            s_lo=[float(_num(v)) for v in job["s_lo"]],
            s_hi=[float(_num(v)) for v in job["s_hi"]],
            x_lo=[float(_num(v)) for v in job["x_lo"]],
            x_hi=[float(_num(v)) for v in job["x_hi"]],
            min_ratio=float(job.get("min_ratio", 1.5)),
        )
    else:
        raise ProblemFormatError(f"unknown experiment {args.name!r}")
    return {"experiment": res.to_dict()}, 0 if res.conclusion else 1


_HANDLERS = {
    "check-transversality": _run_check_transversality,
    "check-jet-transversality": _run_check_jet,
    "check-regularity": _run_check_regularity,
    "perturb": _run_perturb,
    "construct-prescribed": _run_prescribed,
    "tubular": _run_tubular,
    "experiment": _run_experiment,
    "validate": _run_validate,
}


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("problem", help="path to a problem JSON file")
    sp.add_argument("--seed", type=int, default=None, help="override the file's seed")
    sp.add_argument(
        "--tol", type=float, default=None, help="membership tolerance for scans"
    )
    sp.add_argument(
        "--samples", type=int, default=None, help="grid points per axis for scans"
    )
    sp.add_argument(
        "--report", default=None, help="write the report here instead of stdout"
    )
    sp.add_argument(
        "--exact",
        action="store_true",
        help="require rational data; error on float inputs",
    )
    sp.add_argument(
        "--timing",
        action="store_true",
        help="record wall clock in the report (breaks byte-determinism)",
    )


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="whitney",
        description="transversality, regularity, and perturbation checks "
        "for stratified sets",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        if name == "experiment":
            sp.add_argument("name", choices=EXPERIMENT_NAMES)
        _add_common(sp)
    return p


def run(argv: Sequence[str] | None = None) -> tuple[int, dict]:
    args = _build_parser().parse_args(argv)
    command = args.command
    if command == "experiment":
        command = f"experiment {args.name}"
    t0 = time.perf_counter()
    report: dict = {
        "version": "1",
        "command": command,
        "problem": os.path.basename(args.problem),
        "seed": None,
        "wall_clock_s": None,
    }
    try:
        with open(args.problem) as fh:
            raw = load_problem_text(fh.read())
        prob = build_problem(raw, args.seed)
        report["seed"] = prob.seed
        results, code = _HANDLERS[args.command](prob, args)
        report["results"] = results
    except ToolError as e:
        report["error"] = {"type": type(e).__name__, "message": str(e)}
        code = 2
    except OSError as e:
        report["error"] = {"type": type(e).__name__, "message": str(e)}
        code = 2
    report["exit_code"] = code
    if args.timing:
        report["wall_clock_s"] = round(time.perf_counter() - t0, 6)
    text = render_report(report)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code, report


def main(argv: Sequence[str] | None = None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
