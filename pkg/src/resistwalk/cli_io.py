"""Command-line surface, configuration parsing, and reproducibility plumbing.

One self-describing JSON config format drives every command; all outputs are
plain CSV/JSON written atomically (write to a temp file, then rename), with a
manifest recording the config hash and per-file checksums written last so an
interrupted run never leaves a manifest pointing at half-written files.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    BudgetError,
    ConfigError,
    InvariantViolation,
    ParseError,
    RangeError,
    ResistwalkError,
    SchemaError,
    UnknownKey,
)
from .exact_chain import (
    excursion_visit_law,
    expected_hitting_time,
    expected_return_time,
    hit_before_return_prob,
)
from .experiments import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_N_TRIALS,
    carpet_rho_estimate,
    check_uvd,
    cover_time_scaling,
    estimate_exponents,
    local_time_scaling,
    modulus_equicontinuity_gasket,
    sup_local_time_tail,
    tail_curve_thm_a,
    tail_curve_thm_b,
)
from .graphs import FAMILIES, MAX_LEVEL, FamilySpec, WeightedGraph, build_graph, generate
from .resistance import resistance_matrix, validate_metric
from .walk_sim import RngStream, cover_time, run_walk

SCHEMA_VERSION = "resistwalk/1"
GRAPH_SCHEMA = "resistwalk-graph/1"
OUT_DIR_ENV = "RESISTWALK_OUT"

COMMANDS = ("gen", "resist", "oracle", "walk", "exp", "validate")
EXP_KINDS = (
    "uvd",
    "exponents",
    "thm-a",
    "thm-b",
    "sup-lt",
    "equicontinuity",
    "scaling",
    "cover",
    "carpet",
)
# kinds whose outputs depend on simulated randomness; these require a seed
STOCHASTIC_KINDS = ("thm-a", "thm-b", "sup-lt", "equicontinuity", "scaling", "cover")

# allowed keys and defaults per command; None marks a required key
_COMMON = {"schema": None, "command": None, "out_dir": ""}
_SCHEMAS = {
    "gen": {"family": None, "levels": None, "weight": 1.0},
    "resist": {"family": None, "levels": None},
    "oracle": {"family": None, "level": None, "x": None, "y": None, "kmax": 64},
    "walk": {
        "family": None,
        "level": None,
        "start": 0,
        "n_trials": 100,
        "cap_factor": 1000.0,
        "seed": None,
    },
    "exp": {
        "kind": None,
        "family": "gasket",
        "levels": None,
        "T": 1.0,
        "L": 1.0,
        "lambda_grid": list(DEFAULT_LAMBDA_GRID),
        "n_trials": DEFAULT_N_TRIALS,
        "seed": 0,
        "v_exponent": 0.0,
        "t_values": [1.0],
        "cap_factor": 1000.0,
        "wired_check_level": 1,
    },
    "validate": {"family": None, "levels": None, "seed": None, "steps": 2000},
}
# exp keys that only apply to certain kinds; listed so stray keys still error
_EXP_KIND_KEYS = {
    "uvd": {"family", "levels", "v_exponent"},
    "exponents": {"family", "levels"},
    "thm-a": {"family", "levels", "T", "lambda_grid", "n_trials", "seed"},
    "thm-b": {"family", "levels", "L", "lambda_grid", "n_trials", "seed", "cap_factor"},
    "sup-lt": {"family", "levels", "T", "lambda_grid", "n_trials", "seed"},
    "equicontinuity": {"levels", "T", "lambda_grid", "n_trials", "seed"},
    "scaling": {"levels", "t_values", "n_trials", "seed"},
    "cover": {"levels", "n_trials", "seed", "cap_factor"},
    "carpet": {"levels", "wired_check_level"},
}


@dataclass(eq=False)
class ExperimentConfig:
    """A validated command configuration with defaults filled in."""

    command: str
    params: dict
    out_dir: str
    schema: str = SCHEMA_VERSION

    def canonical(self) -> dict:
        doc = {"schema": self.schema, "command": self.command, "out_dir": self.out_dir}
        doc.update(self.params)
        return doc

    def canonical_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _require_type(key, value, types, what):
    if isinstance(value, bool) or not isinstance(value, types):
        raise RangeError(f"config key {key!r} must be {what}, got {value!r}")
    return value


def _check_levels(key, value, family=None):
    if not isinstance(value, list) or not value:
        raise RangeError(f"config key {key!r} must be a nonempty list of levels")
    out = []
    for lv in value:
        _require_type(key, lv, int, "an integer level")
        if lv < 0:
            raise RangeError(f"level {lv} is negative")
        if family is not None and lv > MAX_LEVEL[family]:
            raise RangeError(f"{family} level {lv} exceeds the cap {MAX_LEVEL[family]}")
        out.append(lv)
    return out


def _check_lambda_grid(value):
    if not isinstance(value, list) or len(value) < 2:
        raise RangeError("lambda_grid must be a list of at least two values")
    grid = []
    for lam in value:
        _require_type("lambda_grid", lam, (int, float), "numeric")
        lam = float(lam)
        if not math.isfinite(lam) or lam < 0:
            raise RangeError(f"lambda_grid entries must be finite and nonnegative, got {lam}")
        grid.append(lam)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise RangeError("lambda_grid must be strictly increasing")
    return grid


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config document.

    Returns a config with the per-command defaults filled in.  Unknown keys
    are rejected rather than ignored so that a typo cannot silently change
    an experiment.  Stochastic commands must carry an explicit seed.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"config is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("config must be a JSON object")
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        raise SchemaError(f"config schema must be {SCHEMA_VERSION!r}, got {schema!r}")
    command = doc.get("command")
    if command not in COMMANDS:
        raise SchemaError(f"command must be one of {COMMANDS}, got {command!r}")

    allowed = dict(_COMMON)
    allowed.update(_SCHEMAS[command])
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise UnknownKey(f"unknown config keys for {command!r}: {', '.join(unknown)}")
    missing = sorted(k for k, v in allowed.items() if v is None and k not in doc)
    missing = [k for k in missing if k not in ("schema", "command")]
    if "seed" in missing:
        raise RangeError(f"command {command!r} is stochastic and requires a seed")
    if missing:
        raise SchemaError(f"missing required keys for {command!r}: {', '.join(missing)}")

    params = {k: doc.get(k, dflt) for k, dflt in _SCHEMAS[command].items()}
    out_dir = doc.get("out_dir", "")
    if not isinstance(out_dir, str):
        raise RangeError(f"out_dir must be a string, got {out_dir!r}")

    fam = params.get("family")
    if fam is not None and fam not in FAMILIES:
        raise RangeError(f"family must be one of {FAMILIES}, got {fam!r}")
    if "levels" in params:
        params["levels"] = _check_levels("levels", params["levels"], fam)
    if "level" in params:
        lv = _require_type("level", params["level"], int, "an integer")
        if not (0 <= lv <= MAX_LEVEL[fam]):
            raise RangeError(f"{fam} level {lv} outside [0, {MAX_LEVEL[fam]}]")
    for key in ("x", "y", "start", "kmax", "n_trials", "steps", "wired_check_level"):
        if key in params:
            v = _require_type(key, params[key], int, "an integer")
            if v < 0 or (key in ("kmax", "n_trials") and v < 1):
                raise RangeError(f"config key {key!r} must be positive, got {v}")
    for key in ("T", "L", "weight", "cap_factor", "v_exponent"):
        if key in params:
            v = float(_require_type(key, params[key], (int, float), "numeric"))
            if not math.isfinite(v) or (key != "v_exponent" and v <= 0):
                raise RangeError(f"config key {key!r} must be positive and finite, got {v}")
            params[key] = v
    if "lambda_grid" in params:
        params["lambda_grid"] = _check_lambda_grid(params["lambda_grid"])
    if "t_values" in params:
        tv = params["t_values"]
        if not isinstance(tv, list) or not tv:
            raise RangeError("t_values must be a nonempty list")
        params["t_values"] = [
            float(_require_type("t_values", t, (int, float), "numeric")) for t in tv
        ]
        if any(not math.isfinite(t) or t <= 0 for t in params["t_values"]):
            raise RangeError("t_values entries must be positive and finite")

    kind = params.get("kind")
    if command == "exp":
        if kind not in EXP_KINDS:
            raise RangeError(f"exp kind must be one of {EXP_KINDS}, got {kind!r}")
        stray = sorted(
            k
            for k in doc
            if k in _SCHEMAS["exp"]
            and k != "kind"
            and k not in _EXP_KIND_KEYS[kind]
        )
        if stray:
            raise UnknownKey(f"keys {', '.join(stray)} do not apply to exp kind {kind!r}")
        if kind == "uvd" and "v_exponent" not in doc:
            raise SchemaError("exp kind 'uvd' requires v_exponent")
        if kind in STOCHASTIC_KINDS and "seed" not in doc:
            raise RangeError(f"exp kind {kind!r} is stochastic and requires a seed")
        if kind == "equicontinuity":
            params["family"] = "gasket"
    if "seed" in params and params.get("seed") is not None:
        s = _require_type("seed", params["seed"], int, "an integer")
        if s < 0:
            raise RangeError(f"seed must be nonnegative, got {s}")
    return ExperimentConfig(command=command, params=params, out_dir=out_dir)


# -- graph serialization ---------------------------------------------------------


def _meta_to_jsonable(v):
    if isinstance(v, dict):
        return {str(k): _meta_to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_meta_to_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _meta_from_jsonable(v):
    if isinstance(v, dict):
        if v and all(k.lstrip("-").isdigit() for k in v):
            return {int(k): _meta_from_jsonable(x) for k, x in v.items()}
        return {k: _meta_from_jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_meta_from_jsonable(x) for x in v]
    return v


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def export_graph(g: WeightedGraph, path) -> None:
    """Write a graph as JSON with weights and coords as repr strings.

    repr of a float is its shortest exact decimal, so float(repr(w)) == w
    and the round trip through text is bit-exact.
    """
    doc = {
        "schema": GRAPH_SCHEMA,
        "n": g.n,
        "edges": [[int(u), int(v), repr(float(w))] for u, v, w in g.edges],
        "coords": None
        if g.coords is None
        else {str(v): [repr(float(c)) for c in xy] for v, xy in sorted(g.coords.items())},
        "meta": _meta_to_jsonable(g.meta),
    }
    _write_text_atomic(Path(path), json.dumps(doc, sort_keys=True, indent=1) + "\n")


def import_graph(path) -> WeightedGraph:
    """Rebuild a graph written by export_graph; exact inverse."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"graph file is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("schema") != GRAPH_SCHEMA:
        raise SchemaError(f"graph file must carry schema {GRAPH_SCHEMA!r}")
    for key in ("n", "edges"):
        if key not in doc:
            raise SchemaError(f"graph file missing key {key!r}")
    try:
        edges = [(int(u), int(v), float(w)) for u, v, w in doc["edges"]]
    except (TypeError, ValueError) as e:
        raise SchemaError(f"malformed edge entry: {e}") from e
    g = build_graph(edges)
    if g.n != doc["n"]:
        raise SchemaError(f"edge list spans {g.n} vertices, header says {doc['n']}")
    coords = doc.get("coords")
    if coords is not None:
        coords = {int(v): tuple(float(c) for c in xy) for v, xy in coords.items()}
    meta = _meta_from_jsonable(doc.get("meta", {}))
    return replace(g, coords=coords, meta=meta)


# -- run manifests ----------------------------------------------------------------


@dataclass(eq=False)
class RunManifest:
    """What a run produced: config hash, version, per-file checksums.

    wall_clock_s is informational; reproducibility claims are about the
    output checksums, which must match across reruns of the same config.
    """

    command: str
    config_hash: str
    version: str
    outputs: dict  # filename -> sha256 hex digest
    counts: dict
    wall_clock_s: float

    def to_jsonable(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "version": self.version,
            "outputs": self.outputs,
            "counts": self.counts,
            "wall_clock_s": self.wall_clock_s,
        }


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _tailcurve_csv(curve) -> str:
    lines = ["lambda,prob_est,ci_halfwidth,n_trials"]
    for lam, p, h in zip(curve.lambda_grid, curve.prob_est, curve.ci_halfwidth):
        lines.append(f"{float(lam)!r},{float(p)!r},{float(h)!r},{curve.n_trials}")
    return "\n".join(lines) + "\n"


def _write_curves(out, curves, kind):
    files = {}
    for c in curves:
        level = c.graph_id.rsplit("-", 1)[1]
        name = f"tailcurve_{kind}_{level}.csv"
        _write_text_atomic(out / name, _tailcurve_csv(c))
        files[name] = None
    return files


def _run_gen(cfg, out):
    files, counts = {}, {}
    for lv in cfg.params["levels"]:
        g = generate(FamilySpec(cfg.params["family"], lv, cfg.params["weight"]))
        name = f"graph_{cfg.params['family']}_{lv}.json"
        export_graph(g, out / name)
        files[name] = None
        counts[f"level_{lv}"] = {"vertices": g.n, "edges": g.num_edges}
    return files, counts


def _run_resist(cfg, out):
    files, counts = {}, {}
    for lv in cfg.params["levels"]:
        g = generate(FamilySpec(cfg.params["family"], lv))
        R = resistance_matrix(g).matrix
        lines = ["row,col,R"]
        for i in range(g.n):
            for j in range(i + 1, g.n):
                lines.append(f"{i},{j},{R[i, j]!r}")
        name = f"resist_{cfg.params['family']}_{lv}.csv"
        _write_text_atomic(out / name, "\n".join(lines) + "\n")
        files[name] = None
        counts[f"level_{lv}"] = {"pairs": g.n * (g.n - 1) // 2}
    return files, counts


def _run_oracle(cfg, out):
    p = cfg.params
    g = generate(FamilySpec(p["family"], p["level"]))
    x, y = p["x"], p["y"]
    law = excursion_visit_law(g, x, y, p["kmax"])
    doc = {
        "family": p["family"],
        "level": p["level"],
        "x": x,
        "y": y,
        "hit_before_return_prob": hit_before_return_prob(g, x, y),
        "expected_return_time": expected_return_time(g, x),
        "commute_time": expected_hitting_time(g, x, y) + expected_hitting_time(g, y, x),
        "excursion_visits": law.to_jsonable(),
    }
    name = f"oracle_{p['family']}_{p['level']}.json"
    _write_text_atomic(out / name, _dump_json(doc))
    return {name: None}, {"kmax": p["kmax"]}


def _run_walk(cfg, out):
    p = cfg.params
    g = generate(FamilySpec(p["family"], p["level"]))
    R = resistance_matrix(g)
    cap = int(p["cap_factor"] * g.total_mass * R.r_diam * (1.0 + math.log(g.n)))
    lines = ["trial,tau_cov,tau_cov_tilde,censored"]
    censored = 0
    for k in range(p["n_trials"]):
        rng = RngStream(p["seed"], k)
        try:
            s = cover_time(g, p["start"], rng, cap)
            lines.append(f"{k},{s.tau_cov},{s.tau_cov_tilde},0")
        except BudgetError:
            censored += 1
            lines.append(f"{k},{cap},{cap},1")
    name = f"walk_{p['family']}_{p['level']}.csv"
    _write_text_atomic(out / name, "\n".join(lines) + "\n")
    return {name: None}, {"censored": censored, "cap": cap}


def _run_exp(cfg, out):
    p = cfg.params
    kind = p["kind"]
    counts = {"kind": kind}
    if kind == "uvd":
        rep = check_uvd(p["family"], p["levels"], p["v_exponent"])
        _write_text_atomic(out / "uvd_report.json", _dump_json(rep.to_jsonable()))
        return {"uvd_report.json": None}, counts
    if kind == "exponents":
        est = estimate_exponents(p["family"], p["levels"])
        _write_text_atomic(out / "exponents.json", _dump_json(est.to_jsonable()))
        return {"exponents.json": None}, counts
    if kind == "carpet":
        rep = carpet_rho_estimate(p["levels"], p["wired_check_level"])
        _write_text_atomic(out / "carpet_report.json", _dump_json(rep.to_jsonable()))
        return {"carpet_report.json": None}, counts
    if kind == "scaling":
        rep = local_time_scaling(
            p["levels"], tuple(p["t_values"]), n_trials=p["n_trials"], seed=p["seed"]
        )
        _write_text_atomic(out / "scaling_report.json", _dump_json(rep.to_jsonable()))
        return {"scaling_report.json": None}, counts
    if kind == "cover":
        rep = cover_time_scaling(
            p["levels"], n_trials=p["n_trials"], seed=p["seed"], cap_factor=p["cap_factor"]
        )
        _write_text_atomic(out / "scaling_report.json", _dump_json(rep.to_jsonable()))
        return {"scaling_report.json": None}, counts
    grid = tuple(p["lambda_grid"])
    if kind == "thm-a":
        curves = tail_curve_thm_a(
            p["family"], p["levels"], p["T"], grid, p["n_trials"], p["seed"]
        )
    elif kind == "thm-b":
        curves = tail_curve_thm_b(
            p["family"],
            p["levels"],
            p["L"],
            grid,
            p["n_trials"],
            p["seed"],
            step_cap_factor=p["cap_factor"],
        )
    elif kind == "sup-lt":
        curves = sup_local_time_tail(
            p["family"], p["levels"], p["T"], grid, p["n_trials"], p["seed"]
        )
    else:
        curves = modulus_equicontinuity_gasket(
            p["levels"], p["T"], grid, p["n_trials"], p["seed"]
        )
    counts["n_curves"] = len(curves)
    return _write_curves(out, curves, kind), counts


def _run_validate(cfg, out):
    p = cfg.params
    checks = []
    failed = False
    for lv in p["levels"]:
        g = generate(FamilySpec(p["family"], lv))
        gid = f"{p['family']}-{lv}"
        R = resistance_matrix(g)
        for name, fn in (
            ("metric_axioms", lambda: validate_metric(R.matrix)),
            ("occupation_identity", lambda: _check_occupation(g, p["seed"], p["steps"])),
        ):
            try:
                fn()
                checks.append({"graph": gid, "check": name, "passed": True})
            except ResistwalkError as e:
                failed = True
                checks.append(
                    {"graph": gid, "check": name, "passed": False, "error": str(e)}
                )
    doc = {"checks": checks, "passed": not failed}
    _write_text_atomic(out / "validate_report.json", _dump_json(doc))
    if failed:
        raise InvariantViolation("validation found failing checks; see validate_report.json")
    return {"validate_report.json": None}, {"n_checks": len(checks)}


def _check_occupation(g, seed, steps):
    field = run_walk(g, 0, steps, RngStream(seed, 0))
    field.verify_counts()
    total = float(field.local_times() @ g.mu)
    if total != float(field.t):
        raise InvariantViolation(f"occupation identity broke: {total} != {field.t}")


_RUNNERS = {
    "gen": _run_gen,
    "resist": _run_resist,
    "oracle": _run_oracle,
    "walk": _run_walk,
    "exp": _run_exp,
    "validate": _run_validate,
}


def run_command(config: ExperimentConfig, out_dir=None) -> RunManifest:
    """Dispatch a validated config, write its outputs, then the manifest."""
    t0 = time.monotonic()
    out = Path(out_dir or config.out_dir or os.environ.get(OUT_DIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    files, counts = _RUNNERS[config.command](config, out)
    outputs = {name: _sha256_file(out / name) for name in sorted(files)}
    manifest = RunManifest(
        command=config.command,
        config_hash=config.config_hash(),
        version=__version__,
        outputs=outputs,
        counts=counts,
        wall_clock_s=round(time.monotonic() - t0, 3),
    )
    _write_text_atomic(out / "manifest.json", _dump_json(manifest.to_jsonable()))
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="resistwalk",
        description="Resistance metrics, local times and scaling studies on self-similar graphs.",
    )
    parser.add_argument("--version", action="version", version=f"resistwalk {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=f"run a {cmd!r} config")
        sp.add_argument("--config", required=True, help="path to a JSON config file")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
    args = parser.parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise ParseError(f"cannot read config {args.config!r}: {e}") from e
        config = parse_config(text)
        if config.command != args.subcommand:
            raise SchemaError(
                f"config is for command {config.command!r}, invoked as {args.subcommand!r}"
            )
        manifest = run_command(config, out_dir=args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except BudgetError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return 3
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 4
    except ResistwalkError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for name, digest in manifest.outputs.items():
        print(f"{name}  sha256={digest}")
    print(f"manifest.json  config={manifest.config_hash[:12]}  {manifest.wall_clock_s}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
