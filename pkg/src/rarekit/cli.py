"""Batch front end: ``rarekit <command> --scenario file.json [--threads k] [--out path]``.

Exit codes: 0 success, 2 validation error, 3 infeasible budget, 4 replay
mismatch. Result files carry ``config_hash``, the SHA-256 of the canonical
JSON of ``{command, payload, budget}``; seed and output location are not
hashed, so a replay with a tampered seed runs and then diverges.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import jsonschema
import numpy as np

from . import __version__, large_deviations, mixtures, risk_model, tails, vectors
from .mc import InfeasibleError, default_threads
from .rare_sets import RareSet, RuinKind, RuinSet
from .schema import COMMANDS, PAYLOADS, SCENARIO

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_MISMATCH = 0, 2, 3, 4


class ValidationError(Exception):
    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def _validate(instance, schema, prefix=()):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = max(errors, key=lambda e: len(e.absolute_path))
        raise ValidationError(_pointer([*prefix, *e.absolute_path]), e.message)


# --- JSON helpers ------------------------------------------------------------


def _clean(obj):
    """Plain JSON types; non-finite floats become the strings ``infinity``/``-infinity``/``nan``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "infinity" if v > 0 else "-infinity"
        return v
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(command: str, payload: dict, budget: dict) -> str:
    blob = canonical_json({"command": command, "payload": payload, "budget": budget})
    return hashlib.sha256(blob.encode()).hexdigest()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- payload parsing --------------------------------------------------------


def _tail(obj, at):
    try:
        return tails.model_from_json(obj)
    except (TypeError, ValueError) as e:
        raise ValidationError(at, str(e)) from e


def _vector(obj, at):
    try:
        return vectors.vector_model_from_json(obj)
    except (TypeError, ValueError, KeyError) as e:
        raise ValidationError(at, str(e)) from e


def _set(obj, at):
    try:
        return RareSet.from_json(obj)
    except ValueError as e:
        raise ValidationError(at, str(e)) from e


def _coupling(obj, at):
    try:
        return mixtures.FgmCoupling(_tail(obj["theta"], at + "/theta"), float(obj.get("fgm_theta", 0.0)))
    except ValueError as e:
        raise ValidationError(at, str(e)) from e


def _risk(obj, at):
    model = _vector(obj["claim_model"], at + "/claim_model")
    rs = obj["ruin_set"]
    try:
        ruin = RuinSet(RuinKind(rs["kind"]), int(rs.get("dim", model.dim)))
        return risk_model.RiskConfig(
            lam=float(obj["lambda"]), horizon=float(obj["horizon"]), interest=float(obj["interest"]),
            claim_model=model, allocation=obj["allocation"], ruin_set=ruin,
            premium_rates=obj.get("premium_rates"), fgm_theta=float(obj.get("fgm_theta", 0.0)),
        )
    except ValueError as e:
        raise ValidationError(at, str(e)) from e


def _grid(xs, at):
    a = np.asarray(xs, dtype=float)
    if (np.diff(a) <= 0).any():
        raise ValidationError(at, "grid must be strictly increasing")
    return a


def _est(e) -> dict:
    return {"estimate": e.value, "std_error": e.std_error}


# --- command handlers -------------------------------------------------------


@dataclass
class Outcome:
    result: dict
    rows: List[dict]
    columns: List[str]
    estimate: Optional[float]
    std_error: Optional[float]


DEFAULT_B_GRID = [2.0**k for k in range(1, 21)]


def run_classify(p, seed, n, threads) -> Outcome:
    model = _tail(p["model"], "/payload/model")
    try:
        profile = tails.class_profile(model)
    except TypeError as e:
        raise ValidationError("/payload/model", str(e)) from e
    b_grid = p.get("b_grid", DEFAULT_B_GRID)
    x_max = float(p.get("x_max", 1e6))
    if (np.diff(b_grid) <= 0).any():
        raise ValidationError("/payload/b_grid", "b_grid must be strictly increasing")
    res: Dict[str, Any] = {"model": model.to_json(), "profile": profile.to_json(), "b_grid": list(b_grid), "x_max": x_max}
    rows = []
    try:
        jm, jp = tails.matuszewska_index_curves(model, b_grid, x_max)
        j_minus, j_plus = tails.matuszewska_estimate(model, b_grid, x_max)
        rows = [{"b": b, "j_minus": a, "j_plus": c} for b, a, c in zip(b_grid, jm, jp)]
        res.update(j_minus_hat=j_minus, j_plus_hat=j_plus, in_PD_hat=bool(j_minus > 0.05), estimate_error=None)
    except tails.TailUnderflowError as e:
        j_minus = None
        res.update(j_minus_hat=None, j_plus_hat=None, in_PD_hat=None, estimate_error=str(e))
    return Outcome(res, rows, ["b", "j_minus", "j_plus"], j_minus, None)


def run_tailprob(p, seed, n, threads) -> Outcome:
    model = _vector(p["vector_model"], "/payload/vector_model")
    A = _set(p["set"], "/payload/set")
    if model.dim != A.dim:
        raise ValidationError("/payload/set", "set and model dimensions differ")
    xs = _grid(p["x_grid"], "/payload/x_grid")
    exact = vectors.fa_tail_exact(model, A, xs)
    mc_est = vectors.fa_tail_mc(model, A, xs, seed, n, threads) if p.get("mc", True) else [None] * xs.size
    rows = []
    for i, x in enumerate(xs):
        e = mc_est[i]
        rows.append({"x": x, "exact": None if exact is None else float(exact[i]),
                     "mc": None if e is None else e.value, "se": None if e is None else e.std_error})
    res = {"rows": rows, "mu_measure": vectors.mu_measure(model, A) if isinstance(model, vectors.MrvRay) else None}
    last = rows[-1]
    return Outcome(res, rows, ["x", "exact", "mc", "se"], last["mc"] if last["mc"] is not None else last["exact"],
                   last["se"])


def run_breiman(p, seed, n, threads) -> Outcome:
    model = _vector(p["vector_model"], "/payload/vector_model")
    A = _set(p["set"], "/payload/set")
    c = _coupling(p["coupling"], "/payload/coupling")
    try:
        pair = mixtures.MixturePair(model, A, c)
        alpha = float(p["alpha"])
        const = mixtures.breiman_constant(c, alpha)
        oracle = mixtures.breiman_constant_quantile_quad(c, alpha)
        dens = mixtures.breiman_constant_density_quad(c, alpha) if c.theta_model.continuous else None
        xs = _grid(p["x_grid"], "/payload/x_grid")
        est = mixtures.verify_breiman(pair, alpha, xs, seed, n, threads)
    except ValueError as e:
        if isinstance(e, InfeasibleError):
            raise
        raise ValidationError("/payload", str(e)) from e
    rows = []
    for x, r in est:
        exact = mixtures.mixture_tail_exact(pair, x)
        ex_ratio = None if exact is None else exact / (const * vectors.fa_tail_exact(model, A, x))
        rows.append({"x": x, "ratio": r.value, "se": r.std_error, "exact_ratio": ex_ratio})
    res = {"breiman_constant": const, "quantile_quadrature": oracle, "density_quadrature": dens, "rows": rows}
    return Outcome(res, rows, ["x", "ratio", "se", "exact_ratio"], rows[-1]["ratio"], rows[-1]["se"])


def run_sbj(p, seed, n, threads) -> Outcome:
    A = _set(p["set"], "/payload/set")
    pairs = []
    for i, q in enumerate(p["pairs"]):
        at = f"/payload/pairs/{i}"
        try:
            pair = mixtures.MixturePair(_vector(q["vector_model"], at + "/vector_model"), A,
                                        _coupling(q["coupling"], at + "/coupling"))
        except ValueError as e:
            raise ValidationError(at, str(e)) from e
        pairs.extend([pair] * int(q.get("copies", 1)))
    xs = _grid(p["x_grid"], "/payload/x_grid")
    mode = p.get("mode", "sbj")
    try:
        if mode == "sbj":
            chk = mixtures.sbj_sum_ratio(pairs, xs, seed, n, threads)
        else:
            chk = mixtures.mrv_weighted_sum_check(pairs, xs, seed, n, threads=threads)
    except InfeasibleError:
        raise
    except ValueError as e:
        raise ValidationError("/payload", str(e)) from e
    rows = [r.to_json() for r in chk.rows]
    res = {"mode": mode, "n_summands": len(pairs), "rows": rows,
           "subadditivity_violations": chk.subadditivity_violations, **chk.extra}
    cols = ["x", "ratio", "ratio_se", "numerator", "numerator_se", "denominator", "bonferroni_lower",
            "bonferroni_ok", "ya_sum_ratio"]
    return Outcome(res, rows, cols, rows[-1]["ratio"], rows[-1]["ratio_se"])


def _alpha(p, cfg, at):
    a = p.get("alpha")
    if cfg.interest > 0 and a is None:
        raise ValidationError(at, "alpha is required when interest > 0")
    return None if a is None else float(a)


def run_constants(p, seed, n, threads) -> Outcome:
    cfg = _risk(p["risk"], "/payload/risk")
    alpha = _alpha(p, cfg, "/payload/alpha")
    try:
        if cfg.interest > 0:
            est = risk_model.constant_Cr(cfg, alpha, seed, n, threads)
            kappa = alpha * cfg.interest
        else:
            est = risk_model.constant_C0(cfg, seed, n, threads)
            kappa = 0.0
    except ValueError as e:
        raise ValidationError("/payload", str(e)) from e
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        quad = risk_model.constant_nested_quadrature(cfg, alpha if cfg.interest > 0 else None, p.get("n_max"))
    closed = risk_model.constant_closed_form(cfg.lam, cfg.horizon, kappa, cfg.fgm_theta)
    res = {
        "constant": "C_r" if cfg.interest > 0 else "C_0",
        **_est(est),
        "n": est.n_samples,
        "quadrature": {"value": quad.value, "n_max": quad.n_max, "tail_mass": quad.tail_mass, "warning": quad.warning},
        "closed_form": closed,
    }
    row = {"estimate": est.value, "se": est.std_error, "quadrature": quad.value, "closed_form": closed}
    return Outcome(res, [row], ["estimate", "se", "quadrature", "closed_form"], est.value, est.std_error)


def run_ruin(p, seed, n, threads) -> Outcome:
    cfg = _risk(p["risk"], "/payload/risk")
    alpha = _alpha(p, cfg, "/payload/alpha")
    xs = _grid(p["x_grid"], "/payload/x_grid")
    try:
        scan = risk_model.ruin_ratio_scan(cfg, alpha, xs, seed, n, threads)
    except ValueError as e:
        raise ValidationError("/payload", str(e)) from e
    rows = [r.to_json() for r in scan.rows]
    res = {"rows": rows, "constant": scan.constant, "premium_violations": scan.premium_violations,
           "mean_claims": scan.mean_claims, "rare_set": cfg.rare_set.to_json()}
    cols = ["x", "psi_hat", "se", "prediction", "ratio", "ratio_se", "psi_no_premium", "se_no_premium"]
    return Outcome(res, rows, cols, rows[-1]["ratio"], rows[-1]["ratio_se"])


def run_ldp(p, seed, n, threads) -> Outcome:
    models = [_vector(m, f"/payload/models/{i}") for i, m in enumerate(p["models"])]
    A = _set(p["set"], "/payload/set")
    xs = _grid(p["x_grid"], "/payload/x_grid")
    try:
        s = large_deviations.LdpScenario(models, A, float(p["gamma"]), float(p.get("shift_c", 0.0)),
                                         p.get("lambda"))
        if p["mode"] == "fixed_n":
            out = large_deviations.ldp_ratio_fixed_n(s, int(p["n"]), xs, seed, n, threads)
            index = int(p["n"])
        else:
            out = large_deviations.ldp_ratio_random_sum(s, float(p["t"]), xs, seed, n, threads)
            index = float(p["t"])
        weq = large_deviations.weak_equivalence_check(models, A, xs) if len(models) > 1 else None
        dep = large_deviations.dependence_condition_scan(s, p["n_grid"]) if "n_grid" in p else None
    except InfeasibleError:
        raise
    except ValueError as e:
        raise ValidationError("/payload", str(e)) from e
    rows = []
    for r in out.rows:
        d = r.to_json()
        d.update(n_or_t=index, flag="ok" if r.bonferroni_ok else "bonferroni")
        rows.append(d)
    res = {
        "mode": p["mode"], "rows": rows, "grid": out.grid, "min_ratio": out.min_ratio, "argmin_x": out.argmin,
        "n_terms": out.n_terms, "samplewise_violations": out.samplewise_violations,
        "weak_equivalence": None if weq is None else {"c1": weq.c1, "c2": weq.c2, "log_slope": weq.log_slope,
                                                      "violated": weq.violated},
        "dependence_scan": None if dep is None else {"rows": [list(r) for r in dep.rows], "flagged": dep.flagged},
    }
    se = min(out.rows, key=lambda r: r.ratio.value).ratio.std_error
    return Outcome(res, rows, ["n_or_t", "x", "ratio", "se", "flag"], out.min_ratio, se)


HANDLERS: Dict[str, Callable[..., Outcome]] = {
    "classify": run_classify, "tailprob": run_tailprob, "breiman": run_breiman, "sbj": run_sbj,
    "constants": run_constants, "ruin": run_ruin, "ldp": run_ldp,
}


# --- scenario execution -----------------------------------------------------


def load_scenario(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as e:
        raise ValidationError("", f"scenario file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ValidationError("", f"invalid JSON: {e}") from e
    validate_scenario(data)
    return data


def validate_scenario(data):
    _validate(data, SCENARIO)
    _validate(data["payload"], PAYLOADS[data["command"]], ("payload",))


def _budget(data) -> Tuple[dict, int]:
    key = "n_samples" if "n_samples" in data else "n_paths"
    return {key: int(data[key])}, int(data[key])


def execute(data: dict, threads: int = 1) -> dict:
    """Run a validated scenario and return the result document (without wall time)."""
    budget, n = _budget(data)
    seed = int(data["seed"])
    outcome = HANDLERS[data["command"]](data["payload"], seed, n, threads)
    ci = None
    if outcome.estimate is not None and outcome.std_error is not None:
        ci = [outcome.estimate - 3 * outcome.std_error, outcome.estimate + 3 * outcome.std_error]
    return _clean({
        "rarekit_version": __version__,
        "command": data["command"],
        "seed": seed,
        "budget": budget,
        "payload": data["payload"],
        "config_hash": config_hash(data["command"], data["payload"], budget),
        "result": outcome.result,
        "summary": {"estimate": outcome.estimate, "std_error": outcome.std_error, "ci": ci},
        "csv": {"columns": outcome.columns, "rows": outcome.rows},
    })


def render_csv(doc: dict) -> str:
    buf = io.StringIO()
    cols = doc["csv"]["columns"]
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in doc["csv"]["rows"]:
        w.writerow({k: ("" if row.get(k) is None else (repr(row[k]) if isinstance(row[k], float) else row[k])) for k in cols})
    return buf.getvalue()


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_outputs(doc: dict, path: Path, fmt: str):
    if fmt == "csv":
        _atomic_write(Path(str(path) + ".meta.json"), render_json(doc))
        _atomic_write(path, render_csv(doc))
    else:
        _atomic_write(path, render_json(doc))


def _resolve_output(data, out_override) -> Tuple[Optional[Path], str]:
    dest = data.get("output", {})
    path = out_override or dest.get("path")
    if path is None:
        return None, "json"
    fmt = dest.get("format") or ("csv" if str(path).endswith(".csv") else "json")
    if out_override and "format" not in dest:
        fmt = "csv" if str(path).endswith(".csv") else "json"
    return Path(path), fmt


def _summary_line(doc, wall, path) -> str:
    s = doc["summary"]
    est = s["estimate"]
    parts = [f"{doc['command']}:"]
    parts.append("estimate=" + ("n/a" if est is None else f"{est:.6g}" if isinstance(est, float) else str(est)))
    if s["ci"] is not None:
        parts.append(f"ci=[{s['ci'][0]:.6g}, {s['ci'][1]:.6g}]")
    b = next(iter(doc["budget"].items()))
    parts += [f"{b[0]}={b[1]}", f"seed={doc['seed']}", f"wall={wall:.2f}s"]
    if path is not None:
        parts.append(f"-> {path}")
    return " ".join(parts)


def run(scenario_file, threads: Optional[int] = None, out: Optional[str] = None, command: Optional[str] = None) -> int:
    threads = default_threads() if threads is None else threads
    try:
        data = load_scenario(scenario_file)
        if command is not None and command != data["command"]:
            raise ValidationError("/command", f"scenario command {data['command']!r} does not match {command!r}")
        path, fmt = _resolve_output(data, out)
        t0 = time.perf_counter()
        doc = execute(data, threads)
        wall = time.perf_counter() - t0
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as e:
        print(f"validation error: /payload: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if path is None:
        sys.stdout.write(render_json(doc))
    else:
        write_outputs(doc, path, fmt)
    print(_summary_line(doc, wall, path))
    return EXIT_OK


def _first_divergence(a, b, at="") -> Optional[str]:
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                return f"{at}/{k}"
            d = _first_divergence(a[k], b[k], at + "/" + str(k))
            if d is not None:
                return d
        return None
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return at or "/"
        for i, (x, y) in enumerate(zip(a, b)):
            d = _first_divergence(x, y, f"{at}/{i}")
            if d is not None:
                return d
        return None
    return None if (type(a) is type(b) and a == b) else (at or "/")


def replay(result_file) -> int:
    """Re-run a result file single-threaded and require bit-identical results."""
    path = Path(result_file)
    if path.suffix == ".csv":
        path = Path(str(path) + ".meta.json")
    try:
        with open(path) as fh:
            stored = json.load(fh)
        for key in ("command", "seed", "budget", "payload", "config_hash", "result"):
            if key not in stored:
                raise ValidationError("/" + key, "missing from result file")
        budget = stored["budget"]
        if stored["config_hash"] != config_hash(stored["command"], stored["payload"], budget):
            raise ValidationError("/config_hash", "configuration hash mismatch (payload or budget changed)")
        data = {"command": stored["command"], "seed": stored["seed"], "payload": stored["payload"], **budget}
        validate_scenario(data)
        fresh = execute(data, threads=1)
    except (OSError, json.JSONDecodeError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as e:
        print(f"validation error: /payload: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    for key in ("result", "summary", "csv"):
        d = _first_divergence(stored.get(key), fresh.get(key), "/" + key)
        if d is not None:
            print(f"replay mismatch at {d}", file=sys.stderr)
            return EXIT_MISMATCH
    print(f"replay ok: {stored['command']} seed={stored['seed']} hash={stored['config_hash'][:12]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rarekit", description="Heavy-tailed rare-set simulation and oracles.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in (*COMMANDS, "run"):
        sp = sub.add_parser(name, help=f"run a {name} scenario" if name != "run" else "run any scenario file")
        sp.add_argument("scenario_file", nargs="?", help="scenario JSON (run only)" if name == "run" else argparse.SUPPRESS)
        sp.add_argument("--scenario", dest="scenario", help="scenario JSON file")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default RAREKIT_THREADS or 1)")
        sp.add_argument("--out", default=None, help="output path; .csv selects CSV output")
    rp = sub.add_parser("replay", help="re-run a result file and check bit-identity")
    rp.add_argument("result_file")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "replay":
        return replay(args.result_file)
    scenario = args.scenario or args.scenario_file
    if scenario is None:
        print("validation error: /: --scenario is required", file=sys.stderr)
        return EXIT_VALIDATION
    if args.threads is not None and args.threads < 1:
        print("validation error: /: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    return run(scenario, args.threads, args.out, None if args.cmd == "run" else args.cmd)


if __name__ == "__main__":
    sys.exit(main())
