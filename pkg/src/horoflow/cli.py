"""Command line front end: ``horoflow <subcommand> --config PATH --out DIR``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
Errors are reported as one JSON object on standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np

from . import __version__
from .curves import SmoothCurve
from .errors import HoroflowError, NumericalError, ScheduleViolation, SupTooSmall
from .lie_core import (GroupElement, bruhat_decompose, form_residual, identity, is_in_group,
                       kak_decompose, make_a, make_k, make_m, make_u, pminus_factor,
                       random_element, weyl)

SUBCOMMANDS = ("group-check", "evolve", "haar", "discrepancy", "shrink",
               "basic-lemma", "growth", "sg-detect")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    text = resources.files("horoflow").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    raw: Dict[str, Any]
    seed: int
    threads: int

    def __getitem__(self, key):
        return self.raw[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)

    @property
    def experiment_id(self) -> str:
        return self.raw["experiment_id"]


def validate_config(raw: dict, subcommand: str, seed: Optional[int] = None,
                    threads: Optional[int] = None) -> ExperimentConfig:
    schema = load_schema()
    sub = {"$ref": f"#/$defs/{subcommand}", "$defs": schema["$defs"]}
    try:
        jsonschema.Draft202012Validator(sub).validate(raw)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    raw = dict(raw)
    if seed is not None:
        raw["seed"] = seed
    if "lattice" in raw and "n" in raw:
        if {2: "modular", 3: "picard"}[raw["n"]] != raw["lattice"]:
            raise ConfigError(f"lattice {raw['lattice']!r} does not match n = {raw['n']}")
    cfg = ExperimentConfig(subcommand, raw, int(raw["seed"]), int(threads or raw.get("threads", 1)))
    # resolve referenced specs now, before any output is written
    n = raw.get("n")
    if "curve" in raw:
        build_curve(raw["curve"], n)
    if "g0" in raw:
        build_g0(raw["g0"], n)
    for key in ("measure", "reference"):
        if key in raw and raw[key]["kind"] == "curve":
            build_curve(raw[key]["curve"], n)
            build_g0(raw[key].get("g0", []), n)
    return cfg


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------

def build_curve(spec: dict, n: Optional[int]) -> SmoothCurve:
    kind = spec["kind"]
    try:
        if kind == "polynomial":
            c = SmoothCurve(kind, np.array(spec["coefficients"], dtype=float), spec["domain"])
        elif kind == "trigonometric":
            c = SmoothCurve(kind, (np.array(spec["cos"], float), np.array(spec["sin"], float)),
                            spec["domain"])
        else:
            c = SmoothCurve(kind, (np.array(spec["knots"], float), np.array(spec["values"], float)),
                            spec["domain"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"curve: {exc}") from None
    if n is not None and c.dim != n - 1:
        raise ConfigError(f"curve: takes values in R^{c.dim}, expected R^{n - 1}")
    return c


def build_g0(spec: List[dict], n: int) -> GroupElement:
    g = identity(n)
    for i, item in enumerate(spec):
        gen, p = item["gen"], item.get("param")
        try:
            if gen == "a":
                h = make_a(float(p), n)
            elif gen in ("u", "ul"):
                h = make_u(np.atleast_1d(np.asarray(p, dtype=float)),
                           "upper" if gen == "u" else "lower", n)
            elif gen == "m":
                if n != 3:
                    raise ValueError("M is trivial in the identity component for n = 2")
                h = make_m(float(p))
            elif gen == "k":
                h = make_k(np.asarray(p, dtype=float))
                if h.n != n or not is_in_group(h):
                    raise ValueError("k parameter must be an n x n rotation")
            else:
                h = weyl(n)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"g0[{i}]: {exc}") from None
        g = g @ h
    return g


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def group_check(ns, samples: int, seed: int) -> dict:
    """The lie_core / rep_v invariants on random generator words."""
    from .rep_v import build_rep

    rng = np.random.default_rng(seed)
    report = {}
    for n in ns:
        errs = {k: 0.0 for k in ("group", "u_additive", "a_u_conjugation", "bruhat",
                                 "pminus", "kak", "homomorphism", "weights")}
        rep = build_rep(n)
        for _ in range(samples):
            g = random_element(n, rng)
            h = random_element(n, rng)
            errs["group"] = max(errs["group"], form_residual(g))
            x, y = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
            t = float(rng.uniform(-2, 2))
            errs["u_additive"] = max(errs["u_additive"],
                                     float(np.abs((make_u(x) @ make_u(y)).mat - make_u(x + y).mat).max()))
            conj = make_a(t, n) @ make_u(x) @ make_a(-t, n)
            errs["a_u_conjugation"] = max(errs["a_u_conjugation"],
                                          float(np.abs(conj.mat - make_u(math.exp(t) * x).mat).max()))
            br = bruhat_decompose(g)
            rec = br.p_minus @ (br.u_plus if br.big_cell else weyl(n))
            errs["bruhat"] = max(errs["bruhat"], float(np.abs(rec.mat - g.mat).max()))
            um, z = pminus_factor(br.p_minus)
            errs["pminus"] = max(errs["pminus"], float(np.abs((um @ z).mat - br.p_minus.mat).max()))
            k1, tt, k2 = kak_decompose(g)
            errs["kak"] = max(errs["kak"], float(np.abs((k1 @ make_a(tt, n) @ k2).mat - g.mat).max()))
            lhs = rep.matrix(g @ h)
            errs["homomorphism"] = max(errs["homomorphism"], float(
                np.abs(lhs - rep.matrix(g) @ rep.matrix(h)).max() / max(1.0, np.abs(lhs).max())))
        for tt in (1.0, -1.0):
            d = np.diag(rep.matrix(make_a(tt, n)))
            errs["weights"] = max(errs["weights"], float(np.abs(d / np.exp(rep.weights * tt) - 1).max()))
        tol = {"group": 1e-9, "u_additive": 1e-12, "a_u_conjugation": 1e-9, "bruhat": 1e-9,
               "pminus": 1e-9, "kak": 1e-9, "homomorphism": 1e-9, "weights": 1e-9}
        report[str(n)] = {
            "dim_V": rep.dim,
            "checks": {k: {"max_error": v, "tol": tol[k], "pass": bool(v <= tol[k])}
                       for k, v in errs.items()},
        }
    report["pass"] = all(c["pass"] for n in ns for c in report[str(n)]["checks"].values())
    return report


def _measure(spec: dict, n: int, fam_threads: int):
    from . import flow_experiments as fx
    if spec["kind"] == "haar":
        return fx.haar_reference(n, spec["N"], spec["seed"], fam_threads)
    if spec["kind"] == "embedded":
        if n != 3:
            raise ConfigError("embedded reference exists only for n = 3")
        return fx.embedded_reference(spec["N"], spec["seed"], fam_threads)
    return fx.evolve_curve(build_curve(spec["curve"], n), build_g0(spec.get("g0", []), n),
                           spec["t"], spec["N"], spec.get("twist", "with_z"), threads=fam_threads)


def run_evolve(cfg: ExperimentConfig, out: Path) -> List[Path]:
    from . import flow_experiments as fx
    n = cfg["n"]
    c, g0 = build_curve(cfg["curve"], n), build_g0(cfg["g0"], n)
    fam = fx.standard_family(n, cfg["family_version"])
    kind = fx.curve_reference_kind(c, g0)
    ref = (fx.haar_reference(n, cfg["reference_N"], cfg.seed, cfg.threads) if kind == "haar"
           else fx.embedded_reference(cfg["reference_N"], cfg.seed, cfg.threads))
    rows, probes = [], []
    for t in cfg["t"]:
        t0 = time.perf_counter()
        lam = fx.evolve_curve(c, g0, t, cfg["N"], cfg.get("twist", "with_z"), threads=cfg.threads)
        d = fx.discrepancy(lam, ref, fam)
        if "probe_r" in cfg.raw and lam.twist == "with_z":
            probes.append({"t": t, "r": cfg["probe_r"],
                           "probe": fx.invariance_probe(lam, cfg["probe_r"], fam, cfg.threads)})
        rows.append(fx.ExperimentRow(cfg.experiment_id, n, t, c.length, cfg["N"], d,
                                     fx.cusp_fraction(lam, 2.0), time.perf_counter() - t0))
    paths = [_write_rows(rows, out, cfg.experiment_id)]
    if probes:
        paths.append(_write_json({"reference": kind, "invariance_probe": probes}, out,
                                 cfg.experiment_id + "_probe"))
    return paths


def run_haar(cfg, out):
    from . import flow_experiments as fx
    n = cfg["n"]
    t0 = time.perf_counter()
    lam = fx.haar_reference(n, cfg["N"], cfg.seed, cfg.threads)
    other = fx.haar_reference(n, cfg["N"], cfg.seed + 1, cfg.threads)
    fam = fx.standard_family(n, cfg["family_version"])
    d = fx.discrepancy(lam, other, fam)
    row = fx.ExperimentRow(cfg.experiment_id, n, 0.0, 0.0, cfg["N"], d, fx.cusp_fraction(lam, 2.0),
                           time.perf_counter() - t0)
    summary = {"height_fractions": {str(h): fx.cusp_fraction(lam, h) for h in (1.0, 2.0, 4.0)},
               "mean_re": float(np.mean(lam.base[:, 0])), "two_seed_discrepancy": d}
    return [_write_rows([row], out, cfg.experiment_id),
            _write_json(summary, out, cfg.experiment_id + "_summary")]


def run_discrepancy(cfg, out):
    from . import flow_experiments as fx
    n = cfg["n"]
    t0 = time.perf_counter()
    lam = _measure(cfg["measure"], n, cfg.threads)
    ref = _measure(cfg["reference"], n, cfg.threads)
    d = fx.discrepancy(lam, ref, fx.standard_family(n, cfg["family_version"]))
    m = cfg["measure"]
    row = fx.ExperimentRow(cfg.experiment_id, n, float(m.get("t", 0.0)), 0.0, lam.size, d,
                           fx.cusp_fraction(lam, 2.0), time.perf_counter() - t0)
    return [_write_rows([row], out, cfg.experiment_id)]


def run_shrink(cfg, out):
    from . import flow_experiments as fx
    n = cfg["n"]
    c, g0 = build_curve(cfg["curve"], n), build_g0(cfg["g0"], n)
    s = cfg["schedule"]
    if "rate" in s:
        sched = fx.WindowSchedule.exponential(s["x"], s["t"], s["rate"], s["p"])
    else:
        if len(s["lengths"]) != len(s["t"]):
            raise ConfigError("schedule: t and lengths differ in length")
        sched = fx.WindowSchedule(float(s["x"]), tuple(s["t"]), tuple(s["lengths"]), int(s["p"]))
    if sched.p not in (n, 2):
        raise ConfigError(f"schedule: exponent must be n = {n} or 2")
    enforce = s.get("enforce", True)
    if enforce:
        sched.validate()
    rows = fx.shrinking_window_run(c, g0, sched, cfg["N"], fx.standard_family(n, cfg["family_version"]),
                                   ref_N=cfg["reference_N"], seed=cfg.seed,
                                   twist=cfg.get("twist", "with_z"), enforce=enforce,
                                   threads=cfg.threads, experiment_id=cfg.experiment_id)
    return [_write_rows(rows, out, cfg.experiment_id)]


def run_basic_lemma(cfg, out):
    from .growth_checks import approximation_check, basic_lemma_search
    from .rep_v import build_rep
    n = cfg["n"]
    c = build_curve(cfg["curve"], n)
    rep = build_rep(n)
    rng = np.random.default_rng(cfg.seed)
    vs = rng.standard_normal((cfg["vectors"], rep.dim))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    result = {"runs": []}
    for t in cfg["t"]:
        reports = [basic_lemma_search(c, rep.vector(v), t, cfg["C"], cfg["x"], cfg.get("p"),
                                      cfg.get("threshold", 1.0)) for v in vs]
        entry = {"t": t, "sup_R0": max(r.R0 for r in reports),
                 "reports": [r.to_dict() for r in reports]}
        if "c_tol" in cfg.raw:
            gap, bound, ok = approximation_check(c, rep.vector(vs[0]), t, cfg["x"], cfg["c_tol"])
            entry["approximation"] = {"sup_gap": gap, "bound": bound, "pass": ok}
        result["runs"].append(entry)
    return [_write_json(result, out, cfg.experiment_id)]


def run_growth(cfg, out):
    from .growth_checks import poly_growth_ratio
    rng = np.random.default_rng(cfg.seed)
    deg, dim, env = cfg["degree"], cfg["dim"], cfg["envelope"]
    cases, worst = [], {}
    for _ in range(cfg["cases"]):
        coef = rng.standard_normal((deg + 1, dim))
        grid = cfg.get("grid", 10_000)
        s = np.concatenate([[0.0, 1.0], (np.arange(grid) + 0.5) / grid])
        # the grid sup of |zeta| on J, so that large = |J|
        R = float(np.linalg.norm(np.polynomial.polynomial.polyval(s, coef).T, axis=1).max())
        for q in cfg["ratios"]:
            small, large = poly_growth_ratio(coef, (0.0, 1.0), q * R, R, grid)
            ratio = small / large if large > 0 else 0.0
            bound = env * q ** (1.0 / deg)
            worst[str(q)] = max(worst.get(str(q), 0.0), ratio / bound)
            cases.append({"r_over_R": q, "ratio": ratio, "bound": bound, "pass": bool(ratio <= bound)})
    result = {"degree": deg, "envelope": env, "worst_fraction_of_bound": worst,
              "pass": all(c["pass"] for c in cases), "cases": cases}
    return [_write_json(result, out, cfg.experiment_id)]


def run_sg_detect(cfg, out):
    from .growth_checks import sg_sphere_detect, square_grid
    from .rep_v import build_rep, so_m1_wedge
    n = cfg["n"]
    rep = build_rep(n)
    p0 = so_m1_wedge(rep, cfg["m"])
    grid = square_grid(n, cfg["grid"]["half_width"], cfg["grid"]["spacing"])
    pts, fit, res = sg_sphere_detect(build_g0(cfg["g0"], n), p0, grid)
    result = {"points": pts.tolist(), "fit": fit, "residual": res, "count": len(pts)}
    return [_write_json(result, out, cfg.experiment_id)]


def _write_rows(rows, out: Path, name: str) -> Path:
    from .flow_experiments import write_csv
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    write_csv(rows, path)
    return path


def _write_json(obj, out: Path, name: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


RUNNERS = {
    "evolve": run_evolve,
    "haar": run_haar,
    "discrepancy": run_discrepancy,
    "shrink": run_shrink,
    "basic-lemma": run_basic_lemma,
    "growth": run_growth,
    "sg-detect": run_sg_detect,
}

DEFAULT_GROUP_CHECK = {"experiment_id": "group_check", "seed": 0, "n": [2, 3], "samples": 200}


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(subcommand: str, config_path: Optional[str], out_dir: str,
        threads: Optional[int] = None, seed: Optional[int] = None) -> int:
    try:
        if config_path is None:
            if subcommand != "group-check":
                raise ConfigError("--config is required for this subcommand")
            raw = dict(DEFAULT_GROUP_CHECK)
        else:
            try:
                raw = json.loads(Path(config_path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        cfg = validate_config(raw, subcommand, seed, threads)
        out = Path(out_dir)
        if subcommand == "group-check":
            report = group_check(cfg["n"], cfg["samples"], cfg.seed)
            _write_json(report, out, cfg.experiment_id)
            if not report["pass"]:
                return _fail(EXIT_NUMERICAL, "numerical", "group invariants violated")
            return EXIT_OK
        RUNNERS[subcommand](cfg, out)
        return EXIT_OK
    except (ConfigError, ScheduleViolation) as exc:
        return _fail(EXIT_INVALID, "validation", str(exc))
    except (NumericalError, SupTooSmall) as exc:
        return _fail(EXIT_NUMERICAL, "numerical", f"{type(exc).__name__}: {exc}")
    except (HoroflowError, NotImplementedError) as exc:
        return _fail(EXIT_INVALID, "validation", f"{type(exc).__name__}: {exc}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="horoflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"horoflow {__version__}")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        return _fail(EXIT_INVALID, "validation", "--threads must be positive")
    return run(args.subcommand, args.config, args.out, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
