"""``fieldconc`` command line: bounds, frame widths, simulation, verification.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 frame-width budget violated.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from fieldconc import bounds, fields, mc
from fieldconc.bounds import (P_INF, ConstraintViolation, DecayModel, Exponential, FiniteRange,
                              Polynomial, analytic_delta, corollary_rate, delta_constraint,
                              optimize_delta_numeric, parse_p, psi, rate_exponent_comparison,
                              theorem_bound)
from fieldconc.frames import DeltaSeq
from fieldconc.lattice import Rectangle

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_CONSTRAINT = 0, 1, 2, 3
COMMANDS = ("bound", "delta", "simulate", "verify", "rates", "tightness")

KEYS = {"rectangle", "n", "n_list", "d", "model", "decay", "m_p", "p", "p_list", "delta",
        "seed", "replicates", "threads", "out", "suite"}
MODEL_KEYS = {
    "iid": {"type", "d", "window"},
    "block": {"type", "n", "alpha", "d", "window"},
    "moving_average": {"type", "w", "d", "kernel", "window"},
    "causal": {"type", "beta", "L", "d", "window"},
}
DECAY_KEYS = {
    "polynomial": {"type", "c", "alpha"},
    "exponential": {"type", "c", "gamma", "eta"},
    "finite_range": {"type", "w"},
}
DELTA_MODES = ("analytic", "numeric", "explicit")


class ConfigError(ValueError):
    pass


def fmt(x: Any) -> str:
    """Locale-independent CSV cell."""
    if x is None:
        return ""
    if x is P_INF:
        return "inf"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, DeltaSeq):
        return " ".join(str(v) for v in x)
    return str(x)


def write_csv(header: list[str], rows: list[dict], out) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row.get(h)) for h in header])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# -- configuration --------------------------------------------------------------

def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _int(v, name: str, lo: int | None = None) -> int:
    _require(isinstance(v, int) and not isinstance(v, bool), f"{name} must be an integer")
    _require(lo is None or v >= lo, f"{name} must be >= {lo}")
    return v


def _num(v, name: str) -> float:
    _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{name} must be a number")
    return float(v)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    _require(isinstance(cfg, dict), "config must be a JSON object")
    unknown = set(cfg) - KEYS
    _require(not unknown, f"unknown config keys: {', '.join(sorted(unknown))}")
    return cfg


def build_model(spec: dict, default_d: int, side: int | None = None) -> fields.FieldModel:
    _require(isinstance(spec, dict) and "type" in spec, "model needs a 'type'")
    kind = spec["type"]
    _require(kind in MODEL_KEYS, f"unknown model type {kind!r}")
    unknown = set(spec) - MODEL_KEYS[kind]
    _require(not unknown, f"unknown {kind} model keys: {', '.join(sorted(unknown))}")
    d = _int(spec.get("d", default_d), "model.d", 1)
    try:
        if kind == "iid":
            model = fields.IIDRademacher(d)
        elif kind == "block":
            n = spec.get("n", side)
            _require(n is not None, "block model needs 'n' (or a rectangle to take it from)")
            model = fields.BlockRademacher(_int(n, "model.n", 1), _num(spec.get("alpha", 1.0), "model.alpha"), d)
        elif kind == "moving_average":
            kernel = spec.get("kernel")
            model = fields.MovingAverage(_int(spec.get("w", 1), "model.w", 0), d,
                                         None if kernel is None else np.asarray(kernel, dtype=float))
        else:
            model = fields.CausalLinear(_num(spec.get("beta", 2.0), "model.beta"),
                                        _int(spec.get("L", 4), "model.L", 0), d)
        if "window" in spec:
            model = fields.pad_zero(model, _rectangle(spec["window"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc
    return model


def _rectangle(v) -> Rectangle:
    _require(isinstance(v, list) and v, "rectangle must be a non-empty list of sides")
    try:
        return Rectangle(tuple(_int(x, "rectangle side", 1) for x in v))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_decay(spec: dict) -> bounds.Decay:
    _require(isinstance(spec, dict) and "type" in spec, "decay needs a 'type'")
    kind = spec["type"]
    _require(kind in DECAY_KEYS, f"unknown decay type {kind!r}")
    unknown = set(spec) - DECAY_KEYS[kind]
    _require(not unknown, f"unknown {kind} decay keys: {', '.join(sorted(unknown))}")
    try:
        if kind == "polynomial":
            return Polynomial(_num(spec.get("c", 1.0), "decay.c"), _num(spec["alpha"], "decay.alpha"))
        if kind == "exponential":
            return Exponential(_num(spec.get("c", 1.0), "decay.c"), _num(spec["gamma"], "decay.gamma"),
                               _num(spec.get("eta", 1.0), "decay.eta"))
        return FiniteRange(_int(spec["w"], "decay.w", 0))
    except KeyError as exc:
        raise ConfigError(f"decay is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid decay: {exc}") from exc


def _p(v):
    try:
        return parse_p(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid p: {exc}") from exc


@dataclass
class RunConfig:
    raw: dict
    d: int
    rects: list[Rectangle]
    p_list: list
    seed: int | None
    replicates: int
    threads: int
    out: str | None

    def model(self, R: Rectangle) -> fields.FieldModel | None:
        spec = self.raw.get("model")
        if spec is None:
            return None
        return build_model(spec, self.d, max(R.sides))

    def decay_model(self, R: Rectangle, p) -> DecayModel:
        """Explicit decay if configured, else the field's own envelope."""
        if "decay" in self.raw:
            m_p = _num(self.raw.get("m_p", 1.0), "m_p")
            _require(m_p > 0, "m_p must be positive")
            return DecayModel(build_decay(self.raw["decay"]), m_p, p)
        model = self.model(R)
        _require(model is not None, "config needs a 'decay' or a 'model'")
        env = fields.wd_envelope(model, p)
        if "m_p" in self.raw:
            env = DecayModel(env.phi, _num(self.raw["m_p"], "m_p"), p)
        return env

    def delta(self, R: Rectangle, dm: DecayModel) -> tuple[str, DeltaSeq]:
        spec = self.raw.get("delta", {"mode": "analytic"})
        if isinstance(spec, str):
            spec = {"mode": spec}
        _require(isinstance(spec, dict), "delta must be an object or a mode name")
        unknown = set(spec) - {"mode", "values", "budget"}
        _require(not unknown, f"unknown delta keys: {', '.join(sorted(unknown))}")
        mode = spec.get("mode", "analytic")
        _require(mode in DELTA_MODES, f"delta mode must be one of {', '.join(DELTA_MODES)}")
        if mode == "analytic":
            return mode, analytic_delta(R, dm)
        if mode == "numeric":
            return mode, optimize_delta_numeric(R, dm, _int(spec.get("budget", 50), "delta.budget", 1))
        vals = spec.get("values")
        _require(isinstance(vals, list), "explicit delta needs a 'values' list")
        try:
            return mode, DeltaSeq(tuple(_int(v, "delta value", 0) for v in vals))
        except ValueError as exc:
            raise ConfigError(f"invalid delta: {exc}") from exc


def resolve(raw: dict, args: argparse.Namespace, defaults: dict) -> RunConfig:
    cfg = dict(defaults)
    cfg.update(raw)
    for key in ("seed", "threads", "out", "replicates"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    model_d = cfg.get("model", {}).get("d") if isinstance(cfg.get("model"), dict) else None
    d = _int(cfg.get("d", model_d or 2), "d", 1)
    if "rectangle" in cfg:
        rects = [_rectangle(cfg["rectangle"])]
        d = rects[0].d
    elif "n_list" in cfg:
        _require(isinstance(cfg["n_list"], list) and cfg["n_list"], "n_list must be a non-empty list")
        rects = [Rectangle.cube(_int(n, "n_list entry", 1), d) for n in cfg["n_list"]]
    else:
        rects = [Rectangle.cube(_int(cfg.get("n", 16), "n", 1), d)]
    p_raw = cfg.get("p_list", [cfg.get("p", 2)])
    _require(isinstance(p_raw, list) and p_raw, "p_list must be a non-empty list")
    seed = cfg.get("seed")
    if seed is not None:
        _int(seed, "seed", 0)
        _require(seed < 2**64, "seed must fit in 64 bits")
    return RunConfig(cfg, d, rects, [_p(p) for p in p_raw], seed,
                     _int(cfg.get("replicates", 2048), "replicates", 1),
                     _int(cfg.get("threads", 1), "threads", 1), cfg.get("out"))


def _model_label(cfg: RunConfig) -> str:
    spec = cfg.raw.get("model")
    if spec is None:
        return ""
    return json.dumps(spec, sort_keys=True, separators=(",", ":"))


def _decay_label(dm: DecayModel) -> str:
    phi = dm.phi
    if isinstance(phi, Polynomial):
        return f"polynomial(c={phi.c:g},alpha={phi.alpha:g})"
    if isinstance(phi, Exponential):
        return f"exponential(c={phi.c:g},gamma={phi.gamma:g},eta={phi.eta:g})"
    if isinstance(phi, FiniteRange):
        return f"finite_range(w={phi.w})"
    return "tabulated(" + ",".join(f"{v:.6g}" for v in phi.values) + ")"


def _sides(R: Rectangle) -> str:
    return "x".join(str(n) for n in R.sides)


# -- commands -----------------------------------------------------------------------

BOUND_HEADER = ["d", "sides", "N", "p", "model", "decay", "m_p", "delta_mode", "delta",
                "constraint", "psi", "lp_bound", "sg_bound", "corollary_rate", "constant", "regime"]


def _bound_row(cfg: RunConfig, R: Rectangle, p) -> dict:
    dm = cfg.decay_model(R, p)
    mode, delta = cfg.delta(R, dm)
    rep = theorem_bound(R, dm, delta)
    rate = const = regime = None
    cube = len(set(R.sides)) == 1 and R.sides[0] >= 2
    if cube and isinstance(dm.phi, (Polynomial, Exponential)):
        rate, const, regime = corollary_rate(R.sides[0], R.d, dm)
    elif isinstance(dm.phi, Polynomial):
        const, regime = bounds.corollary_constants(R.d, dm.phi.alpha)
    return {"d": R.d, "sides": _sides(R), "N": R.cardinality, "p": p, "model": _model_label(cfg),
            "decay": _decay_label(dm), "m_p": dm.m_p, "delta_mode": mode, "delta": delta,
            "constraint": str(rep.constraint), "psi": rep.psi, "lp_bound": rep.lp_bound,
            "sg_bound": rep.sg_bound, "corollary_rate": rate, "constant": const, "regime": regime}


def cmd_bound(cfg: RunConfig) -> int:
    rows = [_bound_row(cfg, R, p) for R in cfg.rects for p in cfg.p_list]
    write_csv(BOUND_HEADER, rows, cfg.out)
    return EXIT_OK


DELTA_HEADER = ["d", "sides", "p", "decay", "mode", "delta", "constraint", "valid", "psi"]


def cmd_delta(cfg: RunConfig) -> int:
    rows = []
    for R in cfg.rects:
        for p in cfg.p_list:
            dm = cfg.decay_model(R, p)
            seqs = [("analytic", analytic_delta(R, dm))]
            seqs.append(("numeric", optimize_delta_numeric(R, dm, start=seqs[0][1])))
            if isinstance(cfg.raw.get("delta"), dict) and cfg.raw["delta"].get("mode") == "explicit":
                seqs.append(cfg.delta(R, dm))
            for mode, delta in seqs:
                value, ok = delta_constraint(delta, R.max_scale, R.d)
                rows.append({"d": R.d, "sides": _sides(R), "p": p, "decay": _decay_label(dm),
                             "mode": mode, "delta": delta, "constraint": str(value), "valid": ok,
                             "psi": psi(delta, R, dm)})
    write_csv(DELTA_HEADER, rows, cfg.out)
    return EXIT_OK


SIMULATE_HEADER = ["n", "N", "p", "estimate", "se", "bound", "ratio", "seed", "replicates", "model"]


def cmd_simulate(cfg: RunConfig) -> int:
    _require(cfg.seed is not None, "simulate needs --seed (or 'seed' in the config)")
    _require(cfg.raw.get("model") is not None, "simulate needs a 'model'")
    _require(cfg.replicates >= mc.MIN_REPLICATES, f"simulate needs >= {mc.MIN_REPLICATES} replicates")
    for p in cfg.p_list:
        _require(p is not P_INF and p <= mc.MAX_P, "simulate supports 2 <= p <= 64")
    rows = []
    for R in cfg.rects:
        model = cfg.model(R)
        sums = mc.simulate_sums(model, R, cfg.replicates, cfg.seed, cfg.threads)
        for p in cfg.p_list:
            est, se = mc.lp_from_sums(sums, p)
            dm = cfg.decay_model(R, p)
            bound = theorem_bound(R, dm, cfg.delta(R, dm)[1]).bound
            rows.append({"n": max(R.sides), "N": R.cardinality, "p": p, "estimate": est, "se": se,
                         "bound": bound, "ratio": bound / est if est > 0 else None,
                         "seed": cfg.seed, "replicates": cfg.replicates, "model": _model_label(cfg)})
    write_csv(SIMULATE_HEADER, rows, cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    from fieldconc.verify import SUITES, run_suite

    _require(suite == "all" or suite in SUITES, f"unknown suite {suite!r}")
    results = run_suite(suite)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if cfg.out:
        write_csv(["check", "passed", "detail"],
                  [{"check": r.name, "passed": r.passed, "detail": r.detail} for r in results], cfg.out)
    return EXIT_VERIFY if failed else EXIT_OK


RATES_HEADER = ["series", "d", "alpha", "slope", "intercept", "target", "n_min", "n_max"]


def cmd_rates(cfg: RunConfig) -> int:
    ns = [max(R.sides) for R in cfg.rects]
    if "n_list" not in cfg.raw:
        ns = [2**j for j in range(3, 11)]
    d = cfg.d
    p = cfg.p_list[0]
    rows = []
    R0 = Rectangle.cube(ns[0], d)
    dm = cfg.decay_model(R0, p)
    alpha = dm.phi.alpha if isinstance(dm.phi, Polynomial) else None
    base = {"d": d, "alpha": alpha, "n_min": min(ns), "n_max": max(ns)}
    fit = mc.bound_regression(dm, ns, d, normalized=False)
    rows.append({**base, "series": "log_psi_vs_log_N", "slope": fit.slope, "intercept": fit.intercept,
                 "target": None if alpha is None else 1 - min(0.5, alpha / d)})
    if alpha is not None:
        ours, proj = rate_exponent_comparison(d, alpha)
        rows.append({**base, "series": "exponent_ours", "slope": ours})
        rows.append({**base, "series": "exponent_projective", "slope": proj})
    if cfg.raw.get("model") is not None and cfg.seed is not None and p is not P_INF:
        spec = cfg.raw["model"]
        fit = mc.rate_regression(lambda n: build_model(spec, d, n), ns, p, d,
                                 cfg.replicates, cfg.seed, cfg.threads)
        target = None
        if spec["type"] == "iid":
            target = -0.5
        elif spec["type"] == "block":
            target = -_num(spec.get("alpha", 1.0), "model.alpha") / d
        rows.append({**base, "series": "log_estimate_over_N_vs_log_N", "slope": fit.slope,
                     "intercept": fit.intercept, "target": target})
    write_csv(RATES_HEADER, rows, cfg.out)
    return EXIT_OK


TIGHTNESS_HEADER = ["n", "N", "d", "alpha", "p", "normalized_sum_max", "normalized_sum_min",
                    "predicted", "normalized_bound", "ratio"]


def cmd_tightness(cfg: RunConfig) -> int:
    spec = cfg.raw.get("model", {"type": "block", "alpha": 1.0})
    _require(isinstance(spec, dict) and spec.get("type") == "block", "tightness uses a block model")
    ns = [max(R.sides) for R in cfg.rects] if "n_list" in cfg.raw else [2, 4, 8, 16, 32]
    p = cfg.p_list[0]
    rows, N_all, vals = [], [], []
    for n in ns:
        R = Rectangle.cube(n, cfg.d)
        model = build_model({**spec, "n": n}, cfg.d)
        u = fields.enumerate_universe(model, R)
        s = np.abs(u.values.sum(axis=1)) / R.cardinality
        dm = fields.wd_envelope(model, p)
        bound = theorem_bound(R, dm, analytic_delta(R, dm)).bound / R.cardinality
        pred = float(R.cardinality) ** (-model.alpha / cfg.d)
        rows.append({"n": n, "N": R.cardinality, "d": cfg.d, "alpha": model.alpha, "p": p,
                     "normalized_sum_max": float(s.max()), "normalized_sum_min": float(s.min()),
                     "predicted": pred, "normalized_bound": bound, "ratio": bound / float(s.max())})
        N_all.append(R.cardinality)
        vals.append(float(s.max()))
    write_csv(TIGHTNESS_HEADER, rows, cfg.out)
    if len(set(ns)) >= 4:
        fit = mc.fit_loglog(N_all, vals)
        print(f"log-log slope {fit.slope:.17g} (predicted {-rows[0]['alpha'] / cfg.d:.17g})",
              file=sys.stderr)
    return EXIT_OK


DEFAULTS = {
    "bound": {"n": 16, "model": {"type": "iid"}},
    "delta": {"n": 256, "decay": {"type": "polynomial", "c": 1.0, "alpha": 1.0}},
    "simulate": {"n_list": [8, 16, 32], "model": {"type": "iid"}},
    "verify": {},
    "rates": {"decay": {"type": "polynomial", "c": 1.0, "alpha": 2.0}},
    "tightness": {"model": {"type": "block", "alpha": 1.0}},
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--threads", type=int, help="worker threads (never changes results)")
    common.add_argument("--replicates", type=int, help="Monte Carlo replicates")
    parser = argparse.ArgumentParser(prog="fieldconc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "verify":
            sp.add_argument("suite", nargs="?", default=None,
                            help="order, separation, cells, frames, compression, martingale, wd or all")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        raw = load_config(args.config)
        cfg = resolve(raw, args, DEFAULTS[args.command] if not raw else {})
        if args.command == "verify":
            return cmd_verify(cfg, args.suite or cfg.raw.get("suite", "all"))
        return {"bound": cmd_bound, "delta": cmd_delta, "simulate": cmd_simulate,
                "rates": cmd_rates, "tightness": cmd_tightness}[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintViolation as exc:
        print(f"constraint violated: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
