"""Command-line front end.

Commands::

    buyhold price    --payoff EXPR --s0 SPOT [--out DIR]
    buyhold envelope --payoff EXPR --out DIR
    buyhold simulate --model SPEC --paths N --steps N --horizon T --seed K --out DIR
    buyhold verify   {domination|upper|attainment|probe|stopping|all} [flags]

Exit codes: 0 ok, 1 usage/config error, 2 infinite price, 3 hard invariant
violation.  ``--config FILE`` reads INI-style defaults ([run] section, one
key per flag); explicit flags win.  Every verify run echoes its effective
configuration into the output directory so results are reproducible from
the artifacts alone.

Model strings: ``gbm:sigma=0.2``, ``heston:v0=0.04,kappa=1.5,theta=0.04,xi=0.5``,
``hullwhite:v0=0.04,mu_v=0.0,sigma_v=0.5``, ``scott:y0=-1.609,kappa=1.0,
theta=-1.609,beta=0.5``, ``roughfou:y0=-1.609,lam=1.0,theta=-1.609,beta=0.5,h=0.1``.
Bare names pick the documented default parameters.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .envelope import (
    buy_and_hold_price,
    concave_envelope,
    write_envelope_csv,
)
from .models import (
    GBM,
    Heston,
    HullWhite,
    ModelSpec,
    RoughFOU,
    Scott,
    initial_vol,
    simulate,
    write_paths_csv,
)
from .duality import (
    DualityReport,
    VolControl,
    attainment_experiment,
    incompleteness_probe,
    mc_upper_bound_check,
    write_reports_csv,
)
from .payoff import PayoffError, parse_payoff, to_piecewise
from .stopping import bellman_envelope

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFINITE = 2
EXIT_VIOLATION = 3

DEFAULT_PAYOFF = "pos(x-90)-2*pos(x-100)+pos(x-110)"

_MODEL_DEFAULTS = {
    "gbm": {"sigma": 0.2},
    "heston": {"v0": 0.04, "kappa": 1.5, "theta": 0.04, "xi": 0.5},
    "hullwhite": {"v0": 0.04, "mu_v": 0.0, "sigma_v": 0.5},
    "scott": {"y0": math.log(0.2), "kappa": 1.0, "theta": math.log(0.2), "beta": 0.5},
    "roughfou": {
        "y0": math.log(0.2), "lam": 1.0, "theta": math.log(0.2), "beta": 0.5, "h": 0.1,
    },
}
_MODEL_CLASSES = {
    "gbm": GBM, "heston": Heston, "hullwhite": HullWhite,
    "scott": Scott, "roughfou": RoughFOU,
}
ALL_MODELS = ("gbm", "heston", "hullwhite", "scott", "roughfou")


@dataclass
class RunConfig:
    """Validated run parameters; every numeric field is checked before any
    computation starts."""

    payoff: str = DEFAULT_PAYOFF
    s0: float = 100.0
    model: str = ""  # empty = all five
    paths: int = 10_000
    steps: int = 256
    horizon: float = 1.0
    seed: int = 20_250_101
    out: str = "verify_out"
    threads: int = 1
    domination_tol: float = 1e-9
    stderr_k: float = 3.0
    attainment_steps: int = 2048
    delta_override: float = math.nan  # sabotage hook: replaces the hedge delta

    def validate(self) -> None:
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")
        if self.paths < 2:
            raise ValueError("paths must be >= 2")
        if self.steps < 1 or self.attainment_steps < 1:
            raise ValueError("steps must be >= 1")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.domination_tol < 0 or self.stderr_k <= 0:
            raise ValueError("tolerances must be positive")


def parse_model(text: str, s0: float, horizon: float, n_steps: int) -> ModelSpec:
    name, _, params_text = text.partition(":")
    name = name.strip().lower()
    if name not in _MODEL_CLASSES:
        raise ValueError(f"unknown model '{name}' (choose from {', '.join(ALL_MODELS)})")
    params = dict(_MODEL_DEFAULTS[name])
    if params_text:
        for item in params_text.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in params:
                raise ValueError(f"unknown parameter '{key}' for model '{name}'")
            params[key] = float(value)
    return ModelSpec(_MODEL_CLASSES[name](**params), s0, horizon, n_steps)


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        ini = configparser.ConfigParser()
        read = ini.read(args.config)
        if not read:
            raise ValueError(f"config file not found: {args.config}")
        if ini.has_section("run"):
            for key, value in ini.items("run"):
                if not hasattr(cfg, key):
                    raise ValueError(f"unknown config key '{key}'")
                current = getattr(cfg, key)
                kind = type(current)
                setattr(cfg, key, kind(value) if kind is not str else value)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    cfg.validate()
    return cfg


def _echo_config(cfg: RunConfig, out_dir: Path) -> None:
    ini = configparser.ConfigParser()
    ini["run"] = {f.name: str(getattr(cfg, f.name)) for f in fields(RunConfig)}
    with open(out_dir / "config_used.ini", "w") as fh:
        ini.write(fh)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_price(args: argparse.Namespace) -> int:
    try:
        ast = parse_payoff(args.payoff, auto_shift=args.auto_shift)
    except PayoffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for w in ast.warnings:
        print(f"warning: {w}")
    hedge = buy_and_hold_price(ast, args.s0)
    env = concave_envelope(to_piecewise(ast))
    if not math.isfinite(hedge.price):
        print("price=inf delta=undefined (superlinear payoff: envelope is infinite)")
        return EXIT_INFINITE
    print(f"price={hedge.price!r} delta={hedge.delta!r} s0={args.s0!r}")
    if ast.cash_shift:
        print(
            f"note: payoff was shifted by +{ast.cash_shift:g}; the original "
            f"claim prices to {hedge.price - ast.cash_shift!r} (same delta)"
        )
    print("envelope knots (x, value):")
    for x, y in zip(env.xs, env.ys):
        print(f"  {x!r}, {y!r}")
    print(f"tail slope: {env.tail_slope!r}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "envelope.csv", "w") as fh:
            write_envelope_csv(env, fh)
        print(f"wrote {out_dir / 'envelope.csv'}")
    return EXIT_OK


def cmd_envelope(args: argparse.Namespace) -> int:
    try:
        ast = parse_payoff(args.payoff)
    except PayoffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    env = concave_envelope(to_piecewise(ast))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "envelope.csv", "w") as fh:
        write_envelope_csv(env, fh)
    print(f"wrote {out_dir / 'envelope.csv'}")
    return EXIT_OK if env.finite else EXIT_INFINITE


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        model = cfg.model or "gbm"
        spec = parse_model(model, cfg.s0, cfg.horizon, cfg.steps)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    batch = simulate(spec, cfg.paths, cfg.seed, threads=cfg.threads)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out_dir)
    path = out_dir / "paths.csv"
    with open(path, "w") as fh:
        write_paths_csv(batch, fh)
    print(f"wrote {path} ({batch.n_paths} paths x {batch.n_steps + 1} rows)")
    return EXIT_OK


def _verify_models(cfg: RunConfig) -> list[str]:
    return [cfg.model] if cfg.model else list(ALL_MODELS)


def _check(label: str, ok: bool, detail: str, lines: list[str]) -> bool:
    status = "PASS" if ok else "FAIL"
    lines.append(f"[{status}] {label}: {detail}")
    return ok


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args)
        ast = parse_payoff(cfg.payoff)
        hedge = buy_and_hold_price(ast, cfg.s0)
    except (PayoffError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not math.isfinite(hedge.price):
        print("error: envelope is infinite; nothing to verify", file=sys.stderr)
        return EXIT_INFINITE
    if not math.isnan(cfg.delta_override):
        hedge = type(hedge)(hedge.price, cfg.delta_override, hedge.s0)

    which = args.experiment
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out_dir)

    lines: list[str] = []
    all_ok = True

    if which in ("domination", "upper", "all"):
        reports = []
        for name in _verify_models(cfg):
            spec = parse_model(name, cfg.s0, cfg.horizon, cfg.steps)
            rep = mc_upper_bound_check(
                spec, ast, hedge, cfg.paths, cfg.seed,
                threads=cfg.threads, tol=cfg.domination_tol,
            )
            reports.append((name, rep))
        if which in ("domination", "all"):
            with open(out_dir / "domination.csv", "w") as fh:
                write_reports_csv(reports, fh)
            for name, rep in reports:
                all_ok &= _check(
                    f"domination/{name}",
                    rep.violations == 0,
                    f"violations={rep.violations} worst_margin={rep.diagnostics['worst_margin']:.3e}",
                    lines,
                )
        if which in ("upper", "all"):
            with open(out_dir / "upper.csv", "w") as fh:
                write_reports_csv(reports, fh)
            for name, rep in reports:
                ok = rep.estimate <= hedge.price + cfg.stderr_k * rep.stderr
                all_ok &= _check(
                    f"upper/{name}",
                    ok,
                    f"mean={rep.estimate:.6g} price={hedge.price:.6g} stderr={rep.stderr:.3g}",
                    lines,
                )

    if which in ("attainment", "all"):
        reports = []
        nu0 = 0.2
        for i, sigma_max in enumerate((2.0, 4.0, 8.0)):
            control = VolControl(0.01, sigma_max, nu0=nu0)
            rep = attainment_experiment(
                ast, cfg.s0, control, cfg.horizon, cfg.attainment_steps,
                cfg.paths, cfg.seed + i, threads=cfg.threads,
            )
            reports.append((f"sigma_max={sigma_max:g}", rep))
        with open(out_dir / "attainment.csv", "w") as fh:
            write_reports_csv(reports, fh)
        ests = [r.estimate for _, r in reports]
        ses = [r.stderr for _, r in reports]
        mono = all(
            b >= a - 4.0 * math.hypot(sa, sb)
            for (a, sa), (b, sb) in zip(zip(ests, ses), zip(ests[1:], ses[1:]))
        )
        all_ok &= _check(
            "attainment/monotone", mono,
            "estimates " + " -> ".join(f"{e:.4f}" for e in ests), lines,
        )
        all_ok &= _check(
            "attainment/threshold",
            ests[-1] >= 0.9 * hedge.price,
            f"final={ests[-1]:.4f} vs 0.9*price={0.9 * hedge.price:.4f}", lines,
        )

    if which in ("probe", "all"):
        spec = parse_model("scott", cfg.s0, cfg.horizon, cfg.steps)
        nu0 = initial_vol(spec)
        eps = 0.1
        reports = []
        for gain in (0.0, 10.0, 25.0, 50.0):
            rep = incompleteness_probe(
                spec, nu0, eps, gain, cfg.paths, cfg.seed, threads=cfg.threads
            )
            reports.append((f"gain={gain:g}", rep))
        rep0 = incompleteness_probe(
            spec, "realized", eps, 0.0, min(cfg.paths, 2000), cfg.seed,
            threads=cfg.threads,
        )
        reports.append(("realized", rep0))
        with open(out_dir / "probe.csv", "w") as fh:
            write_reports_csv(reports, fh)
        best = min(r.estimate for _, r in reports[:-1])
        entropy = reports[-2][1].diagnostics["relative_entropy"]
        all_ok &= _check(
            "probe/feasible",
            best < eps and math.isfinite(entropy),
            f"min frequency={best:.4f} (< {eps}) entropy={entropy:.3f}", lines,
        )
        all_ok &= _check(
            "probe/realized", rep0.estimate == 0.0,
            f"frequency={rep0.estimate}", lines,
        )

    if which in ("stopping", "all"):
        res = bellman_envelope(ast, cfg.s0)
        tol = max(0.05, 0.02 * hedge.price)
        rep = DualityReport(
            estimate=res.value, stderr=0.0, n_paths=0, violations=0,
            diagnostics={
                "envelope_price": hedge.price,
                "iterations": float(res.iterations),
                "residual": res.residual,
                "converged": 1.0 if res.converged else 0.0,
            },
        )
        with open(out_dir / "stopping.csv", "w") as fh:
            write_reports_csv([("bellman", rep)], fh)
        all_ok &= _check(
            "stopping/oracle",
            abs(res.value - hedge.price) <= tol and res.converged,
            f"bellman={res.value:.6f} envelope={hedge.price:.6f} tol={tol:.3g}",
            lines,
        )

    for line in lines:
        print(line)
    print("verify:", "OK" if all_ok else "INVARIANT VIOLATION")
    return EXIT_OK if all_ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--payoff", type=str, default=None)
    p.add_argument("--s0", type=float, default=None)
    p.add_argument("--model", type=str, default=None)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="buyhold",
        description="Buy-and-hold super-replication pricing and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_price = sub.add_parser("price", help="price a payoff and print the hedge")
    p_price.add_argument("--payoff", type=str, required=True)
    p_price.add_argument("--s0", type=float, required=True)
    p_price.add_argument("--out", type=str, default=None)
    p_price.add_argument("--auto-shift", action="store_true")
    p_price.set_defaults(func=cmd_price)

    p_env = sub.add_parser("envelope", help="export the concave envelope as CSV")
    p_env.add_argument("--payoff", type=str, required=True)
    p_env.add_argument("--out", type=str, required=True)
    p_env.set_defaults(func=cmd_envelope)

    p_sim = sub.add_parser("simulate", help="simulate a model and dump paths CSV")
    _add_run_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run verification experiments")
    p_ver.add_argument(
        "experiment",
        choices=["domination", "upper", "attainment", "probe", "stopping", "all"],
    )
    _add_run_flags(p_ver)
    p_ver.add_argument("--delta-override", dest="delta_override", type=float, default=None)
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
