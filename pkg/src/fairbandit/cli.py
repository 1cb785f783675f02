"""Experiment runner.

Subcommands:
  run        one simulation from an INI config; writes run.csv + summary.json
  sweep      repeat a config over values of T, noise_sigma, or policy.kind
  verify     run a named property suite and print its JSON report
  lowerbound run the hard envy-freeness instance pair and report statistics

Run CSV columns (schema changes bump the artifact version):
  t, k_t, i_t, v_t, regret_inc, cum_regret, min_slack, event_e_flag

Exit codes: 0 ok, 1 configuration error, 2 run contract violation.
All randomness flows from config seeds; outputs are byte-stable across reruns.
"""

import argparse
import configparser
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, verify
from .core import (
    CONSTRAINT_KINDS,
    InstanceSpec,
    random_normalized_matrix,
    validate,
)
from .lowerbound import LB_A, LB_B, LB_T_BOUNDS_OK, lb_instances, lb_statistic
from .opt import OptError
from .policies import POLICY_KINDS
from .sim import (
    RunContractError,
    disproportionality,
    event_e_diagnostic,
    run,
    summarize,
    violation_trace,
)

OUTPUT_DIR_ENV = "FAIRBANDIT_OUT"

RUN_CSV_HEADER = "t,k_t,i_t,v_t,regret_inc,cum_regret,min_slack,event_e_flag"
SWEEP_CSV_HEADER = ("param,value,seed,final_regret,max_violation,"
                    "disproportionality,event_e_fraction,status")
LB_CSV_HEADER = "instance,seed,statistic,final_regret"

_SCHEMA = {
    "instance": {"n", "m", "T", "a", "b", "mu_star", "mu_star_seed",
                 "noise_sigma", "seed"},
    "policy": {"kind", "warmup_scale", "etc_scale"},
    "constraints": {"kind"},
    "grid": {"spacing", "cap", "sample_seed"},
    "output": {"directory", "record_full_allocations"},
}
_REQUIRED = {"instance": {"n", "m", "T", "a", "b", "mu_star"},
             "policy": {"kind"},
             "constraints": {"kind"}}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    spec: InstanceSpec
    policy_kind: str
    knobs: dict
    out_dir: str
    record_full_allocations: bool
    echo: dict = field(default_factory=dict)


def _get(parser, section, key, cast, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({err})") from err


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in {k.lower() for k in _SCHEMA[section]}:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
    for section, keys in _REQUIRED.items():
        if not parser.has_section(section):
            raise ConfigError(f"missing required section [{section}]")
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError(f"missing required key '{key}' in section [{section}]")

    n = _get(parser, "instance", "n", int, required=True)
    m = _get(parser, "instance", "m", int, required=True)
    T = _get(parser, "instance", "T", int, required=True)
    a = _get(parser, "instance", "a", float, required=True)
    b = _get(parser, "instance", "b", float, required=True)
    noise_sigma = _get(parser, "instance", "noise_sigma", float, default=0.0)
    seed = _get(parser, "instance", "seed", int, default=0)

    mu_raw = parser.get("instance", "mu_star").strip()
    if mu_raw == "random_normalized":
        mu_seed = _get(parser, "instance", "mu_star_seed", int, default=0)
        mu_star = random_normalized_matrix(n, m, a, b, mu_seed)
    else:
        try:
            values = [float(tok) for tok in mu_raw.replace(",", " ").split()]
        except ValueError as err:
            raise ConfigError(f"bad mu_star entry: {err}") from err
        if len(values) != n * m:
            raise ConfigError(
                f"mu_star has {len(values)} entries, expected n*m = {n * m}")
        mu_star = np.array(values).reshape(n, m)

    constraint_kind = _get(parser, "constraints", "kind", str, required=True)
    if constraint_kind not in CONSTRAINT_KINDS:
        raise ConfigError(
            f"[constraints] kind must be one of {CONSTRAINT_KINDS}, got {constraint_kind!r}")

    spec = InstanceSpec(n=n, m=m, T=T, a=a, b=b, mu_star=mu_star,
                        noise_sigma=noise_sigma, seed=seed,
                        constraint_kind=constraint_kind)
    problems = validate(spec)
    if problems:
        raise ConfigError("invalid instance: " + "; ".join(problems))

    policy_kind = _get(parser, "policy", "kind", str, required=True)
    if policy_kind not in POLICY_KINDS:
        raise ConfigError(
            f"[policy] kind must be one of {POLICY_KINDS}, got {policy_kind!r}")

    spacing_raw = _get(parser, "grid", "spacing", str, default="auto")
    if spacing_raw == "auto":
        spacing = None  # resolved per-run as 1/sqrt(T)
    else:
        try:
            spacing = float(spacing_raw)
        except ValueError as err:
            raise ConfigError(f"bad grid spacing {spacing_raw!r}") from err

    knobs = {
        "warmup_scale": _get(parser, "policy", "warmup_scale", float, default=1.0),
        "etc_scale": _get(parser, "policy", "etc_scale", float, default=1.0),
        "grid_spacing": spacing,
        "grid_cap": _get(parser, "grid", "cap", int, default=512),
        "grid_sample_seed": _get(parser, "grid", "sample_seed", int, default=None),
    }

    out_dir = _get(parser, "output", "directory", str, default=".")
    out_dir = os.environ.get(OUTPUT_DIR_ENV, out_dir)
    record = _get(parser, "output", "record_full_allocations", _parse_bool,
                  default=False)

    echo = {section: dict(parser.items(section)) for section in parser.sections()}
    return RunConfig(spec=spec, policy_kind=policy_kind, knobs=knobs,
                     out_dir=out_dir, record_full_allocations=record, echo=echo)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_run_csv(path: str, result) -> None:
    with open(path, "w") as fh:
        fh.write(RUN_CSV_HEADER + "\n")
        for t in range(len(result.k)):
            fh.write(",".join((
                str(t),
                str(int(result.k[t])),
                str(int(result.i[t])),
                _fmt(result.v[t]),
                _fmt(result.regret_inc[t]),
                _fmt(result.cum_regret[t]),
                _fmt(result.min_slack[t]),
                str(int(result.event_flag[t])),
            )) + "\n")


def cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    started = time.perf_counter()
    try:
        result = run(config.spec, policy_kind=config.policy_kind,
                     knobs=config.knobs,
                     record_full_allocations=config.record_full_allocations)
    except (RunContractError, OptError) as err:
        print(f"run error: {err}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - started

    os.makedirs(config.out_dir, exist_ok=True)
    write_run_csv(os.path.join(config.out_dir, "run.csv"), result)
    summary = {
        "final_regret": result.final_regret(),
        "max_violation": float(violation_trace(result).max()),
        "disproportionality": disproportionality(result),
        "event_e_fraction": event_e_diagnostic(result),
        "wall_time_s": wall,
        "config": config.echo,
        "artifact_version": __version__,
    }
    with open(os.path.join(config.out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(os.path.join(config.out_dir, "run.csv"))
    return 0


_SWEEPABLE = ("T", "noise_sigma", "policy.kind")


def cmd_sweep(args) -> int:
    try:
        config = parse_config(args.config)
        if args.param not in _SWEEPABLE:
            raise ConfigError(f"--param must be one of {_SWEEPABLE}")
        values = [v for v in (tok.strip() for tok in args.values.split(",")) if v]
        if not values:
            raise ConfigError("--values must list at least one value")
        seeds = [int(tok) for tok in args.seeds.split(",") if tok.strip()]
        if not seeds:
            raise ConfigError("--seeds must list at least one seed")
    except (ConfigError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1

    rows = []
    for value in values:
        spec = config.spec
        policy_kind = config.policy_kind
        if args.param == "T":
            spec = InstanceSpec(n=spec.n, m=spec.m, T=int(value), a=spec.a, b=spec.b,
                                mu_star=spec.mu_star, noise_sigma=spec.noise_sigma,
                                seed=spec.seed, constraint_kind=spec.constraint_kind)
        elif args.param == "noise_sigma":
            spec = InstanceSpec(n=spec.n, m=spec.m, T=spec.T, a=spec.a, b=spec.b,
                                mu_star=spec.mu_star, noise_sigma=float(value),
                                seed=spec.seed, constraint_kind=spec.constraint_kind)
        else:
            if value not in POLICY_KINDS:
                print(f"config error: unknown policy kind {value!r}", file=sys.stderr)
                return 1
            policy_kind = value
        finals = []
        for seed in seeds:
            seeded = InstanceSpec(n=spec.n, m=spec.m, T=spec.T, a=spec.a, b=spec.b,
                                  mu_star=spec.mu_star, noise_sigma=spec.noise_sigma,
                                  seed=seed, constraint_kind=spec.constraint_kind)
            try:
                result = run(seeded, policy_kind=policy_kind, knobs=config.knobs)
                summary = summarize(result)
            except (RunContractError, OptError) as err:
                print(f"run error: {err}", file=sys.stderr)
                return 2
            finals.append(summary)
            rows.append((args.param, value, str(seed),
                         _fmt(summary["final_regret"]),
                         _fmt(summary["max_violation"]),
                         _fmt(summary["disproportionality"]),
                         _fmt(summary["event_e_fraction"]),
                         summary["status"]))
        rows.append((args.param, value, "median",
                     _fmt(statistics.median(s["final_regret"] for s in finals)),
                     _fmt(statistics.median(s["max_violation"] for s in finals)),
                     _fmt(statistics.median(s["disproportionality"] for s in finals)),
                     _fmt(statistics.median(s["event_e_fraction"] for s in finals)),
                     "ok"))

    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "sweep.csv")
    with open(path, "w") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    print(path)
    return 0


def cmd_verify(args) -> int:
    try:
        report = verify.run_suite(args.suite)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(json.dumps(report, indent=2, sort_keys=True, default=str))
    return 0 if report["passed"] else 1


def cmd_lowerbound(args) -> int:
    try:
        seeds = [int(tok) for tok in args.seeds.split(",") if tok.strip()]
        if not seeds:
            raise ValueError("--seeds must list at least one seed")
        if args.policy not in POLICY_KINDS:
            raise ValueError(f"--policy must be one of {POLICY_KINDS}")
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1

    pair = lb_instances(args.T)
    if args.T < LB_T_BOUNDS_OK:
        print(f"note: at T={args.T} the shifted instance leaves [a, b] "
              f"(needs T >= {LB_T_BOUNDS_OK}); bounds checks skipped",
              file=sys.stderr)
    rows = []
    for name, mu in (("mu1", pair.mu1), ("mu2", pair.mu2)):
        for seed in seeds:
            spec = InstanceSpec(n=3, m=3, T=args.T, a=LB_A, b=LB_B, mu_star=mu,
                                noise_sigma=args.noise_sigma, seed=seed,
                                constraint_kind="envy_freeness")
            try:
                result = run(spec, policy_kind=args.policy,
                             knobs={"etc_scale": args.etc_scale,
                                    "warmup_scale": args.warmup_scale},
                             record_full_allocations=True,
                             check_spec=args.T >= LB_T_BOUNDS_OK)
            except (RunContractError, OptError) as err:
                print(f"run error: {err}", file=sys.stderr)
                return 2
            rows.append((name, str(seed), _fmt(lb_statistic(result)),
                         _fmt(result.final_regret())))

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "lowerbound.csv")
    with open(path, "w") as fh:
        fh.write(LB_CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairbandit",
        description="Online fair division experiments with unknown mean values",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured simulation")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over seeds")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--seeds", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a property suite")
    p_verify.add_argument("--suite", required=True)
    p_verify.set_defaults(func=cmd_verify)

    p_lb = sub.add_parser("lowerbound", help="run the hard EF instance pair")
    p_lb.add_argument("--T", type=int, default=4096)
    p_lb.add_argument("--seeds", default="0")
    p_lb.add_argument("--policy", default="uar")
    p_lb.add_argument("--noise-sigma", type=float, default=0.1)
    p_lb.add_argument("--etc-scale", type=float, default=1.0)
    p_lb.add_argument("--warmup-scale", type=float, default=1.0)
    p_lb.add_argument("--out", default=".")
    p_lb.set_defaults(func=cmd_lowerbound)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
