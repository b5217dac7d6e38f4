"""Command-line driver: config file + flag overrides in, CSV/JSON out.

Usage::

    liqgames COMMAND [--config FILE] [--section.key=value ...]

with COMMAND one of ``riccati``, ``solve-mfg``, ``solve-nplayer``,
``baseline``, ``compare``, ``converge``, ``paths``.  The config file is INI
style with sections [coefficients], [distribution], [solver], [output]; every
key can be overridden on the command line as ``--section.key=value`` (flags
win over the file).  A few shorthands are accepted: ``--M``, ``--N``,
``--Ns``, ``--delta``, ``--out``.

Exit codes: 0 success, 1 config error, 2 assumption failure, 3 numerical
failure.  Output files use 17 significant digits so identical configs produce
identical bytes.
"""

from __future__ import annotations

import configparser
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .equilibrium import (
    solve_mfg,
    solve_no_dropout_baseline,
    solve_nplayer,
)
from .errors import (
    AssumptionError,
    ConfigError,
    InvalidCoefficientsError,
    InvalidDistributionError,
    InvalidInputError,
    NumericalFailureError,
)
from .experiments import ScenarioSpec, convergence_study, quantile_positions
from .model import (
    make_constant_coefficients,
    make_empirical,
    make_exponential_sellers,
    make_two_sided,
    validate_assumptions,
)
from .riccati import solve_riccati
from .strategies import fixed_point_residual, player_path

COMMANDS = ("riccati", "solve-mfg", "solve-nplayer", "baseline", "compare",
            "converge", "paths")

DEFAULTS = {
    "coefficients": {"eta": "5.0", "kappa": "10.0", "lambda": "5.0", "T": "1.0"},
    "distribution": {
        "kind": "exponential",
        "mean": "1.5",
        "w_sell": "0.8",
        "mean_sell": "1.5",
        "w_buy": "0.2",
        "mean_buy": "1.0",
        "positions": "",
    },
    "solver": {
        "M": "2000",
        "delta": "0.0",
        "N": "",
        "Ns": "7,15,100",
        "tol": "1e-10",
        "residual_nodes": "400",
        "x_samples": "0.25,0.75,1.5,3.0",
    },
    "output": {"dir": "./out"},
}

ALIASES = {
    "M": ("solver", "M"),
    "N": ("solver", "N"),
    "Ns": ("solver", "Ns"),
    "delta": ("solver", "delta"),
    "tol": ("solver", "tol"),
    "out": ("output", "dir"),
    "T": ("coefficients", "T"),
}


@dataclass
class RunConfig:
    command: str
    values: dict  # nested {section: {key: str}} after defaults/file/flags

    def get(self, section, key):
        return self.values[section][key]

    def get_float(self, section, key):
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from exc

    def get_int(self, section, key):
        raw = self.get(section, key)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: not an integer: {raw!r}") from exc

    def get_floats(self, section, key):
        raw = self.get(section, key).strip()
        if not raw:
            return ()
        try:
            return tuple(float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: bad number list: {raw!r}") from exc

    def echo(self) -> dict:
        return {s: dict(kv) for s, kv in self.values.items()}


def parse_config(argv) -> RunConfig:
    """Resolve command, config file and flag overrides into a RunConfig."""
    if not argv:
        raise ConfigError(f"missing command; expected one of {', '.join(COMMANDS)}")
    command, *rest = argv
    if command in ("-h", "--help"):
        print(__doc__)
        raise SystemExit(0)
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")

    values = {s: dict(kv) for s, kv in DEFAULTS.items()}
    overrides = []
    config_path = None
    it = iter(rest)
    for tok in it:
        if tok == "--config":
            config_path = next(it, None)
            if config_path is None:
                raise ConfigError("--config needs a path")
        elif tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
        elif tok.startswith("--") and "=" in tok:
            overrides.append(tok[2:].split("=", 1))
        else:
            raise ConfigError(f"unrecognized argument {tok!r}")

    if config_path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(config_path)
        if not read:
            raise ConfigError(f"config file not found: {config_path}")
        for section in parser.sections():
            if section not in values:
                raise ConfigError(f"unknown config section [{section}]")
            for key, val in parser.items(section):
                key = _canonical_key(section, key)
                values[section][key] = val

    for key, val in overrides:
        if "." in key:
            section, name = key.split(".", 1)
            if section not in values:
                raise ConfigError(f"unknown section in flag --{key}")
            name = _canonical_key(section, name)
            values[section][name] = val
        elif key in ALIASES:
            section, name = ALIASES[key]
            values[section][name] = val
        else:
            raise ConfigError(f"unknown flag --{key}")
    return RunConfig(command=command, values=values)


def _canonical_key(section, key):
    # configparser lowercases; restore the case-sensitive names we document
    special = {"t": "T", "m": "M", "n": "N", "ns": "Ns"}
    key = special.get(key.lower(), key.lower())
    if key not in DEFAULTS[section]:
        raise ConfigError(f"unknown key {section}.{key}")
    return key


def _build_coeffs(cfg: RunConfig):
    try:
        return make_constant_coefficients(
            cfg.get_float("coefficients", "eta"),
            cfg.get_float("coefficients", "kappa"),
            cfg.get_float("coefficients", "lambda"),
            cfg.get_float("coefficients", "T"),
            cfg.get_int("solver", "M"),
        )
    except InvalidCoefficientsError as exc:
        raise ConfigError(f"coefficients: {exc}") from exc


def _build_dist(cfg: RunConfig):
    kind = cfg.get("distribution", "kind")
    try:
        if kind == "exponential":
            return make_exponential_sellers(cfg.get_float("distribution", "mean"))
        if kind == "two_sided":
            return make_two_sided(
                cfg.get_float("distribution", "w_sell"),
                cfg.get_float("distribution", "mean_sell"),
                cfg.get_float("distribution", "w_buy"),
                cfg.get_float("distribution", "mean_buy"),
            )
        if kind == "empirical":
            positions = cfg.get_floats("distribution", "positions")
            if not positions:
                raise ConfigError("distribution.positions must be a non-empty list")
            return make_empirical(positions)
    except InvalidDistributionError as exc:
        raise ConfigError(f"distribution: {exc}") from exc
    raise ConfigError(f"unsupported distribution kind {kind!r}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isinf(v):
        return ""
    return f"{v:.17g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float)) else str(v)
                              for v in row) + "\n")


def _write_summary(path: Path, payload: dict, cfg: RunConfig):
    payload = dict(payload)
    payload["config"] = cfg.echo()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _write_mu(path: Path, eq):
    _write_csv(path, ["t", "mu", "f"], zip(eq.t, eq.mu, eq.f))


def _write_paths(path: Path, paths: dict):
    with open(path, "w") as fh:
        fh.write("player_id,t,X,Y,xi\n")
        for pid, p in paths.items():
            fh.write(f"# player {pid}: x={_fmt(p.x)} tau={_fmt(p.tau)} cost={_fmt(p.cost)}\n")
            for k in range(p.t.size):
                fh.write(f"{pid},{_fmt(p.t[k])},{_fmt(p.X[k])},{_fmt(p.Y[k])},{_fmt(p.xi[k])}\n")


def _eq_summary(eq) -> dict:
    return {
        "delta": eq.delta,
        "x_hat": eq.x_hat,
        "mu_T": eq.mu_T,
        "mu_0": float(eq.mu[0]),
        "alpha_T": eq.bundle.alpha_T,
        "K1": eq.K1,
        "K2": eq.K2,
        "residual": eq.residual,
        "psi_value": eq.psi_value,
    }


def _print_eq(eq):
    print(f"x_hat    = {eq.x_hat:.12g}")
    print(f"mu_T     = {eq.mu_T:.12g}")
    print(f"alpha_T  = {eq.bundle.alpha_T:.12g}")
    print(f"residual = {eq.residual:.3g}" if eq.residual is not None else "residual = n/a")


def run(cfg: RunConfig) -> int:
    """Execute the configured command; returns the process exit status."""
    out_dir = Path(cfg.get("output", "dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    coeffs = _build_coeffs(cfg)
    command = cfg.command
    n_res = cfg.get_int("solver", "residual_nodes")

    if command == "riccati":
        delta = cfg.get_float("solver", "delta")
        report = validate_assumptions(coeffs, delta)
        if not report.ok_mfg:
            raise AssumptionError(report.summary())
        b = solve_riccati(coeffs, delta)
        _write_csv(out_dir / "bundle.csv",
                   ["t", "y", "A", "alpha", "D", "Efac", "h", "h_dot"],
                   zip(b.grid, b.y, b.A, b.alpha, b.D, b.Efac, b.h, b.h_dot))
        _write_summary(out_dir / "summary.json",
                       {"delta": b.delta, "A0": b.A0, "alpha_T": b.alpha_T,
                        "h_T": b.h_T}, cfg)
        print(f"A0       = {b.A0:.12g}")
        print(f"alpha_T  = {b.alpha_T:.12g}")
        return 0

    dist = _build_dist(cfg)

    if command in ("solve-mfg", "paths", "baseline", "compare"):
        report = validate_assumptions(coeffs, 0.0)
        if not report.ok_mfg:
            raise AssumptionError(report.summary())

    if command in ("solve-mfg", "paths"):
        eq = solve_mfg(coeffs, dist, bisect_tol=cfg.get_float("solver", "tol"))
        fixed_point_residual(eq, n_x=n_res)
        xs = cfg.get_floats("solver", "x_samples")
        paths = {i: player_path(x, eq) for i, x in enumerate(xs)}
        if command == "solve-mfg":
            _write_mu(out_dir / "mu.csv", eq)
            _write_summary(out_dir / "summary.json", _eq_summary(eq), cfg)
        _write_paths(out_dir / "paths.csv", paths)
        _print_eq(eq)
        return 0

    if command == "baseline":
        eq = solve_no_dropout_baseline(coeffs, dist,
                                       bisect_tol=cfg.get_float("solver", "tol"))
        fixed_point_residual(eq, n_x=n_res)
        _write_mu(out_dir / "mu.csv", eq)
        _write_summary(out_dir / "summary.json", _eq_summary(eq), cfg)
        _print_eq(eq)
        return 0

    if command == "compare":
        eq = solve_mfg(coeffs, dist, bisect_tol=cfg.get_float("solver", "tol"))
        base = solve_no_dropout_baseline(coeffs, dist,
                                         bisect_tol=cfg.get_float("solver", "tol"))
        fixed_point_residual(eq, n_x=n_res)
        fixed_point_residual(base, n_x=n_res)
        _write_mu(out_dir / "mu_dropout.csv", eq)
        _write_mu(out_dir / "mu_baseline.csv", base)
        _write_summary(out_dir / "summary.json",
                       {"dropout": _eq_summary(eq), "baseline": _eq_summary(base)},
                       cfg)
        _print_eq(eq)
        return 0

    if command == "solve-nplayer":
        if dist.kind == "empirical":
            positions = dist.positions
        else:
            n_raw = cfg.get("solver", "N").strip()
            if not n_raw:
                raise ConfigError("solve-nplayer needs solver.N or empirical positions")
            positions = quantile_positions(dist, cfg.get_int("solver", "N"))
        report = validate_assumptions(coeffs, 1.0 / len(positions))
        if not report.ok_nplayer:
            raise AssumptionError(report.summary())
        eq = solve_nplayer(coeffs, positions,
                           bisect_tol=cfg.get_float("solver", "tol"))
        fixed_point_residual(eq)
        paths = {i: player_path(x, eq) for i, x in enumerate(positions)}
        _write_mu(out_dir / "mu.csv", eq)
        _write_paths(out_dir / "paths.csv", paths)
        summary = _eq_summary(eq)
        summary["N"] = len(positions)
        summary["positions"] = [float(x) for x in positions]
        _write_summary(out_dir / "summary.json", summary, cfg)
        _print_eq(eq)
        return 0

    if command == "converge":
        Ns = [int(v) for v in cfg.get_floats("solver", "Ns")]
        if not Ns:
            raise ConfigError("converge needs solver.Ns")
        for n in Ns:
            report = validate_assumptions(coeffs, 1.0 / n)
            if not report.ok_nplayer:
                raise AssumptionError(f"N={n}: {report.summary()}")
        spec = ScenarioSpec(name="custom", coeffs=coeffs, dist=dist,
                            M=coeffs.M, x_samples=())
        rows = convergence_study(spec, Ns)
        _write_csv(out_dir / "convergence.csv",
                   ["N", "sup_error", "x_hat_N", "runtime"],
                   [(r.N, r.sup_error, r.x_hat_N, r.runtime) for r in rows])
        _write_summary(out_dir / "summary.json",
                       {"Ns": Ns, "sup_errors": [r.sup_error for r in rows]}, cfg)
        for r in rows:
            print(f"N={r.N:5d}  sup_error={r.sup_error:.6g}  x_hat={r.x_hat_N:.9g}")
        return 0

    raise ConfigError(f"unhandled command {command!r}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        code = run(cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except AssumptionError as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return 2
    except (InvalidCoefficientsError, InvalidDistributionError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
