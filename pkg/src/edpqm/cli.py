"""``edpqm`` command-line front end.

Every subcommand prints a header plus one record per row (CSV) or a JSON
array of the same records.  Diagnostics go to stderr.  Exit codes: 0 success,
2 configuration or parse error, 3 numeric or verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import tables as tables_mod
from .equivalence import LinearEModel, check_kappa_positive, toy_v_hat, verify_equivalence
from .generalsolver import (
    GeneralPotential,
    SolverError,
    independence_check,
    scan_fixed_points,
    toy_potential,
)
from .observables import (
    NoCriticalOrder,
    closure_sum,
    critical_moment_order,
    dipole_sum_rule,
    moment,
    moment_closed_form,
)
from .potdsl import DomainError, ParseError
from .spectra import (
    ComplexEigenvalue,
    EDependence,
    Kind,
    NonPositiveNorm,
    OscillatorModel,
    SpectrumError,
    solve,
    spectrum_scan,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

MODES = ("spectrum", "tables", "solve", "equivalence", "moments", "sumrule", "closure")

# toy families expressed as g(E) for the general solver
_TOY_G = {"linear": "E", "sqrt": "sqrt(E)", "quadratic": "E^2"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "spectrum"
    family: str = "linear"
    gamma_list: list = field(default_factory=lambda: [0.1])
    n_max: int = 4
    table: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    scan: tuple = (0.01, 10.0)
    grid: int = 4001
    domain: Optional[float] = None
    output: str = "csv"
    out_path: Optional[str] = None
    potential: Optional[dict] = None
    a_coeff: float = 0.5
    k_coeff: float = 0.05
    power: int = 1
    dx: float = 1e-3

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.output not in ("csv", "json"):
            raise ConfigError(f"output must be csv or json, got {self.output!r}")
        if not isinstance(self.n_max, int) or isinstance(self.n_max, bool) or self.n_max < 0:
            raise ConfigError("n_max must be a non-negative integer")
        try:
            self.gamma_list = [float(g) for g in self.gamma_list]
            self.scan = tuple(float(s) for s in self.scan)
            self.table = [int(t) for t in self.table]
            self.a_coeff = float(self.a_coeff)
            self.k_coeff = float(self.k_coeff)
            self.dx = float(self.dx)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not self.gamma_list or not all(math.isfinite(g) for g in self.gamma_list):
            raise ConfigError("gamma_list must be a non-empty list of finite numbers")
        if len(self.scan) != 2 or not self.scan[1] > self.scan[0]:
            raise ConfigError(f"scan must be (lo, hi) with hi > lo, got {self.scan}")
        if any(t not in tables_mod.COLUMNS for t in self.table):
            raise ConfigError(f"tables must be in 1..5, got {self.table}")
        if not isinstance(self.grid, int) or self.grid < 1000:
            raise ConfigError("grid must be an integer >= 1000")
        if self.domain is not None and not float(self.domain) > 0:
            raise ConfigError("domain must be positive")
        if not isinstance(self.power, int) or self.power < 1:
            raise ConfigError("power must be a positive integer")
        if self.potential is not None:
            if not isinstance(self.potential, dict) or set(self.potential) != {"v0", "v1", "g"}:
                raise ConfigError("potential must be an object with keys v0, v1, g")
        if self.mode == "equivalence" and not (self.a_coeff > 0 and self.k_coeff > 0):
            raise ConfigError("A and K must be positive")
        return self


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _scan(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")


def _tables(text: str) -> list[int]:
    if text.strip().lower() == "all":
        return list(tables_mod.COLUMNS)
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected table ids or 'all', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file with RunConfig keys")
    common.add_argument("--family", help="linear, sqrt, quadratic or an expression in E")
    common.add_argument("--gamma", dest="gamma_list", type=_float_list, help="comma list, e.g. 0,0.1,-0.1")
    common.add_argument("--nmax", dest="n_max", type=int)
    common.add_argument("--table", type=_tables, help="table id(s) 1..5 or 'all'")
    common.add_argument("--format", dest="output", choices=("csv", "json"))
    common.add_argument("--out", dest="out_path")
    common.add_argument("--scan", type=_scan, help="energy window lo:hi")
    common.add_argument("--grid", type=int, help="Numerov grid points")
    common.add_argument("--domain", type=float, help="half-width L of the solver box")
    common.add_argument("--v0", help="E-independent part of the potential (solve)")
    common.add_argument("--v1", help="x-profile multiplying g(E) (solve)")
    common.add_argument("--g", help="energy factor g(E) (solve)")
    common.add_argument("--A", dest="a_coeff", type=float, help="V0 = A x^2 (equivalence)")
    common.add_argument("--K", dest="k_coeff", type=float, help="V = -K x^2 (equivalence)")
    common.add_argument("--power", type=int, help="operator x^power (closure)")
    common.add_argument("--dx", type=float, help="grid spacing (equivalence)")

    parser = argparse.ArgumentParser(
        prog="edpqm", description="Energy-dependent potentials: spectra, diagnostics and table reproduction."
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    helps = {
        "spectrum": "self-consistent levels E_n, lam_n, C_n^2",
        "tables": "recompute the reference tables against golden values",
        "solve": "fixed points E_n(z) = z for a general potential",
        "equivalence": "checks of the map onto ordinary quantum mechanics",
        "moments": "<x^2>, <x^4> and the critical moment order",
        "sumrule": "energy-weighted dipole sum rule",
        "closure": "modified closure sums of |<n|x^p|0>|^2",
    }
    for name in MODES:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    if "mode" in values and values["mode"] != args.mode:
        raise ConfigError(f"config mode {values['mode']!r} does not match subcommand {args.mode!r}")
    values["mode"] = args.mode
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None and name != "mode":
            values[name] = v
    pot = dict(values.get("potential") or {})
    for key in ("v0", "v1", "g"):
        if getattr(args, key) is not None:
            pot[key] = getattr(args, key)
    if pot:
        values["potential"] = pot
    if "table" in values and isinstance(values["table"], (int, str)):
        values["table"] = _tables(str(values["table"]))
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(records, indent=1) + "\n"
    if not records:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(records[0].keys())
    for r in records:
        writer.writerow(_fmt(v) for v in r.values())
    return buf.getvalue()


def _model(cfg: RunConfig, gamma: float) -> OscillatorModel:
    return OscillatorModel(gamma, EDependence.parse(cfg.family))


def _warn(msg: str) -> None:
    print(f"edpqm: {msg}", file=sys.stderr)


def cmd_spectrum(cfg: RunConfig) -> tuple[list[dict], int]:
    records, status = [], EXIT_OK
    for gamma in cfg.gamma_list:
        model = _model(cfg, gamma)
        try:
            report = spectrum_scan(model, cfg.n_max, cfg.scan, strict=False)
        except SpectrumError as exc:
            _warn(f"gamma={gamma}: {exc}")
            status = EXIT_NUMERIC
            continue
        for s in report.states:
            try:
                c2 = s.norm_sq
            except NonPositiveNorm as exc:
                _warn(f"gamma={gamma}: {exc}")
                c2, status = math.nan, EXIT_NUMERIC
            records.append({
                "family": model.dependence.label, "gamma": gamma, "n": s.n,
                "energy": s.energy, "lam": s.lam, "norm_sq": c2,
            })
        if report.complex_from is not None:
            _warn(f"gamma={gamma}: {ComplexEigenvalue(report.complex_from, gamma)}")
            status = EXIT_NUMERIC
    return records, status


def cmd_tables(cfg: RunConfig) -> tuple[list[dict], int]:
    records, status = [], EXIT_OK
    for tid in cfg.table:
        try:
            golden = tables_mod.load_golden(tid)
        except OSError as exc:
            raise ConfigError(f"golden table {tid}: {exc}") from None
        for cell in tables_mod.reproduce(tid, golden):
            records.append(cell.record())
            if not cell.passed:
                status = EXIT_NUMERIC
    n_fail = sum(r["status"] != "PASS" for r in records)
    if n_fail:
        _warn(f"{n_fail} of {len(records)} cells outside tolerance {tables_mod.TOLERANCE:g}")
    return records, status


def _solve_potential(cfg: RunConfig, gamma: Optional[float]) -> GeneralPotential:
    kwargs = {"domain_halfwidth": cfg.domain, "grid_points": cfg.grid}
    if cfg.potential is not None:
        p = cfg.potential
        return GeneralPotential.from_strings(p["v0"], p["v1"], p["g"], **kwargs)
    g = _TOY_G.get(cfg.family.strip().lower(), cfg.family)
    return toy_potential(gamma, g, **kwargs)


def cmd_solve(cfg: RunConfig) -> tuple[list[dict], int]:
    gammas = [None] if cfg.potential is not None else cfg.gamma_list
    records, status = [], EXIT_OK
    for gamma in gammas:
        pot = _solve_potential(cfg, gamma)
        for n in range(cfg.n_max + 1):
            try:
                result = scan_fixed_points(pot, n, cfg.scan)
            except SolverError as exc:
                _warn(f"level {n}: {exc}")
                status = EXIT_NUMERIC
                continue
            if not result.roots:
                _warn(f"level {n}: no fixed point in {cfg.scan} ({result.skipped_cells} cells skipped)")
                status = EXIT_NUMERIC
                continue
            gram = independence_check(result.roots)
            for r in result.roots:
                records.append({
                    "gamma": gamma, "n": n, "m": r.m, "z": r.z, "residual": r.residual,
                    "bracket_lo": r.bracket[0], "bracket_hi": r.bracket[1],
                    "roots": len(result.roots), "gram_min_sv": gram.smallest_singular_value,
                    "independent": gram.independent,
                })
    return records, status


def cmd_equivalence(cfg: RunConfig) -> tuple[list[dict], int]:
    model = LinearEModel(cfg.a_coeff, cfg.k_coeff)
    rows = verify_equivalence(model, cfg.n_max, cfg.dx)
    status = EXIT_OK
    records = []
    for r in rows:
        ok = (
            r.residual < 1e-6
            and r.gram_deviation < 1e-7
            and r.product_deviation < 1e-7
            and (r.toy_energy is None or abs(r.qm2_energy - r.toy_energy) < 1e-10)
        )
        if not ok:
            status = EXIT_NUMERIC
        records.append({
            "n": r.n, "qm2_energy": r.qm2_energy, "toy_energy": r.toy_energy,
            "residual": r.residual, "gram_deviation": r.gram_deviation,
            "product_deviation": r.product_deviation, "status": "PASS" if ok else "FAIL",
        })
    # the mirrored gamma > 0 toy model has a metric that turns negative
    gamma_pos = 2.0 * cfg.k_coeff
    diag = check_kappa_positive(toy_v_hat(gamma_pos))
    verdict = "PASS" if diag.passed else "FAIL"
    where = ", ".join(f"{b:.8g}" for b in diag.boundaries)
    _warn(f"kappa positivity for toy gamma=+{gamma_pos:g}: {verdict}"
          + (f" (kappa = 0 at x = {where})" if where else ""))
    return records, status


def cmd_moments(cfg: RunConfig) -> tuple[list[dict], int]:
    records, status = [], EXIT_OK
    for gamma in cfg.gamma_list:
        model = _model(cfg, gamma)
        for n in range(cfg.n_max + 1):
            try:
                s = solve(model, n, cfg.scan)
                x2, x4 = moment(s, 2), moment(s, 4)
            except NonPositiveNorm as exc:
                _warn(f"gamma={gamma}: {exc}")
                status = EXIT_NUMERIC
                continue
            except SpectrumError as exc:
                _warn(f"gamma={gamma}, n={n}: {exc}")
                status = EXIT_NUMERIC
                break
            try:
                k_crit = critical_moment_order(s)
            except NoCriticalOrder:
                k_crit = None
            records.append({
                "gamma": gamma, "n": n, "energy": s.energy, "x2": x2,
                "x2_closed_form": moment_closed_form(s), "x4": x4, "critical_order": k_crit,
            })
    return records, status


def cmd_sumrule(cfg: RunConfig) -> tuple[list[dict], int]:
    records, status = [], EXIT_OK
    for gamma in cfg.gamma_list:
        try:
            rep = dipole_sum_rule(_model(cfg, gamma), cfg.n_max)
        except SpectrumError as exc:
            _warn(f"gamma={gamma}: {exc}")
            status = EXIT_NUMERIC
            continue
        for n in range(cfg.n_max + 1):
            records.append({
                "gamma": gamma, "n_max": n, "partial_sum": rep.partial_sum(n), "exact": rep.exact,
            })
    return records, status


def cmd_closure(cfg: RunConfig) -> tuple[list[dict], int]:
    records, status = [], EXIT_OK
    for gamma in cfg.gamma_list:
        try:
            rep = closure_sum(0, cfg.power, cfg.n_max, _model(cfg, gamma))
        except SpectrumError as exc:
            _warn(f"gamma={gamma}: {exc}")
            status = EXIT_NUMERIC
            continue
        for n, c in enumerate(rep.contributions):
            records.append({
                "gamma": gamma, "n": n, "power": cfg.power, "contribution": c,
                "partial_sum": rep.partial_sum(n), "exact": rep.exact,
            })
    return records, status


COMMANDS = {
    "spectrum": cmd_spectrum,
    "tables": cmd_tables,
    "solve": cmd_solve,
    "equivalence": cmd_equivalence,
    "moments": cmd_moments,
    "sumrule": cmd_sumrule,
    "closure": cmd_closure,
}


def run(cfg: RunConfig) -> int:
    records, status = COMMANDS[cfg.mode](cfg)
    text = render(records, cfg.output)
    if cfg.out_path:
        with open(cfg.out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except (ConfigError, ParseError, DomainError, argparse.ArgumentTypeError) as exc:
        _warn(f"error: {exc}")
        return EXIT_CONFIG
    except ValueError as exc:
        # invalid model parameters (e.g. a potential that depends on the wrong variable)
        _warn(f"error: {exc}")
        return EXIT_CONFIG
    except (SpectrumError, SolverError, ArithmeticError) as exc:
        _warn(f"numeric failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
