"""Command-line front end: ``qrabi {fock,gfunc,jc,quasi,verify,sweep}``.

Every subcommand writes spectrum records as CSV (header
``g,parity,level,energy,method``) to ``--out`` or stdout.  Options can
also come from a JSON file given by ``--config``; flags on the command
line win.  Exit codes: 0 success, 1 usage, 2 numerical failure,
3 method not applicable, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace

from . import fock, gfunc, jc, quasi
from .errors import ConditionError, MethodNotApplicable, NumericalFailure, QRabiError
from .model import ModelParams, Parity, SpectrumRecord, normalize

log = logging.getLogger("qrabi")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_NOT_APPLICABLE, EXIT_IO = 0, 1, 2, 3, 4
SUBCOMMANDS = ("fock", "gfunc", "jc", "quasi", "verify", "sweep")
SWEEP_METHODS = ("fock", "gfunc", "jc")
HEADER = ("g", "parity", "level", "energy", "method")
MATCH_TOL = 1e-6

DEFAULTS = {
    "omega": 1.0,
    "ratio": "1:1",
    "gmin": 0.0,
    "gmax": 3.0,
    "steps": 30,
    "nmax": fock.DEFAULT_NMAX,
    "parity": "both",
    "levels": None,
    "out": None,
    "emin": -1.0,
    "emax": 4.0,
    "beta1": None,
    "beta2": None,
    "n": 2,
    "cmax": jc.DEFAULT_CMAX,
    "methods": "fock",
    "emit_plot_script": False,
}
REQUIRED = ("delta1", "delta2")
CONFIG_KEYS = frozenset(DEFAULTS) | frozenset(REQUIRED)


class UsageError(QRabiError):
    """Bad command line or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class GridSpec:
    gmin: float
    gmax: float
    steps: int
    ratio: tuple[float, float]

    def points(self) -> list[float]:
        """gmin + i (gmax - gmin)/steps for i = 1..steps; gmin itself is excluded."""
        width = (self.gmax - self.gmin) / self.steps
        return [self.gmin + i * width for i in range(1, self.steps + 1)]


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: dict
    grid: GridSpec
    nmax: int
    levels: int | None
    parity: str
    e_range: tuple[float, float]
    betas: tuple[float, float] | None
    n: int
    cmax: int
    methods: tuple[str, ...]
    out: str | None
    emit_plot_script: bool


def _parse_ratio(value) -> tuple[float, float]:
    if isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = str(value).split(":")
    if len(parts) != 2:
        raise UsageError(f"ratio must look like a:b, got {value!r}")
    try:
        a, b = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"ratio must look like a:b, got {value!r}") from exc
    if a < 0 or b < 0 or a + b == 0 or not (math.isfinite(a) and math.isfinite(b)):
        raise UsageError(f"ratio components must be non-negative and not both zero, got {value!r}")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qrabi", description="Spectra of the two-qubit Rabi and Jaynes-Cummings models.")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, argument_default=S)
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--delta1", type=float)
        p.add_argument("--delta2", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--ratio", help="coupling ratio g1:g2, e.g. 3:1")
        p.add_argument("--gmin", type=float)
        p.add_argument("--gmax", type=float)
        p.add_argument("--steps", type=int)
        p.add_argument("--nmax", type=int)
        p.add_argument("--parity", choices=("even", "odd", "both"))
        p.add_argument("--levels", type=int)
        p.add_argument("--out")
        p.add_argument("--emit-plot-script", dest="emit_plot_script", action="store_true")
        if name in ("gfunc", "verify", "sweep"):
            p.add_argument("--emin", type=float)
            p.add_argument("--emax", type=float)
            p.add_argument("--beta1", type=float)
            p.add_argument("--beta2", type=float)
        if name == "quasi":
            p.add_argument("--n", type=int)
        if name in ("jc", "sweep"):
            p.add_argument("--cmax", type=int)
        if name == "sweep":
            p.add_argument("--methods", help="comma-separated subset of fock,gfunc,jc")
    return parser


def _load_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return data


def _number(values: dict, key: str, kind=float):
    value = values[key]
    if value is None:
        return None
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{key} must be a number, got {value!r}") from exc
    if kind is int:
        if not math.isfinite(out) or out != int(out):
            raise UsageError(f"{key} must be an integer, got {value!r}")
        return int(out)
    if not math.isfinite(out):
        raise UsageError(f"{key} must be finite, got {value!r}")
    return out


def parse_config(argv, config_file: str | None = None) -> RunConfig:
    """Merge defaults, an optional JSON file and flags (in increasing priority)."""
    args = vars(build_parser().parse_args(list(argv)))
    subcommand = args.pop("subcommand")
    args.pop("verbose", None)
    path = args.pop("config", None) or config_file
    values = dict(DEFAULTS)
    if path:
        values.update(_load_file(path))
    values.update(args)

    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))

    grid = GridSpec(_number(values, "gmin"), _number(values, "gmax"), _number(values, "steps", int),
                    _parse_ratio(values["ratio"]))
    if grid.steps < 1:
        raise UsageError(f"steps must be at least 1, got {grid.steps}")
    if grid.gmin < 0:
        raise UsageError(f"gmin must be non-negative, got {grid.gmin}")
    if grid.gmax <= grid.gmin:
        raise UsageError(f"gmax must exceed gmin, got {grid.gmin}..{grid.gmax}")

    parity = str(values["parity"])
    if parity not in ("even", "odd", "both"):
        raise UsageError(f"parity must be even, odd or both, got {parity!r}")
    methods = tuple(m.strip() for m in str(values["methods"]).split(",") if m.strip())
    bad = [m for m in methods if m not in SWEEP_METHODS]
    if bad or not methods:
        raise UsageError(f"methods must be a non-empty subset of {','.join(SWEEP_METHODS)}, got {values['methods']!r}")

    b1, b2 = _number(values, "beta1"), _number(values, "beta2")
    if (b1 is None) != (b2 is None):
        raise UsageError("--beta1 and --beta2 must be given together")
    levels = _number(values, "levels", int)
    if levels is not None and levels < 1:
        raise UsageError(f"levels must be positive, got {levels}")
    nmax = _number(values, "nmax", int)
    if nmax < 1:
        raise UsageError(f"nmax must be positive, got {nmax}")
    n = _number(values, "n", int)
    if n < 0:
        raise UsageError(f"n must be non-negative, got {n}")
    cmax = _number(values, "cmax", int)
    if cmax < 0:
        raise UsageError(f"cmax must be non-negative, got {cmax}")
    emin, emax = _number(values, "emin"), _number(values, "emax")

    params = {"omega": _number(values, "omega"), "delta1": _number(values, "delta1"),
              "delta2": _number(values, "delta2")}
    if not params["omega"] > 0:
        raise UsageError(f"omega must be positive, got {params['omega']}")
    if values["emit_plot_script"] and not values["out"]:
        raise UsageError("--emit-plot-script needs --out")

    return RunConfig(subcommand, params, grid, nmax, levels, parity, (emin, emax),
                     None if b1 is None else (b1, b2), n, cmax, methods, values["out"],
                     bool(values["emit_plot_script"]))


# ---------------------------------------------------------------- running


def _template(config: RunConfig) -> tuple[ModelParams, float]:
    """Normalized template (couplings in the configured ratio, g = 1) and omega."""
    omega = config.params["omega"]
    p = normalize({"omega": omega, "delta1": config.params["delta1"], "delta2": config.params["delta2"]})
    return p.with_total_coupling(1.0, config.grid.ratio), omega


def _grid(config: RunConfig, omega: float) -> list[float]:
    return [g / omega for g in config.grid.points()]


def _limit(records: list[SpectrumRecord], levels: int | None) -> list[SpectrumRecord]:
    return records if levels is None else [r for r in records if r.level < levels]


def _select_parity(records, parity: str):
    if parity == "both":
        return records
    want = Parity.parse(parity)
    return [r for r in records if r.parity is want]


def _run_fock(config, template, grid):
    levels = config.levels or 10
    trunc = fock.TruncationSpec(n_max=max(config.nmax, levels), k=levels)
    return fock.spectrum_sweep(template, grid, trunc, config.parity)


def _run_gfunc(config, template, grid):
    records = gfunc.gfunc_sweep(template, grid, config.e_range, config.parity, betas=config.betas)
    return _limit(records, config.levels)


def _run_jc(config, template, grid):
    records = jc.jc_sweep(template, grid, config.cmax)
    return _limit(_select_parity(records, config.parity), config.levels)


def _run_verify(config, template, grid, report):
    lo, hi = config.e_range
    parities = [Parity.EVEN, Parity.ODD] if config.parity == "both" else [Parity.parse(config.parity)]
    records, failures = [], 0
    for g in grid:
        params = template.with_total_coupling(g)
        for parity in parities:
            ref = [float(e) for e in fock.levels_up_to(params, hi, parity, config.nmax) if e >= lo]
            roots = gfunc.find_roots(params, parity, (lo, hi), config.betas)
            records += [SpectrumRecord(g, parity, i, e, "fock") for i, e in enumerate(ref)]
            records += [SpectrumRecord(g, parity, i, e, "gfunc") for i, e in enumerate(roots)]
            ok = len(ref) == len(roots)
            worst = max((abs(a - b) for a, b in zip(ref, roots)), default=0.0) if ok else math.inf
            ok = ok and worst < MATCH_TOL
            failures += not ok
            report(f"g={g:.6g} {parity.label}: {len(ref)} fock, {len(roots)} gfunc, "
                   f"max |dE| = {worst:.3e} {'ok' if ok else 'MISMATCH'}")
    if failures:
        raise NumericalFailure(f"{failures} (g, parity) point(s) disagree between fock and gfunc")
    return records


def _run_quasi(config, template, report):
    N = config.n
    parity = config.parity if config.parity != "both" else ("odd" if N % 2 == 0 else "even")
    d1, d2 = template.delta1, template.delta2
    g_max = config.grid.gmax / config.params["omega"]
    solutions = quasi.solve_quasiexact_couplings(N, parity, d1, d2, g_max)
    report(f"N={N} {Parity.parse(parity).label} parity: {len(solutions)} solution(s) in (0, {g_max:.6g}]")
    detailed = len(solutions) <= 10
    if not detailed:
        report("closure holds on the whole scan grid (coupling-independent condition)")
    for sol in solutions:
        report(f"g* = {sol.g_star:.12g}  E = {sol.E:.12g}  residual = {sol.residual:.2e}")
        if detailed:
            for state, c in zip(sol.basis.states, sol.coefficients):
                report(f"  {state}  {c:+.12f}")
    return [SpectrumRecord(sol.g_star, sol.parity, 0, sol.E, "quasi") for sol in solutions]


def _run_sweep(config, template, grid):
    runners = {"fock": _run_fock, "gfunc": _run_gfunc, "jc": _run_jc}
    return [r for m in config.methods for r in runners[m](config, template, grid)]


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in records:
        writer.writerow((format(r.g, ".15g"), r.parity_label, r.level, format(r.energy, ".15g"), r.method))
    return buf.getvalue()


def write_atomic(path: str, text: str):
    """Write via a temporary file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".qrabi-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def plot_description(config: RunConfig, records) -> dict:
    """Plotting-tool-agnostic description of the CSV: one line series per (method, parity, level)."""
    series = sorted({(r.method, r.parity_label, r.level) for r in records})
    return {
        "data": os.path.basename(config.out),
        "format": "csv",
        "x": {"column": "g", "label": "g (units of omega)"},
        "y": {"column": "energy", "label": "E (units of omega)"},
        "series": [
            {"filter": {"method": m, "parity": p, "level": lv}, "style": "line" if m != "quasi" else "marker",
             "group": f"{m}/{p}"}
            for m, p, lv in series
        ],
        "parameters": {"subcommand": config.subcommand, **config.params, "ratio": list(config.grid.ratio)},
    }


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a parsed configuration; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    def report(line):
        print(line, file=stderr if config.subcommand != "quasi" else stdout)

    try:
        template, omega = _template(config)
        grid = _grid(config, omega)
        scaled = _in_units_of_omega(config, omega)
        cmd = config.subcommand
        if cmd == "fock":
            records = _run_fock(scaled, template, grid)
        elif cmd == "gfunc":
            records = _run_gfunc(scaled, template, grid)
        elif cmd == "jc":
            records = _run_jc(scaled, template, grid)
        elif cmd == "quasi":
            records = _run_quasi(config, template, report)
        elif cmd == "verify":
            records = _run_verify(scaled, template, grid, report)
        else:
            records = _run_sweep(scaled, template, grid)
    except MethodNotApplicable as exc:
        print(f"qrabi: method not applicable: {exc}", file=stderr)
        return EXIT_NOT_APPLICABLE
    except NumericalFailure as exc:
        print(f"qrabi: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except (ConditionError, UsageError) as exc:
        print(f"qrabi: {exc}", file=stderr)
        return EXIT_USAGE

    text = records_to_csv(records)
    if config.out is None:
        if config.subcommand != "quasi":
            stdout.write(text)
        return EXIT_OK
    try:
        write_atomic(config.out, text)
        if config.emit_plot_script:
            write_atomic(config.out + ".plot.json", json.dumps(plot_description(config, records), indent=2) + "\n")
    except OSError as exc:
        print(f"qrabi: cannot write {config.out}: {exc}", file=stderr)
        return EXIT_IO
    return EXIT_OK


def _in_units_of_omega(config: RunConfig, omega: float) -> RunConfig:
    """Config with the energy window and matching points expressed in units of omega."""
    if omega == 1.0:
        return config
    lo, hi = config.e_range
    betas = None if config.betas is None else (config.betas[0] / omega, config.betas[1] / omega)
    return replace(config, e_range=(lo / omega, hi / omega), betas=betas)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.DEBUG if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(argv)
    except (UsageError, ConditionError) as exc:
        print(f"qrabi: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
