"""Command-line front end: ``modeqfi run --config FILE`` and ``modeqfi list``.

Config files hold one ``key = value`` per line with ``#`` comments. Reserved
keys are ``scenario``, ``format``, ``output``, ``oracle``, ``seed`` and the
dotted ``sweep.param``, ``sweep.lo``, ``sweep.hi``, ``sweep.n``; every other
key is passed to the scenario as a parameter.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericalError, ValidationError
from .scenarios import SCENARIOS, build_scenario, evaluate_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

FORMATS = ("json", "csv")
CSV_FIELDS = ("scenario", "param_name", "param_value", "classical", "unitary", "vacuum",
              "total", "closed_form", "oracle", "oracle_dev")
RESERVED = {"scenario", "format", "output", "oracle", "seed"}
SWEEP_KEYS = {"param", "lo", "hi", "n"}
TOTAL_TOL = 1e-12


@dataclass
class Sweep:
    param: str
    lo: float
    hi: float
    n: int

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.lo, self.hi, self.n)]


@dataclass
class RunConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    sweep: Sweep | None = None
    output: str | None = None
    format: str = "json"
    oracle: bool = False
    seed: int | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}; see `modeqfi list`")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.sweep is not None:
            if self.sweep.n < 2:
                raise ValidationError(f"sweep.n must be at least 2, got {self.sweep.n}")
            if not self.sweep.lo < self.sweep.hi:
                raise ValidationError("sweep.lo must be smaller than sweep.hi")


def parse_value(text: str):
    """Literal for a config value: bool, int, float or bare string."""
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_config(text: str) -> RunConfig:
    raw: dict = {}
    sweep: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValidationError(f"line {lineno}: expected `key = value`")
        if key.startswith("sweep."):
            sub = key[len("sweep."):]
            if sub not in SWEEP_KEYS:
                raise ValidationError(f"line {lineno}: unknown sweep key {key!r}")
            sweep[sub] = parse_value(value)
        else:
            raw[key] = parse_value(value)
    if "scenario" not in raw:
        raise ValidationError("config lacks a `scenario` entry")
    sweep_obj = None
    if sweep:
        missing = SWEEP_KEYS - sweep.keys()
        if missing:
            raise ValidationError(f"incomplete sweep, missing {sorted(missing)}")
        n = sweep["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValidationError(f"sweep.n must be an integer, got {n!r}")
        try:
            sweep_obj = Sweep(str(sweep["param"]), float(sweep["lo"]), float(sweep["hi"]), n)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad sweep bounds: {exc}") from None
    seed = raw.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    oracle = raw.get("oracle", False)
    if not isinstance(oracle, bool):
        raise ValidationError(f"oracle must be true or false, got {oracle!r}")
    return RunConfig(
        scenario=str(raw["scenario"]),
        params={k: v for k, v in raw.items() if k not in RESERVED},
        sweep=sweep_obj,
        output=None if raw.get("output") is None else str(raw["output"]),
        format=str(raw.get("format", "json")),
        oracle=oracle,
        seed=seed,
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _evaluate(config: RunConfig, params: dict, sweep_value) -> dict:
    scenario = build_scenario(config.scenario, params)
    report = evaluate_scenario(scenario, oracle=config.oracle)
    total = report.classical_term + report.unitary_term + report.vacuum_term
    if abs(total - report.total) > TOTAL_TOL * max(1.0, abs(total)):
        raise NumericalError("report total differs from the sum of its terms")
    oracle_dev = None
    if report.oracle_value is not None:
        oracle_dev = abs(report.oracle_value - report.total)
    return {
        "scenario": config.scenario,
        "param_name": config.sweep.param if config.sweep else None,
        "param_value": sweep_value,
        "classical": report.classical_term,
        "unitary": report.unitary_term,
        "vacuum": report.vacuum_term,
        "total": report.total,
        "closed_form": report.meta.get("closed_form"),
        "oracle": report.oracle_value,
        "oracle_dev": oracle_dev,
        "params": {k: params[k] for k in sorted(params)},
    }


def evaluate_config(config: RunConfig, max_workers: int | None = None) -> list[dict]:
    """One record per evaluation, in sweep order."""
    if config.sweep is None:
        jobs = [(dict(config.params), None)]
    else:
        jobs = [({**config.params, config.sweep.param: v}, v) for v in config.sweep.values()]
    if len(jobs) == 1:
        return [_evaluate(config, *jobs[0])]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_evaluate, config, params, v) for params, v in jobs]
        return [f.result() for f in futures]


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(records: list[dict], fmt: str) -> str:
    for r in records:
        terms = r["classical"] + r["unitary"] + r["vacuum"]
        if abs(terms - r["total"]) > TOTAL_TOL * max(1.0, abs(terms)):
            raise NumericalError(f"record total {r['total']!r} != sum of terms {terms!r}")
    if fmt == "json":
        for r in records:
            for key, value in r.items():
                if isinstance(value, float) and not math.isfinite(value):
                    raise NumericalError(f"non-finite {key} in output")
        return json.dumps(records, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([_csv_cell(r[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def run(config: RunConfig) -> int:
    """Evaluate ``config`` and write the report; returns the process exit code."""
    try:
        records = evaluate_config(config)
        text = render(records, config.format)
    except ValidationError as exc:
        print(f"error: {config.scenario}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {config.scenario}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if config.output:
        try:
            Path(config.output).write_text(text)
        except OSError as exc:
            print(f"error: cannot write {config.output}: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
    else:
        sys.stdout.write(text)
    return EXIT_OK


def list_scenarios() -> str:
    lines = []
    for name in sorted(SCENARIOS):
        spec = SCENARIOS[name]
        params = ", ".join(f"{k}={v}" for k, v in spec.params.items())
        lines.append(f"{name}\n  params: {params}\n  anchor: {spec.anchor}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modeqfi", description="QFI of mode parameters.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="evaluate a scenario or sweep from a config file")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--output")
    run_p.add_argument("--format", choices=FORMATS)
    run_p.add_argument("--oracle", action="store_true", default=None)
    sub.add_parser("list", help="list available scenarios")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_scenarios())
        return EXIT_OK
    try:
        config = load_config(args.config)
        if args.output is not None:
            config.output = args.output
        if args.format is not None:
            config.format = args.format
        if args.oracle:
            config.oracle = True
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
