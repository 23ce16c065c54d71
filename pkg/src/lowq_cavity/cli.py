"""Command-line front end.

Subcommands::

    sweep            reflection sweep with and without the atom (csv/json)
    entangle2        two-atom heralded entanglement
    entangle3        three-atom heralded entanglement
    transfer-photon  photon -> distant atom state transfer
    transfer-atom    atom -> atom state transfer
    montecarlo       success probability and time-to-success

Values are resolved as built-in defaults < ``--config FILE`` < flags. The
config file is flat ``key = value`` text using the flag names with
underscores (``omega_c = 0``, ``points = 601``); ``#`` starts a comment.

Exit status: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import efficiency, protocol
from .cavity_io import CavityParams, sweep_reflection

OUTPUT_DIR_ENV = "LOWQ_OUTPUT_DIR"

_S = 1 / math.sqrt(2)
N_CAVITIES = {
    "sweep": 1,
    "entangle2": 2,
    "entangle3": 3,
    "transfer-photon": 2,
    "transfer-atom": 2,
    "montecarlo": 0,
}


class UsageError(Exception):
    """Bad command line or config file; maps to exit status 2."""


@dataclass(frozen=True)
class _Field:
    kind: str  # float | floats | complex | int | str | bool
    default: object = None
    help: str = ""
    choices: tuple = ()


_CAVITY = ("omega_c", "omega_0", "kappa", "gamma", "g", "omega_p", "mode")

FIELDS = {
    "omega_c": _Field("floats", (0.0,), "cavity frequency(s), comma-separated per cavity"),
    "omega_0": _Field("floats", (0.0,), "atomic transition frequency(s)"),
    "kappa": _Field("floats", (1.0,), "cavity damping rate(s)"),
    "gamma": _Field("floats", (0.01,), "atomic decay rate(s)"),
    "g": _Field("floats", (0.5,), "atom-cavity coupling(s)"),
    "omega_p": _Field("float", None, "probe frequency (default omega_c - kappa/2)"),
    "mode": _Field("str", "ideal", "phase model", ("ideal", "exact")),
    "from": _Field("float", None, "lowest detuning (omega_p - omega_c)/kappa"),
    "to": _Field("float", None, "highest detuning"),
    "points": _Field("int", None, "number of grid points"),
    "alpha1": _Field("complex", _S),
    "beta1": _Field("complex", _S),
    "alpha2": _Field("complex", _S),
    "beta2": _Field("complex", _S),
    "alpha3": _Field("complex", _S),
    "beta3": _Field("complex", _S),
    "x": _Field("complex", None, "photon h amplitude"),
    "y": _Field("complex", None, "photon v amplitude"),
    "normalize": _Field("bool", False, "rescale input amplitude pairs to unit norm"),
    "shots": _Field("int", 0, "heralds to sample with the seeded random stream"),
    "decay": _Field("float", 0.02, "atomic decay failure fraction per atom"),
    "n_atoms": _Field("int", 2, "atoms in the loss budget"),
    "detector": _Field("float", 1e-4, "detector efficiency factor"),
    "optical_loss": _Field("float", 0.06, "fiber and mirror loss fraction"),
    "rate": _Field("float", 1e4, "single-photon rate (1/s)"),
    "trials": _Field("int", 1_000_000, "Monte Carlo trials"),
    "workers": _Field("int", 1, "threads for Monte Carlo partitions"),
    "seed": _Field("int", 0, "random seed"),
    "output": _Field("str", None, "report path, '-' for stdout"),
    "format": _Field("str", None, "report format", ("csv", "json")),
}

COMMAND_KEYS = {
    "sweep": _CAVITY[:5] + ("from", "to", "points"),
    "entangle2": _CAVITY + ("alpha1", "beta1", "alpha2", "beta2", "normalize", "shots", "seed"),
    "entangle3": _CAVITY + ("alpha1", "beta1", "alpha2", "beta2", "alpha3", "beta3", "normalize", "shots", "seed"),
    "transfer-photon": _CAVITY + ("x", "y", "normalize"),
    "transfer-atom": _CAVITY + ("alpha1", "beta1", "normalize"),
    "montecarlo": ("decay", "n_atoms", "detector", "optical_loss", "rate", "trials", "workers", "seed"),
}
REQUIRED = {
    "sweep": ("from", "to", "points"),
    "transfer-photon": ("x", "y"),
    "transfer-atom": ("alpha1", "beta1"),
}
COMMON_KEYS = ("output", "format")


def _number(key: str, text: str, kind: str):
    text = str(text).strip()
    try:
        if kind == "int":
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "complex":
            value = complex(text.replace("i", "j").replace(" ", ""))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError
            return value
        value = float(text)
    except ValueError:
        raise UsageError(f"malformed number for '{key}': {text!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"malformed number for '{key}': {text!r} is not finite")
    return value


def _convert(key: str, raw):
    entry = FIELDS[key]
    if entry.kind == "bool":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"malformed boolean for '{key}': {raw!r}")
    if entry.kind == "str":
        value = str(raw).strip()
        if entry.choices and value not in entry.choices:
            raise UsageError(f"invalid value for '{key}': {value!r} (choose from {', '.join(entry.choices)})")
        return value
    if entry.kind == "floats":
        return tuple(_number(key, part, "float") for part in str(raw).split(","))
    return _number(key, raw, entry.kind)


def read_config_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; unknown keys are rejected by name."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split(sep, 1))
        key = key.lower().replace("-", "_")
        if key not in FIELDS:
            raise UsageError(f"{path}:{lineno}: unknown config key '{key}'")
        values[key] = value
    return values


@dataclass(frozen=True)
class RunConfig:
    command: str
    omega_c: tuple[float, ...] = (0.0,)
    omega_0: tuple[float, ...] = (0.0,)
    kappa: tuple[float, ...] = (1.0,)
    gamma: tuple[float, ...] = (0.01,)
    g: tuple[float, ...] = (0.5,)
    omega_p: Optional[float] = None
    mode: str = "ideal"
    detuning_from: Optional[float] = None
    detuning_to: Optional[float] = None
    n_points: Optional[int] = None
    coefficients: tuple[complex, ...] = ()
    normalize: bool = False
    shots: int = 0
    budget: Optional[efficiency.LossBudget] = None
    n_trials: int = 1_000_000
    workers: int = 1
    seed: int = 0
    output: Optional[str] = None
    fmt: str = "json"
    cavities: tuple[CavityParams, ...] = field(default=(), repr=False)

    def phase_model(self) -> protocol.PhaseModel:
        if self.mode == "ideal":
            return protocol.PhaseModel.ideal()
        return protocol.PhaseModel.exact(self.cavities, self.omega_p)

    def pairs(self) -> list[tuple[complex, complex]]:
        c = self.coefficients
        return [(c[i], c[i + 1]) for i in range(0, len(c), 2)]


def _cavity_params(command: str, values: dict) -> tuple[CavityParams, ...]:
    n = N_CAVITIES[command]
    lists = {k: values[k] for k in ("omega_c", "omega_0", "kappa", "gamma", "g")}
    for key, vals in lists.items():
        if len(vals) not in (1, n):
            raise UsageError(f"'{key}' needs 1 or {n} comma-separated values, got {len(vals)}")
    count = max(len(v) for v in lists.values())
    out = []
    for i in range(count):
        pick = {k: v[i] if len(v) > 1 else v[0] for k, v in lists.items()}
        try:
            out.append(CavityParams(**pick))
        except ValueError as exc:
            raise UsageError(f"invalid cavity parameters: {exc}") from None
    return tuple(out)


def _unit_pair(name: str, a: complex, b: complex, normalize: bool) -> tuple[complex, complex]:
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if normalize:
        if norm == 0:
            raise UsageError(f"{name} cannot be normalized: both amplitudes are zero")
        return a / norm, b / norm
    if abs(norm**2 - 1) > 1e-9:
        raise UsageError(f"{name} is not normalized (|.|^2 = {norm ** 2:.12g}); pass --normalize")
    return a, b


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lowq",
        description="Single-photon input-output simulator for low-Q atom-cavity nodes.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for command, keys in COMMAND_KEYS.items():
        sp = sub.add_parser(command, help=(__doc__.split(command, 1)[1].splitlines()[0].strip()))
        sp.add_argument("--config", default=argparse.SUPPRESS, help="flat key=value config file")
        for key in keys + COMMON_KEYS:
            entry = FIELDS[key]
            flag = "--" + key.replace("_", "-")
            if entry.kind == "bool":
                sp.add_argument(flag, action="store_true", default=argparse.SUPPRESS, help=entry.help)
            else:
                sp.add_argument(flag, dest=key, default=argparse.SUPPRESS, metavar=key.upper(),
                                choices=entry.choices or None, help=entry.help)
    return parser


def parse_config(args: list[str], config_file=None) -> RunConfig:
    """Resolve flags, an optional config file and defaults into a ``RunConfig``.

    Raises
    ------
    UsageError
        For unknown commands or keys, malformed numbers, missing required
        fields and violated preconditions.
    """
    ns = vars(build_parser().parse_args(args))
    command = ns.pop("command", None)
    if command is None:
        raise UsageError("missing command\n" + build_parser().format_usage().rstrip())
    config_file = ns.pop("config", config_file)
    keys = COMMAND_KEYS[command] + COMMON_KEYS

    raw = {}
    if config_file is not None:
        raw.update({k: v for k, v in read_config_file(config_file).items() if k in keys})
    raw.update(ns)

    values = {k: FIELDS[k].default for k in keys}
    values.update({k: _convert(k, v) for k, v in raw.items()})
    missing = [k for k in REQUIRED.get(command, ()) if values.get(k) is None]
    if missing:
        raise UsageError(f"missing required field(s) for {command}: {', '.join(missing)}")
    return _validate(command, values)


def _validate(command: str, values: dict) -> RunConfig:
    fmt = values["format"] or ("csv" if command == "sweep" else "json")
    common = dict(command=command, output=values["output"], fmt=fmt, seed=values.get("seed", 0))
    if command == "montecarlo":
        if values["trials"] < 1:
            raise UsageError(f"n_trials must be >= 1, got {values['trials']}")
        if values["workers"] < 1:
            raise UsageError(f"workers must be >= 1, got {values['workers']}")
        try:
            budget = efficiency.LossBudget(values["decay"], values["n_atoms"], values["detector"],
                                           values["optical_loss"], values["rate"])
        except ValueError as exc:
            raise UsageError(f"invalid loss budget: {exc}") from None
        return RunConfig(budget=budget, n_trials=values["trials"], workers=values["workers"], **common)

    cavities = _cavity_params(command, values)
    cav = {k: values[k] for k in ("omega_c", "omega_0", "kappa", "gamma", "g")}
    if command == "sweep":
        if values["points"] < 2:
            raise UsageError(f"n_points must be >= 2, got {values['points']}")
        if not values["from"] < values["to"]:
            raise UsageError(f"detuning range must satisfy from < to, got {values['from']} >= {values['to']}")
        return RunConfig(detuning_from=values["from"], detuning_to=values["to"], n_points=values["points"],
                         cavities=cavities, **cav, **common)

    norm = values["normalize"]
    if command == "transfer-photon":
        coeffs = _unit_pair("(x, y)", values["x"], values["y"], norm)
    else:
        n_pairs = {"entangle2": 2, "entangle3": 3, "transfer-atom": 1}[command]
        coeffs = ()
        for k in range(1, n_pairs + 1):
            coeffs += _unit_pair(f"(alpha{k}, beta{k})", values[f"alpha{k}"], values[f"beta{k}"], norm)
    shots = values.get("shots", 0)
    if shots < 0:
        raise UsageError(f"shots must be >= 0, got {shots}")
    return RunConfig(omega_p=values["omega_p"], mode=values["mode"], coefficients=coeffs, normalize=norm,
                     shots=shots, cavities=cavities, **cav, **common)


# --------------------------------------------------------------------------
# report builders


def _amps(vec) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec).reshape(-1)]


def _complex_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _base_report(config: RunConfig) -> dict:
    report = {"command": config.command, "mode": config.mode}
    if config.mode == "exact":
        report["cavities"] = [asdict(p) for p in config.cavities]
        report["omega_p"] = config.omega_p
    report["inputs"] = [_complex_json(c) for c in config.coefficients]
    return report


def _herald_report(config: RunConfig, records: dict, targets: dict) -> dict:
    branches = []
    for label, rec in records.items():
        target = targets[label]
        fid = None
        if rec.probability > 0 and np.linalg.norm(target) > 0:
            fid = protocol.fidelity(rec.post_state, target / np.linalg.norm(target))
        branches.append({
            "outcome": label,
            "probability": rec.probability,
            "amplitudes": _amps(rec.post_state.amplitudes),
            "fidelity": fid,
            "correction": None,
        })
    report = _base_report(config)
    report["survival_probability"] = sum(r.probability for r in records.values())
    report["branches"] = branches
    if config.shots:
        rng = np.random.default_rng(config.seed)
        counts = {label: 0 for label in records}
        counts["lost"] = 0
        recs = list(records.values())
        for _ in range(config.shots):
            hit = protocol.sample_outcome(recs, rng)
            counts["lost" if hit is None else hit.outcome] += 1
        report["seed"] = config.seed
        report["shots"] = config.shots
        report["counts"] = counts
    return report


def _transfer_report(config: RunConfig, branches: dict) -> dict:
    report = _base_report(config)
    report["branches"] = [b.to_dict() for b in branches.values()]
    return report


def _summary(config: RunConfig, report) -> str:
    if config.command == "sweep":
        return f"sweep: {config.n_points} points"
    if config.command == "montecarlo":
        return (f"montecarlo: p_success={report['p_success']:.6g} expected_time={report['expected_time_s']:.6g} s "
                f"mc_mean={report['mc_mean_s']:.6g} s over {report['n_trials']} trials")
    parts = []
    for b in report["branches"]:
        fid = "n/a" if b["fidelity"] is None else f"{b['fidelity']:.12g}"
        parts.append(f"{b['outcome']}: p={b['probability']:.6g} F={fid}")
    return f"{config.command}: " + ", ".join(parts)


def _to_csv(config: RunConfig, report) -> str:
    if config.command == "sweep":
        return report  # already serialized by SweepTable
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if config.command == "montecarlo":
        writer.writerow(list(report))
        writer.writerow(["" if v is None else (f"{v:.15g}" if isinstance(v, float) else v) for v in report.values()])
        return buf.getvalue()
    writer.writerow(["outcome", "probability", "fidelity", "correction"])
    for b in report["branches"]:
        fid = "" if b["fidelity"] is None else f"{b['fidelity']:.15g}"
        writer.writerow([b["outcome"], f"{b['probability']:.15g}", fid, b["correction"] or ""])
    return buf.getvalue()


def execute(config: RunConfig):
    """Run the command and return its report (a dict, a row list, or CSV text)."""
    cmd = config.command
    if cmd == "sweep":
        table = sweep_reflection(config.cavities[0], config.detuning_from, config.detuning_to, config.n_points)
        return table.to_csv() if config.fmt == "csv" else table.rows()
    if cmd == "montecarlo":
        stats = efficiency.monte_carlo_time(config.budget, config.seed, config.n_trials, config.workers)
        return stats.to_dict()
    model = config.phase_model()
    if cmd == "entangle2":
        pairs = config.pairs()
        records = protocol.entangle_pair(*config.coefficients, model=model)
        (a1, b1), (a2, b2) = pairs
        return _herald_report(config, records, protocol.pair_targets(a1, b1, a2, b2))
    if cmd == "entangle3":
        pairs = config.pairs()
        records = protocol.entangle_three(pairs, model=model)
        return _herald_report(config, records, protocol.three_targets(pairs))
    if cmd == "transfer-photon":
        return _transfer_report(config, protocol.transfer_photon_to_atom(*config.coefficients, model=model))
    if cmd == "transfer-atom":
        return _transfer_report(config, protocol.transfer_atom_to_atom(*config.coefficients, model=model))
    raise UsageError(f"unknown command {cmd!r}")


def _output_path(config: RunConfig) -> Optional[Path]:
    if config.output == "-":
        return None
    if config.output:
        return Path(config.output)
    base = Path(os.environ.get(OUTPUT_DIR_ENV) or ".")
    return base / f"{config.command}.{config.fmt}"


def run(config: RunConfig, stdout=None) -> int:
    """Execute ``config``, write the report and print a one-line summary."""
    stdout = stdout or sys.stdout
    report = execute(config)
    if config.fmt == "csv":
        text = _to_csv(config, report)
    else:
        text = json.dumps(report, indent=2) + "\n"
    path = _output_path(config)
    summary = _summary(config, report)
    if path is None:
        stdout.write(text)
        return 0
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write report to {path}: {exc.strerror or exc}") from None
    print(f"{summary} -> {path}", file=stdout)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        build_parser().print_help(sys.stderr)
        return 2
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(f"lowq: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return run(config)
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"lowq: {config.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
