"""Command-line front end: config files and flags bound to experiment runners.

Config files are line oriented::

    # comments start with '#'
    [experiment]
    experiment = convergence
    [problem]
    problem = burgers_smooth
    n_nodes = 320, 640, 1280

Section headers are optional grouping; a key inside a section must belong to
it.  List values are comma separated, except ``masks`` which uses ``;``
because mask pipelines contain commas.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .experiments import DEFAULTS, KINDS, ResultTable, _COMMON, experiment_config, problem_for, run_experiment
from .integrators import MODES
from .masks import MaskSpecError, MaskStrategy
from .problems import SPLITTINGS
from .tableaux import (
    BUILTIN_PAIRS,
    UnsupportedOrderError,
    builtin_pair,
    order_residuals,
    ssp_coefficient,
    stability_measures,
    stability_polynomial,
)

log = logging.getLogger("sperk")

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2

SECTIONS: dict[str, tuple[str, ...]] = {
    "experiment": ("experiment", "seed", "jobs", "out_dir"),
    "problem": ("problem", "n_nodes", "epsilon", "splitting", "kappa"),
    "time": ("tableau", "labels", "mode", "modes", "schemes", "cfl", "dt", "t_final", "save_every"),
    "mask": ("mask", "masks", "C", "theta", "widen"),
    "reference": ("ref_factor", "ref_cfl", "norm", "ref_tableau", "ref_label", "dt_ref", "with_errors",
                  "verdict_factor", "level", "ref_n_nodes"),
}
_SECTION_OF = {key: sec for sec, keys in SECTIONS.items() for key in keys}

_INT = {"seed", "jobs", "widen", "ref_factor", "ref_n_nodes", "save_every"}
_FLOAT = {"epsilon", "C", "theta", "t_final", "ref_cfl", "dt_ref", "verdict_factor", "level", "kappa"}
_INT_LIST = {"n_nodes"}
_FLOAT_LIST = {"cfl", "dt"}
_STR_LIST = {"labels", "modes", "schemes"}
_BOOL = {"with_errors"}
_SEMI_LIST = {"masks"}

_ALIASES = {"converge": "convergence", "tv-scan": "tv_scan", "dt-scan": "dt_scan",
            "shock-speed": "shock_speed", "shu-osher": "shu_osher"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | str | None = None):
        where = f"line {line}: " if isinstance(line, int) else (f"{line}: " if line else "")
        super().__init__(where + message)
        self.line = line


@dataclass
class RunConfig:
    """Validated experiment configuration with every default filled in."""

    experiment: str
    settings: dict[str, Any]
    explicit: set[str] = field(default_factory=set)
    out_dir: str = "results"

    @property
    def defaults_applied(self) -> list[str]:
        return sorted(k for k in self.settings if k not in self.explicit)

    def to_text(self) -> str:
        lines = ["[experiment]", f"experiment = {self.experiment}", f"out_dir = {self.out_dir}"]
        for sec, keys in SECTIONS.items():
            body = [f"{k} = {_render(k, self.settings[k])}" for k in keys if k in self.settings]
            if sec == "experiment":
                lines += body
            elif body:
                lines += [f"[{sec}]"] + body
        return "\n".join(lines) + "\n"

    def provenance(self) -> dict[str, Any]:
        return {"experiment": self.experiment, "config_text": self.to_text(),
                "defaults_applied": self.defaults_applied, "version": __version__}


def _render(key: str, value: Any) -> str:
    if value is None:
        return "none"
    if key in _SEMI_LIST:
        return "; ".join(value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (list, tuple)):
        return ", ".join(_render(key, v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key: str, raw: str, where) -> Any:
    raw = raw.strip()
    try:
        if key in _INT:
            return int(raw)
        if key in _FLOAT:
            if key == "kappa" and raw.lower() == "none":
                return None
            return float(raw)
        if key in _INT_LIST:
            return [int(v) for v in raw.split(",") if v.strip()]
        if key in _FLOAT_LIST:
            return [float(v) for v in raw.split(",") if v.strip()]
        if key in _STR_LIST:
            return [v.strip() for v in raw.split(",") if v.strip()]
        if key in _SEMI_LIST:
            return [v.strip() for v in raw.split(";") if v.strip()]
        if key in _BOOL:
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"cannot read {key} = {raw!r}", where) from None
    return raw


def _kind(name: str, where=None) -> str:
    kind = _ALIASES.get(name, name)
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment {name!r}; valid: {', '.join(KINDS)}", where)
    return kind


def _lines(text: str):
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", no)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", no)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SECTION_OF:
            raise ConfigError(f"unknown key {key!r}", no)
        if section is not None and _SECTION_OF[key] != section:
            raise ConfigError(f"key {key!r} belongs in [{_SECTION_OF[key]}], not [{section}]", no)
        yield no, key, value


def parse_config(text: str, overrides: dict[str, tuple[str, Any]] | None = None) -> RunConfig:
    """Parse and validate a config; ``overrides`` maps key -> (source label, raw string)."""
    entries: dict[str, tuple[Any, Any]] = {}
    for no, key, value in _lines(text):
        entries[key] = (value, no)
    for key, (where, value) in (overrides or {}).items():
        if key not in _SECTION_OF:
            raise ConfigError(f"unknown key {key!r}", where)
        entries[key] = (value, where)
    exp_raw, exp_where = entries.pop("experiment", ("run", None))
    kind = _kind(exp_raw.strip(), exp_where)
    out_raw, _ = entries.pop("out_dir", ("results", None))
    out_dir = os.environ.get("SPERK_OUT_DIR") or out_raw.strip()
    if overrides and "out_dir" in overrides:
        out_dir = overrides["out_dir"][1].strip()
    allowed = set(_COMMON) | set(DEFAULTS[kind])
    values, where_of = {}, {}
    for key, (raw, where) in entries.items():
        if key not in allowed:
            raise ConfigError(f"key {key!r} does not apply to experiment {kind!r}", where)
        values[key] = _convert(key, raw, where)
        where_of[key] = where
    settings = experiment_config(kind, values)
    _validate(settings, where_of)
    return RunConfig(kind, settings, set(values), out_dir)


def _check(ok: bool, key: str, message: str, where_of: dict) -> None:
    if not ok:
        raise ConfigError(f"{key}: {message}", where_of.get(key))


def _validate(s: dict[str, Any], where_of: dict) -> None:
    for key in ("epsilon", "C", "theta", "ref_cfl", "dt_ref", "verdict_factor"):
        if key in s:
            _check(s[key] > 0, key, "must be positive", where_of)
    if s.get("kappa") is not None:
        _check(s["kappa"] > 0, "kappa", "must be positive", where_of)
    _check(s["t_final"] >= 0, "t_final", "must be non-negative", where_of)
    _check(s["jobs"] >= 1, "jobs", "must be at least 1", where_of)
    _check(s["widen"] >= 0, "widen", "must be non-negative", where_of)
    _check(0 <= s["seed"] < 2**64, "seed", "must fit in 64 unsigned bits", where_of)
    _check(len(s["n_nodes"]) > 0 and all(n >= 5 for n in s["n_nodes"]), "n_nodes",
           "needs at least one size, each >= 5", where_of)
    if "cfl" in s:
        _check(all(c > 0 for c in s["cfl"]), "cfl", "must be positive", where_of)
    if "dt" in s:
        _check(all(d > 0 for d in s["dt"]), "dt", "must be positive", where_of)
    for key in ("ref_factor", "ref_n_nodes", "save_every"):
        if key in s:
            _check(s[key] >= (1 if key == "ref_factor" else 0), key, "out of range", where_of)
    _check(s["splitting"] in SPLITTINGS, "splitting", f"must be one of {SPLITTINGS}", where_of)
    if "norm" in s:
        _check(s["norm"] in ("l2", "max"), "norm", "must be l2 or max", where_of)
    try:
        problem_for(s, 16)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"problem: {exc}", where_of.get("problem")) from None
    tab = _tableau(s["tableau"], "tableau", where_of)
    for label in s["labels"]:
        _check(label in tab.labels, "labels", f"{tab.name} has no weight set {label!r}", where_of)
    if "ref_tableau" in s:
        ref = _tableau(s["ref_tableau"], "ref_tableau", where_of)
        _check(s["ref_label"] in ref.labels, "ref_label", f"{ref.name} has no weight set", where_of)
    if "ref_label" in s and "ref_tableau" not in s:
        _check(s["ref_label"] in tab.labels, "ref_label", f"{tab.name} has no weight set", where_of)
    modes = [s["mode"]] if "mode" in s else list(s.get("modes", []))
    for m in modes:
        _check(m in MODES, "mode" if "mode" in s else "modes", f"must be one of {MODES}", where_of)
    for scheme in s.get("schemes", []):
        ok = scheme in MODES[1:] or (scheme.startswith("single:") and scheme[7:] in tab.labels)
        _check(ok, "schemes", f"bad scheme {scheme!r}", where_of)
    for key in ("mask", "masks"):
        for text in ([s[key]] if key == "mask" else s.get(key, [])) if key in s else []:
            try:
                strategy = MaskStrategy.parse(text)
            except MaskSpecError as exc:
                raise ConfigError(f"{key}: {exc}", where_of.get(key)) from None
            if strategy.location == "interface" and any(m in ("equation", "blended") for m in modes):
                raise ConfigError(f"{key}: {text!r} is interface-located but the mode needs node masks",
                                  where_of.get(key))


def _tableau(name: str, key: str, where_of: dict):
    try:
        return builtin_pair(name)
    except KeyError as exc:
        raise ConfigError(f"{key}: {exc.args[0]}", where_of.get(key)) from None


# ---------------------------------------------------------------------------
# tableau-info

def tableau_info(name: str) -> str:
    tab = builtin_pair(name)
    out = [f"tableau {tab.name}: {tab.stages} stages, weight sets {', '.join(tab.labels)}"]
    for ws in tab.weight_sets:
        res = order_residuals(tab, ws.label, ws.order)
        line = f"[{ws.label}] declared order {ws.order}: max residual {max(abs(v) for _, v in res):.3e}"
        try:
            nxt = order_residuals(tab, ws.label, ws.order + 1)
            line += f"; order {ws.order + 1} max residual {max(abs(v) for _, v in nxt):.3e}"
        except UnsupportedOrderError:
            line += f"; order {ws.order + 1} conditions not tabulated"
        out.append(line)
        poly = stability_polynomial(tab, ws.label)
        out.append("  stability polynomial: " + " ".join(f"{c:.10g}" for c in poly))
        m = stability_measures(poly)
        out.append(f"  real-axis extent {m.real_axis_extent:.6f}")
        out.append(f"  imaginary-axis extent (rho2) {m.imag_axis_extent:.6f}")
        out.append(f"  inscribed disc radius (rho) {m.inscribed_disc_radius:.6f}")
        out.append(f"  WENO bean scale (rho3) {m.weno_bean_scale:.6f}")
        out.append(f"  SSP coefficient {ssp_coefficient(tab, ws.label):.6f}")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# main

_FLAG_KEYS = {
    "problem": "problem", "tableau": "tableau", "mask": "mask", "n_nodes": "n_nodes", "cfl": "cfl",
    "dt": "dt", "t_final": "t_final", "epsilon": "epsilon", "seed": "seed", "jobs": "jobs",
    "splitting": "splitting", "out_dir": "out_dir",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sperk", description="Spatially partitioned embedded RK experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "converge", "tv-scan", "dt-scan", "shock-speed", "shu-osher"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file (key = value lines)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any key")
        p.add_argument("--problem")
        p.add_argument("--tableau")
        p.add_argument("--mode", help="partitioning mode (a scheme token for the scans)")
        p.add_argument("--mask", help="mask pipeline, e.g. 'weno(theta=0.06) | widen(4)'")
        p.add_argument("--n-nodes", dest="n_nodes")
        p.add_argument("--cfl")
        p.add_argument("--dt")
        p.add_argument("--t-final", dest="t_final")
        p.add_argument("--epsilon")
        p.add_argument("--splitting")
        p.add_argument("--seed")
        p.add_argument("--jobs")
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--stdout", action="store_true", help="write the CSV to standard output instead of files")
        p.add_argument("--progress", action="store_true", help="per-step counter on standard error (run only)")
    info = sub.add_parser("tableau-info")
    info.add_argument("name", choices=sorted(BUILTIN_PAIRS))
    return parser


def _overrides(args, kind: str) -> dict[str, tuple[str, str]]:
    out: dict[str, tuple[str, str]] = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr)
        if value is not None:
            out[key] = (f"--{attr.replace('_', '-')}", value)
    if args.mode is not None:
        key = {"run": "mode", "shu_osher": "mode", "convergence": "modes", "shock_speed": "modes"}.get(kind,
                                                                                                   "schemes")
        out[key] = ("--mode", args.mode)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}", "--set")
        key, value = item.split("=", 1)
        out[key.strip()] = ("--set", value)
    return out


def _summary(table: ResultTable) -> list[str]:
    lines = []
    if table.kind == "shock_speed":
        for row in table.where():
            lines.append(f"{row['mode']} N={row['n_nodes']}: shock speed {row['speed']:.5f} ({row['status']})")
    elif table.kind == "convergence":
        for key, order in table.metadata["orders"].items():
            lines.append(f"{key}: estimated order {order:.3f}")
    elif table.kind == "shu_osher":
        m = table.metadata
        lines.append(f"status {m['status']}; chi=0 on {100 * m['chi_zero_fraction']:.1f}% of nodes; "
                     f"shock at x={m['shock_location']:.4f}")
        if "shock_offset_fraction" in m:
            lines.append(f"reference shock at x={m['reference']['shock_location']:.4f} "
                         f"(offset {100 * m['shock_offset_fraction']:.2f}% of the domain)")
    elif table.kind == "run":
        m = table.metadata
        lines.append(f"status {m['status']} after {m['steps']} steps; TV increase {m['tv_increase']:.3e}")
    else:
        lines.append(f"{len(table.rows)} rows")
    return lines


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "tableau-info":
        print(tableau_info(args.name))
        return EXIT_OK
    kind = _kind(args.command)
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        overrides = _overrides(args, kind)
        overrides["experiment"] = ("subcommand", kind)
        cfg = parse_config(text, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    settings = dict(cfg.settings)
    if kind == "run":
        settings["progress"] = args.progress
    try:
        table = run_experiment(kind, settings)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as exc:
        print(f"error: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    table.metadata["provenance"] = cfg.provenance()
    for line in _summary(table):
        print(line, file=sys.stderr)
    if args.stdout:
        sys.stdout.write(table.to_csv())
    else:
        csv_path, json_path = table.write(cfg.out_dir)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    if table.diverged:
        detail = table.metadata.get("failure") or "see the status column"
        print(f"error: numerical divergence: {detail}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
