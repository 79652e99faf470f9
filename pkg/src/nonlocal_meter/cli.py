"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 impossible branch or postselection.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from . import experiments
from .protocol import CouplingSpec
from .qstate import X_AXIS, Y_AXIS, Z_AXIS, SpinAxis

SCHEMA_VERSION = 1
EXPERIMENTS = ("reliability", "nondemolition", "product-rule", "hardy", "custom")
MODES = ("exact", "sampled", "both")
FORMATS = ("json", "csv")
INPUT_NORM_TOL = 1e-6

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IMPOSSIBLE = 3

_NAMED_AXES = {"x": X_AXIS, "y": Y_AXIS, "z": Z_AXIS}


@dataclass
class RunConfig:
    experiment: str
    shots: int = 100_000
    seed: int = 42
    phi: float = 0.0
    visibility: float = 1.0
    mode: str = "both"
    format: str = "json"
    out: Optional[str] = None
    state: Optional[np.ndarray] = None
    axes: Optional[tuple[Optional[SpinAxis], Optional[SpinAxis]]] = None
    postselection: Optional[str | np.ndarray] = None


def _parse_amplitudes(text: str) -> np.ndarray:
    """Eight reals ``re,im`` x 4 in basis order uu, ud, du, dd; or a preset state name."""
    if text in experiments.NAMED_STATES:
        return experiments.named_state(text)
    try:
        values = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed amplitude list {text!r}") from None
    if len(values) != 8 or not all(np.isfinite(values)):
        raise argparse.ArgumentTypeError(f"expected 8 finite reals (4 x re,im), got {text!r}")
    v = np.array(values[0::2]) + 1j * np.array(values[1::2])
    norm2 = float(np.vdot(v, v).real)
    if abs(norm2 - 1.0) > INPUT_NORM_TOL:
        raise argparse.ArgumentTypeError(f"amplitudes have norm^2 {norm2}, not 1 within {INPUT_NORM_TOL:g}")
    return v / np.sqrt(norm2)


def _parse_axis(token: str) -> Optional[SpinAxis]:
    token = token.strip().lower()
    if token in ("none", "off", "0"):
        return None
    sign = -1.0 if token.startswith("-") else 1.0
    name = token.lstrip("+-")
    if name in _NAMED_AXES:
        return SpinAxis.from_vector(sign * _NAMED_AXES[name].vector)
    try:
        vec = [float(t) for t in token.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown axis {token!r}") from None
    if len(vec) != 3:
        raise argparse.ArgumentTypeError(f"axis needs x, y, z or nx:ny:nz, got {token!r}")
    norm = float(np.linalg.norm(vec))
    if abs(norm**2 - 1.0) > INPUT_NORM_TOL:
        raise argparse.ArgumentTypeError(f"axis {token!r} is not a unit vector")
    return SpinAxis.from_vector(vec)


def _parse_axes(text: str) -> tuple[Optional[SpinAxis], Optional[SpinAxis]]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated axes, got {text!r}")
    a, b = (_parse_axis(p) for p in parts)
    if a is None and b is None:
        raise argparse.ArgumentTypeError("at least one axis must be switched on")
    return a, b


def _non_negative_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {n}")
    return n


def _seed(text: str) -> int:
    n = _non_negative_int(text)
    if n >= 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return n


def _finite_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not np.isfinite(x):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nonlocal-meter",
        description="Simulate nonlocal von Neumann measurements with an entangled pointer.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--shots", type=_non_negative_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--phi", type=_finite_float, default=0.0, help="common readout phase (radians)")
    p.add_argument("--visibility", type=_finite_float, default=1.0, help="mix sampled ports with uniform noise")
    p.add_argument("--mode", choices=MODES, default="both")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--state", type=_parse_amplitudes, help="custom: 8 reals re,im for uu,ud,du,dd or a preset name")
    p.add_argument("--axes", type=_parse_axes, help="custom: axes for A,B (x, -y, nx:ny:nz or none)")
    p.add_argument("--postselect", type=str, help="preset name, or 8 reals for custom")
    return p


def parse_args(argv: Sequence[str]) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(list(argv))
    if not 0.0 <= ns.visibility <= 1.0:
        parser.error("--visibility must lie in [0, 1]")
    post: Optional[str | np.ndarray] = None
    if ns.postselect is not None:
        if ns.experiment not in ("product-rule", "custom"):
            parser.error("--postselect only applies to product-rule and custom")
        if ns.postselect in experiments.NAMED_STATES:
            post = ns.postselect
        else:
            try:
                post = _parse_amplitudes(ns.postselect)
            except argparse.ArgumentTypeError as exc:
                parser.error(str(exc))
    if ns.experiment == "custom":
        if ns.state is None or ns.axes is None:
            parser.error("custom needs --state and --axes")
    elif ns.state is not None or ns.axes is not None:
        parser.error("--state and --axes only apply to custom")
    return RunConfig(
        experiment=ns.experiment, shots=ns.shots, seed=ns.seed, phi=ns.phi, visibility=ns.visibility,
        mode=ns.mode, format=ns.format, out=ns.out, state=ns.state, axes=ns.axes, postselection=post,
    )


def run_experiment(config: RunConfig) -> experiments.ExperimentReport:
    sampled = config.mode != "exact"
    kw = dict(shots=config.shots, seed=config.seed, sampled=sampled)
    if config.experiment == "reliability":
        return experiments.run_reliability(phi=config.phi, visibility=config.visibility, **kw)
    if config.experiment == "nondemolition":
        return experiments.run_nondemolition(phi=config.phi, **kw)
    if config.experiment == "product-rule":
        post = config.postselection if config.postselection is not None else experiments.DEFAULT_POSTSELECTION
        return experiments.run_product_rule(phi=config.phi, visibility=config.visibility, postselection=post, **kw)
    if config.experiment == "hardy":
        return experiments.run_hardy(**kw)
    post = config.postselection
    if isinstance(post, str):
        post = experiments.named_state(post)
    return experiments.run_custom(config.state, CouplingSpec(*config.axes), phi=config.phi,
                                  visibility=config.visibility, postselection=post, **kw)


def fmt_prob(p: float) -> str:
    """Decimal string with 12 significant digits; magnitudes below 1e-14 print as 0."""
    if abs(p) < 1e-14:
        return "0"
    return f"{p:.12g}"


def _fmt_value(v: Any) -> Any:
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    if isinstance(v, (float, np.floating)):
        return fmt_prob(float(v))
    raise TypeError(f"cannot serialize {v!r}")


def _amps_echo(v: Optional[str | np.ndarray]) -> Any:
    if v is None or isinstance(v, str):
        return v
    return [f"{x:.12g}" for c in v for x in (c.real, c.imag)]


def _axis_echo(a: Optional[SpinAxis]) -> Optional[list[str]]:
    return None if a is None else [f"{x:.12g}" for x in (a.nx, a.ny, a.nz)]


def config_echo(config: RunConfig) -> dict[str, Any]:
    echo: dict[str, Any] = {
        "experiment": config.experiment,
        "shots": config.shots,
        "seed": config.seed,
        "phi": repr(config.phi),
        "visibility": repr(config.visibility),
        "mode": config.mode,
        "format": config.format,
    }
    if config.experiment == "custom":
        echo["state"] = _amps_echo(config.state)
        echo["axes"] = [_axis_echo(a) for a in config.axes]
    if config.experiment in ("product-rule", "custom"):
        post = config.postselection
        if post is None and config.experiment == "product-rule":
            post = experiments.DEFAULT_POSTSELECTION
        echo["postselection"] = _amps_echo(post)
    return echo


def build_document(config: RunConfig, report: experiments.ExperimentReport, duration: float) -> dict[str, Any]:
    blocks = []
    for b in report.blocks:
        entry: dict[str, Any] = {"name": b.name}
        if config.mode != "sampled":
            entry["exact"] = {k: fmt_prob(p) for k, p in b.exact.items()}
        if config.mode != "exact":
            entry["counts"] = {name: t.as_dict() for name, t in b.counts.items()}
        entry["info"] = {k: _fmt_value(v) for k, v in b.info.items()}
        blocks.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_echo(config),
        "experiment": report.experiment,
        "status": "impossible" if report.impossible else "ok",
        "impossible": list(report.impossible),
        "blocks": blocks,
        "duration_s": round(duration, 6),
    }


def to_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=True) + "\n"


def csv_rows(doc: dict[str, Any]) -> list[tuple[str, str, str, str, str]]:
    rows = []
    exp = doc["experiment"]
    for b in doc["blocks"]:
        for cat, p in b.get("exact", {}).items():
            rows.append((exp, b["name"], cat, "probability", p))
        for table, counts in b.get("counts", {}).items():
            for cat, n in counts.items():
                rows.append((exp, b["name"], cat, f"count:{table}", str(n)))
        for key, v in b["info"].items():
            rows.append((exp, b["name"], key, "info", json.dumps(v) if not isinstance(v, str) else v))
    return rows


def to_csv(doc: dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("experiment", "block", "category", "quantity", "value"))
    w.writerows(csv_rows(doc))
    return buf.getvalue()


def serialize(doc: dict[str, Any], fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(doc)
    if fmt == "csv":
        return to_csv(doc)
    raise ValueError(f"unknown format {fmt!r}")


def execute(config: RunConfig) -> tuple[dict[str, Any], int]:
    start = time.perf_counter()
    report = run_experiment(config)
    doc = build_document(config, report, time.perf_counter() - start)
    return doc, EXIT_IMPOSSIBLE if report.impossible else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    doc, code = execute(config)
    text = serialize(doc, config.format)
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_IMPOSSIBLE:
        print(f"impossible branch or postselection: {', '.join(doc['impossible'])}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
