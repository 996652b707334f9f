"""Batch command line front-end.

Every run writes one data file (CSV, JSON or SVG) plus a JSON manifest with
the resolved configuration and SHA-256 digests of what was written.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dqpt import (
    QuenchSpec,
    critical_modes,
    fisher_zeros,
    rate_function,
    winding_number,
)
from .errors import BiorthError, ParseError, ValidationError
from .plot import Curve, line_plot
from .ssh import MomentumGrid, PhaseLabel, SSHParams, bloch_arrays, classify_phase

COMMANDS = ("phase-diagram", "spectrum", "quench", "fisher-zeros", "winding", "critical")
FORMATS = ("csv", "json", "svg")
PHASE_RANGE = 3.0

# key -> (type, default); order fixes the rendered layout
FIELDS = {
    "command": (str, None),
    "q": (float, 0.5),
    "eta": (float, 0.4),
    "qf": (float, 2.0),
    "etaf": (float, 0.4),
    "kpoints": (int, 2000),
    "tpoints": (int, 2000),
    "tmax": (float, 10.0),
    "branch": (int, 0),
    "raster": (int, 121),
    "out": (str, None),
    "format": (str, "csv"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    q: float = 0.5
    eta: float = 0.4
    qf: float = 2.0
    etaf: float = 0.4
    kpoints: int = 2000
    tpoints: int = 2000
    tmax: float = 10.0
    branch: int = 0
    raster: int = 121
    out: str = ""
    format: str = "csv"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"command must be one of {', '.join(COMMANDS)}, got {self.command!r}")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {', '.join(FORMATS)}, got {self.format!r}")
        for name in ("q", "eta", "qf", "etaf", "tmax"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.kpoints < 16:
            raise ValidationError(f"kpoints must be >= 16, got {self.kpoints}")
        if self.tpoints < 16:
            raise ValidationError(f"tpoints must be >= 16, got {self.tpoints}")
        if self.tmax <= 0:
            raise ValidationError(f"tmax must be > 0, got {self.tmax}")
        if self.branch < 0:
            raise ValidationError(f"branch must be >= 0, got {self.branch}")
        if self.raster < 2:
            raise ValidationError(f"raster must be >= 2, got {self.raster}")
        if not self.out:
            object.__setattr__(self, "out", self.command)

    @property
    def initial(self) -> SSHParams:
        return SSHParams(self.q, self.eta)

    @property
    def final(self) -> SSHParams:
        return SSHParams(self.qf, self.etaf)

    def quench_spec(self) -> QuenchSpec:
        return QuenchSpec.build(self.initial, self.final, self.kpoints, self.tmax, self.tpoints)


@dataclass(frozen=True)
class ResultManifest:
    command: str
    config: dict
    version: str
    wall_time: float
    outputs: list[dict]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        token = message.rsplit(":", 1)[-1].strip() if ":" in message else ""
        raise ParseError(message, token)


def _parser() -> _Parser:
    p = _Parser(prog="biodqpt", description="Quench dynamics of the non-Hermitian SSH chain.")
    p.add_argument("command", nargs="?", help="one of " + ", ".join(COMMANDS))
    p.add_argument("--config", help="key=value file; flags override its values")
    for key, (typ, _) in FIELDS.items():
        if key != "command":
            p.add_argument(f"--{key}", type=str, default=None)
    return p


def _convert(key: str, text: str):
    typ = FIELDS[key][0]
    try:
        return typ(text)
    except ValueError:
        raise ParseError(f"invalid {typ.__name__} for {key}: {text!r}", text) from None


def _parse_text(text: str) -> dict:
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", line)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELDS:
            raise ParseError(f"unknown key {key!r}", key)
        values[key] = _convert(key, value)
    return values


def parse_config(source) -> ExperimentConfig:
    """Build a config from an argv list or from key=value file text.

    Precedence: flags, then ``--config`` file values, then defaults.
    """
    if isinstance(source, str):
        values = _parse_text(source)
    else:
        argv = list(source)
        if not argv:
            raise ParseError("no command given", "")
        ns, extra = _parser().parse_known_args(argv)
        if extra:
            raise ParseError(f"unrecognised argument {extra[0]!r}", extra[0])
        values = {}
        if ns.config:
            try:
                values.update(_parse_text(Path(ns.config).read_text(encoding="utf-8")))
            except OSError as exc:
                raise ParseError(f"cannot read config file: {exc}", ns.config) from None
        if ns.command is not None:
            values["command"] = ns.command
        for key in FIELDS:
            flag = getattr(ns, key, None) if key != "command" else None
            if flag is not None:
                values[key] = _convert(key, flag)
    if "command" not in values:
        raise ParseError("no command given", "")
    if values["command"] not in COMMANDS:
        raise ParseError(f"unknown command {values['command']!r}", values["command"])
    return ExperimentConfig(**values)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % (x + 0.0)


def render(config: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` for file text."""
    return "".join(f"{key}={_fmt(getattr(config, key))}\n" for key in FIELDS)


# ---------------------------------------------------------------------------
# commands


def _table_phase_diagram(cfg: ExperimentConfig):
    axis = np.linspace(0.0, PHASE_RANGE, cfg.raster)
    rows = []
    for q in axis:
        for eta in axis:
            rows.append((float(q), float(eta), classify_phase(SSHParams(float(q), float(eta))).value))
    return ("q", "eta", "label"), rows


def _table_spectrum(cfg: ExperimentConfig):
    grid = MomentumGrid.midpoint(cfg.kpoints)
    d = bloch_arrays(cfg.initial, grid.ks)[3]
    cols = (grid.ks, d.real, d.imag, -d.real, -d.imag)
    return ("k", "re_e_plus", "im_e_plus", "re_e_minus", "im_e_minus"), list(zip(*cols))


def _table_quench(cfg: ExperimentConfig):
    r = rate_function(cfg.quench_spec())
    return ("t", "re_r", "im_r"), list(zip(r.times, r.re_r, r.im_r))


def _table_fisher(cfg: ExperimentConfig):
    c = fisher_zeros(cfg.quench_spec(), cfg.branch, skip_singular=True)
    return ("k", "re_z", "im_z"), list(zip(c.ks, c.zs.real, c.zs.imag))


def _table_winding(cfg: ExperimentConfig):
    w = winding_number(cfg.quench_spec())
    return ("t", "re_nu", "im_nu", "valid"), list(zip(w.times, w.re_nu, w.im_nu, w.valid.astype(int)))


def _table_critical(cfg: ExperimentConfig):
    cs = critical_modes(cfg.quench_spec(), None)
    rows = [("time", k, k, l, t) for k, l, t in cs.times]
    if cs.aperiodic_band is not None:
        lo, hi = cs.aperiodic_band
        rows.append(("band", lo, hi, "", ""))
    return ("kind", "k_lo", "k_hi", "branch", "t"), rows


TABLES = {
    "phase-diagram": _table_phase_diagram,
    "spectrum": _table_spectrum,
    "quench": _table_quench,
    "fisher-zeros": _table_fisher,
    "winding": _table_winding,
    "critical": _table_critical,
}


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _json(header, rows) -> str:
    cols = {h: [] for h in header}
    for row in rows:
        for h, v in zip(header, row):
            cols[h].append(v if isinstance(v, str) else float(_fmt(v)) if not isinstance(v, (int, np.integer)) else int(v))
    return json.dumps(cols, sort_keys=False) + "\n"


def _svg(cfg: ExperimentConfig, header, rows) -> str:
    if cfg.command == "phase-diagram":
        qs = sorted({r[0] for r in rows})
        edges = {}
        for q, eta, label in rows:
            if PhaseLabel(label).is_pt_symmetric:
                edges[q] = max(edges.get(q, 0.0), eta)
        curve = Curve(np.array(qs), np.array([edges.get(q, np.nan) for q in qs]), "real-spectrum edge")
        return line_plot([curve], "PT phase boundary", "q", "eta")
    if cfg.command == "critical":
        ts = [(r[1], r[4]) for r in rows if r[0] == "time"]
        xs = np.array([t for _, t in ts], float)
        return line_plot([Curve(xs, np.array([k for k, _ in ts], float), "k_c")], "critical times", "t", "k")
    data = np.array([[float(v) for v in r] for r in rows]) if rows else np.zeros((0, len(header)))
    curves = [Curve(data[:, 0], data[:, i], header[i]) for i in range(1, len(header)) if header[i] != "valid"]
    return line_plot(curves, cfg.command, header[0], "")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: ExperimentConfig) -> ResultManifest:
    """Execute one command and write its data file and manifest."""
    start = time.perf_counter()
    header, rows = TABLES[cfg.command](cfg)
    if cfg.format == "csv":
        text = _csv(header, rows)
    elif cfg.format == "json":
        text = _json(header, rows)
    else:
        text = _svg(cfg, header, rows)
    stem = Path(cfg.out)
    data_path = stem.with_name(stem.name + "." + cfg.format)
    manifest_path = stem.with_name(stem.name + ".manifest.json")
    try:
        data_path.parent.mkdir(parents=True, exist_ok=True)
        with open(data_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {data_path}: {exc}") from None
    manifest = ResultManifest(
        command=cfg.command,
        config=dataclasses.asdict(cfg),
        version=__version__,
        wall_time=time.perf_counter() - start,
        outputs=[{"path": str(data_path), "sha256": _digest(data_path)}],
    )
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())
    return manifest


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except (ParseError, ValidationError) as exc:
        print(f"biodqpt: error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg)
    except ValidationError as exc:
        print(f"biodqpt: error: {exc}", file=sys.stderr)
        return 2
    except (BiorthError, ArithmeticError, ValueError) as exc:
        print(f"biodqpt: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}", file=sys.stderr)
        return 1
    for out in manifest.outputs:
        print(out["path"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
