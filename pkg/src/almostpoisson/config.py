"""Plain-text system configs (INI sections, expressions in the symexpr grammar).

Example::

    [system]
    name = contact-euclidean
    chart = x, y, z
    m = 2
    fiber = z

    [frame]
    e1 = 1, 0, 0
    e2 = 0, 1, x
    e3 = 0, 0, 1

    [metric]
    row1 = 1, 0, 0
    row2 = 0, 1, 0
    row3 = 0, 0, 1

    [run]
    x0 = x=0, y=0, u1=1, u2=1
    dt = 0.001
    t_end = 10

    [invariants]
    u1 = u1

A ``[hamiltonian]`` section with ``expr = ...`` may replace ``[metric]``;
either may carry ``potential = ...``.
"""

from __future__ import annotations

import configparser
import io

from .presets import RunParams, SystemDefinition
from .symexpr import ExprSyntaxError, equal, parse


class ConfigError(ValueError):
    pass


def _split(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _pairs(text: str) -> tuple:
    out = []
    for item in _split(text):
        if "=" not in item:
            raise ConfigError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out.append((k.strip(), float(v)))
        except ValueError:
            raise ConfigError(f"initial value for {k.strip()!r} is not a number: {v.strip()!r}") from None
    return tuple(out)


def parse_assignments(text: str) -> dict:
    """``"x=0, u1=1.5"`` -> ``{"x": 0.0, "u1": 1.5}``."""
    return dict(_pairs(text))


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep case of invariant names
    return cp


def loads(text: str) -> SystemDefinition:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    try:
        sysec = cp["system"]
        chart = _split(sysec["chart"])
        m = int(sysec["m"])
        frame_sec = cp["frame"]
    except KeyError as exc:
        raise ConfigError(f"missing config entry {exc}") from None
    except ValueError:
        raise ConfigError("system.m must be an integer") from None
    frame = tuple(_split(frame_sec[k]) for k in frame_sec)
    metric = hamiltonian = potential = None
    if cp.has_section("metric"):
        sec = cp["metric"]
        metric = tuple(_split(sec[k]) for k in sec if k.startswith("row"))
        potential = sec.get("potential")
    if cp.has_section("hamiltonian"):
        if metric is not None:
            raise ConfigError("give either [metric] or [hamiltonian], not both")
        sec = cp["hamiltonian"]
        if "expr" not in sec:
            raise ConfigError("[hamiltonian] needs expr = ...")
        hamiltonian = sec["expr"]
        potential = sec.get("potential")
    run = RunParams()
    if cp.has_section("run"):
        sec = cp["run"]
        try:
            run = RunParams(
                x0=_pairs(sec.get("x0", "")),
                dt=float(sec.get("dt", run.dt)),
                t_end=float(sec.get("t_end", run.t_end)),
            )
        except ValueError as exc:
            raise ConfigError(f"bad run parameter: {exc}") from None
    if cp.has_section("invariants"):
        run = RunParams(run.x0, run.dt, run.t_end, tuple((k, v) for k, v in cp["invariants"].items()))
    labels = _split(sysec["labels"]) if "labels" in sysec else None
    defn = SystemDefinition(
        name=sysec.get("name", "custom"),
        chart=chart,
        frame=frame,
        m=m,
        metric=metric,
        hamiltonian=hamiltonian,
        potential=potential,
        fiber=_split(sysec.get("fiber", "")),
        labels=labels,
        description=sysec.get("description", ""),
        run=run,
    )
    try:
        defn.validate()
        if defn.metric is not None:
            _check_symmetric(defn.metric)
    except ExprSyntaxError as exc:
        raise ConfigError(f"expression error: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return defn


def _check_symmetric(rows) -> None:
    n = len(rows)
    for i in range(n):
        for j in range(i + 1, n):
            if not equal(parse(rows[i][j]), parse(rows[j][i])):
                raise ConfigError(f"metric is not symmetric at ({i + 1}, {j + 1})")


def load(path) -> SystemDefinition:
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def dumps(defn: SystemDefinition) -> str:
    cp = _parser()
    sysec = {"name": defn.name, "chart": ", ".join(defn.chart), "m": str(defn.m)}
    if defn.fiber:
        sysec["fiber"] = ", ".join(defn.fiber)
    if defn.labels:
        sysec["labels"] = ", ".join(defn.labels)
    if defn.description:
        sysec["description"] = defn.description
    cp["system"] = sysec
    cp["frame"] = {f"e{i + 1}": ", ".join(v) for i, v in enumerate(defn.frame)}
    if defn.metric is not None:
        sec = {f"row{i + 1}": ", ".join(r) for i, r in enumerate(defn.metric)}
        if defn.potential:
            sec["potential"] = defn.potential
        cp["metric"] = sec
    else:
        sec = {"expr": defn.hamiltonian}
        if defn.potential:
            sec["potential"] = defn.potential
        cp["hamiltonian"] = sec
    r = defn.run
    cp["run"] = {
        "x0": ", ".join(f"{k}={v!r}" for k, v in r.x0),
        "dt": repr(r.dt),
        "t_end": repr(r.t_end),
    }
    if r.invariants:
        cp["invariants"] = dict(r.invariants)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def dump(defn: SystemDefinition, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(defn))
