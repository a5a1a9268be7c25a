"""Experiment reports: named statistics with explicit pass/fail rules."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

CSV_COLUMNS = ("statistic", "component", "value", "se", "target", "z", "pass",
               "tolerance", "estimator", "sample_size")


@dataclass(frozen=True)
class Statistic:
    """One reported number and the rule that judges it.

    ``check`` is one of ``"z"`` (``|value - target| <= tol * se + atol``,
    the small floor absorbing rounding when ``se`` is zero),
    ``"abs"`` (``|value - target| <= tol``), ``"max"`` (``value <= tol``),
    ``"min"`` (``value >= tol``) or ``"info"`` (not judged).
    """

    statistic: str
    component: str
    value: float
    se: float | None = None
    target: float | None = None
    check: str = "info"
    tol: float | None = None
    atol: float = 0.0
    estimator: str = ""
    sample_size: int | float | None = None

    @property
    def z(self):
        if self.target is None or self.se is None:
            return None
        diff = self.value - self.target
        if self.se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.se

    @property
    def passed(self):
        v, t, tol = self.value, self.target, self.tol
        if self.check == "info":
            return None
        if not math.isfinite(v):
            return False
        if self.check == "z":
            return abs(v - t) <= tol * self.se + self.atol
        if self.check == "abs":
            return abs(v - t) <= tol
        if self.check == "max":
            return v <= tol
        if self.check == "min":
            return v >= tol
        raise ValueError(f"unknown check {self.check!r}")

    @property
    def tolerance(self):
        if self.check == "z":
            floor = f"+{self.atol:g}" if self.atol else ""
            return f"|diff|<={self.tol:g}se{floor}"
        if self.check == "abs":
            return f"|diff|<={self.tol:g}"
        if self.check == "max":
            return f"<={self.tol:g}"
        if self.check == "min":
            return f">={self.tol:g}"
        return ""

    def row(self):
        fmt = lambda x: "" if x is None else repr(float(x))
        p = self.passed
        return {
            "statistic": self.statistic, "component": self.component,
            "value": fmt(self.value), "se": fmt(self.se), "target": fmt(self.target),
            "z": fmt(self.z), "pass": "" if p is None else str(p).lower(),
            "tolerance": self.tolerance, "estimator": self.estimator,
            "sample_size": "" if self.sample_size is None else str(self.sample_size),
        }


def component_names(shape, antisym_only=False):
    """Index labels ``"i"`` or ``"i,j"`` (``i < j`` only when ``antisym_only``)."""
    if len(shape) == 0:
        return [((), "")]
    out = []
    for idx in np.ndindex(*shape):
        if antisym_only and not idx[0] < idx[1]:
            continue
        out.append((idx, ",".join(map(str, idx))))
    return out


@dataclass
class ExperimentReport:
    kind: str
    metadata: dict = field(default_factory=dict)
    statistics: list = field(default_factory=list)
    notices: list = field(default_factory=list)

    def add(self, name, value, **kw):
        self.statistics.append(Statistic(name, kw.pop("component", ""), float(value), **kw))

    def add_array(self, name, values, se=None, target=None, antisym_only=False, **kw):
        """One row per component of ``values`` (paired with ``se``/``target`` entries)."""
        values = np.asarray(values, dtype=float)
        se = None if se is None else np.broadcast_to(np.asarray(se, dtype=float), values.shape)
        target = None if target is None else np.broadcast_to(np.asarray(target, dtype=float),
                                                             values.shape)
        for idx, label in component_names(values.shape, antisym_only):
            self.statistics.append(Statistic(
                name, label, float(values[idx]),
                se=None if se is None else float(se[idx]),
                target=None if target is None else float(target[idx]), **kw))

    def get(self, name, component=""):
        for s in self.statistics:
            if s.statistic == name and s.component == component:
                return s
        raise KeyError((name, component))

    def select(self, name):
        return [s for s in self.statistics if s.statistic == name]

    @property
    def failures(self):
        return [s for s in self.statistics if s.passed is False]

    @property
    def passed(self):
        return not self.failures

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        wr.writeheader()
        for s in self.statistics:
            wr.writerow(s.row())
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return repr(x)
            return x

        rows = [{k: clean(v) for k, v in {**asdict(s), "z": s.z, "pass": s.passed,
                                          "tolerance": s.tolerance}.items()}
                for s in self.statistics]
        return json.dumps({"kind": self.kind, "metadata": self.metadata,
                           "notices": self.notices, "passed": self.passed,
                           "statistics": rows}, indent=2, sort_keys=True) + "\n"

    def write(self, path, fmt="csv"):
        text = self.to_json() if fmt == "json" else self.to_csv()
        with open(path, "w", newline="") as fh:
            fh.write(text)

    def summary(self) -> str:
        judged = [s for s in self.statistics if s.passed is not None]
        lines = [f"{self.kind}: {len(judged) - len(self.failures)}/{len(judged)} checks passed"]
        lines += [f"  FAIL {s.statistic}[{s.component}] value={s.value:.6g} target={s.target} "
                  f"se={s.se} ({s.tolerance})" for s in self.failures]
        return "\n".join(lines)
