"""Scenario description, figure presets, sweep execution and result files.

A :class:`Scenario` holds a symmetric user template, an optional sweep axis
and optional named series (sets of overrides).  :func:`run_scenario`
evaluates every (series, sweep point, receiver) triple.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from armimo.config import SystemConfig, UserParams, db_to_amplitude
from armimo.errors import ArmimoError, ConfigError, OutOfDomain, UnknownPreset
from armimo.montecarlo import McSetup, simulate_kinds
from armimo.pilot import PilotOptProblem, optimal_pilot_power
from armimo.receivers import ReceiverKind
from armimo.sinr import PhiFamily, det_equiv_general, theorem2_root

SWEEP_VARS = ("P_p", "a", "K", "N_r", "a_hat")
REFERENCE_POWER_MW = 100.0

CSV_HEADER = ("sweep_var", "sweep_value", "receiver", "mc_mean_db", "ci_lo_db", "ci_hi_db",
              "deq_thm2_db", "deq_fp_db", "fp_iters", "trials", "seed",
              "series", "pilot_power_mw", "error")


def reference_noise(path_loss_db: float = 90.0, snr_ref_db: float = 0.0,
                    P_ref: float = REFERENCE_POWER_MW) -> float:
    """Noise variance at which ``alpha^2 P_ref / sigma^2`` equals ``snr_ref_db``."""
    return db_to_amplitude(path_loss_db) ** 2 * P_ref / 10.0 ** (snr_ref_db / 10.0)


def parse_range(text: str) -> tuple:
    """``"0:0.05:0.95"`` (start:step:stop, inclusive) or ``"1,3,10"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(round(start + i * step, 12)) for i in range(n))
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}") from None


@dataclass(frozen=True)
class Sweep:
    var: str
    values: tuple

    def __post_init__(self):
        if self.var not in SWEEP_VARS:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARS}, got {self.var!r}")
        if len(self.values) == 0:
            raise ConfigError("sweep grid is empty")
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def parse(cls, raw) -> "Sweep":
        if isinstance(raw, Sweep):
            return raw
        if isinstance(raw, str):
            var, _, rng = raw.partition("=")
            return cls(var.strip(), parse_range(rng))
        if isinstance(raw, dict):
            extra = set(raw) - {"var", "values"}
            if extra:
                raise ConfigError(f"unknown sweep keys {sorted(extra)}")
            vals = raw.get("values")
            vals = parse_range(vals) if isinstance(vals, str) else tuple(vals or ())
            return cls(raw.get("var"), vals)
        raise ConfigError(f"bad sweep specification {raw!r}")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one experiment.

    ``P_p="optimal"`` uses the SINR-optimal pilot power of the symmetric
    system.  ``nr_per_k`` ties the antenna count to ``K`` (``N_r = nr_per_k * K``).
    ``sigma_p2``/``sigma_d2`` default to :func:`reference_noise`.
    """

    name: str = "custom"
    K: int = 5
    N_r: int = 100
    tau_p: int = 1
    tau_d: int = 11
    P_tot: float = 250.0
    path_loss_db: float = 90.0
    snr_ref_db: float = 0.0
    sigma_p2: float | None = None
    sigma_d2: float | None = None
    a: float = 0.0
    c: float = 1.0
    P_p: Any = 100.0
    assumed_a: float | None = None
    receivers: tuple = ("Proposed",)
    trials: int = 1000
    master_seed: int = 0
    threads: int = 1
    sweep: Sweep | None = None
    series: tuple = ()
    nr_per_k: int | None = None
    cdf: bool = False
    det_equiv: bool = True

    def __post_init__(self):
        kinds = tuple(ReceiverKind(k) for k in self.receivers) if self.receivers else ()
        object.__setattr__(self, "receivers", kinds)
        if self.sweep is not None and not isinstance(self.sweep, Sweep):
            object.__setattr__(self, "sweep", Sweep.parse(self.sweep))
        series = []
        for s in self.series:
            s = dict(s)
            bad = set(s) - {"label"} - set(_OVERRIDABLE)
            if bad:
                raise ConfigError(f"unknown series keys {sorted(bad)}")
            series.append(s)
        object.__setattr__(self, "series", tuple(series))
        if self.trials < 0 or self.threads < 1:
            raise ConfigError("trials must be >= 0 and threads >= 1")
        if not (self.P_p == "optimal" or isinstance(self.P_p, (int, float))):
            raise ConfigError("P_p must be a number or 'optimal'")

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def noise(self) -> tuple:
        ref = reference_noise(self.path_loss_db, self.snr_ref_db)
        return (ref if self.sigma_p2 is None else self.sigma_p2,
                ref if self.sigma_d2 is None else self.sigma_d2)


_OVERRIDABLE = ("K", "N_r", "a", "c", "P_p", "assumed_a", "nr_per_k", "path_loss_db",
                "snr_ref_db", "sigma_p2", "sigma_d2", "tau_p", "tau_d", "P_tot")


@dataclass
class ResultRow:
    sweep_var: str
    sweep_value: float
    receiver: str
    mc_mean_db: float = float("nan")
    ci_lo_db: float = float("nan")
    ci_hi_db: float = float("nan")
    deq_thm2_db: float = float("nan")
    deq_fp_db: float = float("nan")
    fp_iters: int = 0
    trials: int = 0
    seed: int = 0
    series: str = ""
    pilot_power_mw: float = float("nan")
    error: str = ""
    cdf: list | None = None


def to_db(x: float) -> float:
    """``10 log10(x)``; NaN for non-positive or missing input."""
    return 10.0 * math.log10(x) if x is not None and x > 0 and math.isfinite(x) else float("nan")


def _point_scenario(sc: Scenario, overrides: dict, var: str | None, value) -> Scenario:
    changes = {k: v for k, v in overrides.items() if k != "label"}
    if var == "a_hat":
        changes["assumed_a"] = value
    elif var in ("K", "N_r"):
        changes[var] = int(value)
    elif var is not None:
        changes[var] = value
    pt = sc.replace(**changes)
    if pt.nr_per_k is not None:
        pt = pt.replace(N_r=int(pt.nr_per_k * pt.K))
    return pt


def _evaluate_point(pt: Scenario, series: str, var: str, value, run_mc: bool) -> list:
    sp2, sd2 = pt.noise()
    base = dict(sweep_var=var, sweep_value=float(value), series=series, seed=pt.master_seed,
                trials=pt.trials if run_mc else 0)
    kinds = pt.receivers or (ReceiverKind.PROPOSED,)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # K > tau_p is the normal operating point here
        cfg = SystemConfig(K=pt.K, N_r=pt.N_r, tau_p=pt.tau_p, tau_d=pt.tau_d, P_tot=pt.P_tot,
                           sigma_p2=sp2, sigma_d2=sd2)
    try:
        if pt.P_p == "optimal":
            prob = PilotOptProblem.from_config(cfg, a=pt.a, c=pt.c, path_loss_db=pt.path_loss_db)
            P_p = optimal_pilot_power(prob).P_p
        else:
            P_p = float(pt.P_p)
        users = [UserParams.from_budget(cfg, P_p, a=pt.a, c=pt.c, path_loss_db=pt.path_loss_db)
                 for _ in range(pt.K)]
    except (OutOfDomain, ConfigError) as exc:
        return [ResultRow(receiver=str(k), error=f"{type(exc).__name__}: {exc}", **base)
                for k in kinds]

    rows = {k: ResultRow(receiver=str(k), pilot_power_mw=P_p, **base) for k in kinds}
    mismatch = pt.assumed_a is not None and pt.assumed_a != pt.a
    if pt.det_equiv and ReceiverKind.PROPOSED in rows and not mismatch:
        u = users
        fam = PhiFamily.iid([x.c for x in u], [x.a for x in u], [x.pilot_noise(cfg) for x in u],
                            [x.alpha for x in u], [x.P for x in u], cfg.sigma_d2, cfg.N_r)
        row = rows[ReceiverKind.PROPOSED]
        row.deq_thm2_db = to_db(theorem2_root(fam.phi, fam.phis, fam.beta, cfg.N_r))
        g_fp, state = det_equiv_general(fam)
        row.deq_fp_db, row.fp_iters = to_db(g_fp), state.iterations
    if run_mc:
        res = simulate_kinds(McSetup(cfg, users, assumed_a=pt.assumed_a), kinds, pt.trials,
                             pt.master_seed, threads=pt.threads, with_cdf=pt.cdf)
        for k, r in res.items():
            row = rows[k]
            if r.error:
                row.error = r.error
                continue
            row.mc_mean_db, row.ci_lo_db, row.ci_hi_db = to_db(r.mean), to_db(r.ci_lo), to_db(r.ci_hi)
            if r.cdf is not None:
                row.cdf = [to_db(v) for v in r.cdf]
    return list(rows.values())


def run_scenario(sc: Scenario, analysis_only: bool = False) -> list:
    """Evaluate ``sc`` at every series and sweep point.

    Monte Carlo runs unless ``analysis_only`` is set or ``sc.trials == 0``.
    Infeasible pilot powers produce rows with ``error`` set.  Module errors
    are re-raised with the point attached.
    """
    run_mc = not analysis_only and sc.trials > 0
    series = sc.series or ({"label": ""},)
    var = sc.sweep.var if sc.sweep else ""
    values = sc.sweep.values if sc.sweep else (float("nan"),)
    rows = []
    for ov in series:
        label = str(ov.get("label", ""))
        for v in values:
            pt = _point_scenario(sc, ov, var or None, v)
            try:
                rows.extend(_evaluate_point(pt, label, var, v, run_mc))
            except ArmimoError as exc:
                raise type(exc)(f"[{sc.name} series={label!r} {var}={v}] {exc}") from exc
    return rows


# --- presets ----------------------------------------------------------------

_ALL_KINDS = tuple(k.value for k in ReceiverKind)


def _fig1():
    return Scenario(name="fig1", K=5, N_r=100, P_p=100.0, a=0.95, receivers=_ALL_KINDS,
                    trials=10_000, cdf=True)


def _fig2():
    return Scenario(name="fig2", K=5, N_r=100, a=0.95,
                    receivers=("Proposed", "ArAwareCov", "ConventionalInst"), trials=10_000,
                    sweep=Sweep("P_p", (5.0, 10.0, 20.0, 50.0, 100.0, 150.0, 200.0, 240.0)))


def _fig3():
    grid = tuple(round(0.1 * i, 1) for i in range(10)) + (0.95,)
    return Scenario(name="fig3", K=5, N_r=100, P_p=100.0,
                    receivers=("Proposed", "ArAwareCov", "ConventionalInst", "ConventionalCov"),
                    trials=2000, sweep=Sweep("a", grid))


def _fig4():
    series = tuple({"label": f"K={k},N_r={n}", "K": k, "N_r": n}
                   for n in (20, 100) for k in (1, 3, 10, 20, 50))
    return Scenario(name="fig4", P_p="optimal", trials=0, series=series,
                    sweep=Sweep("a", tuple(round(0.05 * i, 2) for i in range(20))))


def _fig5():
    series = tuple({"label": f"K={k},N_r={n}", "K": k, "N_r": n}
                   for n, k in ((20, 3), (20, 10), (100, 10), (100, 50)))
    return Scenario(name="fig5", P_p="optimal", trials=0, series=series,
                    sweep=Sweep("a", tuple(round(0.05 * i, 2) for i in range(20))))


def _fig6():
    series = tuple({"label": f"a={a},N_r={m}K", "a": a, "nr_per_k": m}
                   for m in (2, 3) for a in (0.0, 0.5, 0.95))
    return Scenario(name="fig6", P_p="optimal", trials=0, series=series,
                    sweep=Sweep("K", (5.0, 10.0, 20.0)))


def _fig7():
    grid = (0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95)
    series = tuple({"label": f"a={a}", "a": a} for a in grid)
    return Scenario(name="fig7", K=5, N_r=20, P_p=100.0, receivers=("Proposed", "ConventionalInst"),
                    trials=4000, series=series, sweep=Sweep("a_hat", grid))


def _fig89(a: float, name: str):
    series = tuple({"label": f"K={k},N_r={n}", "K": k, "N_r": n}
                   for k in (1, 10) for n in (10, 50, 100))
    grid = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 150.0, 200.0, 240.0)
    return Scenario(name=name, a=a, trials=0, series=series, sweep=Sweep("P_p", grid))


PRESETS = {
    "fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6": _fig6,
    "fig7": _fig7, "fig8": lambda: _fig89(0.0, "fig8"), "fig9": lambda: _fig89(0.95, "fig9"),
}


def figure_preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def metadata(sc: Scenario) -> dict:
    """Normalization and reproducibility facts recorded alongside results."""
    sp2, sd2 = sc.noise()
    return {"scenario": sc.name, "sigma_p2": sp2, "sigma_d2": sd2, "c": sc.c,
            "path_loss_db": sc.path_loss_db, "snr_ref_db": sc.snr_ref_db,
            "reference_power_mw": REFERENCE_POWER_MW, "tau_p": sc.tau_p, "tau_d": sc.tau_d,
            "P_tot": sc.P_tot, "master_seed": sc.master_seed, "trials": sc.trials,
            "sinr_db": "10*log10"}


# --- emission -------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def emit(rows: Sequence[ResultRow], fmt: str, path, meta: dict | None = None) -> None:
    """Write rows as CSV (fixed header, 9 significant digits) or JSON (full precision).

    ``path`` may also be an open text stream.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    if hasattr(path, "write"):
        _emit_stream(rows, fmt, path, meta)
        return
    with Path(path).open("w", newline="") as fh:
        _emit_stream(rows, fmt, fh, meta)


def _emit_stream(rows, fmt, fh, meta):
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([_fmt(getattr(r, col)) for col in CSV_HEADER])
    else:
        payload = {"metadata": meta or {}, "columns": list(CSV_HEADER) + ["cdf"],
                   "rows": [_json_row(r) for r in rows]}
        fh.write(json.dumps(payload, indent=1) + "\n")


def _json_row(r: ResultRow) -> dict:
    return dataclasses.asdict(r)


def load_json(path) -> list:
    """Inverse of ``emit(..., "json", ...)``."""
    data = json.loads(Path(path).read_text())
    return [ResultRow(**d) for d in data["rows"]]


def read_csv(path) -> list:
    """Parse an emitted CSV back into rows (CDFs are not stored in CSV)."""
    ints = {"fp_iters", "trials", "seed"}
    strs = {"sweep_var", "receiver", "series", "error"}
    with Path(path).open(newline="") as fh:
        rd = csv.DictReader(fh, strict=True)
        if tuple(rd.fieldnames or ()) != CSV_HEADER:
            raise ConfigError("unexpected CSV header")
        out = []
        for d in rd:
            kw = {k: (v if k in strs else int(v) if k in ints else float(v)) for k, v in d.items()}
            out.append(ResultRow(**kw))
    return out


# --- config files -----------------------------------------------------------------

_SCENARIO_KEYS = {f.name for f in dataclasses.fields(Scenario)}


def scenario_from_dict(d: dict) -> Scenario:
    """Build a scenario from a mapping; ``preset`` names a base preset to override."""
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    d = dict(d)
    preset = d.pop("preset", None)
    unknown = set(d) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "receivers" in d:
        d["receivers"] = tuple(d["receivers"])
    if "series" in d:
        d["series"] = tuple(d["series"])
    if d.get("sweep") is not None:
        d["sweep"] = Sweep.parse(d["sweep"])
    try:
        base = figure_preset(preset) if preset else Scenario()
        return base.replace(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> Scenario:
    import yaml

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return scenario_from_dict(data)
