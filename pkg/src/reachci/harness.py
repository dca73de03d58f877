"""Experiment runner: grid sweeps, convergence traces, discrepancy panels.

Every operation consumes an :class:`ExperimentManifest` and emits a CSV
table plus an SVG panel into the manifest's output directory.  The CSV is
the source of truth: rows are sorted canonically, floats are written in
shortest-repr form, and the SVG is rendered *from the parsed CSV*, so a
byte-identical CSV guarantees a byte-identical figure and plots can be
regenerated offline.

Grid cells (probability x confidence x method) are independent jobs; a
thread pool executes them in whatever order, with each cell's randomness
derived by hashing (master seed, cell coordinates), so the output never
depends on scheduling.

The module also hosts ``selftest()``: a dependency-free equivalence suite
that re-derives each interval method's endpoints from its defining
equation (quantile inversions are pushed through the forward CDF, exact
tails are re-summed from binomial coefficients) and cross-checks a few
frozen stream/discrepancy/engine anchors.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .engine import SAMPLERS, StoppingRule, averaged_runs, default_sampler, sequential_estimate
from .estimators import Integrand
from .intervals import METHODS, BernoulliSummary
from .models import BernoulliOracle, GoodBadModel, ModelKind, good_bad_probability
from .qint import qint_interval
from .sequences import (
    PseudoRandomGenerator,
    SobolGenerator,
    randomize_shift,
    star_discrepancy_2d,
)
from .special import betainc_reg, normal_cdf, normal_quantile

try:  # stdlib from 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

__all__ = [
    "KINDS",
    "CONFIDENCE_GRID",
    "BORDER_GRID",
    "DEFAULT_METHODS",
    "ROW_COLUMNS",
    "ExperimentManifest",
    "RunArtifacts",
    "load_manifest",
    "loads_manifest",
    "save_manifest",
    "cell_seed",
    "parse_rows_csv",
    "run_border_sweep",
    "run_probability_sweep",
    "run_table_row",
    "run_convergence",
    "run_discrepancy",
    "convergence_rows",
    "selftest",
]

KINDS = (
    "border-sweep",
    "probability-sweep",
    "table-row",
    "convergence",
    "discrepancy",
)

CONFIDENCE_GRID = (0.99, 0.999, 0.9999, 0.99999)
BORDER_GRID = tuple(round(0.001 * i, 3) for i in range(1, 11))
DEFAULT_METHODS = tuple(METHODS) + ("qint",)

ROWS_SCHEMA = "rows-v1"
POINTS_SCHEMA = "points-v1"
ROW_COLUMNS = (
    "experiment",
    "model",
    "p_true",
    "confidence",
    "method",
    "sampler",
    "run_index",
    "lo",
    "hi",
    "center",
    "n_used",
    "seed",
)

# sample-count grid of the convergence figures (three log decades)
CONVERGENCE_GRID = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


# ------------------------------------------------------------------ manifest


@dataclass(frozen=True)
class ExperimentManifest:
    """One replayable experiment: what to run, on what grid, where to."""

    kind: str
    probabilities: Tuple[float, ...]
    confidences: Tuple[float, ...] = CONFIDENCE_GRID
    half_width: float = 5e-3
    methods: Tuple[str, ...] = DEFAULT_METHODS
    sampler: Optional[str] = None
    runs: int = 10
    master_seed: int = 0
    out_dir: str = "."

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; known: {list(KINDS)}")
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        object.__setattr__(self, "confidences", tuple(float(c) for c in self.confidences))
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        if not self.probabilities:
            raise ValueError("probability grid must not be empty")
        for p in self.probabilities:
            if not (0.0 < p < 1.0):
                raise ValueError(f"probabilities must lie in (0, 1), got {p!r}")
        if not self.confidences:
            raise ValueError("confidence grid must not be empty")
        for c in self.confidences:
            if not (0.0 < c < 1.0):
                raise ValueError(f"confidences must lie in (0, 1), got {c!r}")
        if not self.half_width > 0.0:
            raise ValueError(f"half_width must be positive, got {self.half_width!r}")
        known = set(METHODS) | {"qint"}
        for m in self.methods:
            if m not in known:
                raise ValueError(f"unknown method {m!r}; known: {sorted(known)}")
        if not self.methods:
            raise ValueError("methods list must not be empty")
        if self.sampler is not None:
            if self.sampler not in SAMPLERS:
                raise ValueError(f"unknown sampler {self.sampler!r}; known: {list(SAMPLERS)}")
            if "qint" in self.methods and self.sampler != "QINT":
                raise ValueError("a manifest forcing a sampler cannot include qint")
            if self.sampler == "QINT" and set(self.methods) != {"qint"}:
                raise ValueError("the QINT sampler runs the qint method only")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs!r}")

    def to_toml(self) -> str:
        """Serialize as the key = value text accepted by load_manifest."""
        out = [f'kind = "{self.kind}"']
        out.append("probabilities = [" + ", ".join(repr(p) for p in self.probabilities) + "]")
        out.append("confidences = [" + ", ".join(repr(c) for c in self.confidences) + "]")
        out.append(f"half_width = {self.half_width!r}")
        out.append("methods = [" + ", ".join(f'"{m}"' for m in self.methods) + "]")
        if self.sampler is not None:
            out.append(f'sampler = "{self.sampler}"')
        out.append(f"runs = {self.runs}")
        out.append(f"master_seed = {self.master_seed}")
        out.append(f'out_dir = "{self.out_dir}"')
        return "\n".join(out) + "\n"


def loads_manifest(text: str) -> ExperimentManifest:
    data = tomllib.loads(text)
    known = {f.name for f in fields(ExperimentManifest)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
    if "kind" not in data:
        raise ValueError("manifest must declare an experiment kind")
    if "probabilities" not in data:
        raise ValueError("manifest must declare a probability grid")
    for key in ("probabilities", "confidences", "methods"):
        if key in data:
            data[key] = tuple(data[key])
    return ExperimentManifest(**data)


def load_manifest(path) -> ExperimentManifest:
    return loads_manifest(Path(path).read_text())


def save_manifest(manifest: ExperimentManifest, path) -> None:
    Path(path).write_text(manifest.to_toml())


# --------------------------------------------------------------- cell seeds


def cell_seed(master_seed: int, *coordinates) -> int:
    """Deterministic 64-bit seed from (master seed, cell coordinates).

    Coordinates are canonicalized through repr for floats so that the seed
    depends on values, not on formatting or execution order.
    """
    parts = [str(int(master_seed))]
    for c in coordinates:
        parts.append(repr(float(c)) if isinstance(c, float) else str(c))
    digest = hashlib.sha256("|".join(parts).encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


# ------------------------------------------------------------------ CSV I/O


class ResultRow(NamedTuple):
    experiment: str
    model: str
    p_true: float
    confidence: float
    method: str
    sampler: str
    run_index: int
    lo: float
    hi: float
    center: float
    n_used: float
    seed: int


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_rows_csv(rows: Sequence[ResultRow]) -> str:
    """Canonically sorted, byte-stable CSV text for a row set."""
    buf = io.StringIO()
    buf.write(f"# schema: {ROWS_SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_COLUMNS)
    for row in sorted(rows):
        writer.writerow([_format_value(v) for v in row])
    return buf.getvalue()


def parse_rows_csv(text: str) -> List[ResultRow]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != ROW_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    rows = []
    for rec in reader:
        rows.append(
            ResultRow(
                experiment=rec[0],
                model=rec[1],
                p_true=float(rec[2]),
                confidence=float(rec[3]),
                method=rec[4],
                sampler=rec[5],
                run_index=int(rec[6]),
                lo=float(rec[7]),
                hi=float(rec[8]),
                center=float(rec[9]),
                n_used=float(rec[10]),
                seed=int(rec[11]),
            )
        )
    return rows


class RunArtifacts(NamedTuple):
    csv_path: Path
    svg_path: Optional[Path]
    rows: Tuple[ResultRow, ...]


def _write_artifacts(
    manifest: ExperimentManifest,
    stem: str,
    rows: Sequence[ResultRow],
    svg_builder,
) -> RunArtifacts:
    out_dir = Path(manifest.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    csv_text = format_rows_csv(rows)
    csv_path.write_text(csv_text)
    svg_path = None
    if svg_builder is not None:
        # the figure is a pure function of the CSV text on disk
        parsed = parse_rows_csv(csv_text)
        svg_path = out_dir / f"{stem}.svg"
        svg_path.write_text(svg_builder(parsed))
    return RunArtifacts(csv_path=csv_path, svg_path=svg_path, rows=tuple(sorted(rows)))


# ------------------------------------------------------------ grid sweeps


def _oracle_factories(model: str):
    if model == "bernoulli":
        return lambda p: BernoulliOracle(p_true=p)
    if model == "good-band":
        # the band's measure is 0.1 for every parameter; callers must pass
        # the parameter, and rows record the analytic probability
        return lambda t: GoodBadModel(ModelKind.GOOD, n_param=t)
    if model == "bad-threshold":
        return lambda t: GoodBadModel(ModelKind.BAD, n_param=t)
    raise ValueError(f"unknown model tag {model!r}")


def _run_cell_grid(manifest: ExperimentManifest, experiment: str, model: str) -> List[ResultRow]:
    """Averaged sequential runs over the (p, c, method) grid; one row per cell."""
    make = _oracle_factories(model)
    cells = [
        (p, c, m)
        for p in manifest.probabilities
        for c in manifest.confidences
        for m in manifest.methods
    ]

    def run_cell(cell) -> ResultRow:
        p, c, m = cell
        sampler = manifest.sampler or default_sampler(m)
        oracle = make(p)
        p_true = oracle.probability if hasattr(oracle, "probability") else p
        base = cell_seed(manifest.master_seed, experiment, model, p, c, m, sampler)
        rule = StoppingRule(confidence=c, half_width=manifest.half_width)
        rep = averaged_runs(
            oracle, m, rule, manifest.sampler, runs=manifest.runs,
            master_seed=np.random.SeedSequence(base),
        )
        return ResultRow(
            experiment=experiment,
            model=model,
            p_true=float(p_true),
            confidence=c,
            method=m,
            sampler=sampler,
            run_index=-1,  # aggregate over manifest.runs runs
            lo=rep.mean_lo,
            hi=rep.mean_hi,
            center=0.5 * (rep.mean_lo + rep.mean_hi),
            n_used=rep.mean_n_used,
            seed=base,
        )

    with ThreadPoolExecutor(max_workers=min(8, os.cpu_count() or 1)) as pool:
        return list(pool.map(run_cell, cells))


def run_border_sweep(manifest: ExperimentManifest) -> RunArtifacts:
    """Near-zero probability sweep: averaged intervals per (p, c, method)."""
    if manifest.kind != "border-sweep":
        raise ValueError(f"manifest kind {manifest.kind!r} is not border-sweep")
    for p in manifest.probabilities:
        if not (0.0 < p <= 0.05):
            raise ValueError(f"border sweep probabilities must lie in (0, 0.05], got {p!r}")
    rows = _run_cell_grid(manifest, "border-sweep", "bernoulli")
    return _write_artifacts(manifest, "border_sweep", rows, _svg_interval_panels)


def run_probability_sweep(manifest: ExperimentManifest) -> RunArtifacts:
    """Full-range sweep of n_used per method across the probability grid."""
    if manifest.kind != "probability-sweep":
        raise ValueError(f"manifest kind {manifest.kind!r} is not probability-sweep")
    rows = _run_cell_grid(manifest, "probability-sweep", "bernoulli")
    return _write_artifacts(manifest, "probability_sweep", rows, _svg_sample_counts)


def run_table_row(manifest: ExperimentManifest, model: str = "bad-threshold") -> RunArtifacts:
    """Analytic-model rows (band or threshold) on the manifest grid.

    For ``bad-threshold`` the grid entries are the model *parameters*; use
    :func:`reachci.models.bad_param_for_probability` to target a probability.
    For ``good-band`` the analytic probability is 0.1 at every parameter.
    """
    if manifest.kind != "table-row":
        raise ValueError(f"manifest kind {manifest.kind!r} is not table-row")
    if model not in ("good-band", "bad-threshold"):
        raise ValueError(f"table rows need good-band or bad-threshold, got {model!r}")
    rows = _run_cell_grid(manifest, "table-row", model)
    return _write_artifacts(manifest, "table_row", rows, _svg_interval_panels)


# ------------------------------------------------------------- convergence


def convergence_rows(
    integrand: Integrand,
    true_value: float,
    model: str,
    *,
    n_grid: Sequence[int] = CONVERGENCE_GRID,
    mc_seeds: Sequence[int] = (0,),
    experiment: str = "convergence",
) -> List[ResultRow]:
    """MC and QMC running-mean rows along a sample-count grid.

    The absolute error of each point is ``abs(center - p_true)``; rows
    carry the estimates so the error curves can be rebuilt from the CSV.
    """
    if not n_grid:
        raise ValueError("empty sample-count grid")
    n_max = max(n_grid)
    rows: List[ResultRow] = []

    def prefix_rows(values: np.ndarray, sampler: str, run_index: int, seed: int):
        csum = np.cumsum(values)
        for n in n_grid:
            est = float(csum[n - 1] / n)
            rows.append(
                ResultRow(
                    experiment=experiment,
                    model=model,
                    p_true=float(true_value),
                    confidence=0.0,  # plain running means carry no interval
                    method="mean",
                    sampler=sampler,
                    run_index=run_index,
                    lo=est,
                    hi=est,
                    center=est,
                    n_used=n,
                    seed=seed,
                )
            )

    for idx, seed in enumerate(mc_seeds):
        gen = PseudoRandomGenerator(seed)
        prefix_rows(integrand.evaluate(gen.take(n_max, integrand.dimension)), "MC", idx, seed)
    qmc_vals = integrand.evaluate(SobolGenerator(integrand.dimension).take(n_max))
    prefix_rows(qmc_vals, "QMC", -1, 0)
    return rows


def run_convergence(manifest: ExperimentManifest) -> RunArtifacts:
    """MC-vs-QMC error traces for both analytic models at each grid value.

    Grid entries are model parameters: the band keeps measure 0.1 while its
    position moves; the threshold model's probability is the parameter
    itself.  MC gets ``manifest.runs`` seeded traces, QMC one deterministic
    trace.
    """
    if manifest.kind != "convergence":
        raise ValueError(f"manifest kind {manifest.kind!r} is not convergence")
    rows: List[ResultRow] = []
    for t in manifest.probabilities:
        for model_tag, oracle, truth in (
            (f"good-band:{t!r}", GoodBadModel(ModelKind.GOOD, n_param=t),
             good_bad_probability(ModelKind.GOOD, t)),
            (f"bad-threshold:{t!r}", BernoulliOracle(p_true=t), t),
        ):
            seeds = [
                cell_seed(manifest.master_seed, "convergence", model_tag, "MC", i)
                % 2**32
                for i in range(manifest.runs)
            ]
            rows.extend(
                convergence_rows(
                    oracle.as_integrand(), truth, model_tag, mc_seeds=seeds
                )
            )
    return _write_artifacts(manifest, "convergence", rows, _svg_error_traces)


# -------------------------------------------------------------- discrepancy


def run_discrepancy(manifest: ExperimentManifest, n: int = 300) -> RunArtifacts:
    """Exact star discrepancy of Sobol / shifted-Sobol / pseudorandom sets.

    ``manifest.runs`` controls how many pseudorandom sets are scored (the
    reference comparison uses 20).  A companion points CSV carries the
    first three point sets for the scatter panel.
    """
    if manifest.kind != "discrepancy":
        raise ValueError(f"manifest kind {manifest.kind!r} is not discrepancy")
    if not (1 <= n <= 500):
        raise ValueError(f"exact discrepancy needs 1 <= n <= 500, got {n}")
    sobol_pts = SobolGenerator(2).take(n)
    shift_seed = cell_seed(manifest.master_seed, "discrepancy", "shift")
    shift = PseudoRandomGenerator(np.random.SeedSequence(shift_seed)).take(1, 2)[0]
    shifted_pts = randomize_shift(sobol_pts, shift)

    def d_row(sampler: str, pts: np.ndarray, run_index: int, seed: int) -> ResultRow:
        d = star_discrepancy_2d(pts)
        return ResultRow(
            experiment="discrepancy",
            model="unit-square",
            p_true=0.0,
            confidence=0.0,
            method="star-discrepancy",
            sampler=sampler,
            run_index=run_index,
            lo=d,
            hi=d,
            center=d,
            n_used=n,
            seed=seed,
        )

    rows = [d_row("QMC", sobol_pts, -1, 0), d_row("RQMC", shifted_pts, -1, shift_seed)]
    pseudo_sets = []
    for i in range(manifest.runs):
        seed = cell_seed(manifest.master_seed, "discrepancy", "pseudorandom", i)
        pts = PseudoRandomGenerator(np.random.SeedSequence(seed)).take(n, 2)
        pseudo_sets.append(pts)
        rows.append(d_row("MC", pts, i, seed))

    artifacts = _write_artifacts(manifest, "discrepancy", rows, None)
    points_path = Path(manifest.out_dir) / "discrepancy_points.csv"
    buf = io.StringIO()
    buf.write(f"# schema: {POINTS_SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("point_set", "index", "x", "y"))
    for name, pts in (
        ("sobol", sobol_pts),
        ("shifted-sobol", shifted_pts),
        ("pseudorandom", pseudo_sets[0]),
    ):
        for i, (x, y) in enumerate(pts):
            writer.writerow((name, i, repr(float(x)), repr(float(y))))
    points_path.write_text(buf.getvalue())
    svg_path = Path(manifest.out_dir) / "discrepancy.svg"
    svg_path.write_text(_svg_point_sets(points_path.read_text(), artifacts.rows))
    return RunArtifacts(csv_path=artifacts.csv_path, svg_path=svg_path, rows=artifacts.rows)


# ------------------------------------------------------------------ figures

_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def _svg_doc(width: float, height: float, body: List[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}" '
        f'font-family="monospace" font-size="10">'
    )
    return "\n".join([head, f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>']
                     + body + ["</svg>"]) + "\n"


def _text(x: float, y: float, s: str, anchor: str = "start", size: int = 10) -> str:
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
        f'font-size="{size}">{s}</text>'
    )


def _line(x1, y1, x2, y2, color: str, width: float = 1.0, dash: str = "") -> str:
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
        f'stroke="{color}" stroke-width="{_fmt(width)}"{d}/>'
    )


def _polyline(points: Sequence[Tuple[float, float]], color: str) -> str:
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'


def _method_colors(methods: Sequence[str]) -> Dict[str, str]:
    return {m: _PALETTE[i % len(_PALETTE)] for i, m in enumerate(sorted(set(methods)))}


def _svg_interval_panels(rows: Sequence[ResultRow]) -> str:
    """One panel per confidence: interval whiskers grouped by probability."""
    confidences = sorted({r.confidence for r in rows})
    methods = sorted({r.method for r in rows})
    colors = _method_colors(methods)
    panel_w, panel_h, margin = 640.0, 150.0, 40.0
    body: List[str] = []
    for k, m in enumerate(methods):
        body.append(_text(margin + 90.0 * (k % 6), 12 + 12 * (k // 6), m, size=9))
        body.append(
            _line(margin - 6 + 90.0 * (k % 6), 9 + 12 * (k // 6),
                  margin - 2 + 90.0 * (k % 6), 9 + 12 * (k // 6), colors[m], 3)
        )
    top = 14 + 12 * ((len(methods) + 5) // 6)
    for pi, c in enumerate(confidences):
        sub = [r for r in rows if r.confidence == c]
        ps = sorted({r.p_true for r in sub})
        y0 = top + pi * (panel_h + margin)
        y1 = y0 + panel_h
        hi_max = max(r.hi for r in sub) or 1.0
        x_of = lambda slot, nslots: margin + (panel_w - 2 * margin) * (slot + 0.5) / nslots
        y_of = lambda v: y1 - (v / (hi_max * 1.05)) * (panel_h - 10)
        body.append(_line(margin, y1, panel_w - margin, y1, "#333"))
        body.append(_text(margin, y0 + 10, f"confidence {c}", size=11))
        nslots = len(ps) * len(methods)
        for i, p in enumerate(ps):
            for j, m in enumerate(methods):
                cell = [r for r in sub if r.p_true == p and r.method == m]
                if not cell:
                    continue
                r = cell[0]
                x = x_of(i * len(methods) + j, nslots)
                body.append(_line(x, y_of(r.lo), x, y_of(r.hi), colors[m], 1.5))
                body.append(_line(x - 2, y_of(r.center), x + 2, y_of(r.center), colors[m], 1.5))
            xg = x_of(i * len(methods) + len(methods) / 2 - 0.5, nslots)
            body.append(_text(xg, y1 + 12, _fmt(p), anchor="middle", size=9))
            truth = [r for r in sub if r.p_true == p]
            body.append(
                _line(x_of(i * len(methods), nslots) - 4, y_of(truth[0].p_true),
                      x_of(i * len(methods) + len(methods) - 1, nslots) + 4,
                      y_of(truth[0].p_true), "#999", 0.7, dash="3,2")
            )
    height = top + len(confidences) * (panel_h + margin)
    return _svg_doc(panel_w, height, body)


def _svg_sample_counts(rows: Sequence[ResultRow]) -> str:
    """log10 n_used against p, one polyline per (method, confidence)."""
    methods = sorted({r.method for r in rows})
    colors = _method_colors(methods)
    confidences = sorted({r.confidence for r in rows})
    w, h, margin = 640.0, 360.0, 50.0
    logs = [math.log10(max(r.n_used, 1.0)) for r in rows]
    lo_l, hi_l = min(logs), max(logs)
    span = (hi_l - lo_l) or 1.0
    x_of = lambda p: margin + (w - 2 * margin) * p
    y_of = lambda v: h - margin - (h - 2 * margin) * (math.log10(max(v, 1.0)) - lo_l) / span
    body = [_line(margin, h - margin, w - margin, h - margin, "#333"),
            _line(margin, margin, margin, h - margin, "#333"),
            _text(w / 2, h - 10, "probability", anchor="middle"),
            _text(12, margin - 8, "log10 samples")]
    for k, m in enumerate(methods):
        body.append(_text(margin + 90.0 * (k % 6), 12 + 12 * (k // 6), m, size=9))
        body.append(_line(margin - 6 + 90.0 * (k % 6), 9 + 12 * (k // 6),
                          margin - 2 + 90.0 * (k % 6), 9 + 12 * (k // 6), colors[m], 3))
    for c in confidences:
        for m in methods:
            pts = sorted(
                (r.p_true, r.n_used) for r in rows if r.method == m and r.confidence == c
            )
            if pts:
                body.append(_polyline([(x_of(p), y_of(nv)) for p, nv in pts], colors[m]))
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        body.append(_text(x_of(tick), h - margin + 12, _fmt(tick), anchor="middle", size=9))
    return _svg_doc(w, h, body)


def _svg_error_traces(rows: Sequence[ResultRow]) -> str:
    """Per-model log-log panels: MC median error and QMC error against n."""
    models = sorted({r.model for r in rows})
    w, panel_h, margin = 640.0, 200.0, 50.0
    floor = 1e-12
    body: List[str] = []
    for mi, model in enumerate(models):
        sub = [r for r in rows if r.model == model]
        truth = sub[0].p_true
        ns = sorted({int(r.n_used) for r in sub})
        mc_median = []
        for n in ns:
            errs = sorted(
                abs(r.center - truth) for r in sub if r.sampler == "MC" and r.n_used == n
            )
            if errs:
                mid = len(errs) // 2
                med = errs[mid] if len(errs) % 2 else 0.5 * (errs[mid - 1] + errs[mid])
                mc_median.append((n, med))
        qmc = sorted(
            (int(r.n_used), abs(r.center - truth)) for r in sub if r.sampler == "QMC"
        )
        y0 = margin + mi * (panel_h + margin)
        y1 = y0 + panel_h
        all_err = [max(e, floor) for _, e in mc_median + qmc]
        lo_e, hi_e = math.log10(min(all_err)), math.log10(max(all_err))
        span_e = (hi_e - lo_e) or 1.0
        lo_n, hi_n = math.log10(ns[0]), math.log10(ns[-1])
        span_n = (hi_n - lo_n) or 1.0
        x_of = lambda n: margin + (w - 2 * margin) * (math.log10(n) - lo_n) / span_n
        y_of = lambda e: y1 - (panel_h - 14) * (math.log10(max(e, floor)) - lo_e) / span_e
        body.append(_line(margin, y1, w - margin, y1, "#333"))
        body.append(_text(margin, y0 - 6, f"{model}  (truth {_fmt(truth)})", size=11))
        if mc_median:
            body.append(_polyline([(x_of(n), y_of(e)) for n, e in mc_median], "#d62728"))
        if qmc:
            body.append(_polyline([(x_of(n), y_of(e)) for n, e in qmc], "#1f77b4"))
        body.append(_text(w - margin, y0 + 6, "MC median", anchor="end", size=9))
        body.append(_line(w - margin - 58, y0 + 3, w - margin - 52, y0 + 3, "#d62728", 3))
        body.append(_text(w - margin, y0 + 18, "QMC", anchor="end", size=9))
        body.append(_line(w - margin - 30, y0 + 15, w - margin - 24, y0 + 15, "#1f77b4", 3))
        for n in ns:
            body.append(_text(x_of(n), y1 + 12, str(n), anchor="middle", size=8))
    height = margin + len(models) * (panel_h + margin)
    return _svg_doc(w, height, body)


def _svg_point_sets(points_csv: str, rows: Sequence[ResultRow]) -> str:
    """Three scatter boxes (Sobol, shifted Sobol, pseudorandom) with D* captions."""
    lines = [ln for ln in points_csv.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != ("point_set", "index", "x", "y"):
        raise ValueError(f"unexpected points header {header!r}")
    sets: Dict[str, List[Tuple[float, float]]] = {}
    for name, _, x, y in reader:
        sets.setdefault(name, []).append((float(x), float(y)))
    d_of = {"sobol": "QMC", "shifted-sobol": "RQMC", "pseudorandom": "MC"}
    box, gap, margin = 180.0, 30.0, 20.0
    body: List[str] = []
    for i, name in enumerate(("sobol", "shifted-sobol", "pseudorandom")):
        x0 = margin + i * (box + gap)
        y0 = margin + 14
        body.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(box)}" '
            f'height="{_fmt(box)}" fill="none" stroke="#333"/>'
        )
        matching = [r for r in rows if r.sampler == d_of[name]]
        d_text = _fmt(min(r.center for r in matching)) if matching else "?"
        body.append(_text(x0, y0 - 4, f"{name}  D*={d_text}", size=10))
        for x, y in sets.get(name, []):
            body.append(
                f'<circle cx="{_fmt(x0 + x * box)}" cy="{_fmt(y0 + (1 - y) * box)}" '
                f'r="1.6" fill="{_PALETTE[i]}"/>'
            )
    width = margin * 2 + 3 * box + 2 * gap
    return _svg_doc(width, margin + box + 40, body)


# ------------------------------------------------------------------ selftest


def _forward_checks() -> List[str]:
    """Re-derive interval endpoints from their defining equations."""
    failures: List[str] = []

    def check(name: str, ok: bool):
        if not ok:
            failures.append(name)

    grid = [(1, 0), (1, 1), (7, 2), (30, 0), (30, 7), (30, 30), (100, 10), (100, 50)]
    for conf in (0.95, 0.99):
        z = normal_quantile(0.5 * (1.0 + conf))
        alpha = 1.0 - conf
        for n, n_s in grid:
            s = BernoulliSummary(n, n_s)
            p_hat = n_s / n
            tag = f"(n={n}, n_s={n_s}, c={conf})"

            # CLT: recompute the Bessel-corrected sd from raw squared
            # deviations instead of the closed-form n*p*q/(n-1)
            ci = METHODS["clt"](s, conf)
            ssd = n_s * (1 - p_hat) ** 2 + (n - n_s) * p_hat**2
            sd = math.sqrt(ssd / (n - 1)) if n > 1 else 0.0
            if n_s in (0, n):
                sd = max(sd, 1.0 / n)
            hw = z * sd / math.sqrt(n)
            check(f"clt endpoints {tag}",
                  abs(ci.raw_lo - (p_hat - hw)) < 1e-12
                  and abs(ci.raw_hi - (p_hat + hw)) < 1e-12)

            # Wilson endpoints solve the score equation in e
            ci = METHODS["wilson"](s, conf)
            for e in (ci.raw_lo, ci.raw_hi):
                check(f"wilson root {tag}",
                      abs((e - p_hat) ** 2 * n - z * z * e * (1 - e)) < 1e-9)

            ci = METHODS["agresti_coull"](s, conf)
            n_t = n + z * z
            p_t = (n_s + z * z / 2) / n_t
            hw = z * math.sqrt(p_t * (1 - p_t) / n_t)
            check(f"agresti_coull endpoints {tag}",
                  abs(ci.raw_lo - (p_t - hw)) < 1e-12 and abs(ci.raw_hi - (p_t + hw)) < 1e-12)
            ci2 = METHODS["agresti_coull_wilson"](s, conf)
            check(f"agresti_coull centerings coincide {tag}",
                  ci2.raw_lo == ci.raw_lo and ci2.raw_hi == ci.raw_hi)

            # logit/anscombe: push each endpoint back through the logit
            if 0 < n_s < n:
                ci = METHODS["logit"](s, conf)
                lam = math.log(n_s / (n - n_s))
                sig = math.sqrt(n / (n_s * (n - n_s)))
                for e, sign in ((ci.raw_lo, -1), (ci.raw_hi, +1)):
                    check(f"logit inversion {tag}",
                          abs(math.log(e / (1 - e)) - (lam + sign * z * sig)) < 1e-9)
            ci = METHODS["anscombe"](s, conf)
            lam = math.log((n_s + 0.5) / (n - n_s + 0.5))
            sig = math.sqrt((n + 1.0) * (n + 2.0) / (n * (n_s + 1.0) * (n - n_s + 1.0)))
            for e, sign in ((ci.raw_lo, -1), (ci.raw_hi, +1)):
                check(f"anscombe inversion {tag}",
                      abs(math.log(e / (1 - e)) - (lam + sign * z * sig)) < 1e-9)

            # arcsine: angles are clipped into [0, pi/2]
            ci = METHODS["arcsine"](s, conf)
            theta = math.asin(math.sqrt((n_s + 3.0 / 8.0) / (n + 3.0 / 4.0)))
            step = z / (2 * math.sqrt(n))
            for e, sign in ((ci.raw_lo, -1), (ci.raw_hi, +1)):
                angle = min(max(theta + sign * step, 0.0), math.pi / 2)
                check(f"arcsine inversion {tag}",
                      abs(math.sin(angle) ** 2 - e) < 1e-12)

            # bayes: equal-tailed Beta(n_s+1/2, n_f+1/2) quantiles, checked
            # through the forward regularized incomplete beta
            ci = METHODS["bayes"](s, conf)
            a, b = n_s + 0.5, n - n_s + 0.5
            check(f"bayes lower tail {tag}",
                  abs(betainc_reg(a, b, ci.raw_lo) - alpha / 2) < 1e-8)
            check(f"bayes upper tail {tag}",
                  abs(betainc_reg(a, b, ci.raw_hi) - (1 - alpha / 2)) < 1e-8)

            ci = METHODS["clopper_pearson"](s, conf)
            if n_s > 0:
                tail = sum(
                    math.comb(n, k) * ci.lo**k * (1 - ci.lo) ** (n - k)
                    for k in range(n_s, n + 1)
                )
                check(f"clopper_pearson lower tail {tag}", abs(tail - alpha / 2) < 1e-9)
            else:
                check(f"clopper_pearson lower floor {tag}", ci.lo == 0.0)
            if n_s < n:
                tail = sum(
                    math.comb(n, k) * ci.hi**k * (1 - ci.hi) ** (n - k)
                    for k in range(0, n_s + 1)
                )
                check(f"clopper_pearson upper tail {tag}", abs(tail - alpha / 2) < 1e-9)
            else:
                check(f"clopper_pearson upper ceiling {tag}", ci.hi == 1.0)
    return failures


def selftest() -> List[str]:
    """Run the frozen-anchor and forward-equivalence suite; return failures."""
    failures = _forward_checks()

    def check(name: str, ok: bool):
        if not ok:
            failures.append(name)

    for q in (0.025, 0.5, 0.975, 0.999995):
        check(f"normal quantile round-trip q={q}",
              abs(normal_cdf(normal_quantile(q)) - q) < 1e-12)

    pts = SobolGenerator(2).take(4)
    check("sobol dim-2 first points",
          np.allclose(pts, [[0.5, 0.5], [0.75, 0.25], [0.25, 0.75], [0.375, 0.375]]))

    check("star discrepancy single-point oracle",
          star_discrepancy_2d(np.array([[0.5, 0.5]])) == 0.75)

    zero = Integrand(dimension=1, batch=lambda p: np.zeros(len(p)))
    ci = qint_interval(zero, SobolGenerator(1), 2, 3, 0.99)
    check("qint degenerate-zero anchor",
          abs(ci.hi - 0.040247332867951575) < 1e-15 and ci.lo == 0.0)

    report = sequential_estimate(
        BernoulliOracle(p_true=0.0), "clt",
        StoppingRule(confidence=0.99, half_width=5e-3), sampler="MC", seed=0,
    )
    check("engine degenerate stop anchor", report.n_used == 65 and report.converged)
    return failures
