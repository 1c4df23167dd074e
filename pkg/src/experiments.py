"""Growth sweeps over the extremal family.

For every ``n`` a sweep computes ``I(P_n)`` for the degree ``2n^2 - 1``
extremal polynomial, ``I(f_n)`` of the trapezoid profile it smooths, and the
discrepancy ``D_n`` between them, then checks the triangle-inequality chain
tying the three together. Records are written as a plot-ready CSV with a JSON
sidecar holding the engine configuration.

Environment variables:
    OSCINT_WORKERS          - process pool size for sweeps (1 = sequential)
    OSCINT_SWEEP_N_CAP      - largest n a default sweep accepts (12)
    OSCINT_GROWTH_THRESHOLD - lower bound expected of I(P_n)/log d for n >= 6
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.special import sici

from src.config import get_settings
from src.discrepancy import discrepancy_integral
from src.errors import InvalidRange, OscIntError, SweepNotFound, SweepParseError, check_tol
from src.phase import extremal_phase
from src.pvint import pv_integral, tail_part, unit_interval_integral
from src.quadrature import integrate

logger = logging.getLogger(__name__)

CSV_NAME = "sweep.csv"
JSON_NAME = "sweep.json"

_SIN1 = math.sin(1.0)


# ----------------------------------------------------------------------
# The trapezoid profile's own integral
# ----------------------------------------------------------------------


def profile_integral_parts(n: int, tol: float | None = None) -> dict[str, float]:
    """``integral over [0, 1] of sin(f_n(t))/t`` split at the kinks.

    The rising ramp substitutes to ``Si(1)``, the plateau is
    ``sin(1) log(n - 1)`` exactly, and the falling ramp is integrated
    numerically. ``value`` is twice the sum.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    tol = check_tol(get_settings().tol if tol is None else tol)
    h = 1.0 / n
    inner = float(sici(1.0)[0])
    plateau = _SIN1 * math.log(n - 1)
    outer = float(integrate(lambda t: np.sin(n * (1.0 - t)) / t, 1.0 - h, 1.0, abs_tol=tol / 4).value)
    return {
        "inner_ramp": inner,
        "plateau": plateau,
        "outer_ramp": outer,
        "value": 2.0 * math.fsum([inner, plateau, outer]),
        "lower_bound": 2.0 * _SIN1 * math.log(n - 1) - 4.0,
    }


def profile_integral(n: int, tol: float | None = None) -> float:
    """``I(f_n) = 2 |integral over [0, 1] of sin(f_n(t))/t dt|``."""
    return abs(profile_integral_parts(n, tol)["value"])


# ----------------------------------------------------------------------
# Sweep records
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    """One row of a growth sweep.

    ``chain_gap`` is ``|2 I1_Pn - I_fn|`` where ``I1_Pn`` is the signed
    integral of ``sin(P_n(t))/t`` over ``[0, 1]``; it can never exceed
    ``2 D_n`` beyond the tolerance.
    """

    n: int
    d: int
    I_Pn: float
    I_fn: float
    D_n: float
    ratio_logd: float
    I1_Pn: float
    tail_Pn: float
    chain_gap: float
    chain_holds: bool
    status: str
    tol: float
    runtime_ms: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


COLUMNS = tuple(f.name for f in fields(SweepRecord))
_INT_COLUMNS = {"n", "d"}
_BOOL_COLUMNS = {"chain_holds"}
_STR_COLUMNS = {"status"}


def _failed_record(n: int, tol: float, status: str, runtime_ms: float) -> SweepRecord:
    nan = math.nan
    return SweepRecord(
        n=n, d=2 * n * n - 1, I_Pn=nan, I_fn=nan, D_n=nan, ratio_logd=nan,
        I1_Pn=nan, tail_Pn=nan, chain_gap=nan, chain_holds=False,
        status=status, tol=tol, runtime_ms=runtime_ms,
    )


def sweep_row(n: int, tol: float) -> SweepRecord:
    """Compute one record; computation failures become a failed record."""
    started = time.perf_counter()
    d = 2 * n * n - 1
    try:
        phase = extremal_phase(n)
        pv = pv_integral(phase, tol)
        head = unit_interval_integral(phase, tol)
        tail = float(np.real(tail_part(phase, 1.0, tol).value))
        profile = profile_integral_parts(n, tol)["value"]
        disc = discrepancy_integral(n, tol).D_n
    except OscIntError as exc:
        logger.warning("sweep n=%d failed: %s", n, exc)
        elapsed = (time.perf_counter() - started) * 1000.0
        return _failed_record(n, tol, f"error: {exc}", elapsed)
    gap = abs(2.0 * head - profile)
    elapsed = (time.perf_counter() - started) * 1000.0
    return SweepRecord(
        n=n,
        d=d,
        I_Pn=pv.value,
        I_fn=abs(profile),
        D_n=disc,
        ratio_logd=pv.value / math.log(d),
        I1_Pn=head,
        tail_Pn=tail,
        chain_gap=gap,
        chain_holds=gap <= 2.0 * disc + tol,
        status="ok" if pv.converged else "unconverged",
        tol=tol,
        runtime_ms=elapsed,
    )


def growth_sweep(
    n_min: int,
    n_max: int,
    tol: float | None = None,
    workers: int | None = None,
    out_dir: str | Path | None = None,
    allow_large: bool = False,
) -> list[SweepRecord]:
    """Records for ``n_min..n_max`` ordered by ``n``.

    Rows are computed in a process pool when ``workers > 1``. Above
    ``sweep_n_cap`` the sweep refuses unless *allow_large* is set. When
    *out_dir* is given the records are persisted there.
    """
    settings = get_settings()
    tol = check_tol(settings.tol if tol is None else tol)
    if not 2 <= n_min <= n_max:
        raise InvalidRange(f"need 2 <= n_min <= n_max, got {n_min}..{n_max}")
    if n_max > settings.sweep_n_cap and not allow_large:
        raise InvalidRange(
            f"n_max={n_max} is above the desk-scale cap {settings.sweep_n_cap}; pass allow_large"
        )
    ns = list(range(n_min, n_max + 1))
    workers = settings.workers if workers is None else workers
    if workers > 1 and len(ns) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(ns))) as pool:
            records = list(pool.map(sweep_row, ns, [tol] * len(ns)))
    else:
        records = [sweep_row(n, tol) for n in ns]
    for rec in records:
        logger.info(
            "n=%d d=%d I(P_n)=%.10g I(f_n)=%.10g D_n=%.6g ratio=%.4f %s",
            rec.n, rec.d, rec.I_Pn, rec.I_fn, rec.D_n, rec.ratio_logd, rec.status,
        )
    for issue in anomalies(records, tol):
        logger.warning("sweep anomaly: %s", issue)
    if out_dir is not None:
        persist_sweep(records, out_dir)
    return records


def anomalies(records: Sequence[SweepRecord], tol: float | None = None) -> list[dict[str, Any]]:
    """Trend and threshold violations worth flagging (never fatal).

    ``I(P_n)`` should not decrease for ``n >= 4`` by more than ``2 tol``,
    the ratio should stay above ``growth_threshold`` for ``n >= 6``, ``D_n / log n``
    should stay at or below ``discrepancy_cap`` for ``n >= 16``, and the chain
    should hold on every successful row.
    """
    settings = get_settings()
    tol = settings.tol if tol is None else tol
    found: list[dict[str, Any]] = []
    rows = sorted((r for r in records if r.ok), key=lambda r: r.n)
    for prev, cur in zip(rows[:-1], rows[1:]):
        if prev.n >= 4 and cur.I_Pn < prev.I_Pn - 2.0 * tol:
            found.append({"kind": "decreasing", "n": cur.n, "drop": prev.I_Pn - cur.I_Pn})
    for rec in rows:
        if rec.n >= 6 and rec.ratio_logd < settings.growth_threshold:
            found.append({"kind": "ratio_below_threshold", "n": rec.n, "ratio": rec.ratio_logd})
        if rec.n >= 16 and math.isfinite(rec.D_n) and rec.D_n > settings.discrepancy_cap * math.log(rec.n):
            found.append({"kind": "discrepancy_above_cap", "n": rec.n, "ratio": rec.D_n / math.log(rec.n)})
        if not rec.chain_holds:
            found.append({"kind": "chain_violated", "n": rec.n, "gap": rec.chain_gap})
    return found


def discrepancy_trend(ns: Sequence[int] = (4, 8, 16, 32), tol: float | None = None) -> list[tuple[int, float]]:
    """``(n, D_n / log n)`` for each ``n``; expected to decrease strictly."""
    return [(n, discrepancy_integral(n, tol).ratio) for n in ns]


# ----------------------------------------------------------------------
# Persistence
# ----------------------------------------------------------------------


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def persist_sweep(
    records: Sequence[SweepRecord],
    out_dir: str | Path,
    config: dict[str, Any] | None = None,
) -> tuple[Path, Path]:
    """Write ``sweep.csv`` and ``sweep.json`` under *out_dir*.

    Floats are written with 17 significant digits so they read back exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / CSV_NAME
    json_path = out / JSON_NAME
    ordered = sorted(records, key=lambda r: r.n)
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in ordered:
            writer.writerow([_format(getattr(rec, c)) for c in COLUMNS])
    sidecar = {
        "columns": list(COLUMNS),
        "engine": config if config is not None else get_settings().engine_config(),
        "n_values": [r.n for r in ordered],
        "anomalies": anomalies(ordered),
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %d sweep records to %s", len(ordered), csv_path)
    return csv_path, json_path


def _parse(column: str, raw: str) -> Any:
    if column in _INT_COLUMNS:
        return int(raw)
    if column in _BOOL_COLUMNS:
        if raw not in ("true", "false"):
            raise ValueError(f"expected true/false, got {raw!r}")
        return raw == "true"
    if column in _STR_COLUMNS:
        return raw
    return float(raw)


def load_sweep(path: str | Path) -> tuple[list[SweepRecord], dict[str, Any]]:
    """Read a sweep back as ``(records, sidecar)``.

    *path* may be the output directory or the CSV file itself.
    """
    path = Path(path)
    csv_path = path / CSV_NAME if path.is_dir() else path
    json_path = csv_path.with_name(JSON_NAME)
    if not csv_path.exists():
        raise SweepNotFound(f"sweep CSV not found: {csv_path}")
    if not json_path.exists():
        raise SweepNotFound(f"sweep sidecar not found: {json_path}")

    records: list[SweepRecord] = []
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise SweepParseError(f"unexpected header in {csv_path}: {header}", line=1)
        for row in reader:
            line = reader.line_num
            if len(row) != len(COLUMNS):
                raise SweepParseError(
                    f"expected {len(COLUMNS)} fields, got {len(row)} in {csv_path}", line=line
                )
            try:
                values = {c: _parse(c, raw) for c, raw in zip(COLUMNS, row)}
            except ValueError as exc:
                raise SweepParseError(f"{exc} in {csv_path}", line=line) from exc
            records.append(SweepRecord(**values))
    try:
        sidecar = json.loads(json_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SweepParseError(f"malformed sidecar {json_path}: {exc.msg}", line=exc.lineno) from exc
    return records, sidecar
