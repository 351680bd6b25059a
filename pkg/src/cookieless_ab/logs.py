"""Reading, writing, and replaying experiment logs.

Two file layouts share one row schema:

  * site-1 analysis logs: ``cluster,treatment,outcome,x1..xd`` plus an
    optional ``period`` column (all 1). No user keys, by construction.
  * keyed two-period logs: ``user_key,period,cluster,treatment,outcome,
    x1..xd``. Period 1 rows are site-1 visits with site-1 arms; period 2
    rows mark the same user's site-2 visit and carry the site-2 arm.
    These feed the historical-replay harness only.

Encodings are CSV (with header) and JSON lines with the same field
names. Floats are written with full round-trip precision.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Cluster, DesignConfig, Site1Treatment
from .errors import EstimationError, ValidationError
from .randomization import Site1Log, assign_exposures, assign_macrocluster, substream

_CLUSTER_VALUES = {c.value for c in Cluster}


@dataclass(frozen=True)
class LogRecord:
    """One visit row of either log layout."""

    period: int
    cluster: str
    treatment: str
    outcome: float
    x: tuple[float, ...] = ()
    user_key: str | None = None


@dataclass(frozen=True)
class RowIssue:
    """A malformed row: 1-based file line number plus what went wrong."""

    line: int
    message: str


def _covariate_columns(fieldnames: Sequence[str]) -> list[str]:
    xcols = sorted(
        (name for name in fieldnames if re.fullmatch(r"x[0-9]+", name)),
        key=lambda name: int(name[1:]),
    )
    want = [f"x{i}" for i in range(1, len(xcols) + 1)]
    if xcols != want:
        raise ValidationError(
            f"covariate columns must be x1..xd with no gaps, got {xcols}"
        )
    return xcols


def _check_header(fieldnames: Sequence[str]) -> tuple[bool, bool, list[str]]:
    names = list(fieldnames)
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate columns in header: {names}")
    required = {"cluster", "treatment", "outcome"}
    missing = sorted(required - set(names))
    if missing:
        raise ValidationError(f"log is missing required columns: {missing}")
    xcols = _covariate_columns(names)
    known = required | {"user_key", "period"} | set(xcols)
    unknown = sorted(set(names) - known)
    if unknown:
        raise ValidationError(f"log has unrecognized columns: {unknown}")
    return "user_key" in names, "period" in names, xcols


def _parse_row(
    row: dict,
    line: int,
    has_key: bool,
    has_period: bool,
    xcols: list[str],
    labels: Sequence[str],
    binary: bool,
) -> LogRecord:
    period = 1
    if has_period:
        raw = (row.get("period") or "").strip()
        if raw not in ("1", "2"):
            raise ValueError(f"period must be 1 or 2, got {raw!r}")
        period = int(raw)

    cluster = (row.get("cluster") or "").strip()
    if cluster not in _CLUSTER_VALUES:
        raise ValueError(f"cluster must be one of {sorted(_CLUSTER_VALUES)}, got {cluster!r}")

    treatment = (row.get("treatment") or "").strip()
    allowed = labels[:2] if period == 1 else labels[2:]
    if treatment not in allowed:
        raise ValueError(
            f"treatment for period {period} must be one of {list(allowed)}, got {treatment!r}"
        )

    try:
        outcome = float(row.get("outcome") or "")
    except ValueError:
        raise ValueError(f"outcome is not a number: {row.get('outcome')!r}") from None
    if not np.isfinite(outcome):
        raise ValueError(f"outcome must be finite, got {outcome!r}")
    if binary and outcome not in (0.0, 1.0):
        raise ValueError(f"binary log requires outcome in {{0, 1}}, got {outcome!r}")

    xs = []
    for col in xcols:
        try:
            value = float(row.get(col) or "")
        except ValueError:
            raise ValueError(f"{col} is not a number: {row.get(col)!r}") from None
        if not np.isfinite(value):
            raise ValueError(f"{col} must be finite, got {value!r}")
        xs.append(value)

    user_key = None
    if has_key:
        user_key = (row.get("user_key") or "").strip() or None

    return LogRecord(
        period=period,
        cluster=cluster,
        treatment=treatment,
        outcome=outcome,
        x=tuple(xs),
        user_key=user_key,
    )


def ingest_log(
    path: str | Path,
    labels: Sequence[str] = ("T1", "T2", "T3", "T4"),
    binary: bool = False,
) -> tuple[list[LogRecord], list[RowIssue]]:
    """Parse a log file, keeping good rows and reporting bad ones.

    Malformed rows never abort the ingest; each becomes a RowIssue with
    its file line number. A structurally wrong header (missing required
    columns, gaps in x1..xd, unknown names) raises instead, since no row
    can be trusted. An empty file is an empty dataset with no issues.
    """
    path = Path(path)
    text = path.read_text()
    if not text.strip():
        return [], []
    reader = csv.DictReader(io.StringIO(text))
    has_key, has_period, xcols = _check_header(reader.fieldnames or [])
    records: list[LogRecord] = []
    issues: list[RowIssue] = []
    for line, row in enumerate(reader, start=2):  # header is line 1
        if row.get(None) is not None:
            issues.append(RowIssue(line=line, message="row has extra fields"))
            continue
        try:
            records.append(
                _parse_row(row, line, has_key, has_period, xcols, labels, binary)
            )
        except ValueError as exc:
            issues.append(RowIssue(line=line, message=str(exc)))
    return records, issues


def records_to_site1_log(
    records: Iterable[LogRecord],
    labels: Sequence[str] = ("T1", "T2", "T3", "T4"),
    outcome_bounds: tuple[float, float] | None = None,
) -> Site1Log:
    """Assemble period-1 rows into the columnar analysis log."""
    rows = [r for r in records if r.period == 1]
    if not rows:
        raise ValidationError("log has no period-1 rows to analyze")
    dims = {len(r.x) for r in rows}
    if len(dims) != 1:
        raise ValidationError(f"rows disagree on covariate count: {sorted(dims)}")
    d = dims.pop()
    cluster = np.array([0 if r.cluster == "C1" else 1 for r in rows], dtype=np.uint8)
    treatment = np.array([0 if r.treatment == labels[0] else 1 for r in rows], dtype=np.uint8)
    outcomes = np.array([r.outcome for r in rows], dtype=np.float64)
    x = np.array([r.x for r in rows], dtype=np.float64).reshape(len(rows), d)
    return Site1Log(
        cluster_codes=cluster,
        treatment_codes=treatment,
        outcomes=outcomes,
        covariates=x,
        outcome_bounds=outcome_bounds,
    )


def _record_dict(record: LogRecord, has_key: bool, has_period: bool) -> dict:
    out: dict = {}
    if has_key:
        out["user_key"] = record.user_key or ""
    if has_period:
        out["period"] = record.period
    out.update(
        cluster=record.cluster,
        treatment=record.treatment,
        outcome=repr(record.outcome),
    )
    for i, value in enumerate(record.x, start=1):
        out[f"x{i}"] = repr(value)
    return out


def write_records_csv(records: Sequence[LogRecord], path: str | Path) -> None:
    """Write records with whatever optional columns they carry."""
    has_key = any(r.user_key is not None for r in records)
    has_period = any(r.period != 1 for r in records)
    d = len(records[0].x) if records else 0
    fields = (
        (["user_key"] if has_key else [])
        + (["period"] if has_period else [])
        + ["cluster", "treatment", "outcome"]
        + [f"x{i}" for i in range(1, d + 1)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for record in records:
            writer.writerow(_record_dict(record, has_key, has_period))


def site1_log_to_records(
    log: Site1Log, labels: Sequence[str] = ("T1", "T2", "T3", "T4")
) -> list[LogRecord]:
    return [
        LogRecord(
            period=1,
            cluster=Cluster.C1.value if c == 0 else Cluster.C2.value,
            treatment=labels[0] if t == 0 else labels[1],
            outcome=float(y),
            x=tuple(float(v) for v in xrow),
        )
        for c, t, y, xrow in zip(
            log.cluster_codes, log.treatment_codes, log.outcomes, log.covariates
        )
    ]


def write_site1_csv(log: Site1Log, path: str | Path, labels=("T1", "T2", "T3", "T4")) -> None:
    write_records_csv(site1_log_to_records(log, labels), path)


def write_records_jsonl(records: Sequence[LogRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            row = {
                "period": r.period,
                "cluster": r.cluster,
                "treatment": r.treatment,
                "outcome": r.outcome,
            }
            if r.user_key is not None:
                row["user_key"] = r.user_key
            for i, value in enumerate(r.x, start=1):
                row[f"x{i}"] = value
            fh.write(json.dumps(row) + "\n")


def read_records_jsonl(
    path: str | Path, labels: Sequence[str] = ("T1", "T2", "T3", "T4"), binary: bool = False
) -> tuple[list[LogRecord], list[RowIssue]]:
    records: list[LogRecord] = []
    issues: list[RowIssue] = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                xcols = _covariate_columns([k for k in row if re.fullmatch(r"x[0-9]+", k)])
                record = _parse_row(
                    {k: str(v) for k, v in row.items()},
                    line_no,
                    "user_key" in row,
                    "period" in row,
                    xcols,
                    labels,
                    binary,
                )
                records.append(record)
            except (ValueError, ValidationError) as exc:
                issues.append(RowIssue(line=line_no, message=str(exc)))
    return records, issues


def make_keyed_log(population, config: DesignConfig, seed: int) -> list[LogRecord]:
    """Simulate a full keyed two-period log for the replay harness.

    Runs the real exposure pipeline, then writes each user's site-1
    visit as a period-1 row and, for users who also visit site 2, a
    period-2 row carrying the site-2 arm. Keys are the hex user ids.
    Only test fixtures and replay studies should ever see this format.
    """
    bits, treat, site2, outcomes = assign_exposures(population, config, seed)
    labels = config.treatment_labels
    records: list[LogRecord] = []
    for i in range(population.n):
        key = f"{int(population.uids[i]):016x}"
        cluster = Cluster.C1.value if bits[i] == 0 else Cluster.C2.value
        x = tuple(float(v) for v in population.covariates[i])
        records.append(
            LogRecord(
                period=1,
                cluster=cluster,
                treatment=labels[0] if treat[i] == 0 else labels[1],
                outcome=float(outcomes[i]),
                x=x,
                user_key=key,
            )
        )
        if site2[i] != 0:
            records.append(
                LogRecord(
                    period=2,
                    cluster=cluster,
                    treatment=labels[2] if site2[i] == 3 else labels[3],
                    outcome=float(outcomes[i]),
                    x=x,
                    user_key=key,
                )
            )
    return records


def resample_scenario(
    records: Sequence[LogRecord],
    p_target: float,
    seed: int,
    config: DesignConfig,
    labels: Sequence[str] = ("T1", "T2", "T3", "T4"),
) -> Site1Log:
    """Replay a keyed historical log at a chosen overlap fraction.

    Users present in both periods form the shared pool; single-period
    site-1 users are all kept and each shared user is kept independently
    with the probability that makes the expected shared fraction equal
    ``p_target``. Kept users are re-randomized through the actual
    design (cluster hash on their key, fresh arms), and their outcome
    and covariates are drawn from the observed rows of users who
    historically had that same exposure pair, which preserves the
    empirical outcome-treatment joint without inventing a model.

    Raises when ``p_target`` exceeds the attainable maximum (every
    shared user kept) or when some required exposure pair was never
    observed historically.
    """
    if not (0.0 <= p_target <= 1.0):
        raise ValidationError(f"p_target must lie in [0, 1], got {p_target!r}")
    if any(r.user_key is None for r in records):
        raise ValidationError("replay needs user keys on every row")

    by_user: dict[str, dict[int, LogRecord]] = {}
    for record in records:
        periods = by_user.setdefault(record.user_key, {})
        # First visit wins; repeat visits within a period are out of scope.
        periods.setdefault(record.period, record)

    arm_of = {labels[0]: 1, labels[1]: 2, labels[2]: 3, labels[3]: 4}
    pools: dict[tuple[int, int], list[LogRecord]] = {}
    singles: list[str] = []
    shared: list[str] = []
    for key in sorted(by_user):
        periods = by_user[key]
        if 1 not in periods:
            continue  # site-2-only visitor; nothing observed on site 1
        p1 = periods[1]
        s = arm_of[periods[2].treatment] if 2 in periods else 0
        pools.setdefault((arm_of[p1.treatment], s), []).append(p1)
        (shared if s else singles).append(key)

    n_single, n_shared = len(singles), len(shared)
    if n_shared == 0 and p_target > 0.0:
        raise ValidationError("log has no users observed in both periods")
    attainable = n_shared / (n_shared + n_single) if (n_shared + n_single) else 0.0
    if p_target == 0.0:
        keep_prob = 0.0
    elif p_target >= 1.0:
        if n_single > 0:
            raise ValidationError(
                "p_target=1.0 is unattainable while single-period users remain; "
                f"attainable maximum is {attainable:.6g}"
            )
        keep_prob = 1.0
    else:
        keep_prob = p_target * n_single / (n_shared * (1.0 - p_target))
        if keep_prob > 1.0 + 1e-12:
            raise ValidationError(
                f"p_target={p_target:g} exceeds the attainable shared fraction; "
                f"attainable maximum is {attainable:.6g} with every shared user kept"
            )
        keep_prob = min(keep_prob, 1.0)

    keep_draws = substream(seed, "replay-keep").random(n_shared)
    kept = singles + [k for k, u in zip(shared, keep_draws) if u < keep_prob]
    if not kept:
        raise ValidationError("no users left after resampling; nothing to replay")

    rng_arm1 = substream(seed, "replay-site1").random(len(kept))
    rng_arm2 = substream(seed, "replay-site2").random(len(kept))
    rng_donor = substream(seed, "replay-donor")
    shared_set = set(shared)

    clusters = np.empty(len(kept), dtype=np.uint8)
    treatments = np.empty(len(kept), dtype=np.uint8)
    outcomes = np.empty(len(kept), dtype=np.float64)
    d = len(records[0].x)
    covariates = np.empty((len(kept), d), dtype=np.float64)

    for i, key in enumerate(kept):
        cluster = assign_macrocluster(key, config.cluster_salt)
        bit = 0 if cluster is Cluster.C1 else 1
        t = 1 if rng_arm1[i] < config.site1_split else 2
        if key in shared_set:
            p3 = config.alpha if bit == 0 else 1.0 - config.alpha
            s = 3 if rng_arm2[i] < p3 else 4
        else:
            s = 0
        pool = pools.get((t, s))
        if not pool:
            raise EstimationError(
                f"no historical rows observed for exposure pair ({t}, {s}); "
                "cannot replay this assignment"
            )
        donor = pool[int(rng_donor.integers(len(pool)))]
        clusters[i] = bit
        treatments[i] = t - 1
        outcomes[i] = donor.outcome
        covariates[i] = donor.x

    return Site1Log(
        cluster_codes=clusters,
        treatment_codes=treatments,
        outcomes=outcomes,
        covariates=covariates,
        outcome_bounds=None,
    )
