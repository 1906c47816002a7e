"""Session outcomes: breaches, completion, drill time, paired comparison.

The paired one-sided t-test is self-contained.  The Student CDF comes from
the regularized incomplete beta function, evaluated with the standard
continued fraction (modified Lentz), which is accurate to near machine
precision for the degrees of freedom that session counts produce.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    LengthMismatch,
    MalformedRecord,
    MisalignedInputs,
    TooFewPairs,
    UnorderedLog,
)
from .fileio import canonical_json
from .guidance import Zone, ZonePlan

__all__ = [
    "RemovalEvent",
    "BreachEvent",
    "SessionMetrics",
    "PairedTTestResult",
    "write_event_log",
    "read_event_log",
    "detect_breaches",
    "completion_rates",
    "drill_time",
    "paired_t_one_sided",
    "session_metrics",
    "session_report",
]

FORBIDDEN_ZONES = (Zone.RED, Zone.ANATOMY)

# zones a session can remove, in reporting order
REPORT_ZONES = (Zone.ANATOMY, Zone.GREEN, Zone.YELLOW, Zone.RED)


@dataclass(frozen=True)
class RemovalEvent:
    """One voxel removal: engine time in ms, voxel index, planned zone."""

    t_ms: int
    voxel: tuple[int, int, int]
    zone: Zone


@dataclass(frozen=True)
class BreachEvent:
    """A sustained excursion into forbidden voxels (RED or ANATOMY)."""

    start_ms: int
    end_ms: int
    voxel_count: int

    def as_doc(self) -> dict:
        return {"start_ms": self.start_ms, "end_ms": self.end_ms,
                "voxel_count": self.voxel_count}


# ----------------------------------------------------------------------------
# removal log files
# ----------------------------------------------------------------------------

def event_line(ev: RemovalEvent) -> str:
    """Canonical JSON line for one event, newline included."""
    doc = {"t_ms": ev.t_ms, "v": list(ev.voxel), "zone": ev.zone.name}
    return canonical_json(doc) + "\n"


def write_event_log(events, path) -> None:
    """Write events as JSON lines; identical logs give identical bytes."""
    Path(path).write_bytes("".join(event_line(ev) for ev in events).encode("utf-8"))


def read_event_log(path) -> list[RemovalEvent]:
    events = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            i, j, k = doc["v"]
            ev = RemovalEvent(int(doc["t_ms"]), (int(i), int(j), int(k)),
                              Zone[doc["zone"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"{path}:{lineno}: {exc!r}") from None
        events.append(ev)
    return events


# ----------------------------------------------------------------------------
# per-session measures
# ----------------------------------------------------------------------------

def detect_breaches(log, min_voxels: int = 5, merge_window_ms: int = 2000):
    """Find breaches: runs of consecutive forbidden removals in `log`.

    A maximal run of consecutive RED or ANATOMY events qualifies as a
    breach when it contains at least `min_voxels` events.  Qualifying runs
    whose gap (next start minus previous end) is at most `merge_window_ms`
    are merged into one breach; sub-threshold runs never contribute.

    Returns a list of BreachEvent in time order.  Raises UnorderedLog if
    timestamps ever decrease.
    """
    last_t = None
    runs = []            # (start_ms, end_ms, count) of qualifying runs
    cur = None
    for ev in log:
        if last_t is not None and ev.t_ms < last_t:
            raise UnorderedLog(f"t went from {last_t} to {ev.t_ms} ms")
        last_t = ev.t_ms
        if ev.zone in FORBIDDEN_ZONES:
            if cur is None:
                cur = [ev.t_ms, ev.t_ms, 0]
            cur[1] = ev.t_ms
            cur[2] += 1
        elif cur is not None:
            if cur[2] >= min_voxels:
                runs.append(cur)
            cur = None
    if cur is not None and cur[2] >= min_voxels:
        runs.append(cur)

    breaches: list[BreachEvent] = []
    for start, end, count in runs:
        if breaches and start - breaches[-1].end_ms <= merge_window_ms:
            prev = breaches.pop()
            breaches.append(BreachEvent(prev.start_ms, end, prev.voxel_count + count))
        else:
            breaches.append(BreachEvent(start, end, count))
    return breaches


def completion_rates(log, plan: ZonePlan) -> dict[Zone, float | None]:
    """Percent of planned voxels removed, per zone.

    Zones with no planned voxels come back as None (not applicable)
    rather than raising.  Assumes `log` came from a session over `plan`,
    so every removed voxel is counted against the zone it was planned as.
    """
    removed = {z: 0 for z in REPORT_ZONES}
    for ev in log:
        if ev.zone in removed:
            removed[ev.zone] += 1
    rates: dict[Zone, float | None] = {}
    for z in REPORT_ZONES:
        planned = plan.planned_counts.get(z, 0)
        rates[z] = None if planned == 0 else 100.0 * removed[z] / planned
    return rates


def drill_time(log) -> float:
    """Active span of the log in seconds: last minus first timestamp."""
    if len(log) < 2:
        return 0.0
    return (log[-1].t_ms - log[0].t_ms) / 1000.0


# ----------------------------------------------------------------------------
# paired one-sided t-test
# ----------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz method."""
    MAXIT = 300
    EPS = 3.0e-16
    FPMIN = 1.0e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ArithmeticError(f"betacf did not converge for a={a}, b={b}, x={x}")


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # the continued fraction converges fast only left of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _student_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with `df` degrees of freedom."""
    x = df / (df + t * t)
    tail = 0.5 * _betainc_reg(0.5 * df, 0.5, x)
    return tail if t >= 0.0 else 1.0 - tail


@dataclass(frozen=True)
class PairedTTestResult:
    """Paired one-sided t-test of H1: mean(a - b) > 0."""

    n: int
    mean_diff: float
    sd_diff: float
    t_stat: float
    df: int
    p_one_sided: float

    def as_doc(self) -> dict:
        t = self.t_stat if math.isfinite(self.t_stat) else None
        return {"n": self.n, "mean_diff": self.mean_diff, "sd_diff": self.sd_diff,
                "t_stat": t, "df": self.df, "p_one_sided": self.p_one_sided}


def paired_t_one_sided(a, b) -> PairedTTestResult:
    """Test whether paired samples `a` exceed `b` on average.

    The difference d = a - b is tested against H1: mean(d) > 0 with the
    usual paired statistic t = mean(d) / (sd(d) / sqrt(n)), sd with ddof 1.
    When every pair has the same difference the statistic degenerates; the
    p-value is then 0, 0.5 or 1 by the sign of the mean.

    Raises
    ------
    LengthMismatch
        Samples differ in length.
    TooFewPairs
        Fewer than two pairs.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} samples")
    n = len(a)
    if n < 2:
        raise TooFewPairs(f"need at least 2 pairs, got {n}")
    d = [x - y for x, y in zip(a, b)]
    mean = sum(d) / n
    var = sum((x - mean) ** 2 for x in d) / (n - 1)
    sd = math.sqrt(var)
    df = n - 1
    if sd == 0.0:
        if mean > 0.0:
            return PairedTTestResult(n, mean, 0.0, math.inf, df, 0.0)
        if mean < 0.0:
            return PairedTTestResult(n, mean, 0.0, -math.inf, df, 1.0)
        return PairedTTestResult(n, mean, 0.0, 0.0, df, 0.5)
    t = mean / (sd / math.sqrt(n))
    return PairedTTestResult(n, mean, sd, t, df, _student_sf(t, float(df)))


# ----------------------------------------------------------------------------
# session rows and the report document
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionMetrics:
    """Everything reported about one drilling session."""

    session_id: str
    label: str
    completion_pct: dict[Zone, float | None]
    drill_time_s: float
    breach_count: int
    breaches: tuple[BreachEvent, ...]

    def as_doc(self) -> dict:
        return {
            "session_id": self.session_id,
            "label": self.label,
            "completion_pct": {z.name: self.completion_pct[z] for z in REPORT_ZONES},
            "drill_time_s": self.drill_time_s,
            "breach_count": self.breach_count,
            "breaches": [b.as_doc() for b in self.breaches],
        }


def session_metrics(log, plan: ZonePlan, session_id: str, label: str,
                    min_voxels: int = 5, merge_window_ms: int = 2000) -> SessionMetrics:
    """Measure one session log against its plan."""
    breaches = tuple(detect_breaches(log, min_voxels, merge_window_ms))
    return SessionMetrics(
        session_id=session_id,
        label=label,
        completion_pct=completion_rates(log, plan),
        drill_time_s=drill_time(log),
        breach_count=len(breaches),
        breaches=breaches,
    )


def _paired_tests(rows: list[SessionMetrics]) -> dict | None:
    """Per-measure paired tests when rows split into two equal groups.

    Sessions are paired by position within each label group, in input
    order.  Returns None unless there are exactly two labels with the
    same count of at least two sessions each.
    """
    order = []
    groups: dict[str, list[SessionMetrics]] = {}
    for row in rows:
        if row.label not in groups:
            order.append(row.label)
            groups[row.label] = []
        groups[row.label].append(row)
    if len(order) != 2:
        return None
    la, lb = order
    ga, gb = groups[la], groups[lb]
    if len(ga) != len(gb) or len(ga) < 2:
        return None

    tests: dict[str, dict] = {}

    def add(name, xa, xb):
        res = paired_t_one_sided(xa, xb)
        tests[name] = {"alternative": f"{la} > {lb}", **res.as_doc()}

    for z in REPORT_ZONES:
        xa = [r.completion_pct[z] for r in ga]
        xb = [r.completion_pct[z] for r in gb]
        if any(v is None for v in xa + xb):
            continue  # zone absent from some plan, nothing to compare
        add(f"completion_{z.name}", xa, xb)
    add("drill_time_s", [r.drill_time_s for r in ga], [r.drill_time_s for r in gb])
    add("breach_count", [float(r.breach_count) for r in ga],
        [float(r.breach_count) for r in gb])
    return tests


def session_report(logs, plans, labels, session_ids=None,
                   min_voxels: int = 5, merge_window_ms: int = 2000) -> dict:
    """Build the report document for a batch of sessions.

    Parameters
    ----------
    logs : sequence of event lists
    plans : sequence of ZonePlan, parallel to `logs`
    labels : sequence of str, parallel to `logs`
        Condition tag per session, e.g. "guided" / "unguided".
    session_ids : sequence of str, optional
        Defaults to "session-0", "session-1", ...

    Returns
    -------
    dict
        {"sessions": [...], "t_tests": {...} or None}.  Paired tests are
        included only when the labels form two groups of equal size >= 2;
        pairs are taken by position within each group.  Empty input gives
        an empty report.
    """
    logs = list(logs)
    plans = list(plans)
    labels = [str(x) for x in labels]
    if session_ids is None:
        session_ids = [f"session-{i}" for i in range(len(logs))]
    else:
        session_ids = [str(x) for x in session_ids]
    if not (len(logs) == len(plans) == len(labels) == len(session_ids)):
        raise MisalignedInputs(
            f"{len(logs)} logs, {len(plans)} plans, {len(labels)} labels, "
            f"{len(session_ids)} session ids")
    rows = [session_metrics(log, plan, sid, label, min_voxels, merge_window_ms)
            for log, plan, sid, label in zip(logs, plans, session_ids, labels)]
    return {
        "sessions": [r.as_doc() for r in rows],
        "t_tests": _paired_tests(rows),
    }
