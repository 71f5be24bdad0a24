"""Reproducible simulation campaigns, archives and reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .engine import RunConfig, Trajectory, run
from .exceptions import InsufficientBlocksWarning, InsufficientDataError, MalformedConfigError, VRJPError
from .numerics import compute_constants
from .regeneration import (
    DEFAULT_BUFFER,
    RegenBlock,
    clt_diagnostic,
    detect_cuts,
    estimate,
    l1_tail,
    return_probability_from_flags,
    returned,
    returned_in_two_jumps,
)
from .utils import check_positive_int, check_seed, derive_seed

__all__ = [
    "CampaignSpec",
    "analyse_records",
    "load_spec",
    "provenance",
    "read_archive",
    "run_record",
    "simulate_records",
    "spec_hash",
    "versions",
    "write_archive",
]

FORMATS = ("ndjson", "csv")
# fields that do not change the produced numbers
_UNHASHED = {"out", "workers"}
CSV_COLUMNS = (
    "index",
    "seed",
    "stop_reason",
    "n_events",
    "final_level",
    "final_time",
    "returned",
    "two_jump_return",
    "n_cuts",
    "first_cut_level",
)


@dataclass(frozen=True)
class CampaignSpec:
    b: int = 3
    runs: int = 1
    max_level: int | None = None
    max_events: int | None = None
    max_time: float | None = None
    buffer: int = DEFAULT_BUFFER
    seed: int | None = None
    replicas: int = 10_000
    generations: int = 200
    events: bool = False
    format: str = "ndjson"
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.seed is not None:
            check_seed(self.seed)
        try:
            check_positive_int(self.b, "b")
            check_positive_int(self.runs, "runs", allow_zero=True)
            check_positive_int(self.buffer, "buffer")
            check_positive_int(self.replicas, "replicas")
            check_positive_int(self.generations, "generations", allow_zero=True)
            check_positive_int(self.workers, "workers")
        except (TypeError, ValueError) as exc:
            raise MalformedConfigError(str(exc)) from exc
        if self.format not in FORMATS:
            raise MalformedConfigError(f"format must be one of {FORMATS}, got {self.format!r}")

    def require_seed(self):
        """Commands that draw random numbers refuse to run without a seed."""
        return check_seed(self.seed)

    def run_config(self, index):
        return RunConfig(
            b=self.b,
            seed=derive_seed(self.seed, index),
            max_level=self.max_level,
            max_events=self.max_events,
            max_time=self.max_time,
        )

    def hashed_fields(self):
        return {k: v for k, v in asdict(self).items() if k not in _UNHASHED}


def load_spec(path=None, **overrides):
    """Build a spec from an optional JSON file; non-``None`` overrides win."""
    data = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise MalformedConfigError(f"spec file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise MalformedConfigError("spec file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
    known = {f.name for f in fields(CampaignSpec)}
    unknown = set(data) - known
    if unknown:
        raise MalformedConfigError(f"unknown spec fields: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None and k in known})
    return CampaignSpec(**data)


def spec_hash(spec):
    blob = json.dumps(spec.hashed_fields(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def versions():
    import scipy
    import sklearn

    return {
        "vrjp": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "python": platform.python_version(),
    }


def provenance(spec, command):
    return {
        "command": command,
        "spec": spec.hashed_fields(),
        "spec_hash": spec_hash(spec),
        "seed": spec.seed,
        "versions": versions(),
    }


def run_record(spec, index):
    """Simulate run ``index`` of the campaign and summarise it as a dict."""
    traj = run(spec.run_config(index))
    rec = {
        "type": "run",
        "index": index,
        "seed": traj.seed,
        "stop_reason": traj.stop_reason,
        "n_events": traj.n_events,
        "final_level": traj.final_level,
        "final_time": traj.end_time,
        "returned": returned(traj),
        "two_jump_return": returned_in_two_jumps(traj),
        "cuts": None,
        "first_cut_level": None,
    }
    if traj.stop_reason == "max-level":
        cuts = detect_cuts(traj, spec.buffer)
        rec["cuts"] = [[c.level, c.time, c.weight_self, c.weight_parent] for c in cuts]
        rec["first_cut_level"] = cuts[0].level if cuts else None
    if spec.events:
        rec["trajectory"] = traj.to_dict()
    return rec


def _record_job(args):
    spec, index = args
    return run_record(spec, index)


def simulate_records(spec):
    """Yield run records in index order, fanning out to ``spec.workers`` processes."""
    if spec.workers <= 1:
        for i in range(spec.runs):
            yield run_record(spec, i)
        return
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        yield from pool.map(_record_job, ((spec, i) for i in range(spec.runs)), chunksize=8)


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_archive(spec, stream, records=None):
    """Write the campaign to ``stream`` in ``spec.format``; return per-run failures.

    A run whose record cannot be produced or serialised is reported in the
    returned list and skipped; the campaign carries on.
    """
    spec.require_seed()
    records = simulate_records(spec) if records is None else records
    failures = []
    head = provenance(spec, "simulate")
    if spec.format == "ndjson":
        stream.write(_dumps({"type": "header", **head}) + "\n")
        writer = None
    else:
        for key in ("spec_hash", "seed"):
            stream.write(f"# {key}={head[key]}\n")
        stream.write(f"# spec={_dumps(head['spec'])}\n")
        stream.write(f"# versions={_dumps(head['versions'])}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
    it = iter(records)
    index = 0
    while True:
        try:
            rec = next(it)
        except StopIteration:
            break
        except (VRJPError, MemoryError) as exc:
            failures.append({"index": index, "error": f"{type(exc).__name__}: {exc}"})
            index += 1
            continue
        try:
            if writer is None:
                stream.write(_dumps(rec) + "\n")
            else:
                row = dict(rec, n_cuts=None if rec["cuts"] is None else len(rec["cuts"]))
                writer.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])
        except (OSError, TypeError, ValueError) as exc:
            failures.append({"index": rec.get("index", index), "error": f"{type(exc).__name__}: {exc}"})
        index += 1
    return failures


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def read_archive(source):
    """Parse an ndjson archive from a path or text stream into ``(header, records)``."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            return read_archive(fh)
    header = None
    records = []
    for lineno, line in enumerate(source, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedConfigError(f"archive line {lineno} is not JSON: {exc}") from exc
        if obj.get("type") == "header":
            header = obj
        elif obj.get("type") == "run":
            records.append(obj)
    if header is None:
        raise MalformedConfigError("archive has no header record")
    return header, records


def record_trajectory(rec):
    """Rebuild the :class:`Trajectory` stored in a record written with ``events``."""
    if "trajectory" not in rec:
        raise MalformedConfigError("record has no event list (simulate with --events)")
    return Trajectory.from_dict(rec["trajectory"])


def _blocks_from_cuts(cuts):
    return [RegenBlock(b[1] - a[1], b[0] - a[0]) for a, b in zip(cuts, cuts[1:])]


def analyse_records(header, records, *, buffer=None):
    """Speed, CLT, return-probability and tail report for archive records."""
    spec = header["spec"]
    b = int(spec["b"])
    buffer = spec.get("buffer", DEFAULT_BUFFER) if buffer is None else buffer
    report = {"n_runs": len(records), "warnings": []}
    done = [r for r in records if r["stop_reason"] == "max-level" and r["cuts"] is not None]
    block_lists = [_blocks_from_cuts(r["cuts"]) for r in done]
    with_blocks = [bl for bl in block_lists if bl]
    try:
        consts = compute_constants(b)
    except VRJPError as exc:
        consts = None
        report["warnings"].append(f"constants unavailable: {exc}")

    est = None
    if with_blocks:
        tail = sum(r["final_level"] - (r["cuts"][-1][0] if r["cuts"] else 0) for r in done)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InsufficientBlocksWarning)
            est = estimate(with_blocks, censored_tail=tail)
        report["speed"] = est.as_dict()
    else:
        report["warnings"].append("insufficient blocks: no regeneration block in any run")

    if done:
        lv = np.array([r["final_level"] for r in done], dtype=float)
        tm = np.array([r["final_time"] for r in done], dtype=float)
        naive = float(lv.sum() / tm.sum())
        if len(done) >= 2:
            dev = lv - naive * tm
            naive_se = float(np.sqrt(dev @ dev / (len(done) * (len(done) - 1))) / tm.mean())
        else:
            naive_se = float("nan")
        report["naive"] = {"speed": naive, "se": naive_se}
        if est is not None:
            comb = float(np.hypot(est.se_speed, naive_se))
            report["concordance"] = {
                "difference": est.k_hat1 - naive,
                "combined_se": comb,
                "passed": bool(abs(est.k_hat1 - naive) <= 3 * comb and est.k_hat1 > 0),
            }

    if est is not None:
        try:
            report["clt"] = clt_diagnostic(with_blocks, est).as_dict()
        except InsufficientDataError as exc:
            report["warnings"].append(f"clt diagnostic skipped: {exc}")

    if records:
        try:
            rp = return_probability_from_flags(
                b,
                [r["returned"] for r in records],
                [r["two_jump_return"] for r in records],
                [r["stop_reason"] for r in records],
                [r["final_level"] for r in records],
            )
            report["return_probability"] = rp.as_dict()
            if consts is not None:
                report["return_probability"]["alpha_lower"] = consts.alpha_lower
                report["return_probability"]["beta_b"] = consts.beta_b
        except VRJPError as exc:
            report["warnings"].append(f"return probability skipped: {exc}")

    if consts is not None and done:
        ns = [2 * consts.zeta, 4 * consts.zeta, 8 * consts.zeta]
        pts = l1_tail(done, ns, constants=consts, first_levels=[r["first_cut_level"] for r in done])
        report["l1_tail"] = [list(p.as_tuple()) for p in pts]
    return report


def render_report(obj):
    return _dumps(obj) + "\n"


def report_text(obj):
    buf = io.StringIO()
    buf.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True))
    buf.write("\n")
    return buf.getvalue()
