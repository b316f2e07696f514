"""Synthetic workload generation.

Produces time-ordered file requests with Zipf-distributed popularity,
Poisson daily volumes, log-normal file sizes, and an optional regime
shift after which a fraction of requests stream never-seen-before files
(one-time accesses that defeat caching).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidConfig
from .records import FileRequest

DEFAULT_NAMESPACE = "miniaod"


def day_epoch(d: date) -> int:
    """Epoch-seconds of UTC midnight for a calendar day."""
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp())


@dataclass(frozen=True)
class RegimeShift:
    """From ``shift_date`` on, ``streaming_fraction`` of requests hit fresh files."""

    date: date
    streaming_fraction: float


@dataclass(frozen=True)
class WorkloadConfig:
    n_files: int
    n_users: int
    zipf_alpha: float
    mean_requests_per_day: float
    file_size_log_mu: float
    file_size_log_sigma: float
    start_date: date
    end_date: date
    regime_shift: Optional[RegimeShift] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_files < 1 or self.n_users < 1:
            raise InvalidConfig("n_files and n_users must be at least 1")
        if self.zipf_alpha < 0:
            raise InvalidConfig("zipf_alpha must be >= 0")
        if self.mean_requests_per_day < 0:
            raise InvalidConfig("mean_requests_per_day must be >= 0")
        if self.file_size_log_sigma < 0:
            raise InvalidConfig("file_size_log_sigma must be >= 0")
        if self.start_date >= self.end_date:
            raise InvalidConfig("start_date must precede end_date")
        if self.regime_shift is not None:
            frac = self.regime_shift.streaming_fraction
            if not 0.0 <= frac <= 1.0:
                raise InvalidConfig(f"streaming_fraction {frac} outside [0, 1]")

    @classmethod
    def from_json(cls, path: Path | str) -> "WorkloadConfig":
        """Load a workload config from its JSON file form."""
        with Path(path).open("r", encoding="utf-8") as f:
            obj = json.load(f)
        return cls.from_dict(obj)

    @classmethod
    def from_dict(cls, obj: dict) -> "WorkloadConfig":
        shift = None
        if obj.get("regime_shift") is not None:
            shift = RegimeShift(
                date=date.fromisoformat(obj["regime_shift"]["date"]),
                streaming_fraction=float(obj["regime_shift"]["streaming_fraction"]),
            )
        try:
            return cls(
                n_files=int(obj["n_files"]),
                n_users=int(obj["n_users"]),
                zipf_alpha=float(obj["zipf_alpha"]),
                mean_requests_per_day=float(obj["mean_requests_per_day"]),
                file_size_log_mu=float(obj["file_size_log_mu"]),
                file_size_log_sigma=float(obj["file_size_log_sigma"]),
                start_date=date.fromisoformat(obj["start_date"]),
                end_date=date.fromisoformat(obj["end_date"]),
                regime_shift=shift,
                seed=int(obj.get("seed", 0)),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidConfig(f"bad workload config: {exc}") from exc


def zipf_weights(n: int, alpha: float) -> np.ndarray:
    """Normalized Zipf probabilities for ranks 1..n (alpha=0 is uniform)."""
    ranks = np.arange(1, n + 1, dtype=np.float64)
    w = ranks ** (-alpha)
    return w / w.sum()


def _file_sizes(rng: np.random.Generator, cfg: WorkloadConfig, n: int) -> np.ndarray:
    raw = rng.lognormal(cfg.file_size_log_mu, cfg.file_size_log_sigma, n)
    return np.maximum(1, raw).astype(np.int64)


def generate_workload(cfg: WorkloadConfig) -> list[FileRequest]:
    """Generate the full time-ordered request stream for a config.

    Pure function of the config: equal seeds give bitwise-identical
    output. Catalog files are named f<rank> (f0 most popular); streaming
    files after a regime shift are named s<counter> and never repeat.
    Generated requests read whole files (request_size == file_size).
    """
    rng = np.random.default_rng(cfg.seed)
    sizes = _file_sizes(rng, cfg, cfg.n_files)
    probs = zipf_weights(cfg.n_files, cfg.zipf_alpha)
    shift = cfg.regime_shift

    requests: list[FileRequest] = []
    stream_counter = 0
    n_days = (cfg.end_date - cfg.start_date).days
    for day_idx in range(n_days):
        day = date.fromordinal(cfg.start_date.toordinal() + day_idx)
        base = day_epoch(day)
        count = int(rng.poisson(cfg.mean_requests_per_day))
        if count == 0:
            continue
        times = base + rng.integers(0, 86400, count)
        users = rng.integers(0, cfg.n_users, count)
        file_idx = rng.choice(cfg.n_files, size=count, p=probs)
        if shift is not None and day >= shift.date:
            streaming = rng.random(count) < shift.streaming_fraction
        else:
            streaming = np.zeros(count, dtype=bool)
        stream_sizes = _file_sizes(rng, cfg, int(streaming.sum()))

        order = np.argsort(times, kind="stable")
        stream_pos = 0
        for j in order:
            if streaming[j]:
                fid = f"s{stream_counter}"
                stream_counter += 1
                fsize = int(stream_sizes[stream_pos])
                stream_pos += 1
            else:
                fid = f"f{int(file_idx[j])}"
                fsize = int(sizes[file_idx[j]])
            requests.append(
                FileRequest(
                    time=int(times[j]),
                    user_id=f"u{int(users[j])}",
                    file_id=fid,
                    file_size=fsize,
                    request_size=fsize,
                    namespace=DEFAULT_NAMESPACE,
                )
            )
    return requests
