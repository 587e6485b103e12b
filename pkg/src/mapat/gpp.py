"""3GPP reporting arithmetic and spatial-lobe extraction from azimuth sweeps.

Distances are one-way meters, delays seconds. ``TS`` is the basic time unit used
by the timing reports. Report quanta are converted between seconds and meters
with the nominal ``3e8`` m/s of the reporting tables (``NOMINAL_C``), so that
half a ``TS`` is 4.878 m and two ``TS`` are 19.513 m.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import TWO_PI
from .exceptions import OutOfRangeError, PreconditionError, ProfileParseError
from .geometry import normalize_azimuth

#: Basic time unit, seconds.
TS = 32.522e-9

#: Speed of light as rounded in the reporting resolution figures, m/s.
NOMINAL_C = 3.0e8

#: One-way timing-advance distance at 15 kHz subcarrier spacing, meters.
TA_BASE_DISTANCE_M = 78.12

RSTD_FINE_LIMIT_TS = 4096
RSTD_MAX_TS = 15391

# slack on the regime comparisons, in units of TS
_TS_SLACK = 1e-9


def ta_min_distance(mu: int) -> float:
    """Minimum reportable one-way distance for subcarrier spacing ``2**mu * 15`` kHz."""
    if isinstance(mu, bool) or int(mu) != mu or not 0 <= mu <= 5:
        raise PreconditionError(f"mu must be an integer in 0..5, got {mu!r}")
    return TA_BASE_DISTANCE_M / 2 ** int(mu)


def rstd_resolution(rstd: float) -> float:
    """Distance resolution of a reference signal timing difference report.

    Half a ``TS`` up to and including ``4096 TS``, one ``TS`` above that, up to
    ``15391 TS``.
    """
    n_ts = rstd / TS
    if not math.isfinite(n_ts) or n_ts < 0:
        raise OutOfRangeError(f"RSTD must be >= 0, got {rstd}")
    if n_ts > RSTD_MAX_TS + _TS_SLACK:
        raise OutOfRangeError(f"RSTD of {n_ts:.3f} Ts exceeds the reportable {RSTD_MAX_TS} Ts")
    if n_ts <= RSTD_FINE_LIMIT_TS + _TS_SLACK:
        return NOMINAL_C * 0.5 * TS
    return NOMINAL_C * TS


def utdoa_resolution() -> float:
    """Finest uplink TDOA distance resolution (``2 TS``)."""
    return NOMINAL_C * 2 * TS


def absolute_delays(ta_rtt: float, relative_delays: Sequence[float]) -> list[float]:
    """Absolute per-path delays: half the round trip plus each relative delay."""
    if not ta_rtt > 0:
        raise PreconditionError("ta_rtt must be positive")
    rel = list(relative_delays)
    if not rel:
        raise PreconditionError("need at least the first-path relative delay (0)")
    if any(d < 0 for d in rel):
        raise PreconditionError("relative delays must be non-negative")
    if rel[0] != 0:
        raise PreconditionError("the first relative delay is the reference and must be 0")
    half = ta_rtt / 2
    return [half + d for d in rel]


def quantize_delay(delay: float, resolution_m: float) -> float:
    """Round a delay to the nearest multiple of ``resolution_m / c``; halves round up."""
    if delay < 0:
        raise PreconditionError("delay must be >= 0")
    if not resolution_m > 0:
        raise PreconditionError("resolution_m must be positive")
    q = resolution_m / NOMINAL_C
    return math.floor(delay / q + 0.5) * q


@dataclass(frozen=True)
class PowerAngleProfile:
    """Uniform azimuth sweep.

    ``azimuths`` (radians) must be strictly increasing with spacing
    ``angular_step`` and span less than a full turn. When the sweep covers the
    whole circle (``len * step == 2*pi``) the last and first samples are
    neighbours.
    """

    azimuths: np.ndarray
    power_db: np.ndarray
    angular_step: float

    def __post_init__(self):
        az = np.asarray(self.azimuths, dtype=np.float64)
        pw = np.asarray(self.power_db, dtype=np.float64)
        if az.ndim != 1 or az.shape != pw.shape or az.size == 0:
            raise PreconditionError("azimuths and power_db must be equal-length, non-empty 1-D")
        if not (np.all(np.isfinite(az)) and np.all(np.isfinite(pw))):
            raise PreconditionError("profile values must be finite")
        if not self.angular_step > 0:
            raise PreconditionError("angular_step must be positive")
        if az.size > 1:
            d = np.diff(az)
            if np.any(d <= 0):
                raise PreconditionError("azimuths must be strictly increasing")
            if np.max(np.abs(d - self.angular_step)) > 1e-9:
                raise PreconditionError("azimuths must be uniformly spaced by angular_step")
            if az[-1] - az[0] >= TWO_PI:
                raise PreconditionError("profile must span less than a full turn")
        object.__setattr__(self, "azimuths", az)
        object.__setattr__(self, "power_db", pw)

    def __len__(self):
        return self.azimuths.size

    @property
    def circular(self) -> bool:
        return abs(len(self) * self.angular_step - TWO_PI) <= 1e-9 * max(1, len(self))

    @classmethod
    def from_degrees(cls, azimuth_deg: Sequence[float], power_db: Sequence[float],
                     step_deg: float | None = None) -> PowerAngleProfile:
        az = np.radians(np.asarray(azimuth_deg, dtype=np.float64))
        if step_deg is None:
            step = (az[-1] - az[0]) / (az.size - 1) if az.size > 1 else TWO_PI
        else:
            step = math.radians(step_deg)
        return cls(az, np.asarray(power_db, dtype=np.float64), step)


@dataclass(frozen=True)
class Lobe:
    mean_angle: float
    total_power_db: float
    #: sample indices in sweep order; may wrap from the last sample to the first
    member_indices: tuple[int, ...]


def _runs(marked: np.ndarray, circular: bool) -> list[list[int]]:
    n = marked.size
    if marked.all():
        return [list(range(n))]
    runs: list[list[int]] = []
    cur: list[int] = []
    for i in range(n):
        if marked[i]:
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    if circular and len(runs) > 1 and marked[0] and marked[-1]:
        tail = runs.pop()
        runs[0] = tail + runs[0]
    return runs


def lobe_mean_angle(azimuths: np.ndarray, linear_power: np.ndarray) -> float:
    """Power-weighted circular mean ``arg(sum P_i exp(j theta_i))`` in ``[0, 2*pi)``."""
    s = np.sum(linear_power * np.exp(1j * np.asarray(azimuths)))
    return normalize_azimuth(math.atan2(s.imag, s.real))


def extract_lobes(profile: PowerAngleProfile, threshold_db: float = 10.0) -> list[Lobe]:
    """Contiguous runs of samples within ``threshold_db`` of the peak.

    Each lobe's angle is the linear-power-weighted circular mean of its
    samples. Lobes are returned strongest first.
    """
    if threshold_db < 0:
        raise PreconditionError("threshold_db must be >= 0")
    pw = profile.power_db
    peak = pw.max()
    marked = pw >= peak - threshold_db
    # relative to the peak so large absolute levels cannot overflow
    lin = 10.0 ** ((pw - peak) / 10.0)
    lobes = []
    for idx in _runs(marked, profile.circular):
        ii = np.asarray(idx)
        lobes.append(
            Lobe(
                mean_angle=lobe_mean_angle(profile.azimuths[ii], lin[ii]),
                total_power_db=float(peak + 10.0 * np.log10(lin[ii].sum())),
                member_indices=tuple(idx),
            )
        )
    lobes.sort(key=lambda lb: (-lb.total_power_db, lb.member_indices[0]))
    return lobes


def load_profile_csv(text: str) -> PowerAngleProfile:
    """Parse ``azimuth_deg,power_db`` CSV text into a profile."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ProfileParseError("empty file", line=1) from None
    if [h.strip() for h in header] != ["azimuth_deg", "power_db"]:
        raise ProfileParseError("expected header 'azimuth_deg,power_db'", line=1)
    az, pw = [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ProfileParseError(f"expected 2 fields, got {len(row)}", line=line)
        try:
            a, p = float(row[0]), float(row[1])
        except ValueError:
            raise ProfileParseError(f"non-numeric value in {row!r}", line=line) from None
        if not (math.isfinite(a) and math.isfinite(p)):
            raise ProfileParseError("values must be finite", line=line)
        if az and a <= az[-1]:
            raise ProfileParseError("azimuth_deg must be strictly increasing", line=line)
        az.append(a)
        pw.append(p)
    if not az:
        raise ProfileParseError("no samples", line=reader.line_num)
    try:
        return PowerAngleProfile.from_degrees(az, pw)
    except PreconditionError as exc:
        raise ProfileParseError(str(exc)) from None


def dump_profile_csv(profile: PowerAngleProfile) -> str:
    lines = ["azimuth_deg,power_db"]
    for a, p in zip(np.degrees(profile.azimuths), profile.power_db):
        lines.append(f"{float(a)!r},{float(p)!r}")
    return "\n".join(lines) + "\n"
