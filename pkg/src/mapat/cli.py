"""Command line front end: ``mapat {trace,locate,montecarlo,quantize,lobes}``.

Exit status is 0 on success, 1 for usage, file or parse errors and 2 when the
UE cannot be reached or located. Angles are printed in degrees, delays in
nanoseconds, distances in meters and localization errors in centimeters.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import locate_many
from .error_model import noisy_measurements, run_trials
from .exceptions import MapAtError, NoCandidatesError, UnreachableError
from .gpp import TS, extract_lobes, load_profile_csv, rstd_resolution, ta_min_distance, utdoa_resolution
from .scenario import ScenarioConfig, load_scenario
from .tracer import format_interactions, los_visible, trace_paths

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2

TRACE_HEADER = ["aoa_deg", "tof_ns", "path_length_m", "n_interactions", "interactions", "power_dbm"]
MC_HEADER = [
    "label", "x_m", "y_m", "distance_m", "link_type", "n_mpcs",
    "mean_error_cm", "std_error_cm", "outage_rate",
]
LOBE_HEADER = ["mean_angle_deg", "total_power_db", "n_samples"]

DISTANCE_BINS = (("<10", 0.0, 10.0), ("10-35", 10.0, 35.0), ("all", 0.0, math.inf))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _link_type(scn: ScenarioConfig, ue) -> str:
    # a partition in the way makes the link NLOS even if it lets the signal through
    _, crossed = los_visible(scn.floor_map, scn.bs, ue)
    return "LOS" if crossed == 0 else "NLOS"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_trace(args) -> int:
    scn = load_scenario(args.scenario)
    ue = scn.ue(args.ue)
    mpcs = trace_paths(scn.floor_map, scn.bs, ue, scn.trace_params)
    rows = [
        [
            f"{math.degrees(m.aoa_at_bs):.6f}", f"{m.tof * 1e9:.6f}", f"{m.path_length:.6f}",
            m.n_interactions, format_interactions(m.interaction_walls), f"{m.power_dbm:.3f}",
        ]
        for m in mpcs
    ]
    sys.stdout.write(_csv_text(TRACE_HEADER, rows))
    if not mpcs:
        print(f"warning: UE {args.ue!r} is unreachable from the BS", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_locate(args) -> int:
    scn = load_scenario(args.scenario)
    ue = scn.ue(args.ue)
    mpcs = trace_paths(scn.floor_map, scn.bs, ue, scn.trace_params)
    if not mpcs:
        raise UnreachableError(f"UE {args.ue!r} is unreachable from the BS")
    if args.noise:
        noise = scn.noise if args.seed is None else replace(scn.noise, seed=args.seed)
        # run 0 of the Monte Carlo stream
        aoas, tofs = noisy_measurements(mpcs, noise, 0, 1)
    else:
        aoas = np.array([[m.aoa_at_bs for m in mpcs]])
        tofs = np.array([[m.tof for m in mpcs]])
    res = locate_many(scn.floor_map, scn.bs, aoas, tofs, scn.map_at_params)
    if res["n_candidates"][0] == 0:
        raise NoCandidatesError(f"no candidate locations for UE {args.ue!r}")
    x, y = res["xy"][0]
    print(f"ue: {args.ue}")
    print(f"truth_m: {ue.x:.6f} {ue.y:.6f}")
    print(f"estimate_m: {x:.6f} {y:.6f}")
    print(f"error_m: {math.hypot(x - ue.x, y - ue.y):.6e}")
    print(f"n_mpcs: {len(mpcs)}")
    print(f"support: {res['support'][0]}")
    print(f"n_candidates: {res['n_candidates'][0]}")
    print(f"tie: {str(bool(res['tie'][0])).lower()}")
    return EXIT_OK


def _ue_stats(scn: ScenarioConfig, label, ue, runs, threads) -> dict:
    d = scn.bs.distance_to(ue)
    row = {"label": label, "ue": ue, "distance": d, "link": _link_type(scn, ue),
           "n_mpcs": 0, "mean": None, "std": None, "outage_rate": 1.0}
    mpcs = trace_paths(scn.floor_map, scn.bs, ue, scn.trace_params)
    if not mpcs:
        print(f"warning: UE {label!r} is unreachable from the BS", file=sys.stderr)
        return row
    res = run_trials(scn.floor_map, scn.bs, mpcs, scn.map_at_params, scn.noise, runs, threads)
    ok = res.ok
    err = np.hypot(res.xy[ok, 0] - ue.x, res.xy[ok, 1] - ue.y)
    row["n_mpcs"] = len(mpcs)
    row["outage_rate"] = 1.0 - ok.mean()
    if err.size:
        row["mean"] = float(err.mean())
        row["std"] = float(err.std())
    else:
        print(f"warning: UE {label!r} produced no candidate in any run", file=sys.stderr)
    return row


def _fmt(v: Optional[float], scale: float = 1.0, digits: int = 3) -> str:
    return "" if v is None else f"{v * scale:.{digits}f}"


def summary_table(rows: Sequence[dict]) -> str:
    """Per distance bin and link type: mean/std of UE distance and of per-UE mean error."""
    lines = [
        f"{'bin_m':<7}{'link':<6}{'n_ue':>5}{'mu_d_m':>9}{'sigma_d_m':>11}"
        f"{'mu_eps_cm':>11}{'sigma_eps_cm':>14}"
    ]
    for name, lo, hi in DISTANCE_BINS:
        for link in ("LOS", "NLOS"):
            sel = [r for r in rows if r["link"] == link and lo <= r["distance"] < hi and r["mean"] is not None]
            n = len(sel)
            d = np.array([r["distance"] for r in sel])
            e = np.array([r["mean"] for r in sel]) * 100
            cells = ["-"] * 4
            if n:
                cells = [f"{d.mean():.2f}", f"{d.std():.2f}" if n > 1 else "-",
                         f"{e.mean():.2f}", f"{e.std():.2f}" if n > 1 else "-"]
            lines.append(f"{name:<7}{link:<6}{n:>5}{cells[0]:>9}{cells[1]:>11}{cells[2]:>11}{cells[3]:>14}")
    return "\n".join(lines) + "\n"


def cmd_montecarlo(args) -> int:
    scn = load_scenario(args.scenario)
    if args.runs is not None:
        scn = replace(scn, runs=args.runs)
    if args.seed is not None:
        scn = replace(scn, noise=replace(scn.noise, seed=args.seed))
    out = None
    if args.out is not None:
        # fail before the simulation, not after it
        try:
            out = open(args.out, "w", encoding="utf-8", newline="")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_USAGE
    try:
        rows = [_ue_stats(scn, label, ue, scn.runs, args.threads) for label, ue in scn.ues]
        if out is not None:
            out.write(_csv_text(MC_HEADER, [
                [r["label"], f"{r['ue'].x:.3f}", f"{r['ue'].y:.3f}", f"{r['distance']:.3f}", r["link"],
                 r["n_mpcs"], _fmt(r["mean"], 100), _fmt(r["std"], 100), f"{r['outage_rate']:.4f}"]
                for r in rows
            ]))
    finally:
        if out is not None:
            out.close()
    print(f"runs per UE: {scn.runs}, seed: {scn.noise.seed}")
    sys.stdout.write(summary_table(rows))
    return EXIT_OK


def cmd_quantize(args) -> int:
    if args.mu is not None:
        value = ta_min_distance(args.mu)
    elif args.rstd_ts is not None:
        value = rstd_resolution(args.rstd_ts * TS)
    else:
        value = utdoa_resolution()
    print(f"{value:.2f} m")
    return EXIT_OK


def cmd_lobes(args) -> int:
    profile = load_profile_csv(Path(args.profile).read_text(encoding="utf-8"))
    lobes = extract_lobes(profile, args.threshold_db)
    sys.stdout.write(_csv_text(LOBE_HEADER, [
        [f"{math.degrees(lb.mean_angle):.6f}", f"{lb.total_power_db:.6f}", len(lb.member_indices)]
        for lb in lobes
    ]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mapat", description="Map-assisted mmWave positioning simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("trace", help="list the propagation paths from the BS to one UE as CSV")
    t.add_argument("scenario")
    t.add_argument("ue", help="UE label")
    t.set_defaults(func=cmd_trace)

    lo = sub.add_parser("locate", help="locate one UE from its traced paths")
    lo.add_argument("scenario")
    lo.add_argument("ue", help="UE label")
    lo.add_argument("--noise", action=argparse.BooleanOptionalAction, default=True,
                    help="perturb the paths with the scenario noise (default on)")
    lo.add_argument("--seed", type=int, help="override the scenario noise seed")
    lo.set_defaults(func=cmd_locate)

    mc = sub.add_parser("montecarlo", help="error statistics for every UE of a scenario")
    mc.add_argument("scenario")
    mc.add_argument("--runs", type=int, help="override the scenario run count")
    mc.add_argument("--seed", type=int, help="override the scenario noise seed")
    mc.add_argument("--out", help="write per-UE rows to this CSV file")
    mc.add_argument("--threads", type=int, help="worker threads (default MAPAT_THREADS, 0 = all cores)")
    mc.set_defaults(func=cmd_montecarlo)

    q = sub.add_parser("quantize", help="3GPP distance resolutions")
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--mu", type=int, help="timing advance numerology (0..5)")
    g.add_argument("--rstd-ts", type=float, help="RSTD value in units of Ts")
    g.add_argument("--utdoa", action="store_true", help="uplink TDOA resolution")
    q.set_defaults(func=cmd_quantize)

    lb = sub.add_parser("lobes", help="spatial lobes of an azimuth power profile CSV")
    lb.add_argument("profile")
    lb.add_argument("--threshold-db", type=float, default=10.0)
    lb.set_defaults(func=cmd_lobes)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "runs", None) is not None and args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (NoCandidatesError, UnreachableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (MapAtError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
