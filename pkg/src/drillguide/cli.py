"""Command line front end.

Exit codes: 0 on success, 2 for usage errors and bad inputs (malformed
files, mismatched grids, busy port), 1 for unexpected failures.
"""

import argparse
import json
import socket
import sys
import traceback
from pathlib import Path

import numpy as np

from .distance import DistanceField, compose_min, exact_edt, load_field, save_field, signed_edt
from .engine import DrillConfig, config_from_doc, load_trajectory, run_trajectory
from .errors import (
    DimensionMismatch,
    DrillGuideError,
    EmptyStructure,
    InvalidConfig,
    UnknownCase,
)
from .fileio import canonical_json
from .guidance import Zone, build_plan, load_plan, save_plan
from .metrics import read_event_log, session_report, write_event_log
from .volume import GridSpec, LabelVolume, load_volume, mask_of, save_volume

__all__ = ["main"]


def _load_config(path) -> DrillConfig:
    if path is None:
        return DrillConfig()
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidConfig(f"{path}: config must be a JSON object")
    return config_from_doc(doc)


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def cmd_convert(args) -> int:
    """Wrap raw uint8 labels into a volume file."""
    raw = Path(args.labels).read_bytes()
    try:
        spec = GridSpec(tuple(args.dims), tuple(args.spacing), tuple(args.origin))
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    if len(raw) != spec.n_voxels:
        raise DimensionMismatch(
            f"{args.labels}: {len(raw)} bytes, dims need {spec.n_voxels}")
    labels = np.frombuffer(raw, dtype=np.uint8).reshape(spec.dims, order="F")
    if args.palette:
        doc = json.loads(Path(args.palette).read_text("utf-8"))
        palette = {int(c): str(n) for c, n in doc.items()}
    else:
        palette = {int(c): f"label{int(c)}" for c in np.unique(labels)}
        palette[0] = "EMPTY"
    volume = LabelVolume(spec, labels.copy(), palette)
    save_volume(volume, args.out)
    print(f"wrote {args.out}: dims {spec.dims}, {len(palette)} palette entries")
    return 0


def cmd_edt(args) -> int:
    """Signed field for one structure, or the min of existing fields."""
    if args.compose:
        fields = [load_field(p) for p in args.compose]
        save_field(compose_min(fields), args.out)
        print(f"wrote {args.out}: min of {len(fields)} fields")
        return 0
    volume = load_volume(args.volume)
    if args.signed:
        fld = signed_edt(volume, args.codes, structure_name=args.name)
    else:
        mask = mask_of(volume, args.codes)
        if mask.count == 0:
            raise EmptyStructure(f"no voxel carries codes {sorted(args.codes)}")
        name = args.name or "+".join(volume.palette[c] for c in sorted(set(args.codes)))
        fld = DistanceField(volume.spec, exact_edt(mask), name)
    save_field(fld, args.out)
    lo, hi = float(fld.values.min()), float(fld.values.max())
    print(f"wrote {args.out}: {fld.structure_name}, range [{lo:.3f}, {hi:.3f}] mm")
    return 0


def _parse_protect(tokens) -> list[tuple[str, float]]:
    """--protect FIELD.capf[=RED_MM]; red shell defaults to 1.0 mm."""
    out = []
    for tok in tokens:
        path, sep, mm = tok.rpartition("=")
        if sep and path:
            try:
                out.append((path, float(mm)))
                continue
            except ValueError:
                pass
        out.append((tok, 1.0))
    return out


def cmd_plan(args) -> int:
    """Build a zone plan from a volume and protected-structure fields."""
    volume = load_volume(args.volume)
    protect = [(load_field(path), mm) for path, mm in _parse_protect(args.protect)]
    plan = build_plan(volume, args.target_codes, protect,
                      yellow_mm=args.yellow_mm,
                      cortical_shell_mm=args.cortical_shell_mm)
    save_plan(plan, args.out)
    counts = " ".join(f"{z.name}={plan.planned_counts[z]}"
                      for z in Zone if z is not Zone.EMPTY)
    print(f"wrote {args.out}: {counts}")
    return 0


def cmd_simulate(args) -> int:
    """Replay a trajectory file offline and write the removal log."""
    plan = load_plan(args.plan)
    bone = load_field(args.bone_field)
    cfg = _load_config(args.config)
    samples = load_trajectory(args.traj)
    log = run_trajectory(plan, bone, cfg, samples, home_pose_mm=tuple(args.home_pose))
    write_event_log(log, args.out_log)
    span = 0.0 if len(log) < 2 else (log[-1].t_ms - log[0].t_ms) / 1000.0
    print(f"wrote {args.out_log}: {len(log)} removals over {span:.3f} s")
    return 0


def _fmt_pct(v) -> str:
    return "-" if v is None else f"{v:7.2f}"


def cmd_report(args) -> int:
    """Score one or more session logs and write the report document."""
    logs = [read_event_log(p) for p in args.logs]
    plan_paths = list(args.plans)
    if len(plan_paths) == 1:
        plan_paths = plan_paths * len(logs)
    plans = [load_plan(p) for p in plan_paths]
    ids = args.session_ids or [Path(p).stem for p in args.logs]
    report = session_report(logs, plans, args.labels, session_ids=ids,
                            min_voxels=args.min_voxels,
                            merge_window_ms=args.merge_window_ms)
    Path(args.out).write_text(canonical_json(report) + "\n", "utf-8")

    head = f"{'session':<24}{'label':<12}{'GREEN%':>8}{'YELLOW%':>8}{'RED%':>8}" \
           f"{'ANAT%':>8}{'time_s':>9}{'breach':>7}"
    print(head)
    for row in report["sessions"]:
        pct = row["completion_pct"]
        print(f"{row['session_id']:<24}{row['label']:<12}"
              f"{_fmt_pct(pct['GREEN']):>8}{_fmt_pct(pct['YELLOW']):>8}"
              f"{_fmt_pct(pct['RED']):>8}{_fmt_pct(pct['ANATOMY']):>8}"
              f"{row['drill_time_s']:>9.3f}{row['breach_count']:>7}")
    if report["t_tests"]:
        alt = next(iter(report["t_tests"].values()))["alternative"]
        print(f"\npaired one-sided t-tests ({alt}):")
        for name, res in report["t_tests"].items():
            if res["t_stat"] is None:  # degenerate case, infinite statistic
                t = "-inf" if res["mean_diff"] < 0 else "inf"
            else:
                t = f"{res['t_stat']:.4f}"
            print(f"  {name:<22} t={t:>9} df={res['df']} p={res['p_one_sided']:.6f}")
    print(f"\nwrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    """Run the session service with uvicorn."""
    import uvicorn

    from .service import create_app

    cases = Path(args.cases_dir)
    if not cases.is_dir():
        raise UnknownCase(f"case directory {cases} does not exist")
    # fail fast with a clean exit code instead of a uvicorn stack trace
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.host, args.port))
    except OSError as exc:
        probe.close()
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 2
    probe.close()
    app = create_app(cases, log_dir=args.log_dir, max_sessions=args.max_sessions,
                     ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drillguide",
        description="Distance-field guided voxel drilling toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="wrap raw uint8 labels into a volume file")
    p.add_argument("--labels", required=True, help="raw uint8 payload, x-fastest")
    p.add_argument("--dims", required=True, type=int, nargs=3,
                   metavar=("NX", "NY", "NZ"))
    p.add_argument("--spacing", type=float, nargs=3, default=[0.48, 0.48, 0.48],
                   metavar=("SX", "SY", "SZ"), help="voxel size in mm")
    p.add_argument("--origin", type=float, nargs=3, default=[0.0, 0.0, 0.0],
                   metavar=("OX", "OY", "OZ"))
    p.add_argument("--palette", help="JSON file mapping code to structure name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("edt", help="signed distance field of a structure")
    p.add_argument("--volume")
    p.add_argument("--codes", type=int, nargs="+", help="label codes of the structure")
    p.add_argument("--signed", action=argparse.BooleanOptionalAction, default=True,
                   help="signed field (default); --no-signed stores distance to the structure")
    p.add_argument("--name", help="structure name stored in the field")
    p.add_argument("--compose", nargs="+", metavar="FIELD",
                   help="instead: voxelwise min of existing field files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_edt)

    p = sub.add_parser("plan", help="build guidance zones")
    p.add_argument("--volume", required=True)
    p.add_argument("--target-codes", required=True, type=int, nargs="+")
    p.add_argument("--protect", required=True, action="append",
                   metavar="FIELD[=RED_MM]",
                   help="protected field and red shell in mm (default 1.0)")
    p.add_argument("--yellow-mm", type=float, default=1.0)
    p.add_argument("--cortical-shell-mm", type=float, default=1.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="replay a trajectory offline")
    p.add_argument("--plan", required=True)
    p.add_argument("--bone-field", required=True, help="signed bone field file")
    p.add_argument("--traj", required=True, help="pose samples, JSON lines")
    p.add_argument("--config", help="JSON drill config overrides")
    p.add_argument("--home-pose", type=float, nargs=3, default=[0.0, 0.0, 0.0],
                   metavar=("X", "Y", "Z"))
    p.add_argument("--out-log", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="score session logs")
    p.add_argument("--logs", required=True, nargs="+",
                   help="removal log per session")
    p.add_argument("--plans", required=True, nargs="+",
                   help="plan per session, or one plan for all")
    p.add_argument("--labels", required=True, nargs="+",
                   help="condition tag per session")
    p.add_argument("--session-ids", nargs="+")
    p.add_argument("--min-voxels", type=int, default=5)
    p.add_argument("--merge-window-ms", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--cases-dir", required=True,
                   help="directory of case subdirectories")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log-dir")
    p.add_argument("--max-sessions", type=int, default=16)
    p.add_argument("--ui", help="built web client directory, served at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "edt" and not args.compose:
        if not (args.volume and args.codes):
            build_parser().error("edt needs --volume and --codes, or --compose")
    try:
        return args.func(args)
    except DrillGuideError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
