"""
Deterministic drilling and session scoring
==========================================

A scripted tool path drills the slab phantom twice: once stopping at the
yellow buffer the way a guided operator would, once pushing straight
through toward the canal.  The removal logs are then scored and compared.
"""

from drillguide import (
    DrillState,
    PoseSample,
    Zone,
    detect_breaches,
    make_slab_case,
    run_trajectory,
    session_report,
    tick,
)

case = make_slab_case()
cx, cy = case.center_xy_mm
TICK = case.cfg.tick_ms


def descent(bottom_mm, n_ticks=220):
    """Steady plunge down the middle column, stopping at bottom_mm."""
    z0 = 9.8
    dz = (z0 - bottom_mm) / n_ticks
    return [PoseSample(TICK * (i + 1), (cx, cy, z0 - dz * (i + 1)), True)
            for i in range(n_ticks)]


# 1. what one tick feeds back: force rises in hard bone, pitch rises near
#    the surface, and the warning tracks the worst zone removed
state = DrillState.fresh(case.plan, case.home_pose_mm)
print("tick-by-tick feedback while plunging (every 20th tick):")
print(f"  {'t_ms':>6} {'z_mm':>6} {'removed':>7} {'force_N':>8} "
      f"{'audio_Hz':>9}  warning")
for i, s in enumerate(descent(4.2)):
    out = tick(state, s.pos_mm, s.on, case.cfg, case.plan, case.bone_field)
    if i % 20 == 0 or out.warning.name == "RED":
        print(f"  {state.sim_time_ms:>6} {s.pos_mm[2]:>6.2f} "
              f"{len(out.removed):>7} {out.force_n:>8.2f} "
              f"{out.audio_hz:>9.1f}  {out.warning.name}")
        if out.warning.name == "RED":
            break

# 2. replaying a recorded trajectory gives the same log every time
guided_path = descent(7.6)       # tip sphere never reaches the red plates
unguided_path = descent(4.2)     # drives into the canal shell
guided = run_trajectory(case.plan, case.bone_field, case.cfg, guided_path,
                        case.home_pose_mm)
unguided = run_trajectory(case.plan, case.bone_field, case.cfg, unguided_path,
                          case.home_pose_mm)
assert guided == run_trajectory(case.plan, case.bone_field, case.cfg,
                                guided_path, case.home_pose_mm)
print(f"\nguided run:   {len(guided)} removals, "
      f"breaches: {len(detect_breaches(guided))}")
print(f"unguided run: {len(unguided)} removals, "
      f"breaches: {len(detect_breaches(unguided))}")

# 3. scoring a batch: completion per zone, active time, breaches, and a
#    paired comparison between the two conditions
variant = [PoseSample(s.t_ms, (s.pos_mm[0] + 0.3, s.pos_mm[1], s.pos_mm[2]),
                      s.on) for s in guided_path]
variant_deep = [PoseSample(s.t_ms, (s.pos_mm[0] + 0.3, s.pos_mm[1],
                                    s.pos_mm[2]), s.on) for s in unguided_path]
logs = [
    guided,
    run_trajectory(case.plan, case.bone_field, case.cfg, variant,
                   case.home_pose_mm),
    unguided,
    run_trajectory(case.plan, case.bone_field, case.cfg, variant_deep,
                   case.home_pose_mm),
]
report = session_report(logs, [case.plan] * 4,
                        ["guided", "guided", "unguided", "unguided"])

print("\nsession rows:")
for row in report["sessions"]:
    pct = row["completion_pct"]
    green = f"{pct['GREEN']:.1f}%" if pct["GREEN"] is not None else "-"
    print(f"  {row['session_id']}  {row['label']:<9} green {green:>7}  "
          f"time {row['drill_time_s']:6.2f} s  breaches {row['breach_count']}")

print("\npaired one-sided tests (guided > unguided):")
for name, res in report["t_tests"].items():
    if res["t_stat"] is None:  # every pair moved the same way
        t = "-inf" if res["mean_diff"] < 0 else "inf"
    else:
        t = f"{res['t_stat']:.3f}"
    print(f"  {name:<22} t = {t:>7}  p = {res['p_one_sided']:.4f}")

worst = {Zone[z] for log in logs[2:] for z in
         (ev.zone.name for ev in log)}
print("\nthe unguided runs removed zones:",
      ", ".join(sorted(z.name for z in worst)))
