"""Blend jump physics with the same weights used for levels, derive the
per-frame arcs, and fit impulse/gravity summaries.

Run: python demos/03_jump_blending.py
"""

from blendworks import JumpModel, blend_jump, derive_arc, fit_impulse_gravity

floaty = JumpModel(initial_velocity=2.0, rise_gravity=0.3, fall_gravity=0.35,
                   max_hold_frames=3, horizontal_speed=1.0)
snappy = JumpModel(initial_velocity=2.8, rise_gravity=0.9, fall_gravity=1.1,
                   max_hold_frames=0, horizontal_speed=1.4)


def show(name, model):
    arc = derive_arc(model)
    fit = fit_impulse_gravity(arc)
    peak = arc.apex
    rows = []
    for dy in range(peak, -1, -1):
        row = "".join("*" if off[1] == dy else "." for off in arc.offsets)
        rows.append(row)
    print(f"{name}: {arc.frames} frames, apex {peak} tiles, "
          f"fitted impulse {fit.impulse:.2f}, gravity {fit.gravity:.2f}")
    for row in rows:
        print("   " + row)
    print()


show("floaty jump", floaty)
show("snappy jump", snappy)

for w in ([1, 0], [0.5, 0.5], [0, 1]):
    blended = blend_jump([floaty, snappy], w)
    show(f"blend {w}", blended)
