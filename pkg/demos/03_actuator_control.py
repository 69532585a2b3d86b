"""
Tactor drive: homing, step response, stimulus trajectory
========================================================

Each tactor axis is a geared micro motor on a 0.7 mm-pitch leadscrew with
a 617 counts/rev encoder, position-controlled at 100 Hz by a min-max
(bang-off-bang) duty law with a 60-count deadband. Zero is found by
stalling against an end stop and centering.
"""

import numpy as np
import matplotlib.pyplot as plt

from gripsense import (ActuatorSpec, ActuatorState, Axis, control_step,
                       counts_to_mm, home, mm_to_counts, plan_stimulus)
from dataclasses import replace

spec = ActuatorSpec()
print(f"resolution: {spec.mm_per_count * 1e3:.3f} um/count, "
      f"speed {spec.travel_mm_per_s:.2f} mm/s, "
      f"deadband {counts_to_mm(spec.settle_band_counts, spec) * 1e3:.0f} um")

# %% Homing from an unknown offset
start = ActuatorState(axis=Axis.X, offset_from_mid_counts=700.0)
homed = home(start, spec)
print(f"homed: encoder zero sits {counts_to_mm(homed.offset_from_mid_counts, spec) * 1e3:+.1f} um from true mid-travel")

# %% Step response to a 1.5 mm target
state = replace(homed, target_counts=float(mm_to_counts(1.5, spec)))
trace = [state.position_counts]
while abs(state.error_counts) > spec.settle_band_counts:
    state = control_step(state, spec)
    trace.append(state.position_counts)
print(f"1.5 mm step settles in {len(trace) - 1} ticks "
      f"({(len(trace) - 1) * 10} ms)")

# %% Out-and-back skin-stretch stimulus
trajectory = plan_stimulus(1.5, Axis.X, spec)
target_t = [0.0] + [t for t, _ in trajectory]
target_mm = [0.0] + [counts_to_mm(c, spec) for _, c in trajectory]

follow = replace(homed, target_counts=0.0)
actual_mm = [0.0]
for _, counts in trajectory:
    follow = replace(follow, target_counts=float(counts))
    follow = control_step(follow, spec)
    actual_mm.append(follow.position_mm(spec))

plt.figure(figsize=(7, 3.2))
plt.subplot(1, 2, 1)
plt.plot(np.arange(len(trace)) * 10, [counts_to_mm(c, spec) for c in trace])
plt.xlabel("time (ms)")
plt.ylabel("position (mm)")
plt.title("1.5 mm step")
plt.subplot(1, 2, 2)
plt.plot(target_t, target_mm, label="setpoint")
plt.plot(target_t, actual_mm, label="tracked")
plt.xlabel("time (s)")
plt.title("out-and-back stimulus")
plt.legend()
plt.tight_layout()
plt.show()
