"""Does the medial axis of a single branch reach the singular point?

A branch t -> (t, a t^alpha) has a medial arm accumulating at 0 exactly when
alpha < 2.  For each exponent we print the exact prediction, then the nearest
medial sample found in windows of radius 0.5, 0.25, ... (a running minimum).
Reaching arms roughly halve with the window; bounded ones stay put.

    python3 demos/01_dichotomy.py
"""
from medialgerm import fixture, nearest_medial_distance, predict_reach, reach_verdict

NAMES = ["power-3/2", "power-7/4", "power-2", "power-3", "half-line"]
RADII = [0.5 * 2.0 ** -k for k in range(8)]

for name in NAMES:
    curve = fixture(name)
    sequence = nearest_medial_distance(curve, RADII, resolution=256)
    values = "  ".join(f"{v:8.2e}" for _, v in sequence)
    print(f"{name:<10} predicted reach: {'yes' if predict_reach(curve) else 'no ':<3}  "
          f"observed: {reach_verdict(sequence, RADII[0]):<13} min|a| per window: {values}")
