"""The two-branch Example: three medial arms leave the origin.

Branches are tangent to y = x/sqrt(3) and y = -x/sqrt(3) and bend into the
reflex region.  The thin region (angle pi/3) contributes its bisector; the
reflex region (angle 5 pi/3) contributes one perpendicular per branch.  The
full verification scans ten halved windows and takes about half a minute.

    python3 demos/02_example_fan.py
"""
import math

from medialgerm import fixture, oriented_angle, run_verification
from medialgerm.germ import render_prediction
from medialgerm.verify import render_text

curve = fixture("example")
for pair in curve.regions():
    print(f"region {pair}: oriented angle = {oriented_angle(curve, pair) / math.pi:.6f} pi")
print()
print(render_prediction(curve))

report = run_verification(curve, curve_id="example")
print(render_text(report))
shown = sorted(round(d, 2) % 360.0 for d in report.observed_fan.degrees)
print("observed directions (deg):", ", ".join(f"{d:.2f}" for d in shown))
