"""Two ways to extract a medial arm, and how closely they agree.

The grid scan looks at every cell edge for a change of closest branch; the
tracer marches along the equidistance curve of two branches.  Where both
apply, their Hausdorff distance should be within two grid pitches or steps.
In the Example's reflex region the arms are ties between the origin and one
branch, so no pairwise conflict exists there and the tracer says so.

    python3 demos/03_scan_vs_trace.py
"""
import numpy as np
from scipy.spatial.distance import directed_hausdorff

from medialgerm import TraceError, fixture, run_grid_scan, trace_conflict_set
from medialgerm.medial import region_of

for name in ("two-lines", "example"):
    curve = fixture(name)
    window = curve.epsilon / 2.0
    step = window / 100.0
    scan = run_grid_scan(curve, window, 512)
    pts = np.array([s.point for s in scan.samples])
    regions = region_of(pts, curve)
    print(f"{name}: {len(pts)} scan samples, pitch {scan.pitch:.3g}")
    for pair in curve.regions():
        try:
            trace = trace_conflict_set(curve, pair, window, step)
        except TraceError as exc:
            print(f"  region {pair}: not traced ({exc})")
            continue
        ours = pts[[r == pair for r in regions]]
        h = max(directed_hausdorff(ours, trace.points)[0], directed_hausdorff(trace.points, ours)[0])
        print(f"  region {pair}: {len(trace.points)} trace points, Hausdorff {h:.2e} "
              f"(bound {2 * max(scan.pitch, step):.2e})")
