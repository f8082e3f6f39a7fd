"""Reference values of J0, J1, Y0, Y1 computed with mpmath at 40 digits."""
import json
import sys

import mpmath as mp

mp.mp.dps = 40

xs = [mp.mpf(10) ** (mp.mpf(-6) + mp.mpf(9) * i / 599) for i in range(600)]
xs += [mp.mpf(x) / 8 for x in range(1, 8 * 60)]
rows = []
for x in xs:
    rows.append([float(x)] + [float(f(n, mp.mpf(float(x)))) for f in (mp.besselj, mp.bessely) for n in (0, 1)])
rows.sort()
json.dump({"columns": ["x", "j0", "j1", "y0", "y1"], "rows": rows}, sys.stdout, indent=None)
