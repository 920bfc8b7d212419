"""Walk through decay for the unit circle.

1. The boundary transform against 2 pi J0.
2. The maximal slab a(v, t) and its t^(-1/2) fit.
3. The uniform-decay ratio |nu_hat(t v)| t^(1/2), bounded as t grows,
   and what happens when the exponent is overstated.
"""
import math

import numpy as np
from scipy.special import j0

from slabdecay import geometry as geo
from slabdecay import verify as vf
from slabdecay.oscint import closed_transform
from slabdecay.surface import make_closed_body

circle = make_closed_body("disk")
v = np.array([math.cos(0.3), math.sin(0.3)])

print("transform vs 2 pi J0(t)")
for t in (1.0, 10.0, 100.0, 1000.0):
    got = closed_transform(circle, None, t * v).value
    print(f"  t={t:7.0f}  nu_hat={got.real:+.10f}{got.imag:+.1e}j  2piJ0={2 * math.pi * j0(t):+.10f}")

ts = geo.geometric_grid(1e2, 1e6, 2)
fit = geo.fit_power_law(zip(ts, geo.max_slab_profile(circle, v, ts)))
print(f"\nmaximal slab: a(v, t) ~ {fit.c:.3f} t^-{fit.alpha:.4f}")

ts = vf.frequency_grid(10.0, 1e4, 8)
dirs = vf.direction_grid(1, 5)
s = vf.check_uniform_decay(circle, 0.5, dirs, ts)
print(f"\nsup |nu_hat| t^0.5 = {s.sup_ratio:.3f}, envelope trend {s.trend:+.3f}")
neg = vf.rescale_uniform(s, 0.6)
print(f"with t^0.6 instead:  trend {neg.trend:+.3f} (grows, so 0.6 is too fast)")
