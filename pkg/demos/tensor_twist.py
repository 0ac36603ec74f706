"""Degree-m integrands on the hyperbolic disk as twisted scalar transforms.

Integrating f e^{i m theta} along geodesics equals, up to the entry phase,
the scalar transform of f attenuated by the connection -m a with
a = i * d(lambda).
"""

import numpy as np

from attxray import HyperbolicMetric, TransportModel, random_smooth_field, reduction_check
from attxray.tensor import connection_from_h

met = HyperbolicMetric(1.0, 0.6)
plain = TransportModel(met)
g = plain.grid
f = random_smooth_field(np.random.default_rng(3), 1, g.radius, 2, 2)(g.x1, g.x2)[..., 0]

_, leak, mism = connection_from_h(g, met)
print(f"-h^-1 X h vs i*d(lambda): {mism:.1e} (other degrees {leak:.1e})")
for m in range(-2, 3):
    r = reduction_check(met, f, m, plain=plain)
    print(f"m = {m:+d}: twisted route agrees to {r.discrepancy:.1e}")
