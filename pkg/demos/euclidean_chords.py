"""Flat unit disk: exit times, the transform of 1 and the chord map.

Every fan ray (phi, a) enters at e^{i phi}, runs a chord of length 2 cos a
and leaves at phi + pi + 2a. The numerical flow should reproduce all three
facts to ODE accuracy.
"""

import numpy as np

from attxray import EuclideanMetric, FanGrid, TransportModel

met = EuclideanMetric(1.0)
fan = FanGrid(64, 32, 0.05, 1.0)
model = TransportModel(met, fan=fan)

ex = model.fan_exit
chord = 2 * np.cos(fan.A)
print(f"exit time vs 2 cos a:      {np.max(np.abs(ex['tau'] - chord)):.2e}")

ones = np.ones((1,) + model.grid.shape)
print(f"I^0(1) vs chord length:    {np.max(np.abs(model.I0(ones)[..., 0] - chord)):.2e}")

dphi = np.angle(np.exp(1j * (ex["phi_out"] - fan.PHI - np.pi - 2 * fan.A)))
print(f"exit angle vs phi+pi+2a:   {np.max(np.abs(dphi)):.2e}")
