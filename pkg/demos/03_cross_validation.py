"""
Comparing candidate models on held-out data
===========================================

The fit percentage ``100 (1 - |y - yhat| / |y - mean(y)|)`` rewards a model
that tracks the measured yaw better than its mean does. We score a few
candidates on a fresh noisy experiment.
"""
import numpy as np

from usvyaw import (IDENTIFIED_MODEL, NoiseSpec, SecondOrderTf, TimeSeriesDataset, add_noise,
                    cross_validate, discretize_zoh, simulate, square_wave)

dt = 0.05
u = square_wave(amplitude=50.0, period=20.0, duration=100.0, dt=dt)
psi, _ = simulate(discretize_zoh(IDENTIFIED_MODEL, dt), u)
psi = add_noise(psi, NoiseSpec(0.05 * np.std(psi.values), seed=11))
test = TimeSeriesDataset(dt, 0.0, u, psi)

candidates = {
    "generating model": IDENTIFIED_MODEL,
    "gain doubled": SecondOrderTf(0.026, 2.08, 0.46),
    "no stiffness term": SecondOrderTf(0.013, 2.08, 0.0),
    "half the damping": SecondOrderTf(0.013, 1.04, 0.46),
}
for name, tf in candidates.items():
    print(f"{name:>18}: {cross_validate(tf, test):7.2f} %")

# %%
# Without a stiffness term each half cycle of thrust becomes a heading ramp.
# Those swings dwarf the bounded ones in the data, so the score goes negative.
