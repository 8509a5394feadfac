"""
Analysing the identified yaw model
==================================

The pool-trial model ``0.013 / (s^2 + 2.08 s + 0.46)`` maps PWM input to yaw
angle. Here we look at its poles and step response, and compare it with the
rigid-body model built from physical coefficients, which has a pole at the
origin.
"""
import numpy as np

from usvyaw import (IDENTIFIED_MODEL, PhysicalParams, describe, physical_to_tf, poles,
                    step_response)

print(describe(IDENTIFIED_MODEL))

# %%
# Both poles are real and negative, so the step response rises without
# overshoot to the DC gain K / a0.
psi = step_response(IDENTIFIED_MODEL, amplitude=1.0, duration=30.0, dt=0.05)
t = (np.arange(len(psi)) + 1) * psi.sample_period
for target in (0.5, 0.9, 0.99):
    k = np.argmax(psi.values >= target * IDENTIFIED_MODEL.gain / IDENTIFIED_MODEL.stiffness_coeff)
    print(f"{100 * target:4.0f}% of final value after {t[k]:5.2f} s")

# %%
# A rigid-body hull with no restoring moment integrates a constant
# differential thrust into a steadily growing heading.
hull = PhysicalParams(inertia_z=2.0, drag_coeff=4.0, thrust_coeff=0.01, moment_arm=0.3)
rigid = physical_to_tf(hull)
print()
print(describe(rigid))
ramp = step_response(rigid, amplitude=50.0, duration=60.0, dt=0.05).values
print(f"yaw after 60 s at 50 PWM: {ramp[-1]:.2f} rad, slope {rigid.gain * 50 / rigid.damping_coeff:.4f} rad/s")
print("poles:", poles(rigid))
