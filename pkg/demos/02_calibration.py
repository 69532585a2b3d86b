"""
Calibrating the device from force sweeps
========================================

Press a known external force (0-20 N) onto one lever at a time with the
tactor parked, regress the sensor channels on that force, and the slopes
give each lever's amplification ratio and its ratio*d product. Repeated
here with synthetic sweeps, clean and noisy.
"""

import numpy as np

from gripsense import Side, fit_lever, generate_calibration_sweep, solve_coefficients

# %% Noiseless sweeps recover the constants exactly
fit_1 = fit_lever(generate_calibration_sweep(Side.LEVER_1))
fit_2 = fit_lever(generate_calibration_sweep(Side.LEVER_2))
coeffs = solve_coefficients(fit_1, fit_2)

print("noiseless calibration:")
print(f"  lever 1: ratio {fit_1.slope_force:.3f}, ratio*d {fit_1.slope_torque:.5f} m")
print(f"  lever 2: ratio {fit_2.slope_force:.3f}, ratio*d {fit_2.slope_torque:.5f} m")
print(f"  -> d = ({coeffs.d_1 * 1e3:.2f}, {coeffs.d_2 * 1e3:.2f}) mm")
print(f"  -> alpha = ({coeffs.alpha_1:.3f}, {coeffs.alpha_2:.3f}), "
      f"beta = ({coeffs.beta_1:.2f}, {coeffs.beta_2:.2f}) /m")

# %% Sensor noise: how stable is the fit at sigma = 0.05 N?
ratios, r2s = [], []
for seed in range(100):
    sweep = generate_calibration_sweep(Side.LEVER_1, noise_sd_force=0.05,
                                       rng=np.random.default_rng(seed))
    fit = fit_lever(sweep)
    ratios.append(fit.slope_force)
    r2s.append(fit.r2_force)

ratios = np.asarray(ratios)
print("\n100 noisy sweeps (sigma = 0.05 N):")
print(f"  fitted ratio: {ratios.mean():.4f} +/- {ratios.std():.4f} "
      f"(truth 6.132)")
print(f"  min R^2: {min(r2s):.6f}  (runs above 0.99: "
      f"{sum(r > 0.99 for r in r2s)}/100)")
