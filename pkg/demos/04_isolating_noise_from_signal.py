"""Send the noise down one arm and the amplified signal down the other.

Adding an orbital splitter in front of the two-arm arrangement tags the
photon with the +1 eigenvector of L_x.  Post-selecting on v_a and an
alpha-dependent polarization separates the observables: sigma_z lives in
the right arm with weak value tan(theta/2) tan(alpha) (two independent
amplification knobs), while the noise observable L_x (x) sigma_x reads
exactly 1 in the left arm and 0 in the right.  Meter fits confirm each
entry of the table.
"""

import numpy as np

from weakmeter import disembodied_measurement
from weakmeter.meter import make_meter
from weakmeter.weakvalue import disembodiment_table

meter = make_meter(64, 4.0)

for theta, alpha in ((np.pi / 2, np.pi / 4), (2 * np.pi / 3, np.pi / 3)):
    rows = {r.observable: r.value for r in disembodiment_table(theta, alpha)}
    print(f"theta = {theta:.4f}, alpha = {alpha:.4f} "
          f"(tan(theta/2) tan(alpha) = {np.tan(theta / 2) * np.tan(alpha):.4f})")
    for obs_id in ("sigma_z_L", "sigma_z_R", "Lx_sigma_x_L", "Lx_sigma_x_R"):
        print(f"  {obs_id:<14} weak value {rows[obs_id].real:>9.6f}")
    _, fit_signal = disembodied_measurement(theta, alpha, "sigma_zR",
                                            g=1e-3, meter=meter)
    _, fit_noise = disembodied_measurement(theta, alpha, "LxSx_L",
                                           gprime=1e-3, t=1.0, meter=meter)
    _, fit_silent = disembodied_measurement(theta, alpha, "LxSx_R",
                                            gprime=1e-3, t=1.0, meter=meter)
    print(f"  meter fits: signal {fit_signal.value.real:.6f}, "
          f"noise (left) {fit_noise.value.real:.6f}, "
          f"noise (right) {abs(fit_silent.value):.2e}")
    print()
