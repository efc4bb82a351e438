#!/usr/bin/env python3
"""Online gain tuning as precision learning.

PID gains are the controller's expected observation precisions, so tuning
is gradient descent on the same functional the controller already
minimises: each precision drifts toward the inverse of its smoothed
squared prediction error.  Under white sensor noise of std sigma the
learned observation variance 1/pi_z0 settles just above sigma^2 (the
aleatoric floor: no controller can trust a sensor beyond its physical
accuracy), while the hopeless derivative channels are turned down.

Run:  python demos/02_gain_tuning.py
"""

from pathlib import Path

import numpy as np

import fepid

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "tune-noise.json"
OUT = Path(__file__).resolve().parent / "output"


def main():
    cfg = fepid.parse_config(SCENARIO.read_text())
    sigma = cfg.sensor.meas_noise.sigma
    traj = fepid.run_closed_loop(cfg)
    kappa_a = cfg.controller.kappa_a

    print(f"white sensor noise sigma = {sigma} (variance {sigma**2:g})")
    print(f"{'t':>6} {'ki':>8} {'kp':>10} {'kd':>10} {'1/pi_z0':>9}")
    for k in range(0, traj.rows, traj.rows // 10):
        pi = traj.pi_z[k]
        print(f"{traj.t[k]:6.0f} {kappa_a * pi[0]:8.3f} {kappa_a * pi[1]:10.6f} "
              f"{kappa_a * pi[2]:10.3e} {1 / pi[0]:9.4f}")

    tail = traj.t >= 0.8 * traj.t[-1]
    mse = float(np.mean(traj.eps_z[tail, 0] ** 2))
    print(f"\nempirical MSE of the order-0 error over the last 20%: {mse:.4f}")
    print(f"learned observation variance:                        {1 / traj.pi_z[-1, 0]:.4f}")
    print(f"aleatoric floor 0.5 * sigma^2:                       {0.5 * sigma**2:.4f}")
    print(f"minimum learned variance over the run:               "
          f"{np.min(1 / traj.pi_z[:, 0]):.4f}")

    first = fepid.compute_metrics(traj, window=(0.0, 0.2 * traj.t[-1]), reference=0.0)
    last = fepid.compute_metrics(traj, window=(0.8 * traj.t[-1], traj.t[-1]), reference=0.0)
    print(f"\nIAE first 20%: {first.iae:.3f}   IAE last 20%: {last.iae:.3f}")
    print("(under stationary noise, a higher trusted precision chases noise harder;")
    print(" demo 04 shows how a hyperprior tempers exactly this)")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    OUT.mkdir(exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    ax1.plot(traj.t, traj.y, "b", lw=0.5, label="measured output")
    ax1.plot(traj.t, traj.mu_x[:, 0], "r", lw=1, label="expectation")
    ax1.set_ylabel("output")
    ax1.legend()
    ax2.plot(traj.t, kappa_a * traj.pi_z[:, 0], "g", lw=1.5, label="ki")
    ax2.axhline(kappa_a / sigma**2, color="k", ls=":", lw=1,
                label="kappa_a / sigma^2 (noise-limited ceiling)")
    ax2.set_ylabel("integral gain")
    ax2.set_xlabel("time (s)")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(OUT / "gain_tuning.png", dpi=120)
    print(f"\nfigure saved to {OUT / 'gain_tuning.png'}")


if __name__ == "__main__":
    main()
