#!/usr/bin/env python3
"""Regenerates the data files shipped in data/.

cycle_city_bus.csv  synthetic 600 s stop-and-go bus cycle. A fixed list of
                    trips, each a smooth acceleration ramp, cruise, braking
                    and dwell; tuned so the default bus peaks near 310 kW.
fuel_curve.csv      stack power vs hydrogen flow, sampled from a smooth
                    efficiency curve (peak near 0.55 around 20 kW).
battery_ocv.csv     cell open-circuit voltage vs SOC.
battery_r0.csv      cell series resistance vs SOC.

Everything is deterministic. usage: gen_data.py DATA_DIR
"""
import math
import pathlib
import sys

# (peak accel m/s^2, cruise speed m/s, cruise s, braking m/s^2, dwell s)
TRIPS = [
    (1.05, 9.0, 14, 0.9, 18),
    (1.10, 12.5, 30, 1.0, 22),
    (0.95, 7.5, 10, 0.8, 15),
    (1.12, 13.8, 40, 1.1, 25),
    (1.00, 10.5, 22, 0.9, 20),
    (1.08, 12.0, 18, 1.0, 24),
    (0.90, 8.0, 12, 0.8, 16),
    (1.10, 13.0, 36, 1.05, 0),
]
ACCEL_SCALE = 1.2
DURATION = 600
DT = 1.0


def trip_speeds(a_peak, v_cruise, cruise_s, brake, dwell):
    v = 0.0
    out = []
    # Acceleration: raised-cosine jerk-limited ramp of the acceleration.
    ramp = 3.0
    t = 0.0
    while v < v_cruise - 1e-9:
        a = ACCEL_SCALE * a_peak * (0.5 - 0.5 * math.cos(math.pi * min(t, ramp) / ramp))
        a *= max(0.6, 1.0 - 0.15 * v / v_cruise)  # traction falls off with speed
        v = min(v_cruise, v + max(a, 0.05) * DT)
        out.append(v)
        t += DT
    out += [v_cruise] * cruise_s
    while v > 0.0:
        v = max(0.0, v - brake * DT)
        out.append(v)
    out += [0.0] * dwell
    return out


OCV = [(0, 3.00), (5, 3.30), (10, 3.45), (20, 3.55), (30, 3.62), (40, 3.67), (50, 3.72),
       (60, 3.80), (70, 3.90), (80, 4.00), (90, 4.08), (100, 4.18)]
R0 = [(0, 0.060), (10, 0.045), (20, 0.040), (50, 0.035), (80, 0.036), (100, 0.040)]

# Flow in kg/s for power in kW: a smooth quadratic with a mild ripple so the
# fit is not exact.
FUEL_A, FUEL_B, FUEL_C = 9.42e-8, 1.138e-5, 3.77e-5


def fuel_samples():
    out = []
    p = 5.0
    while p <= 70.0 + 1e-9:
        base = FUEL_A * p * p + FUEL_B * p + FUEL_C
        out.append((p, base * (1.0 + 0.004 * math.sin(p / 7.0))))
        p += 2.5
    return out


def write_pairs(path, header, rows, fmt):
    with open(path, "w", newline="\n") as f:
        f.write(header + "\n")
        for a, b in rows:
            f.write(fmt.format(a, b) + "\n")


def cycle_speeds():
    speeds = [0.0] * 5
    for trip in TRIPS:
        speeds += trip_speeds(*trip)
    speeds += [0.0] * max(0, DURATION - len(speeds))
    return speeds[:DURATION]


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    out = pathlib.Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    speeds = cycle_speeds()
    write_pairs(out / "cycle_city_bus.csv", "t_s,v_mps", [(k * DT, v) for k, v in enumerate(speeds)],
                "{:.1f},{:.6f}")
    write_pairs(out / "fuel_curve.csv", "p_kw,mdot_kg_per_s", fuel_samples(), "{:.2f},{:.9e}")
    write_pairs(out / "battery_ocv.csv", "soc_pct,ocv_v", OCV, "{:g},{:.3f}")
    write_pairs(out / "battery_r0.csv", "soc_pct,r0_ohm", R0, "{:g},{:.4f}")


if __name__ == "__main__":
    main()
