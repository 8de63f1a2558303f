#!/usr/bin/env python3
# Copyright 2026 The evsched Authors.
# SPDX-License-Identifier: Apache-2.0
"""Writes a synthetic 30-day, 15-minute real-time price trace.

Shape: overnight plateau, a midday solar trough that sometimes goes
negative, an evening ramp peak, AR(1) noise and rare spikes. Deterministic.
"""

import datetime as dt
import math
import random
import sys


def hourly_shape(hour: float) -> float:
    base = 38.0
    trough = -30.0 * math.exp(-((hour - 12.5) / 2.6) ** 2)
    peak = 45.0 * math.exp(-((hour - 19.0) / 1.6) ** 2)
    morning = 10.0 * math.exp(-((hour - 7.0) / 1.2) ** 2)
    return base + trough + peak + morning


def main(path: str) -> None:
    rng = random.Random(20240401)
    start = dt.datetime(2024, 4, 1, tzinfo=dt.timezone.utc)
    step = dt.timedelta(minutes=15)
    noise = 0.0
    with open(path, "w", newline="\n") as out:
        out.write("timestamp,price\n")
        for i in range(30 * 96):
            t = start + i * step
            hour = t.hour + t.minute / 60.0
            day_level = 1.0 + 0.15 * math.sin(2 * math.pi * (i // 96) / 7.0)
            noise = 0.85 * noise + rng.gauss(0.0, 4.0)
            price = day_level * hourly_shape(hour) + noise
            if rng.random() < 0.004:
                price += rng.uniform(80.0, 250.0)
            out.write(f"{t.strftime('%Y-%m-%dT%H:%M:%SZ')},{price:.2f}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "sample_rt_prices.csv")
