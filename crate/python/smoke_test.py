"""Smoke test for the lambda_detector extension module."""

import math

import lambda_detector as ld


def main():
    p = ld.SystemParams()
    assert abs(p.omega_q - ld.ghz(5.0)) < 1e-12

    match = ld.find_impedance_match(p)
    print(f"impedance match: {ld.to_mhz(match):.4f} MHz")
    assert abs(ld.to_mhz(match) - 13.2) < 0.1

    s = ld.dressed_spectrum(p, match)
    rates = [s.kappa(i, j) for i in (3, 4) for j in (1, 2)]
    assert all(abs(k - p.kappa_prime / 2) < 1e-3 * p.kappa_prime for k in rates)
    assert abs(abs(s.angles[1] - s.angles[0]) - math.pi / 4) < 1e-3

    r = ld.steady_reflection(p, 0.0, ld.ghz(10.0))
    assert isinstance(r, complex) and abs(abs(r) - 1.0) < 1e-6

    rows = ld.rate_sweep(p, [0.0, match])
    assert len(rows) == 2 and len(rows[0]) == 8

    capture = ld.run_capture(ld.CaptureConfig(p))
    p1 = capture.probability(1)
    print(f"P1 = {p1:.4f}, P0 = {capture.probability(0):.2e}")
    assert abs(p1 - 0.89) < 0.02
    assert len(capture.times) == len(capture.curves[0]) == len(capture.reference)

    reset = ld.run_reset(ld.ResetConfig(n_mean=10.0))
    print(f"reset pe = {reset.probability(0):.4f}")
    assert abs(reset.probability(0) - 0.015) < 0.005

    sweep = ld.sweep_pulse_length(ld.CaptureConfig(p, length=60.0), [40.0, 80.0], [0.0])
    assert sweep[0][1] >= sweep[0][0]

    try:
        ld.CaptureConfig(p, shape="triangle")
    except ValueError as err:
        print(f"rejected: {err}")
    else:
        raise AssertionError("unknown shape accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
