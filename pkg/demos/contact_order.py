"""Contact order of the parabola y = x^2 with its tangent line.

On the circle of radius r the two sets are about r^2 apart, so they are
s-equivalent exactly for s < 2.  The fitted log-log slope recovers 2.

    python demos/contact_order.py
"""

from __future__ import annotations

from algapprox import SamplerConfig, check_equiv, make_presentation


def main() -> None:
    cfg = SamplerConfig()
    parabola = make_presentation(["x", "y"], ["y - x^2"])
    line = make_presentation(["x", "y"], ["y"])
    for s in (1.5, 2.0, 2.5):
        ab, ba = check_equiv(parabola, line, s, cfg)
        print(f"s = {s}: orders {ab.fitted_order:.3f} / {ba.fitted_order:.3f}, "
              f"equivalent: {ab.passed and ba.passed}")
    for r, d, q in ab.per_radius:
        print(f"  r = {r:<6} delta = {d:.3e}  r^2 = {r * r:.3e}")


if __name__ == "__main__":
    main()
