"""Approximate the closed half-line {x1 = x2 = 0, x3 >= 0} by an algebraic curve.

The half-line is not algebraic, but the curve {x1^2 = x3^m, x2 = 0} with m
odd has one branch hugging it (x1 = +/- x3^(m/2)) and nothing over x3 < 0.
The search picks the smallest odd m that makes the two sets 2-equivalent.
The single surface (x1^2 + x2^2)^2 = x3^5 also contains the half-line's
neighbourhood, but it is 2-dimensional and is rejected.

    python demos/half_line.py
"""

from __future__ import annotations

from algapprox import SamplerConfig, assess_candidate, make_presentation, run
from algapprox.metric import profile_csv

VARS = ["x1", "x2", "x3"]


def main() -> None:
    cfg = SamplerConfig()
    half_line = make_presentation(VARS, ["x1", "x2"], ["x3"], 1)
    result = run(half_line, 2, cfg).results[0]
    step = result.steps[0]
    print("equations:", [p.expression_string() for p in result.equations])
    print("tried m:", step.tried_ms, "chosen:", step.chosen_m)
    print("delta profile (output vs half-line):")
    print(profile_csv(*result.final_report), end="")

    Y = make_presentation(VARS, ["(x1^2 + x2^2)^2 - x3^5"])
    verdict = assess_candidate(Y, half_line, 2, cfg)
    print(f"surface candidate: dimension {verdict['candidate_dimension']}, accepted {verdict['accepted']}")


if __name__ == "__main__":
    main()
