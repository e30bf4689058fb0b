"""Regenerate the CSV fixtures used by the test suite.

Run from the repository root:

    python3 tests/data/make_fixtures.py

The files are deterministic (seeded generators, repr-precision floats), so
regeneration must reproduce them byte for byte; test_fixture_files_match_
their_generators asserts exactly that.
"""

from pathlib import Path

import numpy as np

HERE = Path(__file__).parent

#: (filename, distribution, generator seed, sample size)
RECIPES = [
    ("normal_200.csv", "standard_normal", 11, 200),
    ("laplace_500.csv", "laplace", 3, 500),
]


def render(distribution, seed, count):
    rng = np.random.default_rng(seed)
    if distribution == "standard_normal":
        values = rng.standard_normal(count)
    elif distribution == "laplace":
        values = rng.laplace(size=count)
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    lines = ["x"] + [repr(float(v)) for v in values]
    return "\n".join(lines) + "\n"


def main():
    for filename, distribution, seed, count in RECIPES:
        text = render(distribution, seed, count)
        (HERE / filename).write_text(text)
        print(f"wrote {filename}: {count} {distribution} values, seed {seed}")


if __name__ == "__main__":
    main()
