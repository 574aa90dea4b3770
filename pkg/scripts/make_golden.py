"""Regenerate the committed golden inference instance under tests/golden/.

The expected outputs are produced by the straight-line loop oracle in
tests/oracles.py, never by the library's vectorized path.
"""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import schedule_loops  # noqa: E402

from gatedcrf import fileio  # noqa: E402

SEED = 2024
ITERATIONS = 2


def main() -> None:
    out = ROOT / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    X = [rng.standard_normal((2, 4, 4)) for _ in range(2)]
    K = [0.4 * rng.standard_normal((2, 2, 3, 3))]
    beta = [0.4 * rng.standard_normal((1, 1, 3, 3))]

    for i, x in enumerate(X, start=1):
        fileio.write_tensor(out / f"x_{i}.ten", x)
    fileio.write_tensor(out / "K_1.ten", K[0])
    fileio.write_tensor(out / "beta_1.ten", beta[0])
    (out / "config.txt").write_text(
        f"iterations = {ITERATIONS}\nupdate_intermediate_scales = false\n"
    )

    Y, A = schedule_loops(X, K, beta, ITERATIONS)
    fileio.write_tensor(out / "expected_y_S.ten", Y[-1])
    fileio.write_tensor(out / "expected_a_1.ten", A[0])
    print(f"golden instance written to {out}")


if __name__ == "__main__":
    main()
