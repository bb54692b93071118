import numpy as np
import pytest

from uctensor import SolverConfig, make_tensor

# tight solver settings for value-level assertions: the default 1e-10
# threshold bounds only the last sweep's movement (~1e-5 in the values)
TIGHT = SolverConfig(epsilon=1e-24, max_sweeps=20_000)


@pytest.fixture
def three_entry_2x2():
    """[[2, 8], [4, .]] - the hand-solvable completion instance."""
    return make_tensor((2, 2), {(0, 0): 2.0, (0, 1): 8.0, (1, 0): 4.0})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_movielens_fixture(tmp_path, n_users=30, n_products=20, density=0.5, seed=0):
    """A miniature MovieLens-1M-format pair of files with planted
    multiplicative structure (ratings rounded to 1..5)."""
    rng = np.random.default_rng(seed)
    u = np.exp(rng.uniform(0, np.log(5) / 2, n_users))
    v = np.exp(rng.uniform(0, np.log(5) / 2, n_products))
    lines = []
    for i in range(n_users):
        for j in range(n_products):
            if rng.random() < density:
                rating = int(np.clip(round(u[i] * v[j]), 1, 5))
                lines.append(f"{i + 1}::{j + 101}::{rating}::97830{i:04d}")
    ratings = tmp_path / "ratings.dat"
    ratings.write_text("\n".join(lines) + "\n")

    ages = [1, 18, 25, 35, 45, 50, 56]
    users = tmp_path / "users.dat"
    users.write_text(
        "\n".join(
            f"{i + 1}::{'MF'[int(rng.random() < 0.5)]}::{ages[int(rng.integers(len(ages)))]}"
            f"::{int(rng.integers(0, 21))}::00000"
            for i in range(n_users)
        )
        + "\n"
    )
    return ratings, users
