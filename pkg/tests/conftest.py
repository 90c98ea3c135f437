import numpy as np
import pytest

from ctximp import (from_dataset, generate_example1, generate_problem1,
                    generate_problem2)


@pytest.fixture(scope="session")
def problem1():
    return generate_problem1()


@pytest.fixture(scope="session")
def problem2():
    return generate_problem2()


@pytest.fixture(scope="session")
def example1():
    return generate_example1()


@pytest.fixture(scope="session")
def problem1_dist(problem1):
    return from_dataset(problem1)


@pytest.fixture(scope="session")
def problem2_dist(problem2):
    return from_dataset(problem2)


@pytest.fixture(scope="session")
def example1_dist(example1):
    return from_dataset(example1)


def random_table(rng, n_rows, arities, target_arity, context_arity=None):
    """Random all-categorical Dataset; target depends on the inputs."""
    from ctximp import Dataset

    names = [f"V{i}" for i in range(len(arities))]
    codes = {name: rng.integers(0, k, size=n_rows).astype(np.int64)
             for name, k in zip(names, arities)}
    mix = sum(codes[name] * (i + 1) for i, name in enumerate(names))
    noise = rng.integers(0, target_arity, size=n_rows)
    y = np.where(rng.random(n_rows) < 0.65, mix % target_arity, noise)
    codes["Y"] = y.astype(np.int64)
    names.append("Y")
    context = None
    if context_arity is not None:
        codes["C"] = rng.integers(0, context_arity, size=n_rows).astype(np.int64)
        names.append("C")
        context = "C"
    labels = {name: tuple(str(v) for v in range(int(codes[name].max()) + 1))
              for name in names}
    return Dataset(names, codes, labels, "Y", context)
