import random

from hypothesis import HealthCheck, settings, strategies as st

from gkdeform.algebra import FormFiber, Multivector, TangentCotangentFiber
from gkdeform.fields import FourierSection
from gkdeform.scalar import S

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

small = st.integers(min_value=-3, max_value=3)
scalars = st.builds(S, small, small)


def forms(n: int, max_terms: int = 4):
    return st.dictionaries(st.integers(0, (1 << (2 * n)) - 1), scalars, max_size=max_terms).map(
        lambda d: FormFiber(n, {k: v for k, v in d.items() if v}))


def tt_vectors(n: int):
    return st.lists(scalars, min_size=4 * n, max_size=4 * n).map(
        lambda xs: TangentCotangentFiber.from_coords(n, xs))


def two_forms(n: int):
    masks = [m for m in range(1 << (2 * n)) if bin(m).count("1") == 2]
    return st.dictionaries(st.sampled_from(masks), st.builds(S, small), max_size=3).map(
        lambda d: FormFiber(n, {k: v for k, v in d.items() if v}))


def rng_from(seed: int) -> random.Random:
    return random.Random(seed)


def const_mv(n: int, coeffs: dict) -> FourierSection:
    return FourierSection(n, "multivector", {(0,) * (2 * n): Multivector(n, coeffs)})


def mono_mv(n: int, k, coeffs: dict) -> FourierSection:
    return FourierSection(n, "multivector", {tuple(k): Multivector(n, coeffs)})
