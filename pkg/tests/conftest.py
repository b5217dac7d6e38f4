import pytest

from liqgames import (
    make_constant_coefficients,
    make_exponential_sellers,
    make_two_sided,
    quantile_positions,
    solve_mfg,
    solve_no_dropout_baseline,
    solve_nplayer,
    solve_riccati,
)

# the constant-coefficient setup used by every comparative experiment
ETA, KAPPA, LAM, T_END = 5.0, 10.0, 5.0, 1.0


@pytest.fixture(scope="session")
def coeffs_std():
    return make_constant_coefficients(ETA, KAPPA, LAM, T_END, 2000)


@pytest.fixture(scope="session")
def coeffs_fine():
    return make_constant_coefficients(ETA, KAPPA, LAM, T_END, 4000)


@pytest.fixture(scope="session")
def dist_one():
    return make_exponential_sellers(1.5)


@pytest.fixture(scope="session")
def dist_two():
    return make_two_sided(0.8, 1.5, 0.2, 1.0)


@pytest.fixture(scope="session")
def bundle0(coeffs_std):
    return solve_riccati(coeffs_std, 0.0)


@pytest.fixture(scope="session")
def eq_one(coeffs_std, dist_one):
    return solve_mfg(coeffs_std, dist_one)


@pytest.fixture(scope="session")
def eq_two(coeffs_std, dist_two):
    return solve_mfg(coeffs_std, dist_two)


@pytest.fixture(scope="session")
def base_one(coeffs_std, dist_one):
    return solve_no_dropout_baseline(coeffs_std, dist_one)


@pytest.fixture(scope="session")
def pos7(dist_one):
    return quantile_positions(dist_one, 7)


@pytest.fixture(scope="session")
def eq_n7(coeffs_std, pos7):
    return solve_nplayer(coeffs_std, pos7)
