import numpy as np
import pytest

from fofrboot.fungrid import FnSet, basis_monomial, basis_trig, make_uniform_grid


def finite_rank_data(n=40, J=3, m=101, noise=0.0, seed=0):
    """``X`` spanned by ``J`` trig functions and ``Y = B X + noise`` with a rank-``J`` slope."""
    rng = np.random.default_rng(seed)
    g = make_uniform_grid(m)
    phi = basis_trig(2 * ((J + 1) // 2), g).funcs[:J]
    psi = basis_monomial(J, g).funcs
    scores = rng.standard_normal((n, J)) * np.linspace(2, 1, J)
    X = FnSet(g, 0.5 + scores @ phi)
    coef = rng.standard_normal((J, J))
    Y = FnSet(g, (scores @ coef) @ psi + noise * rng.standard_normal((n, m)))
    return X, Y


@pytest.fixture
def finite_rank():
    return finite_rank_data


# criterion number -> (status, title, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{status} criterion {key}: {title} | {detail}")
