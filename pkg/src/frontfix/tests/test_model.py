import pytest
from pytest import approx
import numpy as np

import frontfix.model as fm
from frontfix.common import InvalidParams, OutOfRange

P = fm.MarketParams()


def test_market():
    assert P.rho0 == 20.0
    assert fm.MarketParams(r=0.05, q=0.05).rho0 == approx(10.0)


@pytest.mark.parametrize(
    "kw", [{"q": 0.0}, {"q": 0.2}, {"E": -1}, {"T": 0}, {"r": float("nan")}], ids=str
)
def test_market_bad(kw):
    with pytest.raises(InvalidParams):
        fm.MarketParams(**kw)


def test_grid():
    G = fm.GridSpec(L=3, n=200, m=2000)
    assert G.h == approx(0.015)
    assert G.k(1.0) == approx(5e-4)
    assert G.x.size == 201
    assert G.x[-1] == approx(3.0)
    assert G.taus(1.0)[-1] == approx(1.0)

    with pytest.raises(InvalidParams):
        fm.GridSpec(n=1)
    with pytest.raises(InvalidParams):
        fm.GridSpec(m=0)
    with pytest.raises(InvalidParams):
        fm.GridSpec(L=0)


def test_initial_state():
    G = fm.GridSpec(n=200)
    s = fm.initial_state(P, G)

    assert s.rho == 20.0
    assert s.tau == 0
    assert s.pi[0] == -10
    assert s.pi[-1] == 0
    # ln(r/q) = ln 2 lies between x_46 and x_47 for h = 0.015
    assert (s.pi[:47] == -10).all()
    assert (s.pi[47:] == 0).all()


def test_state_bad():
    with pytest.raises(InvalidParams):
        fm.TransformedState(pi=np.zeros(5), rho=0.0)
    with pytest.raises(ValueError):
        fm.TransformedState(pi=np.zeros(2), rho=1.0)


def test_x_to_s():
    assert fm.x_to_s(0.0, 20.0) == 20.0
    assert fm.x_to_s(np.log(2), 20.0) == approx(10.0)


def test_boundary_curve():
    c = fm.BoundaryCurve(taus=np.array([0, 0.5, 1.0]), rhos=np.array([20, 21, 22.0]))
    assert len(c) == 3

    t, s = c.exercise_boundary(1.0)
    assert t == approx([0, 0.5, 1])
    assert s == approx([22, 21, 20])


def test_price_at_boundary():
    s = fm.initial_state(P, fm.GridSpec())
    assert fm.price_from_pi(s, P, s.rho) == approx(s.rho - P.E)

    with pytest.raises(OutOfRange):
        fm.price_from_pi(s, P, s.rho * 1.01)
    with pytest.raises(OutOfRange):
        fm.price_from_pi(s, P, 0.0)


def test_price_payoff():
    """Pi = -E up to ln(r/q) integrates back to the payoff above S = q rho / r"""
    G = fm.GridSpec(n=2000)
    s = fm.initial_state(P, G)

    S = np.array([10.5, 12.0, 15.0, 19.0])
    assert fm.price_profile(s, P, S) == approx(S - P.E, abs=1e-2)


def test_price_constant_pi():
    """Pi = -E everywhere gives V = S - E on a full grid, floored at 0"""
    G = fm.GridSpec(L=3, n=300)
    s = fm.TransformedState(pi=np.full(G.n + 1, -P.E), rho=20.0, L=G.L)

    S = 20.0 * np.exp(-np.array([0.0, 0.5, 1.25, 2.9]))
    assert fm.price_profile(s, P, S) == approx(np.maximum(S - P.E, 0), rel=1e-4)


def test_price_exercise_region():
    s = fm.initial_state(P, fm.GridSpec())
    v = fm.price_profile(s, P, np.array([25.0, 30.0]))
    assert v == approx([15.0, 20.0])

    with pytest.raises(OutOfRange):
        fm.price_profile(s, P, np.array([1.0, -1.0]))


def test_check_monotone():
    from frontfix.common import check_monotone

    assert check_monotone([1, 2, 2, 3]) == 0
    assert check_monotone([1, 0.5, 2, 1.9]) == 2
    assert check_monotone([1, 0.95, 2], tol=0.1) == 0


def test_price_floor():
    """a defect in int Pi exp(x) cannot push the price below 0 far out of the money"""
    G = fm.GridSpec(L=3, n=300)
    # int Pi exp(x) is well below E - rho
    pi = -P.E * np.clip((1.2 - G.x) / 0.4, 0, 1)
    s = fm.TransformedState(pi=pi, rho=20.0, L=G.L)

    S = np.geomspace(0.2, 20.0, 200)
    v = fm.price_profile(s, P, S)
    assert v.min() == 0
    assert v[-1] == approx(10.0)
    assert (np.diff(v) >= -1e-12).all()
    assert (v >= np.maximum(S - P.E, 0) - 1e-3).all()
