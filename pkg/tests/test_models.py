import io
import math

import numpy as np
import pytest

from buyhold.models import (
    GBM,
    Heston,
    HullWhite,
    ModelSpec,
    RoughFOU,
    Scott,
    fbm_increments,
    initial_vol,
    simulate,
    standard_normals,
    stochastic_exponential,
    write_paths_csv,
)


def _spec(variant, n_steps=64, s0=100.0, horizon=1.0):
    return ModelSpec(variant, s0, horizon, n_steps)


ALL_VARIANTS = [
    GBM(0.2),
    Heston(v0=0.04, kappa=1.5, theta=0.04, xi=0.5),
    HullWhite(v0=0.04, mu_v=0.0, sigma_v=0.5),
    Scott(y0=math.log(0.2), kappa=1.0, theta=math.log(0.2), beta=0.5),
    RoughFOU(y0=math.log(0.2), lam=1.0, theta=math.log(0.2), beta=0.5, h=0.1),
]


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(GBM(0.2), s0=0.0, horizon=1.0, n_steps=10)
    with pytest.raises(ValueError):
        ModelSpec(GBM(-0.1), s0=1.0, horizon=1.0, n_steps=10)
    with pytest.raises(ValueError):
        ModelSpec(Heston(v0=-1.0, kappa=1.0, theta=0.04, xi=0.5), 1.0, 1.0, 10)
    with pytest.raises(ValueError):
        ModelSpec(RoughFOU(y0=0.0, lam=1.0, theta=0.0, beta=0.5, h=1.5), 1.0, 1.0, 10)
    with pytest.raises(ValueError):
        ModelSpec(RoughFOU(y0=0.0, lam=1.0, theta=0.0, beta=0.5, h=0.1), 1.0, 1.0, 8192)
    with pytest.raises(ValueError):  # correlation is an extension point
        Heston(v0=0.04, kappa=1.0, theta=0.04, xi=0.5, rho=-0.5)
    assert initial_vol(_spec(Scott(math.log(0.3), 1.0, 0.0, 0.5))) == pytest.approx(0.3)


def test_resource_ceiling():
    with pytest.raises(ValueError):
        simulate(_spec(GBM(0.2), n_steps=1024), n_paths=10_000, seed=1, max_cells=1 << 20)


def test_per_path_substreams_match_fresh_philox():
    # the state-reset fast path must stay bit-identical to fresh construction
    z = standard_normals(seed=12345, n_paths=5, n_streams=2, n_steps=16)
    for p in range(5):
        ref = np.random.Generator(np.random.Philox(key=[12345, p])).standard_normal((2, 16))
        assert np.array_equal(z[p], ref)


def test_determinism_and_thread_independence():
    spec = _spec(GBM(0.2))
    a = simulate(spec, 300, seed=9)
    b = simulate(spec, 300, seed=9, threads=4)
    assert np.array_equal(a.spot, b.spot)
    assert np.array_equal(a.d_w_hat, b.d_w_hat)
    c = simulate(spec, 500, seed=9)
    assert np.array_equal(a.spot, c.spot[:300])  # per-path streams are prefix-stable
    d = simulate(spec, 300, seed=10)
    assert not np.array_equal(a.spot, d.spot)


def test_batch_immutable():
    batch = simulate(_spec(GBM(0.2), n_steps=4), 3, seed=1)
    with pytest.raises(ValueError):
        batch.spot[0, 0] = 1.0


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: type(v).__name__)
def test_positivity_and_grid(variant):
    spec = _spec(variant)
    batch = simulate(spec, 200, seed=3)
    assert np.all(batch.spot > 0.0)
    assert np.all(batch.vol > 0.0)
    assert np.all(batch.spot[:, 0] == spec.s0)
    assert batch.t.shape == (spec.n_steps + 1,)
    assert batch.dt == pytest.approx(spec.horizon / spec.n_steps)


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: type(v).__name__)
def test_terminal_mean_is_spot(variant):
    """Each discrete step has unit conditional mean, so E[S_T] = s0."""
    batch = simulate(_spec(variant), 40_000, seed=77)
    s_t = batch.spot[:, -1]
    se = s_t.std(ddof=1) / math.sqrt(len(s_t))
    assert abs(s_t.mean() - 100.0) <= 4.0 * se


def test_heston_zero_volofvol_is_deterministic_vol():
    spec = _spec(Heston(v0=0.04, kappa=1.5, theta=0.09, xi=0.0), n_steps=32)
    batch = simulate(spec, 50, seed=5)
    var = np.empty(33)
    var[0] = 0.04
    for k in range(32):
        var[k + 1] = var[k] + 1.5 * (0.09 - var[k]) * spec.dt
    nu = np.sqrt(var)
    assert np.array_equal(batch.vol, np.broadcast_to(nu, (50, 33)))
    ref = stochastic_exponential(np.broadcast_to(nu[:-1], (50, 32)), 100.0, batch.d_w, spec.dt)
    assert np.array_equal(batch.spot, ref)


def test_rough_fou_at_half_hurst_matches_scott():
    # fBM at H=1/2 is Brownian, so the rough model reduces to an OU log-vol;
    # exact-OU vs Euler stepping differ at O(dt), kept far below the MC noise
    n = 20_000
    scott = simulate(_spec(Scott(math.log(0.2), 1.0, math.log(0.2), 0.5), n_steps=512), n, seed=11)
    rough = simulate(_spec(RoughFOU(math.log(0.2), 1.0, math.log(0.2), 0.5, 0.5), n_steps=512), n, seed=12)
    for moment in (1, 2):
        a = scott.vol[:, -1] ** moment
        b = rough.vol[:, -1] ** moment
        se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(n)
        assert abs(a.mean() - b.mean()) <= 4.0 * se


def test_fbm_hurst_half_is_iid():
    inc = fbm_increments(0.5, 64, 1.0, seed=3, n_paths=30_000)
    dt = 1.0 / 64
    var = inc.var(ddof=1)
    assert abs(var - dt) <= 4.0 * dt * math.sqrt(2.0 / inc.size)
    lag1 = np.mean(inc[:, :-1] * inc[:, 1:]) / dt
    se = 1.0 / math.sqrt(inc[:, :-1].size)
    assert abs(lag1) <= 4.0 * se


def test_fbm_terminal_variance():
    inc = fbm_increments(0.7, 64, 1.0, seed=4, n_paths=30_000)
    b1 = inc.sum(axis=1)
    var = b1.var(ddof=1)
    se = var * math.sqrt(2.0 / (len(b1) - 1))
    assert abs(var - 1.0) <= 4.0 * se


def test_fbm_low_hurst_covariance():
    inc = fbm_increments(0.1, 32, 1.0, seed=5, n_paths=40_000)
    b_half = inc[:, :16].sum(axis=1)
    b_one = inc.sum(axis=1)
    prod = b_half * b_one
    want = 0.5 * (0.5**0.2 + 1.0 - 0.5**0.2)
    se = prod.std(ddof=1) / math.sqrt(len(prod))
    assert abs(prod.mean() - want) <= 4.0 * se


def test_fbm_validation():
    with pytest.raises(ValueError):
        fbm_increments(0.0, 16, 1.0, seed=1)
    with pytest.raises(ValueError):
        fbm_increments(0.3, 5000, 1.0, seed=1)


def test_stochastic_exponential_identities():
    path = stochastic_exponential(np.zeros((3, 8)), 5.0, np.zeros((3, 8)), 0.125)
    assert np.array_equal(path, np.full((3, 9), 5.0))
    spec = _spec(GBM(0.3), n_steps=16)
    batch = simulate(spec, 20, seed=2)
    rebuilt = stochastic_exponential(batch.vol[:, :-1], spec.s0, batch.d_w, spec.dt)
    assert np.array_equal(batch.spot, rebuilt)
    with pytest.raises(ValueError):
        stochastic_exponential(np.zeros((3, 7)), 1.0, np.zeros((3, 8)), 0.1)
    with pytest.raises(ValueError):
        stochastic_exponential(np.zeros((3, 8)), -1.0, np.zeros((3, 8)), 0.1)


def test_stochastic_exponential_unit_mean():
    dt = 1.0 / 64
    z = standard_normals(seed=8, n_paths=50_000, n_streams=1, n_steps=64)[:, 0, :]
    path = stochastic_exponential(np.ones((50_000, 64)), 1.0, z * math.sqrt(dt), dt)
    terminal = path[:, -1]
    se = terminal.std(ddof=1) / math.sqrt(len(terminal))
    assert abs(terminal.mean() - 1.0) <= 4.0 * se


def test_paths_csv_layout():
    spec = _spec(GBM(0.2), n_steps=3)
    batch = simulate(spec, 2, seed=6)
    buf = io.StringIO()
    write_paths_csv(batch, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# seed=6"
    assert lines[1] == "path_id,t,S,nu"
    assert len(lines) == 2 + 2 * 4  # n_paths * (n_steps + 1) data rows
    first = lines[2].split(",")
    assert first[0] == "0" and float(first[1]) == 0.0 and float(first[2]) == 100.0
