import numpy as np
import pytest

from isomon.normal_form import formal_type
from isomon.series import MatrixLaurent, gauge_transform
from isomon.stokes import (
    anti_stokes_directions,
    canonical_solution,
    local_monodromy,
    stokes_factors,
)


def sl2_instance(seed, k=2, scale=0.35, hol=2):
    rng = np.random.default_rng(seed)
    coeffs = {-k: np.diag([1.0, -1.0])}
    for p in range(-k + 1, hol + 1):
        coeffs[p] = scale * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    return MatrixLaurent(2, coeffs, 1)


def test_rays_hand_examples():
    a = MatrixLaurent(2, {-2: np.diag([1.0, -1.0])}, 1)
    rays = anti_stokes_directions(formal_type(a, order=4))
    assert [round(r.angle, 12) for r in rays] == [0.0, round(np.pi, 12)]
    a3 = MatrixLaurent(2, {-3: np.diag([1.0, -1.0])}, 1)
    rays3 = anti_stokes_directions(formal_type(a3, order=4))
    assert np.allclose([r.angle for r in rays3], [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_rays_empty_for_scalar():
    a = MatrixLaurent(1, {-2: [[1.0]]}, 1)
    assert anti_stokes_directions(formal_type(a, order=4)) == []


def test_ray_count_with_multiplicity():
    rng = np.random.default_rng(40)
    for n in (2, 3, 4):
        for k in (2, 3, 4, 5):
            lead = np.diag(rng.standard_normal(n) + 1j * rng.standard_normal(n))
            a = MatrixLaurent(n, {-k: lead}, 1)
            rays = anti_stokes_directions(formal_type(a, order=4))
            r = n * (n - 1) // 2
            assert sum(len(ray.roots) for ray in rays) == 2 * r * (k - 1)


def test_diagonal_connection_trivial_stokes():
    a = MatrixLaurent(2, {-2: np.diag([1.0, -1.0]), -1: np.diag([0.2, -0.2])}, 1)
    ft = formal_type(a, order=10)
    sd = stokes_factors(a, ft, tol=1e-11)
    assert len(sd.factors) == 2
    for f in sd.factors:
        assert np.max(np.abs(f.K - np.eye(2))) < 1e-9
    lm = local_monodromy(a, ft, tol=1e-11)
    expect = np.diag(np.exp(2j * np.pi * np.array([0.2, -0.2])))
    assert np.max(np.abs(lm["numeric"] - expect)) < 1e-8
    assert np.max(np.abs(lm["factored"] - expect)) < 1e-10


def test_canonical_solution_diagonal_exact():
    a = MatrixLaurent(2, {-2: np.diag([1.0, -1.0]), -1: np.diag([0.3, -0.3])}, 1)
    ft = formal_type(a, order=8)
    sol = canonical_solution(a, ft, 1, radius=0.25)
    z0, th = sol.anchor, sol.theta
    q = np.array([-1.0, 1.0]) / z0
    lam = np.exp(np.array([0.3, -0.3]) * (np.log(abs(z0)) + 1j * th))
    assert np.max(np.abs(sol.value - np.diag(lam * np.exp(q)))) < 1e-12


def test_sl2_k2_structure_and_parity():
    a = sl2_instance(1)
    ft = formal_type(a, order=30)
    sd = stokes_factors(a, ft, tol=1e-12)
    assert len(sd.factors) == 2
    parities = {f.parity for f in sd.factors}
    assert parities == {"upper", "lower"}
    for f in sd.factors:
        assert np.max(np.abs(np.diag(f.K) - 1.0)) < 1e-12  # projected
        assert f.defect < 1e-7  # strictly triangular in the sigma order
    assert sd.diagnostics["unipotency"] < 1e-8
    assert sd.diagnostics["support_leak"] < 1e-8


def test_stokes_refinement_stability():
    a = sl2_instance(2)
    ft_lo = formal_type(a, order=24)
    ft_hi = formal_type(a, order=34)
    sd_lo = stokes_factors(a, ft_lo, tol=1e-10)
    r_half = sd_lo.diagnostics["seed_radius"] / 2.0
    sd_hi = stokes_factors(a, ft_hi, radius=r_half, tol=1e-10)
    for f1, f2 in zip(sd_lo.factors, sd_hi.factors):
        assert np.max(np.abs(f1.K - f2.K)) < 10 * 1e-7


def test_stokes_gauge_invariance():
    a = sl2_instance(3)
    rng = np.random.default_rng(99)
    h = MatrixLaurent(2, {0: np.eye(2), 1: 0.3 * rng.standard_normal((2, 2)), 2: 0.2 * rng.standard_normal((2, 2))})
    a2 = gauge_transform(h, a, ord_max=36)
    f1 = formal_type(a, order=30)
    f2 = formal_type(a2, order=30)
    s1 = stokes_factors(a, f1, tol=1e-12)
    s2 = stokes_factors(a2, f2, tol=1e-12)
    for g1, g2 in zip(s1.factors, s2.factors):
        assert np.max(np.abs(g1.K - g2.K)) < 1e-6


def test_sl3_k2_free_parameter_count():
    # near-equilateral leading eigenvalues: comparable root gaps keep the
    # per-entry extraction conditioned (see stokes module notes)
    rng = np.random.default_rng(41)
    w = np.exp(2j * np.pi * np.arange(3) / 3) * (1 + 0.02 * rng.standard_normal(3))
    lead = np.diag(w - w.mean())
    a = MatrixLaurent(3, {-2: lead, -1: 0.3 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))}, 1)
    ft = formal_type(a, order=36)
    sd = stokes_factors(a, ft, tol=1e-12)
    supports = [tuple(rt) for _, _, _, roots in sd.ray_factors for rt in roots]
    assert len(supports) == len(set(supports)) == 6  # 2 r (k-1), r = 3
    assert sd.free_parameter_count() == 6
    assert sd.diagnostics["unipotency"] < 1e-6
    lm = local_monodromy(a, ft, tol=1e-12)
    assert np.max(np.abs(lm["numeric"] - lm["factored"])) < 1e-6


def test_sl3_skewed_monodromy_still_factorizes():
    # ill-conditioned entry extraction must not break the factorization
    # identity: raw factors telescope to the transported loop
    rng = np.random.default_rng(43)
    lead = np.diag([1.0 + 0.1j, -0.2 - 0.8j, -0.8 + 0.7j])
    a = MatrixLaurent(3, {-2: lead, -1: 0.3 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))}, 1)
    ft = formal_type(a, order=36)
    lm = local_monodromy(a, ft, tol=1e-12)
    assert np.max(np.abs(lm["numeric"] - lm["factored"])) < 1e-6


def test_local_monodromy_factorization_sl2():
    for seed in (4, 5):
        a = sl2_instance(seed, k=2)
        ft = formal_type(a, order=30)
        lm = local_monodromy(a, ft, tol=1e-12)
        assert np.max(np.abs(lm["numeric"] - lm["factored"])) < 1e-7


def test_k3_monodromy_factorization():
    a = sl2_instance(6, k=3, scale=0.3)
    ft = formal_type(a, order=34)
    sd = stokes_factors(a, ft, tol=1e-12)
    assert len(sd.factors) == 4
    lm = local_monodromy(a, ft, tol=1e-12)
    assert np.max(np.abs(lm["numeric"] - lm["factored"])) < 1e-6


def test_k1_rejected():
    a = MatrixLaurent(2, {-1: np.diag([0.3, -0.3])}, 1)
    ft = formal_type(a, order=6)
    with pytest.raises(ValueError):
        stokes_factors(a, ft)
