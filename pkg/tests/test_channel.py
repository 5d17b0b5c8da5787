import numpy as np
import pytest

from mupower import (
    ChannelRealization,
    SingularGramError,
    compute_effective_gains,
    gains_from_db,
    load_channel_csv,
    random_rayleigh_channel,
)


def pinv_row_norm_gains(h, sigma2):
    """Oracle: delta_i = 1 / (sigma2 * ||row i of pinv(H)||^2)."""
    h_pinv = np.linalg.inv(h.conj().T @ h) @ h.conj().T
    return 1.0 / (sigma2 * np.sum(np.abs(h_pinv) ** 2, axis=1))


def test_identity_channel():
    ch = ChannelRealization(np.eye(2, dtype=complex), sigma2=1.0)
    assert np.allclose(compute_effective_gains(ch).delta, [1.0, 1.0])


def test_orthogonal_scaled_columns():
    h = np.array([[2.0, 0.0], [0.0, 3.0]], dtype=complex)
    ch = ChannelRealization(h, sigma2=1.0)
    assert np.allclose(compute_effective_gains(ch).delta, [4.0, 9.0], rtol=1e-14)


def test_pinv_oracle_seeded_4x2():
    ch = random_rayleigh_channel(4, 2, seed=7, sigma2=0.5)
    delta = compute_effective_gains(ch).delta
    assert np.allclose(delta, pinv_row_norm_gains(ch.h, ch.sigma2), rtol=1e-10)


def test_pinv_oracle_sweep_sizes():
    # 100 seeded matrices across antenna/user counts
    cases = [(2, 2), (4, 2), (4, 4), (8, 2), (8, 4)]
    seed = 0
    for m, n in cases:
        for _ in range(20):
            ch = random_rayleigh_channel(m, n, seed=seed, sigma2=1.3)
            seed += 1
            delta = compute_effective_gains(ch).delta
            assert np.allclose(delta, pinv_row_norm_gains(ch.h, ch.sigma2), rtol=1e-8)


def test_unitary_invariance():
    rng = np.random.default_rng(11)
    ch = random_rayleigh_channel(6, 3, seed=3)
    base = compute_effective_gains(ch).delta
    for _ in range(10):
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        q, _ = np.linalg.qr(a)
        rotated = compute_effective_gains(ChannelRealization(q @ ch.h, ch.sigma2)).delta
        assert np.allclose(rotated, base, rtol=1e-10)


def test_scaling_is_quadratic():
    ch = random_rayleigh_channel(5, 3, seed=21)
    base = compute_effective_gains(ch).delta
    for c in (0.25, 3.0, 17.5):
        scaled = compute_effective_gains(ChannelRealization(c * ch.h, ch.sigma2)).delta
        assert np.allclose(scaled, c**2 * base, rtol=1e-10)


def test_gains_from_db_examples():
    assert np.allclose(gains_from_db([20.0, 20.0]).delta, [100.0, 100.0])
    assert np.allclose(gains_from_db([0.0]).delta, [1.0])
    assert np.allclose(gains_from_db([-20.0]).delta, [0.01])


def test_rank_deficient_rejected():
    h = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]], dtype=complex)
    with pytest.raises(SingularGramError):
        ChannelRealization(h, sigma2=1.0)


def test_wide_matrix_rejected():
    with pytest.raises(ValueError, match="receive antennas"):
        ChannelRealization(np.ones((2, 3), dtype=complex), sigma2=1.0)


def test_bad_noise_power_rejected():
    with pytest.raises(ValueError):
        ChannelRealization(np.eye(2, dtype=complex), sigma2=0.0)


def test_gains_validation():
    with pytest.raises(ValueError):
        gains_from_db([np.inf])


def test_channel_csv_complex_entries(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("1+2j,0.5-1j\n0+0.25j,2+0j\n3-0.5j,1+1j\n")
    h = load_channel_csv(path, n_users=2)
    assert h.shape == (3, 2)
    assert h[0, 0] == 1 + 2j and h[2, 1] == 1 + 1j


def test_channel_csv_re_im_pairs(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("1,2,0.5,-1\n0,0.25,2,0\n")
    h = load_channel_csv(path, n_users=2)
    assert h.shape == (2, 2)
    assert h[0, 0] == 1 + 2j and h[0, 1] == 0.5 - 1j


def test_channel_csv_bad_width(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(ValueError, match="columns"):
        load_channel_csv(path, n_users=2)
