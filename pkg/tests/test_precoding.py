import numpy as np
import pytest

from hymcast.channel import ArrayGeometry, ChannelSet, array_response
from hymcast.precoding import (
    AnalogPrecoder,
    GroupAssignment,
    PhaseAlphabet,
    QosTargets,
    all_sinr,
    check_combiners,
    count_satisfied,
    dbm_to_linear,
    linear_to_dbm,
    penalized_objective,
    qos_deficits,
    rx_beam_pattern,
    sinr,
    total_tx_power,
    tx_beam_pattern,
)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# -- power conversions ---------------------------------------------------------


@pytest.mark.parametrize("dbm, mw", [(10.0, 10.0), (0.0, 1.0), (-10.0, 0.1)])
def test_dbm_to_linear(dbm, mw):
    assert dbm_to_linear(dbm) == pytest.approx(mw, rel=1e-15)


def test_linear_to_dbm_known_value():
    assert linear_to_dbm(2000.0) == pytest.approx(33.0103, abs=1e-4)


def test_conversions_are_inverse():
    x = np.logspace(-6, 6, 41)
    np.testing.assert_allclose(dbm_to_linear(linear_to_dbm(x)), x, rtol=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, [1.0, 0.0]])
def test_linear_to_dbm_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        linear_to_dbm(bad)


# -- alphabet and analog precoder -------------------------------------------------


def test_alphabet_elements():
    a = PhaseAlphabet(4, 0.5)
    np.testing.assert_allclose(a.elements, 0.5 * np.array([1, 1j, -1, -1j]), atol=1e-15)
    assert a.delta == pytest.approx(0.25)
    np.testing.assert_allclose(np.abs(a.elements), 0.5)


def test_alphabet_validation():
    with pytest.raises(ValueError):
        PhaseAlphabet(0)
    with pytest.raises(ValueError):
        PhaseAlphabet(4, 0.0)
    with pytest.raises(ValueError):
        PhaseAlphabet(4).realize([4])


def test_nearest_index_example_and_ties():
    a = PhaseAlphabet(8)
    assert int(a.nearest_index(np.pi / 7)) == 1
    # midpoint between index 0 and 1 goes to 0; between 3 and 4 goes to 3
    assert int(a.nearest_index(np.pi / 8)) == 0
    assert int(a.nearest_index(7 * np.pi / 8)) == 3
    # midpoint across the wrap between 7 and 0 goes to 0
    assert int(a.nearest_index(-np.pi / 8)) == 0


def test_quantize_is_identity_on_alphabet():
    a = PhaseAlphabet(16, 0.3)
    np.testing.assert_allclose(a.quantize(a.elements), a.elements, atol=1e-15)


def test_analog_precoder_column_major_and_norm():
    a = PhaseAlphabet(8, np.sqrt(1 / 4))
    idx = np.arange(8) % 8
    F = AnalogPrecoder.from_vector_indices(idx, 4, 2, a)
    assert F.index_matrix[:, 0].tolist() == [0, 1, 2, 3]
    assert F.index_matrix[:, 1].tolist() == [4, 5, 6, 7]
    assert np.linalg.norm(F.matrix) ** 2 == pytest.approx(4 * 2 * a.delta)
    assert (F.n_tx, F.n_rf) == (4, 2)


# -- groups and targets ---------------------------------------------------------------


def test_group_assignment():
    g = GroupAssignment.contiguous(7, 3)
    assert g.groups == ((0, 1, 2), (3, 4), (5, 6))
    assert g.user_group.tolist() == [0, 0, 0, 1, 1, 2, 2]
    with pytest.raises(ValueError):
        GroupAssignment(((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        GroupAssignment(((0, 2),))
    with pytest.raises(ValueError):
        GroupAssignment.contiguous(2, 3)


def test_qos_targets():
    t = QosTargets.from_db(10.0, 10.0, 0.0, num_groups=3)
    assert t.gamma == pytest.approx((10.0, 10.0, 10.0))
    assert t.noise_power == pytest.approx(10.0) and t.rx_power == pytest.approx(1.0)
    assert t.gamma_db == pytest.approx((10.0, 10.0, 10.0))
    with pytest.raises(ValueError):
        QosTargets((0.0,), 1.0, 1.0)
    with pytest.raises(ValueError):
        QosTargets((1.0, 2.0), 1.0, 1.0).for_groups(3)


# -- SINR, power, counting --------------------------------------------------------------


def reference_sinr(H, F, M, w, i, noise):
    num = abs(w.conj() @ H @ F @ M[:, i]) ** 2
    den = sum(abs(w.conj() @ H @ F @ M[:, j]) ** 2 for j in range(M.shape[1]) if j != i)
    return num / (den + noise * np.linalg.norm(w) ** 2)


def test_sinr_scalar_example():
    assert sinr(np.array([[1.0]]), np.eye(1), np.array([[2.0]]), np.array([1.0]), 0, 1.0) == pytest.approx(4.0)


def test_sinr_zero_precoder():
    assert sinr(np.ones((1, 2)), np.eye(2), np.zeros((2, 1)), np.array([1.0]), 0, 1.0) == 0.0


def test_sinr_rejects_zero_combiner():
    with pytest.raises(ValueError):
        sinr(np.ones((1, 2)), np.eye(2), np.ones((2, 1)), np.array([0.0]), 0, 1.0)


def test_sinr_matches_term_by_term_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        H = crandn(rng, 2, 4)
        F = crandn(rng, 4, 3)
        M = crandn(rng, 3, 2)
        w = crandn(rng, 2)
        for i in range(2):
            assert sinr(H, F, M, w, i, 0.7) == pytest.approx(reference_sinr(H, F, M, w, i, 0.7), rel=1e-12)


def test_all_sinr_and_deficits_agree_with_scalar_version():
    rng = np.random.default_rng(3)
    H = crandn(rng, 5, 2, 4)
    F = crandn(rng, 4, 3)
    M = crandn(rng, 3, 2)
    W = crandn(rng, 5, 2)
    groups = np.array([0, 0, 1, 1, 1])
    s = all_sinr(ChannelSet(H), F, M, W, groups, 0.5)
    for k in range(5):
        assert s[k] == pytest.approx(sinr(H[k], F, M, W[k], groups[k], 0.5), rel=1e-12)
    gamma = np.array([1.5, 0.8])
    d = qos_deficits(ChannelSet(H), F, M, W, groups, gamma, 0.5)
    assert np.all((d <= 0) == (s >= gamma[groups]))


def test_total_tx_power_examples():
    assert total_tx_power(np.eye(2), np.sqrt(2) * np.eye(2)) == pytest.approx(4.0)
    assert total_tx_power(np.eye(3), np.zeros((3, 2))) == 0.0


def test_total_tx_power_matches_lifted_trace():
    rng = np.random.default_rng(4)
    a = PhaseAlphabet(8, 0.5)
    F = AnalogPrecoder(rng.integers(0, 8, (4, 3)), a)
    M = crandn(rng, 3, 2)
    f = F.matrix.reshape(-1, order="F")
    D = np.outer(f, f.conj())
    trace = sum(np.real(np.trace(np.kron(np.outer(M[:, i].conj(), M[:, i]), np.eye(4)) @ D)) for i in range(2))
    assert total_tx_power(F, M) == pytest.approx(trace, rel=1e-10)


def _count_setup(rng, K=6, G=2):
    H = crandn(rng, K, 2, 4)
    F = crandn(rng, 4, 3)
    M = crandn(rng, 3, G)
    W = crandn(rng, K, 2)
    W = W / np.linalg.norm(W, axis=1, keepdims=True) * np.sqrt(2.0)
    return ChannelSet(H), F, M, W


def test_count_satisfied_brute_force():
    rng = np.random.default_rng(5)
    groups = GroupAssignment.contiguous(6, 2)
    for _ in range(10):
        ch, F, M, W = _count_setup(rng)
        t = QosTargets.from_db(float(rng.uniform(-10, 5)), 0.0, 10 * np.log10(2.0), 2)
        count, mask = count_satisfied(ch, F, M, W, t, groups)
        brute = [reference_sinr(ch[k], F, M, W[k], groups.user_group[k], t.noise_power) >= t.gamma[0]
                 for k in range(6)]
        assert mask.tolist() == brute and count == sum(brute)


def test_count_satisfied_inclusive_threshold():
    # one group, three single-antenna users whose SINR is gamma, 0.999 gamma and 1.001 gamma
    gamma, noise = 2.0, 1.0
    gains = np.sqrt(np.array([gamma, 0.999 * gamma, 1.001 * gamma]) * noise)
    H = gains[:, None, None] * np.ones((3, 1, 1))
    t = QosTargets((gamma,), noise, 1.0)
    count, mask = count_satisfied(ChannelSet(H), np.eye(1), np.ones((1, 1)), np.ones((3, 1)), t,
                                  GroupAssignment(((0, 1, 2),)))
    assert count == 2 and mask.tolist() == [True, False, True]


def test_count_satisfied_rejects_invalid_combiners():
    rng = np.random.default_rng(6)
    ch, F, M, W = _count_setup(rng)
    W[2] = 1e-12
    t = QosTargets.from_db(0.0, 0.0, 10 * np.log10(2.0), 2)
    with pytest.raises(ValueError):
        count_satisfied(ch, F, M, W, t, GroupAssignment.contiguous(6, 2))


def test_check_combiners():
    w = np.array([[1.0, 1.0], [np.sqrt(2), 0.0]])
    assert check_combiners(w, 2.0).shape == (2, 2)
    with pytest.raises(ValueError, match=r"\[1\]"):
        check_combiners(np.array([[1.0, 1.0], [1.0, 0.0]]), 2.0)


def test_penalized_objective():
    rng = np.random.default_rng(7)
    ch, F, M, W = _count_setup(rng)
    groups = np.array([0, 0, 0, 1, 1, 1])
    gamma = np.array([50.0, 50.0])
    d = qos_deficits(ch, F, M, W, groups, gamma, 1.0)
    value = penalized_objective(ch, F, M, W, groups, gamma, 1.0, 3.0)
    assert value == pytest.approx(total_tx_power(F, M) + 3.0 * np.maximum(d, 0).sum())


def test_single_group_sinr_scale_invariance():
    """With G = 1 a common scaling c of m scales power by c^2 and SINR by c^2 (no interference)."""
    rng = np.random.default_rng(8)
    H = crandn(rng, 2, 4)
    m = crandn(rng, 4, 1)
    w = crandn(rng, 2)
    base = sinr(H, np.eye(4), m, w, 0, 1.0)
    for c in (0.5, 3.0):
        assert total_tx_power(np.eye(4), c * m) == pytest.approx(c**2 * total_tx_power(np.eye(4), m))
        assert sinr(H, np.eye(4), c * m, w, 0, 1.0) == pytest.approx(c**2 * base)


# -- beam patterns -----------------------------------------------------------------


def test_tx_beam_pattern_peaks_at_steering_angle():
    geo = ArrayGeometry(8)
    grid = np.linspace(-90, 90, 181)
    for theta in (-50.0, -12.3, 0.0, 33.3, 70.0):
        beam = array_response(geo, theta)
        pattern = tx_beam_pattern(np.eye(8), beam, geo, grid)
        assert pattern.shape == (181, 2)
        nearest = grid[np.argmin(np.abs(grid - theta))]
        assert pattern[np.argmax(pattern[:, 1]), 0] == nearest


def test_tx_beam_pattern_zero_precoder_and_empty_grid():
    geo = ArrayGeometry(4)
    pattern = tx_beam_pattern(np.eye(4), np.zeros(4), geo, [-10.0, 10.0])
    np.testing.assert_array_equal(pattern[:, 1], 0.0)
    with pytest.raises(ValueError):
        tx_beam_pattern(np.eye(4), np.ones(4), geo, [])


def test_rx_beam_pattern():
    geo = ArrayGeometry(4)
    grid = np.linspace(-90, 90, 37)
    w = array_response(geo, 20.0)
    pattern = rx_beam_pattern(w, geo, grid)
    assert pattern[np.argmax(pattern[:, 1]), 0] == 20.0
    flat = rx_beam_pattern(np.eye(4)[0], geo, grid)
    np.testing.assert_allclose(flat[:, 1], 0.5)
    assert len(rx_beam_pattern(w, geo, grid[:5])) == 5
