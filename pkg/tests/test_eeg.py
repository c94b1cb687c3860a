import math

import numpy as np
import pytest

from neurodrive.eeg import (
    BANDS,
    CANONICAL_CHANNELS,
    BandPowerMap,
    EegTrial,
    ElectrodeLayout,
    amplitude_artifact_fraction,
    band_power_maps,
    conditional_entropy,
    electrode_pixel,
    mutual_information,
    pairwise_entropy_features,
    render_topo_image,
)
from neurodrive.errors import DataError
from neurodrive.signals import SampledSeries


# ---------------------------------------------------------------------------
# independent plug-in oracle working straight off a joint count table
# ---------------------------------------------------------------------------

def oracle_mi_bits(counts):
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    mi = 0.0
    px = counts.sum(axis=1) / n
    py = counts.sum(axis=0) / n
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            pij = counts[i, j] / n
            if pij > 0:
                mi += pij * math.log2(pij / (px[i] * py[j]))
    return mi


def oracle_entropy_bits(marginal):
    marginal = np.asarray(marginal, dtype=float)
    p = marginal / marginal.sum()
    return -sum(q * math.log2(q) for q in p if q > 0)


def samples_from_table(counts):
    """Expand a joint count table into (x, y) sample arrays covering 0..b-1."""
    xs, ys = [], []
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            xs.extend([float(i)] * counts[i, j])
            ys.extend([float(j)] * counts[i, j])
    return np.array(xs), np.array(ys)


def random_full_range_table(rng, bins):
    """Random count table whose marginals span the whole 0..bins-1 range."""
    counts = rng.integers(0, 8, size=(bins, bins))
    counts[0, 0] += 1
    counts[bins - 1, bins - 1] += 1
    return counts


def make_trial(data, fs=128.0):
    return EegTrial(SampledSeries(fs, CANONICAL_CHANNELS, data))


class TestMutualInformation:
    def test_identical_binary_is_one_bit(self):
        x = np.tile([0.0, 1.0], 500)
        assert mutual_information(x, x, bins=2) == pytest.approx(1.0, abs=1e-12)

    def test_exactly_independent_is_zero(self):
        # joint counts are exactly uniform over the 2x2 table
        x = np.array([0.0, 0.0, 1.0, 1.0] * 50)
        y = np.array([0.0, 1.0, 0.0, 1.0] * 50)
        assert mutual_information(x, y, bins=2) == pytest.approx(0.0, abs=1e-12)

    def test_known_table(self):
        x, y = samples_from_table(np.array([[2, 1], [0, 1]]))
        mi = mutual_information(x, y, bins=2)
        assert mi == pytest.approx(0.31127812445913283, abs=1e-12)
        assert mi == pytest.approx(0.31128, abs=5e-6)

    def test_against_oracle_random_tables(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            bins = int(rng.integers(2, 7))
            counts = random_full_range_table(rng, bins)
            x, y = samples_from_table(counts)
            assert mutual_information(x, y, bins=bins) == pytest.approx(
                max(oracle_mi_bits(counts), 0.0), abs=1e-12
            )

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.standard_normal(300)
            y = rng.standard_normal(300) + 0.5 * x
            ixy = mutual_information(x, y)
            iyx = mutual_information(y, x)
            assert abs(ixy - iyx) < 1e-12
            hx = conditional_entropy(y, x) + mutual_information(x, y)
            hy = conditional_entropy(x, y) + mutual_information(x, y)
            assert -1e-12 <= ixy <= min(hx, hy) + 1e-12

    def test_constant_input_yields_zero(self):
        x = np.ones(100)
        y = np.arange(100.0)
        assert mutual_information(x, y, bins=4) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            mutual_information(np.zeros(5), np.zeros(6), bins=2)


class TestConditionalEntropy:
    def test_fully_determined(self):
        x = np.tile([0.0, 1.0], 100)
        assert conditional_entropy(x, x, bins=2) == pytest.approx(0.0, abs=1e-12)

    def test_independent_binary(self):
        x = np.array([0.0, 0.0, 1.0, 1.0] * 25)
        y = np.array([0.0, 1.0, 0.0, 1.0] * 25)
        assert conditional_entropy(x, y, bins=2) == pytest.approx(1.0, abs=1e-12)

    def test_known_table(self):
        counts = np.array([[2, 1], [0, 1]])
        x, y = samples_from_table(counts)
        ce = conditional_entropy(x, y, bins=2)
        assert ce == pytest.approx(0.6887218755408672, abs=1e-12)
        # direct sum p(x) H(Y|X=x): x=0 -> H(2/3,1/3), x=1 -> H(0,1)=0
        direct = 0.75 * oracle_entropy_bits([2, 1])
        assert ce == pytest.approx(direct, abs=1e-12)


class TestPairwiseEntropyFeatures:
    def test_vector_shape_and_names(self):
        rng = np.random.default_rng(3)
        fv = pairwise_entropy_features(make_trial(rng.standard_normal((14, 256))))
        assert len(fv) == 91
        assert fv.names[0] == "ce_AF3_AF4"
        assert fv.names[1] == "ce_AF3_F3"

    def test_identical_channels_give_zeros(self):
        row = np.sin(np.arange(256.0))
        fv = pairwise_entropy_features(make_trial(np.tile(row, (14, 1))))
        np.testing.assert_allclose(fv.values, 0.0, atol=1e-12)

    def test_against_histogram_oracle(self):
        rng = np.random.default_rng(7)
        data = rng.standard_normal((14, 128))
        fv = pairwise_entropy_features(make_trial(data), bins=8)
        k = 0
        for i in range(14):
            for j in range(i + 1, 14):
                counts, _, _ = np.histogram2d(data[i], data[j], bins=8)
                expected = oracle_entropy_bits(counts.sum(axis=0)) - oracle_mi_bits(counts)
                assert fv.values[k] == pytest.approx(max(expected, 0.0), abs=1e-12)
                k += 1

    def test_channel_order_permutation_invariance(self):
        rng = np.random.default_rng(5)
        data = rng.standard_normal((14, 200))
        base = pairwise_entropy_features(make_trial(data))
        perm = rng.permutation(14)
        shuffled = EegTrial(
            SampledSeries(128.0, tuple(CANONICAL_CHANNELS[i] for i in perm), data[perm])
        )
        np.testing.assert_array_equal(
            pairwise_entropy_features(shuffled).values, base.values
        )


class TestEegTrial:
    def test_reorders_to_canonical(self):
        rng = np.random.default_rng(0)
        perm = rng.permutation(14)
        data = rng.standard_normal((14, 64))
        trial = EegTrial(
            SampledSeries(128.0, tuple(CANONICAL_CHANNELS[i] for i in perm), data[perm])
        )
        assert trial.series.labels == CANONICAL_CHANNELS
        np.testing.assert_array_equal(trial.data, data[perm][np.argsort(perm)])

    def test_rejects_wrong_channels(self):
        with pytest.raises(DataError):
            EegTrial(SampledSeries(128.0, ("a",) * 14, np.zeros((14, 64))))

    def test_artifact_fraction(self):
        data = np.zeros((14, 100))
        data[3, :25] = 500.0
        frac = amplitude_artifact_fraction(make_trial(data), threshold=100.0)
        assert frac[3] == 0.25
        assert frac[0] == 0.0


class TestBandPowerMaps:
    def test_zero_trial(self):
        theta, alpha, beta = band_power_maps(make_trial(np.zeros((14, 512))))
        for m in (theta, alpha, beta):
            np.testing.assert_array_equal(m.power_per_channel, 0.0)

    def test_tone_on_o1_shows_in_alpha(self):
        fs = 128.0
        t = np.arange(int(10 * fs)) / fs
        data = np.zeros((14, t.size))
        data[CANONICAL_CHANNELS.index("O1")] = np.sin(2 * np.pi * 10.0 * t)
        _, alpha, _ = band_power_maps(make_trial(data))
        assert np.argmax(alpha.power_per_channel) == CANONICAL_CHANNELS.index("O1")

    def test_theta_tone_on_all_channels(self):
        fs = 128.0
        t = np.arange(int(10 * fs)) / fs
        data = np.tile(np.sin(2 * np.pi * 5.0 * t), (14, 1))
        theta, alpha, beta = band_power_maps(make_trial(data))
        assert np.allclose(theta.power_per_channel, theta.power_per_channel[0])
        assert np.all(theta.power_per_channel > 20 * alpha.power_per_channel)
        assert np.all(theta.power_per_channel > 20 * beta.power_per_channel)


def maps_from_values(theta_v=0.0, alpha_v=0.0, beta_v=0.0, hot=None):
    vals = {
        "theta": np.full(14, float(theta_v)),
        "alpha": np.full(14, float(alpha_v)),
        "beta": np.full(14, float(beta_v)),
    }
    if hot is not None:
        band, ch, v = hot
        vals[band] = np.zeros(14)
        vals[band][CANONICAL_CHANNELS.index(ch)] = v
    return tuple(BandPowerMap(b, vals[b]) for b in ("theta", "alpha", "beta"))


class TestTopoImage:
    def test_all_zero_maps_render_black(self):
        img = render_topo_image(*maps_from_values())
        assert img.degenerate
        assert img.pixels.shape == (224, 224, 3)
        assert img.pixels.sum() == 0

    def test_band_to_channel_separation(self):
        img = render_topo_image(*maps_from_values(hot=("theta", "F3", 2.0)))
        assert img.pixels[:, :, 1].sum() == 0
        assert img.pixels[:, :, 2].sum() == 0
        assert img.pixels[:, :, 0].sum() > 0

    def test_hot_electrode_location(self):
        layout = ElectrodeLayout.bundled()
        img = render_topo_image(*maps_from_values(hot=("theta", "AF3", 1.0)), layout=layout)
        red = img.pixels[:, :, 0].astype(int)
        r, c = np.unravel_index(np.argmax(red), red.shape)
        er, ec = electrode_pixel(layout, "AF3")
        assert np.hypot(r - er, c - ec) < 8.0

    def test_joint_scale_invariance(self):
        rng = np.random.default_rng(13)
        base_maps = tuple(
            BandPowerMap(b, rng.uniform(0.0, 5.0, 14)) for b in ("theta", "alpha", "beta")
        )
        base = render_topo_image(*base_maps)
        for k in (2.0, 0.5, 3.0, 7.5):
            scaled_maps = tuple(
                BandPowerMap(m.band, k * m.power_per_channel) for m in base_maps
            )
            scaled = render_topo_image(*scaled_maps)
            np.testing.assert_array_equal(scaled.pixels, base.pixels)

    def test_outside_disc_is_black(self):
        img = render_topo_image(*maps_from_values(theta_v=1.0, alpha_v=1.0, beta_v=1.0))
        assert img.pixels[0, 0].sum() == 0
        assert img.pixels[-1, -1].sum() == 0

    def test_band_maxima_recorded(self):
        img = render_topo_image(*maps_from_values(theta_v=1.0, alpha_v=3.0, beta_v=2.0))
        assert img.band_maxima == (1.0, 3.0, 2.0)


class TestElectrodeLayout:
    def test_bundled_layout_inside_disc(self):
        layout = ElectrodeLayout.bundled()
        assert layout.points.shape == (14, 2)
        assert np.all(np.hypot(layout.points[:, 0], layout.points[:, 1]) < 1.0)

    def test_rejects_missing_channel(self):
        with pytest.raises(DataError):
            ElectrodeLayout({"AF3": (0.0, 0.0)})

    def test_bands_constant(self):
        assert BANDS == {"theta": (4.0, 7.0), "alpha": (7.0, 13.0), "beta": (13.0, 30.0)}
