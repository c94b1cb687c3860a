import numpy as np
import pytest

from neurodrive.errors import DataError
from neurodrive.face import (
    FaceTrial,
    FeatureTable,
    LandmarkFrame,
    aggregate_trial,
    face_deep_trial_features,
    face_geometric_trial_features,
    geometric_features,
    read_landmarks_csv,
    write_landmarks_csv,
)


def template_points():
    """Plausible neutral 49-point layout, dyadic coordinates (pixel y down)."""
    pts = np.zeros((49, 2))
    # brows
    pts[0:5] = [(125, 152), (136, 148), (147.5, 146), (159, 148), (170, 150)]
    pts[5:10] = [(230, 150), (241, 148), (252.5, 146), (264, 148), (275, 152)]
    # nose bridge + nostril line
    pts[10:14] = [(200, 170), (200, 182), (200, 194), (200, 206)]
    pts[14:19] = [(180, 215), (190, 217), (200, 218), (210, 217), (220, 215)]
    # left eye: outer corner, top x2, inner corner, bottom inner, bottom outer
    pts[19:25] = [(130, 175), (142, 170), (156, 170), (168, 175), (156, 180), (142, 180)]
    # right eye mirrored
    pts[25:31] = [(270, 175), (258, 170), (244, 170), (232, 175), (244, 180), (258, 180)]
    # outer mouth
    pts[31:43] = [
        (160, 245), (172, 238), (185, 234), (200, 232), (215, 234), (228, 238),
        (240, 245), (228, 252), (215, 256), (200, 258), (185, 256), (172, 252),
    ]
    # inner mouth
    pts[43:49] = [(170, 245), (185, 242), (215, 242), (230, 245), (215, 248), (185, 248)]
    return pts


def template_frame(index=0):
    return LandmarkFrame(index, template_points(), (100.0, 100.0, 200.0, 200.0))


class TestLandmarkFrame:
    def test_validation(self):
        with pytest.raises(DataError):
            LandmarkFrame(0, np.zeros((48, 2)), (0, 0, 10, 10))
        with pytest.raises(DataError):
            LandmarkFrame(0, np.zeros((49, 2)), (0, 0, 0, 10))
        pts = np.zeros((49, 2))
        pts[3] = (np.inf, 0)
        with pytest.raises(DataError):
            LandmarkFrame(0, pts, (0, 0, 10, 10))

    def test_trial_ordering(self):
        with pytest.raises(DataError):
            FaceTrial((template_frame(3), template_frame(1)))


class TestGeometricFeatures:
    def test_shape_and_names(self):
        fv = geometric_features(template_frame())
        assert len(fv) == 30
        assert fv.names[6] == "mouth_width"

    def test_uniform_scale_invariance(self):
        base = geometric_features(template_frame())
        scaled = LandmarkFrame(0, 2.0 * template_points(), (200.0, 200.0, 400.0, 400.0))
        np.testing.assert_array_equal(geometric_features(scaled).values, base.values)

    def test_translation_invariance(self):
        base = geometric_features(template_frame())
        shifted = LandmarkFrame(
            0, template_points() + np.array([100.0, 50.0]), (200.0, 150.0, 200.0, 200.0)
        )
        np.testing.assert_array_equal(geometric_features(shifted).values, base.values)

    def test_hand_computed_values(self):
        pts = template_points()
        frame = template_frame()
        fv = geometric_features(frame)
        by_name = dict(zip(fv.names, fv.values))
        diag = np.sqrt(200.0**2 + 200.0**2)

        mouth_width = np.linalg.norm(pts[31] - pts[37]) / diag
        assert by_name["mouth_width"] == pytest.approx(mouth_width, abs=1e-12)

        eye_open_l = np.linalg.norm(pts[[20, 21]].mean(0) - pts[[23, 24]].mean(0)) / diag
        assert by_name["eye_open_l"] == pytest.approx(eye_open_l, abs=1e-12)

        u = pts[34] - pts[31]
        v = pts[40] - pts[31]
        angle = np.arccos(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
        assert by_name["mouth_corner_angle_l"] == pytest.approx(angle, abs=1e-12)

    def test_table_is_bundled_and_versioned(self):
        table = FeatureTable.bundled()
        assert table.version == 1
        assert len(table.names) == 30


class TestAggregateTrial:
    def test_constant_frames(self):
        m = np.full((10, 4), 2.5)
        fv = aggregate_trial(m)
        np.testing.assert_allclose(fv.values[:4], 2.5)
        np.testing.assert_allclose(fv.values[4:8], 2.5)
        np.testing.assert_allclose(fv.values[8:], 0.0)

    def test_single_frame(self):
        fv = aggregate_trial(np.array([[1.0, -2.0]]))
        np.testing.assert_array_equal(fv.values, [1.0, -2.0, 1.0, -2.0, 0.0, 0.0])

    def test_p95_linear_interpolation(self):
        m = np.arange(1.0, 101.0)[:, None]
        fv = aggregate_trial(m)
        assert fv.values[1] == pytest.approx(95.05, abs=1e-12)

    def test_mean_block_matches_column_means(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((17, 5))
        fv = aggregate_trial(m)
        np.testing.assert_allclose(fv.values[:5], m.mean(axis=0), atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            aggregate_trial(np.zeros((0, 3)))


class TestTrialFeatures:
    def test_length_90(self):
        trial = FaceTrial(tuple(template_frame(i) for i in range(5)))
        fv = face_geometric_trial_features(trial)
        assert len(fv) == 90

    def test_identical_frames_zero_std(self):
        trial = FaceTrial(tuple(template_frame(i) for i in range(4)))
        fv = face_geometric_trial_features(trial)
        np.testing.assert_allclose(fv.values[60:], 0.0, atol=1e-15)

    def test_two_frame_hand_computation(self):
        f0 = template_frame(0)
        pts = template_points()
        pts[20] += (0.0, -4.0)  # raise one upper-lid point
        f1 = LandmarkFrame(1, pts, (100.0, 100.0, 200.0, 200.0))
        trial = FaceTrial((f0, f1))
        fv = face_geometric_trial_features(trial)
        a = geometric_features(f0).values
        b = geometric_features(f1).values
        stacked = np.stack([a, b])
        np.testing.assert_allclose(fv.values[:30], stacked.mean(0), atol=1e-12)
        np.testing.assert_allclose(
            fv.values[30:60], np.percentile(stacked, 95, axis=0), atol=1e-12
        )
        np.testing.assert_allclose(fv.values[60:], stacked.std(0), atol=1e-12)


class TestDeepTrialFeatures:
    def test_shape_and_zero_std_for_identical_frames(self):
        from neurodrive.embedding import DeterministicProjectionBackend

        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (224, 224, 3), dtype=np.uint8)
        trial = FaceTrial(
            tuple(template_frame(i) for i in range(3)),
            face_images=(img, img, img),
        )
        fv = face_deep_trial_features(trial, DeterministicProjectionBackend(seed=1))
        assert len(fv) == 3 * 4096
        np.testing.assert_allclose(fv.values[2 * 4096 :], 0.0, atol=1e-15)

    def test_missing_images_rejected(self):
        trial = FaceTrial((template_frame(0),))
        with pytest.raises(DataError):
            face_deep_trial_features(trial, None)


class TestLandmarksCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        frames = []
        for i in range(3):
            pts = template_points() + rng.normal(0, 0.5, (49, 2))
            frames.append(LandmarkFrame(i, pts, (100.0, 100.0, 200.0, 200.0)))
        trial = FaceTrial(tuple(frames))
        path = tmp_path / "landmarks.csv"
        write_landmarks_csv(path, trial)
        back = read_landmarks_csv(path)
        assert len(back.frames) == 3
        np.testing.assert_allclose(back.frames[1].points, frames[1].points, atol=1e-8)
        assert back.frames[2].face_box == frames[2].face_box

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError):
            read_landmarks_csv(path)
