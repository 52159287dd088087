import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlsa import weighting


class TestCombine:
    def test_hand_normalization(self):
        out = weighting.combine([0.4, 0.8], [0.5, 0.5], mode="full")
        assert out.tolist() == [0.5, 1.0]

    def test_constant_zero(self):
        out = weighting.combine([0.4, 0.8], [0.5, 0.5], mode="const-0")
        assert out.tolist() == [0.0, 0.0]

    def test_constant_one(self):
        out = weighting.combine([0.4, 0.8], [0.5, 0.5], mode="const-1")
        assert out.tolist() == [1.0, 1.0]

    def test_constant_half(self):
        out = weighting.combine([0.4], [0.5], mode="const-0.5")
        assert out.tolist() == [0.5]

    def test_only_modes(self):
        w_c = [0.2, 0.4]
        w_d = [1.0, 0.25]
        w_s = [0.2, 0.1]
        w_g = [0.3, 0.6]
        assert weighting.combine(w_s, w_g, "only-wc", w_c=w_c, w_d=w_d).tolist() == [0.5, 1.0]
        assert weighting.combine(w_s, w_g, "only-wd", w_c=w_c, w_d=w_d).tolist() == [1.0, 0.25]
        assert weighting.combine(w_s, w_g, "only-wg").tolist() == [0.5, 1.0]

    def test_only_mode_requires_sequence(self):
        with pytest.raises(ValueError):
            weighting.combine([0.5], [0.5], "only-wc")

    def test_all_zero_products(self):
        out = weighting.combine([0.0, 0.0], [0.5, 0.5], mode="full")
        assert out.tolist() == [0.0, 0.0]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            weighting.combine([0.5, 0.5], [0.5], mode="full")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            weighting.combine([0.5], [0.5], mode="bogus")

    @given(
        st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20),
        st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20),
    )
    @settings(max_examples=200)
    def test_full_mode_invariants(self, w_s, w_g):
        n = min(len(w_s), len(w_g))
        w_s, w_g = np.asarray(w_s[:n]), np.asarray(w_g[:n])
        out = weighting.combine(w_s, w_g, mode="full")
        assert out.shape == (n,)
        assert np.all(out >= 0.0)
        assert np.all(out <= 1.0)
        if np.max(w_s * w_g) > 0:
            assert out.max() == pytest.approx(1.0)
        else:
            assert np.all(out == 0.0)

    @given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
    @settings(max_examples=100)
    def test_scale_invariance(self, scale_s, scale_g):
        w_s = np.array([0.1, 0.5, 0.9])
        w_g = np.array([0.7, 0.2, 0.4])
        base = weighting.combine(w_s, w_g, mode="full")
        scaled = weighting.combine(w_s * scale_s, w_g * scale_g, mode="full")
        assert scaled == pytest.approx(base, abs=1e-12)

    def test_order_preserved(self):
        w_s = np.array([0.3, 0.9, 0.1])
        w_g = np.array([1.0, 1.0, 1.0])
        out = weighting.combine(w_s, w_g, mode="full")
        assert np.array_equal(np.argsort(out), np.argsort(w_s))


class TestAuditFile:
    def test_round_trip(self, tmp_path):
        records = weighting.build_records(
            pseudo_classes=[0, 1, 1],
            w_c=[0.9, 0.5, 0.25],
            w_d=[1.0, 0.5, 1.0],
            w_s=[0.9, 0.25, 0.25],
            h_hat=[0.1, 2.5, 0.0],
            w_g=[0.99, 0.78, 1.0],
            w_combined=[1.0, 0.22, 0.28],
        )
        path = tmp_path / "audit.csv"
        weighting.write_weight_audit(records, path)
        loaded = weighting.load_weight_audit(path)
        assert loaded == records
        header = path.read_text().splitlines()[0]
        assert header == "index,pseudo_class,w_c,w_d,w_s,h_hat,w_g,w_combined"

    def test_misaligned_arrays_rejected(self):
        with pytest.raises(ValueError):
            weighting.build_records([0], [0.1, 0.2], [1.0], [0.1], [0.0], [1.0], [1.0])

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "audit.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            weighting.load_weight_audit(path)
