import numpy as np
import pytest

from falabel import (
    LFSpec,
    LabelMatrix,
    ValidationError,
    apply_lfs,
    covariance_matrix,
    load_gold_labels,
    load_label_matrix,
    load_lf_specs,
    matrix_stats,
    save_gold_labels,
    save_label_matrix,
)
from falabel.labelling import GoldLabels


class TestLabelMatrix:
    def test_valid_construction(self):
        m = LabelMatrix(values=[[1, -1], [0, 0]], lf_names=("a", "b"))
        assert m.n == 2 and m.m == 2

    def test_rejects_out_of_range_entry(self):
        with pytest.raises(ValidationError, match="row 0, column 'b'"):
            LabelMatrix(values=[[1, 2]], lf_names=("a", "b"))

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValidationError, match="duplicate"):
            LabelMatrix(values=[[1, 0]], lf_names=("a", "a"))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            LabelMatrix(values=np.zeros((0, 2), dtype=int), lf_names=("a", "b"))

    def test_values_immutable(self):
        m = LabelMatrix(values=[[1, 0]], lf_names=("a", "b"))
        with pytest.raises(ValueError):
            m.values[0, 0] = 0


class TestLoadSave:
    def test_load_basic(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("lf1,lf2\n1,-1\n0,0\n")
        m = load_label_matrix(p)
        assert m.n == 2 and m.m == 2
        assert np.array_equal(m.values, [[1, -1], [0, 0]])
        assert m.lf_names == ("lf1", "lf2")

    def test_load_rejects_out_of_range(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("lf1,lf2\n1,2\n")
        with pytest.raises(ValidationError, match="row 1, column 'lf2'"):
            load_label_matrix(p)

    def test_load_rejects_non_integer(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("lf1\nx\n")
        with pytest.raises(ValidationError, match="non-integer"):
            load_label_matrix(p)

    def test_load_rejects_ragged(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("lf1,lf2\n1,0\n1\n")
        with pytest.raises(ValidationError, match="line 3"):
            load_label_matrix(p)

    def test_load_rejects_duplicate_names(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("lf1,lf1\n1,0\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_label_matrix(p)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            load_label_matrix(tmp_path / "nope.csv")

    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(42)
        m = LabelMatrix(
            values=rng.integers(-1, 2, size=(37, 5)),
            lf_names=tuple(f"lf{i}" for i in range(5)),
        )
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_label_matrix(m, p1)
        loaded = load_label_matrix(p1)
        assert loaded == m
        save_label_matrix(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_gold_roundtrip(self, tmp_path):
        g = GoldLabels(values=[1, 0, 1, 1])
        p = tmp_path / "y.csv"
        save_gold_labels(g, p)
        assert p.read_text() == "y\n1\n0\n1\n1\n"
        loaded = load_gold_labels(p)
        assert np.array_equal(loaded.values, g.values)

    def test_gold_rejects_bad_value(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("y\n2\n")
        with pytest.raises(ValidationError):
            load_gold_labels(p)


class TestApplyLFs:
    def test_keyword_match(self):
        specs = [LFSpec(name="buy", kind="keyword", pattern="buy", vote_on_match=1)]
        m = apply_lfs(["buy now", "hello"], specs)
        assert np.array_equal(m.values[:, 0], [1, -1])

    def test_keyword_case_insensitive(self):
        specs = [LFSpec(name="buy", kind="keyword", pattern="BUY", vote_on_match=1)]
        m = apply_lfs(["please buy this"], specs)
        assert m.values[0, 0] == 1

    def test_empty_records_rejected(self):
        specs = [LFSpec(name="x", kind="keyword", pattern="x", vote_on_match=1)]
        with pytest.raises(ValidationError):
            apply_lfs([], specs)

    def test_empty_specs_rejected(self):
        with pytest.raises(ValidationError):
            apply_lfs(["a record"], [])

    def test_per_lf_independence(self):
        specs = [
            LFSpec(name="spam", kind="keyword", pattern="spam", vote_on_match=1),
            LFSpec(name="startx", kind="regex", pattern="^x", vote_on_match=0),
        ]
        m = apply_lfs(["spam spam"], specs)
        assert np.array_equal(m.values[0], [1, -1])

    def test_regex_vote_zero(self):
        specs = [LFSpec(name="startx", kind="regex", pattern="^x", vote_on_match=0)]
        m = apply_lfs(["xylophone", "nope"], specs)
        assert np.array_equal(m.values[:, 0], [0, -1])

    def test_invalid_regex_rejected(self):
        with pytest.raises(ValidationError, match="invalid regex"):
            LFSpec(name="bad", kind="regex", pattern="([", vote_on_match=1)

    def test_output_entries_always_vote_or_abstain(self):
        rng = np.random.default_rng(7)
        words = ["alpha", "beta", "gamma", "delta"]
        records = [" ".join(rng.choice(words, size=5)) for _ in range(50)]
        specs = [
            LFSpec(name=f"kw_{w}", kind="keyword", pattern=w, vote_on_match=int(v))
            for w, v in zip(words, [1, 0, 1, 0])
        ]
        m = apply_lfs(records, specs)
        for j, spec in enumerate(specs):
            col = set(m.values[:, j].tolist())
            assert col <= {spec.vote_on_match, -1}

    def test_lf_specs_json(self, tmp_path):
        p = tmp_path / "specs.json"
        p.write_text(
            '[{"name": "buy", "kind": "keyword", "pattern": "buy", "vote_on_match": 1}]'
        )
        specs = load_lf_specs(p)
        assert len(specs) == 1 and specs[0].name == "buy"


class TestMatrixStats:
    def test_all_abstain_counting(self):
        m = LabelMatrix(values=[[-1, -1], [1, -1]], lf_names=("a", "b"))
        s = matrix_stats(m)
        assert s.n_all_abstain_rows == 1
        assert s.all_abstain_fraction == 0.5

    def test_all_zero_matrix(self):
        m = LabelMatrix(values=np.zeros((3, 2), dtype=int), lf_names=("a", "b"))
        assert matrix_stats(m).n_all_abstain_rows == 0

    def test_counts_sum_to_n(self):
        rng = np.random.default_rng(3)
        m = LabelMatrix(
            values=rng.integers(-1, 2, size=(40, 6)),
            lf_names=tuple(f"lf{i}" for i in range(6)),
        )
        s = matrix_stats(m)
        assert (s.counts.sum(axis=1) == 40).all()

    def test_spouse_shaped_fraction(self):
        # 16,520 fully-abstaining rows out of 22,254 comes to ~74%
        n, n_abs, m = 22254, 16520, 9
        values = np.zeros((n, m), dtype=int)
        values[:n_abs] = -1
        stats = matrix_stats(LabelMatrix(values=values, lf_names=tuple(f"lf{i}" for i in range(m))))
        assert stats.n_all_abstain_rows == 16520
        assert stats.all_abstain_fraction == pytest.approx(0.74, abs=0.005)


class TestCovariance:
    def test_identical_columns(self):
        m = LabelMatrix(values=[[1, 1], [0, 0], [-1, -1]], lf_names=("a", "b"))
        cov = covariance_matrix(m)
        assert cov == pytest.approx(np.ones((2, 2)))

    def test_constant_column_zero_row(self):
        m = LabelMatrix(values=[[1, 1], [0, 1], [1, 1]], lf_names=("a", "b"))
        cov = covariance_matrix(m)
        assert cov[1] == pytest.approx([0.0, 0.0])
        assert cov[:, 1] == pytest.approx([0.0, 0.0])

    def test_hand_computed_value(self):
        m = LabelMatrix(values=[[1, 0], [0, 1], [1, 0]], lf_names=("a", "b"))
        cov = covariance_matrix(m)
        assert cov[0, 1] == pytest.approx(-1.0 / 3.0)

    def test_requires_two_rows(self):
        m = LabelMatrix(values=[[1, 0]], lf_names=("a", "b"))
        with pytest.raises(ValidationError):
            covariance_matrix(m)

    def test_symmetric_and_psd(self):
        rng = np.random.default_rng(11)
        m = LabelMatrix(
            values=rng.integers(-1, 2, size=(60, 7)),
            lf_names=tuple(f"lf{i}" for i in range(7)),
        )
        cov = covariance_matrix(m)
        assert np.array_equal(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() >= -1e-10
