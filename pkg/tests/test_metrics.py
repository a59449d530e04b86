"""Confusion matrix, metric arithmetic, and directory evaluation."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from firelite.errors import DatasetLayoutError, DomainError
from firelite.metrics import (
    ConfusionMatrix,
    compute_metrics,
    evaluate_directory,
)
from firelite.tensor import Tensor
from firelite.weights import WeightStore

# The published evaluation of this model: 243 test images, 118 fire and 125
# nonfire, with 2 nonfire images misclassified as fire and nothing else wrong.
GOLDEN = dict(tp=118, fn=0, fp=2, tn=123)


def golden_matrix() -> ConfusionMatrix:
    return ConfusionMatrix.from_counts(**GOLDEN)


class TestConfusionMatrix:
    def test_starts_empty(self):
        cm = ConfusionMatrix()
        assert cm.total == 0
        assert cm.counts == ((0, 0), (0, 0))

    def test_record_tp(self):
        assert ConfusionMatrix().record(0, 0).tp == 1

    def test_record_fp(self):
        cm = ConfusionMatrix().record(1, 0)
        assert cm.fp == 1
        assert cm.tp == cm.fn == cm.tn == 0

    def test_record_fn_and_tn(self):
        cm = ConfusionMatrix().record(0, 1).record(1, 1)
        assert (cm.fn, cm.tn) == (1, 1)

    def test_bad_index_rejected(self):
        with pytest.raises(DomainError):
            ConfusionMatrix().record(2, 0)
        with pytest.raises(DomainError):
            ConfusionMatrix().record(0, -1)

    def test_golden_replay(self):
        # Replay all 243 outcomes one record at a time.
        cm = ConfusionMatrix()
        for _ in range(118):
            cm.record(0, 0)
        for _ in range(2):
            cm.record(1, 0)
        for _ in range(123):
            cm.record(1, 1)
        assert cm == golden_matrix()
        assert cm.total == 243
        assert cm.support(0) == 118 and cm.support(1) == 125

    def test_merge(self):
        a = ConfusionMatrix().record(0, 0)
        b = ConfusionMatrix().record(1, 1).record(1, 0)
        a.merge(b)
        assert (a.tp, a.fp, a.tn) == (1, 1, 1)

    def test_negative_counts_rejected(self):
        with pytest.raises(DomainError):
            ConfusionMatrix.from_counts(1, -1, 0, 0)

    def test_normalized_rows(self):
        cm = ConfusionMatrix.from_counts(tp=3, fn=1, fp=0, tn=0)
        assert cm.normalized() == ((0.75, 0.25), (0.0, 0.0))


class TestComputeMetrics:
    def test_empty_matrix_rejected(self):
        with pytest.raises(DomainError):
            compute_metrics(ConfusionMatrix())

    def test_golden_accuracy(self):
        report = compute_metrics(golden_matrix())
        assert report.accuracy == pytest.approx(241 / 243)
        assert round(report.accuracy, 4) == 0.9918

    def test_golden_weighted_precision(self):
        report = compute_metrics(golden_matrix())
        expected = (118 * (118 / 120) + 125 * 1.0) / 243
        assert report.weighted_precision == pytest.approx(expected, abs=1e-12)
        assert round(report.weighted_precision, 4) == 0.9919

    def test_golden_weighted_recall_and_f1(self):
        report = compute_metrics(golden_matrix())
        assert report.weighted_recall == pytest.approx(241 / 243, abs=1e-12)
        expected_f1 = (118 * (118 / 119) + 125 * (123 / 124)) / 243
        assert report.weighted_f1 == pytest.approx(expected_f1, abs=1e-12)
        assert round(report.weighted_recall, 4) == 0.9918
        assert round(report.weighted_f1, 4) == 0.9918

    def test_golden_per_class(self):
        report = compute_metrics(golden_matrix())
        fire, nonfire = report.per_class
        assert fire.precision == pytest.approx(118 / 120)
        assert fire.recall == 1.0
        assert nonfire.precision == 1.0
        assert nonfire.recall == pytest.approx(123 / 125)
        assert (fire.support, nonfire.support) == (118, 125)

    def test_perfect_matrix_gives_all_ones(self):
        report = compute_metrics(ConfusionMatrix.from_counts(tp=10, fn=0, fp=0, tn=20))
        assert report.accuracy == 1.0
        assert report.weighted_precision == report.weighted_recall == report.weighted_f1 == 1.0
        assert report.macro_f1 == 1.0

    def test_zero_over_zero_defined_as_zero(self):
        # Nothing ever predicted fire: fire precision is 0/0.
        report = compute_metrics(ConfusionMatrix.from_counts(tp=0, fn=5, fp=0, tn=5))
        assert report.per_class[0].precision == 0.0
        assert report.per_class[0].f1 == 0.0

    def test_to_dict_shape(self):
        d = compute_metrics(golden_matrix()).to_dict()
        assert set(d) == {"accuracy", "per_class", "macro", "weighted"}
        assert set(d["per_class"]) == {"fire", "nonfire"}
        assert d["per_class"]["fire"]["support"] == 118

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_properties_hold_for_random_matrices(self, tp, fn, fp, tn):
        if tp + fn + fp + tn == 0:
            return
        cm = ConfusionMatrix.from_counts(tp, fn, fp, tn)
        report = compute_metrics(cm)
        values = [report.accuracy, report.macro_precision, report.macro_recall,
                  report.macro_f1, report.weighted_precision, report.weighted_recall,
                  report.weighted_f1]
        values += [v for m in report.per_class for v in (m.precision, m.recall, m.f1)]
        assert all(0.0 <= v <= 1.0 for v in values)
        # Swapping class roles symmetrically leaves accuracy unchanged.
        swapped = compute_metrics(ConfusionMatrix.from_counts(tn, fp, fn, tp))
        assert swapped.accuracy == pytest.approx(report.accuracy)
        # Weighted aggregates are support-weighted means, checked by scalar math.
        supports = [cm.support(0), cm.support(1)]
        direct = sum(s * m.recall for s, m in zip(supports, report.per_class)) / cm.total
        assert report.weighted_recall == pytest.approx(direct)


def write_png(path, color, size=(16, 16)):
    array = np.full((size[1], size[0], 3), color, dtype=np.uint8)
    Image.fromarray(array).save(path, format="PNG")


@pytest.fixture()
def always_fire_store(canonical_store):
    """Weights whose head always produces a fire verdict."""
    tensors = canonical_store.tensors
    tensors["head.dense2.kernel"] = Tensor.filled((32, 2), 0.0)
    tensors["head.dense2.bias"] = Tensor.from_values((2,), [4.0, 0.0])
    return WeightStore(tensors, metadata=canonical_store.metadata)


class TestEvaluateDirectory:
    def test_single_fire_image_scores_one(self, tmp_path, canonical_graph, always_fire_store):
        (tmp_path / "fire").mkdir()
        (tmp_path / "nonfire").mkdir()
        write_png(tmp_path / "fire" / "a.png", (250, 80, 10))
        write_png(tmp_path / "nonfire" / "b.png", (10, 80, 250))
        result = evaluate_directory(canonical_graph, always_fire_store, tmp_path)
        assert result.matrix.tp == 1 and result.matrix.fp == 1
        assert result.report.per_class[0].recall == 1.0
        assert len(result.files) == 2 and not result.warnings

    def test_per_file_log_is_sorted_and_complete(self, tmp_path, canonical_graph, always_fire_store):
        (tmp_path / "fire").mkdir()
        (tmp_path / "nonfire").mkdir()
        for name in ("c.png", "a.png", "b.png"):
            write_png(tmp_path / "fire" / name, (200, 50, 20))
        write_png(tmp_path / "nonfire" / "z.png", (20, 50, 200))
        result = evaluate_directory(canonical_graph, always_fire_store, tmp_path)
        paths = [f.path for f in result.files]
        assert paths == sorted(paths)
        assert all(f.predicted == "fire" for f in result.files)
        assert all(0.0 <= f.fire_probability <= 1.0 for f in result.files)
        truths = [f.truth for f in result.files]
        assert truths.count("fire") == 3 and truths.count("nonfire") == 1

    def test_missing_subdirectory_is_layout_error(self, tmp_path, canonical_graph, always_fire_store):
        (tmp_path / "fire").mkdir()
        with pytest.raises(DatasetLayoutError, match="nonfire"):
            evaluate_directory(canonical_graph, always_fire_store, tmp_path)

    def test_missing_root_is_layout_error(self, tmp_path, canonical_graph, always_fire_store):
        with pytest.raises(DatasetLayoutError):
            evaluate_directory(canonical_graph, always_fire_store, tmp_path / "nope")

    def test_empty_directories_are_domain_error(self, tmp_path, canonical_graph, always_fire_store):
        (tmp_path / "fire").mkdir()
        (tmp_path / "nonfire").mkdir()
        with pytest.raises(DomainError, match="no decodable images"):
            evaluate_directory(canonical_graph, always_fire_store, tmp_path)

    def test_undecodable_file_is_warning_not_fatal(self, tmp_path, canonical_graph, always_fire_store):
        (tmp_path / "fire").mkdir()
        (tmp_path / "nonfire").mkdir()
        write_png(tmp_path / "fire" / "ok.png", (220, 40, 30))
        (tmp_path / "fire" / "broken.jpg").write_bytes(b"\xff\xd8\xffnot really")
        (tmp_path / "nonfire" / "note.txt").write_text("ignored entirely")
        write_png(tmp_path / "nonfire" / "ok.png", (30, 40, 220))
        result = evaluate_directory(canonical_graph, always_fire_store, tmp_path)
        assert len(result.warnings) == 1
        assert "broken.jpg" in result.warnings[0]
        assert result.matrix.total == 2  # only decodable images counted

    def test_thread_count_does_not_change_result(self, tmp_path, canonical_graph, always_fire_store):
        (tmp_path / "fire").mkdir()
        (tmp_path / "nonfire").mkdir()
        rng = np.random.default_rng(9)
        for i in range(3):
            write_png(tmp_path / "fire" / f"f{i}.png", tuple(rng.integers(0, 256, 3)))
            write_png(tmp_path / "nonfire" / f"n{i}.png", tuple(rng.integers(0, 256, 3)))
        single = evaluate_directory(canonical_graph, always_fire_store, tmp_path, threads=1)
        multi = evaluate_directory(canonical_graph, always_fire_store, tmp_path, threads=4)
        assert single.matrix == multi.matrix
        assert [f.path for f in single.files] == [f.path for f in multi.files]
        assert single.report == multi.report
