import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tactifab.classifier import CheckpointError, TrainConfig, init_model, predict
from tactifab.ensemble import (
    Ensemble,
    TypeStats,
    evaluate,
    inspect,
    load_ensemble,
    majority,
    report_as_dict,
    save_ensemble,
    train_ensemble,
)
from tactifab.image import save_image
from tactifab.manifest import ManifestRow
from tactifab.synthfab import WeaveParams, generate_weave

CFG = TrainConfig(epochs=1, batch_size=4, input_side=16, seed=0)


def toy_dataset():
    def grid_block(bg, line, side=16, pitch=2):
        img = np.full((side, side), bg)
        img[::pitch, :] = line
        img[:, ::pitch] = line
        return img[None]

    return [(grid_block(1.0, 0.0), 0), (grid_block(0.0, 1.0), 1)] * 4


class TestMajority:
    def test_three_two_defective(self):
        v = majority(["defective", "defective", "defective",
                      "defect_free", "defect_free"])
        assert v.decision == "defective"
        assert v.tally == (3, 2)

    def test_unanimous_defect_free(self):
        v = majority(["defect_free"] * 5)
        assert v.decision == "defect_free"
        assert v.tally == (0, 5)

    def test_two_defective_of_five(self):
        assert majority(["defective", "defective", "defect_free",
                         "defect_free", "defect_free"]).decision == "defect_free"

    @settings(max_examples=64, deadline=None)
    @given(st.lists(st.sampled_from(["defective", "defect_free"]),
                    min_size=5, max_size=5))
    def test_permutation_invariant(self, votes):
        base = majority(votes).decision
        rotated = votes[1:] + votes[:1]
        assert majority(rotated).decision == base
        assert majority(votes).decision == (
            "defective" if votes.count("defective") >= 3 else "defect_free")

    def test_single_flip_changes_only_at_boundary(self):
        for defective_count in range(6):
            votes = ["defective"] * defective_count \
                + ["defect_free"] * (5 - defective_count)
            base = majority(votes).decision
            flipped = list(votes)
            if defective_count > 0:
                flipped[votes.index("defective")] = "defect_free"
                changed = majority(flipped).decision != base
                assert changed == (defective_count == 3)


class TestTrainEnsemble:
    def test_even_k_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            train_ensemble(toy_dataset(), CFG, k=4, base_seed=0)

    def test_k1_matches_single_model(self):
        ens, _ = train_ensemble(toy_dataset(), CFG, k=1, base_seed=3)
        rng = np.random.default_rng(0)
        for _ in range(5):
            img = rng.integers(0, 256, (20, 20)).astype(np.uint8)
            verdict = inspect(ens, img, CFG, preprocess=False)
            assert verdict.decision == predict(ens.members[0], img, CFG).label

    def test_members_differ(self):
        ens, _ = train_ensemble(toy_dataset(), CFG, k=3, base_seed=10)
        for i in range(3):
            assert ens.members[i].seed == 10 + i
            for j in range(i + 1, 3):
                assert any(
                    not np.array_equal(ens.members[i].params[k],
                                       ens.members[j].params[k])
                    for k in ens.members[i].params)

    def test_reproducible(self, tmp_path):
        a, _ = train_ensemble(toy_dataset(), CFG, k=3, base_seed=5)
        b, _ = train_ensemble(toy_dataset(), CFG, k=3, base_seed=5)
        save_ensemble(a, tmp_path / "a", {})
        save_ensemble(b, tmp_path / "b", {})
        for i in range(3):
            name = f"member_{i:02d}.ckpt"
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()


class TestInspect:
    def test_identical_members_match_single(self):
        model = init_model(7)
        ens = Ensemble(members=[model, model, model], base_seed=7)
        img = generate_weave(WeaveParams(8, 7, 50, 110, 4, 0, 1), 64, 64)
        verdict = inspect(ens, img, TrainConfig(input_side=16))
        from tactifab.intensity import adjust_intensity

        single = predict(model, adjust_intensity(img), TrainConfig(input_side=16))
        assert verdict.decision == single.label
        assert verdict.votes == (single.label,) * 3

    def test_preprocess_flag_off(self):
        model = init_model(8)
        ens = Ensemble(members=[model], base_seed=8)
        img = generate_weave(WeaveParams(8, 7, 50, 110, 4, 0, 2), 64, 64)
        v_raw = inspect(ens, img, TrainConfig(input_side=16), preprocess=False)
        assert v_raw.decision == predict(model, img, TrainConfig(input_side=16)).label


def _manifest_rows(tmp_path, n_per_type=3):
    rows = []
    for fam, weave in (("fine", WeaveParams(9, 8, 55, 110, 5, 0)),
                       ("coarse", WeaveParams(3, 2, 55, 110, 5, 0))):
        for label in ("defect_free", "defective"):
            for i in range(n_per_type):
                img = generate_weave(weave, 48, 48)
                path = tmp_path / f"{fam}_{label}_{i}.pgm"
                save_image(img, path)
                rows.append(ManifestRow(str(path), fam, label))
    return rows


class TestEvaluate:
    def test_accuracy_definition(self):
        stats = TypeStats(samples=200, correct=197)
        assert stats.accuracy == 0.985

    def test_counts_and_confusion_sum(self, tmp_path):
        rows = _manifest_rows(tmp_path)
        ens = Ensemble(members=[init_model(0, )], base_seed=0)
        report = evaluate(ens, rows, TrainConfig(input_side=16), preprocess=False)
        o = report.overall
        assert o.samples == len(rows)
        assert o.tp + o.fp + o.tn + o.fn == o.samples
        assert o.correct == o.tp + o.tn
        assert 0.0 <= o.accuracy <= 1.0
        assert set(report.per_type) == {"fine", "coarse"}
        assert sum(s.samples for s in report.per_type.values()) == o.samples

    def test_unreadable_sample_excluded_and_reported(self, tmp_path):
        rows = _manifest_rows(tmp_path, n_per_type=1)
        rows.append(ManifestRow(str(tmp_path / "missing.pgm"), "fine", "defective"))
        ens = Ensemble(members=[init_model(0)], base_seed=0)
        report = evaluate(ens, rows, TrainConfig(input_side=16), preprocess=False)
        assert len(report.errors) == 1
        assert report.errors[0][0].endswith("missing.pgm")
        assert report.overall.samples == len(rows) - 1

    def test_type_with_only_errors_warned(self, tmp_path):
        rows = [ManifestRow(str(tmp_path / "gone.pgm"), "ghost", "defective")]
        ens = Ensemble(members=[init_model(0)], base_seed=0)
        report = evaluate(ens, rows, TrainConfig(input_side=16), preprocess=False)
        assert "ghost" not in report.per_type
        assert any("ghost" in w for w in report.warnings)

    def test_report_dict_shape(self, tmp_path):
        rows = _manifest_rows(tmp_path, n_per_type=1)
        ens = Ensemble(members=[init_model(0)], base_seed=0)
        payload = report_as_dict(
            evaluate(ens, rows, TrainConfig(input_side=16), preprocess=False))
        assert set(payload) == {"overall", "per_type", "errors", "warnings"}
        assert set(payload["overall"]["confusion"]) == {"tp", "fp", "tn", "fn"}


class TestEnsembleCheckpoint:
    def test_roundtrip(self, tmp_path):
        ens, _ = train_ensemble(toy_dataset(), CFG, k=3, base_seed=2)
        config = {"train": {"input_side": 16}}
        save_ensemble(ens, tmp_path / "ck", config)
        loaded, run_config = load_ensemble(tmp_path / "ck")
        assert loaded.k == 3
        assert loaded.base_seed == 2
        assert run_config == config
        for a, b in zip(ens.members, loaded.members):
            for k in a.params:
                assert np.array_equal(a.params[k], b.params[k])

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(CheckpointError, match="ensemble.json"):
            load_ensemble(tmp_path)

    def test_corrupt_manifest(self, tmp_path):
        (tmp_path / "ensemble.json").write_text("{not json")
        with pytest.raises(CheckpointError, match="corrupt"):
            load_ensemble(tmp_path)

    def test_inconsistent_member_list(self, tmp_path):
        (tmp_path / "ensemble.json").write_text(
            json.dumps({"k": 3, "base_seed": 0, "members": ["a.ckpt"]}))
        with pytest.raises(CheckpointError, match="inconsistent"):
            load_ensemble(tmp_path)
