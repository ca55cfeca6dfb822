import numpy as np
import pytest

from tactifab.image import load_image
from tactifab.intensity import adjust_intensity
from tactifab.manifest import read_manifest
from tactifab.synthfab import (
    CorpusSpec,
    DefectSpec,
    FamilySpec,
    WeaveParams,
    apply_pressing_gradient,
    generate_corpus,
    generate_weave,
    inject_defect,
)
from tactifab.uniformity import UniformityConfig, block_texture_frequency, measure_uniformity


class TestGenerateWeave:
    def test_deterministic(self):
        p = WeaveParams(8, 6, 50, 120, 7, 3, seed=42)
        assert np.array_equal(generate_weave(p, 64, 80), generate_weave(p, 64, 80))

    def test_zero_amplitude_zero_noise_constant(self):
        p = WeaveParams(8, 6, 0, 133, 0, 0)
        assert (generate_weave(p, 32, 32) == 133).all()

    def test_block_frequency_recovers_generator(self):
        # product of sines at (6, 8) cycles on a square canvas: four peaks,
        # all at distance hypot(6, 8) = 10 from the center
        p = WeaveParams(6, 8, 60, 120, 0, 0)
        img = generate_weave(p, 240, 240)
        cfg = UniformityConfig(window=240, stride=240)
        result = block_texture_frequency(img.astype(np.float64), cfg)
        assert result.value == pytest.approx(10.0, abs=1.0)

    def test_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            generate_weave(WeaveParams(16, 4, 40, 120), 32, 64)

    def test_swap_axes_quarter_turn(self):
        p = WeaveParams(5, 9, 60, 120, 0, 0)
        straight = generate_weave(p, 60, 60)
        turned = generate_weave(p, 60, 60, swap_axes=True)
        assert np.array_equal(turned, straight.T)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            WeaveParams(0, 5, 40, 120)
        with pytest.raises(ValueError):
            WeaveParams(4, 5, 140, 120)  # base - amplitude < 0


class TestPressingGradient:
    def test_strength_zero_identity(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (30, 40)).astype(np.uint8)
        assert np.array_equal(apply_pressing_gradient(img, 0.0), img)

    def test_corner_scaled_exactly(self):
        img = np.full((21, 31), 100, dtype=np.uint8)
        out = apply_pressing_gradient(img, 0.5)
        for corner in ((0, 0), (0, -1), (-1, 0), (-1, -1)):
            assert out[corner] == 50
        cy, cx = 10, 15
        assert out[cy, cx] == 100  # center untouched

    def test_invalid_strength(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(ValueError, match="strength"):
            apply_pressing_gradient(img, 1.5)

    def test_adjustment_suppresses_mild_pressing(self):
        # Mild pressing on a noise-bearing weave: the adjusted outputs with
        # and without the dome stay close. (Strong domes modulate the weave
        # carrier into sidebands the peak removal cannot reach, so the
        # comparison is only meaningful for moderate strengths.)
        mads = []
        for seed in range(10):
            p = WeaveParams(18 + seed, 14 + seed, 40, 110, 12, 2, seed)
            img = generate_weave(p, 240, 300)
            dome = apply_pressing_gradient(img, 0.15)
            mads.append(np.abs(adjust_intensity(img).astype(int)
                               - adjust_intensity(dome).astype(int)).mean())
        assert max(mads) < 8.0


class TestInjectDefect:
    def base_image(self, seed=0):
        return generate_weave(WeaveParams(10, 8, 50, 120, 5, 0, seed), 96, 96)

    def test_minimal_extent_changes_pixels(self):
        img = self.base_image()
        out = inject_defect(img, DefectSpec("hole", (48, 48), 3, 20.0), seed=1)
        assert (out != img).sum() >= 1

    def test_hole_locality(self):
        img = self.base_image()
        spec = DefectSpec("hole", (48, 48), 12, 220.0)
        out = inject_defect(img, spec, seed=2)
        rows = np.arange(96)[:, None] - 48
        cols = np.arange(96)[None, :] - 48
        outside = np.hypot(rows, cols) > spec.extent
        assert np.array_equal(out[outside], img[outside])

    def test_missing_yarn_locality(self):
        img = self.base_image(1)
        spec = DefectSpec("missing_yarn", (40, 50), 10, -30.0)
        out = inject_defect(img, spec, seed=3)
        changed = np.argwhere(out.astype(int) != img.astype(int))
        # the band is axis-aligned through the location; every change lies
        # within extent of one of the two candidate lines
        if changed.size:
            dist_row = np.abs(changed[:, 0] - 40)
            dist_col = np.abs(changed[:, 1] - 50)
            assert (np.minimum(dist_row, dist_col) <= spec.extent).all()

    def test_wrinkle_locality(self):
        img = self.base_image(2)
        spec = DefectSpec("wrinkle", (48, 48), 10, 40.0)
        out = inject_defect(img, spec, seed=4)
        changed = np.argwhere(out.astype(int) != img.astype(int))
        rng = np.random.Generator(np.random.PCG64(4))
        angle = rng.uniform(0.0, np.pi)
        rows = changed[:, 0] - 48.0
        cols = changed[:, 1] - 48.0
        perp = np.abs(-np.sin(angle) * rows + np.cos(angle) * cols)
        assert (perp <= spec.extent).all()

    def test_hole_lowers_block_frequency(self):
        # A large bright hole concentrates energy near the spectrum center;
        # once it rivals the weave carrier the measured frequency collapses.
        cfg = UniformityConfig(window=120, stride=120)
        for seed in range(4):
            clean = generate_weave(WeaveParams(12, 12, 28, 120, 6, 0, seed), 120, 120)
            holed = inject_defect(
                clean, DefectSpec("hole", (60, 60), 50, 245.0), seed=seed + 50)
            f_clean = block_texture_frequency(clean.astype(float), cfg).value
            f_holed = block_texture_frequency(holed.astype(float), cfg).value
            assert f_holed < f_clean

    def test_out_of_bounds_hole(self):
        img = self.base_image()
        with pytest.raises(ValueError, match="outside"):
            inject_defect(img, DefectSpec("hole", (2, 48), 12, 50.0), seed=0)

    def test_validation(self):
        with pytest.raises(ValueError, match="kind"):
            DefectSpec("scratch", (5, 5), 8, 10.0)
        with pytest.raises(ValueError, match="extent"):
            DefectSpec("hole", (5, 5), 2, 10.0)


FINE = WeaveParams(18, 15, 60, 115, 6, 0)
BLOB = WeaveParams(3, 2, 45, 115, 16, 9)


class TestGenerateCorpus:
    def spec(self, seed=0):
        return CorpusSpec(
            families=(FamilySpec("fine", FINE, 10, 10),
                      FamilySpec("blob", BLOB, 10, 10)),
            height=120, width=150, seed=seed,
        )

    def test_counts_and_manifest(self, tmp_path):
        manifest = generate_corpus(self.spec(), tmp_path / "c")
        rows = read_manifest(manifest)
        assert len(rows) == 40
        assert len(list((tmp_path / "c").glob("*.pgm"))) == 40
        for fam in ("fine", "blob"):
            fam_rows = [r for r in rows if r.fabric_type == fam]
            assert sum(r.label == "defect_free" for r in fam_rows) == 10
            assert sum(r.label == "defective" for r in fam_rows) == 10

    def test_regenerate_byte_identical(self, tmp_path):
        m1 = generate_corpus(self.spec(), tmp_path / "a")
        m2 = generate_corpus(self.spec(), tmp_path / "b")
        assert m1.read_bytes() == m2.read_bytes()
        for f1 in sorted((tmp_path / "a").glob("*.pgm")):
            f2 = tmp_path / "b" / f1.name
            assert f1.read_bytes() == f2.read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        generate_corpus(self.spec(seed=0), tmp_path / "a")
        generate_corpus(self.spec(seed=1), tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").glob("*.pgm"))
        assert any((tmp_path / "a" / n).read_bytes()
                   != (tmp_path / "b" / n).read_bytes() for n in names)

    def test_fine_ranks_above_blob(self, tmp_path):
        # Paired draws of the ranking property at a geometry with six
        # 180-px blocks; smaller windows wash the measurement out.
        cfg = UniformityConfig(window=180, stride=60, trim_q=2)
        for seed in range(2):
            spec = CorpusSpec(
                families=(FamilySpec("fine", FINE, 2, 1),
                          FamilySpec("blob", BLOB, 2, 1)),
                height=240, width=300, seed=seed,
            )
            out = tmp_path / f"d{seed}"
            rows = read_manifest(generate_corpus(spec, out))
            scores = {}
            for fam in ("fine", "blob"):
                clean = [r for r in rows
                         if r.fabric_type == fam and r.label == "defect_free"]
                vals = [measure_uniformity(
                    adjust_intensity(load_image(r.path)), cfg).score
                    for r in clean]
                scores[fam] = sum(vals) / len(vals)
            assert scores["fine"] > scores["blob"]
