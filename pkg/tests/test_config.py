import pytest

from tactifab.config import ConfigError, parse_config

FULL = """
# full pipeline configuration
[intensity]
peaks_to_remove = 7
target_mean = 100
mirror_peaks = off

[uniformity]
window = 90
stride = 30
threshold_divisor = 20
trim_q = 1

[train]
epochs = 2
batch_size = 8
lr0 = 0.01
lr_decay = 0.95
input_side = 32
seed = 9

[ensemble]
members = 3
base_seed = 4
preprocess = false

[corpus]
height = 120
width = 150
seed = 5
press_strength = 0.2
defect_kinds = hole,wrinkle
families = fine

[family:fine]
freq_x = 18
freq_y = 15
amplitude = 60
base = 115
noise_sigma = 6
blob_scale = 0
defect_free = 3
defective = 3
"""


class TestParse:
    def test_defaults_from_empty(self):
        cfg = parse_config("")
        assert cfg.intensity.peaks_to_remove == 5
        assert cfg.intensity.target_mean == 90.0
        assert cfg.intensity.mirror_peaks is True
        assert cfg.uniformity.window == 360
        assert cfg.uniformity.stride == 120
        assert cfg.uniformity.threshold_divisor == 40.0
        assert cfg.uniformity.trim_q == 2
        assert cfg.train.epochs == 20
        assert cfg.train.batch_size == 4
        assert cfg.train.lr0 == 0.02
        assert cfg.train.lr_decay == 0.9
        assert cfg.train.input_side == 96
        assert cfg.ensemble_size == 5
        assert cfg.preprocess is True
        assert cfg.corpus is None

    def test_full_parse(self):
        cfg = parse_config(FULL)
        assert cfg.intensity.peaks_to_remove == 7
        assert cfg.intensity.mirror_peaks is False
        assert cfg.uniformity.stride == 30
        assert cfg.train.batch_size == 8
        assert cfg.ensemble_size == 3
        assert cfg.preprocess is False
        assert cfg.corpus is not None
        assert cfg.corpus.height == 120
        assert cfg.corpus.defect_kinds == ("hole", "wrinkle")
        assert len(cfg.corpus.families) == 1
        fam = cfg.corpus.families[0]
        assert fam.name == "fine"
        assert fam.weave.freq_x == 18.0
        assert fam.defect_free == 3

    def test_unknown_key_names_line(self):
        text = "[train]\nepochs = 2\nwarp_speed = 9\n"
        with pytest.raises(ConfigError, match="line 3"):
            parse_config(text)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[rocket]\nfuel = 3\n")

    def test_malformed_line_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("[train]\nepochs\n")

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("epochs = 2\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("[train]\nepochs = 2\nepochs = 3\n")

    def test_bad_value_type(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("[train]\nepochs = soon\n")

    def test_bad_bool(self):
        with pytest.raises(ConfigError, match="boolean"):
            parse_config("[intensity]\nmirror_peaks = maybe\n")

    def test_invalid_domain_value(self):
        with pytest.raises(ConfigError):
            parse_config("[train]\nlr0 = -1\n")

    def test_family_without_corpus(self):
        with pytest.raises(ConfigError, match="without a \\[corpus\\]"):
            parse_config("[family:x]\nfreq_x = 2\n")

    def test_corpus_missing_family_section(self):
        with pytest.raises(ConfigError, match="missing"):
            parse_config("[corpus]\nfamilies = ghost\n")

    def test_unlisted_family_section(self):
        text = FULL + "\n[family:extra]\nfreq_x = 2\nfreq_y = 2\namplitude = 10\nbase = 100\n"
        with pytest.raises(ConfigError, match="not listed"):
            parse_config(text)

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("; leading comment\n\n[train]\nepochs = 3  # trailing\n")
        assert cfg.train.epochs == 3

    def test_as_dict_roundtrips_defaults(self):
        d = parse_config("").as_dict()
        assert d["train"]["epochs"] == 20
        assert d["ensemble"]["members"] == 5
