import pytest

from gpc.config import RunConfig, default_k_init, dump_config, load_config, parse_config_text
from gpc.errors import ConfigError


def test_defaults():
    cfg = RunConfig()
    assert (cfg.epochs, cfg.warmup, cfg.pca_dim, cfg.lr) == (200, 20, 128, 0.1)
    assert cfg.batch_labelled + cfg.batch_unlabelled == 128
    assert cfg.gamma_convention == "factorial" and cfg.covariance_mode == "full"


def test_parse_and_round_trip(tmp_path):
    text = "# run\nk_init = auto\ntau = 0.2  # temperature\nreplearn = false\nprior-nu = 7\n"
    values = parse_config_text(text)
    assert values == {"k_init": None, "tau": 0.2, "replearn": False, "prior_nu": 7.0}
    cfg = RunConfig().replace(**values)
    path = tmp_path / "run.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_overrides_win(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epochs = 5\nseed = 3\n")
    cfg = load_config(path, {"epochs": 9})
    assert (cfg.epochs, cfg.seed) == (9, 3)


@pytest.mark.parametrize("text", ["bogus = 1", "tau", "tau = fast", "covariance_mode = spherical", "tau = 0"])
def test_rejects_bad_config(text):
    with pytest.raises(ConfigError):
        RunConfig().replace(**parse_config_text(text))


@pytest.mark.parametrize("kl,expected", [(0, 0), (1, 2), (5, 8), (6, 9), (100, 150)])
def test_default_k_init(kl, expected):
    assert default_k_init(kl) == expected
