import pytest

from censornet.censoring import Flexible, Fractional, Hard, NamingPreference, NoCensoring
from censornet.config import (
    ExperimentConfig,
    ParameterRange,
    StrataConfig,
    parse_config,
)
from censornet.errors import ConfigSyntaxError, InvalidConfigError
from censornet.trait_process import CenteredGeneral, PivotContagion

FULL_CONFIG = """
replications = 50
master_seed = 7
node_counts = [200, 100, 100]
target_mean_outdegree = 8
sigma_eps = 0.5
zero_probability = 0.25

[model]
form = "pivot"
d = 1.5

[parameters]
gamma = {low = -0.1, high = 0.1}
delta = 0.2
sigma_h = {low = 1.0, high = 2.0, zero_probability = 0.0}

[[schemes]]
kind = "hard"
k = 2
naming = {lambda_attr = 0.5}

[[schemes]]
kind = "flexible"
k = 1
dist = "binomial"

[strata]
het_high = 1.5

[output]
records = "out/records.csv"
"""


def write(tmp_path, text: str):
    path = tmp_path / "experiment.toml"
    path.write_text(text)
    return path


def test_parse_config_defaults(tmp_path):
    config = parse_config(write(tmp_path, ""))
    assert config.replications == 2000
    assert config.target_mean_outdegree == 10
    assert config.node_counts == [100, 200]
    assert config.master_seed == 20100101
    assert config.model == CenteredGeneral()
    assert config.schemes == [NoCensoring(), Hard(k=1), Flexible(k=1), Fractional(f=0.1)]
    assert config.parameters.gamma == ParameterRange(low=-0.3, high=0.3)
    assert config.output.records == "records.csv"


def test_parse_config_full(tmp_path):
    config = parse_config(write(tmp_path, FULL_CONFIG))
    assert config.replications == 50
    assert config.node_counts == [100, 200]
    assert config.model == PivotContagion(d=1.5)
    assert config.parameters.gamma == ParameterRange(low=-0.1, high=0.1)
    assert config.parameters.delta == ParameterRange(
        low=0.2, high=0.2, zero_probability=0.0
    )
    assert config.schemes == [
        Hard(k=2, naming=NamingPreference(lambda_attr=0.5)),
        Flexible(k=1, dist="binomial", m=2, p=0.5),
    ]
    assert config.strata == StrataConfig(het_high=1.5)
    assert config.output.records == "out/records.csv"
    assert config.output.summary == "summary.json"


def test_zero_chance(tmp_path):
    config = parse_config(write(tmp_path, FULL_CONFIG))
    assert config.zero_chance("gamma") == 0.25
    assert config.zero_chance("delta") == 0.0
    assert config.zero_chance("sigma_h") == 0.0
    assert ExperimentConfig().zero_chance("beta") == 0.5


@pytest.mark.parametrize(
    "text, match",
    [
        ('[[schemes]]\nkind = "fractional"\nf = 1.2\n', "schemes.0.fractional.f"),
        ("[parameters]\nr_in = 0.9\nr_out = 0.9\n", "r_in\\*\\*2 \\+ r_out\\*\\*2"),
        ("[parameters]\nr_in = {low = 0.2, high = 1.0}\n", "strictly between"),
        ("[parameters]\ngamma = {low = 0.5, high = 0.1}\n", "empty range"),
        ("[parameters]\nsigma_h = {low = -1.0, high = 1.0}\n", "sigma_h"),
        ("replications = 0\n", "replications"),
        ("node_counts = [5, 100]\n", "at least 6 nodes"),
        ("node_counts = [8]\n", "exceeds n - 1"),
        ("replicates = 10\n", "replicates"),
        ('[model]\nform = "sar"\n', "model"),
        ('[[schemes]]\nkind = "hard"\nk = 1\nlimit = 2\n', "limit"),
        ("master_seed = -1\n", "master_seed"),
    ],
)
def test_parse_config_invalid(tmp_path, text, match):
    with pytest.raises(InvalidConfigError, match=match) as e:
        parse_config(write(tmp_path, text))
    assert not isinstance(e.value, ConfigSyntaxError)


def test_parse_config_syntax_error(tmp_path):
    with pytest.raises(ConfigSyntaxError, match="line 2"):
        parse_config(write(tmp_path, "replications = 10\nnode_counts = = [100]\n"))


def test_parse_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_config(tmp_path / "missing.toml")


def test_fixed_parameter_never_zeroed():
    r = ParameterRange.model_validate(0.3)
    assert r == ParameterRange(low=0.3, high=0.3, zero_probability=0.0)


@pytest.mark.parametrize(
    "value_range, zero_probability, expected",
    [
        (ParameterRange(low=-0.5, high=0.5), 0.0, 0.0),
        (ParameterRange(low=0.6, high=0.8), 0.0, 0.36),
        (ParameterRange(low=-0.8, high=-0.6), 0.0, 0.36),
        (ParameterRange(low=0.6, high=0.8), 0.5, 0.0),
    ],
)
def test_smallest_square(value_range, zero_probability, expected):
    assert value_range.smallest_square(zero_probability) == pytest.approx(expected)


def test_correlation_floor_with_zeroing():
    # zeroing keeps r_in**2 + r_out**2 < 1 reachable
    ExperimentConfig(
        parameters={
            "r_in": {"low": 0.8, "high": 0.9, "zero_probability": 0.5},
            "r_out": {"low": 0.8, "high": 0.9},
        }
    )
