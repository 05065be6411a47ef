import pytest

from adversarial_au.config import (BASELINE_LABEL, ExperimentConfig, experiment_from_mapping,
                                   load_config, parse_key_values, prepare_splits)
from adversarial_au.errors import ConfigError, ParseError


def test_parse_key_values_comments_and_lines():
    kv = parse_key_values("# header\nseed = 4\n\ntrain.K=10  # inline\n")
    assert kv == {"seed": ("4", 2), "train.K": ("10", 4)}


@pytest.mark.parametrize("text,line", [("seed = 1\nnot a pair\n", 2), ("a=1\na=2\n", 2), ("= 3\n", 1)])
def test_parse_key_values_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_key_values(text)
    assert info.value.line == line


def test_mapping_sets_nested_fields():
    exp = experiment_from_mapping({
        "seed": "7", "train.K": "5", "train.alpha": "0", "train.hidden_dims": "8, 4",
        "adam_D.lr": "0.005", "data.n": "300", "data.missing_rate": "0.3",
        "label.unary": "0.1,0.2,0.3", "label.pairs": "0:2:1.5", "output.dir": "x",
    })
    assert exp.seed == 7 and exp.train.seed == 7
    assert exp.train.K == 5 and exp.train.hidden_dims == (8, 4)
    assert exp.train.adam_D.lr == 0.005 and exp.train.adam_R.lr == 1e-3
    assert exp.n == 300 and exp.missing_rate == 0.3 and exp.out_dir == "x"
    assert exp.label_spec.n_labels == 3 and exp.label_spec.pair_potentials == ((0, 2, 1.5),)
    assert exp.variant == BASELINE_LABEL


@pytest.mark.parametrize("key,value", [
    ("train.bogus", "1"), ("train.K", "abc"), ("train.K", "0"), ("train.alpha", "2"),
    ("adam_R.beta1", "1.5"), ("data.missing_rate", "1.0"), ("data.eval_fraction", "0"),
    ("data.path", "/no/such/file.csv"), ("label.pairs", "0:1"), ("label.unary", "x"),
    ("nosection", "1"),
])
def test_invalid_entries_name_the_key(key, value):
    with pytest.raises(ConfigError) as info:
        experiment_from_mapping({key: value})
    assert info.value.key == key
    assert key in str(info.value)


def test_load_config_with_overrides(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("seed = 1\ntrain.K = 3\n")
    exp = load_config(path, {"seed": "9"})
    assert exp.seed == 9 and exp.train.K == 3
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_splits_shared_across_alpha():
    base = experiment_from_mapping({"data.n": "120", "seed": "5"})
    other = experiment_from_mapping({"data.n": "120", "seed": "5", "train.alpha": "0"})
    (a_train, a_held), (b_train, b_held) = prepare_splits(base), prepare_splits(other)
    assert a_train.equals(b_train) and a_held.equals(b_held)
    assert a_train.n_labeled == a_train.n - int(0.5 * a_train.n)


def test_defaults():
    exp = ExperimentConfig()
    assert (exp.n, exp.d, exp.label_spec.n_labels) == (2000, 16, 8)
    assert exp.missing_rate == 0.5 and exp.train.alpha == 0.01
