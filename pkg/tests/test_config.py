import pytest
from hypothesis import given, strategies as st

from memlif.chip import BiasConfig, NeuronParams, default_bias
from memlif.config import (ConfigError, RunConfig, load_config, load_params, parse_config,
                           save_params, serialize)


def test_empty_config_is_all_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.build_experiment().neurons["n0"].bias == default_bias()


def test_invariant_error_names_both_fields():
    with pytest.raises(ConfigError) as exc:
        parse_config("[bias]\nvrest = 1.5\n", source="x.ini")
    msg = str(exc.value)
    assert "vrest" in msg and "vthr" in msg and "x.ini:1" in msg


@pytest.mark.parametrize("text, fragment", [
    ("[bias]\nvfoo = 1\n", "unknown key 'vfoo'"),
    ("[nonsense]\n", "unknown section"),
    ("[experiment]\ndt = fast\n", "expected a number"),
    ("[stimulus]\nkind = square\n", "kind must be one of"),
    ("[params]\nc1 = -1\n", "c1"),
    ("[experiment]\nduration = 0\n", "duration must be > 0"),
    ("no section\n", "header"),
])
def test_bad_configs(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_error_reports_line_number():
    text = "[bias]\nvdd = 3.3\n\n[experiment]\ndt = oops\n"
    with pytest.raises(ConfigError, match=r"<config>:5"):
        parse_config(text)


FULL = """
[bias]
vthr = 1.5  # comment
vpw = 0.9
[params]
comparator_mode = low_power
[experiment]
duration = 0.02
record = v_mem:n0, out:n0
[stimulus]
kind = pulse_train
amplitude = 0.4
width = 1e-5
baseline = vref
[crossbar]
rows = 2
cols = 3
[context.leak]
vtaun = 1.3
"""


def test_serialize_round_trip():
    cfg = parse_config(FULL)
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)


@given(st.floats(0.05, 1.0), st.floats(0.3, 3.2), st.floats(1e-7, 1e-5))
def test_serialize_round_trip_property(vrest, vpw, dt):
    cfg = parse_config(f"[bias]\nvrest = {vrest!r}\nvpw = {vpw!r}\n[experiment]\ndt = {dt!r}\n")
    assert parse_config(serialize(cfg)) == cfg


def test_crossbar_experiment_wiring(tmp_path):
    (tmp_path / "g.csv").write_text("1e-5,2e-5\n3e-5,4e-5\n")
    (tmp_path / "run.ini").write_text("[crossbar]\nrows = 2\ncols = 2\nconductance_file = g.csv\n")
    exp = load_config(tmp_path / "run.ini").build_experiment()
    assert set(exp.neurons) == {"in0", "in1", "out0", "out1"}
    assert exp.crossbars[0].crossbar.conductance[1, 0] == 3e-5


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_params_file_round_trip(tmp_path, cal):
    save_params(tmp_path / "p.params", cal.params, cal.contexts)
    params, contexts = load_params(tmp_path / "p.params")
    assert params == cal.params
    assert contexts == cal.contexts


def test_bundled_params_match_model_defaults(cal):
    assert cal.params == NeuronParams()
