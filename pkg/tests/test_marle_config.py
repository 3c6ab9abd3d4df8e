import math

import pytest

from marle_config import (OutputConfig, RunConfig, ScenarioConfig, load_config, parse_config,
                          render_config)
from marle_utils import ConfigValidationError, InvalidConstants, InvalidGridConfig, ParseError

EXAMPLE = """
# two-temperature relaxation
[constants]
tau = 2.0
sigma = 0.5

[grid]
n_p = 24
p_max = auto      # cutoff rule
n_i = 16

[scenario]
preset = mixture
integrator = rk4
refreeze = yes
nsteps = 10
"""


class TestParse:

    def test_empty_gives_defaults(self):
        assert parse_config("") == RunConfig()

    def test_example(self):
        cfg = parse_config(EXAMPLE)
        assert cfg.constants.tau == 2.0
        assert cfg.constants.sigma == 0.5
        assert cfg.grid.n_p == 24
        assert cfg.grid.p_max is None
        assert cfg.scenario.preset == 'mixture'
        assert cfg.scenario.refreeze is True
        assert cfg.scenario.nsteps == 10
        assert isinstance(cfg.scenario.nsteps, int)

    def test_infinite_tau(self):
        assert parse_config("[constants]\ntau = inf\n").constants.tau == math.inf

    def test_duplicate_key_reports_line(self):
        with pytest.raises(ParseError, match="line 3: duplicate key 'tau'") as info:
            parse_config("[constants]\ntau = 1\ntau = 2\n")
        assert info.value.line_number == 3

    @pytest.mark.parametrize("text, line", [
        ("[constants]\nspeed = 1\n", 2),
        ("[physics]\n", 1),
        ("tau = 1\n", 1),
        ("[grid]\nn_p 16\n", 2),
        ("[grid]\n\nn_p = sixteen\n", 3),
        ("[scenario]\nrefreeze = maybe\n", 2),
        ("[output\n", 1),
    ])
    def test_malformed(self, text, line):
        with pytest.raises(ParseError) as info:
            parse_config(text)
        assert info.value.line_number == line

    def test_sigma_below_minus_one(self):
        with pytest.raises(InvalidConstants, match="sigma must exceed -1"):
            parse_config("[constants]\nsigma = -1.5\n")

    def test_invalid_grid(self):
        with pytest.raises(InvalidGridConfig):
            parse_config("[grid]\nn_p = 15\n")


class TestScenario:

    @pytest.mark.parametrize("kwargs", [
        {'preset': 'shock'}, {'integrator': 'euler'}, {'dt': 0.0}, {'nsteps': 0},
        {'weight_a': 1.5}, {'profile_amplitude': 1.0}, {'gamma_scan_max': 0.05},
        {'gamma_scan_points': 1}, {'refine_levels': -1},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigValidationError):
            ScenarioConfig(**kwargs)

    def test_velocity(self):
        assert ScenarioConfig(velocity_x=0.6).velocity == (0.6, 0.0, 0.0)

    def test_precision_range(self):
        with pytest.raises(ConfigValidationError):
            parse_config("[output]\nprecision = 20\n")

    @pytest.mark.parametrize("path", ["out#1.csv", " padded.csv", "two\nlines.csv"])
    def test_path_must_survive_rendering(self, path):
        with pytest.raises(ConfigValidationError):
            OutputConfig(path=path)


class TestRender:

    def test_round_trip(self):
        cfg = parse_config(EXAMPLE + "\n[output]\npath = out/relax.csv\nprecision = 12\n")
        assert parse_config(render_config(cfg)) == cfg

    def test_round_trip_keeps_floats_exact(self):
        cfg = parse_config("[constants]\nm = 0.1\n[grid]\ns_max = 13.333333333333334\n")
        again = parse_config(render_config(cfg))
        assert again.constants.m == 0.1
        assert again.grid.s_max == 13.333333333333334

    def test_load(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(EXAMPLE, encoding='utf-8')
        assert load_config(path) == parse_config(EXAMPLE)

    def test_load_rejects_invalid_utf8(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_bytes(b"[output]\npath = caf\xe9.csv\n")
        with pytest.raises(ParseError, match="UTF-8"):
            load_config(path)

    def test_round_trip_keeps_path(self):
        cfg = parse_config("[output]\npath = results/run 1/relax.csv   # trailing comment\n")
        assert cfg.output.path == "results/run 1/relax.csv"
        assert parse_config(render_config(cfg)) == cfg
