import pytest

from rbcsim.config import ExperimentConfig, SweepSpec, dump_config, load_config, loads_config, write_config
from rbcsim.errors import ConfigError
from rbcsim.power import ETA_G_G0_LG


def test_empty_file_gives_reference_defaults(tmp_path):
    p = tmp_path / "empty.ini"
    p.write_text("")
    c = load_config(p)
    g = c.geometry
    assert (g.tx.f, g.tx.l, g.tx.r) == (50.4e-3, 52e-3, 7e-3)
    assert g.gain_radius == 2.8e-3
    assert g.reflectivity == 0.9
    assert c.power.p_in == 37.3 and c.power.i_s == 1.26e7
    assert c.power.v_s == 0.88 and c.power.eta_pv == 0.12
    assert g.initial_position == (0.0, 0.0, 2.0)


def test_reflectivity_out_of_range_is_named():
    with pytest.raises(ConfigError, match="reflectivity"):
        loads_config("[geometry]\nreflectivity = 1.2\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="tx_focal"):
        loads_config("[geometry]\ntx_focal = 0.05\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="solver"):
        loads_config("[solver]\nn = 5\n")


def test_parse_error_has_location():
    with pytest.raises(ConfigError, match="line"):
        loads_config("[geometry\nz0 = 1\n")


def test_bad_number_names_key():
    with pytest.raises(ConfigError, match="z0"):
        loads_config("[geometry]\nz0 = two\n")


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/rbcsim.ini")


def test_round_trip_default(tmp_path):
    c = ExperimentConfig()
    p = tmp_path / "c.ini"
    write_config(c, p)
    assert load_config(p) == c
    assert dump_config(load_config(p)) == dump_config(c)


def test_round_trip_custom():
    text = (
        "[geometry]\ndx = 0.04\nz0 = 1.5\n[grid]\nn = 256\nwindow = 0.03\n"
        "[power]\ng0_lg = eta_g\nv_split = 0.9, 0.95, 0.95, 0.9\n"
        "[sweep]\naxis = z\nstart = 0.2\nstop = 1.0\nsteps = 5\n"
    )
    c = loads_config(text)
    assert c.power.g0_lg == ETA_G_G0_LG
    assert c.power.v_split == (0.9, 0.95, 0.95, 0.9)
    assert loads_config(dump_config(c)) == c


def test_hash_tracks_any_change():
    base = ExperimentConfig().digest()
    assert loads_config("").digest() == base
    for text in ("[geometry]\nz0 = 2.1\n", "[grid]\nn = 256\n", "[foxli]\nseed = 1\n", "[output]\nemit_plots = no\n"):
        assert loads_config(text).digest() != base


def test_sweep_invariants():
    with pytest.raises(ConfigError):
        SweepSpec(steps=1)
    with pytest.raises(ConfigError):
        SweepSpec(start=0.1, stop=0.0)
    assert SweepSpec(point=True, steps=1, start=0.05).displacements() == [0.05]
    assert len(SweepSpec().displacements()) == 21


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.setenv("RBCSIM_OUTPUT_DIR", "/tmp/somewhere")
    assert loads_config("").output.directory == "/tmp/somewhere"


def test_power_params_follow_geometry():
    c = loads_config("[geometry]\nreflectivity = 0.8\ngain_radius = 0.002\n")
    p = c.power_params()
    assert p.reflectivity == 0.8 and p.gain_radius == 0.002


def test_inline_comments_allowed():
    c = loads_config("[geometry]\nz0 = 1.5   ; metres\n")
    assert c.geometry.distance == 1.5
