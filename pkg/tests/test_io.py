import pytest
import numpy as np
import pandas as pd
from pathlib import Path

from diracstab.utils.io.io import Io, IoException, plain
from diracstab.utils.io.ios.jsonio import JsonIoException
from diracstab.utils.load import package_classes, suffix_registry
import diracstab.utils.io.ios as ios_package


CONFIG = {
    "k": 3,
    "omega_min": 0.9,
    "omegas": [0.9, 0.95],
    "N": "auto",
    "checks": ["profile", "spectrum"],
}


def test_suffixes():
    suffixes = Io.suffixes()
    assert suffixes[".toml"] == "TomlIo"
    assert suffixes[".yaml"] == "YamlIo"
    assert suffixes[".yml"] == "YamlIo"
    assert suffixes[".json"] == "JsonIo"
    assert suffixes[".csv"] == "CsvIo"
    assert Io.has_io(".TOML")
    assert not Io.has_io("")
    with pytest.raises(ValueError):
        Io.has_io("toml")


@pytest.mark.parametrize("name", ["run.toml", "run.yaml", "run.yml", "run.json"])
def test_config_formats(tmp_path, name):
    path = tmp_path / "nested" / name
    Io.get_io(path).blocking_dump(CONFIG)
    assert Io.get_io(path).blocking_load() == CONFIG


def test_toml_skips_none(tmp_path):
    path = tmp_path / "run.toml"
    Io.get_io(path).blocking_dump({"k": 1, "L": None})
    assert Io.get_io(path).blocking_load() == {"k": 1}


def test_json_accepts_numpy(tmp_path):
    path = tmp_path / "report.json"
    Io.get_io(path).blocking_dump({"lambda": np.float64(0.25), "values": np.arange(3)})
    assert Io.get_io(path).blocking_load() == {"lambda": 0.25, "values": [0, 1, 2]}


def test_csv_keeps_meta_and_floats(tmp_path):
    path = tmp_path / "scan.csv"
    table = pd.DataFrame({"omega": [0.9, 0.95], "nu": [1.0 / 3.0, float("nan")], "status": ["ok", "failed"]})
    Io.get_io(path).blocking_dump({"meta": {"k": 3, "Lambda": 0.125}, "table": table})

    text = path.read_text()
    assert text.startswith("# k=3\n# Lambda=0.125\nomega,nu,status\n")

    loaded = Io.get_io(path).blocking_load()
    assert loaded["meta"] == {"k": "3", "Lambda": "0.125"}
    assert loaded["table"]["nu"][0] == 1.0 / 3.0
    assert np.isnan(loaded["table"]["nu"][1])
    assert list(loaded["table"]["status"]) == ["ok", "failed"]


def test_csv_dump_is_deterministic(tmp_path):
    table = pd.DataFrame({"x": np.linspace(-1.0, 1.0, 7), "y": np.sin(np.linspace(-1.0, 1.0, 7))})
    for name in ("a.csv", "b.csv"):
        Io.get_io(tmp_path / name).blocking_dump({"meta": {}, "table": table})
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_csv_requires_table(tmp_path):
    with pytest.raises(IoException):
        Io.get_io(tmp_path / "bad.csv").blocking_dump({"meta": {}})


def test_errors(tmp_path):
    with pytest.raises(IoException):
        Io.get_io(tmp_path / "run.ini")
    with pytest.raises(TypeError):
        Io.get_io(str(tmp_path / "run.toml"))
    with pytest.raises(IoException):
        Io.get_io(tmp_path / "missing.toml").blocking_load()

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(IoException):
        Io.get_io(broken).blocking_load()


def test_plain():
    value = plain({1: (np.float64(0.5), np.int64(2)), "flag": np.bool_(False), "v": np.arange(2)})
    assert value == {"1": [0.5, 2], "flag": False, "v": [0, 1]}
    assert type(value["1"][0]) is float
    assert type(value["1"][1]) is int
    assert np.isnan(plain(float("nan")))
    assert plain({"bad": [np.float64("nan"), float("inf"), 1.0]}, strict=True) == {"bad": [None, None, 1.0]}


def test_registry():
    classes = package_classes(ios_package, Io)
    assert sorted(cls.__name__ for cls in classes) == ["CsvIo", "JsonIo", "TomlIo", "YamlIo"]
    assert suffix_registry(ios_package, Io) == Io.registry()
    assert type(Io.get_io(Path("report.JSON"))).__name__ == "JsonIo"
    with pytest.raises(TypeError):
        package_classes("diracstab.utils.io.ios", Io)


def test_yaml_empty_document(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert Io.get_io(path).blocking_load() == {}

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(IoException):
        Io.get_io(listing).blocking_load()


def test_dump_replaces_contents(tmp_path):
    path = tmp_path / "report.json"
    Io.get_io(path).blocking_dump({"values": list(range(100))})
    Io.get_io(path).blocking_dump({"k": 3})
    assert path.read_text() == '{\n    "k": 3\n}\n'
    with pytest.raises(TypeError):
        Io.get_io(path).blocking_dump([1, 2])


def test_format_exceptions(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(JsonIoException):
        Io.get_io(broken).blocking_load()
    folder = tmp_path / "spectra.json"
    folder.mkdir()
    with pytest.raises(TypeError):
        Io.get_io(folder)


FORMATS = {".toml": "TomlIo", ".yaml": "YamlIo", ".yml": "YamlIo", ".json": "JsonIo", ".csv": "CsvIo"}


@pytest.mark.parametrize("suffix", sorted(FORMATS))
def test_get_io_discovers_formats(tmp_path, suffix):
    Io.registry.cache_clear()
    path = tmp_path / f"data{suffix}"
    io = Io.get_io(path)
    assert type(io).__name__ == FORMATS[suffix]
    if suffix == ".csv":
        data = {"meta": {"k": "3"}, "table": pd.DataFrame({"omega": [0.9]})}
        io.blocking_dump(data)
        loaded = io.blocking_load()
        assert loaded["meta"] == {"k": "3"}
        assert list(loaded["table"]["omega"]) == [0.9]
    else:
        io.blocking_dump(CONFIG)
        assert io.blocking_load() == CONFIG
