import json
import os
import subprocess
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import metamodel

SOURCE_DIR = Path(os.environ.get("METAMODEL_SOURCE_DIR", Path(__file__).resolve().parents[2]))
EXE = os.environ.get("METAMODEL_EXE")


def load_schema(name):
    with open(SOURCE_DIR / "docs" / name, encoding="utf-8") as handle:
        return json.load(handle)


def beam_data(count):
    bench = metamodel.make_benchmark("beam")
    x = bench.input.sample(metamodel.sobol(5, count))
    return bench, bench.input.to_standard(x), bench.evaluate(x)


def test_designs_and_benchmarks():
    u = metamodel.sobol(3, 16)
    assert u.shape == (16, 3)
    assert np.all((u > 0) & (u < 1))
    assert np.array_equal(metamodel.maximin_lhs(4, 10, 7), metamodel.maximin_lhs(4, 10, 7))
    assert set(metamodel.benchmark_names()) >= {"beam", "truss"}
    assert len(metamodel.enumerate_hyperbolic(10, 3)) == 286
    assert metamodel.eole_terms() == 53


def test_lra_and_pce_on_the_beam():
    _, z, y = beam_data(50)
    _, zv, yv = beam_data(2000)
    lra = metamodel.fit_lra(z, y, degrees=[1, 2, 3, 4], min_error_decrease=1e-8)
    pce = metamodel.fit_pce(z, y, degrees=[1, 2, 3, 4])
    e_lra = metamodel.generalization_error(yv, lra.model.predict(zv))["relative"]
    e_pce = metamodel.generalization_error(yv, pce.predict(zv))["relative"]
    assert e_lra < 1e-3
    assert e_pce > e_lra
    assert lra.model.rank >= 1


def test_model_documents_round_trip(tmp_path):
    _, z, y = beam_data(40)
    pce = metamodel.fit_pce(z, y, degrees=[1, 2, 3])
    again = metamodel.PceModel.from_json(pce.to_json())
    assert np.allclose(again.predict(z), pce.predict(z), rtol=0, atol=1e-15)
    path = tmp_path / "pce.json"
    path.write_text(pce.to_json())
    assert isinstance(metamodel.load_model(str(path)), metamodel.PceModel)


def test_errors_map_to_python_exceptions():
    with pytest.raises(metamodel.ConfigError):
        metamodel.InputModel.from_json('{"marginals": []}')
    assert issubclass(metamodel.ConfigError, ValueError)
    y = np.arange(100.0)
    with pytest.raises(ValueError):
        metamodel.conditional_error(y, y, threshold=1e9)
    with pytest.raises(ValueError):
        metamodel.fit_pce(np.zeros((5, 2)), np.zeros(4))


def write_config(tmp_path, document):
    schema = load_schema("config.schema.json")
    jsonschema.validate(document, schema)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(document))
    return path


def test_cli_reports_match_the_schema(tmp_path):
    if not EXE:
        pytest.skip("METAMODEL_EXE not set")
    config = write_config(tmp_path, {
        "model": {"benchmark": "beam"},
        "design": {"size": 30},
        "surrogate": {"pce": {"degrees": [1, 2, 3]}, "lra": {"degrees": [1, 2]}},
        "validation": {"size": 1000, "quantiles": [0.5, 0.99]},
        "compare": {"sizes": [15, 30]},
    })
    schema = load_schema("report.schema.json")
    fit = subprocess.run([EXE, "fit", "--config", str(config), "--out-dir", str(tmp_path / "fit")],
                         capture_output=True, text=True, check=True)
    report = json.loads(fit.stdout)
    jsonschema.validate(report, schema)
    assert report == json.loads((tmp_path / "fit" / "report.json").read_text())
    for args in (["compare"], ["validate", "--model", str(tmp_path / "fit" / "lra_model.json")], ["design"]):
        out = subprocess.run([EXE, *args, "--config", str(config), "--out-dir", str(tmp_path / args[0])],
                             capture_output=True, text=True, check=True)
        jsonschema.validate(json.loads(out.stdout), schema)


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": {"benchmark": "beam"}, "unexpected": 1}')
    assert metamodel.run_cli(["fit", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(json.loads(bad.read_text()), load_schema("config.schema.json"))
    good = write_config(tmp_path, {"model": {"benchmark": "beam"}, "design": {"size": 20}})
    assert metamodel.run_cli(["design", "--config", str(good), "--out-dir", str(tmp_path / "d")]) == 0


@pytest.mark.parametrize("path", sorted((SOURCE_DIR / "configs").glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs_are_valid(path, tmp_path):
    jsonschema.validate(json.loads(path.read_text()), load_schema("config.schema.json"))
    assert metamodel.run_cli(["design", "--config", str(path), "--out-dir", str(tmp_path)]) == 0
