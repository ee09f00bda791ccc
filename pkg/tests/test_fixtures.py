import json

import numpy as np
import pytest

from polymixer import fixtures
from polymixer.errors import FixtureSchemaError, ToleranceBreach
from polymixer.mixer import MaskSpec


@pytest.mark.parametrize("kind", fixtures.KINDS)
def test_fresh_fixture_verifies(tmp_path, kind):
    path = fixtures.write(fixtures.generate(kind, seed=3), tmp_path / f"{kind}.json")
    report = fixtures.fixture_roundtrip(path)
    assert report.kind == kind and report.passed


def test_seventeen_digit_roundtrip_is_exact():
    rng = np.random.default_rng(0)
    vals = np.concatenate([rng.standard_normal(500), rng.standard_normal(100) * 1e-300,
                           [np.nextafter(1.0, 2.0), 0.1, -0.0, 5e-324, 1.7976931348623157e308]])
    doc = {"m": [vals.tolist()]}
    back = np.array(json.loads(fixtures.dumps(doc))["m"][0], dtype=float)
    assert np.array_equal(back.view(np.int64)[:-5], vals.view(np.int64)[:-5])
    assert np.array_equal(back, vals)


def test_corrupted_weight_breaches_tolerance(tmp_path):
    doc = fixtures.generate("mixer", seed=1)
    w = doc["weights"]["W_o"][0][0]
    doc["weights"]["W_o"][0][0] = w + 1e-3  # a changed digit well past 1e-12
    path = fixtures.write(doc, tmp_path / "bad.json")
    with pytest.raises(ToleranceBreach) as err:
        fixtures.fixture_roundtrip(path)
    assert err.value.max_abs_diff > doc["tolerance"]


def test_text_level_digit_corruption(tmp_path):
    path = fixtures.write(fixtures.generate("mixer", seed=2), tmp_path / "f.json")
    text = path.read_text()
    doc = json.loads(text)
    s = fixtures._fmt(doc["weights"]["W_h"][0][0])
    digit = next(i for i, ch in enumerate(s) if ch in "123456789")
    bumped = s[:digit] + str(int(s[digit]) % 9 + 1) + s[digit + 1:]
    path.write_text(text.replace(s, bumped, 1))
    with pytest.raises(ToleranceBreach):
        fixtures.fixture_roundtrip(path)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("tolerance"),
    lambda d: d.update(schema_version=99),
    lambda d: d.update(kind="rnn"),
    lambda d: d["config"].update(k=0),
    lambda d: d["weights"].pop("alpha"),
    lambda d: d.update(input="not a matrix"),
    lambda d: d["weights"].update(W_h=[[1.0]]),
])
def test_schema_violations(tmp_path, mutate):
    doc = fixtures.generate("mixer", seed=4)
    mutate(doc)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FixtureSchemaError):
        fixtures.fixture_roundtrip(path)


def test_not_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{nope")
    with pytest.raises(FixtureSchemaError):
        fixtures.fixture_roundtrip(path)


@pytest.mark.parametrize("mask", [MaskSpec.causal(), MaskSpec.block_causal(3)])
def test_streaming_fixture_verifies_batched(tmp_path, mask):
    doc = fixtures.generate("stream", seed=5, n=9, mask=mask)
    assert doc["provenance"] == "streaming"
    report = fixtures.fixture_roundtrip(fixtures.write(doc, tmp_path / "s.json"))
    assert report.max_abs_diff <= 1e-12


def test_stream_fixture_rejects_full_mask():
    with pytest.raises(ValueError):
        fixtures.generate("stream", seed=0, mask=MaskSpec.full())


def test_explicit_mask_serialised(tmp_path):
    M = np.tril(np.ones((5, 5)))
    doc = fixtures.generate("mixer", seed=6, n=5, mask=MaskSpec.explicit(M))
    again = fixtures.loads(fixtures.dumps(doc))
    assert np.array_equal(fixtures.parse_mask(again["mask"]).matrix, M)


def test_shipped_fixtures_present():
    names = {p.name for p in fixtures.shipped_fixtures()}
    assert {"polymorpher_seed13.json", "stack_seed17.json", "mixer_full_seed42.json"} <= names
    kinds = {fixtures.loads(p.read_text())["kind"] for p in fixtures.shipped_fixtures()}
    assert kinds == set(fixtures.KINDS)
