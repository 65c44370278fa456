import json

import pytest

import citypulse


def small_spec(**overrides):
    spec = citypulse.default_scenario()
    spec.update(n_antennas=40, holidays=[], events=[])
    spec["city"]["period_end"] = "2013-04-22"
    spec.update(overrides)
    return spec


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    root = tmp_path_factory.mktemp("city")
    truth = citypulse.synth(root / "data", small_spec())
    city_dir = citypulse.build_store(root / "data", root / "store", k=3)
    return root, truth, city_dir


def test_activity_types():
    assert citypulse.activity_types() == ["CALLS", "SMS", "DATA_DOWN", "DATA_UP", "DATA_REQUESTS"]


def test_grid_locate():
    grid = citypulse.Grid(0.0, 0.0, 0.018, 0.018, 1000.0)
    assert (grid.n_rows, grid.n_cols) == (3, 3)
    assert grid.locate(0.0, 0.0) == (0, 0)
    assert grid.locate(-1e-6, 0.0) is None


def test_kmeans_and_ari():
    rows = [[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]]
    model = citypulse.kmeans(rows, 2, seed=1)
    a = model["assignment"]
    assert a[0] == a[1] != a[2] == a[3]
    assert citypulse.adjusted_rand_index(a, [1, 1, 0, 0]) == pytest.approx(1.0)
    with pytest.raises(citypulse.ArgumentError):
        citypulse.kmeans(rows, 5)


def test_label_cluster_uniform_is_other():
    assert citypulse.label_cluster([1.0 / 672] * 672) == "other"


def test_synth_is_deterministic(tmp_path):
    a = citypulse.synth(tmp_path / "a", small_spec(n_antennas=5))
    b = citypulse.synth(tmp_path / "b", small_spec(n_antennas=5))
    assert a == b
    assert (tmp_path / "a" / "activity.csv").read_bytes() == (tmp_path / "b" / "activity.csv").read_bytes()


def test_ingest_summary(store):
    root, truth, _ = store
    summary = citypulse.ingest(root / "data")
    assert summary["city_id"] == "synthcity"
    assert summary["activity_rejected"] == 0
    assert summary["records"] == 40 * 21 * 96
    assert len(truth["antennas"]) == 40


def test_api_matches_store(store):
    root, _, city_dir = store
    api = citypulse.ApiService(str(root / "store"))
    assert api.city_ids() == ["synthcity"]
    status, body = api.get("/api/cities/synthcity/regions/city/typicalweek", {"type": "SMS"})
    assert status == 200
    with open(f"{city_dir}/profiles/city__SMS__raw.json", "rb") as f:
        assert body == f.read()
    status, body = api.get("/api/cities/synthcity/regions/UNKNOWN/series")
    assert status == 404
    assert json.loads(body)["error"]["code"] == "region_not_found"


def test_invalid_scenario_raises(tmp_path):
    with pytest.raises(citypulse.ValidationError):
        citypulse.synth(tmp_path, small_spec(n_antennas=0))
