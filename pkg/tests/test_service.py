import pytest
from fastapi.testclient import TestClient

from ndn.core import graph_from_layout, graph_to_dict, layout_to_dict
from ndn.data import MOBILE_UI_CATEGORIES, sample_partial, synth_generate
from ndn.harness.checkpoint import ModelCheckpoint
from ndn.harness.service import create_app


@pytest.fixture(scope="module")
def checkpoint(small_checkpoint):
    return ModelCheckpoint.load(small_checkpoint)


@pytest.fixture(scope="module")
def client(checkpoint):
    return TestClient(create_app(checkpoint), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def constraints():
    layout = synth_generate(1, seed=30)[0]
    graph = sample_partial(graph_from_layout(layout), rate=0.4, seed=2)
    return graph_to_dict(graph, MOBILE_UI_CATEGORIES)


@pytest.fixture(scope="module")
def placed_layout():
    return layout_to_dict(synth_generate(1, seed=31)[0])


class TestHealthAndCategories:
    def test_health(self, client, checkpoint):
        response = client.get("/api/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["checkpoint"] == checkpoint.content_hash

    def test_categories(self, client):
        response = client.get("/api/categories")
        assert response.status_code == 200
        assert response.json()["categories"] == list(MOBILE_UI_CATEGORIES.names)


class TestComplete:
    def test_completes_graph(self, client, constraints):
        response = client.post("/api/complete", json={"constraints": constraints, "seed": 1})
        assert response.status_code == 200
        obj = response.json()
        n = len(obj["components"])
        assert len(obj["loc"]) == (n + 1) * n // 2
        assert len(obj["size"]) == (n + 1) * n // 2

    def test_known_edges_survive(self, client, constraints):
        response = client.post("/api/complete", json={"constraints": constraints, "seed": 1})
        completed = response.json()
        wanted = {tuple(map(str, entry)) for entry in constraints["loc"]}
        got = {tuple(map(str, entry)) for entry in completed["loc"]}
        assert wanted <= got

    def test_bad_mode(self, client, constraints):
        response = client.post("/api/complete", json={"constraints": constraints, "mode": "magic"})
        assert response.status_code == 400
        assert response.json()["detail"]["field"] == "mode"


class TestGenerate:
    def test_returns_requested_samples(self, client, constraints):
        response = client.post(
            "/api/generate", json={"constraints": constraints, "samples": 3, "seed": 11}
        )
        assert response.status_code == 200
        body = response.json()
        assert len(body["layouts"]) == 3
        assert len(body["consistency"]) == 3
        assert len(body["reports"]) == 3
        for layout in body["layouts"]:
            assert {"canvas_px", "components"} <= set(layout)

    def test_deterministic_per_seed(self, client, constraints):
        a = client.post("/api/generate", json={"constraints": constraints, "samples": 2, "seed": 7})
        b = client.post("/api/generate", json={"constraints": constraints, "samples": 2, "seed": 7})
        assert a.json()["layouts"] == b.json()["layouts"]

    def test_fixed_sizes_passthrough(self, client, constraints):
        response = client.post(
            "/api/generate",
            json={
                "constraints": constraints,
                "samples": 2,
                "fixed_sizes": {"0": [0.45, 0.11]},
            },
        )
        assert response.status_code == 200
        for layout in response.json()["layouts"]:
            assert layout["components"][0]["bbox"][2:] == [0.45, 0.11]

    def test_missing_constraints(self, client):
        response = client.post("/api/generate", json={"samples": 1})
        assert response.status_code == 400
        assert response.json()["detail"]["field"] == "constraints"

    def test_conflicting_indices_rejected(self, client, constraints):
        bad = dict(constraints)
        bad["loc"] = [[0, "above", 1], [1, "below", 0]]
        response = client.post("/api/generate", json={"constraints": bad})
        assert response.status_code == 400

    def test_out_of_range_index_rejected(self, client, constraints):
        bad = dict(constraints)
        bad["loc"] = [[0, "above", 42]]
        response = client.post("/api/generate", json={"constraints": bad})
        assert response.status_code == 400
        assert "constraints" in response.json()["detail"]["field"]

    def test_vocabulary_mismatch_rejected(self, client):
        response = client.post(
            "/api/generate",
            json={"constraints": {"categories": ["canvas", "x"], "components": ["x"]}},
        )
        assert response.status_code == 400

    def test_sample_cap(self, client, constraints):
        response = client.post(
            "/api/generate", json={"constraints": constraints, "samples": 10_000}
        )
        assert response.status_code == 400

    def test_invalid_json_body(self, client):
        response = client.post(
            "/api/generate", content=b"{nope", headers={"content-type": "application/json"}
        )
        assert response.status_code == 400

    def test_non_object_body(self, client):
        response = client.post("/api/generate", json=[1, 2, 3])
        assert response.status_code == 400


class TestRecommend:
    def test_returns_boxes(self, client, placed_layout):
        response = client.post(
            "/api/recommend",
            json={"layout": placed_layout, "targets": ["button"], "seed": 4},
        )
        assert response.status_code == 200
        body = response.json()
        assert len(body["boxes"]) == 1
        x, y, w, h = body["boxes"][0]
        assert 0 <= x <= 1 and 0 <= y <= 1 and 0 < w <= 1 and 0 < h <= 1

    def test_deterministic_per_seed(self, client, placed_layout):
        payload = {"layout": placed_layout, "targets": ["button"], "seed": 9}
        a = client.post("/api/recommend", json=payload)
        b = client.post("/api/recommend", json=payload)
        assert a.json()["boxes"] == b.json()["boxes"]

    def test_unknown_target_rejected(self, client, placed_layout):
        response = client.post(
            "/api/recommend", json={"layout": placed_layout, "targets": ["banner"]}
        )
        assert response.status_code == 400

    def test_canvas_target_rejected(self, client, placed_layout):
        response = client.post(
            "/api/recommend", json={"layout": placed_layout, "targets": ["canvas"]}
        )
        assert response.status_code == 400

    def test_bad_layout_rejected(self, client):
        response = client.post(
            "/api/recommend",
            json={"layout": {"canvas_px": [10, 10], "components": []}, "targets": ["button"]},
        )
        assert response.status_code == 400


class TestInferenceFailure:
    def test_opaque_500(self, client, constraints, monkeypatch):
        from ndn.harness import service as service_mod

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(service_mod, "generate_layouts", boom)
        response = client.post("/api/generate", json={"constraints": constraints, "samples": 1})
        assert response.status_code == 500
        assert "error_id" in response.json()
        assert "synthetic failure" not in response.text
