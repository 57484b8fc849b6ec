import base64
from datetime import date, timedelta

import numpy as np
import pytest
from fastapi.testclient import TestClient

from vistr.api import ApiConfig, create_app
from vistr.render import ChartImage
from vistr.table import Facet
from vistr.render import render_chart


def _csv_with_bump(n=120):
    t = np.linspace(0, 1, n)
    rng = np.random.default_rng(0)
    apple = 10 + 3 * t + 25 * np.exp(-0.5 * ((t - 0.6) / 0.08) ** 2) + 0.02 * rng.standard_normal(n)
    banana = 2 * apple + 7
    start = date(2020, 1, 1)
    lines = ["date,Apple,Banana"]
    for i in range(n):
        lines.append(f"{(start + timedelta(days=i)).isoformat()},{apple[i]:.6f},{banana[i]:.6f}")
    return "\n".join(lines).encode()


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    root = tmp_path_factory.mktemp("store")
    app = create_app(ApiConfig(store_root=str(root)))
    with TestClient(app) as c:
        r = c.post(
            "/api/tables",
            files={"file": ("demo.csv", _csv_with_bump(), "text/csv")},
            data={"table_id": "demo", "chart_types": "line", "threshold": "0.5",
                  "pht_delta": "0.05", "pht_lambda": "2.5"},
        )
        assert r.status_code == 201, r.text
        yield c


class TestIngest:
    def test_ingest_reports_counts(self, client):
        doc = client.get("/api/tables").json()
        assert "demo" in doc["tables"]

    def test_parse_error_with_location(self, client):
        bad = b"date,Apple\n2020-01-01,1.0\n2020-01-02,oops\n"
        r = client.post("/api/tables", files={"file": ("bad.csv", bad, "text/csv")})
        assert r.status_code == 400
        doc = r.json()
        assert doc["code"] == "ParseError"
        assert set(doc["detail"]) == {"row", "col"}

    def test_body_limit_413(self, tmp_path):
        app = create_app(ApiConfig(store_root=str(tmp_path), body_limit=100))
        with TestClient(app) as c:
            r = c.post("/api/tables", files={"file": ("big.csv", b"x" * 200, "text/csv")})
            assert r.status_code == 413
            assert r.json()["code"] == "BodyTooLarge"


class TestQuery:
    def test_trend_of_golden_answer(self, client):
        r = client.post("/api/tables/demo/query", json={"text": "What is the trend of Apple?"})
        assert r.status_code == 200
        doc = r.json()
        assert doc["plan"]["intent"] == "TrendOf"
        m = doc["matches"][0]
        assert doc["answer"] == f"There is a {m['trend']} trend in Apple during {m['start']} to {m['end']}."

    def test_correlation_verdict(self, client):
        r = client.post(
            "/api/tables/demo/query",
            json={"text": "Do Apple and Banana have similar change patterns?"},
        )
        assert r.status_code == 200
        assert r.json()["verdict"] == "similar"

    def test_sketch_attachment(self, client):
        f = Facet(variable="s", start_idx=0, end_idx=30,
                  values=tuple(np.exp(-0.5 * ((np.linspace(0, 1, 31) - 0.5) / 0.12) ** 2).tolist()),
                  time_range=(0, 30))
        png = render_chart(f, "line").to_png()
        r = client.post(
            "/api/tables/demo/query",
            json={"text": "are there patterns similar to my sketch?",
                  "image_base64": base64.b64encode(png).decode(), "k": 2},
        )
        assert r.status_code == 200
        doc = r.json()
        assert doc["plan"]["intent"] == "SimilarToImage"
        assert 1 <= len(doc["matches"]) <= 2

    def test_invalid_base64(self, client):
        r = client.post("/api/tables/demo/query", json={"text": "similar?", "image_base64": "@@@"})
        assert r.status_code == 422
        assert r.json()["code"] == "BadImage"

    def test_unsupported_query_lists_forms(self, client):
        r = client.post("/api/tables/demo/query", json={"text": "why did Apple rise?"})
        assert r.status_code == 422
        doc = r.json()
        assert doc["code"] == "UnsupportedQueryError"
        assert doc["detail"]["supported_forms"]

    def test_unknown_table_404(self, client):
        r = client.post("/api/tables/nope/query", json={"text": "describe the data"})
        assert r.status_code == 404
        assert r.json()["code"] == "StoreError"


class TestPatternsAndSeries:
    def test_patterns_groups(self, client):
        r = client.get("/api/tables/demo/patterns", params={"var": "Apple"})
        assert r.status_code == 200
        groups = r.json()["groups"]
        assert groups
        counts = [g["count"] for g in groups]
        assert counts == sorted(counts, reverse=True)

    def test_patterns_unknown_var(self, client):
        r = client.get("/api/tables/demo/patterns", params={"var": "Durian"})
        assert r.status_code == 400
        assert r.json()["code"] == "VariableError"

    def test_series_full(self, client):
        r = client.get("/api/tables/demo/series", params={"vars": "Apple,Banana"})
        doc = r.json()
        assert len(doc["timestamps"]) == 120
        assert set(doc["series"]) == {"Apple", "Banana"}
        assert doc["timestamps"][0] == "2020-01-01"

    def test_series_downsampled_keeps_endpoints(self, client):
        r = client.get("/api/tables/demo/series", params={"vars": "Apple", "max_points": 50})
        doc = r.json()
        assert len(doc["timestamps"]) == 50
        assert doc["timestamps"][0] == "2020-01-01" and doc["timestamps"][-1] == "2020-04-29"

    def test_series_unknown_var(self, client):
        r = client.get("/api/tables/demo/series", params={"vars": "Durian"})
        assert r.status_code == 400


class TestRefImages:
    def test_ref_image_round_trip(self, client):
        r = client.post("/api/tables/demo/query", json={"text": "peak in Apple"})
        ref_id = r.json()["matches"][0]["ref_id"]
        img = client.get(f"/api/refs/{ref_id}/image")
        assert img.status_code == 200
        assert img.headers["content-type"] == "image/png"
        chart = ChartImage.from_png(img.content)
        assert chart.pixels.shape == (224, 224, 3)

    def test_missing_ref_404(self, client):
        r = client.get("/api/refs/demo:Nope:0-1:line/image")
        assert r.status_code == 404
