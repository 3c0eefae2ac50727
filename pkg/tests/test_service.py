"""Detection-service tests: caching, feedback lifecycle, export, HTTP API."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from lgb.api import create_app
from lgb.graph_store import SocialGraph, ego_network, ingest_dataset
from lgb.service import (
    DetectionService,
    FixtureDataProvider,
    NotFoundError,
    NotReadyError,
    PreconditionError,
    ProviderTimeoutError,
    ResultsStore,
    StateError,
    UnavailableError,
    ValidationError,
    bundle_fingerprint,
)
from lgb.training import TrainConfig, fused_probabilities, prepare_token_ids, run_pipeline

ARCH = {"text_dim": 8, "gnn_hidden": 8, "gnn_out": 8,
        "lm_head_hidden": [], "fusion_head_hidden": [], "max_len": 64}

CFGS = dict(
    sft_cfg=TrainConfig.sft(learning_rate=1e-2, max_epochs=8, patience=8, seed=0),
    pretrain_cfg=TrainConfig.pretrain(max_epochs=2, seed=0),
    finetune_cfg=TrainConfig.finetune(learning_rate=5e-2, max_epochs=8,
                                      patience=8, seed=0),
)

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "data" / "fixture"


def fixture_graph():
    return ingest_dataset(FIXTURE_DIR / "users.jsonl", FIXTURE_DIR / "edges.jsonl")


@pytest.fixture(scope="module")
def graph():
    return fixture_graph()


@pytest.fixture(scope="module")
def bundle(graph):
    return run_pipeline(graph, seed=0, arch=ARCH, **CFGS).bundle


@pytest.fixture()
def service(graph, bundle):
    svc = DetectionService(FixtureDataProvider(graph))
    svc.deploy(bundle)
    return svc


@pytest.fixture()
def confident_service(graph, bundle):
    # fixture-scale models stay timid, so exports use a floor they can clear
    svc = DetectionService(FixtureDataProvider(graph), confidence_floor=0.51)
    svc.deploy(bundle)
    return svc


class TimeoutProvider:
    def fetch_ego(self, account_id):
        raise ProviderTimeoutError("simulated outage")


# ----------------------------------------------------------------- detection

class TestDetect:
    def test_requires_a_deployed_model(self, graph):
        svc = DetectionService(FixtureDataProvider(graph))
        with pytest.raises(NotReadyError):
            svc.detect("bot0")

    def test_unknown_account_maps_to_not_found(self, service):
        with pytest.raises(NotFoundError):
            service.detect("nobody")

    def test_provider_timeout_maps_to_unavailable(self, bundle):
        svc = DetectionService(TimeoutProvider())
        svc.deploy(bundle)
        with pytest.raises(UnavailableError):
            svc.detect("bot0")

    def test_second_request_serves_the_stored_report(self, service):
        first = service.detect("bot0")
        calls = service.invocations
        second = service.detect("bot0")
        assert second is first
        assert service.invocations == calls

    def test_isolated_account_has_no_neighbor_results(self, service):
        report = service.detect("target")
        assert report.neighbor_results == ()

    def test_probabilities_match_offline_evaluation(self, service, graph, bundle):
        report = service.detect("bot1")
        ego = ego_network(graph, "bot1")
        ids = sorted(ego.members)
        sub = SocialGraph.build(ids, ego.induced_edges,
                                user_records={v: graph.user_records[v] for v in ids})
        probs = fused_probabilities(
            bundle, sub, prepare_token_ids(sub, bundle.vocab, ARCH["max_len"]))
        expected = {v: float(probs[sub.node_index(v), 1]) for v in ids}
        assert report.bot_probability == expected["bot1"]
        assert {n.node_id for n in report.neighbor_results} == set(ids) - {"bot1"}
        for n in report.neighbor_results:
            assert n.bot_probability == expected[n.node_id]

    def test_risk_flag_mirrors_the_threshold(self, service):
        report = service.detect("bot2")
        for n in report.neighbor_results:
            assert n.risk_flag == ("high" if n.bot_probability >= 0.5
                                   else "normal")
        assert report.predicted_label == int(report.bot_probability >= 0.5)

    def test_report_version_tracks_the_deployment(self, service, graph):
        report = service.detect("hum0")
        assert report.model_version == service.model_version
        retrained = run_pipeline(graph, seed=1, arch=ARCH, **CFGS).bundle
        new_version = service.deploy(retrained)
        assert new_version != report.model_version
        calls = service.invocations
        fresh = service.detect("hum0")
        assert fresh.model_version == new_version
        assert service.invocations == calls + 1

    def test_get_report_never_computes(self, service):
        with pytest.raises(NotFoundError):
            service.get_report("hum1")
        stored = service.detect("hum1")
        assert service.get_report("hum1") is stored

    def test_empty_account_id_rejected(self, service):
        with pytest.raises(ValidationError):
            service.detect("")

    def test_profile_mirrors_the_user_record(self, service, graph):
        report = service.detect("bot0")
        record = graph.user_records["bot0"]
        assert report.profile.name == record.name
        assert report.profile.followers_count == record.followers_count
        assert report.profile.following_count == record.following_count
        assert report.profile.description == record.description


class TestFingerprint:
    def test_identical_builds_share_a_fingerprint(self, graph):
        a = run_pipeline(graph, seed=3, arch=ARCH, **CFGS).bundle
        b = run_pipeline(graph, seed=3, arch=ARCH, **CFGS).bundle
        assert bundle_fingerprint(a) == bundle_fingerprint(b)

    def test_different_weights_change_the_fingerprint(self, graph):
        a = run_pipeline(graph, seed=3, arch=ARCH, **CFGS).bundle
        b = run_pipeline(graph, seed=4, arch=ARCH, **CFGS).bundle
        assert bundle_fingerprint(a) != bundle_fingerprint(b)


# ------------------------------------------------------------------ feedback

class TestFeedback:
    def test_submission_requires_a_prior_report(self, service):
        with pytest.raises(PreconditionError):
            service.submit_feedback("bot0", 0, "alice")

    def test_first_submission_is_pending(self, service):
        service.detect("bot0")
        record = service.submit_feedback("bot0", 0, "alice")
        assert record.status == "pending"
        assert record.model_version == service.model_version

    def test_resubmission_returns_the_same_record(self, service):
        service.detect("bot0")
        a = service.submit_feedback("bot0", 0, "alice")
        b = service.submit_feedback("bot0", 0, "alice")
        assert b.id == a.id
        c = service.submit_feedback("bot0", 0, "bob")
        assert c.id != a.id

    def test_invalid_label_and_submitter_rejected(self, service):
        service.detect("bot0")
        with pytest.raises(ValidationError):
            service.submit_feedback("bot0", 2, "alice")
        with pytest.raises(ValidationError):
            service.submit_feedback("bot0", 0, "")

    def test_approve_transitions_once(self, service):
        service.detect("bot0")
        record = service.submit_feedback("bot0", 0, "alice")
        decided = service.review_feedback(record.id, "approve", "rev")
        assert decided.status == "approved"
        assert decided.reviewer_id == "rev"
        assert decided.reviewer_decision_at is not None
        with pytest.raises(StateError):
            service.review_feedback(record.id, "approve", "rev")
        with pytest.raises(StateError):
            service.review_feedback(record.id, "reject", "rev")

    def test_reject_path_and_validation(self, service):
        service.detect("hum0")
        record = service.submit_feedback("hum0", 1, "alice")
        with pytest.raises(ValidationError):
            service.review_feedback(record.id, "maybe", "rev")
        decided = service.review_feedback(record.id, "reject", "rev")
        assert decided.status == "rejected"
        with pytest.raises(NotFoundError):
            service.review_feedback("fb999", "approve", "rev")

    def test_audit_log_is_strictly_ordered(self, service):
        service.detect("bot0")
        record = service.submit_feedback("bot0", 0, "alice")
        service.review_feedback(record.id, "approve", "rev")
        log = service.store.audit_log
        seqs = [entry["seq"] for entry in log]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
        actions = [entry["action"] for entry in log]
        assert actions[0] == "deploy"
        assert {"report", "feedback_submit", "feedback_review"} <= set(actions)


# -------------------------------------------------------------------- export

class TestExport:
    def test_predictions_enter_only_above_the_floor(self, confident_service, graph):
        for v in graph.nodes:
            confident_service.detect(v)
        snap = confident_service.export_training_data()
        for v in graph.nodes:
            p = confident_service.get_report(v).bot_probability
            if max(p, 1 - p) >= 0.51:
                assert snap.labels[v] == int(p >= 0.5)
            else:
                assert v not in snap.labels

    def test_default_floor_excludes_timid_predictions(self, service, graph):
        for v in graph.nodes:
            service.detect(v)
        confidences = [max(p, 1 - p) for p in
                       (service.get_report(v).bot_probability for v in graph.nodes)]
        assert all(c < 0.9 for c in confidences)
        assert service.export_training_data().labels == {}

    def test_lines_are_ingestable_json_with_train_split(self, confident_service):
        confident_service.detect("bot0")
        snap = confident_service.export_training_data()
        assert snap.users_jsonl
        for line in snap.users_jsonl:
            obj = json.loads(line)
            assert obj["split"] == "train"
            assert obj["label"] in ("human", "bot")
            assert "id" in obj and "tweets" in obj

    def test_approved_correction_overrides_the_prediction(self, service):
        report = service.detect("target")
        assert report.predicted_label == 1
        record = service.submit_feedback("target", 0, "alice")
        service.review_feedback(record.id, "approve", "rev")
        snap = service.export_training_data()
        assert snap.labels["target"] == 0

    def test_rejected_correction_leaves_the_prediction(self, confident_service):
        confident_service.detect("target")
        record = confident_service.submit_feedback("target", 0, "alice")
        confident_service.review_feedback(record.id, "reject", "rev")
        snap = confident_service.export_training_data()
        assert snap.labels["target"] == 1

    def test_snapshots_are_versioned_and_repeatable(self, service):
        service.detect("bot0")
        a = service.export_training_data()
        b = service.export_training_data()
        assert a.snapshot_id != b.snapshot_id
        assert dict(a.labels) == dict(b.labels)
        assert a.users_jsonl == b.users_jsonl

    def test_empty_export_is_allowed(self, service):
        snap = service.export_training_data()
        assert snap.labels == {}
        assert snap.users_jsonl == ()


def test_closed_loop_retraining_flips_the_corrected_account(graph, bundle):
    service = DetectionService(FixtureDataProvider(graph), confidence_floor=0.51)
    service.deploy(bundle)
    for v in graph.nodes:
        service.detect(v)
    assert service.detect("target").predicted_label == 1

    record = service.submit_feedback("target", 0, "alice")
    service.review_feedback(record.id, "approve", "rev")
    snap = service.export_training_data()
    assert snap.labels["target"] == 0

    labels = dict(snap.labels)
    exported_bots = sorted(v for v, y in labels.items()
                           if y == 1 and v != "target")
    exported_hums = sorted(v for v, y in labels.items()
                           if y == 0 and v != "target")
    splits = {v: "train" for v in labels}
    splits[exported_bots[-1]] = splits[exported_hums[-1]] = "val"
    splits[exported_bots[-2]] = splits[exported_hums[-2]] = "test"
    retrain_graph = SocialGraph.build(graph.nodes, graph.edges, labels, splits,
                                      dict(graph.user_records))
    retrained = run_pipeline(retrain_graph, seed=0, arch=ARCH, **CFGS).bundle

    service.deploy(retrained)
    flipped = service.detect("target")
    assert flipped.predicted_label == 0


# ----------------------------------------------------------------------- api

@pytest.fixture()
def client(service):
    return TestClient(create_app(service))


class TestApi:
    def test_detect_endpoint_round_trip(self, client):
        resp = client.post("/detect", json={"account_id": "bot0"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["account_id"] == "bot0"
        assert 0.0 <= body["bot_probability"] <= 1.0
        assert body["predicted_label"] in (0, 1)
        assert set(body["profile"]) == {
            "name", "followers_count", "following_count", "description"}
        for entry in body["neighbor_results"]:
            assert entry["risk_flag"] in ("high", "normal")

    def test_unknown_account_is_404_with_code(self, client):
        resp = client.post("/detect", json={"account_id": "nobody"})
        assert resp.status_code == 404
        assert resp.json()["error"]["code"] == "NOT_FOUND"

    def test_undeployed_service_is_503(self, graph):
        svc = DetectionService(FixtureDataProvider(graph))
        client = TestClient(create_app(svc))
        resp = client.post("/detect", json={"account_id": "bot0"})
        assert resp.status_code == 503
        assert resp.json()["error"]["code"] == "NOT_READY"

    def test_provider_outage_is_503_unavailable(self, bundle):
        svc = DetectionService(TimeoutProvider())
        svc.deploy(bundle)
        client = TestClient(create_app(svc))
        resp = client.post("/detect", json={"account_id": "bot0"})
        assert resp.status_code == 503
        assert resp.json()["error"]["code"] == "UNAVAILABLE"

    def test_report_endpoint_matches_detect(self, client):
        assert client.get("/report/hum0").status_code == 404
        detected = client.post("/detect", json={"account_id": "hum0"}).json()
        fetched = client.get("/report/hum0").json()
        assert fetched == detected

    def test_feedback_flow_over_http(self, client):
        assert client.post("/feedback", json={
            "account_id": "bot0", "proposed_label": 0,
            "submitter_id": "alice"}).status_code == 412
        client.post("/detect", json={"account_id": "bot0"})
        created = client.post("/feedback", json={
            "account_id": "bot0", "proposed_label": 0, "submitter_id": "alice"})
        assert created.status_code == 200
        record = created.json()
        assert record["status"] == "pending"

        reviewed = client.post(f"/feedback/{record['id']}/review",
                               json={"decision": "approve", "reviewer_id": "rev"})
        assert reviewed.status_code == 200
        assert reviewed.json()["status"] == "approved"

        again = client.post(f"/feedback/{record['id']}/review",
                            json={"decision": "approve", "reviewer_id": "rev"})
        assert again.status_code == 409
        assert again.json()["error"]["code"] == "STATE"

    def test_malformed_body_is_422(self, client):
        assert client.post("/feedback", json={"account_id": "x"}).status_code == 422
        client.post("/detect", json={"account_id": "bot0"})
        bad_label = client.post("/feedback", json={
            "account_id": "bot0", "proposed_label": 7, "submitter_id": "a"})
        assert bad_label.status_code == 422
        assert bad_label.json()["error"]["code"] == "VALIDATION"

    def test_export_endpoint(self, client):
        client.post("/detect", json={"account_id": "bot0"})
        resp = client.get("/export/training-data")
        assert resp.status_code == 200
        body = resp.json()
        assert body["snapshot_id"].startswith("exp")
        assert isinstance(body["users_jsonl"], list)
