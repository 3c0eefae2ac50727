"""Online detection: cached ego-network scoring, feedback, label export.

A deployed model bundle scores accounts on demand. Each detection fetches
the account's ego network from a pluggable data provider, runs the fused
model over it, and persists an immutable report keyed by account and
model version, so repeated requests under the same deployment never
re-invoke the model. Humans correct reports through a single-transition
feedback lifecycle, and approved corrections override model labels in the
training-data export that seeds the next offline round.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Protocol, Sequence

from .bundle import ModelBundle, config_hash
from .graph_store import (
    LABEL_BOT,
    LABEL_HUMAN,
    Edge,
    SocialGraph,
    UserRecord,
    ego_network,
    user_record_json,
)
from .training import fused_probabilities, prepare_token_ids

RISK_HIGH = "high"
RISK_NORMAL = "normal"
FEEDBACK_PENDING = "pending"
FEEDBACK_APPROVED = "approved"
FEEDBACK_REJECTED = "rejected"


class ServiceError(Exception):
    """Base error with a machine-readable code for transport layers."""

    code = "INTERNAL"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class NotFoundError(ServiceError):
    code = "NOT_FOUND"


class NotReadyError(ServiceError):
    code = "NOT_READY"


class PreconditionError(ServiceError):
    code = "PRECONDITION"


class StateError(ServiceError):
    code = "STATE"


class ValidationError(ServiceError):
    code = "VALIDATION"


class UnavailableError(ServiceError):
    """Transient provider failure; safe to retry."""

    code = "UNAVAILABLE"


class ProviderLookupError(Exception):
    """The data provider has no such account."""


class ProviderTimeoutError(Exception):
    """The data provider did not answer in time."""


class DataProvider(Protocol):
    """Source of ego networks for real-time detection."""

    def fetch_ego(self, account_id: str) -> tuple[UserRecord, list[UserRecord],
                                                  list[Edge]]:
        """Return the account's record, its neighbors, and induced edges."""
        ...


class FixtureDataProvider:
    """Serves ego networks out of an ingested social graph."""

    def __init__(self, graph: SocialGraph):
        self._graph = graph

    def fetch_ego(self, account_id: str):
        g = self._graph
        if not g.has_node(account_id):
            raise ProviderLookupError(account_id)
        ego = ego_network(g, account_id)

        def record(v: str) -> UserRecord:
            return g.user_records.get(v) or UserRecord(
                id=v, name=v, followers_count=0, following_count=0)

        neighbor_ids = sorted(ego.members - {account_id})
        return (record(account_id), [record(v) for v in neighbor_ids],
                list(ego.induced_edges))


def bundle_fingerprint(bundle: ModelBundle) -> str:
    """Version id covering architecture and trained parameters.

    Two deployments share a fingerprint only when every weight matches, so
    retraining invalidates cached reports even under an identical
    architecture.
    """
    state = {
        name: {key: tensor.detach().cpu().tolist()
               for key, tensor in module.state_dict().items()}
        for name, module in bundle.modules().items()
    }
    return config_hash({"config": dict(bundle.config), "params": state})


@dataclass(frozen=True)
class NeighborResult:
    node_id: str
    bot_probability: float
    risk_flag: str


@dataclass(frozen=True)
class AccountProfile:
    """Display metadata of the scored account, straight from its record."""

    name: str
    followers_count: int
    following_count: int
    description: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "followers_count": self.followers_count,
            "following_count": self.following_count,
            "description": self.description,
        }


@dataclass(frozen=True)
class DetectionReport:
    account_id: str
    bot_probability: float
    predicted_label: int
    neighbor_results: tuple[NeighborResult, ...]
    model_version: str
    created_at: float
    profile: AccountProfile

    def to_dict(self) -> dict:
        return {
            "account_id": self.account_id,
            "bot_probability": self.bot_probability,
            "predicted_label": self.predicted_label,
            "neighbor_results": [
                {"node_id": n.node_id, "bot_probability": n.bot_probability,
                 "risk_flag": n.risk_flag} for n in self.neighbor_results],
            "model_version": self.model_version,
            "created_at": self.created_at,
            "profile": self.profile.to_dict(),
        }


@dataclass(frozen=True)
class FeedbackRecord:
    id: str
    account_id: str
    proposed_label: int
    submitter_id: str
    status: str
    model_version: str
    created_at: float
    reviewer_id: str | None = None
    reviewer_decision_at: float | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "account_id": self.account_id,
            "proposed_label": self.proposed_label,
            "submitter_id": self.submitter_id,
            "status": self.status,
            "model_version": self.model_version,
            "created_at": self.created_at,
            "reviewer_id": self.reviewer_id,
            "reviewer_decision_at": self.reviewer_decision_at,
        }


@dataclass(frozen=True)
class ExportSnapshot:
    """Frozen view of the labeled accounts at export time."""

    snapshot_id: str
    created_at: float
    labels: Mapping[str, int]
    users_jsonl: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "snapshot_id": self.snapshot_id,
            "created_at": self.created_at,
            "labels": dict(self.labels),
            "users_jsonl": list(self.users_jsonl),
        }


class ResultsStore:
    """In-memory detection-results database with an ordered audit log."""

    def __init__(self):
        self._lock = threading.Lock()
        self._reports: dict[tuple[str, str], DetectionReport] = {}
        self._latest: dict[str, DetectionReport] = {}
        self._records: dict[str, UserRecord] = {}
        self._feedback: dict[str, FeedbackRecord] = {}
        self._feedback_by_key: dict[tuple[str, str, str], str] = {}
        self._corrections: dict[str, tuple[int, str]] = {}
        self._audit: list[dict] = []
        self._seq = 0

    def _log(self, action: str, **details) -> None:
        self._seq += 1
        self._audit.append({"seq": self._seq, "action": action, **details})

    @property
    def audit_log(self) -> list[dict]:
        with self._lock:
            return [dict(entry) for entry in self._audit]

    def get_report(self, account_id: str, model_version: str) -> DetectionReport | None:
        with self._lock:
            return self._reports.get((account_id, model_version))

    def put_report(self, report: DetectionReport, record: UserRecord) -> None:
        with self._lock:
            self._reports[(report.account_id, report.model_version)] = report
            self._latest[report.account_id] = report
            self._records[report.account_id] = record
            self._log("report", account_id=report.account_id,
                      model_version=report.model_version)

    def get_feedback(self, record_id: str) -> FeedbackRecord | None:
        with self._lock:
            return self._feedback.get(record_id)

    def upsert_feedback(self, account_id: str, proposed_label: int,
                        submitter_id: str, model_version: str) -> FeedbackRecord:
        key = (account_id, submitter_id, model_version)
        with self._lock:
            existing = self._feedback_by_key.get(key)
            if existing is not None:
                return self._feedback[existing]
            record = FeedbackRecord(
                id=f"fb{len(self._feedback) + 1}", account_id=account_id,
                proposed_label=proposed_label, submitter_id=submitter_id,
                status=FEEDBACK_PENDING, model_version=model_version,
                created_at=time.time())
            self._feedback[record.id] = record
            self._feedback_by_key[key] = record.id
            self._log("feedback_submit", record_id=record.id,
                      account_id=account_id, submitter_id=submitter_id)
            return record

    def decide_feedback(self, record_id: str, approve: bool,
                        reviewer_id: str) -> FeedbackRecord:
        with self._lock:
            record = self._feedback.get(record_id)
            if record is None:
                raise NotFoundError(f"no feedback record {record_id!r}")
            if record.status != FEEDBACK_PENDING:
                raise StateError(
                    f"feedback {record_id!r} already {record.status}")
            decided = replace(
                record,
                status=FEEDBACK_APPROVED if approve else FEEDBACK_REJECTED,
                reviewer_id=reviewer_id, reviewer_decision_at=time.time())
            self._feedback[record_id] = decided
            if approve:
                self._corrections[record.account_id] = (
                    record.proposed_label, record_id)
            self._log("feedback_review", record_id=record_id,
                      decision=decided.status, reviewer_id=reviewer_id)
            return decided

    def snapshot(self, confidence_floor: float,
                 risk_threshold: float) -> ExportSnapshot:
        with self._lock:
            labels: dict[str, int] = {}
            for account_id in sorted(self._latest):
                report = self._latest[account_id]
                p = report.bot_probability
                if max(p, 1.0 - p) >= confidence_floor:
                    labels[account_id] = int(p >= risk_threshold)
            for account_id, (label, _) in self._corrections.items():
                labels[account_id] = label
            lines = tuple(
                user_record_json(self._records[v], label=labels[v], split="train")
                for v in sorted(labels) if v in self._records)
            self._seq += 1
            snap = ExportSnapshot(
                snapshot_id=f"exp{self._seq}", created_at=time.time(),
                labels=labels, users_jsonl=lines)
            self._audit.append({"seq": self._seq, "action": "export",
                                "snapshot_id": snap.snapshot_id,
                                "n_labels": len(labels)})
            return snap


class DetectionService:
    """Real-time detector with report caching and a feedback loop."""

    def __init__(self, provider: DataProvider, store: ResultsStore | None = None,
                 risk_threshold: float = 0.5, confidence_floor: float = 0.9):
        if not 0.0 <= risk_threshold <= 1.0 or not 0.0 <= confidence_floor <= 1.0:
            raise ValueError("risk_threshold and confidence_floor must lie in [0, 1]")
        self._provider = provider
        self._store = store or ResultsStore()
        self._risk_threshold = risk_threshold
        self._confidence_floor = confidence_floor
        self._lock = threading.Lock()
        self._bundle: ModelBundle | None = None
        self._version: str | None = None
        self._invocations = 0

    @property
    def store(self) -> ResultsStore:
        return self._store

    @property
    def model_version(self) -> str | None:
        return self._version

    @property
    def invocations(self) -> int:
        """How many times the model has actually been run."""
        return self._invocations

    def deploy(self, bundle: ModelBundle) -> str:
        """Swap in a new model; in-flight detections keep the old one."""
        version = bundle_fingerprint(bundle)
        with self._lock:
            self._bundle = bundle
            self._version = version
        self._store._log("deploy", model_version=version)
        return version

    def _current(self) -> tuple[ModelBundle, str]:
        with self._lock:
            if self._bundle is None:
                raise NotReadyError("no model deployed")
            return self._bundle, self._version

    def _score_ego(self, bundle: ModelBundle, ego: UserRecord,
                   neighbors: Sequence[UserRecord],
                   edges: Iterable[Edge]) -> dict[str, float]:
        records = {r.id: r for r in [ego, *neighbors]}
        sub = SocialGraph.build(nodes=sorted(records), edges=edges,
                                user_records=records)
        token_ids = prepare_token_ids(sub, bundle.vocab,
                                      int(bundle.config.get("max_len", 256)))
        probs = fused_probabilities(bundle, sub, token_ids)
        self._invocations += 1
        return {v: float(probs[sub.node_index(v), 1]) for v in sub.nodes}

    def detect(self, account_id: str) -> DetectionReport:
        """Score an account and its neighborhood, reusing stored reports."""
        if not account_id or not isinstance(account_id, str):
            raise ValidationError("account_id must be a nonempty string")
        bundle, version = self._current()
        cached = self._store.get_report(account_id, version)
        if cached is not None:
            return cached

        try:
            ego, neighbors, edges = self._provider.fetch_ego(account_id)
        except ProviderLookupError:
            raise NotFoundError(f"unknown account {account_id!r}") from None
        except ProviderTimeoutError as exc:
            raise UnavailableError(f"data provider timed out: {exc}") from None

        scores = self._score_ego(bundle, ego, neighbors, edges)
        p = scores[account_id]
        report = DetectionReport(
            account_id=account_id,
            bot_probability=p,
            predicted_label=int(p >= self._risk_threshold),
            profile=AccountProfile(
                name=ego.name,
                followers_count=ego.followers_count,
                following_count=ego.following_count,
                description=ego.description),
            neighbor_results=tuple(
                NeighborResult(
                    node_id=r.id, bot_probability=scores[r.id],
                    risk_flag=RISK_HIGH if scores[r.id] >= self._risk_threshold
                    else RISK_NORMAL)
                for r in sorted(neighbors, key=lambda r: r.id)),
            model_version=version,
            created_at=time.time())
        self._store.put_report(report, ego)
        return report

    def get_report(self, account_id: str) -> DetectionReport:
        """Stored report for the current deployment; never recomputes."""
        _, version = self._current()
        report = self._store.get_report(account_id, version)
        if report is None:
            raise NotFoundError(
                f"no report for {account_id!r} under the current model")
        return report

    def submit_feedback(self, account_id: str, proposed_label: int,
                        submitter_id: str) -> FeedbackRecord:
        """File a pending correction against the account's current report."""
        if proposed_label not in (LABEL_HUMAN, LABEL_BOT):
            raise ValidationError("proposed_label must be 0 (human) or 1 (bot)")
        if not submitter_id or not isinstance(submitter_id, str):
            raise ValidationError("submitter_id must be a nonempty string")
        _, version = self._current()
        if self._store.get_report(account_id, version) is None:
            raise PreconditionError(
                f"no report for {account_id!r}; run detection first")
        return self._store.upsert_feedback(account_id, proposed_label,
                                           submitter_id, version)

    def review_feedback(self, record_id: str, decision: str,
                        reviewer_id: str) -> FeedbackRecord:
        """Approve or reject a pending record; approval stores the label."""
        if decision not in ("approve", "reject"):
            raise ValidationError("decision must be 'approve' or 'reject'")
        if not reviewer_id or not isinstance(reviewer_id, str):
            raise ValidationError("reviewer_id must be a nonempty string")
        return self._store.decide_feedback(record_id, decision == "approve",
                                           reviewer_id)

    def export_training_data(self) -> ExportSnapshot:
        """Versioned labeled-account snapshot for the next offline round.

        Model predictions enter only above the confidence floor; approved
        corrections always enter and override predictions.
        """
        return self._store.snapshot(self._confidence_floor,
                                    self._risk_threshold)
