"""HTTP surface of the detection service.

Thin FastAPI adapter: routes deserialize payloads, call the service, and
return the domain objects as JSON. Service errors map onto HTTP statuses
through their machine-readable codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .service import DetectionService, ServiceError

STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "NOT_READY": 503,
    "PRECONDITION": 412,
    "STATE": 409,
    "VALIDATION": 422,
    "UNAVAILABLE": 503,
}


class DetectRequest(BaseModel):
    account_id: str


class FeedbackRequest(BaseModel):
    account_id: str
    proposed_label: int
    submitter_id: str


class ReviewRequest(BaseModel):
    decision: str
    reviewer_id: str


def create_app(service: DetectionService) -> FastAPI:
    app = FastAPI(title="bot-detection service")

    @app.exception_handler(ServiceError)
    async def service_error(_: Request, exc: ServiceError) -> JSONResponse:
        status = STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": exc.message}})

    @app.post("/detect")
    def detect(body: DetectRequest) -> dict:
        return service.detect(body.account_id).to_dict()

    @app.get("/report/{account_id}")
    def report(account_id: str) -> dict:
        return service.get_report(account_id).to_dict()

    @app.post("/feedback")
    def feedback(body: FeedbackRequest) -> dict:
        return service.submit_feedback(body.account_id, body.proposed_label,
                                       body.submitter_id).to_dict()

    @app.post("/feedback/{record_id}/review")
    def review(record_id: str, body: ReviewRequest) -> dict:
        return service.review_feedback(record_id, body.decision,
                                       body.reviewer_id).to_dict()

    @app.get("/export/training-data")
    def export() -> dict:
        return service.export_training_data().to_dict()

    return app
