"""Reference HTTP server for the expert wire contract.

Wraps any suite exposing ``backend_for(role)`` (normally MockSuite)
behind ``POST /v1/{role}``.  Used by the integration tests to exercise
the JSON envelopes end to end without leaving the process.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .gateway import ROLES, image_from_b64, mask_payload_to_array


class ExpertRequest(BaseModel):
    request_id: str
    params: dict = {}
    image_b64: str | None = None
    mask_b64: str | None = None
    mask_shape: list[int] | None = None


def build_expert_app(suite) -> FastAPI:
    app = FastAPI(title="relayer expert server")

    @app.post("/v1/{role}")
    def invoke(role: str, req: ExpertRequest):
        if role not in ROLES:
            raise HTTPException(status_code=404, detail=f"unknown role {role!r}")
        image = image_from_b64(req.image_b64) if req.image_b64 else None
        mask = None
        if req.mask_b64:
            mask = mask_payload_to_array(
                {"mask_b64": req.mask_b64, "mask_shape": req.mask_shape})
        body = suite.backend_for(role).invoke(role, req.params, image=image, mask=mask)
        return {"request_id": req.request_id,
                "outputs": body.get("outputs", []),
                "warnings": body.get("warnings", [])}

    return app
