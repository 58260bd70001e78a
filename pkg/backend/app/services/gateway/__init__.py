from .backends import (LiveBackend, ModelBackend, ReplayBackend, ScriptedBackend, complete, complete_json,
                       create_backend)
from .extraction import extract_choice, extract_json
from .messages import attach_animation, attach_images, text_message, wire_body, with_choice_reminder
from .transcript import TRANSCRIPT_NAME, Transcript, request_digest

__all__ = [
    "LiveBackend",
    "ModelBackend",
    "ReplayBackend",
    "ScriptedBackend",
    "complete",
    "complete_json",
    "create_backend",
    "extract_choice",
    "extract_json",
    "attach_animation",
    "attach_images",
    "text_message",
    "wire_body",
    "with_choice_reminder",
    "TRANSCRIPT_NAME",
    "Transcript",
    "request_digest",
]
