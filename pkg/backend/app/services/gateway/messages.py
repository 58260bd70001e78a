import base64
from typing import Any, Dict, List, Sequence

from app.models.gateway import ChatMessage, ChatRequest, ImagePart, Role, TextPart
from app.models.rendering import FrameSequence

DEFAULT_MAX_FRAMES = 12
JSON_ONLY_INSTRUCTION = "Respond with JSON only."


def text_message(role: Role, text: str) -> ChatMessage:
    return ChatMessage(role=role, parts=(TextPart(text=text),))


def image_part(png: bytes) -> ImagePart:
    return ImagePart(data_b64=base64.b64encode(png).decode("ascii"))


def subsample_indices(count: int, max_frames: int) -> List[int]:
    """Uniform indices keeping the first and last frame"""
    if count <= max_frames:
        return list(range(count))
    if max_frames == 1:
        return [count - 1]
    return [(i * (count - 1)) // (max_frames - 1) for i in range(max_frames)]


def _with_parts(req: ChatRequest, parts: Sequence) -> ChatRequest:
    messages = list(req.messages)
    for position in range(len(messages) - 1, -1, -1):
        if messages[position].role == Role.USER:
            target = messages[position]
            messages[position] = target.model_copy(update={"parts": tuple(target.parts) + tuple(parts)})
            break
    else:
        messages.append(ChatMessage(role=Role.USER, parts=tuple(parts)))
    return req.model_copy(update={"messages": tuple(messages)})


def attach_images(req: ChatRequest, pngs: Sequence[bytes]) -> ChatRequest:
    return _with_parts(req, [image_part(png) for png in pngs])


def attach_animation(req: ChatRequest, frames: FrameSequence, max_frames: int = DEFAULT_MAX_FRAMES) -> ChatRequest:
    """Append frames in event order as image parts of the last user message"""
    if not len(frames):
        raise ValueError("no frames to attach")
    indices = subsample_indices(len(frames), max_frames)
    return attach_images(req, [frames.frames[i] for i in indices])


def with_json_reminder(req: ChatRequest, note: str = "") -> ChatRequest:
    """Copy of the request asking again for JSON, optionally with a correction"""
    text = f"{note}\n\n{JSON_ONLY_INSTRUCTION}" if note else JSON_ONLY_INSTRUCTION
    return _with_parts(req, [TextPart(text=text)])


def with_choice_reminder(req: ChatRequest, options: Sequence[str]) -> ChatRequest:
    """Copy of the request asking again for a single option token"""
    text = f"Answer with exactly one of: {', '.join(options)}. Reply with that token only."
    return _with_parts(req, [TextPart(text=text)])


def wire_body(req: ChatRequest) -> Dict[str, Any]:
    """Chat-completions request body"""
    messages = []
    for message in req.messages:
        content = []
        for part in message.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                content.append({"type": "image_url", "image_url": {"url": part.data_url}})
        messages.append({"role": message.role.value, "content": content})
    return {
        "model": req.model_id,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }


def request_texts(req: ChatRequest) -> str:
    """All text parts joined, for assertions and logging"""
    return "\n".join(part.text for message in req.messages for part in message.parts if isinstance(part, TextPart))
