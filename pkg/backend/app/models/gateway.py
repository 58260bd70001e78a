import base64
import binascii
import io
from enum import Enum
from typing import Annotated, Literal, Tuple, Union

from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class TextPart(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["text"] = "text"
    text: str


class ImagePart(BaseModel):
    """Base-64 encoded still image"""
    model_config = ConfigDict(frozen=True)

    type: Literal["image"] = "image"
    media_type: str = "image/png"
    data_b64: str

    @field_validator("data_b64")
    @classmethod
    def _decodes_to_raster(cls, v: str) -> str:
        try:
            raw = base64.b64decode(v, validate=True)
            with Image.open(io.BytesIO(raw)) as image:
                image.verify()
        except (binascii.Error, UnidentifiedImageError, OSError) as e:
            raise ValueError(f"image payload is not a decodable raster: {e}")
        return v

    @property
    def data_url(self) -> str:
        return f"data:{self.media_type};base64,{self.data_b64}"


Part = Annotated[Union[TextPart, ImagePart], Field(discriminator="type")]


class ChatMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: Role
    parts: Tuple[Part, ...] = Field(min_length=1)


class ChatRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    model_id: str
    messages: Tuple[ChatMessage, ...] = Field(min_length=1)
    temperature: float = Field(default=0.0, ge=0.0, le=2.0)
    max_tokens: int = Field(default=4096, gt=0)
    expect_json: bool = False


class TranscriptRecord(BaseModel):
    """One line of transcript.jsonl"""
    model_config = ConfigDict(frozen=True)

    tag: str
    digest: str
    response: str
