"""Encoder backends: deterministic offline stand-ins and pretrained adapters.

Identifiers select a backend:

    hash-text                  deterministic text vectors from a digest seed
    hash-image                 deterministic image vectors from file bytes
    template-expert            deterministic caption/identity strings
    clip-text:<model-id>       CLIP text tower (requires torch + transformers)
    clip-image:<model-id>      CLIP vision tower
    blip2:<model-id>           BLIP-2 captioning and prompted identity answers

The hash backends exist so the whole pipeline (and the engine consuming its
files) can be exercised offline; they are deterministic functions of their
input bytes, which also makes reruns byte-identical.  Pretrained adapters
import their frameworks lazily and raise EncoderLoadError naming the model
when unavailable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import EncoderLoadError

OUTPUT_DIM = 512

VQA_PROMPT = "Question: Who are the characters in the picture? Answer: "


def _digest_vector(payload: bytes, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


class HashTextEncoder:
    """Unit vector derived from the SHA-256 of the (truncated) text."""

    def __init__(self, dim: int = OUTPUT_DIM):
        self.dim = dim

    def encode_text(self, text: str) -> np.ndarray:
        return _digest_vector(text.encode("utf-8"), self.dim)


class HashImageEncoder:
    """Unit vector derived from the SHA-256 of the image file bytes."""

    def __init__(self, dim: int = OUTPUT_DIM):
        self.dim = dim

    def encode_image(self, image_path: str) -> np.ndarray:
        from PIL import Image

        with Image.open(image_path) as img:
            img.verify()  # unreadable files fail here, not mid-pipeline
        with open(image_path, "rb") as fh:
            return _digest_vector(fh.read(), self.dim)


class TemplateExpert:
    """Deterministic caption and identity answer built from image statistics."""

    def describe(self, image_path: str) -> tuple[str, str]:
        from PIL import Image

        with Image.open(image_path) as img:
            rgb = img.convert("RGB")
            width, height = rgb.size
            pixels = np.asarray(rgb, dtype=np.float64)
        brightness = pixels.mean() / 255.0
        caption = (f"a synthetic {width}x{height} image with mean brightness "
                   f"{brightness:.2f}")
        answer = f"an unidentified figure (brightness class {int(brightness * 10)})"
        return caption, answer


@dataclass
class ClipTextEncoder:
    """CLIP text tower through transformers; pooled projection output."""

    model_id: str
    dim: int = OUTPUT_DIM

    def __post_init__(self):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor

            self._model = CLIPModel.from_pretrained(self.model_id)
            self._processor = CLIPProcessor.from_pretrained(self.model_id)
            self._model.eval()
        except Exception as exc:
            raise EncoderLoadError(f"cannot load CLIP text encoder {self.model_id!r}: {exc}") from exc

    def encode_text(self, text: str) -> np.ndarray:
        import torch

        inputs = self._processor(text=[text], return_tensors="pt", padding=True,
                                 truncation=True)
        with torch.no_grad():
            features = self._model.get_text_features(**inputs)
        vec = features[0].cpu().numpy().astype(np.float32)
        if vec.shape != (self.dim,):
            raise EncoderLoadError(
                f"CLIP text encoder {self.model_id!r} produced width {vec.shape}, "
                f"expected {self.dim}")
        return vec


@dataclass
class ClipImageEncoder:
    """CLIP vision tower through transformers; pooled projection output."""

    model_id: str
    dim: int = OUTPUT_DIM

    def __post_init__(self):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor

            self._model = CLIPModel.from_pretrained(self.model_id)
            self._processor = CLIPProcessor.from_pretrained(self.model_id)
            self._model.eval()
        except Exception as exc:
            raise EncoderLoadError(
                f"cannot load CLIP image encoder {self.model_id!r}: {exc}") from exc

    def encode_image(self, image_path: str) -> np.ndarray:
        import torch
        from PIL import Image

        with Image.open(image_path) as img:
            rgb = img.convert("RGB")
            inputs = self._processor(images=rgb, return_tensors="pt")
        with torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features[0].cpu().numpy().astype(np.float32)


@dataclass
class Blip2Expert:
    """BLIP-2 captioning plus the fixed identity question."""

    model_id: str

    def __post_init__(self):
        try:
            import torch  # noqa: F401
            from transformers import AutoProcessor, Blip2ForConditionalGeneration

            self._processor = AutoProcessor.from_pretrained(self.model_id)
            self._model = Blip2ForConditionalGeneration.from_pretrained(self.model_id)
            self._model.eval()
        except Exception as exc:
            raise EncoderLoadError(f"cannot load BLIP-2 expert {self.model_id!r}: {exc}") from exc

    def _generate(self, image, prompt: str | None) -> str:
        import torch

        kwargs = {"images": image, "return_tensors": "pt"}
        if prompt is not None:
            kwargs["text"] = prompt
        inputs = self._processor(**kwargs)
        with torch.no_grad():
            output = self._model.generate(**inputs, max_new_tokens=40)
        return self._processor.batch_decode(output, skip_special_tokens=True)[0].strip()

    def describe(self, image_path: str) -> tuple[str, str]:
        from PIL import Image

        with Image.open(image_path) as img:
            rgb = img.convert("RGB")
            caption = self._generate(rgb, None)
            answer = self._generate(rgb, VQA_PROMPT)
        return caption or "an image", answer or "unknown"


def make_text_encoder(identifier: str):
    if identifier == "hash-text":
        return HashTextEncoder()
    if identifier.startswith("clip-text:"):
        return ClipTextEncoder(model_id=identifier.split(":", 1)[1])
    raise EncoderLoadError(f"unknown text encoder {identifier!r}")


def make_image_encoder(identifier: str):
    if identifier == "hash-image":
        return HashImageEncoder()
    if identifier.startswith("clip-image:"):
        return ClipImageEncoder(model_id=identifier.split(":", 1)[1])
    raise EncoderLoadError(f"unknown image encoder {identifier!r}")


def make_expert(identifier: str):
    if identifier == "template-expert":
        return TemplateExpert()
    if identifier.startswith("blip2:"):
        return Blip2Expert(model_id=identifier.split(":", 1)[1])
    raise EncoderLoadError(f"unknown expert backend {identifier!r}")
