"""Offline encoder sidecar for the multimodal entity-linking engine.

Produces pooled text/image/expert feature files, entity embeddings, and
populated expert strings in the engine's exact file formats, keeping every
pretrained model outside the engine's own test surface.
"""

from .encoders import (Blip2Expert, ClipImageEncoder, ClipTextEncoder, HashImageEncoder,
                       HashTextEncoder, TemplateExpert, VQA_PROMPT, make_expert,
                       make_image_encoder, make_text_encoder)
from .errors import EncoderLoadError, ExtractorError, ManifestError, RecordError
from .formats import assemble_expert_text, write_embedding_file
from .manifest import ExtractionManifest, load_manifest
from .pipeline import (ExtractionResult, describe_images, encode_texts,
                       extract_text_embeddings, run_manifest, write_expert_fields)

__version__ = "0.1.0"
