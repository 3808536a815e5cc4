"""Multi-head cross-attention fusion of text, image, and expert features.

A single expert feature vector attends over a text feature sequence and over
an image feature sequence (one attention stack per branch, no output
projection after concatenating heads).  The two attended vectors are added to
the raw expert feature to form the fused representation that gets matched
against entity embeddings.

Pooled encoder outputs are handled as length-1 sequences, where attention
degenerates to the projected row.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import CheckpointError, ConfigurationError, DimensionError, DomainError

__all__ = [
    "CLS_MARKER",
    "SEP_MARKER",
    "ExpertInfo",
    "expert_concat",
    "FeatureBundle",
    "BranchParams",
    "AttentionParams",
    "FusedFeatures",
    "cross_attention",
    "fuse",
    "forward",
    "init_params",
    "identity_params",
]

CLS_MARKER = "[CLS]"
SEP_MARKER = "[SEP]"


def expert_concat(caption: str, identity_answer: str) -> str:
    """Join the two expert strings with the begin/separator marker tokens."""
    return f"{CLS_MARKER}{caption}{SEP_MARKER}{identity_answer}"


@dataclass(frozen=True)
class ExpertInfo:
    """Caption plus identity answer for one image, and their assembly."""

    caption: str
    identity_answer: str

    @property
    def combined(self) -> str:
        return expert_concat(self.caption, self.identity_answer)


def _as_matrix(x, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{what} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{what} is empty")
    if not np.isfinite(arr).all():
        raise DomainError(f"{what} contains non-finite entries")
    return arr


@dataclass
class FeatureBundle:
    """Per-sample encoder outputs: text/image sequences plus pooled vectors.

    ``text_seq`` and ``image_seq`` are LxD (L >= 1); ``expert`` and the
    optional ``mention`` are single D-vectors stored as 1xD.
    """

    text_seq: np.ndarray
    image_seq: np.ndarray
    expert: np.ndarray
    mention: np.ndarray | None = None

    def __post_init__(self):
        self.text_seq = _as_matrix(self.text_seq, "text feature sequence")
        self.image_seq = _as_matrix(self.image_seq, "image feature sequence")
        self.expert = _as_matrix(self.expert, "expert feature")
        if self.expert.shape[0] != 1:
            raise DimensionError(f"expert feature must be a single vector, got {self.expert.shape}")
        d = self.expert.shape[1]
        for name, seq in (("text", self.text_seq), ("image", self.image_seq)):
            if seq.shape[1] != d:
                raise DimensionError(
                    f"{name} feature width {seq.shape[1]} does not match expert width {d}")
        if self.mention is not None:
            self.mention = _as_matrix(self.mention, "mention feature")
            if self.mention.shape != (1, d):
                raise DimensionError(
                    f"mention feature must be 1x{d}, got {self.mention.shape}")

    @property
    def dim(self) -> int:
        return self.expert.shape[1]


@dataclass
class BranchParams:
    """Per-head query/key/value projections for one attention branch."""

    wq: list[Tensor]
    wk: list[Tensor]
    wv: list[Tensor]

    @property
    def heads(self) -> int:
        return len(self.wq)


@dataclass
class AttentionParams:
    """All learnable weights: one branch for text, one for image.

    Every projection matrix is D x (D/heads); heads are concatenated with no
    extra output projection.  ``mention_proj`` only exists when the optional
    mention term is enabled.
    """

    dim: int
    text: BranchParams
    image: BranchParams
    mention_proj: Tensor | None = None

    def __post_init__(self):
        h = self.text.heads
        if h < 1 or self.image.heads != h:
            raise ConfigurationError("text and image branches must have the same head count")
        if self.dim % h != 0:
            raise ConfigurationError(f"dim {self.dim} is not divisible by {h} heads")
        per_head = self.dim // h
        for branch_name, branch in (("text", self.text), ("image", self.image)):
            for mats in (branch.wq, branch.wk, branch.wv):
                if len(mats) != h:
                    raise ConfigurationError(f"{branch_name} branch head count mismatch")
                for w in mats:
                    if w.shape != (self.dim, per_head):
                        raise DimensionError(
                            f"projection in {branch_name} branch has shape {w.shape}, "
                            f"expected ({self.dim}, {per_head})")
        if self.mention_proj is not None and self.mention_proj.shape != (self.dim, self.dim):
            raise DimensionError(
                f"mention projection must be {self.dim}x{self.dim}, "
                f"got {self.mention_proj.shape}")

    @property
    def heads(self) -> int:
        return self.text.heads

    def named(self) -> dict[str, Tensor]:
        """Stable name -> tensor mapping used by the optimizer and checkpoints."""
        out: dict[str, Tensor] = {}
        for branch_name, branch in (("image", self.image), ("text", self.text)):
            for head in range(branch.heads):
                out[f"{branch_name}.h{head:02d}.wq"] = branch.wq[head]
                out[f"{branch_name}.h{head:02d}.wk"] = branch.wk[head]
                out[f"{branch_name}.h{head:02d}.wv"] = branch.wv[head]
        if self.mention_proj is not None:
            out["mention_proj"] = self.mention_proj
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class FusedFeatures:
    """Attended text/image vectors and their sum with the expert feature."""

    text_attended: Tensor
    image_attended: Tensor
    fused: Tensor


def cross_attention(query: Tensor | np.ndarray, seq: Tensor | np.ndarray,
                    branch: BranchParams) -> Tensor:
    """Attend a single query vector over the rows of a feature sequence.

    Per head: project the query and the sequence, score each row by the
    scaled dot product (divided by sqrt of the per-head width), softmax the
    scores over rows, and sum the projected value rows under those weights.
    The per-head outputs are concatenated back to the full width.
    """
    q = query if isinstance(query, Tensor) else Tensor(query)
    s = seq if isinstance(seq, Tensor) else Tensor(seq)
    if q.rows != 1:
        raise DimensionError(f"query must be a single row vector, got {q.shape}")
    d = branch.wq[0].rows
    if q.cols != d or s.cols != d:
        raise DimensionError(
            f"query width {q.cols} / sequence width {s.cols} do not match params width {d}")
    if s.rows < 1:
        raise DimensionError("sequence must have at least one row")
    per_head = branch.wq[0].cols
    inv_scale = 1.0 / math.sqrt(per_head)
    outputs = []
    for wq, wk, wv in zip(branch.wq, branch.wk, branch.wv):
        q_proj = ad.matmul(q, wq)                       # 1 x dk
        k_proj = ad.matmul(s, wk)                       # L x dk
        scores = ad.scale(ad.matmul(q_proj, ad.transpose(k_proj)), inv_scale)  # 1 x L
        weights = ad.softmax(scores)
        v_proj = ad.matmul(s, wv)                       # L x dv
        outputs.append(ad.matmul(weights, v_proj))      # 1 x dv
    return outputs[0] if len(outputs) == 1 else ad.concat_cols(outputs)


def fuse(text_attended: Tensor, image_attended: Tensor, expert: Tensor) -> Tensor:
    """Elementwise sum image + expert + text (fixed association order)."""
    if not (text_attended.shape == image_attended.shape == expert.shape):
        raise DimensionError(
            f"fuse shape mismatch: {text_attended.shape}, {image_attended.shape}, {expert.shape}")
    return ad.add(ad.add(image_attended, expert), text_attended)


def forward(bundle: FeatureBundle, params: AttentionParams) -> FusedFeatures:
    """Run the full fusion model over one sample's features."""
    if bundle.dim != params.dim:
        raise DimensionError(f"bundle width {bundle.dim} does not match model width {params.dim}")
    expert = Tensor(bundle.expert)
    text_att = cross_attention(expert, Tensor(bundle.text_seq), params.text)
    image_att = cross_attention(expert, Tensor(bundle.image_seq), params.image)
    fused = fuse(text_att, image_att, expert)
    if params.mention_proj is not None:
        if bundle.mention is None:
            raise DimensionError("model has a mention projection but the bundle has no mention feature")
        fused = ad.add(fused, ad.matmul(Tensor(bundle.mention), params.mention_proj))
    return FusedFeatures(text_attended=text_att, image_attended=image_att, fused=fused)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(seed: int, dim: int, heads: int, fuse_mention: bool = False) -> AttentionParams:
    """Xavier-uniform initialization, bit-reproducible for a given seed.

    Draw order is fixed (text branch head by head, wq/wk/wv, then image,
    then the optional mention projection) so identical seeds always produce
    identical parameters.
    """
    if heads < 1:
        raise ConfigurationError(f"head count must be >= 1, got {heads}")
    if dim % heads != 0:
        raise ConfigurationError(f"dim {dim} is not divisible by {heads} heads")
    per_head = dim // heads
    rng = np.random.default_rng(seed)

    def make_branch(branch_name: str) -> BranchParams:
        wq, wk, wv = [], [], []
        for head in range(heads):
            wq.append(Tensor(_xavier(rng, dim, per_head), name=f"{branch_name}.h{head:02d}.wq"))
            wk.append(Tensor(_xavier(rng, dim, per_head), name=f"{branch_name}.h{head:02d}.wk"))
            wv.append(Tensor(_xavier(rng, dim, per_head), name=f"{branch_name}.h{head:02d}.wv"))
        return BranchParams(wq=wq, wk=wk, wv=wv)

    text = make_branch("text")
    image = make_branch("image")
    mention_proj = None
    if fuse_mention:
        mention_proj = Tensor(_xavier(rng, dim, dim), name="mention_proj")
    return AttentionParams(dim=dim, text=text, image=image, mention_proj=mention_proj)


def identity_params(dim: int, heads: int) -> AttentionParams:
    """Projections set to column slices of the identity matrix.

    Under these weights a length-1 sequence passes through unchanged, so the
    fused output is exactly image + expert + text.  Used by the synthetic
    planted-solution data generator and its tests.
    """
    if heads < 1:
        raise ConfigurationError(f"head count must be >= 1, got {heads}")
    if dim % heads != 0:
        raise ConfigurationError(f"dim {dim} is not divisible by {heads} heads")
    per_head = dim // heads
    eye = np.eye(dim)

    def make_branch(branch_name: str) -> BranchParams:
        wq, wk, wv = [], [], []
        for head in range(heads):
            block = eye[:, head * per_head:(head + 1) * per_head].copy()
            wq.append(Tensor(block, name=f"{branch_name}.h{head:02d}.wq"))
            wk.append(Tensor(block.copy(), name=f"{branch_name}.h{head:02d}.wk"))
            wv.append(Tensor(block.copy(), name=f"{branch_name}.h{head:02d}.wv"))
        return BranchParams(wq=wq, wk=wk, wv=wv)

    return AttentionParams(dim=dim, text=make_branch("text"), image=make_branch("image"))


_NAME_RE = re.compile(r"^(text|image)\.h(\d{2})\.(wq|wk|wv)$")


def params_to_arrays(params: AttentionParams) -> dict[str, np.ndarray]:
    """Snapshot all weights as plain arrays keyed by their stable names."""
    return {name: t.data.copy() for name, t in params.named().items()}


def params_from_arrays(arrays: dict[str, np.ndarray]) -> AttentionParams:
    """Rebuild AttentionParams from named arrays, validating completeness."""
    heads_seen: set[int] = set()
    for name in arrays:
        m = _NAME_RE.match(name)
        if m:
            heads_seen.add(int(m.group(2)))
        elif name != "mention_proj":
            raise CheckpointError(f"unrecognized tensor name {name!r}")
    if not heads_seen:
        raise CheckpointError("checkpoint holds no attention projections")
    heads = max(heads_seen) + 1
    if heads_seen != set(range(heads)):
        raise CheckpointError(f"head indices are not contiguous: {sorted(heads_seen)}")

    def take(name: str) -> Tensor:
        if name not in arrays:
            raise CheckpointError(f"checkpoint is missing tensor {name!r}")
        return Tensor(arrays[name], name=name)

    dim = None
    branches = {}
    for branch_name in ("text", "image"):
        wq, wk, wv = [], [], []
        for head in range(heads):
            prefix = f"{branch_name}.h{head:02d}"
            wq.append(take(f"{prefix}.wq"))
            wk.append(take(f"{prefix}.wk"))
            wv.append(take(f"{prefix}.wv"))
            if dim is None:
                dim = wq[0].rows
        branches[branch_name] = BranchParams(wq=wq, wk=wk, wv=wv)
    mention_proj = None
    if "mention_proj" in arrays:
        mention_proj = Tensor(arrays["mention_proj"], name="mention_proj")
    return AttentionParams(dim=dim, text=branches["text"], image=branches["image"],
                           mention_proj=mention_proj)
