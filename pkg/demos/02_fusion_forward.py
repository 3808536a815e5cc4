"""Cross-attention fusion of text, image, and expert features.

Run:  python3 demos/02_fusion_forward.py
"""

import numpy as np

from fuselink.fusion import (FeatureBundle, expert_concat, forward, identity_params,
                             init_params)

rng = np.random.default_rng(1)
dim, heads = 16, 4

# The expert string fed to the text encoder is the caption plus the
# identity answer, joined by marker tokens.
print(expert_concat("A man and a woman on the red carpet", "two public figures"))

# A bundle holds the pooled encoder outputs for one sample.  Sequences of
# length one are the pooled case; longer sequences also work.
bundle = FeatureBundle(
    text_seq=rng.normal(size=(3, dim)),   # three text feature rows
    image_seq=rng.normal(size=(1, dim)),  # one pooled image vector
    expert=rng.normal(size=dim),
)

params = init_params(seed=7, dim=dim, heads=heads)
out = forward(bundle, params)
print("fused vector norm:", f"{np.linalg.norm(out.fused.data):.4f}")

# The fused output is exactly the sum of its three parts.
recomposed = (out.image_attended.data + bundle.expert) + out.text_attended.data
print("fused == image + expert + text:", np.array_equal(out.fused.data, recomposed))

# Under identity projections, single-row sequences pass through unchanged.
ident = identity_params(dim, heads)
single = FeatureBundle(
    text_seq=rng.normal(size=(1, dim)),
    image_seq=rng.normal(size=(1, dim)),
    expert=rng.normal(size=dim),
)
passthrough = forward(single, ident)
expected = (single.image_seq + single.expert) + single.text_seq
print("identity params pass through:", np.array_equal(passthrough.fused.data, expected))
